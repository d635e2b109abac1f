//! Polynomial graph filters `f(A) = sum_k gamma_k Â^k` and their row-normalized
//! action on label matrices.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dense::Dense;
use crate::error::{Error, Result};
use crate::exec::{for_each_row, Execution};
use crate::graph::NormalizedAdjacency;
use crate::labels::{LabelData, LabelMode};

/// Row sums at or below this are treated as non-normalizable.
pub const ROW_SUM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    Sgc,
    S2gc,
    Appnp,
    Gcn,
    Gcnii,
    Gprgnn,
    Custom,
}

impl Preset {
    pub const ALL: [Preset; 7] = [
        Preset::Sgc,
        Preset::S2gc,
        Preset::Appnp,
        Preset::Gcn,
        Preset::Gcnii,
        Preset::Gprgnn,
        Preset::Custom,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Sgc => "sgc",
            Preset::S2gc => "s2gc",
            Preset::Appnp => "appnp",
            Preset::Gcn => "gcn",
            Preset::Gcnii => "gcnii",
            Preset::Gprgnn => "gprgnn",
            Preset::Custom => "custom",
        }
    }

    pub fn needs_gamma(self) -> bool {
        matches!(self, Preset::Gprgnn | Preset::Custom)
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let lower = s.to_ascii_lowercase();
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == lower)
            .ok_or_else(|| Error::Validation(format!("unknown model preset {s:?}")))
    }
}

/// A model preset plus the hyperparameters needed to expand it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterSpec {
    pub preset: Preset,
    pub order: usize,
    pub alpha: f64,
    pub gamma: Option<Vec<f64>>,
}

impl FilterSpec {
    pub fn new(preset: Preset, order: usize) -> Self {
        FilterSpec {
            preset,
            order,
            alpha: 0.1,
            gamma: None,
        }
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    /// Learned or hand-picked coefficients; sets the order to `gamma.len() - 1`.
    pub fn custom(preset: Preset, gamma: Vec<f64>) -> Self {
        FilterSpec {
            preset,
            order: gamma.len().saturating_sub(1),
            alpha: 0.0,
            gamma: Some(gamma),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.order < 1 {
            return Err(Error::Validation("filter order K must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::Validation(format!(
                "alpha must lie in [0, 1], got {}",
                self.alpha
            )));
        }
        match (&self.gamma, self.preset.needs_gamma()) {
            (None, true) => Err(Error::Validation(format!(
                "preset {} requires explicit gamma coefficients",
                self.preset
            ))),
            (Some(g), true) if g.len() != self.order + 1 => Err(Error::Validation(format!(
                "gamma has {} coefficients but K={} needs {}",
                g.len(),
                self.order,
                self.order + 1
            ))),
            _ => Ok(()),
        }
    }

    /// Expands the preset into polynomial coefficients `gamma_0..gamma_K`.
    pub fn expand(&self) -> Result<PolynomialFilter> {
        self.validate()?;
        let k = self.order;
        let a = self.alpha;
        let gamma = match self.preset {
            Preset::Sgc | Preset::Gcn => {
                let mut g = vec![0.0; k + 1];
                g[k] = 1.0;
                g
            }
            Preset::S2gc => {
                let mut g = vec![(1.0 - a) / k as f64; k + 1];
                g[0] = a;
                g
            }
            Preset::Appnp | Preset::Gcnii => {
                let mut g: Vec<f64> = (0..k).map(|i| a * (1.0 - a).powi(i as i32)).collect();
                g.push((1.0 - a).powi(k as i32));
                g
            }
            Preset::Gprgnn | Preset::Custom => self.gamma.clone().expect("validated"),
        };
        PolynomialFilter::new(gamma)
    }
}

/// Coefficients `gamma_0..gamma_K` of `sum_k gamma_k Â^k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolynomialFilter {
    gamma: Vec<f64>,
}

impl PolynomialFilter {
    pub fn new(gamma: Vec<f64>) -> Result<Self> {
        if gamma.iter().any(|g| !g.is_finite()) {
            return Err(Error::Validation("filter coefficients must be finite".into()));
        }
        if gamma.iter().all(|&g| g == 0.0) {
            return Err(Error::Validation(
                "filter needs at least one nonzero coefficient".into(),
            ));
        }
        Ok(PolynomialFilter { gamma })
    }

    pub fn identity() -> Self {
        PolynomialFilter { gamma: vec![1.0] }
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.gamma
    }

    /// Highest power with a nonzero coefficient.
    pub fn order(&self) -> usize {
        self.gamma.iter().rposition(|&g| g != 0.0).unwrap_or(0)
    }

    pub fn is_nonnegative(&self) -> bool {
        self.gamma.iter().all(|&g| g >= 0.0)
    }

    pub fn sum(&self) -> f64 {
        self.gamma.iter().sum()
    }
}

/// `out = Â * m`, one output row per task, columns in stored order.
pub fn spmm(exec: Execution, adj: &NormalizedAdjacency, m: &Dense, out: &mut Dense) {
    let w = m.cols();
    for_each_row(exec, out.as_mut_slice(), w, |v, row| {
        row.fill(0.0);
        for (u, a) in adj.row(v) {
            for (o, x) in row.iter_mut().zip(m.row(u)) {
                *o += a * x;
            }
        }
    });
}

/// `[M, ÂM, Â²M, .., Â^K M]`.
pub fn powers(exec: Execution, adj: &NormalizedAdjacency, m: &Dense, order: usize) -> Vec<Dense> {
    let mut out = Vec::with_capacity(order + 1);
    out.push(m.clone());
    for k in 1..=order {
        let mut next = Dense::zeros(m.rows(), m.cols());
        spmm(exec, adj, &out[k - 1], &mut next);
        out.push(next);
    }
    out
}

/// `sum_k gamma_k Â^k M` accumulated in increasing `k`.
pub fn apply_filter(pf: &PolynomialFilter, adj: &NormalizedAdjacency, m: &Dense) -> Result<Dense> {
    apply_filter_with(Execution::default(), pf, adj, m)
}

pub fn apply_filter_with(
    exec: Execution,
    pf: &PolynomialFilter,
    adj: &NormalizedAdjacency,
    m: &Dense,
) -> Result<Dense> {
    if m.rows() != adj.node_count() {
        return Err(Error::DimensionMismatch {
            expected: format!("{} rows", adj.node_count()),
            got: format!("{} rows", m.rows()),
        });
    }
    let gamma = pf.coefficients();
    let mut acc = m.clone();
    if gamma[0] != 1.0 {
        acc.as_mut_slice().iter_mut().for_each(|x| *x *= gamma[0]);
    }
    let mut prev = m.clone();
    let mut cur = Dense::zeros(m.rows(), m.cols());
    for &g in &gamma[1..=pf.order()] {
        spmm(exec, adj, &prev, &mut cur);
        if g != 0.0 {
            for (a, x) in acc.as_mut_slice().iter_mut().zip(cur.as_slice()) {
                *a += g * x;
            }
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    Ok(acc)
}

/// Row-normalized filtered labels `RowNorm(f(A)) L`.
#[derive(Debug, Clone)]
pub struct SoftLabelMatrix {
    /// `n x c`; rows of non-normalizable nodes are NaN.
    pub rows: Dense,
    /// Row sums of `f(A)`.
    pub row_sums: Vec<f64>,
    /// Nodes whose row sum is `<= ROW_SUM_TOL`.
    pub non_normalizable: Vec<usize>,
}

/// The filter input: label rows with a trailing all-ones column, so one pass
/// yields both `f(A) L` and the row sums `f(A) 1`.
pub fn augmented_labels(labels: &LabelData, mode: LabelMode) -> Result<Dense> {
    let l = labels.matrix(mode)?;
    let c = l.cols();
    let mut m = Dense::zeros(l.rows(), c + 1);
    for v in 0..l.rows() {
        let row = m.row_mut(v);
        row[..c].copy_from_slice(l.row(v));
        row[c] = 1.0;
    }
    Ok(m)
}

/// Splits a filtered augmented matrix into normalized rows.
pub fn normalize_augmented(filtered: &Dense) -> SoftLabelMatrix {
    let c = filtered.cols() - 1;
    let n = filtered.rows();
    let mut rows = Dense::zeros(n, c);
    let mut row_sums = Vec::with_capacity(n);
    let mut bad = Vec::new();
    for v in 0..n {
        let src = filtered.row(v);
        let s = src[c];
        row_sums.push(s);
        let dst = rows.row_mut(v);
        if s <= ROW_SUM_TOL {
            bad.push(v);
            dst.fill(f64::NAN);
        } else {
            for (d, x) in dst.iter_mut().zip(&src[..c]) {
                *d = x / s;
            }
        }
    }
    SoftLabelMatrix {
        rows,
        row_sums,
        non_normalizable: bad,
    }
}

pub fn soft_labels(
    pf: &PolynomialFilter,
    adj: &NormalizedAdjacency,
    labels: &LabelData,
    mode: LabelMode,
) -> Result<SoftLabelMatrix> {
    soft_labels_with(Execution::default(), pf, adj, labels, mode)
}

pub fn soft_labels_with(
    exec: Execution,
    pf: &PolynomialFilter,
    adj: &NormalizedAdjacency,
    labels: &LabelData,
    mode: LabelMode,
) -> Result<SoftLabelMatrix> {
    let m = augmented_labels(labels, mode)?;
    let filtered = apply_filter_with(exec, pf, adj, &m)?;
    Ok(normalize_augmented(&filtered))
}

/// Row-normalizes `f(A) m` given precomputed row sums of `f(A)`.
pub fn row_normalize(filtered: &Dense, row_sums: &[f64]) -> Result<Dense> {
    let bad: Vec<usize> = (0..row_sums.len())
        .filter(|&v| row_sums[v] <= ROW_SUM_TOL)
        .collect();
    if !bad.is_empty() {
        return Err(Error::NonNormalizable { nodes: bad });
    }
    let mut out = filtered.clone();
    for (v, &s) in row_sums.iter().enumerate() {
        out.row_mut(v).iter_mut().for_each(|x| *x /= s);
    }
    Ok(out)
}

/// Dense `RowNorm(f(A))`, `n x n`. Meant for small graphs.
pub fn row_normalized_dense(pf: &PolynomialFilter, adj: &NormalizedAdjacency) -> Result<Dense> {
    let n = adj.node_count();
    let f = apply_filter(pf, adj, &Dense::identity(n))?;
    let sums: Vec<f64> = (0..n).map(|v| f.row(v).iter().sum()).collect();
    row_normalize(&f, &sums)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Graph;

    fn triangle() -> Graph {
        Graph::from_edges(3, [(0, 1), (1, 2), (0, 2)]).unwrap()
    }

    #[test]
    fn sgc_expansion() {
        let pf = FilterSpec::new(Preset::Sgc, 2).expand().unwrap();
        assert_eq!(pf.coefficients(), &[0.0, 0.0, 1.0]);
    }

    #[test]
    fn appnp_expansion() {
        let pf = FilterSpec::new(Preset::Appnp, 2).with_alpha(0.1).expand().unwrap();
        let expected = [0.1, 0.09, 0.81];
        for (g, e) in pf.coefficients().iter().zip(expected) {
            assert!((g - e).abs() < 1e-15);
        }
    }

    #[test]
    fn s2gc_expansion() {
        let pf = FilterSpec::new(Preset::S2gc, 4).with_alpha(0.2).expand().unwrap();
        assert_eq!(pf.coefficients()[0], 0.2);
        assert!(pf.coefficients()[1..].iter().all(|&g| (g - 0.2).abs() < 1e-15));
    }

    #[test]
    fn custom_requires_gamma() {
        assert!(FilterSpec::new(Preset::Custom, 2).expand().is_err());
        assert!(FilterSpec::new(Preset::Gprgnn, 2).expand().is_err());
        let mut bad = FilterSpec::custom(Preset::Custom, vec![1.0, 0.0]);
        bad.order = 3;
        assert!(bad.expand().is_err());
        let id = FilterSpec::custom(Preset::Custom, vec![1.0, 0.0, 0.0]).expand().unwrap();
        assert_eq!(id.order(), 0);
        assert!(FilterSpec::new(Preset::Sgc, 0).expand().is_err());
        assert!(PolynomialFilter::new(vec![0.0, 0.0]).is_err());
    }

    #[test]
    fn preset_names_parse() {
        for p in Preset::ALL {
            assert_eq!(p.name().parse::<Preset>().unwrap(), p);
        }
        assert_eq!("APPNP".parse::<Preset>().unwrap(), Preset::Appnp);
        assert!("gat".parse::<Preset>().is_err());
    }

    #[test]
    fn identity_filter_is_exact() {
        let adj = triangle().normalized_adjacency();
        let m = Dense::from_rows(&[vec![0.3, -1.7], vec![1e-300, 2.5], vec![7.0, 0.1]]).unwrap();
        let pf = FilterSpec::custom(Preset::Custom, vec![1.0, 0.0, 0.0]).expand().unwrap();
        assert_eq!(apply_filter(&pf, &adj, &m).unwrap(), m);
    }

    #[test]
    fn two_node_one_hop() {
        let adj = Graph::from_edges(2, [(0, 1)]).unwrap().normalized_adjacency();
        let pf = PolynomialFilter::new(vec![0.0, 1.0]).unwrap();
        let out = apply_filter(&pf, &adj, &Dense::identity(2)).unwrap();
        assert_eq!(out.as_slice(), &[0.5; 4]);
    }

    #[test]
    fn single_node_is_identity() {
        let adj = Graph::from_edges(1, []).unwrap().normalized_adjacency();
        let pf = PolynomialFilter::new(vec![0.5, 0.5]).unwrap();
        let out = apply_filter(&pf, &adj, &Dense::from_rows(&[vec![3.0]]).unwrap()).unwrap();
        assert_eq!(out.as_slice(), &[3.0]);
    }

    #[test]
    fn dimension_mismatch() {
        let adj = triangle().normalized_adjacency();
        let pf = PolynomialFilter::identity();
        assert!(matches!(
            apply_filter(&pf, &adj, &Dense::zeros(2, 1)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn triangle_soft_labels() {
        let adj = triangle().normalized_adjacency();
        let labels = LabelData::from_classes(2, vec![0, 0, 1]).unwrap();
        let pf = PolynomialFilter::new(vec![0.0, 1.0]).unwrap();
        let s = soft_labels(&pf, &adj, &labels, LabelMode::Hard).unwrap();
        for v in 0..3 {
            assert!((s.rows[(v, 0)] - 2.0 / 3.0).abs() < 1e-12);
            assert!((s.rows[(v, 1)] - 1.0 / 3.0).abs() < 1e-12);
        }
        assert!(s.non_normalizable.is_empty());
    }

    #[test]
    fn same_class_pair_stays_one_hot() {
        let adj = Graph::from_edges(2, [(0, 1)]).unwrap().normalized_adjacency();
        let labels = LabelData::from_classes(2, vec![1, 1]).unwrap();
        let pf = PolynomialFilter::new(vec![0.0, 1.0]).unwrap();
        let s = soft_labels(&pf, &adj, &labels, LabelMode::Hard).unwrap();
        assert_eq!(s.rows.row(0), &[0.0, 1.0]);
        assert_eq!(s.rows.row(1), &[0.0, 1.0]);
    }

    #[test]
    fn identity_soft_labels_equal_labels() {
        let adj = triangle().normalized_adjacency();
        let labels = LabelData::from_classes(3, vec![2, 0, 1]).unwrap();
        let s = soft_labels(&PolynomialFilter::identity(), &adj, &labels, LabelMode::Hard).unwrap();
        assert_eq!(s.rows, labels.one_hot());
    }

    #[test]
    fn negative_gamma_flags_rows() {
        let adj = Graph::from_edges(2, [(0, 1)]).unwrap().normalized_adjacency();
        let labels = LabelData::from_classes(2, vec![0, 1]).unwrap();
        // Â·1 = 1 for both nodes here, so 1 - 1 = 0.
        let pf = PolynomialFilter::new(vec![1.0, -1.0]).unwrap();
        let s = soft_labels(&pf, &adj, &labels, LabelMode::Hard).unwrap();
        assert_eq!(s.non_normalizable, vec![0, 1]);
        assert!(s.rows[(0, 0)].is_nan());
    }

    #[test]
    fn two_node_frobenius() {
        let adj = Graph::from_edges(2, [(0, 1)]).unwrap().normalized_adjacency();
        let r = row_normalized_dense(&PolynomialFilter::new(vec![0.0, 1.0]).unwrap(), &adj).unwrap();
        assert_eq!(r.frobenius_sq(), 1.0);
    }
}
