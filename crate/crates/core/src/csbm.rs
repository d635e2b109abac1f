//! Contextual stochastic block model: SBM topology with community-centered
//! Gaussian features, plus numerical checks of the filter's bias and
//! denoising behavior on such samples.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dense::Dense;
use crate::error::{Error, Result};
use crate::filter::{apply_filter, row_normalize, row_normalized_dense, PolynomialFilter};
use crate::graph::Graph;
use crate::labels::LabelData;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MuScheme {
    /// `c` random orthonormal directions scaled by `mu_scale`; needs `d >= c`.
    OrthogonalScaled,
    /// i.i.d. `N(0, mu_scale^2 / d)` entries.
    GaussianRandom,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsbmParams {
    pub n: usize,
    pub c: usize,
    pub p: f64,
    pub q: f64,
    pub d: usize,
    pub sigma: f64,
    pub mu_scheme: MuScheme,
    pub mu_scale: f64,
    pub seed: u64,
}

/// Node count, class count, feature width and undirected edge count of Cora.
pub const CORA_NODES: usize = 2708;
pub const CORA_CLASSES: usize = 7;
pub const CORA_FEATURES: usize = 1433;
pub const CORA_EDGES: usize = 5278;

impl CsbmParams {
    pub fn new(n: usize, c: usize, p: f64, q: f64) -> Self {
        CsbmParams {
            n,
            c,
            p,
            q,
            d: 16,
            sigma: 1.0,
            mu_scheme: MuScheme::OrthogonalScaled,
            mu_scale: 1.0,
            seed: 0,
        }
    }

    /// Cora-sized parameters with `p : q = p_share : q_share`, scaled so the
    /// expected edge count equals Cora's.
    pub fn cora_like(p_share: f64, q_share: f64, sigma: f64, seed: u64) -> Result<Self> {
        if !(p_share >= 0.0 && q_share >= 0.0 && p_share + q_share > 0.0) {
            return Err(Error::Validation("edge-probability shares must be non-negative".into()));
        }
        let (intra, inter) = pair_counts(CORA_NODES, CORA_CLASSES);
        let t = CORA_EDGES as f64 / (p_share * intra as f64 + q_share * inter as f64);
        let params = CsbmParams {
            n: CORA_NODES,
            c: CORA_CLASSES,
            p: p_share * t,
            q: q_share * t,
            d: CORA_FEATURES,
            sigma,
            mu_scheme: MuScheme::OrthogonalScaled,
            mu_scale: 1.0,
            seed,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if self.c < 2 || self.n < self.c {
            return Err(Error::Validation(format!(
                "need n >= c >= 2, got n={} c={}",
                self.n, self.c
            )));
        }
        for (name, v) in [("p", self.p), ("q", self.q)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Validation(format!("{name} must lie in [0, 1], got {v}")));
            }
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(Error::Validation(format!("sigma must be >= 0, got {}", self.sigma)));
        }
        if self.d == 0 {
            return Err(Error::Validation("feature dimension must be positive".into()));
        }
        if !self.mu_scale.is_finite() {
            return Err(Error::Validation("mu_scale must be finite".into()));
        }
        Ok(())
    }

    /// Expected number of edges.
    pub fn expected_edges(&self) -> f64 {
        let (intra, inter) = pair_counts(self.n, self.c);
        self.p * intra as f64 + self.q * inter as f64
    }
}

/// (intra-community, inter-community) unordered pair counts for balanced
/// communities of `n` nodes in `c` classes.
pub fn pair_counts(n: usize, c: usize) -> (usize, usize) {
    let base = n / c;
    let extra = n % c;
    let intra: usize = (0..c)
        .map(|k| {
            let s = base + usize::from(k < extra);
            s * s.saturating_sub(1) / 2
        })
        .sum();
    (intra, n * (n - 1) / 2 - intra)
}

#[derive(Debug, Clone)]
pub struct CsbmSample {
    pub params: CsbmParams,
    pub graph: Graph,
    pub labels: LabelData,
    /// `c x d` community centers.
    pub centers: Dense,
    /// `n x d`, row `v` is the center of `v`'s community.
    pub clean: Dense,
    /// `clean + noise`.
    pub features: Dense,
    /// Scheme actually used (orthogonal falls back to Gaussian when `d < c`).
    pub mu_scheme: MuScheme,
}

impl CsbmSample {
    pub fn community(&self, v: usize) -> usize {
        self.labels.class_of(v).expect("all nodes labeled")
    }
}

pub fn generate_csbm(params: &CsbmParams) -> Result<CsbmSample> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let (n, c, d) = (params.n, params.c, params.d);

    let mut community: Vec<usize> = (0..n).map(|v| v % c).collect();
    community.shuffle(&mut rng);

    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            let prob = if community[u] == community[v] { params.p } else { params.q };
            if rng.random::<f64>() < prob {
                edges.push((u, v));
            }
        }
    }
    let graph = Graph::from_edges(n, edges)?;

    let scheme = if params.mu_scheme == MuScheme::OrthogonalScaled && d < c {
        MuScheme::GaussianRandom
    } else {
        params.mu_scheme
    };
    let centers = match scheme {
        MuScheme::OrthogonalScaled => orthonormal_rows(c, d, &mut rng, params.mu_scale),
        MuScheme::GaussianRandom => {
            let sd = params.mu_scale / (d as f64).sqrt();
            let data = (0..c * d)
                .map(|_| sd * rng.sample::<f64, _>(StandardNormal))
                .collect();
            Dense::from_vec(c, d, data)?
        }
    };

    let mut clean = Dense::zeros(n, d);
    for (v, &k) in community.iter().enumerate() {
        clean.row_mut(v).copy_from_slice(centers.row(k));
    }
    let features = add_noise(&clean, params.sigma, &mut rng);
    let labels = LabelData::from_classes(c, community)?;
    Ok(CsbmSample {
        params: params.clone(),
        graph,
        labels,
        centers,
        clean,
        features,
        mu_scheme: scheme,
    })
}

/// `clean + sigma * Z` with i.i.d. standard normal `Z`.
pub fn add_noise<R: Rng + ?Sized>(clean: &Dense, sigma: f64, rng: &mut R) -> Dense {
    let mut out = clean.clone();
    for x in out.as_mut_slice() {
        let z: f64 = rng.sample(StandardNormal);
        *x += sigma * z;
    }
    out
}

/// Gram-Schmidt on Gaussian vectors; retries a draw that is numerically dependent.
fn orthonormal_rows<R: Rng + ?Sized>(c: usize, d: usize, rng: &mut R, scale: f64) -> Dense {
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(c);
    while basis.len() < c {
        let mut v: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        for b in &basis {
            let dot: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
            v.iter_mut().zip(b).for_each(|(x, y)| *x -= dot * y);
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-8 {
            v.iter_mut().for_each(|x| *x /= norm);
            basis.push(v);
        }
    }
    let mut m = Dense::zeros(c, d);
    for (k, b) in basis.iter().enumerate() {
        for (dst, x) in m.row_mut(k).iter_mut().zip(b) {
            *dst = scale * x;
        }
    }
    m
}

fn ensure_convex(pf: &PolynomialFilter) -> Result<()> {
    if !pf.is_nonnegative() || (pf.sum() - 1.0).abs() > 1e-12 {
        return Err(Error::Validation(format!(
            "check requires nonnegative coefficients summing to 1, got {:?}",
            pf.coefficients()
        )));
    }
    Ok(())
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

#[derive(Debug, Clone, Serialize)]
pub struct DistanceReport {
    /// Per node: (farthest other-community distance on `F`, same on filtered `F`).
    pub per_node: Vec<(f64, f64)>,
    pub violations: Vec<usize>,
    /// No node has an other-community partner.
    pub vacuous: bool,
}

impl DistanceReport {
    pub fn holds(&self) -> bool {
        self.violations.is_empty()
    }
}

pub const CONTRACTION_TOL: f64 = 1e-9;

/// Checks `D(F, v) >= D(RowNorm(f(A)) F, v)` for every node, where `D(X, v)` is
/// the largest distance from row `v` to a row of another community.
pub fn check_distance_contraction(sample: &CsbmSample, pf: &PolynomialFilter) -> Result<DistanceReport> {
    ensure_convex(pf)?;
    let n = sample.graph.node_count();
    let adj = sample.graph.normalized_adjacency();
    let f = apply_filter(pf, &adj, &sample.clean)?;
    let ones = Dense::from_vec(n, 1, vec![1.0; n])?;
    let sums: Vec<f64> = apply_filter(pf, &adj, &ones)?.as_slice().to_vec();
    let filtered = row_normalize(&f, &sums)?;

    let comm: Vec<usize> = (0..n).map(|v| sample.community(v)).collect();
    let mut per_node = Vec::with_capacity(n);
    let mut violations = Vec::new();
    let mut vacuous = true;
    for v in 0..n {
        let mut before = f64::NEG_INFINITY;
        let mut after = f64::NEG_INFINITY;
        for u in 0..n {
            if comm[u] == comm[v] {
                continue;
            }
            before = before.max(dist(sample.clean.row(v), sample.clean.row(u)));
            after = after.max(dist(filtered.row(v), filtered.row(u)));
        }
        if before == f64::NEG_INFINITY {
            per_node.push((f64::NAN, f64::NAN));
            continue;
        }
        vacuous = false;
        if after > before + CONTRACTION_TOL {
            violations.push(v);
        }
        per_node.push((before, after));
    }
    Ok(DistanceReport {
        per_node,
        violations,
        vacuous,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct VarianceReport {
    pub n: usize,
    /// `||RowNorm(f(A))||_F^2`.
    pub frobenius_sq: f64,
    pub frobenius_holds: bool,
    pub trials: usize,
    pub mean_noise_sq: f64,
    pub mean_filtered_noise_sq: f64,
    /// `mean_noise_sq * (1 + 3 / sqrt(trials))`.
    pub empirical_bound: f64,
    pub empirical_holds: bool,
}

/// Deterministic Frobenius bound plus a Monte Carlo comparison of filtered and
/// raw noise energy over `trials` fresh noise draws on the sample's graph.
pub fn check_variance_reduction(
    params: &CsbmParams,
    pf: &PolynomialFilter,
    trials: usize,
) -> Result<VarianceReport> {
    ensure_convex(pf)?;
    if trials == 0 {
        return Err(Error::Validation("trials must be positive".into()));
    }
    let sample = generate_csbm(params)?;
    let n = params.n;
    let adj = sample.graph.normalized_adjacency();
    let rn = row_normalized_dense(pf, &adj)?;
    let frobenius_sq = rn.frobenius_sq();

    let ones = Dense::from_vec(n, 1, vec![1.0; n])?;
    let sums: Vec<f64> = apply_filter(pf, &adj, &ones)?.as_slice().to_vec();
    // fresh noise, independent of the stream that generated the sample
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    rng.set_stream(1);
    let zero = Dense::zeros(n, params.d);
    let sigma = params.sigma;
    let (mut raw, mut filtered) = (0.0, 0.0);
    for _ in 0..trials {
        let noise = add_noise(&zero, sigma, &mut rng);
        let fx = row_normalize(&apply_filter(pf, &adj, &noise)?, &sums)?;
        raw += noise.frobenius_sq();
        filtered += fx.frobenius_sq();
    }
    let mean_noise_sq = raw / trials as f64;
    let mean_filtered_noise_sq = filtered / trials as f64;
    let empirical_bound = mean_noise_sq * (1.0 + 3.0 / (trials as f64).sqrt());
    Ok(VarianceReport {
        n,
        frobenius_sq,
        frobenius_holds: frobenius_sq <= n as f64,
        trials,
        mean_noise_sq,
        mean_filtered_noise_sq,
        empirical_bound,
        empirical_holds: mean_filtered_noise_sq <= empirical_bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filter::{FilterSpec, Preset};

    #[test]
    fn degenerate_probabilities_give_cliques() {
        let mut p = CsbmParams::new(10, 2, 1.0, 0.0);
        p.seed = 3;
        let s = generate_csbm(&p).unwrap();
        assert_eq!(s.graph.edge_count(), 2 * 10);
        for &(u, v) in s.graph.edges() {
            assert_eq!(s.community(u), s.community(v));
        }
    }

    #[test]
    fn balanced_communities() {
        let s = generate_csbm(&CsbmParams::new(23, 4, 0.2, 0.1)).unwrap();
        let mut sizes = [0usize; 4];
        for v in 0..23 {
            sizes[s.community(v)] += 1;
        }
        assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
    }

    #[test]
    fn zero_sigma_features_equal_centers() {
        let mut p = CsbmParams::new(12, 3, 0.5, 0.1);
        p.sigma = 0.0;
        let s = generate_csbm(&p).unwrap();
        assert_eq!(s.features, s.clean);
        for v in 0..12 {
            assert_eq!(s.clean.row(v), s.centers.row(s.community(v)));
        }
    }

    #[test]
    fn orthogonal_centers() {
        let mut p = CsbmParams::new(12, 3, 0.5, 0.1);
        p.mu_scale = 2.0;
        let s = generate_csbm(&p).unwrap();
        for a in 0..3 {
            for b in 0..3 {
                let dot: f64 = s.centers.row(a).iter().zip(s.centers.row(b)).map(|(x, y)| x * y).sum();
                let expect = if a == b { 4.0 } else { 0.0 };
                assert!((dot - expect).abs() < 1e-10);
            }
        }
        p.d = 2;
        assert_eq!(generate_csbm(&p).unwrap().mu_scheme, MuScheme::GaussianRandom);
    }

    #[test]
    fn seeded_generation_reproducible() {
        let p = CsbmParams::new(40, 3, 0.3, 0.05);
        let a = generate_csbm(&p).unwrap();
        let b = generate_csbm(&p).unwrap();
        assert_eq!(a.graph, b.graph);
        assert_eq!(a.features, b.features);
    }

    #[test]
    fn pair_counts_match_bruteforce() {
        let (intra, inter) = pair_counts(10, 3);
        // sizes 4, 3, 3
        assert_eq!(intra, 6 + 3 + 3);
        assert_eq!(intra + inter, 45);
    }

    #[test]
    fn cora_like_matches_edge_count() {
        for (ps, qs) in [(0.9, 0.1), (0.8, 0.2), (0.7, 0.3)] {
            let p = CsbmParams::cora_like(ps, qs, 0.5, 1).unwrap();
            assert!((p.expected_edges() - CORA_EDGES as f64).abs() < 1e-6);
            assert!((p.p / p.q - ps / qs).abs() < 1e-9);
        }
    }

    #[test]
    fn identity_filter_contraction_is_equality() {
        let s = generate_csbm(&CsbmParams::new(30, 3, 0.4, 0.1)).unwrap();
        let r = check_distance_contraction(&s, &PolynomialFilter::identity()).unwrap();
        assert!(r.holds());
        for &(a, b) in &r.per_node {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn contraction_refuses_bad_coefficients() {
        let s = generate_csbm(&CsbmParams::new(10, 2, 0.4, 0.1)).unwrap();
        let neg = PolynomialFilter::new(vec![1.5, -0.5]).unwrap();
        assert!(check_distance_contraction(&s, &neg).is_err());
        let unnorm = PolynomialFilter::new(vec![0.0, 2.0]).unwrap();
        assert!(check_distance_contraction(&s, &unnorm).is_err());
    }

    #[test]
    fn single_community_is_vacuous() {
        // build a one-community sample by hand: the generator insists on c >= 2
        let mut s = generate_csbm(&CsbmParams::new(6, 2, 0.5, 0.5)).unwrap();
        s.labels = LabelData::from_classes(1, vec![0; 6]).unwrap();
        let r = check_distance_contraction(&s, &PolynomialFilter::identity()).unwrap();
        assert!(r.vacuous);
        assert!(r.holds());
    }

    #[test]
    fn identity_variance_bound_is_tight() {
        let r = check_variance_reduction(&CsbmParams::new(20, 2, 0.3, 0.1), &PolynomialFilter::identity(), 5)
            .unwrap();
        assert_eq!(r.frobenius_sq, 20.0);
        assert!(r.frobenius_holds);
    }

    #[test]
    fn sgc_variance_reduction() {
        let pf = FilterSpec::new(Preset::Sgc, 2).expand().unwrap();
        let mut p = CsbmParams::new(100, 3, 0.3, 0.05);
        p.seed = 9;
        let r = check_variance_reduction(&p, &pf, 200).unwrap();
        assert!(r.frobenius_holds);
        assert!(r.empirical_holds, "{r:?}");
        assert!(r.mean_filtered_noise_sq < r.mean_noise_sq);
    }
}
