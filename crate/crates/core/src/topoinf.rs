//! Per-edge TopoInf: the change in compatibility caused by deleting one edge.
//!
//! Two routes compute the same number. [`topoinf_oracle`] rebuilds the graph
//! without the edge and recomputes everything. [`DeltaWorkspace`] caches
//! `P_k = Â^k [L | 1]` once and, per edge, propagates only the difference
//! `E_k = P'_k - P_k` through the recurrence
//!
//! ```text
//! E_0 = 0,   E_k = Â' E_{k-1} + (Â' - Â) P_{k-1}
//! ```
//!
//! `Â' - Â` is nonzero only on rows `{i, j} ∪ N(i) ∪ N(j)` and each step grows
//! the support by one hop, so only the K-hop neighborhood of the edge is
//! touched. The recurrence uses `Â'` itself, so the result is exact rather than
//! a first-order estimate.

use std::collections::{HashMap, HashSet};

use serde::Serialize;

use crate::compat::{compatibility_from_soft, compatibility_with, influence_of_row, CompatReport};
use crate::dense::Dense;
use crate::error::{Error, Result};
use crate::exec::{map_with_scratch, Execution};
use crate::filter::{
    apply_filter_with, augmented_labels, normalize_augmented, powers, PolynomialFilter,
    ROW_SUM_TOL,
};
use crate::graph::{norm_weight, Graph, NodeSet, NormalizedAdjacency};
use crate::labels::{LabelData, LabelMode};

/// Scores with `|value| < ZERO_TOL` are classified as zero.
pub const ZERO_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Sign {
    Positive,
    Negative,
    Zero,
    /// Removal would isolate a target node while `lambda > 0`.
    Excluded,
}

impl Sign {
    pub fn of(value: f64) -> Sign {
        if value == f64::NEG_INFINITY {
            Sign::Excluded
        } else if value.abs() < ZERO_TOL {
            Sign::Zero
        } else if value > 0.0 {
            Sign::Positive
        } else {
            Sign::Negative
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Sign::Positive => "positive",
            Sign::Negative => "negative",
            Sign::Zero => "zero",
            Sign::Excluded => "excluded",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TopoInfScore {
    pub edge: usize,
    pub u: usize,
    pub v: usize,
    /// `C(A') - C(A)`, or `-inf` when excluded.
    pub value: f64,
    /// Target nodes whose `I` changed.
    pub affected_nodes: usize,
    pub sign: Sign,
}

impl TopoInfScore {
    fn new(edge: usize, (u, v): (usize, usize), value: f64, affected_nodes: usize) -> Self {
        TopoInfScore {
            edge,
            u,
            v,
            value,
            affected_nodes,
            sign: Sign::of(value),
        }
    }
}

/// Everything a compatibility evaluation depends on.
#[derive(Debug, Clone, Copy)]
pub struct Problem<'a> {
    pub graph: &'a Graph,
    pub filter: &'a PolynomialFilter,
    pub labels: &'a LabelData,
    pub target: &'a NodeSet,
    pub lambda: f64,
    pub mode: LabelMode,
}

impl<'a> Problem<'a> {
    pub fn new(
        graph: &'a Graph,
        filter: &'a PolynomialFilter,
        labels: &'a LabelData,
        target: &'a NodeSet,
        lambda: f64,
    ) -> Self {
        Problem {
            graph,
            filter,
            labels,
            target,
            lambda,
            mode: LabelMode::Hard,
        }
    }

    pub fn with_mode(mut self, mode: LabelMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn on_graph<'b>(&self, graph: &'b Graph) -> Problem<'b>
    where
        'a: 'b,
    {
        Problem { graph, ..*self }
    }

    pub fn compatibility(&self, exec: Execution) -> Result<CompatReport> {
        compatibility_with(
            exec,
            self.graph,
            self.filter,
            self.labels,
            self.target,
            self.lambda,
            self.mode,
        )
    }

    fn validate(&self) -> Result<()> {
        let n = self.graph.node_count();
        if self.labels.len() != n {
            return Err(Error::DimensionMismatch {
                expected: format!("labels for {n} nodes"),
                got: self.labels.len().to_string(),
            });
        }
        if let Some(&v) = self.target.as_slice().iter().find(|&&v| v >= n) {
            return Err(Error::Validation(format!("target node {v} out of range")));
        }
        if let Some(&v) = self.target.as_slice().iter().find(|&&v| !self.labels.is_labeled(v)) {
            return Err(Error::Unlabeled { node: v });
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::Validation(format!(
                "lambda must be a finite non-negative number, got {}",
                self.lambda
            )));
        }
        Ok(())
    }

    /// Removing `{i, j}` would isolate a target node and isolation is penalized.
    fn isolates_target(&self, i: usize, j: usize) -> bool {
        self.lambda > 0.0
            && [i, j]
                .iter()
                .any(|&x| self.graph.degree(x) == 1 && self.target.contains(x))
    }
}

/// Full-recompute TopoInf of edge `e`.
pub fn topoinf_oracle(problem: &Problem<'_>, e: usize) -> Result<TopoInfScore> {
    problem.validate()?;
    let base = problem.compatibility(Execution::Sequential)?;
    oracle_against(problem, &base, e)
}

fn oracle_against(problem: &Problem<'_>, base: &CompatReport, e: usize) -> Result<TopoInfScore> {
    let (i, j) = problem.graph.edge(e)?;
    if problem.isolates_target(i, j) {
        return Ok(TopoInfScore::new(e, (i, j), f64::NEG_INFINITY, 0));
    }
    let g2 = problem.graph.remove_edge(e)?;
    let after = problem.on_graph(&g2).compatibility(Execution::Sequential)?;
    let affected = base
        .per_node_i
        .iter()
        .zip(&after.per_node_i)
        .filter(|(a, b)| a != b)
        .count();
    Ok(TopoInfScore::new(
        e,
        (i, j),
        after.finite_c - base.finite_c,
        affected,
    ))
}

/// Per-node delta rows keyed by node id, backed by an `n`-slot index.
#[derive(Debug, Clone)]
struct SparseRows {
    width: usize,
    slot: Vec<u32>,
    nodes: Vec<usize>,
    data: Vec<f64>,
}

const EMPTY: u32 = u32::MAX;

impl SparseRows {
    fn new(n: usize, width: usize) -> Self {
        SparseRows {
            width,
            slot: vec![EMPTY; n],
            nodes: Vec::new(),
            data: Vec::new(),
        }
    }

    fn clear(&mut self) {
        for &v in &self.nodes {
            self.slot[v] = EMPTY;
        }
        self.nodes.clear();
        self.data.clear();
    }

    fn len(&self) -> usize {
        self.nodes.len()
    }

    fn row_at(&self, idx: usize) -> &[f64] {
        &self.data[idx * self.width..(idx + 1) * self.width]
    }

    /// `row(v) += scale * x`.
    #[inline]
    fn axpy(&mut self, v: usize, scale: f64, x: &[f64]) {
        let s = match self.slot[v] {
            EMPTY => {
                let s = self.nodes.len();
                self.slot[v] = s as u32;
                self.nodes.push(v);
                self.data.resize(self.data.len() + self.width, 0.0);
                s
            }
            s => s as usize,
        };
        let row = &mut self.data[s * self.width..(s + 1) * self.width];
        for (r, a) in row.iter_mut().zip(x) {
            *r += scale * a;
        }
    }
}

/// Per-worker buffers for [`DeltaWorkspace::score_with`].
#[derive(Debug, Clone)]
pub struct DeltaScratch {
    prev: SparseRows,
    cur: SparseRows,
    acc: SparseRows,
    row: Vec<f64>,
    tmp: Vec<f64>,
}

impl DeltaScratch {
    pub fn new(n: usize, width: usize) -> Self {
        DeltaScratch {
            prev: SparseRows::new(n, width),
            cur: SparseRows::new(n, width),
            acc: SparseRows::new(n, width),
            row: vec![0.0; width],
            tmp: vec![0.0; width],
        }
    }
}

/// Cached filter powers and baseline compatibility for one graph.
#[derive(Debug)]
pub struct DeltaWorkspace<'a> {
    problem: Problem<'a>,
    adj: NormalizedAdjacency,
    /// `P_0..P_{K-1}` of the augmented label matrix `[L | 1]`.
    powers: Vec<Dense>,
    /// `f(A) [L | 1]`.
    filtered: Dense,
    in_target: Vec<bool>,
    /// Baseline `I(v)` for target nodes, NaN elsewhere.
    base_i: Vec<f64>,
    baseline: CompatReport,
}

impl<'a> DeltaWorkspace<'a> {
    pub fn new(problem: Problem<'a>, exec: Execution) -> Result<Self> {
        problem.validate()?;
        let g = problem.graph;
        let adj = g.normalized_adjacency();
        let m = augmented_labels(problem.labels, problem.mode)?;
        let order = problem.filter.order();
        let powers = powers(exec, &adj, &m, order.saturating_sub(1));
        let filtered = apply_filter_with(exec, problem.filter, &adj, &m)?;
        let lbar = normalize_augmented(&filtered);
        let baseline = compatibility_from_soft(
            g,
            &lbar,
            problem.labels,
            problem.target,
            problem.lambda,
            problem.mode,
        )?;
        let n = g.node_count();
        let in_target = problem.target.mask(n);
        let mut base_i = vec![f64::NAN; n];
        for (&v, &i) in problem.target.as_slice().iter().zip(&baseline.per_node_i) {
            base_i[v] = i;
        }
        Ok(DeltaWorkspace {
            problem,
            adj,
            powers,
            filtered,
            in_target,
            base_i,
            baseline,
        })
    }

    pub fn problem(&self) -> &Problem<'a> {
        &self.problem
    }

    pub fn baseline(&self) -> &CompatReport {
        &self.baseline
    }

    pub fn adjacency(&self) -> &NormalizedAdjacency {
        &self.adj
    }

    pub fn scratch(&self) -> DeltaScratch {
        DeltaScratch::new(self.problem.graph.node_count(), self.filtered.cols())
    }

    pub fn score(&self, e: usize) -> Result<TopoInfScore> {
        self.score_with(&mut self.scratch(), e)
    }

    /// Incremental TopoInf of edge `e`.
    pub fn score_with(&self, scratch: &mut DeltaScratch, e: usize) -> Result<TopoInfScore> {
        let p = &self.problem;
        let g = p.graph;
        let (i, j) = g.edge(e)?;
        if p.isolates_target(i, j) {
            return Ok(TopoInfScore::new(e, (i, j), f64::NEG_INFINITY, 0));
        }
        let gamma = p.filter.coefficients();
        let order = p.filter.order();
        let width = self.filtered.cols();
        let c = width - 1;

        let dt = |v: usize| g.degree(v) + 1;
        let dt_new = |v: usize| dt(v) - usize::from(v == i || v == j);

        let DeltaScratch {
            prev,
            cur,
            acc,
            row,
            tmp,
        } = scratch;
        prev.clear();
        cur.clear();
        acc.clear();

        for k in 1..=order {
            cur.clear();
            // Â' E_{k-1}
            for idx in 0..prev.len() {
                let u = prev.nodes[idx];
                let du = dt_new(u);
                tmp.copy_from_slice(prev.row_at(idx));
                let u_touched = u == i || u == j;
                for (w, a) in self.adj.row(u) {
                    let weight = if w == u {
                        if u_touched { 1.0 / du as f64 } else { a }
                    } else if u_touched || w == i || w == j {
                        if (u == i && w == j) || (u == j && w == i) {
                            continue;
                        }
                        norm_weight(dt_new(w), du)
                    } else {
                        a
                    };
                    cur.axpy(w, weight, tmp);
                }
            }
            // (Â' - Â) P_{k-1}
            let pk = &self.powers[k - 1];
            let a_ij = norm_weight(dt(i), dt(j));
            cur.axpy(i, -a_ij, pk.row(j));
            cur.axpy(j, -a_ij, pk.row(i));
            for (x, y) in [(i, j), (j, i)] {
                let dx = dt(x);
                let dx_new = dt_new(x);
                cur.axpy(x, 1.0 / dx_new as f64 - 1.0 / dx as f64, pk.row(x));
                for &u in g.neighbors(x) {
                    if u == y {
                        continue;
                    }
                    let du = dt(u);
                    let delta = norm_weight(dx_new, du) - norm_weight(dx, du);
                    cur.axpy(x, delta, pk.row(u));
                    cur.axpy(u, delta, pk.row(x));
                }
            }
            if gamma[k] != 0.0 {
                for idx in 0..cur.len() {
                    tmp.copy_from_slice(cur.row_at(idx));
                    acc.axpy(cur.nodes[idx], gamma[k], tmp);
                }
            }
            std::mem::swap(prev, cur);
        }

        let mut delta_i = 0.0;
        let mut affected = 0;
        let mut bad = Vec::new();
        for idx in 0..acc.len() {
            let v = acc.nodes[idx];
            if !self.in_target[v] {
                continue;
            }
            for ((r, base), d) in row.iter_mut().zip(self.filtered.row(v)).zip(acc.row_at(idx)) {
                *r = base + d;
            }
            let s = row[c];
            if s <= ROW_SUM_TOL {
                bad.push(v);
                continue;
            }
            for r in row[..c].iter_mut() {
                *r /= s;
            }
            let class = p.labels.class_of(v).expect("validated target");
            let new_i = influence_of_row(&row[..c], p.labels, v, class, p.mode);
            let old_i = self.base_i[v];
            if new_i != old_i {
                affected += 1;
                delta_i += new_i - old_i;
            }
        }
        if !bad.is_empty() {
            bad.sort_unstable();
            return Err(Error::NonNormalizable { nodes: bad });
        }

        let mut delta_r = 0.0;
        if p.lambda > 0.0 {
            for x in [i, j] {
                if self.in_target[x] {
                    let d = g.degree(x) as f64;
                    delta_r += 1.0 / (d - 1.0) - 1.0 / d;
                }
            }
        }
        Ok(TopoInfScore::new(
            e,
            (i, j),
            delta_i - p.lambda * delta_r,
            affected,
        ))
    }

    /// Scores the given edges, in the given order.
    pub fn score_edges(&self, exec: Execution, edges: &[usize]) -> Result<Vec<TopoInfScore>> {
        map_with_scratch(
            exec,
            edges.len(),
            || self.scratch(),
            |s, k| self.score_with(s, edges[k]),
        )
        .into_iter()
        .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ScoreMode {
    /// Full recompute per edge.
    Exact,
    #[default]
    Incremental,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct SignCounts {
    pub positive: usize,
    pub negative: usize,
    pub zero: usize,
    pub excluded: usize,
}

impl SignCounts {
    pub fn total(&self) -> usize {
        self.positive + self.negative + self.zero + self.excluded
    }
}

#[derive(Debug, Clone)]
pub struct ScoreTable {
    /// Descending by value, ties by ascending edge index; excluded last.
    pub ranked: Vec<TopoInfScore>,
    pub baseline: CompatReport,
    pub counts: SignCounts,
}

impl ScoreTable {
    fn from_scores(mut scores: Vec<TopoInfScore>, baseline: CompatReport) -> Self {
        let mut counts = SignCounts::default();
        for s in &scores {
            match s.sign {
                Sign::Positive => counts.positive += 1,
                Sign::Negative => counts.negative += 1,
                Sign::Zero => counts.zero += 1,
                Sign::Excluded => counts.excluded += 1,
            }
        }
        rank(&mut scores);
        ScoreTable {
            ranked: scores,
            baseline,
            counts,
        }
    }

    pub fn partition(&self, sign: Sign) -> impl Iterator<Item = &TopoInfScore> {
        self.ranked.iter().filter(move |s| s.sign == sign)
    }

    /// Scores in edge-index order.
    pub fn by_edge(&self) -> Vec<TopoInfScore> {
        let mut v = self.ranked.clone();
        v.sort_by_key(|s| s.edge);
        v
    }
}

/// Descending by value, ties by ascending edge index.
pub fn rank(scores: &mut [TopoInfScore]) {
    scores.sort_by(|a, b| b.value.total_cmp(&a.value).then(a.edge.cmp(&b.edge)));
}

/// TopoInf of every edge of the original graph (no updates between edges).
pub fn score_all_edges(problem: &Problem<'_>, mode: ScoreMode, exec: Execution) -> Result<ScoreTable> {
    problem.validate()?;
    let m = problem.graph.edge_count();
    match mode {
        ScoreMode::Incremental => {
            let ws = DeltaWorkspace::new(*problem, exec)?;
            let all: Vec<usize> = (0..m).collect();
            let scores = ws.score_edges(exec, &all)?;
            Ok(ScoreTable::from_scores(scores, ws.baseline.clone()))
        }
        ScoreMode::Exact => {
            let base = problem.compatibility(exec)?;
            let scores = map_with_scratch(exec, m, || (), |_, e| oracle_against(problem, &base, e))
                .into_iter()
                .collect::<Result<Vec<_>>>()?;
            Ok(ScoreTable::from_scores(scores, base))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GreedyStep {
    pub u: usize,
    pub v: usize,
    /// Score the edge was selected with (fresh when `rescore_every == 1`).
    pub score: f64,
    /// Compatibility after the removal.
    pub c_after: f64,
    /// Finite part of the compatibility after the removal.
    pub finite_c_after: f64,
}

#[derive(Debug, Clone)]
pub struct GreedyOutcome {
    pub graph: Graph,
    pub initial: CompatReport,
    pub trace: Vec<GreedyStep>,
}

/// Repeatedly removes the highest positive-TopoInf edge.
///
/// Scores of edges near each removal (endpoints within `2K + 1` hops) are
/// marked stale and refreshed every `rescore_every` removals; scores farther
/// away cannot change. A stale candidate is rescored on the current graph
/// before it is removed, so every removal has a fresh positive score. Stops
/// early once no positive edge remains.
pub fn greedy_refine(
    problem: &Problem<'_>,
    max_removals: usize,
    rescore_every: usize,
    exec: Execution,
) -> Result<GreedyOutcome> {
    let table = score_all_edges(problem, ScoreMode::Incremental, exec)?;
    greedy_refine_from(problem, &table, max_removals, rescore_every, exec)
}

/// [`greedy_refine`] starting from an already computed score table.
pub fn greedy_refine_from(
    problem: &Problem<'_>,
    table: &ScoreTable,
    max_removals: usize,
    rescore_every: usize,
    exec: Execution,
) -> Result<GreedyOutcome> {
    problem.validate()?;
    let rescore_every = rescore_every.max(1);
    let reach = 2 * problem.filter.order() + 1;
    let mut graph = problem.graph.clone();
    let initial = table.baseline.clone();

    let mut scores: HashMap<(usize, usize), f64> =
        table.ranked.iter().map(|s| ((s.u, s.v), s.value)).collect();
    if scores.len() != graph.edge_count() {
        return Err(Error::Validation("score table does not match the graph".into()));
    }
    let mut stale: HashSet<(usize, usize)> = HashSet::new();
    let mut trace = Vec::new();
    let mut pending = 0;

    while trace.len() < max_removals {
        let mut current: Option<DeltaWorkspace<'_>> = None;
        let picked = loop {
            let best = graph
                .edges()
                .iter()
                .enumerate()
                .filter_map(|(idx, e)| {
                    let s = scores[e];
                    (Sign::of(s) == Sign::Positive).then_some((idx, *e, s))
                })
                .fold(None::<(usize, (usize, usize), f64)>, |acc, cand| match acc {
                    Some(a) if a.2 >= cand.2 => Some(a),
                    _ => Some(cand),
                });
            let Some((idx, e, score)) = best else {
                break None;
            };
            if !stale.remove(&e) {
                break Some((idx, e, score));
            }
            if current.is_none() {
                current = Some(DeltaWorkspace::new(problem.on_graph(&graph), exec)?);
            }
            let fresh = current.as_ref().expect("just built").score(idx)?;
            scores.insert(e, fresh.value);
        };
        drop(current);
        let Some((idx, (u, v), score)) = picked else {
            break;
        };
        let seeds = NodeSet::new(vec![u, v], graph.node_count())?;
        let near = graph.khop_set(&seeds, reach);
        let next = graph.remove_edge(idx)?;
        scores.remove(&(u, v));
        stale.extend(
            next.edges()
                .iter()
                .filter(|(a, b)| near.contains(*a) || near.contains(*b))
                .copied(),
        );
        graph = next;
        let report = problem.on_graph(&graph).compatibility(exec)?;
        trace.push(GreedyStep {
            u,
            v,
            score,
            c_after: report.c,
            finite_c_after: report.finite_c,
        });
        pending += 1;
        if pending == rescore_every {
            pending = 0;
            let mut due: Vec<(usize, usize)> = stale.drain().collect();
            due.sort_unstable();
            let ws = DeltaWorkspace::new(problem.on_graph(&graph), exec)?;
            let idxs: Vec<usize> = due
                .iter()
                .filter_map(|&(a, b)| graph.edge_index(a, b))
                .collect();
            for s in ws.score_edges(exec, &idxs)? {
                scores.insert((s.u, s.v), s.value);
            }
        }
    }
    Ok(GreedyOutcome {
        graph,
        initial,
        trace,
    })
}
