//! Edge-removal strategies and the TopoInf-weighted DropEdge sampler.

use std::str::FromStr;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::labels::LabelData;
use crate::topoinf::{Sign, TopoInfScore};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    TopoInf,
    Random,
    AdaEdge,
}

impl FromStr for Strategy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "topoinf" => Ok(Strategy::TopoInf),
            "random" => Ok(Strategy::Random),
            "adaedge" => Ok(Strategy::AdaEdge),
            _ => Err(Error::Validation(format!("unknown strategy {s:?}"))),
        }
    }
}

/// Which partition to remove from. For AdaEdge, same-label edges form the
/// negative set and cross-label edges the positive set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EdgeSet {
    Positive,
    Negative,
}

impl FromStr for EdgeSet {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "positive" => Ok(EdgeSet::Positive),
            "negative" => Ok(EdgeSet::Negative),
            _ => Err(Error::Validation(format!("unknown edge set {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RemovalPlan {
    pub strategy: Strategy,
    pub set: EdgeSet,
    pub ratio: f64,
    pub seed: u64,
}

/// `floor(ratio * m)`, tolerant of representation error (0.29 * 100 is 29).
pub fn removal_count(ratio: f64, m: usize) -> Result<usize> {
    if !(0.0..=1.0).contains(&ratio) {
        return Err(Error::Validation(format!("ratio must lie in [0, 1], got {ratio}")));
    }
    Ok(((ratio * m as f64) + 1e-9).floor().min(m as f64) as usize)
}

/// Chosen edge indices plus how the request was met.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Selection {
    /// In selection order.
    pub edges: Vec<usize>,
    pub requested: usize,
    /// Size of the pool the edges were drawn from.
    pub available: usize,
}

impl Selection {
    pub fn truncated(&self) -> bool {
        self.edges.len() < self.requested
    }

    pub fn sorted(&self) -> Vec<usize> {
        let mut e = self.edges.clone();
        e.sort_unstable();
        e
    }
}

/// Top `floor(ratio * |E|)` edges of the chosen sign by `|score|`, ties by index.
pub fn remove_by_topoinf(scores: &[TopoInfScore], edge_count: usize, plan: &RemovalPlan) -> Result<Selection> {
    let requested = removal_count(plan.ratio, edge_count)?;
    let want = match plan.set {
        EdgeSet::Positive => Sign::Positive,
        EdgeSet::Negative => Sign::Negative,
    };
    let mut pool: Vec<&TopoInfScore> = scores.iter().filter(|s| s.sign == want).collect();
    pool.sort_by(|a, b| b.value.abs().total_cmp(&a.value.abs()).then(a.edge.cmp(&b.edge)));
    Ok(Selection {
        edges: pool.iter().take(requested).map(|s| s.edge).collect(),
        requested,
        available: pool.len(),
    })
}

/// Uniform sample without replacement of `floor(ratio * |E|)` edges.
pub fn remove_random(g: &Graph, ratio: f64, seed: u64) -> Result<Selection> {
    let m = g.edge_count();
    let requested = removal_count(ratio, m)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(Selection {
        edges: index::sample(&mut rng, m, requested).into_vec(),
        requested,
        available: m,
    })
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct AdaEdgePartition {
    pub same_label: Vec<usize>,
    pub diff_label: Vec<usize>,
    /// Edges with an unlabeled endpoint.
    pub unassigned: Vec<usize>,
}

pub fn adaedge_partition(g: &Graph, labels: &LabelData) -> AdaEdgePartition {
    let mut part = AdaEdgePartition::default();
    for (e, &(u, v)) in g.edges().iter().enumerate() {
        match (labels.class_of(u), labels.class_of(v)) {
            (Some(a), Some(b)) if a == b => part.same_label.push(e),
            (Some(_), Some(_)) => part.diff_label.push(e),
            _ => part.unassigned.push(e),
        }
    }
    part
}

/// AdaEdge removal: uniform sample within the chosen label-agreement set.
pub fn remove_adaedge(g: &Graph, labels: &LabelData, plan: &RemovalPlan) -> Result<Selection> {
    let part = adaedge_partition(g, labels);
    let pool = match plan.set {
        EdgeSet::Positive => &part.diff_label,
        EdgeSet::Negative => &part.same_label,
    };
    let requested = removal_count(plan.ratio, g.edge_count())?;
    let take = requested.min(pool.len());
    let mut rng = ChaCha8Rng::seed_from_u64(plan.seed);
    Ok(Selection {
        edges: index::sample(&mut rng, pool.len(), take)
            .into_iter()
            .map(|k| pool[k])
            .collect(),
        requested,
        available: pool.len(),
    })
}

/// Edge-drop probabilities proportional to `exp(score / tau)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DropEdgeDistribution {
    pub tau: f64,
    /// Indexed by edge; excluded edges have probability 0.
    pub probabilities: Vec<f64>,
    /// Indexed by edge.
    pub scores: Vec<f64>,
}

impl DropEdgeDistribution {
    /// Edges with positive probability.
    pub fn support(&self) -> Vec<usize> {
        (0..self.probabilities.len())
            .filter(|&e| self.probabilities[e] > 0.0)
            .collect()
    }

    pub fn edge_count(&self) -> usize {
        self.probabilities.len()
    }
}

/// Softmax of `score / tau` over non-excluded edges (max-shifted).
pub fn dropedge_weights(scores: &[TopoInfScore], tau: f64) -> Result<DropEdgeDistribution> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::Validation(format!("tau must be positive, got {tau}")));
    }
    let m = scores.len();
    let mut by_edge = vec![f64::NAN; m];
    for s in scores {
        if s.edge >= m || !by_edge[s.edge].is_nan() {
            return Err(Error::Validation(
                "scores must cover each edge index exactly once".into(),
            ));
        }
        by_edge[s.edge] = s.value;
    }
    let max = by_edge
        .iter()
        .copied()
        .filter(|v| v.is_finite())
        .fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return Err(Error::EmptySupport);
    }
    let weights: Vec<f64> = by_edge
        .iter()
        .map(|&v| if v.is_finite() { ((v - max) / tau).exp() } else { 0.0 })
        .collect();
    let total: f64 = weights.iter().sum();
    Ok(DropEdgeDistribution {
        tau,
        probabilities: weights.iter().map(|w| w / total).collect(),
        scores: by_edge,
    })
}

/// Per-epoch generator: stream `epoch` of the ChaCha8 keyed by `seed`.
pub fn epoch_rng(seed: u64, epoch: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(epoch);
    rng
}

/// Weighted sample without replacement of `floor(drop_fraction * |E|)` edges,
/// capped at the support size. Equivalent in distribution to sequential draws
/// with renormalization after each pick.
pub fn sample_dropedge<R: rand::Rng + ?Sized>(
    dist: &DropEdgeDistribution,
    drop_fraction: f64,
    rng: &mut R,
) -> Result<Selection> {
    let requested = removal_count(drop_fraction, dist.edge_count())?;
    let support = dist.support();
    let take = requested.min(support.len());
    let edges = if take == support.len() {
        support.clone()
    } else {
        index::sample_weighted(rng, support.len(), |k| dist.probabilities[support[k]], take)
            .map_err(|e| Error::Validation(format!("invalid drop weights: {e}")))?
            .into_iter()
            .map(|k| support[k])
            .collect()
    };
    Ok(Selection {
        edges,
        requested,
        available: support.len(),
    })
}
