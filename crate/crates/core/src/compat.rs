//! Topology/task compatibility `C = sum_{v in V_t} I(v) - lambda * R(v)`.
//!
//! `I(v)` is the filtered, row-normalized label mass on the node's own class
//! (or the inner product with its soft row in [`LabelMode::Soft`]); `R(v)` is
//! the reciprocal degree, with `+inf` for isolated nodes.

use serde::ser::{SerializeStruct, Serializer};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::filter::{soft_labels_with, PolynomialFilter, SoftLabelMatrix};
use crate::graph::{Graph, NodeSet};
use crate::labels::{LabelData, LabelMode};

/// Similarity between a node's label and its filtered row.
pub fn node_influence(lbar: &SoftLabelMatrix, labels: &LabelData, v: usize) -> Result<f64> {
    node_influence_mode(lbar, labels, v, LabelMode::Hard)
}

pub fn node_influence_mode(
    lbar: &SoftLabelMatrix,
    labels: &LabelData,
    v: usize,
    mode: LabelMode,
) -> Result<f64> {
    let class = labels.class_of(v).ok_or(Error::Unlabeled { node: v })?;
    if lbar.non_normalizable.binary_search(&v).is_ok() {
        return Err(Error::NonNormalizable { nodes: vec![v] });
    }
    Ok(influence_of_row(lbar.rows.row(v), labels, v, class, mode))
}

/// `I(v)` from a normalized filtered row.
#[inline]
pub(crate) fn influence_of_row(
    row: &[f64],
    labels: &LabelData,
    v: usize,
    class: usize,
    mode: LabelMode,
) -> f64 {
    match (mode, labels.soft()) {
        (LabelMode::Soft, Some(soft)) => soft.row(v).iter().zip(row).map(|(a, b)| a * b).sum(),
        _ => row[class],
    }
}

/// `1 / degree(v)`; `+inf` for isolated nodes.
pub fn node_regularizer(g: &Graph, v: usize) -> f64 {
    match g.degree(v) {
        0 => f64::INFINITY,
        d => 1.0 / d as f64,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompatReport {
    pub lambda: f64,
    pub target: NodeSet,
    /// Aligned with `target`.
    pub per_node_i: Vec<f64>,
    /// Aligned with `target`; `+inf` for isolated nodes.
    pub per_node_r: Vec<f64>,
    /// Aggregate compatibility; `-inf` when `lambda > 0` and a target node is isolated.
    pub c: f64,
    /// Sum over targets of `I(v)`, minus `lambda * R(v)` for finite `R` only.
    pub finite_c: f64,
    /// Isolated target nodes (infinite `R`).
    pub isolated: Vec<usize>,
}

impl CompatReport {
    pub fn total_influence(&self) -> f64 {
        self.per_node_i.iter().sum()
    }

    pub fn total_regularizer(&self) -> f64 {
        self.per_node_r.iter().sum()
    }

    pub fn is_neg_infinite(&self) -> bool {
        self.c == f64::NEG_INFINITY
    }
}

/// Encodes `f64` infinities as `"inf"` / `"-inf"` strings.
pub(crate) struct JsonNum(pub f64);

impl Serialize for JsonNum {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.0 == f64::INFINITY {
            s.serialize_str("inf")
        } else if self.0 == f64::NEG_INFINITY {
            s.serialize_str("-inf")
        } else {
            s.serialize_f64(self.0)
        }
    }
}

#[derive(Serialize)]
struct NodeEntry {
    id: usize,
    #[serde(rename = "I")]
    i: f64,
    #[serde(rename = "R")]
    r: JsonNum,
}

impl Serialize for CompatReport {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let nodes: Vec<NodeEntry> = self
            .target
            .as_slice()
            .iter()
            .zip(self.per_node_i.iter().zip(&self.per_node_r))
            .map(|(&id, (&i, &r))| NodeEntry { id, i, r: JsonNum(r) })
            .collect();
        let mut st = s.serialize_struct("CompatReport", 4)?;
        st.serialize_field("lambda", &self.lambda)?;
        st.serialize_field("C", &JsonNum(self.c))?;
        st.serialize_field("isolated", &self.isolated)?;
        st.serialize_field("nodes", &nodes)?;
        st.end()
    }
}

/// Aggregates per-node terms in target order.
pub fn compatibility_from_soft(
    g: &Graph,
    lbar: &SoftLabelMatrix,
    labels: &LabelData,
    target: &NodeSet,
    lambda: f64,
    mode: LabelMode,
) -> Result<CompatReport> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::Validation(format!(
            "lambda must be a finite non-negative number, got {lambda}"
        )));
    }
    if labels.len() != g.node_count() || lbar.rows.rows() != g.node_count() {
        return Err(Error::DimensionMismatch {
            expected: format!("{} nodes", g.node_count()),
            got: format!("{} labels, {} filtered rows", labels.len(), lbar.rows.rows()),
        });
    }
    if let Some(&v) = target.as_slice().iter().find(|&&v| v >= g.node_count()) {
        return Err(Error::Validation(format!("target node {v} out of range")));
    }
    let bad: Vec<usize> = target
        .as_slice()
        .iter()
        .copied()
        .filter(|v| lbar.non_normalizable.binary_search(v).is_ok())
        .collect();
    if !bad.is_empty() {
        return Err(Error::NonNormalizable { nodes: bad });
    }
    let mut per_node_i = Vec::with_capacity(target.len());
    let mut per_node_r = Vec::with_capacity(target.len());
    let mut isolated = Vec::new();
    let mut finite_c = 0.0;
    for &v in target.as_slice() {
        let i = node_influence_mode(lbar, labels, v, mode)?;
        let r = node_regularizer(g, v);
        per_node_i.push(i);
        per_node_r.push(r);
        finite_c += node_term(i, r, lambda);
        if r.is_infinite() {
            isolated.push(v);
        }
    }
    let c = if lambda > 0.0 && !isolated.is_empty() {
        f64::NEG_INFINITY
    } else {
        finite_c
    };
    Ok(CompatReport {
        lambda,
        target: target.clone(),
        per_node_i,
        per_node_r,
        c,
        finite_c,
        isolated,
    })
}

/// `I - lambda * R`, dropping the regularizer when it is infinite or unweighted.
#[inline]
pub(crate) fn node_term(i: f64, r: f64, lambda: f64) -> f64 {
    if lambda == 0.0 || r.is_infinite() {
        i
    } else {
        i - lambda * r
    }
}

pub fn compatibility(
    g: &Graph,
    pf: &PolynomialFilter,
    labels: &LabelData,
    target: &NodeSet,
    lambda: f64,
    mode: LabelMode,
) -> Result<CompatReport> {
    compatibility_with(Execution::default(), g, pf, labels, target, lambda, mode)
}

pub fn compatibility_with(
    exec: Execution,
    g: &Graph,
    pf: &PolynomialFilter,
    labels: &LabelData,
    target: &NodeSet,
    lambda: f64,
    mode: LabelMode,
) -> Result<CompatReport> {
    if let Some(&v) = target
        .as_slice()
        .iter()
        .find(|&&v| v < labels.len() && !labels.is_labeled(v))
    {
        return Err(Error::Unlabeled { node: v });
    }
    let adj = g.normalized_adjacency();
    let lbar = soft_labels_with(exec, pf, &adj, labels, mode)?;
    compatibility_from_soft(g, &lbar, labels, target, lambda, mode)
}
