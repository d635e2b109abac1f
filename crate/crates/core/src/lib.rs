//! Measure how well a graph's topology suits a node-classification task under a
//! polynomial graph filter, score each edge's influence on that fit (TopoInf),
//! and rewire graphs accordingly.
//!
//! The usual flow: load a [`Graph`] and [`LabelData`], expand a [`FilterSpec`]
//! into a [`PolynomialFilter`], then call [`compat::compatibility`] for the
//! aggregate score or [`topoinf::score_all_edges`] for per-edge influence.

pub mod compat;
pub mod csbm;
pub mod dense;
pub mod error;
pub mod exec;
pub mod filter;
pub mod graph;
pub mod labels;
pub mod pseudo;
pub mod rewire;
pub mod topoinf;

pub use dense::{load_features, Dense};
pub use error::{Error, Result};
pub use exec::Execution;
pub use filter::{FilterSpec, PolynomialFilter, Preset};
pub use graph::{load_edge_list, Graph, NodeSet, NormalizedAdjacency};
pub use labels::{load_labels, LabelData, LabelMode};
pub use topoinf::{DeltaWorkspace, Problem, ScoreMode, Sign, TopoInfScore};
