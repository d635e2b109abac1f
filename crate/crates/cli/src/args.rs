//! Flags shared across subcommands and the loaders behind them.

use std::path::{Path, PathBuf};

use clap::Args;
use serde::Serialize;
use sha2::{Digest, Sha256};
use topoinf::labels::load_soft_labels;
use topoinf::{load_edge_list, load_labels, FilterSpec, Graph, LabelData, LabelMode, NodeSet, PolynomialFilter, Preset};

use crate::error::CliError;
use crate::output::{hex, Inputs};

#[derive(Debug, Args, Serialize)]
pub struct GraphArgs {
    /// Edge list, one `u v` pair per line.
    #[arg(long)]
    pub graph: PathBuf,
}

impl GraphArgs {
    pub fn load(&self, inputs: &mut Inputs) -> Result<Graph, CliError> {
        Ok(load_edge_list(&inputs.read(&self.graph)?)?)
    }
}

#[derive(Debug, Args, Serialize)]
pub struct LabelArgs {
    /// Label file, one `node class` pair per line.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// Soft-label TSV (`node p_0 .. p_{c-1}`); scores use the inner product
    /// with each node's soft row instead of its hard class.
    #[arg(long, conflicts_with = "labels")]
    pub soft_labels: Option<PathBuf>,
}

impl LabelArgs {
    pub fn is_given(&self) -> bool {
        self.labels.is_some() || self.soft_labels.is_some()
    }

    pub fn load(&self, n: usize, inputs: &mut Inputs) -> Result<(LabelData, LabelMode), CliError> {
        match (&self.labels, &self.soft_labels) {
            (Some(p), _) => Ok((load_labels(&inputs.read(p)?, n)?, LabelMode::Hard)),
            (None, Some(p)) => Ok((load_soft_labels(&inputs.read(p)?, n)?, LabelMode::Soft)),
            (None, None) => Err(CliError::Validation(
                "this command needs --labels or --soft-labels".into(),
            )),
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct FilterArgs {
    /// Filter family: sgc, s2gc, appnp, gcn, gcnii, gprgnn or custom.
    #[arg(long, default_value = "sgc")]
    pub model: Preset,
    /// Polynomial order.
    #[arg(long, default_value_t = 2)]
    pub k: usize,
    /// Teleport / mixing weight for s2gc, appnp and gcnii.
    #[arg(long, default_value_t = 0.1)]
    pub alpha: f64,
    /// Comma-separated coefficients for gprgnn or custom.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub gamma: Option<Vec<f64>>,
}

impl FilterArgs {
    pub fn spec(&self) -> FilterSpec {
        match &self.gamma {
            Some(g) => FilterSpec::custom(self.model, g.clone()),
            None => FilterSpec::new(self.model, self.k).with_alpha(self.alpha),
        }
    }

    pub fn expand(&self) -> Result<PolynomialFilter, CliError> {
        if self.gamma.is_some() && !self.model.needs_gamma() {
            return Err(CliError::Validation(format!(
                "--gamma only applies to gprgnn and custom, not {}",
                self.model
            )));
        }
        Ok(self.spec().expand()?)
    }
}

#[derive(Debug, Args, Serialize)]
pub struct TargetArgs {
    /// File of node ids to score over (whitespace separated, `#` comments);
    /// defaults to every node.
    #[arg(long)]
    pub target: Option<PathBuf>,
}

impl TargetArgs {
    pub fn load(&self, n: usize, inputs: &mut Inputs) -> Result<NodeSet, CliError> {
        let Some(path) = &self.target else {
            return Ok(NodeSet::all(n));
        };
        let text = inputs.read(path)?;
        let ids = parse_ids(&text, path)?;
        if ids.is_empty() {
            return Err(CliError::Validation(format!("{} lists no nodes", path.display())));
        }
        Ok(NodeSet::new(ids, n)?)
    }
}

fn parse_ids(text: &str, path: &Path) -> Result<Vec<usize>, CliError> {
    let mut ids = Vec::new();
    for (i, line) in text.lines().enumerate() {
        for tok in line.split('#').next().unwrap_or("").split_whitespace() {
            ids.push(tok.parse().map_err(|_| {
                CliError::Validation(format!("{}:{}: bad node id {tok:?}", path.display(), i + 1))
            })?);
        }
    }
    Ok(ids)
}

/// Short digest identifying a target set.
pub fn target_hash(t: &NodeSet) -> String {
    let mut h = Sha256::new();
    for v in t.as_slice() {
        h.update(v.to_le_bytes());
    }
    hex(&h.finalize()[..8])
}

pub fn check_lambda(lambda: f64) -> Result<f64, CliError> {
    if lambda >= 0.0 && lambda.is_finite() {
        Ok(lambda)
    } else {
        Err(CliError::Validation(format!("--lambda must be finite and >= 0, got {lambda}")))
    }
}

pub fn check_fraction(name: &str, x: f64) -> Result<f64, CliError> {
    if (0.0..=1.0).contains(&x) {
        Ok(x)
    } else {
        Err(CliError::Validation(format!("{name} must lie in [0, 1], got {x}")))
    }
}
