//! `gen-csbm`: synthetic contextual SBM datasets.

use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Args, ValueEnum};
use serde::Serialize;
use topoinf::csbm::{generate_csbm, CsbmParams, CsbmSample, MuScheme, CORA_EDGES};

use crate::error::CliError;
use crate::output::{edge_list, fmt_num, to_json, Dest, Inputs, RunManifest, Staged};

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CsbmPreset {
    /// Cora's node, class, feature and edge counts.
    CoraLike,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MuArg {
    /// Orthonormal centers scaled by `--mu-scale`.
    Orthogonal,
    /// Centers drawn from N(0, mu_scale^2 / d).
    Gaussian,
}

#[derive(Debug, Args, Serialize)]
pub struct CsbmArgs {
    #[arg(long, value_enum)]
    pub preset: Option<CsbmPreset>,
    /// Preset only: relative weight of intra-community edges.
    #[arg(long, default_value_t = 1.0, requires = "preset")]
    pub p_share: f64,
    /// Preset only: relative weight of inter-community edges.
    #[arg(long, default_value_t = 0.1, requires = "preset")]
    pub q_share: f64,
    #[arg(long, required_unless_present = "preset", conflicts_with = "preset")]
    pub n: Option<usize>,
    #[arg(long, required_unless_present = "preset", conflicts_with = "preset")]
    pub c: Option<usize>,
    /// Intra-community edge probability.
    #[arg(long, required_unless_present = "preset", conflicts_with = "preset")]
    pub p: Option<f64>,
    /// Inter-community edge probability.
    #[arg(long, required_unless_present = "preset", conflicts_with = "preset")]
    pub q: Option<f64>,
    /// Feature dimension.
    #[arg(long, default_value_t = 16, conflicts_with = "preset")]
    pub d: usize,
    /// Feature noise standard deviation.
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    #[arg(long, value_enum, default_value = "orthogonal")]
    pub mu_scheme: MuArg,
    #[arg(long, default_value_t = 1.0)]
    pub mu_scale: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Directory for `graph.edges`, `labels.tsv`, `features.tsv`, `csbm.json`.
    #[arg(long)]
    pub out_dir: PathBuf,
}

impl CsbmArgs {
    fn params(&self) -> Result<CsbmParams, CliError> {
        let mut params = match self.preset {
            Some(CsbmPreset::CoraLike) => CsbmParams::cora_like(self.p_share, self.q_share, self.sigma, self.seed)?,
            None => {
                let mut p = CsbmParams::new(
                    self.n.expect("required by clap"),
                    self.c.expect("required by clap"),
                    self.p.expect("required by clap"),
                    self.q.expect("required by clap"),
                );
                p.d = self.d;
                p.sigma = self.sigma;
                p.seed = self.seed;
                p
            }
        };
        params.mu_scheme = match self.mu_scheme {
            MuArg::Orthogonal => MuScheme::OrthogonalScaled,
            MuArg::Gaussian => MuScheme::GaussianRandom,
        };
        params.mu_scale = self.mu_scale;
        params.validate()?;
        Ok(params)
    }
}

#[derive(Serialize)]
struct Summary<'a> {
    params: &'a CsbmParams,
    mu_scheme_used: MuScheme,
    edges: usize,
    expected_edges: f64,
    intra_edges: usize,
    inter_edges: usize,
    edge_homophily: f64,
    reference_edges: Option<usize>,
}

fn summary(sample: &CsbmSample, preset: Option<CsbmPreset>) -> Summary<'_> {
    let intra = sample
        .graph
        .edges()
        .iter()
        .filter(|&&(u, v)| sample.community(u) == sample.community(v))
        .count();
    let m = sample.graph.edge_count();
    Summary {
        params: &sample.params,
        mu_scheme_used: sample.mu_scheme,
        edges: m,
        expected_edges: sample.params.expected_edges(),
        intra_edges: intra,
        inter_edges: m - intra,
        edge_homophily: if m == 0 { 0.0 } else { intra as f64 / m as f64 },
        reference_edges: preset.map(|_| CORA_EDGES),
    }
}

pub fn gen_csbm(args: &CsbmArgs) -> Result<(), CliError> {
    let params = args.params()?;
    let sample = generate_csbm(&params)?;
    let n = params.n;

    let mut labels = format!("# classes={}\n", params.c);
    for v in 0..n {
        writeln!(labels, "{v}\t{}", sample.community(v)).expect("write to string");
    }
    let mut features = String::new();
    for v in 0..n {
        write!(features, "{v}").expect("write to string");
        for &x in sample.features.row(v) {
            write!(features, "\t{}", fmt_num(x)).expect("write to string");
        }
        features.push('\n');
    }

    let dir = &args.out_dir;
    let mut staged = Staged::in_dir(dir);
    staged.add(Dest::File(dir.join("graph.edges")), edge_list(n, sample.graph.edges().iter().copied()));
    staged.add(Dest::File(dir.join("labels.tsv")), labels);
    staged.add(Dest::File(dir.join("features.tsv")), features);
    staged.add(Dest::File(dir.join("csbm.json")), to_json(&summary(&sample, args.preset))?);
    staged.commit(&RunManifest::new("gen-csbm", args, Inputs::default(), Some(args.seed))?)
}
