//! `analyze` and `score`.

use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Args, ValueEnum};
use serde::Serialize;
use topoinf::compat::compatibility_with;
use topoinf::topoinf::{score_all_edges, ScoreTable};
use topoinf::{Execution, Problem, ScoreMode};

use crate::args::{check_lambda, target_hash, FilterArgs, GraphArgs, LabelArgs, TargetArgs};
use crate::error::CliError;
use crate::output::{fmt_num, to_json, Inputs, RunManifest, Staged};

#[derive(Debug, Args, Serialize)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub graph: GraphArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub labels: LabelArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub filter: FilterArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub target: TargetArgs,
    /// Weight of the degree regularizer.
    #[arg(long, default_value_t = 0.0)]
    pub lambda: f64,
    /// Output path (stdout when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn analyze(args: &AnalyzeArgs, exec: Execution) -> Result<(), CliError> {
    let mut inputs = Inputs::default();
    let g = args.graph.load(&mut inputs)?;
    let (labels, mode) = args.labels.load(g.node_count(), &mut inputs)?;
    let target = args.target.load(g.node_count(), &mut inputs)?;
    let pf = args.filter.expand()?;
    let lambda = check_lambda(args.lambda)?;
    let report = compatibility_with(exec, &g, &pf, &labels, &target, lambda, mode)?;

    let mut staged = Staged::new();
    staged.add_opt(args.out.as_deref(), to_json(&report)?);
    staged.commit(&RunManifest::new("analyze", args, inputs, None)?)
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeArg {
    Exact,
    Incremental,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Tsv,
    Json,
}

#[derive(Debug, Args, Serialize)]
pub struct ScoreArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub graph: GraphArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub labels: LabelArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub filter: FilterArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub target: TargetArgs,
    #[arg(long, default_value_t = 0.0)]
    pub lambda: f64,
    /// Full recompute per edge, or incremental delta propagation.
    #[arg(long, value_enum, default_value = "incremental")]
    pub mode: ModeArg,
    #[arg(long, value_enum, default_value = "tsv")]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Serialize)]
struct ScoreRow {
    edge_u: usize,
    edge_v: usize,
    topoinf: JsonScore,
    sign: &'static str,
    affected_nodes: usize,
}

/// `-inf` is not valid JSON; excluded edges carry the string instead.
struct JsonScore(f64);

impl Serialize for JsonScore {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if self.0.is_finite() {
            s.serialize_f64(self.0)
        } else {
            s.serialize_str(&fmt_num(self.0))
        }
    }
}

#[derive(Serialize)]
struct Metadata<'a> {
    preset: String,
    #[serde(rename = "K")]
    k: usize,
    alpha: f64,
    gamma: &'a [f64],
    lambda: f64,
    mode: ModeArg,
    target_size: usize,
    target_hash: String,
    seed: Option<u64>,
    baseline_c: JsonScore,
    counts: topoinf::topoinf::SignCounts,
}

#[derive(Serialize)]
struct ScoreReport<'a> {
    metadata: Metadata<'a>,
    scores: Vec<ScoreRow>,
}

pub fn score_tsv(table: &ScoreTable) -> String {
    let mut s = String::from("edge_u\tedge_v\ttopoinf\tsign\taffected_nodes\n");
    for r in &table.ranked {
        writeln!(s, "{}\t{}\t{}\t{}\t{}", r.u, r.v, fmt_num(r.value), r.sign.name(), r.affected_nodes)
            .expect("write to string");
    }
    s
}

pub fn score(args: &ScoreArgs, exec: Execution) -> Result<(), CliError> {
    let mut inputs = Inputs::default();
    let g = args.graph.load(&mut inputs)?;
    let (labels, mode) = args.labels.load(g.node_count(), &mut inputs)?;
    let target = args.target.load(g.node_count(), &mut inputs)?;
    let pf = args.filter.expand()?;
    let lambda = check_lambda(args.lambda)?;
    let problem = Problem::new(&g, &pf, &labels, &target, lambda).with_mode(mode);
    let score_mode = match args.mode {
        ModeArg::Exact => ScoreMode::Exact,
        ModeArg::Incremental => ScoreMode::Incremental,
    };
    let table = score_all_edges(&problem, score_mode, exec)?;

    let text = match args.format {
        Format::Tsv => score_tsv(&table),
        Format::Json => {
            let spec = args.filter.spec();
            to_json(&ScoreReport {
                metadata: Metadata {
                    preset: spec.preset.name().into(),
                    k: pf.order(),
                    alpha: spec.alpha,
                    gamma: pf.coefficients(),
                    lambda,
                    mode: args.mode,
                    target_size: target.len(),
                    target_hash: target_hash(&target),
                    seed: None,
                    baseline_c: JsonScore(table.baseline.c),
                    counts: table.counts,
                },
                scores: table
                    .ranked
                    .iter()
                    .map(|r| ScoreRow {
                        edge_u: r.u,
                        edge_v: r.v,
                        topoinf: JsonScore(r.value),
                        sign: r.sign.name(),
                        affected_nodes: r.affected_nodes,
                    })
                    .collect(),
            })?
        }
    };
    let mut staged = Staged::new();
    staged.add_opt(args.out.as_deref(), text);
    staged.commit(&RunManifest::new("score", args, inputs, None)?)
}
