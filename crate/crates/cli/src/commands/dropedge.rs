//! `dropedge`: TopoInf-weighted edge dropping for training-time augmentation.

use std::fmt::Write as _;
use std::path::PathBuf;

use clap::Args;
use serde::Serialize;
use topoinf::rewire::{dropedge_weights, epoch_rng, sample_dropedge};
use topoinf::topoinf::score_all_edges;
use topoinf::{Execution, Problem, ScoreMode};

use crate::args::{check_fraction, check_lambda, FilterArgs, GraphArgs, LabelArgs, TargetArgs};
use crate::error::CliError;
use crate::output::{edge_list, fmt_num, Dest, Inputs, RunManifest, Staged};

#[derive(Debug, Args, Serialize)]
pub struct DropEdgeArgs {
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
    /// Softmax temperature.
    #[arg(long, default_value_t = 1.0)]
    pub tau: f64,
    /// Fraction of edges dropped per epoch.
    #[arg(long)]
    pub drop_rate: f64,
    /// Number of per-epoch edge lists to write.
    #[arg(long, default_value_t = 0)]
    pub emit_epochs: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Directory for `distribution.tsv` and `epoch_NNNN.edges`.
    #[arg(long)]
    pub out_dir: PathBuf,
}

pub fn dropedge(args: &DropEdgeArgs, exec: Execution) -> Result<(), CliError> {
    check_fraction("--drop-rate", args.drop_rate)?;
    if !(args.tau > 0.0 && args.tau.is_finite()) {
        return Err(CliError::Validation(format!("--tau must be positive, got {}", args.tau)));
    }
    let mut inputs = Inputs::default();
    let g = args.graph.load(&mut inputs)?;
    let n = g.node_count();
    let (labels, mode) = args.labels.load(n, &mut inputs)?;
    let target = args.target.load(n, &mut inputs)?;
    let pf = args.filter.expand()?;
    let lambda = check_lambda(args.lambda)?;
    let problem = Problem::new(&g, &pf, &labels, &target, lambda).with_mode(mode);
    let table = score_all_edges(&problem, ScoreMode::Incremental, exec)?;
    let dist = dropedge_weights(&table.ranked, args.tau)?;

    let mut staged = Staged::in_dir(&args.out_dir);
    let mut s = String::from("edge_u\tedge_v\ttopoinf\tprobability\n");
    for (e, &(u, v)) in g.edges().iter().enumerate() {
        writeln!(s, "{u}\t{v}\t{}\t{}", fmt_num(dist.scores[e]), fmt_num(dist.probabilities[e]))
            .expect("write to string");
    }
    staged.add(Dest::File(args.out_dir.join("distribution.tsv")), s);

    for epoch in 0..args.emit_epochs {
        let sel = sample_dropedge(&dist, args.drop_rate, &mut epoch_rng(args.seed, epoch))?;
        if epoch == 0 && sel.truncated() {
            eprintln!(
                "warning: requested {} drops but only {} edges have positive probability",
                sel.requested, sel.available
            );
        }
        let kept = g.remove_edges(&sel.edges)?;
        staged.add(
            Dest::File(args.out_dir.join(format!("epoch_{epoch:04}.edges"))),
            edge_list(n, kept.edges().iter().copied()),
        );
    }
    staged.commit(&RunManifest::new("dropedge", args, inputs, Some(args.seed))?)
}
