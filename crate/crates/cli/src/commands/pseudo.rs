//! `pseudo`: pseudo labels from a linear SGC classifier.

use std::fmt::Write as _;
use std::path::PathBuf;

use clap::Args;
use serde::Serialize;
use topoinf::pseudo::{predict_from_filtered, train_on_filtered, TrainConfig};
use topoinf::filter::apply_filter_with;
use topoinf::{load_features, Execution};

use crate::args::{FilterArgs, GraphArgs, LabelArgs};
use crate::error::CliError;
use crate::output::{fmt_num, to_json, Dest, Inputs, RunManifest, Staged};

#[derive(Debug, Args, Serialize)]
pub struct PseudoArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub graph: GraphArgs,
    /// Known labels; unlisted nodes receive predictions.
    #[command(flatten)]
    #[serde(flatten)]
    pub labels: LabelArgs,
    /// Feature TSV, one `node x_0 .. x_{d-1}` row per node.
    #[arg(long)]
    pub features: PathBuf,
    #[command(flatten)]
    #[serde(flatten)]
    pub filter: FilterArgs,
    #[arg(long, default_value_t = 0.5)]
    pub learning_rate: f64,
    #[arg(long, default_value_t = 500)]
    pub epochs: usize,
    #[arg(long, default_value_t = 5e-4)]
    pub l2: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Directory for `pseudo.labels`, `pseudo_soft.tsv` and `training.json`.
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Serialize)]
struct TrainingSummary {
    labeled_nodes: usize,
    predicted_nodes: usize,
    epochs: usize,
    initial_loss: f64,
    final_loss: f64,
}

pub fn pseudo(args: &PseudoArgs, exec: Execution) -> Result<(), CliError> {
    let cfg = TrainConfig {
        learning_rate: args.learning_rate,
        epochs: args.epochs,
        l2_penalty: args.l2,
        seed: args.seed,
    };
    cfg.validate()?;
    let mut inputs = Inputs::default();
    let g = args.graph.load(&mut inputs)?;
    let n = g.node_count();
    let (labels, _) = args.labels.load(n, &mut inputs)?;
    let features = load_features(&inputs.read(&args.features)?, n)?;
    let pf = args.filter.expand()?;
    if labels.labeled_count() == 0 {
        return Err(CliError::Validation("no labeled nodes to train on".into()));
    }

    let h = apply_filter_with(exec, &pf, &g.normalized_adjacency(), &features)?;
    let trained = train_on_filtered(&h, &labels, &cfg)?;
    let pseudo = predict_from_filtered(&trained.model, &h, &labels)?;

    let c = labels.classes();
    let mut hard = format!("# classes={c}\n");
    let mut soft = String::new();
    for v in 0..n {
        writeln!(hard, "{v}\t{}", pseudo.hardened[v]).expect("write to string");
        write!(soft, "{v}").expect("write to string");
        for &p in pseudo.soft.row(v) {
            write!(soft, "\t{}", fmt_num(p)).expect("write to string");
        }
        soft.push('\n');
    }
    let summary = TrainingSummary {
        labeled_nodes: labels.labeled_count(),
        predicted_nodes: n - labels.labeled_count(),
        epochs: cfg.epochs,
        initial_loss: trained.loss_trace.first().copied().unwrap_or(f64::NAN),
        final_loss: trained.loss_trace.last().copied().unwrap_or(f64::NAN),
    };

    let dir = &args.out_dir;
    let mut staged = Staged::in_dir(dir);
    staged.add(Dest::File(dir.join("pseudo.labels")), hard);
    staged.add(Dest::File(dir.join("pseudo_soft.tsv")), soft);
    staged.add(Dest::File(dir.join("training.json")), to_json(&summary)?);
    staged.commit(&RunManifest::new("pseudo", args, inputs, Some(args.seed))?)
}
