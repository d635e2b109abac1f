//! `rewire`: remove a fraction of edges by TopoInf, at random, or AdaEdge-style.

use std::fmt::Write as _;
use std::path::PathBuf;

use clap::Args;
use serde::Serialize;
use topoinf::rewire::{remove_adaedge, remove_by_topoinf, remove_random, removal_count, EdgeSet, RemovalPlan, Selection, Strategy};
use topoinf::topoinf::{greedy_refine_from, score_all_edges};
use topoinf::{Execution, Graph, Problem, ScoreMode};

use crate::args::{check_fraction, check_lambda, FilterArgs, GraphArgs, LabelArgs, TargetArgs};
use crate::error::CliError;
use crate::output::{edge_list, fmt_num, Dest, Inputs, RunManifest, Staged};

#[derive(Debug, Args, Serialize)]
pub struct RewireArgs {
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
    /// Regularizer weight; required for the topoinf strategy.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// topoinf, random or adaedge.
    #[arg(long)]
    pub strategy: Strategy,
    /// Which partition to remove from: positive or negative.
    #[arg(long, default_value = "positive")]
    pub set: EdgeSet,
    /// Fraction of all edges to remove.
    #[arg(long)]
    pub ratio: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Remove one edge at a time, rescoring as the graph changes.
    #[arg(long, conflicts_with = "batch")]
    pub greedy: bool,
    /// Rank once and remove the top edges together (the default).
    #[arg(long)]
    pub batch: bool,
    /// Greedy only: refresh stale scores every this many removals.
    #[arg(long, default_value_t = 1)]
    pub rescore_every: usize,
    /// Rewired edge list (stdout when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Removal trace TSV; defaults to `<out>.trace.tsv` when `--out` is set.
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

fn validate(args: &RewireArgs) -> Result<(), CliError> {
    check_fraction("--ratio", args.ratio)?;
    if args.greedy && !matches!(args.strategy, Strategy::TopoInf) {
        return Err(CliError::Validation("--greedy only applies to --strategy topoinf".into()));
    }
    if args.greedy && args.set != EdgeSet::Positive {
        return Err(CliError::Validation("--greedy removes positive edges only".into()));
    }
    if args.rescore_every == 0 {
        return Err(CliError::Validation("--rescore-every must be at least 1".into()));
    }
    match args.strategy {
        Strategy::TopoInf if args.lambda.is_none() => {
            Err(CliError::Validation("--lambda is required for --strategy topoinf".into()))
        }
        Strategy::TopoInf | Strategy::AdaEdge if !args.labels.is_given() => Err(CliError::Validation(format!(
            "--strategy {} needs --labels",
            strategy_name(args.strategy)
        ))),
        _ => Ok(()),
    }
}

fn strategy_name(s: Strategy) -> &'static str {
    match s {
        Strategy::TopoInf => "topoinf",
        Strategy::Random => "random",
        Strategy::AdaEdge => "adaedge",
    }
}

fn selection_trace(g: &Graph, sel: &Selection, scores: Option<&[f64]>) -> String {
    let mut s = String::from(if scores.is_some() {
        "step\tedge_u\tedge_v\ttopoinf\n"
    } else {
        "step\tedge_u\tedge_v\n"
    });
    for (step, &e) in sel.edges.iter().enumerate() {
        let (u, v) = g.edges()[e];
        match scores {
            Some(by_edge) => writeln!(s, "{}\t{u}\t{v}\t{}", step + 1, fmt_num(by_edge[e])),
            None => writeln!(s, "{}\t{u}\t{v}", step + 1),
        }
        .expect("write to string");
    }
    s
}

pub fn rewire(args: &RewireArgs, exec: Execution) -> Result<(), CliError> {
    validate(args)?;
    let mut inputs = Inputs::default();
    let g = args.graph.load(&mut inputs)?;
    let n = g.node_count();
    let plan = RemovalPlan {
        strategy: args.strategy,
        set: args.set,
        ratio: args.ratio,
        seed: args.seed,
    };

    let (rewired, trace) = match args.strategy {
        Strategy::Random => {
            let sel = remove_random(&g, args.ratio, args.seed)?;
            (g.remove_edges(&sel.edges)?, selection_trace(&g, &sel, None))
        }
        Strategy::AdaEdge => {
            let (labels, _) = args.labels.load(n, &mut inputs)?;
            let sel = remove_adaedge(&g, &labels, &plan)?;
            warn_truncated(&sel);
            (g.remove_edges(&sel.edges)?, selection_trace(&g, &sel, None))
        }
        Strategy::TopoInf => {
            let (labels, mode) = args.labels.load(n, &mut inputs)?;
            let target = args.target.load(n, &mut inputs)?;
            let pf = args.filter.expand()?;
            let lambda = check_lambda(args.lambda.expect("validated"))?;
            let problem = Problem::new(&g, &pf, &labels, &target, lambda).with_mode(mode);
            let table = score_all_edges(&problem, ScoreMode::Incremental, exec)?;
            if args.greedy {
                let budget = removal_count(args.ratio, g.edge_count())?;
                let out = greedy_refine_from(&problem, &table, budget, args.rescore_every, exec)?;
                if out.trace.len() < budget {
                    eprintln!(
                        "warning: only {} of {budget} removals had positive TopoInf",
                        out.trace.len()
                    );
                }
                let mut s = format!("step\tedge_u\tedge_v\ttopoinf\tC\n0\t\t\t\t{}\n", fmt_num(out.initial.c));
                for (k, st) in out.trace.iter().enumerate() {
                    writeln!(s, "{}\t{}\t{}\t{}\t{}", k + 1, st.u, st.v, fmt_num(st.score), fmt_num(st.c_after))
                        .expect("write to string");
                }
                (out.graph, s)
            } else {
                let sel = remove_by_topoinf(&table.ranked, g.edge_count(), &plan)?;
                warn_truncated(&sel);
                let by_edge: Vec<f64> = table.by_edge().iter().map(|s| s.value).collect();
                (g.remove_edges(&sel.edges)?, selection_trace(&g, &sel, Some(&by_edge)))
            }
        }
    };

    let mut staged = Staged::new();
    staged.add_opt(args.out.as_deref(), edge_list(n, rewired.edges().iter().copied()));
    let trace_path = args.trace.clone().or_else(|| {
        args.out.as_ref().map(|p| {
            let mut name = p.as_os_str().to_owned();
            name.push(".trace.tsv");
            name.into()
        })
    });
    if let Some(p) = trace_path {
        staged.add(Dest::File(p), trace);
    }
    staged.commit(&RunManifest::new("rewire", args, inputs, Some(args.seed))?)
}

fn warn_truncated(sel: &Selection) {
    if sel.truncated() {
        eprintln!(
            "warning: requested {} edges but only {} are eligible",
            sel.requested, sel.available
        );
    }
}
