//! `verify`: self-checks runnable from a fresh install.

use std::fmt::Write as _;

use clap::{Args, ValueEnum};
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use topoinf::csbm::{check_distance_contraction, check_variance_reduction, generate_csbm, CsbmParams};
use topoinf::pseudo::{loss_and_gradient, LinearModel};
use topoinf::topoinf::{score_all_edges, topoinf_oracle};
use topoinf::{
    Dense, DeltaWorkspace, Execution, FilterSpec, Graph, LabelData, NodeSet, Preset, Problem, ScoreMode, Sign,
};

use crate::error::CliError;
use crate::output::{fmt_num, Inputs, RunManifest, Staged};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    /// Incremental TopoInf against full recompute, plus locality.
    Oracle,
    /// Distance contraction and noise-variance reduction on cSBM samples.
    Theorem2,
    /// Pseudo-label trainer gradient against finite differences.
    Gradients,
    All,
}

#[derive(Debug, Args, Serialize)]
pub struct VerifyArgs {
    #[arg(long, value_enum, default_value = "all")]
    pub suite: Suite,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

struct Check {
    suite: &'static str,
    name: String,
    passed: bool,
    detail: String,
}

const ORACLE_TOL: f64 = 1e-10;
const PRESETS: [Preset; 6] = [Preset::Sgc, Preset::S2gc, Preset::Appnp, Preset::Gcn, Preset::Gcnii, Preset::Gprgnn];

fn random_graph(n: usize, mean_degree: f64, rng: &mut ChaCha8Rng) -> Result<Graph, CliError> {
    let p = (mean_degree / (n - 1) as f64).min(1.0);
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.random::<f64>() < p {
                edges.push((u, v));
            }
        }
    }
    Ok(Graph::from_edges(n, edges)?)
}

fn random_labels(n: usize, c: usize, rng: &mut ChaCha8Rng) -> Result<LabelData, CliError> {
    Ok(LabelData::from_classes(c, (0..n).map(|_| rng.random_range(0..c)).collect())?)
}

fn filter_for(preset: Preset, k: usize, rng: &mut ChaCha8Rng) -> Result<topoinf::PolynomialFilter, CliError> {
    let spec = if preset.needs_gamma() {
        FilterSpec::custom(preset, (0..=k).map(|_| rng.random_range(0.05..1.0)).collect())
    } else {
        FilterSpec::new(preset, k).with_alpha(0.15)
    };
    Ok(spec.expand()?)
}

fn oracle_suite(seed: u64, exec: Execution) -> Result<Vec<Check>, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut compared, mut mismatches, mut violations) = (0usize, 0usize, 0usize);
    for (graph_no, n) in [20, 20, 30, 30, 40, 40].into_iter().enumerate() {
        let g = random_graph(n, rng.random_range(4.0..8.0), &mut rng)?;
        let labels = random_labels(n, 3, &mut rng)?;
        let target = NodeSet::all(n);
        let lambda = if graph_no % 2 == 0 { 0.0 } else { 0.05 };
        for k in 1..=3 {
            for preset in PRESETS {
                let pf = filter_for(preset, k, &mut rng)?;
                let problem = Problem::new(&g, &pf, &labels, &target, lambda);
                let ws = DeltaWorkspace::new(problem, exec)?;
                let base = ws.baseline();
                for e in 0..g.edge_count() {
                    let inc = ws.score(e)?;
                    let ora = topoinf_oracle(&problem, e)?;
                    compared += 1;
                    let same_exclusion = (inc.sign == Sign::Excluded) == (ora.sign == Sign::Excluded);
                    if !same_exclusion || (ora.sign != Sign::Excluded && (inc.value - ora.value).abs() > ORACLE_TOL) {
                        mismatches += 1;
                    }
                    let (u, v) = g.edges()[e];
                    let near = g.khop_set(&NodeSet::new(vec![u, v], n)?, pf.order());
                    let after = problem.on_graph(&g.remove_edge(e)?).compatibility(exec)?;
                    violations += target
                        .as_slice()
                        .iter()
                        .enumerate()
                        .filter(|&(idx, &w)| after.per_node_i[idx] != base.per_node_i[idx] && !near.contains(w))
                        .count();
                }
            }
        }
    }
    let mut checks = vec![
        Check {
            suite: "oracle",
            name: "incremental_vs_full".into(),
            passed: mismatches == 0,
            detail: format!("{mismatches} mismatches over {compared} edge scores"),
        },
        Check {
            suite: "oracle",
            name: "locality".into(),
            passed: violations == 0,
            detail: format!("{violations} nodes changed outside the K-hop set"),
        },
    ];

    // spot check on a 10k-edge graph
    let n = 2000;
    let g = random_graph(n, 10.0, &mut rng)?;
    let labels = random_labels(n, 5, &mut rng)?;
    let pf = FilterSpec::new(Preset::Sgc, 2).expand()?;
    let target = NodeSet::all(n);
    let problem = Problem::new(&g, &pf, &labels, &target, 0.0);
    let table = score_all_edges(&problem, ScoreMode::Incremental, exec)?.by_edge();
    let sample = index::sample(&mut rng, g.edge_count(), 100.min(g.edge_count()));
    let mut worst: f64 = 0.0;
    for e in sample {
        worst = worst.max((topoinf_oracle(&problem, e)?.value - table[e].value).abs());
    }
    checks.push(Check {
        suite: "oracle",
        name: "large_graph_spot_check".into(),
        passed: worst <= ORACLE_TOL,
        detail: format!("{} edges, max |diff| {} on 100 sampled", g.edge_count(), fmt_num(worst)),
    });
    Ok(checks)
}

fn contraction_suite(seed: u64) -> Result<Vec<Check>, CliError> {
    let filters = [
        ("sgc", FilterSpec::new(Preset::Sgc, 2)),
        ("appnp", FilterSpec::new(Preset::Appnp, 10).with_alpha(0.1)),
        ("s2gc", FilterSpec::new(Preset::S2gc, 4).with_alpha(0.05)),
    ];
    let mut checks = Vec::new();
    for (name, spec) in filters {
        let pf = spec.expand()?;
        let (mut violations, mut frob_ok, mut var_ok, mut worst_ratio) = (0usize, true, true, 0.0f64);
        for s in 0..10 {
            let mut params = CsbmParams::new(60, 3, 0.5, 0.1);
            params.seed = seed.wrapping_add(s);
            let sample = generate_csbm(&params)?;
            let d = check_distance_contraction(&sample, &pf)?;
            violations += d.violations.len();
            let v = check_variance_reduction(&params, &pf, 200)?;
            frob_ok &= v.frobenius_holds;
            var_ok &= v.empirical_holds;
            worst_ratio = worst_ratio.max(v.mean_filtered_noise_sq / v.mean_noise_sq);
        }
        checks.push(Check {
            suite: "theorem2",
            name: format!("distance_contraction_{name}"),
            passed: violations == 0,
            detail: format!("{violations} violations over 10 samples"),
        });
        checks.push(Check {
            suite: "theorem2",
            name: format!("variance_reduction_{name}"),
            passed: frob_ok && var_ok,
            detail: format!("frobenius bound {frob_ok}, worst filtered/raw noise {}", fmt_num(worst_ratio)),
        });
    }
    Ok(checks)
}

/// Worst relative gap between analytic and central-difference gradients.
pub fn gradient_gap(seed: u64) -> Result<f64, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (n, d, c) = (15, 6, 4);
    let mut model = LinearModel::zeros(d, c);
    model.weights.as_mut_slice().iter_mut().for_each(|w| *w = rng.random_range(-1.0..1.0));
    model.bias.iter_mut().for_each(|b| *b = rng.random_range(-0.5..0.5));
    let h = Dense::from_vec(n, d, (0..n * d).map(|_| rng.random_range(-2.0..2.0)).collect())?;
    let classes = (0..n).map(|_| rng.random_range(0..c)).collect();
    let mask = (0..n).map(|_| rng.random_bool(0.7)).collect();
    let labels = LabelData::with_mask(c, classes, mask)?;
    let l2 = 1e-2;
    let eps = 1e-6;
    let (_, grad) = loss_and_gradient(&model, &h, &labels, l2);
    let loss = |m: &LinearModel| loss_and_gradient(m, &h, &labels, l2).0;
    let mut worst: f64 = 0.0;
    let mut compare = |fd: f64, an: f64| {
        worst = worst.max((fd - an).abs() / fd.abs().max(an.abs()).max(1e-8));
    };
    for i in 0..d * c {
        let (mut hi, mut lo) = (model.clone(), model.clone());
        hi.weights.as_mut_slice()[i] += eps;
        lo.weights.as_mut_slice()[i] -= eps;
        compare((loss(&hi) - loss(&lo)) / (2.0 * eps), grad.weights.as_slice()[i]);
    }
    for i in 0..c {
        let (mut hi, mut lo) = (model.clone(), model.clone());
        hi.bias[i] += eps;
        lo.bias[i] -= eps;
        compare((loss(&hi) - loss(&lo)) / (2.0 * eps), grad.bias[i]);
    }
    Ok(worst)
}

fn gradient_suite(seed: u64) -> Result<Vec<Check>, CliError> {
    let mut worst: f64 = 0.0;
    for s in 0..10 {
        worst = worst.max(gradient_gap(seed.wrapping_add(s))?);
    }
    Ok(vec![Check {
        suite: "gradients",
        name: "finite_differences".into(),
        passed: worst < 1e-4,
        detail: format!("worst relative error {} over 10 instances", fmt_num(worst)),
    }])
}

pub fn verify(args: &VerifyArgs, exec: Execution) -> Result<(), CliError> {
    let run = |s: Suite| args.suite == Suite::All || args.suite == s;
    let mut checks = Vec::new();
    if run(Suite::Oracle) {
        checks.extend(oracle_suite(args.seed, exec)?);
    }
    if run(Suite::Theorem2) {
        checks.extend(contraction_suite(args.seed)?);
    }
    if run(Suite::Gradients) {
        checks.extend(gradient_suite(args.seed)?);
    }
    let mut s = String::from("suite\tcheck\tresult\tdetail\n");
    for c in &checks {
        let result = if c.passed { "PASS" } else { "FAIL" };
        writeln!(s, "{}\t{}\t{result}\t{}", c.suite, c.name, c.detail).expect("write to string");
    }
    let mut staged = Staged::new();
    staged.add_opt(None, s);
    staged.commit(&RunManifest::new("verify", args, Inputs::default(), Some(args.seed))?)?;
    let failed = checks.iter().filter(|c| !c.passed).count();
    if failed > 0 {
        return Err(CliError::Internal(format!("{failed} verification checks failed")));
    }
    Ok(())
}

