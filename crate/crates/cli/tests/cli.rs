use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn topoinf(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_topoinf"))
        .args(args)
        .current_dir(dir)
        .env("SOURCE_DATE_EPOCH", "86400")
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = topoinf(dir, args);
    assert!(
        out.status.success(),
        "topoinf {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn code(dir: &Path, args: &[&str]) -> i32 {
    topoinf(dir, args).status.code().unwrap()
}

fn triangle() -> TempDir {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("tri.edges"), "0 1\n1 2\n0 2\n").unwrap();
    fs::write(dir.path().join("tri.labels"), "0 0\n1 0\n2 1\n").unwrap();
    dir
}

fn json(text: &str) -> serde_json::Value {
    serde_json::from_str(text).unwrap()
}

#[test]
fn analyze_triangle() {
    let dir = triangle();
    let d = dir.path();
    let report = json(&ok(d, &["analyze", "--graph", "tri.edges", "--labels", "tri.labels", "--k", "1"]));
    assert!((report["C"].as_f64().unwrap() - 5.0 / 3.0).abs() < 1e-9);
    assert_eq!(report["nodes"].as_array().unwrap().len(), 3);

    fs::write(d.join("one.target"), "2\n").unwrap();
    let single = json(&ok(
        d,
        &["analyze", "--graph", "tri.edges", "--labels", "tri.labels", "--k", "1", "--lambda", "0.1", "--target", "one.target"],
    ));
    let node = &single["nodes"][0];
    let expected = node["I"].as_f64().unwrap() - 0.1 * node["R"].as_f64().unwrap();
    assert!((single["C"].as_f64().unwrap() - expected).abs() < 1e-12);
}

#[test]
fn missing_inputs_exit_2() {
    let dir = triangle();
    let d = dir.path();
    assert_eq!(code(d, &["analyze", "--graph", "tri.edges", "--labels", "missing.labels"]), 2);
    assert_eq!(code(d, &["analyze", "--graph", "tri.edges"]), 2);
    assert_eq!(code(d, &["score", "--graph", "tri.edges", "--labels", "tri.labels", "--model", "nope"]), 2);
    assert_eq!(code(d, &["analyze", "--graph", "tri.edges", "--labels", "tri.labels", "--lambda", "-1"]), 2);
}

fn parse_rows(tsv: &str) -> Vec<(String, String, f64, String)> {
    tsv.lines()
        .skip(1)
        .map(|l| {
            let f: Vec<&str> = l.split('\t').collect();
            (f[0].into(), f[1].into(), f[2].parse().unwrap(), f[3].into())
        })
        .collect()
}

#[test]
fn score_modes_agree_on_triangle() {
    let dir = triangle();
    let d = dir.path();
    let base = ["score", "--graph", "tri.edges", "--labels", "tri.labels", "--k", "1", "--lambda", "0.1"];
    let exact = ok(d, &[&base[..], &["--mode", "exact"]].concat());
    let inc = ok(d, &[&base[..], &["--mode", "incremental"]].concat());
    assert!(exact.starts_with("edge_u\tedge_v\ttopoinf\tsign\taffected_nodes\n"));
    let (a, b) = (parse_rows(&exact), parse_rows(&inc));
    assert_eq!(a.len(), 3);
    for (x, y) in a.iter().zip(&b) {
        assert_eq!((&x.0, &x.1, &x.3), (&y.0, &y.1, &y.3));
        assert!((x.2 - y.2).abs() <= 1e-10);
    }
    assert_eq!((a[0].0.as_str(), a[0].1.as_str()), ("0", "2"));
    assert!((a[0].2 - 0.42879).abs() < 1e-4);
}

#[test]
fn score_json_carries_metadata() {
    let dir = triangle();
    let d = dir.path();
    let r = json(&ok(d, &["score", "--graph", "tri.edges", "--labels", "tri.labels", "--model", "appnp", "--k", "3", "--alpha", "0.2", "--format", "json"]));
    assert_eq!(r["metadata"]["preset"], "appnp");
    assert_eq!(r["metadata"]["K"], 3);
    assert_eq!(r["metadata"]["alpha"], 0.2);
    assert_eq!(r["metadata"]["target_size"], 3);
    assert_eq!(r["scores"].as_array().unwrap().len(), 3);
}

#[test]
fn edgeless_graph_scores_to_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("empty.edges"), "# nodes=3\n").unwrap();
    fs::write(d.join("l"), "0 0\n1 1\n2 0\n").unwrap();
    let out = ok(d, &["score", "--graph", "empty.edges", "--labels", "l"]);
    assert_eq!(out, "edge_u\tedge_v\ttopoinf\tsign\taffected_nodes\n");
}

#[test]
fn isolated_endpoint_is_excluded_in_output() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("path.edges"), "0 1\n1 2\n").unwrap();
    fs::write(d.join("l"), "0 0\n1 0\n2 1\n").unwrap();
    let out = ok(d, &["score", "--graph", "path.edges", "--labels", "l", "--lambda", "0.5"]);
    assert!(out.lines().skip(1).all(|l| l.contains("\t-inf\texcluded\t")));
}

fn dataset(d: &Path) {
    ok(d, &["gen-csbm", "--n", "60", "--c", "3", "--p", "0.4", "--q", "0.05", "--seed", "1", "--out-dir", "ds"]);
}

#[test]
fn rewire_strategies() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    dataset(d);
    let random = ["rewire", "--graph", "ds/graph.edges", "--strategy", "random", "--ratio", "0.1", "--seed", "5"];
    let a = ok(d, &random);
    assert_eq!(a, ok(d, &random));
    let m = fs::read_to_string(d.join("ds/graph.edges")).unwrap().lines().count() - 1;
    assert_eq!(a.lines().count() - 1, m - (m as f64 * 0.1).floor() as usize);

    assert_eq!(code(d, &["rewire", "--graph", "ds/graph.edges", "--strategy", "adaedge", "--ratio", "0.1"]), 2);
    assert_eq!(
        code(d, &["rewire", "--graph", "ds/graph.edges", "--labels", "ds/labels.tsv", "--strategy", "topoinf", "--ratio", "0.1"]),
        2
    );
    assert_eq!(
        code(d, &["rewire", "--graph", "ds/graph.edges", "--strategy", "random", "--ratio", "0.1", "--greedy"]),
        2
    );

    ok(d, &[
        "rewire", "--graph", "ds/graph.edges", "--labels", "ds/labels.tsv", "--strategy", "topoinf", "--lambda", "0",
        "--ratio", "0.05", "--greedy", "--out", "g.edges",
    ]);
    let trace = fs::read_to_string(d.join("g.edges.trace.tsv")).unwrap();
    let cs: Vec<f64> = trace.lines().skip(1).map(|l| l.rsplit('\t').next().unwrap().parse().unwrap()).collect();
    assert!(cs.len() > 1);
    assert!(cs.windows(2).all(|w| w[1] >= w[0]));
    assert!(d.join("g.edges.manifest.json").exists());
}

#[test]
fn dropedge_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    dataset(d);
    ok(d, &["dropedge", "--graph", "ds/graph.edges", "--labels", "ds/labels.tsv", "--drop-rate", "0.3", "--out-dir", "zero"]);
    let mut names: Vec<_> = fs::read_dir(d.join("zero")).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert_eq!(names, ["distribution.tsv", "manifest.json"]);
    let dist = fs::read_to_string(d.join("zero/distribution.tsv")).unwrap();
    let total: f64 = dist.lines().skip(1).map(|l| l.rsplit('\t').next().unwrap().parse::<f64>().unwrap()).sum();
    assert!((total - 1.0).abs() < 1e-9);

    // every edge of a cycle has the same score, so drop probabilities are uniform
    let cycle: String = (0..12).map(|v| format!("{v} {}\n", (v + 1) % 12)).collect();
    fs::write(d.join("cycle.edges"), cycle).unwrap();
    let same: String = (0..12).map(|v| format!("{v} {}\n", v % 2)).collect();
    fs::write(d.join("cycle.labels"), same).unwrap();
    ok(d, &[
        "dropedge", "--graph", "cycle.edges", "--labels", "cycle.labels", "--drop-rate", "0.3", "--emit-epochs", "2",
        "--seed", "4", "--out-dir", "flat",
    ]);
    let dist = fs::read_to_string(d.join("flat/distribution.tsv")).unwrap();
    let probs: Vec<&str> = dist.lines().skip(1).map(|l| l.rsplit('\t').next().unwrap()).collect();
    assert!(probs.iter().all(|p| *p == probs[0]));
    let e0 = fs::read_to_string(d.join("flat/epoch_0000.edges")).unwrap();
    let e1 = fs::read_to_string(d.join("flat/epoch_0001.edges")).unwrap();
    assert_ne!(e0, e1);
    assert_eq!(e0.lines().count(), e1.lines().count());
}

#[test]
fn gen_csbm_cases() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["gen-csbm", "--n", "10", "--c", "2", "--p", "1", "--q", "0", "--sigma", "0", "--out-dir", "cliques"]);
    let edges = fs::read_to_string(d.join("cliques/graph.edges")).unwrap();
    assert_eq!(edges.lines().count() - 1, 2 * 10);
    let summary = json(&fs::read_to_string(d.join("cliques/csbm.json")).unwrap());
    assert_eq!(summary["inter_edges"], 0);
    assert_eq!(summary["edge_homophily"], 1.0);
    let labels = fs::read_to_string(d.join("cliques/labels.tsv")).unwrap();
    let features = fs::read_to_string(d.join("cliques/features.tsv")).unwrap();
    let mut by_class: std::collections::HashMap<String, String> = Default::default();
    for (l, f) in labels.lines().skip(1).zip(features.lines()) {
        let class = l.split('\t').nth(1).unwrap().to_string();
        let row = f.split_once('\t').unwrap().1.to_string();
        assert_eq!(by_class.entry(class).or_insert_with(|| row.clone()), &row);
    }
    assert_eq!(by_class.len(), 2);

    assert_eq!(code(d, &["gen-csbm", "--n", "10", "--c", "2", "--p", "1.5", "--q", "0", "--out-dir", "bad"]), 2);
    assert!(!d.join("bad").exists());
}

#[test]
fn cora_like_preset_matches_size() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["gen-csbm", "--preset", "cora-like", "--p-share", "1", "--q-share", "0.05", "--seed", "3", "--out-dir", "cora"]);
    let s = json(&fs::read_to_string(d.join("cora/csbm.json")).unwrap());
    assert_eq!(s["params"]["n"], 2708);
    assert_eq!(s["params"]["c"], 7);
    assert!((s["expected_edges"].as_f64().unwrap() - 5278.0).abs() < 1e-6);
    let edges = s["edges"].as_f64().unwrap();
    assert!((edges - 5278.0).abs() < 4.0 * 5278f64.sqrt());
}

#[test]
fn pseudo_labels_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    dataset(d);
    let labels = fs::read_to_string(d.join("ds/labels.tsv")).unwrap();
    let partial: String = labels.lines().enumerate().filter(|(i, _)| i % 3 != 2).map(|(_, l)| format!("{l}\n")).collect();
    fs::write(d.join("partial.labels"), partial).unwrap();
    ok(d, &[
        "pseudo", "--graph", "ds/graph.edges", "--labels", "partial.labels", "--features", "ds/features.tsv",
        "--epochs", "200", "--out-dir", "ps",
    ]);
    let hard = ok(d, &["score", "--graph", "ds/graph.edges", "--labels", "ps/pseudo.labels"]);
    let soft = ok(d, &["score", "--graph", "ds/graph.edges", "--soft-labels", "ps/pseudo_soft.tsv"]);
    assert_eq!(hard.lines().count(), soft.lines().count());
    let t = json(&fs::read_to_string(d.join("ps/training.json")).unwrap());
    assert!(t["final_loss"].as_f64().unwrap() < t["initial_loss"].as_f64().unwrap());
}

#[test]
fn failed_runs_leave_no_files() {
    let dir = triangle();
    let d = dir.path();
    let code = code(d, &[
        "dropedge", "--graph", "tri.edges", "--labels", "tri.labels", "--target", "absent", "--drop-rate", "0.5",
        "--out-dir", "out",
    ]);
    assert_eq!(code, 2);
    assert!(!d.join("out").exists());
}

#[test]
fn manifest_records_inputs_and_epoch() {
    let dir = triangle();
    let d = dir.path();
    ok(d, &["analyze", "--graph", "tri.edges", "--labels", "tri.labels", "--out", "r.json"]);
    let m = json(&fs::read_to_string(d.join("r.json.manifest.json")).unwrap());
    assert_eq!(m["command"], "analyze");
    assert_eq!(m["timestamp"], "1970-01-02T00:00:00Z");
    assert_eq!(m["flags"]["model"], "sgc");
    assert_eq!(m["inputs"]["tri.edges"].as_str().unwrap().len(), 64);
}

#[test]
fn verify_suites() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = ok(d, &["verify", "--suite", "oracle"]);
    assert!(out.lines().skip(1).all(|l| l.contains("\tPASS\t")));
    assert!(out.contains("0 mismatches"));
    assert_eq!(code(d, &["verify", "--suite", "everything"]), 2);
}
