mod common;

use topoinf::rewire::{dropedge_weights, epoch_rng, remove_random, sample_dropedge};
use topoinf::topoinf::TopoInfScore;
use topoinf::Sign;

const TRIALS: usize = 10_000;

fn score(edge: usize, value: f64) -> TopoInfScore {
    TopoInfScore {
        edge,
        u: edge,
        v: edge + 1,
        value,
        affected_nodes: 0,
        sign: Sign::of(value),
    }
}

#[test]
fn dropedge_single_draw_frequencies() {
    // two edges with softmax weights 0.9 / 0.1
    let gap = (9.0f64).ln();
    let dist = dropedge_weights(&[score(0, gap), score(1, 0.0)], 1.0).unwrap();
    assert!((dist.probabilities[0] - 0.9).abs() < 1e-12);
    let mut hits = [0usize; 2];
    for t in 0..TRIALS {
        let s = sample_dropedge(&dist, 0.5, &mut epoch_rng(7, t as u64)).unwrap();
        assert_eq!(s.edges.len(), 1);
        hits[s.edges[0]] += 1;
    }
    for e in 0..2 {
        let freq = hits[e] as f64 / TRIALS as f64;
        assert!((freq - dist.probabilities[e]).abs() <= 0.02, "edge {e}: {freq}");
    }
}

#[test]
fn dropedge_matches_softmax_on_many_edges() {
    let scores: Vec<_> = (0..10).map(|e| score(e, e as f64 * 0.3 - 1.0)).collect();
    let dist = dropedge_weights(&scores, 0.8).unwrap();
    let mut hits = [0usize; 10];
    for t in 0..TRIALS {
        // 10% of 10 edges: exactly one draw
        let s = sample_dropedge(&dist, 0.1, &mut epoch_rng(3, t as u64)).unwrap();
        hits[s.edges[0]] += 1;
    }
    for e in 0..10 {
        let freq = hits[e] as f64 / TRIALS as f64;
        assert!((freq - dist.probabilities[e]).abs() <= 0.02);
    }
}

#[test]
fn excluded_edges_are_never_dropped() {
    let dist = dropedge_weights(&[score(0, f64::NEG_INFINITY), score(1, 0.5), score(2, 0.1)], 1.0).unwrap();
    assert_eq!(dist.probabilities[0], 0.0);
    for t in 0..200 {
        let s = sample_dropedge(&dist, 1.0, &mut epoch_rng(1, t)).unwrap();
        assert!(!s.edges.contains(&0));
        assert!(s.truncated());
    }
}

#[test]
fn random_removal_is_uniform() {
    let g = common::erdos_renyi(30, 4.0, 12);
    let m = g.edge_count();
    let mut hits = vec![0usize; m];
    let ratio = 0.25;
    for t in 0..TRIALS {
        for e in remove_random(&g, ratio, t as u64).unwrap().edges {
            hits[e] += 1;
        }
    }
    let expected = (ratio * m as f64).floor() / m as f64;
    for h in hits {
        assert!((h as f64 / TRIALS as f64 - expected).abs() <= 0.02);
    }
}

#[test]
fn epochs_are_reproducible() {
    let scores: Vec<_> = (0..40).map(|e| score(e, (e % 7) as f64 * 0.1)).collect();
    let dist = dropedge_weights(&scores, 0.5).unwrap();
    let a = sample_dropedge(&dist, 0.3, &mut epoch_rng(11, 4)).unwrap();
    let b = sample_dropedge(&dist, 0.3, &mut epoch_rng(11, 4)).unwrap();
    let c = sample_dropedge(&dist, 0.3, &mut epoch_rng(11, 5)).unwrap();
    assert_eq!(a, b);
    assert_ne!(a.edges, c.edges);
}
