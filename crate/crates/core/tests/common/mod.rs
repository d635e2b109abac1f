#![allow(dead_code)]

pub mod dense;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use topoinf::{FilterSpec, Graph, LabelData, PolynomialFilter, Preset};

/// G(n, p) with `p` chosen for the requested mean degree.
pub fn erdos_renyi(n: usize, mean_degree: f64, seed: u64) -> Graph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = (mean_degree / (n - 1) as f64).min(1.0);
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.random::<f64>() < p {
                edges.push((u, v));
            }
        }
    }
    Graph::from_edges(n, edges).unwrap()
}

pub fn random_labels(n: usize, classes: usize, seed: u64) -> LabelData {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xABCD);
    LabelData::from_classes(classes, (0..n).map(|_| rng.random_range(0..classes)).collect()).unwrap()
}

/// Every preset at order `k`; GPRGNN gets seeded nonnegative weights.
pub fn all_presets(k: usize, seed: u64) -> Vec<(Preset, PolynomialFilter)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let learned: Vec<f64> = (0..=k).map(|_| rng.random_range(0.05..1.0)).collect();
    [Preset::Sgc, Preset::S2gc, Preset::Appnp, Preset::Gcn, Preset::Gcnii, Preset::Gprgnn]
        .into_iter()
        .map(|p| {
            let spec = if p.needs_gamma() {
                FilterSpec::custom(p, learned.clone())
            } else {
                FilterSpec::new(p, k).with_alpha(0.15)
            };
            (p, spec.expand().unwrap())
        })
        .collect()
}

pub fn triangle() -> (Graph, LabelData) {
    (
        Graph::from_edges(3, [(0, 1), (1, 2), (0, 2)]).unwrap(),
        LabelData::from_classes(2, vec![0, 0, 1]).unwrap(),
    )
}
