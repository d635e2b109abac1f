//! Pseudo labels from a linear SGC classifier: softmax regression on
//! pre-filtered features `f(A) X`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dense::Dense;
use crate::error::{Error, Result};
use crate::filter::{apply_filter, PolynomialFilter};
use crate::graph::Graph;
use crate::labels::{argmax, LabelData};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub l2_penalty: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.5,
            epochs: 500,
            l2_penalty: 5e-4,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Validation("learning rate must be positive".into()));
        }
        if self.epochs == 0 {
            return Err(Error::Validation("epochs must be positive".into()));
        }
        if !(self.l2_penalty >= 0.0 && self.l2_penalty.is_finite()) {
            return Err(Error::Validation("l2 penalty must be non-negative".into()));
        }
        Ok(())
    }
}

/// `scores = H W + b`, with `W: d x c`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub weights: Dense,
    pub bias: Vec<f64>,
}

impl LinearModel {
    pub fn zeros(d: usize, c: usize) -> Self {
        LinearModel {
            weights: Dense::zeros(d, c),
            bias: vec![0.0; c],
        }
    }

    pub fn classes(&self) -> usize {
        self.bias.len()
    }

    pub fn features(&self) -> usize {
        self.weights.rows()
    }

    /// Row-wise softmax of `H W + b`.
    pub fn predict(&self, h: &Dense) -> Dense {
        let c = self.classes();
        let mut out = Dense::zeros(h.rows(), c);
        for v in 0..h.rows() {
            let row = out.row_mut(v);
            self.logits_into(h.row(v), row);
            softmax_in_place(row);
        }
        out
    }

    fn logits_into(&self, x: &[f64], out: &mut [f64]) {
        out.copy_from_slice(&self.bias);
        for (k, &xk) in x.iter().enumerate() {
            if xk == 0.0 {
                continue;
            }
            for (o, w) in out.iter_mut().zip(self.weights.row(k)) {
                *o += xk * w;
            }
        }
    }
}

fn softmax_in_place(row: &mut [f64]) {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for x in row.iter_mut() {
        *x = (*x - max).exp();
        total += *x;
    }
    row.iter_mut().for_each(|x| *x /= total);
}

/// Mean cross-entropy over labeled rows plus `l2/2 * ||W||^2`, and its gradient.
pub fn loss_and_gradient(
    model: &LinearModel,
    h: &Dense,
    labels: &LabelData,
    l2: f64,
) -> (f64, LinearModel) {
    let c = model.classes();
    let m = labels.labeled_count().max(1) as f64;
    let mut grad = LinearModel::zeros(model.features(), c);
    let mut loss = 0.0;
    let mut probs = vec![0.0; c];
    for v in 0..h.rows() {
        let Some(y) = labels.class_of(v) else { continue };
        model.logits_into(h.row(v), &mut probs);
        softmax_in_place(&mut probs);
        loss -= probs[y].max(f64::MIN_POSITIVE).ln();
        probs[y] -= 1.0;
        for (k, &xk) in h.row(v).iter().enumerate() {
            if xk == 0.0 {
                continue;
            }
            for (g, p) in grad.weights.row_mut(k).iter_mut().zip(&probs) {
                *g += xk * p / m;
            }
        }
        for (g, p) in grad.bias.iter_mut().zip(&probs) {
            *g += p / m;
        }
    }
    loss /= m;
    let wsq: f64 = model.weights.as_slice().iter().map(|w| w * w).sum();
    loss += 0.5 * l2 * wsq;
    for (g, w) in grad.weights.as_mut_slice().iter_mut().zip(model.weights.as_slice()) {
        *g += l2 * w;
    }
    (loss, grad)
}

#[derive(Debug, Clone)]
pub struct TrainedModel {
    pub model: LinearModel,
    pub loss_trace: Vec<f64>,
}

/// Filters `features` once, then runs full-batch gradient descent on the
/// labeled nodes. Weights start uniform in `±1/sqrt(d)`, biases at zero.
pub fn train_linear_sgc(
    g: &Graph,
    pf: &PolynomialFilter,
    features: &Dense,
    labels: &LabelData,
    cfg: &TrainConfig,
) -> Result<TrainedModel> {
    let h = apply_filter(pf, &g.normalized_adjacency(), features)?;
    train_on_filtered(&h, labels, cfg)
}

pub fn train_on_filtered(h: &Dense, labels: &LabelData, cfg: &TrainConfig) -> Result<TrainedModel> {
    cfg.validate()?;
    if h.rows() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: format!("{} feature rows", labels.len()),
            got: h.rows().to_string(),
        });
    }
    if labels.labeled_count() == 0 {
        return Err(Error::Validation("training mask is empty".into()));
    }
    let (d, c) = (h.cols(), labels.classes());
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let bound = 1.0 / (d.max(1) as f64).sqrt();
    let mut model = LinearModel::zeros(d, c);
    for w in model.weights.as_mut_slice() {
        *w = rng.random_range(-bound..=bound);
    }
    let mut trace = Vec::with_capacity(cfg.epochs + 1);
    for epoch in 0..=cfg.epochs {
        let (loss, grad) = loss_and_gradient(&model, h, labels, cfg.l2_penalty);
        if !loss.is_finite() {
            return Err(Error::Training(format!(
                "loss became {loss} at epoch {epoch} (learning rate {})",
                cfg.learning_rate
            )));
        }
        trace.push(loss);
        if epoch == cfg.epochs {
            break;
        }
        for (w, g) in model.weights.as_mut_slice().iter_mut().zip(grad.weights.as_slice()) {
            *w -= cfg.learning_rate * g;
        }
        for (b, g) in model.bias.iter_mut().zip(&grad.bias) {
            *b -= cfg.learning_rate * g;
        }
    }
    if trace.last() > trace.first() {
        return Err(Error::Training(format!(
            "final loss {} exceeds initial loss {}; lower the learning rate",
            trace.last().unwrap(),
            trace[0]
        )));
    }
    Ok(TrainedModel {
        model,
        loss_trace: trace,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PseudoLabels {
    /// `n x c` row-stochastic predictions, one-hot for nodes with true labels.
    pub soft: Dense,
    /// Argmax of `soft`, lowest class on ties.
    pub hardened: Vec<usize>,
    /// Nodes that kept their true label.
    pub source_mask: Vec<bool>,
}

impl PseudoLabels {
    /// Every node labeled with its hardened class; soft rows attached.
    pub fn to_label_data(&self) -> Result<LabelData> {
        LabelData::from_classes(self.soft.cols(), self.hardened.clone())?.with_soft(self.soft.clone())
    }
}

pub fn predict_pseudo(
    model: &LinearModel,
    g: &Graph,
    pf: &PolynomialFilter,
    features: &Dense,
    labels: &LabelData,
) -> Result<PseudoLabels> {
    let h = apply_filter(pf, &g.normalized_adjacency(), features)?;
    predict_from_filtered(model, &h, labels)
}

pub fn predict_from_filtered(model: &LinearModel, h: &Dense, labels: &LabelData) -> Result<PseudoLabels> {
    if h.cols() != model.features() || labels.classes() != model.classes() {
        return Err(Error::DimensionMismatch {
            expected: format!("{} features, {} classes", model.features(), model.classes()),
            got: format!("{} features, {} classes", h.cols(), labels.classes()),
        });
    }
    let mut soft = model.predict(h);
    let mut hardened = Vec::with_capacity(h.rows());
    for v in 0..h.rows() {
        if let Some(y) = labels.class_of(v) {
            let row = soft.row_mut(v);
            row.fill(0.0);
            row[y] = 1.0;
        }
        hardened.push(argmax(soft.row(v)));
    }
    Ok(PseudoLabels {
        soft,
        hardened,
        source_mask: labels.mask().to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::StandardNormal;

    fn blobs(n_per: usize, seed: u64) -> (Dense, LabelData) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for class in 0..2 {
            let center = if class == 0 { [-4.0, -4.0] } else { [4.0, 4.0] };
            for _ in 0..n_per {
                let z1: f64 = rng.sample(StandardNormal);
                let z2: f64 = rng.sample(StandardNormal);
                rows.push(vec![center[0] + z1, center[1] + z2]);
                labels.push(class);
            }
        }
        (Dense::from_rows(&rows).unwrap(), LabelData::from_classes(2, labels).unwrap())
    }

    #[test]
    fn separable_blobs_train_to_perfect_accuracy() {
        let (x, l) = blobs(30, 1);
        let g = Graph::from_edges(60, []).unwrap();
        let cfg = TrainConfig { epochs: 500, ..TrainConfig::default() };
        let t = train_linear_sgc(&g, &PolynomialFilter::identity(), &x, &l, &cfg).unwrap();
        let pred = t.model.predict(&x);
        let correct = (0..60).filter(|&v| argmax(pred.row(v)) == l.class_of(v).unwrap()).count();
        assert_eq!(correct, 60);
        assert!(t.loss_trace.last().unwrap() < &t.loss_trace[0]);
    }

    #[test]
    fn zero_features_give_uniform_predictions() {
        let x = Dense::zeros(6, 3);
        let l = LabelData::from_classes(3, vec![0, 1, 2, 0, 1, 2]).unwrap();
        let t = train_on_filtered(&x, &l, &TrainConfig::default()).unwrap();
        let p = t.model.predict(&x);
        for v in 0..6 {
            for &q in p.row(v) {
                assert!((q - 1.0 / 3.0).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn empty_mask_rejected() {
        let x = Dense::zeros(2, 2);
        let l = LabelData::with_mask(2, vec![0, 0], vec![false, false]).unwrap();
        assert!(train_on_filtered(&x, &l, &TrainConfig::default()).is_err());
    }

    #[test]
    fn diverging_rate_aborts() {
        let (x, l) = blobs(10, 2);
        let cfg = TrainConfig { learning_rate: 1e6, epochs: 50, ..TrainConfig::default() };
        assert!(matches!(train_on_filtered(&x, &l, &cfg), Err(Error::Training(_))));
    }

    #[test]
    fn true_labels_override_predictions() {
        let (x, _) = blobs(5, 3);
        // deliberately wrong partial labels
        let l = LabelData::with_mask(2, vec![1, 0, 0, 0, 0, 0, 0, 0, 0, 0], {
            let mut m = vec![false; 10];
            m[0] = true;
            m[9] = true;
            m
        })
        .unwrap();
        let model = LinearModel::zeros(2, 2);
        let p = predict_from_filtered(&model, &x, &l).unwrap();
        assert_eq!(p.hardened[0], 1);
        assert_eq!(p.hardened[9], 0);
        for v in 0..10 {
            assert!((p.soft.row(v).iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
        assert!(p.to_label_data().is_ok());
    }

    #[test]
    fn training_is_deterministic() {
        let (x, l) = blobs(8, 4);
        let cfg = TrainConfig { epochs: 20, seed: 42, ..TrainConfig::default() };
        let a = train_on_filtered(&x, &l, &cfg).unwrap();
        let b = train_on_filtered(&x, &l, &cfg).unwrap();
        assert_eq!(a.model, b.model);
    }
}
