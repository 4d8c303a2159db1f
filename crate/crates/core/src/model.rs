//! Multinomial linear classifier trained by full-batch gradient descent on
//! the L2-penalised softmax log-loss.

use serde::{Deserialize, Serialize};

use crate::data_pool::Dataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub step: f64,
    pub l2: f64,
    /// Recorded with every hypothesis. Training starts from zero weights, so
    /// the result does not depend on it.
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 200,
            step: 0.1,
            l2: 1e-3,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(Error::Config(format!("model.step must be positive, got {}", self.step)));
        }
        if !(self.l2 >= 0.0 && self.l2.is_finite()) {
            return Err(Error::Config(format!("model.l2 must be non-negative, got {}", self.l2)));
        }
        Ok(())
    }
}

/// A trained scorer: `score_c(x) = w_c · x + b_c`.
#[derive(Debug, Clone, PartialEq)]
pub struct Hypothesis {
    num_classes: usize,
    dim: usize,
    /// Row-major `num_classes × dim`.
    weights: Vec<f64>,
    biases: Vec<f64>,
    meta: TrainConfig,
}

impl Hypothesis {
    pub fn zeros(num_classes: usize, dim: usize) -> Self {
        Hypothesis {
            num_classes,
            dim,
            weights: vec![0.0; num_classes * dim],
            biases: vec![0.0; num_classes],
            meta: TrainConfig {
                epochs: 0,
                ..TrainConfig::default()
            },
        }
    }

    /// Hand-built hypothesis; `weights` holds one row per class.
    pub fn from_parts(weights: Vec<Vec<f64>>, biases: Vec<f64>) -> Result<Self> {
        let num_classes = weights.len();
        let dim = weights.first().map_or(0, Vec::len);
        if num_classes < 2 || dim == 0 || biases.len() != num_classes {
            return Err(Error::Validation("hypothesis needs ≥ 2 classes, matching biases".into()));
        }
        if weights.iter().any(|w| w.len() != dim) {
            return Err(Error::Validation("ragged weight rows".into()));
        }
        let flat: Vec<f64> = weights.into_iter().flatten().collect();
        if flat.iter().chain(&biases).any(|v| !v.is_finite()) {
            return Err(Error::Validation("non-finite hypothesis parameter".into()));
        }
        Ok(Hypothesis {
            num_classes,
            dim,
            weights: flat,
            biases,
            meta: TrainConfig {
                epochs: 0,
                ..TrainConfig::default()
            },
        })
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight_row(&self, class: usize) -> &[f64] {
        &self.weights[class * self.dim..(class + 1) * self.dim]
    }

    pub fn biases(&self) -> &[f64] {
        &self.biases
    }

    pub fn meta(&self) -> &TrainConfig {
        &self.meta
    }

    pub fn weight_norm(&self) -> f64 {
        self.weights.iter().map(|w| w * w).sum::<f64>().sqrt()
    }

    /// Returns a copy with class `class`'s bias shifted by `delta`.
    pub fn with_bias_shift(&self, class: usize, delta: f64) -> Self {
        let mut h = self.clone();
        h.biases[class] += delta;
        h
    }

    /// Returns a copy with the weight rows (and biases) of two classes swapped.
    pub fn with_classes_swapped(&self, a: usize, b: usize) -> Self {
        let mut h = self.clone();
        for j in 0..self.dim {
            h.weights.swap(a * self.dim + j, b * self.dim + j);
        }
        h.biases.swap(a, b);
        h
    }

    pub fn scores_into(&self, x: &[f64], out: &mut [f64]) {
        for (c, o) in out.iter_mut().enumerate() {
            let w = &self.weights[c * self.dim..(c + 1) * self.dim];
            *o = self.biases[c] + w.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
        }
    }

    pub fn scores(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.num_classes];
        self.scores_into(x, &mut out);
        out
    }

    pub fn probabilities(&self, x: &[f64]) -> Vec<f64> {
        let mut out = self.scores(x);
        softmax_in_place(&mut out);
        out
    }

    /// Argmax class; ties go to the lowest class index.
    pub fn predict(&self, x: &[f64]) -> usize {
        argmax_lowest(&self.scores(x))
    }

    fn check_compatible(&self, dataset: &Dataset) -> Result<()> {
        if dataset.dim() != self.dim || dataset.num_classes() != self.num_classes {
            return Err(Error::Validation(format!(
                "hypothesis is {}×{} but dataset has {} classes of dimension {}",
                self.num_classes,
                self.dim,
                dataset.num_classes(),
                dataset.dim()
            )));
        }
        Ok(())
    }
}

pub(crate) fn argmax_lowest(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

pub(crate) fn softmax_in_place(v: &mut [f64]) {
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for x in v.iter_mut() {
        *x = (*x - max).exp();
        sum += *x;
    }
    for x in v.iter_mut() {
        *x /= sum;
    }
}

/// Features and labels of a training subset, gathered contiguously.
struct TrainingSet {
    dim: usize,
    x: Vec<f64>,
    y: Vec<usize>,
}

impl TrainingSet {
    fn gather(dataset: &Dataset, ids: &[usize]) -> Result<Self> {
        let mut x = Vec::with_capacity(ids.len() * dataset.dim());
        let mut y = Vec::with_capacity(ids.len());
        for &id in ids {
            dataset.check_id(id)?;
            x.extend_from_slice(dataset.row(id));
            y.push(dataset.label(id));
        }
        Ok(TrainingSet {
            dim: dataset.dim(),
            x,
            y,
        })
    }

    fn len(&self) -> usize {
        self.y.len()
    }
}

/// Mean log-loss plus `l2/2 · ‖W‖²` and its gradient, written into
/// `grad_w`/`grad_b`. Biases are not penalised.
fn loss_and_gradient_into(
    data: &TrainingSet,
    h: &Hypothesis,
    l2: f64,
    grad_w: &mut [f64],
    grad_b: &mut [f64],
    scratch: &mut [f64],
) -> f64 {
    let dim = data.dim;
    let inv_n = 1.0 / data.len() as f64;
    for (g, w) in grad_w.iter_mut().zip(&h.weights) {
        *g = l2 * w;
    }
    grad_b.fill(0.0);
    let mut loss = 0.5 * l2 * h.weights.iter().map(|w| w * w).sum::<f64>();
    for (i, &yi) in data.y.iter().enumerate() {
        let xi = &data.x[i * dim..(i + 1) * dim];
        h.scores_into(xi, scratch);
        let max = scratch.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for s in scratch.iter_mut() {
            *s = (*s - max).exp();
            sum += *s;
        }
        loss -= inv_n * (scratch[yi] / sum).ln();
        for (c, s) in scratch.iter_mut().enumerate() {
            let mut r = *s / sum;
            if c == yi {
                r -= 1.0;
            }
            let r = r * inv_n;
            grad_b[c] += r;
            for (g, x) in grad_w[c * dim..(c + 1) * dim].iter_mut().zip(xi) {
                *g += r * x;
            }
        }
    }
    loss
}

/// Training objective and its analytic gradient at `h` over `ids`.
/// Returns `(loss, grad_weights, grad_biases)`.
pub fn loss_and_gradient(
    dataset: &Dataset,
    ids: &[usize],
    h: &Hypothesis,
    l2: f64,
) -> Result<(f64, Vec<f64>, Vec<f64>)> {
    if ids.is_empty() {
        return Err(Error::Validation("empty example set".into()));
    }
    h.check_compatible(dataset)?;
    let data = TrainingSet::gather(dataset, ids)?;
    let mut gw = vec![0.0; h.weights.len()];
    let mut gb = vec![0.0; h.num_classes];
    let mut scratch = vec![0.0; h.num_classes];
    let loss = loss_and_gradient_into(&data, h, l2, &mut gw, &mut gb, &mut scratch);
    Ok((loss, gw, gb))
}

/// Fits a hypothesis to the examples in `labeled_ids` (duplicates count
/// with multiplicity). Starts from zero and runs exactly `cfg.epochs` steps.
///
/// When every example carries the same class the features are ignored and
/// only the biases move, so the model predicts that class everywhere.
pub fn train(dataset: &Dataset, labeled_ids: &[usize], cfg: &TrainConfig) -> Result<Hypothesis> {
    if labeled_ids.is_empty() {
        return Err(Error::Validation("cannot train on an empty labeled set".into()));
    }
    cfg.validate()?;
    let data = TrainingSet::gather(dataset, labeled_ids)?;
    let single_class = data.y.iter().all(|&y| y == data.y[0]);
    let k = dataset.num_classes();
    let mut h = Hypothesis::zeros(k, dataset.dim());
    h.meta = *cfg;
    let mut gw = vec![0.0; h.weights.len()];
    let mut gb = vec![0.0; k];
    let mut scratch = vec![0.0; k];
    for _ in 0..cfg.epochs {
        loss_and_gradient_into(&data, &h, cfg.l2, &mut gw, &mut gb, &mut scratch);
        if !single_class {
            for (w, g) in h.weights.iter_mut().zip(&gw) {
                *w -= cfg.step * g;
            }
        }
        for (b, g) in h.biases.iter_mut().zip(&gb) {
            *b -= cfg.step * g;
        }
    }
    if h.weights.iter().chain(&h.biases).any(|v| !v.is_finite()) {
        return Err(Error::NumericOverflow("model training"));
    }
    Ok(h)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Layout {
    /// One signed margin `score_1 − score_0` per example (binary problems).
    BinaryScore,
    /// Row-major softmax probabilities, `num_classes` values per example.
    FlattenedProbabilities,
}

/// Real-valued predictions of one hypothesis over an ordered id list.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionVector {
    pub values: Vec<f64>,
    pub layout: Layout,
    pub over_ids: Vec<usize>,
}

impl PredictionVector {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

pub fn predict_scores(h: &Hypothesis, dataset: &Dataset, over_ids: &[usize]) -> Result<PredictionVector> {
    h.check_compatible(dataset)?;
    let k = h.num_classes;
    let layout = if k == 2 {
        Layout::BinaryScore
    } else {
        Layout::FlattenedProbabilities
    };
    let per = if k == 2 { 1 } else { k };
    let mut values = Vec::with_capacity(over_ids.len() * per);
    let mut scratch = vec![0.0; k];
    for &id in over_ids {
        dataset.check_id(id)?;
        h.scores_into(dataset.row(id), &mut scratch);
        if k == 2 {
            values.push(scratch[1] - scratch[0]);
        } else {
            softmax_in_place(&mut scratch);
            values.extend_from_slice(&scratch);
        }
    }
    Ok(PredictionVector {
        values,
        layout,
        over_ids: over_ids.to_vec(),
    })
}

/// Row-major `rows × num_classes` probability matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Probabilities {
    num_classes: usize,
    values: Vec<f64>,
}

impl Probabilities {
    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let num_classes = rows.first().map_or(0, Vec::len);
        Probabilities {
            num_classes,
            values: rows.iter().flatten().copied().collect(),
        }
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn len(&self) -> usize {
        self.values.len().checked_div(self.num_classes).unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.num_classes..(i + 1) * self.num_classes]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.num_classes.max(1))
    }
}

pub fn class_probabilities(h: &Hypothesis, dataset: &Dataset, over_ids: &[usize]) -> Result<Probabilities> {
    h.check_compatible(dataset)?;
    let k = h.num_classes;
    let mut values = vec![0.0; over_ids.len() * k];
    for (row, &id) in values.chunks_exact_mut(k).zip(over_ids) {
        dataset.check_id(id)?;
        h.scores_into(dataset.row(id), row);
        softmax_in_place(row);
    }
    Ok(Probabilities { num_classes: k, values })
}

/// Fraction of `test_ids` whose argmax class differs from the true label.
pub fn evaluate(h: &Hypothesis, dataset: &Dataset, test_ids: &[usize]) -> Result<f64> {
    if test_ids.is_empty() {
        return Err(Error::Validation("cannot evaluate on an empty test set".into()));
    }
    h.check_compatible(dataset)?;
    let mut scratch = vec![0.0; h.num_classes];
    let mut wrong = 0usize;
    for &id in test_ids {
        dataset.check_id(id)?;
        h.scores_into(dataset.row(id), &mut scratch);
        if argmax_lowest(&scratch) != dataset.label(id) {
            wrong += 1;
        }
    }
    Ok(wrong as f64 / test_ids.len() as f64)
}
