//! Logistic regression on document vectors, trained by full-batch gradient
//! descent.
//!
//! The loss is the mean cross-entropy plus `l2/2 * |W|^2` (bias excluded).
//! The step size is the inverse of a bound on the loss curvature, from the
//! largest eigenvalue of the feature second-moment matrix.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use super::LabeledVectors;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClassifierMode {
    /// One softmax over all labels; each entry must carry one label.
    Multinomial,
    /// An independent binary model per label.
    PerLabelBinary,
}

impl ClassifierMode {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Multinomial => "multinomial",
            Self::PerLabelBinary => "binary",
        }
    }
}

impl FromStr for ClassifierMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "multinomial" => Ok(Self::Multinomial),
            "binary" | "per-label" => Ok(Self::PerLabelBinary),
            _ => Err(Error::InvalidArgument(format!("unknown classifier mode {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Accuracy,
    MeanAveragePrecision,
}

impl Metric {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Accuracy => "accuracy",
            Self::MeanAveragePrecision => "map",
        }
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "accuracy" => Ok(Self::Accuracy),
            "map" => Ok(Self::MeanAveragePrecision),
            _ => Err(Error::InvalidArgument(format!("unknown metric {s:?}"))),
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Trained weights: one row of `dim + 1` values (bias last) per label.
#[derive(Debug, Clone, PartialEq)]
pub struct Classifier {
    pub mode: ClassifierMode,
    pub labels: Vec<String>,
    pub weights: Vec<Vec<f64>>,
}

impl Classifier {
    /// Raw per-label scores (logits) for `x`.
    pub fn scores(&self, x: &[f64]) -> Vec<f64> {
        self.weights.iter().map(|w| linear(w, x)).collect()
    }

    /// Label with the highest score; ties go to the first label.
    pub fn predict(&self, x: &[f64]) -> &str {
        let s = self.scores(x);
        let best = (1..s.len()).fold(0, |b, k| if s[k] > s[b] { k } else { b });
        &self.labels[best]
    }
}

fn linear(w: &[f64], x: &[f64]) -> f64 {
    let d = x.len();
    w[..d].iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + w[d]
}

/// Largest eigenvalue of `(1/n) sum x x^T` over rows extended by a constant 1.
fn max_second_moment(data: &LabeledVectors) -> f64 {
    let d = data.dim() + 1;
    let n = data.len() as f64;
    let mut v = vec![1.0 / (d as f64).sqrt(); d];
    let mut lambda = 0.0;
    for _ in 0..200 {
        let mut next = vec![0.0; d];
        for i in 0..data.len() {
            let x = data.vector(i);
            let proj = linear(&v, x);
            for (nj, xj) in next.iter_mut().zip(x.iter().chain(std::iter::once(&1.0))) {
                *nj += proj * xj / n;
            }
        }
        let norm = next.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        let converged = (norm - lambda).abs() <= 1e-12 * norm;
        lambda = norm;
        v = next.into_iter().map(|a| a / norm).collect();
        if converged {
            break;
        }
    }
    lambda
}

/// Train a logistic regression with `iters` full-batch gradient steps from
/// zero weights.
pub fn train_classifier(data: &LabeledVectors, mode: ClassifierMode, l2: f64, iters: usize) -> Result<Classifier> {
    if !(l2.is_finite() && l2 >= 0.0) {
        return Err(Error::InvalidArgument(format!("l2 penalty {l2}")));
    }
    let labels = data.label_names();
    let lmax = max_second_moment(data);
    match mode {
        ClassifierMode::Multinomial => {
            if !data.is_single_label() {
                return Err(Error::InvalidArgument(
                    "multinomial mode needs exactly one label per entry".into(),
                ));
            }
            if labels.len() < 2 {
                return Err(Error::InvalidArgument(
                    "multinomial mode needs at least two distinct labels".into(),
                ));
            }
            let y: Vec<usize> = (0..data.len())
                .map(|i| labels.binary_search(&data.labels(i)[0]).expect("label from the set"))
                .collect();
            let step = 1.0 / (0.5 * lmax + l2);
            let weights = descend(data, labels.len(), l2, iters, step, |i, scores, grad| {
                let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let z: f64 = scores.iter().map(|s| (s - max).exp()).sum();
                for (k, g) in grad.iter_mut().enumerate() {
                    *g = (scores[k] - max).exp() / z - f64::from(u8::from(k == y[i]));
                }
            });
            Ok(Classifier { mode, labels, weights })
        }
        ClassifierMode::PerLabelBinary => {
            if labels.is_empty() {
                return Err(Error::MissingLabels("no labels".into()));
            }
            let step = 1.0 / (0.25 * lmax + l2);
            let weights = labels
                .par_iter()
                .map(|label| {
                    let y: Vec<f64> = (0..data.len())
                        .map(|i| f64::from(u8::from(data.labels(i).contains(label))))
                        .collect();
                    descend(data, 1, l2, iters, step, |i, scores, grad| {
                        grad[0] = sigmoid(scores[0]) - y[i];
                    })
                    .remove(0)
                })
                .collect();
            Ok(Classifier { mode, labels, weights })
        }
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Gradient descent on `k` weight rows. `dloss(i, scores, grad)` writes
/// the derivative of entry `i`'s loss with respect to its scores.
fn descend(
    data: &LabeledVectors,
    k: usize,
    l2: f64,
    iters: usize,
    step: f64,
    dloss: impl Fn(usize, &[f64], &mut [f64]),
) -> Vec<Vec<f64>> {
    let d = data.dim();
    let n = data.len() as f64;
    let mut w = vec![vec![0.0; d + 1]; k];
    let mut scores = vec![0.0; k];
    let mut g = vec![0.0; k];
    for _ in 0..iters {
        let mut grad = vec![vec![0.0; d + 1]; k];
        for i in 0..data.len() {
            let x = data.vector(i);
            for (s, wk) in scores.iter_mut().zip(&w) {
                *s = linear(wk, x);
            }
            dloss(i, &scores, &mut g);
            for (gk, &c) in grad.iter_mut().zip(&g) {
                for (gj, xj) in gk[..d].iter_mut().zip(x) {
                    *gj += c * xj;
                }
                gk[d] += c;
            }
        }
        for (wk, gk) in w.iter_mut().zip(&grad) {
            for j in 0..=d {
                let reg = if j < d { l2 * wk[j] } else { 0.0 };
                wk[j] -= step * (gk[j] / n + reg);
            }
        }
    }
    w
}

/// Average precision of the ranking of `scores` (descending, ties by
/// index) against `relevant`. `None` when nothing is relevant.
pub fn average_precision(scores: &[f64], relevant: &[bool]) -> Option<f64> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let mut hits = 0;
    let mut sum = 0.0;
    for (rank, &i) in order.iter().enumerate() {
        if relevant[i] {
            hits += 1;
            sum += hits as f64 / (rank + 1) as f64;
        }
    }
    (hits > 0).then(|| sum / hits as f64)
}

/// Accuracy for a multinomial classifier; mean average precision over
/// labels for a per-label one. Labels with no positive test entry are
/// left out of the mean.
pub fn classify_eval(classifier: &Classifier, test: &LabeledVectors, metric: Metric) -> Result<f64> {
    let d = classifier.weights.first().map_or(0, |w| w.len() - 1);
    if test.dim() != d {
        return Err(Error::DimensionMismatch(format!(
            "classifier dimension {d}, test dimension {}",
            test.dim()
        )));
    }
    match (metric, classifier.mode) {
        (Metric::Accuracy, ClassifierMode::Multinomial) => {
            let correct = (0..test.len())
                .filter(|&i| test.labels(i).iter().any(|l| l == classifier.predict(test.vector(i))))
                .count();
            Ok(correct as f64 / test.len() as f64)
        }
        (Metric::MeanAveragePrecision, ClassifierMode::PerLabelBinary) => {
            let aps: Vec<f64> = classifier
                .labels
                .par_iter()
                .zip(&classifier.weights)
                .filter_map(|(label, w)| {
                    let scores: Vec<f64> = (0..test.len()).map(|i| linear(w, test.vector(i))).collect();
                    let relevant: Vec<bool> = (0..test.len()).map(|i| test.labels(i).contains(label)).collect();
                    average_precision(&scores, &relevant)
                })
                .collect();
            if aps.is_empty() {
                return Err(Error::MissingLabels("no test entry carries a trained label".into()));
            }
            Ok(aps.iter().sum::<f64>() / aps.len() as f64)
        }
        (metric, mode) => Err(Error::MetricMismatch {
            metric: metric.as_str(),
            mode: mode.as_str(),
        }),
    }
}
