//! Multinomial logistic regression trained by minibatch gradient descent on
//! softmax cross-entropy with an L2 penalty.

use ndarray::{Array1, Array2, Axis};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::metrics::auroc_macro;
use crate::rng::{derive_seed, stream, StreamKind};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LogRegConfig {
    pub l2: f64,
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for LogRegConfig {
    fn default() -> Self {
        Self {
            l2: 1e-3,
            epochs: 100,
            learning_rate: 0.5,
            batch_size: 32,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogisticRegression {
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
}

fn softmax_rows(mut logits: Array2<f64>) -> Array2<f64> {
    for mut row in logits.rows_mut() {
        let max = row.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        row.mapv_inplace(|v| (v - max).exp());
        let sum = row.sum();
        row /= sum;
    }
    logits
}

impl LogisticRegression {
    pub fn n_classes(&self) -> usize {
        self.bias.len()
    }

    /// Class probabilities, one row per sample.
    pub fn predict_proba(&self, features: &Array2<f64>) -> Result<Array2<f64>> {
        if features.ncols() != self.weights.nrows() {
            return Err(Error::Input(format!(
                "classifier expects {} features, got {}",
                self.weights.nrows(),
                features.ncols()
            )));
        }
        Ok(softmax_rows(features.dot(&self.weights) + &self.bias))
    }

    pub fn predict(&self, features: &Array2<f64>) -> Result<Vec<usize>> {
        let p = self.predict_proba(features)?;
        Ok(p.rows()
            .into_iter()
            .map(|r| {
                r.iter()
                    .enumerate()
                    .max_by(|a, b| a.1.total_cmp(b.1))
                    .map(|(k, _)| k)
                    .unwrap()
            })
            .collect())
    }
}

/// Fits a classifier over `n_classes` classes from zero-initialized weights.
pub fn train_logreg(
    features: &Array2<f64>,
    labels: &[usize],
    n_classes: usize,
    config: &LogRegConfig,
) -> Result<LogisticRegression> {
    let (n, p) = features.dim();
    if labels.len() != n {
        return Err(Error::Input(format!("{} labels for {n} rows", labels.len())));
    }
    if features.iter().any(|v| !v.is_finite()) {
        return Err(Error::Input("features contain non-finite values".into()));
    }
    if let Some(&bad) = labels.iter().find(|&&l| l >= n_classes) {
        return Err(Error::Input(format!(
            "label {bad} out of range for {n_classes} classes"
        )));
    }
    let mut present = labels.to_vec();
    present.sort_unstable();
    present.dedup();
    if present.len() < 2 {
        return Err(Error::Config("logistic regression needs at least two classes".into()));
    }
    if config.batch_size == 0 {
        return Err(Error::Config("batch size must be at least 1".into()));
    }

    let mut model = LogisticRegression {
        weights: Array2::zeros((p, n_classes)),
        bias: Array1::zeros(n_classes),
    };
    let mut rng = stream(config.seed, StreamKind::Batch);
    let mut order: Vec<usize> = (0..n).collect();
    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(config.batch_size) {
            let x = features.select(Axis(0), chunk);
            let mut delta = softmax_rows(x.dot(&model.weights) + &model.bias);
            for (r, &i) in chunk.iter().enumerate() {
                delta[[r, labels[i]]] -= 1.0;
            }
            let scale = 1.0 / chunk.len() as f64;
            let grad_w = x.t().dot(&delta) * scale + &model.weights * config.l2;
            let grad_b = delta.sum_axis(Axis(0)) * scale;
            model.weights.scaled_add(-config.learning_rate, &grad_w);
            model.bias.scaled_add(-config.learning_rate, &grad_b);
        }
    }
    Ok(model)
}

/// Stratified k-fold cross-validated macro AUROC, averaged over folds.
pub fn cross_validated_auroc(
    features: &Array2<f64>,
    labels: &[usize],
    n_classes: usize,
    folds: usize,
    config: &LogRegConfig,
) -> Result<f64> {
    if folds < 2 {
        return Err(Error::Config("cross-validation needs at least 2 folds".into()));
    }
    let mut rng = stream(derive_seed(config.seed, &[folds as u64]), StreamKind::Mask);
    let mut assignment = vec![0usize; labels.len()];
    let mut next = 0;
    for class in 0..n_classes {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        members.shuffle(&mut rng);
        for i in members {
            assignment[i] = next % folds;
            next += 1;
        }
    }
    let mut total = 0.0;
    for fold in 0..folds {
        let train: Vec<usize> = (0..labels.len()).filter(|&i| assignment[i] != fold).collect();
        let test: Vec<usize> = (0..labels.len()).filter(|&i| assignment[i] == fold).collect();
        let train_labels: Vec<usize> = train.iter().map(|&i| labels[i]).collect();
        let test_labels: Vec<usize> = test.iter().map(|&i| labels[i]).collect();
        let model = train_logreg(&features.select(Axis(0), &train), &train_labels, n_classes, config)?;
        let scores = model.predict_proba(&features.select(Axis(0), &test))?;
        total += auroc_macro(scores.view(), &test_labels)?;
    }
    Ok(total / folds as f64)
}
