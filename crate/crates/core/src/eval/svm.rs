//! Linear soft-margin SVM trained by deterministic full-batch primal subgradient descent.
//!
//! Objective on standardized features: `(λ/2)‖w‖² + (1/n) Σ max(0, 1 − yᵢ(w·xᵢ + b))`
//! with `λ = 1/C`. The bias is not regularized.

use serde::{Deserialize, Serialize};

use crate::error::{FcmError, Result};

pub const DEFAULT_REG: f64 = 1.0;
pub const DEFAULT_ITERATIONS: usize = 400;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassifierModel {
    /// Weights on standardized features.
    pub weights: Vec<f64>,
    pub bias: f64,
    /// Regularization parameter `C`.
    pub reg: f64,
    pub feature_mean: Vec<f64>,
    pub feature_scale: Vec<f64>,
}

impl ClassifierModel {
    pub fn decision(&self, x: &[f64]) -> f64 {
        self.bias
            + x.iter()
                .zip(&self.feature_mean)
                .zip(&self.feature_scale)
                .zip(&self.weights)
                .map(|(((x, m), s), w)| w * (x - m) / s)
                .sum::<f64>()
    }

    pub fn predict(&self, x: &[f64]) -> i8 {
        if self.decision(x) >= 0.0 {
            1
        } else {
            -1
        }
    }

    pub fn accuracy(&self, features: &[Vec<f64>], labels: &[i8]) -> f64 {
        let hits = features
            .iter()
            .zip(labels)
            .filter(|(x, &y)| self.predict(x) == y)
            .count();
        hits as f64 / features.len().max(1) as f64
    }

    /// Discriminating direction `η` in the original (unstandardized) feature space.
    pub fn direction(&self) -> Vec<f64> {
        self.weights
            .iter()
            .zip(&self.feature_scale)
            .map(|(w, s)| w / s)
            .collect()
    }
}

pub fn train_svm(features: &[Vec<f64>], labels: &[i8], reg: f64) -> Result<ClassifierModel> {
    train_svm_with(features, labels, reg, DEFAULT_ITERATIONS)
}

pub fn train_svm_with(
    features: &[Vec<f64>],
    labels: &[i8],
    reg: f64,
    iterations: usize,
) -> Result<ClassifierModel> {
    if features.len() != labels.len() || features.is_empty() {
        return Err(FcmError::InvalidArgument("features and labels must be non-empty and aligned".into()));
    }
    if !(reg > 0.0) {
        return Err(FcmError::InvalidArgument(format!("regularization must be positive, got {reg}")));
    }
    if labels.iter().any(|&y| y != 1 && y != -1) {
        return Err(FcmError::InvalidArgument("labels must be ±1".into()));
    }
    if labels.iter().all(|&y| y == labels[0]) {
        return Err(FcmError::InvalidArgument("training data contains a single class".into()));
    }
    let n = features.len();
    let d = features[0].len();
    if features.iter().any(|x| x.len() != d) {
        return Err(FcmError::InvalidArgument("feature rows have different lengths".into()));
    }
    let mut mean = vec![0.0; d];
    for x in features {
        for (m, v) in mean.iter_mut().zip(x) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let mut scale = vec![0.0; d];
    for x in features {
        for ((s, v), m) in scale.iter_mut().zip(x).zip(&mean) {
            *s += (v - m) * (v - m);
        }
    }
    for s in &mut scale {
        *s = (*s / n as f64).sqrt();
        if !(*s > 1e-300) {
            *s = 1.0;
        }
    }
    let z: Vec<Vec<f64>> = features
        .iter()
        .map(|x| x.iter().zip(&mean).zip(&scale).map(|((v, m), s)| (v - m) / s).collect())
        .collect();
    let y: Vec<f64> = labels.iter().map(|&l| l as f64).collect();
    let lambda = 1.0 / reg;
    let mut w = vec![0.0; d];
    let mut b = 0.0;
    let mut w_avg = vec![0.0; d];
    let mut b_avg = 0.0;
    let mut averaged = 0usize;
    let mut grad = vec![0.0; d];
    for t in 1..=iterations {
        grad.iter_mut().zip(&w).for_each(|(g, wk)| *g = lambda * wk);
        let mut gb = 0.0;
        for (zi, yi) in z.iter().zip(&y) {
            let margin = yi * (b + zi.iter().zip(&w).map(|(a, c)| a * c).sum::<f64>());
            if margin < 1.0 {
                for (g, a) in grad.iter_mut().zip(zi) {
                    *g -= yi * a / n as f64;
                }
                gb -= yi / n as f64;
            }
        }
        let step = 1.0 / (lambda * t as f64);
        for (wk, g) in w.iter_mut().zip(&grad) {
            *wk -= step * g;
        }
        b -= step * gb;
        // Pegasos projection onto the ball containing the optimum
        let norm = w.iter().map(|v| v * v).sum::<f64>().sqrt();
        let radius = 1.0 / lambda.sqrt();
        if norm > radius {
            w.iter_mut().for_each(|v| *v *= radius / norm);
        }
        if 2 * t > iterations {
            averaged += 1;
            w_avg.iter_mut().zip(&w).for_each(|(a, v)| *a += v);
            b_avg += b;
        }
    }
    let k = averaged.max(1) as f64;
    Ok(ClassifierModel {
        weights: w_avg.into_iter().map(|v| v / k).collect(),
        bias: b_avg / k,
        reg,
        feature_mean: mean,
        feature_scale: scale,
    })
}
