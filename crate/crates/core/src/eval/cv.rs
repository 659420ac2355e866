//! Class-balanced Monte-Carlo cross-validation.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::svm::{train_svm, ClassifierModel};
use crate::error::{FcmError, Result};

pub const DEFAULT_DRAWS: usize = 200;
pub const DEFAULT_SHARES: [f64; 9] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9];

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CvResult {
    pub share: f64,
    pub mean: f64,
    /// Sample standard deviation over draws.
    pub std: f64,
    pub accuracies: Vec<f64>,
}

fn draw_seed(seed: u64, draw: usize) -> u64 {
    seed ^ (draw as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Training-set size per class for a given share.
fn per_class(share: f64, n_class: usize) -> Result<usize> {
    let k = (share * n_class as f64).round() as usize;
    if n_class < 2 {
        return Err(FcmError::InvalidArgument(format!(
            "class with {n_class} samples cannot be split"
        )));
    }
    Ok(k.clamp(1, n_class - 1))
}

pub fn monte_carlo_cv(
    features: &[Vec<f64>],
    labels: &[i8],
    train_share: f64,
    draws: usize,
    reg: f64,
    seed: u64,
) -> Result<CvResult> {
    monte_carlo_cv_with(features, labels, train_share, draws, seed, |x, y| train_svm(x, y, reg))
}

/// Cross-validation with an arbitrary trainer.
pub fn monte_carlo_cv_with<F>(
    features: &[Vec<f64>],
    labels: &[i8],
    train_share: f64,
    draws: usize,
    seed: u64,
    train: F,
) -> Result<CvResult>
where
    F: Fn(&[Vec<f64>], &[i8]) -> Result<ClassifierModel> + Sync,
{
    if !(train_share > 0.0 && train_share < 1.0) {
        return Err(FcmError::InvalidArgument(format!(
            "train share must lie in (0, 1), got {train_share}"
        )));
    }
    if draws == 0 || features.len() != labels.len() {
        return Err(FcmError::InvalidArgument("need at least one draw and aligned labels".into()));
    }
    let pos: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] > 0).collect();
    let neg: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] <= 0).collect();
    let (kp, kn) = (per_class(train_share, pos.len())?, per_class(train_share, neg.len())?);
    let accuracies: Vec<f64> = (0..draws)
        .into_par_iter()
        .map(|draw| {
            let mut rng = ChaCha8Rng::seed_from_u64(draw_seed(seed, draw));
            let mut p = pos.clone();
            let mut q = neg.clone();
            p.shuffle(&mut rng);
            q.shuffle(&mut rng);
            let train_idx: Vec<usize> = p[..kp].iter().chain(&q[..kn]).copied().collect();
            let test_idx: Vec<usize> = p[kp..].iter().chain(&q[kn..]).copied().collect();
            let tx: Vec<Vec<f64>> = train_idx.iter().map(|&i| features[i].clone()).collect();
            let ty: Vec<i8> = train_idx.iter().map(|&i| labels[i]).collect();
            let model = train(&tx, &ty)?;
            let hits = test_idx
                .iter()
                .filter(|&&i| model.predict(&features[i]) == labels[i])
                .count();
            Ok(hits as f64 / test_idx.len() as f64)
        })
        .collect::<Result<_>>()?;
    let n = accuracies.len() as f64;
    let mean = accuracies.iter().sum::<f64>() / n;
    let var = if accuracies.len() > 1 {
        accuracies.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    Ok(CvResult {
        share: train_share,
        mean,
        std: var.sqrt(),
        accuracies,
    })
}

pub fn accuracy_curve(
    features: &[Vec<f64>],
    labels: &[i8],
    shares: &[f64],
    draws: usize,
    reg: f64,
    seed: u64,
) -> Result<Vec<CvResult>> {
    shares
        .iter()
        .map(|&s| monte_carlo_cv(features, labels, s, draws, reg, seed))
        .collect()
}
