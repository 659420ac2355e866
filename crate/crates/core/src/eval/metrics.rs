//! Model-quality measures: compactness, specificity and generalization.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::align::aligned_rms;
use crate::error::{FcmError, Result};
use crate::reconstruction::{ReconstructOptions, Reconstructor};
use crate::reference::ReferencePrecomp;
use crate::representation::{rep_distance, DistanceParams, ShapeRep};
use crate::statistics::{coefficients, frechet_mean, pga, sample, synthesize, PgaModel, MEAN_MAX_ITER, MEAN_TOL};

pub const DEFAULT_SAMPLES: usize = 1000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    /// `d_ω` in the shape space.
    Fcm,
    /// Vertex RMS after optimal rigid alignment of reconstructed meshes.
    Vertex,
}

impl std::str::FromStr for Metric {
    type Err = FcmError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fcm" => Ok(Metric::Fcm),
            "vertex" => Ok(Metric::Vertex),
            _ => Err(FcmError::InvalidArgument(format!("unknown metric {s:?}"))),
        }
    }
}

/// `Σ_{p≤k} λₚ / Σ λₚ`, or 1 when every variance is zero.
pub fn compactness(model: &PgaModel, modes: usize) -> Result<f64> {
    if modes > model.mode_count() {
        return Err(FcmError::InvalidArgument(format!(
            "{modes} modes requested from a model with {}",
            model.mode_count()
        )));
    }
    Ok(variance_ratio(&model.variances, modes))
}

pub(crate) fn variance_ratio(variances: &[f64], modes: usize) -> f64 {
    let total: f64 = variances.iter().sum();
    if !(total > 0.0) {
        return 1.0;
    }
    if modes >= variances.len() {
        return 1.0;
    }
    (variances[..modes].iter().sum::<f64>() / total).min(1.0)
}

/// Compactness for `1..=mode_count` modes.
pub fn compactness_curve(model: &PgaModel) -> Vec<f64> {
    (1..=model.mode_count())
        .map(|k| variance_ratio(&model.variances, k))
        .collect()
}

/// Lazily decodes shapes for the vertex metric.
struct Decoder<'a> {
    solver: Reconstructor<'a>,
    opts: ReconstructOptions,
}

impl<'a> Decoder<'a> {
    fn new(reference: &'a ReferencePrecomp, opts: ReconstructOptions) -> Result<Self> {
        Ok(Decoder {
            solver: Reconstructor::new(reference)?,
            opts,
        })
    }

    fn decode(&self, s: &ShapeRep) -> Result<Vec<crate::Point>> {
        Ok(self.solver.solve(s, &self.opts)?.mesh.vertices().to_vec())
    }
}

#[derive(Clone, Debug)]
pub struct SpecificityOptions {
    pub samples: usize,
    pub seed: u64,
    pub metric: Metric,
    pub reconstruct: ReconstructOptions,
}

impl Default for SpecificityOptions {
    fn default() -> Self {
        SpecificityOptions {
            samples: DEFAULT_SAMPLES,
            seed: 0,
            metric: Metric::Fcm,
            reconstruct: ReconstructOptions::default(),
        }
    }
}

/// Mean distance from model samples (first `modes` modes) to the nearest training shape.
pub fn specificity(
    reference: &ReferencePrecomp,
    model: &PgaModel,
    training: &[ShapeRep],
    modes: usize,
    opts: &SpecificityOptions,
) -> Result<f64> {
    if training.is_empty() {
        return Err(FcmError::InvalidArgument("specificity needs a non-empty training set".into()));
    }
    if modes > model.mode_count() {
        return Err(FcmError::InvalidArgument(format!(
            "{modes} modes requested from a model with {}",
            model.mode_count()
        )));
    }
    if opts.samples == 0 {
        return Err(FcmError::InvalidArgument("specificity needs at least one sample".into()));
    }
    let samples = sample(&model.truncated(modes), opts.seed, opts.samples)?;
    let nearest: Vec<f64> = match opts.metric {
        Metric::Fcm => samples
            .par_iter()
            .map(|s| {
                training
                    .iter()
                    .map(|t| rep_distance(reference, s, t, model.params))
                    .try_fold(f64::INFINITY, |m, d| d.map(|d| m.min(d)))
            })
            .collect::<Result<_>>()?,
        Metric::Vertex => {
            let dec = Decoder::new(reference, opts.reconstruct.clone())?;
            let train: Vec<Vec<crate::Point>> =
                training.par_iter().map(|t| dec.decode(t)).collect::<Result<_>>()?;
            samples
                .par_iter()
                .map(|s| {
                    let x = dec.decode(s)?;
                    Ok(train.iter().map(|t| aligned_rms(&x, t)).fold(f64::INFINITY, f64::min))
                })
                .collect::<Result<_>>()?
        }
    };
    Ok(nearest.iter().sum::<f64>() / nearest.len() as f64)
}

/// Per-shape leave-one-out distances for mode counts `1..=max_modes`
/// (`max_modes` defaults to `N − 2`). Row `k − 1` holds the `k`-mode distances.
pub fn generalization_table(
    reference: &ReferencePrecomp,
    reps: &[ShapeRep],
    max_modes: Option<usize>,
    p: DistanceParams,
    metric: Metric,
    opts: &ReconstructOptions,
) -> Result<Vec<Vec<f64>>> {
    let n = reps.len();
    if n < 3 {
        return Err(FcmError::InvalidArgument(format!("generalization needs at least 3 shapes, got {n}")));
    }
    let kmax = max_modes.unwrap_or(n - 2).min(n - 2);
    let dec = match metric {
        Metric::Vertex => Some(Decoder::new(reference, opts.clone())?),
        Metric::Fcm => None,
    };
    let folds: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let rest: Vec<ShapeRep> = reps
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, s)| s.clone())
                .collect();
            let mu = frechet_mean(&rest, MEAN_TOL, MEAN_MAX_ITER)?;
            let model = pga(reference, &rest, &mu, p)?;
            let a = coefficients(&model, &reps[i])?;
            let target = match &dec {
                Some(d) => Some(d.decode(&reps[i])?),
                None => None,
            };
            (1..=kmax)
                .map(|k| {
                    let k = k.min(a.len());
                    let s = synthesize(&model, &a[..k])?;
                    match (&dec, &target) {
                        (Some(d), Some(t)) => Ok(aligned_rms(&d.decode(&s)?, t)),
                        _ => rep_distance(reference, &s, &reps[i], p),
                    }
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    Ok((0..kmax).map(|k| folds.iter().map(|f| f[k]).collect()).collect())
}

pub fn generalization_curve(
    reference: &ReferencePrecomp,
    reps: &[ShapeRep],
    max_modes: Option<usize>,
    p: DistanceParams,
    metric: Metric,
    opts: &ReconstructOptions,
) -> Result<Vec<f64>> {
    Ok(generalization_table(reference, reps, max_modes, p, metric, opts)?
        .iter()
        .map(|row| row.iter().sum::<f64>() / row.len() as f64)
        .collect())
}

/// Mean leave-one-out reconstruction distance with `modes` modes.
pub fn generalization(
    reference: &ReferencePrecomp,
    reps: &[ShapeRep],
    modes: usize,
    p: DistanceParams,
    metric: Metric,
    opts: &ReconstructOptions,
) -> Result<f64> {
    if modes == 0 || modes + 2 > reps.len() {
        return Err(FcmError::InvalidArgument(format!(
            "mode count {modes} outside 1..={}",
            reps.len().saturating_sub(2)
        )));
    }
    Ok(*generalization_curve(reference, reps, Some(modes), p, metric, opts)?
        .last()
        .unwrap())
}

#[derive(Clone, Debug, Serialize)]
pub struct MetricsReport {
    pub metric: Metric,
    pub omega: f64,
    pub modes: Vec<usize>,
    pub compactness: Vec<f64>,
    pub specificity: Vec<f64>,
    /// Shorter than `modes` when leave-one-out folds have fewer modes.
    pub generalization: Vec<f64>,
}

/// All three measures for mode counts `1..=max_modes`.
pub fn metrics_report(
    reference: &ReferencePrecomp,
    model: &PgaModel,
    training: &[ShapeRep],
    max_modes: usize,
    spec: &SpecificityOptions,
) -> Result<MetricsReport> {
    let kmax = max_modes.min(model.mode_count());
    let modes: Vec<usize> = (1..=kmax).collect();
    let compactness = modes.iter().map(|&k| variance_ratio(&model.variances, k)).collect();
    let specificity = modes
        .iter()
        .map(|&k| specificity(reference, model, training, k, spec))
        .collect::<Result<_>>()?;
    let generalization = if training.len() >= 3 {
        generalization_curve(
            reference,
            training,
            Some(kmax),
            model.params,
            spec.metric,
            &spec.reconstruct,
        )?
    } else {
        Vec::new()
    };
    Ok(MetricsReport {
        metric: spec.metric,
        omega: model.params.omega(),
        modes,
        compactness,
        specificity,
        generalization,
    })
}
