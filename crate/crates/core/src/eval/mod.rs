//! Evaluation: model-quality measures, linear SVM classification with
//! Monte-Carlo cross-validation, a point-distribution-model baseline and
//! discriminating-direction sampling.

pub mod cv;
pub mod metrics;
pub mod path;
pub mod pdm;
pub mod svm;

pub use cv::{accuracy_curve, monte_carlo_cv, CvResult, DEFAULT_DRAWS, DEFAULT_SHARES};
pub use metrics::{
    compactness, compactness_curve, generalization, generalization_curve, metrics_report, specificity, Metric,
    MetricsReport, SpecificityOptions,
};
pub use path::{discriminating_path, PathSample};
pub use pdm::{pdm_coefficients, pdm_fit, pdm_reconstruct, PdmModel};
pub use svm::{train_svm, ClassifierModel};

use crate::error::Result;
use crate::representation::ShapeRep;
use crate::statistics::{coefficients, PgaModel};

pub const DEFAULT_FEATURE_VARIANCE: f64 = 0.99;

/// Smallest mode count whose cumulative variance ratio reaches `fraction`.
pub fn modes_for_variance(variances: &[f64], fraction: f64) -> usize {
    (1..=variances.len())
        .find(|&k| metrics::variance_ratio(variances, k) >= fraction)
        .unwrap_or(variances.len())
}

/// PGA coefficient rows, truncated to the first `modes` entries when given.
pub fn fcm_features(model: &PgaModel, reps: &[ShapeRep], modes: Option<usize>) -> Result<Vec<Vec<f64>>> {
    use rayon::prelude::*;
    let m = model.truncated(modes.unwrap_or(model.mode_count()).min(model.mode_count()));
    reps.par_iter().map(|s| coefficients(&m, s)).collect()
}

/// PDM coefficient rows, truncated like [`fcm_features`].
pub fn pdm_features(
    model: &PdmModel,
    meshes: &[crate::mesh::TriangleMesh],
    modes: Option<usize>,
) -> Result<Vec<Vec<f64>>> {
    use rayon::prelude::*;
    let k = modes.unwrap_or(model.component_count()).min(model.component_count());
    meshes
        .par_iter()
        .map(|m| pdm_coefficients(model, m).map(|mut a| {
            a.truncate(k);
            a
        }))
        .collect()
}
