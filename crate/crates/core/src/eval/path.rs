//! Shapes sampled along the classifier's discriminating direction.

use crate::error::{FcmError, Result};
use crate::mesh::TriangleMesh;
use crate::reconstruction::{ReconstructOptions, Reconstructor};
use crate::reference::ReferencePrecomp;
use crate::representation::ShapeRep;
use crate::statistics::{synthesize, PgaModel};

use super::svm::ClassifierModel;

#[derive(Clone, Debug)]
pub struct PathSample {
    /// Signed position along the unit direction `η̂`.
    pub position: f64,
    pub coefficients: Vec<f64>,
    pub decision: f64,
    pub label: i8,
    pub rep: ShapeRep,
    pub mesh: TriangleMesh,
}

/// Unit discriminating direction in coefficient space.
pub fn unit_direction(clf: &ClassifierModel) -> Result<Vec<f64>> {
    let eta = clf.direction();
    let norm = eta.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(FcmError::InvalidArgument("classifier direction is zero".into()));
    }
    Ok(eta.iter().map(|v| v / norm).collect())
}

/// `steps` shapes at `c·η̂` for `c` equidistant in `range`, each synthesized and reconstructed.
pub fn discriminating_path(
    reference: &ReferencePrecomp,
    model: &PgaModel,
    clf: &ClassifierModel,
    steps: usize,
    range: [f64; 2],
    opts: &ReconstructOptions,
) -> Result<Vec<PathSample>> {
    if steps == 0 {
        return Err(FcmError::InvalidArgument("path needs at least one step".into()));
    }
    let dir = unit_direction(clf)?;
    if dir.len() > model.mode_count() {
        return Err(FcmError::InvalidArgument(format!(
            "classifier has {} features, model has {} modes",
            dir.len(),
            model.mode_count()
        )));
    }
    let solver = Reconstructor::new(reference)?;
    (0..steps)
        .map(|k| {
            let c = if steps == 1 {
                range[0]
            } else {
                range[0] + (range[1] - range[0]) * k as f64 / (steps - 1) as f64
            };
            let a: Vec<f64> = dir.iter().map(|d| c * d).collect();
            let rep = synthesize(model, &a)?;
            let mesh = solver.solve(&rep, opts)?.mesh;
            Ok(PathSample {
                position: c,
                decision: clf.decision(&a),
                label: clf.predict(&a),
                coefficients: a,
                rep,
                mesh,
            })
        })
        .collect()
}
