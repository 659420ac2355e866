//! Fréchet mean and principal geodesic analysis of a small cohort, with
//! exact reconstruction of a training shape from its coefficients.

use fcm::statistics::{coefficients, frechet_mean_detailed, pga, synthesize, MEAN_MAX_ITER, MEAN_TOL};
use fcm::synthetic::{ellipsoid_families, CohortParams};
use fcm::{build_reference, encode, rep_distance, DistanceParams, ShapeRep};

fn main() -> fcm::Result<()> {
    let params = CohortParams {
        freq: 4,
        per_family: 10,
        ..CohortParams::default()
    };
    let cohort = ellipsoid_families(&params, 3);
    let reference = build_reference(cohort.template.clone())?;
    let reps: Vec<ShapeRep> = cohort
        .meshes
        .iter()
        .map(|m| encode(&reference, m).map(|e| e.0))
        .collect::<fcm::Result<_>>()?;

    let mean = frechet_mean_detailed(&reps, MEAN_TOL, MEAN_MAX_ITER)?;
    println!("mean after {} iterations, residual {:.2e}", mean.iterations, mean.residual);
    let p = DistanceParams::default();
    let model = pga(&reference, &reps, &mean.mean, p)?;
    let total: f64 = model.variances.iter().sum();
    for (k, v) in model.variances.iter().take(5).enumerate() {
        println!("mode {}: variance {v:.4e} ({:.1}%)", k + 1, 100.0 * v / total);
    }

    let a = coefficients(&model, &reps[4])?;
    let back = synthesize(&model, &a)?;
    println!(
        "training shape 4 from {} coefficients: d = {:.2e}",
        a.len(),
        rep_distance(&reference, &back, &reps[4], p)?
    );
    Ok(())
}
