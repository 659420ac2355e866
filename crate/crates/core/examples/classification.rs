//! Linear SVM on PGA coefficients versus point-distribution-model
//! coefficients, and shapes sampled along the discriminating direction.

use fcm::eval::{
    accuracy_curve, discriminating_path, fcm_features, modes_for_variance, pdm_features, pdm_fit, train_svm,
    DEFAULT_FEATURE_VARIANCE, DEFAULT_SHARES,
};
use fcm::statistics::{frechet_mean, pga, MEAN_MAX_ITER, MEAN_TOL};
use fcm::synthetic::{ellipsoid_families, CohortParams};
use fcm::{build_reference, encode, DistanceParams, ReconstructOptions, ShapeRep};

fn main() -> fcm::Result<()> {
    let params = CohortParams {
        freq: 5,
        per_family: 30,
        ..CohortParams::default()
    };
    let cohort = ellipsoid_families(&params, 42);
    let reference = build_reference(cohort.template.clone())?;
    let reps: Vec<ShapeRep> = cohort
        .meshes
        .iter()
        .map(|m| encode(&reference, m).map(|e| e.0))
        .collect::<fcm::Result<_>>()?;
    let mu = frechet_mean(&reps, MEAN_TOL, MEAN_MAX_ITER)?;
    let model = pga(&reference, &reps, &mu, DistanceParams::default())?;
    let pdm = pdm_fit(&cohort.meshes)?;

    let k_fcm = modes_for_variance(&model.variances, DEFAULT_FEATURE_VARIANCE);
    let k_pdm = modes_for_variance(&pdm.variances, DEFAULT_FEATURE_VARIANCE);
    let x_fcm = fcm_features(&model, &reps, Some(k_fcm))?;
    let x_pdm = pdm_features(&pdm, &cohort.meshes, Some(k_pdm))?;
    let a = accuracy_curve(&x_fcm, &cohort.labels, &DEFAULT_SHARES, 100, 1.0, 0)?;
    let b = accuracy_curve(&x_pdm, &cohort.labels, &DEFAULT_SHARES, 100, 1.0, 0)?;
    println!("features: {k_fcm} FCM modes, {k_pdm} PDM modes");
    println!("share  fcm            pdm");
    for (x, y) in a.iter().zip(&b) {
        println!("{:.1}    {:.3} ± {:.3}  {:.3} ± {:.3}", x.share, x.mean, x.std, y.mean, y.std);
    }

    let clf = train_svm(&x_fcm, &cohort.labels, 1.0)?;
    let reach = x_fcm.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    let path = discriminating_path(
        &reference,
        &model.truncated(k_fcm),
        &clf,
        5,
        [-reach, reach],
        &ReconstructOptions::default(),
    )?;
    for p in &path {
        println!("c = {:+.3}: decision {:+.3}, label {:+}", p.position, p.decision, p.label);
    }
    Ok(())
}
