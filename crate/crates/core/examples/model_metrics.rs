//! Compactness, specificity and generalization of a PGA model.

use fcm::eval::{metrics_report, SpecificityOptions};
use fcm::statistics::{frechet_mean, pga, MEAN_MAX_ITER, MEAN_TOL};
use fcm::synthetic::{ellipsoid_families, CohortParams};
use fcm::{build_reference, encode, DistanceParams, ShapeRep};

fn main() -> fcm::Result<()> {
    let params = CohortParams {
        freq: 4,
        per_family: 8,
        ..CohortParams::default()
    };
    let cohort = ellipsoid_families(&params, 5);
    let reference = build_reference(cohort.template.clone())?;
    let reps: Vec<ShapeRep> = cohort
        .meshes
        .iter()
        .map(|m| encode(&reference, m).map(|e| e.0))
        .collect::<fcm::Result<_>>()?;
    let mu = frechet_mean(&reps, MEAN_TOL, MEAN_MAX_ITER)?;
    let model = pga(&reference, &reps, &mu, DistanceParams::default())?;
    let opts = SpecificityOptions {
        samples: 200,
        ..SpecificityOptions::default()
    };
    let report = metrics_report(&reference, &model, &reps, 6, &opts)?;
    println!("modes  compactness  specificity  generalization");
    for (i, k) in report.modes.iter().enumerate() {
        println!(
            "{k:>5}  {:>11.4}  {:>11.4}  {:>14.4}",
            report.compactness[i], report.specificity[i], report.generalization[i]
        );
    }
    Ok(())
}
