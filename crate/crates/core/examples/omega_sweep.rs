//! Effect of the weight ω on the distance and on the share of variance
//! carried by the first mode.

use fcm::statistics::{frechet_mean, pga, MEAN_MAX_ITER, MEAN_TOL};
use fcm::synthetic::{ellipsoid_families, CohortParams};
use fcm::{build_reference, encode, rep_distance, DistanceParams, ShapeRep};

fn main() -> fcm::Result<()> {
    let params = CohortParams {
        freq: 4,
        per_family: 8,
        ..CohortParams::default()
    };
    let cohort = ellipsoid_families(&params, 1);
    let reference = build_reference(cohort.template.clone())?;
    let reps: Vec<ShapeRep> = cohort
        .meshes
        .iter()
        .map(|m| encode(&reference, m).map(|e| e.0))
        .collect::<fcm::Result<_>>()?;
    let mu = frechet_mean(&reps, MEAN_TOL, MEAN_MAX_ITER)?;
    println!("omega  d(s0, s1)  first-mode share");
    for omega in [0.1, 1.0, 10.0, 100.0] {
        let p = DistanceParams::new(omega)?;
        let model = pga(&reference, &reps, &mu, p)?;
        let share = model.variances[0] / model.variances.iter().sum::<f64>();
        println!("{omega:>5}  {:>9.4}  {share:>16.3}", rep_distance(&reference, &reps[0], &reps[1], p)?);
    }
    Ok(())
}
