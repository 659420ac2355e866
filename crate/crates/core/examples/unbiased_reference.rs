//! Re-center the reference on the cohort mean so that the encoding is not
//! biased towards an arbitrary template.

use fcm::representation::identity_rep;
use fcm::statistics::unbiased_reference;
use fcm::synthetic::{ellipsoid_families, CohortParams};
use fcm::{rep_distance, DistanceParams, ReconstructOptions};

fn main() -> fcm::Result<()> {
    let params = CohortParams {
        freq: 4,
        per_family: 6,
        ..CohortParams::default()
    };
    let cohort = ellipsoid_families(&params, 9);
    let p = DistanceParams::default();
    for rounds in 0..=2 {
        let r = unbiased_reference(&cohort.template, &cohort.meshes, rounds, &ReconstructOptions::default())?;
        let offset = rep_distance(&r.reference, &identity_rep(&r.reference), &r.mean, p)?;
        println!("{rounds} rounds: distance from reference to mean {offset:.4e}");
    }
    Ok(())
}
