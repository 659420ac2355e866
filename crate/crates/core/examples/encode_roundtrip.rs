//! Encode a deformed ellipsoid against its undeformed reference, check rigid
//! invariance and decode it again.

use fcm::align::aligned_rms;
use fcm::synthetic;
use fcm::{build_reference, encode, rep_distance, DistanceParams, ReconstructOptions, Reconstructor};

fn main() -> fcm::Result<()> {
    let reference = build_reference(synthetic::ellipsoid(6, [1.0, 0.6, 0.4]))?;
    let shape = synthetic::smooth_deformation(reference.mesh(), 0.08, 7);
    let (rep, _) = encode(&reference, &shape)?;
    println!(
        "{} triangles, {} transition rotations, {} stretches",
        reference.triangle_count(),
        rep.rotations.len(),
        rep.stretches.len()
    );

    let mut rng = synthetic::rng(1);
    let (r, t) = synthetic::random_rigid_motion(&mut rng, 5.0);
    let (moved, _) = encode(&reference, &synthetic::rigidly_moved(&shape, &r, &t))?;
    println!(
        "distance to rigidly moved copy: {:.3e}",
        rep_distance(&reference, &rep, &moved, DistanceParams::default())?
    );

    let rec = Reconstructor::new(&reference)?.solve(&rep, &ReconstructOptions::default())?;
    println!(
        "reconstructed in {} iterations, aligned RMS / diagonal = {:.3e}",
        rec.report.iterations,
        aligned_rms(rec.mesh.vertices(), shape.vertices()) / shape.bbox_diagonal()
    );
    Ok(())
}
