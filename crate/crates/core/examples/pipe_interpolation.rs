//! Geodesic interpolation between a straight and a helical pipe. Large
//! rotational differences are carried by the transition rotations, so the
//! intermediate shapes remain valid embeddings.

use fcm::representation::relative_rotation_angles;
use fcm::synthetic::{pipe, Centerline};
use fcm::{build_reference, encode, geodesic, ReconstructOptions, Reconstructor};

fn main() -> fcm::Result<()> {
    let straight = pipe(Centerline::Straight);
    let helix = pipe(Centerline::Helix);
    let reference = build_reference(straight.clone())?;
    let (a, _) = encode(&reference, &straight)?;
    let (b, _) = encode(&reference, &helix)?;
    let max_angle = relative_rotation_angles(&a, &b)?.into_iter().fold(0.0, f64::max);
    println!("max relative transition angle: {max_angle:.4} rad");

    let solver = Reconstructor::new(&reference)?;
    let out = std::env::temp_dir().join("fcm_pipe_interpolation");
    std::fs::create_dir_all(&out)?;
    for k in 0..=4 {
        let lambda = k as f64 / 4.0;
        let rec = solver.solve(&geodesic(&a, &b, lambda)?, &ReconstructOptions::default())?;
        let min_area = (0..rec.mesh.triangle_count())
            .map(|t| rec.mesh.triangle_area(t))
            .fold(f64::INFINITY, f64::min);
        let path = out.join(format!("pipe_{k}.obj"));
        fcm::save_mesh(&rec.mesh, &path)?;
        println!("λ = {lambda:.2}: {} iterations, min area {min_area:.3e} -> {}", rec.report.iterations, path.display());
    }
    Ok(())
}
