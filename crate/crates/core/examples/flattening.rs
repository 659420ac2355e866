//! Near-isometric flattening of a developable cylinder and a hemisphere,
//! compared against orthogonal projection.

use fcm::flatten::{flatten, planar_distortion, vertical_projection};
use fcm::synthetic;
use fcm::{build_reference, ReconstructOptions};

fn main() -> fcm::Result<()> {
    let opts = ReconstructOptions::default();
    let cylinder = build_reference(synthetic::open_cylinder(32, 10, 1.0, 2.0))?;
    let f = flatten(&cylinder, &opts)?;
    println!(
        "cylinder: max edge distortion {:.2e}, planarity {:.2e}",
        f.report.max_edge_distortion, f.report.planarity_residual
    );

    let hemisphere = build_reference(synthetic::hemisphere_patch(10, 1.0, std::f64::consts::FRAC_PI_2))?;
    let f = flatten(&hemisphere, &opts)?;
    let naive = planar_distortion(hemisphere.mesh(), &vertical_projection(&hemisphere));
    println!(
        "hemisphere: mean edge distortion {:.4} (projection {:.4}), max {:.4} (projection {:.4})",
        f.report.mean_edge_distortion,
        naive.mean_edge(),
        f.report.max_edge_distortion,
        naive.max_edge()
    );
    let path = std::env::temp_dir().join("fcm_hemisphere_flat.obj");
    fcm::save_mesh(&f.mesh, &path)?;
    println!("planar layout -> {}", path.display());
    Ok(())
}
