//! Histogram of relative transition-rotation angles. Values close to π
//! would signal that geodesics may cross the cut locus of SO(3).

use fcm::representation::{angle_histogram, relative_rotation_angles};
use fcm::synthetic::{pipe, Centerline};
use fcm::{build_reference, encode};

fn main() -> fcm::Result<()> {
    let straight = pipe(Centerline::Straight);
    let reference = build_reference(straight.clone())?;
    let (a, _) = encode(&reference, &straight)?;
    let (b, _) = encode(&reference, &pipe(Centerline::Helix))?;
    let angles = relative_rotation_angles(&a, &b)?;
    let max = angles.iter().copied().fold(0.0, f64::max);
    let bins = angle_histogram(&angles, 12);
    let peak = bins.iter().map(|b| b.count).max().unwrap_or(1).max(1);
    for bin in &bins {
        let bar = "#".repeat(40 * bin.count / peak);
        println!("[{:.2}, {:.2}) {:>5} {bar}", bin.lo, bin.hi, bin.count);
    }
    println!("max {max:.4} rad, π = {:.4}", std::f64::consts::PI);
    Ok(())
}
