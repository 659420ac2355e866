//! Rigid (Kabsch) alignment of corresponding point sets.

use crate::lie::{procrustes_rotation, Mat3};
use crate::mesh::Point;

/// Rotation `R` and translation `t` minimizing `Σ ‖R·sₖ + t − dₖ‖²`.
pub fn kabsch(source: &[Point], target: &[Point]) -> (Mat3, Point) {
    assert_eq!(source.len(), target.len());
    let n = source.len() as f64;
    let cs = source.iter().sum::<Point>() / n;
    let ct = target.iter().sum::<Point>() / n;
    let h = source
        .iter()
        .zip(target)
        .fold(Mat3::zeros(), |acc, (s, d)| acc + (d - ct) * (s - cs).transpose());
    let r = procrustes_rotation(&h).unwrap_or_else(|_| Mat3::identity());
    (r, ct - r * cs)
}

pub fn align_to(source: &[Point], target: &[Point]) -> Vec<Point> {
    let (r, t) = kabsch(source, target);
    source.iter().map(|p| r * p + t).collect()
}

/// Vertex RMS after optimal rigid alignment of `a` onto `b`.
pub fn aligned_rms(a: &[Point], b: &[Point]) -> f64 {
    let moved = align_to(a, b);
    let sum: f64 = moved.iter().zip(b).map(|(p, q)| (p - q).norm_squared()).sum();
    (sum / a.len() as f64).sqrt()
}
