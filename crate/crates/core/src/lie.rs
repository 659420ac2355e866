//! Closed-form kernels on SO(3), the log-Euclidean group of 2×2 SPD matrices,
//! and 3×3 polar decomposition / orthogonal Procrustes.
//!
//! Rotations are plain `Matrix3<f64>` values, tangent vectors of SO(3) are the
//! axis-angle vectors `ξ` whose hat matrix has Frobenius norm `√2·|ξ|`.

use nalgebra::{Matrix2, Matrix3, Vector3};

use crate::error::{FcmError, Result};

pub type Mat3 = Matrix3<f64>;
pub type Mat2 = Matrix2<f64>;
pub type Vec3 = Vector3<f64>;

/// Below this angle `so3_exp`/`so3_log` switch to Taylor expansions.
const TAYLOR_ANGLE: f64 = 1e-8;
/// Above `π − NEAR_PI` the log axis is recovered from the symmetric part.
const NEAR_PI: f64 = 1e-3;
/// Angles closer than this to π are rejected by `so3_log`.
const CUT_LOCUS_MARGIN: f64 = 1e-12;

pub fn hat(v: &Vec3) -> Mat3 {
    Mat3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// Axial vector of the skew part, `vee((M − Mᵀ)/2)`.
pub fn vee_skew(m: &Mat3) -> Vec3 {
    Vec3::new(
        0.5 * (m[(2, 1)] - m[(1, 2)]),
        0.5 * (m[(0, 2)] - m[(2, 0)]),
        0.5 * (m[(1, 0)] - m[(0, 1)]),
    )
}

/// Rodrigues' formula.
pub fn so3_exp(xi: &Vec3) -> Mat3 {
    let theta2 = xi.norm_squared();
    let theta = theta2.sqrt();
    let k = hat(xi);
    let (a, b) = if theta < TAYLOR_ANGLE {
        (1.0 - theta2 / 6.0, 0.5 - theta2 / 24.0)
    } else {
        (theta.sin() / theta, (1.0 - theta.cos()) / theta2)
    };
    Mat3::identity() + k * a + k * k * b
}

/// Rotation angle in `[0, π]`; never fails.
pub fn rotation_angle(r: &Mat3) -> f64 {
    let s = vee_skew(r).norm();
    let c = 0.5 * (r.trace() - 1.0);
    s.atan2(c)
}

/// Principal logarithm. Fails at the cut locus (angle within `1e-12` of π).
pub fn so3_log(r: &Mat3) -> Result<Vec3> {
    let w = vee_skew(r);
    let s = w.norm();
    let c = 0.5 * (r.trace() - 1.0);
    let theta = s.atan2(c);
    if theta >= std::f64::consts::PI - CUT_LOCUS_MARGIN {
        return Err(FcmError::CutLocus { angle: theta });
    }
    if theta < TAYLOR_ANGLE {
        return Ok(w * (1.0 + theta * theta / 6.0));
    }
    if theta > std::f64::consts::PI - NEAR_PI {
        // (R + Rᵀ)/2 − cos θ·I = (1 − cos θ)·a·aᵀ
        let b = (r + r.transpose()) * 0.5 - Mat3::identity() * c;
        let mut col = 0;
        for k in 1..3 {
            if b[(k, k)] > b[(col, col)] {
                col = k;
            }
        }
        let mut axis: Vec3 = b.column(col).into_owned();
        axis /= axis.norm();
        if axis.dot(&w) < 0.0 {
            axis = -axis;
        }
        return Ok(axis * theta);
    }
    Ok(w * (theta / s))
}

/// Bi-invariant distance `‖log(QᵀR)‖_F = √2·θ`.
pub fn so3_distance(q: &Mat3, r: &Mat3) -> Result<f64> {
    let rel = q.transpose() * r;
    let theta = rotation_angle(&rel);
    if theta >= std::f64::consts::PI - CUT_LOCUS_MARGIN {
        return Err(FcmError::CutLocus { angle: theta });
    }
    Ok(std::f64::consts::SQRT_2 * theta)
}

/// Applies a scalar function to a symmetric 2×2 matrix through its spectrum.
///
/// Uses `f(M) = ½(f(λ₁)+f(λ₂))·I + (f(λ₁)−f(λ₂))/(λ₁−λ₂)·(M − m·I)`, which stays
/// accurate when the eigenvalues nearly coincide.
fn sym2_apply(m: &Mat2, f: impl Fn(f64) -> f64) -> Mat2 {
    let (mean, radius) = sym2_mean_radius(m);
    let f1 = f(mean + radius);
    let f2 = f(mean - radius);
    let alpha = 0.5 * (f1 + f2);
    let beta = if radius > 0.0 {
        (f1 - f2) / (2.0 * radius)
    } else {
        0.0
    };
    let b = 0.5 * (m[(0, 1)] + m[(1, 0)]);
    let dev = Mat2::new(m[(0, 0)] - mean, b, b, m[(1, 1)] - mean);
    Mat2::identity() * alpha + dev * beta
}

fn sym2_mean_radius(m: &Mat2) -> (f64, f64) {
    let b = 0.5 * (m[(0, 1)] + m[(1, 0)]);
    let mean = 0.5 * (m[(0, 0)] + m[(1, 1)]);
    let radius = (0.5 * (m[(0, 0)] - m[(1, 1)])).hypot(b);
    (mean, radius)
}

/// Eigenvalues `(λ_max, λ_min)` of a symmetric 2×2 matrix.
pub fn sym2_eigenvalues(m: &Mat2) -> (f64, f64) {
    let (mean, radius) = sym2_mean_radius(m);
    (mean + radius, mean - radius)
}

fn check_spd2(u: &Mat2) -> Result<()> {
    let scale = u.abs().max().max(f64::MIN_POSITIVE);
    if (u[(0, 1)] - u[(1, 0)]).abs() > 1e-12 * scale {
        return Err(FcmError::InvalidArgument(format!(
            "matrix is not symmetric: off-diagonals {} and {}",
            u[(0, 1)],
            u[(1, 0)]
        )));
    }
    let (_, lmin) = sym2_eigenvalues(u);
    if !(lmin > 0.0) {
        return Err(FcmError::NotPositiveDefinite {
            min_eigenvalue: lmin,
        });
    }
    Ok(())
}

pub fn spd2_log(u: &Mat2) -> Result<Mat2> {
    check_spd2(u)?;
    Ok(sym2_apply(u, f64::ln))
}

/// Matrix exponential of a symmetric 2×2 matrix (the input is symmetrized).
pub fn spd2_exp(x: &Mat2) -> Mat2 {
    sym2_apply(x, f64::exp)
}

/// Log-Euclidean product `exp(log U + log V)`.
pub fn spd2_mul(u: &Mat2, v: &Mat2) -> Result<Mat2> {
    Ok(spd2_exp(&(spd2_log(u)? + spd2_log(v)?)))
}

pub fn spd2_distance(u: &Mat2, v: &Mat2) -> Result<f64> {
    Ok((spd2_log(v)? - spd2_log(u)?).norm())
}

/// Frobenius inner product of symmetric matrices stored as full 2×2.
pub fn sym2_inner(a: &Mat2, b: &Mat2) -> f64 {
    a.component_mul(b).sum()
}

/// Polar decomposition `D = R·U` with `R ∈ SO(3)` and `U` symmetric positive-definite.
pub fn polar3(d: &Mat3) -> Result<(Mat3, Mat3)> {
    let det = d.determinant();
    if !(det > 0.0) {
        return Err(FcmError::OrientationViolation { triangle: 0, det });
    }
    let svd = d.svd(true, true);
    let (w, vt) = (svd.u.unwrap(), svd.v_t.unwrap());
    let sigma = svd.singular_values;
    let (smax, smin) = (sigma.max(), sigma.min());
    if smin < 1e-10 * smax {
        return Err(FcmError::IllConditioned {
            triangle: None,
            message: format!("singular values {smin:e} / {smax:e}"),
        });
    }
    let r = w * vt;
    let v = vt.transpose();
    let u = v * Mat3::from_diagonal(&sigma) * vt;
    let u = (u + u.transpose()) * 0.5;
    Ok((r, u))
}

/// Rotation maximizing `⟨A, R⟩_F` over SO(3) (orthogonal Procrustes).
///
/// Coincides with the polar rotation of `A` when `det A > 0`; for rank-2 inputs the
/// optimum is still unique and is returned. Fails when `rank A < 2`.
pub fn procrustes_rotation(a: &Mat3) -> Result<Mat3> {
    let svd = a.svd(true, true);
    let (w, vt) = (svd.u.unwrap(), svd.v_t.unwrap());
    let mut sigma = svd.singular_values;
    // nalgebra does not guarantee ordering
    let mut idx = [0usize, 1, 2];
    idx.sort_by(|&i, &j| sigma[j].partial_cmp(&sigma[i]).unwrap());
    let smax = sigma[idx[0]];
    if !(sigma[idx[1]] > 1e-12 * smax) {
        return Err(FcmError::IllConditioned {
            triangle: None,
            message: format!(
                "Procrustes matrix has rank < 2 (singular values {:?})",
                sigma.as_slice()
            ),
        });
    }
    let d = (w * vt).determinant().signum();
    sigma.fill(1.0);
    sigma[idx[2]] = d;
    Ok(w * Mat3::from_diagonal(&sigma) * vt)
}

/// Orthonormality deviation `‖RᵀR − I‖_F`.
pub fn orthonormality_error(r: &Mat3) -> f64 {
    (r.transpose() * r - Mat3::identity()).norm()
}
