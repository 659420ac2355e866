//! Points of `G = SO(3)ⁿ × Sym⁺(2)ᵐ`: transition rotations per inner edge and
//! tangential stretches per triangle, plus the bi-invariant metric on `G`.

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::error::{FcmError, Result};
use crate::lie::{
    polar3, rotation_angle, so3_exp, so3_log, spd2_exp, spd2_log, sym2_inner, Mat2, Mat3, Vec3,
};
use crate::mesh::TriangleMesh;
use crate::reference::ReferencePrecomp;

/// Default commensuration weight between the rotation and stretch terms.
pub const DEFAULT_OMEGA: f64 = 10.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DistanceParams {
    omega: f64,
}

impl DistanceParams {
    pub fn new(omega: f64) -> Result<Self> {
        if !(omega > 0.0 && omega.is_finite()) {
            return Err(FcmError::InvalidArgument(format!(
                "omega must be positive, got {omega}"
            )));
        }
        Ok(DistanceParams { omega })
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }
}

impl Default for DistanceParams {
    fn default() -> Self {
        DistanceParams {
            omega: DEFAULT_OMEGA,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ShapeRep {
    pub rotations: Vec<Mat3>,
    pub stretches: Vec<Mat2>,
    pub reference_id: String,
}

impl ShapeRep {
    /// Checks list lengths and the reference binding.
    pub fn ensure_bound(&self, reference: &ReferencePrecomp) -> Result<()> {
        if self.reference_id != reference.hash() {
            return Err(FcmError::ReferenceMismatch {
                expected: reference.hash().to_string(),
                found: self.reference_id.clone(),
            });
        }
        if self.rotations.len() != reference.inner_edges().len()
            || self.stretches.len() != reference.triangle_count()
        {
            return Err(FcmError::CombinatoricsMismatch(format!(
                "representation has {} rotations and {} stretches, reference has {} inner edges and {} triangles",
                self.rotations.len(),
                self.stretches.len(),
                reference.inner_edges().len(),
                reference.triangle_count()
            )));
        }
        Ok(())
    }

    /// `Cᵢⱼ` for any ordered pair of adjacent triangles.
    pub fn transition(&self, reference: &ReferencePrecomp, i: usize, j: usize) -> Option<Mat3> {
        let k = reference.edge_index(i, j)?;
        Some(if i < j {
            self.rotations[k]
        } else {
            self.rotations[k].transpose()
        })
    }

    /// Content hash; tangent vectors record the hash of their base point.
    pub fn content_id(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.reference_id.as_bytes());
        for r in &self.rotations {
            for x in r.iter() {
                h.update(x.to_bits().to_le_bytes());
            }
        }
        for u in &self.stretches {
            for x in u.iter() {
                h.update(x.to_bits().to_le_bytes());
            }
        }
        h.finalize().iter().take(16).map(|b| format!("{b:02x}")).collect()
    }

    fn ensure_same_reference(&self, other: &ShapeRep) -> Result<()> {
        if self.reference_id != other.reference_id {
            return Err(FcmError::ReferenceMismatch {
                expected: self.reference_id.clone(),
                found: other.reference_id.clone(),
            });
        }
        if self.rotations.len() != other.rotations.len()
            || self.stretches.len() != other.stretches.len()
        {
            return Err(FcmError::CombinatoricsMismatch(
                "representations have different sizes".into(),
            ));
        }
        Ok(())
    }
}

/// Per-triangle factors of the deformation from reference to instance.
#[derive(Clone, Debug)]
pub struct DeformationDecomposition {
    pub gradients: Vec<Mat3>,
    pub rotations: Vec<Mat3>,
    pub stretches: Vec<Mat3>,
    pub frames: Vec<Mat3>,
}

/// Tangent vector at a base point, in right-translated log coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct TangentRep {
    pub rot: Vec<Vec3>,
    pub stretch: Vec<Mat2>,
    pub base_id: String,
}

impl TangentRep {
    pub fn zeros_like(base: &ShapeRep) -> Self {
        TangentRep {
            rot: vec![Vec3::zeros(); base.rotations.len()],
            stretch: vec![Mat2::zeros(); base.stretches.len()],
            base_id: base.content_id(),
        }
    }

    pub fn scaled(&self, c: f64) -> Self {
        TangentRep {
            rot: self.rot.iter().map(|x| x * c).collect(),
            stretch: self.stretch.iter().map(|x| x * c).collect(),
            base_id: self.base_id.clone(),
        }
    }

    /// `self += c·other`.
    pub fn add_scaled(&mut self, c: f64, other: &TangentRep) -> Result<()> {
        self.ensure_same_base(other)?;
        for (a, b) in self.rot.iter_mut().zip(&other.rot) {
            *a += b * c;
        }
        for (a, b) in self.stretch.iter_mut().zip(&other.stretch) {
            *a += b * c;
        }
        Ok(())
    }

    /// Euclidean norm of all coordinates, unweighted.
    pub fn coordinate_norm(&self) -> f64 {
        let r: f64 = self.rot.iter().map(|x| x.norm_squared()).sum();
        let s: f64 = self.stretch.iter().map(|x| x.norm_squared()).sum();
        (r + s).sqrt()
    }

    pub fn ensure_same_base(&self, other: &TangentRep) -> Result<()> {
        if self.base_id != other.base_id
            || self.rot.len() != other.rot.len()
            || self.stretch.len() != other.stretch.len()
        {
            return Err(FcmError::ReferenceMismatch {
                expected: self.base_id.clone(),
                found: other.base_id.clone(),
            });
        }
        Ok(())
    }
}

pub fn encode(
    reference: &ReferencePrecomp,
    mesh: &TriangleMesh,
) -> Result<(ShapeRep, DeformationDecomposition)> {
    let gradients = reference.deformation_gradients(mesh)?;
    let factors: Vec<(Mat3, Mat3, Mat3, Mat2)> = gradients
        .par_iter()
        .enumerate()
        .map(|(t, d)| {
            let (r, u) = polar3(d).map_err(|e| e.at_triangle(t))?;
            let fbar = reference.frame(t);
            let local = fbar.transpose() * u * fbar;
            let b = 0.5 * (local[(0, 1)] + local[(1, 0)]);
            let reduced = Mat2::new(local[(0, 0)], b, b, local[(1, 1)]);
            Ok((r, u, r * fbar, reduced))
        })
        .collect::<Result<_>>()?;
    let frames: Vec<Mat3> = factors.iter().map(|f| f.2).collect();
    let rotations = reference
        .inner_edges()
        .par_iter()
        .map(|e| frames[e.i].transpose() * frames[e.j])
        .collect();
    let rep = ShapeRep {
        rotations,
        stretches: factors.iter().map(|f| f.3).collect(),
        reference_id: reference.hash().to_string(),
    };
    let decomposition = DeformationDecomposition {
        gradients,
        rotations: factors.iter().map(|f| f.0).collect(),
        stretches: factors.iter().map(|f| f.1).collect(),
        frames,
    };
    Ok((rep, decomposition))
}

/// Encoding of the reference onto itself.
pub fn identity_rep(reference: &ReferencePrecomp) -> ShapeRep {
    let frames = reference.frames();
    ShapeRep {
        rotations: reference
            .inner_edges()
            .iter()
            .map(|e| frames[e.i].transpose() * frames[e.j])
            .collect(),
        stretches: vec![Mat2::identity(); reference.triangle_count()],
        reference_id: reference.hash().to_string(),
    }
}

/// Squared rotation and stretch terms of `d_ω²`, before the `ω` factors.
fn distance_terms(reference: &ReferencePrecomp, s: &ShapeRep, t: &ShapeRep) -> Result<(f64, f64)> {
    s.ensure_bound(reference)?;
    t.ensure_bound(reference)?;
    let mut rot = 0.0;
    for ((cs, ct), a) in s.rotations.iter().zip(&t.rotations).zip(reference.edge_areas()) {
        let theta = rotation_angle(&(cs.transpose() * ct));
        if theta >= std::f64::consts::PI - 1e-12 {
            return Err(FcmError::CutLocus { angle: theta });
        }
        rot += a * 2.0 * theta * theta;
    }
    let mut stretch = 0.0;
    for ((us, ut), a) in s.stretches.iter().zip(&t.stretches).zip(reference.tri_areas()) {
        stretch += a * (spd2_log(ut)? - spd2_log(us)?).norm_squared();
    }
    Ok((
        rot / reference.total_edge_area(),
        stretch / reference.total_area(),
    ))
}

pub fn rep_distance(
    reference: &ReferencePrecomp,
    s: &ShapeRep,
    t: &ShapeRep,
    p: DistanceParams,
) -> Result<f64> {
    let (rot, stretch) = distance_terms(reference, s, t)?;
    let w = p.omega();
    Ok((w * w * w * rot + w * stretch).sqrt())
}

/// Right-translated logarithm: `log(Cˢ·C_baseᵀ)` per edge, `log Ũˢ − log Ũ_base` per triangle.
pub fn rep_log(base: &ShapeRep, s: &ShapeRep) -> Result<TangentRep> {
    base.ensure_same_reference(s)?;
    let rot = base
        .rotations
        .par_iter()
        .zip(&s.rotations)
        .map(|(cb, cs)| so3_log(&(cs * cb.transpose())))
        .collect::<Result<_>>()?;
    let stretch = base
        .stretches
        .par_iter()
        .zip(&s.stretches)
        .map(|(ub, us)| Ok(spd2_log(us)? - spd2_log(ub)?))
        .collect::<Result<_>>()?;
    Ok(TangentRep {
        rot,
        stretch,
        base_id: base.content_id(),
    })
}

pub fn rep_exp(base: &ShapeRep, v: &TangentRep) -> Result<ShapeRep> {
    if v.base_id != base.content_id()
        || v.rot.len() != base.rotations.len()
        || v.stretch.len() != base.stretches.len()
    {
        return Err(FcmError::ReferenceMismatch {
            expected: base.content_id(),
            found: v.base_id.clone(),
        });
    }
    let rotations = base
        .rotations
        .par_iter()
        .zip(&v.rot)
        .map(|(cb, xi)| so3_exp(xi) * cb)
        .collect();
    let stretches = base
        .stretches
        .par_iter()
        .zip(&v.stretch)
        .map(|(ub, x)| Ok(spd2_exp(&(x + spd2_log(ub)?))))
        .collect::<Result<_>>()?;
    Ok(ShapeRep {
        rotations,
        stretches,
        reference_id: base.reference_id.clone(),
    })
}

/// Weights turning tangent coordinates into a flat Euclidean vector whose dot
/// product is `g_ω`.
#[derive(Clone, Debug)]
pub struct TangentMetric {
    rot_weights: Vec<f64>,
    stretch_weights: Vec<f64>,
}

impl TangentMetric {
    pub fn new(reference: &ReferencePrecomp, p: DistanceParams) -> Self {
        let w = p.omega();
        let rot_scale = 2.0 * w * w * w / reference.total_edge_area();
        let stretch_scale = w / reference.total_area();
        TangentMetric {
            rot_weights: reference.edge_areas().iter().map(|a| a * rot_scale).collect(),
            stretch_weights: reference.tri_areas().iter().map(|a| a * stretch_scale).collect(),
        }
    }

    pub fn inner(&self, v: &TangentRep, w: &TangentRep) -> Result<f64> {
        v.ensure_same_base(w)?;
        if v.rot.len() != self.rot_weights.len() || v.stretch.len() != self.stretch_weights.len() {
            return Err(FcmError::CombinatoricsMismatch(
                "tangent vector does not match the reference".into(),
            ));
        }
        let rot: f64 = v
            .rot
            .iter()
            .zip(&w.rot)
            .zip(&self.rot_weights)
            .map(|((a, b), c)| c * a.dot(b))
            .sum();
        let stretch: f64 = v
            .stretch
            .iter()
            .zip(&w.stretch)
            .zip(&self.stretch_weights)
            .map(|((a, b), c)| c * sym2_inner(a, b))
            .sum();
        Ok(rot + stretch)
    }

    /// Length `3n + 3m` vector `x` with `x(v)·x(w) = g_ω(v, w)`.
    pub fn flatten(&self, v: &TangentRep) -> Vec<f64> {
        let mut out = Vec::with_capacity(3 * (v.rot.len() + v.stretch.len()));
        for (xi, c) in v.rot.iter().zip(&self.rot_weights) {
            let s = c.sqrt();
            out.extend([xi.x * s, xi.y * s, xi.z * s]);
        }
        for (x, c) in v.stretch.iter().zip(&self.stretch_weights) {
            let s = c.sqrt();
            let b = 0.5 * (x[(0, 1)] + x[(1, 0)]);
            out.extend([x[(0, 0)] * s, b * s * std::f64::consts::SQRT_2, x[(1, 1)] * s]);
        }
        out
    }

    /// Inverse of [`flatten`](Self::flatten).
    pub fn unflatten(&self, x: &[f64], base_id: String) -> TangentRep {
        let n = self.rot_weights.len();
        let rot = (0..n)
            .map(|k| {
                let s = self.rot_weights[k].sqrt();
                Vec3::new(x[3 * k], x[3 * k + 1], x[3 * k + 2]) / s
            })
            .collect();
        let stretch = (0..self.stretch_weights.len())
            .map(|k| {
                let s = self.stretch_weights[k].sqrt();
                let o = 3 * (n + k);
                let b = x[o + 1] / (s * std::f64::consts::SQRT_2);
                Mat2::new(x[o] / s, b, b, x[o + 2] / s)
            })
            .collect();
        TangentRep {
            rot,
            stretch,
            base_id,
        }
    }
}

/// `g_ω(v, w)` with the skew inner product `⟨ξ, ζ⟩ = 2·ξ·ζ`.
pub fn rep_inner(
    reference: &ReferencePrecomp,
    p: DistanceParams,
    v: &TangentRep,
    w: &TangentRep,
) -> Result<f64> {
    TangentMetric::new(reference, p).inner(v, w)
}

pub fn geodesic(s: &ShapeRep, t: &ShapeRep, lambda: f64) -> Result<ShapeRep> {
    if lambda == 0.0 {
        return Ok(s.clone());
    }
    let v = rep_log(s, t)?;
    rep_exp(s, &v.scaled(lambda))
}

/// Angle of `Cᵢⱼˢ·(Cᵢⱼᵗ)ᵀ` per inner edge.
pub fn relative_rotation_angles(s: &ShapeRep, t: &ShapeRep) -> Result<Vec<f64>> {
    s.ensure_same_reference(t)?;
    Ok(s
        .rotations
        .iter()
        .zip(&t.rotations)
        .map(|(a, b)| rotation_angle(&(a * b.transpose())))
        .collect())
}

#[derive(Clone, Debug, PartialEq)]
pub struct HistogramBin {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

/// Equal-width histogram over `[0, π]`.
pub fn angle_histogram(angles: &[f64], bins: usize) -> Vec<HistogramBin> {
    let bins = bins.max(1);
    let width = std::f64::consts::PI / bins as f64;
    let mut counts = vec![0usize; bins];
    for &a in angles {
        let k = ((a / width) as usize).min(bins - 1);
        counts[k] += 1;
    }
    counts
        .into_iter()
        .enumerate()
        .map(|(k, count)| HistogramBin {
            lo: k as f64 * width,
            hi: (k + 1) as f64 * width,
            count,
        })
        .collect()
}
