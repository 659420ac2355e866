//! Quasi-isometric flattening: project onto the flat submanifold (unit stretches,
//! transition rotations that fix the normal axis) and reconstruct.

use serde::Serialize;

use crate::error::{FcmError, Result};
use crate::lie::{so3_exp, Mat2, Mat3, Vec3};
use crate::mesh::{Point, TriangleMesh};
use crate::reconstruction::{ReconstructOptions, Reconstructor};
use crate::reference::ReferencePrecomp;
use crate::representation::ShapeRep;

/// Rotation about the shared edge of `(i, j)` taking `n̄ⱼ` onto `n̄ᵢ`.
pub fn unfold_rotation(reference: &ReferencePrecomp, i: usize, j: usize) -> Result<Mat3> {
    let k = reference
        .edge_index(i, j)
        .ok_or_else(|| FcmError::InvalidArgument(format!("triangles {i} and {j} are not adjacent")))?;
    Ok(unfold_edge(reference, k, j, i))
}

/// Rotation about edge `k` mapping the normal of `from` onto the normal of `to`.
fn unfold_edge(reference: &ReferencePrecomp, k: usize, from: usize, to: usize) -> Mat3 {
    let [a, b] = reference.inner_edges()[k].shared;
    let v = reference.mesh().vertices();
    let axis = (v[b] - v[a]).normalize();
    let (nf, nt) = (reference.normals()[from], reference.normals()[to]);
    let angle = nf.cross(&nt).dot(&axis).atan2(nf.dot(&nt));
    so3_exp(&(axis * angle))
}

/// `Ũᵢ = I`, `Cᵢⱼ = F̄ᵢᵀ·R^N_{ji}·F̄ⱼ`.
pub fn flat_projection(reference: &ReferencePrecomp) -> ShapeRep {
    let rotations = reference
        .inner_edges()
        .iter()
        .enumerate()
        .map(|(k, e)| reference.frame(e.i).transpose() * unfold_edge(reference, k, e.j, e.i) * reference.frame(e.j))
        .collect();
    ShapeRep {
        rotations,
        stretches: vec![Mat2::identity(); reference.triangle_count()],
        reference_id: reference.hash().to_string(),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct FlatteningReport {
    /// `max |z| / bbox diagonal` before the out-of-plane coordinate is dropped.
    pub planarity_residual: f64,
    pub max_edge_distortion: f64,
    pub mean_edge_distortion: f64,
    pub max_area_distortion: f64,
    pub mean_area_distortion: f64,
    pub solver_iterations: usize,
    pub final_energy: f64,
    /// `|ℓ_flat − ℓ_ref| / ℓ_ref` per undirected edge, ordered by vertex pair.
    pub edge_distortion: Vec<f64>,
    /// `|A_flat − A_ref| / A_ref` per triangle.
    pub area_distortion: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct Flattening {
    /// Planar mesh with `z = 0`.
    pub mesh: TriangleMesh,
    pub points: Vec<[f64; 2]>,
    pub report: FlatteningReport,
}

#[derive(Clone, Debug, Serialize)]
pub struct Distortion {
    pub edge: Vec<f64>,
    pub area: Vec<f64>,
}

impl Distortion {
    pub fn mean_edge(&self) -> f64 {
        mean(&self.edge)
    }

    pub fn max_edge(&self) -> f64 {
        self.edge.iter().copied().fold(0.0, f64::max)
    }
}

fn mean(x: &[f64]) -> f64 {
    if x.is_empty() {
        0.0
    } else {
        x.iter().sum::<f64>() / x.len() as f64
    }
}

/// Metric distortion of a planar layout of `mesh`.
pub fn planar_distortion(mesh: &TriangleMesh, points: &[[f64; 2]]) -> Distortion {
    let v = mesh.vertices();
    let mut edges: Vec<(usize, usize)> = mesh.edge_map().into_keys().collect();
    edges.sort_unstable();
    let edge = edges
        .iter()
        .map(|&(a, b)| {
            let l_ref = (v[a] - v[b]).norm();
            let l = (points[a][0] - points[b][0]).hypot(points[a][1] - points[b][1]);
            (l - l_ref).abs() / l_ref
        })
        .collect();
    let area = (0..mesh.triangle_count())
        .map(|t| {
            let [a, b, c] = mesh.triangles()[t];
            let (p, q, r) = (points[a], points[b], points[c]);
            let flat = 0.5 * ((q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0]));
            let a_ref = mesh.triangle_area(t);
            (flat - a_ref).abs() / a_ref
        })
        .collect();
    Distortion { edge, area }
}

/// Baseline layout: orthogonal projection onto the plane of the reference seed triangle.
pub fn vertical_projection(reference: &ReferencePrecomp) -> Vec<[f64; 2]> {
    let f = reference.frame(0);
    let o = reference.mesh().vertices()[reference.mesh().triangles()[0][0]];
    reference
        .mesh()
        .vertices()
        .iter()
        .map(|p| {
            let q = f.transpose() * (p - o);
            [q.x, q.y]
        })
        .collect()
}

pub fn flatten(reference: &ReferencePrecomp, opts: &ReconstructOptions) -> Result<Flattening> {
    if reference.is_closed() {
        return Err(FcmError::ClosedSurface);
    }
    let rep = flat_projection(reference);
    let rec = Reconstructor::new(reference)?.solve(&rep, opts)?;
    let out = &rec.mesh;
    // seed triangle frame in the output, with the same edge-aligned convention
    let [p0, p1, _] = out.corners(0);
    let n = out.area_vector(0).normalize();
    let e1 = (p1 - p0).normalize();
    let frame = Mat3::from_columns(&[e1, n.cross(&e1), n]);
    let chart: Vec<Point> = out.vertices().iter().map(|p| frame.transpose() * (p - p0)).collect();
    let diag = reference.mesh().bbox_diagonal();
    let planarity_residual = chart.iter().map(|p| p.z.abs()).fold(0.0, f64::max) / diag;
    let points: Vec<[f64; 2]> = chart.iter().map(|p| [p.x, p.y]).collect();
    let distortion = planar_distortion(reference.mesh(), &points);
    let mesh = out.with_vertices(points.iter().map(|p| Vec3::new(p[0], p[1], 0.0)).collect())?;
    let report = FlatteningReport {
        planarity_residual,
        max_edge_distortion: distortion.max_edge(),
        mean_edge_distortion: distortion.mean_edge(),
        max_area_distortion: distortion.area.iter().copied().fold(0.0, f64::max),
        mean_area_distortion: mean(&distortion.area),
        solver_iterations: rec.report.iterations,
        final_energy: rec.report.final_energy(),
        edge_distortion: distortion.edge,
        area_distortion: distortion.area,
    };
    Ok(Flattening {
        mesh,
        points,
        report,
    })
}
