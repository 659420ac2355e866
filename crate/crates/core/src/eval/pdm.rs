//! Point distribution model: generalized Procrustes alignment followed by PCA on
//! stacked vertex coordinates.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::align::{align_to, kabsch};
use crate::error::{FcmError, Result};
use crate::mesh::{Point, TriangleMesh};
use crate::statistics::EIGEN_CUTOFF;

pub const GPA_TOL: f64 = 1e-10;
pub const GPA_MAX_ITER: usize = 200;

#[derive(Clone, Debug)]
pub struct PdmModel {
    pub mean: Vec<Point>,
    /// Orthonormal in the Euclidean metric on stacked coordinates.
    pub components: Vec<Vec<f64>>,
    pub variances: Vec<f64>,
    pub triangles: Vec<[usize; 3]>,
    pub gpa_iterations: usize,
}

impl PdmModel {
    pub fn component_count(&self) -> usize {
        self.components.len()
    }

    pub fn mean_mesh(&self) -> Result<TriangleMesh> {
        TriangleMesh::new(self.mean.clone(), self.triangles.clone())
    }
}

fn centered(p: &[Point]) -> Vec<Point> {
    let c = p.iter().sum::<Point>() / p.len() as f64;
    p.iter().map(|q| q - c).collect()
}

fn stack(p: &[Point]) -> Vec<f64> {
    p.iter().flat_map(|q| [q.x, q.y, q.z]).collect()
}

fn rms(a: &[Point], b: &[Point]) -> f64 {
    (a.iter().zip(b).map(|(x, y)| (x - y).norm_squared()).sum::<f64>() / a.len() as f64).sqrt()
}

pub fn pdm_fit(meshes: &[TriangleMesh]) -> Result<PdmModel> {
    let first = meshes
        .first()
        .ok_or_else(|| FcmError::InvalidArgument("PDM needs at least one mesh".into()))?;
    for (k, m) in meshes.iter().enumerate() {
        if m.triangles() != first.triangles() || m.vertex_count() != first.vertex_count() {
            return Err(FcmError::CombinatoricsMismatch(format!("mesh {k} differs from mesh 0")));
        }
    }
    let gauge = centered(first.vertices());
    let scale = gauge.iter().map(|p| p.norm_squared()).sum::<f64>().sqrt();
    if !(scale > 0.0) {
        return Err(FcmError::InvalidArgument("degenerate point configuration".into()));
    }
    let shapes: Vec<Vec<Point>> = meshes.iter().map(|m| centered(m.vertices())).collect();
    let mut mean = gauge.clone();
    let mut iterations = 0;
    loop {
        iterations += 1;
        let aligned: Vec<Vec<Point>> = shapes.iter().map(|s| align_to(s, &mean)).collect();
        let mut next = vec![Point::zeros(); mean.len()];
        for s in &aligned {
            for (n, p) in next.iter_mut().zip(s) {
                *n += p;
            }
        }
        next.iter_mut().for_each(|p| *p /= meshes.len() as f64);
        // fix the rotational gauge to the first mesh
        let next = align_to(&next, &gauge);
        let change = rms(&next, &mean);
        mean = next;
        if change < GPA_TOL * scale || iterations >= GPA_MAX_ITER {
            break;
        }
    }
    let aligned: Vec<Vec<Point>> = shapes.iter().map(|s| align_to(s, &mean)).collect();
    let x0 = stack(&mean);
    let rows: Vec<Vec<f64>> = aligned
        .iter()
        .map(|s| stack(s).iter().zip(&x0).map(|(a, b)| a - b).collect())
        .collect();
    let n = rows.len();
    let gram: DMatrix<f64> = DMatrix::from_fn(n, n, |i, j| rows[i].iter().zip(&rows[j]).map(|(a, b)| a * b).sum());
    let eig = SymmetricEigen::new(gram);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let top = eig.eigenvalues[order[0]];
    let mut components = Vec::new();
    let mut variances = Vec::new();
    for &k in &order {
        let lambda = eig.eigenvalues[k];
        if !(top > 0.0) || lambda <= EIGEN_CUTOFF * top || components.len() + 1 >= n {
            break;
        }
        let v = eig.eigenvectors.column(k);
        let pivot = (0..n).max_by(|&a, &b| v[a].abs().total_cmp(&v[b].abs()).then(b.cmp(&a))).unwrap();
        let sign = if v[pivot] < 0.0 { -1.0 } else { 1.0 };
        let mut c = vec![0.0; x0.len()];
        for (i, r) in rows.iter().enumerate() {
            for (cd, rd) in c.iter_mut().zip(r) {
                *cd += v[i] * rd;
            }
        }
        let norm = c.iter().map(|a| a * a).sum::<f64>().sqrt();
        c.iter_mut().for_each(|a| *a *= sign / norm);
        components.push(c);
        variances.push(lambda / n as f64);
    }
    Ok(PdmModel {
        mean,
        components,
        variances,
        triangles: first.triangles().to_vec(),
        gpa_iterations: iterations,
    })
}

/// Projection of the rigidly aligned mesh onto the components.
pub fn pdm_coefficients(model: &PdmModel, mesh: &TriangleMesh) -> Result<Vec<f64>> {
    if mesh.vertex_count() != model.mean.len() || mesh.triangles() != model.triangles.as_slice() {
        return Err(FcmError::CombinatoricsMismatch("mesh does not match the PDM".into()));
    }
    let (r, t) = kabsch(mesh.vertices(), &model.mean);
    let x: Vec<Point> = mesh.vertices().iter().map(|p| r * p + t).collect();
    let d: Vec<f64> = stack(&x).iter().zip(stack(&model.mean)).map(|(a, b)| a - b).collect();
    Ok(model
        .components
        .iter()
        .map(|c| c.iter().zip(&d).map(|(a, b)| a * b).sum())
        .collect())
}

/// `mean + Σ aₚ cₚ`; missing trailing coefficients are zero.
pub fn pdm_reconstruct(model: &PdmModel, a: &[f64]) -> Result<TriangleMesh> {
    if a.len() > model.components.len() {
        return Err(FcmError::InvalidArgument(format!(
            "{} coefficients for {} components",
            a.len(),
            model.components.len()
        )));
    }
    let mut x = stack(&model.mean);
    for (c, comp) in a.iter().zip(&model.components) {
        for (xd, cd) in x.iter_mut().zip(comp) {
            *xd += c * cd;
        }
    }
    let pts = x.chunks(3).map(|c| Point::new(c[0], c[1], c[2])).collect();
    TriangleMesh::new(pts, model.triangles.clone())
}
