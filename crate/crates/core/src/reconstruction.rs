//! Inverse map from a representation back to vertex positions.
//!
//! The solver minimizes
//!
//! ```text
//! E(φ, {Rᵢ}) = Σₛ Āₛ εₛ,   εₛ = 1/|𝒩ₛ| Σ_{i∈𝒩ₛ} ‖∇φₛ − R_{i→s} Uₛ P̄ₛ‖²_F
//! ```
//!
//! where `∇φₛ` is the tangential gradient of the piecewise-linear map, `P̄ₛ` the
//! tangent projector of reference triangle `s`, and `R_{i→s} = Rᵢ F̄ᵢ Cᵢₛ F̄ₛᵀ`.
//! Restricted to tangent directions the energy is exactly quadratic in the
//! positions, so the global step is one prefactored cotangent-Laplacian solve.
//! Each term involves a single rotation, so the local step is an exact
//! weighted Procrustes problem per triangle.

use std::collections::VecDeque;

use nalgebra::DMatrix;
use nalgebra_sparse::factorization::CscCholesky;
use nalgebra_sparse::{CooMatrix, CscMatrix};
use rayon::prelude::*;

use crate::error::{FcmError, Result};
use crate::lie::{procrustes_rotation, Mat2, Mat3, Vec3};
use crate::mesh::TriangleMesh;
use crate::reference::ReferencePrecomp;
use crate::representation::ShapeRep;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReconstructOptions {
    /// Stop when the relative energy decrease of one sweep falls below this.
    pub tol: f64,
    pub max_iter: usize,
    /// Stop when `E ≤ energy_floor · Ā`; integrable input reaches this immediately.
    pub energy_floor: f64,
}

impl Default for ReconstructOptions {
    fn default() -> Self {
        ReconstructOptions {
            tol: 1e-8,
            max_iter: 100,
            energy_floor: 1e-24,
        }
    }
}

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct EnergyReport {
    /// Energy after the initial global step, then after every local/global sweep.
    pub energies: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Final per-triangle residuals `εᵢ`.
    pub residuals: Vec<f64>,
}

impl EnergyReport {
    pub fn final_energy(&self) -> f64 {
        *self.energies.last().unwrap()
    }
}

#[derive(Clone, Debug)]
pub struct Reconstruction {
    pub mesh: TriangleMesh,
    pub rotations: Vec<Mat3>,
    pub report: EnergyReport,
}

/// `Uᵢ = F̄ᵢ·blockdiag(Ũᵢ, 1)·F̄ᵢᵀ`.
pub fn embed_stretch(reference: &ReferencePrecomp, i: usize, u: &Mat2) -> Mat3 {
    let f = reference.frame(i);
    let b = 0.5 * (u[(0, 1)] + u[(1, 0)]);
    let block = Mat3::new(u[(0, 0)], b, 0.0, b, u[(1, 1)], 0.0, 0.0, 0.0, 1.0);
    f * block * f.transpose()
}

/// Tangential part `Uᵢ·P̄ᵢ` of the embedded stretch.
fn embed_tangential(reference: &ReferencePrecomp, i: usize, u: &Mat2) -> Mat3 {
    let f = reference.frame(i);
    let b = 0.5 * (u[(0, 1)] + u[(1, 0)]);
    let block = Mat3::new(u[(0, 0)], b, 0.0, b, u[(1, 1)], 0.0, 0.0, 0.0, 0.0);
    f * block * f.transpose()
}

/// `P_k = F̄ᵢ·Cᵢⱼ·F̄ⱼᵀ` per inner edge `k = (i, j)`, so that `R_{i→j} = Rᵢ·P_k`.
fn edge_transports(reference: &ReferencePrecomp, rep: &ShapeRep) -> Vec<Mat3> {
    reference
        .inner_edges()
        .iter()
        .zip(&rep.rotations)
        .map(|(e, c)| reference.frame(e.i) * c * reference.frame(e.j).transpose())
        .collect()
}

fn directed(transports: &[Mat3], edge: usize, from: usize, to: usize) -> Mat3 {
    if from < to {
        transports[edge]
    } else {
        transports[edge].transpose()
    }
}

/// Propagates `R_{i₀} = I` along the breadth-first spanning tree.
pub fn init_rotations(reference: &ReferencePrecomp, rep: &ShapeRep) -> Result<Vec<Mat3>> {
    rep.ensure_bound(reference)?;
    Ok(propagate(reference, &edge_transports(reference, rep)))
}

fn propagate(reference: &ReferencePrecomp, transports: &[Mat3]) -> Vec<Mat3> {
    let tree = reference.spanning_tree();
    let mut rotations = vec![Mat3::identity(); reference.triangle_count()];
    for e in &tree.edges {
        rotations[e.child] = rotations[e.parent] * directed(transports, e.edge, e.parent, e.child);
    }
    rotations
}

/// Closed-form minimizer of `Σ wₖ‖Dₖ − R·Mₖ‖²_F` over `R ∈ SO(3)`.
pub fn weighted_procrustes(terms: &[(f64, Mat3, Mat3)]) -> Result<Mat3> {
    let a = terms
        .iter()
        .fold(Mat3::zeros(), |acc, (w, d, m)| acc + d * m.transpose() * *w);
    procrustes_rotation(&a)
}

/// Per-triangle rotations fitted to a deformation-gradient field:
/// `Rᵢ = argmin Σ_{s∈𝒩ᵢ} ‖Dₛ − R·F̄ᵢCᵢₛF̄ₛᵀUₛ‖²_F`.
pub fn local_step(
    reference: &ReferencePrecomp,
    rep: &ShapeRep,
    gradients: &[Mat3],
) -> Result<Vec<Mat3>> {
    rep.ensure_bound(reference)?;
    if gradients.len() != reference.triangle_count() {
        return Err(FcmError::CombinatoricsMismatch(format!(
            "{} gradients for {} triangles",
            gradients.len(),
            reference.triangle_count()
        )));
    }
    let transports = edge_transports(reference, rep);
    let stretches: Vec<Mat3> = (0..reference.triangle_count())
        .map(|s| embed_stretch(reference, s, &rep.stretches[s]))
        .collect();
    (0..reference.triangle_count())
        .into_par_iter()
        .map(|i| {
            let terms: Vec<(f64, Mat3, Mat3)> = reference
                .neighbors(i)
                .iter()
                .map(|nb| {
                    let s = nb.triangle;
                    (1.0, gradients[s], directed(&transports, nb.edge, i, s) * stretches[s])
                })
                .collect();
            weighted_procrustes(&terms).map_err(|e| e.at_triangle(i))
        })
        .collect()
}

/// Prefactored normal equations of the global step.
///
/// The matrix is `L = Σₛ Āₛ·Gₛᵀ Gₛ` with `Gₛ` the hat-function gradients, i.e. the
/// cotangent Laplacian. Vertex 0 is pinned during the solve and the result is
/// translated so its barycenter matches the reference barycenter.
pub struct PoissonSystem {
    vertex_count: usize,
    /// `order[k]` is the vertex stored at reduced row `k`.
    order: Vec<usize>,
    factor: CscCholesky<f64>,
    barycenter: Vec3,
}

impl PoissonSystem {
    pub fn new(reference: &ReferencePrecomp) -> Result<Self> {
        let mesh = reference.mesh();
        let n = mesh.vertex_count();
        if n < 2 {
            return Err(FcmError::InvalidArgument("mesh needs at least two vertices".into()));
        }
        let mut adjacency = vec![Vec::new(); n];
        for t in mesh.triangles() {
            for a in 0..3 {
                for b in 0..3 {
                    if a != b {
                        adjacency[t[a]].push(t[b]);
                    }
                }
            }
        }
        for list in &mut adjacency {
            list.sort_unstable();
            list.dedup();
        }
        let order = reverse_cuthill_mckee(&adjacency, 0);
        let mut slot = vec![usize::MAX; n];
        for (k, &v) in order.iter().enumerate() {
            slot[v] = k;
        }
        let mut coo = CooMatrix::new(n - 1, n - 1);
        for (s, t) in mesh.triangles().iter().enumerate() {
            let g = reference.gradient_operator(s);
            let area = reference.tri_areas()[s];
            for a in 0..3 {
                for b in 0..3 {
                    let (ra, rb) = (slot[t[a]], slot[t[b]]);
                    if ra != usize::MAX && rb != usize::MAX {
                        coo.push(ra, rb, area * g.row(a).dot(&g.row(b)));
                    }
                }
            }
        }
        let csc = CscMatrix::from(&coo);
        let factor = CscCholesky::factor(&csc).map_err(|e| FcmError::Factorization(format!("{e:?}")))?;
        Ok(PoissonSystem {
            vertex_count: n,
            order,
            factor,
            barycenter: mesh.barycenter(),
        })
    }

    /// Solves `L·X = B` for per-vertex right-hand sides `B`, which must sum to zero.
    pub fn solve(&self, rhs: &[Vec3]) -> Vec<Vec3> {
        let mut b = DMatrix::zeros(self.order.len(), 3);
        for (k, &v) in self.order.iter().enumerate() {
            for c in 0..3 {
                b[(k, c)] = rhs[v][c];
            }
        }
        self.factor.solve_mut(&mut b);
        let mut x = vec![Vec3::zeros(); self.vertex_count];
        for (k, &v) in self.order.iter().enumerate() {
            x[v] = Vec3::new(b[(k, 0)], b[(k, 1)], b[(k, 2)]);
        }
        let shift = self.barycenter - x.iter().sum::<Vec3>() / self.vertex_count as f64;
        for p in &mut x {
            *p += shift;
        }
        x
    }
}

/// Reverse Cuthill–McKee ordering of all vertices except `excluded`.
fn reverse_cuthill_mckee(adjacency: &[Vec<usize>], excluded: usize) -> Vec<usize> {
    let n = adjacency.len();
    let degree = |v: usize| adjacency[v].iter().filter(|&&w| w != excluded).count();
    let mut visited = vec![false; n];
    visited[excluded] = true;
    let mut order = Vec::with_capacity(n - 1);
    let mut by_degree: Vec<usize> = (0..n).filter(|&v| v != excluded).collect();
    by_degree.sort_by_key(|&v| (degree(v), v));
    for &start in &by_degree {
        if visited[start] {
            continue;
        }
        visited[start] = true;
        let mut queue = VecDeque::from([start]);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            let mut next: Vec<usize> = adjacency[v].iter().copied().filter(|&w| !visited[w]).collect();
            next.sort_by_key(|&w| (degree(w), w));
            for w in next {
                visited[w] = true;
                queue.push_back(w);
            }
        }
    }
    order.reverse();
    order
}

/// Reusable solver bound to one reference shape.
pub struct Reconstructor<'a> {
    reference: &'a ReferencePrecomp,
    system: PoissonSystem,
}

struct Targets {
    transports: Vec<Mat3>,
    tangential: Vec<Mat3>,
    weights: Vec<f64>,
}

impl<'a> Reconstructor<'a> {
    pub fn new(reference: &'a ReferencePrecomp) -> Result<Self> {
        Ok(Reconstructor {
            reference,
            system: PoissonSystem::new(reference)?,
        })
    }

    pub fn reference(&self) -> &ReferencePrecomp {
        self.reference
    }

    pub fn system(&self) -> &PoissonSystem {
        &self.system
    }

    fn targets(&self, rep: &ShapeRep) -> Targets {
        let r = self.reference;
        Targets {
            transports: edge_transports(r, rep),
            tangential: (0..r.triangle_count())
                .map(|s| embed_tangential(r, s, &rep.stretches[s]))
                .collect(),
            weights: (0..r.triangle_count())
                .map(|s| r.tri_areas()[s] / r.neighbors(s).len().max(1) as f64)
                .collect(),
        }
    }

    /// Mean target gradient `(1/|𝒩ₛ|) Σᵢ R_{i→s}·Uₛ·P̄ₛ`.
    fn mean_target(&self, tg: &Targets, rotations: &[Mat3], s: usize) -> Mat3 {
        let nbs = self.reference.neighbors(s);
        if nbs.is_empty() {
            return rotations[s] * tg.tangential[s];
        }
        let sum = nbs.iter().fold(Mat3::zeros(), |acc, nb| {
            acc + rotations[nb.triangle] * directed(&tg.transports, nb.edge, nb.triangle, s)
        });
        sum * tg.tangential[s] / nbs.len() as f64
    }

    fn global_step(&self, tg: &Targets, rotations: &[Mat3]) -> Vec<Vec3> {
        let r = self.reference;
        let contributions: Vec<Mat3> = (0..r.triangle_count())
            .into_par_iter()
            .map(|s| self.mean_target(tg, rotations, s) * r.gradient_operator(s).transpose() * r.tri_areas()[s])
            .collect();
        let mut rhs = vec![Vec3::zeros(); r.mesh().vertex_count()];
        for (s, t) in r.mesh().triangles().iter().enumerate() {
            for (k, &v) in t.iter().enumerate() {
                rhs[v] += contributions[s].column(k);
            }
        }
        self.system.solve(&rhs)
    }

    fn local_step(&self, tg: &Targets, positions: &[Vec3]) -> Result<Vec<Mat3>> {
        let r = self.reference;
        let gradients: Vec<Mat3> = (0..r.triangle_count())
            .into_par_iter()
            .map(|s| r.surface_gradient(s, positions))
            .collect();
        (0..r.triangle_count())
            .into_par_iter()
            .map(|i| {
                let nbs = r.neighbors(i);
                let terms: Vec<(f64, Mat3, Mat3)> = if nbs.is_empty() {
                    vec![(1.0, gradients[i], tg.tangential[i])]
                } else {
                    nbs.iter()
                        .map(|nb| {
                            let s = nb.triangle;
                            (
                                tg.weights[s],
                                gradients[s],
                                directed(&tg.transports, nb.edge, i, s) * tg.tangential[s],
                            )
                        })
                        .collect()
                };
                weighted_procrustes(&terms).map_err(|e| e.at_triangle(i))
            })
            .collect()
    }

    fn residuals(&self, tg: &Targets, rotations: &[Mat3], positions: &[Vec3]) -> Vec<f64> {
        let r = self.reference;
        (0..r.triangle_count())
            .into_par_iter()
            .map(|s| {
                let g = r.surface_gradient(s, positions);
                let nbs = r.neighbors(s);
                if nbs.is_empty() {
                    return (g - rotations[s] * tg.tangential[s]).norm_squared();
                }
                let sum: f64 = nbs
                    .iter()
                    .map(|nb| {
                        let target = rotations[nb.triangle]
                            * directed(&tg.transports, nb.edge, nb.triangle, s)
                            * tg.tangential[s];
                        (g - target).norm_squared()
                    })
                    .sum();
                sum / nbs.len() as f64
            })
            .collect()
    }

    fn energy(&self, residuals: &[f64]) -> f64 {
        residuals
            .iter()
            .zip(self.reference.tri_areas())
            .map(|(e, a)| e * a)
            .sum()
    }

    pub fn solve(&self, rep: &ShapeRep, opts: &ReconstructOptions) -> Result<Reconstruction> {
        let r = self.reference;
        rep.ensure_bound(r)?;
        let tg = self.targets(rep);
        let mut rotations = propagate(r, &tg.transports);
        let mut positions = self.global_step(&tg, &rotations);
        let mut residuals = self.residuals(&tg, &rotations, &positions);
        let mut energies = vec![self.energy(&residuals)];
        let floor = opts.energy_floor * r.total_area();
        let mut iterations = 0;
        let mut converged = energies[0] <= floor;
        while !converged && iterations < opts.max_iter {
            rotations = self.local_step(&tg, &positions)?;
            positions = self.global_step(&tg, &rotations);
            residuals = self.residuals(&tg, &rotations, &positions);
            let e = self.energy(&residuals);
            let prev = *energies.last().unwrap();
            energies.push(e);
            iterations += 1;
            converged = e <= floor || (prev - e) <= opts.tol * prev;
        }
        let mesh = r.mesh().with_vertices(positions)?;
        Ok(Reconstruction {
            mesh,
            rotations,
            report: EnergyReport {
                energies,
                iterations,
                converged,
                residuals,
            },
        })
    }

    /// One extra local step followed by one global step from a given state;
    /// used to probe block-coordinate optimality.
    pub fn sweep(&self, rep: &ShapeRep, positions: &[Vec3]) -> Result<(Vec<Mat3>, Vec<Vec3>)> {
        let tg = self.targets(rep);
        let rotations = self.local_step(&tg, positions)?;
        let next = self.global_step(&tg, &rotations);
        Ok((rotations, next))
    }
}

pub fn prefactor(reference: &ReferencePrecomp) -> Result<PoissonSystem> {
    PoissonSystem::new(reference)
}

pub fn reconstruct(
    reference: &ReferencePrecomp,
    rep: &ShapeRep,
    opts: &ReconstructOptions,
) -> Result<(TriangleMesh, EnergyReport)> {
    let out = Reconstructor::new(reference)?.solve(rep, opts)?;
    Ok((out.mesh, out.report))
}
