//! Fréchet mean and linearized principal geodesic analysis on `G`.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{FcmError, Result};
use crate::mesh::TriangleMesh;
use crate::reconstruction::{ReconstructOptions, Reconstructor};
use crate::reference::{build_reference, ReferencePrecomp};
use crate::representation::{encode, rep_exp, rep_log, DistanceParams, ShapeRep, TangentMetric, TangentRep};

pub const MEAN_TOL: f64 = 1e-10;
pub const MEAN_MAX_ITER: usize = 50;
/// Relative eigenvalue cutoff of the Gram matrix.
pub const EIGEN_CUTOFF: f64 = 1e-12;
/// `pga` rejects a base point whose summed log exceeds this.
pub const MEAN_CHECK_TOL: f64 = 1e-8;

#[derive(Clone, Debug)]
pub struct FrechetMean {
    pub mean: ShapeRep,
    pub iterations: usize,
    /// `‖Σᵢ log_μ sᵢ‖` in unweighted coordinates at the returned point.
    pub residual: f64,
}

fn summed_log(mu: &ShapeRep, reps: &[ShapeRep]) -> Result<TangentRep> {
    let logs: Vec<TangentRep> = reps.par_iter().map(|s| rep_log(mu, s)).collect::<Result<_>>()?;
    let mut sum = TangentRep::zeros_like(mu);
    for v in &logs {
        sum.add_scaled(1.0, v)?;
    }
    Ok(sum)
}

/// Iterates `μ ← exp_μ((1/N) Σᵢ log_μ sᵢ)` from `μ = s₀` until `‖Σᵢ log_μ sᵢ‖ < tol`.
pub fn frechet_mean_detailed(reps: &[ShapeRep], tol: f64, max_iter: usize) -> Result<FrechetMean> {
    let first = reps
        .first()
        .ok_or_else(|| FcmError::InvalidArgument("mean of an empty set".into()))?;
    let n = reps.len() as f64;
    let mut mu = first.clone();
    let mut residual = f64::INFINITY;
    for iterations in 0..=max_iter {
        let sum = summed_log(&mu, reps)?;
        residual = sum.coordinate_norm();
        if residual < tol {
            return Ok(FrechetMean {
                mean: mu,
                iterations,
                residual,
            });
        }
        if iterations < max_iter {
            mu = rep_exp(&mu, &sum.scaled(1.0 / n))?;
        }
    }
    Err(FcmError::NonConvergence {
        iterations: max_iter,
        residual,
    })
}

pub fn frechet_mean(reps: &[ShapeRep], tol: f64, max_iter: usize) -> Result<ShapeRep> {
    Ok(frechet_mean_detailed(reps, tol, max_iter)?.mean)
}

#[derive(Clone, Debug)]
pub struct PgaModel {
    pub mean: ShapeRep,
    /// Orthonormal under `g_ω` at the mean.
    pub modes: Vec<TangentRep>,
    /// `λₚ = λ̂ₚ/N`, descending.
    pub variances: Vec<f64>,
    pub params: DistanceParams,
    pub metric: TangentMetric,
    pub sample_count: usize,
}

impl PgaModel {
    pub fn mode_count(&self) -> usize {
        self.modes.len()
    }

    pub fn reference_id(&self) -> &str {
        &self.mean.reference_id
    }

    /// Same model restricted to the leading `k` modes.
    pub fn truncated(&self, k: usize) -> PgaModel {
        let k = k.min(self.modes.len());
        PgaModel {
            modes: self.modes[..k].to_vec(),
            variances: self.variances[..k].to_vec(),
            ..self.clone()
        }
    }
}

pub fn pga(
    reference: &ReferencePrecomp,
    reps: &[ShapeRep],
    mu: &ShapeRep,
    p: DistanceParams,
) -> Result<PgaModel> {
    if reps.is_empty() {
        return Err(FcmError::InvalidArgument("pga needs at least one shape".into()));
    }
    mu.ensure_bound(reference)?;
    let logs: Vec<TangentRep> = reps.par_iter().map(|s| rep_log(mu, s)).collect::<Result<_>>()?;
    let mut sum = TangentRep::zeros_like(mu);
    for v in &logs {
        sum.add_scaled(1.0, v)?;
    }
    let residual = sum.coordinate_norm();
    if residual > MEAN_CHECK_TOL {
        return Err(FcmError::InvalidArgument(format!(
            "base point is not the Fréchet mean of the data (‖Σ log‖ = {residual:e})"
        )));
    }
    let metric = TangentMetric::new(reference, p);
    let flat: Vec<Vec<f64>> = logs.par_iter().map(|v| metric.flatten(v)).collect();
    let n = reps.len();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i..n).map(move |j| (i, j))).collect();
    let entries: Vec<f64> = pairs
        .par_iter()
        .map(|&(i, j)| flat[i].iter().zip(&flat[j]).map(|(a, b)| a * b).sum())
        .collect();
    let mut gram = DMatrix::zeros(n, n);
    for (&(i, j), &c) in pairs.iter().zip(&entries) {
        gram[(i, j)] = c;
        gram[(j, i)] = c;
    }
    let eig = SymmetricEigen::new(gram);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let top = eig.eigenvalues[order[0]].max(0.0);
    let base_id = mu.content_id();
    let mut modes = Vec::new();
    let mut variances = Vec::new();
    for &k in &order {
        let lambda = eig.eigenvalues[k];
        if !(top > 0.0) || lambda <= EIGEN_CUTOFF * top || modes.len() + 1 >= n {
            break;
        }
        let v = eig.eigenvectors.column(k);
        // deterministic sign: largest-magnitude coefficient positive
        let pivot = (0..n).max_by(|&a, &b| v[a].abs().total_cmp(&v[b].abs()).then(b.cmp(&a))).unwrap();
        let sign = if v[pivot] < 0.0 { -1.0 } else { 1.0 };
        let scale = sign / lambda.sqrt();
        let dim = flat[0].len();
        let mut x = vec![0.0; dim];
        for (i, f) in flat.iter().enumerate() {
            let c = v[i] * scale;
            for (xd, fd) in x.iter_mut().zip(f) {
                *xd += c * fd;
            }
        }
        modes.push(metric.unflatten(&x, base_id.clone()));
        variances.push(lambda / n as f64);
    }
    Ok(PgaModel {
        mean: mu.clone(),
        modes,
        variances,
        params: p,
        metric,
        sample_count: n,
    })
}

/// `aₚ = g_ω(ϑₚ, log_μ s)`.
pub fn coefficients(model: &PgaModel, s: &ShapeRep) -> Result<Vec<f64>> {
    let v = rep_log(&model.mean, s)?;
    model.modes.iter().map(|m| model.metric.inner(m, &v)).collect()
}

/// `exp_μ(Σₚ aₚ ϑₚ)`; missing trailing coefficients are zero.
pub fn synthesize(model: &PgaModel, a: &[f64]) -> Result<ShapeRep> {
    if a.len() > model.modes.len() {
        return Err(FcmError::InvalidArgument(format!(
            "{} coefficients for {} modes",
            a.len(),
            model.modes.len()
        )));
    }
    let mut v = TangentRep::zeros_like(&model.mean);
    for (c, m) in a.iter().zip(&model.modes) {
        if *c != 0.0 {
            v.add_scaled(*c, m)?;
        }
    }
    rep_exp(&model.mean, &v)
}

/// Coefficient vectors with independent `N(0, λₚ)` entries.
pub fn sample_coefficients(model: &PgaModel, seed: u64, count: usize) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            model
                .variances
                .iter()
                .map(|l| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    z * l.max(0.0).sqrt()
                })
                .collect()
        })
        .collect()
}

pub fn sample(model: &PgaModel, seed: u64, count: usize) -> Result<Vec<ShapeRep>> {
    sample_coefficients(model, seed, count)
        .par_iter()
        .map(|a| synthesize(model, a))
        .collect()
}

/// Reference, encodings and mean after re-centering the reference on the data.
#[derive(Clone, Debug)]
pub struct Rebiased {
    pub reference: ReferencePrecomp,
    pub reps: Vec<ShapeRep>,
    pub mean: ShapeRep,
    pub mean_mesh: TriangleMesh,
}

/// Repeats `rounds` times: encode against the current reference, take the mean,
/// reconstruct it, and rebuild the reference from the reconstructed mean.
pub fn unbiased_reference(
    reference_mesh: &TriangleMesh,
    meshes: &[TriangleMesh],
    rounds: usize,
    opts: &ReconstructOptions,
) -> Result<Rebiased> {
    let mut reference = build_reference(reference_mesh.clone())?;
    let mut mesh = reference_mesh.clone();
    let mut round = 0;
    loop {
        let reps: Vec<ShapeRep> = meshes
            .par_iter()
            .map(|m| encode(&reference, m).map(|r| r.0))
            .collect::<Result<_>>()?;
        let mean = frechet_mean(&reps, MEAN_TOL, MEAN_MAX_ITER)?;
        if round == rounds {
            return Ok(Rebiased {
                reference,
                reps,
                mean,
                mean_mesh: mesh,
            });
        }
        let rec = Reconstructor::new(&reference)?.solve(&mean, opts)?;
        mesh = TriangleMesh::new(rec.mesh.vertices().to_vec(), rec.mesh.triangles().to_vec())?;
        reference = build_reference(mesh.clone())?;
        round += 1;
    }
}
