//! Acceptance criteria, one PASS/FAIL line each. Run with
//! `cargo test -p fcm-core --test acceptance`.

use std::f64::consts::PI;
use std::time::Instant;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use fcm::align::aligned_rms;
use fcm::eval::{
    accuracy_curve, compactness_curve, fcm_features, generalization_curve, modes_for_variance, pdm_features,
    pdm_fit, specificity, Metric, SpecificityOptions, DEFAULT_FEATURE_VARIANCE, DEFAULT_SHARES,
};
use fcm::flatten::{flatten, planar_distortion, vertical_projection};
use fcm::lie::{
    polar3, rotation_angle, so3_distance, so3_exp, so3_log, spd2_distance, spd2_exp, spd2_log, spd2_mul, Mat2,
    Mat3, Vec3,
};
use fcm::reconstruction::weighted_procrustes;
use fcm::reference::deformation_gradients;
use fcm::representation::relative_rotation_angles;
use fcm::statistics::{
    coefficients, frechet_mean, frechet_mean_detailed, pga, synthesize, unbiased_reference, MEAN_MAX_ITER,
    MEAN_TOL,
};
use fcm::synthetic::{self, Centerline, CohortParams};
use fcm::{
    build_reference, encode, geodesic, rep_distance, rep_exp, rep_log, DistanceParams, Point, ReconstructOptions,
    Reconstructor, ShapeRep, TangentRep, TriangleMesh,
};

type Outcome = std::result::Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn fe<E: std::fmt::Display>(e: E) -> String {
    format!("error: {e}")
}

fn encode_all(r: &fcm::ReferencePrecomp, meshes: &[TriangleMesh]) -> Result<Vec<ShapeRep>, String> {
    meshes.iter().map(|m| encode(r, m).map(|e| e.0).map_err(fe)).collect()
}

fn roundtrip_exactness() -> Outcome {
    let mut cases: Vec<(TriangleMesh, TriangleMesh)> = Vec::new();
    for (k, freq) in [5usize, 6, 7, 8, 9, 5, 6, 7, 8, 9].iter().enumerate() {
        let radii = [1.0, 0.5 + 0.04 * k as f64, 0.4];
        let reference = synthetic::ellipsoid(*freq, radii);
        let shape = synthetic::smooth_deformation(&reference, 0.06, 100 + k as u64);
        cases.push((reference, shape));
    }
    for k in 0..10 {
        let line = if k % 2 == 0 { Centerline::Straight } else { Centerline::Helix };
        let reference = synthetic::pipe(line);
        let shape = synthetic::smooth_deformation(&synthetic::bend(&reference, 0.3 * k as f64), 0.04, 200 + k);
        cases.push((reference, shape));
    }
    let mut rng = synthetic::rng(5);
    let (mut worst_rms, mut worst_iter, mut worst_time) = (0.0f64, 0usize, 0.0f64);
    for (reference, shape) in &cases {
        let tris = reference.triangle_count();
        if !(500..=2000).contains(&tris) {
            return Err(format!("case with {tris} triangles"));
        }
        let (rm, t) = synthetic::random_rigid_motion(&mut rng, 3.0);
        let shape = synthetic::rigidly_moved(shape, &rm, &t);
        let start = Instant::now();
        let r = build_reference(reference.clone()).map_err(fe)?;
        let (rep, _) = encode(&r, &shape).map_err(fe)?;
        let rec = Reconstructor::new(&r).map_err(fe)?.solve(&rep, &ReconstructOptions::default()).map_err(fe)?;
        worst_time = worst_time.max(start.elapsed().as_secs_f64());
        worst_rms = worst_rms.max(aligned_rms(rec.mesh.vertices(), shape.vertices()) / shape.bbox_diagonal());
        worst_iter = worst_iter.max(rec.report.iterations);
    }
    check(
        worst_rms < 1e-6 && worst_iter <= 2 && worst_time < 5.0,
        format!(
            "20 shapes: max RMS/diag {worst_rms:.2e}, max iterations {worst_iter}, max time {worst_time:.2}s"
        ),
    )
}

fn rigid_invariance() -> Outcome {
    let r = build_reference(synthetic::ellipsoid(6, [1.0, 0.7, 0.5])).map_err(fe)?;
    let shape = synthetic::smooth_deformation(r.mesh(), 0.08, 3);
    let (base, _) = encode(&r, &shape).map_err(fe)?;
    let mut rng = synthetic::rng(17);
    let (mut entry, mut dist) = (0.0f64, 0.0f64);
    for _ in 0..100 {
        let (rm, t) = synthetic::random_rigid_motion(&mut rng, 10.0);
        let (moved, _) = encode(&r, &synthetic::rigidly_moved(&shape, &rm, &t)).map_err(fe)?;
        for (a, b) in base.rotations.iter().zip(&moved.rotations) {
            entry = entry.max((a - b).amax());
        }
        for (a, b) in base.stretches.iter().zip(&moved.stretches) {
            entry = entry.max((a - b).amax());
        }
        dist = dist.max(rep_distance(&r, &base, &moved, DistanceParams::default()).map_err(fe)?);
    }
    check(
        entry < 1e-9 && dist < 1e-9,
        format!("100 motions: max entry deviation {entry:.2e}, max d_ω {dist:.2e}"),
    )
}

fn procrustes_objective(terms: &[(f64, Mat3, Mat3)], r: &Mat3) -> f64 {
    terms.iter().map(|(w, d, m)| w * (d - r * m).norm_squared()).sum()
}

/// Grid over exponential coordinates followed by a shrinking pattern search.
fn brute_force_min(terms: &[(f64, Mat3, Mat3)]) -> f64 {
    let n = 16;
    let mut starts: Vec<(f64, Mat3)> = Vec::new();
    for i in 0..=n {
        for j in 0..=n {
            for k in 0..=n {
                let v = Vec3::new(i as f64, j as f64, k as f64) * (2.0 * PI / n as f64) - Vec3::repeat(PI);
                if v.norm() <= PI {
                    let r = so3_exp(&v);
                    starts.push((procrustes_objective(terms, &r), r));
                }
            }
        }
    }
    starts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut best = f64::INFINITY;
    for (f0, r0) in starts.into_iter().take(6) {
        let (mut f, mut r) = (f0, r0);
        let mut step = 0.2;
        while step > 1e-11 {
            let mut improved = false;
            for axis in 0..3 {
                for sign in [-1.0, 1.0] {
                    let mut v = Vec3::zeros();
                    v[axis] = sign * step;
                    let cand = r * so3_exp(&v);
                    let fc = procrustes_objective(terms, &cand);
                    if fc < f {
                        f = fc;
                        r = cand;
                        improved = true;
                    }
                }
            }
            if !improved {
                step *= 0.5;
            }
        }
        best = best.min(f);
    }
    best
}

fn local_step_oracle() -> Outcome {
    let mut rng = synthetic::rng(23);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let count = rng.random_range(1..=4);
        let truth = synthetic::random_rotation(&mut rng);
        let terms: Vec<(f64, Mat3, Mat3)> = (0..count)
            .map(|_| {
                let w = rng.random_range(0.1..2.0);
                let m = synthetic::random_rotation(&mut rng)
                    * Mat3::from_diagonal(&Vec3::new(
                        rng.random_range(0.5..1.5),
                        rng.random_range(0.5..1.5),
                        rng.random_range(0.5..1.5),
                    ));
                let noise = Mat3::from_fn(|_, _| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    0.5 * z
                });
                (w, truth * m + noise, m)
            })
            .collect();
        let closed = procrustes_objective(&terms, &weighted_procrustes(&terms).map_err(fe)?);
        let brute = brute_force_min(&terms);
        worst = worst.max((closed - brute).abs());
    }
    check(worst < 1e-6, format!("200 instances: max |closed − brute force| {worst:.2e}"))
}

fn energy_monotonicity() -> Outcome {
    let mut worst = f64::NEG_INFINITY;
    let mut steps = 0;
    for k in 0..20u64 {
        let r = build_reference(synthetic::ellipsoid(4 + (k as usize % 3), [1.0, 0.7, 0.5])).map_err(fe)?;
        let shape = synthetic::smooth_deformation(r.mesh(), 0.1, k);
        let (rep, _) = encode(&r, &shape).map_err(fe)?;
        let mut noise = synthetic::rng(1000 + k);
        let v = TangentRep {
            rot: rep
                .rotations
                .iter()
                .map(|_| Vec3::from_fn(|_, _| 0.05 * noise.random_range(-1.0..1.0)))
                .collect(),
            stretch: rep
                .stretches
                .iter()
                .map(|_| {
                    let (a, b, c) = (
                        noise.random_range(-0.1..0.1),
                        noise.random_range(-0.1..0.1),
                        noise.random_range(-0.1..0.1),
                    );
                    Mat2::new(a, b, b, c)
                })
                .collect(),
            base_id: rep.content_id(),
        };
        let perturbed = rep_exp(&rep, &v).map_err(fe)?;
        let opts = ReconstructOptions {
            max_iter: 30,
            ..ReconstructOptions::default()
        };
        let rec = Reconstructor::new(&r).map_err(fe)?.solve(&perturbed, &opts).map_err(fe)?;
        let e = &rec.report.energies;
        if e[0] <= 0.0 {
            return Err(format!("shape {k}: perturbed representation reconstructed with zero energy"));
        }
        for w in e.windows(2) {
            worst = worst.max((w[1] - w[0]) / w[0]);
            steps += 1;
        }
    }
    check(
        worst <= 1e-12,
        format!("20 representations, {steps} steps: max relative increase {worst:.2e}"),
    )
}

fn random_spd(rng: &mut impl Rng) -> Mat2 {
    let a = Mat2::new(
        rng.random_range(-1.0..1.0),
        rng.random_range(-1.0..1.0),
        rng.random_range(-1.0..1.0),
        rng.random_range(-1.0..1.0),
    );
    a * a.transpose() + Mat2::identity() * 0.2
}

fn lie_kernel_suite() -> Outcome {
    let mut rng = synthetic::rng(31);
    let (mut exp_log, mut bi, mut group, mut flat, mut polar) = (0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for _ in 0..1000 {
        let axis = synthetic::random_unit(&mut rng);
        let v = axis * rng.random_range(0.0..PI - 1e-3);
        let back = so3_log(&so3_exp(&v)).map_err(fe)?;
        exp_log = exp_log.max((back - v).norm());

        let (q, r, g, h) = (
            synthetic::random_rotation(&mut rng),
            synthetic::random_rotation(&mut rng),
            synthetic::random_rotation(&mut rng),
            synthetic::random_rotation(&mut rng),
        );
        if rotation_angle(&(q.transpose() * r)) < PI - 1e-3 {
            let d = so3_distance(&q, &r).map_err(fe)?;
            bi = bi.max((so3_distance(&(g * q * h), &(g * r * h)).map_err(fe)? - d).abs());
        }

        let (a, b, c) = (random_spd(&mut rng), random_spd(&mut rng), random_spd(&mut rng));
        let ab_c = spd2_mul(&spd2_mul(&a, &b).map_err(fe)?, &c).map_err(fe)?;
        let a_bc = spd2_mul(&a, &spd2_mul(&b, &c).map_err(fe)?).map_err(fe)?;
        let inv = spd2_exp(&-spd2_log(&a).map_err(fe)?);
        group = group
            .max((ab_c - a_bc).norm())
            .max((spd2_mul(&a, &Mat2::identity()).map_err(fe)? - a).norm())
            .max((spd2_mul(&a, &inv).map_err(fe)? - Mat2::identity()).norm())
            .max((spd2_mul(&a, &b).map_err(fe)? - spd2_mul(&b, &a).map_err(fe)?).norm());
        let d = spd2_distance(&a, &b).map_err(fe)?;
        let log_diff = (spd2_log(&a).map_err(fe)? - spd2_log(&b).map_err(fe)?).norm();
        let translated = spd2_distance(&spd2_mul(&a, &c).map_err(fe)?, &spd2_mul(&b, &c).map_err(fe)?).map_err(fe)?;
        let mid = spd2_exp(&((spd2_log(&a).map_err(fe)? + spd2_log(&b).map_err(fe)?) * 0.5));
        let half = spd2_distance(&a, &mid).map_err(fe)?;
        flat = flat
            .max((d - log_diff).abs())
            .max((translated - d).abs())
            .max((2.0 * half - d).abs());

        let m = Mat3::from_fn(|_, _| rng.random_range(-1.0..1.0)) + Mat3::identity() * 2.0;
        if m.determinant() > 0.1 {
            let (rot, u) = polar3(&m).map_err(fe)?;
            polar = polar.max((rot * u - m).norm());
        }
    }
    check(
        exp_log < 1e-10 && bi < 1e-10 && group < 1e-10 && flat < 1e-10 && polar < 1e-10,
        format!(
            "exp/log {exp_log:.1e}, bi-invariance {bi:.1e}, Sym⁺ axioms {group:.1e}, flatness {flat:.1e}, polar {polar:.1e}"
        ),
    )
}

fn stretch_sum(mu: &ShapeRep, reps: &[ShapeRep]) -> Result<f64, String> {
    let mut total = vec![Mat2::zeros(); mu.stretches.len()];
    for s in reps {
        for (t, v) in total.iter_mut().zip(rep_log(mu, s).map_err(fe)?.stretch) {
            *t += v;
        }
    }
    Ok(total.iter().map(|m| m.norm_squared()).sum::<f64>().sqrt())
}

fn mean_and_pga() -> Outcome {
    let params = CohortParams {
        freq: 5,
        per_family: 10,
        ..CohortParams::default()
    };
    let c = synthetic::ellipsoid_families(&params, 8);
    let r = build_reference(c.template.clone()).map_err(fe)?;
    let reps = encode_all(&r, &c.meshes)?;
    let mean = frechet_mean_detailed(&reps, MEAN_TOL, MEAN_MAX_ITER).map_err(fe)?;
    let n = reps.len() as f64;
    let mut step = TangentRep::zeros_like(&reps[0]);
    for s in &reps {
        step.add_scaled(1.0 / n, &rep_log(&reps[0], s).map_err(fe)?).map_err(fe)?;
    }
    let one_step = rep_exp(&reps[0], &step).map_err(fe)?;
    let stretch_residual = stretch_sum(&one_step, &reps)?;

    let p = DistanceParams::default();
    let model = pga(&r, &reps, &mean.mean, p).map_err(fe)?;
    let mut ortho = 0.0f64;
    for (i, a) in model.modes.iter().enumerate() {
        for (j, b) in model.modes.iter().enumerate() {
            let g = model.metric.inner(a, b).map_err(fe)?;
            ortho = ortho.max((g - if i == j { 1.0 } else { 0.0 }).abs());
        }
    }
    let mut recon = 0.0f64;
    for s in &reps {
        let back = synthesize(&model, &coefficients(&model, s).map_err(fe)?).map_err(fe)?;
        recon = recon.max(rep_distance(&r, &back, s, p).map_err(fe)?);
    }
    check(
        mean.residual < 1e-10 && stretch_residual < 1e-10 && ortho < 1e-8 && recon < 1e-8,
        format!(
            "‖Σ log‖ {:.1e} after {} iterations, Sym⁺ residual after 1 step {stretch_residual:.1e}, orthonormality {ortho:.1e}, reconstruction {recon:.1e}",
            mean.residual, mean.iterations
        ),
    )
}

fn geodesic_validity() -> Outcome {
    let straight = synthetic::pipe(Centerline::Straight);
    let helix = synthetic::pipe(Centerline::Helix);
    let r = build_reference(straight.clone()).map_err(fe)?;
    let (a, _) = encode(&r, &straight).map_err(fe)?;
    let (b, _) = encode(&r, &helix).map_err(fe)?;
    let max_angle = relative_rotation_angles(&a, &b).map_err(fe)?.into_iter().fold(0.0, f64::max);
    let solver = Reconstructor::new(&r).map_err(fe)?;
    let (mut min_area, mut min_det) = (f64::INFINITY, f64::INFINITY);
    for k in 0..=10 {
        let s = geodesic(&a, &b, k as f64 / 10.0).map_err(fe)?;
        let mesh = solver.solve(&s, &ReconstructOptions::default()).map_err(fe)?.mesh;
        for t in 0..mesh.triangle_count() {
            min_area = min_area.min(mesh.triangle_area(t));
        }
        for d in deformation_gradients(&r, &mesh).map_err(fe)? {
            min_det = min_det.min(d.determinant());
        }
    }
    check(
        min_area > 0.0 && min_det > 0.0 && max_angle < PI && max_angle < 0.75,
        format!("11 meshes: min area {min_area:.2e}, min det D {min_det:.2e}, max relative angle {max_angle:.4} rad"),
    )
}

fn flattening() -> Outcome {
    let (n, rings, radius, height) = (32, 12, 1.0, 2.0);
    let cyl = build_reference(synthetic::open_cylinder(n, rings, radius, height)).map_err(fe)?;
    let f = flatten(&cyl, &ReconstructOptions::default()).map_err(fe)?;
    // analytic development: the polygonal cross-section unrolls to a straight segment
    let chord = synthetic::open_cylinder_development_width(n, radius) / n as f64;
    let unrolled: Vec<Point> = cyl
        .mesh()
        .vertices()
        .iter()
        .enumerate()
        .map(|(v, p)| Point::new(chord * (v % (n + 1)) as f64, p.z, 0.0))
        .collect();
    let planar: Vec<Point> = f.points.iter().map(|q| Point::new(q[0], q[1], 0.0)).collect();
    let oracle = aligned_rms(&planar, &unrolled) / cyl.mesh().bbox_diagonal();

    let hemi = build_reference(synthetic::hemisphere_patch(12, 1.0, PI / 2.0)).map_err(fe)?;
    let h = flatten(&hemi, &ReconstructOptions::default()).map_err(fe)?;
    let naive = planar_distortion(hemi.mesh(), &vertical_projection(&hemi));
    check(
        f.report.max_edge_distortion < 1e-6
            && f.report.planarity_residual < 1e-8
            && oracle < 1e-6
            && h.report.planarity_residual < 1e-8
            && h.report.max_edge_distortion > 0.0
            && h.report.mean_edge_distortion < naive.mean_edge()
            && h.report.max_edge_distortion < naive.max_edge(),
        format!(
            "cylinder: edge {:.1e}, planarity {:.1e}, vs unrolling {oracle:.1e}; hemisphere: mean/max edge {:.4}/{:.4} vs projection {:.4}/{:.4}",
            f.report.max_edge_distortion,
            f.report.planarity_residual,
            h.report.mean_edge_distortion,
            h.report.max_edge_distortion,
            naive.mean_edge(),
            naive.max_edge()
        ),
    )
}

fn classification() -> Outcome {
    let c = synthetic::ellipsoid_families(&CohortParams::default(), 42);
    let r = build_reference(c.template.clone()).map_err(fe)?;
    let reps = encode_all(&r, &c.meshes)?;
    let mu = frechet_mean(&reps, MEAN_TOL, MEAN_MAX_ITER).map_err(fe)?;
    let model = pga(&r, &reps, &mu, DistanceParams::default()).map_err(fe)?;
    let pdm = pdm_fit(&c.meshes).map_err(fe)?;
    let k_fcm = modes_for_variance(&model.variances, DEFAULT_FEATURE_VARIANCE);
    let k_pdm = modes_for_variance(&pdm.variances, DEFAULT_FEATURE_VARIANCE);
    let x_fcm = fcm_features(&model, &reps, Some(k_fcm)).map_err(fe)?;
    let x_pdm = pdm_features(&pdm, &c.meshes, Some(k_pdm)).map_err(fe)?;
    let a = accuracy_curve(&x_fcm, &c.labels, &DEFAULT_SHARES, 200, 1.0, 7).map_err(fe)?;
    let b = accuracy_curve(&x_pdm, &c.labels, &DEFAULT_SHARES, 200, 1.0, 7).map_err(fe)?;
    let dominates = a.iter().zip(&b).all(|(x, y)| x.mean >= y.mean);
    let curve: Vec<String> = a.iter().zip(&b).map(|(x, y)| format!("{:.3}/{:.3}", x.mean, y.mean)).collect();
    check(
        a[0].mean > 0.9 && dominates,
        format!(
            "{} + {} shapes, {k_fcm} FCM / {k_pdm} PDM modes, FCM/PDM accuracy over shares 0.1..0.9: {}",
            c.labels.iter().filter(|&&l| l < 0).count(),
            c.labels.iter().filter(|&&l| l > 0).count(),
            curve.join(" ")
        ),
    )
}

fn metrics_suite() -> Outcome {
    let c = synthetic::ellipsoid_families(&CohortParams::default(), 42);
    let r = build_reference(c.template.clone()).map_err(fe)?;
    let reps = encode_all(&r, &c.meshes[..20])?;
    let p = DistanceParams::default();
    let mu = frechet_mean(&reps, MEAN_TOL, MEAN_MAX_ITER).map_err(fe)?;
    let model = pga(&r, &reps, &mu, p).map_err(fe)?;
    let comp = compactness_curve(&model);
    let comp_ok = comp.windows(2).all(|w| w[1] >= w[0]) && *comp.last().unwrap() == 1.0;
    let gen = generalization_curve(&r, &reps, None, p, Metric::Fcm, &ReconstructOptions::default()).map_err(fe)?;
    let worst_rise = gen.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max);

    let mut zero = model.clone();
    zero.variances.iter_mut().for_each(|v| *v = 0.0);
    let expected = reps
        .iter()
        .map(|t| rep_distance(&r, &mu, t, p))
        .collect::<fcm::Result<Vec<f64>>>()
        .map_err(fe)?
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    let opts = SpecificityOptions {
        samples: 50,
        ..SpecificityOptions::default()
    };
    let spec = specificity(&r, &zero, &reps, zero.mode_count(), &opts).map_err(fe)?;
    check(
        comp_ok && worst_rise <= 1e-9 && (spec - expected).abs() < 1e-9,
        format!(
            "compactness ends at {}, generalization over {} mode counts max rise {worst_rise:.2e}, zero-variance specificity {spec:.10} vs {expected:.10}",
            comp.last().unwrap(),
            gen.len()
        ),
    )
}

fn performance() -> Outcome {
    let template = synthetic::ellipsoid(10, [1.0, 0.6, 0.45]);
    if template.triangle_count() != 2000 {
        return Err(format!("template has {} triangles", template.triangle_count()));
    }
    let pair = [
        synthetic::smooth_deformation(&template, 0.05, 1),
        synthetic::smooth_deformation(&template, 0.05, 2),
    ];
    let start = Instant::now();
    unbiased_reference(&template, &pair, 2, &ReconstructOptions::default()).map_err(fe)?;
    let secs = start.elapsed().as_secs_f64();
    check(secs < 10.0, format!("pairwise mean of two 2000-triangle shapes with two reconstructions: {secs:.2}s"))
}

fn main() {
    rayon::ThreadPoolBuilder::new().num_threads(1).build_global().ok();
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("roundtrip exactness", roundtrip_exactness),
        ("rigid invariance", rigid_invariance),
        ("local-step oracle", local_step_oracle),
        ("energy monotonicity", energy_monotonicity),
        ("Lie kernel suite", lie_kernel_suite),
        ("mean and PGA", mean_and_pga),
        ("geodesic interpolation validity", geodesic_validity),
        ("flattening", flattening),
        ("synthetic classification", classification),
        ("metrics suite", metrics_suite),
        ("performance", performance),
    ];
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name}: {detail} [{secs:.1}s]", k + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {detail} [{secs:.1}s]", k + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
