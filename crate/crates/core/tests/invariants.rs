use proptest::prelude::*;

use fcm::align::aligned_rms;
use fcm::lie::{polar3, so3_distance, so3_exp, spd2_distance, spd2_exp, spd2_mul, Mat2, Mat3, Vec3};
use fcm::mesh::{obj_string, parse_mesh};
use fcm::reference::ReferencePrecomp;
use fcm::statistics::{frechet_mean, pga, MEAN_MAX_ITER, MEAN_TOL};
use fcm::synthetic;
use fcm::{
    build_reference, encode, rep_distance, rep_exp, rep_log, DistanceParams, MeshFormat, Point, ReconstructOptions,
    Reconstructor, ShapeRep, TangentRep, TriangleMesh,
};

fn motion() -> impl Strategy<Value = (Mat3, Vec3)> {
    (prop::array::uniform3(-3.0..3.0f64), prop::array::uniform3(-10.0..10.0f64))
        .prop_map(|(w, t)| (so3_exp(&Vec3::from(w)), Vec3::from(t)))
}

fn spd() -> impl Strategy<Value = Mat2> {
    (-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64).prop_map(|(a, b, c)| spd2_exp(&Mat2::new(a, b, b, c)))
}

fn sample_pair() -> (TriangleMesh, TriangleMesh, TriangleMesh) {
    let base = synthetic::ellipsoid(4, [1.0, 0.7, 0.5]);
    let s = synthetic::smooth_deformation(&base, 0.06, 1);
    let t = synthetic::smooth_deformation(&base, 0.06, 2);
    (base, s, t)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn gradients_are_rigidly_equivariant((r, t) in motion()) {
        let (base, s, _) = sample_pair();
        let reference = build_reference(base).unwrap();
        let d = reference.deformation_gradients(&s).unwrap();
        let dm = reference.deformation_gradients(&synthetic::rigidly_moved(&s, &r, &t)).unwrap();
        for (a, b) in d.iter().zip(&dm) {
            prop_assert!((r * a - b).amax() < 1e-12);
        }
    }

    #[test]
    fn encoding_is_rigidly_invariant((r, t) in motion()) {
        let (base, s, _) = sample_pair();
        let reference = build_reference(base).unwrap();
        let (a, _) = encode(&reference, &s).unwrap();
        let (b, _) = encode(&reference, &synthetic::rigidly_moved(&s, &r, &t)).unwrap();
        for (x, y) in a.rotations.iter().zip(&b.rotations) {
            prop_assert!((x - y).amax() < 1e-9);
        }
        for (x, y) in a.stretches.iter().zip(&b.stretches) {
            prop_assert!((x - y).amax() < 1e-9);
        }
    }

    #[test]
    fn distance_is_scale_invariant(c in 0.05..20.0f64) {
        let (base, s, t) = sample_pair();
        let p = DistanceParams::default();
        let d = |m: f64| {
            let r = build_reference(base.map_vertices(|v| v * m)).unwrap();
            let a = encode(&r, &s.map_vertices(|v| v * m)).unwrap().0;
            let b = encode(&r, &t.map_vertices(|v| v * m)).unwrap().0;
            rep_distance(&r, &a, &b, p).unwrap()
        };
        let (d1, dc) = (d(1.0), d(c));
        prop_assert!((dc - d1).abs() < 1e-9 * d1);
    }

    #[test]
    fn distance_ignores_frame_twist(twist in -3.1..3.1f64) {
        let (base, s, t) = sample_pair();
        let p = DistanceParams::default();
        let d = |r: &ReferencePrecomp| {
            let a = encode(r, &s).unwrap().0;
            let b = encode(r, &t).unwrap().0;
            rep_distance(r, &a, &b, p).unwrap()
        };
        let plain = d(&build_reference(base.clone()).unwrap());
        let twisted = d(&ReferencePrecomp::new(base, twist).unwrap());
        prop_assert!((plain - twisted).abs() < 1e-9 * plain.max(1.0));
    }

    #[test]
    fn so3_distance_is_a_metric(
        a in prop::array::uniform3(-0.7..0.7f64),
        b in prop::array::uniform3(-0.7..0.7f64),
        c in prop::array::uniform3(-0.7..0.7f64),
    ) {
        let (p, q, r) = (so3_exp(&Vec3::from(a)), so3_exp(&Vec3::from(b)), so3_exp(&Vec3::from(c)));
        let pq = so3_distance(&p, &q).unwrap();
        prop_assert!((pq - so3_distance(&q, &p).unwrap()).abs() < 1e-9);
        prop_assert!(so3_distance(&p, &r).unwrap() <= pq + so3_distance(&q, &r).unwrap() + 1e-9);
    }

    #[test]
    fn spd2_translation_invariance(u in spd(), v in spd(), w in spd()) {
        let d = spd2_distance(&u, &v).unwrap();
        let dw = spd2_distance(&spd2_mul(&u, &w).unwrap(), &spd2_mul(&v, &w).unwrap()).unwrap();
        prop_assert!((d - dw).abs() < 1e-10);
    }

    #[test]
    fn polar_factors_match_svd(m in prop::array::uniform9(-1.0..1.0f64)) {
        let d = Mat3::from_row_slice(&m) + Mat3::identity() * 2.5;
        prop_assume!(d.determinant() > 0.2);
        let (r, u) = polar3(&d).unwrap();
        prop_assert!((r * u - d).norm() < 1e-10);
        let mut ev: Vec<f64> = u.symmetric_eigenvalues().iter().copied().collect();
        let mut sv: Vec<f64> = d.singular_values().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        sv.sort_by(f64::total_cmp);
        for (a, b) in ev.iter().zip(&sv) {
            prop_assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn flattening_is_rigidly_invariant((r, t) in motion()) {
        let patch = synthetic::hemisphere_patch(5, 1.0, 1.2);
        let opts = ReconstructOptions::default();
        let a = fcm::flatten::flatten(&build_reference(patch.clone()).unwrap(), &opts).unwrap();
        let moved = build_reference(synthetic::rigidly_moved(&patch, &r, &t)).unwrap();
        let b = fcm::flatten::flatten(&moved, &opts).unwrap();
        prop_assert!(aligned_rms(a.mesh.vertices(), b.mesh.vertices()) < 1e-8);
    }
}

#[test]
fn frames_are_orthonormal_and_right_handed() {
    let r = build_reference(synthetic::pipe(synthetic::Centerline::Helix)).unwrap();
    for f in r.frames() {
        assert!((f.transpose() * f - Mat3::identity()).norm() < 1e-12);
        assert!(f.determinant() > 0.0);
    }
}

#[test]
fn spanning_tree_is_deterministic() {
    let text = obj_string(&synthetic::ellipsoid(3, [1.0, 0.8, 0.6]), None);
    let a = build_reference(parse_mesh(&text, MeshFormat::Obj).unwrap()).unwrap();
    let b = build_reference(parse_mesh(&text, MeshFormat::Obj).unwrap()).unwrap();
    assert_eq!(a.spanning_tree(), b.spanning_tree());
    assert_eq!(a.spanning_tree().root, 0);
}

#[test]
#[ignore = "the edge-rotation term is resolution dependent; midpoint subdivision halves it"]
fn distance_is_stable_under_refinement() {
    let (base, s, t) = sample_pair();
    let p = DistanceParams::default();
    let coarse = build_reference(base.clone()).unwrap();
    let d0 = rep_distance(
        &coarse,
        &encode(&coarse, &s).unwrap().0,
        &encode(&coarse, &t).unwrap().0,
        p,
    )
    .unwrap();
    let fine = build_reference(base.subdivide()).unwrap();
    let d1 = rep_distance(
        &fine,
        &encode(&fine, &s.subdivide()).unwrap().0,
        &encode(&fine, &t.subdivide()).unwrap().0,
        p,
    )
    .unwrap();
    assert!((d1 - d0).abs() < 0.01 * d0, "coarse {d0}, refined {d1}");
}

/// Rotation and stretch sums of `d_ω²`, recovered from two values of `ω`.
fn distance_terms(r: &ReferencePrecomp, s: &TriangleMesh, t: &TriangleMesh) -> (f64, f64) {
    let a = encode(r, s).unwrap().0;
    let b = encode(r, t).unwrap().0;
    let d1 = rep_distance(r, &a, &b, DistanceParams::new(1.0).unwrap()).unwrap().powi(2);
    let d2 = rep_distance(r, &a, &b, DistanceParams::new(2.0).unwrap()).unwrap().powi(2);
    let rot = (d2 - 2.0 * d1) / 6.0;
    (rot, d1 - rot)
}

#[test]
fn midpoint_subdivision_halves_rotation_term() {
    let (base, s, t) = sample_pair();
    let (rot0, str0) = distance_terms(&build_reference(base.clone()).unwrap(), &s, &t);
    let (rot1, str1) = distance_terms(&build_reference(base.subdivide()).unwrap(), &s.subdivide(), &t.subdivide());
    assert!((str1 - str0).abs() < 1e-9 * str0, "{str0} {str1}");
    assert!((rot1 - 0.5 * rot0).abs() < 1e-9 * rot0, "{rot0} {rot1}");
}

fn perturbed(reference: &ReferencePrecomp, rep: &ShapeRep, seed: u64) -> ShapeRep {
    use rand::Rng;
    let mut rng = synthetic::rng(seed);
    let v = TangentRep {
        rot: rep.rotations.iter().map(|_| Vec3::from_fn(|_, _| rng.random_range(-0.03..0.03))).collect(),
        stretch: rep
            .stretches
            .iter()
            .map(|_| {
                let (a, b, c) = (rng.random_range(-0.05..0.05), rng.random_range(-0.05..0.05), rng.random_range(-0.05..0.05));
                Mat2::new(a, b, b, c)
            })
            .collect(),
        base_id: rep.content_id(),
    };
    let out = rep_exp(rep, &v).unwrap();
    out.ensure_bound(reference).unwrap();
    out
}

#[test]
fn converged_solution_is_a_fixed_point() {
    let (base, s, _) = sample_pair();
    let r = build_reference(base).unwrap();
    let rep = perturbed(&r, &encode(&r, &s).unwrap().0, 4);
    let solver = Reconstructor::new(&r).unwrap();
    let opts = ReconstructOptions {
        tol: 1e-15,
        max_iter: 5000,
        ..ReconstructOptions::default()
    };
    let rec = solver.solve(&rep, &opts).unwrap();
    let (rotations, positions) = solver.sweep(&rep, rec.mesh.vertices()).unwrap();
    let rot_change = rotations
        .iter()
        .zip(&rec.rotations)
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    let diag = rec.mesh.bbox_diagonal();
    let moved = positions
        .iter()
        .zip(rec.mesh.vertices())
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    assert!(rot_change < 1e-8, "rotations moved by {rot_change:e} after {} iterations", rec.report.iterations);
    assert!(moved < 1e-8 * diag, "vertices moved by {moved:e}");
}

#[test]
fn reconstruction_is_deterministic() {
    let (base, s, _) = sample_pair();
    let r = build_reference(base).unwrap();
    let rep = perturbed(&r, &encode(&r, &s).unwrap().0, 5);
    let run = || {
        let rec = Reconstructor::new(&r).unwrap().solve(&rep, &ReconstructOptions::default()).unwrap();
        obj_string(&rec.mesh, None)
    };
    assert_eq!(run(), run());
}

fn cohort_reps(r: &ReferencePrecomp, meshes: &[TriangleMesh]) -> Vec<ShapeRep> {
    meshes.iter().map(|m| encode(r, m).unwrap().0).collect()
}

fn small_cohort() -> (ReferencePrecomp, Vec<TriangleMesh>) {
    let params = synthetic::CohortParams {
        freq: 3,
        per_family: 5,
        ..synthetic::CohortParams::default()
    };
    let c = synthetic::ellipsoid_families(&params, 21);
    (build_reference(c.template).unwrap(), c.meshes)
}

#[test]
fn pga_trace_identity() {
    let (r, meshes) = small_cohort();
    let reps = cohort_reps(&r, &meshes);
    let mu = frechet_mean(&reps, MEAN_TOL, MEAN_MAX_ITER).unwrap();
    let model = pga(&r, &reps, &mu, DistanceParams::default()).unwrap();
    let total: f64 = model.variances.iter().sum();
    let energy: f64 = reps
        .iter()
        .map(|s| {
            let v = rep_log(&mu, s).unwrap();
            model.metric.inner(&v, &v).unwrap()
        })
        .sum::<f64>()
        / reps.len() as f64;
    assert!((total - energy).abs() < 1e-8 * energy.max(1.0));
}

#[test]
fn mean_invariant_under_permutation_and_motion() {
    let (r, meshes) = small_cohort();
    let p = DistanceParams::default();
    let mu = frechet_mean(&cohort_reps(&r, &meshes), MEAN_TOL, MEAN_MAX_ITER).unwrap();
    let mut shuffled = meshes.clone();
    shuffled.reverse();
    shuffled.swap(0, 3);
    let mu_perm = frechet_mean(&cohort_reps(&r, &shuffled), MEAN_TOL, MEAN_MAX_ITER).unwrap();
    assert!(rep_distance(&r, &mu, &mu_perm, p).unwrap() < 1e-9);
    let mut rng = synthetic::rng(2);
    let moved: Vec<TriangleMesh> = meshes
        .iter()
        .map(|m| {
            let (rm, t) = synthetic::random_rigid_motion(&mut rng, 4.0);
            synthetic::rigidly_moved(m, &rm, &t)
        })
        .collect();
    let mu_moved = frechet_mean(&cohort_reps(&r, &moved), MEAN_TOL, MEAN_MAX_ITER).unwrap();
    assert!(rep_distance(&r, &mu, &mu_moved, p).unwrap() < 1e-9);
}

#[test]
fn single_direction_data_has_one_mode() {
    let (r, meshes) = small_cohort();
    let reps = cohort_reps(&r, &meshes);
    let xi = rep_log(&reps[0], &reps[1]).unwrap();
    let line: Vec<ShapeRep> = [-1.0, -0.5, -0.1, 0.2, 0.6, 0.8]
        .iter()
        .map(|&a| rep_exp(&reps[0], &xi.scaled(a)).unwrap())
        .collect();
    let mu = frechet_mean(&line, MEAN_TOL, MEAN_MAX_ITER).unwrap();
    let model = pga(&r, &line, &mu, DistanceParams::default()).unwrap();
    let second = model.variances.get(1).copied().unwrap_or(0.0);
    assert!(second / model.variances[0] < 1e-10, "{:?}", model.variances);
}

#[test]
fn hemisphere_flattening_is_planar() {
    let patch = synthetic::hemisphere_patch(8, 1.0, std::f64::consts::FRAC_PI_2);
    let f = fcm::flatten::flatten(&build_reference(patch).unwrap(), &ReconstructOptions::default()).unwrap();
    assert!(f.report.planarity_residual < 1e-6);
    assert!(f.mesh.vertices().iter().all(|p: &Point| p.z == 0.0));
}

#[test]
fn resampling_converges_stretch_and_shrinks_rotation() {
    let terms = |f: usize| {
        let base = synthetic::ellipsoid(f, [1.0, 0.7, 0.5]);
        let s = synthetic::smooth_deformation(&base, 0.06, 1);
        let t = synthetic::smooth_deformation(&base, 0.06, 2);
        distance_terms(&build_reference(base).unwrap(), &s, &t)
    };
    let (rot0, str0) = terms(6);
    let (rot1, str1) = terms(12);
    assert!((str1 - str0).abs() < 0.01 * str0, "{str0} {str1}");
    let ratio = rot0 / rot1;
    assert!((3.5..4.5).contains(&ratio), "{ratio}");
}
