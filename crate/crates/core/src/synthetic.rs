//! Seeded synthetic shapes and cohorts.

use std::collections::HashMap;
use std::f64::consts::{PI, TAU};

use nalgebra::{Quaternion, UnitQuaternion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::lie::{Mat3, Vec3};
use crate::mesh::{Point, TriangleMesh};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn build(vertices: Vec<Point>, triangles: Vec<[usize; 3]>) -> TriangleMesh {
    TriangleMesh::new(vertices, triangles).expect("generator produced an invalid mesh")
}

/// Unit-sphere geodesic polyhedron with `20·freq²` faces.
pub fn icosphere(freq: usize) -> TriangleMesh {
    let freq = freq.max(1);
    let g = (1.0 + 5f64.sqrt()) / 2.0;
    let base = [
        [-1.0, g, 0.0],
        [1.0, g, 0.0],
        [-1.0, -g, 0.0],
        [1.0, -g, 0.0],
        [0.0, -1.0, g],
        [0.0, 1.0, g],
        [0.0, -1.0, -g],
        [0.0, 1.0, -g],
        [g, 0.0, -1.0],
        [g, 0.0, 1.0],
        [-g, 0.0, -1.0],
        [-g, 0.0, 1.0],
    ]
    .map(|p| Point::new(p[0], p[1], p[2]).normalize());
    let faces: [[usize; 3]; 20] = [
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    let mut vertices = Vec::new();
    let mut index: HashMap<Vec<(usize, usize)>, usize> = HashMap::new();
    let mut vertex = |weights: [(usize, usize); 3], vertices: &mut Vec<Point>| {
        let mut key: Vec<(usize, usize)> = weights.into_iter().filter(|w| w.1 > 0).collect();
        key.sort_unstable();
        *index.entry(key).or_insert_with(|| {
            let p: Point = weights
                .iter()
                .map(|&(v, w)| base[v] * w as f64)
                .sum::<Point>();
            vertices.push(p.normalize());
            vertices.len() - 1
        })
    };
    let mut triangles = Vec::with_capacity(20 * freq * freq);
    for [a, b, c] in faces {
        let mut at = |i: usize, j: usize, vertices: &mut Vec<Point>| {
            vertex([(a, freq - i - j), (b, i), (c, j)], vertices)
        };
        for i in 0..freq {
            for j in 0..freq - i {
                let p = at(i, j, &mut vertices);
                let q = at(i + 1, j, &mut vertices);
                let r = at(i, j + 1, &mut vertices);
                triangles.push([p, q, r]);
                if i + j + 1 < freq {
                    let s = at(i + 1, j + 1, &mut vertices);
                    triangles.push([q, s, r]);
                }
            }
        }
    }
    build(vertices, triangles)
}

pub fn ellipsoid(freq: usize, radii: [f64; 3]) -> TriangleMesh {
    icosphere(freq).map_vertices(|v| Point::new(v.x * radii[0], v.y * radii[1], v.z * radii[2]))
}

/// Outward Gaussian bump of height `height` and angular width `width` (radians)
/// around direction `center`, applied on the unit sphere before scaling to `radii`.
pub fn ellipsoid_with_bump(
    freq: usize,
    radii: [f64; 3],
    center: Vec3,
    height: f64,
    width: f64,
) -> TriangleMesh {
    let c = center.normalize();
    icosphere(freq).map_vertices(|v| {
        let angle = v.dot(&c).clamp(-1.0, 1.0).acos();
        let s = 1.0 + height * (-0.5 * (angle / width).powi(2)).exp();
        Point::new(v.x * radii[0] * s, v.y * radii[1] * s, v.z * radii[2] * s)
    })
}

/// Smooth random displacement `x + a·L·Σₖ cₖ·sin(fₖ·dₖ·x/L + φₖ)`, `L` the bbox diagonal.
pub fn smooth_deformation(mesh: &TriangleMesh, amplitude: f64, seed: u64) -> TriangleMesh {
    let mut rng = rng(seed);
    let scale = mesh.bbox_diagonal();
    let waves: Vec<(Vec3, Vec3, f64, f64)> = (0..3)
        .map(|_| {
            let dir = random_unit(&mut rng);
            let coef = random_unit(&mut rng) / 3.0;
            let freq = rng.random_range(1.0..3.0);
            let phase = rng.random_range(0.0..TAU);
            (dir, coef, freq, phase)
        })
        .collect();
    mesh.map_vertices(|v| {
        let mut out = *v;
        for (dir, coef, freq, phase) in &waves {
            out += coef * (amplitude * scale * (freq * dir.dot(v) / scale + phase).sin());
        }
        out
    })
}

/// Independent Gaussian noise per vertex with standard deviation `sigma` times the mean edge length.
pub fn randomly_perturbed(mesh: &TriangleMesh, sigma: f64, seed: u64) -> TriangleMesh {
    let mut rng = rng(seed);
    let edges = mesh.edge_map();
    let mean_edge = edges
        .keys()
        .map(|&(a, b)| (mesh.vertices()[a] - mesh.vertices()[b]).norm())
        .sum::<f64>()
        / edges.len() as f64;
    let noisy = mesh
        .vertices()
        .iter()
        .map(|v| v + random_normal3(&mut rng) * sigma * mean_edge)
        .collect();
    mesh.with_vertices(noisy).unwrap()
}

/// Bends the x-axis into a circular arc of curvature `kappa` within the x–y plane.
pub fn bend(mesh: &TriangleMesh, kappa: f64) -> TriangleMesh {
    if kappa.abs() < 1e-12 {
        return mesh.clone();
    }
    let rho = 1.0 / kappa;
    mesh.map_vertices(|v| {
        let theta = kappa * v.x;
        let r = rho - v.y;
        Point::new(r * theta.sin(), rho - r * theta.cos(), v.z)
    })
}

pub fn random_unit(rng: &mut impl Rng) -> Vec3 {
    loop {
        let v = random_normal3(rng);
        let n = v.norm();
        if n > 1e-6 {
            return v / n;
        }
    }
}

fn random_normal3(rng: &mut impl Rng) -> Vec3 {
    Vec3::new(
        StandardNormal.sample(rng),
        StandardNormal.sample(rng),
        StandardNormal.sample(rng),
    )
}

/// Uniformly distributed rotation.
pub fn random_rotation(rng: &mut impl Rng) -> Mat3 {
    let q = Quaternion::new(
        StandardNormal.sample(rng),
        StandardNormal.sample(rng),
        StandardNormal.sample(rng),
        StandardNormal.sample(rng),
    );
    UnitQuaternion::from_quaternion(q).to_rotation_matrix().into_inner()
}

/// Uniform rotation and Gaussian translation with standard deviation `spread`.
pub fn random_rigid_motion(rng: &mut impl Rng, spread: f64) -> (Mat3, Vec3) {
    let r = random_rotation(rng);
    (r, random_normal3(rng) * spread)
}

pub fn rigidly_moved(mesh: &TriangleMesh, r: &Mat3, t: &Vec3) -> TriangleMesh {
    mesh.map_vertices(|v| r * v + t)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Centerline {
    Straight,
    Helix,
}

pub const PIPE_RINGS: usize = 61;
pub const PIPE_SEGMENTS: usize = 10;
pub const PIPE_LENGTH: f64 = 2.0;
pub const PIPE_RADIUS: f64 = 0.15;

/// Closed tube of `61` rings with `10` vertices each plus two cap centers
/// (612 vertices, 1220 triangles), around a straight or helical centerline of
/// equal arclength.
pub fn pipe(centerline: Centerline) -> TriangleMesh {
    let (rings, seg) = (PIPE_RINGS, PIPE_SEGMENTS);
    // helix (a cos u, a sin u, b u) with one turn over the pipe length
    let c = PIPE_LENGTH / TAU;
    let a = 0.25;
    let b = (c * c - a * a).sqrt();
    let frame = |s: f64| -> (Point, Vec3, Vec3) {
        match centerline {
            Centerline::Straight => (Point::new(0.0, 0.0, s - 0.5 * PIPE_LENGTH), Vec3::x(), Vec3::y()),
            Centerline::Helix => {
                let u = s / c;
                let p = Point::new(a * u.cos() - a, a * u.sin(), b * u - 0.5 * b * TAU);
                let tangent = Vec3::new(-a * u.sin(), a * u.cos(), b) / c;
                let normal = Vec3::new(-u.cos(), -u.sin(), 0.0);
                (p, normal, tangent.cross(&normal))
            }
        }
    };
    let mut vertices = Vec::with_capacity(rings * seg + 2);
    for k in 0..rings {
        let s = PIPE_LENGTH * k as f64 / (rings - 1) as f64;
        let (p, n, bn) = frame(s);
        for j in 0..seg {
            let phi = TAU * j as f64 / seg as f64;
            vertices.push(p + (n * phi.cos() + bn * phi.sin()) * PIPE_RADIUS);
        }
    }
    let start = vertices.len();
    vertices.push(frame(0.0).0);
    vertices.push(frame(PIPE_LENGTH).0);
    let id = |k: usize, j: usize| k * seg + j % seg;
    let mut triangles = Vec::with_capacity(2 * (rings - 1) * seg + 2 * seg);
    for k in 0..rings - 1 {
        for j in 0..seg {
            triangles.push([id(k, j), id(k, j + 1), id(k + 1, j + 1)]);
            triangles.push([id(k, j), id(k + 1, j + 1), id(k + 1, j)]);
        }
    }
    for j in 0..seg {
        triangles.push([start, id(0, j + 1), id(0, j)]);
        triangles.push([start + 1, id(rings - 1, j), id(rings - 1, j + 1)]);
    }
    orient_outward(vertices, triangles)
}

/// Flips all triangles if the enclosed signed volume is negative.
fn orient_outward(vertices: Vec<Point>, mut triangles: Vec<[usize; 3]>) -> TriangleMesh {
    let volume: f64 = triangles
        .iter()
        .map(|&[a, b, c]| vertices[a].dot(&vertices[b].cross(&vertices[c])))
        .sum();
    if volume < 0.0 {
        for t in &mut triangles {
            t.swap(1, 2);
        }
    }
    build(vertices, triangles)
}

/// Open cylinder with a duplicated seam: `(n_around + 1) × (n_along + 1)` vertices.
pub fn open_cylinder(n_around: usize, n_along: usize, radius: f64, height: f64) -> TriangleMesh {
    let cols = n_around + 1;
    let mut vertices = Vec::with_capacity(cols * (n_along + 1));
    for l in 0..=n_along {
        let z = height * l as f64 / n_along as f64;
        for k in 0..cols {
            let theta = TAU * k as f64 / n_around as f64;
            vertices.push(Point::new(radius * theta.cos(), radius * theta.sin(), z));
        }
    }
    let id = |k: usize, l: usize| l * cols + k;
    let mut triangles = Vec::with_capacity(2 * n_around * n_along);
    for l in 0..n_along {
        for k in 0..n_around {
            triangles.push([id(k, l), id(k + 1, l), id(k + 1, l + 1)]);
            triangles.push([id(k, l), id(k + 1, l + 1), id(k, l + 1)]);
        }
    }
    build(vertices, triangles)
}

/// Width of the exact polyhedral development of [`open_cylinder`].
pub fn open_cylinder_development_width(n_around: usize, radius: f64) -> f64 {
    n_around as f64 * 2.0 * radius * (PI / n_around as f64).sin()
}

/// Spherical cap up to polar angle `max_polar`, triangulated in `rings`
/// concentric rings with `6k` vertices on ring `k`.
pub fn hemisphere_patch(rings: usize, radius: f64, max_polar: f64) -> TriangleMesh {
    let mut vertices = vec![Point::new(0.0, 0.0, radius)];
    let mut ring_start = vec![0usize];
    let mut ring_len = vec![1usize];
    for k in 1..=rings {
        let theta = max_polar * k as f64 / rings as f64;
        let n = 6 * k;
        ring_start.push(vertices.len());
        ring_len.push(n);
        for j in 0..n {
            let phi = TAU * j as f64 / n as f64;
            vertices.push(Point::new(
                radius * theta.sin() * phi.cos(),
                radius * theta.sin() * phi.sin(),
                radius * theta.cos(),
            ));
        }
    }
    let mut triangles = Vec::new();
    for k in 1..=rings {
        let (s0, n0, s1, n1) = (ring_start[k - 1], ring_len[k - 1], ring_start[k], ring_len[k]);
        let inner = |i: usize| s0 + i % n0;
        let outer = |i: usize| s1 + i % n1;
        if n0 == 1 {
            for j in 0..n1 {
                triangles.push([s0, outer(j), outer(j + 1)]);
            }
            continue;
        }
        let (mut i0, mut i1) = (0, 0);
        while i0 < n0 || i1 < n1 {
            // compare next angular positions (i0+1)/n0 and (i1+1)/n1
            let advance_outer = i0 == n0 || (i1 < n1 && (i1 + 1) * n0 <= (i0 + 1) * n1);
            if advance_outer {
                triangles.push([inner(i0), outer(i1), outer(i1 + 1)]);
                i1 += 1;
            } else {
                triangles.push([inner(i0), outer(i1), inner(i0 + 1)]);
                i0 += 1;
            }
        }
    }
    build(vertices, triangles)
}

/// Planar `nx × ny` grid on `[0, sx] × [0, sy]`, each cell split along its diagonal.
pub fn planar_grid(nx: usize, ny: usize, sx: f64, sy: f64) -> TriangleMesh {
    let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            vertices.push(Point::new(sx * i as f64 / nx as f64, sy * j as f64 / ny as f64, 0.0));
        }
    }
    let id = |i: usize, j: usize| j * (nx + 1) + i;
    let mut triangles = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            triangles.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
            triangles.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    build(vertices, triangles)
}

/// Labelled two-family cohort in correspondence with a common template.
#[derive(Clone, Debug)]
pub struct Cohort {
    pub template: TriangleMesh,
    pub meshes: Vec<TriangleMesh>,
    /// `-1` for family A, `+1` for family B (with bump).
    pub labels: Vec<i8>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CohortParams {
    pub freq: usize,
    pub per_family: usize,
    pub radii: [f64; 3],
    /// Relative standard deviation of the random axis scalings.
    pub radius_jitter: f64,
    /// Bending curvatures are drawn from `[-max_bend, max_bend]`.
    pub max_bend: f64,
    pub wobble: f64,
    pub bump_height: f64,
    pub bump_width: f64,
}

impl Default for CohortParams {
    fn default() -> Self {
        CohortParams {
            freq: 7,
            per_family: 60,
            radii: [1.0, 0.55, 0.45],
            radius_jitter: 0.08,
            max_bend: 0.9,
            wobble: 0.01,
            bump_height: 0.12,
            bump_width: 0.25,
        }
    }
}

/// Ellipsoids with random axis scalings, bending, smooth wobble and rigid pose;
/// family B additionally carries a localized bump.
pub fn ellipsoid_families(params: &CohortParams, seed: u64) -> Cohort {
    let mut rng = rng(seed);
    let sphere = icosphere(params.freq);
    let template = ellipsoid(params.freq, params.radii);
    let bump_center = Vec3::new(0.35, 0.3, 1.0).normalize();
    let mut meshes = Vec::with_capacity(2 * params.per_family);
    let mut labels = Vec::with_capacity(2 * params.per_family);
    for k in 0..2 * params.per_family {
        let label: i8 = if k % 2 == 0 { -1 } else { 1 };
        let jitter: [f64; 3] = std::array::from_fn(|_| {
            let z: f64 = StandardNormal.sample(&mut rng);
            1.0 + params.radius_jitter * z
        });
        let radii: [f64; 3] = std::array::from_fn(|a| params.radii[a] * jitter[a]);
        let height = if label > 0 { params.bump_height } else { 0.0 };
        let shape = sphere.map_vertices(|v| {
            let angle = v.dot(&bump_center).clamp(-1.0, 1.0).acos();
            let s = 1.0 + height * (-0.5 * (angle / params.bump_width).powi(2)).exp();
            Point::new(v.x * radii[0] * s, v.y * radii[1] * s, v.z * radii[2] * s)
        });
        let kappa = rng.random_range(-params.max_bend..params.max_bend);
        let wobble_seed = rng.random::<u64>();
        let shape = smooth_deformation(&bend(&shape, kappa), params.wobble, wobble_seed);
        let (r, t) = random_rigid_motion(&mut rng, 1.0);
        meshes.push(rigidly_moved(&shape, &r, &t));
        labels.push(label);
    }
    Cohort {
        template,
        meshes,
        labels,
    }
}
