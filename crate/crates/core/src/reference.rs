//! Precomputed geometry and combinatorics of a reference shape.
//!
//! Frame convention: column 1 is the normalized first edge `v₁ − v₀`, column 3
//! the unit normal, column 2 their cross product `n × e₁`. An optional in-plane
//! twist rotates every frame about its normal by the same angle.

use std::collections::{HashMap, VecDeque};

use sha2::{Digest, Sha256};

use crate::error::{FcmError, Result};
use crate::lie::{so3_exp, Mat3, Vec3};
use crate::mesh::{TriangleMesh, DEGENERATE_AREA_FACTOR};

/// Adjacent triangle across an inner edge.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Neighbor {
    pub triangle: usize,
    pub edge: usize,
}

/// Inner edge between triangles `i < j`, with the two shared vertex indices.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct InnerEdge {
    pub i: usize,
    pub j: usize,
    pub shared: [usize; 2],
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TreeEdge {
    pub parent: usize,
    pub child: usize,
    pub edge: usize,
}

/// Breadth-first spanning tree of the dual graph. Edges are stored in visiting order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpanningTree {
    pub root: usize,
    pub edges: Vec<TreeEdge>,
}

#[derive(Clone, Debug)]
pub struct ReferencePrecomp {
    mesh: TriangleMesh,
    frames: Vec<Mat3>,
    normals: Vec<Vec3>,
    tri_areas: Vec<f64>,
    edge_areas: Vec<f64>,
    total_area: f64,
    total_edge_area: f64,
    inner_edges: Vec<InnerEdge>,
    edge_lookup: HashMap<(usize, usize), usize>,
    neighbors: Vec<Vec<Neighbor>>,
    spanning_tree: SpanningTree,
    gradients: Vec<Mat3>,
    edge_basis_inv: Vec<Mat3>,
    boundary_edges: usize,
    hash: String,
}

pub fn build_reference(mesh: TriangleMesh) -> Result<ReferencePrecomp> {
    ReferencePrecomp::new(mesh, 0.0)
}

impl ReferencePrecomp {
    /// `frame_twist` rotates every frame about its normal; `0.0` is the default convention.
    pub fn new(mesh: TriangleMesh, frame_twist: f64) -> Result<Self> {
        let m = mesh.triangle_count();
        if m == 0 {
            return Err(FcmError::InvalidArgument("mesh has no triangles".into()));
        }
        let twist = so3_exp(&(Vec3::z() * frame_twist));
        let mut frames = Vec::with_capacity(m);
        let mut normals = Vec::with_capacity(m);
        let mut tri_areas = Vec::with_capacity(m);
        let mut gradients = Vec::with_capacity(m);
        let mut edge_basis_inv = Vec::with_capacity(m);
        for t in 0..m {
            let [p0, p1, p2] = mesh.corners(t);
            let av = mesh.area_vector(t);
            let double_area = av.norm();
            let n = av / double_area;
            let e1 = (p1 - p0).normalize();
            let frame = Mat3::from_columns(&[e1, n.cross(&e1), n]) * twist;
            frames.push(frame);
            normals.push(n);
            tri_areas.push(0.5 * double_area);
            let g0 = n.cross(&(p2 - p1)) / double_area;
            let g1 = n.cross(&(p0 - p2)) / double_area;
            let g2 = n.cross(&(p1 - p0)) / double_area;
            gradients.push(Mat3::from_rows(&[g0.transpose(), g1.transpose(), g2.transpose()]));
            let basis = Mat3::from_columns(&[p1 - p0, p2 - p0, n]);
            edge_basis_inv.push(basis.try_inverse().ok_or(FcmError::DegenerateTriangle {
                triangle: t,
                area: 0.5 * double_area,
            })?);
        }

        let edge_map = mesh.edge_map();
        let mut pairs: Vec<InnerEdge> = Vec::new();
        let mut boundary_edges = 0;
        for (&(a, b), ts) in &edge_map {
            match ts.as_slice() {
                [_] => boundary_edges += 1,
                [x, y] => pairs.push(InnerEdge {
                    i: *x.min(y),
                    j: *x.max(y),
                    shared: [a, b],
                }),
                _ => return Err(FcmError::NonManifoldEdge { a, b }),
            }
        }
        pairs.sort_by_key(|e| (e.i, e.j));
        let mut edge_lookup = HashMap::with_capacity(pairs.len());
        let mut neighbors = vec![Vec::new(); m];
        for (k, e) in pairs.iter().enumerate() {
            edge_lookup.insert((e.i, e.j), k);
            neighbors[e.i].push(Neighbor {
                triangle: e.j,
                edge: k,
            });
            neighbors[e.j].push(Neighbor {
                triangle: e.i,
                edge: k,
            });
        }
        for list in &mut neighbors {
            list.sort_by_key(|n| n.triangle);
        }
        let edge_areas: Vec<f64> = pairs
            .iter()
            .map(|e| (tri_areas[e.i] + tri_areas[e.j]) / 3.0)
            .collect();

        let spanning_tree = bfs_tree(&neighbors, 0);
        let mut referenced = vec![false; mesh.vertex_count()];
        for t in mesh.triangles() {
            for &v in t {
                referenced[v] = true;
            }
        }
        let isolated = referenced.iter().filter(|&&r| !r).count();
        if spanning_tree.edges.len() + 1 != m || isolated > 0 {
            return Err(FcmError::Disconnected {
                components: count_components(&neighbors) + isolated,
            });
        }

        let total_area = tri_areas.iter().sum();
        let total_edge_area = edge_areas.iter().sum();
        let hash = content_hash(&mesh, frame_twist);
        Ok(ReferencePrecomp {
            mesh,
            frames,
            normals,
            tri_areas,
            edge_areas,
            total_area,
            total_edge_area,
            inner_edges: pairs,
            edge_lookup,
            neighbors,
            spanning_tree,
            gradients,
            edge_basis_inv,
            boundary_edges,
            hash,
        })
    }

    pub fn mesh(&self) -> &TriangleMesh {
        &self.mesh
    }

    pub fn triangle_count(&self) -> usize {
        self.frames.len()
    }

    pub fn frames(&self) -> &[Mat3] {
        &self.frames
    }

    pub fn frame(&self, t: usize) -> &Mat3 {
        &self.frames[t]
    }

    pub fn normals(&self) -> &[Vec3] {
        &self.normals
    }

    pub fn tri_areas(&self) -> &[f64] {
        &self.tri_areas
    }

    /// `Āᵢⱼ = (Āᵢ + Āⱼ)/3`, aligned with [`inner_edges`](Self::inner_edges).
    pub fn edge_areas(&self) -> &[f64] {
        &self.edge_areas
    }

    pub fn total_area(&self) -> f64 {
        self.total_area
    }

    pub fn total_edge_area(&self) -> f64 {
        self.total_edge_area
    }

    pub fn inner_edges(&self) -> &[InnerEdge] {
        &self.inner_edges
    }

    pub fn edge_index(&self, i: usize, j: usize) -> Option<usize> {
        self.edge_lookup.get(&(i.min(j), i.max(j))).copied()
    }

    pub fn neighbors(&self, t: usize) -> &[Neighbor] {
        &self.neighbors[t]
    }

    pub fn spanning_tree(&self) -> &SpanningTree {
        &self.spanning_tree
    }

    /// Rows are the gradients of the three hat functions of triangle `t`.
    pub fn gradient_operator(&self, t: usize) -> &Mat3 {
        &self.gradients[t]
    }

    /// Projector onto the tangent plane of reference triangle `t`.
    pub fn tangent_projector(&self, t: usize) -> Mat3 {
        let n = self.normals[t];
        Mat3::identity() - n * n.transpose()
    }

    pub fn boundary_edge_count(&self) -> usize {
        self.boundary_edges
    }

    pub fn is_closed(&self) -> bool {
        self.boundary_edges == 0
    }

    /// Content hash binding representations to this reference.
    pub fn hash(&self) -> &str {
        &self.hash
    }

    /// Checks that `mesh` has exactly the reference triangle list.
    pub fn check_combinatorics(&self, mesh: &TriangleMesh) -> Result<()> {
        if mesh.vertex_count() != self.mesh.vertex_count() {
            return Err(FcmError::CombinatoricsMismatch(format!(
                "vertex count {} != {}",
                mesh.vertex_count(),
                self.mesh.vertex_count()
            )));
        }
        if mesh.triangles() != self.mesh.triangles() {
            return Err(FcmError::CombinatoricsMismatch(
                "triangle lists differ".into(),
            ));
        }
        Ok(())
    }

    /// Per-triangle deformation gradients `Dᵢ = [e₁ e₂ nᵢ]·[ē₁ ē₂ n̄ᵢ]⁻¹`
    /// mapping reference edges to deformed edges and unit normal to unit normal.
    pub fn deformation_gradients(&self, mesh: &TriangleMesh) -> Result<Vec<Mat3>> {
        self.check_combinatorics(mesh)?;
        let diag = mesh.bbox_diagonal();
        let threshold = DEGENERATE_AREA_FACTOR * diag * diag;
        (0..self.triangle_count())
            .map(|t| {
                let [p0, p1, p2] = mesh.corners(t);
                let av = mesh.area_vector(t);
                let area = 0.5 * av.norm();
                if !(area >= threshold) || area == 0.0 {
                    return Err(FcmError::DegenerateTriangle { triangle: t, area });
                }
                let deformed = Mat3::from_columns(&[p1 - p0, p2 - p0, av / av.norm()]);
                Ok(deformed * self.edge_basis_inv[t])
            })
            .collect()
    }

    /// Tangential gradient `∇φ|ₜ` of the piecewise-linear map onto `positions`.
    pub fn surface_gradient(&self, t: usize, positions: &[Vec3]) -> Mat3 {
        let [a, b, c] = self.mesh.triangles()[t];
        Mat3::from_columns(&[positions[a], positions[b], positions[c]]) * self.gradients[t]
    }
}

pub fn deformation_gradients(reference: &ReferencePrecomp, mesh: &TriangleMesh) -> Result<Vec<Mat3>> {
    reference.deformation_gradients(mesh)
}

fn bfs_tree(neighbors: &[Vec<Neighbor>], root: usize) -> SpanningTree {
    let mut visited = vec![false; neighbors.len()];
    let mut queue = VecDeque::from([root]);
    visited[root] = true;
    let mut edges = Vec::new();
    while let Some(t) = queue.pop_front() {
        for nb in &neighbors[t] {
            if !visited[nb.triangle] {
                visited[nb.triangle] = true;
                edges.push(TreeEdge {
                    parent: t,
                    child: nb.triangle,
                    edge: nb.edge,
                });
                queue.push_back(nb.triangle);
            }
        }
    }
    SpanningTree { root, edges }
}

fn count_components(neighbors: &[Vec<Neighbor>]) -> usize {
    let mut seen = vec![false; neighbors.len()];
    let mut components = 0;
    for start in 0..neighbors.len() {
        if seen[start] {
            continue;
        }
        components += 1;
        let mut stack = vec![start];
        seen[start] = true;
        while let Some(t) = stack.pop() {
            for nb in &neighbors[t] {
                if !seen[nb.triangle] {
                    seen[nb.triangle] = true;
                    stack.push(nb.triangle);
                }
            }
        }
    }
    components
}

fn content_hash(mesh: &TriangleMesh, frame_twist: f64) -> String {
    let mut h = Sha256::new();
    h.update(b"fcm-reference-v1");
    h.update((mesh.vertex_count() as u64).to_le_bytes());
    for v in mesh.vertices() {
        for x in v.iter() {
            h.update(x.to_bits().to_le_bytes());
        }
    }
    h.update((mesh.triangle_count() as u64).to_le_bytes());
    for t in mesh.triangles() {
        for &i in t {
            h.update((i as u64).to_le_bytes());
        }
    }
    h.update(frame_twist.to_bits().to_le_bytes());
    let digest = h.finalize();
    digest.iter().take(16).map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::Point;
    use crate::synthetic;
    use approx::assert_abs_diff_eq;

    fn square() -> TriangleMesh {
        TriangleMesh::new(
            vec![
                Point::new(0.0, 0.0, 0.0),
                Point::new(1.0, 0.0, 0.0),
                Point::new(1.0, 1.0, 0.0),
                Point::new(0.0, 1.0, 0.0),
            ],
            vec![[0, 1, 2], [0, 2, 3]],
        )
        .unwrap()
    }

    #[test]
    fn flat_square() {
        let r = build_reference(square()).unwrap();
        assert_eq!(r.inner_edges().len(), 1);
        assert_abs_diff_eq!(r.normals()[0], r.normals()[1], epsilon = 1e-15);
        let rel = r.frame(0).transpose() * r.frame(1);
        // in-plane rotation only
        assert_abs_diff_eq!(rel * Vec3::z(), Vec3::z(), epsilon = 1e-15);
        assert!((rel - Mat3::identity()).norm() > 0.1);
        assert_eq!(r.boundary_edge_count(), 4);
    }

    #[test]
    fn unit_area_edge_weights() {
        let s = 2f64.sqrt();
        let mesh = TriangleMesh::new(
            vec![
                Point::new(0.0, 0.0, 0.0),
                Point::new(s, 0.0, 0.0),
                Point::new(s, s, 0.0),
                Point::new(0.0, s, 0.0),
            ],
            vec![[0, 1, 2], [0, 2, 3]],
        )
        .unwrap();
        let r = build_reference(mesh).unwrap();
        assert_abs_diff_eq!(r.tri_areas()[0], 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(r.edge_areas()[0], 2.0 / 3.0, epsilon = 1e-14);
        assert_abs_diff_eq!(r.total_edge_area(), 2.0 / 3.0, epsilon = 1e-14);
        assert_abs_diff_eq!(r.total_area(), 2.0, epsilon = 1e-14);
    }

    #[test]
    fn icosphere_tree() {
        let r = build_reference(synthetic::icosphere(2)).unwrap();
        assert_eq!(r.triangle_count(), 80);
        let tree = r.spanning_tree();
        assert_eq!(tree.root, 0);
        assert_eq!(tree.edges.len(), 79);
        let mut seen = vec![false; 80];
        seen[0] = true;
        for e in &tree.edges {
            assert!(seen[e.parent]);
            assert!(!seen[e.child]);
            seen[e.child] = true;
            let ie = r.inner_edges()[e.edge];
            assert_eq!((ie.i.min(ie.j), ie.i.max(ie.j)), (e.parent.min(e.child), e.parent.max(e.child)));
        }
        assert!(seen.iter().all(|&s| s));
        assert!(r.is_closed());
    }

    #[test]
    fn frames_orthonormal_and_normal_last() {
        let r = build_reference(synthetic::icosphere(3)).unwrap();
        for (f, n) in r.frames().iter().zip(r.normals()) {
            assert!((f.transpose() * f - Mat3::identity()).norm() < 1e-12);
            assert!(f.determinant() > 0.0);
            assert_abs_diff_eq!(f.column(2).into_owned(), *n, epsilon = 1e-15);
        }
    }

    #[test]
    fn disconnected_rejected() {
        let mesh = TriangleMesh::new(
            vec![
                Point::new(0.0, 0.0, 0.0),
                Point::new(1.0, 0.0, 0.0),
                Point::new(0.0, 1.0, 0.0),
                Point::new(5.0, 0.0, 0.0),
                Point::new(6.0, 0.0, 0.0),
                Point::new(5.0, 1.0, 0.0),
            ],
            vec![[0, 1, 2], [3, 4, 5]],
        )
        .unwrap();
        assert!(matches!(
            build_reference(mesh),
            Err(FcmError::Disconnected { components: 2 })
        ));
    }

    #[test]
    fn vertex_only_contact_counts_as_disconnected() {
        let mesh = TriangleMesh::new(
            vec![
                Point::new(0.0, 0.0, 0.0),
                Point::new(1.0, 0.0, 0.0),
                Point::new(0.0, 1.0, 0.0),
                Point::new(-1.0, 0.0, 0.0),
                Point::new(0.0, -1.0, 0.0),
            ],
            vec![[0, 1, 2], [0, 3, 4]],
        )
        .unwrap();
        assert!(build_reference(mesh).is_err());
    }

    #[test]
    fn identity_and_rigid_gradients() {
        let mesh = synthetic::icosphere(2);
        let r = build_reference(mesh.clone()).unwrap();
        for d in r.deformation_gradients(&mesh).unwrap() {
            assert_abs_diff_eq!(d, Mat3::identity(), epsilon = 1e-13);
        }
        let q = so3_exp(&Vec3::new(0.3, -1.2, 0.7));
        let t = Vec3::new(4.0, -2.0, 1.0);
        let moved = mesh.map_vertices(|v| q * v + t);
        for d in r.deformation_gradients(&moved).unwrap() {
            assert_abs_diff_eq!(d, q, epsilon = 1e-12);
        }
    }

    #[test]
    fn scaling_gives_normal_preserving_singular_values() {
        let mesh = synthetic::randomly_perturbed(&synthetic::icosphere(2), 0.05, 7);
        let r = build_reference(mesh.clone()).unwrap();
        let scaled = mesh.map_vertices(|v| v * 2.0);
        for d in r.deformation_gradients(&scaled).unwrap() {
            let mut sv: Vec<f64> = d.singular_values().iter().copied().collect();
            sv.sort_by(f64::total_cmp);
            assert_abs_diff_eq!(sv[0], 1.0, epsilon = 1e-12);
            assert_abs_diff_eq!(sv[1], 2.0, epsilon = 1e-12);
            assert_abs_diff_eq!(sv[2], 2.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn gradient_operator_reproduces_tangential_part() {
        let mesh = synthetic::icosphere(2);
        let r = build_reference(mesh.clone()).unwrap();
        let deformed = synthetic::smooth_deformation(&mesh, 0.2, 3);
        let ds = r.deformation_gradients(&deformed).unwrap();
        for t in 0..r.triangle_count() {
            let g = r.surface_gradient(t, deformed.vertices());
            assert_abs_diff_eq!(g, ds[t] * r.tangent_projector(t), epsilon = 1e-12);
        }
    }

    #[test]
    fn combinatorics_mismatch() {
        let r = build_reference(square()).unwrap();
        let other = TriangleMesh::new(square().vertices().to_vec(), vec![[0, 1, 3], [1, 2, 3]]).unwrap();
        assert!(matches!(
            r.deformation_gradients(&other),
            Err(FcmError::CombinatoricsMismatch(_))
        ));
    }

    #[test]
    fn hash_is_deterministic_and_content_sensitive() {
        let a = build_reference(square()).unwrap();
        let b = build_reference(square()).unwrap();
        assert_eq!(a.hash(), b.hash());
        assert_eq!(a.spanning_tree(), b.spanning_tree());
        let moved = square().map_vertices(|v| v + Vec3::new(1e-9, 0.0, 0.0));
        assert_ne!(a.hash(), build_reference(moved).unwrap().hash());
        assert_ne!(a.hash(), ReferencePrecomp::new(square(), 0.3).unwrap().hash());
    }
}
