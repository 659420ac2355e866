//! Triangle meshes and their OBJ/OFF text formats.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::Vector3;

use crate::error::{FcmError, Result};

pub type Point = Vector3<f64>;

/// Relative area threshold: triangles below `1e-12 × (bbox diagonal)²` are degenerate.
pub const DEGENERATE_AREA_FACTOR: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MeshFormat {
    Obj,
    Off,
}

impl MeshFormat {
    pub fn from_path(path: &Path) -> Result<Self> {
        match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase) {
            Some(ext) if ext == "obj" => Ok(MeshFormat::Obj),
            Some(ext) if ext == "off" => Ok(MeshFormat::Off),
            _ => Err(FcmError::InvalidArgument(format!(
                "cannot infer mesh format from {}",
                path.display()
            ))),
        }
    }
}

/// Oriented triangulated surface. Counter-clockwise winding defines the outward normal.
///
/// Construction through [`TriangleMesh::new`] checks index ranges, degenerate
/// triangles, edge manifoldness and consistent winding.
#[derive(Clone, Debug, PartialEq)]
pub struct TriangleMesh {
    vertices: Vec<Point>,
    triangles: Vec<[usize; 3]>,
}

impl TriangleMesh {
    pub fn new(vertices: Vec<Point>, triangles: Vec<[usize; 3]>) -> Result<Self> {
        let mesh = TriangleMesh {
            vertices,
            triangles,
        };
        mesh.validate()?;
        Ok(mesh)
    }

    /// Same combinatorics, new positions. Only the vertex count is checked; the
    /// geometry may be degenerate (e.g. a solver output under inspection).
    pub fn with_vertices(&self, vertices: Vec<Point>) -> Result<Self> {
        if vertices.len() != self.vertices.len() {
            return Err(FcmError::CombinatoricsMismatch(format!(
                "expected {} vertices, got {}",
                self.vertices.len(),
                vertices.len()
            )));
        }
        Ok(TriangleMesh {
            vertices,
            triangles: self.triangles.clone(),
        })
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn triangle_count(&self) -> usize {
        self.triangles.len()
    }

    pub fn corners(&self, t: usize) -> [Point; 3] {
        let [a, b, c] = self.triangles[t];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    /// Non-normalized normal `(v₁ − v₀) × (v₂ − v₀)`; its length is twice the area.
    pub fn area_vector(&self, t: usize) -> Point {
        let [a, b, c] = self.corners(t);
        (b - a).cross(&(c - a))
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        0.5 * self.area_vector(t).norm()
    }

    pub fn bbox_diagonal(&self) -> f64 {
        let mut lo = Point::repeat(f64::INFINITY);
        let mut hi = Point::repeat(f64::NEG_INFINITY);
        for v in &self.vertices {
            lo = lo.inf(v);
            hi = hi.sup(v);
        }
        if self.vertices.is_empty() {
            0.0
        } else {
            (hi - lo).norm()
        }
    }

    pub fn barycenter(&self) -> Point {
        let sum: Point = self.vertices.iter().sum();
        sum / self.vertices.len().max(1) as f64
    }

    /// Applies `x ↦ f(x)` to every vertex.
    pub fn map_vertices(&self, f: impl Fn(&Point) -> Point) -> Self {
        TriangleMesh {
            vertices: self.vertices.iter().map(f).collect(),
            triangles: self.triangles.clone(),
        }
    }

    /// Undirected edges with the triangles that use them, in first-seen order.
    pub fn edge_map(&self) -> HashMap<(usize, usize), Vec<usize>> {
        let mut map: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
        for (t, tri) in self.triangles.iter().enumerate() {
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                map.entry((a.min(b), a.max(b))).or_default().push(t);
            }
        }
        map
    }

    /// Number of edges incident to exactly one triangle.
    pub fn boundary_edge_count(&self) -> usize {
        self.edge_map().values().filter(|ts| ts.len() == 1).count()
    }

    fn validate(&self) -> Result<()> {
        let n = self.vertices.len();
        for (t, tri) in self.triangles.iter().enumerate() {
            for &v in tri {
                if v >= n {
                    return Err(FcmError::IndexOutOfRange {
                        triangle: t,
                        vertex: v,
                        vertex_count: n,
                    });
                }
            }
        }
        if let Some(v) = self.vertices.iter().find(|v| !v.iter().all(|x| x.is_finite())) {
            return Err(FcmError::InvalidArgument(format!("non-finite vertex {v:?}")));
        }
        let diag = self.bbox_diagonal();
        let threshold = DEGENERATE_AREA_FACTOR * diag * diag;
        for t in 0..self.triangles.len() {
            let tri = self.triangles[t];
            let area = self.triangle_area(t);
            if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] || !(area >= threshold) {
                return Err(FcmError::DegenerateTriangle { triangle: t, area });
            }
        }
        // Directed half-edges: consistent winding means every directed edge occurs once.
        let mut directed: HashMap<(usize, usize), usize> = HashMap::new();
        for tri in &self.triangles {
            for k in 0..3 {
                *directed.entry((tri[k], tri[(k + 1) % 3])).or_default() += 1;
            }
        }
        for (&(a, b), ts) in &self.edge_map() {
            if ts.len() > 2 {
                return Err(FcmError::NonManifoldEdge { a, b });
            }
            if directed.get(&(a, b)).copied().unwrap_or(0) > 1
                || directed.get(&(b, a)).copied().unwrap_or(0) > 1
            {
                return Err(FcmError::InconsistentOrientation { a, b });
            }
        }
        Ok(())
    }

    /// Midpoint subdivision: every triangle is split 1→4.
    pub fn subdivide(&self) -> Self {
        let mut vertices = self.vertices.clone();
        let mut midpoint: HashMap<(usize, usize), usize> = HashMap::new();
        let mut mid = |a: usize, b: usize, vertices: &mut Vec<Point>| {
            *midpoint.entry((a.min(b), a.max(b))).or_insert_with(|| {
                vertices.push((vertices[a] + vertices[b]) * 0.5);
                vertices.len() - 1
            })
        };
        let mut triangles = Vec::with_capacity(4 * self.triangles.len());
        for &[a, b, c] in &self.triangles {
            let ab = mid(a, b, &mut vertices);
            let bc = mid(b, c, &mut vertices);
            let ca = mid(c, a, &mut vertices);
            triangles.extend([[a, ab, ca], [ab, b, bc], [ca, bc, c], [ab, bc, ca]]);
        }
        TriangleMesh {
            vertices,
            triangles,
        }
    }
}

pub fn load_mesh(path: impl AsRef<Path>, format: MeshFormat) -> Result<TriangleMesh> {
    let text = fs::read_to_string(path)?;
    parse_mesh(&text, format)
}

/// Loads a mesh, inferring the format from the file extension.
pub fn load_mesh_auto(path: impl AsRef<Path>) -> Result<TriangleMesh> {
    let path = path.as_ref();
    load_mesh(path, MeshFormat::from_path(path)?)
}

pub fn parse_mesh(text: &str, format: MeshFormat) -> Result<TriangleMesh> {
    let (vertices, triangles) = match format {
        MeshFormat::Obj => parse_obj(text)?,
        MeshFormat::Off => parse_off(text)?,
    };
    TriangleMesh::new(vertices, triangles)
}

fn parse_err(line: usize, message: impl Into<String>) -> FcmError {
    FcmError::Parse {
        line,
        message: message.into(),
    }
}

fn parse_f64(tok: Option<&str>, line: usize) -> Result<f64> {
    let tok = tok.ok_or_else(|| parse_err(line, "missing coordinate"))?;
    tok.parse()
        .map_err(|_| parse_err(line, format!("invalid number {tok:?}")))
}

type RawMesh = (Vec<Point>, Vec<[usize; 3]>);

fn parse_obj(text: &str) -> Result<RawMesh> {
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("");
        let mut toks = content.split_whitespace();
        match toks.next() {
            Some("v") => {
                let x = parse_f64(toks.next(), line)?;
                let y = parse_f64(toks.next(), line)?;
                let z = parse_f64(toks.next(), line)?;
                vertices.push(Point::new(x, y, z));
            }
            Some("f") => {
                let idx: Vec<usize> = toks
                    .map(|tok| {
                        let head = tok.split('/').next().unwrap_or(tok);
                        let k: i64 = head
                            .parse()
                            .map_err(|_| parse_err(line, format!("invalid face index {tok:?}")))?;
                        if k < 1 {
                            return Err(parse_err(
                                line,
                                format!("face index {k} is not a positive 1-based index"),
                            ));
                        }
                        Ok(k as usize - 1)
                    })
                    .collect::<Result<_>>()?;
                if idx.len() != 3 {
                    return Err(parse_err(
                        line,
                        format!("only triangular faces are supported, got {} indices", idx.len()),
                    ));
                }
                triangles.push([idx[0], idx[1], idx[2]]);
            }
            _ => {}
        }
    }
    Ok((vertices, triangles))
}

fn parse_off(text: &str) -> Result<RawMesh> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());
    let (hline, header) = lines.next().ok_or_else(|| parse_err(1, "empty file"))?;
    let mut counts_src = if let Some(rest) = header.strip_prefix("OFF") {
        if rest.trim().is_empty() {
            lines.next().ok_or_else(|| parse_err(hline, "missing element counts"))?
        } else {
            (hline, rest.trim())
        }
    } else {
        return Err(parse_err(hline, "missing OFF header"));
    };
    counts_src.1 = counts_src.1.trim();
    let (cline, counts) = counts_src;
    let nums: Vec<usize> = counts
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| parse_err(cline, format!("invalid count {t:?}"))))
        .collect::<Result<_>>()?;
    if nums.len() < 2 {
        return Err(parse_err(cline, "expected vertex and face counts"));
    }
    let (nv, nf) = (nums[0], nums[1]);
    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (line, l) = lines
            .next()
            .ok_or_else(|| parse_err(cline, "unexpected end of file in vertex block"))?;
        let mut t = l.split_whitespace();
        let x = parse_f64(t.next(), line)?;
        let y = parse_f64(t.next(), line)?;
        let z = parse_f64(t.next(), line)?;
        vertices.push(Point::new(x, y, z));
    }
    let mut triangles = Vec::with_capacity(nf);
    for _ in 0..nf {
        let (line, l) = lines
            .next()
            .ok_or_else(|| parse_err(cline, "unexpected end of file in face block"))?;
        let idx: Vec<usize> = l
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| parse_err(line, format!("invalid index {t:?}"))))
            .collect::<Result<_>>()?;
        if idx.first() != Some(&3) || idx.len() < 4 {
            return Err(parse_err(line, "only triangular faces are supported"));
        }
        triangles.push([idx[1], idx[2], idx[3]]);
    }
    Ok((vertices, triangles))
}

/// 17 significant digits.
/// Seventeen significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// OBJ text. `scalars`, when given, is appended as a fourth column on each `v` line.
pub fn obj_string(mesh: &TriangleMesh, scalars: Option<&[f64]>) -> String {
    let mut out = String::new();
    for (i, v) in mesh.vertices.iter().enumerate() {
        write!(out, "v {} {} {}", fmt_f64(v.x), fmt_f64(v.y), fmt_f64(v.z)).unwrap();
        if let Some(s) = scalars {
            write!(out, " {}", fmt_f64(s[i])).unwrap();
        }
        out.push('\n');
    }
    for t in &mesh.triangles {
        writeln!(out, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1).unwrap();
    }
    out
}

pub fn off_string(mesh: &TriangleMesh) -> String {
    let mut out = String::from("OFF\n");
    writeln!(out, "{} {} 0", mesh.vertex_count(), mesh.triangle_count()).unwrap();
    for v in &mesh.vertices {
        writeln!(out, "{} {} {}", fmt_f64(v.x), fmt_f64(v.y), fmt_f64(v.z)).unwrap();
    }
    for t in &mesh.triangles {
        writeln!(out, "3 {} {} {}", t[0], t[1], t[2]).unwrap();
    }
    out
}

pub fn save_mesh(mesh: &TriangleMesh, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let text = match MeshFormat::from_path(path)? {
        MeshFormat::Obj => obj_string(mesh, None),
        MeshFormat::Off => off_string(mesh),
    };
    fs::write(path, text)?;
    Ok(())
}
