use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::spatial::{Aabb, Bvh, Triangle3, Vec3};

/// Indexed triangle mesh.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TriMesh {
    vertices: Vec<Vec3>,
    triangles: Vec<[usize; 3]>,
}

impl TriMesh {
    pub fn new(vertices: Vec<Vec3>, triangles: Vec<[usize; 3]>) -> Result<Self> {
        for t in &triangles {
            if t.iter().any(|&i| i >= vertices.len()) {
                return Err(Error::invalid(format!(
                    "triangle {t:?} indexes past {} vertices",
                    vertices.len()
                )));
            }
            if t[0] == t[1] || t[1] == t[2] || t[0] == t[2] {
                return Err(Error::invalid(format!("degenerate triangle {t:?}")));
            }
        }
        Ok(TriMesh { vertices, triangles })
    }

    pub fn empty() -> Self {
        TriMesh::default()
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    pub fn triangle(&self, i: usize) -> Triangle3 {
        let [a, b, c] = self.triangles[i];
        Triangle3 {
            a: self.vertices[a],
            b: self.vertices[b],
            c: self.vertices[c],
        }
    }

    pub fn iter_triangles(&self) -> impl Iterator<Item = Triangle3> + '_ {
        (0..self.triangles.len()).map(|i| self.triangle(i))
    }

    pub fn area(&self) -> f64 {
        self.iter_triangles().map(|t| t.area()).sum()
    }

    pub fn bounds(&self) -> Aabb<3> {
        let mut b = Aabb::empty();
        for &v in &self.vertices {
            b.grow(v);
        }
        b
    }

    pub fn bvh(&self) -> Bvh<3, Triangle3> {
        Bvh::build(self.iter_triangles().collect())
    }

    /// Applies `f` to every vertex.
    pub fn map_vertices(&self, f: impl Fn(Vec3) -> Vec3) -> TriMesh {
        TriMesh {
            vertices: self.vertices.iter().map(|&v| f(v)).collect(),
            triangles: self.triangles.clone(),
        }
    }

    pub fn flipped(&self) -> TriMesh {
        TriMesh {
            vertices: self.vertices.clone(),
            triangles: self.triangles.iter().map(|&[a, b, c]| [a, c, b]).collect(),
        }
    }

    /// Parses `v` and `f` lines; polygons are fan-triangulated, everything else ignored.
    pub fn from_obj_str(text: &str) -> std::result::Result<TriMesh, String> {
        let mut vertices = Vec::new();
        let mut triangles = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let mut it = line.split_whitespace();
            match it.next() {
                Some("v") => {
                    let coords: Vec<f64> = it
                        .take(3)
                        .map(|s| s.parse::<f64>())
                        .collect::<std::result::Result<_, _>>()
                        .map_err(|e| format!("line {}: {e}", lineno + 1))?;
                    if coords.len() != 3 {
                        return Err(format!("line {}: vertex needs 3 coordinates", lineno + 1));
                    }
                    vertices.push([coords[0], coords[1], coords[2]]);
                }
                Some("f") => {
                    let mut idx = Vec::new();
                    for tok in it {
                        let head = tok.split('/').next().unwrap_or("");
                        let i: i64 = head.parse().map_err(|e| format!("line {}: {e}", lineno + 1))?;
                        let resolved = if i > 0 {
                            i - 1
                        } else if i < 0 {
                            vertices.len() as i64 + i
                        } else {
                            return Err(format!("line {}: index 0 is invalid", lineno + 1));
                        };
                        if resolved < 0 || resolved as usize >= vertices.len() {
                            return Err(format!("line {}: index {i} out of range", lineno + 1));
                        }
                        idx.push(resolved as usize);
                    }
                    if idx.len() < 3 {
                        return Err(format!("line {}: face needs 3 vertices", lineno + 1));
                    }
                    for k in 1..idx.len() - 1 {
                        let t = [idx[0], idx[k], idx[k + 1]];
                        if t[0] != t[1] && t[1] != t[2] && t[0] != t[2] {
                            triangles.push(t);
                        }
                    }
                }
                _ => {}
            }
        }
        TriMesh::new(vertices, triangles).map_err(|e| e.to_string())
    }

    pub fn read_obj(path: impl AsRef<Path>) -> Result<TriMesh> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        TriMesh::from_obj_str(&text).map_err(|reason| Error::malformed(path, reason))
    }

    pub fn to_obj_string(&self) -> String {
        let mut s = String::new();
        for v in &self.vertices {
            let _ = writeln!(s, "v {} {} {}", v[0], v[1], v[2]);
        }
        for t in &self.triangles {
            let _ = writeln!(s, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1);
        }
        s
    }

    pub fn write_obj(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_obj_string())?;
        Ok(())
    }
}

/// Latitude–longitude sphere; triangles wound counter-clockwise seen from outside.
pub fn uv_sphere(center: Vec3, radius: f64, stacks: usize, slices: usize) -> TriMesh {
    let stacks = stacks.max(2);
    let slices = slices.max(3);
    let mut vertices = vec![[center[0], center[1], center[2] + radius]];
    for i in 1..stacks {
        let theta = std::f64::consts::PI * i as f64 / stacks as f64;
        for j in 0..slices {
            let phi = 2.0 * std::f64::consts::PI * j as f64 / slices as f64;
            vertices.push([
                center[0] + radius * theta.sin() * phi.cos(),
                center[1] + radius * theta.sin() * phi.sin(),
                center[2] + radius * theta.cos(),
            ]);
        }
    }
    let south = vertices.len();
    vertices.push([center[0], center[1], center[2] - radius]);
    let ring = |i: usize, j: usize| 1 + (i - 1) * slices + j % slices;
    let mut triangles = Vec::new();
    for j in 0..slices {
        triangles.push([0, ring(1, j), ring(1, j + 1)]);
    }
    for i in 1..stacks - 1 {
        for j in 0..slices {
            let (a, b, c, d) = (ring(i, j), ring(i, j + 1), ring(i + 1, j), ring(i + 1, j + 1));
            triangles.push([a, c, d]);
            triangles.push([a, d, b]);
        }
    }
    for j in 0..slices {
        triangles.push([south, ring(stacks - 1, j + 1), ring(stacks - 1, j)]);
    }
    TriMesh { vertices, triangles }
}
