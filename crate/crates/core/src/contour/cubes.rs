use std::collections::HashMap;

use super::mc_table::TRIANGLE_TABLE;
use crate::field::Grid3D;
use crate::render::TriMesh;

const CORNERS: [[usize; 3]; 8] = [
    [0, 0, 0],
    [1, 0, 0],
    [1, 1, 0],
    [0, 1, 0],
    [0, 0, 1],
    [1, 0, 1],
    [1, 1, 1],
    [0, 1, 1],
];

const EDGES: [[usize; 2]; 12] = [
    [0, 1],
    [1, 2],
    [2, 3],
    [3, 0],
    [4, 5],
    [5, 6],
    [6, 7],
    [7, 4],
    [0, 4],
    [1, 5],
    [2, 6],
    [3, 7],
];

/// Marching cubes with linear interpolation. Vertices are shared between
/// neighboring cubes; triangles are wound so their normals point toward
/// lower field values (out of the `f ≥ isovalue` region).
pub fn extract_isosurface_3d(g: &Grid3D, isovalue: f64) -> TriMesh {
    let stats = g.stats();
    if !(isovalue >= stats.min && isovalue <= stats.max) || stats.range == 0.0 {
        return TriMesh::empty();
    }
    let [nx, ny, nz] = g.dims();
    let mut vertex_of_edge: HashMap<usize, usize> = HashMap::new();
    let mut vertices: Vec<[f64; 3]> = Vec::new();
    let mut triangles: Vec<[usize; 3]> = Vec::new();

    for k in 0..nz - 1 {
        for j in 0..ny - 1 {
            for i in 0..nx - 1 {
                let idx = CORNERS.map(|c| [i + c[0], j + c[1], k + c[2]]);
                let v = idx.map(|n| g.get(n));
                let mut case = 0usize;
                for (c, &val) in v.iter().enumerate() {
                    if val < isovalue {
                        case |= 1 << c;
                    }
                }
                if case == 0 || case == 255 {
                    continue;
                }
                let mut local = [usize::MAX; 12];
                let row = &TRIANGLE_TABLE[case];
                for &e in row.iter().take_while(|&&e| e >= 0) {
                    let e = e as usize;
                    if local[e] != usize::MAX {
                        continue;
                    }
                    let [a, b] = EDGES[e];
                    // key by the lower node and the axis the edge runs along
                    let (lo, hi) = if g.linear_index(idx[a]) < g.linear_index(idx[b]) { (a, b) } else { (b, a) };
                    let axis = (0..3).find(|&ax| idx[lo][ax] != idx[hi][ax]).expect("axis edge");
                    let key = 3 * g.linear_index(idx[lo]) + axis;
                    local[e] = *vertex_of_edge.entry(key).or_insert_with(|| {
                        let (va, vb) = (v[lo], v[hi]);
                        let t = if vb != va { (isovalue - va) / (vb - va) } else { 0.5 };
                        let pa = g.position(idx[lo]);
                        let pb = g.position(idx[hi]);
                        vertices.push(std::array::from_fn(|ax| pa[ax] + t * (pb[ax] - pa[ax])));
                        vertices.len() - 1
                    });
                }
                for tri in row.chunks_exact(3).take_while(|t| t[0] >= 0) {
                    let t = [local[tri[0] as usize], local[tri[1] as usize], local[tri[2] as usize]];
                    if t[0] != t[1] && t[1] != t[2] && t[0] != t[2] {
                        triangles.push(t);
                    }
                }
            }
        }
    }
    TriMesh::new(vertices, triangles).expect("valid marching cubes mesh")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::gradient;
    use crate::spatial::{dot3, sub3};

    fn ball(n: usize, r: f64) -> (Grid3D, f64) {
        let h = 2.0 / (n - 1) as f64;
        let g = Grid3D::from_fn([n; 3], [-1.0; 3], [h; 3], |p| -(p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt()).unwrap();
        (g, -r)
    }

    #[test]
    fn ball_area_and_closure() {
        let (g, iso) = ball(64, 0.6);
        let m = extract_isosurface_3d(&g, iso);
        let exact = 4.0 * std::f64::consts::PI * 0.36;
        assert!((m.area() - exact).abs() / exact < 0.1, "{} vs {exact}", m.area());
        // closed: every undirected edge used exactly twice, in opposite directions
        let mut count: HashMap<(usize, usize), i32> = HashMap::new();
        for t in m.triangles() {
            for e in 0..3 {
                let a = t[e];
                let b = t[(e + 1) % 3];
                *count.entry((a.min(b), a.max(b))).or_default() += if a < b { 1 } else { -1 };
            }
        }
        assert!(count.values().all(|&c| c == 0));
    }

    #[test]
    fn normals_point_to_lower_values() {
        let (g, iso) = ball(24, 0.5);
        let m = extract_isosurface_3d(&g, iso);
        assert!(!m.is_empty());
        for t in m.iter_triangles() {
            let centroid: [f64; 3] = std::array::from_fn(|a| (t.a[a] + t.b[a] + t.c[a]) / 3.0);
            // field decreases outward
            assert!(dot3(t.normal(), sub3(centroid, [0.0; 3])) > 0.0);
        }
        // gradient sanity
        let lin = g.linear_index([12, 12, 20]);
        assert!(gradient(&g, lin)[2] < 0.0);
    }

    #[test]
    fn plane_normals_parallel_to_z() {
        let h = 1.0 / 7.0;
        let g = Grid3D::from_fn([8; 3], [0.0; 3], [h; 3], |p| p[2]).unwrap();
        let m = extract_isosurface_3d(&g, 0.5);
        assert!(!m.is_empty());
        for t in m.iter_triangles() {
            let n = t.normal();
            assert!((n[2] + 1.0).abs() < 1e-9, "{n:?}");
        }
        assert!((m.area() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn empty_out_of_range() {
        let (g, _) = ball(8, 0.5);
        assert!(extract_isosurface_3d(&g, 1.0).is_empty());
    }
}
