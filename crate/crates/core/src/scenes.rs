//! Synthetic test scenes: smooth 2D terrains, 3D scalar fields and an
//! occlusion-rich teapot-like mesh.

use std::f64::consts::PI;

use crate::error::Result;
use crate::field::{synth_gaussian_field, GaussianMixtureSpec, Grid, Grid2D, Grid3D};
use crate::render::{uv_sphere, TriMesh};
use crate::spatial::Vec3;

/// Bundled copy of [`teapot_like_mesh`].
pub const TEAPOT_LIKE_OBJ: &str = include_str!("../data/meshes/teapot_like.obj");

/// Ten random Gaussian bumps on the unit square.
pub fn smooth_terrain(dims: [usize; 2], seed: u64) -> Result<Grid2D> {
    synth_gaussian_field(&GaussianMixtureSpec::Random { count: 10, seed }, dims, [0.0; 2], [1.0; 2])
}

/// `1 - |p|` on `[-1, 1]³`: level `v` is the sphere of radius `1 - v`.
pub fn ball_field(n: usize) -> Result<Grid3D> {
    let g = Grid::over_bounds([n; 3], [-1.0; 3], [1.0; 3])?;
    Grid::from_fn([n; 3], g.origin(), g.spacing(), |p| 1.0 - (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt())
}

/// Plume background temperature.
pub const PLUME_BACKGROUND: f64 = 0.1;
/// Plume peak temperature, reached at the top of the column axis.
pub const PLUME_PEAK: f64 = 1.0;

/// Homogeneous background with a hot narrow column on `[-1, 1]³`. The
/// temperature jumps across the column wall and rises slowly with height.
pub fn plume_field(n: usize) -> Result<Grid3D> {
    let g = Grid::over_bounds([n; 3], [-1.0; 3], [1.0; 3])?;
    let logistic = |x: f64| 1.0 / (1.0 + (-x).exp());
    Grid::from_fn([n; 3], g.origin(), g.spacing(), |p| {
        let r = p[0].hypot(p[1]);
        let wall = logistic((0.22 - r) / 0.03);
        let span = logistic((0.75 - p[2].abs()) / 0.05);
        let rise = 0.7 + 0.3 * (p[2] + 1.0) / 2.0;
        PLUME_BACKGROUND + (PLUME_PEAK - PLUME_BACKGROUND) * wall * span * rise
    })
}

/// Concatenates meshes.
pub fn merge_meshes(parts: &[TriMesh]) -> TriMesh {
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    for m in parts {
        let base = vertices.len();
        vertices.extend_from_slice(m.vertices());
        triangles.extend(m.triangles().iter().map(|t| [t[0] + base, t[1] + base, t[2] + base]));
    }
    TriMesh::new(vertices, triangles).expect("indices stay in range")
}

/// Closed tube of `segments` rings around a path given by `center(s)` and
/// the frame `(u(s), v(s))`, `s` in [0, 1], with flat end caps.
fn tube(center: impl Fn(f64) -> Vec3, frame: impl Fn(f64) -> (Vec3, Vec3), radius: f64, segments: usize, sides: usize) -> TriMesh {
    let mut vertices = Vec::new();
    for i in 0..=segments {
        let s = i as f64 / segments as f64;
        let c = center(s);
        let (u, v) = frame(s);
        for j in 0..sides {
            let a = 2.0 * PI * j as f64 / sides as f64;
            let (ca, sa) = (a.cos(), a.sin());
            vertices.push(std::array::from_fn(|k| c[k] + radius * (ca * u[k] + sa * v[k])));
        }
    }
    let ring = |i: usize, j: usize| i * sides + j % sides;
    let mut triangles = Vec::new();
    for i in 0..segments {
        for j in 0..sides {
            let (a, b, c, d) = (ring(i, j), ring(i, j + 1), ring(i + 1, j), ring(i + 1, j + 1));
            triangles.push([a, b, d]);
            triangles.push([a, d, c]);
        }
    }
    for (i, flip) in [(0, true), (segments, false)] {
        let cap = vertices.len();
        vertices.push(center(i as f64 / segments as f64));
        for j in 0..sides {
            let (a, b) = (ring(i, j), ring(i, j + 1));
            triangles.push(if flip { [cap, b, a] } else { [cap, a, b] });
        }
    }
    TriMesh::new(vertices, triangles).expect("indices stay in range")
}

/// Squashed-ellipsoid body with a spout on +x, a handle on −x and a knob
/// on top, fitting inside `[-1, 1]³`. The spout and handle hide parts of
/// the body from most side views.
pub fn teapot_like_mesh() -> TriMesh {
    let body = uv_sphere([0.0; 3], 0.5, 16, 32).map_vertices(|p| [p[0], p[1], 0.7 * p[2]]);
    let knob = uv_sphere([0.0, 0.0, 0.4], 0.08, 8, 16);
    let (sx, sz) = (0.4, 0.35);
    let spout = tube(
        |s| [0.35 + sx * s, 0.0, -0.1 + sz * s],
        |_| {
            let len = sx.hypot(sz);
            ([-sz / len, 0.0, sx / len], [0.0, 1.0, 0.0])
        },
        0.07,
        6,
        12,
    );
    // half torus in the xz plane, closing on the body at −x
    let (cx, cz, major) = (-0.45, 0.0, 0.22);
    let handle = tube(
        |s| {
            let a = PI * (s - 0.5);
            [cx - major * a.cos(), 0.0, cz + major * a.sin()]
        },
        |s| {
            let a = PI * (s - 0.5);
            ([-a.cos(), 0.0, a.sin()], [0.0, 1.0, 0.0])
        },
        0.05,
        12,
        10,
    );
    merge_meshes(&[body, spout, handle, knob])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_teapot_matches_generator() {
        let m = teapot_like_mesh();
        assert_eq!(m.to_obj_string(), TEAPOT_LIKE_OBJ);
        let b = m.bounds();
        assert!(b.lo.iter().chain(&b.hi).all(|v| v.abs() < 1.0), "{b:?}");
        assert!(b.hi[0] > 0.7 && b.lo[0] < -0.7);
    }

    #[test]
    fn teapot_is_asymmetric() {
        let m = teapot_like_mesh();
        let b = m.bounds();
        assert!((b.hi[0] + b.lo[0]).abs() > 0.05);
        assert!(m.area() > 3.0);
    }

    #[test]
    fn ball_levels_are_spheres() {
        let g = ball_field(21).unwrap();
        assert_eq!(g.get([10, 10, 10]), 1.0);
        assert!((g.get([20, 10, 10]) - 0.0).abs() < 1e-12);
    }

    #[test]
    fn plume_background_and_column() {
        let g = plume_field(32).unwrap();
        let s = g.stats();
        assert!((s.min - PLUME_BACKGROUND).abs() < 1e-3);
        assert!(s.max > 0.85 && s.max <= PLUME_PEAK);
        // corners sit at the background temperature
        assert!((g.get([0, 0, 0]) - PLUME_BACKGROUND).abs() < 1e-6);
        let above = g.values().iter().filter(|&&v| v > 0.5).count();
        assert!(above > 0 && above < g.len() / 10, "{above}");
    }

    #[test]
    fn terrain_is_seeded() {
        let a = smooth_terrain([16, 16], 3).unwrap();
        assert_eq!(a, smooth_terrain([16, 16], 3).unwrap());
        assert_ne!(a, smooth_terrain([16, 16], 4).unwrap());
    }
}
