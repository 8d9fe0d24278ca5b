//! Isocontour and isosurface extraction, signed distance fields, and
//! reconstruction of a scalar field from a single contour.

mod cubes;
mod mc_table;
mod rbf;
mod reconstruct;
mod sdf;
mod squares;

pub use cubes::extract_isosurface_3d;
pub use rbf::{RbfModel, ShapeParameter, DEFAULT_RIDGE};
pub use reconstruct::{
    best_of_hypotheses, best_reconstruction, reconstruct_from_contour, reconstruct_from_sdf, select_isovalue_by_reconstruction,
    sdf_extrema, BestReconstruction, IsovalueSelection, ReconstructionConfig,
};
pub use sdf::{signed_distance, unsigned_distance};
pub use squares::extract_contour_2d;

use std::fmt::Write as _;
use std::path::Path;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::field::Grid;
use crate::render::TriMesh;
use crate::spatial::{Bvh, Segment2, Triangle3};

/// Polylines at one isovalue.
#[derive(Debug, Clone, PartialEq)]
pub struct Contour2D {
    polylines: Vec<Vec<[f64; 2]>>,
    isovalue: f64,
}

impl Contour2D {
    /// Drops polylines with fewer than two points.
    pub fn new(polylines: Vec<Vec<[f64; 2]>>, isovalue: f64) -> Self {
        Contour2D {
            polylines: polylines.into_iter().filter(|p| p.len() >= 2).collect(),
            isovalue,
        }
    }

    pub fn polylines(&self) -> &[Vec<[f64; 2]>] {
        &self.polylines
    }

    pub fn isovalue(&self) -> f64 {
        self.isovalue
    }

    pub fn is_empty(&self) -> bool {
        self.polylines.is_empty()
    }

    pub fn is_closed(&self, i: usize) -> bool {
        let p = &self.polylines[i];
        p.len() > 2 && p[0] == p[p.len() - 1]
    }

    pub fn segments(&self) -> Vec<Segment2> {
        self.polylines
            .iter()
            .flat_map(|p| p.windows(2).map(|w| Segment2 { a: w[0], b: w[1] }))
            .collect()
    }

    pub fn length(&self) -> f64 {
        self.segments().iter().map(|s| s.length()).sum()
    }

    /// CSV with columns `polyline,x,y`.
    pub fn to_csv_string(&self) -> String {
        let mut s = String::from("polyline,x,y\n");
        for (i, p) in self.polylines.iter().enumerate() {
            for q in p {
                let _ = writeln!(s, "{i},{},{}", q[0], q[1]);
            }
        }
        s
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_csv_string())?;
        Ok(())
    }
}

/// Stratified positions in `[0, total)`: one uniform draw per equal stratum.
fn stratified(n: usize, total: f64, rng: &mut impl Rng) -> Vec<f64> {
    (0..n)
        .map(|k| ((k as f64 + rng.random::<f64>()) / n as f64 * total).min(total))
        .collect()
}

/// Points spread uniformly by arc length along the contour.
pub fn sample_contour_points(c: &Contour2D, n: usize, rng: &mut impl Rng) -> Vec<[f64; 2]> {
    let segs = c.segments();
    let mut cum = Vec::with_capacity(segs.len());
    let mut acc = 0.0;
    for s in &segs {
        acc += s.length();
        cum.push(acc);
    }
    if segs.is_empty() || acc == 0.0 {
        return segs.first().map(|s| vec![s.a; n]).unwrap_or_default();
    }
    stratified(n, acc, rng)
        .into_iter()
        .map(|s| {
            let k = cum.partition_point(|&c| c <= s).min(segs.len() - 1);
            let start = if k == 0 { 0.0 } else { cum[k - 1] };
            let len = cum[k] - start;
            let t = if len > 0.0 { (s - start) / len } else { 0.0 };
            let seg = segs[k];
            [seg.a[0] + t * (seg.b[0] - seg.a[0]), seg.a[1] + t * (seg.b[1] - seg.a[1])]
        })
        .collect()
}

/// Points spread uniformly by area over the mesh.
pub fn sample_mesh_points(m: &TriMesh, n: usize, rng: &mut impl Rng) -> Vec<[f64; 3]> {
    let tris: Vec<Triangle3> = m.iter_triangles().collect();
    let mut cum = Vec::with_capacity(tris.len());
    let mut acc = 0.0;
    for t in &tris {
        acc += t.area();
        cum.push(acc);
    }
    if tris.is_empty() || acc == 0.0 {
        return tris.first().map(|t| vec![t.a; n]).unwrap_or_default();
    }
    stratified(n, acc, rng)
        .into_iter()
        .map(|s| {
            let k = cum.partition_point(|&c| c <= s).min(tris.len() - 1);
            let t = tris[k];
            let r1: f64 = rng.random::<f64>().sqrt();
            let r2: f64 = rng.random();
            let (wa, wb, wc) = (1.0 - r1, r1 * (1.0 - r2), r1 * r2);
            std::array::from_fn(|a| wa * t.a[a] + wb * t.b[a] + wc * t.c[a])
        })
        .collect()
}

/// A level set a field can be reconstructed from: a 2D contour or a 3D mesh.
pub trait Surface<const N: usize>: Sync {
    /// Spatial index over the surface primitives.
    type Index: Sync;

    fn is_empty(&self) -> bool;

    /// `n` points spread uniformly over the surface measure.
    fn sample_points(&self, n: usize, rng: &mut ChaCha8Rng) -> Vec<[f64; N]>;

    fn index(&self) -> Self::Index;

    /// Squared distance from `p` to the nearest primitive.
    fn nearest_sq(index: &Self::Index, p: [f64; N]) -> f64;

    /// Number of primitives properly crossed by the segment `p`–`q`.
    fn crossings(index: &Self::Index, p: [f64; N], q: [f64; N]) -> usize;
}

impl Surface<2> for Contour2D {
    type Index = Bvh<2, Segment2>;

    fn is_empty(&self) -> bool {
        Contour2D::is_empty(self)
    }

    fn sample_points(&self, n: usize, rng: &mut ChaCha8Rng) -> Vec<[f64; 2]> {
        sample_contour_points(self, n, rng)
    }

    fn index(&self) -> Self::Index {
        Bvh::build(self.segments())
    }

    fn nearest_sq(index: &Self::Index, p: [f64; 2]) -> f64 {
        index.nearest(p).map_or(f64::INFINITY, |h| h.0)
    }

    fn crossings(index: &Self::Index, p: [f64; 2], q: [f64; 2]) -> usize {
        index.segment_crossings(p, q)
    }
}

impl Surface<3> for TriMesh {
    type Index = Bvh<3, Triangle3>;

    fn is_empty(&self) -> bool {
        TriMesh::is_empty(self)
    }

    fn sample_points(&self, n: usize, rng: &mut ChaCha8Rng) -> Vec<[f64; 3]> {
        sample_mesh_points(self, n, rng)
    }

    fn index(&self) -> Self::Index {
        self.bvh()
    }

    fn nearest_sq(index: &Self::Index, p: [f64; 3]) -> f64 {
        index.nearest(p).map_or(f64::INFINITY, |h| h.0)
    }

    fn crossings(index: &Self::Index, p: [f64; 3], q: [f64; 3]) -> usize {
        index.segment_crossings(p, q)
    }
}

/// Grids a level set can be extracted from.
pub trait Isocontour<const N: usize> {
    type Surface: Surface<N>;
    fn isocontour(&self, isovalue: f64) -> Self::Surface;
}

impl Isocontour<2> for Grid<2> {
    type Surface = Contour2D;
    fn isocontour(&self, isovalue: f64) -> Contour2D {
        extract_contour_2d(self, isovalue)
    }
}

impl Isocontour<3> for Grid<3> {
    type Surface = TriMesh;
    fn isocontour(&self, isovalue: f64) -> TriMesh {
        extract_isosurface_3d(self, isovalue)
    }
}

/// Which side of the contour holds the higher values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Hypothesis {
    InsideHigh,
    InsideLow,
}

impl Hypothesis {
    pub const BOTH: [Hypothesis; 2] = [Hypothesis::InsideHigh, Hypothesis::InsideLow];

    pub fn name(self) -> &'static str {
        match self {
            Hypothesis::InsideHigh => "inside_high",
            Hypothesis::InsideLow => "inside_low",
        }
    }
}
