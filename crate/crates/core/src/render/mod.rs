//! Software renderers: colormapped rasters, shaded heightfields, ray-marched
//! isosurfaces and ray-cast meshes, plus camera and image plumbing.

mod camera;
mod image;
mod mesh;

pub use camera::{view_set_cameras, Camera, Pose};
pub use image::ImageRGB;
pub use mesh::{uv_sphere, TriMesh};

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::color::{Colormap, RGBColor};
use crate::error::Result;
use crate::field::{gradient, normalize, Grid2D, Grid3D};
use crate::spatial::{add3, dot3, normalize3, scale3, Aabb, Vec3};

/// Ambient term used when nothing else is configured.
pub const DEFAULT_AMBIENT: f64 = 0.2;

/// Base color of ray-cast meshes.
pub const MESH_COLOR: RGBColor = RGBColor::new(0.8, 0.8, 0.8);

/// What a decoder is told about an image besides its pixels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Legend {
    pub colormap: String,
    pub vmin: f64,
    pub vmax: f64,
    pub isovalue: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RenderedView {
    pub image: ImageRGB,
    /// `None` for orthographic top-down renders.
    pub camera: Option<Camera>,
    pub legend: Legend,
}

impl RenderedView {
    pub fn sidecar_json(&self) -> serde_json::Value {
        let camera = self.camera.map(|c| {
            serde_json::json!({
                "azimuth": c.azimuth_deg,
                "elevation": c.elevation_deg,
                "distance": c.distance,
                "fov": c.vertical_fov_deg,
                "width": c.width,
                "height": c.height,
            })
        });
        serde_json::json!({
            "colormap": self.legend.colormap,
            "vmin": self.legend.vmin,
            "vmax": self.legend.vmax,
            "isovalue": self.legend.isovalue,
            "camera": camera,
        })
    }

    /// Writes the PNG and a `.json` legend sidecar next to it; returns the sidecar path.
    pub fn write(&self, png_path: impl AsRef<Path>) -> Result<PathBuf> {
        let png_path = png_path.as_ref();
        self.image.write_png(png_path)?;
        let sidecar = png_path.with_extension("json");
        std::fs::write(&sidecar, serde_json::to_string_pretty(&self.sidecar_json())?)?;
        Ok(sidecar)
    }
}

fn shade(base: RGBColor, factor: f64) -> RGBColor {
    if factor == 1.0 {
        return base;
    }
    let lin = base.to_linear();
    RGBColor::from_linear([lin[0] * factor, lin[1] * factor, lin[2] * factor])
}

fn lambert(ambient: f64, cos: f64) -> f64 {
    ambient + (1.0 - ambient) * cos.max(0.0)
}

/// Image row of grid row `j` (y grows upward in the image).
fn raster_row(ny: usize, j: usize) -> usize {
    ny - 1 - j
}

/// Each cell drawn as a `scale`×`scale` block of its normalized colormap color.
pub fn render_colormap_2d(g: &Grid2D, cm: &Colormap, scale: usize) -> RenderedView {
    let scale = scale.max(1);
    let (tn, stats) = normalize(g);
    let [nx, ny] = g.dims();
    let mut img = ImageRGB::filled(nx * scale, ny * scale, RGBColor::BLACK);
    for j in 0..ny {
        for i in 0..nx {
            let c = cm.sample(tn.get([i, j]));
            let r0 = raster_row(ny, j) * scale;
            for dy in 0..scale {
                for dx in 0..scale {
                    img.set(i * scale + dx, r0 + dy, c);
                }
            }
        }
    }
    RenderedView {
        image: img,
        camera: None,
        legend: Legend {
            colormap: cm.name().to_string(),
            vmin: stats.min,
            vmax: stats.max,
            isovalue: None,
        },
    }
}

/// Grid cell `(i, j)` for an image pixel of a raster drawn at `scale`.
pub fn raster_cell(ny: usize, scale: usize, col: usize, row: usize) -> [usize; 2] {
    [col / scale, raster_row(ny, row / scale)]
}

/// Top-down orthographic view of the field extruded to height
/// `z_scale · normalized value`, lit by a headlight from above.
pub fn render_shaded_heightfield(g: &Grid2D, cm: &Colormap, z_scale: f64, ambient: f64) -> RenderedView {
    let ambient = ambient.clamp(0.0, 1.0);
    let (tn, stats) = normalize(g);
    let [nx, ny] = g.dims();
    let mut img = ImageRGB::filled(nx, ny, RGBColor::BLACK);
    for j in 0..ny {
        for i in 0..nx {
            let lin = tn.linear_index([i, j]);
            let gr = gradient(&tn, lin);
            let n = normalize3([-z_scale * gr[0], -z_scale * gr[1], 1.0]);
            let factor = lambert(ambient, n[2]);
            img.set(i, raster_row(ny, j), shade(cm.sample(tn.values()[lin]), factor));
        }
    }
    RenderedView {
        image: img,
        camera: None,
        legend: Legend {
            colormap: cm.name().to_string(),
            vmin: stats.min,
            vmax: stats.max,
            isovalue: None,
        },
    }
}

fn grid_bounds(g: &Grid3D) -> Aabb<3> {
    Aabb {
        lo: g.origin(),
        hi: g.upper(),
    }
}

fn inv_dir(d: Vec3) -> Vec3 {
    [1.0 / d[0], 1.0 / d[1], 1.0 / d[2]]
}

fn render_rows(cam: &Camera, pixel: impl Fn(Vec3, Vec3) -> RGBColor + Sync) -> ImageRGB {
    let pose = cam.pose();
    let mut img = ImageRGB::filled(cam.width, cam.height, RGBColor::BLACK);
    img.pixels_mut()
        .par_chunks_mut(cam.width)
        .enumerate()
        .for_each(|(row, line)| {
            for (col, px) in line.iter_mut().enumerate() {
                let (o, d) = cam.ray(&pose, col, row);
                *px = pixel(o, d);
            }
        });
    img
}

/// First crossing of `isovalue` along the ray, refined by bisection.
pub fn march_isosurface(g: &Grid3D, isovalue: f64, origin: Vec3, dir: Vec3) -> Option<(f64, Vec3)> {
    let (t0, t1) = grid_bounds(g).ray_interval(origin, inv_dir(dir), 0.0, f64::INFINITY)?;
    let h = g.spacing().iter().cloned().fold(f64::INFINITY, f64::min);
    let step = 0.5 * h;
    let at = |t: f64| add3(origin, scale3(dir, t));
    let f = |t: f64| g.interpolate(at(t)) - isovalue;
    let mut t_prev = t0;
    let mut s_prev = f(t0);
    let steps = ((t1 - t0) / step).ceil().max(1.0) as usize;
    for k in 1..=steps {
        let t = (t0 + k as f64 * step).min(t1);
        let s = f(t);
        if (s_prev < 0.0) != (s < 0.0) {
            let (mut lo, mut hi) = (t_prev, t);
            let lo_neg = s_prev < 0.0;
            for _ in 0..40 {
                let mid = 0.5 * (lo + hi);
                if (f(mid) < 0.0) == lo_neg {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let th = 0.5 * (lo + hi);
            return Some((th, at(th)));
        }
        t_prev = t;
        s_prev = s;
    }
    None
}

/// Outward normal (toward decreasing values) of the interpolated field at `p`.
fn field_normal(g: &Grid3D, p: Vec3, fallback: Vec3) -> Vec3 {
    let sp = g.spacing();
    let mut grad = [0.0; 3];
    for a in 0..3 {
        let mut hi = p;
        let mut lo = p;
        hi[a] += 0.5 * sp[a];
        lo[a] -= 0.5 * sp[a];
        grad[a] = (g.interpolate(hi) - g.interpolate(lo)) / sp[a];
    }
    if dot3(grad, grad) > 0.0 {
        normalize3(scale3(grad, -1.0))
    } else {
        fallback
    }
}

/// Perspective ray-marched isosurface of uniform color, headlight shaded, black background.
pub fn render_isosurface(
    g: &Grid3D,
    isovalue: f64,
    surface_color: RGBColor,
    cam: &Camera,
    ambient: f64,
) -> RenderedView {
    let stats = g.stats();
    let ambient = ambient.clamp(0.0, 1.0);
    let image = if isovalue < stats.min || isovalue > stats.max {
        ImageRGB::filled(cam.width, cam.height, RGBColor::BLACK)
    } else {
        render_rows(cam, |o, d| match march_isosurface(g, isovalue, o, d) {
            Some((_, p)) => {
                let n = field_normal(g, p, scale3(d, -1.0));
                shade(surface_color, lambert(ambient, dot3(n, d).abs()))
            }
            None => RGBColor::BLACK,
        })
    };
    RenderedView {
        image,
        camera: Some(*cam),
        legend: Legend {
            colormap: String::new(),
            vmin: stats.min,
            vmax: stats.max,
            isovalue: Some(isovalue),
        },
    }
}

/// Ray-cast mesh in a fixed gray, two-sided headlight shading, black background.
pub fn render_mesh(m: &TriMesh, cam: &Camera, ambient: f64) -> RenderedView {
    let ambient = ambient.clamp(0.0, 1.0);
    let bvh = m.bvh();
    let image = render_rows(cam, |o, d| match bvh.raycast(o, d, f64::INFINITY) {
        Some((_, i)) => {
            let n = bvh.primitives()[i].normal();
            shade(MESH_COLOR, lambert(ambient, dot3(n, d).abs()))
        }
        None => RGBColor::BLACK,
    });
    RenderedView {
        image,
        camera: Some(*cam),
        legend: Legend {
            colormap: String::new(),
            vmin: 0.0,
            vmax: 0.0,
            isovalue: None,
        },
    }
}

/// Renders `scene` from the nine cameras of [`view_set_cameras`].
pub fn render_view_set<F>(scene: F, center: &Camera) -> Vec<RenderedView>
where
    F: Fn(&Camera) -> RenderedView + Sync,
{
    view_set_cameras(center).par_iter().map(&scene).collect()
}

/// Image size, lens and lighting shared by every view of an experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ViewSetup {
    pub image_size: usize,
    pub vertical_fov_deg: f64,
    pub distance: f64,
    pub ambient: f64,
}

impl Default for ViewSetup {
    fn default() -> Self {
        ViewSetup {
            image_size: 128,
            vertical_fov_deg: 40.0,
            distance: 4.0,
            ambient: DEFAULT_AMBIENT,
        }
    }
}

impl ViewSetup {
    pub fn camera(&self, azimuth_deg: f64, elevation_deg: f64, target: Vec3) -> Result<Camera> {
        Camera::new(
            azimuth_deg,
            elevation_deg,
            self.distance,
            target,
            self.vertical_fov_deg,
            self.image_size,
            self.image_size,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::color::{srgb_to_lab, ColorMetric, color_distance};

    fn gray() -> Colormap {
        Colormap::bundled("gray").unwrap()
    }

    #[test]
    fn constant_field_renders_midpoint_color() {
        let g = Grid2D::filled([4, 3], [0.0; 2], [1.0; 2], 7.0).unwrap();
        let cm = Colormap::bundled("viridis").unwrap();
        let v = render_colormap_2d(&g, &cm, 2);
        assert_eq!((v.image.width(), v.image.height()), (8, 6));
        assert!(v.image.pixels().iter().all(|&p| p == cm.sample(0.5)));
        assert_eq!((v.legend.vmin, v.legend.vmax), (7.0, 7.0));
    }

    #[test]
    fn two_cell_raster() {
        let g = Grid2D::new([2, 2], [0.0; 2], [1.0; 2], vec![0.0, 1.0, 0.0, 1.0]).unwrap();
        let cm = Colormap::bundled("viridis").unwrap();
        let v = render_colormap_2d(&g, &cm, 1);
        assert_eq!(v.image.get(0, 0), cm.sample(0.0));
        assert_eq!(v.image.get(1, 0), cm.sample(1.0));
        assert_eq!(raster_cell(2, 3, 4, 0), [1, 1]);
    }

    #[test]
    fn flat_heightfield_matches_raster() {
        let g = Grid2D::filled([5, 5], [0.0; 2], [1.0; 2], 3.0).unwrap();
        let cm = Colormap::bundled("magma").unwrap();
        let a = render_shaded_heightfield(&g, &cm, 10.0, 0.2);
        let b = render_colormap_2d(&g, &cm, 1);
        assert_eq!(a.image, b.image);
    }

    #[test]
    fn slope_45_degrees() {
        // f = x on [0, 1], normalized slope 1, z_scale 1: n·l = cos 45°
        let g = Grid2D::from_fn([9, 9], [0.0; 2], [0.125; 2], |p| p[0]).unwrap();
        let cm = Colormap::bundled("gray").unwrap();
        let v = render_shaded_heightfield(&g, &cm, 1.0, 0.0);
        let base = cm.sample(0.5).to_linear();
        let got = v.image.get(4, 4).to_linear();
        let want = std::f64::consts::FRAC_1_SQRT_2;
        assert!((got[0] / base[0] - want).abs() < 1e-9);
    }

    #[test]
    fn ambient_one_is_unshaded() {
        let g = Grid2D::from_fn([16, 12], [0.0; 2], [0.1; 2], |p| (3.0 * p[0]).sin() + p[1] * p[1]).unwrap();
        let cm = Colormap::bundled("viridis").unwrap();
        let a = render_shaded_heightfield(&g, &cm, 5.0, 1.0);
        assert_eq!(a.image, render_colormap_2d(&g, &cm, 1).image);
        let near = render_shaded_heightfield(&g, &cm, 5.0, 0.999);
        for (p, q) in near.image.pixels().iter().zip(a.image.pixels()) {
            assert!((p.r - q.r).abs() < 1e-3 && (p.g - q.g).abs() < 1e-3 && (p.b - q.b).abs() < 1e-3);
        }
    }

    fn ball(n: usize) -> Grid3D {
        let h = 2.0 / (n - 1) as f64;
        Grid3D::from_fn([n; 3], [-1.0; 3], [h; 3], |p| -(p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt()).unwrap()
    }

    #[test]
    fn isosurface_silhouette_matches_projection() {
        let g = ball(33);
        let r = 0.5;
        let cam = Camera::new(20.0, 30.0, 4.0, [0.0; 3], 30.0, 64, 64).unwrap();
        let v = render_isosurface(&g, -r, RGBColor::new(1.0, 0.0, 0.0), &cam, 0.2);
        // analytic sphere silhouette: angular radius asin(r / d)
        let tan_half = (15f64).to_radians().tan();
        let rad_px = (r / 4.0f64).asin().tan() / tan_half * 32.0;
        let mut worst: f64 = 0.0;
        for row in 0..64 {
            for col in 0..64 {
                let dx = col as f64 + 0.5 - 32.0;
                let dy = row as f64 + 0.5 - 32.0;
                let dist = (dx * dx + dy * dy).sqrt();
                let hit = v.image.get(col, row) != RGBColor::BLACK;
                if hit != (dist < rad_px) {
                    worst = worst.max((dist - rad_px).abs());
                }
            }
        }
        assert!(worst <= 1.0, "silhouette off by {worst} px");
        // center pixel faces the camera
        let c = v.image.get(32, 32);
        let corner = v.image.get(32, 32 - (rad_px * 0.8) as usize);
        assert!(c.r > corner.r);
        assert!(c.r > 0.99);
    }

    #[test]
    fn isosurface_hits_are_on_level_set() {
        let g = ball(33);
        let cam = Camera::new(-40.0, 10.0, 3.5, [0.0; 3], 35.0, 24, 24).unwrap();
        let pose = cam.pose();
        let range = g.stats().range;
        let mut hits = 0;
        for row in 0..24 {
            for col in 0..24 {
                let (o, d) = cam.ray(&pose, col, row);
                if let Some((_, p)) = march_isosurface(&g, -0.6, o, d) {
                    hits += 1;
                    assert!((g.interpolate(p) + 0.6).abs() <= 1e-3 * range);
                }
            }
        }
        assert!(hits > 50);
    }

    #[test]
    fn out_of_range_isovalue_is_black() {
        let g = ball(9);
        let cam = Camera::new(0.0, 0.0, 4.0, [0.0; 3], 30.0, 8, 8).unwrap();
        let v = render_isosurface(&g, 5.0, RGBColor::WHITE, &cam, 0.2);
        assert!(v.image.pixels().iter().all(|&p| p == RGBColor::BLACK));
    }

    #[test]
    fn mesh_sphere_silhouette_area() {
        let m = uv_sphere([0.0; 3], 1.0, 32, 64);
        let cam = Camera::new(0.0, 0.0, 5.0, [0.0; 3], 40.0, 96, 96).unwrap();
        let v = render_mesh(&m, &cam, 0.2);
        let lit = v.image.pixels().iter().filter(|&&p| p != RGBColor::BLACK).count() as f64;
        let tan_half = 20f64.to_radians().tan();
        let rad_px = (1.0f64 / 5.0).asin().tan() / tan_half * 48.0;
        let disc = std::f64::consts::PI * rad_px * rad_px;
        assert!((lit - disc).abs() / disc < 0.05, "{lit} vs {disc}");
        assert_eq!(v.image.get(0, 0), RGBColor::BLACK);
    }

    #[test]
    fn single_triangle_hits_center() {
        let m = TriMesh::new(vec![[0.0, -1.0, -1.0], [0.0, 1.0, -1.0], [0.0, 0.0, 1.0]], vec![[0, 1, 2]]).unwrap();
        let cam = Camera::new(0.0, 0.0, 3.0, [0.0; 3], 40.0, 9, 9).unwrap();
        let v = render_mesh(&m, &cam, 0.2);
        assert!(color_distance(ColorMetric::DE1976, srgb_to_lab(v.image.get(4, 4)), srgb_to_lab(MESH_COLOR)) < 1e-6);
    }

    #[test]
    fn deterministic_and_shared_dims() {
        let g = ball(17);
        let center = Camera::new(0.0, 90.0, 4.0, [0.0; 3], 30.0, 16, 12).unwrap();
        let scene = |c: &Camera| render_isosurface(&g, -0.5, RGBColor::new(0.2, 0.6, 0.9), c, 0.2);
        let a = render_view_set(scene, &center);
        let b = render_view_set(scene, &center);
        assert_eq!(a, b);
        assert_eq!(a.len(), 9);
        assert!(a.iter().all(|v| v.image.width() == 16 && v.image.height() == 12));
    }

    #[test]
    fn sidecar_layout() {
        let g = Grid2D::from_fn([4, 4], [0.0; 2], [1.0; 2], |p| p[0]).unwrap();
        let v = render_colormap_2d(&g, &gray(), 1);
        let dir = tempfile::tempdir().unwrap();
        let side = v.write(dir.path().join("a.png")).unwrap();
        let j: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(side).unwrap()).unwrap();
        assert_eq!(j["colormap"], "gray");
        assert_eq!(j["vmax"], 3.0);
        assert!(j["camera"].is_null());
        assert!(j["isovalue"].is_null());
    }
}
