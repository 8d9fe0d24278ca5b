//! Voxel radiance fields fitted to posed images, and the geometry and
//! color that can be read back out of them.

mod surface;

pub use surface::{
    cluster_surface_color, decode_surface_value, extract_density_surface, gaussian_blur, reconstruct_field_from_views,
    ColorClusters, SurfaceRule, ViewReconstruction, ViewReconstructionConfig, DEFAULT_DENSITY_PERCENTILE,
    DEFAULT_SMOOTH_SIGMA,
};

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::color::RGBColor;
use crate::error::{Error, Result};
use crate::field::{write_vrgf, write_vrgf_multi, Grid3D};
use crate::render::{Camera, ImageRGB};
use crate::spatial::{add3, scale3, Aabb, Vec3};

/// Samples per ray when rendering a fitted field for display.
pub const DEFAULT_RENDER_SAMPLES: usize = 128;

/// Densities at or below this count as empty space.
pub const EMPTY_DENSITY: f64 = 1e-4;

/// Raw density of a fresh field: softplus(-10) ≈ 4.5e-5, below [`EMPTY_DENSITY`],
/// so voxels no ray ever reaches stay empty.
const INIT_DENSITY_RAW: f64 = -10.0;

/// Training rays stop once this little light gets through. Samples past
/// that point would only receive vanishing gradients, which Adam would
/// inflate into hidden floaters.
const TRAIN_STOP_TRANSMITTANCE: f64 = 1e-4;

/// Rays per work unit in the gradient reduction. Fixed so the summation
/// order does not depend on the thread count.
const RAY_CHUNK: usize = 32;

fn softplus(x: f64) -> f64 {
    if x > 30.0 {
        x
    } else {
        x.exp().ln_1p()
    }
}

fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Density per node (softplus of the raw value) and color per node
/// (logistic of the raw values), trilinearly interpolated in between.
/// Density is measured per voxel length, so `σ = 1` attenuates by `e^-1`
/// over one grid spacing.
#[derive(Debug, Clone, PartialEq)]
pub struct VoxelRadianceField {
    dims: [usize; 3],
    origin: Vec3,
    spacing: Vec3,
    density_raw: Vec<f64>,
    color_raw: Vec<[f64; 3]>,
}

/// Trilinear stencil: the eight node indices around a point and their weights.
#[derive(Debug, Clone, Copy)]
struct Stencil {
    idx: [u32; 8],
    w: [f64; 8],
}

impl VoxelRadianceField {
    /// Empty field (density below [`EMPTY_DENSITY`], mid-gray color) spanning `bbox`.
    pub fn new(dims: [usize; 3], bbox: Aabb<3>) -> Result<Self> {
        if dims.iter().any(|&d| d < 2) {
            return Err(Error::invalid(format!("radiance grid dims must be >= 2, got {dims:?}")));
        }
        if (0..3).any(|a| !(bbox.hi[a] > bbox.lo[a])) {
            return Err(Error::invalid("radiance bounding box must have positive extent"));
        }
        let n = dims[0] * dims[1] * dims[2];
        Ok(VoxelRadianceField {
            dims,
            origin: bbox.lo,
            spacing: std::array::from_fn(|a| (bbox.hi[a] - bbox.lo[a]) / (dims[a] - 1) as f64),
            density_raw: vec![INIT_DENSITY_RAW; n],
            color_raw: vec![[0.0; 3]; n],
        })
    }

    /// Builds a field from per-node density and color, inverting the parameterization.
    pub fn from_values(dims: [usize; 3], bbox: Aabb<3>, density: &[f64], color: &[RGBColor]) -> Result<Self> {
        let mut f = VoxelRadianceField::new(dims, bbox)?;
        if density.len() != f.len() || color.len() != f.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} nodes, got {} densities and {} colors",
                f.len(),
                density.len(),
                color.len()
            )));
        }
        let inv_softplus = |s: f64| if s > 30.0 { s } else { s.exp_m1().max(1e-300).ln() };
        let inv_logistic = |c: f64| {
            let c = c.clamp(1e-9, 1.0 - 1e-9);
            (c / (1.0 - c)).ln()
        };
        for i in 0..f.len() {
            if !(density[i] >= 0.0) {
                return Err(Error::invalid(format!("density must be >= 0, got {}", density[i])));
            }
            f.density_raw[i] = inv_softplus(density[i]);
            f.color_raw[i] = [inv_logistic(color[i].r), inv_logistic(color[i].g), inv_logistic(color[i].b)];
        }
        Ok(f)
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn len(&self) -> usize {
        self.density_raw.len()
    }

    pub fn is_empty(&self) -> bool {
        self.density_raw.is_empty()
    }

    pub fn bbox(&self) -> Aabb<3> {
        Aabb {
            lo: self.origin,
            hi: std::array::from_fn(|a| self.origin[a] + self.spacing[a] * (self.dims[a] - 1) as f64),
        }
    }

    /// Length that density is measured against.
    pub fn voxel_size(&self) -> f64 {
        self.spacing.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn density_raw(&self) -> &[f64] {
        &self.density_raw
    }

    pub fn color_raw(&self) -> &[[f64; 3]] {
        &self.color_raw
    }

    pub fn density(&self, i: usize) -> f64 {
        softplus(self.density_raw[i])
    }

    pub fn color(&self, i: usize) -> RGBColor {
        let c = self.color_raw[i];
        RGBColor::new(logistic(c[0]), logistic(c[1]), logistic(c[2]))
    }

    /// Densities on the node grid.
    pub fn density_grid(&self) -> Grid3D {
        Grid3D::new(self.dims, self.origin, self.spacing, (0..self.len()).map(|i| self.density(i)).collect())
            .expect("field dims are valid")
    }

    /// Writes the density grid to `path` and the colors, three values per
    /// node, to `path` with a `.color.vrgf` extension.
    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let g = self.density_grid();
        write_vrgf(path, &g)?;
        let colors: Vec<f64> = (0..self.len())
            .flat_map(|i| {
                let c = self.color(i);
                [c.r, c.g, c.b]
            })
            .collect();
        write_vrgf_multi(path.with_extension("color.vrgf"), &g, &colors)
    }

    fn stencil(&self, p: Vec3) -> Stencil {
        let mut base = [0usize; 3];
        let mut frac = [0.0; 3];
        for a in 0..3 {
            let u = ((p[a] - self.origin[a]) / self.spacing[a]).clamp(0.0, (self.dims[a] - 1) as f64);
            let i = (u.floor() as usize).min(self.dims[a] - 2);
            base[a] = i;
            frac[a] = u - i as f64;
        }
        let (sx, sxy) = (1, self.dims[0]);
        let sxyz = self.dims[0] * self.dims[1];
        let lin0 = base[0] + base[1] * sxy + base[2] * sxyz;
        let mut idx = [0u32; 8];
        let mut w = [0.0; 8];
        for c in 0..8 {
            let (dx, dy, dz) = (c & 1, (c >> 1) & 1, (c >> 2) & 1);
            idx[c] = (lin0 + dx * sx + dy * sxy + dz * sxyz) as u32;
            w[c] = (if dx == 1 { frac[0] } else { 1.0 - frac[0] })
                * (if dy == 1 { frac[1] } else { 1.0 - frac[1] })
                * (if dz == 1 { frac[2] } else { 1.0 - frac[2] });
        }
        Stencil { idx, w }
    }

    fn sample(&self, s: &Stencil) -> (f64, [f64; 3]) {
        let mut sigma = 0.0;
        let mut c = [0.0; 3];
        for k in 0..8 {
            let i = s.idx[k] as usize;
            sigma += s.w[k] * softplus(self.density_raw[i]);
            for ch in 0..3 {
                c[ch] += s.w[k] * logistic(self.color_raw[i][ch]);
            }
        }
        (sigma, c)
    }

    /// Sample positions along a ray clipped to the box: `offsets[i]` in [0, 1)
    /// places sample `i` inside its stratum. Returns the stencils and the
    /// stratum length in voxel units.
    fn ray_stencils(&self, origin: Vec3, dir: Vec3, offsets: &[f64]) -> Option<(Vec<Stencil>, f64)> {
        let inv = [1.0 / dir[0], 1.0 / dir[1], 1.0 / dir[2]];
        let (t0, t1) = self.bbox().ray_interval(origin, inv, 0.0, f64::INFINITY)?;
        if !(t1 > t0) {
            return None;
        }
        let n = offsets.len();
        let seg = (t1 - t0) / n as f64;
        let stencils = offsets
            .iter()
            .enumerate()
            .map(|(i, &u)| self.stencil(add3(origin, scale3(dir, t0 + (i as f64 + u) * seg))))
            .collect();
        Some((stencils, seg / self.voxel_size()))
    }

    /// Emission–absorption compositing over black.
    fn composite(&self, origin: Vec3, dir: Vec3, offsets: &[f64]) -> [f64; 3] {
        let Some((stencils, delta)) = self.ray_stencils(origin, dir, offsets) else {
            return [0.0; 3];
        };
        let mut trans = 1.0;
        let mut out = [0.0; 3];
        for s in &stencils {
            let (sigma, c) = self.sample(s);
            let alpha = 1.0 - (-sigma * delta).exp();
            for ch in 0..3 {
                out[ch] += trans * alpha * c[ch];
            }
            trans *= 1.0 - alpha;
            if trans < 1e-12 {
                break;
            }
        }
        out
    }

    /// Transmittance through the whole box along a ray.
    pub fn transmittance(&self, origin: Vec3, dir: Vec3, samples: usize) -> f64 {
        let offsets = vec![0.5; samples.max(1)];
        let Some((stencils, delta)) = self.ray_stencils(origin, dir, &offsets) else {
            return 1.0;
        };
        let tau: f64 = stencils.iter().map(|s| self.sample(s).0 * delta).sum();
        (-tau).exp()
    }

    /// Adds the squared error of one ray to the loss and its gradient
    /// contributions `(node, dL/dσ_raw, dL/dc_raw)` to `out`.
    fn backprop_ray(&self, ray: &TrainingRay, offsets: &[f64], scale: f64, out: &mut Vec<(u32, [f64; 4])>) -> f64 {
        let Some((stencils, delta)) = self.ray_stencils(ray.origin, ray.dir, offsets) else {
            return ray.target.iter().map(|t| t * t).sum::<f64>();
        };
        let cap = stencils.len();
        let mut color = Vec::with_capacity(cap);
        let mut weight = Vec::with_capacity(cap);
        let mut trans_after = Vec::with_capacity(cap);
        let mut trans = 1.0;
        let mut c_out = [0.0; 3];
        for s in &stencils {
            let (sg, c) = self.sample(s);
            let alpha = 1.0 - (-sg * delta).exp();
            let w = trans * alpha;
            for ch in 0..3 {
                c_out[ch] += w * c[ch];
            }
            trans *= 1.0 - alpha;
            color.push(c);
            weight.push(w);
            trans_after.push(trans);
            if trans < TRAIN_STOP_TRANSMITTANCE {
                break;
            }
        }
        let n = weight.len();
        let resid: [f64; 3] = std::array::from_fn(|ch| c_out[ch] - ray.target[ch]);
        let g: [f64; 3] = std::array::from_fn(|ch| 2.0 * scale * resid[ch]);
        // behind[i] = Σ_{j>i} w_j c_j, accumulated back to front
        let mut behind = [0.0; 3];
        for i in (0..n).rev() {
            let c = color[i];
            let g_dot_c = g[0] * c[0] + g[1] * c[1] + g[2] * c[2];
            let g_dot_behind = g[0] * behind[0] + g[1] * behind[1] + g[2] * behind[2];
            let d_sigma = delta * (trans_after[i] * g_dot_c - g_dot_behind);
            let d_color: [f64; 3] = std::array::from_fn(|ch| g[ch] * weight[i]);
            for ch in 0..3 {
                behind[ch] += weight[i] * c[ch];
            }
            let s = &stencils[i];
            for k in 0..8 {
                if s.w[k] == 0.0 {
                    continue;
                }
                let node = s.idx[k] as usize;
                let ds = s.w[k] * logistic(self.density_raw[node]) * d_sigma;
                let mut e = [ds, 0.0, 0.0, 0.0];
                for ch in 0..3 {
                    let l = logistic(self.color_raw[node][ch]);
                    e[1 + ch] = s.w[k] * l * (1.0 - l) * d_color[ch];
                }
                out.push((s.idx[k], e));
            }
        }
        resid.iter().map(|r| r * r).sum::<f64>()
    }

    /// Mean squared photometric error over the batch (averaged over rays
    /// and channels) and its gradient with respect to the raw parameters.
    pub fn loss_and_gradient(&self, batch: &TrainingBatch) -> (f64, FieldGradient) {
        let mut grad = FieldGradient::zeros(self.len());
        let loss = self.accumulate(batch, &mut grad, &mut Vec::new());
        (loss, grad)
    }

    fn accumulate(&self, batch: &TrainingBatch, grad: &mut FieldGradient, buffers: &mut Vec<Vec<(u32, [f64; 4])>>) -> f64 {
        let m = batch.rays.len();
        if m == 0 {
            return 0.0;
        }
        let spr = batch.samples_per_ray;
        let scale = 1.0 / (3.0 * m as f64);
        let chunks = m.div_ceil(RAY_CHUNK);
        buffers.resize_with(chunks, Vec::new);
        let sums: Vec<f64> = buffers[..chunks]
            .par_iter_mut()
            .enumerate()
            .map(|(c, buf)| {
                buf.clear();
                let mut sse = 0.0;
                for r in c * RAY_CHUNK..((c + 1) * RAY_CHUNK).min(m) {
                    sse += self.backprop_ray(&batch.rays[r], &batch.offsets[r * spr..(r + 1) * spr], scale, buf);
                }
                sse
            })
            .collect();
        for buf in &buffers[..chunks] {
            for &(node, e) in buf {
                let node = node as usize;
                grad.density[node] += e[0];
                for ch in 0..3 {
                    grad.color[node][ch] += e[1 + ch];
                }
            }
        }
        sums.iter().sum::<f64>() * scale
    }

    fn apply(&mut self, params: &[f64]) {
        let n = self.len();
        self.density_raw.copy_from_slice(&params[..n]);
        for i in 0..n {
            self.color_raw[i] = [params[n + 3 * i], params[n + 3 * i + 1], params[n + 3 * i + 2]];
        }
    }

    /// Raw parameters as one vector: densities, then colors interleaved.
    pub fn params(&self) -> Vec<f64> {
        let mut p = self.density_raw.clone();
        p.extend(self.color_raw.iter().flatten());
        p
    }

    pub fn set_params(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != 4 * self.len() {
            return Err(Error::DimensionMismatch(format!("{} params for {} nodes", params.len(), self.len())));
        }
        self.apply(params);
        Ok(())
    }
}

/// Gradient of the photometric loss with respect to the raw parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldGradient {
    pub density: Vec<f64>,
    pub color: Vec<[f64; 3]>,
}

impl FieldGradient {
    fn zeros(n: usize) -> Self {
        FieldGradient {
            density: vec![0.0; n],
            color: vec![[0.0; 3]; n],
        }
    }

    /// Flattened in the same layout as [`VoxelRadianceField::params`].
    pub fn flatten(&self) -> Vec<f64> {
        let mut p = self.density.clone();
        p.extend(self.color.iter().flatten());
        p
    }
}

/// A ray and the pixel color it should reproduce.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainingRay {
    pub origin: Vec3,
    pub dir: Vec3,
    pub target: [f64; 3],
}

/// Rays plus per-sample stratum offsets in [0, 1), `samples_per_ray` per ray.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingBatch {
    pub rays: Vec<TrainingRay>,
    pub samples_per_ray: usize,
    pub offsets: Vec<f64>,
}

/// Renders the field from `cam` with [`DEFAULT_RENDER_SAMPLES`] samples per ray.
pub fn volume_render(f: &VoxelRadianceField, cam: &Camera) -> ImageRGB {
    volume_render_with_samples(f, cam, DEFAULT_RENDER_SAMPLES)
}

/// Renders the field from `cam` with stratum-centered samples.
pub fn volume_render_with_samples(f: &VoxelRadianceField, cam: &Camera, samples: usize) -> ImageRGB {
    let pose = cam.pose();
    let offsets = vec![0.5; samples.max(1)];
    let mut img = ImageRGB::filled(cam.width, cam.height, RGBColor::BLACK);
    img.pixels_mut()
        .par_chunks_mut(cam.width)
        .enumerate()
        .for_each(|(row, line)| {
            for (col, px) in line.iter_mut().enumerate() {
                let (o, d) = cam.ray(&pose, col, row);
                let c = f.composite(o, d, &offsets);
                *px = RGBColor::new(c[0], c[1], c[2]).clamped();
            }
        });
    img
}

/// An image with the camera it was taken from.
#[derive(Debug, Clone, PartialEq)]
pub struct PosedImage {
    pub image: ImageRGB,
    pub camera: Camera,
}

impl PosedImage {
    pub fn new(image: ImageRGB, camera: Camera) -> Result<Self> {
        if image.width() != camera.width || image.height() != camera.height {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} image for a {}x{} camera",
                image.width(),
                image.height(),
                camera.width,
                camera.height
            )));
        }
        Ok(PosedImage { image, camera })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub iterations: usize,
    pub learning_rate: f64,
    pub rays_per_batch: usize,
    pub samples_per_ray: usize,
    pub seed: u64,
    pub grid_dims: [usize; 3],
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            iterations: 2000,
            learning_rate: 0.1,
            rays_per_batch: 1024,
            samples_per_ray: 64,
            seed: 0,
            grid_dims: [64; 3],
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 || self.rays_per_batch == 0 || self.samples_per_ray == 0 {
            return Err(Error::invalid("fit iterations, rays per batch and samples per ray must be >= 1"));
        }
        if self.grid_dims.iter().any(|&d| d < 2) {
            return Err(Error::invalid(format!("grid dims must be >= 2, got {:?}", self.grid_dims)));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::invalid(format!("learning rate must be > 0, got {}", self.learning_rate)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub field: VoxelRadianceField,
    /// Batch loss after each iteration.
    pub loss_history: Vec<f64>,
}

impl FitResult {
    pub fn final_loss(&self) -> f64 {
        self.loss_history.last().copied().unwrap_or(f64::NAN)
    }
}

const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

/// Fits a field inside `bbox` to the views by Adam on random ray batches.
pub fn fit_radiance_field(views: &[PosedImage], bbox: Aabb<3>, cfg: &FitConfig) -> Result<FitResult> {
    cfg.validate()?;
    if views.is_empty() {
        return Err(Error::EmptyInput);
    }
    for (i, a) in views.iter().enumerate() {
        if views[..i].iter().any(|b| b.camera == a.camera) {
            return Err(Error::invalid(format!("view {i} repeats an earlier camera")));
        }
    }
    let mut pixels: Vec<TrainingRay> = Vec::new();
    for v in views {
        let pose = v.camera.pose();
        for row in 0..v.camera.height {
            for col in 0..v.camera.width {
                let (origin, dir) = v.camera.ray(&pose, col, row);
                let p = v.image.get(col, row);
                pixels.push(TrainingRay {
                    origin,
                    dir,
                    target: [p.r, p.g, p.b],
                });
            }
        }
    }
    let mut field = VoxelRadianceField::new(cfg.grid_dims, bbox)?;
    let np = 4 * field.len();
    let mut params = field.params();
    let mut m1 = vec![0.0; np];
    let mut m2 = vec![0.0; np];
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut history = Vec::with_capacity(cfg.iterations);
    let mut buffers = Vec::new();
    let mut grad = FieldGradient::zeros(field.len());
    let spr = cfg.samples_per_ray;
    let mut batch = TrainingBatch {
        rays: Vec::with_capacity(cfg.rays_per_batch),
        samples_per_ray: spr,
        offsets: Vec::with_capacity(cfg.rays_per_batch * spr),
    };
    for it in 0..cfg.iterations {
        batch.rays.clear();
        batch.offsets.clear();
        for _ in 0..cfg.rays_per_batch {
            batch.rays.push(pixels[rng.random_range(0..pixels.len())]);
            for _ in 0..spr {
                batch.offsets.push(rng.random::<f64>());
            }
        }
        grad.density.iter_mut().for_each(|g| *g = 0.0);
        grad.color.iter_mut().for_each(|g| *g = [0.0; 3]);
        let loss = field.accumulate(&batch, &mut grad, &mut buffers);
        if !loss.is_finite() {
            return Err(Error::Diverged {
                iteration: it,
                config: format!("{cfg:?}"),
            });
        }
        history.push(loss);
        let n = field.len();
        let b1t = 1.0 - ADAM_BETA1.powi(it as i32 + 1);
        let b2t = 1.0 - ADAM_BETA2.powi(it as i32 + 1);
        let lr = cfg.learning_rate;
        let step = |p: &mut f64, g: f64, m: &mut f64, v: &mut f64| {
            *m = ADAM_BETA1 * *m + (1.0 - ADAM_BETA1) * g;
            *v = ADAM_BETA2 * *v + (1.0 - ADAM_BETA2) * g * g;
            *p -= lr * (*m / b1t) / ((*v / b2t).sqrt() + ADAM_EPS);
        };
        let (pd, pc) = params.split_at_mut(n);
        let (m1d, m1c) = m1.split_at_mut(n);
        let (m2d, m2c) = m2.split_at_mut(n);
        pd.par_iter_mut()
            .zip(m1d.par_iter_mut().zip(m2d.par_iter_mut()))
            .enumerate()
            .for_each(|(i, (p, (m, v)))| step(p, grad.density[i], m, v));
        pc.par_chunks_mut(3)
            .zip(m1c.par_chunks_mut(3).zip(m2c.par_chunks_mut(3)))
            .enumerate()
            .for_each(|(i, (p, (m, v)))| {
                for ch in 0..3 {
                    step(&mut p[ch], grad.color[i][ch], &mut m[ch], &mut v[ch]);
                }
            });
        field.apply(&params);
    }
    Ok(FitResult {
        field,
        loss_history: history,
    })
}
