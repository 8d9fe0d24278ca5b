//! Colormap experiments: decode rendered fields back through the legend and
//! score the result against the original data.

use std::collections::HashMap;

use serde::Serialize;

use crate::color::{
    arc_length, build_jnd_binning, decode_color, discriminative_power, is_order_preserving, lab_to_lch, srgb_to_lab,
    ColorMetric, Colormap, JndBinning, RGBColor,
};
use crate::error::{Error, Result};
use crate::field::{l2_error, normalize, rmse, FieldStats, Grid2D};
use crate::render::{render_colormap_2d, render_shaded_heightfield, ImageRGB, RenderedView};

/// Minimum CIELAB chroma every sample of a colorful map must reach.
pub const COLORFUL_MIN_CHROMA: f64 = 20.0;

/// Default relief for the shaded experiment, in domain units per unit of normalized value.
pub const DEFAULT_Z_SCALE: f64 = 0.5;

/// Order-preserving maps whose every sample is clearly chromatic; these are
/// the maps a hue-only lookup can decode.
pub fn is_colorful(cm: &Colormap) -> bool {
    is_order_preserving(cm).0
        && cm
            .samples()
            .iter()
            .all(|&c| lab_to_lch(srgb_to_lab(c)).c >= COLORFUL_MIN_CHROMA)
}

/// Legend value in [0, 1] per pixel. Pixels are read at 8 bits per channel,
/// as they would be from a PNG.
pub fn decode_image(img: &ImageRGB, binning: &JndBinning, metric: ColorMetric) -> Vec<f64> {
    let mut cache: HashMap<[u8; 3], f64> = HashMap::new();
    img.pixels()
        .iter()
        .map(|p| {
            let key = p.to_u8();
            *cache
                .entry(key)
                .or_insert_with(|| decode_color(binning, metric, srgb_to_lab(RGBColor::from_u8(key))))
        })
        .collect()
}

/// Maps a top-down raster of `template` back to a grid in data units using
/// the view's legend range. The image may be an integer upscale of the grid.
pub fn decode_raster(view: &RenderedView, cm: &Colormap, metric: ColorMetric, template: &Grid2D) -> Result<Grid2D> {
    let [nx, ny] = template.dims();
    let (w, h) = (view.image.width(), view.image.height());
    if w % nx != 0 || h % ny != 0 || w / nx != h / ny || w == 0 {
        return Err(Error::DimensionMismatch(format!("{w}x{h} image is not a raster of a {nx}x{ny} grid")));
    }
    let scale = w / nx;
    let t = decode_image(&view.image, &build_jnd_binning(cm), metric);
    let stats = FieldStats::new(view.legend.vmin, view.legend.vmax);
    let mut values = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let col = i * scale + scale / 2;
            let row = (ny - 1 - j) * scale + scale / 2;
            values.push(stats.denormalize(t[row * w + col]));
        }
    }
    template.with_values(values)
}

/// One colormap scored on the plain 2D rendering.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Eval2D {
    pub colormap: String,
    pub order_preserving: bool,
    pub inversions: usize,
    pub arc_length: f64,
    pub discriminative_power: f64,
    pub bins: usize,
    pub l2_error: f64,
    pub rmse: f64,
    /// Largest per-cell error in legend units divided by the width of the
    /// bin containing the true value; at most 1 for a faithful round trip.
    pub worst_bin_ratio: f64,
}

pub fn evaluate_colormap_2d(g: &Grid2D, cm: &Colormap) -> Result<Eval2D> {
    let view = render_colormap_2d(g, cm, 1);
    let decoded = decode_raster(&view, cm, ColorMetric::DE2000, g)?;
    let binning = build_jnd_binning(cm);
    let (tn, stats) = normalize(g);
    let worst_bin_ratio = tn
        .values()
        .iter()
        .zip(decoded.values())
        .map(|(&t, &d)| {
            let width = binning.bins[binning.bin_index_of(t)].width();
            (stats.normalize_value(d) - t).abs() / width
        })
        .fold(0.0, f64::max);
    let (order_preserving, inversions) = is_order_preserving(cm);
    Ok(Eval2D {
        colormap: cm.name().to_string(),
        order_preserving,
        inversions,
        arc_length: arc_length(cm),
        discriminative_power: discriminative_power(cm),
        bins: binning.len(),
        l2_error: l2_error(&decoded, g)?,
        rmse: rmse(&decoded, g)?,
        worst_bin_ratio,
    })
}

/// One colormap and lookup metric scored on the shaded rendering.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Eval3D {
    pub colormap: String,
    pub metric: ColorMetric,
    pub colorful: bool,
    pub l2_error: f64,
    pub rmse: f64,
}

/// Renders the shaded heightfield once and decodes it with each metric.
pub fn evaluate_colormap_3d(
    g: &Grid2D,
    cm: &Colormap,
    metrics: &[ColorMetric],
    z_scale: f64,
    ambient: f64,
) -> Result<Vec<Eval3D>> {
    let view = render_shaded_heightfield(g, cm, z_scale, ambient);
    let colorful = is_colorful(cm);
    metrics
        .iter()
        .map(|&metric| {
            let decoded = decode_raster(&view, cm, metric, g)?;
            Ok(Eval3D {
                colormap: cm.name().to_string(),
                metric,
                colorful,
                l2_error: l2_error(&decoded, g)?,
                rmse: rmse(&decoded, g)?,
            })
        })
        .collect()
}
