use serde::Serialize;

use super::{color_distance, srgb_to_lab, ColorMetric, Colormap, LabColor, JND_DE2000};

/// One perceptual bin of a colormap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct JndBin {
    /// Lab color at the bin's arc-length midpoint.
    pub representative: LabColor,
    /// Midpoint of `t_interval`; the value a pixel decodes to.
    pub center: f64,
    pub t_interval: [f64; 2],
}

impl JndBin {
    pub fn width(&self) -> f64 {
        self.t_interval[1] - self.t_interval[0]
    }

    pub fn contains(&self, t: f64) -> bool {
        t >= self.t_interval[0] && t <= self.t_interval[1]
    }
}

/// A colormap cut into intervals of one JND of ΔE2000 arc length each.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JndBinning {
    pub bins: Vec<JndBin>,
    pub source_arc_length: f64,
}

impl JndBinning {
    /// Index of the bin whose interval contains `t` (first match on shared edges).
    pub fn bin_index_of(&self, t: f64) -> usize {
        let t = t.clamp(0.0, 1.0);
        self.bins
            .iter()
            .position(|b| b.contains(t))
            .unwrap_or(self.bins.len() - 1)
    }

    pub fn len(&self) -> usize {
        self.bins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bins.is_empty()
    }
}

/// `ceil(arc / 2.9)` with a small slack so exact multiples are not split
/// by floating-point noise; at least 1.
pub(crate) fn jnd_bin_count(arc: f64) -> usize {
    let q = arc / JND_DE2000;
    ((q - 1e-9).ceil().max(1.0)) as usize
}

/// Parameter `t` at which the cumulative arc first reaches `s`.
fn t_at_arc(cumulative: &[f64], s: f64) -> f64 {
    let n = cumulative.len();
    let total = cumulative[n - 1];
    if s <= 0.0 {
        return 0.0;
    }
    if s >= total {
        // first sample index where the total is reached
        let k = cumulative.iter().position(|&c| c >= total).unwrap_or(n - 1);
        return k as f64 / (n - 1) as f64;
    }
    let k = cumulative.partition_point(|&c| c < s);
    // cumulative[k-1] < s <= cumulative[k]
    let lo = cumulative[k - 1];
    let hi = cumulative[k];
    let frac = if hi > lo { (s - lo) / (hi - lo) } else { 0.0 };
    ((k - 1) as f64 + frac) / (n - 1) as f64
}

pub fn build_jnd_binning(cm: &Colormap) -> JndBinning {
    let cumulative = cm.cumulative_arc();
    let total = *cumulative.last().expect("at least two samples");
    let count = jnd_bin_count(total);
    let mut bins = Vec::with_capacity(count);
    let mut t_lo = 0.0;
    for j in 0..count {
        let s_lo = JND_DE2000 * j as f64;
        let s_hi = (JND_DE2000 * (j + 1) as f64).min(total);
        let t_hi = if j + 1 == count {
            1.0
        } else {
            t_at_arc(&cumulative, s_hi)
        };
        let s_mid = 0.5 * (s_lo.min(total) + s_hi);
        let representative = srgb_to_lab(cm.sample(t_at_arc(&cumulative, s_mid)));
        bins.push(JndBin {
            representative,
            center: 0.5 * (t_lo + t_hi),
            t_interval: [t_lo, t_hi],
        });
        t_lo = t_hi;
    }
    JndBinning {
        bins,
        source_arc_length: total,
    }
}

/// Center value of the bin closest to `pixel`; ties go to the lowest index.
pub fn decode_color(binning: &JndBinning, metric: ColorMetric, pixel: LabColor) -> f64 {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (i, bin) in binning.bins.iter().enumerate() {
        let d = color_distance(metric, bin.representative, pixel);
        if d < best_d {
            best_d = d;
            best = i;
        }
    }
    binning.bins[best].center
}

/// Decodes the colormap's own samples and counts adjacent decreases.
pub fn is_order_preserving(cm: &Colormap) -> (bool, usize) {
    let binning = build_jnd_binning(cm);
    let decoded: Vec<f64> = cm
        .samples()
        .iter()
        .map(|&c| decode_color(&binning, ColorMetric::DE2000, srgb_to_lab(c)))
        .collect();
    let inversions = decoded.windows(2).filter(|w| w[1] < w[0]).count();
    (inversions == 0, inversions)
}
