//! Reference isovalue selectors and the image-entropy viewpoint score.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use crate::contour::{select_isovalue_by_reconstruction, unsigned_distance, Isocontour, IsovalueSelection, ReconstructionConfig, Surface};
use crate::error::{Error, Result};
use crate::field::{gradient_magnitude, FieldStats, Grid};
use crate::render::ImageRGB;

/// Bins used to quantize distance fields before computing mutual information.
pub const MI_BINS: usize = 32;

/// `k` isovalues splitting `(min, max)` into `k + 1` equal parts.
pub fn evenly_spaced_isovalues(stats: FieldStats, k: usize) -> Vec<f64> {
    (1..=k)
        .map(|i| stats.min + stats.range * i as f64 / (k + 1) as f64)
        .collect()
}

/// Midpoint of the data range.
pub fn carr_isovalue(stats: FieldStats) -> f64 {
    (stats.min + stats.max) / 2.0
}

/// Field value where the gradient magnitude peaks; ties keep the lowest index.
pub fn kindlmann_isovalue<const N: usize>(g: &Grid<N>) -> f64 {
    let gm = gradient_magnitude(g);
    let mut best = 0;
    for (i, &m) in gm.values().iter().enumerate() {
        if m > gm.values()[best] {
            best = i;
        }
    }
    g.values()[best]
}

/// Pairwise mutual information between candidate isosurfaces.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimilarityMap {
    pub candidates: Vec<f64>,
    /// Row-major `candidates.len()²` matrix.
    pub matrix: Vec<f64>,
}

impl SimilarityMap {
    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.matrix[i * self.len() + j]
    }

    pub fn row_sum(&self, i: usize) -> f64 {
        let n = self.len();
        self.matrix[i * n..(i + 1) * n].iter().sum()
    }

    /// Header row of isovalues, then one row per candidate.
    pub fn to_csv_string(&self) -> String {
        let mut s = String::from("isovalue");
        for c in &self.candidates {
            let _ = write!(s, ",{c}");
        }
        s.push('\n');
        for (i, c) in self.candidates.iter().enumerate() {
            let _ = write!(s, "{c}");
            for j in 0..self.len() {
                let _ = write!(s, ",{}", self.get(i, j));
            }
            s.push('\n');
        }
        s
    }
}

/// Bin index per node of the distance field scaled to [0, 1] by its maximum.
fn quantized_distance<const N: usize, S: Surface<N>>(g: &Grid<N>, surface: &S) -> Result<Vec<u8>> {
    let d = unsigned_distance(g, surface)?;
    let max = d.values().iter().cloned().fold(0.0, f64::max);
    Ok(d.values()
        .iter()
        .map(|&v| {
            let t = if max > 0.0 { v / max } else { 0.0 };
            ((t * MI_BINS as f64) as usize).min(MI_BINS - 1) as u8
        })
        .collect())
}

/// Mutual information in bits between two equally long bin sequences.
pub fn mutual_information(a: &[u8], b: &[u8], bins: usize) -> f64 {
    let n = a.len() as f64;
    let mut joint = vec![0usize; bins * bins];
    let mut pa = vec![0usize; bins];
    let mut pb = vec![0usize; bins];
    for (&x, &y) in a.iter().zip(b) {
        joint[x as usize * bins + y as usize] += 1;
        pa[x as usize] += 1;
        pb[y as usize] += 1;
    }
    let mut mi = 0.0;
    for x in 0..bins {
        for y in 0..bins {
            let c = joint[x * bins + y];
            if c > 0 {
                let pxy = c as f64 / n;
                mi += pxy * (pxy / (pa[x] as f64 / n * (pb[y] as f64 / n))).log2();
            }
        }
    }
    mi.max(0.0)
}

/// Picks the candidate whose distance field shares the most information
/// with all others. Candidates with empty contours are dropped.
pub fn bruckner_isovalue<const N: usize>(g: &Grid<N>, k: usize) -> Result<(f64, SimilarityMap)>
where
    Grid<N>: Isocontour<N> + Sync,
{
    if k < 2 {
        return Err(Error::invalid(format!("need at least 2 candidates, got {k}")));
    }
    let candidates = evenly_spaced_isovalues(g.stats(), k);
    let fields: Vec<Option<Vec<u8>>> = candidates
        .par_iter()
        .map(|&iso| {
            let s = g.isocontour(iso);
            if s.is_empty() {
                None
            } else {
                quantized_distance(g, &s).ok()
            }
        })
        .collect();
    let (kept, fields): (Vec<f64>, Vec<Vec<u8>>) = candidates
        .into_iter()
        .zip(fields)
        .filter_map(|(c, f)| f.map(|f| (c, f)))
        .unzip();
    if kept.len() < 2 {
        return Err(Error::invalid(format!("only {} candidate isosurfaces are non-empty", kept.len())));
    }
    let n = kept.len();
    let upper: Vec<(usize, usize, f64)> = (0..n)
        .flat_map(|i| (i..n).map(move |j| (i, j)))
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|(i, j)| (i, j, mutual_information(&fields[i], &fields[j], MI_BINS)))
        .collect();
    let mut matrix = vec![0.0; n * n];
    for (i, j, mi) in upper {
        matrix[i * n + j] = mi;
        matrix[j * n + i] = mi;
    }
    let map = SimilarityMap { candidates: kept, matrix };
    let mut best = 0;
    for i in 1..n {
        if map.row_sum(i) > map.row_sum(best) {
            best = i;
        }
    }
    Ok((map.candidates[best], map))
}

/// Isovalue and reconstruction error of one selector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SelectorOutcome {
    pub isovalue: f64,
    pub error: f64,
}

/// Reconstruction-based selection against the three reference selectors.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelectorComparison {
    pub ours: SelectorOutcome,
    pub kindlmann: SelectorOutcome,
    pub carr: SelectorOutcome,
    pub bruckner: SelectorOutcome,
    /// Scored over `k` evenly spaced values followed by the three baseline values.
    pub selection: IsovalueSelection,
}

impl SelectorComparison {
    pub fn baselines(&self) -> [(&'static str, SelectorOutcome); 3] {
        [("kindlmann", self.kindlmann), ("carr", self.carr), ("bruckner", self.bruckner)]
    }

    /// True when our error is at most each baseline's.
    pub fn dominates(&self) -> bool {
        self.baselines().iter().all(|(_, b)| self.ours.error <= b.error)
    }
}

/// Runs all four selectors with the baseline values appended to the `k`
/// reconstruction candidates.
pub fn compare_isovalue_selectors<const N: usize>(
    g: &Grid<N>,
    k: usize,
    cfg: &ReconstructionConfig,
    seed: u64,
) -> Result<SelectorComparison>
where
    Grid<N>: Isocontour<N> + Sync,
{
    let stats = g.stats();
    if stats.range <= 0.0 {
        return Err(Error::invalid("field is constant"));
    }
    let (bruckner, _) = bruckner_isovalue(g, k)?;
    let baselines = [kindlmann_isovalue(g), carr_isovalue(stats), bruckner];
    let mut candidates = evenly_spaced_isovalues(stats, k);
    candidates.extend(baselines);
    let selection = select_isovalue_by_reconstruction(g, &candidates, cfg, seed)?;
    let outcome = |i: usize| SelectorOutcome {
        isovalue: selection.candidates[i],
        error: selection.errors[i],
    };
    Ok(SelectorComparison {
        ours: outcome(selection.best_index),
        kindlmann: outcome(k),
        carr: outcome(k + 1),
        bruckner: outcome(k + 2),
        selection,
    })
}

/// Shannon entropy in bits of the 8-bit Rec. 709 luminance histogram.
pub fn image_entropy(img: &ImageRGB) -> f64 {
    let mut hist = [0usize; 256];
    for p in img.pixels() {
        let y = p.clamped().luma709();
        hist[(y * 255.0).round() as usize] += 1;
    }
    let n = img.pixels().len() as f64;
    let h: f64 = hist
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .sum();
    h.max(0.0)
}
