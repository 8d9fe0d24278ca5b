use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::rbf::{RbfModel, ShapeParameter, DEFAULT_RIDGE};
use super::sdf::signed_distance;
use super::{Hypothesis, Isocontour, Surface};
use crate::error::{Error, Result};
use crate::field::{l2_error, FieldStats, Grid};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionConfig {
    /// Number of contour points used as constraints.
    pub n_points: usize,
    pub shape: ShapeParameter,
    pub ridge: f64,
}

impl Default for ReconstructionConfig {
    fn default() -> Self {
        ReconstructionConfig {
            n_points: 500,
            shape: ShapeParameter::default(),
            ridge: DEFAULT_RIDGE,
        }
    }
}

/// Nodes where |d| is a strict local maximum among same-sign neighbors.
/// On plateaus only the lowest linear index survives.
pub fn sdf_extrema<const N: usize>(sdf: &Grid<N>) -> Vec<usize> {
    let v = sdf.values();
    (0..sdf.len())
        .filter(|&i| {
            let d = v[i];
            if d == 0.0 {
                return false;
            }
            let a = d.abs();
            sdf.neighbors(i).all(|j| {
                let e = v[j];
                if (e < 0.0) != (d < 0.0) || e == 0.0 {
                    return true;
                }
                let b = e.abs();
                b < a || (b == a && j > i)
            })
        })
        .collect()
}

/// Interpolation constraints: contour points at the isovalue plus SDF
/// extrema scaled toward the bound of their side.
fn constraints<const N: usize>(
    sdf: &Grid<N>,
    contour_points: &[[f64; N]],
    isovalue: f64,
    stats: FieldStats,
    hyp: Hypothesis,
) -> (Vec<[f64; N]>, Vec<f64>) {
    let (inside_bound, outside_bound) = match hyp {
        Hypothesis::InsideHigh => (stats.max, stats.min),
        Hypothesis::InsideLow => (stats.min, stats.max),
    };
    let mut pts: Vec<[f64; N]> = contour_points.to_vec();
    let mut vals = vec![isovalue; pts.len()];
    let extrema = sdf_extrema(sdf);
    let v = sdf.values();
    let deepest = |inside: bool| {
        extrema
            .iter()
            .filter(|&&i| (v[i] < 0.0) == inside)
            .map(|&i| v[i].abs())
            .fold(0.0, f64::max)
    };
    let (deep_in, deep_out) = (deepest(true), deepest(false));
    for &i in &extrema {
        let inside = v[i] < 0.0;
        let (bound, depth) = if inside { (inside_bound, deep_in) } else { (outside_bound, deep_out) };
        pts.push(sdf.position_of(i));
        vals.push(isovalue + (bound - isovalue) * (v[i].abs() / depth));
    }
    (pts, vals)
}

/// Fits the RBF to the constraints implied by `sdf` and evaluates it on the SDF grid.
pub fn reconstruct_from_sdf<const N: usize>(
    sdf: &Grid<N>,
    contour_points: &[[f64; N]],
    isovalue: f64,
    stats: FieldStats,
    hyp: Hypothesis,
    cfg: &ReconstructionConfig,
) -> Result<Grid<N>> {
    if contour_points.is_empty() {
        return Err(Error::EmptyContour);
    }
    if !(stats.range > 0.0) {
        return Err(Error::invalid("field range must be positive"));
    }
    let (pts, vals) = constraints(sdf, contour_points, isovalue, stats, hyp);
    let model = RbfModel::fit(pts, &vals, cfg.shape, cfg.ridge)?;
    let values = (0..sdf.len())
        .into_par_iter()
        .map(|i| model.eval(sdf.position_of(i)))
        .collect();
    sdf.with_values(values)
}

fn check_config(cfg: &ReconstructionConfig) -> Result<()> {
    if cfg.n_points < 4 {
        return Err(Error::invalid(format!("need at least 4 contour points, got {}", cfg.n_points)));
    }
    Ok(())
}

/// Reconstructs a field on `template`'s grid from one contour.
pub fn reconstruct_from_contour<const N: usize, S: Surface<N>>(
    template: &Grid<N>,
    contour: &S,
    isovalue: f64,
    stats: FieldStats,
    hyp: Hypothesis,
    cfg: &ReconstructionConfig,
    seed: u64,
) -> Result<Grid<N>> {
    check_config(cfg)?;
    let sdf = signed_distance(template, contour)?;
    let pts = contour.sample_points(cfg.n_points, &mut ChaCha8Rng::seed_from_u64(seed));
    reconstruct_from_sdf(&sdf, &pts, isovalue, stats, hyp, cfg)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BestReconstruction<const N: usize> {
    pub grid: Grid<N>,
    pub hypothesis: Hypothesis,
    pub error: f64,
    /// Score of the rejected hypothesis.
    pub other_error: f64,
}

/// Evaluates both hypotheses and keeps the lower score; ties keep `InsideHigh`.
pub fn best_of_hypotheses<const N: usize>(
    sdf: &Grid<N>,
    contour_points: &[[f64; N]],
    isovalue: f64,
    stats: FieldStats,
    cfg: &ReconstructionConfig,
    score: impl Fn(&Grid<N>) -> Result<f64>,
) -> Result<BestReconstruction<N>> {
    let high = reconstruct_from_sdf(sdf, contour_points, isovalue, stats, Hypothesis::InsideHigh, cfg)?;
    let low = reconstruct_from_sdf(sdf, contour_points, isovalue, stats, Hypothesis::InsideLow, cfg)?;
    let (eh, el) = (score(&high)?, score(&low)?);
    Ok(if el < eh {
        BestReconstruction {
            grid: low,
            hypothesis: Hypothesis::InsideLow,
            error: el,
            other_error: eh,
        }
    } else {
        BestReconstruction {
            grid: high,
            hypothesis: Hypothesis::InsideHigh,
            error: eh,
            other_error: el,
        }
    })
}

/// Reconstructs under both hypotheses and keeps the one closer to `original` in L2.
pub fn best_reconstruction<const N: usize, S: Surface<N>>(
    original: &Grid<N>,
    contour: &S,
    isovalue: f64,
    cfg: &ReconstructionConfig,
    seed: u64,
) -> Result<BestReconstruction<N>> {
    check_config(cfg)?;
    let sdf = signed_distance(original, contour)?;
    let pts = contour.sample_points(cfg.n_points, &mut ChaCha8Rng::seed_from_u64(seed));
    best_of_hypotheses(&sdf, &pts, isovalue, original.stats(), cfg, |g| l2_error(g, original))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IsovalueSelection {
    pub best_isovalue: f64,
    pub best_index: usize,
    pub candidates: Vec<f64>,
    /// +inf for candidates whose contour is empty or whose fit failed.
    pub errors: Vec<f64>,
    pub hypotheses: Vec<Option<Hypothesis>>,
    pub failures: Vec<Option<String>>,
}

/// Scores every candidate isovalue by reconstruction error and picks the
/// smallest (first on ties).
pub fn select_isovalue_by_reconstruction<const N: usize>(
    g: &Grid<N>,
    candidates: &[f64],
    cfg: &ReconstructionConfig,
    seed: u64,
) -> Result<IsovalueSelection>
where
    Grid<N>: Isocontour<N> + Sync,
{
    if candidates.is_empty() {
        return Err(Error::invalid("need at least one candidate isovalue"));
    }
    check_config(cfg)?;
    let results: Vec<std::result::Result<BestReconstruction<N>, String>> = candidates
        .par_iter()
        .map(|&iso| {
            let contour = g.isocontour(iso);
            if contour.is_empty() {
                return Err("empty contour".to_string());
            }
            best_reconstruction(g, &contour, iso, cfg, seed).map_err(|e| e.to_string())
        })
        .collect();
    let errors: Vec<f64> = results.iter().map(|r| r.as_ref().map_or(f64::INFINITY, |b| b.error)).collect();
    let mut best_index = 0;
    for (i, &e) in errors.iter().enumerate() {
        if e < errors[best_index] {
            best_index = i;
        }
    }
    if !errors[best_index].is_finite() {
        return Err(Error::EmptyContour);
    }
    Ok(IsovalueSelection {
        best_isovalue: candidates[best_index],
        best_index,
        candidates: candidates.to_vec(),
        hypotheses: results.iter().map(|r| r.as_ref().ok().map(|b| b.hypothesis)).collect(),
        failures: results.iter().map(|r| r.as_ref().err().cloned()).collect(),
        errors,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contour::extract_contour_2d;
    use crate::field::{Grid2D, Grid3D};

    fn unit_grid(n: usize, f: impl Fn([f64; 2]) -> f64) -> Grid2D {
        let h = 1.0 / (n - 1) as f64;
        Grid2D::from_fn([n, n], [0.0; 2], [h; 2], f).unwrap()
    }

    #[test]
    fn extrema_of_circle_sdf() {
        let g = unit_grid(33, |p| ((p[0] - 0.5).powi(2) + (p[1] - 0.5).powi(2)).sqrt());
        let c = extract_contour_2d(&g, 0.25);
        let sdf = signed_distance(&g, &c).unwrap();
        let ext = sdf_extrema(&sdf);
        let inside: Vec<usize> = ext.iter().copied().filter(|&i| sdf.values()[i] < 0.0).collect();
        assert_eq!(inside, vec![g.linear_index([16, 16])]);
        let outside: Vec<[usize; 2]> = ext
            .iter()
            .filter(|&&i| sdf.values()[i] > 0.0)
            .map(|&i| g.multi_index(i))
            .collect();
        assert_eq!(outside, vec![[0, 0], [32, 0], [0, 32], [32, 32]]);
    }

    #[test]
    fn plateau_keeps_lowest_index() {
        let g = Grid2D::new([3, 2], [0.0; 2], [1.0; 2], vec![2.0, 2.0, 1.0, 2.0, 2.0, 1.0]).unwrap();
        assert_eq!(sdf_extrema(&g), vec![0]);
    }

    #[test]
    fn ramp_hypotheses_mirror() {
        let g = unit_grid(32, |p| p[0]);
        let iso = 0.5;
        let c = extract_contour_2d(&g, iso);
        let cfg = ReconstructionConfig {
            n_points: 60,
            ..Default::default()
        };
        let stats = g.stats();
        let hi = reconstruct_from_contour(&g, &c, iso, stats, Hypothesis::InsideHigh, &cfg, 1).unwrap();
        let lo = reconstruct_from_contour(&g, &c, iso, stats, Hypothesis::InsideLow, &cfg, 1).unwrap();
        for (a, b) in hi.values().iter().zip(lo.values()) {
            assert!((a + b - 2.0 * iso).abs() < 1e-6);
        }
        let best = best_reconstruction(&g, &c, iso, &cfg, 1).unwrap();
        // x < 0.5 holds node 0 on a boundary tie, so it is outside and low
        assert_eq!(best.hypothesis, Hypothesis::InsideHigh);
        assert!(best.error < best.other_error);
        let flipped = g.with_values(g.values().iter().map(|v| 1.0 - v).collect()).unwrap();
        let c2 = extract_contour_2d(&flipped, iso);
        let best2 = best_reconstruction(&flipped, &c2, iso, &cfg, 1).unwrap();
        assert_eq!(best2.hypothesis, Hypothesis::InsideLow);
    }

    #[test]
    fn tied_scores_prefer_inside_high() {
        let g = unit_grid(24, |p| p[0] - 0.5);
        let c = extract_contour_2d(&g, 0.0);
        let cfg = ReconstructionConfig {
            n_points: 40,
            ..Default::default()
        };
        let sdf = signed_distance(&g, &c).unwrap();
        let pts = vec![[0.5, 0.5]; 4];
        let best = best_of_hypotheses(&sdf, &pts, 0.0, g.stats(), &cfg, |_| Ok(1.0)).unwrap();
        assert_eq!(best.hypothesis, Hypothesis::InsideHigh);
    }

    #[test]
    fn constraints_pass_through() {
        let g = unit_grid(40, |p| ((p[0] - 0.4).powi(2) + (p[1] - 0.6).powi(2)).sqrt() * -1.0);
        let iso = -0.2;
        let c = extract_contour_2d(&g, iso);
        let cfg = ReconstructionConfig::default();
        let sdf = signed_distance(&g, &c).unwrap();
        let pts = c.sample_points(cfg.n_points, &mut ChaCha8Rng::seed_from_u64(4));
        let stats = g.stats();
        let (cp, cv) = constraints(&sdf, &pts, iso, stats, Hypothesis::InsideHigh);
        let model = RbfModel::fit(cp.clone(), &cv, cfg.shape, cfg.ridge).unwrap();
        for (p, v) in cp.iter().zip(&cv) {
            assert!((model.eval(*p) - v).abs() <= 1e-6 * stats.range);
        }
        // deepest interior extremum takes the maximum
        let top = cv.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(top, stats.max);
    }

    #[test]
    fn affine_rescaling_invariance() {
        let spec = crate::field::GaussianMixtureSpec::Random { count: 6, seed: 3 };
        let g = crate::field::synth_gaussian_field(&spec, [32, 32], [0.0; 2], [1.0; 2]).unwrap();
        let s = g.stats();
        let iso = s.min + 0.4 * s.range;
        let cfg = ReconstructionConfig {
            n_points: 120,
            ..Default::default()
        };
        let a = best_reconstruction(&g, &extract_contour_2d(&g, iso), iso, &cfg, 9).unwrap();
        let scaled = g.with_values(g.values().iter().map(|v| 3.0 * v - 7.0).collect()).unwrap();
        let iso2 = 3.0 * iso - 7.0;
        let b = best_reconstruction(&scaled, &extract_contour_2d(&scaled, iso2), iso2, &cfg, 9).unwrap();
        assert_eq!(a.hypothesis, b.hypothesis);
        assert!((a.error / s.range - b.error / scaled.stats().range).abs() < 1e-6);
    }

    #[test]
    fn selection_argmin_and_empty_candidates() {
        let g = unit_grid(24, |p| (p[0] - 0.3).powi(2) + (p[1] - 0.6).powi(2));
        let s = g.stats();
        let cands = [s.max + 1.0, s.min + 0.3 * s.range, s.min + 0.6 * s.range];
        let cfg = ReconstructionConfig {
            n_points: 80,
            ..Default::default()
        };
        let sel = select_isovalue_by_reconstruction(&g, &cands, &cfg, 2).unwrap();
        assert!(sel.errors[0].is_infinite());
        assert_eq!(sel.failures[0].as_deref(), Some("empty contour"));
        assert!(sel.errors.iter().all(|&e| e >= sel.errors[sel.best_index]));
        let one = select_isovalue_by_reconstruction(&g, &cands[1..2], &cfg, 2).unwrap();
        assert_eq!(one.best_isovalue, cands[1]);
        assert!(matches!(
            select_isovalue_by_reconstruction(&g, &[s.max + 1.0], &cfg, 2),
            Err(Error::EmptyContour)
        ));
    }

    #[test]
    fn reconstructs_3d_ball() {
        let n = 20;
        let h = 2.0 / (n - 1) as f64;
        let g = Grid3D::from_fn([n; 3], [-1.0; 3], [h; 3], |p| 1.0 - (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt()).unwrap();
        let iso = 0.4;
        let m = crate::contour::extract_isosurface_3d(&g, iso);
        let cfg = ReconstructionConfig {
            n_points: 200,
            ..Default::default()
        };
        let best = best_reconstruction(&g, &m, iso, &cfg, 5).unwrap();
        assert_eq!(best.hypothesis, Hypothesis::InsideHigh);
        assert!(best.error.is_finite());
    }
}
