//! Point-set distances, log-log correlation and outlier filtering.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

pub use crate::contour::{sample_contour_points, sample_mesh_points};
use crate::error::{Error, Result};
use crate::render::TriMesh;
use crate::spatial::{dist_sq, Bvh};

/// Default number of points drawn from a surface for scoring.
pub const DEFAULT_SURFACE_SAMPLES: usize = 5000;

/// A non-empty point set.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSample<const N: usize> {
    points: Vec<[f64; N]>,
}

impl<const N: usize> PointSample<N> {
    pub fn new(points: Vec<[f64; N]>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyInput);
        }
        Ok(PointSample { points })
    }

    pub fn points(&self) -> &[[f64; N]] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

impl PointSample<3> {
    /// `n` points spread by area over `m`, drawn from `seed`.
    pub fn from_mesh(m: &TriMesh, n: usize, seed: u64) -> Result<Self> {
        PointSample::new(sample_mesh_points(m, n, &mut ChaCha8Rng::seed_from_u64(seed)))
    }
}

/// Distance from each point of `from` to its nearest neighbor in `to`.
pub fn nearest_distances<const N: usize>(from: &PointSample<N>, to: &PointSample<N>) -> Vec<f64> {
    let bvh = Bvh::build(to.points.clone());
    from.points
        .par_iter()
        .map(|&p| bvh.nearest(p).map_or(f64::INFINITY, |h| h.0.sqrt()))
        .collect()
}

/// Same as [`nearest_distances`] by exhaustive search.
pub fn nearest_distances_brute_force<const N: usize>(from: &PointSample<N>, to: &PointSample<N>) -> Vec<f64> {
    from.points
        .iter()
        .map(|&p| {
            to.points
                .iter()
                .map(|&q| dist_sq(p, q))
                .fold(f64::INFINITY, f64::min)
                .sqrt()
        })
        .collect()
}

fn max(v: &[f64]) -> f64 {
    v.iter().cloned().fold(0.0, f64::max)
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Symmetric Hausdorff distance.
pub fn hausdorff<const N: usize>(a: &PointSample<N>, b: &PointSample<N>) -> f64 {
    max(&nearest_distances(a, b)).max(max(&nearest_distances(b, a)))
}

/// Mean of the two directed mean nearest-neighbor distances.
pub fn chamfer<const N: usize>(a: &PointSample<N>, b: &PointSample<N>) -> f64 {
    (mean(&nearest_distances(a, b)) + mean(&nearest_distances(b, a))) / 2.0
}

/// Pearson correlation of `(ln x, ln y)`.
pub fn loglog_pearson(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::DimensionMismatch(format!("{} xs vs {} ys", xs.len(), ys.len())));
    }
    if xs.len() < 3 {
        return Err(Error::invalid(format!("need at least 3 pairs, got {}", xs.len())));
    }
    if let Some(v) = xs.iter().chain(ys).find(|v| !(**v > 0.0) || !v.is_finite()) {
        return Err(Error::invalid(format!("log-log correlation needs positive finite values, got {v}")));
    }
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let (mx, my) = (mean(&lx), mean(&ly));
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (x, y) in lx.iter().zip(&ly) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    let scale = 1e-12 * (1.0 + mx.abs().max(my.abs()));
    if sxx.sqrt() <= scale || syy.sqrt() <= scale {
        return Err(Error::ZeroVariance);
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Removes the `ceil(fraction · n)` largest values; among equal values the
/// later entries go first. Remaining entries keep their order.
pub fn drop_worst_fraction<K: Clone>(scores: &[(K, f64)], fraction: f64) -> Result<Vec<(K, f64)>> {
    if !(0.0..1.0).contains(&fraction) {
        return Err(Error::invalid(format!("fraction must be in [0, 1), got {fraction}")));
    }
    let drop = (fraction * scores.len() as f64).ceil() as usize;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&i, &j| scores[j].1.total_cmp(&scores[i].1).then(j.cmp(&i)));
    let mut removed = vec![false; scores.len()];
    for &i in &order[..drop] {
        removed[i] = true;
    }
    Ok(scores
        .iter()
        .zip(removed)
        .filter(|(_, r)| !r)
        .map(|(s, _)| s.clone())
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::render::uv_sphere;
    use proptest::prelude::*;

    fn ps<const N: usize>(p: Vec<[f64; N]>) -> PointSample<N> {
        PointSample::new(p).unwrap()
    }

    #[test]
    fn distance_examples() {
        let a = ps(vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0]]);
        assert_eq!(hausdorff(&a, &a), 0.0);
        assert_eq!(chamfer(&a, &a), 0.0);
        let x = ps(vec![[0.0; 3]]);
        let y = ps(vec![[0.0, 1.0, 0.0]]);
        assert_eq!(hausdorff(&x, &y), 1.0);
        assert_eq!(chamfer(&x, &y), 1.0);
        let b = ps(vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [6.0, 0.0, 0.0]]);
        assert_eq!(hausdorff(&a, &b), 5.0);
        let c = ps(vec![[0.0, 1.0], [1.0, 1.0]]);
        let d = ps(vec![[0.0, 0.0], [1.0, 0.0]]);
        assert_eq!(chamfer(&c, &d), 1.0);
        assert!(PointSample::<2>::new(vec![]).is_err());
    }

    #[test]
    fn sphere_samples_close_to_concentric_sphere() {
        let a = PointSample::from_mesh(&uv_sphere([0.0; 3], 1.0, 24, 48), 2000, 1).unwrap();
        let b = PointSample::from_mesh(&uv_sphere([0.0; 3], 1.1, 24, 48), 2000, 2).unwrap();
        let c = chamfer(&a, &b);
        assert!(c > 0.1 && c < 0.15, "{c}");
        assert!(hausdorff(&a, &b) >= c);
    }

    #[test]
    fn loglog_examples() {
        let xs = [1.0, 2.0, 4.0, 10.0];
        let inv: Vec<f64> = xs.iter().map(|x| 1.0 / x).collect();
        let sq: Vec<f64> = xs.iter().map(|x| x * x).collect();
        assert!((loglog_pearson(&xs, &inv).unwrap() + 1.0).abs() < 1e-12);
        assert!((loglog_pearson(&xs, &sq).unwrap() - 1.0).abs() < 1e-12);
        assert!(matches!(loglog_pearson(&xs, &[3.0; 4]), Err(Error::ZeroVariance)));
        assert!(loglog_pearson(&xs, &[1.0, 0.0, 2.0, 3.0]).is_err());
        assert!(loglog_pearson(&[1.0, 2.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn drop_worst_examples() {
        let s: Vec<(usize, f64)> = (0..10).map(|i| (i, i as f64)).collect();
        assert_eq!(drop_worst_fraction(&s, 0.0).unwrap(), s);
        let kept = drop_worst_fraction(&s, 0.1).unwrap();
        assert_eq!(kept.len(), 9);
        assert!(kept.iter().all(|k| k.0 != 9));
        let ties = vec![("a", 1.0), ("b", 5.0), ("c", 5.0), ("d", 0.5)];
        let kept = drop_worst_fraction(&ties, 0.25).unwrap();
        assert_eq!(kept, vec![("a", 1.0), ("b", 5.0), ("d", 0.5)]);
        assert!(drop_worst_fraction(&ties, 1.0).is_err());
    }

    fn pts3() -> impl Strategy<Value = Vec<[f64; 3]>> {
        proptest::collection::vec(proptest::array::uniform3(-5.0f64..5.0), 1..300)
    }

    proptest! {
        #[test]
        fn accelerated_matches_brute_force(a in pts3(), b in pts3()) {
            let (a, b) = (ps(a), ps(b));
            prop_assert_eq!(nearest_distances(&a, &b), nearest_distances_brute_force(&a, &b));
        }

        #[test]
        fn hausdorff_dominates_chamfer_and_both_symmetric(a in pts3(), b in pts3()) {
            let (a, b) = (ps(a), ps(b));
            let (h, c) = (hausdorff(&a, &b), chamfer(&a, &b));
            prop_assert!(h >= c - 1e-12);
            prop_assert_eq!(h, hausdorff(&b, &a));
            prop_assert!((c - chamfer(&b, &a)).abs() < 1e-12);
            prop_assert_eq!(hausdorff(&a, &a), 0.0);
        }

        #[test]
        fn drop_worst_keeps_order(v in proptest::collection::vec(0.0f64..10.0, 0..50), f in 0.0f64..0.99) {
            let s: Vec<(usize, f64)> = v.iter().cloned().enumerate().collect();
            let kept = drop_worst_fraction(&s, f).unwrap();
            prop_assert_eq!(kept.len(), s.len() - (f * s.len() as f64).ceil() as usize);
            prop_assert!(kept.windows(2).all(|w| w[0].0 < w[1].0));
            let worst_kept = kept.iter().map(|k| k.1).fold(f64::NEG_INFINITY, f64::max);
            for e in &s {
                if !kept.contains(e) {
                    prop_assert!(e.1 >= worst_kept);
                }
            }
        }
    }
}
