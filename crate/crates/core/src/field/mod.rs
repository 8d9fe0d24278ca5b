//! Uniform scalar grids, synthetic fields, normalization and error norms.

mod io;
mod synth;

pub use io::{decode_vrgf, encode_vrgf, read_csv_2d, read_vrgf, write_vrgf, write_vrgf_multi, AnyGrid};
pub use synth::{synth_gaussian_field, GaussianKernel, GaussianMixtureSpec};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Node-centered scalar grid with `N` axes, values stored x-fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid<const N: usize> {
    dims: [usize; N],
    origin: [f64; N],
    spacing: [f64; N],
    values: Vec<f64>,
}

pub type Grid2D = Grid<2>;
pub type Grid3D = Grid<3>;

/// Global range of a field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldStats {
    pub min: f64,
    pub max: f64,
    pub range: f64,
}

impl FieldStats {
    pub fn new(min: f64, max: f64) -> Self {
        FieldStats {
            min,
            max,
            range: max - min,
        }
    }

    pub fn of(values: &[f64]) -> Self {
        let (min, max) = values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            });
        FieldStats::new(min, max)
    }

    /// Maps `v` into [0, 1]; constant fields map to 0.5.
    pub fn normalize_value(&self, v: f64) -> f64 {
        if self.range > 0.0 {
            (v - self.min) / self.range
        } else {
            0.5
        }
    }

    pub fn denormalize(&self, t: f64) -> f64 {
        self.min + t * self.range
    }
}

impl<const N: usize> Grid<N> {
    pub fn new(dims: [usize; N], origin: [f64; N], spacing: [f64; N], values: Vec<f64>) -> Result<Self> {
        if dims.iter().any(|&d| d < 2) {
            return Err(Error::invalid(format!("grid dims must be >= 2, got {dims:?}")));
        }
        if spacing.iter().any(|&h| !(h > 0.0 && h.is_finite())) {
            return Err(Error::invalid(format!("grid spacing must be positive, got {spacing:?}")));
        }
        let count: usize = dims.iter().product();
        if values.len() != count {
            return Err(Error::DimensionMismatch(format!(
                "expected {count} values for dims {dims:?}, got {}",
                values.len()
            )));
        }
        Ok(Grid {
            dims,
            origin,
            spacing,
            values,
        })
    }

    pub fn filled(dims: [usize; N], origin: [f64; N], spacing: [f64; N], value: f64) -> Result<Self> {
        let count = dims.iter().product();
        Grid::new(dims, origin, spacing, vec![value; count])
    }

    /// Grid spanning `[lo, hi]` with `dims` nodes per axis.
    pub fn over_bounds(dims: [usize; N], lo: [f64; N], hi: [f64; N]) -> Result<Self> {
        let mut spacing = [0.0; N];
        for a in 0..N {
            if dims[a] < 2 {
                return Err(Error::invalid(format!("grid dims must be >= 2, got {dims:?}")));
            }
            spacing[a] = (hi[a] - lo[a]) / (dims[a] - 1) as f64;
        }
        Grid::filled(dims, lo, spacing, 0.0)
    }

    pub fn from_fn(
        dims: [usize; N],
        origin: [f64; N],
        spacing: [f64; N],
        f: impl Fn([f64; N]) -> f64,
    ) -> Result<Self> {
        let mut g = Grid::filled(dims, origin, spacing, 0.0)?;
        for i in 0..g.values.len() {
            g.values[i] = f(g.position_of(i));
        }
        Ok(g)
    }

    pub fn dims(&self) -> [usize; N] {
        self.dims
    }

    pub fn origin(&self) -> [f64; N] {
        self.origin
    }

    pub fn spacing(&self) -> [f64; N] {
        self.spacing
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Same geometry, new values.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        Grid::new(self.dims, self.origin, self.spacing, values)
    }

    pub fn same_shape(&self, other: &Grid<N>) -> bool {
        self.dims == other.dims
    }

    pub fn upper(&self) -> [f64; N] {
        std::array::from_fn(|a| self.origin[a] + self.spacing[a] * (self.dims[a] - 1) as f64)
    }

    pub fn diagonal(&self) -> f64 {
        let hi = self.upper();
        (0..N)
            .map(|a| (hi[a] - self.origin[a]).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    pub fn linear_index(&self, idx: [usize; N]) -> usize {
        let mut lin = 0;
        for a in (0..N).rev() {
            lin = lin * self.dims[a] + idx[a];
        }
        lin
    }

    pub fn multi_index(&self, mut lin: usize) -> [usize; N] {
        let mut idx = [0; N];
        for a in 0..N {
            idx[a] = lin % self.dims[a];
            lin /= self.dims[a];
        }
        idx
    }

    pub fn position(&self, idx: [usize; N]) -> [f64; N] {
        std::array::from_fn(|a| self.origin[a] + self.spacing[a] * idx[a] as f64)
    }

    pub fn position_of(&self, lin: usize) -> [f64; N] {
        self.position(self.multi_index(lin))
    }

    pub fn get(&self, idx: [usize; N]) -> f64 {
        self.values[self.linear_index(idx)]
    }

    pub fn stats(&self) -> FieldStats {
        FieldStats::of(&self.values)
    }

    /// Linear indices of the 3^N - 1 neighborhood of `lin` clipped to the grid.
    pub fn neighbors(&self, lin: usize) -> impl Iterator<Item = usize> + '_ {
        let idx = self.multi_index(lin);
        let total = 3usize.pow(N as u32);
        (0..total).filter_map(move |code| {
            let mut c = code;
            let mut out = [0usize; N];
            let mut all_zero = true;
            for a in 0..N {
                let off = (c % 3) as isize - 1;
                c /= 3;
                if off != 0 {
                    all_zero = false;
                }
                let v = idx[a] as isize + off;
                if v < 0 || v >= self.dims[a] as isize {
                    return None;
                }
                out[a] = v as usize;
            }
            if all_zero {
                None
            } else {
                Some(self.linear_index(out))
            }
        })
    }

    /// Multilinear interpolation at a world position, clamped to the grid.
    pub fn interpolate(&self, p: [f64; N]) -> f64 {
        let mut base = [0usize; N];
        let mut frac = [0.0; N];
        for a in 0..N {
            let x = ((p[a] - self.origin[a]) / self.spacing[a]).clamp(0.0, (self.dims[a] - 1) as f64);
            let i = (x.floor() as usize).min(self.dims[a] - 2);
            base[a] = i;
            frac[a] = x - i as f64;
        }
        let mut acc = 0.0;
        for corner in 0..(1usize << N) {
            let mut w = 1.0;
            let mut idx = base;
            for a in 0..N {
                if corner >> a & 1 == 1 {
                    idx[a] += 1;
                    w *= frac[a];
                } else {
                    w *= 1.0 - frac[a];
                }
            }
            if w != 0.0 {
                acc += w * self.get(idx);
            }
        }
        acc
    }
}

/// Central differences inside, one-sided at the boundary, scaled by spacing.
pub fn gradient<const N: usize>(g: &Grid<N>, lin: usize) -> [f64; N] {
    let idx = g.multi_index(lin);
    std::array::from_fn(|a| {
        let n = g.dims[a];
        let mut lo = idx;
        let mut hi = idx;
        let span = if idx[a] == 0 {
            hi[a] = 1;
            1.0
        } else if idx[a] == n - 1 {
            lo[a] = n - 2;
            1.0
        } else {
            lo[a] -= 1;
            hi[a] += 1;
            2.0
        };
        (g.get(hi) - g.get(lo)) / (span * g.spacing[a])
    })
}

pub fn gradient_magnitude<const N: usize>(g: &Grid<N>) -> Grid<N> {
    let values = (0..g.len())
        .map(|i| gradient(g, i).iter().map(|d| d * d).sum::<f64>().sqrt())
        .collect();
    g.with_values(values).expect("same shape")
}

/// Affine map to [0, 1]; a constant field maps to 0.5 everywhere.
pub fn normalize<const N: usize>(g: &Grid<N>) -> (Grid<N>, FieldStats) {
    let stats = g.stats();
    let values = g.values.iter().map(|&v| stats.normalize_value(v)).collect();
    (g.with_values(values).expect("same shape"), stats)
}

pub fn l2_error<const N: usize>(a: &Grid<N>, b: &Grid<N>) -> Result<f64> {
    l2_error_values(&a.values, &b.values)
}

pub fn rmse<const N: usize>(a: &Grid<N>, b: &Grid<N>) -> Result<f64> {
    Ok(l2_error(a, b)? / (a.len() as f64).sqrt())
}

pub fn l2_error_values(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch(format!(
            "l2_error on {} vs {} values",
            a.len(),
            b.len()
        )));
    }
    Ok(a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn index_roundtrip() {
        let g = Grid3D::filled([3, 4, 5], [0.0; 3], [1.0; 3], 0.0).unwrap();
        for i in 0..g.len() {
            assert_eq!(g.linear_index(g.multi_index(i)), i);
        }
        assert_eq!(g.linear_index([1, 0, 0]), 1);
        assert_eq!(g.linear_index([0, 1, 0]), 3);
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(Grid2D::new([1, 4], [0.0; 2], [1.0; 2], vec![0.0; 4]).is_err());
        assert!(Grid2D::new([2, 2], [0.0; 2], [0.0, 1.0], vec![0.0; 4]).is_err());
        assert!(Grid2D::new([2, 2], [0.0; 2], [1.0; 2], vec![0.0; 3]).is_err());
    }

    #[test]
    fn gradient_of_linear_ramp() {
        let g = Grid2D::from_fn([6, 5], [0.0; 2], [1.0; 2], |p| p[0]).unwrap();
        let gm = gradient_magnitude(&g);
        for v in gm.values() {
            assert_abs_diff_eq!(*v, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn gradient_of_constant_is_zero() {
        let g = Grid3D::filled([4, 4, 4], [0.0; 3], [0.5; 3], 3.0).unwrap();
        assert!(gradient_magnitude(&g).values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn gaussian_gradient_peaks_at_sigma() {
        let sigma = 10.0;
        let g = Grid2D::from_fn([81, 81], [-40.0; 2], [1.0; 2], |p| {
            (-(p[0] * p[0] + p[1] * p[1]) / (2.0 * sigma * sigma)).exp()
        })
        .unwrap();
        let gm = gradient_magnitude(&g);
        let (arg, _) = gm
            .values()
            .iter()
            .enumerate()
            .fold((0, f64::MIN), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
        let p = gm.position_of(arg);
        let r = p[0].hypot(p[1]);
        assert!((r - sigma).abs() <= 1.0, "argmax radius {r}");
    }

    #[test]
    fn normalize_examples() {
        let g = Grid2D::new([2, 2], [0.0; 2], [1.0; 2], vec![2.0, 4.0, 2.0, 4.0]).unwrap();
        let (n, s) = normalize(&g);
        assert_eq!(n.values(), &[0.0, 1.0, 0.0, 1.0]);
        assert_eq!(s, FieldStats::new(2.0, 4.0));
        assert_eq!(s.range, 2.0);
        let c = Grid2D::filled([3, 3], [0.0; 2], [1.0; 2], 7.0).unwrap();
        let (n, s) = normalize(&c);
        assert!(n.values().iter().all(|&v| v == 0.5));
        assert_eq!((s.min, s.max, s.range), (7.0, 7.0, 0.0));
    }

    #[test]
    fn l2_examples() {
        assert_eq!(l2_error_values(&[0.0], &[3.0]).unwrap(), 3.0);
        let zeros = vec![0.0; 16];
        let ones = vec![1.0; 16];
        assert_eq!(l2_error_values(&zeros, &ones).unwrap(), 4.0);
        assert!(l2_error_values(&zeros, &ones[..3]).is_err());
        let a = Grid2D::filled([4, 4], [0.0; 2], [1.0; 2], 1.0).unwrap();
        let b = Grid2D::filled([4, 4], [0.0; 2], [1.0; 2], 0.0).unwrap();
        assert_eq!(rmse(&a, &b).unwrap(), 1.0);
    }

    #[test]
    fn neighbors_counts() {
        let g = Grid3D::filled([3, 3, 3], [0.0; 3], [1.0; 3], 0.0).unwrap();
        assert_eq!(g.neighbors(g.linear_index([1, 1, 1])).count(), 26);
        assert_eq!(g.neighbors(0).count(), 7);
        let g2 = Grid2D::filled([3, 3], [0.0; 2], [1.0; 2], 0.0).unwrap();
        assert_eq!(g2.neighbors(4).count(), 8);
    }

    #[test]
    fn interpolation_reproduces_bilinear() {
        let g = Grid2D::from_fn([5, 5], [0.0; 2], [0.25; 2], |p| 2.0 * p[0] + 3.0 * p[1] + 1.0).unwrap();
        assert_abs_diff_eq!(g.interpolate([0.33, 0.71]), 2.0 * 0.33 + 3.0 * 0.71 + 1.0, epsilon = 1e-12);
    }

    proptest! {
        #[test]
        fn normalize_is_idempotent(vals in proptest::collection::vec(-50.0..50.0f64, 9)) {
            let g = Grid2D::new([3, 3], [0.0; 2], [1.0; 2], vals).unwrap();
            let (n1, _) = normalize(&g);
            let (n2, _) = normalize(&n1);
            prop_assert_eq!(l2_error(&n1, &n1).unwrap(), 0.0);
            let s = n1.stats();
            if g.stats().range > 0.0 {
                prop_assert!(s.min.abs() < 1e-12 && (s.max - 1.0).abs() < 1e-12);
                prop_assert!(l2_error(&n1, &n2).unwrap() < 1e-9);
            }
        }
    }
}
