use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::Grid;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianKernel<const N: usize> {
    pub center: [f64; N],
    pub amplitude: f64,
    pub sigma: f64,
}

/// Either an explicit kernel list or `count` kernels drawn from `seed`.
#[derive(Debug, Clone, PartialEq)]
pub enum GaussianMixtureSpec<const N: usize> {
    Explicit(Vec<GaussianKernel<N>>),
    Random { count: usize, seed: u64 },
}

impl<const N: usize> GaussianMixtureSpec<N> {
    /// Resolves the kernel list. Random kernels: centers uniform in the
    /// bounds, amplitudes in [0.5, 1.5], sigmas in [5%, 20%] of the diagonal.
    pub fn kernels(&self, lo: [f64; N], hi: [f64; N]) -> Vec<GaussianKernel<N>> {
        match self {
            GaussianMixtureSpec::Explicit(k) => k.clone(),
            GaussianMixtureSpec::Random { count, seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                let diag = (0..N).map(|a| (hi[a] - lo[a]).powi(2)).sum::<f64>().sqrt();
                (0..*count)
                    .map(|_| {
                        let center = std::array::from_fn(|a| lo[a] + rng.random::<f64>() * (hi[a] - lo[a]));
                        let amplitude = 0.5 + rng.random::<f64>();
                        let sigma = diag * (0.05 + 0.15 * rng.random::<f64>());
                        GaussianKernel {
                            center,
                            amplitude,
                            sigma,
                        }
                    })
                    .collect()
            }
        }
    }
}

/// Sum of isotropic Gaussians sampled on a `dims` grid spanning `[lo, hi]`.
pub fn synth_gaussian_field<const N: usize>(
    spec: &GaussianMixtureSpec<N>,
    dims: [usize; N],
    lo: [f64; N],
    hi: [f64; N],
) -> Result<Grid<N>> {
    if dims.iter().any(|&d| d < 2) {
        return Err(Error::invalid(format!("field dims must be >= 2, got {dims:?}")));
    }
    let kernels = spec.kernels(lo, hi);
    if let Some(k) = kernels.iter().find(|k| !(k.sigma > 0.0)) {
        return Err(Error::invalid(format!("kernel sigma must be positive, got {}", k.sigma)));
    }
    let grid = Grid::over_bounds(dims, lo, hi)?;
    Grid::from_fn(dims, grid.origin(), grid.spacing(), |p| {
        kernels
            .iter()
            .map(|k| {
                let r2: f64 = (0..N).map(|a| (p[a] - k.center[a]).powi(2)).sum();
                k.amplitude * (-r2 / (2.0 * k.sigma * k.sigma)).exp()
            })
            .sum()
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_kernel_list_gives_zero_field() {
        let g = synth_gaussian_field::<2>(&GaussianMixtureSpec::Explicit(vec![]), [8, 8], [0.0; 2], [1.0; 2]).unwrap();
        assert!(g.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn single_kernel_peak_at_node() {
        let spec = GaussianMixtureSpec::Explicit(vec![GaussianKernel {
            center: [0.5, 0.25],
            amplitude: 1.7,
            sigma: 0.1,
        }]);
        let g = synth_gaussian_field(&spec, [5, 5], [0.0; 2], [1.0; 2]).unwrap();
        let s = g.stats();
        assert_eq!(s.max, 1.7);
        assert_eq!(g.get([2, 1]), 1.7);
    }

    #[test]
    fn rejects_bad_inputs() {
        let spec = GaussianMixtureSpec::<2>::Explicit(vec![]);
        assert!(synth_gaussian_field(&spec, [0, 5], [0.0; 2], [1.0; 2]).is_err());
        let bad = GaussianMixtureSpec::Explicit(vec![GaussianKernel {
            center: [0.0; 2],
            amplitude: 1.0,
            sigma: 0.0,
        }]);
        assert!(synth_gaussian_field(&bad, [4, 4], [0.0; 2], [1.0; 2]).is_err());
    }

    #[test]
    fn seeded_field_is_deterministic() {
        let spec = GaussianMixtureSpec::Random { count: 10, seed: 42 };
        let a = synth_gaussian_field(&spec, [32, 32], [0.0; 2], [1.0; 2]).unwrap();
        let b = synth_gaussian_field(&spec, [32, 32], [0.0; 2], [1.0; 2]).unwrap();
        assert_eq!(a, b);
        let kernels = spec.kernels([0.0; 2], [1.0; 2]);
        let diag = 2f64.sqrt();
        for k in kernels {
            assert!((0.5..=1.5).contains(&k.amplitude));
            assert!(k.sigma >= 0.05 * diag && k.sigma <= 0.2 * diag);
            assert!(k.center.iter().all(|c| (0.0..=1.0).contains(c)));
        }
    }
}
