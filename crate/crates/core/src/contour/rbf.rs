use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spatial::dist_sq;

/// Diagonal regularization added to every kernel matrix.
pub const DEFAULT_RIDGE: f64 = 1e-8;

/// How the Gaussian shape parameter ε is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ShapeParameter {
    /// ε = 1 / (mean nearest-neighbor distance among the centers).
    InverseMeanSpacing,
    Fixed(f64),
}

impl Default for ShapeParameter {
    fn default() -> Self {
        ShapeParameter::InverseMeanSpacing
    }
}

/// Gaussian radial basis interpolant `mean + Σ w_i exp(-(ε‖x - c_i‖)²)`.
/// Values are interpolated around their mean so the far field settles at
/// the mean instead of zero.
#[derive(Debug, Clone, PartialEq)]
pub struct RbfModel<const N: usize> {
    centers: Vec<[f64; N]>,
    weights: Vec<f64>,
    epsilon: f64,
    ridge: f64,
    offset: f64,
}

fn mean_nearest_neighbor<const N: usize>(pts: &[[f64; N]]) -> f64 {
    let total: f64 = pts
        .iter()
        .enumerate()
        .map(|(i, p)| {
            pts.iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, q)| dist_sq(*p, *q))
                .fold(f64::INFINITY, f64::min)
                .sqrt()
        })
        .sum();
    total / pts.len() as f64
}

impl<const N: usize> RbfModel<N> {
    pub fn fit(centers: Vec<[f64; N]>, values: &[f64], shape: ShapeParameter, ridge: f64) -> Result<Self> {
        if centers.len() != values.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} centers vs {} values",
                centers.len(),
                values.len()
            )));
        }
        if centers.len() < 2 {
            return Err(Error::invalid("RBF fit needs at least 2 centers"));
        }
        if !(ridge >= 0.0) {
            return Err(Error::invalid(format!("ridge must be >= 0, got {ridge}")));
        }
        let epsilon = match shape {
            ShapeParameter::InverseMeanSpacing => {
                let m = mean_nearest_neighbor(&centers);
                if !(m > 0.0) {
                    return Err(Error::SingularSystem("all RBF centers coincide".into()));
                }
                1.0 / m
            }
            ShapeParameter::Fixed(e) if e > 0.0 && e.is_finite() => e,
            ShapeParameter::Fixed(e) => return Err(Error::invalid(format!("shape parameter must be > 0, got {e}"))),
        };
        let n = centers.len();
        let offset = values.iter().sum::<f64>() / n as f64;
        let e2 = epsilon * epsilon;
        let a = DMatrix::from_fn(n, n, |i, j| {
            let k = (-e2 * dist_sq(centers[i], centers[j])).exp();
            if i == j {
                k + ridge
            } else {
                k
            }
        });
        let b = DVector::from_iterator(n, values.iter().map(|v| v - offset));
        let chol = a
            .cholesky()
            .ok_or_else(|| Error::SingularSystem(format!("kernel matrix of {n} centers is not positive definite")))?;
        let w = chol.solve(&b);
        if w.iter().any(|x| !x.is_finite()) {
            return Err(Error::SingularSystem("non-finite RBF weights".into()));
        }
        Ok(RbfModel {
            centers,
            weights: w.iter().copied().collect(),
            epsilon,
            ridge,
            offset,
        })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn ridge(&self) -> f64 {
        self.ridge
    }

    pub fn centers(&self) -> &[[f64; N]] {
        &self.centers
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn eval(&self, p: [f64; N]) -> f64 {
        let e2 = self.epsilon * self.epsilon;
        // contributions below exp(-40) are dropped
        let cutoff = 40.0 / e2;
        let mut acc = self.offset;
        for (c, w) in self.centers.iter().zip(&self.weights) {
            let d2 = dist_sq(*c, p);
            if d2 < cutoff {
                acc += w * (-e2 * d2).exp();
            }
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interpolates_constraints() {
        let centers: Vec<[f64; 2]> = (0..40)
            .map(|i| {
                let t = i as f64 * 0.7;
                [t.cos() * (1.0 + 0.1 * i as f64), t.sin() * (1.0 + 0.05 * i as f64)]
            })
            .collect();
        let values: Vec<f64> = centers.iter().map(|p| p[0] * p[1] + p[0]).collect();
        let range = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - values.iter().cloned().fold(f64::INFINITY, f64::min);
        let m = RbfModel::fit(centers.clone(), &values, ShapeParameter::InverseMeanSpacing, 0.0).unwrap();
        for (c, v) in centers.iter().zip(&values) {
            assert!((m.eval(*c) - v).abs() <= 1e-6 * range);
        }
        let m = RbfModel::fit(centers.clone(), &values, ShapeParameter::InverseMeanSpacing, DEFAULT_RIDGE).unwrap();
        for (c, v) in centers.iter().zip(&values) {
            assert!((m.eval(*c) - v).abs() <= 1e-6 * range);
        }
    }

    #[test]
    fn far_field_is_mean() {
        let m = RbfModel::fit(vec![[0.0], [1.0]], &[2.0, 4.0], ShapeParameter::Fixed(1.0), 0.0).unwrap();
        assert!((m.eval([100.0]) - 3.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(RbfModel::fit(vec![[0.0]], &[1.0], ShapeParameter::default(), 0.0).is_err());
        assert!(RbfModel::fit(vec![[0.0], [1.0]], &[1.0], ShapeParameter::default(), 0.0).is_err());
        assert!(matches!(
            RbfModel::fit(vec![[0.0], [0.0]], &[1.0, 2.0], ShapeParameter::default(), 0.0),
            Err(Error::SingularSystem(_))
        ));
        assert!(matches!(
            RbfModel::fit(vec![[0.0], [0.0]], &[1.0, 2.0], ShapeParameter::Fixed(1.0), 0.0),
            Err(Error::SingularSystem(_))
        ));
    }
}
