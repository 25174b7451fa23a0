use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Regularized least squares on a fixed feature map, refreshed after every
/// observation.
///
/// Keeps the regularized Gram matrix `lambda * I + sum phi phi^T` and the moment
/// vector `sum y phi`; the inverse and the coefficients are recomputed from a
/// Cholesky factorization on each update.
#[derive(Debug, Clone)]
pub struct RidgeModel {
    lambda: f64,
    gram: DMatrix<f64>,
    moment: DVector<f64>,
    gram_inv: DMatrix<f64>,
    theta: DVector<f64>,
    count: u64,
}

impl RidgeModel {
    pub fn new(dim: usize, lambda: f64) -> Result<Self> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::domain(format!("ridge lambda must be positive, got {lambda}")));
        }
        Ok(RidgeModel {
            lambda,
            gram: DMatrix::identity(dim, dim) * lambda,
            moment: DVector::zeros(dim),
            gram_inv: DMatrix::identity(dim, dim) / lambda,
            theta: DVector::zeros(dim),
            count: 0,
        })
    }

    pub fn dim(&self) -> usize {
        self.moment.len()
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    pub fn moment(&self) -> &DVector<f64> {
        &self.moment
    }

    pub fn coefficients(&self) -> &[f64] {
        self.theta.as_slice()
    }

    pub fn update(&mut self, phi: &[f64], y: f64) -> Result<()> {
        let d = self.dim();
        debug_assert_eq!(phi.len(), d);
        for c in 0..d {
            for r in 0..d {
                self.gram[(r, c)] += phi[r] * phi[c];
            }
            self.moment[c] += y * phi[c];
        }
        self.count += 1;
        let chol = self
            .gram
            .clone()
            .cholesky()
            .ok_or_else(|| Error::Numerical("ridge Gram matrix lost positive definiteness".into()))?;
        self.theta = chol.solve(&self.moment);
        self.gram_inv = chol.inverse();
        if self.theta.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("non-finite ridge coefficients".into()));
        }
        Ok(())
    }

    pub fn predict(&self, phi: &[f64]) -> f64 {
        self.theta.iter().zip(phi).map(|(t, p)| t * p).sum()
    }

    /// `phi^T A^{-1} phi`.
    pub fn quadratic_form(&self, phi: &[f64]) -> f64 {
        let d = self.dim();
        let inv = self.gram_inv.as_slice();
        let mut acc = 0.0;
        for c in 0..d {
            let col = &inv[c * d..(c + 1) * d];
            let dot: f64 = col.iter().zip(phi).map(|(a, p)| a * p).sum();
            acc += phi[c] * dot;
        }
        acc
    }
}
