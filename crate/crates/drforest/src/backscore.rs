//! Maps embedded predictions back to the response representation space via
//! regularized Gaussian-kernel interpolation.
//!
//! The kernel acts identically and independently on each output coordinate,
//! so the full Nq×Nq normal system collapses to a single symmetric
//! positive-definite N×N solve with q right-hand sides:
//! `(G + (1/gamma_G) I) C = Y` with `G_ij = exp(-||z_i - z_j||²/sigma_G)`.
//! The ridge 1/gamma_G is the minimizer of the regularized cost
//! `gamma_G · Σ_i ||g(z_i) - y_i||² + ||g||²` over the kernel's span.
//! Far away from every training embedding the kernel terms vanish, so
//! predictions decay toward the zero vector; outputs are not projected back
//! onto the response manifold.

use nalgebra::Cholesky;
use serde::{Deserialize, Serialize};

use crate::data::{Mat, ResponseMatrix};
use crate::error::{Error, Result};

/// Backscoring hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BackscorerConfig {
    /// Gaussian bandwidth, in squared embedding-distance units.
    pub sigma_g: f64,
    /// Regularization weight; the ridge term is 1/gamma_g.
    pub gamma_g: f64,
}

impl BackscorerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_g > 0.0 && self.sigma_g.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "sigma_g = {} must be positive and finite",
                self.sigma_g
            )));
        }
        if !(self.gamma_g > 0.0 && self.gamma_g.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "gamma_g = {} must be positive and finite",
                self.gamma_g
            )));
        }
        Ok(())
    }
}

/// Fitted kernel regressor from embedding space to response space.
#[derive(Debug, Clone, PartialEq)]
pub struct Backscorer {
    c: Mat,
    z_train: Mat,
    config: BackscorerConfig,
}

impl Backscorer {
    /// N×q coefficient matrix.
    pub fn coefficients(&self) -> &Mat {
        &self.c
    }

    pub fn z_train(&self) -> &Mat {
        &self.z_train
    }

    pub fn config(&self) -> BackscorerConfig {
        self.config
    }

    pub fn n(&self) -> usize {
        self.z_train.nrows()
    }

    pub fn q(&self) -> usize {
        self.c.ncols()
    }

    pub fn m(&self) -> usize {
        self.z_train.ncols()
    }

    /// Reassembles a fitted backscorer; used by model deserialization.
    pub fn from_parts(c: Mat, z_train: Mat, config: BackscorerConfig) -> Result<Self> {
        if c.nrows() != z_train.nrows() {
            return Err(Error::CorruptModel(
                "backscorer coefficient rows disagree with embedding rows".into(),
            ));
        }
        config.validate()?;
        Ok(Self { c, z_train, config })
    }

    /// In-sample fitted values G·C, used to report training residuals.
    pub fn fitted_values(&self) -> Mat {
        gaussian_gram(&self.z_train, self.config.sigma_g) * &self.c
    }
}

fn sq_dist_rows(z: &Mat, i: usize, j: usize) -> f64 {
    let mut acc = 0.0;
    for c in 0..z.ncols() {
        let diff = z[(i, c)] - z[(j, c)];
        acc += diff * diff;
    }
    acc
}

/// Gram matrix `G_ij = exp(-||z_i - z_j||² / sigma_G)`.
pub fn gaussian_gram(z: &Mat, sigma_g: f64) -> Mat {
    let n = z.nrows();
    let mut g = Mat::zeros(n, n);
    for i in 0..n {
        g[(i, i)] = 1.0;
        for j in (i + 1)..n {
            let v = (-sq_dist_rows(z, i, j) / sigma_g).exp();
            g[(i, j)] = v;
            g[(j, i)] = v;
        }
    }
    g
}

/// Solves `(G + (1/gamma_G) I) C = Y` by Cholesky factorization.
pub fn fit_backscorer(z: &Mat, y: &ResponseMatrix, config: BackscorerConfig) -> Result<Backscorer> {
    config.validate()?;
    let n = z.nrows();
    if y.n() != n {
        return Err(Error::DimensionMismatch {
            context: "backscorer responses vs embeddings".into(),
            expected: n,
            got: y.n(),
        });
    }
    let mut a = gaussian_gram(z, config.sigma_g);
    let ridge = 1.0 / config.gamma_g;
    for i in 0..n {
        a[(i, i)] += ridge;
    }
    let chol = Cholesky::new(a).ok_or_else(|| {
        Error::SolveFailure("Cholesky factorization of the ridge system failed".into())
    })?;
    let c = chol.solve(y.values());
    Ok(Backscorer {
        c,
        z_train: z.clone(),
        config,
    })
}

/// Evaluates the fitted map at a new embedding coordinate:
/// `y_hat = Σ_i C_i · exp(-||z_i - z_hat||² / sigma_G)`.
pub fn backscore(bs: &Backscorer, z_hat: &[f64]) -> Result<Vec<f64>> {
    if z_hat.len() != bs.m() {
        return Err(Error::DimensionMismatch {
            context: "embedding coordinate length".into(),
            expected: bs.m(),
            got: z_hat.len(),
        });
    }
    let mut out = vec![0.0f64; bs.q()];
    for i in 0..bs.n() {
        let mut acc = 0.0;
        for (c, &zc) in z_hat.iter().enumerate() {
            let diff = bs.z_train[(i, c)] - zc;
            acc += diff * diff;
        }
        let w = (-acc / bs.config.sigma_g).exp();
        for (k, o) in out.iter_mut().enumerate() {
            *o += bs.c[(i, k)] * w;
        }
    }
    Ok(out)
}
