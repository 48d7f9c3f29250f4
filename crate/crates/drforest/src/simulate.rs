//! Synthetic swiss-roll benchmark: 3-D responses on a rolled sheet driven
//! by two latent parameters, with 6-D inputs that expose the latents only
//! through the first two coordinates.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;

use crate::data::Mat;
use crate::error::{Error, Result};

/// A generated swiss-roll dataset.
///
/// Responses are `y = (t cos t, u, t sin t) + noise` for latent angles
/// `t ~ U(pi, 3pi)` and heights `u ~ U(0, 21)`. Inputs are 6-D: the first
/// two coordinates map the centered, max-normalized latents onto the unit
/// disk, the remaining four are standard normal distractors.
#[derive(Debug, Clone, PartialEq)]
pub struct SwissRoll {
    /// N×6 input matrix.
    pub inputs: Mat,
    /// N×3 noisy responses.
    pub responses: Mat,
    /// N×3 noise-free responses.
    pub responses_clean: Mat,
    /// Latent angle per sample.
    pub t: Vec<f64>,
    /// Latent height per sample.
    pub u: Vec<f64>,
}

impl SwissRoll {
    /// Latents as an N×2 matrix (t, u), the layout written to latents.csv.
    pub fn latents(&self) -> Mat {
        Mat::from_fn(self.t.len(), 2, |i, c| if c == 0 { self.t[i] } else { self.u[i] })
    }
}

/// Generates `n` samples. All randomness comes from a single ChaCha12
/// stream seeded by `seed`; the draw order is: every `t`, every `u`, then
/// per sample three response-noise normals followed by four distractor
/// normals. Identical arguments reproduce the dataset bit for bit.
pub fn gen_swiss_roll(n: usize, noise_sd: f64, seed: u64) -> Result<SwissRoll> {
    if n == 0 {
        return Err(Error::InvalidConfig("sample count must be at least 1".into()));
    }
    if !(noise_sd >= 0.0 && noise_sd.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "noise_sd = {noise_sd} must be nonnegative and finite"
        )));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let pi = std::f64::consts::PI;
    let t: Vec<f64> = (0..n).map(|_| rng.random_range(pi..3.0 * pi)).collect();
    let u: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..21.0)).collect();

    let mut responses = Mat::zeros(n, 3);
    let mut responses_clean = Mat::zeros(n, 3);
    let mut inputs = Mat::zeros(n, 6);
    for i in 0..n {
        let clean = [t[i] * t[i].cos(), u[i], t[i] * t[i].sin()];
        for c in 0..3 {
            let eps: f64 = rng.sample(StandardNormal);
            responses_clean[(i, c)] = clean[c];
            responses[(i, c)] = clean[c] + noise_sd * eps;
        }
        for c in 2..6 {
            inputs[(i, c)] = rng.sample(StandardNormal);
        }
    }

    let t_mean = t.iter().sum::<f64>() / n as f64;
    let u_mean = u.iter().sum::<f64>() / n as f64;
    let t_max = t.iter().map(|v| (v - t_mean).abs()).fold(0.0, f64::max);
    let u_max = u.iter().map(|v| (v - u_mean).abs()).fold(0.0, f64::max);
    for i in 0..n {
        // centered, max-normalized latents mapped from the square onto the disk
        let a = if t_max > 0.0 { (t[i] - t_mean) / t_max } else { 0.0 };
        let b = if u_max > 0.0 { (u[i] - u_mean) / u_max } else { 0.0 };
        inputs[(i, 0)] = a * (1.0 - b * b / 2.0).sqrt();
        inputs[(i, 1)] = b * (1.0 - a * a / 2.0).sqrt();
    }

    Ok(SwissRoll {
        inputs,
        responses,
        responses_clean,
        t,
        u,
    })
}

/// Signed radial deviation of a predicted response:
/// `sqrt(y1² + y3²) - t_true`. Negative means the roll's radius was
/// underestimated.
pub fn radial_error(y_pred: &[f64], t_true: f64) -> f64 {
    (y_pred[0] * y_pred[0] + y_pred[2] * y_pred[2]).sqrt() - t_true
}
