//! AR(4) model driven by generalized hyperbolic noise.

use std::io::{self, Write};

use super::gh::{GhParams, GhSampler};
use crate::error::Result;
use crate::rng::RngStream;
use crate::target::Target;

pub const AR_TRUE_COEFFS: [f64; 4] = [0.5, 0.1, -0.8, 0.1];
pub const AR_OBSERVATIONS: usize = 200;
/// Stream id reserved for synthetic data generation.
pub const DATA_STREAM: u64 = 1 << 62;

/// Likelihood of the AR coefficients under an improper flat prior.
#[derive(Debug, Clone)]
pub struct ArGhModel {
    coeffs: [f64; 4],
    params: GhParams,
    y: Vec<f64>,
    noise: Vec<f64>,
    seed: u64,
}

impl ArGhModel {
    /// Simulates `m` observations from `coeffs` with zero initial conditions.
    pub fn generate(coeffs: [f64; 4], params: GhParams, m: usize, seed: u64) -> Result<Self> {
        if m < 5 {
            return Err(crate::error::PmcError::config(format!(
                "AR model needs M >= 5, got {m}"
            )));
        }
        let sampler = GhSampler::new(&params)?;
        let mut rng = RngStream::new(seed, DATA_STREAM);
        let noise: Vec<f64> = (0..m).map(|_| sampler.sample(&mut rng)).collect();
        let mut y = Vec::with_capacity(m);
        for (t, u) in noise.iter().enumerate() {
            let mut v = *u;
            for (p, c) in coeffs.iter().enumerate() {
                if t > p {
                    v += c * y[t - p - 1];
                }
            }
            y.push(v);
        }
        Ok(Self {
            coeffs,
            params,
            y,
            noise,
            seed,
        })
    }

    pub fn observations(&self) -> &[f64] {
        &self.y
    }

    pub fn noise(&self) -> &[f64] {
        &self.noise
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn params(&self) -> &GhParams {
        &self.params
    }

    /// `u_m = y_m - sum_p x_p y_{m-p}`.
    pub fn residuals(&self, x: &[f64]) -> Vec<f64> {
        (0..self.y.len()).map(|t| self.residual(x, t)).collect()
    }

    #[inline]
    fn residual(&self, x: &[f64], t: usize) -> f64 {
        let mut r = self.y[t];
        for (p, c) in x.iter().enumerate().take(4) {
            if t > p {
                r -= c * self.y[t - p - 1];
            }
        }
        r
    }

    /// `index,value` rows.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "index,value")?;
        for (i, v) in self.y.iter().enumerate() {
            writeln!(out, "{},{}", i + 1, v)?;
        }
        Ok(())
    }
}

impl Target for ArGhModel {
    fn dim(&self) -> usize {
        4
    }

    fn log_density(&self, x: &[f64]) -> f64 {
        if x.len() != 4 || x.iter().any(|v| !v.is_finite()) {
            return f64::NEG_INFINITY;
        }
        let mut total = 0.0;
        for t in 0..self.y.len() {
            total += self.params.log_pdf_unchecked(self.residual(x, t));
        }
        if total.is_nan() {
            f64::NEG_INFINITY
        } else {
            total
        }
    }

    fn known_mean(&self) -> Option<&[f64]> {
        Some(&self.coeffs)
    }
}

/// Data and likelihood for the paper's AR(4) setting, regenerated from `seed`.
pub fn make_ar4_target(seed: u64) -> Result<ArGhModel> {
    ArGhModel::generate(AR_TRUE_COEFFS, GhParams::AR_NOISE, AR_OBSERVATIONS, seed)
}
