//! Generalized hyperbolic noise: log density and a grid inverse-CDF sampler.

use super::bessel::{ln_bessel_k, ln_k0_unchecked};
use crate::error::{PmcError, Result};
use crate::rng::RngStream;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GhParams {
    pub lambda: f64,
    pub alpha: f64,
    pub beta: f64,
    pub mu: f64,
    pub delta: f64,
}

impl GhParams {
    /// `lambda = 1/2, alpha = 2, beta = 1, mu = -1, delta = 1`.
    pub const AR_NOISE: GhParams = GhParams {
        lambda: 0.5,
        alpha: 2.0,
        beta: 1.0,
        mu: -1.0,
        delta: 1.0,
    };

    pub fn validate(&self) -> Result<()> {
        let all_finite = [self.lambda, self.alpha, self.beta, self.mu, self.delta]
            .iter()
            .all(|v| v.is_finite());
        if !all_finite {
            return Err(PmcError::config("GH parameters must be finite"));
        }
        if !(self.delta > 0.0) {
            return Err(PmcError::config(format!(
                "GH delta must be positive, got {}",
                self.delta
            )));
        }
        if !(self.alpha > self.beta.abs()) {
            return Err(PmcError::config(format!(
                "GH needs alpha > |beta|, got alpha={} beta={}",
                self.alpha, self.beta
            )));
        }
        Ok(())
    }

    /// Assumes [`GhParams::validate`] passed.
    #[inline]
    pub(crate) fn log_pdf_unchecked(&self, u: f64) -> f64 {
        let c = u - self.mu;
        let s = (self.delta * self.delta + c * c).sqrt();
        let bessel = if self.lambda == 0.5 {
            ln_k0_unchecked(self.alpha * s)
        } else {
            ln_bessel_k(self.lambda - 0.5, self.alpha * s).unwrap_or(f64::NEG_INFINITY)
        };
        let power = if self.lambda == 0.5 {
            0.0
        } else {
            (0.5 - self.lambda) * s.ln()
        };
        self.beta * c + bessel - power
    }
}

/// Unnormalized `ln p(u) = beta (u - mu) + ln K_{lambda - 1/2}(alpha s) - (1/2 - lambda) ln s`
/// with `s = sqrt(delta^2 + (u - mu)^2)`.
pub fn gh_log_pdf(u: f64, params: &GhParams) -> Result<f64> {
    params.validate()?;
    Ok(params.log_pdf_unchecked(u))
}

pub const GH_GRID_POINTS: usize = 1 << 14;
pub const GH_GRID_HALF_WIDTH: f64 = 40.0;

/// Inverse-CDF sampler on a uniform grid over `mu +/- 40 delta`.
#[derive(Debug, Clone)]
pub struct GhSampler {
    lo: f64,
    step: f64,
    cdf: Vec<f64>,
    mean: f64,
}

impl GhSampler {
    pub fn new(params: &GhParams) -> Result<Self> {
        params.validate()?;
        let lo = params.mu - GH_GRID_HALF_WIDTH * params.delta;
        let hi = params.mu + GH_GRID_HALF_WIDTH * params.delta;
        let n = GH_GRID_POINTS;
        let step = (hi - lo) / (n - 1) as f64;
        let log_p: Vec<f64> = (0..n)
            .map(|i| params.log_pdf_unchecked(lo + i as f64 * step))
            .collect();
        let max = log_p.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let p: Vec<f64> = log_p.iter().map(|l| (l - max).exp()).collect();

        let mut cdf = Vec::with_capacity(n);
        cdf.push(0.0);
        let mut moment = 0.0;
        for i in 1..n {
            let area = 0.5 * step * (p[i - 1] + p[i]);
            cdf.push(cdf[i - 1] + area);
            let (a, b) = (lo + (i - 1) as f64 * step, lo + i as f64 * step);
            moment += 0.5 * step * (a * p[i - 1] + b * p[i]);
        }
        let total = cdf[n - 1];
        for c in &mut cdf {
            *c /= total;
        }
        Ok(Self {
            lo,
            step,
            cdf,
            mean: moment / total,
        })
    }

    /// Mean of the gridded density.
    pub fn quadrature_mean(&self) -> f64 {
        self.mean
    }

    /// Piecewise-linear CDF of the gridded density.
    pub fn cdf(&self, x: f64) -> f64 {
        let pos = (x - self.lo) / self.step;
        if pos <= 0.0 {
            return 0.0;
        }
        let i = pos.floor() as usize;
        if i + 1 >= self.cdf.len() {
            return 1.0;
        }
        let frac = pos - i as f64;
        self.cdf[i] + frac * (self.cdf[i + 1] - self.cdf[i])
    }

    pub fn sample(&self, rng: &mut RngStream) -> f64 {
        let u = rng.uniform();
        let j = self
            .cdf
            .partition_point(|c| *c <= u)
            .clamp(1, self.cdf.len() - 1);
        let (c0, c1) = (self.cdf[j - 1], self.cdf[j]);
        let frac = if c1 > c0 { (u - c0) / (c1 - c0) } else { 0.0 };
        self.lo + (j - 1) as f64 * self.step + frac * self.step
    }
}

/// `n` i.i.d. draws.
pub fn gh_sample(params: &GhParams, n: usize, rng: &mut RngStream) -> Result<Vec<f64>> {
    let sampler = GhSampler::new(params)?;
    Ok((0..n).map(|_| sampler.sample(rng)).collect())
}
