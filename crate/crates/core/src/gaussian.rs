//! Diagonal-covariance Gaussian proposals and the population that holds them.

use rand_distr::{Distribution, StandardNormal};

use crate::error::{PmcError, Result};
use crate::rng::RngStream;

pub(crate) const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Log density of `N(mean, diag(cov_diag))` at `x`.
pub fn gaussian_log_density(x: &[f64], mean: &[f64], cov_diag: &[f64]) -> Result<f64> {
    if x.len() != mean.len() || x.len() != cov_diag.len() {
        return Err(PmcError::contract(format!(
            "dimension mismatch: x={}, mean={}, cov={}",
            x.len(),
            mean.len(),
            cov_diag.len()
        )));
    }
    if let Some(v) = cov_diag.iter().find(|v| !(**v > 0.0) || !v.is_finite()) {
        return Err(PmcError::contract(format!(
            "variance must be positive, got {v}"
        )));
    }
    let mut quad = 0.0;
    let mut log_det = 0.0;
    for ((xd, md), vd) in x.iter().zip(mean).zip(cov_diag) {
        let diff = xd - md;
        quad += diff * diff / vd;
        log_det += vd.ln();
    }
    Ok(-0.5 * (x.len() as f64 * LN_2PI + log_det + quad))
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianProposal {
    mean: Vec<f64>,
    cov_diag: Vec<f64>,
    std_dev: Vec<f64>,
    inv_var: Vec<f64>,
    log_norm: f64,
}

impl GaussianProposal {
    pub fn new(mean: Vec<f64>, cov_diag: Vec<f64>) -> Result<Self> {
        if mean.is_empty() {
            return Err(PmcError::contract("proposal dimension must be positive"));
        }
        if mean.len() != cov_diag.len() {
            return Err(PmcError::contract(format!(
                "mean has {} entries but cov_diag has {}",
                mean.len(),
                cov_diag.len()
            )));
        }
        if let Some(v) = cov_diag.iter().find(|v| !(**v > 0.0) || !v.is_finite()) {
            return Err(PmcError::contract(format!(
                "variance must be positive, got {v}"
            )));
        }
        if mean.iter().any(|m| !m.is_finite()) {
            return Err(PmcError::contract("proposal mean must be finite"));
        }
        let log_det: f64 = cov_diag.iter().map(|v| v.ln()).sum();
        let log_norm = -0.5 * (mean.len() as f64 * LN_2PI + log_det);
        Ok(Self {
            std_dev: cov_diag.iter().map(|v| v.sqrt()).collect(),
            inv_var: cov_diag.iter().map(|v| 1.0 / v).collect(),
            mean,
            cov_diag,
            log_norm,
        })
    }

    /// Isotropic proposal `N(mean, sigma^2 I)`.
    pub fn isotropic(mean: Vec<f64>, sigma: f64) -> Result<Self> {
        let d = mean.len();
        Self::new(mean, vec![sigma * sigma; d])
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn cov_diag(&self) -> &[f64] {
        &self.cov_diag
    }

    /// Same covariance, new location.
    pub fn with_mean(&self, mean: Vec<f64>) -> Result<Self> {
        if mean.len() != self.dim() {
            return Err(PmcError::contract("new mean has the wrong dimension"));
        }
        if mean.iter().any(|m| !m.is_finite()) {
            return Err(PmcError::contract("proposal mean must be finite"));
        }
        Ok(Self {
            mean,
            ..self.clone()
        })
    }

    #[inline]
    pub fn log_density(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.mean.len());
        let mut quad = 0.0;
        for ((xd, md), iv) in x.iter().zip(&self.mean).zip(&self.inv_var) {
            let diff = xd - md;
            quad += diff * diff * iv;
        }
        self.log_norm - 0.5 * quad
    }

    /// Writes one draw into `out`.
    pub fn sample_into(&self, rng: &mut RngStream, out: &mut [f64]) {
        for ((o, m), s) in out.iter_mut().zip(&self.mean).zip(&self.std_dev) {
            let z: f64 = StandardNormal.sample(rng);
            *o = m + s * z;
        }
    }
}

/// One draw from `proposal`: `mean + sqrt(cov_diag) * z` with `z` standard normal.
pub fn draw_gaussian(proposal: &GaussianProposal, rng: &mut RngStream) -> Vec<f64> {
    let mut out = vec![0.0; proposal.dim()];
    proposal.sample_into(rng, &mut out);
    out
}

/// The `N` proposals active at one iteration.
///
/// Besides the proposals themselves the population keeps a flat copy of the
/// means, inverse variances and normalizers so that mixture evaluation walks
/// contiguous memory.
#[derive(Debug, Clone, PartialEq)]
pub struct ProposalPopulation {
    proposals: Vec<GaussianProposal>,
    iteration: usize,
    dim: usize,
    flat_means: Vec<f64>,
    flat_inv_var: Vec<f64>,
    log_norms: Vec<f64>,
}

impl ProposalPopulation {
    pub fn new(proposals: Vec<GaussianProposal>, iteration: usize) -> Result<Self> {
        let first = proposals
            .first()
            .ok_or_else(|| PmcError::contract("population must hold at least one proposal"))?;
        let dim = first.dim();
        if proposals.iter().any(|p| p.dim() != dim) {
            return Err(PmcError::contract("proposals must share one dimension"));
        }
        let mut flat_means = Vec::with_capacity(proposals.len() * dim);
        let mut flat_inv_var = Vec::with_capacity(proposals.len() * dim);
        let mut log_norms = Vec::with_capacity(proposals.len());
        for p in &proposals {
            flat_means.extend_from_slice(&p.mean);
            flat_inv_var.extend_from_slice(&p.inv_var);
            log_norms.push(p.log_norm);
        }
        Ok(Self {
            proposals,
            iteration,
            dim,
            flat_means,
            flat_inv_var,
            log_norms,
        })
    }

    /// `N` proposals sharing the covariance `sigma^2 I`.
    pub fn isotropic(means: Vec<Vec<f64>>, sigma: f64, iteration: usize) -> Result<Self> {
        let proposals = means
            .into_iter()
            .map(|m| GaussianProposal::isotropic(m, sigma))
            .collect::<Result<Vec<_>>>()?;
        Self::new(proposals, iteration)
    }

    pub fn len(&self) -> usize {
        self.proposals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.proposals.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }

    pub fn proposals(&self) -> &[GaussianProposal] {
        &self.proposals
    }

    pub fn get(&self, i: usize) -> &GaussianProposal {
        &self.proposals[i]
    }

    /// Keeps every covariance and replaces the means, in order.
    pub fn with_means(&self, means: Vec<Vec<f64>>, iteration: usize) -> Result<Self> {
        if means.len() != self.len() {
            return Err(PmcError::contract("one mean per proposal is required"));
        }
        let proposals = self
            .proposals
            .iter()
            .zip(means)
            .map(|(p, m)| p.with_mean(m))
            .collect::<Result<Vec<_>>>()?;
        Self::new(proposals, iteration)
    }

    /// `log q_j(x)` for proposal `j`, read from the flat layout.
    #[inline]
    pub(crate) fn component_log_density(&self, j: usize, x: &[f64]) -> f64 {
        let d = self.dim;
        let mu = &self.flat_means[j * d..(j + 1) * d];
        let iv = &self.flat_inv_var[j * d..(j + 1) * d];
        let mut quad = 0.0;
        for k in 0..d {
            let diff = x[k] - mu[k];
            quad += diff * diff * iv[k];
        }
        self.log_norms[j] - 0.5 * quad
    }
}
