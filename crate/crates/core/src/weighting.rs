//! Importance weights: standard (own-proposal) and deterministic-mixture.
//!
//! All weights live in log space. Linear weights only appear after a
//! max-shifted normalization.

use crate::error::{PmcError, Result};
use crate::gaussian::ProposalPopulation;
use crate::target::Target;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum WeightScheme {
    /// `pi(x) / q_i(x)` with `q_i` the proposal that generated `x`.
    StandardIS,
    /// `pi(x) / psi(x)` with `psi` the equally weighted mixture of all proposals.
    DeterministicMixture,
}

/// `log(sum(exp(v)))`, max-shifted, reduced left to right.
///
/// Returns `-inf` for an empty slice or when every entry is `-inf`.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if max == f64::INFINITY {
        return f64::INFINITY;
    }
    let mut sum = 0.0;
    for v in values {
        sum += (v - max).exp();
    }
    max + sum.ln()
}

/// Running max-shifted log-sum-exp, for reductions that should not allocate.
#[derive(Debug, Clone, Copy)]
pub(crate) struct OnlineLogSumExp {
    max: f64,
    scaled_sum: f64,
}

impl OnlineLogSumExp {
    pub(crate) fn new() -> Self {
        Self {
            max: f64::NEG_INFINITY,
            scaled_sum: 0.0,
        }
    }

    #[inline]
    pub(crate) fn push(&mut self, v: f64) {
        if v == f64::NEG_INFINITY {
            return;
        }
        if v > self.max {
            self.scaled_sum = self.scaled_sum * (self.max - v).exp() + 1.0;
            self.max = v;
        } else {
            self.scaled_sum += (v - self.max).exp();
        }
    }

    /// `log(sum / divisor)`.
    #[inline]
    pub(crate) fn log_mean_over(&self, divisor: f64) -> f64 {
        if self.max == f64::NEG_INFINITY {
            return f64::NEG_INFINITY;
        }
        self.max + (self.scaled_sum / divisor).ln()
    }
}

/// `log psi(x) = log((1/N) sum_j q_j(x))`.
pub fn mixture_log_density(x: &[f64], pop: &ProposalPopulation) -> Result<f64> {
    if x.len() != pop.dim() {
        return Err(PmcError::contract(format!(
            "point has dimension {} but population has {}",
            x.len(),
            pop.dim()
        )));
    }
    Ok(mixture_log_density_unchecked(x, pop))
}

#[inline]
pub(crate) fn mixture_log_density_unchecked(x: &[f64], pop: &ProposalPopulation) -> f64 {
    let mut acc = OnlineLogSumExp::new();
    for j in 0..pop.len() {
        acc.push(pop.component_log_density(j, x));
    }
    acc.log_mean_over(pop.len() as f64)
}

/// `log pi(x) - log q_i(x)`.
pub fn standard_log_weight(
    x: &[f64],
    proposal_index: usize,
    pop: &ProposalPopulation,
    target: &dyn Target,
) -> Result<f64> {
    if proposal_index >= pop.len() {
        return Err(PmcError::contract(format!(
            "proposal index {proposal_index} out of range for N={}",
            pop.len()
        )));
    }
    if x.len() != pop.dim() {
        return Err(PmcError::contract("point and population dimensions differ"));
    }
    let log_pi = target.log_density(x);
    Ok(combine(
        log_pi,
        pop.component_log_density(proposal_index, x),
    ))
}

/// `log pi(x) - log psi(x)`; does not depend on which proposal drew `x`.
pub fn dm_log_weight(x: &[f64], pop: &ProposalPopulation, target: &dyn Target) -> Result<f64> {
    let log_psi = mixture_log_density(x, pop)?;
    Ok(combine(target.log_density(x), log_psi))
}

#[inline]
pub(crate) fn combine(log_pi: f64, log_q: f64) -> f64 {
    if log_pi == f64::NEG_INFINITY {
        f64::NEG_INFINITY
    } else {
        log_pi - log_q
    }
}

/// Self-normalizes log weights into a probability vector, preserving order.
pub fn normalize_weights(log_weights: &[f64]) -> Result<Vec<f64>> {
    let mut out = vec![0.0; log_weights.len()];
    normalize_weights_into(log_weights, &mut out)?;
    Ok(out)
}

pub(crate) fn normalize_weights_into(log_weights: &[f64], out: &mut [f64]) -> Result<()> {
    if log_weights.is_empty() {
        return Err(PmcError::contract(
            "cannot normalize an empty weight vector",
        ));
    }
    let mut max = f64::NEG_INFINITY;
    for &lw in log_weights {
        if lw.is_nan() || lw == f64::INFINITY {
            return Err(PmcError::contract(format!("invalid log weight {lw}")));
        }
        max = max.max(lw);
    }
    if max == f64::NEG_INFINITY {
        return Err(PmcError::DegenerateWeights);
    }
    let mut sum = 0.0;
    for (o, &lw) in out.iter_mut().zip(log_weights) {
        *o = (lw - max).exp();
        sum += *o;
    }
    for o in out.iter_mut() {
        *o /= sum;
    }
    Ok(())
}

/// Effective-sample-size estimate `1 / sum(w^2)` of a normalized weight vector.
pub fn ess_hat(normalized_weights: &[f64]) -> Result<f64> {
    if normalized_weights.is_empty() {
        return Err(PmcError::contract("ESS of an empty weight vector"));
    }
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for &w in normalized_weights {
        if !(w >= 0.0) || !w.is_finite() {
            return Err(PmcError::contract(format!(
                "weight {w} is not a probability"
            )));
        }
        sum += w;
        sum_sq += w * w;
    }
    if (sum - 1.0).abs() > 1e-9 {
        return Err(PmcError::contract(format!("weights sum to {sum}, not 1")));
    }
    Ok((1.0 / sum_sq).clamp(1.0, normalized_weights.len() as f64))
}
