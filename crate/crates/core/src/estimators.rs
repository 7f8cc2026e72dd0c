//! Global importance-sampling estimators accumulated across iterations.
//!
//! Linear weights are kept relative to the largest log weight seen so far;
//! when a larger one arrives the running sums are rescaled.

use crate::error::{PmcError, Result};
use crate::gaussian::ProposalPopulation;
use crate::rng::RngStream;
use crate::sample::WeightedSample;
use crate::target::Target;
use crate::weighting::{combine, mixture_log_density_unchecked, WeightScheme};

/// Writes `f(x) = x` into `out`.
pub fn identity(x: &[f64], out: &mut [f64]) {
    out.copy_from_slice(x);
}

/// Estimates after one accumulated batch.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorSnapshot {
    pub total_samples: u64,
    /// `ln Z_t`; `-inf` while every weight seen is zero.
    pub log_z: f64,
    /// `None` while every weight seen is zero.
    pub self_normalized: Option<Vec<f64>>,
}

impl EstimatorSnapshot {
    pub fn z(&self) -> f64 {
        self.log_z.exp()
    }

    /// `I_t = I~_t * Z_t / Z`.
    pub fn unnormalized(&self, z: f64) -> Option<Vec<f64>> {
        let scale = (self.log_z - z.ln()).exp();
        self.self_normalized
            .as_ref()
            .map(|v| v.iter().map(|m| m * scale).collect())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorAccumulator {
    f_dim: usize,
    /// Reference point for the scaled sums.
    max_log_w: f64,
    sum_w: f64,
    sum_wf: Vec<f64>,
    total_samples: u64,
    trace: Vec<EstimatorSnapshot>,
    scratch: Vec<f64>,
}

impl EstimatorAccumulator {
    /// `f_dim` is the output dimension of the test function.
    pub fn new(f_dim: usize) -> Self {
        Self {
            f_dim,
            max_log_w: f64::NEG_INFINITY,
            sum_w: 0.0,
            sum_wf: vec![0.0; f_dim],
            total_samples: 0,
            trace: Vec::new(),
            scratch: vec![0.0; f_dim],
        }
    }

    pub fn f_dim(&self) -> usize {
        self.f_dim
    }

    pub fn total_samples(&self) -> u64 {
        self.total_samples
    }

    pub fn trace(&self) -> &[EstimatorSnapshot] {
        &self.trace
    }

    /// `sum w` and `sum w f` rescaled by `exp(-max_log_w)`, plus that shift.
    pub fn scaled_sums(&self) -> (f64, &[f64], f64) {
        (self.sum_w, &self.sum_wf, self.max_log_w)
    }

    fn rescale_to(&mut self, new_max: f64) {
        let factor = (self.max_log_w - new_max).exp();
        self.sum_w *= factor;
        for s in &mut self.sum_wf {
            *s *= factor;
        }
        self.max_log_w = new_max;
    }

    /// Adds one weighted point without recording a snapshot.
    pub fn push<F>(&mut self, x: &[f64], log_w: f64, f: &mut F)
    where
        F: FnMut(&[f64], &mut [f64]),
    {
        debug_assert!(!log_w.is_nan());
        self.total_samples += 1;
        if log_w == f64::NEG_INFINITY {
            return;
        }
        if log_w > self.max_log_w {
            self.rescale_to(log_w);
        }
        let w = (log_w - self.max_log_w).exp();
        self.sum_w += w;
        f(x, &mut self.scratch);
        for (s, v) in self.sum_wf.iter_mut().zip(&self.scratch) {
            *s += w * v;
        }
    }

    /// Appends the current estimates to the trace.
    pub fn record_snapshot(&mut self) {
        let snap = EstimatorSnapshot {
            total_samples: self.total_samples,
            log_z: self.log_z_estimate().unwrap_or(f64::NEG_INFINITY),
            self_normalized: self.self_normalized_estimate().ok(),
        };
        self.trace.push(snap);
    }

    /// Adds a batch and records one snapshot. An empty batch changes nothing.
    pub fn accumulate<F>(&mut self, batch: &[WeightedSample], mut f: F)
    where
        F: FnMut(&[f64], &mut [f64]),
    {
        if batch.is_empty() {
            return;
        }
        for s in batch {
            self.push(&s.x, s.log_w, &mut f);
        }
        self.record_snapshot();
    }

    /// `ln Z_t = ln(sum w / total_samples)`.
    pub fn log_z_estimate(&self) -> Result<f64> {
        if self.total_samples == 0 {
            return Err(PmcError::contract("no samples accumulated"));
        }
        if self.sum_w == 0.0 {
            return Ok(f64::NEG_INFINITY);
        }
        Ok(self.max_log_w + self.sum_w.ln() - (self.total_samples as f64).ln())
    }

    pub fn z_estimate(&self) -> Result<f64> {
        self.log_z_estimate().map(f64::exp)
    }

    /// `I~_t = sum w f / sum w`.
    pub fn self_normalized_estimate(&self) -> Result<Vec<f64>> {
        if self.sum_w == 0.0 {
            return Err(PmcError::DegenerateEstimate);
        }
        Ok(self.sum_wf.iter().map(|s| s / self.sum_w).collect())
    }

    /// `I_t = sum w f / (total_samples * Z)` for a known `Z`.
    pub fn unnormalized_estimate(&self, z: f64) -> Result<Vec<f64>> {
        if !(z > 0.0 && z.is_finite()) {
            return Err(PmcError::contract(format!(
                "known Z must be positive, got {z}"
            )));
        }
        let log_z = self.log_z_estimate()?;
        if log_z == f64::NEG_INFINITY {
            return Ok(vec![0.0; self.f_dim]);
        }
        let scale = (log_z - z.ln()).exp();
        Ok(self.sum_wf.iter().map(|s| s / self.sum_w * scale).collect())
    }

    /// Folds `other` into `self` as if its samples had been pushed here.
    /// Traces are not merged.
    pub fn merge(&mut self, other: &EstimatorAccumulator) -> Result<()> {
        if other.f_dim != self.f_dim {
            return Err(PmcError::contract(
                "cannot merge accumulators of different f dimension",
            ));
        }
        self.total_samples += other.total_samples;
        if other.sum_w == 0.0 {
            return Ok(());
        }
        if other.max_log_w > self.max_log_w {
            self.rescale_to(other.max_log_w);
        }
        let factor = (other.max_log_w - self.max_log_w).exp();
        self.sum_w += other.sum_w * factor;
        for (s, o) in self.sum_wf.iter_mut().zip(&other.sum_wf) {
            *s += o * factor;
        }
        Ok(())
    }
}

/// One draw per proposal, weighted with `scheme`, accumulated as a single batch.
pub fn one_per_proposal_estimate<F>(
    target: &dyn Target,
    pop: &ProposalPopulation,
    scheme: WeightScheme,
    rng: &mut RngStream,
    f_dim: usize,
    mut f: F,
) -> Result<EstimatorAccumulator>
where
    F: FnMut(&[f64], &mut [f64]),
{
    check_dims(target, pop)?;
    let mut acc = EstimatorAccumulator::new(f_dim);
    let mut x = vec![0.0; pop.dim()];
    for (i, q) in pop.proposals().iter().enumerate() {
        q.sample_into(rng, &mut x);
        let log_q = match scheme {
            WeightScheme::StandardIS => pop.component_log_density(i, &x),
            WeightScheme::DeterministicMixture => mixture_log_density_unchecked(&x, pop),
        };
        acc.push(&x, combine(target.log_density(&x), log_q), &mut f);
    }
    acc.record_snapshot();
    Ok(acc)
}

/// `n_draws` samples from the mixture itself (uniform component, then a draw
/// from it), each weighted by `pi / psi`.
pub fn sm_estimate<F>(
    target: &dyn Target,
    pop: &ProposalPopulation,
    n_draws: usize,
    rng: &mut RngStream,
    f_dim: usize,
    mut f: F,
) -> Result<EstimatorAccumulator>
where
    F: FnMut(&[f64], &mut [f64]),
{
    check_dims(target, pop)?;
    if n_draws == 0 {
        return Err(PmcError::contract("sm_estimate needs at least one draw"));
    }
    let mut acc = EstimatorAccumulator::new(f_dim);
    let mut x = vec![0.0; pop.dim()];
    for _ in 0..n_draws {
        let j = rng.index(pop.len());
        pop.get(j).sample_into(rng, &mut x);
        let log_psi = mixture_log_density_unchecked(&x, pop);
        acc.push(&x, combine(target.log_density(&x), log_psi), &mut f);
    }
    acc.record_snapshot();
    Ok(acc)
}

fn check_dims(target: &dyn Target, pop: &ProposalPopulation) -> Result<()> {
    if target.dim() != pop.dim() {
        return Err(PmcError::contract(format!(
            "target dimension {} differs from population dimension {}",
            target.dim(),
            pop.dim()
        )));
    }
    Ok(())
}
