//! Resampling kernels and the global/local placement strategies.
//!
//! Kernels turn a probability vector into offspring indices. Placement
//! decides which weighted samples compete: all `N*K` of them (global) or
//! only the `K` drawn from the same proposal (local).

use crate::error::{PmcError, Result};
use crate::rng::RngStream;
use crate::sample::WeightedSample;
use crate::weighting::normalize_weights;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum ResampleKernel {
    #[default]
    Multinomial,
    Residual,
    Stratified,
}

/// Links a proposal of the next population to the sample it was placed on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AncestorRecord {
    pub iteration: usize,
    pub child_index: usize,
    pub parent_proposal_index: usize,
    pub parent_sample_k: usize,
}

/// New proposal means plus the genealogy of each.
#[derive(Debug, Clone, PartialEq)]
pub struct Resampled {
    pub means: Vec<Vec<f64>>,
    pub ancestors: Vec<AncestorRecord>,
    /// Local resampling only: groups whose weights were all zero and whose
    /// survivor was therefore picked uniformly.
    pub degenerate_groups: Vec<usize>,
}

fn check_probabilities(weights: &[f64]) -> Result<f64> {
    if weights.is_empty() {
        return Err(PmcError::contract(
            "cannot resample from an empty weight vector",
        ));
    }
    let mut total = 0.0;
    for &w in weights {
        if !(w >= 0.0) || !w.is_finite() {
            return Err(PmcError::contract(format!(
                "weight {w} is not a probability"
            )));
        }
        total += w;
    }
    if total == 0.0 {
        return Err(PmcError::DegenerateWeights);
    }
    if (total - 1.0).abs() > 1e-9 {
        return Err(PmcError::contract(format!("weights sum to {total}, not 1")));
    }
    Ok(total)
}

struct InverseCdf {
    cdf: Vec<f64>,
    last_positive: usize,
}

impl InverseCdf {
    fn new(weights: &[f64], total: f64) -> Self {
        let mut acc = 0.0;
        let cdf = weights
            .iter()
            .map(|w| {
                acc += w / total;
                acc
            })
            .collect();
        let last_positive = weights.iter().rposition(|w| *w > 0.0).unwrap_or(0);
        Self { cdf, last_positive }
    }

    /// Lowest index `i` with `u < cdf[i]`.
    #[inline]
    fn select(&self, u: f64) -> usize {
        let i = self.cdf.partition_point(|c| *c <= u);
        i.min(self.last_positive)
    }
}

pub fn multinomial_indices(
    weights: &[f64],
    count: usize,
    rng: &mut RngStream,
) -> Result<Vec<usize>> {
    let total = check_probabilities(weights)?;
    let inv = InverseCdf::new(weights, total);
    Ok((0..count).map(|_| inv.select(rng.uniform())).collect())
}

/// `floor(count * w_i)` deterministic copies of each index, the remainder
/// drawn multinomially from the fractional parts.
pub fn residual_indices(weights: &[f64], count: usize, rng: &mut RngStream) -> Result<Vec<usize>> {
    let total = check_probabilities(weights)?;
    let mut out = Vec::with_capacity(count);
    let mut fractional = Vec::with_capacity(weights.len());
    for (i, w) in weights.iter().enumerate() {
        let expected = count as f64 * w / total;
        let copies = expected.floor();
        out.extend(std::iter::repeat(i).take(copies as usize));
        fractional.push(expected - copies);
    }
    // Rounding can push the deterministic part one past `count`.
    out.truncate(count);
    let remaining = count - out.len();
    if remaining > 0 {
        let frac_total: f64 = fractional.iter().sum();
        if frac_total > 0.0 {
            let inv = InverseCdf::new(&fractional, frac_total);
            out.extend((0..remaining).map(|_| inv.select(rng.uniform())));
        } else {
            let inv = InverseCdf::new(weights, total);
            out.extend((0..remaining).map(|_| inv.select(rng.uniform())));
        }
    }
    Ok(out)
}

/// One uniform per stratum `[(m + u_m) / count]`, mapped through the inverse CDF.
pub fn stratified_indices(
    weights: &[f64],
    count: usize,
    rng: &mut RngStream,
) -> Result<Vec<usize>> {
    let total = check_probabilities(weights)?;
    let inv = InverseCdf::new(weights, total);
    let n = count as f64;
    Ok((0..count)
        .map(|m| inv.select((m as f64 + rng.uniform()) / n))
        .collect())
}

pub fn resample_indices(
    kernel: ResampleKernel,
    weights: &[f64],
    count: usize,
    rng: &mut RngStream,
) -> Result<Vec<usize>> {
    match kernel {
        ResampleKernel::Multinomial => multinomial_indices(weights, count, rng),
        ResampleKernel::Residual => residual_indices(weights, count, rng),
        ResampleKernel::Stratified => stratified_indices(weights, count, rng),
    }
}

/// Picks `n` new means among all samples jointly.
///
/// Returns [`PmcError::DegenerateWeights`] when every weight is zero; the
/// caller owns the fallback.
pub fn global_resample(
    samples: &[WeightedSample],
    n: usize,
    kernel: ResampleKernel,
    rng: &mut RngStream,
) -> Result<Resampled> {
    if n == 0 {
        return Err(PmcError::contract("global resampling needs n >= 1"));
    }
    let log_w: Vec<f64> = samples.iter().map(|s| s.log_w).collect();
    let w = normalize_weights(&log_w)?;
    let idx = resample_indices(kernel, &w, n, rng)?;
    let mut means = Vec::with_capacity(n);
    let mut ancestors = Vec::with_capacity(n);
    for (child, &i) in idx.iter().enumerate() {
        let s = &samples[i];
        means.push(s.x.clone());
        ancestors.push(AncestorRecord {
            iteration: s.iteration,
            child_index: child,
            parent_proposal_index: s.proposal_index,
            parent_sample_k: s.sample_index,
        });
    }
    Ok(Resampled {
        means,
        ancestors,
        degenerate_groups: Vec::new(),
    })
}

/// Picks exactly one survivor per proposal, among that proposal's own samples.
///
/// Weights are renormalized inside each group. A group whose weights are all
/// zero gets a uniformly chosen survivor and is listed in `degenerate_groups`.
pub fn local_resample(
    samples: &[WeightedSample],
    kernel: ResampleKernel,
    rng: &mut RngStream,
) -> Result<Resampled> {
    let n = samples
        .iter()
        .map(|s| s.proposal_index + 1)
        .max()
        .ok_or_else(|| PmcError::contract("local resampling of an empty batch"))?;
    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (pos, s) in samples.iter().enumerate() {
        groups[s.proposal_index].push(pos);
    }
    if let Some(i) = groups.iter().position(|g| g.is_empty()) {
        return Err(PmcError::contract(format!("proposal {i} has no samples")));
    }

    let mut means = Vec::with_capacity(n);
    let mut ancestors = Vec::with_capacity(n);
    let mut degenerate_groups = Vec::new();
    let mut log_w = Vec::new();
    for (i, group) in groups.iter().enumerate() {
        log_w.clear();
        log_w.extend(group.iter().map(|&p| samples[p].log_w));
        let pick = match normalize_weights(&log_w) {
            Ok(w) => resample_indices(kernel, &w, 1, rng)?[0],
            Err(PmcError::DegenerateWeights) => {
                degenerate_groups.push(i);
                rng.index(group.len())
            }
            Err(e) => return Err(e),
        };
        let s = &samples[group[pick]];
        means.push(s.x.clone());
        ancestors.push(AncestorRecord {
            iteration: s.iteration,
            child_index: i,
            parent_proposal_index: i,
            parent_sample_k: s.sample_index,
        });
    }
    Ok(Resampled {
        means,
        ancestors,
        degenerate_groups,
    })
}
