//! The PMC loop: Standard PMC, DM-PMC, and the multiple-sample GR/LR variants.

use crate::error::{PmcError, Result};
use crate::estimators::{identity, EstimatorAccumulator, EstimatorSnapshot};
use crate::gaussian::ProposalPopulation;
use crate::resampling::{
    global_resample, local_resample, AncestorRecord, ResampleKernel, Resampled,
};
use crate::rng::RngStream;
use crate::sample::WeightedSample;
use crate::target::{CountingTarget, Target};
use crate::weighting::{
    combine, ess_hat, mixture_log_density_unchecked, normalize_weights, WeightScheme,
};

/// Which samples compete when the next means are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Placement {
    /// All `N*K` samples resampled together.
    Global,
    /// One survivor per proposal, chosen among its own `K` samples.
    Local,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PmcScheme {
    /// Standard IS weights, `K = 1`, global resampling.
    Standard,
    /// Mixture weights, `K = 1`, global resampling.
    DeterministicMixture,
    /// Mixture weights, `K` samples per proposal, global resampling.
    GlobalResampling(usize),
    /// Mixture weights, `K` samples per proposal, local resampling.
    LocalResampling(usize),
}

impl PmcScheme {
    pub fn weights(&self) -> WeightScheme {
        match self {
            PmcScheme::Standard => WeightScheme::StandardIS,
            _ => WeightScheme::DeterministicMixture,
        }
    }

    pub fn samples_per_proposal(&self) -> usize {
        match self {
            PmcScheme::Standard | PmcScheme::DeterministicMixture => 1,
            PmcScheme::GlobalResampling(k) | PmcScheme::LocalResampling(k) => *k,
        }
    }

    pub fn placement(&self) -> Placement {
        match self {
            PmcScheme::LocalResampling(_) => Placement::Local,
            _ => Placement::Global,
        }
    }

    /// Short name without `K`: `Standard`, `DM`, `GR` or `LR`.
    pub fn family(&self) -> &'static str {
        match self {
            PmcScheme::Standard => "Standard",
            PmcScheme::DeterministicMixture => "DM",
            PmcScheme::GlobalResampling(_) => "GR",
            PmcScheme::LocalResampling(_) => "LR",
        }
    }

    /// `family` with the same `K`.
    pub fn from_family(family: &str, k: usize) -> Result<Self> {
        let scheme = match family {
            "Standard" | "standard" => PmcScheme::Standard,
            "DM" | "dm" => PmcScheme::DeterministicMixture,
            "GR" | "gr" => PmcScheme::GlobalResampling(k),
            "LR" | "lr" => PmcScheme::LocalResampling(k),
            other => return Err(PmcError::config(format!("unknown PMC scheme `{other}`"))),
        };
        scheme.validate()?;
        Ok(scheme)
    }

    pub fn validate(&self) -> Result<()> {
        if self.samples_per_proposal() == 0 {
            return Err(PmcError::config("K must be at least 1"));
        }
        Ok(())
    }
}

/// Axis-aligned box `[lo_d, hi_d]` used to initialize means.
#[derive(Debug, Clone, PartialEq)]
pub struct InitBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl InitBox {
    pub fn cube(dim: usize, lo: f64, hi: f64) -> Self {
        Self {
            lo: vec![lo; dim],
            hi: vec![hi; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.lo.is_empty() || self.lo.len() != self.hi.len() {
            return Err(PmcError::config(
                "init box bounds must be nonempty and of equal length",
            ));
        }
        for (d, (l, h)) in self.lo.iter().zip(&self.hi).enumerate() {
            if !(l.is_finite() && h.is_finite() && l <= h) {
                return Err(PmcError::config(format!(
                    "init box dimension {d}: [{l}, {h}] is invalid"
                )));
            }
        }
        Ok(())
    }

    pub fn sample(&self, rng: &mut RngStream) -> Vec<f64> {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(l, h)| l + (h - l) * rng.uniform())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PmcConfig {
    pub scheme: PmcScheme,
    pub n_proposals: usize,
    /// Total target evaluations `L`.
    pub budget: u64,
    pub sigma: f64,
    pub init_box: InitBox,
    pub kernel: ResampleKernel,
    pub seed: u64,
    pub stream_id: u64,
}

/// `T = floor(L / (N K))`, rejecting `T < 1`.
pub fn iterations_for(budget: u64, n: usize, k: usize) -> Result<usize> {
    if n == 0 || k == 0 {
        return Err(PmcError::config("N and K must be at least 1"));
    }
    let per_iter = (n as u64).saturating_mul(k as u64);
    let t = budget / per_iter;
    if t < 1 {
        return Err(PmcError::config(format!(
            "budget L={budget} is smaller than N*K={per_iter}, so T < 1"
        )));
    }
    Ok(t as usize)
}

impl PmcConfig {
    pub fn samples_per_proposal(&self) -> usize {
        self.scheme.samples_per_proposal()
    }

    pub fn iterations(&self) -> Result<usize> {
        iterations_for(self.budget, self.n_proposals, self.samples_per_proposal())
    }

    /// `N K T` after flooring.
    pub fn effective_budget(&self) -> Result<u64> {
        Ok((self.n_proposals * self.samples_per_proposal() * self.iterations()?) as u64)
    }

    pub fn validate(&self) -> Result<()> {
        self.scheme.validate()?;
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(PmcError::config(format!(
                "sigma must be positive, got {}",
                self.sigma
            )));
        }
        self.init_box.validate()?;
        self.iterations()?;
        Ok(())
    }
}

/// Events that did not stop the run but should be audited.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunFlags {
    /// Iterations whose global batch had zero total weight; the next means
    /// were redrawn from the init box.
    pub reinitialized: Vec<usize>,
    /// `(iteration, proposal)` groups with zero weight under local resampling.
    pub degenerate_groups: Vec<(usize, usize)>,
    /// Local resampling with `K = 1`, which never selects.
    pub no_selection: bool,
}

impl RunFlags {
    pub fn is_clean(&self) -> bool {
        self.reinitialized.is_empty() && self.degenerate_groups.is_empty() && !self.no_selection
    }

    /// Compact `key=value;...` summary, empty when clean.
    pub fn summary(&self) -> String {
        let mut parts = Vec::new();
        if !self.reinitialized.is_empty() {
            parts.push(format!("reinit={}", self.reinitialized.len()));
        }
        if !self.degenerate_groups.is_empty() {
            parts.push(format!(
                "degenerate_groups={}",
                self.degenerate_groups.len()
            ));
        }
        if self.no_selection {
            parts.push("no_selection".to_string());
        }
        parts.join(";")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub n_proposals: usize,
    pub samples_per_proposal: usize,
    pub iterations: usize,
    pub effective_budget: u64,
    /// One snapshot per iteration that contributed to the estimates.
    pub trace: Vec<EstimatorSnapshot>,
    pub log_z: f64,
    pub z: f64,
    /// `None` when every weight was zero.
    pub self_normalized: Option<Vec<f64>>,
    /// Present when the target's `Z` is known.
    pub unnormalized: Option<Vec<f64>>,
    /// `genealogy[t-1]` links the population of iteration `t` to that of `t+1`.
    pub genealogy: Vec<Vec<AncestorRecord>>,
    /// ESS of the normalized `N*K` batch weights at every iteration.
    pub ess_trace: Vec<f64>,
    pub flags: RunFlags,
    pub target_evals: u64,
    /// Extra evaluations spent by MCMC moves, zero for PMC.
    pub mh_evals: u64,
}

/// Output of one [`pmc_iteration`].
#[derive(Debug, Clone)]
pub struct IterationOutput {
    pub samples: Vec<WeightedSample>,
    /// `log pi(x)` of each sample, in sample order.
    pub log_pi: Vec<f64>,
    pub ess: f64,
    /// `None` when resampling was not requested.
    pub resampled: Option<Resampled>,
    pub reinitialized: bool,
}

/// `N` means drawn uniformly from the init box, each with covariance `sigma^2 I`.
pub fn init_population(config: &PmcConfig, rng: &mut RngStream) -> Result<ProposalPopulation> {
    init_from_box(&config.init_box, config.n_proposals, config.sigma, rng)
}

pub(crate) fn init_from_box(
    init_box: &InitBox,
    n: usize,
    sigma: f64,
    rng: &mut RngStream,
) -> Result<ProposalPopulation> {
    init_box.validate()?;
    if n == 0 {
        return Err(PmcError::config("N must be at least 1"));
    }
    let means = (0..n).map(|_| init_box.sample(rng)).collect();
    ProposalPopulation::isotropic(means, sigma, 1)
}

/// Draws `k` samples per proposal and weights them against `target`.
pub(crate) fn draw_and_weigh(
    pop: &ProposalPopulation,
    k: usize,
    weights: WeightScheme,
    target: &mut CountingTarget<'_>,
    rng: &mut RngStream,
) -> (Vec<WeightedSample>, Vec<f64>) {
    let n = pop.len();
    let dim = pop.dim();
    let mut samples = Vec::with_capacity(n * k);
    let mut log_pi = Vec::with_capacity(n * k);
    for (i, q) in pop.proposals().iter().enumerate() {
        for kk in 0..k {
            let mut x = vec![0.0; dim];
            q.sample_into(rng, &mut x);
            let lp = target.log_density(&x);
            let log_q = match weights {
                WeightScheme::StandardIS => pop.component_log_density(i, &x),
                WeightScheme::DeterministicMixture => mixture_log_density_unchecked(&x, pop),
            };
            samples.push(WeightedSample {
                x,
                log_w: combine(lp, log_q),
                proposal_index: i,
                sample_index: kk,
                iteration: pop.iteration(),
            });
            log_pi.push(lp);
        }
    }
    (samples, log_pi)
}

pub(crate) fn batch_ess(samples: &[WeightedSample]) -> f64 {
    let lw: Vec<f64> = samples.iter().map(|s| s.log_w).collect();
    match normalize_weights(&lw) {
        Ok(w) => ess_hat(&w).unwrap_or(0.0),
        Err(_) => 0.0,
    }
}

/// Resamples under `placement`, falling back to the init box when a global
/// batch carries no weight.
pub(crate) fn place(
    samples: &[WeightedSample],
    n: usize,
    placement: Placement,
    kernel: ResampleKernel,
    init_box: &InitBox,
    rng: &mut RngStream,
) -> Result<(Resampled, bool)> {
    match placement {
        Placement::Local => Ok((local_resample(samples, kernel, rng)?, false)),
        Placement::Global => match global_resample(samples, n, kernel, rng) {
            Ok(r) => Ok((r, false)),
            Err(PmcError::DegenerateWeights) => {
                let means = (0..n).map(|_| init_box.sample(rng)).collect();
                Ok((
                    Resampled {
                        means,
                        ancestors: Vec::new(),
                        degenerate_groups: Vec::new(),
                    },
                    true,
                ))
            }
            Err(e) => Err(e),
        },
    }
}

/// One PMC iteration on `pop`: `N K` draws and weights, accumulation of
/// every sample into `acc`, then, if `resample` is set, placement of the
/// next means.
pub fn pmc_iteration(
    pop: &ProposalPopulation,
    config: &PmcConfig,
    target: &mut CountingTarget<'_>,
    rng: &mut RngStream,
    acc: &mut EstimatorAccumulator,
    resample: bool,
) -> Result<IterationOutput> {
    if target.target().dim() != pop.dim() {
        return Err(PmcError::contract(
            "target and population dimensions differ",
        ));
    }
    let k = config.samples_per_proposal();
    let (samples, log_pi) = draw_and_weigh(pop, k, config.scheme.weights(), target, rng);
    acc.accumulate(&samples, identity);
    let ess = batch_ess(&samples);
    let (resampled, reinitialized) = if resample {
        let (r, re) = place(
            &samples,
            pop.len(),
            config.scheme.placement(),
            config.kernel,
            &config.init_box,
            rng,
        )?;
        (Some(r), re)
    } else {
        (None, false)
    };
    Ok(IterationOutput {
        samples,
        log_pi,
        ess,
        resampled,
        reinitialized,
    })
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn finish_record(
    acc: &EstimatorAccumulator,
    target: &dyn Target,
    n: usize,
    k: usize,
    iterations: usize,
    genealogy: Vec<Vec<AncestorRecord>>,
    ess_trace: Vec<f64>,
    flags: RunFlags,
    target_evals: u64,
    mh_evals: u64,
) -> Result<RunRecord> {
    let log_z = acc.log_z_estimate()?;
    let self_normalized = acc.self_normalized_estimate().ok();
    let unnormalized = match target.known_z() {
        Some(z) => Some(acc.unnormalized_estimate(z)?),
        None => None,
    };
    Ok(RunRecord {
        n_proposals: n,
        samples_per_proposal: k,
        iterations,
        effective_budget: (n * k * iterations) as u64,
        trace: acc.trace().to_vec(),
        log_z,
        z: log_z.exp(),
        self_normalized,
        unnormalized,
        genealogy,
        ess_trace,
        flags,
        target_evals,
        mh_evals,
    })
}

/// Runs `T = floor(L / (N K))` iterations. The final iteration does not
/// resample, so the genealogy holds `T - 1` transitions.
pub fn run_pmc(config: &PmcConfig, target: &dyn Target) -> Result<RunRecord> {
    config.validate()?;
    if config.init_box.dim() != target.dim() {
        return Err(PmcError::config(format!(
            "init box has dimension {} but target has {}",
            config.init_box.dim(),
            target.dim()
        )));
    }
    let t_max = config.iterations()?;
    let n = config.n_proposals;
    let k = config.samples_per_proposal();
    let mut rng = RngStream::new(config.seed, config.stream_id);
    let mut counter = CountingTarget::new(target);
    let mut acc = EstimatorAccumulator::new(target.dim());
    let mut pop = init_population(config, &mut rng)?;
    let mut genealogy = Vec::with_capacity(t_max.saturating_sub(1));
    let mut ess_trace = Vec::with_capacity(t_max);
    let mut flags = RunFlags {
        no_selection: config.scheme.placement() == Placement::Local && k == 1,
        ..RunFlags::default()
    };

    for t in 1..=t_max {
        let out = pmc_iteration(&pop, config, &mut counter, &mut rng, &mut acc, t < t_max)?;
        ess_trace.push(out.ess);
        if let Some(r) = out.resampled {
            if out.reinitialized {
                flags.reinitialized.push(t);
            }
            flags
                .degenerate_groups
                .extend(r.degenerate_groups.iter().map(|g| (t, *g)));
            genealogy.push(r.ancestors);
            pop = pop.with_means(r.means, t + 1)?;
        }
    }

    finish_record(
        &acc,
        target,
        n,
        k,
        t_max,
        genealogy,
        ess_trace,
        flags,
        counter.evals(),
        0,
    )
}
