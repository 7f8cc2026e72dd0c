//! Genealogy diversity metrics, the target-to-mixture `L_p` distance, and the
//! repeated-run MSE harness.

use std::fmt::Write as _;
use std::sync::Arc;

use rayon::prelude::*;

use crate::engine::{run_pmc, PmcConfig, RunRecord};
use crate::error::{PmcError, Result};
use crate::gaussian::ProposalPopulation;
use crate::resampling::AncestorRecord;
use crate::rng::RngStream;
use crate::smc::{run_smc, SmcConfig, TemperingLadder};
use crate::target::Target;
use crate::weighting::mixture_log_density_unchecked;

/// Parent links between consecutive populations.
#[derive(Debug, Clone, PartialEq)]
pub struct Genealogy {
    n: usize,
    iterations: usize,
    /// `links[t-1]`: ancestors of the population at `t + 1`. An empty entry
    /// means the population was redrawn with no parent.
    links: Vec<Vec<AncestorRecord>>,
}

impl Genealogy {
    pub fn new(n: usize, iterations: usize, links: Vec<Vec<AncestorRecord>>) -> Result<Self> {
        if n == 0 || iterations == 0 {
            return Err(PmcError::contract("genealogy needs N >= 1 and T >= 1"));
        }
        if links.len() + 1 != iterations {
            return Err(PmcError::contract(format!(
                "genealogy over T={iterations} iterations needs {} transitions, got {}",
                iterations - 1,
                links.len()
            )));
        }
        for gen in &links {
            if gen
                .iter()
                .any(|a| a.child_index >= n || a.parent_proposal_index >= n)
            {
                return Err(PmcError::contract("ancestor index out of range"));
            }
        }
        Ok(Self {
            n,
            iterations,
            links,
        })
    }

    pub fn from_record(record: &RunRecord) -> Result<Self> {
        Self::new(
            record.n_proposals,
            record.iterations,
            record.genealogy.clone(),
        )
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    /// Which proposals of iteration `from` have a descendant at `to`.
    fn alive_mask(&self, from: usize, to: usize) -> Vec<bool> {
        let mut alive = vec![true; self.n];
        for t in (from..to).rev() {
            let mut parents = vec![false; self.n];
            for a in &self.links[t - 1] {
                if alive[a.child_index] {
                    parents[a.parent_proposal_index] = true;
                }
            }
            alive = parents;
        }
        alive
    }
}

/// Fraction of iteration-`t` proposals with a descendant at `t + lag`,
/// averaged over `t = 1..=T-lag`.
pub fn survival_rate(gen: &Genealogy, lag: usize) -> Result<f64> {
    if lag == 0 || lag >= gen.iterations {
        return Err(PmcError::config(format!(
            "lag must lie in 1..={}, got {lag}",
            gen.iterations.saturating_sub(1)
        )));
    }
    let starts = gen.iterations - lag;
    let mut total = 0.0;
    for t in 1..=starts {
        let alive = gen.alive_mask(t, t + lag);
        total += alive.iter().filter(|a| **a).count() as f64 / gen.n as f64;
    }
    Ok(total / starts as f64)
}

/// Number of iteration-`from_t` proposals with a descendant at `to_t`.
pub fn distinct_ancestors(gen: &Genealogy, from_t: usize, to_t: usize) -> Result<usize> {
    if from_t == 0 || from_t >= to_t || to_t > gen.iterations {
        return Err(PmcError::config(format!(
            "need 1 <= from < to <= {}, got {from_t} -> {to_t}",
            gen.iterations
        )));
    }
    Ok(gen.alive_mask(from_t, to_t).iter().filter(|a| **a).count())
}

/// Uniform quadrature grid over a box.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub points: usize,
}

pub const DEFAULT_GRID_POINTS: usize = 2001;

impl GridSpec {
    /// Every proposal mean `+/- 8` standard deviations, joined with `support`.
    pub fn covering(pop: &ProposalPopulation, support: Option<(&[f64], &[f64])>) -> Self {
        let d = pop.dim();
        let mut lo = vec![f64::INFINITY; d];
        let mut hi = vec![f64::NEG_INFINITY; d];
        for q in pop.proposals() {
            for k in 0..d {
                let s = q.cov_diag()[k].sqrt();
                lo[k] = lo[k].min(q.mean()[k] - 8.0 * s);
                hi[k] = hi[k].max(q.mean()[k] + 8.0 * s);
            }
        }
        if let Some((slo, shi)) = support {
            for k in 0..d {
                lo[k] = lo[k].min(slo[k]);
                hi[k] = hi[k].max(shi[k]);
            }
        }
        Self {
            lo,
            hi,
            points: DEFAULT_GRID_POINTS,
        }
    }

    fn step(&self, k: usize) -> f64 {
        (self.hi[k] - self.lo[k]) / (self.points - 1) as f64
    }
}

/// `[sum_grid |pi(x)/Z - psi(x)|^p dx]^(1/p)`, for `dim <= 2`.
pub fn lp_distance(
    target: &dyn Target,
    pop: &ProposalPopulation,
    p: f64,
    grid: &GridSpec,
) -> Result<f64> {
    let z = target
        .known_z()
        .ok_or_else(|| PmcError::config("L_p distance needs a target with known Z"))?;
    let d = target.dim();
    if d != pop.dim() {
        return Err(PmcError::contract(
            "target and population dimensions differ",
        ));
    }
    if d > 2 {
        return Err(PmcError::Unsupported(format!(
            "grid L_p distance in {d} dimensions"
        )));
    }
    if !(p >= 1.0 && p.is_finite()) {
        return Err(PmcError::contract(format!("p must be at least 1, got {p}")));
    }
    if grid.lo.len() != d || grid.hi.len() != d || grid.points < 2 {
        return Err(PmcError::contract(
            "grid does not match the target dimension",
        ));
    }
    let ln_z = z.ln();
    let term = |x: &[f64]| {
        let pi = (target.log_density(x) - ln_z).exp();
        let psi = mixture_log_density_unchecked(x, pop).exp();
        (pi - psi).abs().powf(p)
    };
    let mut sum = 0.0;
    let mut cell = 1.0;
    if d == 1 {
        let h = grid.step(0);
        cell = h;
        for i in 0..grid.points {
            sum += term(&[grid.lo[0] + i as f64 * h]);
        }
    } else {
        let (h0, h1) = (grid.step(0), grid.step(1));
        cell *= h0 * h1;
        let mut x = [0.0; 2];
        for i in 0..grid.points {
            x[0] = grid.lo[0] + i as f64 * h0;
            for j in 0..grid.points {
                x[1] = grid.lo[1] + j as f64 * h1;
                sum += term(&x);
            }
        }
    }
    Ok((sum * cell).powf(1.0 / p))
}

/// Which sampler a cell runs; seed and stream are set per repetition.
#[derive(Debug, Clone)]
pub enum Sampler {
    Pmc(PmcConfig),
    Smc {
        config: SmcConfig,
        ladder: TemperingLadder,
    },
}

impl Sampler {
    pub fn validate(&self) -> Result<()> {
        match self {
            Sampler::Pmc(c) => c.validate(),
            Sampler::Smc { config, .. } => config.validate(),
        }
    }

    pub fn run(&self, target: &dyn Target, seed: u64, stream_id: u64) -> Result<RunRecord> {
        match self {
            Sampler::Pmc(c) => {
                let mut c = c.clone();
                c.seed = seed;
                c.stream_id = stream_id;
                run_pmc(&c, target)
            }
            Sampler::Smc { config, ladder } => {
                let mut c = config.clone();
                c.seed = seed;
                c.stream_id = stream_id;
                run_smc(&c, ladder)
            }
        }
    }
}

/// One row of an experiment grid.
#[derive(Clone)]
pub struct ExperimentCell {
    pub scheme: String,
    pub n: usize,
    pub k: usize,
    pub sigma: f64,
    pub budget: u64,
    pub sampler: Sampler,
    pub target: Arc<dyn Target>,
}

impl std::fmt::Debug for ExperimentCell {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ExperimentCell")
            .field("scheme", &self.scheme)
            .field("n", &self.n)
            .field("k", &self.k)
            .field("sigma", &self.sigma)
            .field("budget", &self.budget)
            .field("sampler", &self.sampler)
            .finish_non_exhaustive()
    }
}

pub const SURVIVAL_LAGS: usize = 5;
pub const BOOTSTRAP_RESAMPLES: usize = 500;
/// High bit marks bootstrap streams apart from repetition streams.
pub const BOOTSTRAP_STREAM_BIT: u64 = 1 << 63;

/// Scores of a single repetition.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    /// Component-averaged squared error of the self-normalized mean.
    pub sq_err_mean: Option<f64>,
    pub z: f64,
    pub sq_err_z: Option<f64>,
    pub ess_mean: f64,
    pub survival: [Option<f64>; SURVIVAL_LAGS],
    pub flagged: bool,
    pub target_evals: u64,
    pub mh_evals: u64,
}

impl RunSummary {
    pub fn from_record(record: &RunRecord, target: &dyn Target) -> Result<Self> {
        let sq_err_mean = match (target.known_mean(), &record.self_normalized) {
            (Some(truth), Some(est)) => Some(
                truth
                    .iter()
                    .zip(est)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    / truth.len() as f64,
            ),
            _ => None,
        };
        let sq_err_z = target.known_z().map(|z| (record.z - z) * (record.z - z));
        let ess_mean = record.ess_trace.iter().sum::<f64>() / record.ess_trace.len().max(1) as f64;
        let gen = Genealogy::from_record(record)?;
        let mut survival = [None; SURVIVAL_LAGS];
        for (d, slot) in survival.iter_mut().enumerate() {
            *slot = survival_rate(&gen, d + 1).ok();
        }
        Ok(Self {
            sq_err_mean,
            z: record.z,
            sq_err_z,
            ess_mean,
            survival,
            flagged: !record.flags.is_clean(),
            target_evals: record.target_evals,
            mh_evals: record.mh_evals,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MseReport {
    pub scheme: String,
    pub n: usize,
    pub k: usize,
    pub sigma: f64,
    pub budget: u64,
    pub iterations: usize,
    pub reps: usize,
    pub mse_mean_estimate: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub mse_z: Option<f64>,
    pub ess_mean: f64,
    pub survival: [Option<f64>; SURVIVAL_LAGS],
    pub flags: String,
    pub target_evals: u64,
    pub mh_evals: u64,
    pub runs: Vec<RunSummary>,
}

/// Percentile 95% interval of the mean from `resamples` bootstrap draws,
/// widened if needed so that it contains the point estimate.
pub fn bootstrap_ci(values: &[f64], resamples: usize, rng: &mut RngStream) -> Result<(f64, f64)> {
    if values.is_empty() || resamples == 0 {
        return Err(PmcError::contract("bootstrap needs values and resamples"));
    }
    let n = values.len();
    let point = values.iter().sum::<f64>() / n as f64;
    let mut means: Vec<f64> = (0..resamples)
        .map(|_| (0..n).map(|_| values[rng.index(n)]).sum::<f64>() / n as f64)
        .collect();
    means.sort_by(f64::total_cmp);
    let pick = |q: f64| {
        let pos = q * (resamples - 1) as f64;
        let (i, frac) = (pos.floor() as usize, pos - pos.floor());
        let j = (i + 1).min(resamples - 1);
        means[i] + frac * (means[j] - means[i])
    };
    Ok((pick(0.025).min(point), pick(0.975).max(point)))
}

fn mean_of(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (mut s, mut c) = (0.0, 0usize);
    for v in values {
        s += v;
        c += 1;
    }
    (c > 0).then(|| s / c as f64)
}

impl MseReport {
    pub fn aggregate(
        cell: &ExperimentCell,
        iterations: usize,
        runs: Vec<RunSummary>,
        rng: &mut RngStream,
    ) -> Result<Self> {
        let errors: Vec<f64> = runs.iter().filter_map(|r| r.sq_err_mean).collect();
        let (mse, lo, hi) = if errors.is_empty() {
            (f64::NAN, f64::NAN, f64::NAN)
        } else {
            let (lo, hi) = bootstrap_ci(&errors, BOOTSTRAP_RESAMPLES, rng)?;
            (errors.iter().sum::<f64>() / errors.len() as f64, lo, hi)
        };
        let mse_z = mean_of(runs.iter().filter_map(|r| r.sq_err_z));
        let ess_mean = mean_of(runs.iter().map(|r| r.ess_mean)).unwrap_or(f64::NAN);
        let mut survival = [None; SURVIVAL_LAGS];
        for (d, slot) in survival.iter_mut().enumerate() {
            *slot = mean_of(runs.iter().filter_map(|r| r.survival[d]));
        }
        let mut flags = Vec::new();
        let flagged = runs.iter().filter(|r| r.flagged).count();
        if flagged > 0 {
            flags.push(format!("flagged_runs={flagged}"));
        }
        let undefined = runs.len() - errors.len();
        if undefined > 0 && cell.target.known_mean().is_some() {
            flags.push(format!("undefined_estimate={undefined}"));
        }
        Ok(Self {
            scheme: cell.scheme.clone(),
            n: cell.n,
            k: cell.k,
            sigma: cell.sigma,
            budget: cell.budget,
            iterations,
            reps: runs.len(),
            mse_mean_estimate: mse,
            ci_lo: lo,
            ci_hi: hi,
            mse_z,
            ess_mean,
            survival,
            flags: flags.join(";"),
            target_evals: runs.iter().map(|r| r.target_evals).sum(),
            mh_evals: runs.iter().map(|r| r.mh_evals).sum(),
            runs,
        })
    }
}

pub const MSE_CSV_HEADER: &str = "scheme,N,K,sigma,L,T,R,mse_mean_estimate,ci_lo,ci_hi,mse_z,ess_mean,\
survival_rate_lag1,survival_rate_lag2,survival_rate_lag3,survival_rate_lag4,survival_rate_lag5,flags,status";

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl MseReport {
    pub fn csv_row(&self) -> String {
        let mut row = format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            self.scheme,
            self.n,
            self.k,
            self.sigma,
            self.budget,
            self.iterations,
            self.reps,
            self.mse_mean_estimate,
            self.ci_lo,
            self.ci_hi,
            opt(self.mse_z),
            self.ess_mean
        );
        for s in &self.survival {
            let _ = write!(row, ",{}", opt(*s));
        }
        let _ = write!(row, ",{},ok", self.flags);
        row
    }
}

/// Row for a cell that could not run; numeric fields are `*`.
pub fn failed_csv_row(cell: &ExperimentCell, reps: usize, err: &PmcError) -> String {
    let reason = err.to_string().replace([',', '\n'], ";");
    format!(
        "{},{},{},{},{},*,{},*,*,*,*,*,*,*,*,*,*,{},*",
        cell.scheme, cell.n, cell.k, cell.sigma, cell.budget, reps, reason
    )
}

/// `reps` runs of every cell, repetition `r` on stream `r` of `master_seed`,
/// so cells are compared on common random numbers. Runs execute in parallel;
/// results keep cell order.
pub fn run_experiment(
    cells: &[ExperimentCell],
    reps: usize,
    master_seed: u64,
) -> Vec<Result<MseReport>> {
    if reps == 0 {
        return cells
            .iter()
            .map(|_| Err(PmcError::config("R must be at least 1")))
            .collect();
    }
    let checks: Vec<Result<()>> = cells.iter().map(|c| c.sampler.validate()).collect();
    let jobs: Vec<(usize, usize)> = (0..cells.len())
        .filter(|c| checks[*c].is_ok())
        .flat_map(|c| (0..reps).map(move |r| (c, r)))
        .collect();
    let results: Vec<Result<(usize, RunSummary)>> = jobs
        .par_iter()
        .map(|&(c, r)| {
            let cell = &cells[c];
            let rec = cell
                .sampler
                .run(cell.target.as_ref(), master_seed, r as u64)?;
            Ok((
                rec.iterations,
                RunSummary::from_record(&rec, cell.target.as_ref())?,
            ))
        })
        .collect();

    let mut per_cell: Vec<Vec<Result<(usize, RunSummary)>>> =
        cells.iter().map(|_| Vec::new()).collect();
    for (&(c, _), res) in jobs.iter().zip(results) {
        per_cell[c].push(res);
    }
    cells
        .iter()
        .enumerate()
        .zip(per_cell)
        .zip(checks)
        .map(|(((idx, cell), runs), check)| {
            check?;
            let runs: Vec<(usize, RunSummary)> = runs.into_iter().collect::<Result<_>>()?;
            let iterations = runs[0].0;
            let mut rng = RngStream::new(master_seed, BOOTSTRAP_STREAM_BIT | idx as u64);
            MseReport::aggregate(
                cell,
                iterations,
                runs.into_iter().map(|r| r.1).collect(),
                &mut rng,
            )
        })
        .collect()
}

/// Static one-shot estimates of `Z` from a fixed population.
#[derive(Debug, Clone, PartialEq)]
pub struct ZStudy {
    /// One draw per proposal, standard weights.
    pub z_is: Vec<f64>,
    /// The same draws, mixture weights.
    pub z_dm: Vec<f64>,
    /// `N` draws from the mixture itself.
    pub z_sm: Vec<f64>,
}

/// `reps` independent runs of the IS, DM and SM estimators of `Z`.
///
/// Run `r` uses stream `r` of `seed` for the IS/DM draws, which are shared,
/// and a stream derived from it for the SM draws.
pub fn z_study(
    target: &dyn Target,
    pop: &ProposalPopulation,
    reps: usize,
    seed: u64,
) -> Result<ZStudy> {
    use crate::estimators::{identity, one_per_proposal_estimate, sm_estimate};
    use crate::weighting::WeightScheme;
    let d = pop.dim();
    let runs: Vec<Result<(f64, f64, f64)>> = (0..reps)
        .into_par_iter()
        .map(|r| {
            let base = RngStream::new(seed, r as u64);
            let mut rng = base.clone();
            let is = one_per_proposal_estimate(
                target,
                pop,
                WeightScheme::StandardIS,
                &mut rng,
                d,
                identity,
            )?;
            let mut rng = base.clone();
            let dm = one_per_proposal_estimate(
                target,
                pop,
                WeightScheme::DeterministicMixture,
                &mut rng,
                d,
                identity,
            )?;
            let mut rng = base.derive(1);
            let sm = sm_estimate(target, pop, pop.len(), &mut rng, d, identity)?;
            Ok((is.z_estimate()?, dm.z_estimate()?, sm.z_estimate()?))
        })
        .collect();
    let mut out = ZStudy {
        z_is: Vec::with_capacity(reps),
        z_dm: Vec::with_capacity(reps),
        z_sm: Vec::with_capacity(reps),
    };
    for r in runs {
        let (a, b, c) = r?;
        out.z_is.push(a);
        out.z_dm.push(b);
        out.z_sm.push(c);
    }
    Ok(out)
}

/// Mean, unbiased variance, and maximum of a sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleStats {
    pub mean: f64,
    pub variance: f64,
    pub max: f64,
    pub median: f64,
    /// Standard error of the mean.
    pub std_error: f64,
}

pub fn sample_stats(values: &[f64]) -> Result<SampleStats> {
    if values.is_empty() {
        return Err(PmcError::contract("statistics of an empty sample"));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let variance = if values.len() > 1 {
        values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let m = sorted.len();
    let median = if m % 2 == 1 {
        sorted[m / 2]
    } else {
        0.5 * (sorted[m / 2 - 1] + sorted[m / 2])
    };
    Ok(SampleStats {
        mean,
        variance,
        max: sorted[m - 1],
        median,
        std_error: (variance / n).sqrt(),
    })
}

/// Percentile 95% bootstrap interval of the sample variance.
pub fn bootstrap_variance_ci(
    values: &[f64],
    resamples: usize,
    rng: &mut RngStream,
) -> Result<(f64, f64)> {
    if values.len() < 2 || resamples == 0 {
        return Err(PmcError::contract(
            "variance bootstrap needs two values and resamples",
        ));
    }
    let n = values.len();
    let mut vars: Vec<f64> = (0..resamples)
        .map(|_| {
            let (mut s, mut ss) = (0.0, 0.0);
            for _ in 0..n {
                let v = values[rng.index(n)];
                s += v;
                ss += v * v;
            }
            let mean = s / n as f64;
            ((ss - n as f64 * mean * mean) / (n as f64 - 1.0)).max(0.0)
        })
        .collect();
    vars.sort_by(f64::total_cmp);
    let lo = vars[((resamples as f64 - 1.0) * 0.025).floor() as usize];
    let hi = vars[((resamples as f64 - 1.0) * 0.975).ceil() as usize];
    Ok((lo, hi))
}
