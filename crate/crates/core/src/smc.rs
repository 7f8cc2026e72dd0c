//! SMC-sampler baselines: importance weighting, resampling and a random-walk
//! Metropolis move per particle, optionally over a tempering ladder.
//!
//! Each iteration weights fresh draws against the current stage only; no
//! incremental stage-to-stage weight correction is carried over. Estimates
//! are accumulated on final-stage iterations only.

use std::sync::Arc;

use rand_distr::{Distribution, StandardNormal};

use crate::engine::{
    batch_ess, draw_and_weigh, finish_record, init_from_box, iterations_for, place, InitBox,
    Placement, RunFlags, RunRecord,
};
use crate::error::{PmcError, Result};
use crate::estimators::{identity, EstimatorAccumulator};
use crate::resampling::ResampleKernel;
use crate::rng::RngStream;
use crate::target::{CountingTarget, Target};
use crate::weighting::WeightScheme;

/// Intermediate targets ending at the target of interest.
#[derive(Clone)]
pub struct TemperingLadder {
    stages: Vec<Arc<dyn Target>>,
}

impl std::fmt::Debug for TemperingLadder {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TemperingLadder")
            .field("stages", &self.stages.len())
            .finish()
    }
}

impl TemperingLadder {
    /// The last stage is the true target.
    pub fn new(stages: Vec<Arc<dyn Target>>) -> Result<Self> {
        let last = stages
            .last()
            .ok_or_else(|| PmcError::config("a tempering ladder needs at least one stage"))?;
        let dim = last.dim();
        if stages.iter().any(|s| s.dim() != dim) {
            return Err(PmcError::config(
                "every ladder stage must share one dimension",
            ));
        }
        Ok(Self { stages })
    }

    pub fn untempered(target: Arc<dyn Target>) -> Self {
        Self {
            stages: vec![target],
        }
    }

    pub fn len(&self) -> usize {
        self.stages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stages.is_empty()
    }

    pub fn stage(&self, s: usize) -> &dyn Target {
        self.stages[s].as_ref()
    }

    pub fn target(&self) -> &dyn Target {
        self.stages[self.stages.len() - 1].as_ref()
    }

    /// Iterations per stage: `T / S` each, the remainder to the last stage.
    pub fn schedule(&self, iterations: usize) -> Vec<usize> {
        let s = self.stages.len();
        let base = iterations / s;
        let mut out = vec![base; s];
        out[s - 1] += iterations % s;
        out
    }
}

#[derive(Debug, Clone)]
pub struct SmcConfig {
    pub n_particles: usize,
    pub samples_per_particle: usize,
    pub budget: u64,
    pub sigma: f64,
    pub init_box: InitBox,
    pub kernel: ResampleKernel,
    pub weights: WeightScheme,
    pub placement: Placement,
    /// Metropolis moves per particle per iteration.
    pub mh_steps: usize,
    pub seed: u64,
    pub stream_id: u64,
}

impl SmcConfig {
    pub fn iterations(&self) -> Result<usize> {
        iterations_for(self.budget, self.n_particles, self.samples_per_particle)
    }

    pub fn validate(&self) -> Result<()> {
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

/// One random-walk Metropolis step from `x` whose stage log density is
/// `log_pi_x`. Returns the new point and its log density.
pub fn mh_step(
    x: &[f64],
    log_pi_x: f64,
    target: &mut CountingTarget<'_>,
    sigma: f64,
    rng: &mut RngStream,
) -> (Vec<f64>, f64) {
    let proposal: Vec<f64> = x
        .iter()
        .map(|v| {
            let z: f64 = StandardNormal.sample(rng);
            v + sigma * z
        })
        .collect();
    let log_pi_new = target.log_density(&proposal);
    let log_u = rng.uniform().ln();
    let accept = if log_pi_new == f64::NEG_INFINITY {
        false
    } else if log_pi_x == f64::NEG_INFINITY {
        true
    } else {
        log_u < log_pi_new - log_pi_x
    };
    if accept {
        (proposal, log_pi_new)
    } else {
        (x.to_vec(), log_pi_x)
    }
}

/// One random-walk Metropolis step under `target` with proposal `N(x, sigma^2 I)`.
pub fn mh_move(x: &[f64], target: &dyn Target, sigma: f64, rng: &mut RngStream) -> Vec<f64> {
    let mut counter = CountingTarget::new(target);
    let lp = counter.log_density(x);
    mh_step(x, lp, &mut counter, sigma, rng).0
}

pub fn run_smc(config: &SmcConfig, ladder: &TemperingLadder) -> Result<RunRecord> {
    config.validate()?;
    let target = ladder.target();
    if config.init_box.dim() != target.dim() {
        return Err(PmcError::config(format!(
            "init box has dimension {} but target has {}",
            config.init_box.dim(),
            target.dim()
        )));
    }
    let t_max = config.iterations()?;
    let n = config.n_particles;
    let k = config.samples_per_particle;
    let schedule = ladder.schedule(t_max);
    let final_stage = ladder.len() - 1;

    let mut rng = RngStream::new(config.seed, config.stream_id);
    let mut weigh_evals = 0u64;
    let mut mh_evals = 0u64;
    let mut acc = EstimatorAccumulator::new(target.dim());
    let mut pop = init_from_box(&config.init_box, n, config.sigma, &mut rng)?;
    let mut genealogy = Vec::new();
    let mut ess_trace = Vec::with_capacity(t_max);
    let mut flags = RunFlags {
        no_selection: config.placement == Placement::Local && k == 1,
        ..RunFlags::default()
    };

    let mut t = 0;
    for (s, &len) in schedule.iter().enumerate() {
        let stage = ladder.stage(s);
        for _ in 0..len {
            t += 1;
            let mut counter = CountingTarget::new(stage);
            let (samples, log_pi) = draw_and_weigh(&pop, k, config.weights, &mut counter, &mut rng);
            weigh_evals += counter.evals();
            if s == final_stage {
                acc.accumulate(&samples, identity);
            }
            ess_trace.push(batch_ess(&samples));
            if t == t_max {
                break;
            }

            let (resampled, reinit) = place(
                &samples,
                n,
                config.placement,
                config.kernel,
                &config.init_box,
                &mut rng,
            )?;
            if reinit {
                flags.reinitialized.push(t);
            }
            flags
                .degenerate_groups
                .extend(resampled.degenerate_groups.iter().map(|g| (t, *g)));

            let mut means = resampled.means;
            if config.mh_steps > 0 {
                let mut mover = CountingTarget::new(stage);
                for (i, x) in means.iter_mut().enumerate() {
                    let mut lp = if reinit {
                        mover.log_density(x)
                    } else {
                        let a = &resampled.ancestors[i];
                        log_pi[a.parent_proposal_index * k + a.parent_sample_k]
                    };
                    for _ in 0..config.mh_steps {
                        let (nx, nlp) = mh_step(x, lp, &mut mover, config.sigma, &mut rng);
                        *x = nx;
                        lp = nlp;
                    }
                }
                mh_evals += mover.evals();
            }
            genealogy.push(resampled.ancestors);
            pop = pop.with_means(means, t + 1)?;
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
        weigh_evals,
        mh_evals,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{run_pmc, PmcConfig, PmcScheme};
    use crate::gaussian::gaussian_log_density;
    use crate::target::FnTarget;
    use crate::targets::{make_mog3_nd_with_scale, make_mog5_2d};

    fn smc_config(k: usize, mh_steps: usize) -> SmcConfig {
        SmcConfig {
            n_particles: 10,
            samples_per_particle: k,
            budget: 2000,
            sigma: 5.0,
            init_box: InitBox::cube(2, -4.0, 4.0),
            kernel: ResampleKernel::Multinomial,
            weights: WeightScheme::DeterministicMixture,
            placement: Placement::Global,
            mh_steps,
            seed: 9,
            stream_id: 2,
        }
    }

    #[test]
    fn uphill_moves_always_accepted() {
        let target = FnTarget::new(1, |x| -x[0] * x[0]);
        let mut counter = CountingTarget::new(&target);
        let mut rng = RngStream::new(1, 0);
        for _ in 0..1000 {
            // Every proposal lies far above the current point's density.
            let (y, _) = mh_step(&[50.0], -1e300, &mut counter, 1.0, &mut rng);
            assert!(y[0] != 50.0);
        }
    }

    #[test]
    fn tiny_step_leaves_point() {
        let target = make_mog5_2d();
        let mut rng = RngStream::new(2, 0);
        let y = mh_move(&[1.0, 2.0], &target, 1e-30, &mut rng);
        assert!((y[0] - 1.0).abs() < 1e-10 && (y[1] - 2.0).abs() < 1e-10);
    }

    #[test]
    fn flat_target_accepts_everything() {
        let target = FnTarget::new(1, |x| {
            if x[0].abs() <= 1e6 {
                0.0
            } else {
                f64::NEG_INFINITY
            }
        });
        let mut rng = RngStream::new(3, 0);
        let mut counter = CountingTarget::new(&target);
        let mut x = vec![0.0];
        let mut accepted = 0;
        for _ in 0..10_000 {
            let (y, _) = mh_step(&x, 0.0, &mut counter, 1.0, &mut rng);
            if y != x {
                accepted += 1;
            }
            x = y;
        }
        assert_eq!(accepted, 10_000);
    }

    #[test]
    fn chain_matches_gaussian_moments() {
        let target = FnTarget::new(1, |x| gaussian_log_density(x, &[2.0], &[4.0]).unwrap());
        let mut rng = RngStream::new(4, 0);
        let mut counter = CountingTarget::new(&target);
        let mut x = vec![2.0];
        let mut lp = counter.log_density(&x);
        let (mut s, mut ss) = (0.0, 0.0);
        let n = 100_000;
        for _ in 0..n {
            let (y, l) = mh_step(&x, lp, &mut counter, 2.5, &mut rng);
            x = y;
            lp = l;
            s += x[0];
            ss += x[0] * x[0];
        }
        let mean = s / n as f64;
        let var = ss / n as f64 - mean * mean;
        // Autocorrelated chain: allow a generous effective-sample factor.
        assert!((mean - 2.0).abs() < 0.1, "{mean}");
        assert!((var - 4.0).abs() < 0.3, "{var}");
    }

    #[test]
    fn without_moves_matches_pmc() {
        let target: Arc<dyn Target> = Arc::new(make_mog5_2d());
        let cfg = smc_config(4, 0);
        let smc = run_smc(&cfg, &TemperingLadder::untempered(target.clone())).unwrap();
        let pmc = run_pmc(
            &PmcConfig {
                scheme: PmcScheme::GlobalResampling(4),
                n_proposals: cfg.n_particles,
                budget: cfg.budget,
                sigma: cfg.sigma,
                init_box: cfg.init_box.clone(),
                kernel: cfg.kernel,
                seed: cfg.seed,
                stream_id: cfg.stream_id,
            },
            target.as_ref(),
        )
        .unwrap();
        assert_eq!(smc, pmc);
    }

    #[test]
    fn mh_evaluations_are_counted_separately() {
        let target: Arc<dyn Target> = Arc::new(make_mog5_2d());
        let rec = run_smc(&smc_config(2, 1), &TemperingLadder::untempered(target)).unwrap();
        assert_eq!(rec.target_evals, 2000);
        assert_eq!(rec.mh_evals, 10 * (rec.iterations as u64 - 1));
    }

    #[test]
    fn ladder_schedule_and_final_stage_accumulation() {
        let stages: Vec<Arc<dyn Target>> = [16.0, 12.0, 9.0, 8.0]
            .iter()
            .map(|&xi| Arc::new(make_mog3_nd_with_scale(2, xi).unwrap()) as Arc<dyn Target>)
            .collect();
        let ladder = TemperingLadder::new(stages).unwrap();
        assert_eq!(ladder.schedule(10), vec![2, 2, 2, 4]);
        let rec = run_smc(&smc_config(1, 1), &ladder).unwrap();
        let t = rec.iterations;
        assert_eq!(rec.trace.len(), t - 3 * (t / 4));
        assert!(TemperingLadder::new(Vec::new()).is_err());
    }
}
