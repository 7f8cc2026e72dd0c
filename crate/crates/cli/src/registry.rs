//! Maps an experiment spec onto runnable grid cells.

use std::sync::Arc;

use pmc_core::diagnostics::{ExperimentCell, Sampler};
use pmc_core::targets::{
    make_ar4_target, make_mog3_nd, make_mog3_nd_with_scale, make_mog5_2d, make_sensor_target,
};
use pmc_core::{
    InitBox, Placement, PmcConfig, PmcScheme, SmcConfig, Target, TemperingLadder, WeightScheme,
};

use crate::config::{ExperimentId, ExperimentSpec, SchemeName};
use crate::CliError;

/// Component scales of the tempered ladder, widest first, ending at the target.
pub const TEMPERING_SCALES: [f64; 4] = [16.0, 12.0, 9.0, 8.0];

/// One cell plus the state dimension when the experiment sweeps it.
#[derive(Debug, Clone)]
pub struct GridCell {
    pub dim: Option<usize>,
    pub cell: ExperimentCell,
}

/// The target of an experiment; the data-driven ones depend on `seed`.
pub fn build_target(
    id: ExperimentId,
    dim: Option<usize>,
    seed: u64,
) -> Result<Arc<dyn Target>, CliError> {
    Ok(match id {
        ExperimentId::Mog5_2d => Arc::new(make_mog5_2d()),
        ExperimentId::Mog3Nd | ExperimentId::DimensionSweep => {
            Arc::new(make_mog3_nd(dim.unwrap_or(10))?)
        }
        ExperimentId::Ar4 => Arc::new(make_ar4_target(seed)?),
        ExperimentId::Sensors => Arc::new(make_sensor_target(seed)),
        ExperimentId::Zc1d | ExperimentId::VarianceOrdering => {
            return Err(CliError::Unsupported(format!("{id} has no sampler grid")))
        }
    })
}

fn tempered_ladder(dim: usize) -> Result<TemperingLadder, CliError> {
    let stages = TEMPERING_SCALES
        .iter()
        .map(|&xi| make_mog3_nd_with_scale(dim, xi).map(|t| Arc::new(t) as Arc<dyn Target>))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(TemperingLadder::new(stages)?)
}

#[allow(clippy::too_many_arguments)]
fn sampler(
    scheme: SchemeName,
    n: usize,
    k: usize,
    sigma: f64,
    spec: &ExperimentSpec,
    init_box: &InitBox,
    target: &Arc<dyn Target>,
    dim: usize,
) -> Result<Sampler, CliError> {
    let smc = |weights, placement, ladder| Sampler::Smc {
        config: SmcConfig {
            n_particles: n,
            samples_per_particle: k,
            budget: spec.budget,
            sigma,
            init_box: init_box.clone(),
            kernel: spec.kernel,
            weights,
            placement,
            mh_steps: spec.mh_steps,
            seed: spec.seed,
            stream_id: 0,
        },
        ladder,
    };
    let flat = || TemperingLadder::untempered(target.clone());
    let pmc = |scheme| {
        Sampler::Pmc(PmcConfig {
            scheme,
            n_proposals: n,
            budget: spec.budget,
            sigma,
            init_box: init_box.clone(),
            kernel: spec.kernel,
            seed: spec.seed,
            stream_id: 0,
        })
    };
    Ok(match scheme {
        SchemeName::Standard => pmc(PmcScheme::Standard),
        SchemeName::Dm => pmc(PmcScheme::DeterministicMixture),
        SchemeName::Gr => pmc(PmcScheme::GlobalResampling(k)),
        SchemeName::Lr => pmc(PmcScheme::LocalResampling(k)),
        SchemeName::Smc => smc(WeightScheme::StandardIS, Placement::Global, flat()),
        SchemeName::DmSmc | SchemeName::GrSmc => smc(
            WeightScheme::DeterministicMixture,
            Placement::Global,
            flat(),
        ),
        SchemeName::LrSmc => smc(WeightScheme::DeterministicMixture, Placement::Local, flat()),
        SchemeName::SmcTempered => smc(
            WeightScheme::StandardIS,
            Placement::Global,
            tempered_ladder(dim)?,
        ),
    })
}

/// Cells in output order: dimension, N, sigma, scheme, K.
///
/// Single-sample schemes contribute one cell with `K = 1` regardless of the
/// K list. Cells whose budget cannot cover one iteration are still returned;
/// the harness reports them as `*` rows.
pub fn build_cells(spec: &ExperimentSpec) -> Result<Vec<GridCell>, CliError> {
    if spec.experiment.is_z_study() {
        return Err(CliError::Unsupported(format!(
            "{} has no sampler grid",
            spec.experiment
        )));
    }
    let dims: Vec<Option<usize>> = if spec.dims.is_empty() {
        vec![None]
    } else {
        spec.dims.iter().map(|&d| Some(d)).collect()
    };
    let mut cells = Vec::new();
    for dim in dims {
        let target = build_target(spec.experiment, dim, spec.seed)?;
        let d = target.dim();
        let init_box = InitBox::cube(d, spec.init_lo, spec.init_hi);
        for &n in &spec.n {
            for &sigma in &spec.sigma {
                for &scheme in &spec.schemes {
                    let ks: &[usize] = if scheme.single_sample() {
                        &[1]
                    } else {
                        &spec.k
                    };
                    for &k in ks {
                        let sampler = sampler(scheme, n, k, sigma, spec, &init_box, &target, d)?;
                        cells.push(GridCell {
                            dim,
                            cell: ExperimentCell {
                                scheme: scheme.to_string(),
                                n,
                                k,
                                sigma,
                                budget: spec.budget,
                                sampler,
                                target: target.clone(),
                            },
                        });
                    }
                }
            }
        }
    }
    Ok(cells)
}
