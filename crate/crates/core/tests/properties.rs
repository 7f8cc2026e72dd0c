//! Randomized property checks of the weighting, estimation and resampling layers.

use pmc_core::diagnostics::{survival_rate, Genealogy};
use pmc_core::estimators::{identity, one_per_proposal_estimate};
use pmc_core::resampling::resample_indices;
use pmc_core::targets::make_mog5_2d;
use pmc_core::weighting::{
    dm_log_weight, ess_hat, log_sum_exp, normalize_weights, standard_log_weight,
};
use pmc_core::{
    gaussian_log_density, run_pmc, EstimatorAccumulator, GaussianProposal, InitBox, PmcConfig,
    PmcScheme, ProposalPopulation, ResampleKernel, RngStream, WeightScheme,
};
use proptest::prelude::*;

fn log_weights() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-500.0f64..500.0, 1..64)
}

fn population(dim: usize) -> impl Strategy<Value = ProposalPopulation> {
    prop::collection::vec(
        (
            prop::collection::vec(-10.0f64..10.0, dim),
            prop::collection::vec(0.2f64..20.0, dim),
        ),
        1..6,
    )
    .prop_map(|ps| {
        let proposals = ps
            .into_iter()
            .map(|(m, v)| GaussianProposal::new(m, v).unwrap())
            .collect();
        ProposalPopulation::new(proposals, 0).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn gaussian_density_matches_closed_form(
        x in prop::collection::vec(-20.0f64..20.0, 3),
        mean in prop::collection::vec(-20.0f64..20.0, 3),
        var in prop::collection::vec(0.01f64..50.0, 3),
    ) {
        let direct: f64 = (0..3)
            .map(|d| {
                let z = (x[d] - mean[d]).powi(2) / var[d];
                -0.5 * (z + (2.0 * std::f64::consts::PI * var[d]).ln())
            })
            .sum();
        let got = gaussian_log_density(&x, &mean, &var).unwrap();
        prop_assert!((got - direct).abs() <= 1e-10 * (1.0 + direct.abs()));
    }
}

proptest! {
    #[test]
    fn normalized_weights_form_a_distribution(lw in log_weights()) {
        let w = normalize_weights(&lw).unwrap();
        prop_assert!((w.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        prop_assert!(w.iter().all(|v| *v >= 0.0));
        let ess = ess_hat(&w).unwrap();
        prop_assert!(ess >= 1.0 - 1e-9 && ess <= lw.len() as f64 + 1e-9);
        let lse = log_sum_exp(&lw);
        for (wi, li) in w.iter().zip(&lw) {
            prop_assert!((wi - (li - lse).exp()).abs() <= 1e-12);
        }
    }

    #[test]
    fn mixture_weight_is_below_mean_standard_weight(
        pop in population(2),
        x in prop::collection::vec(-15.0f64..15.0, 2),
    ) {
        let target = make_mog5_2d();
        let dm = dm_log_weight(&x, &pop, &target).unwrap();
        let is: Vec<f64> = (0..pop.len())
            .map(|i| standard_log_weight(&x, i, &pop, &target).unwrap())
            .collect();
        let log_mean_is = log_sum_exp(&is) - (pop.len() as f64).ln();
        prop_assert!(dm <= log_mean_is + 1e-10);
    }

    #[test]
    fn estimates_ignore_sample_order(
        xs in prop::collection::vec((prop::collection::vec(-5.0f64..5.0, 2), -30.0f64..30.0), 2..40),
        rot in 0usize..40,
    ) {
        let run = |order: &[(Vec<f64>, f64)]| {
            let mut acc = EstimatorAccumulator::new(2);
            let mut f = identity;
            for (x, lw) in order {
                acc.push(x, *lw, &mut f);
            }
            (acc.log_z_estimate().unwrap(), acc.self_normalized_estimate().unwrap())
        };
        let mut permuted = xs.clone();
        permuted.rotate_left(rot % xs.len());
        permuted.reverse();
        let (za, ia) = run(&xs);
        let (zb, ib) = run(&permuted);
        prop_assert!((za - zb).abs() <= 1e-10);
        for (a, b) in ia.iter().zip(&ib) {
            prop_assert!((a - b).abs() <= 1e-9 * (1.0 + a.abs()));
        }
    }

    #[test]
    fn resampling_never_selects_zero_weights(
        raw in prop::collection::vec(prop_oneof![Just(0.0), 0.01f64..1.0], 1..30),
        count in 1usize..50,
        seed in any::<u64>(),
        kernel in prop_oneof![
            Just(ResampleKernel::Multinomial),
            Just(ResampleKernel::Residual),
            Just(ResampleKernel::Stratified)
        ],
    ) {
        prop_assume!(raw.iter().any(|w| *w > 0.0));
        let total: f64 = raw.iter().sum();
        let w: Vec<f64> = raw.iter().map(|v| v / total).collect();
        let idx = resample_indices(kernel, &w, count, &mut RngStream::new(seed, 0)).unwrap();
        prop_assert_eq!(idx.len(), count);
        prop_assert!(idx.iter().all(|&i| w[i] > 0.0));
    }
}

#[test]
fn resampling_counts_are_unbiased() {
    let w = [0.05, 0.15, 0.3, 0.5];
    let count = 20;
    let reps = 20_000;
    for (s, kernel) in [
        ResampleKernel::Multinomial,
        ResampleKernel::Residual,
        ResampleKernel::Stratified,
    ]
    .into_iter()
    .enumerate()
    {
        let mut rng = RngStream::new(3, s as u64);
        let mut totals = [0.0; 4];
        for _ in 0..reps {
            for i in resample_indices(kernel, &w, count, &mut rng).unwrap() {
                totals[i] += 1.0;
            }
        }
        for (t, p) in totals.iter().zip(w) {
            let mean = t / reps as f64;
            let expected = p * count as f64;
            // Multinomial counts have the largest spread, sqrt(count p (1-p)) per draw.
            let se = (count as f64 * p * (1.0 - p) / reps as f64).sqrt();
            assert!(
                (mean - expected).abs() <= 5.0 * se,
                "{kernel:?}: {mean} vs {expected}"
            );
        }
    }
}

#[test]
fn dm_estimate_is_unbiased_on_a_small_population() {
    let target = make_mog5_2d();
    let pop = ProposalPopulation::isotropic(
        vec![vec![0.0, 0.0], vec![-5.0, 8.0], vec![4.0, -4.0]],
        5.0,
        0,
    )
    .unwrap();
    let reps = 20_000;
    let mut zs = Vec::with_capacity(reps);
    for r in 0..reps {
        let mut rng = RngStream::new(8, r as u64);
        let acc = one_per_proposal_estimate(
            &target,
            &pop,
            WeightScheme::DeterministicMixture,
            &mut rng,
            2,
            identity,
        )
        .unwrap();
        zs.push(acc.z_estimate().unwrap());
    }
    let mean = zs.iter().sum::<f64>() / reps as f64;
    let var = zs.iter().map(|z| (z - mean).powi(2)).sum::<f64>() / (reps as f64 - 1.0);
    assert!(
        (mean - 1.0).abs() <= 4.0 * (var / reps as f64).sqrt(),
        "mean {mean}"
    );
}

#[test]
fn survival_is_non_increasing_in_lag() {
    let target = make_mog5_2d();
    for (s, scheme) in [
        PmcScheme::Standard,
        PmcScheme::GlobalResampling(5),
        PmcScheme::LocalResampling(5),
    ]
    .into_iter()
    .enumerate()
    {
        let config = PmcConfig {
            scheme,
            n_proposals: 50,
            budget: 10_000,
            sigma: 5.0,
            init_box: InitBox::cube(2, -4.0, 4.0),
            kernel: ResampleKernel::Multinomial,
            seed: 4,
            stream_id: s as u64,
        };
        let gen = Genealogy::from_record(&run_pmc(&config, &target).unwrap()).unwrap();
        let rates: Vec<f64> = (1..=5)
            .map(|lag| survival_rate(&gen, lag).unwrap())
            .collect();
        for pair in rates.windows(2) {
            assert!(pair[1] <= pair[0] + 1e-12, "{scheme:?}: {rates:?}");
        }
    }
}
