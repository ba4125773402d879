mod common;

use common::*;
use mimobc::baselines::waterfill_covariance;
use mimobc::chanmodels::{ChannelModel, GramEnsemble, Scenario};
use mimobc::linalg::{self, c, ComplexMatrix, HermitianPsd};
use mimobc::optim::{self, sampling, Alg1Params, Alg2Params};
use mimobc::rates::{self, Design};
use proptest::prelude::*;

fn single_user_value(rg: &ComplexMatrix, sigma: &ComplexMatrix) -> f64 {
    linalg::ln_det_shifted_product(rg, sigma, 1.0, "R S + I").unwrap()
}

#[test]
fn single_user_algorithm2_is_water_filling() {
    let mut r = rng(31);
    for power in [0.1, 1.0, 10.0, 100.0] {
        let s = Scenario::equal_weights(vec![random_kronecker(2, 2, &mut r)], power, 1.0).unwrap();
        let rg = s.second_order_stats()[0].matrix().clone();
        let alg2 = optim::algorithm2(&s, &Alg2Params::default()).unwrap();
        let sigma = &alg2.design.sigmas()[0];

        // grid over the split between the two eigenmodes of R_g
        let (_, vecs) = linalg::eigh(&rg);
        let grid_best = (0..=4000)
            .map(|i| {
                let a = power * i as f64 / 4000.0;
                let d = linalg::diag(&[a, power - a]);
                single_user_value(&rg, &(&vecs * d * vecs.adjoint()))
            })
            .fold(f64::NEG_INFINITY, f64::max);
        let got = single_user_value(&rg, sigma);
        assert!(got >= grid_best - 1e-6, "P = {power}: {got} < grid {grid_best}");
        let wf = waterfill_covariance(&rg, power, 1.0);
        assert!((got - single_user_value(&rg, &wf)).abs() < 1e-7);
    }
}

fn scalar_scenario(r: &[f64], power: f64) -> Scenario {
    let models = r
        .iter()
        .map(|&x| ChannelModel::kronecker(HermitianPsd::identity(1), HermitianPsd::new(linalg::scaled_identity(1, x)).unwrap()))
        .collect();
    Scenario::equal_weights(models, power, 1.0).unwrap()
}

#[test]
fn single_antenna_power_goes_to_the_strongest_user() {
    for (r, best) in [([0.5, 2.0, 1.0], 1), ([3.0, 1.0, 2.9], 0), ([0.2, 0.3, 0.4], 2)] {
        let s = scalar_scenario(&r, 7.0);
        let d = optim::algorithm2(&s, &Alg2Params::default()).unwrap().design;
        let powers: Vec<f64> = d.sigmas().iter().map(linalg::trace_re).collect();
        for (l, p) in powers.iter().enumerate() {
            if l == best {
                assert!((p - 7.0).abs() <= 4.0 * f64::EPSILON * 7.0, "r = {r:?}");
            } else {
                assert_eq!(*p, 0.0, "r = {r:?}");
            }
        }
    }
}

#[test]
fn white_channels_reach_the_ceiling() {
    for users in [2, 3] {
        let s = Scenario::equal_weights(vec![ChannelModel::iid(2, 2); users], 10.0, 1.0).unwrap();
        let alg2 = optim::algorithm2(&s, &Alg2Params::default()).unwrap();
        assert!((alg2.bound - rates::iid_sum_rate_bound(&s)).abs() < 1e-9);
    }
}

#[test]
fn algorithm2_is_deterministic_and_feasible() {
    let mut r = rng(32);
    let s = random_scenario(3, 3, 6.0, &mut r);
    let a = optim::algorithm2(&s, &Alg2Params::default()).unwrap();
    let b = optim::algorithm2(&s, &Alg2Params::default()).unwrap();
    assert_eq!(a.design, b.design);
    assert!(a.design.is_feasible(s.power));
    assert!((a.design.total_power() - s.power).abs() < 1e-9 * s.power);
    let again = optim::regularize_covariances(&a.design.sigmas(), s.power);
    for (x, y) in again.iter().zip(a.design.sigmas()) {
        assert!(linalg::frob(&(x - &y)) < 1e-12 * s.power);
    }
}

#[test]
fn algorithm2_bound_matches_simplified_bound_sum() {
    let mut r = rng(33);
    let s = random_scenario(2, 2, 3.0, &mut r);
    let a = optim::algorithm2(&s, &Alg2Params::default()).unwrap();
    let sigmas = a.design.sigmas();
    let sum: f64 = (0..2).map(|l| s.weights[l] * rates::simplified_upper_bound(l, &sigmas, &s).unwrap()).sum();
    assert!((sum - a.bound).abs() < 1e-10);
}

#[test]
fn scalar_algorithm1_reaches_full_power() {
    let s = Scenario::equal_weights(vec![ChannelModel::iid(1, 1)], 4.0, 1.0).unwrap();
    let init = Design::new(vec![linalg::zeros(1)], vec![linalg::scaled_identity(1, 0.3)]).unwrap();
    let ens = s.draw_ensembles(2000, 3);
    let (d, trace) = optim::algorithm1_with(&init, &s, &ens, &Alg1Params::default()).unwrap();
    assert!(trace.is_nondecreasing());
    assert!((d.total_power() - 4.0).abs() < 1e-9);
    let full = Design::new(vec![linalg::zeros(1)], vec![linalg::scaled_identity(1, 2.0)]).unwrap();
    let best = rates::lawsr(&full, &s, &ens).unwrap().weighted_sum;
    assert!((trace.final_objective().unwrap() - best).abs() < 1e-9);
}

#[test]
fn algorithm1_does_not_lose_against_its_start() {
    let s = mimobc::harness::load_fixture("example2").unwrap().with_snr_db(10.0);
    let init = optim::algorithm2(&s, &Alg2Params::default()).unwrap().design;
    let ens = s.draw_ensembles(1000, 4);
    let start = rates::lawsr(&init, &s, &ens).unwrap().weighted_sum;
    let (d, trace) = optim::algorithm1_with(&init, &s, &ens, &Alg1Params::default()).unwrap();
    assert!(rates::lawsr(&d, &s, &ens).unwrap().weighted_sum >= start);
    assert_eq!(trace.iterations[0].objective, start);
}

#[test]
fn algorithm1_rejects_bad_inputs() {
    let mut r = rng(34);
    let s = random_scenario(2, 2, 1.0, &mut r);
    let too_big = random_design(2, 2, 2.0, &mut r);
    assert!(matches!(optim::algorithm1(&too_big, &s, &Alg1Params::default()), Err(mimobc::Error::Precondition(_))));
    let ok = random_design(2, 2, 1.0, &mut r);
    let bad = Alg1Params { beta: 1.0, ..Alg1Params::default() };
    assert!(matches!(optim::algorithm1(&ok, &s, &bad), Err(mimobc::Error::Validation(_))));
}

#[test]
fn multi_start_is_reproducible() {
    let mut r = rng(35);
    let s = random_scenario(2, 2, 2.0, &mut r);
    let a = optim::multi_start(&s, 4, 9).unwrap();
    let b = optim::multi_start(&s, 4, 9).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.len(), 4);
    assert!(a.iter().all(|d| d.is_feasible(s.power)));
    assert_ne!(optim::multi_start(&s, 4, 10).unwrap()[1], a[1]);
}

#[test]
fn stricter_threshold_needs_at_least_as_many_samples() {
    let s = mimobc::harness::load_fixture("example1").unwrap().with_snr_db(10.0);
    let design = optim::algorithm2(&s, &Alg2Params::default()).unwrap().design;
    let full = s.draw_ensembles(20 * 200, 5);
    let count = |alpha: f64| {
        sampling::select_sample_count(
            |n| {
                let ens: Vec<GramEnsemble> = full.iter().map(|e| e.prefix(n)).collect();
                Ok(sampling::SampleEstimate::value(rates::lawsr(&design, &s, &ens)?.weighted_sum))
            },
            200,
            alpha,
            1.0,
        )
        .unwrap()
        .count
    };
    let loose = count(0.5);
    let tight = count(0.01);
    assert!(tight >= loose, "{tight} < {loose}");
    assert_eq!(loose % 200, 0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn algorithm1_traces_are_monotone(seed in any::<u64>()) {
        let mut r = rng(seed);
        let s = random_scenario(2, 2, 5.0, &mut r);
        let init = random_design(2, 2, 5.0, &mut r);
        let ens = s.draw_ensembles(200, seed);
        let params = Alg1Params { n_max: 15, ..Alg1Params::default() };
        let (d, trace) = optim::algorithm1_with(&init, &s, &ens, &params).unwrap();
        prop_assert!(trace.is_nondecreasing());
        prop_assert!(trace.outer_iterations() <= 15);
        prop_assert!(d.is_feasible(s.power));
    }

    #[test]
    fn projection_respects_the_budget(seed in any::<u64>(), budget in 0.1f64..50.0) {
        let mut r = rng(seed);
        let p: Vec<ComplexMatrix> = (0..3).map(|_| random_matrix(2, 3.0, &mut r)).collect();
        let q = optim::power_projection(&p, budget);
        prop_assert!(optim::total_power(&q) <= budget * (1.0 + 1e-12));
        let scale = q[0][(0, 0)] / p[0][(0, 0)];
        for (a, b) in p.iter().zip(&q) {
            prop_assert!(linalg::frob(&(a * c(scale.re, 0.0) - b)) < 1e-9 * linalg::frob(a).max(1.0));
        }
    }
}
