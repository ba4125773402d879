mod common;

use common::*;
use mimobc::gradients::{self, finite_diff_design};
use mimobc::linalg::{self, c};
use mimobc::rates::{self, Design};
use mimobc::{GramEnsemble, Scenario};

fn pack_rel_err(a: &gradients::GradientPack, b: &gradients::GradientPack) -> f64 {
    let num: f64 = a.df.iter().zip(&b.df).chain(a.dp.iter().zip(&b.dp)).map(|(x, y)| linalg::frob2(&(x - y))).sum();
    let den: f64 = b.df.iter().chain(&b.dp).map(linalg::frob2).sum();
    (num / den).sqrt()
}

fn check_instance(seed: u64, users: usize) -> f64 {
    let mut r = rng(seed);
    let scenario = random_scenario(users, 2, 3.0, &mut r);
    let design = random_design(users, 2, 3.0, &mut r);
    let ens = frozen_ensembles(&scenario, 64, seed);
    let analytic = gradients::gradients(&design, &scenario, &ens).unwrap();
    let fd = finite_diff_design(|d| Ok(rates::lawsr(d, &scenario, &ens)?.weighted_sum), &design, 1e-6).unwrap();
    pack_rel_err(&analytic, &fd)
}

#[test]
fn analytic_gradients_match_finite_differences() {
    for seed in 0..24u64 {
        let users = 2 + (seed % 2) as usize;
        let e = check_instance(seed, users);
        assert!(e <= 1e-4, "seed {seed}, L = {users}: relative error {e:e}");
    }
}

#[test]
fn single_user_precoder_gradient() {
    let mut r = rng(77);
    let scenario = random_scenario(1, 2, 2.0, &mut r);
    let design = random_design(1, 2, 2.0, &mut r);
    let ens = frozen_ensembles(&scenario, 64, 3);
    let g = gradients::grad_p(0, &design, &scenario, &ens).unwrap();
    let fd = finite_diff_design(|d| rates::laar(0, d, &scenario, &ens[0]), &design, 1e-6).unwrap();
    assert!(rel_err(&g, &fd.dp[0]) <= 1e-4);
}

#[test]
fn first_user_assignment_gradient_is_zero() {
    let mut r = rng(5);
    let scenario = random_scenario(2, 2, 1.0, &mut r);
    let design = random_design(2, 2, 1.0, &mut r);
    let ens = frozen_ensembles(&scenario, 16, 5);
    assert_eq!(gradients::grad_f(0, &design, &scenario, &ens).unwrap(), linalg::zeros(2));
    assert_eq!(gradients::gradients(&design, &scenario, &ens).unwrap().df[0], linalg::zeros(2));
}

#[test]
fn zero_weights_give_zero_gradients() {
    let mut r = rng(6);
    let s = random_scenario(2, 2, 1.0, &mut r);
    let scenario = Scenario::new(s.models.clone(), vec![2.0, 0.0], 1.0, 1.0).unwrap();
    let zero = Scenario { weights: vec![0.0, 0.0], ..scenario.clone() };
    let design = random_design(2, 2, 1.0, &mut r);
    let ens = frozen_ensembles(&scenario, 16, 6);
    let g = gradients::gradients(&design, &zero, &ens).unwrap();
    assert!(g.df.iter().chain(&g.dp).all(|m| linalg::frob(m) == 0.0));
}

#[test]
fn stationary_assignment_for_single_atom() {
    let mut r = rng(8);
    let h = random_matrix(2, 1.0, &mut r);
    let scenario = Scenario::equal_weights(
        vec![mimobc::ChannelModel::deterministic(random_matrix(2, 1.0, &mut r)), mimobc::ChannelModel::deterministic(h.clone())],
        1.0,
        1.0,
    )
    .unwrap();
    let mut design = random_design(2, 2, 1.0, &mut r);
    let ens: Vec<GramEnsemble> = scenario.models.iter().map(|m| GramEnsemble::exact(m).unwrap()).collect();
    // A_l depends on F_l, so F_l = T_l(H) is solved by fixed-point iteration
    for _ in 0..200 {
        let pack = rates::CovariancePack::from_design(1, &design);
        design.f[1] = gradients::t_matrix(&linalg::gram_inner(&h), &pack, 1.0).unwrap();
    }
    let g = gradients::grad_f(1, &design, &scenario, &ens).unwrap();
    assert!(linalg::frob(&g) < 1e-10, "{}", linalg::frob(&g));
}

#[test]
fn directional_derivative_matches_conjugate_convention() {
    let mut r = rng(21);
    let scenario = random_scenario(2, 2, 2.0, &mut r);
    let design = random_design(2, 2, 2.0, &mut r);
    let ens = frozen_ensembles(&scenario, 64, 21);
    let g = gradients::gradients(&design, &scenario, &ens).unwrap();
    let df_dir = random_matrix(2, 1.0, &mut r);
    let dp_dir = random_matrix(2, 1.0, &mut r);
    let h = 1e-6;
    let shifted = |s: f64| {
        let mut d = design.clone();
        d.f[1] += &df_dir * c(s, 0.0);
        d.p[0] += &dp_dir * c(s, 0.0);
        rates::lawsr(&d, &scenario, &ens).unwrap().weighted_sum
    };
    let numeric = (shifted(h) - shifted(-h)) / (2.0 * h);
    let analytic = 2.0 * (linalg::re_inner(&g.df[1], &df_dir) + linalg::re_inner(&g.dp[0], &dp_dir));
    assert!((numeric - analytic).abs() <= 1e-6 * analytic.abs().max(1.0), "{numeric} vs {analytic}");
}

#[test]
fn zero_weight_user_enters_only_as_interference() {
    let mut r = rng(31);
    let base = random_scenario(3, 2, 2.0, &mut r);
    let scenario = Scenario::new(base.models.clone(), vec![1.5, 1.5, 0.0], 2.0, 1.0).unwrap();
    let design = random_design(3, 2, 2.0, &mut r);
    let ens = frozen_ensembles(&scenario, 32, 31);
    let g = gradients::gradients(&design, &scenario, &ens).unwrap();
    assert_eq!(g.df[2], linalg::zeros(2));
    // the last user's precoder gradient comes only from the interference it causes
    assert!(linalg::frob(&g.dp[2]) > 0.0);
    let fd = finite_diff_design(|d| Ok(rates::lawsr(d, &scenario, &ens)?.weighted_sum), &design, 1e-6).unwrap();
    for l in 0..3 {
        assert!(rel_err(&g.dp[l], &fd.dp[l]) < 1e-4);
    }
    assert!(rel_err(&g.df[1], &fd.df[1]) < 1e-4);

    // dropping the user changes the gradients of the others
    let two = Scenario::new(base.models[..2].to_vec(), vec![1.0, 1.0], 2.0, 1.0).unwrap();
    let reduced = Design::new(design.f[..2].to_vec(), design.p[..2].to_vec()).unwrap();
    let g2 = gradients::gradients(&reduced, &two, &ens[..2]).unwrap();
    assert!(rel_err(&g2.dp[0], &(&g.dp[0] * c(1.0 / 1.5, 0.0))) > 1e-3);
}
