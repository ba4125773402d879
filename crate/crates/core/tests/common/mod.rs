#![allow(dead_code)]

use mimobc::chanmodels::{white_gaussian, ChannelModel, GramEnsemble, Scenario};
use mimobc::linalg::{self, c, ComplexMatrix, HermitianPsd};
use mimobc::rates::Design;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Well-conditioned random Hermitian positive definite matrix.
pub fn random_pd(n: usize, rng: &mut ChaCha8Rng) -> ComplexMatrix {
    let g = white_gaussian(n, n, rng);
    linalg::gram_outer(&g) + linalg::scaled_identity(n, 0.2)
}

/// PSD matrix of the given rank.
pub fn random_psd_rank(n: usize, rank: usize, rng: &mut ChaCha8Rng) -> ComplexMatrix {
    let g = white_gaussian(n, rank, rng);
    linalg::gram_outer(&g)
}

pub fn random_kronecker(n_r: usize, n_t: usize, rng: &mut ChaCha8Rng) -> ChannelModel {
    let rr = HermitianPsd::new(random_pd(n_r, rng)).unwrap();
    let rt = HermitianPsd::new(random_pd(n_t, rng)).unwrap();
    ChannelModel::kronecker(rr, rt).normalized().unwrap()
}

pub fn random_scenario(users: usize, n: usize, power: f64, rng: &mut ChaCha8Rng) -> Scenario {
    let models = (0..users).map(|_| random_kronecker(n, n, rng)).collect();
    let mut w: Vec<f64> = (0..users).map(|_| rng.random_range(0.3..1.7)).collect();
    let s: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x *= users as f64 / s);
    Scenario::new(models, w, power, 1.0).unwrap()
}

pub fn random_matrix(n: usize, scale: f64, rng: &mut ChaCha8Rng) -> ComplexMatrix {
    white_gaussian(n, n, rng) * c(scale, 0.0)
}

/// Random design with full-rank precoders at total power `power`.
pub fn random_design(users: usize, n: usize, power: f64, rng: &mut ChaCha8Rng) -> Design {
    let p: Vec<ComplexMatrix> = (0..users)
        .map(|_| white_gaussian(n, n, rng) + linalg::scaled_identity(n, 0.5))
        .collect();
    let total: f64 = p.iter().map(linalg::frob2).sum();
    let s = (power / total).sqrt();
    let f = (0..users).map(|_| random_matrix(n, 0.4, rng)).collect();
    Design::new(f, p.into_iter().map(|x| x * c(s, 0.0)).collect()).unwrap()
}

/// Finite-support channel law with `atoms` random atoms.
pub fn random_finite_support(n_r: usize, n_t: usize, atoms: usize, rng: &mut ChaCha8Rng) -> ChannelModel {
    let mut ws: Vec<f64> = (0..atoms).map(|_| rng.random_range(0.1..1.0)).collect();
    let s: f64 = ws.iter().sum();
    ws.iter_mut().for_each(|w| *w /= s);
    let last: f64 = 1.0 - ws[..atoms - 1].iter().sum::<f64>();
    ws[atoms - 1] = last;
    ChannelModel::finite_support(ws.into_iter().map(|w| (white_gaussian(n_r, n_t, rng), w)).collect()).unwrap()
}

pub fn frozen_ensembles(scenario: &Scenario, samples: usize, seed: u64) -> Vec<GramEnsemble> {
    scenario.draw_ensembles(samples, seed)
}

pub fn rel_err(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    linalg::frob(&(a - b)) / linalg::frob(b).max(1e-300)
}
