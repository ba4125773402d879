//! Linear-assignment achievable rates (LAAR), their weighted sum (LAWSR) and the
//! associated upper bounds.
//!
//! Per channel draw only the Gram matrix `K = H^H H` is needed:
//! `H^H (H Sigma_T H^H + N0 I)^{-1} H = (K Sigma_T + N0 I)^{-1} K`, where `Sigma_T`
//! is the total transmit covariance (`B_l + Sigma_after,l` for every user).

use std::f64::consts::{LN_2, LOG2_E};

use crate::chanmodels::{GramEnsemble, Scenario};
use crate::error::{Error, Result};
use crate::linalg::{self, c, ComplexMatrix};

/// Relative eigenvalue floor below which a covariance is treated as singular.
pub const SINGULAR_REL_TOL: f64 = 1e-10;

/// Decision variables: linear-assignment matrices `F_l` and precoder factors `P_l`.
#[derive(Debug, Clone, PartialEq)]
pub struct Design {
    pub f: Vec<ComplexMatrix>,
    pub p: Vec<ComplexMatrix>,
}

impl Design {
    /// Checks shapes and finiteness. `F_1` is forced to zero.
    pub fn new(mut f: Vec<ComplexMatrix>, p: Vec<ComplexMatrix>) -> Result<Self> {
        if f.len() != p.len() || p.is_empty() {
            return Err(Error::Validation(format!(
                "design has {} F-matrices and {} precoders",
                f.len(),
                p.len()
            )));
        }
        let n = p[0].nrows();
        for (l, (fl, pl)) in f.iter().zip(&p).enumerate() {
            if fl.shape() != (n, n) || pl.shape() != (n, n) {
                return Err(Error::Validation(format!("user {} matrices must be {n}x{n}", l + 1)));
            }
            if !linalg::is_finite(fl) || !linalg::is_finite(pl) {
                return Err(Error::Validation(format!("user {} matrices have non-finite entries", l + 1)));
            }
        }
        f[0] = linalg::zeros(n);
        Ok(Design { f, p })
    }

    /// Design built from covariances via Hermitian square roots.
    pub fn from_covariances(f: Vec<ComplexMatrix>, sigmas: &[ComplexMatrix]) -> Result<Self> {
        Self::new(f, sigmas.iter().map(linalg::psd_sqrt).collect())
    }

    pub fn users(&self) -> usize {
        self.p.len()
    }

    pub fn n_t(&self) -> usize {
        self.p[0].nrows()
    }

    /// `Sigma_l = P_l P_l^H`.
    pub fn sigmas(&self) -> Vec<ComplexMatrix> {
        self.p.iter().map(linalg::gram_outer).collect()
    }

    pub fn total_power(&self) -> f64 {
        self.p.iter().map(linalg::frob2).sum()
    }

    pub fn is_feasible(&self, budget: f64) -> bool {
        self.total_power() <= budget * (1.0 + 1e-9)
    }

    /// A user whose precoder is exactly zero carries no signal and has rate zero.
    pub fn is_active(&self, l: usize) -> bool {
        self.p[l].iter().any(|z| *z != c(0.0, 0.0))
    }
}

/// Covariance blocks of user `l` derived from a design.
#[derive(Debug, Clone)]
pub struct CovariancePack {
    pub sigma: ComplexMatrix,
    /// Sum of covariances of users encoded before `l` (known interference).
    pub sigma_s: ComplexMatrix,
    /// Sum of covariances of users encoded after `l`.
    pub sigma_after: ComplexMatrix,
    pub a: ComplexMatrix,
    pub b: ComplexMatrix,
    pub c: ComplexMatrix,
}

impl CovariancePack {
    pub fn new(l: usize, f_l: &ComplexMatrix, sigmas: &[ComplexMatrix]) -> Self {
        let n = sigmas[0].nrows();
        let sum = |range: &[ComplexMatrix]| range.iter().fold(linalg::zeros(n), |acc, s| acc + s);
        let sigma = sigmas[l].clone();
        let sigma_s = sum(&sigmas[..l]);
        let sigma_after = sum(&sigmas[l + 1..]);
        let a = f_l * &sigma_s + &sigma;
        let b = &sigma_s + &sigma;
        let cm = linalg::hermitian_part(&(f_l * &sigma_s * f_l.adjoint() + &sigma));
        CovariancePack {
            sigma,
            sigma_s,
            sigma_after,
            a,
            b,
            c: cm,
        }
    }

    pub fn from_design(l: usize, design: &Design) -> Self {
        Self::new(l, &design.f[l], &design.sigmas())
    }

    /// `Sigma_T = B_l + Sigma_after,l`.
    pub fn total(&self) -> ComplexMatrix {
        &self.b + &self.sigma_after
    }

    /// `D_l = B_l - A_l^H C_l^{-1} A_l`.
    pub fn d(&self) -> Result<ComplexMatrix> {
        let c_inv = linalg::inverse_hpd(&self.c, "C_l").map_err(|_| Error::Precondition("C_l is singular".into()))?;
        Ok(linalg::hermitian_part(&(&self.b - self.a.adjoint() * c_inv * &self.a)))
    }
}

/// Per-draw quantities shared by rate and gradient evaluation.
#[derive(Debug, Clone)]
pub struct SampleState {
    /// `T_l(H) = A_l H^H [H Sigma_T H^H + N0 I]^{-1} H`.
    pub t: ComplexMatrix,
    /// `Sigma_{u|y,H}^{-1}`.
    pub q: ComplexMatrix,
    /// `ln det Sigma_{u|y,H}`.
    pub ln_det: f64,
}

/// `(K Sigma_T + N0 I)^{-1} K`, Hermitian.
pub fn noise_whitened_gram(gram: &ComplexMatrix, total: &ComplexMatrix, noise: f64) -> Result<ComplexMatrix> {
    let n = gram.nrows();
    let mut m = gram * total;
    for i in 0..n {
        m[(i, i)] += c(noise, 0.0);
    }
    let solved = m
        .lu()
        .solve(gram)
        .ok_or_else(|| Error::numerical("received-signal covariance is singular"))?;
    Ok(linalg::hermitian_part(&solved))
}

pub fn sample_state(gram: &ComplexMatrix, pack: &CovariancePack, noise: f64) -> Result<SampleState> {
    let nw = noise_whitened_gram(gram, &pack.total(), noise)?;
    let t = &pack.a * nw;
    let cond = &pack.c - &t * pack.a.adjoint();
    let (ln_det, q) = linalg::ln_det_inverse_hpd(&cond, "conditional covariance Sigma_{u|y,H}")?;
    Ok(SampleState { t, q, ln_det })
}

/// `ln det Sigma_{u|y,H}` only.
pub fn conditional_ln_det(gram: &ComplexMatrix, pack: &CovariancePack, noise: f64) -> Result<f64> {
    let nw = noise_whitened_gram(gram, &pack.total(), noise)?;
    let cond = &pack.c - &pack.a * nw * pack.a.adjoint();
    linalg::ln_det_hpd(&cond, "conditional covariance Sigma_{u|y,H}")
}

/// Rejects covariances whose smallest eigenvalue is below `1e-10 tr/N_t`.
pub fn require_nonsingular(sigma: &ComplexMatrix, what: &str) -> Result<()> {
    let tr = linalg::trace_re(sigma);
    let floor = SINGULAR_REL_TOL * tr / sigma.nrows() as f64;
    if !(tr > 0.0) || linalg::min_eigenvalue(sigma) < floor {
        return Err(Error::Precondition(format!("{what} is singular")));
    }
    Ok(())
}

/// Per-user rates and their weighted sum.
#[derive(Debug, Clone, PartialEq)]
pub struct RateReport {
    pub per_user_rate: Vec<f64>,
    pub per_user_stderr: Vec<f64>,
    pub weighted_sum: f64,
    pub mc_stderr: f64,
    pub samples_used: usize,
}

impl RateReport {
    /// Combines per-user `(rate, stderr)` pairs; users are drawn independently.
    pub fn from_parts(parts: &[(f64, f64)], weights: &[f64], samples_used: usize) -> Self {
        let per_user_rate: Vec<f64> = parts.iter().map(|p| p.0).collect();
        let per_user_stderr: Vec<f64> = parts.iter().map(|p| p.1).collect();
        let weighted_sum = per_user_rate.iter().zip(weights).map(|(r, w)| r * w).sum();
        let mc_stderr = per_user_stderr
            .iter()
            .zip(weights)
            .map(|(s, w)| (s * w).powi(2))
            .sum::<f64>()
            .sqrt();
        RateReport {
            per_user_rate,
            per_user_stderr,
            weighted_sum,
            mc_stderr,
            samples_used,
        }
    }
}

fn samples_used(ensembles: &[GramEnsemble]) -> usize {
    ensembles.iter().map(GramEnsemble::samples_used).max().unwrap_or(0)
}

fn check_ensembles(ensembles: &[GramEnsemble], scenario: &Scenario) -> Result<()> {
    if ensembles.len() != scenario.users() {
        return Err(Error::Validation(format!(
            "{} ensembles for {} users",
            ensembles.len(),
            scenario.users()
        )));
    }
    for (l, e) in ensembles.iter().enumerate() {
        if e.is_empty() {
            return Err(Error::Validation(format!("user {} has no channel samples", l + 1)));
        }
        if e.grams()[0].nrows() != scenario.n_t {
            return Err(Error::Validation(format!("user {} samples have the wrong transmit dimension", l + 1)));
        }
    }
    Ok(())
}

/// LAAR of user `l` with its Monte-Carlo standard error.
pub fn laar_with_stderr(l: usize, design: &Design, scenario: &Scenario, ensemble: &GramEnsemble) -> Result<(f64, f64)> {
    let sigmas = design.sigmas();
    require_nonsingular(&sigmas[l], &format!("Sigma_{}", l + 1))?;
    let pack = CovariancePack::new(l, &design.f[l], &sigmas);
    let ln_det_sigma = linalg::ln_det_hpd(&pack.sigma, "Sigma_l")?;
    let (mean, se) = ensemble.expect(|k| conditional_ln_det(k, &pack, scenario.noise))?;
    Ok(((ln_det_sigma - mean) * LOG2_E, se * LOG2_E))
}

/// `log2 det Sigma_l - E[log2 det Sigma_{u_l|y_l,H_l}]`.
pub fn laar(l: usize, design: &Design, scenario: &Scenario, ensemble: &GramEnsemble) -> Result<f64> {
    laar_with_stderr(l, design, scenario, ensemble).map(|r| r.0)
}

/// Weighted sum of LAARs. Inactive users (zero precoder) contribute rate zero.
pub fn lawsr(design: &Design, scenario: &Scenario, ensembles: &[GramEnsemble]) -> Result<RateReport> {
    check_ensembles(ensembles, scenario)?;
    let parts = (0..scenario.users())
        .map(|l| {
            if design.is_active(l) {
                laar_with_stderr(l, design, scenario, &ensembles[l])
            } else {
                Ok((0.0, 0.0))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RateReport::from_parts(&parts, &scenario.weights, samples_used(ensembles)))
}

/// Jensen-type upper bound on the LAAR of user `l` built from `R_{g,l} = E[H^H H]`.
pub fn upper_bound_laar(l: usize, design: &Design, scenario: &Scenario) -> Result<f64> {
    let rg = scenario.models[l].second_order_stat();
    upper_bound_laar_with(l, design, rg.matrix(), scenario.noise)
}

pub fn upper_bound_laar_with(l: usize, design: &Design, rg: &ComplexMatrix, noise: f64) -> Result<f64> {
    let sigmas = design.sigmas();
    for (t, s) in sigmas[..=l].iter().enumerate() {
        require_nonsingular(s, &format!("Sigma_{}", t + 1))?;
    }
    require_nonsingular(rg, "R_g")?;
    let pack = CovariancePack::new(l, &design.f[l], &sigmas);
    let d = pack.d()?;
    let ld_sigma = linalg::ln_det_hpd(&pack.sigma, "Sigma_l")?;
    let ld_c = linalg::ln_det_hpd(&pack.c, "C_l")?;
    let ld_d = linalg::ln_det_shifted_product(rg, &(&d + &pack.sigma_after), noise, "R_g(D + Sigma_after) + N0 I")?;
    let ld_b = linalg::ln_det_shifted_product(rg, &pack.total(), noise, "R_g(B + Sigma_after) + N0 I")?;
    Ok((ld_sigma - ld_c - (ld_d - ld_b)) * LOG2_E)
}

/// `sum_{t >= l} Sigma_t`.
pub fn tail_sum(sigmas: &[ComplexMatrix], l: usize) -> ComplexMatrix {
    let n = sigmas[0].nrows();
    sigmas[l.min(sigmas.len())..].iter().fold(linalg::zeros(n), |acc, s| acc + s)
}

/// Bound attained with the closed-form linear assignment:
/// `log2 det(R_g S_l + N0 I) - log2 det(R_g S_{l+1} + N0 I)` with `S_l = sum_{t>=l} Sigma_t`.
pub fn simplified_upper_bound(l: usize, sigmas: &[ComplexMatrix], scenario: &Scenario) -> Result<f64> {
    let rg = scenario.models[l].second_order_stat();
    require_nonsingular(rg.matrix(), "R_g")?;
    dpc_term(rg.matrix(), sigmas, l, scenario.noise)
}

/// `log2 det(K S_l + N0 I) - log2 det(K S_{l+1} + N0 I)`.
pub fn dpc_term(gram: &ComplexMatrix, sigmas: &[ComplexMatrix], l: usize, noise: f64) -> Result<f64> {
    let hi = linalg::ln_det_shifted_product(gram, &tail_sum(sigmas, l), noise, "K S_l + N0 I")?;
    let lo = linalg::ln_det_shifted_product(gram, &tail_sum(sigmas, l + 1), noise, "K S_{l+1} + N0 I")?;
    Ok((hi - lo) / LN_2)
}

/// Rates of each user when all previously encoded interference is removed,
/// `E[log2 det(I + (N0 I + H S_{l+1} H^H)^{-1} H Sigma_l H^H)]`.
pub fn no_interference_bound(sigmas: &[ComplexMatrix], scenario: &Scenario, ensembles: &[GramEnsemble]) -> Result<RateReport> {
    check_ensembles(ensembles, scenario)?;
    let parts = ensembles
        .iter()
        .enumerate()
        .map(|(l, e)| e.expect(|k| dpc_term(k, sigmas, l, scenario.noise)))
        .collect::<Result<Vec<_>>>()?;
    Ok(RateReport::from_parts(&parts, &scenario.weights, samples_used(ensembles)))
}

/// `N_t log2(N_r P / (N_t N0) + 1)`, the sum-rate ceiling for white channels.
pub fn iid_sum_rate_bound(scenario: &Scenario) -> f64 {
    let nt = scenario.n_t as f64;
    let nr = scenario.n_r as f64;
    nt * (nr * scenario.power / (nt * scenario.noise) + 1.0).log2()
}
