//! Analytic gradients of the LAWSR with respect to `F_l^*` and `P_t^*`, and a
//! central finite-difference validator.
//!
//! Conventions: gradients are ascent directions of the weighted sum-rate, and a
//! gradient `G` of a real function `f` of a complex matrix `W` satisfies
//! `df = 2 Re tr(G^H dW)`.

use std::f64::consts::LOG2_E;

use crate::chanmodels::{GramEnsemble, Scenario};
use crate::error::{Error, Result};
use crate::linalg::{self, c, ComplexMatrix};
use crate::rates::{self, CovariancePack, Design};

/// Gradients for every user: `df[0]` is always zero.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientPack {
    pub df: Vec<ComplexMatrix>,
    pub dp: Vec<ComplexMatrix>,
}

impl GradientPack {
    pub fn norm_f(&self) -> f64 {
        self.df.iter().map(linalg::frob2).sum::<f64>().sqrt()
    }

    pub fn norm_p(&self) -> f64 {
        self.dp.iter().map(linalg::frob2).sum::<f64>().sqrt()
    }
}

/// `T_l(H)` from the Gram matrix of `H`.
pub fn t_matrix(gram: &ComplexMatrix, pack: &CovariancePack, noise: f64) -> Result<ComplexMatrix> {
    Ok(&pack.a * rates::noise_whitened_gram(gram, &pack.total(), noise)?)
}

/// `T^H Q T`, where `Q = Sigma_{u|y,H}^{-1}`. Weight of a user encoded before `t`.
pub fn g1(t: &ComplexMatrix, q: &ComplexMatrix) -> ComplexMatrix {
    t.adjoint() * q * t
}

/// `Q - T^H Q + T^H Q T - Q T`. Weight of user `t` itself.
pub fn g2(t: &ComplexMatrix, q: &ComplexMatrix) -> ComplexMatrix {
    let th = t.adjoint();
    q - &th * q + &th * q * t - q * t
}

/// `F^H Q F - T^H Q F + T^H Q T - F^H Q T`. Weight of a user encoded after `t`.
pub fn g3(t: &ComplexMatrix, q: &ComplexMatrix, f: &ComplexMatrix) -> ComplexMatrix {
    let th = t.adjoint();
    let fh = f.adjoint();
    &fh * q * f - &th * q * f + &th * q * t - &fh * q * t
}

/// Per-case factored forms used to cross-check [`g1`], [`g2`] and [`g3`].
pub mod direct {
    use super::*;

    /// Covariance of user `t` seen as unknown interference at user `l < t`.
    pub fn interference_case(t: &ComplexMatrix, q: &ComplexMatrix) -> ComplexMatrix {
        let qt = q * t;
        linalg::hermitian_part(&(t.adjoint() * qt))
    }

    /// `(I - T)^H Q (I - T)`.
    pub fn own_case(t: &ComplexMatrix, q: &ComplexMatrix) -> ComplexMatrix {
        let r = linalg::identity(t.nrows()) - t;
        linalg::hermitian_part(&(r.adjoint() * q * r))
    }

    /// `(F - T)^H Q (F - T)`: user `t` is known interference at user `l > t`.
    pub fn known_interference_case(t: &ComplexMatrix, q: &ComplexMatrix, f: &ComplexMatrix) -> ComplexMatrix {
        let r = f - t;
        linalg::hermitian_part(&(r.adjoint() * q * r))
    }
}

/// Expectations over one user's channel needed by both gradient blocks.
#[derive(Debug, Clone)]
pub struct UserMoments {
    /// `E[Q (T - F)]`.
    pub q_gap: ComplexMatrix,
    pub g1: ComplexMatrix,
    pub g2: ComplexMatrix,
    pub g3: ComplexMatrix,
}

pub fn user_moments(pack: &CovariancePack, f_l: &ComplexMatrix, ensemble: &GramEnsemble, noise: f64) -> Result<UserMoments> {
    let n = f_l.nrows();
    let stacked = ensemble.expect_matrix(|k| {
        let st = rates::sample_state(k, pack, noise)?;
        let mut out = ComplexMatrix::zeros(n, 4 * n);
        out.columns_mut(0, n).copy_from(&(&st.q * (&st.t - f_l)));
        out.columns_mut(n, n).copy_from(&g1(&st.t, &st.q));
        out.columns_mut(2 * n, n).copy_from(&g2(&st.t, &st.q));
        out.columns_mut(3 * n, n).copy_from(&g3(&st.t, &st.q, f_l));
        Ok(out)
    })?;
    let block = |i: usize| stacked.columns(i * n, n).into_owned();
    Ok(UserMoments {
        q_gap: block(0),
        g1: block(1),
        g2: block(2),
        g3: block(3),
    })
}

/// Gradient of the LAAR of user `l` with respect to `F_l^*` (unweighted).
pub fn laar_grad_f(pack: &CovariancePack, moments: &UserMoments) -> ComplexMatrix {
    &moments.q_gap * &pack.sigma_s * c(LOG2_E, 0.0)
}

/// Gradients of the weighted sum-rate with respect to every `F_l^*` and `P_t^*`.
pub fn gradients(design: &Design, scenario: &Scenario, ensembles: &[GramEnsemble]) -> Result<GradientPack> {
    let users = scenario.users();
    let n = design.n_t();
    let sigmas = design.sigmas();
    let mut df = vec![linalg::zeros(n); users];
    let mut weight_sum = vec![linalg::zeros(n); users];
    let mut own = vec![None; users];
    for l in 0..users {
        let mu = scenario.weights[l];
        if mu == 0.0 || !design.is_active(l) {
            continue;
        }
        rates::require_nonsingular(&sigmas[l], &format!("Sigma_{}", l + 1))?;
        let pack = CovariancePack::new(l, &design.f[l], &sigmas);
        let m = user_moments(&pack, &design.f[l], &ensembles[l], scenario.noise)?;
        if l > 0 {
            df[l] = laar_grad_f(&pack, &m) * c(mu, 0.0);
        }
        for t in 0..users {
            let g = match t.cmp(&l) {
                std::cmp::Ordering::Greater => &m.g1,
                std::cmp::Ordering::Equal => &m.g2,
                std::cmp::Ordering::Less => &m.g3,
            };
            weight_sum[t] += g * c(mu, 0.0);
        }
        own[l] = Some(mu);
    }
    let mut dp = vec![linalg::zeros(n); users];
    for t in 0..users {
        if !design.is_active(t) {
            continue;
        }
        let mut g = -(&weight_sum[t] * &design.p[t]);
        if let Some(mu) = own[t] {
            let sigma_inv = linalg::inverse_hpd(&sigmas[t], "Sigma_t")
                .map_err(|_| Error::Precondition(format!("P_{} is singular", t + 1)))?;
            g += sigma_inv * &design.p[t] * c(mu, 0.0);
        }
        dp[t] = g * c(LOG2_E, 0.0);
    }
    Ok(GradientPack { df, dp })
}

/// `grad_{F_l^*}` of the weighted sum-rate.
pub fn grad_f(l: usize, design: &Design, scenario: &Scenario, ensembles: &[GramEnsemble]) -> Result<ComplexMatrix> {
    if l == 0 {
        return Ok(linalg::zeros(design.n_t()));
    }
    let sigmas = design.sigmas();
    rates::require_nonsingular(&sigmas[l], &format!("Sigma_{}", l + 1))?;
    let pack = CovariancePack::new(l, &design.f[l], &sigmas);
    let m = user_moments(&pack, &design.f[l], &ensembles[l], scenario.noise)?;
    Ok(laar_grad_f(&pack, &m) * c(scenario.weights[l], 0.0))
}

/// `grad_{P_t^*}` of the weighted sum-rate.
pub fn grad_p(t: usize, design: &Design, scenario: &Scenario, ensembles: &[GramEnsemble]) -> Result<ComplexMatrix> {
    Ok(gradients(design, scenario, ensembles)?.dp.swap_remove(t))
}

/// Gradient of the Jensen-type LAAR bound of user `l` with respect to `F_l^*`.
/// The bound is the LAAR evaluated at the point-mass channel law `K = R_g`.
pub fn upper_bound_grad_f(l: usize, design: &Design, rg: &ComplexMatrix, noise: f64) -> Result<ComplexMatrix> {
    let sigmas = design.sigmas();
    let pack = CovariancePack::new(l, &design.f[l], &sigmas);
    let m = user_moments(&pack, &design.f[l], &GramEnsemble::point_mass(rg.clone()), noise)?;
    Ok(laar_grad_f(&pack, &m))
}

/// Central differences along the real and imaginary part of every entry,
/// combined as `(d/dRe + i d/dIm) / 2`.
pub fn finite_diff_gradient<F>(objective: F, point: &[ComplexMatrix], step: f64) -> Result<Vec<ComplexMatrix>>
where
    F: Fn(&[ComplexMatrix]) -> Result<f64>,
{
    let mut out = Vec::with_capacity(point.len());
    let mut work = point.to_vec();
    for m in 0..point.len() {
        let (rows, cols) = point[m].shape();
        let mut g = ComplexMatrix::zeros(rows, cols);
        for j in 0..cols {
            for i in 0..rows {
                let base = point[m][(i, j)];
                let mut partial = [0.0; 2];
                for (k, dir) in [c(step, 0.0), c(0.0, step)].into_iter().enumerate() {
                    work[m][(i, j)] = base + dir;
                    let up = objective(&work)?;
                    work[m][(i, j)] = base - dir;
                    let down = objective(&work)?;
                    partial[k] = (up - down) / (2.0 * step);
                }
                work[m][(i, j)] = base;
                g[(i, j)] = c(partial[0] / 2.0, partial[1] / 2.0);
            }
        }
        out.push(g);
    }
    Ok(out)
}

/// Finite-difference [`GradientPack`] of a design objective. `F_1` is held at zero.
pub fn finite_diff_design<F>(objective: F, design: &Design, step: f64) -> Result<GradientPack>
where
    F: Fn(&Design) -> Result<f64>,
{
    let users = design.users();
    let mut point = design.f[1..].to_vec();
    point.extend(design.p.iter().cloned());
    let g = finite_diff_gradient(
        |x| {
            let mut f = vec![linalg::zeros(design.n_t())];
            f.extend(x[..users - 1].iter().cloned());
            objective(&Design {
                f,
                p: x[users - 1..].to_vec(),
            })
        },
        &point,
        step,
    )?;
    let mut df = vec![linalg::zeros(design.n_t())];
    df.extend(g[..users - 1].iter().cloned());
    Ok(GradientPack {
        df,
        dp: g[users - 1..].to_vec(),
    })
}
