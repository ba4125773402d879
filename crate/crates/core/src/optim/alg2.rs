//! Low-complexity design: maximize the simplified bound over the covariances,
//! then set the closed-form linear assignment matrices.
//!
//! The same successive-encoding objective
//! `sum_l mu_l E[log2 det(K S_l + N0 I) - log2 det(K S_{l+1} + N0 I)]`
//! is maximized for three channel laws: the point mass at `R_{g,l}` (simplified
//! bound), Monte-Carlo draws (no-interference bound) and point masses at
//! deterministic channels (dirty-paper coding with known channels).

use std::f64::consts::LOG2_E;

use log::debug;

use super::{power_projection, total_power, OptimTrace, TraceEntry};
use crate::chanmodels::{white_gaussian, GramEnsemble, Scenario};
use crate::error::{Error, Result};
use crate::linalg::{self, c, ComplexMatrix};
use crate::rates::{self, Design};

#[derive(Debug, Clone, PartialEq)]
pub struct Alg2Params {
    pub n_starts: usize,
    pub max_iter: usize,
    pub grad_tol: f64,
    pub seed: u64,
}

impl Default for Alg2Params {
    fn default() -> Self {
        Alg2Params {
            n_starts: 5,
            max_iter: 500,
            grad_tol: 1e-8,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Alg2Result {
    pub design: Design,
    /// Weighted simplified bound at the returned covariances.
    pub bound: f64,
    /// Projected-gradient norm at the best start before post-processing.
    pub kkt_residual: f64,
    pub trace: OptimTrace,
}

/// Successive-encoding weighted log-det objective for fixed channel laws.
#[derive(Debug, Clone)]
pub struct DpcObjective<'a> {
    pub ensembles: Vec<&'a GramEnsemble>,
    pub weights: &'a [f64],
    pub noise: f64,
}

fn shifted(gram: &ComplexMatrix, s: &ComplexMatrix, noise: f64) -> ComplexMatrix {
    let mut m = gram * s;
    for i in 0..m.nrows() {
        m[(i, i)] += c(noise, 0.0);
    }
    m
}

/// `(ln det(K S + N0 I), (K S + N0 I)^{-1} K)`.
fn ln_det_and_solve(gram: &ComplexMatrix, s: &ComplexMatrix, noise: f64) -> Result<(f64, ComplexMatrix)> {
    let lu = shifted(gram, s, noise).lu();
    let det = lu.determinant();
    if !(det.re > linalg::DET_FLOOR) || !det.re.is_finite() {
        return Err(Error::numerical("K S + N0 I has a non-positive determinant"));
    }
    let y = lu
        .solve(gram)
        .ok_or_else(|| Error::numerical("K S + N0 I is singular"))?;
    Ok((det.re.ln(), linalg::hermitian_part(&y)))
}

impl DpcObjective<'_> {
    pub fn users(&self) -> usize {
        self.ensembles.len()
    }

    pub fn value(&self, sigmas: &[ComplexMatrix]) -> Result<f64> {
        let mut total = 0.0;
        for (l, ens) in self.ensembles.iter().enumerate() {
            if self.weights[l] == 0.0 {
                continue;
            }
            let (mean, _) = ens.expect(|k| rates::dpc_term(k, sigmas, l, self.noise))?;
            total += self.weights[l] * mean;
        }
        Ok(total)
    }

    /// Value and gradient with respect to every `P_t^*`.
    pub fn value_and_gradient(&self, p: &[ComplexMatrix]) -> Result<(f64, Vec<ComplexMatrix>)> {
        let sigmas: Vec<ComplexMatrix> = p.iter().map(linalg::gram_outer).collect();
        let n = sigmas[0].nrows();
        let users = self.users();
        let mut d_sigma = vec![linalg::zeros(n); users];
        let mut total = 0.0;
        for (l, ens) in self.ensembles.iter().enumerate() {
            let mu = self.weights[l];
            if mu == 0.0 {
                continue;
            }
            let s_hi = rates::tail_sum(&sigmas, l);
            let s_lo = rates::tail_sum(&sigmas, l + 1);
            // columns: [value, E Y_l, E Z_l] packed as n x (2n + 1)
            let stacked = ens.expect_matrix(|k| {
                let (a, y) = ln_det_and_solve(k, &s_hi, self.noise)?;
                let (b, z) = ln_det_and_solve(k, &s_lo, self.noise)?;
                let mut out = ComplexMatrix::zeros(n, 2 * n + 1);
                out.columns_mut(0, n).copy_from(&y);
                out.columns_mut(n, n).copy_from(&z);
                out[(0, 2 * n)] = c(a - b, 0.0);
                Ok(out)
            })?;
            total += mu * stacked[(0, 2 * n)].re;
            let y = stacked.columns(0, n).into_owned();
            let z = stacked.columns(n, n).into_owned();
            for (t, g) in d_sigma.iter_mut().enumerate() {
                if t >= l {
                    *g += &y * c(mu, 0.0);
                }
                if t > l {
                    *g -= &z * c(mu, 0.0);
                }
            }
        }
        let grads = d_sigma
            .iter()
            .zip(p)
            .map(|(g, pt)| g * pt * c(LOG2_E, 0.0))
            .collect();
        Ok((total * LOG2_E, grads))
    }
}

fn inner(a: &[ComplexMatrix], b: &[ComplexMatrix]) -> f64 {
    a.iter().zip(b).map(|(x, y)| linalg::re_inner(x, y)).sum()
}

fn axpy(x: &[ComplexMatrix], alpha: f64, g: &[ComplexMatrix]) -> Vec<ComplexMatrix> {
    x.iter().zip(g).map(|(a, b)| a + b * c(alpha, 0.0)).collect()
}

/// Gradient component left after removing the outward normal of the power ball
/// when the budget is active.
fn projected_residual(x: &[ComplexMatrix], g: &[ComplexMatrix], budget: f64) -> f64 {
    let power = total_power(x);
    let gx = inner(g, x);
    let gg = inner(g, g);
    if power >= budget * (1.0 - 1e-12) && gx > 0.0 {
        (gg - gx * gx / power).max(0.0).sqrt()
    } else {
        gg.sqrt()
    }
}

#[derive(Debug, Clone)]
struct AscentResult {
    p: Vec<ComplexMatrix>,
    value: f64,
    residual: f64,
    trace: OptimTrace,
}

/// Projected gradient ascent with Barzilai-Borwein trial steps and Armijo backtracking.
fn ascend(obj: &DpcObjective, start: Vec<ComplexMatrix>, budget: f64, max_iter: usize, tol: f64) -> Result<AscentResult> {
    let mut x = power_projection(&start, budget);
    let (mut f, mut g) = obj.value_and_gradient(&x)?;
    let mut residual = projected_residual(&x, &g, budget);
    let mut trace = OptimTrace::default();
    let gnorm = inner(&g, &g).sqrt();
    trace.iterations.push(TraceEntry {
        objective: f,
        step_f: 0.0,
        step_p: 0.0,
        grad_f_norm: 0.0,
        grad_p_norm: gnorm,
    });
    let mut alpha = if gnorm > 0.0 { 0.1 * total_power(&x).sqrt() / gnorm } else { 1.0 };
    for _ in 0..max_iter {
        if residual <= tol {
            break;
        }
        let mut step = alpha;
        let mut accepted = None;
        while step > 1e-16 {
            let cand = power_projection(&axpy(&x, step, &g), budget);
            let ascent = 2.0 * (inner(&g, &cand) - inner(&g, &x));
            if let Ok((fc, gc)) = obj.value_and_gradient(&cand) {
                if fc >= f + 1e-4 * ascent {
                    accepted = Some((cand, fc, gc, step));
                    break;
                }
            }
            step *= 0.5;
        }
        let Some((xn, fn_, gn, used)) = accepted else {
            debug!("dpc ascent stalled at residual {residual:e}");
            break;
        };
        let s: Vec<ComplexMatrix> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<ComplexMatrix> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = inner(&s, &y);
        let ss = inner(&s, &s);
        alpha = if sy < 0.0 { (ss / -sy).clamp(1e-12, 1e12) } else { (used * 4.0).min(1e12) };
        x = xn;
        f = fn_;
        g = gn;
        residual = projected_residual(&x, &g, budget);
        trace.iterations.push(TraceEntry {
            objective: f,
            step_f: 0.0,
            step_p: used,
            grad_f_norm: 0.0,
            grad_p_norm: residual,
        });
    }
    Ok(AscentResult {
        p: x,
        value: f,
        residual,
        trace,
    })
}

/// Multi-start maximization of a [`DpcObjective`] under `sum tr(Sigma_l) <= budget`.
/// Extra `starts` are tried before the built-in ones. Returns covariances, value,
/// projected-gradient residual and the trace of the best start.
pub fn maximize_dpc_objective(
    obj: &DpcObjective,
    n_t: usize,
    budget: f64,
    params: &Alg2Params,
    starts: &[Vec<ComplexMatrix>],
) -> Result<(Vec<ComplexMatrix>, f64, f64, OptimTrace)> {
    let users = obj.users();
    let mut candidates: Vec<Vec<ComplexMatrix>> = starts.to_vec();
    let share = (budget / (users * n_t) as f64).sqrt();
    candidates.push(vec![linalg::scaled_identity(n_t, share); users]);
    let mut rng = crate::chanmodels::user_rng(params.seed, 1000);
    for _ in 1..params.n_starts.max(1) {
        candidates.push((0..users).map(|_| white_gaussian(n_t, n_t, &mut rng)).collect());
    }
    let mut best: Option<AscentResult> = None;
    for cand in candidates {
        let r = ascend(obj, cand, budget, params.max_iter, params.grad_tol)?;
        if best.as_ref().is_none_or(|b| r.value > b.value) {
            best = Some(r);
        }
    }
    let mut best = best.expect("at least one start");
    if n_t == 1 {
        // every user alone at full power
        for l in 0..users {
            let mut p = vec![linalg::zeros(1); users];
            p[l] = linalg::scaled_identity(1, budget.sqrt());
            let v = obj.value(&p.iter().map(linalg::gram_outer).collect::<Vec<_>>())?;
            if v >= best.value - 1e-12 * best.value.abs().max(1.0) {
                best = AscentResult {
                    p,
                    value: v,
                    residual: 0.0,
                    trace: best.trace.clone(),
                };
                break;
            }
        }
    }
    let sigmas = best.p.iter().map(linalg::gram_outer).collect();
    Ok((sigmas, best.value, best.residual, best.trace))
}

/// Drops users with negligible power, floors the eigenvalues of the rest at
/// `1e-8 tr(Sigma_l)/N_t` and rescales to the budget.
pub fn regularize_covariances(sigmas: &[ComplexMatrix], budget: f64) -> Vec<ComplexMatrix> {
    let n = sigmas[0].nrows();
    let mut out: Vec<ComplexMatrix> = sigmas
        .iter()
        .map(|s| {
            let tr = linalg::trace_re(s);
            if tr <= 1e-12 * budget {
                return linalg::zeros(n);
            }
            let floor = 1e-8 * tr / n as f64;
            linalg::spectral_map(s, |x| x.max(floor))
        })
        .collect();
    let total: f64 = out.iter().map(linalg::trace_re).sum();
    if total > 0.0 {
        let s = budget / total;
        out.iter_mut().for_each(|m| *m *= c(s, 0.0));
    }
    out
}

/// `F_l = Sigma_l (R_g S_l + N0 I)^{-1} R_g`, with `S_l = sum_{t>=l} Sigma_t`
/// and `F_1 = 0`. Equal to `Sigma_l (S_l + N0 R_g^{-1})^{-1}` for invertible `R_g`.
pub fn closed_form_assignment(l: usize, sigmas: &[ComplexMatrix], rg: &ComplexMatrix, noise: f64) -> Result<ComplexMatrix> {
    let n = sigmas[0].nrows();
    if l == 0 {
        return Ok(linalg::zeros(n));
    }
    let y = rates::noise_whitened_gram(rg, &rates::tail_sum(sigmas, l), noise)?;
    Ok(&sigmas[l] * y)
}

/// Maximizes the weighted simplified bound and applies the closed-form assignment.
pub fn algorithm2(scenario: &Scenario, params: &Alg2Params) -> Result<Alg2Result> {
    let rgs: Vec<ComplexMatrix> = scenario.second_order_stats().into_iter().map(|r| r.into_matrix()).collect();
    for (l, rg) in rgs.iter().enumerate() {
        rates::require_nonsingular(rg, &format!("R_g of user {}", l + 1))?;
    }
    let points: Vec<GramEnsemble> = rgs.iter().map(|r| GramEnsemble::point_mass(r.clone())).collect();
    let obj = DpcObjective {
        ensembles: points.iter().collect(),
        weights: &scenario.weights,
        noise: scenario.noise,
    };
    let (sigmas, _, kkt_residual, trace) = maximize_dpc_objective(&obj, scenario.n_t, scenario.power, params, &[])?;
    let sigmas = regularize_covariances(&sigmas, scenario.power);
    let bound = obj.value(&sigmas)?;
    let f = (0..scenario.users())
        .map(|l| {
            if linalg::trace_re(&sigmas[l]) == 0.0 {
                Ok(linalg::zeros(scenario.n_t))
            } else {
                closed_form_assignment(l, &sigmas, &rgs[l], scenario.noise)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let design = Design::from_covariances(f, &sigmas)?;
    Ok(Alg2Result {
        design,
        bound,
        kkt_residual,
        trace,
    })
}
