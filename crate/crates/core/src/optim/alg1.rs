//! Alternating gradient ascent on the exact LAWSR with backtracking line search.

use log::debug;

use super::{power_projection, OptimTrace, TraceEntry};
use crate::chanmodels::{GramEnsemble, Scenario};
use crate::error::{Error, Result};
use crate::gradients;
use crate::linalg::c;
use crate::rates::{self, Design};

#[derive(Debug, Clone, PartialEq)]
pub struct Alg1Params {
    /// Smallest step tried before a line search gives up.
    pub eps1: f64,
    /// Stop once an outer iteration improves the objective by at most this much.
    pub eps2: f64,
    pub n_max: usize,
    pub beta: f64,
    /// Monte-Carlo draws per user used by [`algorithm1`].
    pub samples: usize,
    pub seed: u64,
}

impl Default for Alg1Params {
    fn default() -> Self {
        Alg1Params {
            eps1: 1e-3,
            eps2: 1e-4,
            n_max: 60,
            beta: 0.5,
            samples: 10_000,
            seed: 0,
        }
    }
}

impl Alg1Params {
    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(Error::Validation(format!("beta must lie in (0, 1), got {}", self.beta)));
        }
        if !(self.eps1 > 0.0) || !(self.eps2 > 0.0) {
            return Err(Error::Validation("eps1 and eps2 must be positive".into()));
        }
        if self.samples == 0 {
            return Err(Error::Validation("samples must be at least 1".into()));
        }
        if self.n_max == 0 {
            return Err(Error::Validation("n_max must be at least 1".into()));
        }
        Ok(())
    }
}

fn objective(design: &Design, scenario: &Scenario, ensembles: &[GramEnsemble]) -> Option<f64> {
    rates::lawsr(design, scenario, ensembles)
        .ok()
        .map(|r| r.weighted_sum)
        .filter(|v| v.is_finite())
}

/// Backtracking from `t = 1` shrinking by `beta`; accepts the first step whose
/// objective is not below `current`. Returns the accepted design, value and step.
fn line_search<F>(current: f64, params: &Alg1Params, mut candidate: F) -> Option<(Design, f64, f64)>
where
    F: FnMut(f64) -> (Design, Option<f64>),
{
    let mut t = 1.0;
    while t >= params.eps1 {
        let (d, v) = candidate(t);
        if let Some(v) = v {
            if v >= current {
                return Some((d, v, t));
            }
        }
        t *= params.beta;
    }
    None
}

/// Draws `params.samples` channels per user from `params.seed` and runs
/// [`algorithm1_with`] on them.
pub fn algorithm1(init: &Design, scenario: &Scenario, params: &Alg1Params) -> Result<(Design, OptimTrace)> {
    let ensembles = scenario.draw_ensembles(params.samples, params.seed);
    algorithm1_with(init, scenario, &ensembles, params)
}

/// Runs the alternating ascent from `init`. All evaluations use the frozen
/// `ensembles`, so the objective sequence in the trace is nondecreasing.
pub fn algorithm1_with(
    init: &Design,
    scenario: &Scenario,
    ensembles: &[GramEnsemble],
    params: &Alg1Params,
) -> Result<(Design, OptimTrace)> {
    params.validate()?;
    if !init.is_feasible(scenario.power) {
        return Err(Error::Precondition("initial design exceeds the power budget".into()));
    }
    let sigmas = init.sigmas();
    for (l, s) in sigmas.iter().enumerate() {
        if init.is_active(l) {
            rates::require_nonsingular(s, &format!("initial Sigma_{}", l + 1))?;
        }
    }
    let mut design = init.clone();
    let mut value = rates::lawsr(&design, scenario, ensembles)?.weighted_sum;
    let mut trace = OptimTrace::default();
    trace.iterations.push(TraceEntry {
        objective: value,
        step_f: 0.0,
        step_p: 0.0,
        grad_f_norm: 0.0,
        grad_p_norm: 0.0,
    });
    for n in 0..params.n_max {
        let start_value = value;
        let g = gradients::gradients(&design, scenario, ensembles).map_err(|e| with_iteration(e, n))?;
        let grad_f_norm = g.norm_f();
        let mut step_f = 0.0;
        if grad_f_norm > 0.0 {
            let found = line_search(value, params, |t| {
                let mut d = design.clone();
                for (f, df) in d.f.iter_mut().zip(&g.df).skip(1) {
                    *f += df * c(t, 0.0);
                }
                let v = objective(&d, scenario, ensembles);
                (d, v)
            });
            if let Some((d, v, t)) = found {
                design = d;
                value = v;
                step_f = t;
            }
        }

        let g = gradients::gradients(&design, scenario, ensembles).map_err(|e| with_iteration(e, n))?;
        let grad_p_norm = g.norm_p();
        let mut step_p = 0.0;
        if grad_p_norm > 0.0 {
            let found = line_search(value, params, |t| {
                let moved: Vec<_> = design.p.iter().zip(&g.dp).map(|(p, dp)| p + dp * c(t, 0.0)).collect();
                let d = Design {
                    f: design.f.clone(),
                    p: power_projection(&moved, scenario.power),
                };
                let v = objective(&d, scenario, ensembles);
                (d, v)
            });
            if let Some((d, v, t)) = found {
                design = d;
                value = v;
                step_p = t;
            }
        }
        trace.iterations.push(TraceEntry {
            objective: value,
            step_f,
            step_p,
            grad_f_norm,
            grad_p_norm,
        });
        debug!("alg1 iteration {}: objective {value:.9} (steps {step_f}, {step_p})", n + 1);
        if value - start_value <= params.eps2 {
            break;
        }
    }
    Ok((design, trace))
}

fn with_iteration(e: Error, n: usize) -> Error {
    match e {
        Error::Numerical { context, sample } => Error::Numerical {
            context: format!("{context} (algorithm 1 iteration {})", n + 1),
            sample,
        },
        other => other,
    }
}
