//! Choice of the Monte-Carlo sample count from nested sample sets.

use log::warn;

use crate::error::{Error, Result};

/// Objective estimate and optional gradient Frobenius norms at one sample count.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleEstimate {
    pub value: f64,
    pub grad_norms: Vec<f64>,
}

impl SampleEstimate {
    pub fn value(value: f64) -> Self {
        SampleEstimate {
            value,
            grad_norms: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SampleCount {
    pub count: usize,
    /// Set when no count up to the cap met the thresholds.
    pub capped: bool,
}

pub const DEFAULT_BATCH: usize = 1000;
pub const DEFAULT_ALPHA: f64 = 0.01;
pub const DEFAULT_GAMMA: f64 = 0.05;
pub const MAX_BATCHES: usize = 100;

/// Evaluates `estimator` at `k, 2k, 3k, ...` samples and returns the first `i k`
/// for which the estimate at `(i+1) k` differs by less than `alpha` and every
/// gradient norm by less than `gamma`. Gives up at `100 k`.
pub fn select_sample_count<F>(mut estimator: F, k: usize, alpha: f64, gamma: f64) -> Result<SampleCount>
where
    F: FnMut(usize) -> Result<SampleEstimate>,
{
    if k == 0 {
        return Err(Error::Validation("batch size k must be at least 1".into()));
    }
    if !(alpha > 0.0) || !(gamma > 0.0) {
        return Err(Error::Validation("sample-count thresholds must be positive".into()));
    }
    let mut prev = estimator(k)?;
    for i in 1..MAX_BATCHES {
        let next = estimator((i + 1) * k)?;
        let value_ok = (next.value - prev.value).abs() < alpha;
        let grads_ok = next
            .grad_norms
            .iter()
            .zip(&prev.grad_norms)
            .all(|(a, b)| (a - b).abs() < gamma);
        if value_ok && grads_ok {
            return Ok(SampleCount {
                count: i * k,
                capped: false,
            });
        }
        prev = next;
    }
    warn!("sample-count selection reached the cap of {} samples", MAX_BATCHES * k);
    Ok(SampleCount {
        count: MAX_BATCHES * k,
        capped: true,
    })
}
