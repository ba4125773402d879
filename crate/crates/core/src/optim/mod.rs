//! Transmit-design optimizers.

pub mod alg1;
pub mod alg2;
pub mod sampling;

pub use alg1::{algorithm1, algorithm1_with, Alg1Params};
pub use alg2::{algorithm2, closed_form_assignment, maximize_dpc_objective, regularize_covariances, Alg2Params, Alg2Result, DpcObjective};
pub use sampling::{select_sample_count, SampleCount, SampleEstimate};

use rand::Rng;

use crate::chanmodels::{white_gaussian, Scenario};
use crate::error::Result;
use crate::linalg::{self, c, ComplexMatrix};
use crate::rates::Design;

/// One outer iteration of an optimizer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceEntry {
    pub objective: f64,
    pub step_f: f64,
    pub step_p: f64,
    pub grad_f_norm: f64,
    pub grad_p_norm: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct OptimTrace {
    pub iterations: Vec<TraceEntry>,
}

impl OptimTrace {
    pub fn is_nondecreasing(&self) -> bool {
        self.iterations.windows(2).all(|w| w[1].objective >= w[0].objective)
    }

    pub fn final_objective(&self) -> Option<f64> {
        self.iterations.last().map(|e| e.objective)
    }

    /// Outer iterations performed, not counting the initial point.
    pub fn outer_iterations(&self) -> usize {
        self.iterations.len().saturating_sub(1)
    }
}

pub fn total_power(p: &[ComplexMatrix]) -> f64 {
    p.iter().map(linalg::frob2).sum()
}

/// Uniform rescaling onto the power budget when it is exceeded.
pub fn power_projection(p: &[ComplexMatrix], budget: f64) -> Vec<ComplexMatrix> {
    let total = total_power(p);
    if total <= budget {
        return p.to_vec();
    }
    let s = (budget / total).sqrt();
    p.iter().map(|m| m * c(s, 0.0)).collect()
}

/// Algorithm-2 design followed by `n_starts - 1` random designs at full power.
pub fn multi_start(scenario: &Scenario, n_starts: usize, seed: u64) -> Result<Vec<Design>> {
    let params = Alg2Params { seed, ..Alg2Params::default() };
    let mut starts = vec![algorithm2(scenario, &params)?.design];
    starts.extend(random_designs(scenario, n_starts.saturating_sub(1), seed));
    Ok(starts)
}

/// Designs with i.i.d. complex Gaussian precoders scaled to total power `P` and
/// Gaussian assignment matrices (`F_1 = 0`).
pub fn random_designs(scenario: &Scenario, count: usize, seed: u64) -> Vec<Design> {
    let mut rng = crate::chanmodels::user_rng(seed ^ 0x5eed_0f_de51_9e, 0);
    let n = scenario.n_t;
    (0..count)
        .map(|_| {
            let p: Vec<ComplexMatrix> = (0..scenario.users()).map(|_| white_gaussian(n, n, &mut rng)).collect();
            let s = (scenario.power / total_power(&p)).sqrt();
            let p = p.into_iter().map(|m| m * c(s, 0.0)).collect();
            let f = (0..scenario.users())
                .map(|_| white_gaussian(n, n, &mut rng) * c(rng.random_range(0.0..1.0), 0.0))
                .collect();
            Design::new(f, p).expect("random design has consistent shapes")
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn projection_inside_budget_is_identity() {
        let p = vec![linalg::scaled_identity(2, 0.5)];
        assert_eq!(power_projection(&p, 1.0), p);
    }

    #[test]
    fn projection_scales_to_budget() {
        let p = vec![linalg::scaled_identity(2, 2.0)];
        let q = power_projection(&p, 4.0);
        assert!(linalg::frob(&(&q[0] - linalg::scaled_identity(2, 2f64.sqrt()))) < 1e-14);
        assert!((total_power(&q) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn projection_keeps_every_covariance_direction() {
        let p = vec![
            linalg::from_rows(&[&[(1.0, 0.5), (0.2, 0.0)], &[(0.0, -0.3), (2.0, 0.0)]]),
            linalg::from_rows(&[&[(0.1, 0.0), (0.0, 0.0)], &[(0.4, 0.4), (0.3, 0.0)]]),
        ];
        let q = power_projection(&p, 1.0);
        let ratio = total_power(&q) / total_power(&p);
        for (a, b) in p.iter().zip(&q) {
            let sa = linalg::gram_outer(a) * c(ratio, 0.0);
            assert!(linalg::frob(&(sa - linalg::gram_outer(b))) < 1e-14);
        }
    }
}
