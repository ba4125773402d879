//! Reference strategies: TDMA, opportunistic single-user scheduling and the
//! dirty-paper-coding sum rate of known deterministic channels.

use crate::chanmodels::{GramEnsemble, Scenario};
use crate::error::{Error, Result};
use crate::linalg::{self, ComplexMatrix};
use crate::optim::{maximize_dpc_objective, Alg2Params, DpcObjective};
use crate::rates;

#[derive(Debug, Clone, PartialEq)]
pub struct BaselineReport {
    pub name: String,
    pub sum_rate: f64,
    pub per_user: Vec<f64>,
    pub mc_stderr: f64,
    pub samples_used: usize,
    /// Transmit covariance used for each user while it is served.
    pub covariances: Vec<ComplexMatrix>,
}

/// Inner covariance rule of the TDMA slots.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TdmaVariant {
    /// Water-filling on the eigenvalues of `R_{g,l}`.
    #[default]
    WaterFilling,
    /// `P/N_t I`.
    Isotropic,
}

/// Powers maximizing `sum_i ln(1 + g_i p_i / N0)` under `sum_i p_i = budget`.
pub fn water_filling(gains: &[f64], budget: f64, noise: f64) -> Vec<f64> {
    let mut order: Vec<usize> = (0..gains.len()).filter(|&i| gains[i] > 0.0).collect();
    order.sort_by(|&a, &b| gains[b].total_cmp(&gains[a]));
    let mut powers = vec![0.0; gains.len()];
    // largest active set whose water level exceeds every inverse gain
    for k in (1..=order.len()).rev() {
        let active = &order[..k];
        let inv: f64 = active.iter().map(|&i| noise / gains[i]).sum();
        let level = (budget + inv) / k as f64;
        if level > noise / gains[active[k - 1]] {
            for &i in active {
                powers[i] = level - noise / gains[i];
            }
            return powers;
        }
    }
    powers
}

/// Covariance maximizing `log det(R_g Sigma + N0 I)` under `tr Sigma <= budget`.
pub fn waterfill_covariance(rg: &ComplexMatrix, budget: f64, noise: f64) -> ComplexMatrix {
    let (vals, vecs) = linalg::eigh(rg);
    let powers = water_filling(&vals, budget, noise);
    let d = linalg::diag(&powers);
    linalg::hermitian_part(&(&vecs * d * vecs.adjoint()))
}

/// `E[log2 det(I + K Sigma / N0)]` with its standard error.
pub fn single_user_rate(ensemble: &GramEnsemble, sigma: &ComplexMatrix, noise: f64) -> Result<(f64, f64)> {
    let n = sigma.nrows();
    let (m, s) = ensemble.expect(|k| {
        Ok(linalg::ln_det_shifted_product(k, sigma, noise, "K Sigma + N0 I")? - n as f64 * noise.ln())
    })?;
    Ok((m * std::f64::consts::LOG2_E, s * std::f64::consts::LOG2_E))
}

/// Equal time sharing, full power in every slot.
pub fn tdma_rate(scenario: &Scenario, ensembles: &[GramEnsemble], variant: TdmaVariant) -> Result<BaselineReport> {
    let users = scenario.users();
    let share = 1.0 / users as f64;
    let mut per_user = Vec::with_capacity(users);
    let mut var = 0.0;
    let mut covariances = Vec::with_capacity(users);
    for (l, ens) in ensembles.iter().enumerate() {
        let sigma = match variant {
            TdmaVariant::WaterFilling => {
                waterfill_covariance(scenario.models[l].second_order_stat().matrix(), scenario.power, scenario.noise)
            }
            TdmaVariant::Isotropic => linalg::scaled_identity(scenario.n_t, scenario.power / scenario.n_t as f64),
        };
        let (r, se) = single_user_rate(ens, &sigma, scenario.noise)?;
        per_user.push(share * r);
        var += (scenario.weights[l] * share * se).powi(2);
        covariances.push(sigma);
    }
    Ok(BaselineReport {
        name: "tdma".into(),
        sum_rate: per_user.iter().zip(&scenario.weights).map(|(r, w)| r * w).sum(),
        per_user,
        mc_stderr: var.sqrt(),
        samples_used: ensembles.iter().map(GramEnsemble::samples_used).max().unwrap_or(0),
        covariances,
    })
}

/// Index of the strongest user by `r_l = E[h_l^H h_l]`. Ties go to the lowest index.
pub fn strongest_user(scenario: &Scenario) -> usize {
    let r: Vec<f64> = scenario.second_order_stats().iter().map(|s| s.trace()).collect();
    let mut best = 0;
    for (l, &v) in r.iter().enumerate() {
        if v > r[best] {
            best = l;
        }
    }
    best
}

/// Single-antenna transmitter: all power to the strongest user.
pub fn opportunistic_schedule(scenario: &Scenario, ensembles: &[GramEnsemble]) -> Result<BaselineReport> {
    if scenario.n_t != 1 {
        return Err(Error::Precondition(format!(
            "opportunistic scheduling needs N_t = 1, got {}",
            scenario.n_t
        )));
    }
    let best = strongest_user(scenario);
    let sigma = linalg::scaled_identity(1, scenario.power);
    let (r, se) = single_user_rate(&ensembles[best], &sigma, scenario.noise)?;
    let mut per_user = vec![0.0; scenario.users()];
    per_user[best] = r;
    let mut covariances = vec![linalg::zeros(1); scenario.users()];
    covariances[best] = sigma;
    Ok(BaselineReport {
        name: "opportunistic".into(),
        sum_rate: scenario.weights[best] * r,
        per_user,
        mc_stderr: scenario.weights[best] * se,
        samples_used: ensembles[best].samples_used(),
        covariances,
    })
}

/// Weighted sum rate of successive dirty-paper coding in the order `1..L` when the
/// channels `H_l` are known, maximized over the covariances.
pub fn deterministic_dpc_rate(channels: &[ComplexMatrix], scenario: &Scenario, params: &Alg2Params) -> Result<f64> {
    deterministic_dpc(channels, scenario, params).map(|r| r.0)
}

/// Optimal value and covariances of [`deterministic_dpc_rate`].
pub fn deterministic_dpc(
    channels: &[ComplexMatrix],
    scenario: &Scenario,
    params: &Alg2Params,
) -> Result<(f64, Vec<ComplexMatrix>)> {
    if channels.len() != scenario.users() {
        return Err(Error::Validation(format!(
            "{} channels for {} users",
            channels.len(),
            scenario.users()
        )));
    }
    let points: Vec<GramEnsemble> = channels.iter().map(|h| GramEnsemble::point_mass(linalg::gram_inner(h))).collect();
    let obj = DpcObjective {
        ensembles: points.iter().collect(),
        weights: &scenario.weights,
        noise: scenario.noise,
    };
    let (sigmas, value, _, _) = maximize_dpc_objective(&obj, scenario.n_t, scenario.power, params, &[])?;
    Ok((value, sigmas))
}

/// Maximum over the covariances of the no-interference bound on the given draws.
/// The ascent runs on the first `fit_samples` draws (all when `None`); its result and
/// every covariance set in `starts` are then scored on the full draws and the best is kept.
pub fn max_no_interference_bound(
    scenario: &Scenario,
    ensembles: &[GramEnsemble],
    params: &Alg2Params,
    starts: &[Vec<ComplexMatrix>],
    fit_samples: Option<usize>,
) -> Result<(rates::RateReport, Vec<ComplexMatrix>)> {
    let fit: Vec<GramEnsemble> = match fit_samples {
        Some(n) => ensembles.iter().map(|e| e.prefix(n)).collect(),
        None => ensembles.to_vec(),
    };
    let obj = DpcObjective {
        ensembles: fit.iter().collect(),
        weights: &scenario.weights,
        noise: scenario.noise,
    };
    let factor_starts: Vec<Vec<ComplexMatrix>> = starts
        .iter()
        .map(|set| set.iter().map(linalg::psd_sqrt).collect())
        .collect();
    let (sigmas, _, _, _) = maximize_dpc_objective(&obj, scenario.n_t, scenario.power, params, &factor_starts)?;
    let mut best = (rates::no_interference_bound(&sigmas, scenario, ensembles)?, sigmas);
    for set in starts {
        let report = rates::no_interference_bound(set, scenario, ensembles)?;
        if report.weighted_sum > best.0.weighted_sum {
            best = (report, set.clone());
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn water_filling_levels() {
        // gains 2 and 0.5 with N0 = 1: inverse gains 0.5 and 2
        let p = water_filling(&[2.0, 0.5], 1.0, 1.0);
        assert_eq!(p, vec![1.0, 0.0]);
        let p = water_filling(&[2.0, 0.5], 5.0, 1.0);
        // level (5 + 2.5)/2 = 3.75
        assert!((p[0] - 3.25).abs() < 1e-14 && (p[1] - 1.75).abs() < 1e-14);
        assert_eq!(water_filling(&[0.0, 0.0], 1.0, 1.0), vec![0.0, 0.0]);
    }

    #[test]
    fn water_filling_beats_perturbations() {
        let gains = [3.0, 1.2, 0.4];
        let p = water_filling(&gains, 2.0, 1.0);
        let f = |p: &[f64]| gains.iter().zip(p).map(|(g, x)| (1.0 + g * x).ln()).sum::<f64>();
        let best = f(&p);
        for (i, j) in [(0, 1), (1, 0), (0, 2), (2, 0)] {
            let mut q = p.clone();
            let d = q[i].min(0.01);
            q[i] -= d;
            q[j] += d;
            assert!(f(&q) <= best + 1e-15);
        }
    }

    #[test]
    fn opportunistic_requires_single_antenna() {
        let s = Scenario::equal_weights(vec![crate::ChannelModel::iid(1, 2)], 1.0, 1.0).unwrap();
        let e = s.draw_ensembles(4, 0);
        assert!(matches!(opportunistic_schedule(&s, &e), Err(Error::Precondition(_))));
    }
}
