//! SNR sweeps over the configured algorithms and their CSV output.

use std::io::Write;
use std::time::Instant;

use log::info;
use rayon::prelude::*;

use super::config::{Algorithm, ExperimentConfig, SampleSpec};
use crate::baselines;
use crate::chanmodels::{GramEnsemble, Scenario};
use crate::error::{Error, Result};
use crate::gradients;
use crate::linalg::ComplexMatrix;
use crate::optim::{self, sampling, Alg2Params, Alg2Result, OptimTrace};
use crate::rates::{self, Design};

pub const FIXED_LEADING: [&str; 3] = ["snr_db", "algorithm", "sum_rate"];
pub const FIXED_TRAILING: [&str; 4] = ["mc_stderr", "samples_used", "wall_seconds", "seed"];
pub const TRACE_COLUMNS: [&str; 8] = [
    "snr_db",
    "start",
    "iteration",
    "objective",
    "step_f",
    "step_p",
    "grad_f_norm",
    "grad_p_norm",
];

/// Draws per user on which the no-interference bound's covariances are fitted.
pub const BOUND_FIT_SAMPLES: usize = 2000;
/// Ascent iterations per start for the no-interference bound.
pub const BOUND_MAX_ITER: usize = 200;

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub snr_db: f64,
    pub algorithm: Algorithm,
    pub sum_rate: f64,
    pub per_user: Vec<f64>,
    pub mc_stderr: f64,
    pub samples_used: usize,
    pub wall_seconds: f64,
    pub seed: u64,
}

/// One Algorithm-1 iteration of one start.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub snr_db: f64,
    pub start: usize,
    pub iteration: usize,
    pub objective: f64,
    pub step_f: f64,
    pub step_p: f64,
    pub grad_f_norm: f64,
    pub grad_p_norm: f64,
}

#[derive(Debug, Clone, Default)]
pub struct ExperimentOutput {
    pub users: usize,
    pub rows: Vec<Row>,
    pub traces: Vec<TraceRow>,
}

/// Column names of the result CSV for `users` receivers.
pub fn header(users: usize) -> Vec<String> {
    FIXED_LEADING
        .iter()
        .map(|s| s.to_string())
        .chain((1..=users).map(|l| format!("rate_user{l}")))
        .chain(FIXED_TRAILING.iter().map(|s| s.to_string()))
        .collect()
}

/// Fixed-point text with nine significant digits.
pub fn format_sig(x: f64) -> String {
    if x == 0.0 {
        return "0.00000000".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let magnitude = x.abs().log10().floor() as i32;
    let decimals = (8 - magnitude).max(0) as usize;
    let s = format!("{x:.decimals$}");
    // rounding can carry into a new leading digit
    let rounded: f64 = s.parse().unwrap_or(x);
    if rounded.abs().log10().floor() as i32 > magnitude && decimals > 0 {
        format!("{x:.prec$}", prec = decimals - 1)
    } else {
        s
    }
}

impl ExperimentOutput {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(header(self.users))?;
        for r in &self.rows {
            let mut rec = vec![format_sig(r.snr_db), r.algorithm.label().to_string(), format_sig(r.sum_rate)];
            rec.extend(r.per_user.iter().map(|&v| format_sig(v)));
            rec.push(format_sig(r.mc_stderr));
            rec.push(r.samples_used.to_string());
            rec.push(format_sig(r.wall_seconds));
            rec.push(r.seed.to_string());
            w.write_record(rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_trace_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(TRACE_COLUMNS)?;
        for t in &self.traces {
            w.write_record([
                format_sig(t.snr_db),
                t.start.to_string(),
                t.iteration.to_string(),
                format_sig(t.objective),
                format_sig(t.step_f),
                format_sig(t.step_p),
                format_sig(t.grad_f_norm),
                format_sig(t.grad_p_norm),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn rows_for(&self, algorithm: Algorithm) -> impl Iterator<Item = &Row> {
        self.rows.iter().filter(move |r| r.algorithm == algorithm)
    }
}

/// Runs every SNR point, then writes `output` and `trace_output` when set.
pub fn run_and_write(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    let out = run_experiment(config)?;
    if let Some(path) = &config.output {
        out.write_csv(std::fs::File::create(path)?)?;
    }
    if let Some(path) = &config.trace_output {
        out.write_trace_csv(std::fs::File::create(path)?)?;
    }
    Ok(out)
}

/// Rows in `(snr, algorithm)` order of the config, independent of scheduling.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    let points = config
        .snr_grid_db
        .par_iter()
        .map(|&snr| run_point(config, snr))
        .collect::<Vec<_>>();
    let mut out = ExperimentOutput {
        users: config.scenario.users(),
        ..ExperimentOutput::default()
    };
    for p in points {
        let (rows, traces) = p?;
        out.rows.extend(rows);
        out.traces.extend(traces);
    }
    Ok(out)
}

fn alg2_params(config: &ExperimentConfig) -> Alg2Params {
    Alg2Params {
        n_starts: config.n_starts,
        seed: config.seed,
        ..Alg2Params::default()
    }
}

/// Nested-batch selection on the Algorithm-2 design.
fn auto_sample_count(scenario: &Scenario, design: &Design, seed: u64) -> Result<usize> {
    let full = scenario.draw_ensembles(sampling::MAX_BATCHES * sampling::DEFAULT_BATCH, seed);
    let chosen = sampling::select_sample_count(
        |n| {
            let ens: Vec<GramEnsemble> = full.iter().map(|e| e.prefix(n)).collect();
            let value = rates::lawsr(design, scenario, &ens)?.weighted_sum;
            let g = gradients::gradients(design, scenario, &ens)?;
            Ok(sampling::SampleEstimate {
                value,
                grad_norms: vec![g.norm_f(), g.norm_p()],
            })
        },
        sampling::DEFAULT_BATCH,
        sampling::DEFAULT_ALPHA,
        sampling::DEFAULT_GAMMA,
    )?;
    Ok(chosen.count)
}

struct PointState {
    scenario: Scenario,
    ensembles: Vec<GramEnsemble>,
    alg2: Option<(Alg2Result, f64)>,
    alg1: Option<(Design, f64)>,
    traces: Vec<TraceRow>,
}

impl PointState {
    fn alg2(&mut self, config: &ExperimentConfig) -> Result<&(Alg2Result, f64)> {
        if self.alg2.is_none() {
            let t = Instant::now();
            let r = optim::algorithm2(&self.scenario, &alg2_params(config))?;
            self.alg2 = Some((r, t.elapsed().as_secs_f64()));
        }
        Ok(self.alg2.as_ref().expect("just computed"))
    }

    /// Best Algorithm-1 run over the Algorithm-2 start and random starts.
    fn alg1(&mut self, config: &ExperimentConfig, snr: f64) -> Result<&(Design, f64)> {
        if self.alg1.is_none() {
            let t = Instant::now();
            let mut starts = vec![self.alg2(config)?.0.design.clone()];
            starts.extend(optim::random_designs(&self.scenario, config.n_starts.saturating_sub(1), config.seed));
            let params = config.alg1_params();
            let mut best: Option<(Design, f64)> = None;
            for (i, init) in starts.iter().enumerate() {
                let (design, trace) = optim::algorithm1_with(init, &self.scenario, &self.ensembles, &params)?;
                self.push_trace(snr, i, &trace);
                let v = trace.final_objective().unwrap_or(f64::NEG_INFINITY);
                if best.as_ref().is_none_or(|b| v > b.1) {
                    best = Some((design, v));
                }
            }
            let (design, _) = best.expect("at least one start");
            self.alg1 = Some((design, t.elapsed().as_secs_f64()));
        }
        Ok(self.alg1.as_ref().expect("just computed"))
    }

    fn push_trace(&mut self, snr: f64, start: usize, trace: &OptimTrace) {
        self.traces.extend(trace.iterations.iter().enumerate().map(|(i, e)| TraceRow {
            snr_db: snr,
            start,
            iteration: i,
            objective: e.objective,
            step_f: e.step_f,
            step_p: e.step_p,
            grad_f_norm: e.grad_f_norm,
            grad_p_norm: e.grad_p_norm,
        }));
    }
}

fn run_point(config: &ExperimentConfig, snr: f64) -> Result<(Vec<Row>, Vec<TraceRow>)> {
    let scenario = config.scenario.with_snr_db(snr);
    let mut state = PointState {
        scenario,
        ensembles: Vec::new(),
        alg2: None,
        alg1: None,
        traces: Vec::new(),
    };
    let samples = match config.samples {
        SampleSpec::Count(n) => n,
        SampleSpec::Auto if state.scenario.models.iter().all(|m| m.is_exact()) => 1,
        SampleSpec::Auto => {
            let design = state.alg2(config)?.0.design.clone();
            auto_sample_count(&state.scenario, &design, config.seed)?
        }
    };
    state.ensembles = state.scenario.draw_ensembles(samples, config.seed);
    info!("snr {snr} dB: {samples} samples per user");

    let mut rows = Vec::with_capacity(config.algorithms.len());
    for &alg in &config.algorithms {
        let clock = Instant::now();
        let (report, extra_seconds) = evaluate(alg, config, snr, &mut state)
            .map_err(|e| locate(e, alg, snr))?;
        rows.push(Row {
            snr_db: snr,
            algorithm: alg,
            sum_rate: report.weighted_sum,
            per_user: report.per_user_rate,
            mc_stderr: report.mc_stderr,
            samples_used: report.samples_used,
            wall_seconds: clock.elapsed().as_secs_f64() + extra_seconds,
            seed: config.seed,
        });
    }
    Ok((rows, state.traces))
}

/// Evaluates one algorithm; the second value is time spent in shared work done
/// earlier for another row.
fn evaluate(alg: Algorithm, config: &ExperimentConfig, snr: f64, state: &mut PointState) -> Result<(rates::RateReport, f64)> {
    let cached_alg2 = state.alg2.as_ref().map_or(0.0, |a| a.1);
    let cached_alg1 = state.alg1.as_ref().map_or(0.0, |a| a.1);
    Ok(match alg {
        Algorithm::Alg2 => {
            let design = state.alg2(config)?.0.design.clone();
            (rates::lawsr(&design, &state.scenario, &state.ensembles)?, cached_alg2)
        }
        Algorithm::Alg1 => {
            let design = state.alg1(config, snr)?.0.clone();
            (rates::lawsr(&design, &state.scenario, &state.ensembles)?, cached_alg1)
        }
        Algorithm::SimplifiedBound => {
            let sigmas = state.alg2(config)?.0.design.sigmas();
            let per_user = (0..state.scenario.users())
                .map(|l| rates::simplified_upper_bound(l, &sigmas, &state.scenario))
                .collect::<Result<Vec<_>>>()?;
            let parts: Vec<(f64, f64)> = per_user.iter().map(|&r| (r, 0.0)).collect();
            (rates::RateReport::from_parts(&parts, &state.scenario.weights, 0), cached_alg2)
        }
        Algorithm::NoInterferenceBound => {
            let mut starts: Vec<Vec<ComplexMatrix>> = vec![state.alg2(config)?.0.design.sigmas()];
            if let Some((d, _)) = &state.alg1 {
                starts.push(d.sigmas());
            }
            let params = Alg2Params {
                max_iter: BOUND_MAX_ITER,
                ..alg2_params(config)
            };
            let (report, _) = baselines::max_no_interference_bound(
                &state.scenario,
                &state.ensembles,
                &params,
                &starts,
                Some(BOUND_FIT_SAMPLES),
            )?;
            (report, 0.0)
        }
        Algorithm::Tdma => {
            let r = baselines::tdma_rate(&state.scenario, &state.ensembles, config.tdma_variant)?;
            (baseline_report(r), 0.0)
        }
        Algorithm::Opportunistic => {
            let r = baselines::opportunistic_schedule(&state.scenario, &state.ensembles)?;
            (baseline_report(r), 0.0)
        }
    })
}

fn baseline_report(r: baselines::BaselineReport) -> rates::RateReport {
    rates::RateReport {
        per_user_stderr: vec![0.0; r.per_user.len()],
        per_user_rate: r.per_user,
        weighted_sum: r.sum_rate,
        mc_stderr: r.mc_stderr,
        samples_used: r.samples_used,
    }
}

fn locate(e: Error, alg: Algorithm, snr: f64) -> Error {
    match e {
        Error::Precondition(m) => Error::Precondition(format!("{} at {snr} dB: {m}", alg.label())),
        Error::Numerical { context, sample } => Error::Numerical {
            context: format!("{} at {snr} dB: {context}", alg.label()),
            sample,
        },
        other => other,
    }
}
