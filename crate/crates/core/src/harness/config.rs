//! JSON experiment configuration.
//!
//! Complex numbers are `[re, im]` pairs and matrices are arrays of rows.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use serde_json::Value;

use super::fixtures;
use crate::baselines::TdmaVariant;
use crate::chanmodels::{ChannelModel, Scenario};
use crate::error::{Error, Result};
use crate::linalg::{c, ComplexMatrix, HermitianPsd};
use crate::optim::Alg1Params;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Alg1,
    Alg2,
    Tdma,
    Opportunistic,
    NoInterferenceBound,
    SimplifiedBound,
}

impl Algorithm {
    pub fn label(self) -> &'static str {
        match self {
            Algorithm::Alg1 => "alg1",
            Algorithm::Alg2 => "alg2",
            Algorithm::Tdma => "tdma",
            Algorithm::Opportunistic => "opportunistic",
            Algorithm::NoInterferenceBound => "no_interference_bound",
            Algorithm::SimplifiedBound => "simplified_bound",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleSpec {
    Count(usize),
    /// Nested-batch selection per SNR point.
    Auto,
}

impl SampleSpec {
    pub fn parse(text: &str) -> Result<Self> {
        if text == "auto" {
            return Ok(SampleSpec::Auto);
        }
        match text.parse::<usize>() {
            Ok(n) if n > 0 => Ok(SampleSpec::Count(n)),
            _ => Err(Error::config("samples", format!("expected a positive count or \"auto\", got {text:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormalizeMode {
    /// Reject models that violate the energy normalization.
    #[default]
    Check,
    /// Rescale correlations (and line-of-sight matrices) to satisfy it.
    Rescale,
    Off,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TdmaSetting {
    #[default]
    Waterfill,
    Isotropic,
}

impl From<TdmaSetting> for TdmaVariant {
    fn from(s: TdmaSetting) -> Self {
        match s {
            TdmaSetting::Waterfill => TdmaVariant::WaterFilling,
            TdmaSetting::Isotropic => TdmaVariant::Isotropic,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Alg1Settings {
    pub eps1: f64,
    pub eps2: f64,
    pub n_max: usize,
    pub beta: f64,
}

impl Default for Alg1Settings {
    fn default() -> Self {
        let p = Alg1Params::default();
        Alg1Settings {
            eps1: p.eps1,
            eps2: p.eps2,
            n_max: p.n_max,
            beta: p.beta,
        }
    }
}

fn default_samples() -> Value {
    Value::from(10_000)
}

fn default_starts() -> usize {
    5
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    scenario: Value,
    snr_grid_db: Vec<f64>,
    algorithms: Vec<Algorithm>,
    #[serde(default = "default_samples")]
    samples: Value,
    #[serde(default)]
    seed: u64,
    #[serde(default)]
    output: Option<PathBuf>,
    #[serde(default)]
    trace_output: Option<PathBuf>,
    #[serde(default)]
    normalize: NormalizeMode,
    #[serde(default)]
    alg1: Alg1Settings,
    #[serde(default = "default_starts")]
    n_starts: usize,
    #[serde(default)]
    tdma_variant: TdmaSetting,
    #[serde(default)]
    order: Option<Vec<usize>>,
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    pub snr_grid_db: Vec<f64>,
    pub algorithms: Vec<Algorithm>,
    pub samples: SampleSpec,
    pub seed: u64,
    pub output: Option<PathBuf>,
    pub trace_output: Option<PathBuf>,
    pub normalize: NormalizeMode,
    pub alg1: Alg1Settings,
    pub n_starts: usize,
    pub tdma_variant: TdmaVariant,
    /// Encoding order as original user indices (0-based).
    pub order: Option<Vec<usize>>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let raw: RawConfig = serde_json::from_str(text)
            .map_err(|e| Error::config(format!("line {} column {}", e.line(), e.column()), e.to_string()))?;
        if raw.snr_grid_db.is_empty() {
            return Err(Error::config("snr_grid_db", "must not be empty"));
        }
        if raw.snr_grid_db.iter().any(|s| !s.is_finite()) {
            return Err(Error::config("snr_grid_db", "entries must be finite"));
        }
        if raw.algorithms.is_empty() {
            return Err(Error::config("algorithms", "must not be empty"));
        }
        if raw.n_starts == 0 {
            return Err(Error::config("n_starts", "must be at least 1"));
        }
        let samples = match &raw.samples {
            Value::String(s) => SampleSpec::parse(s)?,
            Value::Number(n) => SampleSpec::parse(&n.to_string())?,
            other => return Err(Error::config("samples", format!("expected a count or \"auto\", got {other}"))),
        };
        let alg1 = raw.alg1.clone();
        Alg1Params {
            eps1: alg1.eps1,
            eps2: alg1.eps2,
            n_max: alg1.n_max,
            beta: alg1.beta,
            ..Alg1Params::default()
        }
        .validate()
        .map_err(|e| Error::config("alg1", e.to_string()))?;

        let mut scenario = parse_scenario(&raw.scenario)?;
        scenario = match raw.normalize {
            NormalizeMode::Check => {
                scenario
                    .check_normalized(1e-3)
                    .map_err(|e| Error::config("scenario", format!("{e} (set \"normalize\": \"rescale\" to fix)")))?;
                scenario
            }
            NormalizeMode::Rescale => scenario.normalized().map_err(|e| Error::config("scenario", e.to_string()))?,
            NormalizeMode::Off => scenario,
        };
        let order = match raw.order {
            Some(o) => {
                let zero_based: Vec<usize> = o.iter().map(|&i| i.wrapping_sub(1)).collect();
                scenario = scenario
                    .permuted(&zero_based)
                    .map_err(|e| Error::config("order", format!("{e} (1-based user indices)")))?;
                Some(zero_based)
            }
            None => None,
        };
        Ok(ExperimentConfig {
            scenario,
            snr_grid_db: raw.snr_grid_db,
            algorithms: raw.algorithms,
            samples,
            seed: raw.seed,
            output: raw.output,
            trace_output: raw.trace_output,
            normalize: raw.normalize,
            alg1,
            n_starts: raw.n_starts,
            tdma_variant: raw.tdma_variant.into(),
            order,
        })
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    pub fn alg1_params(&self) -> Alg1Params {
        Alg1Params {
            eps1: self.alg1.eps1,
            eps2: self.alg1.eps2,
            n_max: self.alg1.n_max,
            beta: self.alg1.beta,
            samples: match self.samples {
                SampleSpec::Count(n) => n,
                SampleSpec::Auto => Alg1Params::default().samples,
            },
            seed: self.seed,
        }
    }
}

fn field<'a>(obj: &'a Value, key: &str, loc: &str) -> Result<&'a Value> {
    obj.get(key)
        .ok_or_else(|| Error::config(loc, format!("missing field {key:?}")))
}

fn number(v: &Value, loc: &str) -> Result<f64> {
    v.as_f64()
        .filter(|x| x.is_finite())
        .ok_or_else(|| Error::config(loc, format!("expected a finite number, got {v}")))
}

/// `[[[re, im], ...], ...]` to a matrix.
pub fn parse_matrix(v: &Value, loc: &str) -> Result<ComplexMatrix> {
    let rows = v
        .as_array()
        .filter(|r| !r.is_empty())
        .ok_or_else(|| Error::config(loc, "expected a nonempty array of rows"))?;
    let mut entries = Vec::new();
    let mut cols = None;
    for (i, row) in rows.iter().enumerate() {
        let row_loc = format!("{loc}[{i}]");
        let items = row
            .as_array()
            .ok_or_else(|| Error::config(&row_loc, "expected an array of [re, im] pairs"))?;
        match cols {
            None => cols = Some(items.len()),
            Some(n) if n != items.len() => {
                return Err(Error::config(&row_loc, format!("row has {} entries, expected {n}", items.len())))
            }
            _ => {}
        }
        for (j, z) in items.iter().enumerate() {
            let z_loc = format!("{row_loc}[{j}]");
            let pair = z
                .as_array()
                .filter(|p| p.len() == 2)
                .ok_or_else(|| Error::config(&z_loc, "complex entries are [re, im] pairs"))?;
            entries.push(c(number(&pair[0], &z_loc)?, number(&pair[1], &z_loc)?));
        }
    }
    let cols = cols.unwrap_or(0);
    if cols == 0 {
        return Err(Error::config(loc, "matrix has no columns"));
    }
    Ok(ComplexMatrix::from_row_slice(rows.len(), cols, &entries))
}

fn parse_psd(v: &Value, loc: &str) -> Result<HermitianPsd> {
    let m = parse_matrix(v, loc)?;
    HermitianPsd::symmetrized(m).map_err(|e| Error::config(loc, e.to_string()))
}

fn parse_user(v: &Value, loc: &str) -> Result<ChannelModel> {
    let kind = field(v, "model", loc)?
        .as_str()
        .ok_or_else(|| Error::config(format!("{loc}.model"), "expected a string"))?;
    let model = match kind {
        "kronecker" => ChannelModel::kronecker(
            parse_psd(field(v, "rx_corr", loc)?, &format!("{loc}.rx_corr"))?,
            parse_psd(field(v, "tx_corr", loc)?, &format!("{loc}.tx_corr"))?,
        ),
        "rician" => ChannelModel::rician(
            parse_matrix(field(v, "los", loc)?, &format!("{loc}.los"))?,
            number(field(v, "k", loc)?, &format!("{loc}.k"))?,
            parse_psd(field(v, "rx_corr", loc)?, &format!("{loc}.rx_corr"))?,
            parse_psd(field(v, "tx_corr", loc)?, &format!("{loc}.tx_corr"))?,
        )
        .map_err(|e| Error::config(loc, e.to_string()))?,
        "finite_support" => {
            let atoms = field(v, "atoms", loc)?
                .as_array()
                .ok_or_else(|| Error::config(format!("{loc}.atoms"), "expected an array"))?;
            let parsed = atoms
                .iter()
                .enumerate()
                .map(|(i, a)| {
                    let a_loc = format!("{loc}.atoms[{i}]");
                    Ok((
                        parse_matrix(field(a, "h", &a_loc)?, &format!("{a_loc}.h"))?,
                        number(field(a, "p", &a_loc)?, &format!("{a_loc}.p"))?,
                    ))
                })
                .collect::<Result<Vec<_>>>()?;
            ChannelModel::finite_support(parsed).map_err(|e| Error::config(loc, e.to_string()))?
        }
        other => {
            return Err(Error::config(
                format!("{loc}.model"),
                format!("unknown model {other:?}; expected kronecker, rician or finite_support"),
            ))
        }
    };
    Ok(model)
}

/// Fixture name, `{"fixture": name, "k": K}` or an inline `{"users": [...], "weights": [...]}`.
pub fn parse_scenario(v: &Value) -> Result<Scenario> {
    if let Some(name) = v.as_str() {
        return fixtures::load_fixture(name);
    }
    if let Some(name) = v.get("fixture") {
        let name = name
            .as_str()
            .ok_or_else(|| Error::config("scenario.fixture", "expected a string"))?;
        return match v.get("k") {
            Some(k) if name == "rician-example" => fixtures::rician_example(number(k, "scenario.k")?),
            Some(_) => Err(Error::config("scenario.k", "only rician-example takes a K-factor")),
            None => fixtures::load_fixture(name),
        };
    }
    let users = field(v, "users", "scenario")?
        .as_array()
        .filter(|u| !u.is_empty())
        .ok_or_else(|| Error::config("scenario.users", "expected a nonempty array"))?;
    let models = users
        .iter()
        .enumerate()
        .map(|(i, u)| parse_user(u, &format!("scenario.users[{i}]")))
        .collect::<Result<Vec<_>>>()?;
    let weights = match v.get("weights") {
        Some(w) => w
            .as_array()
            .ok_or_else(|| Error::config("scenario.weights", "expected an array"))?
            .iter()
            .enumerate()
            .map(|(i, x)| number(x, &format!("scenario.weights[{i}]")))
            .collect::<Result<Vec<_>>>()?,
        None => vec![1.0; models.len()],
    };
    Scenario::new(models, weights, 1.0, 1.0).map_err(|e| Error::config("scenario", e.to_string()))
}
