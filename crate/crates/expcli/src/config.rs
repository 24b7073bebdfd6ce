//! JSON experiment configuration.

use std::path::PathBuf;
use std::str::FromStr;

use entloc::localize::{SearchKind, SearchSpace, DEFAULT_BUDGET};
use entloc::{HaarFamily, MeasurementMatrix, StateFamily};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExperimentKind {
    #[serde(rename = "TABLE1")]
    Table1,
    #[serde(rename = "F_R_CURVE")]
    FrCurve,
    #[serde(rename = "DELTA_SWEEP")]
    DeltaSweep,
    #[serde(rename = "ROUNDS_VS_GGM")]
    RoundsVsGgm,
    #[serde(rename = "CLASS_FRACTION")]
    ClassFraction,
    #[serde(rename = "FIDELITY_SWEEP")]
    FidelitySweep,
    #[serde(rename = "SLE_CURVE")]
    SleCurve,
    #[serde(rename = "CUSTOM")]
    Custom,
}

/// A list of values, either explicit or as an inclusive `start:stop:step` range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Grid {
    Value(f64),
    List(Vec<f64>),
    Range { start: f64, stop: f64, step: f64 },
}

impl Grid {
    pub fn values(&self) -> Result<Vec<f64>> {
        let v = match self {
            Grid::Value(x) => vec![*x],
            Grid::List(v) => v.clone(),
            Grid::Range { start, stop, step } => {
                if !(*step > 0.0) || stop < start {
                    return Err(Error::config(format!("bad range {start}:{stop}:{step}")));
                }
                let n = ((stop - start) / step + 1e-9).floor() as usize + 1;
                (0..n)
                    .map(|i| ((start + i as f64 * step) * 1e12).round() / 1e12)
                    .collect()
            }
        };
        if v.is_empty() {
            return Err(Error::config("grid is empty"));
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::config("grid contains a non-finite value"));
        }
        Ok(v)
    }
}

impl FromStr for Grid {
    type Err = Error;

    /// Accepts `x`, `a,b,c` or `start:stop:step`.
    fn from_str(s: &str) -> Result<Self> {
        let num = |t: &str| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Error::config(format!("not a number: `{t}`")))
        };
        let parts: Vec<&str> = s.split(':').collect();
        match parts.len() {
            1 if s.contains(',') => Ok(Grid::List(s.split(',').map(num).collect::<Result<_>>()?)),
            1 => Ok(Grid::Value(num(s)?)),
            3 => Ok(Grid::Range {
                start: num(parts[0])?,
                stop: num(parts[1])?,
                step: num(parts[2])?,
            }),
            _ => Err(Error::config(format!("cannot parse grid `{s}`"))),
        }
    }
}

/// Inclusive integer range written `a..b`, or a single integer.
pub fn parse_int_range(s: &str) -> Result<Vec<usize>> {
    let num = |t: &str| {
        t.trim()
            .parse::<usize>()
            .map_err(|_| Error::config(format!("not an integer: `{t}`")))
    };
    let v: Vec<usize> = match s.split_once("..") {
        Some((a, b)) => {
            let b = b.strip_prefix('=').unwrap_or(b);
            (num(a)?..=num(b)?).collect()
        }
        None if s.contains(',') => s.split(',').map(num).collect::<Result<_>>()?,
        None => vec![num(s)?],
    };
    if v.is_empty() {
        return Err(Error::config(format!("empty range `{s}`")));
    }
    Ok(v)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default)]
    pub dir: Option<PathBuf>,
    #[serde(default)]
    pub format: Option<Format>,
    #[serde(default)]
    pub svg: bool,
}

/// One fidelity case: a three-qubit family measured along a fixed pattern.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FidelityCase {
    pub name: String,
    pub family: StateFamily,
    pub pattern: String,
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub eta: Option<Grid>,
    #[serde(default, alias = "R_max")]
    pub r_max: Option<usize>,
    #[serde(default, alias = "R_min")]
    pub r_min: Option<usize>,
    /// Qubit counts for GHZ sweeps.
    #[serde(default)]
    pub n: Option<Vec<usize>>,
    #[serde(default)]
    pub family: Option<StateFamily>,
    #[serde(default)]
    pub families: Option<Vec<StateFamily>>,
    #[serde(default)]
    pub c0_grid: Option<Grid>,
    #[serde(default)]
    pub ggm_grid: Option<Grid>,
    #[serde(default)]
    pub classes: Option<Vec<HaarFamily>>,
    #[serde(default = "default_sample_size")]
    pub sample_size: usize,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default)]
    pub space: Option<SearchKind>,
    /// Direction labels per assisting qubit, e.g. `["xyxyxy"]`.
    #[serde(default)]
    pub pattern: Option<Vec<String>>,
    #[serde(default = "default_true")]
    pub dedup: bool,
    #[serde(default)]
    pub budget: Option<usize>,
    /// Table 1 only: derive N > 3 from the three-qubit run.
    #[serde(default)]
    pub factorized: bool,
    #[serde(default)]
    pub weighted: bool,
    #[serde(default)]
    pub cases: Option<Vec<FidelityCase>>,
    /// Unsharpness grid for the fidelity η-sweep.
    #[serde(default)]
    pub sweep_eta: Option<Grid>,
    #[serde(default)]
    pub output: OutputConfig,
}

fn default_sample_size() -> usize {
    200
}

fn default_epsilon() -> f64 {
    5e-3
}

fn default_true() -> bool {
    true
}

pub const DEFAULT_ETA: f64 = 0.8;

impl ExperimentConfig {
    pub fn new(experiment: ExperimentKind) -> Self {
        Self {
            experiment,
            seed: None,
            eta: None,
            r_max: None,
            r_min: None,
            n: None,
            family: None,
            families: None,
            c0_grid: None,
            ggm_grid: None,
            classes: None,
            sample_size: default_sample_size(),
            epsilon: default_epsilon(),
            space: None,
            pattern: None,
            dedup: true,
            budget: None,
            factorized: false,
            weighted: false,
            cases: None,
            sweep_eta: None,
            output: OutputConfig::default(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn seed_or_zero(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn budget(&self) -> usize {
        self.budget.unwrap_or(DEFAULT_BUDGET)
    }

    /// The single unsharpness value; a grid is rejected.
    pub fn eta_value(&self) -> Result<f64> {
        match &self.eta {
            None => Ok(DEFAULT_ETA),
            Some(g) => match g.values()?.as_slice() {
                [x] => Ok(*x),
                _ => Err(Error::config("this experiment takes a single eta, not a grid")),
            },
        }
    }

    pub fn eta_values(&self, default: &Grid) -> Result<Vec<f64>> {
        self.eta.as_ref().unwrap_or(default).values()
    }

    pub fn rounds_max(&self, default: usize) -> usize {
        self.r_max.unwrap_or(default)
    }

    /// Search space from `space` and `pattern`, falling back to `default`.
    pub fn search_space(&self, default: SearchKind) -> Result<SearchSpace> {
        let kind = self.space.unwrap_or(if self.pattern.is_some() {
            SearchKind::FixedPattern
        } else {
            default
        });
        Ok(match kind {
            SearchKind::FullSphere => SearchSpace::full_sphere(),
            SearchKind::Pauli => SearchSpace::pauli(),
            SearchKind::Ops => SearchSpace::ops(),
            SearchKind::FixedPattern => {
                let rows = self
                    .pattern
                    .as_ref()
                    .ok_or_else(|| Error::config("FIXED_PATTERN space needs `pattern`"))?;
                let rows: Vec<&str> = rows.iter().map(String::as_str).collect();
                SearchSpace::fixed_pattern(MeasurementMatrix::from_labels(&rows)?)
            }
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.sample_size == 0 {
            return Err(Error::config("sample_size must be at least 1"));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::config("epsilon must be positive"));
        }
        for g in [&self.eta, &self.sweep_eta].into_iter().flatten() {
            for x in g.values()? {
                if !(x > 0.0 && x <= 1.0) {
                    return Err(Error::config(format!("eta {x} outside (0, 1]")));
                }
            }
        }
        if let Some(g) = &self.c0_grid {
            for x in g.values()? {
                if !(x > 0.0 && x < 1.0) {
                    return Err(Error::config(format!("c0 {x} outside (0, 1)")));
                }
            }
        }
        if let Some(g) = &self.ggm_grid {
            for x in g.values()? {
                if !(x > 0.0 && x <= 0.5) {
                    return Err(Error::config(format!("GGM {x} outside (0, 1/2]")));
                }
            }
        }
        if self.r_max == Some(0) {
            return Err(Error::config("R_max must be at least 1"));
        }
        if let (Some(a), Some(b)) = (self.r_min, self.r_max) {
            if a == 0 || a > b {
                return Err(Error::config(format!("bad round range {a}..{b}")));
            }
        }
        if let Some(n) = &self.n {
            if n.is_empty() {
                return Err(Error::config("qubit list is empty"));
            }
            if self.experiment == ExperimentKind::Table1 && n.iter().any(|&k| !(3..=7).contains(&k)) {
                return Err(Error::config("TABLE1 supports N in 3..7"));
            }
            if n.iter().any(|&k| k < 3) {
                return Err(Error::config("at least three qubits are required"));
            }
        }
        for list in [&self.families].into_iter().flatten() {
            if list.is_empty() {
                return Err(Error::config("family list is empty"));
            }
        }
        if matches!(&self.classes, Some(c) if c.is_empty()) {
            return Err(Error::config("class list is empty"));
        }
        if matches!(&self.cases, Some(c) if c.is_empty()) {
            return Err(Error::config("case list is empty"));
        }
        if self.experiment == ExperimentKind::ClassFraction && self.seed.is_none() {
            return Err(Error::config("CLASS_FRACTION samples random states and needs an explicit seed"));
        }
        if self.experiment == ExperimentKind::Custom && self.family.is_none() {
            return Err(Error::config("CUSTOM needs a `family`"));
        }
        Ok(())
    }
}
