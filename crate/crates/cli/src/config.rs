//! Flat `key = value` experiment files with `[section]` headers.
//!
//! ```text
//! [equation]
//! s = 3
//! q = 1
//!
//! [space]
//! modular = power:p=1
//!
//! [perturbation]
//! phi = mono(1,3) + 0.1*sine(1,1)
//! alpha = const:eps=0.1
//!
//! [method]
//! name = t2
//! ```
//!
//! Sweep files add a `[sweep]` section whose keys are axes (`s`, `q`, `p`,
//! `theta`, `modular`) plus an optional `cap`. Numeric axis values are
//! comma-separated; modular values are separated by `|`.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use modstab_core::direct::DEFAULT_N_MAX;
use modstab_core::{ControlFunction, EquationParams, FunctionHandle, ModularSpec, SampleGrid};
use thiserror::Error;

pub const DEFAULT_SWEEP_CAP: usize = 10_000;
pub const DEFAULT_TOL: f64 = 1e-9;
pub const DEFAULT_SEED: u64 = 0;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("config line {line}: {message}")]
pub struct ConfigError {
    /// 1-based line number, or 0 for errors not tied to a line.
    pub line: usize,
    pub message: String,
}

impl ConfigError {
    fn at(line: usize, message: impl Into<String>) -> Self {
        ConfigError {
            line,
            message: message.into(),
        }
    }

    fn general(message: impl Into<String>) -> Self {
        Self::at(0, message)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    T1,
    T2,
    FixedPoint,
    All,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::T1 => "t1",
            Method::T2 => "t2",
            Method::FixedPoint => "fixedpoint",
            Method::All => "all",
        }
    }

    /// The single-route methods this method runs, in report order.
    pub fn expand(self) -> &'static [Method] {
        match self {
            Method::T1 => &[Method::T1],
            Method::T2 => &[Method::T2],
            Method::FixedPoint => &[Method::FixedPoint],
            Method::All => &[Method::T1, Method::T2, Method::FixedPoint],
        }
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "t1" => Ok(Method::T1),
            "t2" => Ok(Method::T2),
            "fixedpoint" => Ok(Method::FixedPoint),
            "all" => Ok(Method::All),
            other => Err(format!("unknown method {other:?} (expected t1, t2, fixedpoint or all)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

impl Format {
    pub fn name(self) -> &'static str {
        match self {
            Format::Json => "json",
            Format::Csv => "csv",
        }
    }
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            other => Err(format!("unknown format {other:?} (expected json or csv)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

impl GridSpec {
    pub fn build(&self) -> SampleGrid {
        SampleGrid::uniform(self.lo, self.hi, self.count).expect("grid validated at load")
    }
}

/// One experiment, fully validated.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub equation: EquationParams,
    pub modular: ModularSpec,
    pub phi_source: String,
    pub alpha: ControlFunction,
    pub method: Method,
    pub grid: GridSpec,
    pub tol: f64,
    pub n_max: u32,
    pub seed: u64,
    pub output: Option<PathBuf>,
    pub format: Format,
}

impl ExperimentConfig {
    /// The perturbed map; `envnoise` terms without a seed take the experiment seed.
    pub fn phi(&self) -> FunctionHandle {
        FunctionHandle::parse(&self.phi_source, self.seed).expect("phi validated at load")
    }

    pub fn apply(&mut self, overrides: &Overrides) -> Result<(), ConfigError> {
        if let Some(tol) = overrides.tol {
            self.tol = tol;
        }
        if let Some(n) = overrides.n_max {
            self.n_max = n;
        }
        if let Some(seed) = overrides.seed {
            self.seed = seed;
        }
        if let Some(format) = overrides.format {
            self.format = format;
        }
        if let Some(out) = &overrides.out {
            self.output = Some(out.clone());
        }
        self.validate()
    }

    fn validate(&self) -> Result<(), ConfigError> {
        if !(self.tol > 0.0) || !self.tol.is_finite() {
            return Err(ConfigError::general(format!("tol must be positive, got {}", self.tol)));
        }
        if self.n_max == 0 {
            return Err(ConfigError::general("n_max must be at least 1"));
        }
        let GridSpec { lo, hi, count } = self.grid;
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(ConfigError::general(format!("grid needs finite lo < hi, got [{lo}, {hi}]")));
        }
        if count < 2 {
            return Err(ConfigError::general(format!("grid count must be at least 2, got {count}")));
        }
        FunctionHandle::parse(&self.phi_source, self.seed)
            .map_err(|e| ConfigError::general(format!("phi: {e}")))?;
        Ok(())
    }
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub tol: Option<f64>,
    pub n_max: Option<u32>,
    pub seed: Option<u64>,
    pub format: Option<Format>,
    pub out: Option<PathBuf>,
}

/// Axis values of a sweep; an empty axis keeps the base value.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SweepAxes {
    pub s: Vec<u32>,
    pub q: Vec<f64>,
    pub p: Vec<f64>,
    pub theta: Vec<f64>,
    pub modular: Vec<ModularSpec>,
}

impl SweepAxes {
    pub fn cells(&self) -> usize {
        [self.s.len(), self.q.len(), self.p.len(), self.theta.len(), self.modular.len()]
            .iter()
            .map(|&n| n.max(1))
            .product()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub base: ExperimentConfig,
    pub axes: SweepAxes,
    pub cap: usize,
    pub output_dir: Option<PathBuf>,
}

impl SweepConfig {
    pub fn apply(&mut self, overrides: &Overrides) -> Result<(), ConfigError> {
        let mut base_overrides = overrides.clone();
        if let Some(out) = base_overrides.out.take() {
            self.output_dir = Some(out);
        }
        self.base.apply(&base_overrides)
    }
}

struct Entry {
    line: usize,
    value: String,
    used: bool,
}

/// Raw `section.key -> value` map with line numbers.
struct RawConfig {
    entries: BTreeMap<(String, String), Entry>,
}

const SECTIONS: &[(&str, &[&str])] = &[
    ("equation", &["s", "q"]),
    ("space", &["modular"]),
    ("perturbation", &["phi", "alpha"]),
    ("method", &["name"]),
    ("grid", &["lo", "hi", "count"]),
    ("solver", &["tol", "n_max", "seed"]),
    ("output", &["path", "format", "dir"]),
    ("sweep", &["s", "q", "p", "theta", "modular", "cap"]),
];

impl RawConfig {
    fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut entries = BTreeMap::new();
        let mut section: Option<&'static (&'static str, &'static [&'static str])> = None;
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            if let Some(rest) = content.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| ConfigError::at(line, "unterminated section header"))?
                    .trim();
                section = Some(
                    SECTIONS
                        .iter()
                        .find(|(s, _)| *s == name)
                        .ok_or_else(|| ConfigError::at(line, format!("unknown section [{name}]")))?,
                );
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| ConfigError::at(line, format!("expected key = value, got {content:?}")))?;
            let (key, value) = (key.trim(), value.trim());
            let (sec, keys) = section.ok_or_else(|| ConfigError::at(line, "key outside of any section"))?;
            if !keys.contains(&key) {
                return Err(ConfigError::at(line, format!("unknown key {key:?} in [{sec}]")));
            }
            if value.is_empty() {
                return Err(ConfigError::at(line, format!("empty value for {sec}.{key}")));
            }
            let slot = (sec.to_string(), key.to_string());
            if let Some(prev) = entries.get(&slot) {
                let prev: &Entry = prev;
                return Err(ConfigError::at(
                    line,
                    format!("duplicate key {sec}.{key} (first set on line {})", prev.line),
                ));
            }
            entries.insert(
                slot,
                Entry {
                    line,
                    value: value.to_string(),
                    used: false,
                },
            );
        }
        Ok(RawConfig { entries })
    }

    fn get(&mut self, section: &str, key: &str) -> Option<(usize, String)> {
        let e = self.entries.get_mut(&(section.to_string(), key.to_string()))?;
        e.used = true;
        Some((e.line, e.value.clone()))
    }

    fn require(&mut self, section: &str, key: &str) -> Result<(usize, String), ConfigError> {
        self.get(section, key)
            .ok_or_else(|| ConfigError::general(format!("missing required key {section}.{key}")))
    }

    fn parsed<T: FromStr>(&mut self, section: &str, key: &str) -> Result<Option<T>, ConfigError>
    where
        T::Err: fmt::Display,
    {
        match self.get(section, key) {
            None => Ok(None),
            Some((line, v)) => v
                .parse()
                .map(Some)
                .map_err(|e| ConfigError::at(line, format!("{section}.{key}: {e}"))),
        }
    }

    fn has_section(&self, section: &str) -> bool {
        self.entries.keys().any(|(s, _)| s == section)
    }
}

fn finite(line: usize, key: &str, v: f64) -> Result<f64, ConfigError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(ConfigError::at(line, format!("{key} must be finite, got {v}")))
    }
}

fn parse_f64(line: usize, key: &str, text: &str) -> Result<f64, ConfigError> {
    let v: f64 = text
        .trim()
        .parse()
        .map_err(|_| ConfigError::at(line, format!("{key}: not a number: {text:?}")))?;
    finite(line, key, v)
}

fn build_experiment(raw: &mut RawConfig) -> Result<ExperimentConfig, ConfigError> {
    let s: u32 = raw
        .parsed("equation", "s")?
        .ok_or_else(|| ConfigError::general("missing required key equation.s"))?;
    let q = match raw.get("equation", "q") {
        Some((line, v)) => parse_f64(line, "equation.q", &v)?,
        None => 1.0,
    };
    let equation = EquationParams::new(s, q).map_err(|e| ConfigError::general(e.to_string()))?;

    let (line, m) = raw.require("space", "modular")?;
    let modular: ModularSpec = m.parse().map_err(|e| ConfigError::at(line, format!("modular: {e}")))?;

    let (_, phi_source) = raw.require("perturbation", "phi")?;
    let (line, a) = raw.require("perturbation", "alpha")?;
    let alpha: ControlFunction = a.parse().map_err(|e| ConfigError::at(line, format!("alpha: {e}")))?;

    let method: Method = raw
        .parsed("method", "name")?
        .ok_or_else(|| ConfigError::general("missing required key method.name"))?;

    let lo = match raw.get("grid", "lo") {
        Some((line, v)) => parse_f64(line, "grid.lo", &v)?,
        None => -10.0,
    };
    let hi = match raw.get("grid", "hi") {
        Some((line, v)) => parse_f64(line, "grid.hi", &v)?,
        None => 10.0,
    };
    let count = raw.parsed("grid", "count")?.unwrap_or(41);

    let tol = match raw.get("solver", "tol") {
        Some((line, v)) => parse_f64(line, "solver.tol", &v)?,
        None => DEFAULT_TOL,
    };
    let n_max = raw.parsed("solver", "n_max")?.unwrap_or(DEFAULT_N_MAX);
    let seed = raw.parsed("solver", "seed")?.unwrap_or(DEFAULT_SEED);
    let format = raw.parsed("output", "format")?.unwrap_or(Format::Json);
    let output = raw.get("output", "path").map(|(_, p)| PathBuf::from(p));

    let cfg = ExperimentConfig {
        equation,
        modular,
        phi_source,
        alpha,
        method,
        grid: GridSpec { lo, hi, count },
        tol,
        n_max,
        seed,
        output,
        format,
    };
    cfg.validate()?;
    Ok(cfg)
}

fn reject_unused(raw: &RawConfig) -> Result<(), ConfigError> {
    match raw.entries.iter().find(|(_, e)| !e.used) {
        Some(((sec, key), e)) => Err(ConfigError::at(e.line, format!("{sec}.{key} is not valid here"))),
        None => Ok(()),
    }
}

/// Parses a single-experiment file.
pub fn parse_experiment(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let mut raw = RawConfig::parse(text)?;
    if raw.has_section("sweep") {
        return Err(ConfigError::general("[sweep] belongs in a sweep file; use `modstab sweep`"));
    }
    let cfg = build_experiment(&mut raw)?;
    reject_unused(&raw)?;
    Ok(cfg)
}

/// Parses a sweep file: a base experiment plus axes.
pub fn parse_sweep(text: &str) -> Result<SweepConfig, ConfigError> {
    let mut raw = RawConfig::parse(text)?;
    let base = build_experiment(&mut raw)?;
    if base.output.is_some() {
        return Err(ConfigError::general("sweeps write a directory; use output.dir instead of output.path"));
    }

    let numbers = |raw: &mut RawConfig, key: &str| -> Result<Vec<f64>, ConfigError> {
        match raw.get("sweep", key) {
            None => Ok(Vec::new()),
            Some((line, v)) => v
                .split(',')
                .map(|t| parse_f64(line, &format!("sweep.{key}"), t))
                .collect(),
        }
    };
    let s = match raw.get("sweep", "s") {
        None => Vec::new(),
        Some((line, v)) => v
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<u32>()
                    .map_err(|_| ConfigError::at(line, format!("sweep.s: not an integer: {t:?}")))
            })
            .collect::<Result<_, _>>()?,
    };
    let q = numbers(&mut raw, "q")?;
    let p = numbers(&mut raw, "p")?;
    let theta = numbers(&mut raw, "theta")?;
    let modular = match raw.get("sweep", "modular") {
        None => Vec::new(),
        Some((line, v)) => v
            .split('|')
            .map(|t| {
                t.trim()
                    .parse::<ModularSpec>()
                    .map_err(|e| ConfigError::at(line, format!("sweep.modular: {e}")))
            })
            .collect::<Result<_, _>>()?,
    };
    let cap = raw.parsed("sweep", "cap")?.unwrap_or(DEFAULT_SWEEP_CAP);
    let output_dir = raw.get("output", "dir").map(|(_, d)| PathBuf::from(d));
    reject_unused(&raw)?;

    let axes = SweepAxes { s, q, p, theta, modular };
    if axes.cells() > cap {
        return Err(ConfigError::general(format!(
            "sweep has {} cells, above the cap of {cap}",
            axes.cells()
        )));
    }
    Ok(SweepConfig {
        base,
        axes,
        cap,
        output_dir,
    })
}
