//! Flat `key = value` experiment configuration.
//!
//! ```text
//! # comments start with '#'
//! experiment = simple-convergence
//! m = 100, 1000, inf
//! ```
//!
//! Keys missing from a file take the defaults of the named experiment, so a
//! config holding only `experiment = ...` is complete.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use crate::error::{invalid, Error, Result};
use crate::signals::SourceDistribution;

/// Largest finite sample count accepted unless `allow_large_m` is set.
pub const DEFAULT_M_CAP: usize = 100_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExperimentKind {
    InclusionRatio,
    SimpleConvergence,
    SparseStudy,
    Scaling,
    Hypothesis,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 5] = [
        Self::InclusionRatio,
        Self::SimpleConvergence,
        Self::SparseStudy,
        Self::Scaling,
        Self::Hypothesis,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::InclusionRatio => "inclusion-ratio",
            Self::SimpleConvergence => "simple-convergence",
            Self::SparseStudy => "sparse-study",
            Self::Scaling => "scaling",
            Self::Hypothesis => "hypothesis",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s).ok_or_else(|| {
            let names: Vec<&str> = Self::ALL.iter().map(|k| k.name()).collect();
            Error::InvalidInput(format!("unknown experiment {s:?}, expected one of {}", names.join(", ")))
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GraphFamily {
    Geometric,
    ErdosRenyi,
    Ring,
    Uniform,
}

impl GraphFamily {
    pub fn name(self) -> &'static str {
        match self {
            Self::Geometric => "rg",
            Self::ErdosRenyi => "er",
            Self::Ring => "ring",
            Self::Uniform => "uniform",
        }
    }
}

impl fmt::Display for GraphFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GraphFamily {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rg" => Ok(Self::Geometric),
            "er" => Ok(Self::ErdosRenyi),
            "ring" => Ok(Self::Ring),
            "uniform" => Ok(Self::Uniform),
            other => invalid(format!("unknown graph model {other:?} (rg, er, ring, uniform)")),
        }
    }
}

/// Number of observed signals. `Exact` skips sampling and uses the
/// eigenbasis of the generating operator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum SampleCount {
    Finite(usize),
    Exact,
}

impl SampleCount {
    /// Stable index for seed derivation.
    pub fn seed_key(self) -> u64 {
        match self {
            Self::Finite(m) => m as u64,
            Self::Exact => u64::MAX,
        }
    }
}

impl fmt::Display for SampleCount {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Finite(m) => write!(f, "{m}"),
            Self::Exact => f.write_str("inf"),
        }
    }
}

impl FromStr for SampleCount {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        if s == "inf" {
            return Ok(Self::Exact);
        }
        // accept 1e5 as well as 100000
        let v: f64 = s.parse().map_err(|_| Error::Parse(format!("bad sample count {s:?}")))?;
        if !(v >= 2.0 && v.fract() == 0.0 && v <= u32::MAX as f64) {
            return invalid(format!("sample count must be an integer >= 2 or inf, got {s}"));
        }
        Ok(Self::Finite(v as usize))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub model: GraphFamily,
    pub n: usize,
    pub radius: f64,
    pub probability: f64,
    pub m: Vec<SampleCount>,
    /// Fixed diffusion counts (inclusion ratio).
    pub k: Vec<u32>,
    pub k_min: u32,
    pub k_max: u32,
    pub trials: usize,
    pub seed: u64,
    pub tolerance: f64,
    /// Extra membership tolerances reported by the inclusion ratio.
    pub sensitivity: Vec<f64>,
    pub source: SourceDistribution,
    pub n_list: Vec<usize>,
    pub models: Vec<GraphFamily>,
    /// Erdős–Rényi probability in the scaling study is `er_scale · ln N / N`.
    pub er_scale: f64,
    pub candidates: usize,
    pub param_min: f64,
    pub param_max: f64,
    pub allow_large_m: bool,
    pub out_dir: PathBuf,
}

impl ExperimentConfig {
    pub fn defaults(experiment: ExperimentKind) -> Self {
        let base = Self {
            experiment,
            model: GraphFamily::Geometric,
            n: 10,
            radius: 0.6,
            probability: 0.3,
            m: [100, 1000, 10_000, 100_000].map(SampleCount::Finite).to_vec(),
            k: vec![1, 4, 20],
            k_min: 1,
            k_max: 10,
            trials: 200,
            seed: 1,
            tolerance: 1e-9,
            sensitivity: vec![1e-6, 1e-3],
            source: SourceDistribution::Uniform,
            n_list: vec![10, 20, 30, 40, 50],
            models: vec![GraphFamily::Geometric, GraphFamily::ErdosRenyi, GraphFamily::Ring],
            er_scale: 2.0,
            candidates: 20,
            param_min: 0.2,
            param_max: 0.6,
            allow_large_m: false,
            out_dir: PathBuf::from("results"),
        };
        match experiment {
            ExperimentKind::InclusionRatio => Self {
                model: GraphFamily::Uniform,
                m: [10, 10_000, 100_000].map(SampleCount::Finite).to_vec(),
                ..base
            },
            ExperimentKind::SimpleConvergence => Self {
                m: [10, 100, 1000, 10_000, 100_000].map(SampleCount::Finite).to_vec(),
                ..base
            },
            ExperimentKind::SparseStudy => base,
            ExperimentKind::Scaling => {
                Self { m: vec![SampleCount::Finite(100_000)], trials: 50, ..base }
            }
            ExperimentKind::Hypothesis => {
                Self { m: [10, 100, 200].map(SampleCount::Finite).to_vec(), trials: 100, ..base }
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 || self.n_list.iter().any(|&n| n < 3) {
            return invalid("graph orders must be at least 2 (3 in n_list, for rings)");
        }
        if self.m.is_empty() {
            return invalid("m list is empty");
        }
        if !self.allow_large_m {
            if let Some(m) = self.m.iter().find(|m| matches!(m, SampleCount::Finite(v) if *v > DEFAULT_M_CAP)) {
                return invalid(format!("m = {m} exceeds {DEFAULT_M_CAP}; set allow_large_m = true"));
            }
        }
        if self.k.is_empty() || self.k.contains(&0) {
            return invalid("k list must be nonempty with entries >= 1");
        }
        if self.k_min < 1 || self.k_min > self.k_max {
            return invalid("need 1 <= k_min <= k_max");
        }
        if self.trials == 0 {
            return invalid("trials must be positive");
        }
        if !(self.tolerance >= 0.0) || self.sensitivity.iter().any(|t| !(*t >= 0.0)) {
            return invalid("tolerances must be nonnegative");
        }
        if !(self.radius > 0.0) || !(0.0..=1.0).contains(&self.probability) || !(self.er_scale > 0.0) {
            return invalid("radius, probability or er_scale out of range");
        }
        if self.candidates < 2 {
            return invalid("hypothesis test needs at least two candidates");
        }
        if !(0.0 < self.param_min && self.param_min <= self.param_max && self.param_max <= 1.0) {
            return invalid("need 0 < param_min <= param_max <= 1");
        }
        if self.models.is_empty() || self.n_list.is_empty() {
            return invalid("models and n_list must be nonempty");
        }
        Ok(())
    }

    /// Parses a config file; unspecified keys take the experiment's defaults.
    pub fn parse(text: &str) -> Result<Self> {
        let mut pairs = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("line {}: expected key = value", lineno + 1)))?;
            pairs.push((key.trim().to_string(), value.trim().to_string()));
        }
        let kind = pairs
            .iter()
            .find(|(k, _)| k == "experiment")
            .ok_or_else(|| Error::Parse("missing `experiment` key".into()))?
            .1
            .parse()?;
        let mut cfg = Self::defaults(kind);
        for (key, value) in &pairs {
            cfg.set(key, value)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Applies one `key = value` override.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "experiment" => self.experiment = value.parse()?,
            "model" => self.model = value.parse()?,
            "n" => self.n = num(key, value)?,
            "radius" => self.radius = num(key, value)?,
            "probability" => self.probability = num(key, value)?,
            "m" => self.m = list(key, value)?,
            "k" => self.k = list(key, value)?,
            "k_min" => self.k_min = num(key, value)?,
            "k_max" => self.k_max = num(key, value)?,
            "trials" => self.trials = num(key, value)?,
            "seed" => self.seed = num(key, value)?,
            "tolerance" => self.tolerance = num(key, value)?,
            "sensitivity" => self.sensitivity = list(key, value)?,
            "source" => self.source = value.parse()?,
            "n_list" => self.n_list = list(key, value)?,
            "models" => self.models = list(key, value)?,
            "er_scale" => self.er_scale = num(key, value)?,
            "candidates" => self.candidates = num(key, value)?,
            "param_min" => self.param_min = num(key, value)?,
            "param_max" => self.param_max = num(key, value)?,
            "allow_large_m" => self.allow_large_m = num(key, value)?,
            "out_dir" => self.out_dir = PathBuf::from(value),
            other => return invalid(format!("unknown config key {other:?}")),
        }
        Ok(())
    }

    /// Writes every key, so the output parses back to an equal config.
    pub fn to_config_string(&self) -> String {
        fn join<T: fmt::Display>(v: &[T]) -> String {
            v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")
        }
        fn join_f(v: &[f64]) -> String {
            v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(", ")
        }
        let source = match self.source {
            SourceDistribution::Uniform => "uniform",
            SourceDistribution::Gaussian => "gaussian",
        };
        let lines = [
            format!("experiment = {}", self.experiment),
            format!("model = {}", self.model),
            format!("n = {}", self.n),
            format!("radius = {:?}", self.radius),
            format!("probability = {:?}", self.probability),
            format!("m = {}", join(&self.m)),
            format!("k = {}", join(&self.k)),
            format!("k_min = {}", self.k_min),
            format!("k_max = {}", self.k_max),
            format!("trials = {}", self.trials),
            format!("seed = {}", self.seed),
            format!("tolerance = {:?}", self.tolerance),
            format!("sensitivity = {}", join_f(&self.sensitivity)),
            format!("source = {source}"),
            format!("n_list = {}", join(&self.n_list)),
            format!("models = {}", join(&self.models)),
            format!("er_scale = {:?}", self.er_scale),
            format!("candidates = {}", self.candidates),
            format!("param_min = {:?}", self.param_min),
            format!("param_max = {:?}", self.param_max),
            format!("allow_large_m = {}", self.allow_large_m),
            format!("out_dir = {}", self.out_dir.display()),
        ];
        let mut s = lines.join("\n");
        s.push('\n');
        s
    }
}

fn num<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| Error::Parse(format!("bad value {value:?} for {key}")))
}

fn list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    if value.is_empty() {
        return Ok(Vec::new());
    }
    value.split(',').map(|v| num(key, v.trim())).collect()
}
