use std::fmt;
use std::str::FromStr;

use crate::kinematics::MotionKind;
use crate::verify::{Suite, DEFAULT_TOL};

/// Which spin representation `spin` evaluates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum SpinMethod {
    /// Eigenprojection sum.
    Spectral,
    /// `W − σ(ad_H)[D]` through the Hadamard kernel.
    Commutator,
    /// `W − σ(ad_H)[D]` through the σ power series.
    Series,
    /// Commutator result plus the discrepancy to the projection sum.
    Both,
}

impl fmt::Display for SpinMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Spectral => "spectral",
            Self::Commutator => "commutator",
            Self::Series => "series",
            Self::Both => "both",
        })
    }
}

impl FromStr for SpinMethod {
    type Err = ConfigError;
    fn from_str(s: &str) -> Result<Self, ConfigError> {
        <Self as clap::ValueEnum>::from_str(s, false).map_err(|_| ConfigError::Value { key: "method".into(), value: s.into() })
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("line {line}: expected key=value, got `{text}`")]
    Syntax { line: usize, text: String },
    #[error("unknown config key `{0}`")]
    UnknownKey(String),
    #[error("invalid value `{value}` for `{key}`")]
    Value { key: String, value: String },
}

/// Every setting a command reads. The textual form is one `key=value` per
/// line in a fixed key order; `#` starts a comment.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    pub dim: usize,
    pub tol: f64,
    pub dt: f64,
    pub t_end: f64,
    pub motion: MotionKind,
    pub kappa: f64,
    pub record_every: usize,
    pub method: SpinMethod,
    pub suite: Suite,
    pub trials: u64,
    pub output_path: String,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            dim: 3,
            tol: DEFAULT_TOL,
            dt: 1e-3,
            t_end: 1.0,
            motion: MotionKind::SimpleShear,
            kappa: 1.0,
            record_every: 10,
            method: SpinMethod::Both,
            suite: Suite::All,
            trials: 500,
            output_path: String::new(),
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, ConfigError> {
    value.parse().map_err(|_| ConfigError::Value { key: key.into(), value: value.into() })
}

impl RunConfig {
    /// Applies one `key=value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        match key {
            "seed" => self.seed = parse(key, value)?,
            "dim" => self.dim = parse(key, value)?,
            "tol" => self.tol = parse(key, value)?,
            "dt" => self.dt = parse(key, value)?,
            "t_end" => self.t_end = parse(key, value)?,
            "motion" => self.motion = parse(key, value)?,
            "kappa" => self.kappa = parse(key, value)?,
            "record_every" => self.record_every = parse(key, value)?,
            "method" => self.method = parse(key, value)?,
            "suite" => self.suite = parse(key, value)?,
            "trials" => self.trials = parse(key, value)?,
            "output_path" => self.output_path = value.to_string(),
            other => return Err(ConfigError::UnknownKey(other.to_string())),
        }
        Ok(())
    }

    /// Overlays the settings found in `text` onto `self`.
    pub fn merge_text(&mut self, text: &str) -> Result<(), ConfigError> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| ConfigError::Syntax { line: i + 1, text: raw.to_string() })?;
            self.set(k.trim(), v.trim())?;
        }
        Ok(())
    }
}

impl fmt::Display for RunConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "seed={}", self.seed)?;
        writeln!(f, "dim={}", self.dim)?;
        writeln!(f, "tol={:e}", self.tol)?;
        writeln!(f, "dt={:e}", self.dt)?;
        writeln!(f, "t_end={}", self.t_end)?;
        writeln!(f, "motion={}", self.motion)?;
        writeln!(f, "kappa={}", self.kappa)?;
        writeln!(f, "record_every={}", self.record_every)?;
        writeln!(f, "method={}", self.method)?;
        writeln!(f, "suite={}", self.suite)?;
        writeln!(f, "trials={}", self.trials)?;
        writeln!(f, "output_path={}", self.output_path)
    }
}

impl FromStr for RunConfig {
    type Err = ConfigError;
    fn from_str(s: &str) -> Result<Self, ConfigError> {
        let mut cfg = Self::default();
        cfg.merge_text(s)?;
        Ok(cfg)
    }
}
