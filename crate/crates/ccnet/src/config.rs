//! Experiment configuration: defaults, validation and the JSON text form.

use ccnet_core::lattice::{BoxSpec, Mode};
use clap::ValueEnum;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::fmt;
use std::path::PathBuf;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Experiment {
    Unitarity,
    Spectrum,
    Gaps,
    Moments,
    Correlator,
    Contraction,
    Spread,
    Strip,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Unitarity => "unitarity",
            Experiment::Spectrum => "spectrum",
            Experiment::Gaps => "gaps",
            Experiment::Moments => "moments",
            Experiment::Correlator => "correlator",
            Experiment::Contraction => "contraction",
            Experiment::Spread => "spread",
            Experiment::Strip => "strip",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum GeometryMode {
    Box,
    Torus,
    Strip,
}

/// What the strip experiment measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum StripObservable {
    CorrelatorDecay,
    Spread,
}

/// Everything needed to rerun an experiment. For strips `l2` is the half-height `M`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub phi: f64,
    pub l1: u32,
    pub l2: u32,
    pub mode: GeometryMode,
    pub length: Option<u32>,
    pub s: f64,
    pub rho: Vec<f64>,
    pub theta_count: u32,
    pub eta: f64,
    pub p: f64,
    pub horizon: u32,
    pub trials: u64,
    pub seed: u64,
    pub seeds: u32,
    /// Fit window in rounded Euclidean distance.
    pub d_min: u32,
    pub d_max: u32,
    /// Largest accepted late/early ratio for the spreading plateau.
    pub plateau_factor: f64,
    pub observable: StripObservable,
    pub initial_state: Option<PathBuf>,
    pub operator_out: Option<PathBuf>,
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn defaults_for(experiment: Experiment) -> Self {
        let mut c = ExperimentConfig {
            experiment,
            phi: 0.05,
            l1: 2,
            l2: 2,
            mode: GeometryMode::Box,
            length: None,
            s: 0.5,
            rho: vec![1.05, 1.1],
            theta_count: 16,
            eta: 0.1,
            p: 2.0,
            horizon: 2000,
            trials: 200,
            seed: 0,
            seeds: 32,
            d_min: 2,
            d_max: 8,
            plateau_factor: 2.0,
            observable: StripObservable::CorrelatorDecay,
            initial_state: None,
            operator_out: None,
            workers: None,
            out: None,
        };
        match experiment {
            Experiment::Unitarity => c.trials = 50,
            Experiment::Spectrum => c.trials = 20,
            Experiment::Gaps => {
                c.phi = 0.0;
                (c.l1, c.l2) = (1, 1);
                c.trials = 10_000;
            }
            Experiment::Moments => {
                c.trials = 500;
                c.d_max = 5;
            }
            Experiment::Correlator => {
                (c.l1, c.l2) = (4, 4);
                c.mode = GeometryMode::Torus;
            }
            Experiment::Contraction => {
                (c.l1, c.l2) = (3, 3);
                c.trials = 1000;
            }
            Experiment::Spread => {
                (c.l1, c.l2) = (16, 16);
                c.mode = GeometryMode::Torus;
            }
            Experiment::Strip => {
                (c.l1, c.l2) = (16, 1);
                c.mode = GeometryMode::Strip;
                c.length = Some(64);
                c.trials = 100;
                c.d_max = 14;
            }
        }
        c
    }

    /// The geometry the experiment runs on (for `contraction`, the inner box).
    pub fn geometry(&self) -> Result<BoxSpec, ConfigError> {
        let g = match self.mode {
            GeometryMode::Box => BoxSpec::boxed(self.l1, self.l2),
            GeometryMode::Torus => BoxSpec::torus(self.l1, self.l2),
            GeometryMode::Strip => {
                let length = self
                    .length
                    .ok_or_else(|| ConfigError::field("length", "strip mode needs a length"))?;
                BoxSpec::strip(self.l2, length)
            }
        };
        g.map_err(|e| ConfigError::field("l1", e.to_string()))
    }

    /// `rho × theta` grid, angles `2πk/theta_count`.
    pub fn z_grid(&self) -> Vec<(f64, f64)> {
        let step = std::f64::consts::TAU / f64::from(self.theta_count);
        self.rho
            .iter()
            .flat_map(|&r| (0..self.theta_count).map(move |k| (r, step * f64::from(k))))
            .collect()
    }

    /// Checks every numeric range before any computation.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !self.phi.is_finite() {
            return Err(ConfigError::field(
                "phi",
                format!("must be finite, got {}", self.phi),
            ));
        }
        if self.l2 == 0 {
            return Err(ConfigError::field("l2", "must be positive"));
        }
        if self.mode != GeometryMode::Strip && self.l1 == 0 {
            return Err(ConfigError::field("l1", "must be positive"));
        }
        match (self.mode, self.length) {
            (GeometryMode::Strip, Some(len)) => {
                if len % 2 != 0 || len < 8 * self.l2 {
                    return Err(ConfigError::field(
                        "length",
                        format!(
                            "strip length must be even and at least 8·M = {}, got {len}",
                            8 * self.l2
                        ),
                    ));
                }
            }
            (GeometryMode::Strip, None) => {
                return Err(ConfigError::field("length", "strip mode needs a length"))
            }
            (_, Some(_)) => return Err(ConfigError::field("length", "only strips take a length")),
            (_, None) => {}
        }
        if !(self.s > 0.0 && self.s < 1.0) {
            return Err(ConfigError::field(
                "s",
                format!("must lie in (0, 1), got {}", self.s),
            ));
        }
        if self.rho.is_empty() {
            return Err(ConfigError::field("rho", "needs at least one radius"));
        }
        if let Some(r) = self
            .rho
            .iter()
            .find(|r| !(r.is_finite() && **r > 0.0 && **r != 1.0))
        {
            return Err(ConfigError::field(
                "rho",
                format!("radii must be positive, finite and off the unit circle, got {r}"),
            ));
        }
        if self.theta_count == 0 {
            return Err(ConfigError::field("theta_count", "must be positive"));
        }
        if !(self.eta > 0.0 && self.eta < 2.0) {
            return Err(ConfigError::field(
                "eta",
                format!("must lie in (0, 2), got {}", self.eta),
            ));
        }
        if !(self.p >= 0.0 && self.p.is_finite()) {
            return Err(ConfigError::field(
                "p",
                format!("must be finite and nonnegative, got {}", self.p),
            ));
        }
        if self.horizon == 0 {
            return Err(ConfigError::field("horizon", "must be positive"));
        }
        if self.trials == 0 {
            return Err(ConfigError::field("trials", "must be positive"));
        }
        if self.seeds == 0 {
            return Err(ConfigError::field("seeds", "must be positive"));
        }
        if self.d_min > self.d_max {
            return Err(ConfigError::field(
                "d_min",
                format!("fit window [{}, {}] is empty", self.d_min, self.d_max),
            ));
        }
        if self.plateau_factor.is_nan() || self.plateau_factor <= 0.0 {
            return Err(ConfigError::field("plateau_factor", "must be positive"));
        }
        if self.workers == Some(0) {
            return Err(ConfigError::field("workers", "must be positive"));
        }
        let need_mode = |want: GeometryMode| {
            if self.mode == want {
                Ok(())
            } else {
                Err(ConfigError::field(
                    "mode",
                    format!("{} runs on mode {:?}", self.experiment, want).to_lowercase(),
                ))
            }
        };
        match self.experiment {
            Experiment::Gaps if self.phi != 0.0 => {
                return Err(ConfigError::field(
                    "phi",
                    "the gap law is exact only at phi = 0",
                ));
            }
            Experiment::Gaps | Experiment::Moments | Experiment::Contraction
                if self.trials < 100 =>
            {
                return Err(ConfigError::field(
                    "trials",
                    format!("{} needs at least 100 trials", self.experiment),
                ));
            }
            Experiment::Contraction => need_mode(GeometryMode::Box)?,
            Experiment::Spread => need_mode(GeometryMode::Torus)?,
            Experiment::Strip => need_mode(GeometryMode::Strip)?,
            _ => {}
        }
        self.geometry()?;
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Parses and validates; errors carry the line of the offending text.
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let c: ExperimentConfig = serde_json::from_str(text).map_err(|e| ConfigError {
            field: None,
            line: Some(e.line()),
            message: e.to_string(),
        })?;
        c.validate().map_err(|mut e| {
            e.line = e.field.as_deref().and_then(|f| locate(text, f));
            e
        })?;
        Ok(c)
    }

    /// SHA-256 of the config with the scheduling and output fields cleared.
    pub fn hash(&self) -> String {
        let canonical = ExperimentConfig {
            workers: None,
            out: None,
            operator_out: None,
            ..self.clone()
        };
        let json = serde_json::to_string(&canonical).expect("config serializes");
        format!("{:x}", Sha256::digest(json.as_bytes()))
    }
}

/// Line (1-based) of the first `"field":` key in a JSON text.
fn locate(text: &str, field: &str) -> Option<usize> {
    let key = format!("\"{field}\"");
    text.lines().position(|l| l.contains(&key)).map(|i| i + 1)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub field: Option<String>,
    pub line: Option<usize>,
    pub message: String,
}

impl ConfigError {
    pub fn field(name: &str, message: impl Into<String>) -> Self {
        ConfigError {
            field: Some(name.to_string()),
            line: None,
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(line) = self.line {
            write!(f, "line {line}: ")?;
        }
        if let Some(field) = &self.field {
            write!(f, "{field}: ")?;
        }
        f.write_str(&self.message)
    }
}

impl std::error::Error for ConfigError {}

/// Geometry as the core library sees it; used for metadata.
pub fn mode_name(mode: Mode) -> String {
    match mode {
        Mode::Box => "box".into(),
        Mode::Torus => "torus".into(),
        Mode::Strip { length } => format!("strip:{length}"),
    }
}
