use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dynamics::DEFAULT_DT;
use crate::error::{Error, Result};
use crate::measurement::{paper_beta, ConfusionMatrix};
use crate::qcore::SystemParams;

pub const DEFAULT_SHOTS: u64 = 4096;
/// Drive used by the device runs and by every command without an explicit J.
pub const DEFAULT_J: f64 = 0.24;
/// Drive used by the mixture experiment.
pub const MIXTURE_J: f64 = 0.5;

fn default_gamma_e() -> f64 {
    SystemParams::DEVICE_GAMMA_E
}

fn default_gamma_f() -> f64 {
    SystemParams::DEVICE_GAMMA_F
}

fn default_shots() -> u64 {
    DEFAULT_SHOTS
}

fn default_integrator_dt() -> f64 {
    DEFAULT_DT
}

/// Physical parameters as written in a config file. `j` may be left out so
/// each command can apply its own default.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsConfig {
    #[serde(default = "default_gamma_e")]
    pub gamma_e: f64,
    #[serde(default = "default_gamma_f")]
    pub gamma_f: f64,
    #[serde(default)]
    pub j: Option<f64>,
    #[serde(default)]
    pub delta: f64,
}

impl Default for ParamsConfig {
    fn default() -> Self {
        Self { gamma_e: default_gamma_e(), gamma_f: default_gamma_f(), j: None, delta: 0.0 }
    }
}

impl ParamsConfig {
    pub fn resolve(&self, default_j: f64) -> Result<SystemParams> {
        SystemParams::new(self.gamma_e, self.gamma_f, self.j.unwrap_or(default_j), self.delta)
            .map_err(|e| Error::Config(format!("params: {e}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeGrid {
    /// μs
    pub horizon: f64,
    /// μs
    pub dt: f64,
}

impl TimeGrid {
    pub fn validate(&self) -> Result<()> {
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            return Err(Error::Config(format!("time.horizon must be > 0, got {}", self.horizon)));
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::Config(format!("time.dt must be > 0, got {}", self.dt)));
        }
        Ok(())
    }

    /// 0, dt, 2dt, … ≤ horizon.
    pub fn points(&self) -> Vec<f64> {
        let n = (self.horizon / self.dt + 1e-9).floor() as usize;
        (0..=n).map(|k| k as f64 * self.dt).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepGrid {
    pub min: f64,
    pub max: f64,
    pub steps: usize,
}

impl SweepGrid {
    pub fn validate(&self) -> Result<()> {
        if self.steps < 1 {
            return Err(Error::Config("sweep.steps must be at least 1".into()));
        }
        if !(self.min.is_finite() && self.max.is_finite()) || self.min < 0.0 {
            return Err(Error::Config("sweep.min and sweep.max must be finite and non-negative".into()));
        }
        if self.steps > 1 && self.max <= self.min {
            return Err(Error::Config(format!("sweep must ascend: min {} >= max {}", self.min, self.max)));
        }
        Ok(())
    }

    /// `steps` evenly spaced couplings from min to max inclusive.
    pub fn points(&self) -> Vec<f64> {
        if self.steps == 1 {
            return vec![self.min];
        }
        let h = (self.max - self.min) / (self.steps - 1) as f64;
        (0..self.steps).map(|k| if k + 1 == self.steps { self.max } else { self.min + k as f64 * h }).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeName {
    #[default]
    Ideal,
    Measured,
}

/// Readout model: `"device"` (alias `"paper"`), `"identity"` or an explicit 3×3 matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BetaSource {
    Named(String),
    Matrix([[f64; 3]; 3]),
}

impl Default for BetaSource {
    fn default() -> Self {
        BetaSource::Named("device".into())
    }
}

impl BetaSource {
    pub fn parse_flag(s: &str) -> Result<Self> {
        match s {
            "device" | "paper" | "identity" => Ok(BetaSource::Named(s.into())),
            path => {
                let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("beta file {path}: {e}")))?;
                let m: [[f64; 3]; 3] =
                    serde_json::from_str(&text).map_err(|e| Error::Config(format!("beta file {path}: {e}")))?;
                Ok(BetaSource::Matrix(m))
            }
        }
    }

    pub fn resolve(&self) -> Result<ConfusionMatrix> {
        match self {
            BetaSource::Named(n) if n == "device" || n == "paper" => Ok(paper_beta()),
            BetaSource::Named(n) if n == "identity" => Ok(ConfusionMatrix::identity()),
            BetaSource::Named(n) => Err(Error::Config(format!("unknown beta `{n}` (expected device, identity or a matrix)"))),
            BetaSource::Matrix(m) => ConfusionMatrix::new(*m).map_err(|e| Error::Config(format!("beta: {e}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub params: ParamsConfig,
    #[serde(default)]
    pub time: Option<TimeGrid>,
    #[serde(default)]
    pub sweep: Option<SweepGrid>,
    /// Shots per tomography setting (0 = exact), or trajectory count.
    #[serde(default = "default_shots")]
    pub shots: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub mode: ModeName,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    /// Lindblad and trajectory step in μs.
    #[serde(default = "default_integrator_dt")]
    pub integrator_dt: f64,
    #[serde(default)]
    pub beta: BetaSource,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            params: ParamsConfig::default(),
            time: None,
            sweep: None,
            shots: DEFAULT_SHOTS,
            seed: 0,
            mode: ModeName::Ideal,
            output_dir: None,
            integrator_dt: DEFAULT_DT,
            beta: BetaSource::default(),
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.params.resolve(DEFAULT_J)?;
        if let Some(t) = &self.time {
            t.validate()?;
        }
        if let Some(s) = &self.sweep {
            s.validate()?;
        }
        if !(self.integrator_dt.is_finite() && self.integrator_dt > 0.0) {
            return Err(Error::Config(format!("integrator_dt must be > 0, got {}", self.integrator_dt)));
        }
        self.beta.resolve()?;
        Ok(())
    }

    pub fn time_or(&self, horizon: f64, dt: f64) -> TimeGrid {
        self.time.unwrap_or(TimeGrid { horizon, dt })
    }

    pub fn require_sweep(&self, command: &str) -> Result<Vec<f64>> {
        self.sweep
            .map(|s| s.points())
            .ok_or_else(|| Error::Config(format!("`{command}` needs a `sweep` block {{min, max, steps}}")))
    }

    /// Compact JSON echo for output metadata.
    pub fn echo(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }
}
