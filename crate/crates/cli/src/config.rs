//! TOML run configuration shared by all subcommands.

use std::f64::consts::TAU;
use std::path::{Path, PathBuf};

use phaselock::validate::CheckName;
use phaselock::{BiasSpec, SolverConfig, Waveform};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub bias: BiasSection,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub evolve: EvolveSection,
    #[serde(default)]
    pub validate: ValidateSection,
    #[serde(default)]
    pub output: OutputSection,
}

/// Bias fields; the period may be given directly or as `omega = 2π/T`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub period: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega: Option<f64>,
    #[serde(flatten)]
    pub waveform: Waveform,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
    pub refine_tol: f64,
    pub workers: usize,
}

impl Default for SweepSection {
    fn default() -> Self {
        SweepSection {
            lo: 0.0,
            hi: 2.0,
            step: 0.01,
            refine_tol: 1e-8,
            workers: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvolveSection {
    pub periods: u64,
    pub phi_init: f64,
    /// Also integrate the equation directly for an overlay.
    pub brute_force: bool,
    /// Inertial term of the second-order equation; adds an overlay against
    /// the first-order solution when set.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    pub dphi_init: f64,
}

impl Default for EvolveSection {
    fn default() -> Self {
        EvolveSection {
            periods: 3,
            phi_init: 0.0,
            brute_force: true,
            beta: None,
            dphi_init: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ValidateSection {
    pub seed: u64,
    /// `None` runs every check.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub checks: Option<Vec<CheckName>>,
}

impl Default for ValidateSection {
    fn default() -> Self {
        ValidateSection {
            seed: 20240601,
            checks: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
    pub format: Format,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            dir: PathBuf::from("out"),
            format: Format::Csv,
        }
    }
}

const MAX_PERIODS: u64 = 100_000;
const MAX_SWEEP_POINTS: f64 = 1e6;

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    pub fn bias(&self) -> Result<BiasSpec, CliError> {
        let period = match (self.bias.period, self.bias.omega) {
            (Some(t), None) => t,
            (None, Some(w)) if w > 0.0 => TAU / w,
            (None, Some(w)) => {
                return Err(CliError::Config(format!("omega must be positive, got {w}")))
            }
            (Some(_), Some(_)) => {
                return Err(CliError::Config(
                    "give either period or omega, not both".into(),
                ))
            }
            (None, None) => return Err(CliError::Config("bias needs a period or omega".into())),
        };
        BiasSpec::new(period, self.bias.waveform.clone())
            .map_err(|e| CliError::Config(e.to_string()))
    }

    /// Range checks on every section.
    pub fn check(&self) -> Result<(), CliError> {
        self.bias()?;
        self.solver
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))?;
        let s = &self.sweep;
        if !(s.lo.is_finite() && s.hi.is_finite() && s.hi >= s.lo) {
            return Err(CliError::Config(format!(
                "sweep range [{}, {}] is invalid",
                s.lo, s.hi
            )));
        }
        if !(s.step > 0.0) || (s.hi - s.lo) / s.step > MAX_SWEEP_POINTS {
            return Err(CliError::Config(format!(
                "sweep step {} is invalid for the range",
                s.step
            )));
        }
        if !(s.refine_tol > 0.0) || s.workers == 0 {
            return Err(CliError::Config(
                "sweep needs refine_tol > 0 and workers >= 1".into(),
            ));
        }
        let e = &self.evolve;
        if e.periods == 0 || e.periods > MAX_PERIODS {
            return Err(CliError::Config(format!(
                "evolve periods must be in 1..={MAX_PERIODS}"
            )));
        }
        if !(e.phi_init.is_finite() && e.dphi_init.is_finite()) {
            return Err(CliError::Config("initial values must be finite".into()));
        }
        if let Some(b) = e.beta {
            if !(b > 0.0 && b.is_finite()) {
                return Err(CliError::Config(format!("beta must be positive, got {b}")));
            }
        }
        Ok(())
    }
}
