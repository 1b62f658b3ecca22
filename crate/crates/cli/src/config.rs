//! Scenario configuration files.

use std::fmt;
use std::path::{Path, PathBuf};

use cgolab::harness::{EtaProfile, QBump, TripleRecipe};
use cgolab::weight::WeightSpec;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    Transforms,
    Cgo,
    Gauge,
    Carleman,
    StationaryPhase,
    Relations,
}

impl Scenario {
    pub fn name(self) -> &'static str {
        match self {
            Scenario::Transforms => "transforms",
            Scenario::Cgo => "cgo",
            Scenario::Gauge => "gauge",
            Scenario::Carleman => "carleman",
            Scenario::StationaryPhase => "stationary-phase",
            Scenario::Relations => "relations",
        }
    }

    fn needs_taus(self) -> bool {
        matches!(
            self,
            Scenario::Transforms | Scenario::Cgo | Scenario::Carleman | Scenario::StationaryPhase
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaugeConfig {
    pub s: f64,
    pub profile: EtaProfile,
}

impl Default for GaugeConfig {
    fn default() -> Self {
        Self {
            s: 1.0,
            profile: EtaProfile::YBump { lo: 0.1, hi: 0.9 },
        }
    }
}

/// Second triple of the `relations` scenario.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairKind {
    #[default]
    Identical,
    /// Gauge transform of the first triple.
    Gauge,
    /// First triple with a `Q` bump added.
    QBump,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeparationConfig {
    pub nx: usize,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Outputs {
    /// Output directory; `--out` overrides it.
    #[serde(default)]
    pub dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: Scenario,
    pub grid_ladder: Vec<usize>,
    #[serde(default)]
    pub tau_ladder: Option<Vec<f64>>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "one")]
    pub n_sys: usize,
    #[serde(default)]
    pub weight: Option<WeightSpec>,
    #[serde(default)]
    pub gauge: Option<GaugeConfig>,
    /// Base triple for gauge experiments; defaults to the zero triple.
    #[serde(default)]
    pub base: Option<TripleRecipe>,
    #[serde(default)]
    pub off_gauge: Option<QBump>,
    #[serde(default)]
    pub separation: Option<SeparationConfig>,
    #[serde(default)]
    pub pair: PairKind,
    /// Number of Dirichlet hats per component on `Γ~`.
    #[serde(default = "four")]
    pub basis_size: usize,
    /// τ of the conjugated-identity check in the `transforms` scenario.
    #[serde(default = "four_f")]
    pub identity_tau: f64,
    #[serde(default)]
    pub outputs: Outputs,
}

fn one() -> usize {
    1
}

fn four() -> usize {
    4
}

fn four_f() -> f64 {
    4.0
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid config: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

fn increasing<T: PartialOrd + Copy>(v: &[T]) -> bool {
    v.windows(2).all(|w| w[0] < w[1])
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| ConfigError(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn taus(&self) -> &[f64] {
        self.tau_ladder.as_deref().unwrap_or(&[])
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let err = |m: &str| Err(ConfigError(m.to_string()));
        if self.grid_ladder.is_empty() {
            return err("grid_ladder must not be empty");
        }
        if !increasing(&self.grid_ladder) {
            return err("grid_ladder must be strictly increasing");
        }
        if self.grid_ladder[0] < 9 {
            return err("grid sizes must be at least 9");
        }
        match &self.tau_ladder {
            Some(t) if t.is_empty() => return err("tau_ladder must not be empty"),
            Some(t) if t.iter().any(|v| !v.is_finite()) => return err("tau_ladder must be finite"),
            Some(t) if !increasing(t) => return err("tau_ladder must be strictly increasing"),
            None if self.scenario.needs_taus() => {
                return err(&format!("scenario {} needs a tau_ladder", self.scenario.name()))
            }
            _ => {}
        }
        if self.n_sys == 0 || self.n_sys > 3 {
            return err("n_sys must be 1, 2 or 3");
        }
        if self.basis_size == 0 {
            return err("basis_size must be positive");
        }
        if let Some(g) = &self.gauge {
            if !g.s.is_finite() {
                return err("gauge strength must be finite");
            }
        }
        if let Some(sep) = &self.separation {
            if sep.samples == 0 || sep.nx < 9 {
                return err("separation needs samples > 0 and nx >= 9");
            }
        }
        if self.scenario == Scenario::StationaryPhase && self.taus().len() < 3 {
            return err("stationary-phase needs at least 3 tau values for the decay fit");
        }
        Ok(())
    }
}
