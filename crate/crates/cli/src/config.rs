//! Scenario configuration: JSON schema, validation and `key=value` overrides.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use spincharge::dynamics::IntegratorConfig;
use spincharge::ProfileSpec;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub profile: ProfileSpec,
    pub grid: GridSpec,
    pub integrator: IntegratorConfig,
    pub initial: InitialSpec,
    #[serde(default)]
    pub diagnostics: DiagnosticsSpec,
    #[serde(default)]
    pub seed: u64,
    /// Permit t_max beyond the wrap cap; the run is then flagged wrap-contaminated.
    #[serde(default)]
    pub allow_wrap: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "L")]
    pub l: f64,
    /// Accept fewer than the recommended cells across the charge support.
    #[serde(default)]
    pub allow_coarse: bool,
}

/// Rotational Gaussian blob added to the initial field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlobSpec {
    pub center: [f64; 3],
    pub axis_a: [f64; 3],
    pub axis_pi: [f64; 3],
    pub width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitialSpec {
    /// S_ω exactly.
    Soliton { omega0: [f64; 3] },
    /// S_ω plus a seeded transverse perturbation of the given phase-space norm.
    PerturbedSoliton {
        omega0: [f64; 3],
        amplitude: f64,
        #[serde(default)]
        seed: Option<u64>,
    },
    /// Soliton fields of ω₀ with the rotor set to ω₁.
    Kick { omega0: [f64; 3], omega1: [f64; 3] },
    /// Soliton fields of ω₀ plus algebraically decaying free data of exponent σ.
    FarField {
        omega0: [f64; 3],
        sigma: f64,
        #[serde(default = "default_far_amplitude")]
        amplitude: f64,
        #[serde(default)]
        omega1: Option<[f64; 3]>,
    },
    /// Soliton fields of ω₀, rotor ω₁, plus user-placed Gaussian blobs.
    Custom {
        omega0: [f64; 3],
        #[serde(default)]
        omega1: Option<[f64; 3]>,
        #[serde(default)]
        blobs: Vec<BlobSpec>,
    },
}

fn default_far_amplitude() -> f64 {
    0.05
}

impl InitialSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            InitialSpec::Soliton { .. } => "soliton",
            InitialSpec::PerturbedSoliton { .. } => "perturbed-soliton",
            InitialSpec::Kick { .. } => "kick",
            InitialSpec::FarField { .. } => "far-field",
            InitialSpec::Custom { .. } => "custom",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnosticsSpec {
    #[serde(rename = "R", default = "default_radii")]
    pub radii: Vec<f64>,
    /// Uniformly spaced samples on [0, t_max], endpoints included.
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(rename = "osc_T", default)]
    pub osc_t: Vec<f64>,
    /// Reference time for the far-field drift check.
    #[serde(default)]
    pub drift_t: Option<f64>,
}

fn default_radii() -> Vec<f64> {
    vec![2.0, 4.0]
}

fn default_samples() -> usize {
    101
}

impl Default for DiagnosticsSpec {
    fn default() -> Self {
        Self {
            radii: default_radii(),
            samples: default_samples(),
            osc_t: Vec::new(),
            drift_t: None,
        }
    }
}

impl DiagnosticsSpec {
    pub fn sample_times(&self, t_max: f64) -> Vec<f64> {
        let n = self.samples.max(2);
        (0..n).map(|i| t_max * i as f64 / (n - 1) as f64).collect()
    }
}

impl Scenario {
    pub fn from_value(value: Value) -> CliResult<Self> {
        let s: Scenario = serde_json::from_value(value).map_err(|e| CliError::Config(e.to_string()))?;
        s.validate()?;
        Ok(s)
    }

    /// Reads a config file and applies dotted `key=value` overrides before parsing.
    pub fn load(path: &Path, overrides: &[String]) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let mut value: Value = serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        for o in overrides {
            apply_override(&mut value, o)?;
        }
        Self::from_value(value)
    }

    /// Checks that need no grid or model.
    pub fn validate(&self) -> CliResult<()> {
        let half = 0.5 * self.grid.l;
        let d = &self.diagnostics;
        if let Some(r) = d.radii.iter().find(|r| !(**r > 0.0 && **r <= half)) {
            return Err(CliError::Config(format!("diagnostics.R value {r} must lie in (0, L/2 = {half}]")));
        }
        if d.samples < 2 {
            return Err(CliError::Config(format!("diagnostics.samples must be at least 2, got {}", d.samples)));
        }
        let t_max = self.integrator.t_max;
        if let Some(t) = d.osc_t.iter().find(|t| !(**t >= 0.0 && **t < t_max)) {
            return Err(CliError::Config(format!("diagnostics.osc_T value {t} outside [0, t_max = {t_max})")));
        }
        if let Some(t) = d.drift_t.filter(|t| !(*t > 0.0 && *t < t_max)) {
            return Err(CliError::Config(format!("diagnostics.drift_t = {t} outside (0, t_max)")));
        }
        match &self.initial {
            InitialSpec::PerturbedSoliton { amplitude, .. } if !(*amplitude >= 0.0) => {
                Err(CliError::Config(format!("initial.amplitude must be non-negative, got {amplitude}")))
            }
            InitialSpec::FarField { sigma, .. } if !(*sigma > 0.5) => {
                Err(CliError::Config(format!("initial.sigma must exceed 1/2, got {sigma}")))
            }
            InitialSpec::Custom { blobs, .. } if blobs.iter().any(|b| !(b.width > 0.0)) => {
                Err(CliError::Config("blob widths must be positive".into()))
            }
            _ => Ok(()),
        }
    }

    /// Seed for the perturbation: the initial block's own seed, else the scenario seed.
    pub fn perturbation_seed(&self) -> u64 {
        match self.initial {
            InitialSpec::PerturbedSoliton { seed: Some(s), .. } => s,
            _ => self.seed,
        }
    }
}

/// Reads a standalone profile file {"kind", "R_rho", "charge", "m_b"}.
pub fn load_profile(path: &Path) -> CliResult<ProfileSpec> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

/// Sets `a.b.c=value`; the value is parsed as JSON, falling back to a string.
pub fn apply_override(root: &mut Value, assignment: &str) -> CliResult<()> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("override '{assignment}' is not key=value")))?;
    let parsed = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut node = root;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let obj = node
            .as_object_mut()
            .ok_or_else(|| CliError::Config(format!("override '{key}': '{part}' is not inside an object")))?;
        if i + 1 == parts.len() {
            obj.insert((*part).to_string(), parsed);
            return Ok(());
        }
        node = obj.entry((*part).to_string()).or_insert_with(|| Value::Object(Default::default()));
    }
    Err(CliError::Config(format!("override '{assignment}' has an empty key")))
}
