//! Simulation configuration and its TOML file form.
//!
//! ```toml
//! length = 1.0
//! final_time = 1.0
//! steps = 64
//! dx = 0.00390625
//! dv = 0.00390625
//! u0 = 6.0
//! integrator = "ssm"
//! seed = 1
//!
//! [field]
//! kind = "cosine"
//! amplitude = 1.0
//!
//! [[sigma]]
//! sin = 0.5
//!
//! [initial]
//! kind = "landau"
//! alpha = 0.05
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::characteristics::IntegratorKind;
use crate::error::{Error, Result};
use crate::field::{CaseOneField, SigmaModel, SigmaSpec};
use crate::solver::{initial_density_landau, initial_density_two_stream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReconstructionKind {
    #[default]
    Linear,
    Spline,
}

/// The electric field: one of the closed-form Case I fields, or the
/// self-consistent Case II field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FieldSpec {
    Constant { value: f64 },
    Cosine { amplitude: f64 },
    Potential { amplitude: f64 },
    SelfConsistent,
}

impl FieldSpec {
    pub fn case_one(&self) -> Option<CaseOneField> {
        match *self {
            FieldSpec::Constant { value } => Some(CaseOneField::Constant { value }),
            FieldSpec::Cosine { amplitude } => Some(CaseOneField::Cosine { amplitude }),
            FieldSpec::Potential { amplitude } => Some(CaseOneField::Potential { amplitude }),
            FieldSpec::SelfConsistent => None,
        }
    }

    pub fn is_self_consistent(&self) -> bool {
        matches!(self, FieldSpec::SelfConsistent)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialSpec {
    Landau { alpha: f64 },
    TwoStream { alpha: f64 },
}

impl InitialSpec {
    pub fn eval(&self, x: f64, v: f64, length: f64) -> f64 {
        match *self {
            InitialSpec::Landau { alpha } => initial_density_landau(x, v, alpha, length),
            InitialSpec::TwoStream { alpha } => initial_density_two_stream(x, v, alpha, length),
        }
    }
}

fn default_samples() -> usize {
    1
}

fn default_window() -> f64 {
    1.0
}

fn is_default<T: Default + PartialEq>(v: &T) -> bool {
    *v == T::default()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    /// torus length `L`
    pub length: f64,
    pub final_time: f64,
    /// number of steps `N`; `tau = T / N`
    pub steps: usize,
    pub dx: f64,
    pub dv: f64,
    /// initial velocity half-width
    pub u0: f64,
    /// growth threshold; defaults to `f0(0, U0)`
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon0: Option<f64>,
    pub integrator: IntegratorKind,
    #[serde(default, skip_serializing_if = "is_default")]
    pub reconstruction: ReconstructionKind,
    pub seed: u64,
    #[serde(default = "default_samples")]
    pub samples: usize,
    /// write a snapshot every this many steps (plus the first and last)
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snapshot_every: Option<usize>,
    /// velocity window `[-w, w]` of the convergence error
    #[serde(default = "default_window")]
    pub error_window: f64,
    /// maximum phase-space nodes a convergence study may allocate
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub node_budget: Option<usize>,
    pub field: FieldSpec,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sigma: Vec<SigmaSpec>,
    pub initial: InitialSpec,
}

const REQUIRED: &[&str] =
    &["length", "final_time", "steps", "dx", "dv", "u0", "integrator", "seed", "field", "initial"];
const OPTIONAL: &[&str] =
    &["epsilon0", "reconstruction", "samples", "snapshot_every", "error_window", "node_budget", "sigma"];

impl SimulationConfig {
    pub fn tau(&self) -> f64 {
        self.final_time / self.steps as f64
    }

    /// Threshold `epsilon0`, defaulting to `f0(0, U0)`.
    pub fn epsilon0(&self) -> f64 {
        self.epsilon0.unwrap_or_else(|| self.initial.eval(0.0, self.u0, self.length))
    }

    /// Number of Brownian components; a run without noise still carries one
    /// (zero) component.
    pub fn noise_components(&self) -> usize {
        self.sigma.len().max(1)
    }

    pub fn sigma_model(&self) -> SigmaModel {
        if self.sigma.is_empty() {
            SigmaModel::new(&[SigmaSpec::default()], self.length)
        } else {
            SigmaModel::new(&self.sigma, self.length)
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(self.length > 0.0 && self.final_time > 0.0) {
            return bad(format!("length and final_time must be > 0 (got {}, {})", self.length, self.final_time));
        }
        let mut numbers = vec![self.dx, self.dv, self.u0, self.error_window];
        numbers.extend(match self.field {
            FieldSpec::Constant { value } => vec![value],
            FieldSpec::Cosine { amplitude } | FieldSpec::Potential { amplitude } => vec![amplitude],
            FieldSpec::SelfConsistent => vec![],
        });
        numbers.extend(self.sigma.iter().flat_map(|s| [s.constant, s.sin, s.cos]));
        numbers.push(match self.initial {
            InitialSpec::Landau { alpha } | InitialSpec::TwoStream { alpha } => alpha,
        });
        if numbers.iter().any(|x| !x.is_finite()) || !self.length.is_finite() || !self.final_time.is_finite() {
            return bad("all numeric parameters must be finite".into());
        }
        if let Some(e) = self.epsilon0 {
            if !(e > 0.0) {
                return bad(format!("epsilon0 must be > 0 (got {e})"));
            }
        }
        if self.samples == 0 {
            return bad("samples must be >= 1".into());
        }
        if !(self.error_window > 0.0) {
            return bad(format!("error_window must be > 0 (got {})", self.error_window));
        }
        crate::grid::PhaseGrid::new(self.length, self.dx, self.dv, self.u0)?;
        Ok(())
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let table: toml::Table = text.parse().map_err(|e| Error::Config(format!("{e}")))?;
        Self::from_table(table)
    }

    /// Check keys exhaustively, then deserialize.
    pub fn from_table(table: toml::Table) -> Result<Self> {
        let unknown: Vec<&str> =
            table.keys().map(String::as_str).filter(|k| !REQUIRED.contains(k) && !OPTIONAL.contains(k)).collect();
        if !unknown.is_empty() {
            return Err(Error::Config(format!("unknown keys: {}", unknown.join(", "))));
        }
        let missing: Vec<&str> = REQUIRED.iter().copied().filter(|k| !table.contains_key(*k)).collect();
        if !missing.is_empty() {
            return Err(Error::Config(format!("missing required keys: {}", missing.join(", "))));
        }
        let cfg: Self = toml::Value::Table(table).try_into().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    /// SHA-256 of the canonical TOML form.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_toml_string().as_bytes()))
    }

    /// Apply `key=value` overrides; dotted keys address nested tables
    /// (`initial.alpha=0.1`). Values are parsed as TOML, falling back to a string.
    pub fn with_overrides(&self, overrides: &[String]) -> Result<Self> {
        let mut table: toml::Table =
            self.to_toml_string().parse().map_err(|e| Error::Config(format!("{e}")))?;
        apply_overrides(&mut table, overrides)?;
        Self::from_table(table)
    }
}

pub fn apply_overrides(table: &mut toml::Table, overrides: &[String]) -> Result<()> {
    for item in overrides {
        let (key, raw) = item
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("override '{item}' is not key=value")))?;
        let value: toml::Value = format!("v = {raw}")
            .parse::<toml::Table>()
            .ok()
            .and_then(|mut t| t.remove("v"))
            .unwrap_or_else(|| toml::Value::String(raw.to_string()));
        let mut parts = key.trim().split('.').peekable();
        let mut cur = &mut *table;
        while let Some(part) = parts.next() {
            if parts.peek().is_none() {
                cur.insert(part.to_string(), value.clone());
                break;
            }
            cur = cur
                .entry(part.to_string())
                .or_insert_with(|| toml::Value::Table(toml::Table::new()))
                .as_table_mut()
                .ok_or_else(|| Error::Config(format!("override key '{key}' descends into a non-table")))?;
        }
    }
    Ok(())
}

pub fn load_config(path: &Path) -> Result<SimulationConfig> {
    let text = std::fs::read_to_string(path)?;
    SimulationConfig::from_toml_str(&text)
}

/// Load a config file and apply command-line overrides before validation.
pub fn load_config_with_overrides(path: &Path, overrides: &[String]) -> Result<SimulationConfig> {
    let text = std::fs::read_to_string(path)?;
    let mut table: toml::Table = text.parse().map_err(|e| Error::Config(format!("{e}")))?;
    apply_overrides(&mut table, overrides)?;
    SimulationConfig::from_table(table)
}

pub fn write_config(cfg: &SimulationConfig, path: &Path) -> Result<()> {
    std::fs::write(path, cfg.to_toml_string())?;
    Ok(())
}
