//! Scenario files.
//!
//! A scenario is a TOML document with the sections `[bath]`, `[[modes]]`
//! and/or `[grid]`, `[run]`, `[output]`, plus `[[shear]]` or `[[quanta]]`
//! for the classical and black-hole runs. Unknown keys are rejected.
//! [`parse_scenario`] fills in every default, and [`print_scenario`] writes
//! the complete normalised form, so `parse(print(s)) == s`.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bath::{self, CouplingSpectrum, SpectrumError};
use crate::beta::InverseTemperature;
use crate::correlation::{CorrelationError, CorrelationFunction};
use crate::mode::{Mode, Statistics};
use crate::rates::{BathSpec, RateError};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ScenarioError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("invalid value for `{key}`: {message}")]
    Semantic { key: String, message: String },
    #[error("`run.seed` is required for gillespie runs")]
    MissingSeed,
    #[error("cannot read correlation file {path}: {message}")]
    CorrelationFile { path: String, message: String },
    #[error(transparent)]
    Correlation(#[from] CorrelationError),
    #[error(transparent)]
    Spectrum(#[from] SpectrumError),
    #[error(transparent)]
    Rate(#[from] RateError),
}

fn semantic(key: &str, message: impl Into<String>) -> ScenarioError {
    ScenarioError::Semantic {
        key: key.to_string(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Ohmic,
    Flat,
    Hawking,
    Correlation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BathConfig {
    pub family: Family,
    pub beta: InverseTemperature,
    #[serde(default)]
    pub omega_rot: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amplitude: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exponent: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cutoff: Option<f64>,
    /// Flat level, or the constant Hawking form factor.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub level: Option<f64>,
    /// Relative paths are resolved against the scenario file's directory.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub correlation_file: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeConfig {
    pub omega: f64,
    #[serde(default)]
    pub m: i64,
    #[serde(default = "default_alpha")]
    pub alpha: String,
    #[serde(default = "default_statistics")]
    pub statistics: Statistics,
}

/// `omega_steps` energies from `omega_min` to `omega_max` (inclusive) times
/// every `m` in `m_min..=m_max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub omega_min: f64,
    pub omega_max: f64,
    pub omega_steps: usize,
    pub m_min: i64,
    pub m_max: i64,
    #[serde(default = "default_alpha")]
    pub alpha: String,
    #[serde(default = "default_statistics")]
    pub statistics: Statistics,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunKind {
    Rates,
    Kinetics,
    Birthdeath,
    Gillespie,
    Thermo,
    Spectrum,
    Shear,
    BhLedger,
}

impl RunKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Rates => "rates",
            Self::Kinetics => "kinetics",
            Self::Birthdeath => "birthdeath",
            Self::Gillespie => "gillespie",
            Self::Thermo => "thermo",
            Self::Spectrum => "spectrum",
            Self::Shear => "shear",
            Self::BhLedger => "bh-ledger",
        }
    }

    fn is_dynamic(self) -> bool {
        matches!(self, Self::Kinetics | Self::Birthdeath | Self::Gillespie | Self::Thermo)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub kind: RunKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_max: Option<f64>,
    #[serde(default = "default_points")]
    pub points: usize,
    /// Initial occupation; must be an integer for distribution runs.
    #[serde(default)]
    pub n0: f64,
    #[serde(default = "default_n_traj")]
    pub n_traj: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default)]
    pub kappa: f64,
    #[serde(default = "default_tail_tol")]
    pub tail_tol: f64,
    #[serde(default = "default_ceiling")]
    pub population_ceiling: f64,
    #[serde(default = "default_max_cutoff")]
    pub max_cutoff: usize,
    #[serde(default)]
    pub sample_paths: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_dir")]
    pub dir: String,
    #[serde(default = "default_format")]
    pub format: OutputFormat,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: default_dir(),
            format: default_format(),
        }
    }
}

/// Surface wave under a moving layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShearEntry {
    pub upper_speed: f64,
    pub phase_velocity: f64,
    #[serde(default = "one")]
    pub wavenumber: f64,
    /// Wave frequency for the comoving-frame column.
    #[serde(default = "one")]
    pub omega: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuantumEntry {
    pub omega: f64,
    pub m: i64,
    #[serde(default = "one")]
    pub count: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub run: RunConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bath: Option<BathConfig>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub modes: Vec<ModeConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridConfig>,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub shear: Vec<ShearEntry>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub quanta: Vec<QuantumEntry>,
}

fn default_alpha() -> String {
    "0".into()
}
fn default_statistics() -> Statistics {
    Statistics::Bose
}
fn default_points() -> usize {
    101
}
fn default_n_traj() -> usize {
    1000
}
fn default_tail_tol() -> f64 {
    1e-10
}
fn default_ceiling() -> f64 {
    1e12
}
fn default_max_cutoff() -> usize {
    1 << 20
}
fn default_dir() -> String {
    "out".into()
}
fn default_format() -> OutputFormat {
    OutputFormat::Csv
}
fn one() -> f64 {
    1.0
}

pub const OHMIC_DEFAULTS: (f64, f64, f64) = (1.0, 1.0, 10.0);
pub const DEFAULT_LEVEL: f64 = 1.0;

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.len() - before.rfind('\n').map_or(0, |i| i + 1) + 1;
    (line, column)
}

/// Parses, applies defaults and validates.
pub fn parse_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    let mut s: Scenario = toml::from_str(text).map_err(|e| {
        let (line, column) = e.span().map_or((0, 0), |span| line_col(text, span.start));
        ScenarioError::Syntax {
            line,
            column,
            message: e.message().to_string(),
        }
    })?;
    s.normalize()?;
    s.validate()?;
    Ok(s)
}

pub fn print_scenario(s: &Scenario) -> String {
    toml::to_string(s).expect("scenario types always serialise")
}

fn finite(key: &str, v: f64) -> Result<(), ScenarioError> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(semantic(key, format!("must be finite, got {v}")))
    }
}

fn positive(key: &str, v: f64) -> Result<(), ScenarioError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(semantic(key, format!("must be finite and > 0, got {v}")))
    }
}

fn non_negative(key: &str, v: f64) -> Result<(), ScenarioError> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(semantic(key, format!("must be finite and >= 0, got {v}")))
    }
}

impl Scenario {
    fn normalize(&mut self) -> Result<(), ScenarioError> {
        if let Some(b) = &mut self.bath {
            let forbid = |key: &str, present: bool| -> Result<(), ScenarioError> {
                if present {
                    Err(semantic(key, format!("not a parameter of the {:?} family", b.family).to_lowercase()))
                } else {
                    Ok(())
                }
            };
            match b.family {
                Family::Ohmic => {
                    forbid("bath.level", b.level.is_some())?;
                    forbid("bath.correlation_file", b.correlation_file.is_some())?;
                    b.amplitude.get_or_insert(OHMIC_DEFAULTS.0);
                    b.exponent.get_or_insert(OHMIC_DEFAULTS.1);
                    b.cutoff.get_or_insert(OHMIC_DEFAULTS.2);
                }
                Family::Flat | Family::Hawking => {
                    forbid("bath.amplitude", b.amplitude.is_some())?;
                    forbid("bath.exponent", b.exponent.is_some())?;
                    forbid("bath.cutoff", b.cutoff.is_some())?;
                    forbid("bath.correlation_file", b.correlation_file.is_some())?;
                    b.level.get_or_insert(DEFAULT_LEVEL);
                }
                Family::Correlation => {
                    forbid("bath.amplitude", b.amplitude.is_some())?;
                    forbid("bath.exponent", b.exponent.is_some())?;
                    forbid("bath.cutoff", b.cutoff.is_some())?;
                    forbid("bath.level", b.level.is_some())?;
                    if b.correlation_file.is_none() {
                        return Err(semantic("bath.correlation_file", "required for the correlation family"));
                    }
                }
            }
        }
        Ok(())
    }

    fn validate(&self) -> Result<(), ScenarioError> {
        let kind = self.run.kind;
        let needs_bath = !matches!(kind, RunKind::Shear);
        if needs_bath && self.bath.is_none() {
            return Err(semantic("bath", format!("required for {} runs", kind.as_str())));
        }
        if let Some(b) = &self.bath {
            non_negative("bath.omega_rot", b.omega_rot)?;
            for (key, v) in [
                ("bath.amplitude", b.amplitude),
                ("bath.exponent", b.exponent),
                ("bath.cutoff", b.cutoff),
                ("bath.level", b.level),
            ] {
                if let Some(v) = v {
                    positive(key, v)?;
                }
            }
        }
        for (i, m) in self.modes.iter().enumerate() {
            non_negative(&format!("modes[{i}].omega"), m.omega)?;
        }
        if let Some(g) = &self.grid {
            non_negative("grid.omega_min", g.omega_min)?;
            finite("grid.omega_max", g.omega_max)?;
            if g.omega_max < g.omega_min {
                return Err(semantic("grid.omega_max", "must be >= grid.omega_min"));
            }
            if g.omega_steps == 0 || (g.omega_steps == 1 && g.omega_max != g.omega_min) {
                return Err(semantic("grid.omega_steps", "must be >= 2 unless omega_min = omega_max"));
            }
            if g.m_max < g.m_min {
                return Err(semantic("grid.m_max", "must be >= grid.m_min"));
            }
        }
        let needs_modes = !matches!(kind, RunKind::Shear | RunKind::BhLedger);
        if needs_modes && self.modes.is_empty() && self.grid.is_none() {
            return Err(semantic("modes", format!("{} runs need [[modes]] or [grid]", kind.as_str())));
        }

        let r = &self.run;
        if kind.is_dynamic() {
            match r.t_max {
                None => return Err(semantic("run.t_max", format!("required for {} runs", kind.as_str()))),
                Some(t) => positive("run.t_max", t)?,
            }
            if r.points < 2 {
                return Err(semantic("run.points", "must be >= 2"));
            }
        }
        non_negative("run.n0", r.n0)?;
        if matches!(kind, RunKind::Birthdeath | RunKind::Gillespie | RunKind::Thermo) && r.n0.fract() != 0.0 {
            return Err(semantic("run.n0", "must be an integer for distribution runs"));
        }
        if r.n0 > 1.0 && self.all_modes().iter().any(|m| m.statistics == Statistics::Fermi) && kind.is_dynamic() {
            return Err(semantic("run.n0", "fermionic modes hold at most one quantum"));
        }
        non_negative("run.kappa", r.kappa)?;
        if r.kappa > 0.0 && matches!(kind, RunKind::Kinetics) {
            return Err(semantic("run.kappa", "kinetics runs are linear; use birthdeath or gillespie"));
        }
        positive("run.tail_tol", r.tail_tol)?;
        positive("run.population_ceiling", r.population_ceiling)?;
        if r.max_cutoff < 1 {
            return Err(semantic("run.max_cutoff", "must be >= 1"));
        }
        if kind == RunKind::Gillespie {
            if r.seed.is_none() {
                return Err(ScenarioError::MissingSeed);
            }
            if r.n_traj == 0 {
                return Err(semantic("run.n_traj", "must be >= 1"));
            }
        }
        if kind == RunKind::Thermo {
            if let Some(b) = &self.bath {
                if b.beta.is_infinite() {
                    return Err(semantic("bath.beta", "thermo runs need a finite temperature"));
                }
            }
        }
        if kind == RunKind::Shear && self.shear.is_empty() {
            return Err(semantic("shear", "shear runs need at least one [[shear]] entry"));
        }
        for (i, e) in self.shear.iter().enumerate() {
            positive(&format!("shear[{i}].upper_speed"), e.upper_speed)?;
            positive(&format!("shear[{i}].phase_velocity"), e.phase_velocity)?;
            positive(&format!("shear[{i}].wavenumber"), e.wavenumber)?;
            finite(&format!("shear[{i}].omega"), e.omega)?;
        }
        if kind == RunKind::BhLedger {
            if self.quanta.is_empty() {
                return Err(semantic("quanta", "bh-ledger runs need at least one [[quanta]] entry"));
            }
            if let Some(b) = &self.bath {
                if b.beta.is_infinite() {
                    return Err(semantic("bath.beta", "bh-ledger needs a finite Hawking temperature"));
                }
            }
        }
        for (i, q) in self.quanta.iter().enumerate() {
            non_negative(&format!("quanta[{i}].omega"), q.omega)?;
            non_negative(&format!("quanta[{i}].count"), q.count)?;
        }
        Ok(())
    }

    fn all_modes(&self) -> Vec<ModeConfig> {
        let mut out = self.modes.clone();
        if let Some(g) = &self.grid {
            for i in 0..g.omega_steps {
                let omega = if g.omega_steps == 1 {
                    g.omega_min
                } else {
                    g.omega_min + (g.omega_max - g.omega_min) * i as f64 / (g.omega_steps - 1) as f64
                };
                for m in g.m_min..=g.m_max {
                    out.push(ModeConfig {
                        omega,
                        m,
                        alpha: g.alpha.clone(),
                        statistics: g.statistics,
                    });
                }
            }
        }
        out
    }

    /// Explicit modes plus the grid, in output order.
    pub fn modes(&self) -> Vec<Mode> {
        let mut modes: Vec<Mode> = self
            .all_modes()
            .into_iter()
            .map(|c| Mode::new(c.omega, c.m, c.alpha, c.statistics).expect("validated"))
            .collect();
        modes.sort_by(Mode::output_order);
        modes
    }

    /// Builds the bath; `base_dir` resolves a relative correlation file.
    pub fn bath(&self, base_dir: &Path) -> Result<Option<BathSpec>, ScenarioError> {
        let Some(b) = &self.bath else {
            return Ok(None);
        };
        Ok(Some(BathSpec::new(build_spectrum(b, base_dir)?, b.omega_rot)?))
    }

    pub fn time_grid(&self) -> Vec<f64> {
        let t_max = self.run.t_max.unwrap_or(0.0);
        let n = self.run.points.max(2);
        (0..n).map(|i| t_max * i as f64 / (n - 1) as f64).collect()
    }
}

pub fn correlation_path(b: &BathConfig, base_dir: &Path) -> Option<PathBuf> {
    b.correlation_file.as_ref().map(|f| {
        let p = Path::new(f);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            base_dir.join(p)
        }
    })
}

fn build_spectrum(b: &BathConfig, base_dir: &Path) -> Result<CouplingSpectrum, ScenarioError> {
    Ok(match b.family {
        Family::Ohmic => bath::ohmic_spectrum(
            b.amplitude.unwrap_or(OHMIC_DEFAULTS.0),
            b.exponent.unwrap_or(OHMIC_DEFAULTS.1),
            b.cutoff.unwrap_or(OHMIC_DEFAULTS.2),
            b.beta,
        )?,
        Family::Flat => bath::flat_spectrum(b.level.unwrap_or(DEFAULT_LEVEL), b.beta)?,
        Family::Hawking => bath::hawking_constant(b.level.unwrap_or(DEFAULT_LEVEL), b.beta)?,
        Family::Correlation => {
            let path = correlation_path(b, base_dir).expect("validated");
            let file = std::fs::File::open(&path).map_err(|e| ScenarioError::CorrelationFile {
                path: path.display().to_string(),
                message: e.to_string(),
            })?;
            let f = CorrelationFunction::read_delimited(std::io::BufReader::new(file))?;
            CouplingSpectrum::from_correlation(f, b.beta)
        }
    })
}
