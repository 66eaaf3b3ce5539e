//! Classical analogue: a surface wave of phase velocity `v` under a layer
//! moving at speed `V`.
//!
//! The wind loses momentum `ħk` and energy `Vħk` per quantum it feeds into
//! the wave, which gains only `vħk`. The wave grows iff `V > v`, and the rest
//! of the energy is dissipated. Non-relativistic throughout.

use crate::mode::Mode;
use crate::rates::BathSpec;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ShearError {
    #[error("{name} must be finite and > 0, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error("phase velocity must be non-zero")]
    ZeroPhaseVelocity,
    #[error("mode has no cylindrical analogue: needs m >= 1 and omega > 0 (m = {m}, omega = {omega})")]
    NoCylindricalAnalogue { omega: f64, m: i64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShearConfig {
    upper_speed: f64,
    phase_velocity: f64,
    wavenumber: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ShearClass {
    Stable,
    Marginal,
    Unstable,
}

impl ShearClass {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Stable => "stable",
            Self::Marginal => "marginal",
            Self::Unstable => "unstable",
        }
    }
}

fn positive(name: &'static str, value: f64) -> Result<f64, ShearError> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(ShearError::NonPositive { name, value })
    }
}

impl ShearConfig {
    pub fn new(upper_speed: f64, phase_velocity: f64, wavenumber: f64) -> Result<Self, ShearError> {
        Ok(Self {
            upper_speed: positive("V", upper_speed)?,
            phase_velocity: positive("v", phase_velocity)?,
            wavenumber: positive("k", wavenumber)?,
        })
    }

    /// Cylindrical mode with linear dispersion: `V = Ω`, `v = ω/m` (unit
    /// radius), so `V/v = mΩ/ω`.
    pub fn from_mode(bath: &BathSpec, mode: &Mode) -> Result<Self, ShearError> {
        if mode.m() < 1 || mode.omega() <= 0.0 {
            return Err(ShearError::NoCylindricalAnalogue {
                omega: mode.omega(),
                m: mode.m(),
            });
        }
        // ω/m can round across Ω; the sign of ω − mΩ decides which side v is on
        let upper = bath.omega_rot();
        let ratio = mode.omega() / mode.m() as f64;
        let delta = mode.comoving_energy(upper);
        let v = if delta > 0.0 {
            ratio.max(upper.next_up())
        } else if delta < 0.0 {
            ratio.min(upper.next_down())
        } else {
            upper
        };
        Self::new(upper, v, mode.m() as f64)
    }

    pub fn upper_speed(&self) -> f64 {
        self.upper_speed
    }

    pub fn phase_velocity(&self) -> f64 {
        self.phase_velocity
    }

    pub fn wavenumber(&self) -> f64 {
        self.wavenumber
    }
}

pub fn shear_classify(cfg: &ShearConfig) -> ShearClass {
    match cfg.upper_speed.total_cmp(&cfg.phase_velocity) {
        std::cmp::Ordering::Greater => ShearClass::Unstable,
        std::cmp::Ordering::Equal => ShearClass::Marginal,
        std::cmp::Ordering::Less => ShearClass::Stable,
    }
}

/// `(v/V, 1 − v/V)`: fraction of the wind's energy loss that goes into the
/// wave and fraction dissipated. A wave fraction above 1 means the wave could
/// only be sustained by external input.
pub fn energy_split(cfg: &ShearConfig) -> (f64, f64) {
    let wave = cfg.phase_velocity / cfg.upper_speed;
    (wave, 1.0 - wave)
}

/// Wave frequency seen from the moving layer, `ω(1 − V/v)`.
pub fn comoving_frequency(omega: f64, upper_speed: f64, phase_velocity: f64) -> Result<f64, ShearError> {
    if phase_velocity == 0.0 {
        return Err(ShearError::ZeroPhaseVelocity);
    }
    Ok(omega * (1.0 - upper_speed / phase_velocity))
}
