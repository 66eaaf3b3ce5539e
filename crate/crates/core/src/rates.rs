//! Damping and pumping rates of a field mode coupled to a rotating bath.
//!
//! Rotation enters only through a frequency shift of the bath spectrum,
//! `γ^Ω_k(x) = γ⁰(x + mΩ)`. Absorption by the bath is the shifted spectrum of
//! the time-reversed partner `−k` at `+ω`, emission is the shifted spectrum
//! of `k` at `−ω`; both land on the comoving energy `ω − mΩ`:
//!
//! ```text
//! γ↓ = γ⁰(ω − mΩ),   γ↑ = γ⁰(mΩ − ω) = e^{−β(ω−mΩ)} γ↓
//! ```
//!
//! The ratio is a Boltzmann factor with a local inverse temperature
//! `β(1 − mΩ/ω)` that turns negative exactly when `ω < mΩ`.

use crate::bath::{CouplingSpectrum, SpectrumError, KMS_EPS};
use crate::beta::InverseTemperature;
use crate::mode::{Mode, Statistics};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RateError {
    #[error("local temperature undefined for omega = 0 with m = {m} and rotating bath")]
    UndefinedLocalTemperature { m: i64 },
    #[error("bath angular velocity must be finite and >= 0, got {0}")]
    InvalidRotation(f64),
}

/// A stationary bath at inverse temperature `β` rotating at `Ω ≥ 0`.
///
/// `β` is the spectrum's own reference temperature, so the KMS condition of
/// the shipped families holds at the bath temperature by construction.
#[derive(Debug, Clone)]
pub struct BathSpec {
    spectrum: CouplingSpectrum,
    omega_rot: f64,
}

impl BathSpec {
    pub fn new(spectrum: CouplingSpectrum, omega_rot: f64) -> Result<Self, RateError> {
        if !(omega_rot.is_finite() && omega_rot >= 0.0) {
            return Err(RateError::InvalidRotation(omega_rot));
        }
        Ok(Self { spectrum, omega_rot })
    }

    pub fn beta(&self) -> InverseTemperature {
        self.spectrum.beta_ref()
    }

    pub fn omega_rot(&self) -> f64 {
        self.omega_rot
    }

    pub fn spectrum(&self) -> &CouplingSpectrum {
        &self.spectrum
    }
}

/// Stability class of a mode in contact with the rotating bath.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModeClass {
    Stable,
    Marginal,
    Superradiant,
}

impl ModeClass {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Stable => "stable",
            Self::Marginal => "marginal",
            Self::Superradiant => "superradiant",
        }
    }
}

/// Rates for one mode, per unit time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateSet {
    pub gamma_down: f64,
    pub gamma_up: f64,
    /// Signed local inverse temperature; `None` where it diverges
    /// (`ω = 0`, `mΩ ≠ 0`).
    pub beta_loc: Option<f64>,
    pub classification: ModeClass,
}

impl RateSet {
    /// Rates given directly, e.g. for studying the birth-death process
    /// without a bath model. Classification follows from the rate ratio.
    pub fn from_rates(gamma_down: f64, gamma_up: f64, statistics: Statistics) -> Self {
        let classification = match statistics {
            Statistics::Fermi => ModeClass::Stable,
            Statistics::Bose if gamma_up < gamma_down => ModeClass::Stable,
            Statistics::Bose if gamma_up == gamma_down => ModeClass::Marginal,
            Statistics::Bose => ModeClass::Superradiant,
        };
        Self {
            gamma_down,
            gamma_up,
            beta_loc: None,
            classification,
        }
    }

    /// Rate constant of the linear mean-occupation equation,
    /// `γ↓ − γ↑` (Bose) or `γ↓ + γ↑` (Fermi). Negative means growth.
    pub fn relaxation_rate(&self, statistics: Statistics) -> f64 {
        self.gamma_down - statistics.sign() * self.gamma_up
    }
}

/// `γ^Ω_k(x) = γ⁰(x + mΩ)`.
pub fn shifted_spectrum(bath: &BathSpec, mode: &Mode, x: f64) -> f64 {
    bath.spectrum.eval(x + mode.m() as f64 * bath.omega_rot)
}

pub fn classify(bath: &BathSpec, mode: &Mode) -> ModeClass {
    if mode.statistics() == Statistics::Fermi {
        return ModeClass::Stable;
    }
    let delta = mode.comoving_energy(bath.omega_rot);
    if delta > 0.0 {
        ModeClass::Stable
    } else if delta == 0.0 {
        ModeClass::Marginal
    } else {
        ModeClass::Superradiant
    }
}

/// `β_loc = β(1 − mΩ/ω)`.
pub fn local_beta(bath: &BathSpec, mode: &Mode) -> Result<f64, RateError> {
    let beta = bath.beta();
    if mode.m() == 0 || bath.omega_rot == 0.0 {
        return Ok(beta.value());
    }
    if mode.omega() == 0.0 {
        return Err(RateError::UndefinedLocalTemperature { m: mode.m() });
    }
    Ok(beta.times(mode.comoving_energy(bath.omega_rot)) / mode.omega())
}

pub fn rates(bath: &BathSpec, mode: &Mode) -> RateSet {
    let delta = mode.comoving_energy(bath.omega_rot);
    // at zero temperature the marginal point belongs to the non-emitting side
    let factor = match bath.beta() {
        InverseTemperature::Infinite if delta == 0.0 => 0.0,
        beta => beta.boltzmann(delta),
    };
    // Evaluate the spectrum on whichever side is not exponentially suppressed
    // and derive the other one from the Boltzmann factor.
    let (gamma_down, gamma_up) = if delta >= 0.0 {
        let down = shifted_spectrum(bath, &mode.time_reversed(), mode.omega());
        (down, factor * down)
    } else {
        let up = shifted_spectrum(bath, mode, -mode.omega());
        ((-bath.beta().times(-delta)).exp() * up, up)
    };
    RateSet {
        gamma_down,
        gamma_up,
        beta_loc: local_beta(bath, mode).ok(),
        classification: classify(bath, mode),
    }
}

/// Residual of the rotating-frame KMS relation
/// `γ^Ω_k(−x) = e^{−β(x−mΩ)} γ^Ω_{−k}(x)` over `grid`, relative to the
/// right-hand side.
pub fn modified_kms_check(bath: &BathSpec, mode: &Mode, grid: &[f64]) -> Result<f64, SpectrumError> {
    let beta = bath.beta();
    if grid.is_empty() || beta.is_infinite() {
        return Err(SpectrumError::InvalidKmsCheck);
    }
    let reversed = mode.time_reversed();
    let shift = mode.m() as f64 * bath.omega_rot;
    Ok(grid
        .iter()
        .map(|&x| {
            let predicted = beta.boltzmann(x - shift) * shifted_spectrum(bath, &reversed, x);
            (shifted_spectrum(bath, mode, -x) - predicted).abs() / predicted.max(KMS_EPS)
        })
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bath::{flat_spectrum, ohmic_spectrum};

    fn ohmic_bath(beta: f64, omega_rot: f64) -> BathSpec {
        let b = if beta.is_infinite() {
            InverseTemperature::Infinite
        } else {
            InverseTemperature::finite(beta).unwrap()
        };
        BathSpec::new(ohmic_spectrum(1.0, 1.0, 10.0, b).unwrap(), omega_rot).unwrap()
    }

    #[test]
    fn shifted_spectrum_without_rotation_is_bare() {
        let bath = ohmic_bath(1.0, 0.0);
        for x in [-3.0, -0.5, 0.0, 0.7, 4.0] {
            let k = Mode::bose(1.0, 3).unwrap();
            assert_eq!(shifted_spectrum(&bath, &k, x), bath.spectrum().eval(x));
        }
    }

    #[test]
    fn shifted_spectrum_axisymmetric_mode_is_bare() {
        let bath = ohmic_bath(1.0, 2.5);
        let k = Mode::bose(1.0, 0).unwrap();
        for x in [-3.0, 0.7, 4.0] {
            assert_eq!(shifted_spectrum(&bath, &k, x), bath.spectrum().eval(x));
        }
    }

    #[test]
    fn shifted_spectrum_ohmic_example() {
        let bath = ohmic_bath(1.0, 1.0);
        let k = Mode::bose(0.0, 2).unwrap();
        let expected = 3.0 * (-0.3f64).exp();
        assert!((shifted_spectrum(&bath, &k, 1.0) - expected).abs() < 1e-15);
    }

    #[test]
    fn marginal_mode_has_equal_rates() {
        let bath = BathSpec::new(flat_spectrum(1.0, InverseTemperature::Finite(2.0)).unwrap(), 0.5).unwrap();
        let k = Mode::bose(1.0, 2).unwrap();
        let r = rates(&bath, &k);
        assert_eq!(r.gamma_up, r.gamma_down);
        assert_eq!(r.classification, ModeClass::Marginal);
    }

    #[test]
    fn zero_temperature_stable_mode_has_no_pumping() {
        let bath = ohmic_bath(f64::INFINITY, 1.0);
        let r = rates(&bath, &Mode::bose(3.0, 1).unwrap());
        assert_eq!(r.gamma_up, 0.0);
        assert!(r.gamma_down > 0.0);
    }

    #[test]
    fn zero_temperature_superradiant_mode_only_pumps() {
        let bath = ohmic_bath(f64::INFINITY, 1.0);
        let k = Mode::bose(0.5, 2).unwrap();
        let r = rates(&bath, &k);
        assert_eq!(r.gamma_down, 0.0);
        let expected = bath.spectrum().eval(2.0 - 0.5);
        assert_eq!(r.gamma_up, expected);
        assert!(r.gamma_up > 0.0);
    }

    #[test]
    fn local_beta_examples() {
        let bath = ohmic_bath(1.0, 1.0);
        assert_eq!(local_beta(&bath, &Mode::bose(1.0, 0).unwrap()).unwrap(), 1.0);
        assert_eq!(local_beta(&bath, &Mode::bose(1.0, 2).unwrap()).unwrap(), -1.0);
        assert_eq!(local_beta(&bath, &Mode::bose(2.0, 1).unwrap()).unwrap(), 0.5);
    }

    #[test]
    fn local_beta_diverges_at_zero_energy_but_rates_do_not() {
        let bath = ohmic_bath(1.0, 1.0);
        let k = Mode::bose(0.0, 1).unwrap();
        assert!(matches!(
            local_beta(&bath, &k),
            Err(RateError::UndefinedLocalTemperature { m: 1 })
        ));
        let r = rates(&bath, &k);
        assert!(r.gamma_up.is_finite() && r.gamma_down.is_finite());
        assert_eq!(r.beta_loc, None);
        assert_eq!(r.classification, ModeClass::Superradiant);
    }

    #[test]
    fn classification_examples() {
        let bath = ohmic_bath(1.0, 1.0);
        assert_eq!(classify(&bath, &Mode::fermi(0.1, 5).unwrap()), ModeClass::Stable);
        assert_eq!(classify(&bath, &Mode::bose(0.5, 1).unwrap()), ModeClass::Superradiant);
        assert_eq!(classify(&bath, &Mode::bose(1.0, 1).unwrap()), ModeClass::Marginal);
    }

    #[test]
    fn deep_superradiance_does_not_produce_nan() {
        let bath = BathSpec::new(flat_spectrum(1.0, InverseTemperature::Finite(1e3)).unwrap(), 1.0).unwrap();
        let r = rates(&bath, &Mode::bose(0.1, 3).unwrap());
        assert_eq!(r.gamma_up, 1.0);
        assert_eq!(r.gamma_down, 0.0);
    }

    #[test]
    fn modified_kms_holds_for_shifted_ohmic() {
        let bath = ohmic_bath(0.7, 1.3);
        let grid = crate::bath::log_grid(1e-2, 30.0, 100);
        for m in -3..=3 {
            let k = Mode::bose(1.0, m).unwrap();
            let r = modified_kms_check(&bath, &k, &grid).unwrap();
            assert!(r <= 1e-12, "m={m} residual {r}");
        }
    }
}
