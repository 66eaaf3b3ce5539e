//! Coupling spectra `γ⁰(x)` of the non-rotating bath.
//!
//! Every shipped family is built from its absorption side (`x > 0`) and
//! completed on `x < 0` with the KMS relation `γ(−x) = e^{−βx} γ(x)`, so the
//! thermal detailed-balance property holds by construction. Spectra imported
//! from a correlation function or supplied as a raw closure are evaluated as
//! given and can be audited with [`kms_check`].
//!
//! The coupling constant is not a separate parameter: `γ⁰` already contains
//! the `λ²` factor.

use std::fmt;
use std::sync::Arc;

use crate::beta::InverseTemperature;
use crate::correlation::{spectrum_from_correlation, CorrelationFunction};

/// Thread-safe real function of one variable.
pub type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SpectrumError {
    #[error("coupling spectrum is negative ({value:e}) at x = {x}")]
    PositivityViolation { x: f64, value: f64 },
    #[error("invalid spectrum parameter `{name}` = {value}")]
    InvalidParameter { name: &'static str, value: f64 },
    #[error("kms check needs a finite inverse temperature and a nonempty grid")]
    InvalidKmsCheck,
    #[error(transparent)]
    Correlation(#[from] crate::correlation::CorrelationError),
}

/// Which construction produced a spectrum, with its parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum SpectrumFamily {
    /// `A·x^s·e^{−x/x_c}` on the absorption side.
    Ohmic {
        amplitude: f64,
        exponent: f64,
        cutoff: f64,
    },
    /// Constant absorption rate.
    Flat { level: f64 },
    /// Absorption `|f(ω)|²`, emission `|g(ω)|² = e^{−β_H ω}|f(ω)|²`.
    HawkingFormFactor,
    /// Numerical Fourier transform of a sampled correlation function.
    FromCorrelation,
    /// KMS-completed user positive part, or an arbitrary user closure.
    Custom,
}

impl SpectrumFamily {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Ohmic { .. } => "ohmic",
            Self::Flat { .. } => "flat",
            Self::HawkingFormFactor => "hawking",
            Self::FromCorrelation => "correlation",
            Self::Custom => "custom",
        }
    }
}

#[derive(Clone)]
enum Shape {
    Kms { positive: RealFn, at_zero: f64 },
    Correlation(Arc<CorrelationFunction>),
    Raw(RealFn),
}

/// A coupling spectrum `γ⁰(x)`, total on ℝ.
#[derive(Clone)]
pub struct CouplingSpectrum {
    family: SpectrumFamily,
    beta_ref: InverseTemperature,
    shape: Shape,
}

impl fmt::Debug for CouplingSpectrum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CouplingSpectrum")
            .field("family", &self.family)
            .field("beta_ref", &self.beta_ref)
            .finish_non_exhaustive()
    }
}

/// Log-spaced probe points used to validate positivity at construction.
fn probe_grid() -> impl Iterator<Item = f64> {
    (0..=160).map(|i| 10f64.powf(-8.0 + 0.1 * i as f64))
}

fn check_positive(f: &dyn Fn(f64) -> f64) -> Result<(), SpectrumError> {
    for x in probe_grid() {
        let value = f(x);
        if value < 0.0 || value.is_nan() {
            return Err(SpectrumError::PositivityViolation { x, value });
        }
    }
    Ok(())
}

fn require_positive(name: &'static str, value: f64) -> Result<(), SpectrumError> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(SpectrumError::InvalidParameter { name, value })
    }
}

/// Completes an absorption-side function to a full spectrum obeying KMS at
/// `beta`.
///
/// `γ(0)` is the right limit `positive_part(0⁺)` when that is finite, else 0.
pub fn kms_extend(
    positive_part: RealFn,
    beta: InverseTemperature,
) -> Result<CouplingSpectrum, SpectrumError> {
    check_positive(positive_part.as_ref())?;
    let limit = positive_part(f64::MIN_POSITIVE);
    let at_zero = if limit.is_finite() { limit } else { 0.0 };
    Ok(CouplingSpectrum {
        family: SpectrumFamily::Custom,
        beta_ref: beta,
        shape: Shape::Kms {
            positive: positive_part,
            at_zero,
        },
    })
}

/// Ohmic-family spectrum `A·x^s·e^{−x/x_c}` with KMS completion.
pub fn ohmic_spectrum(
    amplitude: f64,
    exponent: f64,
    cutoff: f64,
    beta: InverseTemperature,
) -> Result<CouplingSpectrum, SpectrumError> {
    require_positive("amplitude", amplitude)?;
    require_positive("exponent", exponent)?;
    require_positive("cutoff", cutoff)?;
    let positive: RealFn = Arc::new(move |x: f64| amplitude * x.powf(exponent) * (-x / cutoff).exp());
    Ok(CouplingSpectrum {
        family: SpectrumFamily::Ohmic {
            amplitude,
            exponent,
            cutoff,
        },
        beta_ref: beta,
        shape: Shape::Kms {
            positive,
            at_zero: 0.0,
        },
    })
}

/// Frequency-independent absorption rate `level`.
pub fn flat_spectrum(level: f64, beta: InverseTemperature) -> Result<CouplingSpectrum, SpectrumError> {
    require_positive("level", level)?;
    Ok(CouplingSpectrum {
        family: SpectrumFamily::Flat { level },
        beta_ref: beta,
        shape: Shape::Kms {
            positive: Arc::new(move |_| level),
            at_zero: level,
        },
    })
}

/// Bath seen by exterior field modes of a static black hole.
///
/// `formfactor_sq` is the absorption form factor `|f(ω)|²`; the emission side
/// carries `|g(ω)|² = e^{−β_H ω}|f(ω)|²`. The result is the same object
/// [`kms_extend`] builds at `β_H`.
pub fn hawking_spectrum(
    formfactor_sq: RealFn,
    beta_h: InverseTemperature,
) -> Result<CouplingSpectrum, SpectrumError> {
    let mut spectrum = kms_extend(formfactor_sq, beta_h)?;
    spectrum.family = SpectrumFamily::HawkingFormFactor;
    Ok(spectrum)
}

/// Default Hawking bath: constant form factor, no gray-body shaping.
pub fn hawking_constant(level: f64, beta_h: InverseTemperature) -> Result<CouplingSpectrum, SpectrumError> {
    require_positive("level", level)?;
    hawking_spectrum(Arc::new(move |_| level), beta_h)
}

impl CouplingSpectrum {
    /// Spectrum evaluated by quadrature of a sampled bath correlation
    /// function on both sides of the origin. Nothing enforces KMS here;
    /// `beta_ref` records the temperature the data is claimed to be at.
    pub fn from_correlation(correlation: CorrelationFunction, beta_ref: InverseTemperature) -> Self {
        Self {
            family: SpectrumFamily::FromCorrelation,
            beta_ref,
            shape: Shape::Correlation(Arc::new(correlation)),
        }
    }

    /// Arbitrary user spectrum on all of ℝ, evaluated as given.
    pub fn custom(f: RealFn, beta_ref: InverseTemperature) -> Self {
        Self {
            family: SpectrumFamily::Custom,
            beta_ref,
            shape: Shape::Raw(f),
        }
    }

    pub fn family(&self) -> &SpectrumFamily {
        &self.family
    }

    pub fn beta_ref(&self) -> InverseTemperature {
        self.beta_ref
    }

    /// True when KMS at `beta_ref` holds by construction.
    pub fn is_kms_by_construction(&self) -> bool {
        matches!(self.shape, Shape::Kms { .. })
    }

    /// `γ⁰(x)`.
    pub fn eval(&self, x: f64) -> f64 {
        match &self.shape {
            Shape::Kms { positive, at_zero } => {
                if x > 0.0 {
                    positive(x)
                } else if x < 0.0 {
                    let w = self.beta_ref.boltzmann(-x);
                    if w == 0.0 {
                        0.0
                    } else {
                        w * positive(-x)
                    }
                } else {
                    *at_zero
                }
            }
            // Negative quadrature noise is clipped; `spectrum_from_correlation`
            // is the place that reports it.
            Shape::Correlation(f) => spectrum_from_correlation(f, x)
                .map(|est| est.value)
                .unwrap_or(0.0)
                .max(0.0),
            Shape::Raw(f) => f(x),
        }
    }
}

/// Largest relative KMS residual over `grid`:
/// `max |γ(−x) − e^{−βx}γ(x)| / max(e^{−βx}γ(x), ε)`, i.e. the relative error
/// of the emission side against the value detailed balance predicts.
pub fn kms_check(spectrum: &CouplingSpectrum, beta: f64, grid: &[f64]) -> Result<f64, SpectrumError> {
    if grid.is_empty() || !(beta.is_finite() && beta > 0.0) {
        return Err(SpectrumError::InvalidKmsCheck);
    }
    Ok(grid
        .iter()
        .map(|&x| {
            let predicted = (-beta * x).exp() * spectrum.eval(x);
            (spectrum.eval(-x) - predicted).abs() / predicted.max(KMS_EPS)
        })
        .fold(0.0, f64::max))
}

/// Floor for the KMS residual denominator.
pub(crate) const KMS_EPS: f64 = 1e-300;

/// `n` log-spaced points on `[lo, hi]`.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi > lo && n >= 2);
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
        .collect()
}
