//! Bath autocorrelation functions `F(τ)` and their Fourier transform
//! `G(ω) = ∫ F(τ) e^{iωτ} dτ`.
//!
//! Samples live on a uniform grid symmetric about `τ = 0`. The transform is a
//! plain trapezoidal sum; `F` must have decayed below [`TAIL_TOL`] (relative
//! to its peak) at both window edges.
//!
//! Text import accepts `τ, Re F` or `τ, Re F, Im F` rows separated by commas
//! or whitespace. Lines starting with `#` are headers/comments.

use std::io::BufRead;

use num_complex::Complex64;

/// Largest allowed `|F(±T)| / max|F|`.
pub const TAIL_TOL: f64 = 1e-8;
/// `G(ω)` below `−TOL_NEG` is reported as a positivity violation.
pub const TOL_NEG: f64 = 1e-9;
/// Imaginary residue above this (relative to `max(1, |G|)`) sets the warning flag.
pub const TOL_IMAG: f64 = 1e-9;
const HERMITIAN_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CorrelationError {
    #[error("correlation grid needs an odd number (>= 3) of samples centred on tau = 0, got {0}")]
    BadLength(usize),
    #[error("sample spacing must be positive and finite, got {0}")]
    BadSpacing(f64),
    #[error("correlation function is not hermitian: |F(-tau) - conj F(tau)| = {deviation:e} at tau = {tau}")]
    NotHermitian { tau: f64, deviation: f64 },
    #[error("correlation window too short: |F(+-T)|/max|F| = {ratio:e} exceeds {TAIL_TOL:e}")]
    TailNotDecayed { ratio: f64 },
    #[error("spectral estimate G({omega}) = {value:e} is negative (undersampled or non-physical F)")]
    PositivityViolation { omega: f64, value: f64 },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// Uniformly sampled `F(τ_j)`, `τ_j = (j − c)·dt`, `c = (len − 1)/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationFunction {
    dt: f64,
    samples: Vec<Complex64>,
}

/// Result of one quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralEstimate {
    pub value: f64,
    pub imag_residue: f64,
    /// Set when the imaginary residue exceeds [`TOL_IMAG`].
    pub imag_warning: bool,
}

impl CorrelationFunction {
    pub fn new(dt: f64, samples: Vec<Complex64>) -> Result<Self, CorrelationError> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(CorrelationError::BadSpacing(dt));
        }
        if samples.len() < 3 || samples.len().is_multiple_of(2) {
            return Err(CorrelationError::BadLength(samples.len()));
        }
        let f = Self { dt, samples };
        f.check_hermitian()?;
        Ok(f)
    }

    /// Samples `f` on `[−half_width, half_width]` with spacing `dt`.
    pub fn sample(
        f: impl Fn(f64) -> Complex64,
        half_width: f64,
        dt: f64,
    ) -> Result<Self, CorrelationError> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(CorrelationError::BadSpacing(dt));
        }
        let half = (half_width / dt).round() as i64;
        let samples = (-half..=half).map(|j| f(j as f64 * dt)).collect();
        Self::new(dt, samples)
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn half_width(&self) -> f64 {
        self.centre() as f64 * self.dt
    }

    fn centre(&self) -> usize {
        (self.samples.len() - 1) / 2
    }

    fn tau(&self, j: usize) -> f64 {
        (j as f64 - self.centre() as f64) * self.dt
    }

    fn peak(&self) -> f64 {
        self.samples.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    fn check_hermitian(&self) -> Result<(), CorrelationError> {
        let scale = self.peak().max(f64::MIN_POSITIVE);
        let n = self.samples.len();
        for j in 0..=self.centre() {
            let deviation = (self.samples[n - 1 - j] - self.samples[j].conj()).norm();
            if deviation > HERMITIAN_TOL * scale {
                return Err(CorrelationError::NotHermitian {
                    tau: self.tau(j),
                    deviation,
                });
            }
        }
        Ok(())
    }

    /// Reads delimited text (see module docs).
    pub fn read_delimited(reader: impl BufRead) -> Result<Self, CorrelationError> {
        let mut taus = Vec::new();
        let mut values = Vec::new();
        for (idx, line) in reader.lines().enumerate() {
            let lineno = idx + 1;
            let line = line.map_err(|e| CorrelationError::Parse {
                line: lineno,
                message: e.to_string(),
            })?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line
                .split(|c: char| c == ',' || c.is_whitespace())
                .filter(|s| !s.is_empty())
                .collect();
            if !(fields.len() == 2 || fields.len() == 3) {
                return Err(CorrelationError::Parse {
                    line: lineno,
                    message: format!("expected 2 or 3 columns, found {}", fields.len()),
                });
            }
            let nums = fields
                .iter()
                .map(|s| s.parse::<f64>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| CorrelationError::Parse {
                    line: lineno,
                    message: e.to_string(),
                })?;
            taus.push(nums[0]);
            values.push(Complex64::new(nums[1], nums.get(2).copied().unwrap_or(0.0)));
        }
        if taus.len() < 3 {
            return Err(CorrelationError::BadLength(taus.len()));
        }
        let dt = (taus[taus.len() - 1] - taus[0]) / (taus.len() - 1) as f64;
        for (j, &tau) in taus.iter().enumerate() {
            let expected = taus[0] + j as f64 * dt;
            if (tau - expected).abs() > 1e-6 * dt {
                return Err(CorrelationError::Parse {
                    line: j + 1,
                    message: format!("non-uniform tau spacing at tau = {tau}"),
                });
            }
        }
        if (taus[0] + taus[taus.len() - 1]).abs() > 1e-6 * dt {
            return Err(CorrelationError::Parse {
                line: 1,
                message: "tau window must be symmetric about 0".into(),
            });
        }
        Self::new(dt, values)
    }
}

/// `G(ω)` by trapezoidal quadrature over the sampled window.
pub fn spectrum_from_correlation(
    f: &CorrelationFunction,
    omega: f64,
) -> Result<SpectralEstimate, CorrelationError> {
    let peak = f.peak();
    let n = f.samples.len();
    if peak > 0.0 {
        let ratio = f.samples[0].norm().max(f.samples[n - 1].norm()) / peak;
        if ratio > TAIL_TOL {
            return Err(CorrelationError::TailNotDecayed { ratio });
        }
    }
    let mut acc = Complex64::new(0.0, 0.0);
    for (j, z) in f.samples.iter().enumerate() {
        let weight = if j == 0 || j == n - 1 { 0.5 } else { 1.0 };
        let phase = omega * f.tau(j);
        acc += z * Complex64::new(phase.cos(), phase.sin()) * weight;
    }
    acc *= f.dt;
    if acc.re < -TOL_NEG {
        return Err(CorrelationError::PositivityViolation {
            omega,
            value: acc.re,
        });
    }
    Ok(SpectralEstimate {
        value: acc.re,
        imag_residue: acc.im,
        imag_warning: acc.im.abs() > TOL_IMAG * acc.re.abs().max(1.0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;
    use std::io::Cursor;

    #[test]
    fn exponential_correlation_gives_lorentzian() {
        let f = CorrelationFunction::sample(|t| Complex64::new((-t.abs()).exp(), 0.0), 30.0, 1e-3).unwrap();
        for w in [0.0, 0.5, 1.0, 3.0] {
            let est = spectrum_from_correlation(&f, w).unwrap();
            let exact = 2.0 / (1.0 + w * w);
            assert!((est.value - exact).abs() < 1e-6, "w={w} got {} want {exact}", est.value);
            assert!(!est.imag_warning);
        }
    }

    #[test]
    fn narrow_gaussian_at_zero_frequency_is_its_integral() {
        let s = 0.05;
        let f = CorrelationFunction::sample(
            |t| Complex64::new((-(t * t) / (2.0 * s * s)).exp(), 0.0),
            1.0,
            1e-3,
        )
        .unwrap();
        let est = spectrum_from_correlation(&f, 0.0).unwrap();
        let integral = s * (2.0 * PI).sqrt();
        assert!((est.value - integral).abs() < 1e-9);
    }

    #[test]
    fn modulated_gaussian_has_symmetric_peaks() {
        let w0 = 3.0;
        let f = CorrelationFunction::sample(
            |t| Complex64::new((w0 * t).cos() * (-t * t).exp(), 0.0),
            12.0,
            1e-3,
        )
        .unwrap();
        let exact = |w: f64| 0.5 * PI.sqrt() * ((-(w - w0).powi(2) / 4.0).exp() + (-(w + w0).powi(2) / 4.0).exp());
        for w in [-5.0, -3.0, -1.0, 0.0, 1.0, 3.0, 5.0] {
            let est = spectrum_from_correlation(&f, w).unwrap();
            assert!((est.value - exact(w)).abs() < 1e-6);
        }
        let left = spectrum_from_correlation(&f, -w0).unwrap().value;
        let right = spectrum_from_correlation(&f, w0).unwrap().value;
        assert!((left - right).abs() < 1e-12);
        assert!(right > spectrum_from_correlation(&f, w0 + 0.3).unwrap().value);
        assert!(right > spectrum_from_correlation(&f, w0 - 0.3).unwrap().value);
    }

    #[test]
    fn short_window_is_rejected() {
        let f = CorrelationFunction::sample(|t| Complex64::new((-t.abs()).exp(), 0.0), 5.0, 1e-2).unwrap();
        assert!(matches!(
            spectrum_from_correlation(&f, 0.0),
            Err(CorrelationError::TailNotDecayed { .. })
        ));
    }

    #[test]
    fn non_positive_type_function_is_flagged() {
        // F(τ) = cos(τ) e^{-τ²} - 0.9 e^{-τ²/4}: G(0) < 0
        let f = CorrelationFunction::sample(
            |t| Complex64::new(t.cos() * (-t * t).exp() - 0.9 * (-t * t / 4.0).exp(), 0.0),
            20.0,
            1e-2,
        )
        .unwrap();
        assert!(matches!(
            spectrum_from_correlation(&f, 0.0),
            Err(CorrelationError::PositivityViolation { .. })
        ));
    }

    #[test]
    fn non_hermitian_samples_rejected() {
        let samples = vec![
            Complex64::new(0.0, 0.0),
            Complex64::new(1.0, 0.0),
            Complex64::new(0.5, 0.0),
        ];
        assert!(matches!(
            CorrelationFunction::new(0.1, samples),
            Err(CorrelationError::NotHermitian { .. })
        ));
    }

    #[test]
    fn reads_two_and_three_column_text() {
        let text = "# tau, re, im\n-0.2, 0.1, -0.05\n-0.1, 0.5, -0.1\n0.0, 1.0, 0.0\n0.1, 0.5, 0.1\n0.2, 0.1, 0.05\n";
        let f = CorrelationFunction::read_delimited(Cursor::new(text)).unwrap();
        assert_eq!(f.samples().len(), 5);
        assert!((f.dt() - 0.1).abs() < 1e-15);
        assert_eq!(f.samples()[1], Complex64::new(0.5, -0.1));

        let text2 = "-1 0.2\n0 1\n1 0.2\n";
        let g = CorrelationFunction::read_delimited(Cursor::new(text2)).unwrap();
        assert_eq!(g.samples()[2], Complex64::new(0.2, 0.0));
    }

    #[test]
    fn rejects_non_uniform_grid() {
        let text = "-1, 0.1\n0, 1\n1.5, 0.1\n";
        assert!(CorrelationFunction::read_delimited(Cursor::new(text)).is_err());
    }
}
