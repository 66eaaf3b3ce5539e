//! Field modes `|ω, m, α⟩`.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

/// Exchange statistics of the field quanta.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Statistics {
    Bose,
    Fermi,
}

impl Statistics {
    /// `+1` for bosons, `-1` for fermions: the sign in `1 ± n`.
    pub fn sign(self) -> f64 {
        match self {
            Self::Bose => 1.0,
            Self::Fermi => -1.0,
        }
    }
}

impl fmt::Display for Statistics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Bose => "bose",
            Self::Fermi => "fermi",
        })
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("mode energy must be finite and >= 0, got {0}")]
pub struct InvalidMode(pub f64);

/// One field mode: energy `omega` (ħ = 1), angular momentum `m` along the
/// rotation axis, an opaque label `alpha` for the remaining quantum numbers.
#[derive(Debug, Clone, PartialEq)]
pub struct Mode {
    omega: f64,
    m: i64,
    alpha: String,
    statistics: Statistics,
}

impl Mode {
    pub fn new(
        omega: f64,
        m: i64,
        alpha: impl Into<String>,
        statistics: Statistics,
    ) -> Result<Self, InvalidMode> {
        if !(omega.is_finite() && omega >= 0.0) {
            return Err(InvalidMode(omega));
        }
        Ok(Self {
            omega,
            m,
            alpha: alpha.into(),
            statistics,
        })
    }

    pub fn bose(omega: f64, m: i64) -> Result<Self, InvalidMode> {
        Self::new(omega, m, "0", Statistics::Bose)
    }

    pub fn fermi(omega: f64, m: i64) -> Result<Self, InvalidMode> {
        Self::new(omega, m, "0", Statistics::Fermi)
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn m(&self) -> i64 {
        self.m
    }

    pub fn alpha(&self) -> &str {
        &self.alpha
    }

    pub fn statistics(&self) -> Statistics {
        self.statistics
    }

    /// Energy measured in the frame co-rotating with the bath, `ω − mΩ`.
    ///
    /// Every place that compares `ω` against `mΩ` goes through this so that
    /// marginal modes are classified consistently.
    pub fn comoving_energy(&self, omega_rot: f64) -> f64 {
        self.omega - self.m as f64 * omega_rot
    }

    /// The time-reversed partner `−k = (ω, −m, Tα)`. The label is opaque, so
    /// only `m` flips.
    pub fn time_reversed(&self) -> Self {
        Self {
            m: -self.m,
            ..self.clone()
        }
    }

    /// Total order used for deterministic output: `(omega, m, alpha)`.
    pub fn output_order(&self, other: &Self) -> Ordering {
        self.omega
            .total_cmp(&other.omega)
            .then(self.m.cmp(&other.m))
            .then_with(|| self.alpha.cmp(&other.alpha))
            .then(self.statistics.cmp(&other.statistics))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_negative_or_nan_energy() {
        assert!(Mode::bose(-0.1, 0).is_err());
        assert!(Mode::bose(f64::NAN, 0).is_err());
        assert!(Mode::bose(0.0, 3).is_ok());
    }

    #[test]
    fn time_reversal_flips_m_only() {
        let k = Mode::new(1.5, 2, "up", Statistics::Fermi).unwrap();
        let r = k.time_reversed();
        assert_eq!(r.m(), -2);
        assert_eq!(r.omega(), 1.5);
        assert_eq!(r.alpha(), "up");
        assert_eq!(r.statistics(), Statistics::Fermi);
    }

    #[test]
    fn output_order_sorts_by_omega_then_m() {
        let mut v = [Mode::bose(2.0, 0).unwrap(),
            Mode::bose(1.0, 3).unwrap(),
            Mode::bose(1.0, -1).unwrap()];
        v.sort_by(Mode::output_order);
        let keys: Vec<_> = v.iter().map(|k| (k.omega(), k.m())).collect();
        assert_eq!(keys, vec![(1.0, -1), (1.0, 3), (2.0, 0)]);
    }
}
