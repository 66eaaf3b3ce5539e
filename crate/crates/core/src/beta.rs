//! Inverse temperature with an explicit zero-temperature value.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Inverse temperature `β = 1/T` in natural units (`k_B = 1`).
///
/// The zero-temperature limit has a different rate structure (spontaneous
/// emission survives, absorption from negative comoving frequencies vanishes),
/// so it is a distinct variant rather than a very large float.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InverseTemperature {
    Finite(f64),
    Infinite,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("inverse temperature must be positive and finite (or \"inf\"), got {0}")]
pub struct InvalidBeta(pub f64);

impl InverseTemperature {
    pub fn finite(beta: f64) -> Result<Self, InvalidBeta> {
        if beta.is_finite() && beta > 0.0 {
            Ok(Self::Finite(beta))
        } else if beta == f64::INFINITY {
            Ok(Self::Infinite)
        } else {
            Err(InvalidBeta(beta))
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, Self::Infinite)
    }

    /// `β` as a float, `+∞` for the zero-temperature variant.
    pub fn value(self) -> f64 {
        match self {
            Self::Finite(b) => b,
            Self::Infinite => f64::INFINITY,
        }
    }

    /// `β·energy`, with `∞·0 = 0`.
    pub fn times(self, energy: f64) -> f64 {
        match self {
            Self::Finite(b) => b * energy,
            Self::Infinite if energy == 0.0 => 0.0,
            Self::Infinite => energy.signum() * f64::INFINITY,
        }
    }

    /// Boltzmann factor `e^{-β·energy}`; exactly 1 at zero energy.
    pub fn boltzmann(self, energy: f64) -> f64 {
        (-self.times(energy)).exp()
    }
}

impl fmt::Display for InverseTemperature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Finite(b) => write!(f, "{b:.16e}"),
            Self::Infinite => f.write_str("inf"),
        }
    }
}

impl FromStr for InverseTemperature {
    type Err = InvalidBeta;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "inf" | "+inf" | "infinity" | "Infinity" => Ok(Self::Infinite),
            other => {
                let v: f64 = other.parse().map_err(|_| InvalidBeta(f64::NAN))?;
                Self::finite(v)
            }
        }
    }
}

impl Serialize for InverseTemperature {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            Self::Finite(b) => serializer.serialize_f64(*b),
            Self::Infinite => serializer.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for InverseTemperature {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Int(i64),
            Text(String),
        }
        let parsed = match Raw::deserialize(deserializer)? {
            Raw::Num(v) => Self::finite(v),
            Raw::Int(v) => Self::finite(v as f64),
            Raw::Text(s) => s.parse(),
        };
        parsed.map_err(serde::de::Error::custom)
    }
}
