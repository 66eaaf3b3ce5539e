//! Number distribution of a single mode.
//!
//! `P_n` follows a birth-death chain with up-rate `γ↑(1 ± n)` and down-rate
//! `γ↓(n + κn²)`. At `κ = 0` its first moment obeys the kinetic equation of
//! [`crate::kinetics`] exactly; `κ > 0` adds gain saturation.

mod exact;
mod gillespie;

pub use exact::{evolve_distribution, DistributionOptions, DistributionRun, TruncationStatus};
pub use gillespie::{gillespie, GillespieOptions, GillespieStats, RNG_ID};

use crate::integrate::{self, Dopri5Options, Tridiagonal};
use crate::kinetics::{KineticsOptions, RunStatus};
use crate::mode::{Mode, Statistics};
use crate::rates::RateSet;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BirthDeathError {
    #[error("kappa must be finite and >= 0, got {0}")]
    InvalidKappa(f64),
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("fermionic mode cannot start with {0} quanta")]
    FermiOccupation(u64),
    #[error("no finite fixed point: kappa = 0 and gamma_up >= gamma_down")]
    NoFixedPoint,
    #[error("operation requires a bosonic mode")]
    NotBosonic,
    #[error("number of trajectories must be >= 1")]
    NoTrajectories,
    #[error("population exceeded {ceiling} in a stochastic trajectory")]
    PopulationCeiling { ceiling: u64 },
    #[error(transparent)]
    Ode(#[from] integrate::OdeError),
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct NonlinearParams {
    kappa: f64,
}

impl NonlinearParams {
    pub const LINEAR: Self = Self { kappa: 0.0 };

    pub fn new(kappa: f64) -> Result<Self, BirthDeathError> {
        if !(kappa.is_finite() && kappa >= 0.0) {
            return Err(BirthDeathError::InvalidKappa(kappa));
        }
        Ok(Self { kappa })
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }
}

/// `P_n` for `n = 0..=cutoff` at `time`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeDistribution {
    pub probs: Vec<f64>,
    pub mode: Mode,
    pub time: f64,
}

impl ModeDistribution {
    /// Checks `P_n ≥ 0`, `Σ P_n = 1` within 1e−9 and the fermionic state space.
    pub fn new(probs: Vec<f64>, mode: Mode, time: f64) -> Result<Self, BirthDeathError> {
        if probs.is_empty() {
            return Err(BirthDeathError::InvalidDistribution("empty probability vector".into()));
        }
        if mode.statistics() == Statistics::Fermi && probs.len() > 2 {
            return Err(BirthDeathError::InvalidDistribution(format!(
                "fermionic distribution has {} states",
                probs.len()
            )));
        }
        if let Some(p) = probs.iter().find(|p| !(p.is_finite() && **p >= 0.0)) {
            return Err(BirthDeathError::InvalidDistribution(format!("bad probability {p}")));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(BirthDeathError::InvalidDistribution(format!("total probability {total}")));
        }
        Ok(Self { probs, mode, time })
    }

    /// All mass on `n`. Bosonic windows include one empty level above `n`.
    pub fn number_state(mode: Mode, n: usize) -> Result<Self, BirthDeathError> {
        let len = match mode.statistics() {
            Statistics::Fermi if n > 1 => return Err(BirthDeathError::FermiOccupation(n as u64)),
            Statistics::Fermi => 2,
            Statistics::Bose => n + 2,
        };
        let mut probs = vec![0.0; len];
        probs[n] = 1.0;
        Ok(Self { probs, mode, time: 0.0 })
    }

    pub fn cutoff(&self) -> usize {
        self.probs.len() - 1
    }

    pub fn mean(&self) -> f64 {
        moment(&self.probs, 1)
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        moment(&self.probs, 2) - m * m
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }
}

pub(crate) fn moment(p: &[f64], k: i32) -> f64 {
    p.iter().enumerate().map(|(n, &v)| (n as f64).powi(k) * v).sum()
}

/// Up-rate out of state `n` on a window with largest state `cutoff`.
pub fn up_rate(rates: &RateSet, statistics: Statistics, n: usize, cutoff: usize) -> f64 {
    if n >= cutoff {
        return 0.0;
    }
    rates.gamma_up * (1.0 + statistics.sign() * n as f64)
}

pub fn down_rate(rates: &RateSet, nl: NonlinearParams, n: usize) -> f64 {
    let n = n as f64;
    rates.gamma_down * (n + nl.kappa * n * n)
}

/// Generator on `0..len`, with no transitions out of the top state.
pub fn generator(rates: &RateSet, statistics: Statistics, nl: NonlinearParams, len: usize) -> Tridiagonal {
    let cutoff = len.saturating_sub(1);
    let mut l = Tridiagonal::zeros(len);
    for n in 0..len {
        let up = up_rate(rates, statistics, n, cutoff);
        let down = down_rate(rates, nl, n);
        l.diag[n] = -(up + down);
        if n + 1 < len {
            l.lower[n + 1] = up;
        }
        if n > 0 {
            l.upper[n - 1] = down;
        }
    }
    l
}

/// `dP/dt` for the distribution as given (its length fixes the window).
pub fn bd_generator(rates: &RateSet, nl: NonlinearParams, p: &ModeDistribution) -> Vec<f64> {
    let l = generator(rates, p.mode.statistics(), nl, p.probs.len());
    let mut out = vec![0.0; p.probs.len()];
    l.apply(&p.probs, &mut out);
    out
}

/// Detailed-balance distribution on `0..=cutoff`, normalised over the window.
/// This is the stationary law of the truncated chain whenever all down-rates
/// inside the window are positive.
pub fn detailed_balance_distribution(
    rates: &RateSet,
    statistics: Statistics,
    nl: NonlinearParams,
    cutoff: usize,
) -> Vec<f64> {
    let cutoff = match statistics {
        Statistics::Fermi => cutoff.min(1),
        Statistics::Bose => cutoff,
    };
    let mut log_w = vec![0.0; cutoff + 1];
    for n in 0..cutoff {
        let up = up_rate(rates, statistics, n, cutoff);
        let down = down_rate(rates, nl, n + 1);
        log_w[n + 1] = log_w[n] + up.ln() - down.ln();
    }
    let peak = log_w.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut w: Vec<f64> = log_w.iter().map(|&l| (l - peak).exp()).collect();
    let total: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= total);
    w
}

/// Stable non-negative root of `γ↑(1 + n) − γ↓(n + κn²) = 0`.
pub fn saturation_fixed_point(rates: &RateSet, nl: NonlinearParams) -> Result<f64, BirthDeathError> {
    let a = rates.gamma_down * nl.kappa;
    let b = rates.gamma_down - rates.gamma_up;
    let c = rates.gamma_up;
    if c == 0.0 {
        return Ok(0.0);
    }
    if a == 0.0 {
        return if b > 0.0 { Ok(c / b) } else { Err(BirthDeathError::NoFixedPoint) };
    }
    let disc = (b * b + 4.0 * a * c).sqrt();
    // rationalised form avoids cancellation when b > 0
    Ok(if b > 0.0 { 2.0 * c / (b + disc) } else { (disc - b) / (2.0 * a) })
}

pub fn meanfield_rhs(rates: &RateSet, nl: NonlinearParams, n: f64) -> f64 {
    rates.gamma_up * (1.0 + n) - rates.gamma_down * (n + nl.kappa * n * n)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeanfieldTrajectory {
    pub times: Vec<f64>,
    pub n: Vec<f64>,
    pub status: RunStatus,
}

/// Mean-field kinetics `dn/dt = γ↑(1 + n) − γ↓(n + κn²)` for a bosonic mode.
pub fn meanfield_evolve(
    rates: &RateSet,
    nl: NonlinearParams,
    n0: f64,
    t_grid: &[f64],
    opts: KineticsOptions,
) -> Result<MeanfieldTrajectory, BirthDeathError> {
    if !(n0.is_finite() && n0 >= 0.0) {
        return Err(BirthDeathError::InvalidDistribution(format!("initial population {n0}")));
    }
    let ceiling = opts.population_ceiling;
    let run = integrate::integrate(
        |_, y, dy| dy[0] = meanfield_rhs(rates, nl, y[0]),
        0.0,
        &[n0],
        t_grid,
        Dopri5Options {
            rtol: opts.rtol,
            atol: opts.atol,
            ..Dopri5Options::default()
        },
        |_, y| y[0] > ceiling,
    )?;
    Ok(MeanfieldTrajectory {
        n: run.states.iter().map(|s| s[0].max(0.0)).collect(),
        times: run.times,
        status: match run.stopped_at {
            Some(t) => RunStatus::ExponentialRunaway { t },
            None => RunStatus::Complete,
        },
    })
}
