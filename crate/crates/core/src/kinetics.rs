//! Mean occupation of a single mode.
//!
//! `dn̄/dt = γ↑(1 ± n̄) − γ↓ n̄` with `+` for bosons and `−` for fermions. The
//! equation is linear with rate constant `λ = γ↓ ∓ γ↑`; a negative `λ` is the
//! superradiant instability.

use rayon::prelude::*;

use crate::integrate::{self, Dopri5Options, OdeError};
use crate::mode::{Mode, Statistics};
use crate::rates::{self, BathSpec, ModeClass, RateSet};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum KineticsError {
    #[error("fermionic occupation must lie in [0, 1], got {0}")]
    FermiOccupation(f64),
    #[error("occupation must be finite and >= 0, got {0}")]
    NegativeOccupation(f64),
    #[error("{} bosonic mode has no stationary population", .0.as_str())]
    NoStationaryPopulation(ModeClass),
    #[error(transparent)]
    Ode(#[from] OdeError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KineticsOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Runs stop once `n̄` exceeds this.
    pub population_ceiling: f64,
}

impl Default for KineticsOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-12,
            population_ceiling: 1e12,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RunStatus {
    Complete,
    /// Population crossed the ceiling at `t`; output stops before the grid ends.
    ExponentialRunaway { t: f64 },
}

impl RunStatus {
    pub fn is_complete(&self) -> bool {
        matches!(self, Self::Complete)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeanTrajectory {
    pub times: Vec<f64>,
    pub nbar: Vec<f64>,
    pub mode: Mode,
    pub rates: RateSet,
    pub status: RunStatus,
}

pub fn mean_rhs(rates: &RateSet, statistics: Statistics, nbar: f64) -> f64 {
    rates.gamma_up * (1.0 + statistics.sign() * nbar) - rates.gamma_down * nbar
}

fn check_initial(statistics: Statistics, nbar0: f64) -> Result<(), KineticsError> {
    if !(nbar0.is_finite() && nbar0 >= 0.0) {
        return Err(KineticsError::NegativeOccupation(nbar0));
    }
    if statistics == Statistics::Fermi && nbar0 > 1.0 {
        return Err(KineticsError::FermiOccupation(nbar0));
    }
    Ok(())
}

/// Integrates the kinetic equation and samples it on `t_grid` (starting at 0).
pub fn evolve_mean(
    mode: &Mode,
    rates: RateSet,
    nbar0: f64,
    t_grid: &[f64],
    opts: KineticsOptions,
) -> Result<MeanTrajectory, KineticsError> {
    let statistics = mode.statistics();
    check_initial(statistics, nbar0)?;
    let ceiling = opts.population_ceiling;
    let run = integrate::integrate(
        |_, y, dy| dy[0] = mean_rhs(&rates, statistics, y[0]),
        0.0,
        &[nbar0],
        t_grid,
        Dopri5Options {
            rtol: opts.rtol,
            atol: opts.atol,
            ..Dopri5Options::default()
        },
        |_, y| y[0] > ceiling,
    )?;
    let upper = match statistics {
        Statistics::Bose => f64::INFINITY,
        Statistics::Fermi => 1.0,
    };
    Ok(MeanTrajectory {
        nbar: run.states.iter().map(|s| s[0].clamp(0.0, upper)).collect(),
        times: run.times,
        mode: mode.clone(),
        rates,
        status: match run.stopped_at {
            Some(t) => RunStatus::ExponentialRunaway { t },
            None => RunStatus::Complete,
        },
    })
}

/// Exact solution of the linear kinetic equation. Covers relaxation, growth
/// (`λ < 0`) and the marginal limit `n̄₀ + γ↑t` (`λ = 0`).
pub fn closed_form_mean(rates: &RateSet, statistics: Statistics, nbar0: f64, t: f64) -> f64 {
    let lambda = rates.relaxation_rate(statistics);
    if lambda == 0.0 {
        return nbar0 + rates.gamma_up * t;
    }
    nbar0 * (-lambda * t).exp() - rates.gamma_up * (-lambda * t).exp_m1() / lambda
}

/// Bose-Einstein / Fermi-Dirac occupation with chemical potential `mΩ`.
pub fn asymptotic_population(bath: &BathSpec, mode: &Mode) -> Result<f64, KineticsError> {
    let x = bath.beta().times(mode.comoving_energy(bath.omega_rot()));
    match mode.statistics() {
        Statistics::Fermi => Ok(1.0 / (x.exp() + 1.0)),
        Statistics::Bose => match rates::classify(bath, mode) {
            ModeClass::Stable => Ok(1.0 / x.exp_m1()),
            class => Err(KineticsError::NoStationaryPopulation(class)),
        },
    }
}

/// Fixed point of the kinetic equation from the rates alone,
/// `γ↑ / (γ↓ ∓ γ↑)`.
pub fn stationary_mean(rates: &RateSet, statistics: Statistics) -> Option<f64> {
    let lambda = rates.relaxation_rate(statistics);
    (lambda > 0.0).then(|| rates.gamma_up / lambda)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmissionLine {
    pub mode: Mode,
    /// Vacuum emission rate `dn̄/dt` at `n̄ = 0`, i.e. `γ↑`.
    pub rate: f64,
    pub classification: ModeClass,
}

pub fn emission_spectrum(bath: &BathSpec, modes: &[Mode]) -> Vec<EmissionLine> {
    modes
        .par_iter()
        .map(|mode| {
            let r = rates::rates(bath, mode);
            EmissionLine {
                mode: mode.clone(),
                rate: r.gamma_up,
                classification: r.classification,
            }
        })
        .collect()
}
