//! Thermodynamic bookkeeping for diagonal multi-mode states.
//!
//! With `Δ_k = ω_k − m_kΩ` and `π_n ∝ e^{−βΔn}` the per-mode reference weights,
//!
//! ```text
//! S = −Σ P ln P,   σ = −Σ (ℒP)_n [ln P_n − ln π_n],   J = Σ Δ_k dn̄_k/dt
//! ```
//!
//! so that `dS/dt = σ + βJ` and `dU/dt = J + Ω Σ m_k dn̄_k/dt`.

use rayon::prelude::*;

use crate::beta::InverseTemperature;
use crate::birthdeath::{
    self, evolve_distribution, BirthDeathError, DistributionOptions, ModeDistribution, NonlinearParams,
    TruncationStatus,
};
use crate::kinetics::{mean_rhs, MeanTrajectory};
use crate::mode::Mode;
use crate::rates::{self, BathSpec, ModeClass, RateSet};

/// Probabilities below this are replaced by it inside logarithms.
pub const LOG_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ThermoError {
    #[error("entropy balance needs a finite bath temperature")]
    InfiniteBeta,
    #[error("black-hole temperature must be finite and > 0, got {0}")]
    InvalidHawkingTemperature(f64),
    #[error("time grids of the mode trajectories do not match")]
    MisalignedGrids,
    #[error("{modes} modes but {states} initial distributions")]
    InitialStateCount { modes: usize, states: usize },
    #[error(transparent)]
    BirthDeath(#[from] BirthDeathError),
}

fn entropy_of(p: &[f64]) -> f64 {
    p.iter().filter(|&&v| v > 0.0).map(|&v| -v * v.ln()).sum()
}

/// Von Neumann entropy of a product of diagonal mode states.
pub fn entropy(dists: &[ModeDistribution]) -> f64 {
    dists.iter().map(|d| entropy_of(&d.probs)).sum()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropyProduction {
    pub sigma: f64,
    /// The log floor was needed for some `P_n = 0` with `(ℒP)_n ≠ 0`.
    pub regularized: bool,
}

/// Entropy production of one mode relative to the Gibbs weights of the bath
/// restricted to the distribution's window.
pub fn entropy_production(
    p: &ModeDistribution,
    rates: &RateSet,
    nl: NonlinearParams,
    bath: &BathSpec,
) -> Result<EntropyProduction, ThermoError> {
    let beta = finite_beta(bath)?;
    let delta = p.mode.comoving_energy(bath.omega_rot());
    let lp = birthdeath::bd_generator(rates, nl, p);
    let mut regularized = false;
    let mut sigma = 0.0;
    for (n, (&pn, &dn)) in p.probs.iter().zip(&lp).enumerate() {
        // fluxes below the floor contribute nothing representable
        if dn.abs() < LOG_FLOOR {
            continue;
        }
        if pn < LOG_FLOOR {
            regularized = true;
        }
        sigma -= dn * (pn.max(LOG_FLOOR).ln() + beta * delta * n as f64);
    }
    Ok(EntropyProduction { sigma, regularized })
}

fn finite_beta(bath: &BathSpec) -> Result<f64, ThermoError> {
    match bath.beta() {
        InverseTemperature::Finite(b) => Ok(b),
        InverseTemperature::Infinite => Err(ThermoError::InfiniteBeta),
    }
}

/// `J = Σ (ω_k − m_kΩ) dn̄_k/dt`.
pub fn heat_current(modes: &[Mode], dnbar_dt: &[f64], bath: &BathSpec) -> f64 {
    modes
        .iter()
        .zip(dnbar_dt)
        .map(|(k, d)| k.comoving_energy(bath.omega_rot()) * d)
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyBalanceRow {
    pub time: f64,
    pub u_dot: f64,
    pub heat_current: f64,
    /// `Ω Σ m dn̄/dt`, work done by the rotating bath.
    pub power: f64,
    pub residual: f64,
}

/// First-law bookkeeping along synchronised mean trajectories.
pub fn energy_balance(trajectories: &[MeanTrajectory], bath: &BathSpec) -> Result<Vec<EnergyBalanceRow>, ThermoError> {
    let Some(first) = trajectories.first() else {
        return Ok(Vec::new());
    };
    if trajectories.iter().any(|tr| tr.times != first.times) {
        return Err(ThermoError::MisalignedGrids);
    }
    let modes: Vec<Mode> = trajectories.iter().map(|tr| tr.mode.clone()).collect();
    Ok((0..first.times.len())
        .map(|i| {
            let rates_of = |tr: &MeanTrajectory| mean_rhs(&tr.rates, tr.mode.statistics(), tr.nbar[i]);
            let ndot: Vec<f64> = trajectories.iter().map(rates_of).collect();
            first_law_row(first.times[i], &modes, &ndot, bath)
        })
        .collect())
}

fn first_law_row(time: f64, modes: &[Mode], ndot: &[f64], bath: &BathSpec) -> EnergyBalanceRow {
    let u_dot: f64 = modes.iter().zip(ndot).map(|(k, d)| k.omega() * d).sum();
    let power = bath.omega_rot() * modes.iter().zip(ndot).map(|(k, d)| k.m() as f64 * d).sum::<f64>();
    let heat = heat_current(modes, ndot, bath);
    EnergyBalanceRow {
        time,
        u_dot,
        heat_current: heat,
        power,
        residual: (u_dot - heat - power).abs(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LedgerRow {
    pub time: f64,
    pub entropy: f64,
    /// Finite-difference `dS/dt`.
    pub entropy_rate: f64,
    pub sigma: f64,
    pub heat_current: f64,
    /// `Ω Σ m dn̄/dt`.
    pub power: f64,
    pub energy_rate: f64,
    pub energy: f64,
    pub lz: f64,
    pub residual_first_law: f64,
    pub residual_second_law: f64,
    pub regularized: bool,
    /// Some mode is superradiant or marginal, so its reference state is only
    /// normalisable on the truncation window.
    pub truncated_reference: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThermoLedger {
    pub rows: Vec<LedgerRow>,
    pub beta: f64,
    /// Finite-difference step for `dS/dt`.
    pub fd_step: f64,
    /// Largest rate among the modes, `Γ`.
    pub rate_scale: f64,
    pub status: TruncationStatus,
}

/// Evolves every mode's distribution exactly and evaluates the ledger at
/// `times`. `dS/dt` uses centred differences with step `1e−3/Γ` (one-sided
/// where the centred stencil would reach before `t = 0`).
pub fn build_ledger(
    bath: &BathSpec,
    modes: &[Mode],
    nl: NonlinearParams,
    initial: &[ModeDistribution],
    times: &[f64],
    opts: DistributionOptions,
) -> Result<ThermoLedger, ThermoError> {
    let beta = finite_beta(bath)?;
    if modes.len() != initial.len() {
        return Err(ThermoError::InitialStateCount {
            modes: modes.len(),
            states: initial.len(),
        });
    }
    let rate_sets: Vec<RateSet> = modes.iter().map(|k| rates::rates(bath, k)).collect();
    let rate_scale = rate_sets
        .iter()
        .map(|r| r.gamma_down.max(r.gamma_up))
        .fold(0.0, f64::max);
    let h = if rate_scale > 0.0 { 1e-3 / rate_scale } else { 1e-3 };

    let stencil = |t: f64| -> [f64; 3] {
        if t - h < 0.0 {
            [t, t + h, t + 2.0 * h]
        } else {
            [t - h, t, t + h]
        }
    };
    let mut grid: Vec<f64> = times.iter().flat_map(|&t| stencil(t)).collect();
    grid.sort_by(f64::total_cmp);
    grid.dedup();

    let runs: Vec<_> = modes
        .par_iter()
        .zip(initial.par_iter())
        .zip(rate_sets.par_iter())
        .map(|((k, p0), r)| {
            let mut p0 = p0.clone();
            p0.mode = k.clone();
            evolve_distribution(r, nl, &p0, &grid, opts)
        })
        .collect::<Result<_, _>>()?;

    let mut status = TruncationStatus::Complete;
    let mut reached = grid.len();
    for run in &runs {
        if !run.status.is_complete() {
            status = run.status;
        }
        reached = reached.min(run.snapshots.len());
    }
    let index = |t: f64| grid.binary_search_by(|g| g.total_cmp(&t)).ok().filter(|&i| i < reached);
    let truncated_reference = modes
        .iter()
        .any(|k| rates::classify(bath, k) != ModeClass::Stable);

    let mut rows = Vec::with_capacity(times.len());
    for &t in times {
        let st = stencil(t);
        let (Some(i0), Some(i1), Some(i2)) = (index(st[0]), index(st[1]), index(st[2])) else {
            break;
        };
        let s_at = |i: usize| runs.iter().map(|run| entropy_of(&run.snapshots[i].probs)).sum::<f64>();
        let (s0, s1, s2) = (s_at(i0), s_at(i1), s_at(i2));
        let (s_now, s_dot) = if st[1] == t {
            (s1, (s2 - s0) / (2.0 * h))
        } else {
            (s0, (-3.0 * s0 + 4.0 * s1 - s2) / (2.0 * h))
        };
        let it = if st[1] == t { i1 } else { i0 };

        let mut sigma = 0.0;
        let mut regularized = false;
        let mut ndot = Vec::with_capacity(modes.len());
        let mut energy = 0.0;
        let mut lz = 0.0;
        for ((run, r), k) in runs.iter().zip(&rate_sets).zip(modes) {
            let p = &run.snapshots[it];
            let ep = entropy_production(p, r, nl, bath)?;
            sigma += ep.sigma;
            regularized |= ep.regularized;
            let lp = birthdeath::bd_generator(r, nl, p);
            ndot.push(lp.iter().enumerate().map(|(n, d)| n as f64 * d).sum::<f64>());
            let mean = p.mean();
            energy += k.omega() * mean;
            lz += k.m() as f64 * mean;
        }
        let first = first_law_row(t, modes, &ndot, bath);
        rows.push(LedgerRow {
            time: t,
            entropy: s_now,
            entropy_rate: s_dot,
            sigma,
            heat_current: first.heat_current,
            power: first.power,
            energy_rate: first.u_dot,
            energy,
            lz,
            residual_first_law: first.residual,
            residual_second_law: (s_dot - sigma - beta * first.heat_current).abs(),
            regularized,
            truncated_reference,
        });
    }
    Ok(ThermoLedger {
        rows,
        beta,
        fd_step: h,
        rate_scale,
        status,
    })
}

/// Emitted quanta `(ω, m, count)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quantum {
    pub omega: f64,
    pub m: i64,
    pub count: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BhLedgerEntry {
    pub d_mass: f64,
    pub d_angular_momentum: f64,
    pub d_area: f64,
}

/// Black-hole side of the first law `dM = T_H dA/4 + Ω dL` when `quanta`
/// are radiated away (`c = ħ = G = k_B = 1`).
pub fn bh_ledger(quanta: &[Quantum], omega_h: f64, t_h: f64) -> Result<BhLedgerEntry, ThermoError> {
    if !(t_h.is_finite() && t_h > 0.0) {
        return Err(ThermoError::InvalidHawkingTemperature(t_h));
    }
    let d_mass = -quanta.iter().map(|q| q.count * q.omega).sum::<f64>();
    let d_angular_momentum = -quanta.iter().map(|q| q.count * q.m as f64).sum::<f64>();
    Ok(BhLedgerEntry {
        d_mass,
        d_angular_momentum,
        d_area: 4.0 * (d_mass - omega_h * d_angular_momentum) / t_h,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bath::ohmic_spectrum;
    use crate::kinetics::{evolve_mean, KineticsOptions};
    use crate::mode::Statistics;

    fn bath(beta: f64, omega_rot: f64) -> BathSpec {
        BathSpec::new(ohmic_spectrum(1.0, 1.0, 10.0, InverseTemperature::Finite(beta)).unwrap(), omega_rot).unwrap()
    }

    fn dist(probs: Vec<f64>, mode: Mode) -> ModeDistribution {
        ModeDistribution::new(probs, mode, 0.0).unwrap()
    }

    #[test]
    fn entropy_examples() {
        let b = Mode::bose(1.0, 0).unwrap();
        assert_eq!(entropy(&[dist(vec![1.0], b.clone())]), 0.0);
        let f = dist(vec![0.5, 0.5], Mode::fermi(1.0, 0).unwrap());
        assert!((entropy(std::slice::from_ref(&f)) - 2f64.ln()).abs() < 1e-15);
        let nbar: f64 = 2.5;
        let q = nbar / (1.0 + nbar);
        let geo: Vec<f64> = (0..2000).map(|n| (1.0 - q) * q.powi(n)).collect();
        let exact = (nbar + 1.0) * (nbar + 1.0).ln() - nbar * nbar.ln();
        let g = ModeDistribution { probs: geo, mode: b, time: 0.0 };
        assert!((entropy(std::slice::from_ref(&g)) - exact).abs() < 1e-10);
        assert!((entropy(&[g.clone(), f.clone()]) - entropy(&[g]) - entropy(&[f])).abs() < 1e-15);
    }

    #[test]
    fn stationary_state_produces_no_entropy() {
        let b = bath(1.2, 0.3);
        let k = Mode::bose(1.5, 2).unwrap();
        let r = rates::rates(&b, &k);
        let pi = birthdeath::detailed_balance_distribution(&r, Statistics::Bose, NonlinearParams::LINEAR, 400);
        let p = ModeDistribution { probs: pi, mode: k, time: 0.0 };
        let ep = entropy_production(&p, &r, NonlinearParams::LINEAR, &b).unwrap();
        assert!(ep.sigma.abs() < 1e-10);
    }

    #[test]
    fn vacuum_needs_log_floor() {
        let b = bath(1.0, 0.0);
        let k = Mode::bose(1.0, 0).unwrap();
        let r = rates::rates(&b, &k);
        let p = ModeDistribution::number_state(k, 0).unwrap();
        let ep = entropy_production(&p, &r, NonlinearParams::LINEAR, &b).unwrap();
        assert!(ep.regularized && ep.sigma > 0.0);
    }

    #[test]
    fn infinite_beta_rejected() {
        let b = BathSpec::new(ohmic_spectrum(1.0, 1.0, 10.0, InverseTemperature::Infinite).unwrap(), 0.0).unwrap();
        let k = Mode::bose(1.0, 0).unwrap();
        let p = ModeDistribution::number_state(k.clone(), 0).unwrap();
        assert_eq!(
            entropy_production(&p, &rates::rates(&b, &k), NonlinearParams::LINEAR, &b),
            Err(ThermoError::InfiniteBeta)
        );
    }

    #[test]
    fn relaxing_hot_mode_dumps_heat() {
        let b = bath(1.0, 0.5);
        let k = Mode::bose(2.0, 1).unwrap();
        let r = rates::rates(&b, &k);
        let ndot = mean_rhs(&r, Statistics::Bose, 10.0);
        assert!(heat_current(&[k], &[ndot], &b) < 0.0);
    }

    #[test]
    fn first_law_closes() {
        let b = bath(0.8, 0.7);
        let grid: Vec<f64> = (0..=20).map(|i| i as f64 * 0.25).collect();
        let trajs: Vec<MeanTrajectory> = [Mode::bose(2.0, 1).unwrap(), Mode::bose(0.4, 2).unwrap(), Mode::fermi(1.0, -1).unwrap()]
            .iter()
            .map(|k| evolve_mean(k, rates::rates(&b, k), 0.3, &grid, KineticsOptions::default()).unwrap())
            .collect();
        for row in energy_balance(&trajs, &b).unwrap() {
            assert!(row.residual <= 1e-10 * row.u_dot.abs().max(1.0));
        }
        let short = evolve_mean(&Mode::bose(1.0, 0).unwrap(), RateSet::from_rates(1.0, 0.1, Statistics::Bose), 0.0, &grid[..5], KineticsOptions::default()).unwrap();
        assert_eq!(energy_balance(&[trajs[0].clone(), short], &b), Err(ThermoError::MisalignedGrids));
    }

    #[test]
    fn no_rotation_means_no_work() {
        let b = bath(0.8, 0.0);
        let k = Mode::bose(2.0, 3).unwrap();
        let row = first_law_row(0.0, &[k], &[0.37], &b);
        assert_eq!(row.u_dot, row.heat_current);
        assert_eq!(row.power, 0.0);
    }

    #[test]
    fn ledger_balances_on_exact_trajectory() {
        let b = bath(1.0, 0.4);
        let modes = [Mode::bose(1.5, 1).unwrap(), Mode::fermi(0.8, 2).unwrap()];
        // full support, otherwise dS/dt diverges at t = 0
        let q: f64 = 0.6;
        let hot: Vec<f64> = (0..200).map(|n| (1.0 - q) * q.powi(n)).collect();
        let initial = [
            ModeDistribution { probs: hot, mode: modes[0].clone(), time: 0.0 },
            ModeDistribution::new(vec![0.9, 0.1], modes[1].clone(), 0.0).unwrap(),
        ];
        let times: Vec<f64> = (0..=10).map(|i| i as f64 * 0.5).collect();
        let ledger = build_ledger(&b, &modes, NonlinearParams::LINEAR, &initial, &times, DistributionOptions::default()).unwrap();
        assert_eq!(ledger.rows.len(), times.len());
        for row in &ledger.rows {
            assert!(row.sigma >= -1e-12);
            assert!(row.residual_second_law <= 1e-5 * row.entropy_rate.abs().max(ledger.rate_scale), "{row:?}");
            assert!(!row.truncated_reference);
        }
    }

    #[test]
    fn bh_worked_example() {
        let e = bh_ledger(&[Quantum { omega: 0.5, m: 1, count: 1.0 }], 1.0, 1.0).unwrap();
        assert_eq!((e.d_mass, e.d_angular_momentum, e.d_area), (-0.5, -1.0, 2.0));
        let boundary = bh_ledger(&[Quantum { omega: 2.0, m: 2, count: 3.0 }], 1.0, 0.3).unwrap();
        assert_eq!(boundary.d_area, 0.0);
        assert!(bh_ledger(&[], 1.0, 0.0).is_err());
    }
}
