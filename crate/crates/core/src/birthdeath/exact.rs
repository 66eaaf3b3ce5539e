//! Deterministic integration of the truncated master equation.
//!
//! The bosonic window starts small and doubles whenever the probability mass
//! in its upper half exceeds `tail_tol`, so the top state (where the chain is
//! reflected) never carries appreciable weight. A step that would end with too
//! much mass there is discarded and redone on the wider window.

use super::{generator, moment, BirthDeathError, ModeDistribution, NonlinearParams};
use crate::integrate::{check_grid, Sdirk4};
use crate::mode::Statistics;
use crate::rates::RateSet;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistributionOptions {
    pub tail_tol: f64,
    /// Largest admissible cutoff `N_max`.
    pub max_cutoff: usize,
    /// Per-component tolerance on `P_n`.
    pub rtol: f64,
    pub atol: f64,
    /// Tolerance on the local error of the first moment, relative to the mean.
    pub moment_rtol: f64,
    pub max_steps: usize,
}

impl Default for DistributionOptions {
    fn default() -> Self {
        Self {
            tail_tol: 1e-10,
            max_cutoff: 1 << 20,
            rtol: 1e-8,
            atol: 1e-12,
            moment_rtol: 1e-11,
            max_steps: 1_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TruncationStatus {
    Complete,
    /// The window would have had to grow beyond the ceiling at `t`.
    RunawayTruncation { t: f64, cutoff: usize },
}

impl TruncationStatus {
    pub fn is_complete(&self) -> bool {
        matches!(self, Self::Complete)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DistributionRun {
    /// One snapshot per reached output time. Shorter than the grid after a
    /// runaway.
    pub snapshots: Vec<ModeDistribution>,
    pub status: TruncationStatus,
    pub largest_cutoff: usize,
    pub steps: usize,
}

fn upper_half_mass(p: &[f64]) -> f64 {
    p[p.len() / 2..].iter().map(|v| v.abs()).sum()
}

/// Evolves `p0` (taken at `p0.time`) and records the distribution at each time
/// of `t_grid`.
pub fn evolve_distribution(
    rates: &RateSet,
    nl: NonlinearParams,
    p0: &ModeDistribution,
    t_grid: &[f64],
    opts: DistributionOptions,
) -> Result<DistributionRun, BirthDeathError> {
    let t0 = p0.time;
    check_grid(t0, t_grid)?;
    let statistics = p0.mode.statistics();
    let bosonic = statistics == Statistics::Bose;

    let mut y = p0.probs.clone();
    let mut len = match statistics {
        Statistics::Fermi => 2,
        Statistics::Bose => (2 * y.len()).next_power_of_two().max(16),
    };
    let mut run = DistributionRun {
        snapshots: Vec::with_capacity(t_grid.len()),
        status: TruncationStatus::Complete,
        largest_cutoff: 0,
        steps: 0,
    };
    y.resize(len, 0.0);
    while bosonic && upper_half_mass(&y) > opts.tail_tol {
        len *= 2;
        y.resize(len, 0.0);
    }
    if len - 1 > opts.max_cutoff.max(1) {
        run.status = TruncationStatus::RunawayTruncation { t: t0, cutoff: len - 1 };
        return Ok(run);
    }

    let mut l = generator(rates, statistics, nl, len);
    let mut stepper = Sdirk4::new(len);
    let mut y_new = vec![0.0; len];
    let mut err = vec![0.0; len];
    let scale = rates.gamma_up + rates.gamma_down * (1.0 + nl.kappa());
    let mut h = if scale > 0.0 { 1e-3 / scale } else { f64::INFINITY };
    let mut t = t0;

    for &t_out in t_grid {
        while t < t_out {
            if run.steps >= opts.max_steps {
                return Err(crate::integrate::OdeError::TooManySteps(opts.max_steps).into());
            }
            let remaining = t_out - t;
            let hit = h >= remaining;
            let h_try = if hit { remaining } else { h };
            stepper.step(&l, &y, h_try, &mut y_new, &mut err);

            let mean = moment(&y_new, 1).abs();
            let moment_err = err.iter().enumerate().map(|(n, e)| n as f64 * e).sum::<f64>().abs()
                / (opts.atol + opts.moment_rtol * mean);
            let component_err = y_new
                .iter()
                .zip(&err)
                .map(|(v, e)| e.abs() / (opts.atol + opts.rtol * v.abs()))
                .fold(0.0, f64::max);
            let e = moment_err.max(component_err);
            if !e.is_finite() {
                h = h_try * 0.1;
                continue;
            }
            let fac = (0.9 * e.powf(-0.25)).clamp(0.2, 5.0);
            if e > 1.0 {
                h = h_try * fac;
                continue;
            }
            if bosonic && upper_half_mass(&y_new) > opts.tail_tol {
                if 2 * len - 1 > opts.max_cutoff {
                    run.status = TruncationStatus::RunawayTruncation { t, cutoff: len - 1 };
                    run.largest_cutoff = run.largest_cutoff.max(len - 1);
                    return Ok(run);
                }
                len *= 2;
                y.resize(len, 0.0);
                y_new.resize(len, 0.0);
                err.resize(len, 0.0);
                l = generator(rates, statistics, nl, len);
                stepper.resize(len);
                continue;
            }
            run.steps += 1;
            std::mem::swap(&mut y, &mut y_new);
            t = if hit { t_out } else { t + h_try };
            // keep the free-running step size when the clamp shortened this one
            if !hit || fac < 1.0 {
                h = h_try * fac;
            }
        }
        run.largest_cutoff = run.largest_cutoff.max(len - 1);
        run.snapshots.push(snapshot(&y, p0, t_out));
    }
    Ok(run)
}

fn snapshot(y: &[f64], p0: &ModeDistribution, t: f64) -> ModeDistribution {
    ModeDistribution {
        probs: y.iter().map(|v| v.max(0.0)).collect(),
        mode: p0.mode.clone(),
        time: t,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::birthdeath::detailed_balance_distribution;
    use crate::kinetics::closed_form_mean;
    use crate::mode::Mode;

    fn grid(t_max: f64, n: usize) -> Vec<f64> {
        (1..=n).map(|i| t_max * i as f64 / n as f64).collect()
    }

    #[test]
    fn stable_bose_moment_matches_closed_form() {
        let r = RateSet::from_rates(1.0, 0.5, Statistics::Bose);
        let p0 = ModeDistribution::number_state(Mode::bose(1.0, 0).unwrap(), 4).unwrap();
        let run = evolve_distribution(&r, NonlinearParams::LINEAR, &p0, &grid(10.0, 20), DistributionOptions::default()).unwrap();
        assert!(run.status.is_complete());
        for s in &run.snapshots {
            let exact = closed_form_mean(&r, Statistics::Bose, 4.0, s.time);
            assert!((s.mean() - exact).abs() < 1e-6, "t={} {} vs {exact}", s.time, s.mean());
            assert!((s.total() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn fermi_moment_matches_closed_form() {
        let r = RateSet::from_rates(0.3, 1.2, Statistics::Fermi);
        let p0 = ModeDistribution::number_state(Mode::fermi(1.0, 0).unwrap(), 0).unwrap();
        let run = evolve_distribution(&r, NonlinearParams::LINEAR, &p0, &grid(5.0, 10), DistributionOptions::default()).unwrap();
        for s in &run.snapshots {
            assert_eq!(s.probs.len(), 2);
            let exact = closed_form_mean(&r, Statistics::Fermi, 0.0, s.time);
            assert!((s.mean() - exact).abs() < 1e-9);
        }
    }

    #[test]
    fn pure_decay_empties_the_mode() {
        let r = RateSet::from_rates(1.0, 0.0, Statistics::Bose);
        let p0 = ModeDistribution::number_state(Mode::bose(1.0, 0).unwrap(), 10).unwrap();
        let run = evolve_distribution(&r, NonlinearParams::LINEAR, &p0, &[40.0], DistributionOptions::default()).unwrap();
        assert!((run.snapshots[0].probs[0] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn relaxes_to_geometric_law() {
        let r = RateSet::from_rates(1.0, 0.5, Statistics::Bose);
        let p0 = ModeDistribution::number_state(Mode::bose(1.0, 0).unwrap(), 0).unwrap();
        let run = evolve_distribution(&r, NonlinearParams::LINEAR, &p0, &[60.0], DistributionOptions::default()).unwrap();
        let s = &run.snapshots[0];
        for (n, p) in s.probs.iter().enumerate().take(30) {
            let geometric = 0.5 * 0.5f64.powi(n as i32);
            assert!((p - geometric).abs() < 1e-9, "n={n}");
        }
        assert!((s.mean() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn nonlinear_chain_relaxes_to_detailed_balance() {
        let r = RateSet::from_rates(1.0, 2.0, Statistics::Bose);
        let nl = NonlinearParams::new(0.1).unwrap();
        let p0 = ModeDistribution::number_state(Mode::bose(1.0, 0).unwrap(), 0).unwrap();
        let run = evolve_distribution(&r, nl, &p0, &[80.0], DistributionOptions::default()).unwrap();
        let s = &run.snapshots[0];
        let pi = detailed_balance_distribution(&r, Statistics::Bose, nl, s.cutoff());
        let mean_pi: f64 = pi.iter().enumerate().map(|(n, p)| n as f64 * p).sum();
        assert!((s.mean() - mean_pi).abs() < 1e-8);
    }

    #[test]
    fn window_grows_for_superradiant_mode() {
        let r = RateSet::from_rates(1.0, 2.0, Statistics::Bose);
        let p0 = ModeDistribution::number_state(Mode::bose(0.5, 1).unwrap(), 0).unwrap();
        let run = evolve_distribution(&r, NonlinearParams::LINEAR, &p0, &grid(4.0, 4), DistributionOptions::default()).unwrap();
        assert!(run.largest_cutoff > 500);
        for s in &run.snapshots {
            let exact = closed_form_mean(&r, Statistics::Bose, 0.0, s.time);
            assert!((s.mean() - exact).abs() < 1e-6, "t={} {} vs {exact}", s.time, s.mean());
        }
    }

    #[test]
    fn ceiling_reports_runaway_with_partial_output() {
        let r = RateSet::from_rates(0.0, 1.0, Statistics::Bose);
        let p0 = ModeDistribution::number_state(Mode::bose(0.5, 1).unwrap(), 0).unwrap();
        let opts = DistributionOptions {
            max_cutoff: 1 << 10,
            ..DistributionOptions::default()
        };
        let run = evolve_distribution(&r, NonlinearParams::LINEAR, &p0, &grid(20.0, 20), opts).unwrap();
        assert!(matches!(run.status, TruncationStatus::RunawayTruncation { .. }));
        assert!(!run.snapshots.is_empty() && run.snapshots.len() < 20);
    }
}
