//! Event-driven sampling of the birth-death chain.
//!
//! Trajectories run in fixed-size batches. Batch `b` draws from ChaCha20
//! seeded with `seed` on stream `b`, and batch moments are merged in batch
//! order, so results do not depend on the number of worker threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::Exp1;
use rayon::prelude::*;

use super::{down_rate, BirthDeathError, NonlinearParams};
use crate::integrate::check_grid;
use crate::mode::Statistics;
use crate::rates::RateSet;

/// Recorded in output metadata.
pub const RNG_ID: &str = "chacha20 (rand_chacha 0.9, seed_from_u64, stream = batch index)";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GillespieOptions {
    pub batch_size: usize,
    /// Number of trajectories whose checkpoint states are kept.
    pub sample_paths: usize,
    /// A trajectory reaching this many quanta aborts the run.
    pub max_population: u64,
}

impl Default for GillespieOptions {
    fn default() -> Self {
        Self {
            batch_size: 256,
            sample_paths: 0,
            max_population: 1 << 40,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GillespieStats {
    pub times: Vec<f64>,
    pub mean: Vec<f64>,
    /// Unbiased sample variance.
    pub variance: Vec<f64>,
    pub n_traj: usize,
    /// States at the checkpoints for the first trajectories.
    pub sample_paths: Vec<Vec<u64>>,
    pub seed: u64,
}

impl GillespieStats {
    /// Standard error of the mean at each checkpoint.
    pub fn std_error(&self) -> Vec<f64> {
        self.variance.iter().map(|v| (v / self.n_traj as f64).sqrt()).collect()
    }
}

#[derive(Debug, Clone)]
struct Moments {
    count: f64,
    mean: Vec<f64>,
    m2: Vec<f64>,
}

impl Moments {
    fn new(len: usize) -> Self {
        Self {
            count: 0.0,
            mean: vec![0.0; len],
            m2: vec![0.0; len],
        }
    }

    fn push(&mut self, x: &[u64]) {
        self.count += 1.0;
        for (i, &v) in x.iter().enumerate() {
            let v = v as f64;
            let delta = v - self.mean[i];
            self.mean[i] += delta / self.count;
            self.m2[i] += delta * (v - self.mean[i]);
        }
    }

    fn merge(&mut self, other: &Self) {
        if other.count == 0.0 {
            return;
        }
        let total = self.count + other.count;
        for i in 0..self.mean.len() {
            let delta = other.mean[i] - self.mean[i];
            self.mean[i] += delta * other.count / total;
            self.m2[i] += other.m2[i] + delta * delta * self.count * other.count / total;
        }
        self.count = total;
    }
}

fn up_propensity(rates: &RateSet, statistics: Statistics, n: u64) -> f64 {
    match statistics {
        Statistics::Bose => rates.gamma_up * (1.0 + n as f64),
        Statistics::Fermi if n == 0 => rates.gamma_up,
        Statistics::Fermi => 0.0,
    }
}

fn trajectory(
    rates: &RateSet,
    statistics: Statistics,
    nl: NonlinearParams,
    n0: u64,
    checkpoints: &[f64],
    max_population: u64,
    rng: &mut ChaCha20Rng,
    out: &mut [u64],
) -> Result<(), BirthDeathError> {
    let mut t = 0.0;
    let mut n = n0;
    let mut next = 0;
    while next < checkpoints.len() {
        let up = up_propensity(rates, statistics, n);
        let down = down_rate(rates, nl, n as usize);
        let total = up + down;
        let t_event = if total > 0.0 {
            t + rng.sample::<f64, _>(Exp1) / total
        } else {
            f64::INFINITY
        };
        while next < checkpoints.len() && checkpoints[next] < t_event {
            out[next] = n;
            next += 1;
        }
        if next == checkpoints.len() {
            break;
        }
        t = t_event;
        if rng.random::<f64>() * total < up {
            n += 1;
            if n >= max_population {
                return Err(BirthDeathError::PopulationCeiling { ceiling: max_population });
            }
        } else {
            n -= 1;
        }
    }
    Ok(())
}

/// Runs `n_traj` trajectories from `n0` quanta and reports ensemble moments
/// at each checkpoint time.
#[allow(clippy::too_many_arguments)]
pub fn gillespie(
    rates: &RateSet,
    statistics: Statistics,
    nl: NonlinearParams,
    n0: u64,
    checkpoints: &[f64],
    n_traj: usize,
    seed: u64,
    opts: GillespieOptions,
) -> Result<GillespieStats, BirthDeathError> {
    check_grid(0.0, checkpoints)?;
    if n_traj == 0 {
        return Err(BirthDeathError::NoTrajectories);
    }
    if statistics == Statistics::Fermi && n0 > 1 {
        return Err(BirthDeathError::FermiOccupation(n0));
    }
    let batch = opts.batch_size.max(1);
    let n_batches = n_traj.div_ceil(batch);
    let len = checkpoints.len();

    let batches: Vec<Result<(Moments, Vec<Vec<u64>>), BirthDeathError>> = (0..n_batches)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            rng.set_stream(b as u64);
            let first = b * batch;
            let count = batch.min(n_traj - first);
            let mut moments = Moments::new(len);
            let mut paths = Vec::new();
            let mut states = vec![0u64; len];
            for i in 0..count {
                trajectory(rates, statistics, nl, n0, checkpoints, opts.max_population, &mut rng, &mut states)?;
                moments.push(&states);
                if first + i < opts.sample_paths {
                    paths.push(states.clone());
                }
            }
            Ok((moments, paths))
        })
        .collect();

    let mut total = Moments::new(len);
    let mut sample_paths = Vec::new();
    for result in batches {
        let (m, paths) = result?;
        total.merge(&m);
        sample_paths.extend(paths);
    }
    let denom = (total.count - 1.0).max(1.0);
    Ok(GillespieStats {
        times: checkpoints.to_vec(),
        mean: total.mean,
        variance: total.m2.iter().map(|m2| m2 / denom).collect(),
        n_traj,
        sample_paths,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frozen_chain_stays_put() {
        let r = RateSet::from_rates(0.0, 0.0, Statistics::Bose);
        let s = gillespie(&r, Statistics::Bose, NonlinearParams::LINEAR, 7, &[1.0, 2.0], 50, 1, GillespieOptions::default()).unwrap();
        assert_eq!(s.mean, vec![7.0, 7.0]);
        assert_eq!(s.variance, vec![0.0, 0.0]);
    }

    #[test]
    fn fermi_states_are_binary() {
        let r = RateSet::from_rates(0.7, 1.3, Statistics::Fermi);
        let opts = GillespieOptions {
            sample_paths: 300,
            ..GillespieOptions::default()
        };
        let checkpoints: Vec<f64> = (1..=20).map(|i| i as f64 * 0.25).collect();
        let s = gillespie(&r, Statistics::Fermi, NonlinearParams::LINEAR, 0, &checkpoints, 300, 9, opts).unwrap();
        assert_eq!(s.sample_paths.len(), 300);
        assert!(s.sample_paths.iter().flatten().all(|&n| n <= 1));
    }

    #[test]
    fn same_seed_same_statistics() {
        let r = RateSet::from_rates(1.0, 0.6, Statistics::Bose);
        let cp = [0.5, 1.0, 3.0];
        let a = gillespie(&r, Statistics::Bose, NonlinearParams::LINEAR, 2, &cp, 1000, 42, GillespieOptions::default()).unwrap();
        let b = gillespie(&r, Statistics::Bose, NonlinearParams::LINEAR, 2, &cp, 1000, 42, GillespieOptions::default()).unwrap();
        assert_eq!(a, b);
        let c = gillespie(&r, Statistics::Bose, NonlinearParams::LINEAR, 2, &cp, 1000, 43, GillespieOptions::default()).unwrap();
        assert_ne!(a.mean, c.mean);
    }

    #[test]
    fn independent_of_thread_count() {
        let r = RateSet::from_rates(1.0, 0.6, Statistics::Bose);
        let cp = [0.5, 2.0];
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| gillespie(&r, Statistics::Bose, NonlinearParams::LINEAR, 0, &cp, 2000, 5, GillespieOptions::default()).unwrap())
        };
        assert_eq!(run(1), run(4));
    }

    #[test]
    fn merge_matches_single_pass() {
        let data: Vec<Vec<u64>> = (0..37).map(|i| vec![i * i % 11, i % 3]).collect();
        let mut whole = Moments::new(2);
        data.iter().for_each(|x| whole.push(x));
        let mut left = Moments::new(2);
        let mut right = Moments::new(2);
        data[..15].iter().for_each(|x| left.push(x));
        data[15..].iter().for_each(|x| right.push(x));
        left.merge(&right);
        for i in 0..2 {
            assert!((left.mean[i] - whole.mean[i]).abs() < 1e-12);
            assert!((left.m2[i] - whole.m2[i]).abs() < 1e-9);
        }
    }

    #[test]
    fn runaway_hits_population_ceiling() {
        let r = RateSet::from_rates(0.0, 1.0, Statistics::Bose);
        let opts = GillespieOptions {
            max_population: 1000,
            ..GillespieOptions::default()
        };
        let err = gillespie(&r, Statistics::Bose, NonlinearParams::LINEAR, 0, &[50.0], 4, 3, opts).unwrap_err();
        assert_eq!(err, BirthDeathError::PopulationCeiling { ceiling: 1000 });
    }
}
