//! Executes a [`Scenario`] and writes its CSV outputs.
//!
//! Every file starts with `#` metadata lines, including the canonical
//! scenario text, so the header alone reproduces the run. The output
//! directory is not part of that text; it does not affect any value.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::bath::{kms_check, log_grid, SpectrumError};
use crate::beta::InverseTemperature;
use crate::birthdeath::{
    self, evolve_distribution, gillespie, BirthDeathError, DistributionOptions, GillespieOptions, ModeDistribution,
    NonlinearParams, TruncationStatus, RNG_ID,
};
use crate::classical::{comoving_frequency, energy_split, shear_classify, ShearConfig, ShearError};
use crate::kinetics::{self, closed_form_mean, KineticsError, KineticsOptions, RunStatus};
use crate::mode::{Mode, Statistics};
use crate::rates::{self, modified_kms_check, BathSpec};
use crate::scenario::{correlation_path, print_scenario, OutputConfig, RunKind, Scenario, ScenarioError};
use crate::thermo::{self, Quantum, ThermoError};

pub const TOOL_VERSION: &str = concat!("rotbath ", env!("CARGO_PKG_VERSION"));

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("thread pool: {0}")]
    ThreadPool(String),
    #[error("mode (omega = {omega}, m = {m}): {source}")]
    Kinetics { omega: f64, m: i64, source: KineticsError },
    #[error("mode (omega = {omega}, m = {m}): {source}")]
    BirthDeath { omega: f64, m: i64, source: BirthDeathError },
    #[error(transparent)]
    Thermo(#[from] ThermoError),
    #[error(transparent)]
    Shear(#[from] ShearError),
    #[error(transparent)]
    Spectrum(#[from] SpectrumError),
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Overrides `output.dir`.
    pub out_dir: Option<PathBuf>,
    /// Overrides `run.seed`.
    pub seed: Option<u64>,
    /// Worker threads; `None` uses the rayon default.
    pub threads: Option<usize>,
    /// Directory that relative paths in the scenario are resolved against.
    pub base_dir: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunOutcome {
    Complete,
    /// Some mode hit a population or truncation ceiling; outputs are partial.
    Runaway,
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub outcome: RunOutcome,
    pub files: Vec<PathBuf>,
}

/// Scenario with CLI overrides applied and the output section reset, which is
/// what headers embed and hash.
pub fn effective_scenario(s: &Scenario, seed: Option<u64>) -> Scenario {
    let mut s = s.clone();
    if seed.is_some() {
        s.run.seed = seed;
    }
    s.output = OutputConfig::default();
    s
}

pub fn run_scenario(s: &Scenario, opts: &RunOptions) -> Result<RunReport, RunError> {
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = opts.threads {
        pool = pool.num_threads(n);
    }
    let pool = pool.build().map_err(|e| RunError::ThreadPool(e.to_string()))?;
    let effective = effective_scenario(s, opts.seed);
    let out_dir = opts
        .out_dir
        .clone()
        .unwrap_or_else(|| opts.base_dir.join(&s.output.dir));
    let header = Header::new(&effective, &opts.base_dir)?;
    let (tables, outcome) = pool.install(|| compute(&effective, &opts.base_dir))?;

    fs::create_dir_all(&out_dir).map_err(|source| RunError::Io {
        path: out_dir.clone(),
        source,
    })?;
    let status = match outcome {
        RunOutcome::Complete => "complete",
        RunOutcome::Runaway => "partial (runaway)",
    };
    let mut files = Vec::with_capacity(tables.len());
    for table in tables {
        let path = out_dir.join(table.name);
        let mut text = header.render(status);
        text.push_str(&table.body);
        fs::write(&path, text).map_err(|source| RunError::Io {
            path: path.clone(),
            source,
        })?;
        files.push(path);
    }
    Ok(RunReport { outcome, files })
}

struct Header {
    lines: String,
}

impl Header {
    fn new(s: &Scenario, base_dir: &Path) -> Result<Self, RunError> {
        let canonical = print_scenario(s);
        let mut lines = String::new();
        let _ = writeln!(lines, "# tool: {TOOL_VERSION}");
        let _ = writeln!(lines, "# scenario_sha256: {}", hex::encode(Sha256::digest(canonical.as_bytes())));
        let _ = writeln!(lines, "# run: {}", s.run.kind.as_str());
        if let Some(b) = &s.bath {
            let _ = writeln!(lines, "# beta: {}", b.beta);
            let _ = writeln!(lines, "# omega_rot: {}", num(b.omega_rot));
            let model = match b.family {
                crate::scenario::Family::Ohmic => format!(
                    "ohmic(amplitude = {}, exponent = {}, cutoff = {})",
                    b.amplitude.unwrap_or_default(),
                    b.exponent.unwrap_or_default(),
                    b.cutoff.unwrap_or_default()
                ),
                crate::scenario::Family::Flat => format!("flat(level = {})", b.level.unwrap_or_default()),
                crate::scenario::Family::Hawking => format!("hawking(level = {})", b.level.unwrap_or_default()),
                crate::scenario::Family::Correlation => "correlation".to_string(),
            };
            let _ = writeln!(lines, "# model: {model}");
            if let Some(path) = correlation_path(b, base_dir) {
                let data = fs::read(&path).map_err(|source| RunError::Io {
                    path: path.clone(),
                    source,
                })?;
                let _ = writeln!(lines, "# correlation_sha256: {}", hex::encode(Sha256::digest(&data)));
            }
        }
        match s.run.seed {
            Some(seed) => {
                let _ = writeln!(lines, "# seed: {seed}");
            }
            None => lines.push_str("# seed: none\n"),
        }
        let _ = writeln!(lines, "# rng: {RNG_ID}");
        lines.push_str("# units: hbar = k_B = 1\n");
        for line in canonical.lines() {
            let _ = writeln!(lines, "# scenario: {line}");
        }
        let lines = lines.replace("# scenario: \n", "# scenario:\n");
        Ok(Self { lines })
    }

    fn render(&self, status: &str) -> String {
        format!("{}# status: {status}\n", self.lines)
    }
}

struct Table {
    name: &'static str,
    body: String,
}

impl Table {
    fn new(name: &'static str, columns: &str) -> Self {
        Self {
            name,
            body: format!("{columns}\n"),
        }
    }
}

/// 17 significant digits; `-0` prints as `0`.
fn num(v: f64) -> String {
    let v = if v == 0.0 { 0.0 } else { v };
    format!("{v:.16e}")
}

const MODE_COLUMNS: &str = "omega,m,alpha,statistics";

fn mode_cells(mode: &Mode) -> String {
    format!("{},{},{},{}", num(mode.omega()), mode.m(), csv_text(mode.alpha()), mode.statistics())
}

fn csv_text(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn require_bath(s: &Scenario, base_dir: &Path) -> Result<BathSpec, RunError> {
    Ok(s.bath(base_dir)?.expect("validated: run needs a bath"))
}

fn nonlinear(s: &Scenario) -> NonlinearParams {
    NonlinearParams::new(s.run.kappa).expect("validated")
}

fn bd_err(mode: &Mode) -> impl Fn(BirthDeathError) -> RunError + '_ {
    move |source| RunError::BirthDeath {
        omega: mode.omega(),
        m: mode.m(),
        source,
    }
}

fn compute(s: &Scenario, base_dir: &Path) -> Result<(Vec<Table>, RunOutcome), RunError> {
    match s.run.kind {
        RunKind::Rates => Ok((vec![rates_table(s, base_dir)?], RunOutcome::Complete)),
        RunKind::Spectrum => Ok((vec![spectrum_table(s, base_dir)?], RunOutcome::Complete)),
        RunKind::Kinetics => kinetics_tables(s, base_dir),
        RunKind::Birthdeath => birthdeath_tables(s, base_dir),
        RunKind::Gillespie => gillespie_tables(s, base_dir),
        RunKind::Thermo => thermo_tables(s, base_dir),
        RunKind::Shear => Ok((vec![shear_table(s)?], RunOutcome::Complete)),
        RunKind::BhLedger => Ok((vec![bh_table(s, base_dir)?], RunOutcome::Complete)),
    }
}

fn rates_table(s: &Scenario, base_dir: &Path) -> Result<Table, RunError> {
    let bath = require_bath(s, base_dir)?;
    let modes = s.modes();
    let rows: Vec<String> = modes
        .par_iter()
        .map(|mode| {
            let r = rates::rates(&bath, mode);
            let asymptotic = kinetics::asymptotic_population(&bath, mode).unwrap_or(f64::NAN);
            format!(
                "{},{},{},{},{},{},{}\n",
                mode_cells(mode),
                num(mode.comoving_energy(bath.omega_rot())),
                num(r.gamma_down),
                num(r.gamma_up),
                r.beta_loc.map_or_else(String::new, num),
                r.classification.as_str(),
                num(asymptotic),
            )
        })
        .collect();
    let mut t = Table::new(
        "rates.csv",
        &format!("{MODE_COLUMNS},comoving_energy,gamma_down,gamma_up,beta_loc,class,asymptotic_nbar"),
    );
    t.body.extend(rows);
    Ok(t)
}

fn spectrum_table(s: &Scenario, base_dir: &Path) -> Result<Table, RunError> {
    let bath = require_bath(s, base_dir)?;
    let mut t = Table::new("spectrum.csv", &format!("{MODE_COLUMNS},rate,class"));
    for line in kinetics::emission_spectrum(&bath, &s.modes()) {
        let _ = writeln!(
            t.body,
            "{},{},{}",
            mode_cells(&line.mode),
            num(line.rate),
            line.classification.as_str()
        );
    }
    Ok(t)
}

fn kinetics_opts(s: &Scenario) -> KineticsOptions {
    KineticsOptions {
        population_ceiling: s.run.population_ceiling,
        ..KineticsOptions::default()
    }
}

fn status_cells(status: RunStatus) -> String {
    match status {
        RunStatus::Complete => "complete,".to_string(),
        RunStatus::ExponentialRunaway { t } => format!("exponential_runaway,{}", num(t)),
    }
}

fn kinetics_tables(s: &Scenario, base_dir: &Path) -> Result<(Vec<Table>, RunOutcome), RunError> {
    let bath = require_bath(s, base_dir)?;
    let grid = s.time_grid();
    let opts = kinetics_opts(s);
    let runs = s
        .modes()
        .par_iter()
        .map(|mode| {
            kinetics::evolve_mean(mode, rates::rates(&bath, mode), s.run.n0, &grid, opts).map_err(|source| {
                RunError::Kinetics {
                    omega: mode.omega(),
                    m: mode.m(),
                    source,
                }
            })
        })
        .collect::<Result<Vec<_>, _>>()?;

    let mut data = Table::new("kinetics.csv", &format!("{MODE_COLUMNS},time,nbar"));
    let mut status = Table::new("status.csv", &format!("{MODE_COLUMNS},gamma_down,gamma_up,class,status,t_runaway"));
    let mut outcome = RunOutcome::Complete;
    for run in &runs {
        let cells = mode_cells(&run.mode);
        for (t, n) in run.times.iter().zip(&run.nbar) {
            let _ = writeln!(data.body, "{cells},{},{}", num(*t), num(*n));
        }
        if run.status != RunStatus::Complete {
            outcome = RunOutcome::Runaway;
        }
        let _ = writeln!(
            status.body,
            "{cells},{},{},{},{}",
            num(run.rates.gamma_down),
            num(run.rates.gamma_up),
            run.rates.classification.as_str(),
            status_cells(run.status)
        );
    }
    Ok((vec![data, status], outcome))
}

fn distribution_opts(s: &Scenario) -> DistributionOptions {
    DistributionOptions {
        tail_tol: s.run.tail_tol,
        max_cutoff: s.run.max_cutoff,
        ..DistributionOptions::default()
    }
}

fn initial_state(s: &Scenario, mode: &Mode) -> Result<ModeDistribution, RunError> {
    ModeDistribution::number_state(mode.clone(), s.run.n0 as usize).map_err(bd_err(mode))
}

fn truncation_cells(status: TruncationStatus) -> String {
    match status {
        TruncationStatus::Complete => "complete,,".to_string(),
        TruncationStatus::RunawayTruncation { t, cutoff } => format!("runaway_truncation,{},{cutoff}", num(t)),
    }
}

fn birthdeath_tables(s: &Scenario, base_dir: &Path) -> Result<(Vec<Table>, RunOutcome), RunError> {
    let bath = require_bath(s, base_dir)?;
    let grid = s.time_grid();
    let nl = nonlinear(s);
    let opts = distribution_opts(s);
    let kopts = kinetics_opts(s);
    let modes = s.modes();
    let runs = modes
        .par_iter()
        .map(|mode| {
            let r = rates::rates(&bath, mode);
            let p0 = initial_state(s, mode)?;
            let run = evolve_distribution(&r, nl, &p0, &grid, opts).map_err(bd_err(mode))?;
            // linear: exact first moment; nonlinear boson: mean-field
            let reference: Vec<f64> = if nl.kappa() == 0.0 {
                grid.iter().map(|&t| closed_form_mean(&r, mode.statistics(), s.run.n0, t)).collect()
            } else if mode.statistics() == Statistics::Bose {
                let mf = birthdeath::meanfield_evolve(&r, nl, s.run.n0, &grid, kopts).map_err(bd_err(mode))?;
                mf.n
            } else {
                Vec::new()
            };
            Ok((mode, r, run, reference))
        })
        .collect::<Result<Vec<_>, RunError>>()?;

    let reference_name = if nl.kappa() == 0.0 { "kinetic_mean" } else { "meanfield_mean" };
    let mut moments = Table::new(
        "moments.csv",
        &format!("{MODE_COLUMNS},time,mean,variance,total,cutoff,{reference_name}"),
    );
    let mut dist = Table::new("distribution.csv", &format!("{MODE_COLUMNS},time,n,p"));
    let mut status = Table::new(
        "status.csv",
        &format!("{MODE_COLUMNS},gamma_down,gamma_up,class,status,t_runaway,cutoff,largest_cutoff,steps"),
    );
    let mut outcome = RunOutcome::Complete;
    for (mode, r, run, reference) in &runs {
        let cells = mode_cells(mode);
        for (i, snap) in run.snapshots.iter().enumerate() {
            let reference = reference.get(i).map_or_else(String::new, |v| num(*v));
            let _ = writeln!(
                moments.body,
                "{cells},{},{},{},{},{},{reference}",
                num(snap.time),
                num(snap.mean()),
                num(snap.variance()),
                num(snap.total()),
                snap.cutoff(),
            );
            let last = snap.probs.iter().rposition(|&p| p > 0.0).unwrap_or(0);
            for (n, p) in snap.probs[..=last].iter().enumerate() {
                let _ = writeln!(dist.body, "{cells},{},{n},{}", num(snap.time), num(*p));
            }
        }
        if !run.status.is_complete() {
            outcome = RunOutcome::Runaway;
        }
        let _ = writeln!(
            status.body,
            "{cells},{},{},{},{},{},{}",
            num(r.gamma_down),
            num(r.gamma_up),
            r.classification.as_str(),
            truncation_cells(run.status),
            run.largest_cutoff,
            run.steps
        );
    }
    Ok((vec![moments, dist, status], outcome))
}

fn gillespie_tables(s: &Scenario, base_dir: &Path) -> Result<(Vec<Table>, RunOutcome), RunError> {
    let bath = require_bath(s, base_dir)?;
    let grid = s.time_grid();
    let nl = nonlinear(s);
    let seed = s.run.seed.expect("validated");
    let opts = GillespieOptions {
        sample_paths: s.run.sample_paths,
        ..GillespieOptions::default()
    };
    let modes = s.modes();
    let mut traj = Table::new(
        "trajectory.csv",
        &format!("{MODE_COLUMNS},seed,n_traj,time,mean,variance,std_error"),
    );
    let mut paths = Table::new("paths.csv", &format!("{MODE_COLUMNS},path,time,n"));
    // modes run one after another; each ensemble is parallel over batches
    for (i, mode) in modes.iter().enumerate() {
        let r = rates::rates(&bath, mode);
        let mode_seed = seed.wrapping_add(i as u64);
        let stats = gillespie(&r, mode.statistics(), nl, s.run.n0 as u64, &grid, s.run.n_traj, mode_seed, opts)
            .map_err(bd_err(mode))?;
        let cells = mode_cells(mode);
        let se = stats.std_error();
        for k in 0..stats.times.len() {
            let _ = writeln!(
                traj.body,
                "{cells},{mode_seed},{},{},{},{},{}",
                stats.n_traj,
                num(stats.times[k]),
                num(stats.mean[k]),
                num(stats.variance[k]),
                num(se[k])
            );
        }
        for (p, path) in stats.sample_paths.iter().enumerate() {
            for (t, n) in stats.times.iter().zip(path) {
                let _ = writeln!(paths.body, "{cells},{p},{},{n}", num(*t));
            }
        }
    }
    let mut tables = vec![traj];
    if s.run.sample_paths > 0 {
        tables.push(paths);
    }
    Ok((tables, RunOutcome::Complete))
}

fn thermo_tables(s: &Scenario, base_dir: &Path) -> Result<(Vec<Table>, RunOutcome), RunError> {
    let bath = require_bath(s, base_dir)?;
    let modes = s.modes();
    let initial = modes.iter().map(|m| initial_state(s, m)).collect::<Result<Vec<_>, _>>()?;
    let ledger = thermo::build_ledger(&bath, &modes, nonlinear(s), &initial, &s.time_grid(), distribution_opts(s))?;
    let mut t = Table::new(
        "ledger.csv",
        "time,S,sigma,J,U,Lz,res1,res2,dS_dt,dU_dt,power,regularized,truncated_reference",
    );
    for row in &ledger.rows {
        let _ = writeln!(
            t.body,
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            num(row.time),
            num(row.entropy),
            num(row.sigma),
            num(row.heat_current),
            num(row.energy),
            num(row.lz),
            num(row.residual_first_law),
            num(row.residual_second_law),
            num(row.entropy_rate),
            num(row.energy_rate),
            num(row.power),
            row.regularized,
            row.truncated_reference
        );
    }
    let outcome = if ledger.status.is_complete() {
        RunOutcome::Complete
    } else {
        RunOutcome::Runaway
    };
    Ok((vec![t], outcome))
}

fn shear_table(s: &Scenario) -> Result<Table, RunError> {
    let mut t = Table::new(
        "shear.csv",
        "upper_speed,phase_velocity,wavenumber,omega,class,wave_fraction,dissipated_fraction,comoving_frequency",
    );
    for e in &s.shear {
        let cfg = ShearConfig::new(e.upper_speed, e.phase_velocity, e.wavenumber)?;
        let (wave, dissipated) = energy_split(&cfg);
        let _ = writeln!(
            t.body,
            "{},{},{},{},{},{},{},{}",
            num(e.upper_speed),
            num(e.phase_velocity),
            num(e.wavenumber),
            num(e.omega),
            shear_classify(&cfg).as_str(),
            num(wave),
            num(dissipated),
            num(comoving_frequency(e.omega, e.upper_speed, e.phase_velocity)?)
        );
    }
    Ok(t)
}

fn bh_table(s: &Scenario, base_dir: &Path) -> Result<Table, RunError> {
    let bath = require_bath(s, base_dir)?;
    let t_h = 1.0 / bath.beta().value();
    let omega_h = bath.omega_rot();
    let quanta: Vec<Quantum> = s
        .quanta
        .iter()
        .map(|q| Quantum {
            omega: q.omega,
            m: q.m,
            count: q.count,
        })
        .collect();
    let mut t = Table::new("bh_ledger.csv", "entry,omega,m,count,dM,dL,dA");
    for (i, q) in quanta.iter().enumerate() {
        let e = thermo::bh_ledger(std::slice::from_ref(q), omega_h, t_h)?;
        let _ = writeln!(
            t.body,
            "{i},{},{},{},{},{},{}",
            num(q.omega),
            q.m,
            num(q.count),
            num(e.d_mass),
            num(e.d_angular_momentum),
            num(e.d_area)
        );
    }
    let total = thermo::bh_ledger(&quanta, omega_h, t_h)?;
    let _ = writeln!(
        t.body,
        "total,,,,{},{},{}",
        num(total.d_mass),
        num(total.d_angular_momentum),
        num(total.d_area)
    );
    Ok(t)
}

/// KMS residuals of the bath spectrum and of every mode's rotating-frame
/// relation, as CSV text.
pub fn kms_report(s: &Scenario, base_dir: &Path) -> Result<String, RunError> {
    let bath = s
        .bath(base_dir)?
        .ok_or_else(|| ScenarioError::Semantic {
            key: "bath".into(),
            message: "kms report needs a [bath] section".into(),
        })?;
    let beta = match bath.beta() {
        InverseTemperature::Finite(b) => b,
        InverseTemperature::Infinite => {
            return Err(ScenarioError::Semantic {
                key: "bath.beta".into(),
                message: "kms residuals need a finite temperature".into(),
            }
            .into())
        }
    };
    let mut out = String::new();
    let _ = writeln!(out, "# tool: {TOOL_VERSION}");
    let _ = writeln!(out, "# model: {}", bath.spectrum().family().name());
    let _ = writeln!(out, "# beta: {}", num(beta));
    let _ = writeln!(out, "# omega_rot: {}", num(bath.omega_rot()));
    let _ = writeln!(out, "# grid: 100 log-spaced points on [1e-3/beta, x_max]; residual relative to the emission side");
    out.push_str("check,omega,m,alpha,statistics,x_max,residual\n");
    let modes = s.modes();
    for factor in [1.0, 10.0, 30.0] {
        let x_max = factor / beta;
        let grid = log_grid(1e-3 / beta, x_max, 100);
        let _ = writeln!(out, "bath,,,,,{},{}", num(x_max), num(kms_check(bath.spectrum(), beta, &grid)?));
        for mode in &modes {
            let _ = writeln!(
                out,
                "mode,{},{},{}",
                mode_cells(mode),
                num(x_max),
                num(modified_kms_check(&bath, mode, &grid)?)
            );
        }
    }
    Ok(out)
}
