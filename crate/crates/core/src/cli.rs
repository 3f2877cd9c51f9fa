//! Command-line front end. [`main`] returns the process exit code:
//! 0 success, 1 verification failure, 2 usage or configuration error,
//! 3 blow-up.

use crate::config::{reference_page, ScenarioConfig};
use crate::csv::write_diagnostics_csv;
use crate::error::{Error, Result};
use crate::fd::cross_solver_study;
use crate::field::SpectralField;
use crate::integrator::{integrate, run_simulation, RunFailure, StepperConfig};
use crate::mms::{assess, convergence_study, ManufacturedCase, StudyPlan};
use crate::operators::ModelParams;
use crate::presets::{Preset, Scenario};
use crate::report::VerificationReport;
use crate::snapshot::{read_snapshot, write_snapshot};
use crate::theorems::{
    check_inequality_battery, check_theorem1, check_theorem2, perturbation_scaling, Theorem1Tol,
    Theorem2Tol,
};
use clap::{Args, Parser, Subcommand};
use std::ffi::OsString;
use std::path::{Path, PathBuf};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFICATION: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_BLOWUP: i32 = 3;

/// Environment variable holding the worker thread count.
pub const THREADS_ENV: &str = "MGSIM_THREADS";

#[derive(Debug, Parser)]
#[command(name = "mgsim", version, about = "Spectral solver and estimate checker for the reduced morning-glory model")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate a scenario and write diagnostics.
    Run(RunArgs),
    /// Run the inequality battery and the decay-estimate checks.
    Verify(VerifyArgs),
    /// Manufactured-solution convergence study.
    Mms(MmsArgs),
    /// Compare with the finite-difference solver.
    Oracle(OracleArgs),
    /// Dump the coefficients of a snapshot.
    Spectrum(SpectrumArgs),
    /// Print the configuration reference page.
    ConfigReference,
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
pub struct Source {
    /// TOML scenario file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Built-in scenario name.
    #[arg(long)]
    pub scenario: Option<String>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub source: Source,
    /// Output directory (overrides the config).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Final time (overrides the scenario).
    #[arg(long)]
    pub t_end: Option<f64>,
    /// Steps between snapshots (overrides the config).
    #[arg(long)]
    pub snapshot_every: Option<usize>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub source: Source,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Random fields in the inequality battery.
    #[arg(long, default_value_t = 500)]
    pub trials: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Also run the twin-trajectory stability check.
    #[arg(long)]
    pub twin: bool,
}

#[derive(Debug, Args)]
pub struct MmsArgs {
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0.5)]
    pub amplitude: f64,
    #[arg(long, default_value_t = 1.0)]
    pub decay: f64,
    #[arg(long, default_value_t = 1)]
    pub n0: usize,
    #[arg(long, default_value_t = 1)]
    pub m0: usize,
    #[arg(long, default_value_t = 1.0)]
    pub mu: f64,
    #[arg(long, default_value_t = -0.1, allow_hyphen_values = true)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0.5, allow_hyphen_values = true)]
    pub beta: f64,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[arg(long, default_value = "small_data")]
    pub scenario: String,
    /// FD grid sizes (square grids).
    #[arg(long, value_delimiter = ',', default_values_t = [32, 64, 128])]
    pub sizes: Vec<usize>,
    /// Comparison time (defaults to the scenario's final time).
    #[arg(long)]
    pub t_end: Option<f64>,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SpectrumArgs {
    pub snapshot: PathBuf,
    #[arg(long, default_value_t = 2)]
    pub oversample: usize,
    /// Write CSV here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Perturbed mode of the twin runs: the least damped one, so the
/// difference decays at a single rate.
pub const TWIN_MODE: (usize, usize) = (1, 1);
/// Amplitude of the twin-run perturbation mode.
pub const TWIN_PERTURBATION: f64 = 1e-8;
/// Relative tolerance on the x10 rescaling of the twin-run difference.
pub const TWIN_SCALING_TOL: f64 = 0.05;

/// Smallest FD order accepted by `oracle`.
pub const ORACLE_MIN_ORDER: f64 = 1.8;

/// Parses `args` (including the program name) and runs the command.
pub fn main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

/// Exit code of an error that ends a command.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::BlowUp { .. } | Error::FdUnstable { .. } => EXIT_BLOWUP,
        _ => EXIT_USAGE,
    }
}

/// Sizes the global thread pool from `MGSIM_THREADS` if set.
pub fn init_threads() -> Result<()> {
    let Ok(v) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::Config(format!("{THREADS_ENV} must be a positive integer, got '{v}'")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))
}

fn dispatch(cmd: Command) -> Result<i32> {
    match cmd {
        Command::Run(a) => cmd_run(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Mms(a) => cmd_mms(a),
        Command::Oracle(a) => cmd_oracle(a),
        Command::Spectrum(a) => cmd_spectrum(a),
        Command::ConfigReference => {
            emit(&reference_page());
            Ok(EXIT_OK)
        }
    }
}

/// Scenario plus the optional config it came from.
fn load(source: &Source) -> Result<(Scenario, Option<ScenarioConfig>)> {
    if let Some(path) = &source.config {
        let cfg = ScenarioConfig::load(path)?;
        let base = path.parent().unwrap_or(Path::new("."));
        Ok((cfg.scenario(base)?, Some(cfg)))
    } else {
        let name = source.scenario.as_deref().expect("clap enforces one source");
        Ok((Scenario::from_preset(Preset::from_name(name)?), None))
    }
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    Ok(())
}

fn write_report(rep: &VerificationReport, dir: &Path, stem: &str) -> Result<()> {
    std::fs::write(dir.join(format!("{stem}.txt")), rep.to_text())?;
    std::fs::write(dir.join(format!("{stem}.json")), rep.to_json())?;
    Ok(())
}

/// Runs the scenario, writing the CSV (also on blow-up) and snapshots.
fn simulate(
    sc: &Scenario,
    dir: &Path,
    csv_name: &str,
) -> std::result::Result<crate::diagnostics::TrajectoryLog, RunFailure> {
    let res = run_simulation(&sc.u0, &sc.params, &sc.stepper, &mut |s, _| {
        log::debug!("t = {:.6} step {}", s.t, s.step)
    });
    let log = match &res {
        Ok(l) => l,
        Err(f) => &f.log,
    };
    if !log.records.is_empty() {
        if let Err(e) = write_diagnostics_csv(log, &dir.join(csv_name)) {
            log::error!("writing diagnostics: {e}");
        }
    }
    for snap in &log.snapshots {
        let path = dir.join(format!("snapshot_{:07}.mgsp", snap.step));
        if let Err(e) = write_snapshot(&snap.u, &path) {
            log::error!("writing {}: {e}", path.display());
        }
    }
    res
}

/// Prints to stdout, ignoring a closed pipe.
fn emit(s: &str) {
    use std::io::Write;
    let _ = std::io::stdout().lock().write_all(s.as_bytes());
}

fn cmd_run(a: RunArgs) -> Result<i32> {
    let (mut sc, cfg) = load(&a.source)?;
    let dir = a
        .out
        .clone()
        .or_else(|| cfg.as_ref().map(|c| c.output.dir.clone()))
        .unwrap_or_else(|| PathBuf::from("."));
    let csv_name = cfg.as_ref().map(|c| c.output.csv.clone()).unwrap_or_else(|| "diagnostics.csv".into());
    let stem = cfg.as_ref().map(|c| c.output.report.clone()).unwrap_or_else(|| "report".into());
    if let Some(t) = a.t_end {
        sc.stepper.t_end = t;
    }
    if a.snapshot_every.is_some() {
        sc.stepper.snapshot_every = a.snapshot_every;
    }
    sc.stepper.validate().map_err(|e| Error::Config(e.to_string()))?;
    ensure_dir(&dir)?;
    log::info!("running {} to t = {}", sc.name, sc.stepper.t_end);
    let log = match simulate(&sc, &dir, &csv_name) {
        Ok(l) => l,
        Err(f) => return Err(f.error),
    };
    let modes = cfg.as_ref().map(|c| c.modes).unwrap_or_default();
    let mut rep = VerificationReport::new(&sc.name);
    if modes.theorem1 {
        rep.extend(check_theorem1(&log, &Theorem1Tol::default()));
    }
    if modes.theorem2 {
        rep.extend(check_theorem2(&log, &Theorem2Tol::default()));
    }
    if modes.mms {
        let case = match sc.params.forcing {
            crate::operators::Forcing::Manufactured(c) => c,
            crate::operators::Forcing::None => ManufacturedCase::new(0.5, 1.0, 1, 1),
        };
        let mut p = sc.params;
        p.forcing = crate::operators::Forcing::None;
        let table = convergence_study(&case, &p, &StudyPlan::default())?;
        std::fs::write(dir.join("mms.csv"), table.to_csv())?;
        rep.extend(assess(&table, &case));
    }
    if modes.oracle_compare {
        let u_end = log_final_field(&sc)?;
        let study =
            cross_solver_study(&sc.u0, &u_end, &sc.params, sc.stepper.t_end, &[32, 64, 128], 0.5)?;
        emit(&study.to_text());
        rep.push(crate::report::Clause::bound("oracle_order", ORACLE_MIN_ORDER - study.min_order(), 0.0));
    }
    if rep.clauses.is_empty() {
        return Ok(EXIT_OK);
    }
    emit(&rep.to_text());
    write_report(&rep, &dir, &stem)?;
    Ok(if rep.passed() { EXIT_OK } else { EXIT_VERIFICATION })
}

fn log_final_field(sc: &Scenario) -> Result<SpectralField> {
    let cfg = StepperConfig { adapt: false, ..sc.stepper };
    integrate(&sc.u0, &sc.params, &cfg)
}

fn cmd_verify(a: VerifyArgs) -> Result<i32> {
    let (sc, cfg) = load(&a.source)?;
    let dir = a
        .out
        .clone()
        .or_else(|| cfg.as_ref().map(|c| c.output.dir.clone()))
        .unwrap_or_else(|| PathBuf::from("."));
    ensure_dir(&dir)?;
    if !sc.params.is_theorem_regime() {
        return Err(Error::Config(
            "verify needs the estimate regime: alpha <= 0 and no forcing".into(),
        ));
    }
    let mut rep = VerificationReport::new(&sc.name);
    rep.extend(check_inequality_battery(a.trials, a.seed)?);
    let log = match simulate(&sc, &dir, "diagnostics.csv") {
        Ok(l) => l,
        Err(f) => return Err(f.error),
    };
    rep.extend(check_theorem1(&log, &Theorem1Tol::default()));
    rep.extend(check_theorem2(&log, &Theorem2Tol::default()));
    if a.twin {
        let mut pert = SpectralField::zeros(*sc.u0.grid());
        pert.add_sine_mode(TWIN_MODE.0, TWIN_MODE.1, TWIN_PERTURBATION, 0.0);
        let tcfg = StepperConfig { adapt: false, ..sc.stepper };
        rep.extend(perturbation_scaling(&sc.u0, &pert, &sc.params, &tcfg, 10.0, TWIN_SCALING_TOL)?);
    }
    emit(&rep.to_text());
    write_report(&rep, &dir, "report")?;
    Ok(if rep.passed() { EXIT_OK } else { EXIT_VERIFICATION })
}

fn cmd_mms(a: MmsArgs) -> Result<i32> {
    let case = ManufacturedCase::new(a.amplitude, a.decay, a.n0, a.m0);
    case.validate().map_err(|e| Error::Config(e.to_string()))?;
    let p = ModelParams::new(a.mu, a.alpha, a.beta).map_err(|e| Error::Config(e.to_string()))?;
    ensure_dir(&a.out)?;
    let table = convergence_study(&case, &p, &StudyPlan::default())?;
    emit(&table.to_text());
    std::fs::write(a.out.join("mms.csv"), table.to_csv())?;
    let rep = assess(&table, &case);
    emit(&rep.to_text());
    write_report(&rep, &a.out, "mms_report")?;
    Ok(if rep.passed() { EXIT_OK } else { EXIT_VERIFICATION })
}

fn cmd_oracle(a: OracleArgs) -> Result<i32> {
    let mut sc = Scenario::from_preset(Preset::from_name(&a.scenario)?);
    if let Some(t) = a.t_end {
        sc.stepper.t_end = t;
    }
    sc.stepper.validate().map_err(|e| Error::Config(e.to_string()))?;
    if a.sizes.len() < 2 {
        return Err(Error::Config("oracle needs at least two sizes".into()));
    }
    ensure_dir(&a.out)?;
    let u_end = log_final_field(&sc)?;
    let study = cross_solver_study(&sc.u0, &u_end, &sc.params, sc.stepper.t_end, &a.sizes, 0.5)?;
    emit(&study.to_text());
    let mut csv = String::from("nx,ny,h,discrepancy,constant\n");
    for r in &study.rows {
        csv.push_str(&format!(
            "{},{},{:.16e},{:.16e},{:.16e}\n",
            r.nx, r.ny, r.h, r.discrepancy, r.constant
        ));
    }
    std::fs::write(a.out.join("oracle.csv"), csv)?;
    Ok(if study.min_order() >= ORACLE_MIN_ORDER { EXIT_OK } else { EXIT_VERIFICATION })
}

fn cmd_spectrum(a: SpectrumArgs) -> Result<i32> {
    let u = read_snapshot(&a.snapshot, a.oversample)?;
    let mut s = String::from("n,m,re,im,abs\n");
    for (n, m) in u.grid().modes() {
        let c = u.get(n, m);
        s.push_str(&format!("{n},{m},{:.16e},{:.16e},{:.16e}\n", c.re, c.im, c.norm()));
    }
    match a.out {
        Some(p) => std::fs::write(p, s)?,
        None => emit(&s),
    }
    Ok(EXIT_OK)
}
