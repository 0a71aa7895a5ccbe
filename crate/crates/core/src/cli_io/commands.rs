//! Command-line entry points and their exit codes.

use super::config::{parse_config, ConfigError, InitialKind, MmsKind, RunConfig};
use super::snapshot::{write_snapshot, SnapshotError};
use super::timeseries::{compare_rows, run_rows, SeriesMode, TimeseriesError, TimeseriesWriter};
use crate::dynamics::{build_initial, cfl_dt, run, Forcing, RunError, RunSetup, State, TimeControl, Trajectory};
use crate::entropy::EntropyError;
use crate::verify::{
    convergence_study, oracle_lemma_scan, sample_state, ConvergenceConfig, CoupledMs, HeatMs, LemmaCertificate,
    ManufacturedSolution, MmsForcing, MovingProfileMs, RegimeSlack, SourceMode, VerifyError, FIELD_NAMES,
};
use clap::{Parser, Subcommand};
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use thiserror::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_OTHER: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_BLOWUP: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "oldroyd", version, about = "2D compressible Oldroyd-B simulator with entropy diagnostics")]
pub struct Cli {
    /// Worker threads for cellwise kernels (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Output directory, overriding [output] directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Reject unknown sections and keys instead of warning.
    #[arg(long, global = true)]
    pub strict: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate one configuration and write its time series and snapshots.
    Run { config: PathBuf },
    /// Run a reference and a candidate and report relative entropies.
    Compare { reference: PathBuf, weak: PathBuf },
    /// Manufactured-solution convergence study.
    Verify { config: PathBuf },
    /// Scan the Bregman lower bounds.
    LemmaCheck { config: PathBuf },
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Config {
        path: String,
        #[source]
        source: ConfigError,
    },
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Run(#[from] RunError),
    #[error(transparent)]
    Entropy(#[from] EntropyError),
    #[error(transparent)]
    Verify(#[from] VerifyError),
    #[error(transparent)]
    Snapshot(#[from] SnapshotError),
    #[error(transparent)]
    Timeseries(#[from] TimeseriesError),
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("convergence study invalid: an error failed to decrease under refinement")]
    NotConverging,
    #[error("lemma bounds not certified")]
    NotCertified,
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } | CliError::Usage(_) => EXIT_CONFIG,
            CliError::Run(e) => run_code(e),
            CliError::Entropy(EntropyError::Run(e)) | CliError::Verify(VerifyError::Run(e)) => run_code(e),
            CliError::Entropy(EntropyError::Config(_) | EntropyError::Mismatch(_)) => EXIT_CONFIG,
            CliError::Entropy(EntropyError::Domain { .. }) | CliError::NotConverging => EXIT_NUMERICAL,
            CliError::Verify(VerifyError::Config(_)) => EXIT_CONFIG,
            _ => EXIT_OTHER,
        }
    }
}

fn run_code(e: &RunError) -> i32 {
    match e {
        RunError::BlowUp { .. } => EXIT_BLOWUP,
        RunError::Setup(_) => EXIT_CONFIG,
        e if e.is_numerical() => EXIT_NUMERICAL,
        _ => EXIT_OTHER,
    }
}

fn load(path: &Path, strict: bool) -> Result<RunConfig, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Config {
        path: path.display().to_string(),
        source: ConfigError(vec![format!("cannot read file: {e}")]),
    })?;
    parse_config(&text, strict).map_err(|source| CliError::Config {
        path: path.display().to_string(),
        source,
    })
}

fn manufactured(kind: MmsKind, cfg: &RunConfig) -> Arc<dyn ManufacturedSolution> {
    let (lx, ly) = (cfg.grid.lx, cfg.grid.ly);
    match kind {
        MmsKind::Coupled => Arc::new(CoupledMs { lx, ly }),
        MmsKind::Heat => Arc::new(HeatMs { lx, ly, ..HeatMs::new(&cfg.prm) }),
        MmsKind::Profile => Arc::new(MovingProfileMs::new(&cfg.prm, lx, ly)),
    }
}

/// Initial state and forcing described by a configuration.
pub fn initial_and_forcing(cfg: &RunConfig) -> (State, Arc<dyn Forcing>) {
    match &cfg.initial {
        InitialKind::Preset(p) => (build_initial(p, cfg.grid, &cfg.prm, cfg.perturbation), cfg.forcing.build()),
        InitialKind::Mms(kind) => {
            let ms = manufactured(*kind, cfg);
            let f = MmsForcing {
                ms: ms.clone(),
                prm: cfg.prm,
                mode: SourceMode::All,
            };
            (sample_state(ms.as_ref(), cfg.grid, 0.0), Arc::new(f))
        }
    }
}

pub fn setup_for(cfg: &RunConfig, dt: Option<f64>, stride: usize) -> RunSetup {
    let (initial, forcing) = initial_and_forcing(cfg);
    let mut s = RunSetup::new(
        cfg.prm,
        initial,
        forcing,
        TimeControl {
            t_end: cfg.time.t_end,
            cfl: cfg.time.cfl,
            dt: dt.or(cfg.time.dt),
            snapshot_stride: stride,
            snapshot_interval: None,
        },
    );
    s.rho_threshold_factor = cfg.diagnostics.rho_threshold;
    s.alpha = cfg.diagnostics.alpha;
    s
}

fn out_dir(cli_out: Option<&Path>, cfg: &RunConfig) -> Result<PathBuf, CliError> {
    let d = cli_out.map_or_else(|| PathBuf::from(&cfg.output.directory), Path::to_path_buf);
    fs::create_dir_all(&d)?;
    Ok(d)
}

/// Writes the configured outputs and returns the final energy residual.
fn write_run_outputs(dir: &Path, cfg: &RunConfig, traj: &Trajectory) -> Result<f64, CliError> {
    let rows = run_rows(traj);
    let residual = rows.last().map_or(f64::NAN, |r| r[10]);
    if cfg.output.csv {
        let w = TimeseriesWriter::create(&dir.join("timeseries.csv"), SeriesMode::Run)?;
        for row in rows {
            w.push(row)?;
        }
        w.finish()?;
    }
    if cfg.output.snapshots {
        let sd = dir.join("snapshots");
        fs::create_dir_all(&sd)?;
        for (k, s) in traj.snapshots.iter().enumerate() {
            write_snapshot(&sd.join(format!("snap_{k:06}.bin")), &s.state)?;
        }
    }
    Ok(residual)
}

fn cmd_run(path: &Path, cli: &Cli) -> Result<(), CliError> {
    let cfg = load(path, cli.strict)?;
    let dir = out_dir(cli.out.as_deref(), &cfg)?;
    let setup = setup_for(&cfg, None, cfg.time.snapshot_stride);
    match run(&setup) {
        Ok(traj) => {
            let residual = write_run_outputs(&dir, &cfg, &traj)?;
            let last = traj.last();
            println!(
                "completed t = {} in {} steps; sup_rho = {:e}, energy residual = {:e}",
                last.state.t,
                traj.steps,
                last.blowup.sup_rho, residual
            );
            Ok(())
        }
        Err(RunError::BlowUp {
            monitor,
            value,
            threshold,
            t,
            partial,
        }) => {
            // keep what was computed up to the abort
            write_run_outputs(&dir, &cfg, &partial)?;
            Err(RunError::BlowUp {
                monitor,
                value,
                threshold,
                t,
                partial,
            }
            .into())
        }
        Err(e) => Err(e.into()),
    }
}

/// Largest step dividing `t_end` evenly that stays within 90% of the CFL
/// bound of every initial state, leaving room for the flow to speed up.
fn shared_dt(setups: &[&RunSetup]) -> Result<f64, CliError> {
    let t_end = setups[0].time.t_end;
    let mut bound = f64::INFINITY;
    for s in setups {
        let floor = 1e-10 * crate::fields::integrate(&s.initial.rho) / s.initial.grid().area();
        bound = bound.min(0.9 * cfl_dt(&s.initial, &s.prm, s.time.cfl, floor)?);
        if let Some(dt) = s.time.dt {
            bound = bound.min(dt);
        }
    }
    if t_end == 0.0 {
        return Ok(bound);
    }
    Ok(t_end / (t_end / bound).ceil().max(1.0))
}

fn cmd_compare(ref_path: &Path, weak_path: &Path, cli: &Cli) -> Result<(), CliError> {
    let rc = load(ref_path, cli.strict)?;
    let wc = load(weak_path, cli.strict)?;
    if rc.grid != wc.grid {
        return Err(CliError::Usage("compare: the two configurations must use the same grid".into()));
    }
    if rc.prm != wc.prm {
        return Err(CliError::Usage("compare: the two configurations must use the same parameters".into()));
    }
    if rc.time.t_end != wc.time.t_end {
        return Err(CliError::Usage("compare: the two configurations must share t_end".into()));
    }
    let dir = out_dir(cli.out.as_deref(), &wc)?;
    let probe_r = setup_for(&rc, None, 1);
    let probe_w = setup_for(&wc, None, 1);
    let dt = shared_dt(&[&probe_r, &probe_w])?;
    // reference time differences need snapshot spacing no larger than h
    let cap = ((rc.grid.h() / dt).floor() as usize).max(1);
    let stride = rc.time.snapshot_stride.min(wc.time.snapshot_stride).min(cap);
    if stride < rc.time.snapshot_stride.min(wc.time.snapshot_stride) {
        log::info!("snapshot stride reduced to {stride} so spacing stays below the mesh width");
    }
    let reference = run(&setup_for(&rc, Some(dt), stride))?;
    let weak = run(&setup_for(&wc, Some(dt), stride))?;
    let rows = compare_rows(&weak, &reference, wc.diagnostics.remainder)?;
    let w = TimeseriesWriter::create(&dir.join("compare.csv"), SeriesMode::Compare)?;
    let last = rows.last().cloned();
    for row in rows {
        w.push(row)?;
    }
    w.finish()?;
    if let Some(r) = last {
        println!(
            "compared to t = {}: E_combined = {:e}, entropy residual = {:e}",
            r[0], r[20], r[28]
        );
    }
    Ok(())
}

fn cmd_verify(path: &Path, cli: &Cli) -> Result<(), CliError> {
    let cfg = load(path, cli.strict)?;
    let InitialKind::Mms(kind) = cfg.initial else {
        return Err(CliError::Usage("verify needs an mms:<name> preset in [initial]".into()));
    };
    let dir = out_dir(cli.out.as_deref(), &cfg)?;
    let report = convergence_study(&ConvergenceConfig {
        prm: cfg.prm,
        ms: manufactured(kind, &cfg),
        mode: cfg.grid.mode,
        levels: cfg.verify.levels.clone(),
        t_end: cfg.verify.t_end,
        dt_scale: cfg.verify.dt_scale,
    })?;
    let mut csv = String::from("n,dt,steps");
    for norm in ["l2", "linf"] {
        for f in FIELD_NAMES {
            csv.push_str(&format!(",{norm}_{f}"));
        }
    }
    csv.push('\n');
    for l in &report.levels {
        csv.push_str(&format!("{},{:e},{}", l.n, l.dt, l.steps));
        for v in l.l2.iter().chain(&l.linf) {
            csv.push_str(&format!(",{v:e}"));
        }
        csv.push('\n');
    }
    fs::write(dir.join("convergence.csv"), csv)?;
    for (k, f) in FIELD_NAMES.iter().enumerate() {
        let (lo, hi) = report.l2_order_range(k);
        println!("{f:>6}: L2 order {lo:.3} .. {hi:.3}");
    }
    if report.valid {
        Ok(())
    } else {
        Err(CliError::NotConverging)
    }
}

fn certificate_csv(c: &LemmaCertificate) -> String {
    let mut s = format!(
        "# seed {} samples {} range {:e}..{:e} delta {:e} c {:e} g_bound {:?}\nregime,samples,min_slack,min_scaled_slack,at_value,at_reference\n",
        c.seed, c.samples, c.range.0, c.range.1, c.h_constants.delta, c.h_constants.c, c.g_variant
    );
    let rows: [(&str, &RegimeSlack); 4] = [
        ("h_inner", &c.h_inner),
        ("h_outer", &c.h_outer),
        ("g_near", &c.g_near),
        ("g_far", &c.g_far),
    ];
    for (name, r) in rows {
        s.push_str(&format!(
            "{name},{},{:e},{:e},{:e},{:e}\n",
            r.samples, r.min_slack, r.min_scaled_slack, r.at.0, r.at.1
        ));
    }
    s
}

fn cmd_lemma(path: &Path, cli: &Cli) -> Result<(), CliError> {
    let cfg = load(path, cli.strict)?;
    let dir = out_dir(cli.out.as_deref(), &cfg)?;
    let cert = oracle_lemma_scan(&cfg.prm, cfg.lemma.samples, cfg.lemma.seed, cfg.lemma.g_bound)?;
    let csv = certificate_csv(&cert);
    fs::write(dir.join("lemma_certificate.csv"), &csv)?;
    print!("{csv}");
    if cert.certified() {
        Ok(())
    } else {
        for (name, r) in [("h_inner", &cert.h_inner), ("h_outer", &cert.h_outer), ("g_near", &cert.g_near), ("g_far", &cert.g_far)] {
            if !r.certified() {
                println!(
                    "negative slack in {name}: {:e} (scaled {:e}) at ({:e}, {:e})",
                    r.min_slack, r.min_scaled_slack, r.at.0, r.at.1
                );
            }
        }
        Err(CliError::NotCertified)
    }
}

/// Executes a parsed command line and returns the process exit code.
pub fn execute(cli: &Cli) -> i32 {
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return EXIT_CONFIG;
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::warn!("thread pool already initialised: {e}");
        }
    }
    let res = match &cli.command {
        Command::Run { config } => cmd_run(config, cli),
        Command::Compare { reference, weak } => cmd_compare(reference, weak, cli),
        Command::Verify { config } => cmd_verify(config, cli),
        Command::LemmaCheck { config } => cmd_lemma(config, cli),
    };
    match res {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
