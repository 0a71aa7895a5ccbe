//! Diagnostics time series as CSV, written by a dedicated thread fed
//! through a bounded queue.

use crate::diagnostics::{energy_series, residual_from_series, trace_identity_residual};
use crate::dynamics::Trajectory;
use crate::entropy::{relative_entropy_reports, EntropyError, RemainderForm};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::sync::mpsc::{sync_channel, SyncSender};
use std::thread::JoinHandle;
use thiserror::Error;

pub const RUN_COLUMNS: [&str; 17] = [
    "t",
    "kinetic",
    "pressure_pot",
    "polymer_pot",
    "stress_tr",
    "visc_diss_cum",
    "poly_diss_cum",
    "relax_cum",
    "src_f_cum",
    "src_eta_cum",
    "energy_residual",
    "trace_residual",
    "sup_rho",
    "sup_eta",
    "l2t_linf_tau",
    "moment_alpha",
    "min_eig_tau",
];

pub const COMPARE_COLUMNS: [&str; 12] = [
    "E1",
    "E2",
    "ET",
    "E_combined",
    "R1",
    "R2",
    "R3",
    "R4",
    "R5",
    "R_def_total",
    "R_new_total",
    "entropy_residual",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeriesMode {
    Run,
    Compare,
}

impl SeriesMode {
    pub fn columns(self) -> Vec<&'static str> {
        match self {
            SeriesMode::Run => RUN_COLUMNS.to_vec(),
            SeriesMode::Compare => RUN_COLUMNS.iter().chain(&COMPARE_COLUMNS).copied().collect(),
        }
    }
}

#[derive(Debug, Error)]
pub enum TimeseriesError {
    #[error("row has {got} values, the {mode:?} schema has {want} columns")]
    Width { mode: SeriesMode, got: usize, want: usize },
    #[error("rows out of time order: t = {next} after t = {prev}")]
    Order { prev: f64, next: f64 },
    #[error("time-series writer stopped early")]
    Closed,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Shortest round-trip scientific notation, independent of locale.
pub fn format_value(v: f64) -> String {
    format!("{v:e}")
}

fn format_row(row: &[f64]) -> String {
    let mut s = row.iter().map(|&v| format_value(v)).collect::<Vec<_>>().join(",");
    s.push('\n');
    s
}

/// Run-mode rows, one per snapshot. Residuals needing time derivatives are
/// NaN when the trajectory has a single snapshot.
pub fn run_rows(traj: &Trajectory) -> Vec<Vec<f64>> {
    let series = energy_series(traj);
    let energy_res = residual_from_series(&series);
    let n = traj.snapshots.len();
    let trace = trace_identity_residual(traj).unwrap_or_else(|_| vec![f64::NAN; n]);
    traj.snapshots
        .iter()
        .zip(&series)
        .enumerate()
        .map(|(k, (s, e))| {
            let b = &s.blowup;
            vec![
                s.state.t,
                e.kinetic,
                e.pressure_pot,
                e.polymer_pot,
                e.stress_tr,
                e.visc_diss_cum,
                e.poly_diss_cum,
                e.relax_cum,
                e.src_f_cum,
                e.src_eta_cum,
                energy_res[k],
                trace[k],
                b.sup_rho,
                b.sup_eta,
                b.l2t_linf_tau,
                b.moment_alpha,
                b.min_eig_tau,
            ]
        })
        .collect()
}

/// Compare-mode rows: the weak trajectory's run columns followed by the
/// relative entropies and remainders against the reference.
pub fn compare_rows(
    weak: &Trajectory,
    reference: &Trajectory,
    form: RemainderForm,
) -> Result<Vec<Vec<f64>>, EntropyError> {
    let reports = relative_entropy_reports(weak, reference, form)?;
    Ok(run_rows(weak)
        .into_iter()
        .zip(reports)
        .map(|(mut row, r)| {
            row.extend([r.e1, r.e2, r.et, r.e_combined]);
            row.extend(r.r_def.r);
            row.extend([r.r_def.total(), r.r_new.total(), r.inequality_residual]);
            row
        })
        .collect())
}

/// Single writer owning the file; rows arrive in time order over a bounded
/// channel and the header is written before any row.
pub struct TimeseriesWriter {
    tx: SyncSender<Vec<f64>>,
    handle: JoinHandle<Result<(), TimeseriesError>>,
    mode: SeriesMode,
}

const QUEUE_DEPTH: usize = 64;

impl TimeseriesWriter {
    pub fn create(path: &Path, mode: SeriesMode) -> Result<Self, TimeseriesError> {
        let mut out = BufWriter::new(File::create(path)?);
        let (tx, rx) = sync_channel::<Vec<f64>>(QUEUE_DEPTH);
        let handle = std::thread::spawn(move || {
            writeln!(out, "{}", mode.columns().join(","))?;
            let mut prev = f64::NEG_INFINITY;
            for row in rx {
                let t = row[0];
                if t < prev {
                    return Err(TimeseriesError::Order { prev, next: t });
                }
                prev = t;
                out.write_all(format_row(&row).as_bytes())?;
            }
            out.flush()?;
            Ok(())
        });
        Ok(Self { tx, handle, mode })
    }

    pub fn push(&self, row: Vec<f64>) -> Result<(), TimeseriesError> {
        let want = self.mode.columns().len();
        if row.len() != want {
            return Err(TimeseriesError::Width {
                mode: self.mode,
                got: row.len(),
                want,
            });
        }
        self.tx.send(row).map_err(|_| TimeseriesError::Closed)
    }

    /// Closes the queue and waits for the file to be flushed.
    pub fn finish(self) -> Result<(), TimeseriesError> {
        drop(self.tx);
        self.handle.join().map_err(|_| TimeseriesError::Closed)?
    }
}

pub fn write_timeseries(path: &Path, mode: SeriesMode, rows: Vec<Vec<f64>>) -> Result<(), TimeseriesError> {
    let w = TimeseriesWriter::create(path, mode)?;
    let mut pushed = Ok(());
    for row in rows {
        pushed = w.push(row);
        if pushed.is_err() {
            break;
        }
    }
    // a writer-side error takes precedence over the send failure it caused
    w.finish()?;
    pushed
}
