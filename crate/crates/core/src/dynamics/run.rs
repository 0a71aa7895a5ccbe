use super::integrator::{cfl_dt, step_ssprk2, StepOptions};
use super::{Forcing, State};
use crate::diagnostics::{blowup_monitor, rates, BlowupReport, MonitorLimits, Rates};
use crate::fields::{FieldError, Grid};
use crate::model::{ModelError, ModelParams};
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RunError {
    #[error("blow-up: monitor {monitor} reached {value:e}, above threshold {threshold:e}, at t = {t}")]
    BlowUp {
        monitor: &'static str,
        value: f64,
        threshold: f64,
        t: f64,
        partial: Box<Trajectory>,
    },
    #[error("non-finite value in {field} at cell ({i}, {j}), t = {t}")]
    NonFinite {
        field: &'static str,
        i: isize,
        j: isize,
        t: f64,
    },
    #[error("eta undershoot {value:e} at cell ({i}, {j}), t = {t}, exceeds clipping tolerance {tol:e}")]
    NegativeEta {
        value: f64,
        tol: f64,
        i: isize,
        j: isize,
        t: f64,
    },
    #[error("time step {dt:e} at t = {t} is not positive and finite")]
    BadTimeStep { dt: f64, t: f64 },
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("invalid run setup: {0}")]
    Setup(String),
}

impl RunError {
    /// Failures of the discretization itself, as opposed to a monitor abort
    /// or an invalid request.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            RunError::NonFinite { .. } | RunError::NegativeEta { .. } | RunError::BadTimeStep { .. }
        )
    }
}

/// Running time integrals of the energy balance, trapezoidal in time.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Accumulators {
    /// `∫∫ μ|∇u|² + ν|div u|²`
    pub visc: f64,
    /// `2ε ∫∫ 2kL|∇η^½|² + 𝔷|∇η|²`
    pub poly: f64,
    /// `(1/4λ) ∫∫ tr 𝕋`
    pub relax: f64,
    /// `∫∫ ϱ f·u`
    pub src_f: f64,
    /// `(kd/4λ) ∫∫ η`
    pub src_eta: f64,
}

impl Accumulators {
    fn advance(&mut self, dt: f64, a: &Rates, b: &Rates) {
        let h = 0.5 * dt;
        self.visc += h * (a.visc + b.visc);
        self.poly += h * (a.poly + b.poly);
        self.relax += h * (a.relax + b.relax);
        self.src_f += h * (a.src_f + b.src_f);
        self.src_eta += h * (a.src_eta + b.src_eta);
    }

    pub fn dissipation(&self) -> f64 {
        self.visc + self.poly + self.relax
    }

    pub fn sources(&self) -> f64 {
        self.src_f + self.src_eta
    }
}

#[derive(Debug, Clone)]
pub struct Snapshot {
    pub state: State,
    pub acc: Accumulators,
    pub blowup: BlowupReport,
    /// Number of completed steps when the snapshot was taken.
    pub step: usize,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub prm: ModelParams,
    pub grid: Grid,
    pub rho_floor: f64,
    pub forcing: Arc<dyn Forcing>,
    pub snapshots: Vec<Snapshot>,
    pub steps: usize,
    pub clipped_eta_mass: f64,
}

impl Trajectory {
    pub fn times(&self) -> Vec<f64> {
        self.snapshots.iter().map(|s| s.state.t).collect()
    }

    pub fn last(&self) -> &Snapshot {
        self.snapshots.last().expect("trajectories hold the initial snapshot")
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeControl {
    pub t_end: f64,
    pub cfl: f64,
    /// Fixed step; a warning is logged the first time it exceeds the CFL bound.
    pub dt: Option<f64>,
    /// Record every `snapshot_stride`-th step.
    pub snapshot_stride: usize,
    /// Record at every multiple of this time, shortening steps to land on it.
    pub snapshot_interval: Option<f64>,
}

impl Default for TimeControl {
    fn default() -> Self {
        Self {
            t_end: 0.0,
            cfl: 0.4,
            dt: None,
            snapshot_stride: 1,
            snapshot_interval: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunSetup {
    pub prm: ModelParams,
    pub initial: State,
    pub forcing: Arc<dyn Forcing>,
    pub time: TimeControl,
    /// Defaults to `1e−10 · mean ϱ₀`.
    pub rho_floor: Option<f64>,
    /// Defaults to `1e−12 · ‖η₀‖_∞`.
    pub eta_tol: Option<f64>,
    /// Abort once `sup ϱ` exceeds this multiple of `max ϱ₀`; may be infinite.
    pub rho_threshold_factor: f64,
    /// Exponent of the velocity moment `∫ϱ|u|^α`.
    pub alpha: f64,
}

impl RunSetup {
    pub fn new(prm: ModelParams, initial: State, forcing: Arc<dyn Forcing>, time: TimeControl) -> Self {
        Self {
            prm,
            initial,
            forcing,
            time,
            rho_floor: None,
            eta_tol: None,
            rho_threshold_factor: 1e3,
            alpha: 3.0,
        }
    }

    fn validate(&self) -> Result<(), RunError> {
        let t = &self.time;
        let mut errs = Vec::new();
        if !(t.t_end >= 0.0 && t.t_end.is_finite()) {
            errs.push(format!("t_end must be finite and >= 0, got {}", t.t_end));
        }
        if !(t.cfl > 0.0 && t.cfl <= 1.0) {
            errs.push(format!("cfl must lie in (0, 1], got {}", t.cfl));
        }
        if t.snapshot_stride == 0 {
            errs.push("snapshot_stride must be at least 1".into());
        }
        if let Some(dt) = t.dt {
            if !(dt > 0.0 && dt.is_finite()) {
                errs.push(format!("dt must be positive, got {dt}"));
            }
        }
        if let Some(iv) = t.snapshot_interval {
            if !(iv > 0.0 && iv.is_finite()) {
                errs.push(format!("snapshot_interval must be positive, got {iv}"));
            }
        }
        if !(self.rho_threshold_factor > 0.0) {
            errs.push("rho_threshold_factor must be positive".into());
        }
        if !(self.alpha > 2.0 && self.alpha <= 3.0) {
            errs.push(format!("alpha must lie in (2, 3], got {}", self.alpha));
        }
        let v = self.prm.violations();
        errs.extend(v);
        if self.initial.rho.min_interior() <= 0.0 {
            errs.push("initial density must be positive".into());
        }
        if self.initial.eta.min_interior() < 0.0 {
            errs.push("initial eta must be nonnegative".into());
        }
        if let Err(e) = self.initial.check_finite() {
            errs.push(e.to_string());
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(RunError::Setup(errs.join("; ")))
        }
    }
}

/// Integrates from the initial state to `t_end`, recording snapshots with
/// the energy accumulators and blow-up monitors.
pub fn run(setup: &RunSetup) -> Result<Trajectory, RunError> {
    setup.validate()?;
    let prm = setup.prm;
    let mut state = setup.initial.clone();
    state.refresh_ghosts();
    let grid = state.grid();
    let mass_mean = crate::fields::integrate(&state.rho) / grid.area();
    let rho_floor = setup.rho_floor.unwrap_or(1e-10 * mass_mean);
    let eta_sup = crate::fields::sup_norm(&state.eta);
    let opts = StepOptions {
        rho_floor,
        eta_tol: setup.eta_tol.unwrap_or(1e-12 * eta_sup),
    };
    let tau_sup = state
        .tau
        .planes()
        .iter()
        .map(|p| crate::fields::sup_norm(p))
        .fold(0.0, f64::max);
    let limits = MonitorLimits {
        rho_max: setup.rho_threshold_factor * state.rho.max_interior(),
        alpha: setup.alpha,
        psd_tol: 1e-8 * tau_sup,
    };
    let forcing = setup.forcing.clone();
    let tc = setup.time;

    let mut report = BlowupReport::initial(&state, &limits, rho_floor);
    let mut acc = Accumulators::default();
    let mut rate = rates(&state, &prm, forcing.as_ref(), rho_floor);
    let mut traj = Trajectory {
        prm,
        grid,
        rho_floor,
        forcing: forcing.clone(),
        snapshots: vec![Snapshot {
            state: state.clone(),
            acc,
            blowup: report.clone(),
            step: 0,
        }],
        steps: 0,
        clipped_eta_mass: 0.0,
    };

    let t_end = tc.t_end;
    let t_tol = 1e-12 * t_end.max(1e-300);
    let mut next_mark = tc.snapshot_interval.map(|iv| iv.min(t_end));
    let mut mark_index = 1usize;
    let mut step = 0usize;
    let mut warned = false;
    while state.t < t_end - t_tol {
        let bound = cfl_dt(&state, &prm, tc.cfl, rho_floor)?;
        let mut dt = match tc.dt {
            Some(dt) => {
                if dt > bound && !warned {
                    log::warn!("fixed dt {dt:e} exceeds the CFL bound {bound:e} at t = {}", state.t);
                    warned = true;
                }
                dt
            }
            None => bound,
        };
        let mut target = None;
        if state.t + dt >= t_end - t_tol {
            dt = t_end - state.t;
            target = Some(t_end);
        }
        if let Some(m) = next_mark {
            if state.t + dt >= m - t_tol {
                dt = m - state.t;
                target = Some(m);
            }
        }
        let (mut next, log) = step_ssprk2(&state, dt, &prm, forcing.as_ref(), &opts)?;
        if let Some(t) = target {
            next.t = t;
        }
        step += 1;
        traj.clipped_eta_mass += log.clipped_eta_mass;
        let next_rate = rates(&next, &prm, forcing.as_ref(), rho_floor);
        acc.advance(dt, &rate, &next_rate);
        rate = next_rate;
        let (new_report, abort) = blowup_monitor(&next, &report, dt, &limits, rho_floor);
        report = new_report;
        state = next;

        let at_mark = matches!((next_mark, target), (Some(m), Some(t)) if t == m);
        if at_mark {
            mark_index += 1;
            let iv = tc.snapshot_interval.expect("marks imply an interval");
            next_mark = Some((iv * mark_index as f64).min(t_end));
            if next_mark.map_or(false, |m| m <= state.t) {
                next_mark = None;
            }
        }
        let finished = state.t >= t_end - t_tol;
        let record = finished
            || at_mark
            || (tc.snapshot_interval.is_none() && step % tc.snapshot_stride == 0);
        if record || abort.is_some() {
            traj.snapshots.push(Snapshot {
                state: state.clone(),
                acc,
                blowup: report.clone(),
                step,
            });
        }
        traj.steps = step;
        if let Some(a) = abort {
            let t = state.t;
            return Err(RunError::BlowUp {
                monitor: a.monitor,
                value: a.value,
                threshold: a.threshold,
                t,
                partial: Box::new(traj),
            });
        }
    }
    Ok(traj)
}
