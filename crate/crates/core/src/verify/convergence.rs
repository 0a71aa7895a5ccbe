use super::mms::{sample_state, ManufacturedSolution, MmsForcing, SourceMode};
use super::VerifyError;
use crate::dynamics::{run, RunSetup, TimeControl};
use crate::fields::{l2_norm, sup_norm, BoundaryMode, Grid};
use crate::model::ModelParams;
use std::sync::Arc;

pub const FIELD_NAMES: [&str; 7] = ["rho", "mom_x", "mom_y", "eta", "tau11", "tau12", "tau22"];

#[derive(Debug, Clone)]
pub struct ConvergenceConfig {
    pub prm: ModelParams,
    pub ms: Arc<dyn ManufacturedSolution>,
    pub mode: BoundaryMode,
    /// Cells per side at each level; at least three, each double the last.
    pub levels: Vec<usize>,
    pub t_end: f64,
    /// `dt = dt_scale · dx²` on every level.
    pub dt_scale: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LevelErrors {
    pub n: usize,
    pub dt: f64,
    pub steps: usize,
    pub l2: [f64; 7],
    pub linf: [f64; 7],
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub levels: Vec<LevelErrors>,
    /// `log₂(e_h / e_{h/2})` per consecutive pair of levels.
    pub l2_orders: Vec<[f64; 7]>,
    pub linf_orders: Vec<[f64; 7]>,
    /// False when some field's error fails to decrease under refinement.
    pub valid: bool,
}

impl ConvergenceReport {
    /// Smallest and largest observed L² order of one field.
    pub fn l2_order_range(&self, field: usize) -> (f64, f64) {
        self.l2_orders
            .iter()
            .map(|o| o[field])
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)))
    }

    /// Observed L² order of one field on the finest pair.
    pub fn finest_l2_order(&self, field: usize) -> f64 {
        self.l2_orders.last().map_or(f64::NAN, |o| o[field])
    }
}

fn order(a: f64, b: f64) -> f64 {
    (a / b).log2()
}

/// Runs the forced simulator from the manufactured data on each level and
/// measures errors against the closed form at `t_end`.
pub fn convergence_study(cfg: &ConvergenceConfig) -> Result<ConvergenceReport, VerifyError> {
    if cfg.levels.len() < 3 {
        return Err(VerifyError::Config("a convergence study needs at least three levels".into()));
    }
    if cfg.levels.windows(2).any(|w| w[1] != 2 * w[0]) {
        return Err(VerifyError::Config("levels must double".into()));
    }
    let forcing = Arc::new(MmsForcing {
        ms: cfg.ms.clone(),
        prm: cfg.prm,
        mode: SourceMode::All,
    });
    let mut levels = Vec::new();
    for &n in &cfg.levels {
        let grid = Grid::unit_square(n, cfg.mode)?;
        let dt = cfg.dt_scale * grid.dx * grid.dx;
        let initial = sample_state(cfg.ms.as_ref(), grid, 0.0);
        let setup = RunSetup::new(
            cfg.prm,
            initial,
            forcing.clone(),
            TimeControl {
                t_end: cfg.t_end,
                dt: Some(dt),
                snapshot_stride: usize::MAX,
                ..Default::default()
            },
        );
        let traj = run(&setup)?;
        let last = &traj.last().state;
        let exact = sample_state(cfg.ms.as_ref(), grid, last.t);
        let (mut l2, mut linf) = ([0.0; 7], [0.0; 7]);
        for (k, (a, b)) in last.planes().iter().zip(exact.planes()).enumerate() {
            let d = a.sub(b)?;
            l2[k] = l2_norm(&d);
            linf[k] = sup_norm(&d);
        }
        log::info!("{} level {n}: l2 {:?}", cfg.ms.name(), l2);
        levels.push(LevelErrors {
            n,
            dt,
            steps: traj.steps,
            l2,
            linf,
        });
    }
    let mut l2_orders = Vec::new();
    let mut linf_orders = Vec::new();
    let mut valid = true;
    for w in levels.windows(2) {
        let mut a = [0.0; 7];
        let mut b = [0.0; 7];
        for k in 0..7 {
            a[k] = order(w[0].l2[k], w[1].l2[k]);
            b[k] = order(w[0].linf[k], w[1].linf[k]);
            // identically vanishing errors carry no order information
            let negligible = w[0].l2[k] < 1e-13;
            if !negligible && !(w[1].l2[k] < w[0].l2[k]) {
                valid = false;
            }
        }
        l2_orders.push(a);
        linf_orders.push(b);
    }
    Ok(ConvergenceReport {
        levels,
        l2_orders,
        linf_orders,
        valid,
    })
}
