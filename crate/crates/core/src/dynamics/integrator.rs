use super::rhs::full_rhs;
use super::{Forcing, RunError, State};
use crate::fields::FieldError;
use crate::model::ModelParams;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOptions {
    /// Lower bound imposed on ϱ after every stage.
    pub rho_floor: f64,
    /// Largest η undershoot that is clipped to zero rather than rejected.
    pub eta_tol: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StepLog {
    /// `∫ max(−η, 0)` removed by clipping, summed over both stages.
    pub clipped_eta_mass: f64,
    /// Interior cells raised to the density floor, summed over both stages.
    pub floored_cells: usize,
}

/// Explicit step size:
/// `cfl · min(h/(|u| + c_s), h²/(4 max(ε, μ/ϱ, (μ+ν)/ϱ)), 4λ)` over cells.
///
/// The last candidate keeps the relaxation term inside the stability
/// interval of the two-stage scheme when λ is small.
pub fn cfl_dt(state: &State, prm: &ModelParams, cfl: f64, rho_floor: f64) -> Result<f64, RunError> {
    let g = state.grid();
    let h = g.h();
    let (mu, nu) = (prm.mu(), prm.nu());
    let mut dt = 4.0 * prm.lambda;
    for j in 0..g.ny as isize {
        for i in 0..g.nx as isize {
            let rho = state.rho.at(i, j).max(rho_floor);
            let ux = state.mom.x.at(i, j) / rho;
            let uy = state.mom.y.at(i, j) / rho;
            let speed = (ux * ux + uy * uy).sqrt();
            let cs = (prm.gamma * prm.p(rho) / rho).sqrt();
            let diff = prm.eps.max(mu / rho).max((mu + nu) / rho);
            dt = dt.min(h / (speed + cs)).min(h * h / (4.0 * diff));
        }
    }
    let dt = cfl * dt;
    if dt > 0.0 && dt.is_finite() {
        Ok(dt)
    } else {
        Err(RunError::BadTimeStep { dt, t: state.t })
    }
}

fn finish_stage(s: &mut State, opts: &StepOptions, log: &mut StepLog) -> Result<(), RunError> {
    s.refresh_ghosts();
    s.check_finite().map_err(|e| match e {
        FieldError::NonFinite { field, i, j } => RunError::NonFinite { field, i, j, t: s.t },
        other => RunError::Field(other),
    })?;
    let g = s.grid();
    let mut floored = 0usize;
    for v in s.rho.interior() {
        if v < opts.rho_floor {
            floored += 1;
        }
    }
    log.floored_cells += floored;
    if floored > 0 {
        let f = opts.rho_floor;
        s.rho.data.iter_mut().for_each(|v| *v = v.max(f));
    }
    let mut worst = (0.0f64, 0isize, 0isize);
    let mut clipped = 0.0;
    for j in 0..g.ny as isize {
        for i in 0..g.nx as isize {
            let v = s.eta.at(i, j);
            if v < 0.0 {
                clipped -= v;
                if v < worst.0 {
                    worst = (v, i, j);
                }
            }
        }
    }
    if worst.0 < -opts.eta_tol {
        return Err(RunError::NegativeEta {
            value: worst.0,
            tol: opts.eta_tol,
            i: worst.1,
            j: worst.2,
            t: s.t,
        });
    }
    if clipped > 0.0 {
        s.eta.data.iter_mut().for_each(|v| *v = v.max(0.0));
        log.clipped_eta_mass += clipped * g.cell_area();
        log::debug!("clipped eta mass {:.3e} at t = {}", clipped * g.cell_area(), s.t);
    }
    Ok(())
}

/// Two-stage strong-stability-preserving Runge–Kutta step:
/// `U¹ = U + Δt L(U)`, `U² = ½U + ½(U¹ + Δt L(U¹))`.
pub fn step_ssprk2(
    state: &State,
    dt: f64,
    prm: &ModelParams,
    forcing: &dyn Forcing,
    opts: &StepOptions,
) -> Result<(State, StepLog), RunError> {
    let mut log = StepLog::default();
    let l0 = full_rhs(state, prm, forcing, opts.rho_floor)?;
    let mut u1 = state.add_scaled(dt, &l0);
    finish_stage(&mut u1, opts, &mut log)?;
    let l1 = full_rhs(&u1, prm, forcing, opts.rho_floor)?;
    let mut u2 = state.average(&u1.add_scaled(dt, &l1));
    u2.t = state.t + dt;
    finish_stage(&mut u2, opts, &mut log)?;
    Ok((u2, log))
}
