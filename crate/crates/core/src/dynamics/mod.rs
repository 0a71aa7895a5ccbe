//! Semi-discrete balance laws on a collocated grid,
//! two-stage explicit time stepping and trajectory recording.

mod forcing;
mod initial;
mod integrator;
mod rhs;
mod run;
mod state;

pub use forcing::{CentralForce, ConstantForce, Forcing, NoForcing, PointSources};
pub use initial::{build_initial, perturb, Perturbation, Preset};
pub use integrator::{cfl_dt, step_ssprk2, StepLog, StepOptions};
pub use rhs::{continuity_rhs, eta_rhs, full_rhs, momentum_rhs, sample_force, stress_rhs};
pub use run::{run, Accumulators, RunError, RunSetup, Snapshot, TimeControl, Trajectory};
pub use state::{Kinematics, Rhs, State};
