//! Wall boundary conditions by ghost-cell reflection.

use super::{BoundaryMode, FieldError, Parity};
use crate::dynamics::State;

/// Fills ghost layers for a wall-bounded state: velocity (through momentum)
/// reflects oddly so its face value vanishes, while ϱ, η and every stress
/// plane reflect evenly (zero normal derivative).
pub fn apply_bcs(state: &mut State) -> Result<(), FieldError> {
    if state.grid().mode != BoundaryMode::Physical {
        return Err(FieldError::WrongMode { op: "apply_bcs" });
    }
    fill_state(state);
    Ok(())
}

pub(crate) fn fill_state(state: &mut State) {
    state.rho.fill_ghosts(Parity::Even);
    state.mom.fill_ghosts(Parity::Odd);
    state.eta.fill_ghosts(Parity::Even);
    state.tau.fill_ghosts(Parity::Even);
}
