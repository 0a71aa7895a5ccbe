//! Manufactured solutions, convergence studies, the lemma scan and the
//! closed-form oracles used throughout the test suite.

mod convergence;
pub mod jet;
mod lemma;
mod mms;

pub use convergence::{convergence_study, ConvergenceConfig, ConvergenceReport, LevelErrors, FIELD_NAMES};
pub use lemma::{g_slack_at_double, oracle_lemma_scan, radical_inverse, LemmaCertificate, RegimeSlack};
pub use mms::{
    mms_forcing, sample_state, CoupledMs, HeatMs, ManufacturedSolution, MmsForcing, MovingProfileMs, MsPoint,
    Profile1d, SourceMode, UniformMs,
};

use crate::dynamics::RunError;
use crate::fields::FieldError;
use crate::model::ModelError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error("invalid verification request: {0}")]
    Config(String),
    #[error(transparent)]
    Run(#[from] RunError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Exact stress of the pure relaxation problem `d𝕋/dt = −𝕋/2λ`.
pub fn ode_oracle_relaxation(t0: [[f64; 2]; 2], lambda: f64, t: f64) -> [[f64; 2]; 2] {
    let f = (-t / (2.0 * lambda)).exp();
    [[t0[0][0] * f, t0[0][1] * f], [t0[1][0] * f, t0[1][1] * f]]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{run, NoForcing, RunSetup, State, TimeControl};
    use crate::fields::{BoundaryMode, Grid};
    use std::sync::Arc;

    #[test]
    fn relaxation_oracle_examples() {
        let t0 = [[2.0, 0.5], [0.5, 1.0]];
        assert_eq!(ode_oracle_relaxation(t0, 0.3, 0.0), t0);
        let half = ode_oracle_relaxation(t0, 0.3, 0.6 * 2f64.ln());
        for i in 0..2 {
            for j in 0..2 {
                assert!((half[i][j] - 0.5 * t0[i][j]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn simulator_extrapolates_to_relaxation_oracle() {
        let prm = crate::model::ModelParams::new(1.0, 1.4, 0.1, 0.0, 0.01, 1.0, 0.25, 0.0, 1.0).unwrap();
        let g = Grid::unit_square(8, BoundaryMode::Periodic).unwrap();
        let t0 = [1.5, -0.4, 0.8];
        let t_end = 0.5;
        let value = |dt: f64| {
            let s = State::uniform(g, 1.0, 0.0, t0);
            let tc = TimeControl {
                t_end,
                dt: Some(dt),
                ..Default::default()
            };
            run(&RunSetup::new(prm, s, Arc::new(NoForcing), tc)).unwrap().last().state.tau.xx.at(2, 5)
        };
        let (a, b) = (value(0.02), value(0.01));
        let rich = (4.0 * b - a) / 3.0;
        let exact = ode_oracle_relaxation([[t0[0], t0[1]], [t0[1], t0[2]]], prm.lambda, t_end)[0][0];
        assert!((rich - exact).abs() < 0.05 * (b - exact).abs(), "{a} {b} {rich} {exact}");
    }
}
