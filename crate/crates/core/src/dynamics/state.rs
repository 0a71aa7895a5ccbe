use crate::fields::{
    self, grad_vector, BoundaryMode, FieldError, Grid, Parity, ScalarField, SymTensorField,
    TensorField, VecField,
};
use rayon::prelude::*;

/// Conservative unknowns `(ϱ, ϱu, η, 𝕋)` at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub t: f64,
    pub rho: ScalarField,
    pub mom: VecField,
    pub eta: ScalarField,
    pub tau: SymTensorField,
}

/// Time derivative of every evolved plane; interior samples only.
#[derive(Debug, Clone)]
pub struct Rhs {
    pub rho: ScalarField,
    pub mom: VecField,
    pub eta: ScalarField,
    pub tau: SymTensorField,
}

impl State {
    /// Spatially uniform state at rest, ghosts filled.
    pub fn uniform(grid: Grid, rho: f64, eta: f64, tau: [f64; 3]) -> Self {
        let mut s = Self {
            t: 0.0,
            rho: ScalarField::constant(grid, rho),
            mom: VecField::zeros(grid),
            eta: ScalarField::constant(grid, eta),
            tau: SymTensorField {
                xx: ScalarField::constant(grid, tau[0]),
                xy: ScalarField::constant(grid, tau[1]),
                yy: ScalarField::constant(grid, tau[2]),
            },
        };
        s.refresh_ghosts();
        s
    }

    pub fn grid(&self) -> Grid {
        self.rho.grid
    }

    pub fn planes(&self) -> [&ScalarField; 7] {
        [
            &self.rho,
            &self.mom.x,
            &self.mom.y,
            &self.eta,
            &self.tau.xx,
            &self.tau.xy,
            &self.tau.yy,
        ]
    }

    pub(crate) fn planes_mut(&mut self) -> [&mut ScalarField; 7] {
        [
            &mut self.rho,
            &mut self.mom.x,
            &mut self.mom.y,
            &mut self.eta,
            &mut self.tau.xx,
            &mut self.tau.xy,
            &mut self.tau.yy,
        ]
    }

    pub const PLANE_NAMES: [&'static str; 7] = ["rho", "mom_x", "mom_y", "eta", "tau11", "tau12", "tau22"];

    /// Wall reflections in physical mode, wrap-around copies otherwise.
    pub fn refresh_ghosts(&mut self) {
        match self.grid().mode {
            BoundaryMode::Physical => fields::bc::fill_state(self),
            BoundaryMode::Periodic => {
                for p in self.planes_mut() {
                    p.fill_ghosts(Parity::Even);
                }
            }
        }
    }

    /// First non-finite interior sample, named by plane.
    pub fn check_finite(&self) -> Result<(), FieldError> {
        for (p, name) in self.planes().into_iter().zip(Self::PLANE_NAMES) {
            p.check_finite(name)?;
        }
        Ok(())
    }

    /// `self + h·rhs` over every stored sample; ghosts must be refreshed after.
    pub fn add_scaled(&self, h: f64, rhs: &Rhs) -> State {
        let mut out = self.clone();
        let src = [
            &rhs.rho,
            &rhs.mom.x,
            &rhs.mom.y,
            &rhs.eta,
            &rhs.tau.xx,
            &rhs.tau.xy,
            &rhs.tau.yy,
        ];
        for (dst, r) in out.planes_mut().into_iter().zip(src) {
            dst.data
                .par_iter_mut()
                .zip(r.data.par_iter())
                .for_each(|(d, &r)| *d += h * r);
        }
        out.t = self.t + h;
        out
    }

    /// `½(self + other)` sample by sample.
    pub fn average(&self, other: &State) -> State {
        let mut out = self.clone();
        for (dst, o) in out.planes_mut().into_iter().zip(other.planes()) {
            dst.data
                .par_iter_mut()
                .zip(o.data.par_iter())
                .for_each(|(d, &b)| *d = 0.5 * *d + 0.5 * b);
        }
        out.t = 0.5 * (self.t + other.t);
        out
    }

    /// Largest pointwise difference over all interior planes, relative to
    /// the largest magnitude in `self`.
    pub fn max_rel_drift(&self, other: &State) -> f64 {
        let mut diff = 0.0f64;
        let mut scale = 0.0f64;
        for (a, b) in self.planes().into_iter().zip(other.planes()) {
            for (x, y) in a.interior().zip(b.interior()) {
                diff = diff.max((x - y).abs());
                scale = scale.max(x.abs());
            }
        }
        diff / scale.max(f64::MIN_POSITIVE)
    }
}

/// Velocity and its gradient, derived from a state with filled ghosts.
#[derive(Debug, Clone)]
pub struct Kinematics {
    /// `ϱu / max(ϱ, floor)` at every stored sample, so ghost parity is
    /// inherited from momentum.
    pub u: VecField,
    pub grad_u: TensorField,
}

impl Kinematics {
    pub fn new(state: &State, rho_floor: f64) -> Self {
        let div = |m: &ScalarField| {
            m.zip_map(&state.rho, |m, r| m / r.max(rho_floor))
                .expect("state planes share one grid")
        };
        let u = VecField {
            x: div(&state.mom.x),
            y: div(&state.mom.y),
        };
        let grad_u = grad_vector(&u);
        Self { u, grad_u }
    }
}
