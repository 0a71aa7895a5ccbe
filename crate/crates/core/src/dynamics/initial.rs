//! Named initial conditions and seeded smooth perturbations.

use super::State;
use crate::fields::{BoundaryMode, Grid, ScalarField, SymTensorField, VecField};
use crate::model::ModelParams;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

#[derive(Debug, Clone, PartialEq)]
pub enum Preset {
    /// Rest state; the stress defaults to the equilibrium `kη₀𝕀`.
    Uniform {
        rho0: f64,
        eta0: f64,
        tau: Option<[f64; 3]>,
    },
    /// Density and polymer bump at the domain center, fluid at rest.
    GaussianBump {
        rho0: f64,
        eta0: f64,
        amp: f64,
        width: f64,
    },
    /// Smooth shear flow on uniform density and equilibrium stress.
    ShearLayer { rho0: f64, eta0: f64, u0: f64 },
}

/// Multiplicative perturbation of `ϱ`, `η`, `𝕋` and an additive velocity
/// perturbation, each `δ₀` times a seeded smooth pattern bounded by one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Perturbation {
    pub delta0: f64,
    pub seed: u64,
}

const MODES: usize = 3;

/// Sum of a few low Fourier modes normalized to `|p| ≤ 1`; cosine modes
/// only on physical grids so the pattern has zero normal derivative.
#[derive(Debug, Clone)]
struct Pattern {
    modes: Vec<(f64, u32, u32, f64, f64)>,
    norm: f64,
}

impl Pattern {
    fn draw(rng: &mut ChaCha8Rng, periodic: bool) -> Self {
        let modes: Vec<_> = (0..MODES)
            .map(|_| {
                let a: f64 = rng.gen_range(-1.0..1.0);
                let kx = rng.gen_range(1..=2u32);
                let ky = rng.gen_range(1..=2u32);
                let (px, py) = if periodic {
                    (rng.gen_range(0.0..2.0 * PI), rng.gen_range(0.0..2.0 * PI))
                } else {
                    (0.0, 0.0)
                };
                (a, kx, ky, px, py)
            })
            .collect();
        let norm = modes.iter().map(|m| m.0.abs()).sum::<f64>().max(1e-300);
        Self { modes, norm }
    }

    fn eval(&self, g: &Grid, x: f64, y: f64) -> f64 {
        // physical grids use half-wavelength cosines, which are even about both walls
        let base = match g.mode {
            BoundaryMode::Periodic => 2.0 * PI,
            BoundaryMode::Physical => PI,
        };
        self.modes
            .iter()
            .map(|&(a, kx, ky, px, py)| {
                a * (base * kx as f64 * x / g.lx + px).cos() * (base * ky as f64 * y / g.ly + py).cos()
            })
            .sum::<f64>()
            / self.norm
    }
}

pub fn build_initial(
    preset: &Preset,
    grid: Grid,
    prm: &ModelParams,
    perturbation: Option<Perturbation>,
) -> State {
    let mut s = match *preset {
        Preset::Uniform { rho0, eta0, tau } => {
            let t = tau.unwrap_or([prm.k * eta0, 0.0, prm.k * eta0]);
            State::uniform(grid, rho0, eta0, t)
        }
        Preset::GaussianBump {
            rho0,
            eta0,
            amp,
            width,
        } => {
            let (cx, cy) = (0.5 * grid.lx, 0.5 * grid.ly);
            let bump = move |x: f64, y: f64| (-((x - cx).powi(2) + (y - cy).powi(2)) / (width * width)).exp();
            let mut s = State::uniform(grid, rho0, eta0, [0.0; 3]);
            s.rho = ScalarField::from_fn(grid, |x, y| rho0 * (1.0 + amp * bump(x, y)));
            s.eta = ScalarField::from_fn(grid, |x, y| eta0 * (1.0 + amp * bump(x, y)));
            let k = prm.k;
            s.tau = SymTensorField::from_fn(grid, |x, y| {
                let e = k * eta0 * (1.0 + amp * bump(x, y));
                [e, 0.0, e]
            });
            s
        }
        Preset::ShearLayer { rho0, eta0, u0 } => {
            let mut s = State::uniform(grid, rho0, eta0, [prm.k * eta0, 0.0, prm.k * eta0]);
            let (lx, ly) = (grid.lx, grid.ly);
            s.mom = match grid.mode {
                BoundaryMode::Periodic => VecField::from_fn(grid, |x, y| {
                    [
                        rho0 * u0 * (2.0 * PI * y / ly).sin(),
                        rho0 * 0.25 * u0 * (2.0 * PI * x / lx).sin(),
                    ]
                }),
                BoundaryMode::Physical => VecField::from_fn(grid, |x, y| {
                    [
                        rho0 * u0 * (PI * x / lx).sin() * (2.0 * PI * y / ly).sin(),
                        -rho0 * u0 * (2.0 * PI * x / lx).sin() * (PI * y / ly).sin(),
                    ]
                }),
            };
            s
        }
    };
    if let Some(p) = perturbation {
        perturb(&mut s, p);
    }
    s.refresh_ghosts();
    s
}

/// Applies a seeded perturbation in place; ghosts must be refreshed after.
pub fn perturb(s: &mut State, p: Perturbation) {
    let g = s.grid();
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let periodic = g.mode == BoundaryMode::Periodic;
    let pats: Vec<Pattern> = (0..5).map(|_| Pattern::draw(&mut rng, periodic)).collect();
    let d = p.delta0;
    let envelope = |x: f64, y: f64| match g.mode {
        BoundaryMode::Periodic => 1.0,
        BoundaryMode::Physical => (PI * x / g.lx).sin() * (PI * y / g.ly).sin(),
    };
    let factor = |k: usize| ScalarField::from_fn(g, |x, y| 1.0 + d * pats[k].eval(&g, x, y));
    let (fr, fe, ft) = (factor(0), factor(1), factor(2));
    let scale = |a: &ScalarField, f: &ScalarField| a.zip_map(f, |v, w| v * w).expect("one grid");
    let rho_old = s.rho.clone();
    s.rho = scale(&s.rho, &fr);
    s.eta = scale(&s.eta, &fe);
    s.tau = SymTensorField {
        xx: scale(&s.tau.xx, &ft),
        xy: scale(&s.tau.xy, &ft),
        yy: scale(&s.tau.yy, &ft),
    };
    // u ← u_old + δ₀p, so ϱu ← (ϱ_new/ϱ_old)·ϱu_old + ϱ_new·δ₀p
    let mom = |c: usize, old: &ScalarField| {
        ScalarField::from_cells(g, |i, j| {
            let (x, y) = (g.x(i), g.y(j));
            let k = g.idx(i, j);
            let r = s.rho.data[k];
            old.data[k] * r / rho_old.data[k] + r * d * envelope(x, y) * pats[3 + c].eval(&g, x, y)
        })
    };
    s.mom = VecField {
        x: mom(0, &s.mom.x),
        y: mom(1, &s.mom.y),
    };
}
