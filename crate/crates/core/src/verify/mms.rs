use super::jet::Jet;
use crate::dynamics::{Forcing, PointSources, State};
use crate::fields::{Grid, ScalarField, SymTensorField, VecField};
use crate::model::ModelParams;
use std::f64::consts::PI;
use std::fmt::Debug;
use std::sync::Arc;

/// Primitive fields of a manufactured solution at one point, as jets.
#[derive(Debug, Clone, Copy)]
pub struct MsPoint {
    pub rho: Jet,
    pub u: [Jet; 2],
    pub eta: Jet,
    /// `[T11, T12, T22]`
    pub tau: [Jet; 3],
}

/// Closed-form `(ϱ*, u*, η*, 𝕋*)` with exact derivatives.
pub trait ManufacturedSolution: Debug + Send + Sync {
    fn name(&self) -> &'static str;

    fn eval(&self, x: f64, y: f64, t: f64) -> MsPoint;

    fn eval_values(&self, x: f64, y: f64, t: f64) -> [f64; 7] {
        let p = self.eval(x, y, t);
        [
            p.rho.v,
            p.rho.v * p.u[0].v,
            p.rho.v * p.u[1].v,
            p.eta.v,
            p.tau[0].v,
            p.tau[1].v,
            p.tau[2].v,
        ]
    }
}

fn vars(x: f64, y: f64, t: f64) -> (Jet, Jet, Jet) {
    (Jet::var_x(x), Jet::var_y(y), Jet::var_t(t))
}

/// Per-equation residuals of the manufactured fields: the sources that make
/// them an exact solution of the forced system.
pub fn mms_forcing(ms: &dyn ManufacturedSolution, prm: &ModelParams, x: f64, y: f64, t: f64) -> PointSources {
    let p = ms.eval(x, y, t);
    let [ux, uy] = p.u;
    let rho = p.rho;
    let m = [rho * ux, rho * uy];
    let f_rho = rho.t + m[0].x + m[1].y;

    let pq = rho.powf(prm.gamma) * prm.a + p.eta * prm.kl() + p.eta * p.eta * prm.zfrak;
    let divu = [ux.xx + uy.xy, ux.xy + uy.yy];
    let [t11, t12, t22] = p.tau;
    let div_t = [t11.x + t12.y, t12.x + t22.y];
    let (mu, nu) = (prm.mu(), prm.nu());
    let mut f_m = [0.0; 2];
    for c in 0..2 {
        let adv = (m[c] * ux).x + (m[c] * uy).y;
        let grad_pq = pq.grad()[c];
        f_m[c] = m[c].t + adv + grad_pq - mu * p.u[c].lap() - nu * divu[c] - div_t[c];
    }

    let eta = p.eta;
    let f_eta = eta.t + (eta * ux).x + (eta * uy).y - prm.eps * eta.lap();

    // gu[i][j] = ∂_j u_i
    let gu = [[ux.x, ux.y], [uy.x, uy.y]];
    let tm = [[t11.v, t12.v], [t12.v, t22.v]];
    let uc = |i: usize, j: usize| -> f64 {
        (0..2).map(|k| gu[i][k] * tm[k][j] + tm[i][k] * gu[j][k]).sum()
    };
    let inv = 1.0 / (2.0 * prm.lambda);
    let plane = |tj: Jet, i: usize, j: usize| -> f64 {
        let adv = (ux * tj).x + (uy * tj).y;
        let relax = if i == j {
            (tj.v - prm.k * eta.v) * inv
        } else {
            tj.v * inv
        };
        tj.t + adv - uc(i, j) - prm.eps * tj.lap() + relax
    };
    PointSources {
        rho: f_rho,
        mom: f_m,
        eta: f_eta,
        tau: [plane(t11, 0, 0), plane(t12, 0, 1), plane(t22, 1, 1)],
    }
}

/// Samples a manufactured solution at cell centers, ghosts filled.
pub fn sample_state(ms: &dyn ManufacturedSolution, grid: Grid, t: f64) -> State {
    let planes: Vec<ScalarField> = (0..7)
        .map(|k| ScalarField::from_fn(grid, |x, y| ms.eval_values(x, y, t)[k]))
        .collect();
    let mut it = planes.into_iter();
    let mut next = || it.next().expect("seven planes");
    let mut s = State {
        t,
        rho: next(),
        mom: VecField {
            x: next(),
            y: next(),
        },
        eta: next(),
        tau: SymTensorField {
            xx: next(),
            xy: next(),
            yy: next(),
        },
    };
    s.refresh_ghosts();
    s
}

/// Uniform relaxation equilibrium `(ϱ₀, 0, η₀, kη₀𝕀)`.
#[derive(Debug, Clone, Copy)]
pub struct UniformMs {
    pub rho: f64,
    pub eta: f64,
    pub k: f64,
}

impl ManufacturedSolution for UniformMs {
    fn name(&self) -> &'static str {
        "uniform"
    }

    fn eval(&self, _: f64, _: f64, _: f64) -> MsPoint {
        let kt = Jet::constant(self.k * self.eta);
        MsPoint {
            rho: Jet::constant(self.rho),
            u: [Jet::constant(0.0); 2],
            eta: Jet::constant(self.eta),
            tau: [kt, Jet::constant(0.0), kt],
        }
    }
}

/// Smooth time-dependent solution exercising every coupling. Velocities
/// carry `sin` factors vanishing on the walls and the other fields `cos`
/// factors with zero normal derivative, so it is usable in both modes.
#[derive(Debug, Clone, Copy)]
pub struct CoupledMs {
    pub lx: f64,
    pub ly: f64,
}

impl Default for CoupledMs {
    fn default() -> Self {
        Self { lx: 1.0, ly: 1.0 }
    }
}

impl ManufacturedSolution for CoupledMs {
    fn name(&self) -> &'static str {
        "coupled"
    }

    fn eval(&self, x: f64, y: f64, t: f64) -> MsPoint {
        let (x, y, t) = vars(x, y, t);
        let ax = x * (2.0 * PI / self.lx);
        let ay = y * (2.0 * PI / self.ly);
        let (cx, cy, sx, sy) = (ax.cos(), ay.cos(), ax.sin(), ay.sin());
        let (c2x, c2y, s2y) = ((ax * 2.0).cos(), (ay * 2.0).cos(), (ay * 2.0).sin());
        let rho = 1.0 + 0.2 * cx * cy * (1.0 + 0.5 * (t * 2.0).sin());
        let ux = 0.3 * sx * sy * (t.cos() * 0.5 + 1.0);
        let uy = -0.2 * sx * s2y * (1.0 - 0.3 * (t * 3.0).sin());
        let eta = 1.0 + 0.3 * cx * c2y * (1.0 - 0.3 * t.sin());
        let t11 = 1.0 + 0.2 * cx * cy * (-t).exp();
        let t12 = 0.1 * cx * cy * (1.0 + 0.5 * t.sin());
        let t22 = 1.2 + 0.15 * c2x * cy * (1.0 + 0.4 * t.cos());
        MsPoint {
            rho,
            u: [ux, uy],
            eta,
            tau: [t11, t12, t22],
        }
    }
}

/// Pure diffusion of η from a cosine mode: `u* = 0`, `ϱ* = 1`,
/// `η* = 1 + A e^{−|κ|²εt} cos(κx x) cos(κy y)`, `𝕋* = kη*𝕀`.
#[derive(Debug, Clone, Copy)]
pub struct HeatMs {
    pub eps: f64,
    pub k: f64,
    pub amp: f64,
    pub lx: f64,
    pub ly: f64,
}

impl HeatMs {
    pub fn new(prm: &ModelParams) -> Self {
        Self {
            eps: prm.eps,
            k: prm.k,
            amp: 0.3,
            lx: 1.0,
            ly: 1.0,
        }
    }
}

impl ManufacturedSolution for HeatMs {
    fn name(&self) -> &'static str {
        "heat"
    }

    fn eval(&self, x: f64, y: f64, t: f64) -> MsPoint {
        let (x, y, t) = vars(x, y, t);
        let (kx, ky) = (2.0 * PI / self.lx, 2.0 * PI / self.ly);
        let decay = (t * (-(kx * kx + ky * ky) * self.eps)).exp();
        let eta = 1.0 + self.amp * decay * (x * kx).cos() * (y * ky).cos();
        let kt = eta * self.k;
        MsPoint {
            rho: Jet::constant(1.0),
            u: [Jet::constant(0.0); 2],
            eta,
            tau: [kt, Jet::constant(0.0), kt],
        }
    }
}

/// One-dimensional steady profile translating at speed `c`:
/// `N = n0 + n1 cos κs`, `U = (J + εN')/N`, `R = m/U` with `s = x − ct`.
#[derive(Debug, Clone, Copy)]
pub struct Profile1d {
    pub c: f64,
    pub n0: f64,
    pub n1: f64,
    pub kappa: f64,
    pub j: f64,
    pub m: f64,
}

impl Profile1d {
    /// `(R, U + c, N)` at the moving coordinate `s`.
    fn eval(&self, s: Jet, eps: f64) -> (Jet, Jet, Jet) {
        let arg = s * self.kappa;
        let n = self.n0 + self.n1 * arg.cos();
        let np = -self.n1 * self.kappa * arg.sin();
        let u = (np * eps + self.j) / n;
        let r = self.m * u.recip();
        (r, u + self.c, n)
    }
}

/// Product of two translating profiles. Continuity and the η equation hold
/// exactly without sources; the momentum residual is supplied as a body
/// force and 𝕋̃ is an arbitrary positive closed form with its own source.
/// Periodic domains only: the velocity does not vanish on walls.
#[derive(Debug, Clone, Copy)]
pub struct MovingProfileMs {
    pub eps: f64,
    pub k: f64,
    pub px: Profile1d,
    pub py: Profile1d,
}

impl MovingProfileMs {
    pub fn new(prm: &ModelParams, lx: f64, ly: f64) -> Self {
        Self {
            eps: prm.eps,
            k: prm.k,
            px: Profile1d {
                c: 0.4,
                n0: 1.0,
                n1: 0.3,
                kappa: 2.0 * PI / lx,
                j: 1.0,
                m: 1.0,
            },
            py: Profile1d {
                c: -0.25,
                n0: 1.0,
                n1: 0.2,
                kappa: 2.0 * PI / ly,
                j: 0.8,
                m: 0.9,
            },
        }
    }
}

impl ManufacturedSolution for MovingProfileMs {
    fn name(&self) -> &'static str {
        "profile"
    }

    fn eval(&self, x: f64, y: f64, t: f64) -> MsPoint {
        let (x, y, t) = vars(x, y, t);
        let (r1, u1, n1) = self.px.eval(x - t * self.px.c, self.eps);
        let (r2, u2, n2) = self.py.eval(y - t * self.py.c, self.eps);
        let eta = n1 * n2;
        let a1 = (x - t * self.px.c) * self.px.kappa;
        let a2 = (y - t * self.py.c) * self.py.kappa;
        let kt = eta * self.k;
        MsPoint {
            rho: r1 * r2,
            u: [u1, u2],
            eta,
            tau: [kt + 0.1 * a1.cos(), 0.05 * a1.sin() * a2.sin(), kt + 0.1 * a2.cos()],
        }
    }
}

/// How the residuals of a manufactured solution enter the simulation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SourceMode {
    /// Additive sources in every equation.
    All,
    /// The momentum residual divided by `ϱ*` as a body force, additive
    /// sources in the stress equation only.
    BodyForce,
}

#[derive(Debug, Clone)]
pub struct MmsForcing {
    pub ms: Arc<dyn ManufacturedSolution>,
    pub prm: ModelParams,
    pub mode: SourceMode,
}

impl Forcing for MmsForcing {
    fn body_force(&self, x: f64, y: f64, t: f64) -> [f64; 2] {
        match self.mode {
            SourceMode::All => [0.0, 0.0],
            SourceMode::BodyForce => {
                let s = mms_forcing(self.ms.as_ref(), &self.prm, x, y, t);
                let r = self.ms.eval(x, y, t).rho.v;
                [s.mom[0] / r, s.mom[1] / r]
            }
        }
    }

    fn sources(&self, x: f64, y: f64, t: f64) -> Option<PointSources> {
        let s = mms_forcing(self.ms.as_ref(), &self.prm, x, y, t);
        Some(match self.mode {
            SourceMode::All => s,
            SourceMode::BodyForce => PointSources {
                tau: s.tau,
                ..Default::default()
            },
        })
    }

    fn has_sources(&self) -> bool {
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::BoundaryMode;

    fn prm() -> ModelParams {
        ModelParams::new(1.2, 1.4, 0.1, 0.03, 0.02, 1.0, 0.5, 0.3, 1.0).unwrap()
    }

    /// 6th-order central first and second differences of a scalar closure.
    fn d1(f: &dyn Fn(f64) -> f64, h: f64) -> f64 {
        let c = [-1.0 / 60.0, 3.0 / 20.0, -3.0 / 4.0, 0.0, 3.0 / 4.0, -3.0 / 20.0, 1.0 / 60.0];
        (0..7).map(|k| c[k] * f((k as f64 - 3.0) * h)).sum::<f64>() / h
    }

    fn d2(f: &dyn Fn(f64) -> f64, h: f64) -> f64 {
        let c = [1.0 / 90.0, -3.0 / 20.0, 3.0 / 2.0, -49.0 / 18.0, 3.0 / 2.0, -3.0 / 20.0, 1.0 / 90.0];
        (0..7).map(|k| c[k] * f((k as f64 - 3.0) * h)).sum::<f64>() / (h * h)
    }

    fn d_mixed(f: &dyn Fn(f64, f64) -> f64, h: f64) -> f64 {
        d1(&|a| d1(&|b| f(a, b), h), h)
    }

    /// Independent residuals from values only: primitives are read through
    /// `eval_values` and every derivative is a finite difference.
    fn fd_sources(ms: &dyn ManufacturedSolution, prm: &ModelParams, x: f64, y: f64, t: f64) -> [f64; 7] {
        let h1 = 2e-3;
        let h2 = 4e-3;
        let v = |x: f64, y: f64, t: f64| ms.eval_values(x, y, t);
        let u = |x: f64, y: f64, t: f64, c: usize| {
            let w = v(x, y, t);
            w[1 + c] / w[0]
        };
        let dx = |g: &dyn Fn(f64, f64, f64) -> f64| d1(&|s| g(x + s, y, t), h1);
        let dy = |g: &dyn Fn(f64, f64, f64) -> f64| d1(&|s| g(x, y + s, t), h1);
        let dt = |g: &dyn Fn(f64, f64, f64) -> f64| d1(&|s| g(x, y, t + s), h1);
        let lap = |g: &dyn Fn(f64, f64, f64) -> f64| d2(&|s| g(x + s, y, t), h2) + d2(&|s| g(x, y + s, t), h2);
        let mut out = [0.0; 7];
        out[0] = dt(&|x, y, t| v(x, y, t)[0]) + dx(&|x, y, t| v(x, y, t)[1]) + dy(&|x, y, t| v(x, y, t)[2]);
        let pq = |x: f64, y: f64, t: f64| {
            let w = v(x, y, t);
            prm.a * w[0].powf(prm.gamma) + prm.kl() * w[3] + prm.zfrak * w[3] * w[3]
        };
        let (mu, nu) = (prm.mu(), prm.nu());
        for c in 0..2 {
            let adv = dx(&|x, y, t| v(x, y, t)[1 + c] * u(x, y, t, 0))
                + dy(&|x, y, t| v(x, y, t)[1 + c] * u(x, y, t, 1));
            let gpq = if c == 0 { dx(&pq) } else { dy(&pq) };
            let lapu = lap(&|x, y, t| u(x, y, t, c));
            let graddiv = if c == 0 {
                d2(&|s| u(x + s, y, t, 0), h2) + d_mixed(&|a, b| u(x + a, y + b, t, 1), h1)
            } else {
                d_mixed(&|a, b| u(x + a, y + b, t, 0), h1) + d2(&|s| u(x, y + s, t, 1), h2)
            };
            let divt = if c == 0 {
                dx(&|x, y, t| v(x, y, t)[4]) + dy(&|x, y, t| v(x, y, t)[5])
            } else {
                dx(&|x, y, t| v(x, y, t)[5]) + dy(&|x, y, t| v(x, y, t)[6])
            };
            out[1 + c] = dt(&|x, y, t| v(x, y, t)[1 + c]) + adv + gpq - mu * lapu - nu * graddiv - divt;
        }
        out[3] = dt(&|x, y, t| v(x, y, t)[3])
            + dx(&|x, y, t| v(x, y, t)[3] * u(x, y, t, 0))
            + dy(&|x, y, t| v(x, y, t)[3] * u(x, y, t, 1))
            - prm.eps * lap(&|x, y, t| v(x, y, t)[3]);
        let g = [
            [dx(&|x, y, t| u(x, y, t, 0)), dy(&|x, y, t| u(x, y, t, 0))],
            [dx(&|x, y, t| u(x, y, t, 1)), dy(&|x, y, t| u(x, y, t, 1))],
        ];
        let w = v(x, y, t);
        let tm = [[w[4], w[5]], [w[5], w[6]]];
        for (slot, (i, j)) in [(4usize, (0usize, 0usize)), (5, (0, 1)), (6, (1, 1))] {
            let adv = dx(&|x, y, t| v(x, y, t)[slot] * u(x, y, t, 0))
                + dy(&|x, y, t| v(x, y, t)[slot] * u(x, y, t, 1));
            let mut ucv = 0.0;
            for k in 0..2 {
                ucv += g[i][k] * tm[k][j] + tm[i][k] * g[j][k];
            }
            let eq = if i == j { prm.k * w[3] } else { 0.0 };
            out[slot] = dt(&|x, y, t| v(x, y, t)[slot]) + adv - ucv - prm.eps * lap(&|x, y, t| v(x, y, t)[slot])
                + (w[slot] - eq) / (2.0 * prm.lambda);
        }
        out
    }

    fn flat(s: &PointSources) -> [f64; 7] {
        [s.rho, s.mom[0], s.mom[1], s.eta, s.tau[0], s.tau[1], s.tau[2]]
    }

    #[test]
    fn equilibrium_needs_no_sources() {
        let ms = UniformMs { rho: 1.3, eta: 0.7, k: 1.0 };
        let s = mms_forcing(&ms, &prm(), 0.3, 0.6, 1.0);
        assert_eq!(flat(&s), [0.0; 7]);
    }

    #[test]
    fn jet_sources_match_finite_differences() {
        let p = prm();
        let sols: [Box<dyn ManufacturedSolution>; 3] = [
            Box::new(CoupledMs::default()),
            Box::new(HeatMs::new(&p)),
            Box::new(MovingProfileMs::new(&p, 1.0, 1.0)),
        ];
        for ms in &sols {
            for &(x, y, t) in &[(0.13, 0.71, 0.2), (0.5, 0.05, 1.1), (0.9, 0.4, 0.0)] {
                let a = flat(&mms_forcing(ms.as_ref(), &p, x, y, t));
                let b = fd_sources(ms.as_ref(), &p, x, y, t);
                for k in 0..7 {
                    assert!((a[k] - b[k]).abs() <= 1e-9 * (1.0 + b[k].abs()), "{} {k}: {} vs {}", ms.name(), a[k], b[k]);
                }
            }
        }
    }

    #[test]
    fn profile_solves_continuity_and_eta_exactly() {
        let p = prm();
        let ms = MovingProfileMs::new(&p, 1.0, 1.0);
        for &(x, y, t) in &[(0.1, 0.2, 0.0), (0.77, 0.31, 0.9)] {
            let s = mms_forcing(&ms, &p, x, y, t);
            assert!(s.rho.abs() < 1e-13 && s.eta.abs() < 1e-13, "{s:?}");
        }
    }

    /// The coupled solution frozen at one instant.
    #[derive(Debug)]
    struct Frozen(CoupledMs, f64);

    impl ManufacturedSolution for Frozen {
        fn name(&self) -> &'static str {
            "frozen"
        }

        fn eval(&self, x: f64, y: f64, _: f64) -> MsPoint {
            let mut p = self.0.eval(x, y, self.1);
            p.rho.t = 0.0;
            p.eta.t = 0.0;
            for j in p.u.iter_mut().chain(p.tau.iter_mut()) {
                j.t = 0.0;
            }
            p
        }
    }

    #[test]
    fn steady_continuity_source_is_mass_flux_divergence() {
        let ms = Frozen(CoupledMs::default(), 0.4);
        let (x, y) = (0.3, 0.45);
        let q = ms.eval(x, y, 0.0);
        let div = (q.rho * q.u[0]).x + (q.rho * q.u[1]).y;
        assert_eq!(mms_forcing(&ms, &prm(), x, y, 7.0).rho, div);
    }

    #[test]
    fn coupled_solution_is_admissible() {
        let ms = CoupledMs::default();
        let g = Grid::unit_square(32, BoundaryMode::Physical).unwrap();
        for t in [0.0, 0.5, 1.0, 2.0] {
            let s = sample_state(&ms, g, t);
            assert!(s.rho.min_interior() > 0.5);
            assert!(s.eta.min_interior() > 0.5);
            let (e, _) = crate::diagnostics::min_eig_tau(&s);
            assert!(e > 0.0);
        }
        // velocity vanishes on walls
        for v in [0.0, 1.0] {
            let p = ms.eval(v, 0.37, 0.3);
            assert!(p.u[0].v.abs() < 1e-15 && p.u[1].v.abs() < 1e-15);
        }
    }
}
