//! Relative entropies between a candidate and a reference solution, both
//! forms of the remainder, and the trajectory-level weak-strong checks.
//!
//! Every integral uses the midpoint rule of [`crate::fields::integrate`];
//! gradients are the central stencils of the simulator, and `∇η^½` is taken
//! from the square-rooted field.

mod experiment;

pub use experiment::{
    block_average, convergence_case, entropy_inequality_residual, gronwall_cases, relative_entropy_reports,
    residual_cases, stress_distance_balance, weak_strong_experiment, CaseReport, ConvergenceCase, GronwallCase,
    RefDerivs, RelEntropyReport, RemainderForm, WeakStrongConfig, WeakStrongReport,
};

use crate::dynamics::{Forcing, Kinematics, State};
use crate::fields::{
    div_tensor, div_vector, grad_scalar, gradient_energy, integrate, laplacian, pairwise_sum, reduce_cells,
    FieldError, ScalarField, TensorField, VecField,
};
use crate::model::ModelParams;
use rayon::prelude::*;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EntropyError {
    #[error("reference {field} must be positive, found {value:e} at cell ({i}, {j})")]
    Domain {
        field: &'static str,
        value: f64,
        i: isize,
        j: isize,
    },
    #[error("trajectories incompatible: {0}")]
    Mismatch(String),
    #[error("invalid experiment: {0}")]
    Config(String),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Run(#[from] crate::dynamics::RunError),
}

fn require_positive(s: &ScalarField, field: &'static str) -> Result<(), EntropyError> {
    let g = s.grid;
    for j in 0..g.ny as isize {
        for i in 0..g.nx as isize {
            let v = s.at(i, j);
            if !(v > 0.0) {
                return Err(EntropyError::Domain { field, value: v, i, j });
            }
        }
    }
    Ok(())
}

fn require_same_grid(a: &State, b: &State) -> Result<(), EntropyError> {
    if a.grid() != b.grid() {
        return Err(EntropyError::Mismatch("states live on different grids".into()));
    }
    Ok(())
}

/// Checks the reference hypotheses: positive density and polymer density.
pub fn check_reference(r: &State) -> Result<(), EntropyError> {
    require_positive(&r.rho, "rho")?;
    require_positive(&r.eta, "eta")
}

/// `∫½ϱ|u−ũ|² + H(ϱ) − H(ϱ̃) − H'(ϱ̃)(ϱ−ϱ̃)`
pub fn rel_entropy_e1(state: &State, r: &State, prm: &ModelParams, rho_floor: f64) -> Result<f64, EntropyError> {
    require_same_grid(state, r)?;
    require_positive(&r.rho, "rho")?;
    let g = state.grid();
    Ok(reduce_cells(g, |i, j| {
        let k = g.idx(i, j);
        let (rho, rt) = (state.rho.data[k], r.rho.data[k]);
        let wx = state.mom.x.data[k] / rho.max(rho_floor) - r.mom.x.data[k] / rt.max(rho_floor);
        let wy = state.mom.y.data[k] / rho.max(rho_floor) - r.mom.y.data[k] / rt.max(rho_floor);
        0.5 * rho * (wx * wx + wy * wy) + prm.bregman_h_raw(rho, rt)
    }) * g.cell_area())
}

/// `∫G(η) − G(η̃) − G'(η̃)(η−η̃)`
pub fn rel_entropy_e2(state: &State, r: &State, prm: &ModelParams) -> Result<f64, EntropyError> {
    require_same_grid(state, r)?;
    require_positive(&r.eta, "eta")?;
    let g = state.grid();
    Ok(reduce_cells(g, |i, j| {
        let k = g.idx(i, j);
        prm.bregman_g_raw(state.eta.data[k], r.eta.data[k])
    }) * g.cell_area())
}

/// `∫½|𝕋−𝕋̃|²`
pub fn stress_distance(state: &State, r: &State) -> Result<f64, EntropyError> {
    require_same_grid(state, r)?;
    let g = state.grid();
    Ok(reduce_cells(g, |i, j| {
        let k = g.idx(i, j);
        let a = state.tau.xx.data[k] - r.tau.xx.data[k];
        let b = state.tau.xy.data[k] - r.tau.xy.data[k];
        let c = state.tau.yy.data[k] - r.tau.yy.data[k];
        0.5 * (a * a + 2.0 * b * b + c * c)
    }) * g.cell_area())
}

/// `𝓔₁ + 𝓔₂ + ∫½|𝕋−𝕋̃|²`
pub fn combined_e(state: &State, r: &State, prm: &ModelParams, rho_floor: f64) -> Result<f64, EntropyError> {
    Ok(rel_entropy_e1(state, r, prm, rho_floor)? + rel_entropy_e2(state, r, prm)? + stress_distance(state, r)?)
}

/// The dissipation integrands of the relative entropy inequality, plus the
/// stress-diffusion term of the combined distance.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct DissipationTerms {
    /// `μ∫|∇(u−ũ)|²`
    pub visc_shear: f64,
    /// `ν∫|div(u−ũ)|²`
    pub visc_bulk: f64,
    /// `4εkL∫|∇(η^½−η̃^½)|²`
    pub poly_sqrt: f64,
    /// `2ε𝔷∫|∇(η−η̃)|²`
    pub poly_z: f64,
    /// `ε∫|∇(𝕋−𝕋̃)|²`
    pub stress: f64,
}

impl DissipationTerms {
    /// The part entering the relative entropy inequality (no stress term).
    pub fn entropy_part(&self) -> f64 {
        self.visc_shear + self.visc_bulk + self.poly_sqrt + self.poly_z
    }
}

pub fn dissipation_terms(
    state: &State,
    r: &State,
    prm: &ModelParams,
    rho_floor: f64,
) -> Result<DissipationTerms, EntropyError> {
    require_same_grid(state, r)?;
    let (ka, kb) = (Kinematics::new(state, rho_floor), Kinematics::new(r, rho_floor));
    let w = ka.u.sub(&kb.u)?;
    let div = div_vector(&w);
    let sq = |s: &ScalarField| s.map(|v| v.max(0.0).sqrt());
    let dsq = sq(&state.eta).sub(&sq(&r.eta))?;
    let dt = state.tau.sub(&r.tau)?;
    Ok(DissipationTerms {
        visc_shear: prm.mu() * (gradient_energy(&w.x) + gradient_energy(&w.y)),
        visc_bulk: prm.nu() * integrate(&div.map(|v| v * v)),
        poly_sqrt: 4.0 * prm.eps * prm.kl() * gradient_energy(&dsq),
        poly_z: 2.0 * prm.eps * prm.zfrak * gradient_energy(&state.eta.sub(&r.eta)?),
        stress: prm.eps * (gradient_energy(&dt.xx) + 2.0 * gradient_energy(&dt.xy) + gradient_energy(&dt.yy)),
    })
}

/// The five remainder integrals of the definitional form.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RemainderDef {
    pub r: [f64; 5],
}

impl RemainderDef {
    pub const NAMES: [&'static str; 5] = ["R1", "R2", "R3", "R4", "R5"];

    pub fn total(&self) -> f64 {
        self.r.iter().sum()
    }
}

/// The eight terms of the recombined remainder and the transport
/// correction `∫(η̃−η)(u−ũ)·∇G'(η̃)` that the printed recombination omits.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RemainderNew {
    pub terms: [f64; 8],
    pub correction: f64,
}

impl RemainderNew {
    pub const NAMES: [&'static str; 8] = [
        "convective",
        "viscous_density",
        "pressure_bregman",
        "polymer_pressure_bregman",
        "polymer_pressure_density",
        "stress_density",
        "sqrt_eta_diffusion",
        "stress_pairing",
    ];

    /// Sum of all eight terms and the correction; equals the definitional
    /// total whenever the reference solves the strong equations.
    pub fn total(&self) -> f64 {
        self.terms.iter().sum::<f64>() + self.correction
    }

    /// Sum of the eight terms alone.
    pub fn total_as_printed(&self) -> f64 {
        self.terms.iter().sum()
    }
}

/// Reference fields shared by both remainder forms.
struct RefFields {
    kin: Kinematics,
    /// `∇(H'(ϱ̃) + shift)`
    grad_hp: VecField,
    grad_gp: VecField,
    sqrt_eta: ScalarField,
    grad_sqrt_eta: VecField,
    grad_eta: VecField,
}

impl RefFields {
    fn new(r: &State, prm: &ModelParams, rho_floor: f64, h_shift: f64) -> Self {
        let hp = r.rho.map(|v| prm.h_prime(v) + h_shift);
        let gp = r.eta.map(|v| prm.g_prime(v));
        let sqrt_eta = r.eta.map(|v| v.sqrt());
        Self {
            kin: Kinematics::new(r, rho_floor),
            grad_hp: grad_scalar(&hp),
            grad_gp: grad_scalar(&gp),
            grad_sqrt_eta: grad_scalar(&sqrt_eta),
            sqrt_eta,
            grad_eta: grad_scalar(&r.eta),
        }
    }
}

#[inline]
fn gpair(a: &TensorField, i: isize, j: isize) -> [[f64; 2]; 2] {
    a.at(i, j)
}

#[inline]
fn v2(v: &VecField, k: usize) -> [f64; 2] {
    [v.x.data[k], v.y.data[k]]
}

#[inline]
fn dot(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

/// `𝓡₁ … 𝓡₅` with reference time derivatives supplied by `d`.
pub fn remainder_r_def(
    state: &State,
    r: &State,
    d: &RefDerivs,
    prm: &ModelParams,
    forcing: &dyn Forcing,
    rho_floor: f64,
) -> Result<RemainderDef, EntropyError> {
    r_def_impl(state, r, d, prm, forcing, rho_floor, 0.0)
}

fn r_def_impl(
    state: &State,
    r: &State,
    d: &RefDerivs,
    prm: &ModelParams,
    forcing: &dyn Forcing,
    rho_floor: f64,
    h_shift: f64,
) -> Result<RemainderDef, EntropyError> {
    require_same_grid(state, r)?;
    check_reference(r)?;
    if d.dt_u.grid() != r.grid() {
        return Err(EntropyError::Mismatch("time derivatives on a different grid".into()));
    }
    let g = state.grid();
    let area = g.cell_area();
    let rf = RefFields::new(r, prm, rho_floor, h_shift);
    let ka = Kinematics::new(state, rho_floor);
    let sqrt_eta = state.eta.map(|v| v.max(0.0).sqrt());
    let grad_sqrt = grad_scalar(&sqrt_eta);
    let grad_eta = grad_scalar(&state.eta);
    let (mu, nu, t) = (prm.mu(), prm.nu(), state.t);

    let r1 = reduce_cells(g, |i, j| {
        let k = g.idx(i, j);
        let (u, ut) = (v2(&ka.u, k), v2(&rf.kin.u, k));
        let (ga, gt) = (gpair(&ka.grad_u, i, j), gpair(&rf.kin.grad_u, i, j));
        let w = [ut[0] - u[0], ut[1] - u[1]];
        let rho = state.rho.data[k];
        let rt = r.rho.data[k];
        let dtu = v2(&d.dt_u, k);
        let conv = [
            dtu[0] + u[0] * gt[0][0] + u[1] * gt[0][1],
            dtu[1] + u[0] * gt[1][0] + u[1] * gt[1][1],
        ];
        let mut s = rho * dot(conv, w);
        let mut visc = 0.0;
        for a in 0..2 {
            for b in 0..2 {
                visc += gt[a][b] * (gt[a][b] - ga[a][b]);
            }
        }
        let (divt, diva) = (gt[0][0] + gt[1][1], ga[0][0] + ga[1][1]);
        s += mu * visc + nu * divt * (divt - diva);
        let f = forcing.body_force(g.x(i), g.y(j), t);
        s -= rho * dot(f, w);
        let flux = [rt * ut[0] - rho * u[0], rt * ut[1] - rho * u[1]];
        s += (rt - rho) * d.dt_hp.data[k] + dot(flux, v2(&rf.grad_hp, k));
        s + divt * (prm.p(rt) - prm.p(rho))
    }) * area;

    let r2 = reduce_cells(g, |i, j| {
        let k = g.idx(i, j);
        let (u, ut) = (v2(&ka.u, k), v2(&rf.kin.u, k));
        let (e, et) = (state.eta.data[k], r.eta.data[k]);
        let gt = gpair(&rf.kin.grad_u, i, j);
        let flux = [et * ut[0] - e * u[0], et * ut[1] - e * u[1]];
        (et - e) * d.dt_gp.data[k] + dot(flux, v2(&rf.grad_gp, k)) + (gt[0][0] + gt[1][1]) * (prm.q(et) - prm.q(e))
    }) * area;

    let r3 = -4.0 * prm.eps * prm.kl()
        * reduce_cells(g, |i, j| {
            let k = g.idx(i, j);
            let (gs, gst) = (v2(&grad_sqrt, k), v2(&rf.grad_sqrt_eta, k));
            let ratio = sqrt_eta.data[k] / rf.sqrt_eta.data[k];
            dot(gst, [gs[0] - gst[0], gs[1] - gst[1]]) + dot(gs, gst) * (1.0 - ratio)
        })
        * area;

    let r4 = -2.0 * prm.eps * prm.zfrak
        * reduce_cells(g, |i, j| {
            let k = g.idx(i, j);
            let (ge, get) = (v2(&grad_eta, k), v2(&rf.grad_eta, k));
            dot(get, [ge[0] - get[0], ge[1] - get[1]])
        })
        * area;

    let r5 = reduce_cells(g, |i, j| {
        let k = g.idx(i, j);
        let (ga, gt) = (gpair(&ka.grad_u, i, j), gpair(&rf.kin.grad_u, i, j));
        let (p, q, s) = (state.tau.xx.data[k], state.tau.xy.data[k], state.tau.yy.data[k]);
        p * (gt[0][0] - ga[0][0]) + q * (gt[0][1] - ga[0][1] + gt[1][0] - ga[1][0]) + s * (gt[1][1] - ga[1][1])
    }) * area;

    Ok(RemainderDef {
        r: [r1, r2, r3, r4, r5],
    })
}

/// The time-derivative-free remainder, valid when the reference solves the
/// strong continuity, momentum and polymer equations.
pub fn remainder_r_new(
    state: &State,
    r: &State,
    prm: &ModelParams,
    rho_floor: f64,
) -> Result<RemainderNew, EntropyError> {
    require_same_grid(state, r)?;
    check_reference(r)?;
    let g = state.grid();
    let area = g.cell_area();
    let rf = RefFields::new(r, prm, rho_floor, 0.0);
    let ka = Kinematics::new(state, rho_floor);
    let ut = &rf.kin.u;
    let lap = [laplacian(&ut.x), laplacian(&ut.y)];
    let grad_div = grad_scalar(&div_vector(ut));
    let grad_q = grad_scalar(&r.eta.map(|v| prm.q(v)));
    let div_tt = div_tensor(&r.tau);
    let lap_eta = laplacian(&r.eta);
    let sqrt_eta = state.eta.map(|v| v.max(0.0).sqrt());
    let ds = rf.sqrt_eta.sub(&sqrt_eta)?;
    let grad_ds = grad_scalar(&ds);
    let (mu, nu, kl, eps) = (prm.mu(), prm.nu(), prm.kl(), prm.eps);

    // per cell: w = ũ − u
    let cell = |i: isize, j: isize| -> [f64; 9] {
        let k = g.idx(i, j);
        let (u, uu) = (v2(&ka.u, k), v2(ut, k));
        let w = [uu[0] - u[0], uu[1] - u[1]];
        let gt = gpair(&rf.kin.grad_u, i, j);
        let ga = gpair(&ka.grad_u, i, j);
        let (rho, rt) = (state.rho.data[k], r.rho.data[k]);
        let (e, et) = (state.eta.data[k], r.eta.data[k]);
        let divt = gt[0][0] + gt[1][1];
        // (u−ũ)·∇ũ·(ũ−u) = −wᵀ(∇ũ)w with rows of ∇ũ indexed by component
        let n1 = -rho * (w[0] * (gt[0][0] * w[0] + gt[0][1] * w[1]) + w[1] * (gt[1][0] * w[0] + gt[1][1] * w[1]));
        let visc = [
            mu * lap[0].data[k] + nu * grad_div.x.data[k],
            mu * lap[1].data[k] + nu * grad_div.y.data[k],
        ];
        let n2 = (rho - rt) / rt * dot(visc, w);
        let n3 = divt * (prm.p(rt) - prm.p(rho) - prm.p_prime(rt) * (rt - rho));
        let n4 = divt * (prm.q(et) - prm.q(e) - prm.q_prime(et) * (et - e));
        let n5 = (rt - rho) / rt * dot(v2(&grad_q, k), w);
        let n6 = (rho - rt) / rt * dot(v2(&div_tt, k), w);
        let (st, dsk) = (rf.sqrt_eta.data[k], ds.data[k]);
        let n7 = eps
            * kl
            * (4.0 / st * dsk * dot(v2(&rf.grad_sqrt_eta, k), v2(&grad_ds, k)) - lap_eta.data[k] / et * dsk * dsk);
        let dt = [
            state.tau.xx.data[k] - r.tau.xx.data[k],
            state.tau.xy.data[k] - r.tau.xy.data[k],
            state.tau.yy.data[k] - r.tau.yy.data[k],
        ];
        let n8 = dt[0] * (gt[0][0] - ga[0][0])
            + dt[1] * (gt[0][1] - ga[0][1] + gt[1][0] - ga[1][0])
            + dt[2] * (gt[1][1] - ga[1][1]);
        let corr = -(et - e) * dot(w, v2(&rf.grad_gp, k));
        [n1, n2, n3, n4, n5, n6, n7, n8, corr]
    };
    let vals: Vec<[f64; 9]> = (0..g.cells())
        .into_par_iter()
        .map(|c| cell((c % g.nx) as isize, (c / g.nx) as isize))
        .collect();
    let mut out = [0.0; 9];
    let mut col = vec![0.0; vals.len()];
    for (c, o) in out.iter_mut().enumerate() {
        for (dst, v) in col.iter_mut().zip(&vals) {
            *dst = v[c];
        }
        *o = pairwise_sum(&col) * area;
    }
    let mut terms = [0.0; 8];
    terms.copy_from_slice(&out[..8]);
    Ok(RemainderNew {
        terms,
        correction: out[8],
    })
}

#[cfg(test)]
mod tests;
