//! Semi-discrete right-hand sides of the four balance laws.
//!
//! Advection uses MUSCL fluxes; pressure, viscous, elastic and diffusive
//! terms use central stencils. Every function expects ghost layers filled.

use super::{Forcing, Kinematics, Rhs, State};
use crate::fields::{
    advective_divergence, div_tensor, div_tensor_vec, div_vector, grad_scalar, laplacian,
    upper_convected_source, FieldError, ScalarField, SymTensorField, VecField,
};
use crate::model::ModelParams;

/// `−div(ϱu)`.
pub fn continuity_rhs(state: &State, kin: &Kinematics) -> Result<ScalarField, FieldError> {
    Ok(advective_divergence(&state.rho, &kin.u)?.scaled(-1.0))
}

/// `−div(ϱu⊗u) − ∇p + μΔu + ν∇div u + div 𝕋 − ∇q + ϱf`.
pub fn momentum_rhs(
    state: &State,
    kin: &Kinematics,
    f: &VecField,
    prm: &ModelParams,
) -> Result<VecField, FieldError> {
    let g = state.grid();
    let adv_x = advective_divergence(&state.mom.x, &kin.u)?;
    let adv_y = advective_divergence(&state.mom.y, &kin.u)?;
    // p and q enter only through their gradients, so their sum suffices
    let pq = state
        .rho
        .zip_map(&state.eta, |r, e| prm.p(r) + prm.q(e))?;
    let grad_pq = grad_scalar(&pq);
    let lap_x = laplacian(&kin.u.x);
    let lap_y = laplacian(&kin.u.y);
    let grad_div = grad_scalar(&div_vector(&kin.u));
    let div_t = div_tensor(&state.tau);
    let (mu, nu) = (prm.mu(), prm.nu());
    let comp = |adv: &ScalarField,
                gpq: &ScalarField,
                lap: &ScalarField,
                gd: &ScalarField,
                dt: &ScalarField,
                fc: &ScalarField| {
        ScalarField::from_cells(g, |i, j| {
            let k = g.idx(i, j);
            -adv.data[k] - gpq.data[k] + mu * lap.data[k] + nu * gd.data[k] + dt.data[k]
                + state.rho.data[k] * fc.data[k]
        })
    };
    Ok(VecField {
        x: comp(&adv_x, &grad_pq.x, &lap_x, &grad_div.x, &div_t.x, &f.x),
        y: comp(&adv_y, &grad_pq.y, &lap_y, &grad_div.y, &div_t.y, &f.y),
    })
}

/// `−div(ηu) + εΔη`.
pub fn eta_rhs(
    state: &State,
    kin: &Kinematics,
    prm: &ModelParams,
) -> Result<ScalarField, FieldError> {
    let adv = advective_divergence(&state.eta, &kin.u)?;
    let lap = laplacian(&state.eta);
    adv.zip_map(&lap, |a, l| -a + prm.eps * l)
}

/// `−Div(u𝕋) + (∇u𝕋 + 𝕋∇uᵀ) + εΔ𝕋 + (k/2λ)η𝕀 − 𝕋/2λ`.
pub fn stress_rhs(
    state: &State,
    kin: &Kinematics,
    prm: &ModelParams,
) -> Result<SymTensorField, FieldError> {
    let g = state.grid();
    let adv = div_tensor_vec(&kin.u, &state.tau)?;
    let uc = upper_convected_source(&kin.grad_u, &state.tau)?;
    let inv = 1.0 / (2.0 * prm.lambda);
    let (eps, k) = (prm.eps, prm.k);
    let eta = &state.eta;
    let plane = |a: &ScalarField, u: &ScalarField, t: &ScalarField, diag: bool| {
        let lap = laplacian(t);
        ScalarField::from_cells(g, |i, j| {
            let c = g.idx(i, j);
            // (kη − T)/2λ on the diagonal keeps the equilibrium exact
            let relax = if diag {
                (k * eta.data[c] - t.data[c]) * inv
            } else {
                -t.data[c] * inv
            };
            -a.data[c] + u.data[c] + eps * lap.data[c] + relax
        })
    };
    Ok(SymTensorField {
        xx: plane(&adv.xx, &uc.xx, &state.tau.xx, true),
        xy: plane(&adv.xy, &uc.xy, &state.tau.xy, false),
        yy: plane(&adv.yy, &uc.yy, &state.tau.yy, true),
    })
}

/// Body force sampled at cell centers.
pub fn sample_force(state: &State, forcing: &dyn Forcing) -> VecField {
    let g = state.grid();
    if forcing.is_zero() {
        return VecField::zeros(g);
    }
    let t = state.t;
    VecField {
        x: ScalarField::from_fn(g, |x, y| forcing.body_force(x, y, t)[0]),
        y: ScalarField::from_fn(g, |x, y| forcing.body_force(x, y, t)[1]),
    }
}

/// All four right-hand sides plus any additive sources.
pub fn full_rhs(
    state: &State,
    prm: &ModelParams,
    forcing: &dyn Forcing,
    rho_floor: f64,
) -> Result<Rhs, FieldError> {
    let kin = Kinematics::new(state, rho_floor);
    let f = sample_force(state, forcing);
    let mut rhs = Rhs {
        rho: continuity_rhs(state, &kin)?,
        mom: momentum_rhs(state, &kin, &f, prm)?,
        eta: eta_rhs(state, &kin, prm)?,
        tau: stress_rhs(state, &kin, prm)?,
    };
    if forcing.has_sources() {
        add_sources(&mut rhs, state, forcing);
    }
    Ok(rhs)
}

fn add_sources(rhs: &mut Rhs, state: &State, forcing: &dyn Forcing) {
    let g = state.grid();
    let t = state.t;
    for j in 0..g.ny as isize {
        for i in 0..g.nx as isize {
            if let Some(s) = forcing.sources(g.x(i), g.y(j), t) {
                let k = g.idx(i, j);
                rhs.rho.data[k] += s.rho;
                rhs.mom.x.data[k] += s.mom[0];
                rhs.mom.y.data[k] += s.mom[1];
                rhs.eta.data[k] += s.eta;
                rhs.tau.xx.data[k] += s.tau[0];
                rhs.tau.xy.data[k] += s.tau[1];
                rhs.tau.yy.data[k] += s.tau[2];
            }
        }
    }
}
