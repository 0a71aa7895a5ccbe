//! A-priori quantities evaluated along trajectories: the energy balance, the
//! trace identity, the stress L² balance, blow-up monitors, velocity moments
//! and the smallest stress eigenvalue.

use crate::dynamics::{Forcing, Kinematics, State, Trajectory};
use crate::fields::{
    advective_divergence, div_vector, gradient_energy, integrate, reduce_cells, sup_norm,
    upper_convected_point, FieldError,
};
use crate::model::{ModelParams, D};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DiagnosticsError {
    #[error("velocity moment exponent must lie in (2, 3], got {0}")]
    InvalidAlpha(f64),
    #[error("trajectory unusable: {0}")]
    Trajectory(String),
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// Instantaneous integrands of the dissipation and source accumulators.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Rates {
    pub visc: f64,
    pub poly: f64,
    pub relax: f64,
    pub src_f: f64,
    pub src_eta: f64,
}

/// Face-difference Dirichlet energies of each velocity component plus the
/// central divergence: `∫μ|∇u|² + ν|div u|²`.
pub fn viscous_rate(kin: &Kinematics, prm: &ModelParams) -> f64 {
    let div = div_vector(&kin.u);
    prm.mu() * (gradient_energy(&kin.u.x) + gradient_energy(&kin.u.y))
        + prm.nu() * integrate(&div.map(|v| v * v))
}

/// `2ε ∫ 2kL|∇η^½|² + 𝔷|∇η|²`, with `∇η^½` taken from the square-rooted field.
pub fn polymer_rate(state: &State, prm: &ModelParams) -> f64 {
    let sq = state.eta.map(|v| v.max(0.0).sqrt());
    2.0 * prm.eps * (2.0 * prm.kl() * gradient_energy(&sq) + prm.zfrak * gradient_energy(&state.eta))
}

pub fn rates(state: &State, prm: &ModelParams, forcing: &dyn Forcing, rho_floor: f64) -> Rates {
    let g = state.grid();
    let kin = Kinematics::new(state, rho_floor);
    let tr = integrate(&state.tau.xx) + integrate(&state.tau.yy);
    let src_f = if forcing.is_zero() {
        0.0
    } else {
        let t = state.t;
        reduce_cells(g, |i, j| {
            let f = forcing.body_force(g.x(i), g.y(j), t);
            let k = g.idx(i, j);
            state.rho.data[k] * (f[0] * kin.u.x.data[k] + f[1] * kin.u.y.data[k])
        }) * g.cell_area()
    };
    Rates {
        visc: viscous_rate(&kin, prm),
        poly: polymer_rate(state, prm),
        relax: tr / (4.0 * prm.lambda),
        src_f,
        src_eta: prm.k * D as f64 / (4.0 * prm.lambda) * integrate(&state.eta),
    }
}

/// The four energy components and the accumulated dissipation and sources.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct EnergyBreakdown {
    /// `∫½ϱ|u|²`
    pub kinetic: f64,
    /// `∫ a/(γ−1) ϱ^γ`
    pub pressure_pot: f64,
    /// `∫ kL(η log η + 1) + 𝔷η²`
    pub polymer_pot: f64,
    /// `∫½ tr 𝕋`
    pub stress_tr: f64,
    pub visc_diss_cum: f64,
    pub poly_diss_cum: f64,
    pub relax_cum: f64,
    pub src_f_cum: f64,
    pub src_eta_cum: f64,
}

impl EnergyBreakdown {
    pub fn energy(&self) -> f64 {
        self.kinetic + self.pressure_pot + self.polymer_pot + self.stress_tr
    }

    pub fn dissipation(&self) -> f64 {
        self.visc_diss_cum + self.poly_diss_cum + self.relax_cum
    }

    pub fn sources(&self) -> f64 {
        self.src_f_cum + self.src_eta_cum
    }
}

/// Instantaneous energy components; the accumulators are left at zero.
pub fn total_energy(state: &State, prm: &ModelParams, rho_floor: f64) -> EnergyBreakdown {
    let g = state.grid();
    let area = g.cell_area();
    let kinetic = reduce_cells(g, |i, j| {
        let k = g.idx(i, j);
        let (mx, my) = (state.mom.x.data[k], state.mom.y.data[k]);
        0.5 * (mx * mx + my * my) / state.rho.data[k].max(rho_floor)
    }) * area;
    let pressure_pot = reduce_cells(g, |i, j| prm.h(state.rho.at(i, j))) * area;
    let polymer_pot = reduce_cells(g, |i, j| prm.g(state.eta.at(i, j)) + prm.kl()) * area;
    let stress_tr = 0.5 * (integrate(&state.tau.xx) + integrate(&state.tau.yy));
    EnergyBreakdown {
        kinetic,
        pressure_pot,
        polymer_pot,
        stress_tr,
        ..Default::default()
    }
}

/// Energy components of every snapshot with its accumulators attached.
pub fn energy_series(traj: &Trajectory) -> Vec<EnergyBreakdown> {
    traj.snapshots
        .iter()
        .map(|s| {
            let mut e = total_energy(&s.state, &traj.prm, traj.rho_floor);
            e.visc_diss_cum = s.acc.visc;
            e.poly_diss_cum = s.acc.poly;
            e.relax_cum = s.acc.relax;
            e.src_f_cum = s.acc.src_f;
            e.src_eta_cum = s.acc.src_eta;
            e
        })
        .collect()
}

/// `[E(t) + dissipation(0,t)] − [E(0) + sources(0,t)]`, signed.
pub fn energy_inequality_residual(traj: &Trajectory) -> Vec<f64> {
    residual_from_series(&energy_series(traj))
}

pub fn residual_from_series(series: &[EnergyBreakdown]) -> Vec<f64> {
    let Some(first) = series.first() else {
        return Vec::new();
    };
    let e0 = first.energy();
    series
        .iter()
        .map(|e| (e.energy() + e.dissipation()) - (e0 + e.sources()))
        .collect()
}

/// Weights `(index, w)` of the three-point derivative at `ts[k]` on a
/// nonuniform mesh: centered in the interior, one-sided second order at the
/// ends. Two samples give the first-order difference; fewer give none.
pub fn derivative_weights(ts: &[f64], k: usize) -> Vec<(usize, f64)> {
    let n = ts.len();
    match n {
        0 | 1 => return Vec::new(),
        2 => {
            let h = ts[1] - ts[0];
            return vec![(0, -1.0 / h), (1, 1.0 / h)];
        }
        _ => {}
    }
    let k0 = k.saturating_sub(1).min(n - 3);
    let (x0, x1, x2) = (ts[k0], ts[k0 + 1], ts[k0 + 2]);
    let x = ts[k];
    // derivative at x of the parabola through the three nodes
    vec![
        (k0, ((x - x1) + (x - x2)) / ((x0 - x1) * (x0 - x2))),
        (k0 + 1, ((x - x0) + (x - x2)) / ((x1 - x0) * (x1 - x2))),
        (k0 + 2, ((x - x0) + (x - x1)) / ((x2 - x0) * (x2 - x1))),
    ]
}

/// Derivative of sampled values by [`derivative_weights`]; a single sample
/// gives NaN.
pub fn time_derivative(ts: &[f64], vals: &[f64]) -> Vec<f64> {
    assert_eq!(ts.len(), vals.len());
    if ts.len() == 1 {
        return vec![f64::NAN];
    }
    (0..ts.len())
        .map(|k| derivative_weights(ts, k).iter().map(|&(m, w)| w * vals[m]).sum())
        .collect()
}

/// `∫𝕋:∇u` with the discrete velocity gradient used by the stress equation.
pub fn stress_power(state: &State, kin: &Kinematics) -> f64 {
    let g = state.grid();
    reduce_cells(g, |i, j| {
        let gu = kin.grad_u.at(i, j);
        let k = g.idx(i, j);
        let (p, q, r) = (state.tau.xx.data[k], state.tau.xy.data[k], state.tau.yy.data[k]);
        p * gu[0][0] + q * (gu[0][1] + gu[1][0]) + r * gu[1][1]
    }) * g.cell_area()
}

fn require_snapshots(traj: &Trajectory) -> Result<(), DiagnosticsError> {
    if traj.snapshots.len() < 2 {
        return Err(DiagnosticsError::Trajectory(
            "time derivatives need at least two snapshots".into(),
        ));
    }
    Ok(())
}

/// `d/dt ∫½tr𝕋 + (1/4λ)∫tr𝕋 − ∫[(k/2λ)η + 𝕋:∇u]` at every snapshot.
pub fn trace_identity_residual(traj: &Trajectory) -> Result<Vec<f64>, DiagnosticsError> {
    require_snapshots(traj)?;
    let prm = &traj.prm;
    let ts = traj.times();
    let mut half_tr = Vec::new();
    let mut rest = Vec::new();
    for s in &traj.snapshots {
        let st = &s.state;
        let tr = integrate(&st.tau.xx) + integrate(&st.tau.yy);
        let kin = Kinematics::new(st, traj.rho_floor);
        half_tr.push(0.5 * tr);
        rest.push(
            tr / (4.0 * prm.lambda)
                - prm.k / (2.0 * prm.lambda) * integrate(&st.eta)
                - stress_power(st, &kin),
        );
    }
    let d = time_derivative(&ts, &half_tr);
    Ok(d.iter().zip(&rest).map(|(a, b)| a + b).collect())
}

/// Frobenius pairing `A:T` of two symmetric tensors stored as three planes.
#[inline]
fn frob(a: [f64; 3], t: [f64; 3]) -> f64 {
    a[0] * t[0] + 2.0 * a[1] * t[1] + a[2] * t[2]
}

/// Terms of the stress L² balance at one state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StressBalanceTerms {
    /// `∫½|𝕋|²`
    pub half_sq: f64,
    /// `ε∫|∇𝕋|²`
    pub diffusion: f64,
    /// `(1/2λ)∫|𝕋|²`
    pub relaxation: f64,
    /// `−∫Div(u𝕋):𝕋`
    pub advection: f64,
    /// `∫(∇u𝕋 + 𝕋∇uᵀ):𝕋`
    pub deformation: f64,
    /// `(k/2λ)∫η tr𝕋`
    pub production: f64,
}

pub fn stress_balance_terms(state: &State, prm: &ModelParams, rho_floor: f64) -> StressBalanceTerms {
    let g = state.grid();
    let kin = Kinematics::new(state, rho_floor);
    let tau = &state.tau;
    let adv = [
        advective_divergence(&tau.xx, &kin.u).expect("one grid"),
        advective_divergence(&tau.xy, &kin.u).expect("one grid"),
        advective_divergence(&tau.yy, &kin.u).expect("one grid"),
    ];
    let area = g.cell_area();
    let t_at = |k: usize| [tau.xx.data[k], tau.xy.data[k], tau.yy.data[k]];
    let sq = reduce_cells(g, |i, j| {
        let t = t_at(g.idx(i, j));
        frob(t, t)
    }) * area;
    let advection = -reduce_cells(g, |i, j| {
        let k = g.idx(i, j);
        frob([adv[0].data[k], adv[1].data[k], adv[2].data[k]], t_at(k))
    }) * area;
    let deformation = reduce_cells(g, |i, j| {
        let k = g.idx(i, j);
        let t = t_at(k);
        frob(upper_convected_point(kin.grad_u.at(i, j), t), t)
    }) * area;
    let production = prm.k / (2.0 * prm.lambda)
        * reduce_cells(g, |i, j| {
            let k = g.idx(i, j);
            state.eta.data[k] * (tau.xx.data[k] + tau.yy.data[k])
        })
        * area;
    StressBalanceTerms {
        half_sq: 0.5 * sq,
        diffusion: prm.eps
            * (gradient_energy(&tau.xx) + 2.0 * gradient_energy(&tau.xy) + gradient_energy(&tau.yy)),
        relaxation: sq / (2.0 * prm.lambda),
        advection,
        deformation,
        production,
    }
}

/// `d/dt ∫½|𝕋|² + ε∫|∇𝕋|² + (1/2λ)∫|𝕋|² − [−∫Div(u𝕋):𝕋 + ∫(∇u𝕋+𝕋∇uᵀ):𝕋 + (k/2λ)∫η tr𝕋]`.
pub fn stress_l2_balance_residual(traj: &Trajectory) -> Result<Vec<f64>, DiagnosticsError> {
    require_snapshots(traj)?;
    let terms: Vec<StressBalanceTerms> = traj
        .snapshots
        .iter()
        .map(|s| stress_balance_terms(&s.state, &traj.prm, traj.rho_floor))
        .collect();
    let halves: Vec<f64> = terms.iter().map(|t| t.half_sq).collect();
    let d = time_derivative(&traj.times(), &halves);
    Ok(d
        .iter()
        .zip(&terms)
        .map(|(dt, t)| {
            dt + t.diffusion + t.relaxation - (t.advection + t.deformation + t.production)
        })
        .collect())
}

/// Smallest eigenvalue of the symmetric 2×2 stress over all cells, with
/// its location.
pub fn min_eig_tau(state: &State) -> (f64, (isize, isize)) {
    let g = state.grid();
    let mut best = (f64::INFINITY, (0, 0));
    for j in 0..g.ny as isize {
        for i in 0..g.nx as isize {
            let (p, q, r) = (state.tau.xx.at(i, j), state.tau.xy.at(i, j), state.tau.yy.at(i, j));
            let half = 0.5 * (p - r);
            let e = 0.5 * (p + r) - (half * half + q * q).sqrt();
            if e < best.0 {
                best = (e, (i, j));
            }
        }
    }
    best
}

fn moment(state: &State, alpha: f64, rho_floor: f64) -> f64 {
    let g = state.grid();
    reduce_cells(g, |i, j| {
        let k = g.idx(i, j);
        let rho = state.rho.data[k];
        let r = rho.max(rho_floor);
        let (ux, uy) = (state.mom.x.data[k] / r, state.mom.y.data[k] / r);
        rho * (ux * ux + uy * uy).sqrt().powf(alpha)
    }) * g.cell_area()
}

/// `∫ϱ|u|^α` for `α ∈ (2, 3]`.
pub fn velocity_moment(state: &State, alpha: f64, rho_floor: f64) -> Result<f64, DiagnosticsError> {
    if !(alpha > 2.0 && alpha <= 3.0) {
        return Err(DiagnosticsError::InvalidAlpha(alpha));
    }
    Ok(moment(state, alpha, rho_floor))
}

/// Sup of the Frobenius norm of 𝕋.
fn linf_tau(state: &State) -> f64 {
    let t = &state.tau;
    let f = t.xx.zip_map(&t.yy, |a, b| a * a + b * b).expect("one grid");
    let f = f.zip_map(&t.xy, |s, q| (s + 2.0 * q * q).sqrt()).expect("one grid");
    sup_norm(&f)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonitorLimits {
    /// Absolute `sup ϱ` threshold; infinite disables the abort.
    pub rho_max: f64,
    pub alpha: f64,
    /// Stress eigenvalues below `−psd_tol` are logged.
    pub psd_tol: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlowupReport {
    pub sup_rho: f64,
    pub sup_eta: f64,
    pub sup_rho_max: f64,
    pub sup_eta_max: f64,
    /// `‖𝕋(t)‖²_∞` at the current time.
    pub linf_tau_sq: f64,
    /// `∫₀ᵗ ‖𝕋‖²_∞`, trapezoidal.
    pub l2t_linf_tau: f64,
    pub moment_alpha: f64,
    pub min_eig_tau: f64,
    pub min_eig_cell: (isize, isize),
}

/// A monitor crossing its threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Abort {
    pub monitor: &'static str,
    pub value: f64,
    pub threshold: f64,
}

impl BlowupReport {
    pub fn initial(state: &State, limits: &MonitorLimits, rho_floor: f64) -> Self {
        let sup_rho = sup_norm(&state.rho);
        let sup_eta = sup_norm(&state.eta);
        let l = linf_tau(state);
        let (min_eig_tau, min_eig_cell) = min_eig_tau(state);
        Self {
            sup_rho,
            sup_eta,
            sup_rho_max: sup_rho,
            sup_eta_max: sup_eta,
            linf_tau_sq: l * l,
            l2t_linf_tau: 0.0,
            moment_alpha: moment(state, limits.alpha, rho_floor),
            min_eig_tau,
            min_eig_cell,
        }
    }
}

/// Updates the running maxima and time integrals after a step of length
/// `dt`, and signals an abort once `sup ϱ` exceeds its threshold.
pub fn blowup_monitor(
    state: &State,
    prev: &BlowupReport,
    dt: f64,
    limits: &MonitorLimits,
    rho_floor: f64,
) -> (BlowupReport, Option<Abort>) {
    let mut r = BlowupReport::initial(state, limits, rho_floor);
    r.sup_rho_max = prev.sup_rho_max.max(r.sup_rho);
    r.sup_eta_max = prev.sup_eta_max.max(r.sup_eta);
    r.l2t_linf_tau = prev.l2t_linf_tau + 0.5 * dt * (prev.linf_tau_sq + r.linf_tau_sq);
    // warn on entry only, not on every step spent outside the cone
    if r.min_eig_tau < -limits.psd_tol && prev.min_eig_tau >= -limits.psd_tol {
        log::warn!(
            "stress lost positive semidefiniteness: min eigenvalue {:e} at cell {:?}, t = {}",
            r.min_eig_tau,
            r.min_eig_cell,
            state.t
        );
    }
    let abort = (r.sup_rho > limits.rho_max).then_some(Abort {
        monitor: "sup_rho",
        value: r.sup_rho,
        threshold: limits.rho_max,
    });
    (r, abort)
}

/// `∫ϱ` at every snapshot, for conservation checks.
pub fn mass_series(traj: &Trajectory) -> Vec<f64> {
    traj.snapshots.iter().map(|s| integrate(&s.state.rho)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{run, NoForcing, RunSetup, TimeControl};
    use crate::fields::{BoundaryMode, Grid, ScalarField, SymTensorField, VecField};
    use proptest::prelude::*;
    use std::f64::consts::PI;
    use std::sync::Arc;

    fn prm(a: f64, gamma: f64, kl: f64, z: f64) -> ModelParams {
        ModelParams::new(a, gamma, 0.2, 0.05, 0.02, 1.0, 0.5, z, kl).unwrap()
    }

    fn unit(mode: BoundaryMode, n: usize) -> Grid {
        Grid::unit_square(n, mode).unwrap()
    }

    #[test]
    fn energy_of_simple_states() {
        let p = prm(1.0, 2.0, 1.0, 0.0);
        let g = unit(BoundaryMode::Physical, 16);
        let s = State::uniform(g, 1.0, 1.0, [0.0; 3]);
        let e = total_energy(&s, &p, 1e-10);
        assert_eq!(e.kinetic, 0.0);
        assert!((e.pressure_pot - 1.0).abs() < 1e-14);
        assert!((e.polymer_pot - 1.0).abs() < 1e-14);
        assert_eq!(e.stress_tr, 0.0);
        let s0 = State::uniform(g, 1.0, 0.0, [0.0; 3]);
        assert!((total_energy(&s0, &p, 1e-10).polymer_pot - p.kl()).abs() < 1e-14);
    }

    fn random_state(seed: u64) -> State {
        let g = unit(BoundaryMode::Periodic, 24);
        let c = seed as f64 * 0.37;
        let mut s = State::uniform(g, 1.0, 1.0, [1.0, 0.0, 1.0]);
        s.rho = ScalarField::from_fn(g, |x, y| 1.0 + 0.4 * (2.0 * PI * x + c).sin() * (2.0 * PI * y).cos());
        s.mom = VecField::from_fn(g, |x, y| [(2.0 * PI * y + c).sin(), 0.3 * (2.0 * PI * x).cos()]);
        s.eta = ScalarField::from_fn(g, |x, y| 0.5 + 0.3 * (2.0 * PI * (x + y) + c).cos());
        s.tau = SymTensorField::from_fn(g, |x, y| [1.0 + 0.2 * x, 0.1 * (c + y).sin(), 1.5]);
        s.refresh_ghosts();
        s
    }

    #[test]
    fn energy_matches_naive_loop() {
        let p = prm(1.3, 1.4, 0.7, 0.2);
        for seed in 0..4 {
            let s = random_state(seed);
            let g = s.grid();
            let mut naive = [0.0f64; 4];
            for j in 0..g.ny as isize {
                for i in 0..g.nx as isize {
                    let r = s.rho.at(i, j);
                    let (mx, my) = (s.mom.x.at(i, j), s.mom.y.at(i, j));
                    let e = s.eta.at(i, j);
                    naive[0] += 0.5 * (mx * mx + my * my) / r * g.cell_area();
                    naive[1] += 1.3 / 0.4 * r.powf(1.4) * g.cell_area();
                    naive[2] += (0.7 * (e * e.ln() + 1.0) + 0.2 * e * e) * g.cell_area();
                    naive[3] += 0.5 * (s.tau.xx.at(i, j) + s.tau.yy.at(i, j)) * g.cell_area();
                }
            }
            let e = total_energy(&s, &p, 1e-10);
            for (a, b) in [e.kinetic, e.pressure_pot, e.polymer_pot, e.stress_tr].iter().zip(naive) {
                assert!((a - b).abs() <= 1e-13 * b.abs(), "{a} {b}");
            }
        }
    }

    #[test]
    fn min_eig_examples() {
        let g = unit(BoundaryMode::Periodic, 8);
        let at = |t: [f64; 3]| min_eig_tau(&State::uniform(g, 1.0, 1.0, t)).0;
        assert_eq!(at([1.0, 0.0, 1.0]), 1.0);
        assert_eq!(at([1.0, 0.0, -1.0]), -1.0);
        assert_eq!(at([2.0, 1.0, 2.0]), 1.0);
    }

    #[test]
    fn moment_examples() {
        let g = unit(BoundaryMode::Periodic, 8);
        let mut s = State::uniform(g, 1.0, 1.0, [1.0, 0.0, 1.0]);
        assert_eq!(velocity_moment(&s, 3.0, 1e-10).unwrap(), 0.0);
        s.mom = VecField::from_fn(g, |_, _| [0.0, 2.0]);
        assert!((velocity_moment(&s, 3.0, 1e-10).unwrap() - 8.0).abs() < 1e-13);
        assert!(velocity_moment(&s, 2.0, 1e-10).is_err());
        assert!(velocity_moment(&s, 3.5, 1e-10).is_err());
        let s = random_state(3);
        let mut naive = 0.0;
        for j in 0..24 {
            for i in 0..24 {
                let r = s.rho.at(i, j);
                let u = (s.mom.x.at(i, j).powi(2) + s.mom.y.at(i, j).powi(2)).sqrt() / r;
                naive += r * u.powf(2.5) / 576.0;
            }
        }
        let m = velocity_moment(&s, 2.5, 1e-10).unwrap();
        assert!((m - naive).abs() <= 1e-13 * naive);
    }

    #[test]
    fn monitor_matches_scan_and_respects_infinite_threshold() {
        let s = random_state(1);
        let limits = MonitorLimits {
            rho_max: f64::INFINITY,
            alpha: 3.0,
            psd_tol: 1e-8,
        };
        let r0 = BlowupReport::initial(&s, &limits, 1e-10);
        let (r, abort) = blowup_monitor(&s, &r0, 0.1, &limits, 1e-10);
        assert!(abort.is_none());
        let naive = s.rho.interior().fold(0.0f64, |m, v| m.max(v.abs()));
        assert_eq!(r.sup_rho, naive);
        assert_eq!(r.sup_rho, sup_norm(&s.rho));
        let tight = MonitorLimits { rho_max: 1.0, ..limits };
        let (_, abort) = blowup_monitor(&s, &r0, 0.1, &tight, 1e-10);
        assert_eq!(abort.unwrap().monitor, "sup_rho");
        let g = unit(BoundaryMode::Physical, 8);
        let u = State::uniform(g, 2.5, 0.5, [1.0, 0.0, 1.0]);
        let r = BlowupReport::initial(&u, &limits, 1e-10);
        assert_eq!((r.sup_rho, r.sup_eta), (2.5, 0.5));
    }

    #[test]
    fn derivative_formulas() {
        let ts = [0.0, 0.1, 0.25, 0.3, 0.7];
        let vals: Vec<f64> = ts.iter().map(|t| 3.0 * t * t - t + 2.0).collect();
        let d = time_derivative(&ts, &vals);
        for (t, v) in ts.iter().zip(d) {
            assert!((v - (6.0 * t - 1.0)).abs() < 1e-12);
        }
        assert_eq!(time_derivative(&[0.0, 2.0], &[1.0, 5.0]), vec![2.0, 2.0]);
        assert!(time_derivative(&[1.0], &[1.0])[0].is_nan());
    }

    fn eq_traj(mode: BoundaryMode) -> Trajectory {
        let p = prm(1.0, 1.4, 1.0, 0.1);
        let g = unit(mode, 16);
        let s = State::uniform(g, 1.1, 0.8, [0.8, 0.0, 0.8]);
        run(&RunSetup::new(
            p,
            s,
            Arc::new(NoForcing),
            TimeControl {
                t_end: 0.05,
                ..Default::default()
            },
        ))
        .unwrap()
    }

    #[test]
    fn equilibrium_residuals_vanish() {
        for mode in [BoundaryMode::Physical, BoundaryMode::Periodic] {
            let tr = eq_traj(mode);
            let e = energy_inequality_residual(&tr);
            assert_eq!(e[0], 0.0);
            assert!(e.iter().all(|v| v.abs() <= 1e-12), "{e:?}");
            let t = trace_identity_residual(&tr).unwrap();
            assert!(t.iter().all(|v| v.abs() <= 1e-12), "{t:?}");
            let s = stress_l2_balance_residual(&tr).unwrap();
            assert!(s.iter().all(|v| v.abs() <= 1e-11), "{s:?}");
        }
    }

    #[test]
    fn zero_stress_balance_vanishes() {
        let mut s = random_state(2);
        s.tau = SymTensorField::zeros(s.grid());
        let t = stress_balance_terms(&s, &prm(1.0, 1.4, 1.0, 0.0), 1e-10);
        assert_eq!(
            [t.half_sq, t.diffusion, t.relaxation, t.advection, t.deformation, t.production],
            [0.0; 6]
        );
    }

    proptest! {
        #[test]
        fn polymer_potential_nonnegative(vals in proptest::collection::vec(0.0f64..10.0, 64)) {
            let g = unit(BoundaryMode::Periodic, 8);
            let mut s = State::uniform(g, 1.0, 1.0, [0.0; 3]);
            s.eta = ScalarField::from_cells(g, |i, j| vals[(j * 8 + i) as usize]);
            let e = total_energy(&s, &prm(1.0, 1.5, 1.0, 0.0), 1e-10);
            prop_assert!(e.polymer_pot >= 0.0);
            prop_assert!(e.kinetic >= 0.0 && e.pressure_pot >= 0.0);
        }
    }
}
