use super::{
    check_reference, dissipation_terms, r_def_impl, rel_entropy_e1, rel_entropy_e2, remainder_r_new, stress_distance,
    DissipationTerms, EntropyError, RemainderDef, RemainderNew,
};
use crate::diagnostics::{derivative_weights, time_derivative};
use crate::dynamics::{
    build_initial, cfl_dt, run, Forcing, Kinematics, Perturbation, Preset, RunSetup, State, TimeControl,
    Trajectory,
};
use crate::fields::{
    advective_divergence, gradient_energy, reduce_cells, upper_convected_point, BoundaryMode, Grid, ScalarField,
    VecField,
};
use crate::model::ModelParams;
use std::sync::Arc;

/// Reference time derivatives `∂ₜũ`, `∂ₜH'(ϱ̃)`, `∂ₜG'(η̃)` at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct RefDerivs {
    pub dt_u: VecField,
    pub dt_hp: ScalarField,
    pub dt_gp: ScalarField,
}

impl RefDerivs {
    /// `Σ wₘ q(stateₘ)` for each of the three reference quantities.
    pub fn from_weights(
        states: &[(&State, f64)],
        prm: &ModelParams,
        rho_floor: f64,
    ) -> Result<Self, EntropyError> {
        Self::combine(states, prm, rho_floor, 0.0)
    }

    pub(super) fn combine(
        states: &[(&State, f64)],
        prm: &ModelParams,
        rho_floor: f64,
        h_shift: f64,
    ) -> Result<Self, EntropyError> {
        let Some((first, _)) = states.first() else {
            return Err(EntropyError::Config("time derivative needs reference samples".into()));
        };
        let g = first.grid();
        if states.iter().any(|(s, _)| s.grid() != g) {
            return Err(EntropyError::Mismatch("reference samples on different grids".into()));
        }
        let mut out = Self {
            dt_u: VecField::zeros(g),
            dt_hp: ScalarField::zeros(g),
            dt_gp: ScalarField::zeros(g),
        };
        for &(s, w) in states {
            check_reference(s)?;
            let kin = Kinematics::new(s, rho_floor);
            for k in 0..g.len() {
                out.dt_u.x.data[k] += w * kin.u.x.data[k];
                out.dt_u.y.data[k] += w * kin.u.y.data[k];
                out.dt_hp.data[k] += w * (prm.h_prime(s.rho.data[k]) + h_shift);
                out.dt_gp.data[k] += w * prm.g_prime(s.eta.data[k]);
            }
        }
        Ok(out)
    }

    /// Centered difference `(q(next) − q(prev)) / (t_next − t_prev)`.
    pub fn centered(prev: &State, next: &State, prm: &ModelParams, rho_floor: f64) -> Result<Self, EntropyError> {
        let h = next.t - prev.t;
        if !(h > 0.0) {
            return Err(EntropyError::Config("reference samples must be ordered in time".into()));
        }
        Self::from_weights(&[(prev, -1.0 / h), (next, 1.0 / h)], prm, rho_floor)
    }

    /// Three-point derivative at snapshot `k` of a reference trajectory.
    pub fn at_snapshot(r: &Trajectory, k: usize) -> Result<Self, EntropyError> {
        let ts = r.times();
        let w = derivative_weights(&ts, k);
        if w.is_empty() {
            return Err(EntropyError::Config("reference trajectory needs at least two snapshots".into()));
        }
        let states: Vec<(&State, f64)> = w.iter().map(|&(m, c)| (&r.snapshots[m].state, c)).collect();
        Self::from_weights(&states, &r.prm, r.rho_floor)
    }
}

/// Which remainder integrates the right side of the inequality.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RemainderForm {
    #[default]
    Definition,
    Recombined,
}

/// Relative-entropy quantities at one snapshot time.
#[derive(Debug, Clone, PartialEq)]
pub struct RelEntropyReport {
    pub t: f64,
    pub e1: f64,
    pub e2: f64,
    pub et: f64,
    pub e_combined: f64,
    pub r_def: RemainderDef,
    pub r_new: RemainderNew,
    pub dissipation: DissipationTerms,
    /// `[𝓔₁+𝓔₂](t) + ∫₀ᵗ D − [𝓔₁+𝓔₂](0) − ∫₀ᵗ 𝓡`, trapezoidal in time.
    pub inequality_residual: f64,
}

fn check_pair(traj: &Trajectory, r: &Trajectory) -> Result<(), EntropyError> {
    if traj.grid != r.grid {
        return Err(EntropyError::Mismatch("trajectories live on different grids".into()));
    }
    if traj.prm != r.prm {
        return Err(EntropyError::Mismatch("trajectories use different model parameters".into()));
    }
    if traj.snapshots.len() != r.snapshots.len() {
        return Err(EntropyError::Mismatch(format!(
            "{} snapshots against {} reference snapshots",
            traj.snapshots.len(),
            r.snapshots.len()
        )));
    }
    for (a, b) in traj.snapshots.iter().zip(&r.snapshots) {
        let (ta, tb) = (a.state.t, b.state.t);
        if (ta - tb).abs() > 1e-12 * ta.abs().max(1.0) {
            return Err(EntropyError::Mismatch(format!("snapshot times {ta} and {tb} differ")));
        }
    }
    Ok(())
}

/// Reference snapshots must be spaced by at most one cell width in time.
fn check_spacing(r: &Trajectory) -> Result<(), EntropyError> {
    let h = r.grid.h();
    let ts = r.times();
    if let Some(w) = ts.windows(2).find(|w| w[1] - w[0] > h * (1.0 + 1e-12)) {
        return Err(EntropyError::Config(format!(
            "reference snapshot spacing {:e} exceeds the cell size {h:e}",
            w[1] - w[0]
        )));
    }
    Ok(())
}

/// Per-snapshot relative entropies, both remainders, dissipation and the
/// inequality residual with the chosen remainder form.
pub fn relative_entropy_reports(
    traj: &Trajectory,
    r: &Trajectory,
    form: RemainderForm,
) -> Result<Vec<RelEntropyReport>, EntropyError> {
    check_pair(traj, r)?;
    check_spacing(r)?;
    let prm = &traj.prm;
    let floor = traj.rho_floor;
    let forcing: &dyn Forcing = traj.forcing.as_ref();
    let mut out: Vec<RelEntropyReport> = Vec::with_capacity(traj.snapshots.len());
    let (mut int_d, mut int_r) = (0.0, 0.0);
    let mut prev: Option<(f64, f64, f64)> = None;
    let mut base = 0.0;
    for (k, (a, b)) in traj.snapshots.iter().zip(&r.snapshots).enumerate() {
        let (s, rs) = (&a.state, &b.state);
        let derivs = RefDerivs::at_snapshot(r, k)?;
        let r_def = r_def_impl(s, rs, &derivs, prm, forcing, floor, 0.0)?;
        let r_new = remainder_r_new(s, rs, prm, floor)?;
        let dissipation = dissipation_terms(s, rs, prm, floor)?;
        let (e1, e2, et) = (rel_entropy_e1(s, rs, prm, floor)?, rel_entropy_e2(s, rs, prm)?, stress_distance(s, rs)?);
        let rate_r = match form {
            RemainderForm::Definition => r_def.total(),
            RemainderForm::Recombined => r_new.total(),
        };
        let rate_d = dissipation.entropy_part();
        if let Some((tp, dp, rp)) = prev {
            let h = 0.5 * (s.t - tp);
            int_d += h * (dp + rate_d);
            int_r += h * (rp + rate_r);
        } else {
            base = e1 + e2;
        }
        prev = Some((s.t, rate_d, rate_r));
        out.push(RelEntropyReport {
            t: s.t,
            e1,
            e2,
            et,
            e_combined: e1 + e2 + et,
            r_def,
            r_new,
            dissipation,
            inequality_residual: (e1 + e2 + int_d) - (base + int_r),
        });
    }
    Ok(out)
}

/// The relative entropy inequality residual at every snapshot.
pub fn entropy_inequality_residual(
    traj: &Trajectory,
    r: &Trajectory,
    form: RemainderForm,
) -> Result<Vec<f64>, EntropyError> {
    Ok(relative_entropy_reports(traj, r, form)?
        .into_iter()
        .map(|x| x.inequality_residual)
        .collect())
}

/// `d/dt ∫½|𝕋−𝕋̃|² + (1/2λ)∫|𝕋−𝕋̃|² + ε∫|∇(𝕋−𝕋̃)|²` minus the advective,
/// deformation and production couplings, at every snapshot. Vanishes up to
/// time differencing when both trajectories solve the unforced stress
/// equation.
pub fn stress_distance_balance(traj: &Trajectory, r: &Trajectory) -> Result<Vec<f64>, EntropyError> {
    check_pair(traj, r)?;
    if traj.snapshots.len() < 2 {
        return Err(EntropyError::Config("time derivatives need at least two snapshots".into()));
    }
    let prm = &traj.prm;
    let mut half = Vec::new();
    let mut rest = Vec::new();
    for (a, b) in traj.snapshots.iter().zip(&r.snapshots) {
        let (s, rs) = (&a.state, &b.state);
        let g = s.grid();
        let area = g.cell_area();
        let (ka, kb) = (Kinematics::new(s, traj.rho_floor), Kinematics::new(rs, r.rho_floor));
        let adv = |st: &State, kin: &Kinematics| -> Result<[ScalarField; 3], EntropyError> {
            Ok([
                advective_divergence(&st.tau.xx, &kin.u)?,
                advective_divergence(&st.tau.xy, &kin.u)?,
                advective_divergence(&st.tau.yy, &kin.u)?,
            ])
        };
        let (aa, ab) = (adv(s, &ka)?, adv(rs, &kb)?);
        let d = s.tau.sub(&rs.tau)?;
        let frob = |x: [f64; 3], y: [f64; 3]| x[0] * y[0] + 2.0 * x[1] * y[1] + x[2] * y[2];
        let t3 = |st: &State, k: usize| [st.tau.xx.data[k], st.tau.xy.data[k], st.tau.yy.data[k]];
        let mut parts = [0.0; 3];
        for (c, p) in parts.iter_mut().enumerate() {
            *p = reduce_cells(g, |i, j| {
                let k = g.idx(i, j);
                let dk = [d.xx.data[k], d.xy.data[k], d.yy.data[k]];
                match c {
                    0 => -frob(
                        [
                            aa[0].data[k] - ab[0].data[k],
                            aa[1].data[k] - ab[1].data[k],
                            aa[2].data[k] - ab[2].data[k],
                        ],
                        dk,
                    ),
                    1 => {
                        let x = upper_convected_point(ka.grad_u.at(i, j), t3(s, k));
                        let y = upper_convected_point(kb.grad_u.at(i, j), t3(rs, k));
                        frob([x[0] - y[0], x[1] - y[1], x[2] - y[2]], dk)
                    }
                    _ => (s.eta.data[k] - rs.eta.data[k]) * (dk[0] + dk[2]),
                }
            }) * area;
        }
        let et = stress_distance(s, rs)?;
        let diffusion = prm.eps * (gradient_energy(&d.xx) + 2.0 * gradient_energy(&d.xy) + gradient_energy(&d.yy));
        half.push(et);
        rest.push(
            et / prm.lambda + diffusion - (parts[0] + parts[1] + prm.k / (2.0 * prm.lambda) * parts[2]),
        );
    }
    let dt = time_derivative(&traj.times(), &half);
    Ok(dt.iter().zip(&rest).map(|(a, b)| a + b).collect())
}

/// Settings of the three weak-strong checks.
#[derive(Debug, Clone)]
pub struct WeakStrongConfig {
    pub prm: ModelParams,
    pub preset: Preset,
    pub mode: BoundaryMode,
    pub forcing: Arc<dyn Forcing>,
    pub t_end: f64,
    pub cfl: f64,
    pub seed: u64,
    /// Grids for the identical-data refinement check; each double the last.
    pub resolutions: Vec<usize>,
    /// Perturbation amplitudes of the Gronwall check.
    pub deltas: Vec<f64>,
    pub gronwall_n: usize,
    /// Grids and amplitude of the inequality-residual refinement check.
    pub residual_levels: Vec<usize>,
    pub residual_delta: f64,
    pub form: RemainderForm,
}

/// `𝓔(t_end)` between consecutive resolutions, the finer block-averaged
/// onto the coarser grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceCase {
    pub pairs: Vec<(usize, usize)>,
    pub e_end: Vec<f64>,
    /// `log₂` ratios of `√𝓔` between consecutive pairs.
    pub orders: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GronwallCase {
    pub delta0: f64,
    pub e0: f64,
    pub e0_over_delta_sq: f64,
    /// `max_{t>0} log(𝓔(t)/𝓔(0)) / t`
    pub c_hat: f64,
    pub series: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CaseReport {
    pub n: usize,
    pub residual_at_zero: f64,
    pub max_abs_residual: f64,
    pub final_residual: f64,
    /// Largest positive residual, i.e. the worst violation of the inequality.
    pub max_residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeakStrongReport {
    pub convergence: ConvergenceCase,
    pub gronwall: Vec<GronwallCase>,
    pub residual: Vec<CaseReport>,
    /// `log₂` ratios of `max|residual|` between consecutive levels.
    pub residual_orders: Vec<f64>,
}

impl WeakStrongReport {
    /// Spread `max|Ĉ| / min|Ĉ|`, infinite when the signs disagree.
    pub fn gronwall_spread(&self) -> f64 {
        let cs: Vec<f64> = self.gronwall.iter().map(|g| g.c_hat).collect();
        if cs.is_empty() {
            return f64::NAN;
        }
        let same_sign = cs.iter().all(|&c| c > 0.0) || cs.iter().all(|&c| c < 0.0);
        if !same_sign {
            return f64::INFINITY;
        }
        let (lo, hi) = cs
            .iter()
            .fold((f64::INFINITY, 0.0f64), |(a, b), &c| (a.min(c.abs()), b.max(c.abs())));
        hi / lo
    }

    /// Relative spread of `𝓔(0)/δ₀²` around its mean.
    pub fn quadratic_spread(&self) -> f64 {
        let v: Vec<f64> = self.gronwall.iter().map(|g| g.e0_over_delta_sq).collect();
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        v.iter().fold(0.0f64, |m, x| m.max((x / mean - 1.0).abs()))
    }
}

/// Cellwise average of `factor × factor` blocks of every plane.
pub fn block_average(s: &State, coarse: Grid) -> Result<State, EntropyError> {
    let g = s.grid();
    let f = g.nx / coarse.nx;
    if f == 0 || coarse.nx * f != g.nx || coarse.ny * f != g.ny || coarse.mode != g.mode {
        return Err(EntropyError::Mismatch("grids are not nested".into()));
    }
    let avg = |p: &ScalarField| {
        ScalarField::from_cells(coarse, |i, j| {
            let mut acc = 0.0;
            for b in 0..f as isize {
                for a in 0..f as isize {
                    acc += p.at(i * f as isize + a, j * f as isize + b);
                }
            }
            acc / (f * f) as f64
        })
    };
    let mut out = State::uniform(coarse, 1.0, 1.0, [0.0; 3]);
    out.t = s.t;
    out.rho = avg(&s.rho);
    out.mom.x = avg(&s.mom.x);
    out.mom.y = avg(&s.mom.y);
    out.eta = avg(&s.eta);
    out.tau.xx = avg(&s.tau.xx);
    out.tau.xy = avg(&s.tau.xy);
    out.tau.yy = avg(&s.tau.yy);
    out.refresh_ghosts();
    Ok(out)
}

fn grid_for(cfg: &WeakStrongConfig, n: usize) -> Result<Grid, EntropyError> {
    Ok(Grid::unit_square(n, cfg.mode)?)
}

/// A fixed step dividing `t_end` evenly, from the CFL bound of `initial`.
fn uniform_dt(cfg: &WeakStrongConfig, initial: &State) -> Result<f64, EntropyError> {
    let floor = 1e-10 * crate::fields::integrate(&initial.rho) / initial.grid().area();
    let bound = cfl_dt(initial, &cfg.prm, cfg.cfl, floor)?;
    let steps = (cfg.t_end / bound).ceil().max(1.0);
    Ok(cfg.t_end / steps)
}

fn run_with(cfg: &WeakStrongConfig, initial: State, dt: f64, stride: usize) -> Result<Trajectory, EntropyError> {
    let tc = TimeControl {
        t_end: cfg.t_end,
        cfl: cfg.cfl,
        dt: Some(dt),
        snapshot_stride: stride,
        snapshot_interval: None,
    };
    Ok(run(&RunSetup::new(cfg.prm, initial, cfg.forcing.clone(), tc))?)
}

fn perturbed(cfg: &WeakStrongConfig, g: Grid, delta0: f64) -> State {
    build_initial(&cfg.preset, g, &cfg.prm, Some(Perturbation { delta0, seed: cfg.seed }))
}

pub fn convergence_case(cfg: &WeakStrongConfig) -> Result<ConvergenceCase, EntropyError> {
    let lv = &cfg.resolutions;
    if lv.len() < 3 || lv.windows(2).any(|w| w[1] != 2 * w[0]) {
        return Err(EntropyError::Config("need at least three doubling resolutions".into()));
    }
    let mut finals = Vec::new();
    for &n in lv {
        let g = grid_for(cfg, n)?;
        let init = build_initial(&cfg.preset, g, &cfg.prm, None);
        let dt = uniform_dt(cfg, &init)?;
        let traj = run_with(cfg, init, dt, usize::MAX)?;
        finals.push((traj.last().state.clone(), traj.rho_floor));
    }
    let mut pairs = Vec::new();
    let mut e_end = Vec::new();
    for w in finals.windows(2) {
        let (coarse, floor) = (&w[0].0, w[0].1);
        let fine = block_average(&w[1].0, coarse.grid())?;
        check_reference(&fine)?;
        e_end.push(
            rel_entropy_e1(coarse, &fine, &cfg.prm, floor)?
                + rel_entropy_e2(coarse, &fine, &cfg.prm)?
                + stress_distance(coarse, &fine)?,
        );
        pairs.push((coarse.grid().nx, w[1].0.grid().nx));
    }
    let orders = e_end.windows(2).map(|w| 0.5 * (w[0] / w[1]).log2()).collect();
    Ok(ConvergenceCase { pairs, e_end, orders })
}

pub fn gronwall_cases(cfg: &WeakStrongConfig) -> Result<Vec<GronwallCase>, EntropyError> {
    if cfg.deltas.is_empty() || cfg.deltas.iter().any(|d| !(*d > 0.0 && *d < 1.0)) {
        return Err(EntropyError::Config("perturbation amplitudes must lie in (0, 1)".into()));
    }
    let g = grid_for(cfg, cfg.gronwall_n)?;
    let init = build_initial(&cfg.preset, g, &cfg.prm, None);
    let dt = uniform_dt(cfg, &init)?;
    let reference = run_with(cfg, init, dt, 1)?;
    for s in &reference.snapshots {
        check_reference(&s.state)?;
    }
    let mut out = Vec::new();
    for &delta0 in &cfg.deltas {
        let traj = run_with(cfg, perturbed(cfg, g, delta0), dt, 1)?;
        check_pair(&traj, &reference)?;
        let mut series = Vec::new();
        for (a, b) in traj.snapshots.iter().zip(&reference.snapshots) {
            let (s, r) = (&a.state, &b.state);
            let e = rel_entropy_e1(s, r, &cfg.prm, traj.rho_floor)?
                + rel_entropy_e2(s, r, &cfg.prm)?
                + stress_distance(s, r)?;
            series.push((s.t, e));
        }
        let e0 = series[0].1;
        let c_hat = series[1..]
            .iter()
            .map(|&(t, e)| (e / e0).ln() / t)
            .fold(f64::NEG_INFINITY, f64::max);
        out.push(GronwallCase {
            delta0,
            e0,
            e0_over_delta_sq: e0 / (delta0 * delta0),
            c_hat,
            series,
        });
    }
    Ok(out)
}

pub fn residual_cases(cfg: &WeakStrongConfig) -> Result<(Vec<CaseReport>, Vec<f64>), EntropyError> {
    let mut cases = Vec::new();
    for &n in &cfg.residual_levels {
        let g = grid_for(cfg, n)?;
        let init = build_initial(&cfg.preset, g, &cfg.prm, None);
        let dt = uniform_dt(cfg, &init)?;
        let reference = run_with(cfg, init, dt, 1)?;
        let traj = run_with(cfg, perturbed(cfg, g, cfg.residual_delta), dt, 1)?;
        let res = entropy_inequality_residual(&traj, &reference, cfg.form)?;
        cases.push(CaseReport {
            n,
            residual_at_zero: res[0],
            max_abs_residual: res.iter().fold(0.0f64, |m, r| m.max(r.abs())),
            final_residual: *res.last().expect("initial snapshot"),
            max_residual: res.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        });
    }
    let orders = cases
        .windows(2)
        .map(|w| (w[0].max_abs_residual / w[1].max_abs_residual).log2())
        .collect();
    Ok((cases, orders))
}

/// Runs the identical-data refinement, the Gronwall amplitude sweep and the
/// inequality-residual refinement.
pub fn weak_strong_experiment(cfg: &WeakStrongConfig) -> Result<WeakStrongReport, EntropyError> {
    let convergence = convergence_case(cfg)?;
    let gronwall = gronwall_cases(cfg)?;
    let (residual, residual_orders) = residual_cases(cfg)?;
    Ok(WeakStrongReport {
        convergence,
        gronwall,
        residual,
        residual_orders,
    })
}
