//! Constitutive laws: pressure, Helmholtz potentials, polymer pressure,
//! Bregman distances and their lower bounds, and the Newtonian stress.

use thiserror::Error;

/// Spatial dimension.
pub const D: usize = 2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("invalid parameters: {}", .0.join("; "))]
    InvalidParams(Vec<String>),
    #[error("{func}: argument {value} outside its domain ({req})")]
    Domain {
        func: &'static str,
        value: f64,
        req: &'static str,
    },
    #[error("lower-bound calibration failed: {0}")]
    Calibration(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub a: f64,
    pub gamma: f64,
    pub mu_s: f64,
    pub mu_b: f64,
    pub eps: f64,
    pub k: f64,
    pub lambda: f64,
    pub zfrak: f64,
    /// Polymer pressure coefficient `L`.
    pub l: f64,
}

/// `(μ, ν)` with `μ = μˢ/2` and `ν = μᴮ + μˢ/2 − μˢ/d`.
pub fn viscosity_coeffs(mu_s: f64, mu_b: f64, d: usize) -> (f64, f64) {
    (0.5 * mu_s, mu_b + 0.5 * mu_s - mu_s / d as f64)
}

impl ModelParams {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        a: f64,
        gamma: f64,
        mu_s: f64,
        mu_b: f64,
        eps: f64,
        k: f64,
        lambda: f64,
        zfrak: f64,
        l: f64,
    ) -> Result<Self, ModelError> {
        let p = Self {
            a,
            gamma,
            mu_s,
            mu_b,
            eps,
            k,
            lambda,
            zfrak,
            l,
        };
        let errs = p.violations();
        if errs.is_empty() {
            Ok(p)
        } else {
            Err(ModelError::InvalidParams(errs))
        }
    }

    /// Every violated invariant, one message each.
    pub fn violations(&self) -> Vec<String> {
        let mut e = Vec::new();
        let mut pos = |v: f64, name: &str| {
            if !(v > 0.0 && v.is_finite()) {
                e.push(format!("{name} must be positive and finite, got {v}"));
            }
        };
        pos(self.a, "a");
        pos(self.mu_s, "mu_s");
        pos(self.eps, "eps");
        pos(self.k, "k");
        pos(self.lambda, "lambda");
        if !(self.gamma > 1.0 && self.gamma.is_finite()) {
            e.push(format!("gamma must exceed 1, got {}", self.gamma));
        }
        for (v, name) in [(self.mu_b, "mu_b"), (self.zfrak, "zfrak"), (self.l, "L")] {
            if !(v >= 0.0 && v.is_finite()) {
                e.push(format!("{name} must be nonnegative and finite, got {v}"));
            }
        }
        if self.zfrak == 0.0 && self.l == 0.0 {
            e.push("zfrak and L are both zero: the standing assumption zfrak + L > 0 requires a nonzero polymer pressure".into());
        }
        e
    }

    pub fn mu(&self) -> f64 {
        viscosity_coeffs(self.mu_s, self.mu_b, D).0
    }

    pub fn nu(&self) -> f64 {
        viscosity_coeffs(self.mu_s, self.mu_b, D).1
    }

    /// `kL`, the entropic polymer coefficient.
    #[inline]
    pub fn kl(&self) -> f64 {
        self.k * self.l
    }

    #[inline]
    pub fn p(&self, s: f64) -> f64 {
        self.a * s.powf(self.gamma)
    }

    #[inline]
    pub fn p_prime(&self, s: f64) -> f64 {
        self.a * self.gamma * s.powf(self.gamma - 1.0)
    }

    #[inline]
    pub fn h(&self, s: f64) -> f64 {
        self.a / (self.gamma - 1.0) * s.powf(self.gamma)
    }

    #[inline]
    pub fn h_prime(&self, s: f64) -> f64 {
        self.a * self.gamma / (self.gamma - 1.0) * s.powf(self.gamma - 1.0)
    }

    #[inline]
    pub fn h_second(&self, s: f64) -> f64 {
        self.a * self.gamma * s.powf(self.gamma - 2.0)
    }

    #[inline]
    pub fn q(&self, s: f64) -> f64 {
        self.kl() * s + self.zfrak * s * s
    }

    #[inline]
    pub fn q_prime(&self, s: f64) -> f64 {
        self.kl() + 2.0 * self.zfrak * s
    }

    /// `G(s)` with `0·log 0 = 0`.
    #[inline]
    pub fn g(&self, s: f64) -> f64 {
        let ent = if s == 0.0 { 0.0 } else { s * s.ln() };
        self.kl() * ent + self.zfrak * s * s
    }

    #[inline]
    pub fn g_prime(&self, s: f64) -> f64 {
        self.kl() * (s.ln() + 1.0) + 2.0 * self.zfrak * s
    }

    #[inline]
    pub fn g_second(&self, s: f64) -> f64 {
        self.kl() / s + 2.0 * self.zfrak
    }

    /// `H(ϱ) − H(ϱ̃) − H'(ϱ̃)(ϱ − ϱ̃)` without domain checks.
    #[inline]
    pub fn bregman_h_raw(&self, rho: f64, rho_t: f64) -> f64 {
        let d = rho / rho_t - 1.0;
        self.a / (self.gamma - 1.0) * rho_t.powf(self.gamma) * phi_gamma(self.gamma, d)
    }

    /// `G(η) − G(η̃) − G'(η̃)(η − η̃)` without domain checks.
    #[inline]
    pub fn bregman_g_raw(&self, eta: f64, eta_t: f64) -> f64 {
        let d = eta / eta_t - 1.0;
        let diff = eta - eta_t;
        self.kl() * eta_t * psi_log(d) + self.zfrak * diff * diff
    }
}

fn nonneg(func: &'static str, v: f64) -> Result<(), ModelError> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(ModelError::Domain {
            func,
            value: v,
            req: "must be finite and >= 0",
        })
    }
}

fn positive(func: &'static str, v: f64) -> Result<(), ModelError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(ModelError::Domain {
            func,
            value: v,
            req: "must be finite and > 0",
        })
    }
}

pub fn pressure(rho: f64, prm: &ModelParams) -> Result<f64, ModelError> {
    nonneg("pressure", rho)?;
    Ok(prm.p(rho))
}

pub fn potential_h(rho: f64, prm: &ModelParams) -> Result<f64, ModelError> {
    nonneg("potential_H", rho)?;
    Ok(prm.h(rho))
}

pub fn polymer_pressure_q(eta: f64, prm: &ModelParams) -> Result<f64, ModelError> {
    nonneg("polymer_pressure_q", eta)?;
    Ok(prm.q(eta))
}

pub fn polymer_potential_g(eta: f64, prm: &ModelParams) -> Result<f64, ModelError> {
    nonneg("polymer_potential_G", eta)?;
    Ok(prm.g(eta))
}

const SERIES_SWITCH: f64 = 1e-3;

/// `(1+d)^γ − 1 − γd`, accurate for all `d ≥ −1`.
fn phi_gamma(gamma: f64, d: f64) -> f64 {
    if d.abs() <= SERIES_SWITCH {
        // binomial series from the quadratic term on
        let mut coef = gamma * (gamma - 1.0) / 2.0;
        let mut pow = d * d;
        let mut acc = coef * pow;
        for n in 3..=8 {
            coef *= (gamma - (n - 1) as f64) / n as f64;
            pow *= d;
            acc += coef * pow;
        }
        acc
    } else {
        (gamma * d.ln_1p()).exp_m1() - gamma * d
    }
}

/// `(1+d)ln(1+d) − d`, accurate for all `d ≥ −1`.
fn psi_log(d: f64) -> f64 {
    if d == -1.0 {
        1.0
    } else if d.abs() <= SERIES_SWITCH {
        let mut acc = 0.0;
        let mut pow = d;
        for n in 2..=8 {
            pow *= -d;
            acc += pow / (n * (n - 1)) as f64;
        }
        -acc
    } else {
        (1.0 + d) * d.ln_1p() - d
    }
}

/// Bregman distance of `H`; nonnegative and zero only on the diagonal.
pub fn bregman_h(rho: f64, rho_t: f64, prm: &ModelParams) -> Result<f64, ModelError> {
    nonneg("bregman_H", rho)?;
    positive("bregman_H (reference)", rho_t)?;
    Ok(prm.bregman_h_raw(rho, rho_t))
}

pub fn bregman_g(eta: f64, eta_t: f64, prm: &ModelParams) -> Result<f64, ModelError> {
    nonneg("bregman_G", eta)?;
    positive("bregman_G (reference)", eta_t)?;
    Ok(prm.bregman_g_raw(eta, eta_t))
}

/// Constants of the two-regime lower bound for the `H` Bregman distance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HBoundConstants {
    pub delta: f64,
    pub c: f64,
}

pub fn lower_bound_h(rho: f64, rho_t: f64, prm: &ModelParams, k: HBoundConstants) -> f64 {
    let HBoundConstants { delta, c } = k;
    if delta * rho_t <= rho && rho <= rho_t / delta {
        let d = rho - rho_t;
        c * rho_t.powf(prm.gamma - 2.0) * d * d
    } else {
        c * rho.powf(prm.gamma).max(rho_t.powf(prm.gamma))
    }
}

/// Ratio `bregman_H / bound` at unit `c`, as a function of `x = ϱ/ϱ̃`.
/// Both sides scale as `ϱ̃^γ`, so the ratio depends on `x` alone.
fn h_ratio(prm: &ModelParams, x: f64, inner: bool) -> f64 {
    let breg = prm.a / (prm.gamma - 1.0) * phi_gamma(prm.gamma, x - 1.0);
    if inner {
        breg / ((x - 1.0) * (x - 1.0))
    } else {
        breg / x.powf(prm.gamma).max(1.0)
    }
}

/// Grid-searches `δ ∈ (0, ½]` and returns the `(δ, c)` pair with the largest
/// `c` certified on a dense log sample of `x = ϱ/ϱ̃ ∈ [1e−12, 1e12]`,
/// shrunk by 0.1% for margin.
pub fn calibrate_h_constants(prm: &ModelParams) -> Result<HBoundConstants, ModelError> {
    if !prm.violations().is_empty() {
        return Err(ModelError::Calibration("invalid parameters".into()));
    }
    const PER_DECADE: usize = 400;
    let xs: Vec<f64> = (0..=24 * PER_DECADE)
        .map(|k| 10f64.powf(-12.0 + k as f64 / PER_DECADE as f64))
        .collect();
    let mut best: Option<HBoundConstants> = None;
    for step in 1..=50 {
        let delta = step as f64 / 100.0;
        let mut cmin = f64::INFINITY;
        let probe = xs
            .iter()
            .copied()
            .chain([delta, 1.0 / delta, delta * (1.0 - 1e-12), (1.0 + 1e-12) / delta]);
        for x in probe {
            if x == 1.0 {
                continue;
            }
            let inner = delta <= x && x <= 1.0 / delta;
            cmin = cmin.min(h_ratio(prm, x, inner));
        }
        // large-x limit of the outer ratio
        cmin = cmin.min(prm.a / (prm.gamma - 1.0));
        if cmin.is_finite() && cmin > 0.0 && best.map_or(true, |b| cmin * 0.999 > b.c) {
            best = Some(HBoundConstants {
                delta,
                c: 0.999 * cmin,
            });
        }
    }
    best.ok_or_else(|| {
        ModelError::Calibration(format!(
            "no positive constant found for a = {}, gamma = {}",
            prm.a, prm.gamma
        ))
    })
}

/// Which lower bound for the `G` Bregman distance to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GBound {
    /// `𝔷(η−η̃)² + kL(η−η̃)²/(4η̃)` below `2η̃`, `𝔷(η−η̃)² + kLη/8` above.
    Corrected,
    /// The published constants: `2𝔷(η−η̃)² + kL(η−η̃)²/(2η̃)` below `2η̃`,
    /// `2𝔷(η−η̃)² + kLη/4` above. Fails near `η = 2η̃`.
    Published,
}

pub fn lower_bound_g_variant(eta: f64, eta_t: f64, prm: &ModelParams, which: GBound) -> f64 {
    let d2 = (eta - eta_t) * (eta - eta_t);
    let (zc, inner, outer) = match which {
        GBound::Corrected => (1.0, 0.25, 0.125),
        GBound::Published => (2.0, 0.5, 0.25),
    };
    let poly = if eta <= 2.0 * eta_t {
        inner * d2 / eta_t
    } else {
        outer * eta
    };
    zc * prm.zfrak * d2 + prm.kl() * poly
}

pub fn lower_bound_g(eta: f64, eta_t: f64, prm: &ModelParams) -> f64 {
    lower_bound_g_variant(eta, eta_t, prm, GBound::Corrected)
}

/// `μˢ(sym ∇u − ½ div u 𝕀) + μᴮ div u 𝕀` in two dimensions.
pub fn newtonian_stress(grad_u: [[f64; 2]; 2], prm: &ModelParams) -> [[f64; 2]; 2] {
    let div = grad_u[0][0] + grad_u[1][1];
    let off = 0.5 * (grad_u[0][1] + grad_u[1][0]);
    let iso = prm.mu_b * div - 0.5 * prm.mu_s * div;
    [
        [prm.mu_s * grad_u[0][0] + iso, prm.mu_s * off],
        [prm.mu_s * off, prm.mu_s * grad_u[1][1] + iso],
    ]
}
