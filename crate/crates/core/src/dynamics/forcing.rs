use std::fmt::Debug;

/// Extra per-equation sources at one point, as produced by manufactured
/// solutions.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PointSources {
    pub rho: f64,
    pub mom: [f64; 2],
    pub eta: f64,
    pub tau: [f64; 3],
}

/// Body force `f` in the momentum balance, plus optional additive sources
/// in every equation.
pub trait Forcing: Debug + Send + Sync {
    fn body_force(&self, x: f64, y: f64, t: f64) -> [f64; 2];

    fn sources(&self, _x: f64, _y: f64, _t: f64) -> Option<PointSources> {
        None
    }

    /// True when the body force is identically zero and there are no sources.
    fn is_zero(&self) -> bool {
        false
    }

    /// True when `sources` may return `Some`.
    fn has_sources(&self) -> bool {
        false
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct NoForcing;

impl Forcing for NoForcing {
    fn body_force(&self, _: f64, _: f64, _: f64) -> [f64; 2] {
        [0.0, 0.0]
    }

    fn is_zero(&self) -> bool {
        true
    }
}

/// Uniform gravity-like force.
#[derive(Debug, Clone, Copy)]
pub struct ConstantForce(pub [f64; 2]);

impl Forcing for ConstantForce {
    fn body_force(&self, _: f64, _: f64, _: f64) -> [f64; 2] {
        self.0
    }
}

/// Linear attraction `f = −G(x − x₀)` toward a point.
#[derive(Debug, Clone, Copy)]
pub struct CentralForce {
    pub strength: f64,
    pub center: [f64; 2],
}

impl Forcing for CentralForce {
    fn body_force(&self, x: f64, y: f64, _: f64) -> [f64; 2] {
        [
            -self.strength * (x - self.center[0]),
            -self.strength * (y - self.center[1]),
        ]
    }
}
