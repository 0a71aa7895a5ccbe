//! Forward-mode jets carrying exact first derivatives in `(x, y, t)` and
//! second derivatives in space, enough to evaluate every term of the
//! balance laws on closed-form fields.

use std::ops::{Add, Div, Mul, Neg, Sub};

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Jet {
    pub v: f64,
    pub x: f64,
    pub y: f64,
    pub t: f64,
    pub xx: f64,
    pub xy: f64,
    pub yy: f64,
}

impl Jet {
    pub const fn constant(v: f64) -> Self {
        Self {
            v,
            x: 0.0,
            y: 0.0,
            t: 0.0,
            xx: 0.0,
            xy: 0.0,
            yy: 0.0,
        }
    }

    pub const fn var_x(v: f64) -> Self {
        Self {
            x: 1.0,
            ..Self::constant(v)
        }
    }

    pub const fn var_y(v: f64) -> Self {
        Self {
            y: 1.0,
            ..Self::constant(v)
        }
    }

    pub const fn var_t(v: f64) -> Self {
        Self {
            t: 1.0,
            ..Self::constant(v)
        }
    }

    /// `φ∘self` given `φ(v)`, `φ'(v)`, `φ''(v)`.
    #[inline]
    pub fn chain(self, f0: f64, f1: f64, f2: f64) -> Self {
        Self {
            v: f0,
            x: f1 * self.x,
            y: f1 * self.y,
            t: f1 * self.t,
            xx: f2 * self.x * self.x + f1 * self.xx,
            xy: f2 * self.x * self.y + f1 * self.xy,
            yy: f2 * self.y * self.y + f1 * self.yy,
        }
    }

    pub fn sin(self) -> Self {
        let (s, c) = self.v.sin_cos();
        self.chain(s, c, -s)
    }

    pub fn cos(self) -> Self {
        let (s, c) = self.v.sin_cos();
        self.chain(c, -s, -c)
    }

    pub fn exp(self) -> Self {
        let e = self.v.exp();
        self.chain(e, e, e)
    }

    pub fn ln(self) -> Self {
        let r = 1.0 / self.v;
        self.chain(self.v.ln(), r, -r * r)
    }

    pub fn sqrt(self) -> Self {
        let s = self.v.sqrt();
        self.chain(s, 0.5 / s, -0.25 / (s * self.v))
    }

    pub fn powf(self, p: f64) -> Self {
        let a = self.v.powf(p - 2.0);
        self.chain(a * self.v * self.v, p * a * self.v, p * (p - 1.0) * a)
    }

    pub fn recip(self) -> Self {
        let r = 1.0 / self.v;
        self.chain(r, -r * r, 2.0 * r * r * r)
    }

    pub fn lap(&self) -> f64 {
        self.xx + self.yy
    }

    pub fn grad(&self) -> [f64; 2] {
        [self.x, self.y]
    }
}

impl Add for Jet {
    type Output = Jet;
    #[inline]
    fn add(self, o: Jet) -> Jet {
        Jet {
            v: self.v + o.v,
            x: self.x + o.x,
            y: self.y + o.y,
            t: self.t + o.t,
            xx: self.xx + o.xx,
            xy: self.xy + o.xy,
            yy: self.yy + o.yy,
        }
    }
}

impl Sub for Jet {
    type Output = Jet;
    #[inline]
    fn sub(self, o: Jet) -> Jet {
        self + (-o)
    }
}

impl Neg for Jet {
    type Output = Jet;
    #[inline]
    fn neg(self) -> Jet {
        self * -1.0
    }
}

impl Mul for Jet {
    type Output = Jet;
    #[inline]
    fn mul(self, o: Jet) -> Jet {
        Jet {
            v: self.v * o.v,
            x: self.x * o.v + self.v * o.x,
            y: self.y * o.v + self.v * o.y,
            t: self.t * o.v + self.v * o.t,
            xx: self.xx * o.v + 2.0 * self.x * o.x + self.v * o.xx,
            xy: self.xy * o.v + self.x * o.y + self.y * o.x + self.v * o.xy,
            yy: self.yy * o.v + 2.0 * self.y * o.y + self.v * o.yy,
        }
    }
}

impl Div for Jet {
    type Output = Jet;
    #[inline]
    fn div(self, o: Jet) -> Jet {
        self * o.recip()
    }
}

impl Add<f64> for Jet {
    type Output = Jet;
    #[inline]
    fn add(self, c: f64) -> Jet {
        Jet {
            v: self.v + c,
            ..self
        }
    }
}

impl Sub<f64> for Jet {
    type Output = Jet;
    #[inline]
    fn sub(self, c: f64) -> Jet {
        self + (-c)
    }
}

impl Mul<f64> for Jet {
    type Output = Jet;
    #[inline]
    fn mul(self, c: f64) -> Jet {
        Jet {
            v: self.v * c,
            x: self.x * c,
            y: self.y * c,
            t: self.t * c,
            xx: self.xx * c,
            xy: self.xy * c,
            yy: self.yy * c,
        }
    }
}

impl Mul<Jet> for f64 {
    type Output = Jet;
    #[inline]
    fn mul(self, j: Jet) -> Jet {
        j * self
    }
}

impl Add<Jet> for f64 {
    type Output = Jet;
    #[inline]
    fn add(self, j: Jet) -> Jet {
        j + self
    }
}

impl Sub<Jet> for f64 {
    type Output = Jet;
    #[inline]
    fn sub(self, j: Jet) -> Jet {
        -j + self
    }
}
