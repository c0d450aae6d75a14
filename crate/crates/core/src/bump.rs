//! C² plateau bumps built from the quintic smoothstep, and second-order jets.

use std::ops::{Add, Mul, Sub};

use serde::Serialize;

/// Value, gradient and hessian of a scalar field at a point.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct Jet {
    pub v: f64,
    pub dx: f64,
    pub dy: f64,
    pub dxx: f64,
    pub dxy: f64,
    pub dyy: f64,
}

impl Jet {
    pub const ZERO: Jet = Jet { v: 0.0, dx: 0.0, dy: 0.0, dxx: 0.0, dxy: 0.0, dyy: 0.0 };

    pub fn constant(v: f64) -> Jet {
        Jet { v, ..Jet::ZERO }
    }

    /// The affine function `c + a x + b y` at `(x, y)`.
    pub fn affine(c: f64, a: f64, b: f64, x: f64, y: f64) -> Jet {
        Jet { v: c + a * x + b * y, dx: a, dy: b, ..Jet::ZERO }
    }

    /// Product rule to second order.
    pub fn product(&self, o: &Jet) -> Jet {
        Jet {
            v: self.v * o.v,
            dx: self.dx * o.v + self.v * o.dx,
            dy: self.dy * o.v + self.v * o.dy,
            dxx: self.dxx * o.v + 2.0 * self.dx * o.dx + self.v * o.dxx,
            dxy: self.dxy * o.v + self.dx * o.dy + self.dy * o.dx + self.v * o.dxy,
            dyy: self.dyy * o.v + 2.0 * self.dy * o.dy + self.v * o.dyy,
        }
    }

    /// Quotient `self / s` to second order; `s.v` must be nonzero.
    pub fn quotient(&self, s: &Jet) -> Jet {
        let inv = 1.0 / s.v;
        let inv2 = inv * inv;
        let inv3 = inv2 * inv;
        let f = self;
        Jet {
            v: f.v * inv,
            dx: f.dx * inv - f.v * s.dx * inv2,
            dy: f.dy * inv - f.v * s.dy * inv2,
            dxx: f.dxx * inv - 2.0 * f.dx * s.dx * inv2 - f.v * s.dxx * inv2 + 2.0 * f.v * s.dx * s.dx * inv3,
            dxy: f.dxy * inv - f.dx * s.dy * inv2 - f.dy * s.dx * inv2 - f.v * s.dxy * inv2
                + 2.0 * f.v * s.dx * s.dy * inv3,
            dyy: f.dyy * inv - 2.0 * f.dy * s.dy * inv2 - f.v * s.dyy * inv2 + 2.0 * f.v * s.dy * s.dy * inv3,
        }
    }

    /// Tensor product `a(x) b(y)` of 1-D jets `[value, d1, d2]`.
    pub fn tensor(a: [f64; 3], b: [f64; 3]) -> Jet {
        Jet {
            v: a[0] * b[0],
            dx: a[1] * b[0],
            dy: a[0] * b[1],
            dxx: a[2] * b[0],
            dxy: a[1] * b[1],
            dyy: a[0] * b[2],
        }
    }

    /// Pulls a jet from the normalized frame back to user coordinates
    /// scaled by `s` (`x_frame = s (x_user - t)`).
    pub fn to_user(&self, s: f64) -> Jet {
        Jet {
            v: self.v,
            dx: self.dx * s,
            dy: self.dy * s,
            dxx: self.dxx * s * s,
            dxy: self.dxy * s * s,
            dyy: self.dyy * s * s,
        }
    }

    pub fn hessian(&self) -> [f64; 3] {
        [self.dxx, self.dxy, self.dyy]
    }

    /// `(H_xx^2 + 2 H_xy^2 + H_yy^2)^(1/2)`.
    pub fn hessian_norm(&self) -> f64 {
        (self.dxx * self.dxx + 2.0 * self.dxy * self.dxy + self.dyy * self.dyy).sqrt()
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, o: Jet) -> Jet {
        Jet {
            v: self.v + o.v,
            dx: self.dx + o.dx,
            dy: self.dy + o.dy,
            dxx: self.dxx + o.dxx,
            dxy: self.dxy + o.dxy,
            dyy: self.dyy + o.dyy,
        }
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, o: Jet) -> Jet {
        self + o * -1.0
    }
}

impl Mul<f64> for Jet {
    type Output = Jet;
    fn mul(self, c: f64) -> Jet {
        Jet { v: self.v * c, dx: self.dx * c, dy: self.dy * c, dxx: self.dxx * c, dxy: self.dxy * c, dyy: self.dyy * c }
    }
}

/// `S(t) = 6t^5 - 15t^4 + 10t^3` on `[0, 1]` with its first two derivatives.
pub fn smoothstep(t: f64) -> [f64; 3] {
    if t <= 0.0 {
        return [0.0, 0.0, 0.0];
    }
    if t >= 1.0 {
        return [1.0, 0.0, 0.0];
    }
    let t2 = t * t;
    let t3 = t2 * t;
    [
        t3 * (10.0 + t * (-15.0 + 6.0 * t)),
        30.0 * t2 * (1.0 + t * (-2.0 + t)),
        60.0 * t * (1.0 + t * (-3.0 + 2.0 * t)),
    ]
}

/// 1-D plateau: 1 on `[lo, hi]`, smoothstep ramps on `[lo - m_lo, lo]` and
/// `[hi, hi + m_hi]`, 0 outside.
pub fn plateau(t: f64, lo: f64, hi: f64, m_lo: f64, m_hi: f64) -> [f64; 3] {
    if t >= lo && t <= hi {
        [1.0, 0.0, 0.0]
    } else if t < lo {
        let [v, d1, d2] = smoothstep((t - (lo - m_lo)) / m_lo);
        [v, d1 / m_lo, d2 / (m_lo * m_lo)]
    } else {
        let [v, d1, d2] = smoothstep((hi + m_hi - t) / m_hi);
        [v, -d1 / m_hi, d2 / (m_hi * m_hi)]
    }
}

/// Ramp width of a square bump, as a fraction of the side.
pub const BUMP_MARGIN: f64 = 0.05;

/// `φ_Q` for the closed square with lower-left `(x0, y0)` and side `s`:
/// 1 on `Q`, supported in the closure of `1.1Q`.
pub fn square_bump(x: f64, y: f64, x0: f64, y0: f64, s: f64) -> Jet {
    let m = BUMP_MARGIN * s;
    Jet::tensor(plateau(x, x0, x0 + s, m, m), plateau(y, y0, y0 + s, m, m))
}

/// Breakpoints of a square bump along one axis.
pub fn square_breaks(lo: f64, s: f64) -> [f64; 4] {
    let m = BUMP_MARGIN * s;
    [lo - m, lo, lo + s, lo + s + m]
}

/// The outer cutoff `χ`: 1 on `[-3·2^-12, 3·2^-12] x [-2^-12, 2^-12]`,
/// supported in `[-2^-10, 2^-10]^2`.
pub fn cutoff(x: f64, y: f64) -> Jet {
    let q = 1.0 / 4096.0;
    Jet::tensor(plateau(x, -3.0 * q, 3.0 * q, q, q), plateau(y, -q, q, 3.0 * q, 3.0 * q))
}

pub fn cutoff_breaks_x() -> [f64; 4] {
    let q = 1.0 / 4096.0;
    [-4.0 * q, -3.0 * q, 3.0 * q, 4.0 * q]
}

pub fn cutoff_breaks_y() -> [f64; 4] {
    let q = 1.0 / 4096.0;
    [-4.0 * q, -q, q, 4.0 * q]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smoothstep_ends_are_flat_to_second_order() {
        assert_eq!(smoothstep(0.0), [0.0, 0.0, 0.0]);
        assert_eq!(smoothstep(1.0), [1.0, 0.0, 0.0]);
        let e = 1e-6;
        let a = smoothstep(e);
        assert!(a[0] < 1e-16 && a[1] < 1e-10 && a[2] < 1e-4);
        let b = smoothstep(1.0 - e);
        assert!((1.0 - b[0]) < 1e-16 && b[1] < 1e-10 && b[2].abs() < 1e-4);
        assert!((smoothstep(0.5)[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn smoothstep_derivatives_match_differences() {
        for &t in &[0.1, 0.37, 0.5, 0.81] {
            let h = 1e-5;
            let [_, d1, d2] = smoothstep(t);
            let fd1 = (smoothstep(t + h)[0] - smoothstep(t - h)[0]) / (2.0 * h);
            let fd2 = (smoothstep(t + h)[1] - smoothstep(t - h)[1]) / (2.0 * h);
            assert!((d1 - fd1).abs() < 1e-8);
            assert!((d2 - fd2).abs() < 1e-7);
        }
    }

    #[test]
    fn cutoff_plateau_and_support() {
        let q = 1.0 / 4096.0;
        assert_eq!(cutoff(3.0 * q, q).v, 1.0);
        assert_eq!(cutoff(-3.0 * q, -q).v, 1.0);
        assert_eq!(cutoff(4.0 * q, 0.0).v, 0.0);
        assert_eq!(cutoff(0.0, 4.0 * q).v, 0.0);
        assert!(cutoff(3.5 * q, 2.0 * q).v > 0.0);
    }

    #[test]
    fn quotient_inverts_product() {
        let a = Jet { v: 1.3, dx: 0.2, dy: -0.4, dxx: 0.7, dxy: 0.1, dyy: -0.3 };
        let b = Jet { v: 2.1, dx: -0.5, dy: 0.3, dxx: 0.2, dxy: -0.6, dyy: 0.9 };
        let back = a.product(&b).quotient(&b);
        for (x, y) in [(back.v, a.v), (back.dx, a.dx), (back.dy, a.dy), (back.dxx, a.dxx), (back.dxy, a.dxy), (back.dyy, a.dyy)] {
            assert!((x - y).abs() < 1e-12);
        }
    }
}
