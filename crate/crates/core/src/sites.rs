//! Site normalization, the augmented set `E+ = E ∪ {-1}` and augmented data.

use std::cmp::Ordering;
use std::ops::Range;

use num::bigint::BigInt;
use num::{Integer, One};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::MAX_LEVEL;
use crate::rational::{self, Approx, Rational};

/// Half-width of the normalized site frame, `2^-11`.
pub const FRAME_HALF: f64 = 1.0 / 2048.0;

/// Coefficients `(a+, a-)` of the affine function through `(2^-11, F+)` and
/// `(-2^-11, F-)`, evaluated at `x = -1`.
pub const A_PLUS: f64 = -1023.5;
pub const A_MINUS: f64 = 1024.5;

/// Exact `(a+, a-)`: `-2047/2` and `2049/2`.
pub fn outer_affine_constants() -> (Rational, Rational) {
    (rational::dyadic(-2047, 1), rational::dyadic(2049, 1))
}

/// A site of `E+`. `Outer` is the auxiliary point `-1`; it sorts before
/// every site of `E`, matching coordinate order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PlusSite {
    Outer,
    Site(usize),
}

/// Sorted, normalized sites `x_0 < ... < x_{N-1}` with `x_0 = -2^-11`,
/// `x_{N-1} = 2^-11`, plus the map back to user coordinates.
#[derive(Clone, Debug)]
pub struct SiteSet {
    xs: Vec<Approx>,
    user: Vec<Rational>,
    /// `order[k]` is the input position of the `k`-th sorted site.
    order: Vec<usize>,
    scale: Rational,
    translate: Rational,
    scale_f64: f64,
    translate_f64: f64,
    /// `x_k = numer[k] / den`.
    numer: Vec<BigInt>,
    den: BigInt,
}

impl SiteSet {
    /// Normalizes raw sites via `x -> s (x - t)` with `s = 2^-10 / (max - min)`
    /// and `t` the midpoint.
    pub fn normalize(raw: &[Rational]) -> Result<Self> {
        if raw.len() < 2 {
            return Err(Error::input(format!("need at least 2 sites, got {}", raw.len())));
        }
        let mut order: Vec<usize> = (0..raw.len()).collect();
        order.sort_by(|&a, &b| raw[a].cmp(&raw[b]));
        for w in order.windows(2) {
            if raw[w[0]] == raw[w[1]] {
                return Err(Error::input(format!(
                    "duplicate site {} at input positions {} and {}",
                    rational::format(&raw[w[0]]),
                    w[0].min(w[1]),
                    w[0].max(w[1])
                )));
            }
        }
        let min = &raw[order[0]];
        let max = &raw[order[order.len() - 1]];
        let span = max - min;
        let scale = rational::dyadic(1, 10) / &span;
        let translate = (min + max) / rational::from_i64(2);

        let mut min_gap: Option<Rational> = None;
        for w in order.windows(2) {
            let gap = &raw[w[1]] - &raw[w[0]];
            if min_gap.as_ref().is_none_or(|g| gap < *g) {
                min_gap = Some(gap);
            }
        }
        // The decomposition refines to roughly log2(1 / normalized gap) + 3.
        let gap = min_gap.unwrap() * &scale;
        let depth = -rational::log2_floor_approx(&gap) + 4;
        if depth > MAX_LEVEL as i64 {
            return Err(Error::input(format!(
                "sites too close together: decomposition would need level {depth}, limit is {MAX_LEVEL}"
            )));
        }

        let half = rational::dyadic(1, 11);
        let xs: Vec<Approx> = order
            .iter()
            .enumerate()
            .map(|(k, &idx)| {
                if k == 0 {
                    Approx::new(-half.clone())
                } else if k == order.len() - 1 {
                    Approx::new(half.clone())
                } else {
                    Approx::new((&raw[idx] - &translate) * &scale)
                }
            })
            .collect();
        let user = order.iter().map(|&i| raw[i].clone()).collect();
        let den = xs.iter().fold(BigInt::one(), |acc, x| acc.lcm(x.exact.denom()));
        let numer = xs.iter().map(|x| x.exact.numer() * (&den / x.exact.denom())).collect();
        Ok(SiteSet {
            numer,
            den,
            scale_f64: rational::to_f64(&scale),
            translate_f64: rational::to_f64(&translate),
            xs,
            user,
            order,
            scale,
            translate,
        })
    }

    /// Common denominator of the normalized sites.
    pub fn common_den(&self) -> &BigInt {
        &self.den
    }

    /// Numerator of a point of `E+` over [`Self::common_den`].
    pub fn plus_numer(&self, s: PlusSite) -> BigInt {
        match s {
            PlusSite::Outer => -self.den.clone(),
            PlusSite::Site(k) => self.numer[k].clone(),
        }
    }

    /// Parses rational literals and normalizes.
    pub fn from_strings<S: AsRef<str>>(raw: &[S]) -> Result<Self> {
        let parsed = raw.iter().map(|s| rational::parse(s.as_ref())).collect::<Result<Vec<_>>>()?;
        Self::normalize(&parsed)
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    /// Normalized coordinate of the `k`-th sorted site.
    pub fn x(&self, k: usize) -> &Approx {
        &self.xs[k]
    }

    pub fn xs(&self) -> &[Approx] {
        &self.xs
    }

    pub fn x_f64(&self, k: usize) -> f64 {
        self.xs[k].approx
    }

    pub fn plus_x(&self, s: PlusSite) -> Approx {
        match s {
            PlusSite::Outer => Approx::dyadic(-1, 0),
            PlusSite::Site(k) => self.xs[k].clone(),
        }
    }

    pub fn plus_x_f64(&self, s: PlusSite) -> f64 {
        match s {
            PlusSite::Outer => -1.0,
            PlusSite::Site(k) => self.xs[k].approx,
        }
    }

    /// User coordinate of the `k`-th sorted site.
    pub fn user_x(&self, k: usize) -> &Rational {
        &self.user[k]
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn scale(&self) -> &Rational {
        &self.scale
    }

    pub fn translate(&self) -> &Rational {
        &self.translate
    }

    pub fn scale_f64(&self) -> f64 {
        self.scale_f64
    }

    pub fn translate_f64(&self) -> f64 {
        self.translate_f64
    }

    /// User point to the normalized frame.
    pub fn to_frame(&self, ux: f64, uy: f64) -> (f64, f64) {
        (self.scale_f64 * (ux - self.translate_f64), self.scale_f64 * uy)
    }

    /// Normalized point to user coordinates.
    pub fn to_user(&self, x: f64, y: f64) -> (f64, f64) {
        (x / self.scale_f64 + self.translate_f64, y / self.scale_f64)
    }

    pub fn to_user_exact(&self, x: &Rational) -> Rational {
        x / &self.scale + &self.translate
    }

    /// Factor converting a seminorm `∫|∇²F|^p` in the normalized frame to
    /// user coordinates: `s^(2p-2)`.
    pub fn seminorm_factor(&self, p: f64) -> f64 {
        self.scale_f64.powf(2.0 * p - 2.0)
    }

    /// Reorders input-order values into sorted-site order.
    pub fn sorted_values(&self, input: &[f64]) -> Result<Vec<f64>> {
        if input.len() != self.len() {
            return Err(Error::input(format!("expected {} values, got {}", self.len(), input.len())));
        }
        if let Some(v) = input.iter().find(|v| !v.is_finite()) {
            return Err(Error::input(format!("non-finite data value {v}")));
        }
        Ok(self.order.iter().map(|&i| input[i]).collect())
    }

    /// Inverse of [`SiteSet::sorted_values`].
    pub fn input_order<T: Clone>(&self, sorted: &[T]) -> Vec<T> {
        let mut out = sorted.to_vec();
        for (k, &i) in self.order.iter().enumerate() {
            out[i] = sorted[k].clone();
        }
        out
    }

    /// Indices of the sites in the open interval `(lo, hi)`.
    pub fn in_open(&self, lo: &Approx, hi: &Approx) -> Range<usize> {
        let start = self.xs.partition_point(|x| x.cmp_to(lo) != Ordering::Greater);
        let end = self.xs.partition_point(|x| x.cmp_to(hi) == Ordering::Less);
        start..end.max(start)
    }

    pub fn count_in_open(&self, lo: &Approx, hi: &Approx) -> usize {
        self.in_open(lo, hi).len()
    }

    /// Leftmost and rightmost points of `E+` in the open interval `(lo, hi)`.
    pub fn plus_extremes_in_open(&self, lo: &Approx, hi: &Approx) -> Option<(PlusSite, PlusSite)> {
        let r = self.in_open(lo, hi);
        let outer = Approx::dyadic(-1, 0);
        let has_outer = lo.cmp_to(&outer).is_lt() && outer.cmp_to(hi).is_lt();
        let first = if has_outer {
            Some(PlusSite::Outer)
        } else if !r.is_empty() {
            Some(PlusSite::Site(r.start))
        } else {
            None
        }?;
        let last = if !r.is_empty() { PlusSite::Site(r.end - 1) } else { PlusSite::Outer };
        Some((first, last))
    }

    /// Largest point of `E+` that is `<= x`.
    pub fn max_plus_at_most(&self, x: &Approx) -> Option<PlusSite> {
        let k = self.xs.partition_point(|s| s.cmp_to(x) != Ordering::Greater);
        if k > 0 {
            Some(PlusSite::Site(k - 1))
        } else if x.exact >= rational::from_i64(-1) {
            Some(PlusSite::Outer)
        } else {
            None
        }
    }

    /// Site in `(lo, hi)` closest to `c`, ties to the smaller coordinate.
    pub fn closest_in_open(&self, lo: &Approx, hi: &Approx, c: &Approx) -> Option<usize> {
        let r = self.in_open(lo, hi);
        if r.is_empty() {
            return None;
        }
        let k = r.start + self.xs[r.clone()].partition_point(|s| s.cmp_to(c).is_lt());
        if k == r.start {
            return Some(k);
        }
        if k == r.end {
            return Some(k - 1);
        }
        // `c - a <= b - c` iff `2c <= a + b`; ties go to the left site.
        let (a, b) = (&self.xs[k - 1], &self.xs[k]);
        let two_c = Approx::with_approx(&c.exact + &c.exact, 2.0 * c.approx);
        let sum = Approx::with_approx(&a.exact + &b.exact, a.approx + b.approx);
        Some(if two_c.cmp_to(&sum).is_le() { k - 1 } else { k })
    }

    /// Value of `f+` at `-1` from sorted data.
    pub fn outer_value(&self, sorted: &[f64]) -> f64 {
        A_PLUS * sorted[self.len() - 1] + A_MINUS * sorted[0]
    }

    /// Exact data `f+` lookup.
    pub fn plus_value(&self, sorted: &[f64], s: PlusSite) -> f64 {
        match s {
            PlusSite::Outer => self.outer_value(sorted),
            PlusSite::Site(k) => sorted[k],
        }
    }
}

/// Augmented data over `E+`: sorted values of `E` followed by `f+(-1)`.
pub fn augment(sorted: &[f64], sites: &SiteSet) -> Vec<f64> {
    let mut out = sorted.to_vec();
    out.push(sites.outer_value(sorted));
    out
}
