//! Exact dyadic geometry on the root square `[-1,1]^2`.
//!
//! Dyadic cells are closed; dilations are open. A cell at level `k` with
//! indices `(i, j)` is `[i 2^-k, (i+1) 2^-k] x [j 2^-k, (j+1) 2^-k]` with
//! `i, j` in `-2^k ..= 2^k - 1`. The root is a distinguished value, not a
//! level `-1` cell.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::{self, Approx, Rational};

/// Deepest level the decomposition will refine to. Keeps every integer
/// coordinate at a common level inside `i128`.
pub const MAX_LEVEL: u32 = 120;

/// A dilation factor `num / den`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Factor {
    pub num: i128,
    pub den: u32,
}

impl Factor {
    pub const fn new(num: i128, den: u32) -> Self {
        Factor { num, den }
    }

    pub const fn int(num: i128) -> Self {
        Factor { num, den: 1 }
    }

    pub fn to_rational(self) -> Rational {
        rational::scaled_dyadic(self.num, self.den, 0)
    }

    pub fn to_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

pub const HALF: Factor = Factor::new(1, 2);
pub const ONE_POINT_ONE: Factor = Factor::new(11, 10);

/// Closed dyadic interval.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DyadicInterval {
    /// `I^0 = [-1, 1]`.
    Root,
    Cell { level: u32, index: i128 },
}

/// Closed dyadic square.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DyadicSquare {
    /// `Q^0 = [-1, 1]^2`.
    Root,
    Cell { level: u32, i: i128, j: i128 },
}

/// Open interval with exact endpoints.
#[derive(Clone, Debug)]
pub struct OpenInterval {
    pub lo: Approx,
    pub hi: Approx,
}

/// Open axis-parallel box with exact bounds.
#[derive(Clone, Debug)]
pub struct OpenBox {
    pub x: OpenInterval,
    pub y: OpenInterval,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RationalPoint {
    pub x: Rational,
    pub y: Rational,
}

fn index_in_range(level: u32, index: i128) -> bool {
    let half = 1i128 << level;
    (-half..half).contains(&index)
}

/// Bounds of the dilation `c * [a 2^-k, (a+1) 2^-k]`, i.e. center
/// `(2a+1) / 2^(k+1)` and half-width `c / 2^(k+1)`.
fn dilated_cell_bounds(level: u32, index: i128, c: Factor) -> OpenInterval {
    let den = c.den as i128;
    let center = (2 * index + 1) * den;
    OpenInterval {
        lo: Approx::scaled_dyadic(center - c.num, c.den, level + 1),
        hi: Approx::scaled_dyadic(center + c.num, c.den, level + 1),
    }
}

fn dilated_root_bounds(c: Factor) -> OpenInterval {
    OpenInterval {
        lo: Approx::scaled_dyadic(-c.num, c.den, 0),
        hi: Approx::scaled_dyadic(c.num, c.den, 0),
    }
}

impl DyadicInterval {
    pub fn new(level: u32, index: i128) -> Result<Self> {
        if level > MAX_LEVEL || !index_in_range(level, index) {
            return Err(Error::input(format!("no dyadic interval at level {level}, index {index}")));
        }
        Ok(DyadicInterval::Cell { level, index })
    }

    /// Length as a power of two: `|I| = 2^-level`, root `2^1`.
    pub fn log2_length(&self) -> i32 {
        match *self {
            DyadicInterval::Root => 1,
            DyadicInterval::Cell { level, .. } => -(level as i32),
        }
    }

    pub fn length(&self) -> Rational {
        match *self {
            DyadicInterval::Root => rational::from_i64(2),
            DyadicInterval::Cell { level, .. } => rational::dyadic(1, level),
        }
    }

    pub fn length_f64(&self) -> f64 {
        rational::pow2i(self.log2_length())
    }

    pub fn lo(&self) -> Approx {
        match *self {
            DyadicInterval::Root => Approx::dyadic(-1, 0),
            DyadicInterval::Cell { level, index } => Approx::dyadic(index, level),
        }
    }

    pub fn hi(&self) -> Approx {
        match *self {
            DyadicInterval::Root => Approx::dyadic(1, 0),
            DyadicInterval::Cell { level, index } => Approx::dyadic(index + 1, level),
        }
    }

    pub fn center(&self) -> Approx {
        match *self {
            DyadicInterval::Root => Approx::dyadic(0, 0),
            DyadicInterval::Cell { level, index } => Approx::dyadic(2 * index + 1, level + 1),
        }
    }

    pub fn parent(&self) -> Result<Self> {
        match *self {
            DyadicInterval::Root => Err(Error::input("the root interval has no parent")),
            DyadicInterval::Cell { level: 0, .. } => Ok(DyadicInterval::Root),
            DyadicInterval::Cell { level, index } => {
                Ok(DyadicInterval::Cell { level: level - 1, index: index.div_euclid(2) })
            }
        }
    }

    pub fn children(&self) -> [Self; 2] {
        match *self {
            DyadicInterval::Root => [
                DyadicInterval::Cell { level: 0, index: -1 },
                DyadicInterval::Cell { level: 0, index: 0 },
            ],
            DyadicInterval::Cell { level, index } => [
                DyadicInterval::Cell { level: level + 1, index: 2 * index },
                DyadicInterval::Cell { level: level + 1, index: 2 * index + 1 },
            ],
        }
    }

    /// Open dilation `cI` for a fixed factor. No range check.
    pub fn dilate_by(&self, c: Factor) -> OpenInterval {
        match *self {
            DyadicInterval::Root => dilated_root_bounds(c),
            DyadicInterval::Cell { level, index } => dilated_cell_bounds(level, index, c),
        }
    }

    /// Open dilation `cI`; requires `c > 1`.
    pub fn dilate(&self, c: &Rational) -> Result<OpenInterval> {
        if *c <= rational::from_i64(1) {
            return Err(Error::input(format!("interval dilation factor must exceed 1, got {}", rational::format(c))));
        }
        let half = self.length() * c / rational::from_i64(2);
        let center = self.center().exact;
        Ok(OpenInterval { lo: Approx::new(&center - &half), hi: Approx::new(center + half) })
    }

    /// True iff the closed intervals intersect.
    pub fn touches(&self, other: &DyadicInterval) -> bool {
        let level = self.depth().max(other.depth());
        let (a0, a1) = self.int_bounds_at(level);
        let (b0, b1) = other.int_bounds_at(level);
        a0 <= b1 && b0 <= a1
    }

    fn depth(&self) -> u32 {
        match *self {
            DyadicInterval::Root => 0,
            DyadicInterval::Cell { level, .. } => level,
        }
    }

    /// Integer endpoints in units of `2^-level`; `level` must be at least the
    /// interval's own level.
    pub fn int_bounds_at(&self, level: u32) -> (i128, i128) {
        match *self {
            DyadicInterval::Root => (-(1i128 << level), 1i128 << level),
            DyadicInterval::Cell { level: k, index } => {
                let s = level - k;
                (index << s, (index + 1) << s)
            }
        }
    }

    /// Orders by left endpoint, exactly.
    pub fn cmp_lo(&self, other: &DyadicInterval) -> std::cmp::Ordering {
        let level = self.depth().max(other.depth());
        self.int_bounds_at(level).0.cmp(&other.int_bounds_at(level).0)
    }

    pub fn contains_interval(&self, other: &DyadicInterval) -> bool {
        let level = self.depth().max(other.depth());
        let (a0, a1) = self.int_bounds_at(level);
        let (b0, b1) = other.int_bounds_at(level);
        a0 <= b0 && b1 <= a1
    }
}

impl DyadicSquare {
    pub fn new(level: u32, i: i128, j: i128) -> Result<Self> {
        if level > MAX_LEVEL || !index_in_range(level, i) || !index_in_range(level, j) {
            return Err(Error::input(format!("no dyadic square at level {level}, indices ({i}, {j})")));
        }
        Ok(DyadicSquare::Cell { level, i, j })
    }

    pub fn level(&self) -> Option<u32> {
        match *self {
            DyadicSquare::Root => None,
            DyadicSquare::Cell { level, .. } => Some(level),
        }
    }

    fn depth(&self) -> u32 {
        self.level().unwrap_or(0)
    }

    pub fn log2_side(&self) -> i32 {
        match *self {
            DyadicSquare::Root => 1,
            DyadicSquare::Cell { level, .. } => -(level as i32),
        }
    }

    pub fn side(&self) -> Rational {
        match *self {
            DyadicSquare::Root => rational::from_i64(2),
            DyadicSquare::Cell { level, .. } => rational::dyadic(1, level),
        }
    }

    pub fn side_f64(&self) -> f64 {
        rational::pow2i(self.log2_side())
    }

    pub fn area(&self) -> Rational {
        let s = self.side();
        &s * &s
    }

    /// `(x0, y0, side)` of the closed square, exact in `f64` for levels up to 52.
    pub fn bounds_f64(&self) -> (f64, f64, f64) {
        match *self {
            DyadicSquare::Root => (-1.0, -1.0, 2.0),
            DyadicSquare::Cell { level, i, j } => {
                let s = rational::pow2i(-(level as i32));
                (i as f64 * s, j as f64 * s, s)
            }
        }
    }

    pub fn shadow(&self) -> DyadicInterval {
        match *self {
            DyadicSquare::Root => DyadicInterval::Root,
            DyadicSquare::Cell { level, i, .. } => DyadicInterval::Cell { level, index: i },
        }
    }

    /// Projection onto the y-axis.
    pub fn y_interval(&self) -> DyadicInterval {
        match *self {
            DyadicSquare::Root => DyadicInterval::Root,
            DyadicSquare::Cell { level, j, .. } => DyadicInterval::Cell { level, index: j },
        }
    }

    pub fn parent(&self) -> Result<Self> {
        match *self {
            DyadicSquare::Root => Err(Error::input("the root square has no parent")),
            DyadicSquare::Cell { level: 0, .. } => Ok(DyadicSquare::Root),
            DyadicSquare::Cell { level, i, j } => Ok(DyadicSquare::Cell {
                level: level - 1,
                i: i.div_euclid(2),
                j: j.div_euclid(2),
            }),
        }
    }

    /// Children in the order (lower-left, lower-right, upper-left, upper-right).
    pub fn children(&self) -> [Self; 4] {
        let (level, i0, j0) = match *self {
            DyadicSquare::Root => (0, -1, -1),
            DyadicSquare::Cell { level, i, j } => (level + 1, 2 * i, 2 * j),
        };
        [
            DyadicSquare::Cell { level, i: i0, j: j0 },
            DyadicSquare::Cell { level, i: i0 + 1, j: j0 },
            DyadicSquare::Cell { level, i: i0, j: j0 + 1 },
            DyadicSquare::Cell { level, i: i0 + 1, j: j0 + 1 },
        ]
    }

    /// Whether the open dilation `cQ` meets the x-axis, in integer arithmetic.
    pub fn dilation_meets_axis(&self, c: Factor) -> bool {
        match self.y_interval() {
            DyadicInterval::Root => true,
            // cJ = ((2j+1)·den ± num) / (den · 2^(k+1)) contains 0 iff |(2j+1)·den| < num.
            DyadicInterval::Cell { index, .. } => {
                (2 * index + 1).checked_mul(c.den as i128).is_some_and(|m| m.abs() < c.num)
            }
        }
    }

    /// Open dilation `cQ` for a fixed factor. No range check.
    pub fn dilate_by(&self, c: Factor) -> OpenBox {
        OpenBox { x: self.shadow().dilate_by(c), y: self.y_interval().dilate_by(c) }
    }

    /// Open dilation `cQ`; requires `c > 1/4` and `c != 1`.
    pub fn dilate(&self, c: &Rational) -> Result<OpenBox> {
        let quarter = rational::dyadic(1, 2);
        if *c <= quarter || *c == rational::from_i64(1) {
            return Err(Error::input(format!(
                "square dilation factor must exceed 1/4 and differ from 1, got {}",
                rational::format(c)
            )));
        }
        let half = self.side() * c / rational::from_i64(2);
        let cx = self.shadow().center().exact;
        let cy = self.y_interval().center().exact;
        Ok(OpenBox {
            x: OpenInterval { lo: Approx::new(&cx - &half), hi: Approx::new(cx + &half) },
            y: OpenInterval { lo: Approx::new(&cy - &half), hi: Approx::new(cy + half) },
        })
    }

    /// Integer bounds `(x0, x1, y0, y1)` in units of `2^-level`.
    pub fn int_bounds_at(&self, level: u32) -> (i128, i128, i128, i128) {
        let (x0, x1) = self.shadow().int_bounds_at(level);
        let (y0, y1) = self.y_interval().int_bounds_at(level);
        (x0, x1, y0, y1)
    }

    /// True iff the closed squares intersect.
    pub fn touches(&self, other: &DyadicSquare) -> bool {
        let level = self.depth().max(other.depth());
        let (ax0, ax1, ay0, ay1) = self.int_bounds_at(level);
        let (bx0, bx1, by0, by1) = other.int_bounds_at(level);
        ax0 <= bx1 && bx0 <= ax1 && ay0 <= by1 && by0 <= ay1
    }

    /// True iff the interiors intersect.
    pub fn overlaps(&self, other: &DyadicSquare) -> bool {
        let level = self.depth().max(other.depth());
        let (ax0, ax1, ay0, ay1) = self.int_bounds_at(level);
        let (bx0, bx1, by0, by1) = other.int_bounds_at(level);
        ax0 < bx1 && bx0 < ax1 && ay0 < by1 && by0 < ay1
    }

    pub fn contains_square(&self, other: &DyadicSquare) -> bool {
        self.shadow().contains_interval(&other.shadow())
            && self.y_interval().contains_interval(&other.y_interval())
    }

    pub fn contains_point(&self, p: &RationalPoint) -> bool {
        let lo = self.shadow().lo().exact;
        let hi = self.shadow().hi().exact;
        let ylo = self.y_interval().lo().exact;
        let yhi = self.y_interval().hi().exact;
        lo <= p.x && p.x <= hi && ylo <= p.y && p.y <= yhi
    }
}

impl OpenInterval {
    pub fn contains(&self, v: &Approx) -> bool {
        self.lo.cmp_to(v).is_lt() && v.cmp_to(&self.hi).is_lt()
    }

    pub fn contains_exact(&self, v: &Rational) -> bool {
        self.lo.exact < *v && *v < self.hi.exact
    }

    /// Open intervals intersect.
    pub fn intersects(&self, other: &OpenInterval) -> bool {
        self.lo.cmp_to(&other.hi).is_lt() && other.lo.cmp_to(&self.hi).is_lt()
    }

    /// Open interval meets the closed interval `[lo, hi]`.
    pub fn meets_closed(&self, lo: &Approx, hi: &Approx) -> bool {
        self.lo.cmp_to(hi).is_lt() && lo.cmp_to(&self.hi).is_lt()
    }

    pub fn length(&self) -> Rational {
        &self.hi.exact - &self.lo.exact
    }
}

impl OpenBox {
    pub fn center(&self) -> RationalPoint {
        let two = rational::from_i64(2);
        RationalPoint {
            x: (&self.x.lo.exact + &self.x.hi.exact) / &two,
            y: (&self.y.lo.exact + &self.y.hi.exact) / &two,
        }
    }

    pub fn half_widths(&self) -> (Rational, Rational) {
        let two = rational::from_i64(2);
        (self.x.length() / &two, self.y.length() / &two)
    }

    pub fn contains(&self, p: &RationalPoint) -> bool {
        self.x.contains_exact(&p.x) && self.y.contains_exact(&p.y)
    }

    /// Whether the open box contains the axis point `(x, 0)`.
    pub fn contains_axis_point(&self, x: &Approx) -> bool {
        self.y.contains(&Approx::dyadic(0, 0)) && self.x.contains(x)
    }

    pub fn meets_axis(&self) -> bool {
        self.y.contains(&Approx::dyadic(0, 0))
    }

    pub fn intersects(&self, other: &OpenBox) -> bool {
        self.x.intersects(&other.x) && self.y.intersects(&other.y)
    }

    pub fn contains_box(&self, other: &OpenBox) -> bool {
        self.x.lo.exact <= other.x.lo.exact
            && other.x.hi.exact <= self.x.hi.exact
            && self.y.lo.exact <= other.y.lo.exact
            && other.y.hi.exact <= self.y.hi.exact
    }
}

/// `Q_inner = [-2^-10, 2^-10]^2` as closed bounds.
pub fn inner_bounds() -> (Approx, Approx) {
    (Approx::dyadic(-1, 10), Approx::dyadic(1, 10))
}

pub const INNER_HALF_WIDTH: f64 = 1.0 / 1024.0;

#[derive(Serialize, Deserialize)]
struct SquareRepr {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    root: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    k: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    i: Option<i128>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    j: Option<i128>,
}

impl Serialize for DyadicSquare {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let repr = match *self {
            DyadicSquare::Root => SquareRepr { root: Some(true), k: None, i: None, j: None },
            DyadicSquare::Cell { level, i, j } => SquareRepr { root: None, k: Some(level), i: Some(i), j: Some(j) },
        };
        repr.serialize(s)
    }
}

impl<'de> Deserialize<'de> for DyadicSquare {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = SquareRepr::deserialize(d)?;
        match repr {
            SquareRepr { root: Some(true), .. } => Ok(DyadicSquare::Root),
            SquareRepr { k: Some(k), i: Some(i), j: Some(j), .. } => {
                DyadicSquare::new(k, i, j).map_err(serde::de::Error::custom)
            }
            _ => Err(serde::de::Error::custom("square needs either root: true or k, i, j")),
        }
    }
}

impl Serialize for DyadicInterval {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let repr = match *self {
            DyadicInterval::Root => SquareRepr { root: Some(true), k: None, i: None, j: None },
            DyadicInterval::Cell { level, index } => SquareRepr { root: None, k: Some(level), i: Some(index), j: None },
        };
        repr.serialize(s)
    }
}

impl<'de> Deserialize<'de> for DyadicInterval {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = SquareRepr::deserialize(d)?;
        match repr {
            SquareRepr { root: Some(true), .. } => Ok(DyadicInterval::Root),
            SquareRepr { k: Some(k), i: Some(i), .. } => DyadicInterval::new(k, i).map_err(serde::de::Error::custom),
            _ => Err(serde::de::Error::custom("interval needs either root: true or k, i")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn q(level: u32, i: i128, j: i128) -> DyadicSquare {
        DyadicSquare::new(level, i, j).unwrap()
    }

    fn r(n: i128, e: u32) -> Rational {
        rational::dyadic(n, e)
    }

    #[test]
    fn dilate_square_by_three() {
        // [0,1/2]^2 is level 1, (0, 0).
        let b = q(1, 0, 0).dilate(&rational::from_i64(3)).unwrap();
        assert_eq!(b.x.lo.exact, r(-1, 1));
        assert_eq!(b.x.hi.exact, r(1, 0));
        assert_eq!(b.y.lo.exact, r(-1, 1));
        assert_eq!(b.y.hi.exact, r(1, 0));
        let fast = q(1, 0, 0).dilate_by(Factor::int(3));
        assert_eq!(fast.x.lo.exact, b.x.lo.exact);
        assert_eq!(fast.y.hi.exact, b.y.hi.exact);
    }

    #[test]
    fn dilate_small_interval_by_nine() {
        let i = DyadicInterval::new(12, 0).unwrap();
        let o = i.dilate(&rational::from_i64(9)).unwrap();
        assert_eq!(o.lo.exact, r(-1, 10));
        assert_eq!(o.hi.exact, r(5, 12));
        let fast = i.dilate_by(Factor::int(9));
        assert_eq!(fast.lo.exact, o.lo.exact);
        assert_eq!(fast.hi.exact, o.hi.exact);
        assert_eq!(fast.lo.approx, -1.0 / 1024.0);
    }

    #[test]
    fn halving_the_root() {
        let b = DyadicSquare::Root.dilate(&r(1, 1)).unwrap();
        assert_eq!(b.x.lo.exact, r(-1, 1));
        assert_eq!(b.x.hi.exact, r(1, 1));
        assert_eq!(b.center(), RationalPoint { x: r(0, 0), y: r(0, 0) });
        assert_eq!(b.half_widths(), (r(1, 1), r(1, 1)));
    }

    #[test]
    fn dilation_factor_range_is_enforced() {
        assert!(q(3, 0, 0).dilate(&r(1, 2)).is_err()); // exactly 1/4
        assert!(q(3, 0, 0).dilate(&rational::from_i64(1)).is_err());
        assert!(q(3, 0, 0).dilate(&r(3, 3)).is_ok());
        let i = DyadicInterval::new(3, 0).unwrap();
        assert!(i.dilate(&rational::from_i64(1)).is_err());
        assert!(i.dilate(&r(1, 1)).is_err());
    }

    #[test]
    fn parents() {
        // [0,1/4]x[1/4,1/2] -> [0,1/2]^2
        assert_eq!(q(2, 0, 1).parent().unwrap(), q(1, 0, 0));
        // [-1/2,0]x[0,1/2] -> [-1,0]x[0,1]
        assert_eq!(q(1, -1, 0).parent().unwrap(), q(0, -1, 0));
        assert_eq!(q(0, -1, 0).parent().unwrap(), DyadicSquare::Root);
        assert!(DyadicSquare::Root.parent().is_err());
        assert!(DyadicInterval::Root.parent().is_err());
    }

    #[test]
    fn shadows() {
        assert_eq!(q(2, 0, 1).shadow(), DyadicInterval::new(2, 0).unwrap());
        assert_eq!(DyadicSquare::Root.shadow(), DyadicInterval::Root);
        // [-1/2,-1/4]x[-1/4,0]
        let s = q(2, -2, -1).shadow();
        assert_eq!(s.lo().exact, r(-1, 1));
        assert_eq!(s.hi().exact, r(-1, 2));
    }

    #[test]
    fn touching() {
        assert!(q(2, 0, 0).touches(&q(2, 1, 0)));
        assert!(!q(2, 0, 0).touches(&q(2, 2, 0)));
        assert!(q(2, 0, 0).touches(&q(2, 0, 0)));
        assert!(q(2, 0, 0).touches(&q(3, 2, 2))); // corner
        assert!(q(5, 3, 3).touches(&DyadicSquare::Root));
        assert!(!q(2, 0, 0).overlaps(&q(2, 1, 0)));
        assert!(q(1, 0, 0).overlaps(&q(3, 1, 1)));
    }

    #[test]
    fn serde_shape() {
        let s = serde_json::to_string(&q(3, -2, 1)).unwrap();
        assert_eq!(s, r#"{"k":3,"i":-2,"j":1}"#);
        assert_eq!(serde_json::to_string(&DyadicSquare::Root).unwrap(), r#"{"root":true}"#);
        let back: DyadicSquare = serde_json::from_str(&s).unwrap();
        assert_eq!(back, q(3, -2, 1));
        let iv = serde_json::to_string(&DyadicInterval::new(4, 5).unwrap()).unwrap();
        assert_eq!(iv, r#"{"k":4,"i":5}"#);
    }

    fn arb_square() -> impl Strategy<Value = DyadicSquare> {
        (0u32..40).prop_flat_map(|level| {
            let half = 1i128 << level;
            ((-half..half), (-half..half)).prop_map(move |(i, j)| DyadicSquare::Cell { level, i, j })
        })
    }

    #[test]
    fn integer_axis_test_matches_dilation() {
        for level in [1u32, 5, 30] {
            for j in -12i128..12 {
                let Ok(sq) = DyadicSquare::new(level, 0, j) else { continue };
                for c in [Factor::int(3), Factor::int(7), Factor::new(11, 10)] {
                    assert_eq!(sq.dilation_meets_axis(c), sq.dilate_by(c).meets_axis(), "{level} {j}");
                }
            }
        }
    }

    proptest! {
        #[test]
        fn parent_contains_child_and_commutes_with_shadow(sq in arb_square()) {
            let p = sq.parent().unwrap();
            prop_assert!(p.contains_square(&sq));
            prop_assert_eq!(p.shadow(), sq.shadow().parent().unwrap());
            prop_assert!(p.children().contains(&sq));
        }

        #[test]
        fn dilations_are_nested(sq in arb_square(), a in 2i128..40, b in 0i128..40) {
            let small = sq.dilate_by(Factor::new(a, 2));
            let large = sq.dilate_by(Factor::new(a + b + 1, 2));
            prop_assert!(large.contains_box(&small));
            // interior of Q sits inside cQ for c > 1
            let c = sq.dilate_by(Factor::new(a + 2, 2));
            prop_assert!(c.x.lo.exact < sq.shadow().lo().exact);
            prop_assert!(c.x.hi.exact > sq.shadow().hi().exact);
        }

        #[test]
        fn touches_is_symmetric_and_reflexive(a in arb_square(), b in arb_square()) {
            prop_assert_eq!(a.touches(&b), b.touches(&a));
            prop_assert!(a.touches(&a));
        }
    }
}
