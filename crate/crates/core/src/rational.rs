//! Exact rational helpers: parsing, formatting, dyadic constructors and a
//! float-filtered comparison used on the hot paths of the decomposition.

use std::cmp::Ordering;

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Rational = BigRational;

/// `num / 2^exp`, not reduced.
pub fn dyadic(num: i128, exp: u32) -> Rational {
    Rational::new_raw(BigInt::from(num), BigInt::one() << exp as usize)
}

/// `num / (den * 2^exp)`, not reduced. `den` must be positive.
pub fn scaled_dyadic(num: i128, den: u32, exp: u32) -> Rational {
    debug_assert!(den > 0);
    Rational::new_raw(BigInt::from(num), BigInt::from(den) << exp as usize)
}

pub fn from_i64(v: i64) -> Rational {
    Rational::from_integer(BigInt::from(v))
}

/// Exact value of a finite `f64`.
pub fn from_f64(v: f64) -> Result<Rational> {
    Rational::from_float(v).ok_or_else(|| Error::input(format!("non-finite value {v}")))
}

pub fn to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Parses `"3"`, `"-7/12"`, `"0.125"`, `"1.5e-3"` into an exact rational.
pub fn parse(s: &str) -> Result<Rational> {
    let t = s.trim();
    if t.is_empty() {
        return Err(Error::input("empty rational literal"));
    }
    let bad = || Error::input(format!("cannot parse rational '{s}'"));
    if let Some((n, d)) = t.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| bad())?;
        let d: BigInt = d.trim().parse().map_err(|_| bad())?;
        if d.is_zero() {
            return Err(Error::input(format!("zero denominator in '{s}'")));
        }
        return Ok(Rational::new(n, d));
    }
    let (mantissa, exponent) = match t.find(['e', 'E']) {
        Some(pos) => {
            let e: i64 = t[pos + 1..].parse().map_err(|_| bad())?;
            (&t[..pos], e)
        }
        None => (t, 0),
    };
    let (negative, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad());
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let all: BigInt = format!("0{int_part}{frac_part}").parse().map_err(|_| bad())?;
    let scale = exponent - frac_part.len() as i64;
    if scale.abs() > 4096 {
        return Err(Error::input(format!("exponent out of range in '{s}'")));
    }
    let ten = BigInt::from(10);
    let pow = num::pow(ten, scale.unsigned_abs() as usize);
    let mut r = if scale >= 0 {
        Rational::from_integer(all * pow)
    } else {
        Rational::new(all, pow)
    };
    if negative {
        r = -r;
    }
    Ok(r)
}

/// `"n"` for integers, `"n/d"` otherwise (always reduced).
pub fn format(r: &Rational) -> String {
    let r = r.reduced();
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// A rational together with a float approximation within a few ulps.
#[derive(Clone, Debug)]
pub struct Approx {
    pub exact: Rational,
    pub approx: f64,
}

impl Approx {
    pub fn new(exact: Rational) -> Self {
        let approx = to_f64(&exact);
        Approx { exact, approx }
    }

    /// Caller guarantees `approx` is within a few ulps of `exact`.
    pub fn with_approx(exact: Rational, approx: f64) -> Self {
        Approx { exact, approx }
    }

    pub fn dyadic(num: i128, exp: u32) -> Self {
        Approx { approx: (num as f64) * pow2i(-(exp as i32)), exact: dyadic(num, exp) }
    }

    pub fn scaled_dyadic(num: i128, den: u32, exp: u32) -> Self {
        Approx {
            approx: (num as f64) / (den as f64) * pow2i(-(exp as i32)),
            exact: scaled_dyadic(num, den, exp),
        }
    }

    /// Exact comparison, decided by the floats when they are far apart.
    pub fn cmp_to(&self, other: &Approx) -> Ordering {
        filtered_cmp(&self.exact, self.approx, &other.exact, other.approx)
    }
}

/// Compares two rationals using float approximations as a filter.
pub fn filtered_cmp(a: &Rational, af: f64, b: &Rational, bf: f64) -> Ordering {
    let diff = af - bf;
    let tol = 16.0 * f64::EPSILON * af.abs().max(bf.abs());
    if diff > tol {
        Ordering::Greater
    } else if diff < -tol {
        Ordering::Less
    } else {
        a.cmp(b)
    }
}

/// `2^e` for moderate integer `e`.
pub fn pow2i(e: i32) -> f64 {
    2f64.powi(e)
}

pub fn abs(r: &Rational) -> Rational {
    r.abs()
}

/// `floor(log2(r))` for positive `r`, accurate to within one.
pub fn log2_floor_approx(r: &Rational) -> i64 {
    debug_assert!(r.is_positive());
    r.numer().bits() as i64 - r.denom().bits() as i64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_integers_fractions_and_decimals() {
        assert_eq!(parse("3").unwrap(), from_i64(3));
        assert_eq!(parse("-7/14").unwrap(), Rational::new(BigInt::from(-1), BigInt::from(2)));
        assert_eq!(parse("0.125").unwrap(), dyadic(1, 3));
        assert_eq!(parse("-1.5e-3").unwrap(), Rational::new(BigInt::from(-3), BigInt::from(2000)));
        assert_eq!(parse("2e3").unwrap(), from_i64(2000));
        assert_eq!(parse(".5").unwrap(), dyadic(1, 1));
        assert!(parse("1/0").is_err());
        assert!(parse("abc").is_err());
        assert!(parse("").is_err());
        assert!(parse("1.2.3").is_err());
    }

    #[test]
    fn formats_reduced() {
        assert_eq!(format(&dyadic(4, 3)), "1/2");
        assert_eq!(format(&dyadic(8, 3)), "1");
        assert_eq!(format(&from_i64(-5)), "-5");
    }

    #[test]
    fn filtered_cmp_agrees_with_exact_near_ties() {
        let a = dyadic(1, 11);
        let b = Rational::new(BigInt::from(1), BigInt::from(2048));
        assert_eq!(filtered_cmp(&a, to_f64(&a), &b, to_f64(&b)), Ordering::Equal);
        let c = &a + Rational::new(BigInt::one(), BigInt::one() << 200usize);
        assert_eq!(filtered_cmp(&c, to_f64(&c), &a, to_f64(&a)), Ordering::Greater);
        assert_eq!(filtered_cmp(&a, to_f64(&a), &c, to_f64(&c)), Ordering::Less);
    }

    #[test]
    fn f64_values_convert_exactly() {
        let r = from_f64(0.1).unwrap();
        assert_eq!(to_f64(&r), 0.1);
        assert!(from_f64(f64::NAN).is_err());
    }
}
