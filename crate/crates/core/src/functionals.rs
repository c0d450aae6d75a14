//! Affine slices `L_Q` and the sparse functional family `(λ_ν, ℓ_ν)`.

use std::collections::BTreeMap;

use rustc_hash::FxHashMap;

use num::bigint::BigInt;
use num::{Integer, One, Signed, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::anchors::AnchorAssignment;
use crate::czdecomp::CzDecomposition;
use crate::error::{Error, Result};
use crate::grouping::GroupTable;
use crate::rational::{self, Rational};
use crate::sites::{self, PlusSite, SiteSet};

/// `L_Q(x, y) = f+(z̄) + D_Q (x - x̄)` with `D_Q = (f+(z2) - f+(z1)) / (x2 - x1)`.
#[derive(Clone, Debug)]
pub struct AffineSlice {
    pub zbar: usize,
    pub xbar: Rational,
    pub z1: PlusSite,
    pub z2: PlusSite,
    /// `1 / (x2 - x1)`.
    pub weight: Rational,
}

impl AffineSlice {
    pub fn new(id: usize, anchors: &AnchorAssignment, sites: &SiteSet) -> Result<Self> {
        let a = anchors.get(id).ok_or_else(|| Error::input(format!("square {id} is not relevant")))?;
        let dx = sites.plus_x(a.z2).exact - sites.plus_x(a.z1).exact;
        if dx.is_zero() {
            return Err(Error::invariant(format!("square {id} has coincident slope anchors")));
        }
        Ok(AffineSlice {
            zbar: a.zbar,
            xbar: sites.x(a.zbar).exact.clone(),
            z1: a.z1,
            z2: a.z2,
            weight: Rational::from_integer(1.into()) / dx,
        })
    }

    /// `D_Q` as a combination of `f+` values.
    pub fn slope_terms(&self) -> [(PlusSite, Rational); 2] {
        [(self.z2, self.weight.clone()), (self.z1, -self.weight.clone())]
    }

    /// Slope from `f+` given as a lookup.
    pub fn slope(&self, f: impl Fn(PlusSite) -> Rational) -> Rational {
        (f(self.z2) - f(self.z1)) * &self.weight
    }

    /// Value at `x` from `f+` given as a lookup.
    pub fn eval(&self, x: &Rational, f: impl Fn(PlusSite) -> Rational) -> Rational {
        f(PlusSite::Site(self.zbar)) + self.slope(&f) * (x - &self.xbar)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FunctionalKind {
    Slope,
    Value,
}

#[derive(Clone, Debug)]
pub struct SparseFunctional {
    /// `λ = δ_Q^2`, stored as the level of `Q` (`λ = 4^-level`).
    pub level: u32,
    /// Sorted by site, nonzero coefficients over `E`.
    pub terms: Vec<(usize, Rational)>,
    pub pair: (usize, usize),
    pub kind: FunctionalKind,
}

impl SparseFunctional {
    pub fn lambda(&self) -> f64 {
        rational::pow2i(-2 * self.level as i32)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Exact `ℓ(f)` for exact data in sorted-site order.
    pub fn apply(&self, f: &[Rational]) -> Rational {
        let mut acc = Rational::zero();
        for (k, c) in &self.terms {
            acc += c * &f[*k];
        }
        acc
    }

    /// `λ |ℓ(f)|^p`, computed in the log domain so huge `ℓ` and tiny `λ` do not overflow.
    pub fn contribution(&self, f: &[Rational], p: f64) -> f64 {
        self.weighted(rational::to_f64(&self.apply(f)), p)
    }

    /// `λ |l|^p` for a given value `l` of this functional.
    pub fn weighted(&self, l: f64, p: f64) -> f64 {
        let l = l.abs();
        if l == 0.0 {
            return 0.0;
        }
        (p * l.ln() - 2.0 * self.level as f64 * std::f64::consts::LN_2).exp()
    }
}

/// Float data as integers over a shared power of two: `f_k = m_k / 2^e`.
struct ScaledData {
    m: Vec<BigInt>,
    e: u32,
}

impl ScaledData {
    fn new(values: &[f64]) -> Result<Self> {
        let parts: Vec<(i64, i32)> = values
            .iter()
            .map(|&v| {
                if !v.is_finite() {
                    return Err(Error::input(format!("non-finite value {v}")));
                }
                Ok(decompose(v))
            })
            .collect::<Result<_>>()?;
        let e = parts.iter().map(|&(_, x)| (-x).max(0)).max().unwrap_or(0) as u32;
        let m = parts.iter().map(|&(mant, x)| BigInt::from(mant) << (x + e as i32) as usize).collect();
        Ok(ScaledData { m, e })
    }
}

/// `v = mant · 2^exp` exactly.
fn decompose(v: f64) -> (i64, i32) {
    if v == 0.0 {
        return (0, 0);
    }
    let bits = v.to_bits();
    let sign = if bits >> 63 == 0 { 1 } else { -1 };
    let raw_exp = ((bits >> 52) & 0x7ff) as i32;
    let frac = (bits & ((1u64 << 52) - 1)) as i64;
    let (mant, exp) = if raw_exp == 0 { (frac, -1074) } else { (frac | (1i64 << 52), raw_exp - 1075) };
    let tz = mant.trailing_zeros() as i32;
    (sign * (mant >> tz), exp + tz)
}

/// A functional as integer coefficients over one positive denominator.
#[derive(Clone, Debug)]
struct IntegerForm {
    terms: Vec<(usize, BigInt)>,
    den: BigInt,
}

impl IntegerForm {
    /// `Σ c_s f+(s) · 2^shift / den` with the outer value rewritten through the
    /// two extreme sites.
    fn from_plus(terms: Vec<(PlusSite, BigInt)>, den: BigInt, shift: usize, n: usize) -> Self {
        let (ap, am) = sites::outer_affine_constants();
        // a± are halves of odd integers.
        let (ap2, am2) = (ap.numer().clone(), am.numer().clone());
        let outer = terms.iter().any(|(s, c)| *s == PlusSite::Outer && !c.is_zero());
        let mut acc: BTreeMap<usize, BigInt> = BTreeMap::new();
        for (s, c) in terms {
            match s {
                PlusSite::Site(k) => {
                    let c = if outer { c << 1 } else { c };
                    *acc.entry(k).or_insert_with(BigInt::zero) += c;
                }
                PlusSite::Outer => {
                    *acc.entry(n - 1).or_insert_with(BigInt::zero) += &c * &ap2;
                    *acc.entry(0).or_insert_with(BigInt::zero) += &c * &am2;
                }
            }
        }
        let mut den = if outer { den << 1 } else { den };
        let flip = den.is_negative();
        if flip {
            den = -den;
        }
        let terms = acc
            .into_iter()
            .filter(|(_, c)| !c.is_zero())
            .map(|(k, c)| (k, if flip { -(c << shift) } else { c << shift }))
            .collect();
        IntegerForm { terms, den }
    }

    /// Reduced rational coefficients.
    fn to_terms(&self) -> Vec<(usize, Rational)> {
        self.terms.iter().map(|(k, c)| (*k, Rational::new(c.clone(), self.den.clone()))).collect()
    }

    fn new(terms: &[(usize, Rational)]) -> Self {
        let den = terms.iter().fold(BigInt::one(), |acc, (_, c)| acc.lcm(c.denom()));
        let terms = terms.iter().map(|(k, c)| (*k, c.numer() * (&den / c.denom()))).collect();
        IntegerForm { terms, den }
    }

    fn apply(&self, data: &ScaledData) -> f64 {
        if self.terms.is_empty() {
            return 0.0;
        }
        let mut acc = BigInt::zero();
        for (k, a) in &self.terms {
            acc += a * &data.m[*k];
        }
        if acc.is_zero() {
            return 0.0;
        }
        rational::to_f64(&Rational::new_raw(acc, &self.den << data.e as usize))
    }
}

/// The pair's functionals in integer form, scaled by `δ^-1` and `δ^-2`.
///
/// With `x_k = n_k / D` and `Δ = n(z2) - n(z1)`, the slope functional is
/// `D/Δ (f(z2) - f(z1)) - D/Δ' (f(z2') - f(z1'))` and the value functional
/// is `f(z̄') - f(z̄) - (n̄' - n̄)/Δ (f(z2) - f(z1))`; both have integer
/// coefficients over `ΔΔ'` and `Δ`.
fn integer_pair(a: &AffineSlice, b: &AffineSlice, level: u32, sites: &SiteSet) -> [IntegerForm; 2] {
    let num = |s: PlusSite| sites.plus_numer(s);
    let d = sites.common_den();
    let da = num(a.z2) - num(a.z1);
    let db = num(b.z2) - num(b.z1);
    let ca = d * &db;
    let cb = d * &da;
    let slope = vec![(a.z2, ca.clone()), (a.z1, -ca), (b.z2, -cb.clone()), (b.z1, cb)];
    let shift = num(PlusSite::Site(b.zbar)) - num(PlusSite::Site(a.zbar));
    let value = vec![
        (PlusSite::Site(b.zbar), da.clone()),
        (PlusSite::Site(a.zbar), -da.clone()),
        (a.z2, -shift.clone()),
        (a.z1, shift),
    ];
    [
        IntegerForm::from_plus(slope, &da * &db, level as usize, sites.len()),
        IntegerForm::from_plus(value, da, 2 * level as usize, sites.len()),
    ]
}

/// Linear combination over `E+` before the outer site is substituted.
type PlusCombination = BTreeMap<PlusSite, Rational>;

fn add(c: &mut PlusCombination, s: PlusSite, v: Rational) {
    let e = c.entry(s).or_insert_with(Rational::zero);
    *e += v;
}

/// Rewrites `f+(-1)` as `a+ f(max) + a- f(min)` and drops zero terms.
pub fn substitute_outer(c: &PlusCombination, n: usize) -> Vec<(usize, Rational)> {
    let (ap, am) = sites::outer_affine_constants();
    let mut out: BTreeMap<usize, Rational> = BTreeMap::new();
    for (s, v) in c {
        match *s {
            PlusSite::Site(k) => *out.entry(k).or_insert_with(Rational::zero) += v,
            PlusSite::Outer => {
                *out.entry(n - 1).or_insert_with(Rational::zero) += v * &ap;
                *out.entry(0).or_insert_with(Rational::zero) += v * &am;
            }
        }
    }
    out.into_iter().filter(|(_, v)| !v.is_zero()).collect()
}

/// The two raw functionals for the pair `(Q, Q')` over `E+`, unscaled by `δ`:
/// `D_Q - D_Q'` and `(L_Q - L_Q')(z̄(Q'))`.
pub fn raw_pair(q: &AffineSlice, qp: &AffineSlice) -> (PlusCombination, PlusCombination) {
    let mut slope = PlusCombination::new();
    for (s, v) in q.slope_terms() {
        add(&mut slope, s, v);
    }
    for (s, v) in qp.slope_terms() {
        add(&mut slope, s, -v);
    }
    let mut value = PlusCombination::new();
    add(&mut value, PlusSite::Site(qp.zbar), Rational::from_integer(1.into()));
    add(&mut value, PlusSite::Site(q.zbar), Rational::from_integer((-1).into()));
    let shift = &qp.xbar - &q.xbar;
    for (s, v) in q.slope_terms() {
        add(&mut value, s, -(v * &shift));
    }
    slope.retain(|_, v| !v.is_zero());
    value.retain(|_, v| !v.is_zero());
    (slope, value)
}

/// Whether a touching relevant pair is kept: `Q` or `Q'` easy, or either
/// `1.1`-dilation contains a site.
pub fn pair_admitted(d: &CzDecomposition, g: &GroupTable, q: usize, qp: usize) -> bool {
    g.easy(q) || g.easy(qp) || d.square(q).site_in_1_1.is_some() || d.square(qp).site_in_1_1.is_some()
}

#[derive(Clone, Debug)]
pub struct FunctionalFamily {
    pub functionals: Vec<SparseFunctional>,
    /// Per relevant square id.
    pub slices: BTreeMap<usize, AffineSlice>,
    /// Site to functionals referencing it.
    pub by_site: Vec<Vec<usize>>,
    /// Touching relevant pairs skipped by the filter.
    pub pruned: Vec<(usize, usize)>,
    n_sites: usize,
    integer: Vec<IntegerForm>,
}

impl FunctionalFamily {
    pub fn build(d: &CzDecomposition, g: &GroupTable, a: &AnchorAssignment, sites: &SiteSet) -> Result<Self> {
        let mut slices: BTreeMap<usize, AffineSlice> = BTreeMap::new();
        let mut weights: FxHashMap<(PlusSite, PlusSite), Rational> = FxHashMap::default();
        for id in d.relevant_ids() {
            let anchor = a.get(id).ok_or_else(|| Error::invariant(format!("relevant square {id} has no anchors")))?;
            let slice = match weights.get(&(anchor.z1, anchor.z2)) {
                Some(w) => AffineSlice {
                    zbar: anchor.zbar,
                    xbar: sites.x(anchor.zbar).exact.clone(),
                    z1: anchor.z1,
                    z2: anchor.z2,
                    weight: w.clone(),
                },
                None => {
                    let s = AffineSlice::new(id, a, sites)?;
                    weights.insert((s.z1, s.z2), s.weight.clone());
                    s
                }
            };
            slices.insert(id, slice);
        }
        let mut pairs = Vec::new();
        let mut pruned = Vec::new();
        for &q in slices.keys() {
            for &qp in d.neighbors(q) {
                if qp <= q || !d.square(qp).relevant {
                    continue;
                }
                if pair_admitted(d, g, q, qp) {
                    pairs.push((q, qp));
                } else {
                    pruned.push((q, qp));
                }
            }
        }
        let n = sites.len();
        // Neighbours very often carry the same anchors, so the raw pair is
        // computed once per anchor configuration and level.
        type Key = (PlusSite, PlusSite, usize, PlusSite, PlusSite, usize, u32);
        let mut memo: FxHashMap<Key, [(Vec<(usize, Rational)>, IntegerForm); 2]> = FxHashMap::default();
        let mut functionals = Vec::with_capacity(2 * pairs.len());
        let mut integer = Vec::with_capacity(2 * pairs.len());
        let zero = || (Vec::new(), IntegerForm::new(&[]));
        for &(q, qp) in &pairs {
            let level = d.square(q).level;
            let (a, b) = (&slices[&q], &slices[&qp]);
            let [(slope, gs), (value, gv)] = if (a.z1, a.z2, a.zbar) == (b.z1, b.z2, b.zbar) {
                [zero(), zero()]
            } else {
                memo.entry((a.z1, a.z2, a.zbar, b.z1, b.z2, b.zbar, level))
                    .or_insert_with(|| {
                        integer_pair(a, b, level, sites).map(|g| {
                            let terms = g.to_terms();
                            (terms, g)
                        })
                    })
                    .clone()
            };
            functionals.push(SparseFunctional { level, terms: slope, pair: (q, qp), kind: FunctionalKind::Slope });
            functionals.push(SparseFunctional { level, terms: value, pair: (q, qp), kind: FunctionalKind::Value });
            integer.push(gs);
            integer.push(gv);
        }
        let mut by_site = vec![Vec::new(); n];
        for (nu, f) in functionals.iter().enumerate() {
            for (k, _) in &f.terms {
                by_site[*k].push(nu);
            }
        }
        Ok(FunctionalFamily { functionals, slices, by_site, pruned, n_sites: n, integer })
    }

    /// Number of functionals that are not identically zero.
    pub fn nu_max(&self) -> usize {
        self.functionals.iter().filter(|f| !f.is_zero()).count()
    }

    pub fn max_support(&self) -> usize {
        self.functionals.iter().map(|f| f.terms.len()).max().unwrap_or(0)
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    /// Exact data from floats in sorted-site order.
    pub fn exact_data(values: &[f64]) -> Result<Vec<Rational>> {
        values.iter().map(|&v| rational::from_f64(v)).collect()
    }

    /// `ℓ_ν(f)` for every functional, exact up to the final rounding.
    pub fn apply_all(&self, values: &[f64]) -> Result<Vec<f64>> {
        if values.len() != self.n_sites {
            return Err(Error::input(format!("expected {} values, got {}", self.n_sites, values.len())));
        }
        let data = ScaledData::new(values)?;
        Ok(self.integer.par_iter().map(|g| g.apply(&data)).collect())
    }

    /// Per-functional `λ_ν |ℓ_ν(f)|^p`.
    pub fn breakdown(&self, values: &[f64], p: f64) -> Result<Vec<f64>> {
        check_p(p)?;
        let ls = self.apply_all(values)?;
        Ok(self.functionals.iter().zip(&ls).map(|(f, &l)| f.weighted(l, p)).collect())
    }

    /// `Σ λ_ν |ℓ_ν(f)|^p` for each `p`, sharing one evaluation of the `ℓ_ν`.
    pub fn evaluate_norms(&self, values: &[f64], ps: &[f64]) -> Result<Vec<f64>> {
        for &p in ps {
            check_p(p)?;
        }
        let ls = self.apply_all(values)?;
        Ok(ps.iter().map(|&p| self.functionals.iter().zip(&ls).map(|(f, &l)| f.weighted(l, p)).sum()).collect())
    }

    /// `Σ λ_ν |ℓ_ν(f)|^p` for data in sorted-site order.
    pub fn evaluate_norm(&self, values: &[f64], p: f64) -> Result<f64> {
        Ok(self.evaluate_norms(values, &[p])?[0])
    }

    /// Sites referenced by at least one functional.
    pub fn referenced_sites(&self) -> usize {
        self.by_site.iter().filter(|v| !v.is_empty()).count()
    }
}

pub fn check_p(p: f64) -> Result<()> {
    if p.is_finite() && p > 1.0 && p < 2.0 {
        Ok(())
    } else {
        Err(Error::input(format!("p must lie in (1, 2), got {p}")))
    }
}
