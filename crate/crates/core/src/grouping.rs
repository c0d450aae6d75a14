//! Easy/hard shadows, groups `Gp(x*)`, towers `Q_0 ⊂ ... ⊂ Q_L` and gangs.

use std::collections::BTreeMap;

use crate::audit::Audit;
use crate::czdecomp::{CzDecomposition, Kind};
use crate::error::{Error, Result};
use crate::geometry::{DyadicInterval, Factor};
use crate::rational::{self, Approx};
use crate::sites::{PlusSite, SiteSet};

/// Dilation constant of the easy test.
pub const K: i128 = 128;

#[derive(Clone, Debug)]
pub struct ShadowClass {
    pub easy: bool,
    /// Extreme points of `E+ ∩ KI`.
    pub extremes: Option<(PlusSite, PlusSite)>,
    pub owner: Option<PlusSite>,
}

#[derive(Clone, Debug)]
pub struct Group {
    pub owner: PlusSite,
    /// Shadows of the group in interval order.
    pub shadows: Vec<DyadicInterval>,
    /// CZ squares whose shadow is in the group.
    pub squares: Vec<usize>,
    /// `I_0, ..., I_L`.
    pub tower_shadows: Vec<DyadicInterval>,
    /// `Q_0, ..., Q_L` by square id.
    pub tower: Vec<usize>,
    /// `Gang(l)` for `l = 0..=L`.
    pub gangs: Vec<Vec<usize>>,
}

impl Group {
    /// `L(z*)`.
    pub fn top(&self) -> usize {
        self.tower.len() - 1
    }

    pub fn small(&self) -> usize {
        self.tower[0]
    }

    pub fn big(&self) -> usize {
        self.tower[self.top()]
    }
}

#[derive(Clone, Debug)]
pub struct GroupTable {
    pub shadows: BTreeMap<DyadicInterval, ShadowClass>,
    pub groups: BTreeMap<PlusSite, Group>,
    /// Owner per square id.
    pub square_owner: Vec<Option<PlusSite>>,
    pub square_easy: Vec<bool>,
}

/// Easy test: two points of `E+` in the open interval `kI` at distance `>= |I|/k`.
pub fn classify_easy(iv: &DyadicInterval, sites: &SiteSet, k: i128) -> bool {
    easy_extremes(iv, sites, k).0
}

fn easy_extremes(iv: &DyadicInterval, sites: &SiteSet, k: i128) -> (bool, Option<(PlusSite, PlusSite)>) {
    let kk = iv.dilate_by(Factor::int(k));
    let ext = sites.plus_extremes_in_open(&kk.lo, &kk.hi);
    let easy = match ext {
        Some((a, b)) if a != b => {
            let (xa, xb) = (sites.plus_x(a), sites.plus_x(b));
            let len = iv.length_f64();
            let kf = k as f64;
            let gap = (xb.approx - xa.approx) * kf - len;
            let err = 8.0 * f64::EPSILON * ((xa.approx.abs() + xb.approx.abs()) * kf + len);
            if gap.abs() > err {
                gap > 0.0
            } else {
                (xb.exact - xa.exact) * rational::from_i64(k as i64) >= iv.length()
            }
        }
        _ => false,
    };
    (easy, ext)
}

/// The unique `x*` with `x* <= inf 41I` and `E+ ∩ (x*, inf 9I] = ∅`.
pub fn assign_group(iv: &DyadicInterval, sites: &SiteSet) -> Option<PlusSite> {
    let nine = iv.dilate_by(Factor::int(9));
    let x = sites.max_plus_at_most(&nine.lo)?;
    let forty_one = iv.dilate_by(Factor::int(41));
    let xs = sites.plus_x(x);
    (xs.cmp_to(&forty_one.lo).is_le()).then_some(x)
}

fn kind_rank(k: Kind) -> u8 {
    match k {
        Kind::ContactAbove => 0,
        Kind::ContactBelow => 1,
        Kind::ContactlessAbove => 2,
        Kind::ContactlessBelow => 3,
    }
}

impl GroupTable {
    pub fn build(d: &CzDecomposition, sites: &SiteSet) -> Result<Self> {
        let mut shadows = BTreeMap::new();
        for iv in d.shadows().keys() {
            let (easy, extremes) = easy_extremes(iv, sites, K);
            shadows.insert(*iv, ShadowClass { easy, extremes, owner: assign_group(iv, sites) });
        }

        let mut members: BTreeMap<PlusSite, Vec<DyadicInterval>> = BTreeMap::new();
        for (iv, c) in &shadows {
            if let Some(o) = c.owner {
                members.entry(o).or_default().push(*iv);
            }
        }

        let mut groups = BTreeMap::new();
        for (owner, mut ivs) in members {
            ivs.sort_by(|a, b| a.cmp_lo(b).then(a.log2_length().cmp(&b.log2_length())));
            let i0 = *ivs
                .iter()
                .min_by(|a, b| a.log2_length().cmp(&b.log2_length()).then(a.cmp_lo(b)))
                .expect("groups are nonempty");
            let mut tower_shadows = vec![i0];
            loop {
                let top = tower_shadows.last().unwrap();
                let Ok(p) = top.parent() else { break };
                match shadows.get(&p) {
                    Some(c) if c.owner == Some(owner) => tower_shadows.push(p),
                    _ => break,
                }
            }
            let tower = tower_shadows
                .iter()
                .map(|iv| {
                    d.shadow(iv)
                        .expect("tower shadows are shadows")
                        .squares
                        .iter()
                        .copied()
                        .min_by_key(|&id| kind_rank(d.square(id).kind))
                        .expect("a shadow has at least one square")
                })
                .collect::<Vec<_>>();
            let squares: Vec<usize> = {
                let mut v: Vec<usize> =
                    ivs.iter().flat_map(|iv| d.shadow(iv).unwrap().squares.iter().copied()).collect();
                v.sort_unstable();
                v
            };
            let gangs = tower
                .iter()
                .map(|&t| {
                    let qt = d.square(t);
                    squares
                        .iter()
                        .copied()
                        .filter(|&q| {
                            let s = d.square(q);
                            s.level == qt.level && (s.i - qt.i).abs() < 100 && (s.j - qt.j).abs() < 100
                        })
                        .collect()
                })
                .collect();
            groups.insert(owner, Group { owner, shadows: ivs, squares, tower_shadows, tower, gangs });
        }

        let square_owner = d.squares().iter().map(|q| shadows[&q.shadow()].owner).collect();
        let square_easy = d.squares().iter().map(|q| shadows[&q.shadow()].easy).collect();
        let table = GroupTable { shadows, groups, square_owner, square_easy };

        for (id, q) in d.squares().iter().enumerate() {
            if q.relevant && !table.square_easy[id] && table.square_owner[id].is_none() {
                return Err(Error::invariant(format!("hard relevant square {id} has no group owner")));
            }
        }
        Ok(table)
    }

    pub fn easy(&self, id: usize) -> bool {
        self.square_easy[id]
    }

    pub fn owner(&self, id: usize) -> Option<PlusSite> {
        self.square_owner[id]
    }

    pub fn group(&self, owner: PlusSite) -> Option<&Group> {
        self.groups.get(&owner)
    }

    /// Structural checks: one owner per hard relevant shadow, group
    /// separation, tower shape and gang coverage.
    pub fn audit(&self, d: &CzDecomposition, sites: &SiteSet) -> Audit {
        let mut a = Audit::new();
        let relevant_shadows: std::collections::BTreeSet<DyadicInterval> =
            d.squares().iter().filter(|q| q.relevant).map(|q| q.shadow()).collect();

        for (iv, c) in &self.shadows {
            let brute = brute_owners(iv, sites);
            a.record("at most one owner per shadow", brute.len() <= 1, || format!("{iv:?}: {brute:?}"));
            a.record("owner matches enumeration", brute.first().copied() == c.owner, || {
                format!("{iv:?}: table {:?}, enumeration {brute:?}", c.owner)
            });
            if !c.easy && relevant_shadows.contains(iv) {
                a.record("hard relevant shadow has exactly one owner", brute.len() == 1, || format!("{iv:?}"));
            }
        }

        for g in self.groups.values() {
            let mut lo_max: Option<Approx> = None;
            let mut hi_min: Option<Approx> = None;
            for iv in &g.shadows {
                let nine = iv.dilate_by(Factor::int(9));
                if lo_max.as_ref().is_none_or(|l| nine.lo.cmp_to(l).is_gt()) {
                    lo_max = Some(nine.lo.clone());
                }
                if hi_min.as_ref().is_none_or(|h| nine.hi.cmp_to(h).is_lt()) {
                    hi_min = Some(nine.hi.clone());
                }
            }
            // Open intervals on a line meet pairwise iff max(lo) < min(hi).
            a.record("9J ∩ 9J' nonempty within a group", lo_max.unwrap().cmp_to(&hi_min.unwrap()).is_lt(), || {
                format!("group of {:?}", g.owner)
            });

            let i0 = g.tower_shadows[0];
            let il = g.tower_shadows[g.top()];
            let xs = sites.plus_x(g.owner).exact;
            let dist = i0.lo().exact - &xs;
            a.record("|I_L| >= dist(x*, I_0)/42", il.length() * rational::from_i64(42) >= dist, || {
                format!("group of {:?}", g.owner)
            });
            for w in g.tower.windows(2) {
                a.record("tower sides double", d.square(w[1]).level + 1 == d.square(w[0]).level, || {
                    format!("group of {:?}", g.owner)
                });
            }
            a.record("Q_L is easy", self.square_easy[g.big()], || format!("group of {:?}", g.owner));
            let min_len = g.shadows.iter().map(|s| s.log2_length()).min().unwrap();
            a.record("I_0 has minimal length", i0.log2_length() == min_len, || format!("group of {:?}", g.owner));

            for &q in &g.squares {
                if self.square_easy[q] {
                    continue;
                }
                let covered = g.gangs[..g.top()].iter().any(|gang| gang.contains(&q));
                a.record("hard group squares are gang-covered", covered, || format!("square {q}"));
                a.record("hard shadows are shorter than I_L", d.square(q).level > d.square(g.big()).level, || {
                    format!("square {q}")
                });
            }
            for gang in &g.gangs {
                a.measure_max("max gang size", gang.len() as f64);
            }
            for l in 0..g.tower.len() {
                for m in l + 1..g.tower.len() {
                    let c = containment_constant(d, g.tower[l], g.tower[m]);
                    a.measure_max("max tower containment constant", c);
                }
            }
            a.measure_max("max tower height", g.top() as f64);
        }

        for (id, _) in d.squares().iter().enumerate() {
            let Some(o) = self.square_owner[id] else { continue };
            for &n in d.neighbors(id) {
                if let Some(on) = self.square_owner[n] {
                    a.record("touching squares share a group", on == o, || format!("squares {id} and {n}"));
                }
            }
        }

        let easy = self.square_easy.iter().filter(|&&e| e).count();
        a.measure_max("easy squares per site", easy as f64 / sites.len() as f64);
        a
    }
}

/// Smallest `C` with `Q_a ⊂ C Q_b` (boundary excluded): twice the
/// sup-distance from the center of `Q_b` to the far corner of `Q_a`, over `δ_b`.
pub fn containment_constant(d: &CzDecomposition, a: usize, b: usize) -> f64 {
    let (ax, ay, as_) = d.square(a).bounds;
    let (bx, by, bs) = d.square(b).bounds;
    let (cx, cy) = (bx + 0.5 * bs, by + 0.5 * bs);
    let reach = (ax - cx).abs().max((ax + as_ - cx).abs()).max((ay - cy).abs()).max((ay + as_ - cy).abs());
    2.0 * reach / bs
}

/// All `x ∈ E+` satisfying the two group conditions for `I`, by a linear
/// scan over `E+` in sorted order (condition (b) holds iff the successor of
/// `x` lies beyond `inf 9I`).
pub fn brute_owners(iv: &DyadicInterval, sites: &SiteSet) -> Vec<PlusSite> {
    let nine_lo = iv.dilate_by(Factor::int(9)).lo;
    let forty_one_lo = iv.dilate_by(Factor::int(41)).lo;
    let outer = sites.plus_x(PlusSite::Outer);
    let n = sites.len();
    let at = |k: usize| if k == 0 { &outer } else { sites.x(k - 1) };
    let mut out = Vec::new();
    for k in 0..=n {
        let xv = at(k);
        let a = xv.cmp_to(&forty_one_lo).is_le();
        let b = xv.cmp_to(&nine_lo).is_le() && (k == n || at(k + 1).cmp_to(&nine_lo).is_gt());
        if a && b {
            out.push(if k == 0 { PlusSite::Outer } else { PlusSite::Site(k - 1) });
        }
    }
    out
}
