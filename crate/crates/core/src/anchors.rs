//! Special points `z1(Q), z2(Q) ∈ E+` and `z̄(Q) ∈ E` for relevant squares.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::audit::Audit;
use crate::czdecomp::CzDecomposition;
use crate::error::{Error, Result};
use crate::geometry::{DyadicSquare, Factor};
use crate::grouping::{GroupTable, K};
use crate::rational;
use crate::sites::{PlusSite, SiteSet};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PairSource {
    EasyPair,
    BigSquarePair,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PinSource {
    /// The unique site in `1.1Q`.
    Unique,
    /// Closest site of `E ∩ 7Q` for an easy square.
    Easy7Q,
    /// Shared pin of the group, taken from `7 Q_small`.
    GroupSmall,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Anchor {
    pub z1: PlusSite,
    pub z2: PlusSite,
    pub zbar: usize,
    pub pair: PairSource,
    pub pin: PinSource,
}

#[derive(Clone, Debug)]
pub struct AnchorAssignment {
    /// Indexed by square id; `None` for squares that are not relevant.
    anchors: Vec<Option<Anchor>>,
    /// `z̄(z*)` per group owner.
    pub group_pins: BTreeMap<PlusSite, usize>,
}

/// Site of `E ∩ 7Q` closest to the center of `Q`, ties to the smaller.
fn closest_in_7q(sq: &DyadicSquare, sites: &SiteSet) -> Option<usize> {
    if !sq.dilation_meets_axis(Factor::int(7)) {
        return None;
    }
    let seven = sq.dilate_by(Factor::int(7));
    sites.closest_in_open(&seven.x.lo, &seven.x.hi, &sq.shadow().center())
}

impl AnchorAssignment {
    pub fn assign(d: &CzDecomposition, groups: &GroupTable, sites: &SiteSet) -> Result<Self> {
        let mut group_pins = BTreeMap::new();
        for (owner, g) in &groups.groups {
            let small = &d.square(g.small()).square;
            let pin = closest_in_7q(small, sites)
                .ok_or_else(|| Error::invariant(format!("no site in 7 Q_small for group of {owner:?}")))?;
            group_pins.insert(*owner, pin);
        }

        let mut anchors = vec![None; d.len()];
        for (id, q) in d.squares().iter().enumerate() {
            if !q.relevant {
                continue;
            }
            let easy = groups.easy(id);
            let (pair_of, pair) = if easy {
                (id, PairSource::EasyPair)
            } else {
                let owner = groups
                    .owner(id)
                    .ok_or_else(|| Error::invariant(format!("hard relevant square {id} has no group")))?;
                (groups.groups[&owner].big(), PairSource::BigSquarePair)
            };
            let class = &groups.shadows[&d.square(pair_of).shadow()];
            let (z1, z2) = match class.extremes {
                Some((a, b)) if class.easy && a != b => (a, b),
                _ => return Err(Error::invariant(format!("square {pair_of} is marked easy without a witnessing pair"))),
            };
            let (zbar, pin) = if let Some(s) = q.site_in_1_1 {
                (s, PinSource::Unique)
            } else if easy {
                let s = closest_in_7q(&q.square, sites)
                    .ok_or_else(|| Error::invariant(format!("no site in 7Q for easy square {id}")))?;
                (s, PinSource::Easy7Q)
            } else {
                (group_pins[&groups.owner(id).unwrap()], PinSource::GroupSmall)
            };
            anchors[id] = Some(Anchor { z1, z2, zbar, pair, pin });
        }
        Ok(AnchorAssignment { anchors, group_pins })
    }

    pub fn get(&self, id: usize) -> Option<&Anchor> {
        self.anchors[id].as_ref()
    }

    /// `{z1(Q), z2(Q), z̄(Q)}` for a relevant square.
    pub fn anchor_sites(&self, id: usize) -> Result<Vec<PlusSite>> {
        let a = self.anchors.get(id).and_then(|a| a.as_ref()).ok_or_else(|| {
            Error::input(format!("square {id} is not relevant"))
        })?;
        let mut v = vec![a.z1, a.z2, PlusSite::Site(a.zbar)];
        v.sort();
        v.dedup();
        Ok(v)
    }

    /// Checks the anchor placement claims and records measured containment
    /// constants.
    pub fn audit(&self, d: &CzDecomposition, groups: &GroupTable, sites: &SiteSet) -> Audit {
        let mut a = Audit::new();
        for (id, q) in d.squares().iter().enumerate() {
            let Some(an) = self.get(id) else { continue };
            let x1 = sites.plus_x(an.z1).exact;
            let x2 = sites.plus_x(an.z2).exact;
            a.record("x1 != x2", x1 != x2, || format!("square {id}"));
            let c = q.square.shadow().center();
            let cy = q.square.y_interval().center().approx;
            let delta = q.side_f64();
            let reach = |x: f64| 2.0 * (x - c.approx).abs().max(cy.abs()) / delta;
            if groups.easy(id) {
                let sep = num::Signed::abs(&(&x2 - &x1)) * rational::from_i64(K as i64);
                a.record("easy pair separation >= δ/K", sep >= q.square.side(), || format!("square {id}"));
                let big = q.square.dilate_by(Factor::int(K + 1));
                for z in [an.z1, an.z2] {
                    let inside = big.contains_axis_point(&sites.plus_x(z));
                    a.record("easy anchors in (K+1)Q", inside, || format!("square {id}, {z:?}"));
                }
            } else {
                let owner = groups.owner(id).unwrap();
                let big = groups.groups[&owner].big();
                let inherited = self.get(big).map(|b| (b.z1, b.z2));
                a.record("hard squares inherit the Q_big pair", Some((an.z1, an.z2)) == inherited || inherited.is_none(), || {
                    format!("square {id}")
                });
                for z in [an.z1, an.z2] {
                    a.measure_max("max pair containment constant (hard)", reach(sites.plus_x_f64(z)));
                }
            }
            if let Some(s) = q.site_in_1_1 {
                a.record("z̄ is the unique site in 1.1Q", an.zbar == s, || format!("square {id}"));
            }
            let three_hundred = q.square.dilate_by(Factor::int(300));
            a.record("z̄ in 300Q", three_hundred.contains_axis_point(sites.x(an.zbar)), || format!("square {id}"));
            a.measure_max("max z̄ containment constant", reach(sites.x_f64(an.zbar)));
            let n = self.anchor_sites(id).map(|v| v.len()).unwrap_or(0);
            a.record("at most 3 anchor sites", (1..=3).contains(&n), || format!("square {id}"));
        }
        a
    }
}
