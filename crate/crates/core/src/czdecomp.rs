//! Calderón–Zygmund decomposition of the root square: maximal dyadic squares
//! `Q` with `#(E ∩ 3Q) <= 1`, their neighbor graph, shadows and relevance.

use std::collections::BTreeMap;

use rustc_hash::FxHashMap;

use serde::{Deserialize, Serialize};

use crate::audit::Audit;
use crate::error::{Error, Result};
use crate::geometry::{self, DyadicInterval, DyadicSquare, Factor, ONE_POINT_ONE};
use crate::rational;
use crate::sites::SiteSet;

/// Position of a CZ square relative to the x-axis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    /// `I x [0, |I|]`
    ContactAbove,
    /// `I x [-|I|, 0]`
    ContactBelow,
    /// `I x [|I|, 2|I|]`
    ContactlessAbove,
    /// `I x [-2|I|, -|I|]`
    ContactlessBelow,
}

impl Kind {
    fn from_j(j: i128) -> Option<Kind> {
        match j {
            0 => Some(Kind::ContactAbove),
            -1 => Some(Kind::ContactBelow),
            1 => Some(Kind::ContactlessAbove),
            -2 => Some(Kind::ContactlessBelow),
            _ => None,
        }
    }

    pub fn is_contact(self) -> bool {
        matches!(self, Kind::ContactAbove | Kind::ContactBelow)
    }
}

#[derive(Clone, Debug)]
pub struct CzSquare {
    pub square: DyadicSquare,
    pub level: u32,
    pub i: i128,
    pub j: i128,
    pub kind: Kind,
    pub relevant: bool,
    /// The unique site in `1.1Q`, if any.
    pub site_in_1_1: Option<usize>,
    /// `(x0, y0, side)` as floats.
    pub bounds: (f64, f64, f64),
}

impl CzSquare {
    pub fn side_f64(&self) -> f64 {
        self.bounds.2
    }

    pub fn shadow(&self) -> DyadicInterval {
        self.square.shadow()
    }
}

#[derive(Clone, Debug)]
pub struct Shadow {
    /// CZ squares over this shadow, in id order.
    pub squares: Vec<usize>,
    /// Index of `x̂(I)`, the site of `E ∩ 3I+` closest to the center of `I`.
    pub xhat: usize,
}

#[derive(Clone, Debug)]
struct Node {
    square: DyadicSquare,
    bounds: (f64, f64, f64),
    children: Option<[u32; 4]>,
    leaf: Option<usize>,
}

#[derive(Clone, Debug)]
pub struct CzDecomposition {
    squares: Vec<CzSquare>,
    index: FxHashMap<DyadicSquare, usize>,
    neighbors: Vec<Vec<usize>>,
    shadows: BTreeMap<DyadicInterval, Shadow>,
    nodes: Vec<Node>,
}

/// `#(E ∩ 3Q)` via a sorted-range query: only boxes meeting the axis can hold sites.
pub fn count_in_dilation(sq: &DyadicSquare, c: Factor, sites: &SiteSet) -> usize {
    if !sq.dilation_meets_axis(c) {
        return 0;
    }
    let x = sq.shadow().dilate_by(c);
    sites.count_in_open(&x.lo, &x.hi)
}

fn inner_meets(sq: &DyadicSquare) -> bool {
    let b = sq.dilate_by(ONE_POINT_ONE);
    let (lo, hi) = geometry::inner_bounds();
    b.x.meets_closed(&lo, &hi) && b.y.meets_closed(&lo, &hi)
}

impl CzDecomposition {
    pub fn decompose(sites: &SiteSet) -> Result<Self> {
        let mut nodes = vec![Node {
            square: DyadicSquare::Root,
            bounds: DyadicSquare::Root.bounds_f64(),
            children: None,
            leaf: None,
        }];
        let mut stack = vec![0usize];
        let mut leaves = Vec::new();
        while let Some(n) = stack.pop() {
            let sq = nodes[n].square;
            let split = match sq {
                DyadicSquare::Root => true,
                _ => count_in_dilation(&sq, Factor::int(3), sites) > 1,
            };
            if !split {
                leaves.push(n);
                continue;
            }
            if sq.level() == Some(geometry::MAX_LEVEL) {
                return Err(Error::input(format!("decomposition exceeds level {}", geometry::MAX_LEVEL)));
            }
            let mut ids = [0u32; 4];
            for (slot, child) in sq.children().into_iter().enumerate() {
                ids[slot] = nodes.len() as u32;
                stack.push(nodes.len());
                nodes.push(Node { square: child, bounds: child.bounds_f64(), children: None, leaf: None });
            }
            nodes[n].children = Some(ids);
        }

        let mut keyed: Vec<((u32, i128, i128), usize)> = leaves
            .into_iter()
            .map(|n| match nodes[n].square {
                DyadicSquare::Cell { level, i, j } => ((level, i, j), n),
                DyadicSquare::Root => ((0, i128::MIN, i128::MIN), n),
            })
            .collect();
        keyed.sort_unstable();
        let leaves: Vec<(DyadicSquare, usize)> = keyed.into_iter().map(|(_, n)| (nodes[n].square, n)).collect();

        let mut squares = Vec::with_capacity(leaves.len());
        let mut index = FxHashMap::with_capacity_and_hasher(leaves.len(), Default::default());
        for (id, &(sq, n)) in leaves.iter().enumerate() {
            nodes[n].leaf = Some(id);
            let DyadicSquare::Cell { level, i, j } = sq else {
                return Err(Error::invariant("root square survived as a CZ square"));
            };
            let kind = Kind::from_j(j).ok_or_else(|| {
                Error::invariant(format!("CZ square (k={level}, i={i}, j={j}) is not one of the four axis forms"))
            })?;
            let site_in_1_1 = {
                if sq.dilation_meets_axis(ONE_POINT_ONE) {
                    let x = sq.shadow().dilate_by(ONE_POINT_ONE);
                    let r = sites.in_open(&x.lo, &x.hi);
                    if r.len() > 1 {
                        return Err(Error::invariant(format!("two sites in 1.1Q for square {id}")));
                    }
                    r.into_iter().next()
                } else {
                    None
                }
            };
            squares.push(CzSquare {
                square: sq,
                level,
                i,
                j,
                kind,
                relevant: inner_meets(&sq),
                site_in_1_1,
                bounds: sq.bounds_f64(),
            });
            index.insert(sq, id);
        }

        let mut d = CzDecomposition { squares, index, neighbors: Vec::new(), shadows: BTreeMap::new(), nodes };
        let node_of: FxHashMap<DyadicSquare, usize> = d.nodes.iter().enumerate().map(|(n, node)| (node.square, n)).collect();
        let mut stack = Vec::new();
        d.neighbors = (0..d.squares.len()).map(|id| d.touching_leaves(&d.squares[id].square, &node_of, &mut stack)).collect();

        let mut shadows: BTreeMap<DyadicInterval, Vec<usize>> = BTreeMap::new();
        for (id, q) in d.squares.iter().enumerate() {
            shadows.entry(q.shadow()).or_default().push(id);
        }
        for (iv, ids) in shadows {
            let xhat = pick_xhat(&iv, sites)?;
            d.shadows.insert(iv, Shadow { squares: ids, xhat });
        }
        Ok(d)
    }

    /// Leaves meeting `q`: look up the nine same-level cells around `q`; a
    /// missing cell lies inside a coarser leaf, an existing one is searched
    /// downward.
    /// Leaves meeting `q`: look up the nine same-level cells around `q`; a
    /// missing cell lies inside a coarser leaf, an existing one is searched
    /// downward.
    fn touching_leaves(&self, q: &DyadicSquare, node_of: &FxHashMap<DyadicSquare, usize>, stack: &mut Vec<usize>) -> Vec<usize> {
        let mut out = Vec::new();
        let DyadicSquare::Cell { level, i, j } = *q else {
            self.touching_leaves_from(q, 0, stack, &mut out);
            return out;
        };
        for di in -1..=1 {
            for dj in -1..=1 {
                let Ok(mut c) = DyadicSquare::new(level, i + di, j + dj) else { continue };
                loop {
                    if let Some(&n) = node_of.get(&c) {
                        self.touching_leaves_from(q, n, stack, &mut out);
                        break;
                    }
                    match c.parent() {
                        Ok(p) => c = p,
                        Err(_) => break,
                    }
                }
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }

    fn touching_leaves_from(&self, q: &DyadicSquare, start: usize, stack: &mut Vec<usize>, out: &mut Vec<usize>) {
        stack.clear();
        stack.push(start);
        while let Some(n) = stack.pop() {
            let node = &self.nodes[n];
            if !node.square.touches(q) {
                continue;
            }
            match (node.children, node.leaf) {
                (Some(ch), _) => stack.extend(ch.iter().map(|&c| c as usize)),
                (None, Some(id)) => out.push(id),
                (None, None) => {}
            }
        }
    }

    pub fn squares(&self) -> &[CzSquare] {
        &self.squares
    }

    pub fn square(&self, id: usize) -> &CzSquare {
        &self.squares[id]
    }

    pub fn len(&self) -> usize {
        self.squares.len()
    }

    pub fn is_empty(&self) -> bool {
        self.squares.is_empty()
    }

    pub fn id_of(&self, q: &DyadicSquare) -> Option<usize> {
        self.index.get(q).copied()
    }

    /// CZ squares whose closure meets that of `id`, including `id` itself.
    pub fn neighbors(&self, id: usize) -> &[usize] {
        &self.neighbors[id]
    }

    pub fn neighbors_of(&self, q: &DyadicSquare) -> Result<&[usize]> {
        let id = self.id_of(q).ok_or_else(|| Error::input("square is not part of the decomposition"))?;
        Ok(self.neighbors(id))
    }

    pub fn shadows(&self) -> &BTreeMap<DyadicInterval, Shadow> {
        &self.shadows
    }

    pub fn shadow(&self, iv: &DyadicInterval) -> Option<&Shadow> {
        self.shadows.get(iv)
    }

    pub fn relevant_ids(&self) -> Vec<usize> {
        (0..self.squares.len()).filter(|&id| self.squares[id].relevant).collect()
    }

    pub fn max_level(&self) -> u32 {
        self.squares.iter().map(|q| q.level).max().unwrap_or(0)
    }

    /// Leaves whose closed `c`-dilation contains `(x, y)`, in float arithmetic.
    pub fn leaves_near(&self, x: f64, y: f64, c: f64, out: &mut Vec<usize>) {
        out.clear();
        let mut stack = vec![0usize];
        while let Some(n) = stack.pop() {
            let node = &self.nodes[n];
            let (x0, y0, s) = node.bounds;
            let pad = 0.5 * (c - 1.0) * s;
            if x < x0 - pad || x > x0 + s + pad || y < y0 - pad || y > y0 + s + pad {
                continue;
            }
            match (node.children, node.leaf) {
                (Some(ch), _) => stack.extend(ch.iter().map(|&c| c as usize)),
                (None, Some(id)) => out.push(id),
                (None, None) => {}
            }
        }
        out.sort_unstable();
    }

    /// The CZ square containing `(x, y)`; on shared edges the upper/right one.
    pub fn locate(&self, x: f64, y: f64) -> Option<usize> {
        let (x0, y0, s) = self.nodes[0].bounds;
        if x < x0 || x > x0 + s || y < y0 || y > y0 + s {
            return None;
        }
        let mut n = 0usize;
        loop {
            let node = &self.nodes[n];
            match node.children {
                None => return node.leaf,
                Some(ch) => {
                    let (x0, y0, s) = node.bounds;
                    let right = x >= x0 + 0.5 * s;
                    let up = y >= y0 + 0.5 * s;
                    n = ch[(up as usize) * 2 + right as usize] as usize;
                }
            }
        }
    }

    /// Structural checks on the tiling.
    pub fn audit(&self, sites: &SiteSet) -> Audit {
        let mut a = Audit::new();
        let mut area = rational::from_i64(0);
        for q in &self.squares {
            area += q.square.area();
        }
        a.record("tiling area sum equals 4", area == rational::from_i64(4), || {
            format!("area sum {}", rational::format(&area))
        });

        for (id, q) in self.squares.iter().enumerate() {
            let mut anc = q.square.parent();
            let mut nested = false;
            while let Ok(p) = anc {
                if self.index.contains_key(&p) {
                    nested = true;
                    break;
                }
                anc = p.parent();
            }
            a.record("no interior overlaps", !nested, || format!("square {id} lies inside another CZ square"));

            let own = count_in_dilation(&q.square, Factor::int(3), sites);
            a.record("stopping rule #(E ∩ 3Q) <= 1", own <= 1, || format!("square {id} has {own} sites in 3Q"));
            let parent = q.square.parent().expect("CZ squares are never the root");
            let up = match parent {
                DyadicSquare::Root => sites.len(),
                _ => count_in_dilation(&parent, Factor::int(3), sites),
            };
            a.record("maximality", up >= 2, || format!("parent of square {id} has {up} sites in 3Q"));

            a.record("four axis forms", Kind::from_j(q.j) == Some(q.kind), || format!("square {id} j={}", q.j));
            if !q.kind.is_contact() {
                a.record("contactless squares avoid E in 3Q", own == 0, || format!("square {id}"));
            }
            if q.relevant {
                a.record("relevant squares have side <= 2^-8", q.level >= 8, || {
                    format!("square {id} at level {}", q.level)
                });
            }

            let nb = &self.neighbors[id];
            a.measure_max("max neighbors", nb.len() as f64);
            a.record("neighbors include the square", nb.contains(&id), || format!("square {id}"));
            for &o in nb {
                let diff = (self.squares[o].level as i64 - q.level as i64).abs();
                a.record("touching side ratio in {1/2, 1, 2}", diff <= 1, || {
                    format!("squares {id} and {o} differ by {diff} levels")
                });
            }
        }

        for (iv, sh) in &self.shadows {
            if let DyadicInterval::Cell { level, .. } = iv {
                if *level >= 2 {
                    let p = iv.parent().expect("cell has a parent");
                    a.record("parent of a shadow is a shadow", self.shadows.contains_key(&p), || format!("{iv:?}"));
                }
            }
            let seven = iv.dilate_by(Factor::int(7));
            a.record("x̂(I) in 7I", seven.contains(sites.x(sh.xhat)), || format!("{iv:?}"));
        }
        a
    }
}

/// `x̂(I)`: the site of `E ∩ 3I+` closest to the center of `I`, ties to the smaller.
pub fn pick_xhat(iv: &DyadicInterval, sites: &SiteSet) -> Result<usize> {
    let parent = iv.parent().map_err(|_| Error::invariant("x̂ requested for the root interval"))?;
    let three = parent.dilate_by(Factor::int(3));
    let c = iv.center();
    sites
        .closest_in_open(&three.lo, &three.hi, &c)
        .ok_or_else(|| Error::invariant(format!("no site in 3I+ for shadow {iv:?}")))
}
