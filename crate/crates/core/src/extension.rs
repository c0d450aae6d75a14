//! The extension operator: Whitney interpolant on `Q_inner`, glued by a
//! cutoff to an affine function outside.
//!
//! Slices are stored as offsets from the chord `B` through `(±2^-11, f±)`,
//! computed exactly: `L_Q = B + Δ_Q` with `Δ_Q(x) = δc_Q + δD_Q (x - x̄_Q)`.
//! Since `Σθ_Q = 1`, `Σθ_Q L_Q = B + Σθ_Q Δ_Q`, so affine data produce
//! `Δ_Q ≡ 0` and an exactly zero hessian.

use std::collections::BTreeSet;

use rustc_hash::FxHashMap;

use num::Zero;

use crate::bump::{self, Jet};
use crate::error::{Error, Result};
use crate::geometry::INNER_HALF_WIDTH;
use crate::pipeline::Model;
use crate::rational::{self, Rational};
use crate::sites::{PlusSite, FRAME_HALF};

#[derive(Clone, Copy, Debug)]
struct SliceOffset {
    id: usize,
    c: f64,
    slope: f64,
    xbar: f64,
}

/// Partition weight of one square at a point.
#[derive(Clone, Copy, Debug)]
pub struct Weight {
    pub id: usize,
    pub theta: Jet,
}

#[derive(Clone, Debug)]
pub struct ExtensionField<'m> {
    model: &'m Model,
    /// Indexed by square id; only relevant squares are populated.
    offsets: Vec<Option<SliceOffset>>,
    f_minus: f64,
    chord_slope: f64,
    /// y-slope of the outer affine function.
    outer_y_slope: f64,
    /// Squares used to pin that slope at `(2^-11, 2^-11)`.
    corner_squares: Vec<usize>,
    values: Vec<f64>,
}

/// Point evaluation with the sites whose data it used.
#[derive(Clone, Debug)]
pub struct Evaluation {
    pub jet: Jet,
    pub witnesses: BTreeSet<usize>,
}

impl<'m> ExtensionField<'m> {
    /// `values` are data in sorted-site order.
    pub fn new(model: &'m Model, values: &[f64]) -> Result<Self> {
        let sites = &model.sites;
        let n = sites.len();
        if values.len() != n {
            return Err(Error::input(format!("expected {n} values, got {}", values.len())));
        }
        let exact: Vec<Rational> = values.iter().map(|&v| rational::from_f64(v)).collect::<Result<_>>()?;
        let (ap, am) = crate::sites::outer_affine_constants();
        let outer = &ap * &exact[n - 1] + &am * &exact[0];
        let fplus = |s: PlusSite| match s {
            PlusSite::Outer => outer.clone(),
            PlusSite::Site(k) => exact[k].clone(),
        };
        let h = rational::dyadic(1, 11);
        let chord = (&exact[n - 1] - &exact[0]) / (&h + &h);
        let chord_at = |x: &Rational| &exact[0] + &chord * (x + &h);

        // Slices share few distinct anchor pairs and pins; each is computed once.
        let mut slopes: FxHashMap<(PlusSite, PlusSite), f64> = FxHashMap::default();
        let mut pins: FxHashMap<usize, f64> = FxHashMap::default();
        let mut offsets = vec![None; model.cz.len()];
        for (&id, sl) in &model.family.slices {
            let slope = *slopes.entry((sl.z1, sl.z2)).or_insert_with(|| {
                let d = sl.slope(fplus) - &chord;
                if d.is_zero() { 0.0 } else { rational::to_f64(&d) }
            });
            let c = *pins
                .entry(sl.zbar)
                .or_insert_with(|| rational::to_f64(&(fplus(PlusSite::Site(sl.zbar)) - chord_at(&sl.xbar))));
            offsets[id] = Some(SliceOffset { id, c, slope, xbar: sites.x_f64(sl.zbar) });
        }
        let mut field = ExtensionField {
            model,
            offsets,
            f_minus: values[0],
            chord_slope: rational::to_f64(&chord),
            outer_y_slope: 0.0,
            corner_squares: Vec::new(),
            values: values.to_vec(),
        };
        let mut used = Vec::new();
        let corner = field.offset_sum(FRAME_HALF, FRAME_HALF, &mut used)?;
        field.outer_y_slope = corner.v / FRAME_HALF;
        field.corner_squares = used;
        Ok(field)
    }

    pub fn model(&self) -> &Model {
        self.model
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// The chord `B` through `(±2^-11, f±)`.
    fn chord(&self, x: f64, y: f64) -> Jet {
        Jet::affine(self.f_minus + self.chord_slope * FRAME_HALF, self.chord_slope, 0.0, x, y)
    }

    /// Normalized weights `θ_Q` of the relevant squares whose bump is nonzero at `(x, y)`.
    pub fn weights(&self, x: f64, y: f64) -> Result<Vec<Weight>> {
        let mut scratch = Vec::new();
        self.weights_into(x, y, &mut scratch)
    }

    fn weights_into(&self, x: f64, y: f64, near: &mut Vec<usize>) -> Result<Vec<Weight>> {
        self.model.cz.leaves_near(x, y, 1.1, near);
        let mut phis = Vec::with_capacity(near.len());
        let mut sum = Jet::ZERO;
        for &id in near.iter() {
            if self.offsets[id].is_none() {
                continue;
            }
            let (x0, y0, s) = self.model.cz.square(id).bounds;
            let phi = bump::square_bump(x, y, x0, y0, s);
            if phi.v == 0.0 {
                continue;
            }
            sum = sum + phi;
            phis.push((id, phi));
        }
        if sum.v <= 0.0 {
            return Err(Error::invariant(format!("no bump covers ({x}, {y}); partition of unity has a hole")));
        }
        Ok(phis.into_iter().map(|(id, phi)| Weight { id, theta: phi.quotient(&sum) }).collect())
    }

    /// `Σ θ_Q Δ_Q` at `(x, y)`, recording the squares used.
    fn offset_sum(&self, x: f64, y: f64, used: &mut Vec<usize>) -> Result<Jet> {
        let mut near = Vec::new();
        let ws = self.weights_into(x, y, &mut near)?;
        let mut g = Jet::ZERO;
        used.clear();
        for w in ws {
            let o = self.offsets[w.id].expect("weights only cover relevant squares");
            let delta = Jet::affine(o.c, o.slope, 0.0, x - o.xbar, 0.0);
            g = g + w.theta.product(&delta);
            used.push(o.id);
        }
        Ok(g)
    }

    /// `T+ f+` on `Q_inner`.
    pub fn evaluate_inner(&self, x: f64, y: f64) -> Result<Evaluation> {
        if x.abs() > INNER_HALF_WIDTH || y.abs() > INNER_HALF_WIDTH {
            return Err(Error::input(format!("({x}, {y}) lies outside Q_inner")));
        }
        let mut used = Vec::new();
        let g = self.offset_sum(x, y, &mut used)?;
        let mut witnesses = self.chord_witnesses();
        for id in used {
            self.add_anchor_witnesses(id, &mut witnesses);
        }
        Ok(Evaluation { jet: self.chord(x, y) + g, witnesses })
    }

    fn chord_witnesses(&self) -> BTreeSet<usize> {
        [0, self.model.sites.len() - 1].into_iter().collect()
    }

    fn add_anchor_witnesses(&self, id: usize, w: &mut BTreeSet<usize>) {
        let n = self.model.sites.len();
        for s in self.model.anchors.anchor_sites(id).unwrap_or_default() {
            match s {
                PlusSite::Site(k) => {
                    w.insert(k);
                }
                PlusSite::Outer => {
                    w.insert(0);
                    w.insert(n - 1);
                }
            }
        }
    }

    /// `T♯ f` at a point of the normalized frame.
    pub fn jet(&self, x: f64, y: f64) -> Result<Jet> {
        self.glue(x, y, &mut Vec::new())
    }

    fn glue(&self, x: f64, y: f64, used: &mut Vec<usize>) -> Result<Jet> {
        let chi = bump::cutoff(x, y);
        let outer = Jet::affine(0.0, 0.0, self.outer_y_slope, x, y);
        used.clear();
        let glued = if chi.v > 0.0 {
            let g = self.offset_sum(x, y, used)?;
            outer + chi.product(&(g - outer))
        } else {
            outer
        };
        Ok(self.chord(x, y) + glued)
    }

    /// `T♯ f` together with the sites its value depends on.
    pub fn evaluate(&self, x: f64, y: f64) -> Result<Evaluation> {
        let mut used = Vec::new();
        let jet = self.glue(x, y, &mut used)?;
        let mut witnesses = self.chord_witnesses();
        if bump::cutoff(x, y).v < 1.0 {
            used.extend_from_slice(&self.corner_squares);
        }
        for id in used {
            self.add_anchor_witnesses(id, &mut witnesses);
        }
        Ok(Evaluation { jet, witnesses })
    }

    /// `T♯ f` at a user-coordinate point, with derivatives in user coordinates.
    pub fn evaluate_user(&self, ux: f64, uy: f64) -> Result<Evaluation> {
        let (x, y) = self.model.sites.to_frame(ux, uy);
        let mut e = self.evaluate(x, y)?;
        e.jet = e.jet.to_user(self.model.sites.scale_f64());
        Ok(e)
    }

    /// Value at a site in sorted order, via the normalized frame.
    pub fn value_at_site(&self, k: usize) -> Result<f64> {
        Ok(self.jet(self.model.sites.x_f64(k), 0.0)?.v)
    }
}
