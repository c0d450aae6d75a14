//! Panelized tensor Gauss quadrature of `∫|∇²T♯f|^p`.
//!
//! Outside `Q_inner` the extension is affine, so only relevant cells clipped
//! to `Q_inner` carry mass. Each clipped cell is cut along every bump and
//! cutoff breakpoint that crosses it, so the integrand is polynomial-smooth
//! on each panel.

use rayon::prelude::*;
use serde::Serialize;

use super::gauss;
use crate::bump;
use crate::error::{Error, Result};
use crate::extension::ExtensionField;
use crate::functionals::check_p;
use crate::geometry::INNER_HALF_WIDTH;

#[derive(Clone, Debug, Serialize)]
pub struct CellContribution {
    pub id: usize,
    pub value: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct QuadratureReport {
    pub p: f64,
    /// `∫|∇²T♯f|^p` over the plane, normalized frame.
    pub total: f64,
    /// The same in user coordinates, `total · s^(2p-2)`.
    pub user_total: f64,
    pub order: usize,
    pub refine: u32,
    pub cells: Vec<CellContribution>,
}

/// Sorted breakpoints inside `(lo, hi)`, with the ends.
fn cuts(lo: f64, hi: f64, breaks: impl IntoIterator<Item = f64>) -> Vec<f64> {
    let mut v: Vec<f64> = breaks.into_iter().filter(|&b| b > lo && b < hi).collect();
    v.push(lo);
    v.push(hi);
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

/// Panels `(x0, x1, y0, y1)` of one relevant cell, clipped to `Q_inner`.
fn panels(field: &ExtensionField, id: usize) -> Vec<(f64, f64, f64, f64)> {
    let cz = &field.model().cz;
    let (x0, y0, s) = cz.square(id).bounds;
    let w = INNER_HALF_WIDTH;
    let (xl, xh) = (x0.max(-w), (x0 + s).min(w));
    let (yl, yh) = (y0.max(-w), (y0 + s).min(w));
    if xl >= xh || yl >= yh {
        return Vec::new();
    }
    let mut bx: Vec<f64> = bump::cutoff_breaks_x().to_vec();
    let mut by: Vec<f64> = bump::cutoff_breaks_y().to_vec();
    for &n in cz.neighbors(id) {
        let (nx, ny, ns) = cz.square(n).bounds;
        bx.extend(bump::square_breaks(nx, ns));
        by.extend(bump::square_breaks(ny, ns));
    }
    let xs = cuts(xl, xh, bx);
    let ys = cuts(yl, yh, by);
    let mut out = Vec::with_capacity((xs.len() - 1) * (ys.len() - 1));
    for wx in xs.windows(2) {
        for wy in ys.windows(2) {
            out.push((wx[0], wx[1], wy[0], wy[1]));
        }
    }
    out
}

/// Quadrature nodes of one cell: `(x, y, weight)`.
fn cell_nodes(field: &ExtensionField, id: usize, order: usize, refine: u32) -> Vec<(f64, f64, f64)> {
    let (gx, gw) = gauss::rule(order);
    let m = 1usize << refine;
    let mut out = Vec::new();
    for (x0, x1, y0, y1) in panels(field, id) {
        let hx = (x1 - x0) / m as f64;
        let hy = (y1 - y0) / m as f64;
        for a in 0..m {
            for b in 0..m {
                let cx = x0 + (a as f64 + 0.5) * hx;
                let cy = y0 + (b as f64 + 0.5) * hy;
                for (i, &u) in gx.iter().enumerate() {
                    for (j, &v) in gx.iter().enumerate() {
                        let wgt = gw[i] * gw[j] * 0.25 * hx * hy;
                        out.push((cx + 0.5 * hx * u, cy + 0.5 * hy * v, wgt));
                    }
                }
            }
        }
    }
    out
}

/// Per-cell `∫|∇²T♯f|^p` for each `p`, sharing hessian evaluations.
fn cell_integrals(field: &ExtensionField, id: usize, ps: &[f64], order: usize, refine: u32) -> Result<Vec<f64>> {
    let mut sums = vec![0.0; ps.len()];
    for (x, y, w) in cell_nodes(field, id, order, refine) {
        let h = field.jet(x, y)?.hessian_norm();
        if h == 0.0 {
            continue;
        }
        for (s, &p) in sums.iter_mut().zip(ps) {
            *s += w * h.powf(p);
        }
    }
    Ok(sums)
}

/// `∫|∇²T♯f|^p` with `|H| = (H_xx² + 2H_xy² + H_yy²)^(1/2)`, one report per `p`.
///
/// Cells run in parallel; the total is summed sequentially in cell order.
pub fn seminorm_quadrature(field: &ExtensionField, ps: &[f64], order: usize, refine: u32) -> Result<Vec<QuadratureReport>> {
    for &p in ps {
        check_p(p)?;
    }
    if order == 0 {
        return Err(Error::input("quadrature order must be positive"));
    }
    let ids = field.model().cz.relevant_ids();
    let per_cell: Vec<Vec<f64>> =
        ids.par_iter().map(|&id| cell_integrals(field, id, ps, order, refine)).collect::<Result<_>>()?;
    let sites = &field.model().sites;
    Ok(ps
        .iter()
        .enumerate()
        .map(|(k, &p)| {
            let cells: Vec<CellContribution> = ids
                .iter()
                .zip(&per_cell)
                .filter(|(_, v)| v[k] != 0.0)
                .map(|(&id, v)| CellContribution { id, value: v[k] })
                .collect();
            let total: f64 = cells.iter().map(|c| c.value).sum();
            QuadratureReport { p, total, user_total: total * sites.seminorm_factor(p), order, refine, cells }
        })
        .collect())
}

/// Relative gap between two totals; 0 when both vanish.
pub fn relative_gap(a: f64, b: f64) -> f64 {
    let m = a.abs().max(b.abs());
    if m == 0.0 {
        0.0
    } else {
        (a - b).abs() / m
    }
}

/// Default refinement level; level 0 panels are too coarse near the
/// zero set of the hessian for `p` close to 1.
pub const DEFAULT_REFINE: u32 = 1;

/// Tolerance for agreement of successive refinement levels.
pub const REFINEMENT_TOLERANCE: f64 = 0.01;

/// Quadrature at `refine` and `refine + 1`; the finer result is returned
/// with the relative gaps. Gaps above 1% are an error.
pub fn converged_quadrature(
    field: &ExtensionField,
    ps: &[f64],
    order: usize,
    refine: u32,
) -> Result<(Vec<QuadratureReport>, Vec<f64>)> {
    let coarse = seminorm_quadrature(field, ps, order, refine)?;
    let fine = seminorm_quadrature(field, ps, order, refine + 1)?;
    let gaps: Vec<f64> = coarse.iter().zip(&fine).map(|(c, f)| relative_gap(c.total, f.total)).collect();
    if let Some((k, g)) = gaps.iter().enumerate().find(|(_, g)| **g > REFINEMENT_TOLERANCE) {
        return Err(Error::invariant(format!(
            "quadrature did not converge for p = {}: refinement levels {} and {} differ by {:.3}%",
            ps[k],
            refine,
            refine + 1,
            100.0 * g
        )));
    }
    Ok((fine, gaps))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::Model;
    use crate::rational;

    #[test]
    fn affine_data_integrate_to_zero() {
        let m = Model::from_integers(&[0, 2, 3, 11, 40]).unwrap();
        let vals: Vec<f64> = (0..5).map(|k| 1.5 - 0.25 * rational::to_f64(m.sites.user_x(k))).collect();
        let f = ExtensionField::new(&m, &vals).unwrap();
        for r in seminorm_quadrature(&f, &[1.25, 1.5, 1.75], 5, 0).unwrap() {
            assert!(r.total.abs() <= 1e-12, "{}", r.total);
        }
    }

    #[test]
    fn homogeneous_of_degree_p() {
        let m = Model::from_integers(&[0, 1, 5, 6, 20]).unwrap();
        let vals = [0.2, -0.4, 0.9, 0.0, 0.3];
        let twice: Vec<f64> = vals.iter().map(|v| 2.0 * v).collect();
        let a = seminorm_quadrature(&ExtensionField::new(&m, &vals).unwrap(), &[1.5], 5, 0).unwrap();
        let b = seminorm_quadrature(&ExtensionField::new(&m, &twice).unwrap(), &[1.5], 5, 0).unwrap();
        assert!(a[0].total > 0.0);
        assert!((b[0].total / a[0].total - 2f64.powf(1.5)).abs() < 1e-9);
    }

    #[test]
    fn refinement_converges() {
        let m = Model::from_integers(&[0, 1, 3, 7, 8, 30]).unwrap();
        let vals = [0.5, -0.5, 0.1, 0.7, -0.2, 0.0];
        let f = ExtensionField::new(&m, &vals).unwrap();
        let (_, gaps) = converged_quadrature(&f, &[1.25, 1.5, 1.75], 5, 1).unwrap();
        for g in gaps {
            assert!(g < REFINEMENT_TOLERANCE);
        }
    }

    #[test]
    fn cell_order_does_not_change_total() {
        let m = Model::from_integers(&[0, 4, 5, 9]).unwrap();
        let vals = [1.0, 0.0, -1.0, 0.5];
        let f = ExtensionField::new(&m, &vals).unwrap();
        let r = &seminorm_quadrature(&f, &[1.5], 5, 0).unwrap()[0];
        let mut rev: Vec<f64> = r.cells.iter().map(|c| c.value).collect();
        rev.reverse();
        let back: f64 = rev.iter().sum();
        assert!(relative_gap(r.total, back) < 1e-12);
    }

    #[test]
    fn panels_tile_the_inner_square() {
        let m = Model::from_integers(&[0, 1, 2, 9, 100]).unwrap();
        let vals = [0.0; 5];
        let f = ExtensionField::new(&m, &vals).unwrap();
        let area: f64 = m
            .cz
            .relevant_ids()
            .into_iter()
            .flat_map(|id| panels(&f, id))
            .map(|(x0, x1, y0, y1)| (x1 - x0) * (y1 - y0))
            .sum();
        let want = 4.0 * INNER_HALF_WIDTH * INNER_HALF_WIDTH;
        assert!((area - want).abs() < 1e-12 * want);
    }
}
