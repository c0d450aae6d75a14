//! Discrete minimizer of the p-seminorm over grid functions that match the
//! data at the site nodes.
//!
//! Grid: `n x n` nodes on `[-2^-8, 2^-8]^2`, `h = 2^-7/(n-1)`, `n` odd so the
//! x-axis is a grid row. At every interior node
//!
//! ```text
//! D_xx F = (F[i+1,j] - 2F[i,j] + F[i-1,j]) / h²
//! D_yy F = (F[i,j+1] - 2F[i,j] + F[i,j-1]) / h²
//! D_xy F = (F[i+1,j+1] - F[i+1,j-1] - F[i-1,j+1] + F[i-1,j-1]) / (4h²)
//! ```
//!
//! and the objective is `Σ h² (D_xx² + 2 D_xy² + D_yy²)^(p/2)`.
//!
//! The chord through the outermost data is subtracted first and the node
//! `(0, h)` is pinned to 0; both leave the objective unchanged and the pin
//! removes the `c·y` null direction. The objective is smoothed as
//! `(|r|² + η²)^(p/2) - η^p` and minimized by damped Newton steps with a
//! sparse Cholesky solve, lowering `η` until its bias is below the
//! tolerance.

use std::collections::HashMap;

use faer::dyn_stack::{MemBuffer, MemStack};
use faer::perm::Perm;
use faer::sparse::linalg::cholesky::{factorize_symbolic_cholesky, SymbolicCholesky, SymmetricOrdering};
use faer::sparse::{Pair, SparseColMat, SymbolicSparseColMat};
use faer::{Col, Conj, Par, Side};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::extension::ExtensionField;
use crate::functionals::check_p;
use crate::sites::FRAME_HALF;

/// Half-width of the oracle box.
pub const BOX_HALF: f64 = 1.0 / 256.0;

/// Relative tolerance on the objective.
pub const TOLERANCE: f64 = 1e-6;

const NONE: u32 = u32::MAX;
const CHUNK: usize = 4096;

/// Local 3x3 stencil offsets, index `3 (dj + 1) + (di + 1)`.
const fn local(di: i32, dj: i32) -> usize {
    (3 * (dj + 1) + (di + 1)) as usize
}

#[derive(Clone, Debug, Serialize)]
pub struct OracleStage {
    pub eta: f64,
    pub newton_steps: usize,
    pub smoothed: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct OracleReport {
    pub p: f64,
    pub n: usize,
    pub h: f64,
    /// Discrete minimum, normalized frame.
    pub value: f64,
    /// The objective at the sampled extension, the warm start.
    pub start_value: f64,
    /// Largest distance from a site to its node.
    pub max_snap: f64,
    pub converged: bool,
    pub stages: Vec<OracleStage>,
}

/// The grid, its constraints and the sparsity pattern of the Newton system.
pub struct OracleGrid {
    n: usize,
    h: f64,
    /// Node values; fixed entries hold their constraint.
    base: Vec<f64>,
    /// Free-variable index per node, `NONE` if fixed.
    var: Vec<u32>,
    free: Vec<usize>,
    /// Interior nodes, `(i, j)` flattened.
    centers: Vec<usize>,
    /// Per interior node, the 45 lower-triangle slots of its local block.
    slots: Vec<u32>,
    symbolic: SymbolicSparseColMat<usize>,
    argsort: faer::sparse::Argsort<usize>,
    n_slots: usize,
    llt: SymbolicCholesky<usize>,
    max_snap: f64,
}

/// `D` rows (xx, xy, yy) over the 9 local nodes, times `h²`.
fn stencil() -> [[f64; 9]; 3] {
    let mut d = [[0.0; 9]; 3];
    d[0][local(-1, 0)] = 1.0;
    d[0][local(0, 0)] = -2.0;
    d[0][local(1, 0)] = 1.0;
    d[1][local(1, 1)] = 0.25;
    d[1][local(1, -1)] = -0.25;
    d[1][local(-1, 1)] = -0.25;
    d[1][local(-1, -1)] = 0.25;
    d[2][local(0, -1)] = 1.0;
    d[2][local(0, 0)] = -2.0;
    d[2][local(0, 1)] = 1.0;
    d
}

const WEIGHTS: [f64; 3] = [1.0, 2.0, 1.0];

impl OracleGrid {
    /// Builds the grid for `field` with the sampled extension minus the chord as
    /// the starting point, returned alongside.
    pub fn new(field: &ExtensionField, n: usize) -> Result<(Self, Vec<f64>)> {
        if n < 33 || n % 2 == 0 {
            return Err(Error::input(format!("oracle grid size must be odd and at least 33, got {n}")));
        }
        if n > 4097 {
            return Err(Error::input(format!("oracle grid size {n} is too large")));
        }
        let sites = &field.model().sites;
        let values = field.values();
        let h = 2.0 * BOX_HALF / (n - 1) as f64;
        let mid = (n - 1) / 2;
        let coord = |i: usize| -BOX_HALF + i as f64 * h;
        let node = |i: usize, j: usize| j * n + i;
        let nsites = sites.len();
        let chord_slope = (values[nsites - 1] - values[0]) / (2.0 * FRAME_HALF);
        let chord = |x: f64| values[0] + chord_slope * (x + FRAME_HALF);

        let sampled: Vec<f64> = (0..n * n)
            .into_par_iter()
            .map(|k| {
                let (x, y) = (coord(k % n), coord(k / n));
                field.jet(x, y).map(|j| j.v - chord(x))
            })
            .collect::<Result<_>>()?;

        let mut fixed: HashMap<usize, (usize, f64)> = HashMap::new();
        let mut max_snap: f64 = 0.0;
        for k in 0..nsites {
            let x = sites.x_f64(k);
            let i = ((x + BOX_HALF) / h).round() as usize;
            max_snap = max_snap.max((coord(i) - x).abs());
            let nd = node(i, mid);
            if let Some((other, _)) = fixed.insert(nd, (k, values[k] - chord(coord(i)))) {
                return Err(Error::input(format!(
                    "grid n = {n} too coarse: sites {other} and {k} snap to the same node"
                )));
            }
        }
        let pin = node(mid, mid + 1);
        fixed.insert(pin, (usize::MAX, 0.0));

        // Shift the start by c·y so the pin holds; the objective is unchanged.
        let c = sampled[pin] / h;
        let mut start: Vec<f64> = (0..n * n).map(|k| sampled[k] - c * (coord(k / n) - coord(mid))).collect();
        let mut base = vec![0.0; n * n];
        let mut var = vec![NONE; n * n];
        let mut free = Vec::new();
        for k in 0..n * n {
            if let Some(&(_, v)) = fixed.get(&k) {
                base[k] = v;
                start[k] = v;
            } else {
                var[k] = free.len() as u32;
                free.push(k);
            }
        }

        let mut centers = Vec::with_capacity((n - 2) * (n - 2));
        for j in 1..n - 1 {
            for i in 1..n - 1 {
                centers.push(node(i, j));
            }
        }
        let mut pairs: Vec<Pair<usize, usize>> = Vec::new();
        let mut index: HashMap<(u32, u32), u32> = HashMap::new();
        let mut slots = Vec::with_capacity(centers.len() * 45);
        for &c in &centers {
            let loc = local_nodes(c, n);
            for a in 0..9 {
                for b in 0..=a {
                    let (va, vb) = (var[loc[a]], var[loc[b]]);
                    if va == NONE || vb == NONE {
                        slots.push(NONE);
                        continue;
                    }
                    let key = (va.max(vb), va.min(vb));
                    let s = *index.entry(key).or_insert_with(|| {
                        pairs.push(Pair::new(key.0 as usize, key.1 as usize));
                        (pairs.len() - 1) as u32
                    });
                    slots.push(s);
                }
            }
        }
        let nf = free.len();
        let (symbolic, argsort) = SymbolicSparseColMat::try_new_from_indices(nf, nf, &pairs)
            .map_err(|e| Error::invariant(format!("oracle sparsity pattern: {e:?}")))?;
        let order = dissection_order(n, &var);
        let inverse = {
            let mut inv = vec![0usize; nf];
            for (k, &v) in order.iter().enumerate() {
                inv[v] = k;
            }
            inv
        };
        let perm = Perm::new_checked(order.into_boxed_slice(), inverse.into_boxed_slice(), nf);
        let llt = factorize_symbolic_cholesky(
            symbolic.as_ref(),
            Side::Lower,
            SymmetricOrdering::Custom(perm.as_ref()),
            Default::default(),
        )
        .map_err(|e| Error::invariant(format!("oracle symbolic factorization: {e:?}")))?;
        let grid = OracleGrid {
            n,
            h,
            base,
            var,
            free,
            centers,
            slots,
            symbolic,
            argsort,
            n_slots: pairs.len(),
            llt,
            max_snap,
        };
        Ok((grid, start))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    /// Residuals `h² (D_xx, D_xy, D_yy)` at interior node `c`.
    fn residual(&self, full: &[f64], c: usize, d: &[[f64; 9]; 3]) -> [f64; 3] {
        let loc = local_nodes(c, self.n);
        let mut r = [0.0; 3];
        for (k, row) in d.iter().enumerate() {
            r[k] = row.iter().zip(&loc).map(|(w, &nd)| w * full[nd]).sum();
        }
        r
    }

    /// `Σ h² φ_η(r)` with `r` the true second differences. `η = 0` gives the
    /// plain objective.
    pub fn objective(&self, full: &[f64], p: f64, eta: f64) -> f64 {
        let d = stencil();
        let inv = 1.0 / (self.h * self.h);
        let h2 = self.h * self.h;
        let eta_p = if eta > 0.0 { eta.powf(p) } else { 0.0 };
        let partial: Vec<f64> = self
            .centers
            .par_chunks(CHUNK)
            .map(|chunk| {
                chunk
                    .iter()
                    .map(|&c| {
                        let r = self.residual(full, c, &d);
                        let u = inv * inv * (r[0] * r[0] + 2.0 * r[1] * r[1] + r[2] * r[2]) + eta * eta;
                        h2 * (u.powf(0.5 * p) - eta_p)
                    })
                    .sum::<f64>()
            })
            .collect();
        partial.iter().sum()
    }

    /// Gradient and lower-triangle hessian values of the smoothed objective.
    fn derivatives(&self, full: &[f64], p: f64, eta: f64) -> (Vec<f64>, Vec<f64>) {
        let d = stencil();
        let inv = 1.0 / (self.h * self.h);
        let h2 = self.h * self.h;
        let blocks: Vec<([f64; 9], [f64; 45])> = self
            .centers
            .par_iter()
            .map(|&c| {
                let r0 = self.residual(full, c, &d);
                let r = [r0[0] * inv, r0[1] * inv, r0[2] * inv];
                let u = r[0] * r[0] + 2.0 * r[1] * r[1] + r[2] * r[2] + eta * eta;
                let a = h2 * p * u.powf(0.5 * p - 1.0);
                let b = h2 * p * (p - 2.0) * u.powf(0.5 * p - 2.0);
                let wr = [WEIGHTS[0] * r[0], WEIGHTS[1] * r[1], WEIGHTS[2] * r[2]];
                // Derivatives with respect to node values: r = inv · D F.
                let mut m = [[0.0; 3]; 3];
                for k in 0..3 {
                    for l in 0..3 {
                        m[k][l] = inv * inv * (b * wr[k] * wr[l] + if k == l { a * WEIGHTS[k] } else { 0.0 });
                    }
                }
                let mut g = [0.0; 9];
                for (e, ge) in g.iter_mut().enumerate() {
                    *ge = (0..3).map(|k| d[k][e] * inv * a * wr[k]).sum();
                }
                let mut md = [[0.0; 9]; 3];
                for k in 0..3 {
                    for e in 0..9 {
                        md[k][e] = (0..3).map(|l| m[k][l] * d[l][e]).sum();
                    }
                }
                let mut hl = [0.0; 45];
                let mut s = 0;
                for e in 0..9 {
                    for f in 0..=e {
                        hl[s] = (0..3).map(|k| d[k][e] * md[k][f]).sum();
                        s += 1;
                    }
                }
                (g, hl)
            })
            .collect();
        let mut grad = vec![0.0; self.free.len()];
        let mut vals = vec![0.0; self.n_slots];
        for (t, &c) in self.centers.iter().enumerate() {
            let (g, hl) = &blocks[t];
            let loc = local_nodes(c, self.n);
            for e in 0..9 {
                let v = self.var[loc[e]];
                if v != NONE {
                    grad[v as usize] += g[e];
                }
            }
            for (s, &slot) in self.slots[45 * t..45 * (t + 1)].iter().enumerate() {
                if slot != NONE {
                    vals[slot as usize] += hl[s];
                }
            }
        }
        (grad, vals)
    }

    fn newton_direction(&self, grad: &[f64], vals: &[f64]) -> Result<Vec<f64>> {
        let mat = SparseColMat::<usize, f64>::new_from_argsort(self.symbolic.clone(), &self.argsort, vals)
            .map_err(|e| Error::invariant(format!("oracle hessian assembly: {e:?}")))?;
        let par = Par::Seq;
        let mut values = vec![0.0; self.llt.len_val()];
        let scratch = self
            .llt
            .factorize_numeric_llt_scratch::<f64>(par, Default::default())
            .or(self.llt.solve_in_place_scratch::<f64>(1, par));
        let mut buf = MemBuffer::new(scratch);
        let stack = MemStack::new(&mut buf);
        let llt = self
            .llt
            .factorize_numeric_llt(&mut values, mat.as_ref(), Side::Lower, Default::default(), par, stack, Default::default())
            .map_err(|e| Error::invariant(format!("oracle hessian is not positive definite: {e:?}")))?;
        let mut rhs = Col::<f64>::from_fn(grad.len(), |i| -grad[i]);
        llt.solve_in_place_with_conj(Conj::No, rhs.as_mat_mut(), par, stack);
        Ok((0..grad.len()).map(|i| rhs[i]).collect())
    }

    fn with_step(&self, full: &[f64], dir: &[f64], t: f64) -> Vec<f64> {
        let mut out = full.to_vec();
        for (k, &nd) in self.free.iter().enumerate() {
            out[nd] += t * dir[k];
        }
        out
    }

    /// Minimizes for one `p` from `start`; returns the best node vector seen.
    pub fn minimize(&self, start: &[f64], p: f64) -> Result<(Vec<f64>, f64, bool, Vec<OracleStage>)> {
        check_p(p)?;
        let mut x: Vec<f64> = start.to_vec();
        for (k, v) in x.iter_mut().enumerate() {
            if self.var[k] == NONE {
                *v = self.base[k];
            }
        }
        let x0 = x.clone();
        let start_obj = self.objective(&x, p, 0.0);
        if start_obj == 0.0 {
            return Ok((x, 0.0, true, Vec::new()));
        }
        let area = (2.0 * BOX_HALF) * (2.0 * BOX_HALF);
        let mut eta = (start_obj / area).powf(1.0 / p);
        let mut stages = Vec::new();
        let mut converged = false;
        for _ in 0..40 {
            let mut steps = 0;
            let mut smoothed = self.objective(&x, p, eta);
            // Only the last stage needs the full tolerance.
            let last = area * eta.powf(p) <= TOLERANCE * self.objective(&x, p, 0.0);
            let tol = if last { 0.1 * TOLERANCE } else { 1e-3 };
            for _ in 0..60 {
                let (grad, vals) = self.derivatives(&x, p, eta);
                let dir = self.newton_direction(&grad, &vals)?;
                let slope: f64 = grad.iter().zip(&dir).map(|(g, d)| g * d).sum();
                steps += 1;
                if !(slope < 0.0) || -slope <= tol * smoothed.abs().max(f64::MIN_POSITIVE) {
                    break;
                }
                let mut t = 1.0;
                let mut accepted = None;
                for _ in 0..50 {
                    let trial = self.with_step(&x, &dir, t);
                    let val = self.objective(&trial, p, eta);
                    if val <= smoothed + 1e-4 * t * slope {
                        accepted = Some((trial, val));
                        break;
                    }
                    t *= 0.5;
                }
                let Some((trial, val)) = accepted else { break };
                let gain = smoothed - val;
                x = trial;
                smoothed = val;
                if gain <= tol * smoothed.abs() {
                    break;
                }
            }
            stages.push(OracleStage { eta, newton_steps: steps, smoothed });
            // Bias of the smoothing is at most area · η^p.
            if last || area * eta.powf(p) <= TOLERANCE * self.objective(&x, p, 0.0) {
                converged = true;
                break;
            }
            eta *= 0.1;
        }
        let value = self.objective(&x, p, 0.0);
        if value <= start_obj {
            Ok((x, value, converged, stages))
        } else {
            Ok((x0, start_obj, converged, stages))
        }
    }
}

/// Nested-dissection order of the free variables: halves first, then the
/// two-node-wide separator between them, recursively.
fn dissection_order(n: usize, var: &[u32]) -> Vec<usize> {
    let mut out = Vec::with_capacity(var.len());
    let mut emit = |i0: usize, i1: usize, j0: usize, j1: usize, out: &mut Vec<usize>| {
        for j in j0..j1 {
            for i in i0..i1 {
                let v = var[j * n + i];
                if v != NONE {
                    out.push(v as usize);
                }
            }
        }
    };
    fn split(
        r: (usize, usize, usize, usize),
        emit: &mut dyn FnMut(usize, usize, usize, usize, &mut Vec<usize>),
        out: &mut Vec<usize>,
    ) {
        let (i0, i1, j0, j1) = r;
        let (w, h) = (i1 - i0, j1 - j0);
        if w.max(h) <= 8 {
            emit(i0, i1, j0, j1, out);
        } else if w >= h {
            let m = i0 + w / 2 - 1;
            split((i0, m, j0, j1), emit, out);
            split((m + 2, i1, j0, j1), emit, out);
            emit(m, m + 2, j0, j1, out);
        } else {
            let m = j0 + h / 2 - 1;
            split((i0, i1, j0, m), emit, out);
            split((i0, i1, m + 2, j1), emit, out);
            emit(i0, i1, m, m + 2, out);
        }
    }
    split((0, n, 0, n), &mut emit, &mut out);
    out
}

/// The 9 nodes around interior node `c`, in `local` order.
fn local_nodes(c: usize, n: usize) -> [usize; 9] {
    let mut out = [0; 9];
    for dj in -1i32..=1 {
        for di in -1i32..=1 {
            out[local(di, dj)] = (c as isize + di as isize + dj as isize * n as isize) as usize;
        }
    }
    out
}

/// Discrete minimum for each `p` on an `n x n` grid, warm started from the
/// sampled extension and chained through `p` in decreasing order.
pub fn variational_oracle(field: &ExtensionField, ps: &[f64], n: usize) -> Result<Vec<OracleReport>> {
    for &p in ps {
        check_p(p)?;
    }
    let (grid, sampled) = OracleGrid::new(field, n)?;
    let mut order: Vec<usize> = (0..ps.len()).collect();
    order.sort_by(|&a, &b| ps[b].total_cmp(&ps[a]));
    let mut out: Vec<Option<OracleReport>> = vec![None; ps.len()];
    let mut warm = sampled.clone();
    for k in order {
        let p = ps[k];
        let start_value = grid.objective(&sampled, p, 0.0);
        let from = if grid.objective(&warm, p, 0.0) < start_value { &warm } else { &sampled };
        let (x, value, converged, stages) = grid.minimize(from, p)?;
        out[k] = Some(OracleReport {
            p,
            n,
            h: grid.h,
            value: value.min(start_value),
            start_value,
            max_snap: grid.max_snap,
            converged,
            stages,
        });
        warm = x;
    }
    Ok(out.into_iter().map(|r| r.expect("every p solved")).collect())
}
