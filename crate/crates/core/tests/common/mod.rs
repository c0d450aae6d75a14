#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sobext_core::bump;
use sobext_core::geometry::INNER_HALF_WIDTH;
use sobext_core::{generate, ExtensionField, Family, Model, SiteSet};

pub fn model(family: Family, n: usize, seed: u64) -> (Model, Vec<f64>) {
    let inst = generate(family, n, seed).unwrap();
    let m = Model::new(SiteSet::from_strings(&inst.to_input().sites).unwrap()).unwrap();
    let v = m.sites.sorted_values(&inst.values).unwrap();
    (m, v)
}

/// Points of `Q_inner`: half uniform, half at geometric distances from sites.
pub fn sample_points(m: &Model, count: usize, seed: u64) -> Vec<(f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w = INNER_HALF_WIDTH;
    (0..count)
        .map(|k| {
            if k % 2 == 0 {
                (rng.random_range(-w..w), rng.random_range(-w..w))
            } else {
                let x = m.sites.x_f64(rng.random_range(0..m.sites.len()));
                let r = 2f64.powf(-rng.random_range(11.0..40.0));
                let t = rng.random_range(0.0..std::f64::consts::TAU);
                ((x + r * t.cos()).clamp(-w, w), (r * t.sin()).clamp(-w, w))
            }
        })
        .collect()
}

pub fn theta(f: &ExtensionField, id: usize, x: f64, y: f64) -> f64 {
    f.weights(x, y).unwrap().iter().find(|w| w.id == id).map_or(0.0, |w| w.theta.v)
}

/// Stencil half-width: central differences of order `2M`.
pub const M: usize = 8;

/// Central weights on offsets `-M..=M` for the first and second derivative.
pub fn stencils() -> ([f64; 2 * M + 1], [f64; 2 * M + 1]) {
    let fact = |k: usize| (1..=k).map(|i| i as f64).product::<f64>();
    let mut d1 = [0.0; 2 * M + 1];
    let mut d2 = [0.0; 2 * M + 1];
    for k in 1..=M {
        let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
        let c = sign * fact(M) * fact(M) / (fact(M - k) * fact(M + k));
        let kf = k as f64;
        d1[M + k] = c / kf;
        d1[M - k] = -c / kf;
        d2[M + k] = 2.0 * c / (kf * kf);
        d2[M - k] = 2.0 * c / (kf * kf);
        d2[M] -= 4.0 * c / (kf * kf);
    }
    (d1, d2)
}

pub fn differences(f: &ExtensionField, id: usize, x: f64, y: f64, h: f64) -> [f64; 5] {
    let (d1, d2) = stencils();
    let w = 2 * M + 1;
    let mut grid = vec![vec![0.0; w]; w];
    for (a, row) in grid.iter_mut().enumerate() {
        for (b, v) in row.iter_mut().enumerate() {
            *v = theta(f, id, x + (a as f64 - M as f64) * h, y + (b as f64 - M as f64) * h);
        }
    }
    let mut d = [0.0; 5];
    for k in 0..w {
        d[0] += d1[k] * grid[k][M] / h;
        d[1] += d1[k] * grid[M][k] / h;
        d[2] += d2[k] * grid[k][M] / (h * h);
        d[4] += d2[k] * grid[M][k] / (h * h);
        for l in 0..w {
            d[3] += d1[k] * d1[l] * grid[k][l] / (h * h);
        }
    }
    d
}

/// True if some bump or the cutoff has a break within the stencil.
pub fn stencil_crosses_break(f: &ExtensionField, x: f64, y: f64, h: f64) -> bool {
    let r = (M as f64 + 0.5) * h;
    let cz = &f.model().cz;
    let mut ids = Vec::new();
    let m = M as i32;
    for a in -m..=m {
        for b in -m..=m {
            ids.extend(f.weights(x + a as f64 * h, y + b as f64 * h).unwrap().iter().map(|w| w.id));
        }
    }
    ids.sort_unstable();
    ids.dedup();
    let near = |c: f64, b: f64| (c - b).abs() <= r;
    ids.iter().any(|&id| {
        let (x0, y0, s) = cz.square(id).bounds;
        bump::square_breaks(x0, s).iter().any(|&b| near(x, b)) || bump::square_breaks(y0, s).iter().any(|&b| near(y, b))
    })
}

/// Finite-difference check of every weight at `points`, step `δ/1024`.
/// Returns `(weights checked, largest relative error)`; stencils that cross a
/// bump break are skipped.
pub fn theta_fd_check(f: &ExtensionField, points: &[(f64, f64)]) -> (usize, f64) {
    let m = f.model();
    let (mut checked, mut worst) = (0, 0f64);
    for &(x, y) in points {
        for w in f.weights(x, y).unwrap() {
            let delta = m.cz.square(w.id).side_f64();
            // δ/1024: a power of two, so every stencil node is exact on the h-lattice.
            let h = delta / 1024.0;
            let (x, y) = ((x / h).round() * h, (y / h).round() * h);
            if stencil_crosses_break(f, x, y, h) {
                continue;
            }
            let Some(w) = f.weights(x, y).unwrap().into_iter().find(|v| v.id == w.id) else { continue };
            let fd = differences(f, w.id, x, y, h);
            let an = [w.theta.dx, w.theta.dy, w.theta.dxx, w.theta.dxy, w.theta.dyy];
            // Relative to the largest analytic derivative of the same order.
            let first = an[0].abs().max(an[1].abs()).max(1.0 / delta);
            let second = an[2].abs().max(an[3].abs()).max(an[4].abs()).max(delta.powi(-2));
            for k in 0..5 {
                let scale = if k < 2 { first } else { second };
                worst = worst.max((fd[k] - an[k]).abs() / scale);
            }
            checked += 1;
        }
    }
    (checked, worst)
}
