//! Gauss-Legendre rules on `[-1, 1]`.

use std::f64::consts::PI;

/// Nodes and weights of the `order`-point rule, nodes ascending.
pub fn rule(order: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(order >= 1, "Gauss rule needs at least one node");
    let mut nodes = vec![0.0; order];
    let mut weights = vec![0.0; order];
    let n = order as f64;
    for k in 0..order.div_ceil(2) {
        let mut x = (PI * (k as f64 + 0.75) / (n + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre(order, x);
            dp = d;
            let step = p / d;
            x -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(order, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[k] = -x;
        nodes[order - 1 - k] = x;
        weights[k] = w;
        weights[order - 1 - k] = w;
    }
    if order % 2 == 1 {
        nodes[order / 2] = 0.0;
    }
    (nodes, weights)
}

/// `P_n(x)` and `P_n'(x)` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn five_point_rule_matches_closed_form() {
        let (x, w) = rule(5);
        let a = (5.0_f64 - 2.0 * (10.0_f64 / 7.0).sqrt()).sqrt() / 3.0;
        let b = (5.0_f64 + 2.0 * (10.0_f64 / 7.0).sqrt()).sqrt() / 3.0;
        let wa = (322.0 + 13.0 * 70.0_f64.sqrt()) / 900.0;
        let wb = (322.0 - 13.0 * 70.0_f64.sqrt()) / 900.0;
        let want_x = [-b, -a, 0.0, a, b];
        let want_w = [wb, wa, 128.0 / 225.0, wa, wb];
        for i in 0..5 {
            assert!((x[i] - want_x[i]).abs() < 1e-15);
            assert!((w[i] - want_w[i]).abs() < 1e-15);
        }
    }

    #[test]
    fn integrates_polynomials_exactly() {
        for order in 1..=12 {
            let (x, w) = rule(order);
            for deg in 0..2 * order {
                let got: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
                let want = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                assert!((got - want).abs() < 1e-13, "order {order} degree {deg}");
            }
        }
    }
}
