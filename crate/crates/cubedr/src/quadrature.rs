//! Gauss–Legendre quadrature on `[0,1]`.

use std::f64::consts::PI;

/// Nodes and weights of the `n`-point rule on `[0,1]`, nodes ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n > 0, "need at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for k in 0..n.div_ceil(2) {
        // Tricomi's initial guess, then Newton on P_n
        let mut x = (PI * (k as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[k] = (1.0 - x) / 2.0;
        nodes[n - 1 - k] = (1.0 + x) / 2.0;
        weights[k] = w / 2.0;
        weights[n - 1 - k] = w / 2.0;
    }
    (nodes, weights)
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

pub fn integrate(n: usize, f: impl Fn(f64) -> f64) -> f64 {
    let (x, w) = gauss_legendre(n);
    x.iter().zip(&w).map(|(&xi, &wi)| wi * f(xi)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_one() {
        for n in [1, 2, 5, 64] {
            let (_, w) = gauss_legendre(n);
            assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn exact_for_high_degree_polynomials() {
        // ∫₀¹ x^k = 1/(k+1), exact up to degree 127
        for k in [0, 7, 63, 100] {
            let v = integrate(64, |x| x.powi(k));
            assert!((v - 1.0 / (k as f64 + 1.0)).abs() < 1e-14, "k={k}: {v}");
        }
        let (x, _) = gauss_legendre(3);
        assert!((x[1] - 0.5).abs() < 1e-15);
    }
}
