//! Gauss–Legendre rules and adaptive integration used for weight masses.

use std::sync::OnceLock;

const ORDER: usize = 8;

/// Nodes and weights of the `ORDER`-point Gauss–Legendre rule on `[-1, 1]`.
fn rule() -> &'static ([f64; ORDER], [f64; ORDER]) {
    static RULE: OnceLock<([f64; ORDER], [f64; ORDER])> = OnceLock::new();
    RULE.get_or_init(|| {
        let n = ORDER;
        let mut nodes = [0.0; ORDER];
        let mut weights = [0.0; ORDER];
        for i in 0..n {
            // Chebyshev initial guess, then Newton on P_n.
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
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
            dp = if d != 0.0 { d } else { dp };
            nodes[i] = x;
            weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
        }
        (nodes, weights)
    })
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

pub(crate) fn gauss_1d(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let (nodes, weights) = rule();
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut s = 0.0;
    for k in 0..ORDER {
        s += weights[k] * f(mid + half * nodes[k]);
    }
    s * half
}

pub(crate) fn adaptive_1d(f: &impl Fn(f64) -> f64, a: f64, b: f64, rel_tol: f64) -> f64 {
    fn go(f: &impl Fn(f64) -> f64, a: f64, b: f64, whole: f64, rel_tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let left = gauss_1d(f, a, m);
        let right = gauss_1d(f, m, b);
        let refined = left + right;
        if depth == 0 || (refined - whole).abs() <= rel_tol * refined.abs() {
            return refined;
        }
        go(f, a, m, left, rel_tol, depth - 1) + go(f, m, b, right, rel_tol, depth - 1)
    }
    go(f, a, b, gauss_1d(f, a, b), rel_tol, 40)
}

fn gauss_2d(f: &impl Fn(f64, f64) -> f64, x0: f64, x1: f64, y0: f64, y1: f64) -> f64 {
    let (nodes, weights) = rule();
    let (mx, hx) = (0.5 * (x0 + x1), 0.5 * (x1 - x0));
    let (my, hy) = (0.5 * (y0 + y1), 0.5 * (y1 - y0));
    let mut s = 0.0;
    for i in 0..ORDER {
        let x = mx + hx * nodes[i];
        let mut row = 0.0;
        for j in 0..ORDER {
            row += weights[j] * f(x, my + hy * nodes[j]);
        }
        s += weights[i] * row;
    }
    s * hx * hy
}

/// Adaptive tensor Gauss–Legendre integration over a rectangle, refining by
/// quadrisection until successive estimates agree to `rel_tol`.
pub(crate) fn adaptive_2d(
    f: &impl Fn(f64, f64) -> f64,
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
    rel_tol: f64,
) -> f64 {
    fn go(
        f: &impl Fn(f64, f64) -> f64,
        r: [f64; 4],
        whole: f64,
        rel_tol: f64,
        depth: u32,
    ) -> f64 {
        let [x0, x1, y0, y1] = r;
        let (xm, ym) = (0.5 * (x0 + x1), 0.5 * (y0 + y1));
        let quads = [[x0, xm, y0, ym], [x0, xm, ym, y1], [xm, x1, y0, ym], [xm, x1, ym, y1]];
        let parts: Vec<f64> = quads.iter().map(|q| gauss_2d(f, q[0], q[1], q[2], q[3])).collect();
        let refined: f64 = parts.iter().sum();
        if depth == 0 || (refined - whole).abs() <= rel_tol * refined.abs() {
            return refined;
        }
        quads.iter().zip(parts).map(|(q, p)| go(f, *q, p, rel_tol, depth - 1)).sum()
    }
    go(f, [x0, x1, y0, y1], gauss_2d(f, x0, x1, y0, y1), rel_tol, 12)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_rule_integrates_polynomials_exactly() {
        let f = |x: f64| x.powi(15) + 3.0 * x.powi(4) - x + 2.0;
        let exact = |x: f64| x.powi(16) / 16.0 + 0.6 * x.powi(5) - 0.5 * x * x + 2.0 * x;
        let got = gauss_1d(&f, -0.3, 1.7);
        assert!((got - (exact(1.7) - exact(-0.3))).abs() < 1e-12);
        let (_, w) = rule();
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn adaptive_handles_endpoint_kink() {
        // int_0^1 x^{1/2} dx = 2/3
        let got = adaptive_1d(&|x: f64| x.sqrt(), 0.0, 1.0, 1e-13);
        assert!((got - 2.0 / 3.0).abs() < 1e-11, "{got}");
        let got = adaptive_2d(&|x: f64, y: f64| x * y, 0.0, 1.0, 0.0, 2.0, 1e-12);
        assert!((got - 1.0).abs() < 1e-13);
    }
}
