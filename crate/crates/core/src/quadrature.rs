//! Gauss–Legendre rules and piecewise integration helpers.

use std::f64::consts::PI;

/// An `n`-point Gauss–Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(order: usize) -> Self {
        assert!(order >= 1, "Gauss-Legendre order must be positive");
        let mut nodes = vec![0.0; order];
        let mut weights = vec![0.0; order];
        let n = order as f64;
        for m in 0..order.div_ceil(2) {
            // Tricomi initial guess, then Newton on P_n.
            let mut x = (PI * (m as f64 + 0.75) / (n + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(order, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(order, x);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[m] = -x;
            nodes[order - 1 - m] = x;
            weights[m] = w;
            weights[order - 1 - m] = w;
        }
        Self { nodes, weights }
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    /// Nodes and weights mapped onto `[a, b]`.
    pub fn points(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(x, w)| (mid + half * x, w * half))
    }

    /// Integrate `f` over `[a, b]`.
    #[inline]
    pub fn integrate(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut total = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            total += w * f(mid + half * x);
        }
        total * half
    }

    /// Integrate over consecutive pieces of sorted `breaks`, one rule per piece.
    pub fn integrate_pieces(&self, breaks: &[f64], mut f: impl FnMut(f64) -> f64) -> f64 {
        breaks
            .windows(2)
            .filter(|w| w[1] > w[0])
            .map(|w| self.integrate(w[0], w[1], &mut f))
            .sum()
    }

    /// Integrate over `[c, c + h]` (or `[c + h, c]` for negative `h`) with pieces
    /// shrinking geometrically toward `c`, for integrable endpoint singularities.
    pub fn integrate_graded(
        &self,
        c: f64,
        h: f64,
        levels: usize,
        mut f: impl FnMut(f64) -> f64,
    ) -> f64 {
        let mut total = 0.0;
        let mut outer = 1.0;
        for _ in 0..levels {
            let inner = outer * 0.5;
            let (a, b) = (c + inner * h, c + outer * h);
            total += self.integrate(a.min(b), a.max(b), &mut f);
            outer = inner;
        }
        total
    }
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
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Sort `breaks`, clip them to `[lo, hi]` and drop near-duplicates.
pub fn clip_breaks(breaks: &mut Vec<f64>, lo: f64, hi: f64) {
    breaks.retain(|b| b.is_finite() && *b > lo && *b < hi);
    breaks.push(lo);
    breaks.push(hi);
    breaks.sort_by(|a, b| a.total_cmp(b));
    let tol = 1e-14 * (hi - lo).abs().max(1e-300);
    breaks.dedup_by(|a, b| (*a - *b).abs() <= tol);
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_two_and_integrate_polynomials() {
        for order in [1, 2, 3, 5, 8, 16, 33] {
            let gl = GaussLegendre::new(order);
            assert!((gl.weights.iter().sum::<f64>() - 2.0).abs() < 1e-13);
            let deg = 2 * order - 1;
            let v = gl.integrate(0.0, 1.0, |x| x.powi(deg as i32));
            assert!(
                (v - 1.0 / (deg as f64 + 1.0)).abs() < 1e-13,
                "order {order}"
            );
        }
    }

    #[test]
    fn graded_handles_inverse_sqrt() {
        let gl = GaussLegendre::new(8);
        let v = gl.integrate_graded(0.0, 1.0, 60, |x| 0.5 / x.sqrt());
        assert!((v - 1.0).abs() < 1e-8);
        let v = gl.integrate_graded(1.0, -1.0, 40, |x| -(1.0 - x).ln());
        assert!((v - 1.0).abs() < 1e-10, "{v}");
    }

    #[test]
    fn breaks_are_clipped_and_sorted() {
        let mut b = vec![0.5, 2.0, -1.0, 0.25, 0.5, f64::NAN];
        clip_breaks(&mut b, 0.0, 1.0);
        assert_eq!(b, vec![0.0, 0.25, 0.5, 1.0]);
    }
}
