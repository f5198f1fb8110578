//! Chebyshev–Lobatto interpolation in barycentric form.
//!
//! Used to tabulate the convolution cascade stages (smooth functions of √τ)
//! once per stage and evaluate them at arbitrary interior points.

/// Interpolant through f at the n+1 Chebyshev–Lobatto points of [a, b].
pub struct ChebInterp {
    a: f64,
    b: f64,
    nodes: Vec<f64>,
    vals: Vec<f64>,
}

impl ChebInterp {
    pub fn from_fn(a: f64, b: f64, n: usize, mut f: impl FnMut(f64) -> f64) -> Self {
        assert!(n >= 2 && b > a);
        let mut nodes = Vec::with_capacity(n + 1);
        let mut vals = Vec::with_capacity(n + 1);
        for k in 0..=n {
            // x_k = cos(kπ/n) mapped to [a,b]; exact endpoints at k = 0, n
            let t = (k as f64 * std::f64::consts::PI / n as f64).cos();
            let x = 0.5 * (a + b) + 0.5 * (b - a) * t;
            nodes.push(x);
            vals.push(f(x));
        }
        Self { a, b, nodes, vals }
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Build directly from values sampled at `nodes()` of a congruent grid.
    pub fn from_values(a: f64, b: f64, vals: Vec<f64>) -> Self {
        assert!(vals.len() >= 3 && b > a);
        let n = vals.len() - 1;
        let nodes = (0..=n)
            .map(|k| 0.5 * (a + b) + 0.5 * (b - a) * (k as f64 * std::f64::consts::PI / n as f64).cos())
            .collect();
        Self { a, b, nodes, vals }
    }

    pub fn eval(&self, x: f64) -> f64 {
        debug_assert!(x >= self.a - 1e-12 && x <= self.b + 1e-12);
        // barycentric weights for Lobatto points: (-1)^k, halved at the ends
        let n = self.nodes.len() - 1;
        let mut num = 0.0;
        let mut den = 0.0;
        for k in 0..=n {
            let dx = x - self.nodes[k];
            if dx == 0.0 {
                return self.vals[k];
            }
            let mut w = if k % 2 == 0 { 1.0 } else { -1.0 };
            if k == 0 || k == n {
                w *= 0.5;
            }
            let q = w / dx;
            num += q * self.vals[k];
            den += q;
        }
        num / den
    }
}
