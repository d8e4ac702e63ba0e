//! Panel-based adaptive Gauss-Legendre quadrature for complex-valued
//! integrands of a real variable.

use num_complex::Complex64;

type C = Complex64;

/// Nodes and weights of an n-point Gauss-Legendre rule on [-1, 1], computed
/// by Newton iteration on the Legendre polynomial rather than transcribed.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 2);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            // Chebyshev-based initial guess.
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_and_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        GaussLegendre { nodes, weights }
    }

    pub fn panel<F: Fn(f64) -> C>(&self, f: &F, a: f64, b: f64) -> C {
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        let mut acc = C::new(0.0, 0.0);
        for (x, w) in self.nodes.iter().zip(self.weights.iter()) {
            acc += *w * f(c + h * x);
        }
        acc * h
    }

    /// Adaptive bisection on [a, b]: a panel is accepted when one application
    /// of the rule agrees with the sum over its two halves. Returns the value,
    /// an error estimate, and the number of panels used.
    pub fn adaptive<F: Fn(f64) -> C>(
        &self,
        f: &F,
        a: f64,
        b: f64,
        tol_abs: f64,
        max_depth: u32,
    ) -> (C, f64, usize) {
        let whole = self.panel(f, a, b);
        let mut value = C::new(0.0, 0.0);
        let mut err = 0.0;
        let mut panels = 0usize;
        // Explicit stack so deep refinement near a feature cannot overflow.
        let mut stack: Vec<(f64, f64, C, u32, f64)> = vec![(a, b, whole, 0, tol_abs)];
        while let Some((lo, hi, coarse, depth, tol)) = stack.pop() {
            let mid = 0.5 * (lo + hi);
            let left = self.panel(f, lo, mid);
            let right = self.panel(f, mid, hi);
            let fine = left + right;
            let disc = (fine - coarse).norm();
            if disc <= tol || depth >= max_depth {
                value += fine;
                err += disc;
                panels += 2;
            } else {
                stack.push((lo, mid, left, depth + 1, 0.5 * tol));
                stack.push((mid, hi, right, depth + 1, 0.5 * tol));
            }
        }
        (value, err, panels)
    }
}

fn legendre_and_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Integrate a decaying integrand over [0, s_end] by splitting into
/// geometrically growing segments, each refined adaptively. The breakpoints
/// keep the tolerance budget meaningful when s_end is large.
pub fn integrate_decaying<F: Fn(f64) -> C>(
    rule: &GaussLegendre,
    f: &F,
    s_end: f64,
    first_len: f64,
    tol_abs: f64,
) -> (C, f64) {
    let mut cuts = vec![0.0];
    let mut s = first_len.min(s_end);
    while s < s_end {
        cuts.push(s);
        s *= 2.0;
    }
    cuts.push(s_end);
    let n_seg = cuts.len() - 1;
    let mut value = C::new(0.0, 0.0);
    let mut err = 0.0;
    for w in cuts.windows(2) {
        let (v, e, _) = rule.adaptive(f, w[0], w[1], tol_abs / n_seg as f64, 28);
        value += v;
        err += e;
    }
    (value, err)
}
