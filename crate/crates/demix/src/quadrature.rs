//! Gauss-Legendre quadrature and the integration rules used across the crate.
//!
//! Interval measures use a single Gauss-Legendre rule (256 nodes by default);
//! integrands there are polynomials times smooth weights, so the rule is
//! effectively exact. Half-line exponential weights use a composite
//! Gauss-Legendre rule in the original variable with the weight kept inside
//! the integrand; panels extend until the exponential tail is exhausted.

use std::f64::consts::PI;

/// Default node count for interval integrals.
pub const INTERVAL_NODES: usize = 256;

/// A quadrature rule as paired nodes and weights.
#[derive(Debug, Clone)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule {
    /// Applies the rule to `f`.
    pub fn integrate(&self, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

/// Gauss-Legendre nodes and weights on [-1, 1].
///
/// Nodes are found by Newton iteration on the Legendre polynomial with the
/// Chebyshev-like initial guess; accuracy is close to machine precision for
/// the node counts used here (up to a few thousand).
pub fn gauss_legendre(n: usize) -> Rule {
    assert!(n >= 1, "need at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_pair(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        weights[i] = w;
        nodes[n - 1 - i] = x;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    Rule { nodes, weights }
}

/// Value and derivative of the Legendre polynomial P_n at x.
fn legendre_pair(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 1..n {
        let kf = k as f64;
        let p2 = ((2.0 * kf + 1.0) * x * p1 - kf * p0) / (kf + 1.0);
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Gauss-Legendre rule mapped to [a, b].
pub fn rule_on_interval(a: f64, b: f64, n: usize) -> Rule {
    let base = gauss_legendre(n);
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    Rule {
        nodes: base.nodes.iter().map(|&t| mid + half * t).collect(),
        weights: base.weights.iter().map(|&w| w * half).collect(),
    }
}

/// Integrates `f` over [a, b] with an n-node Gauss-Legendre rule.
pub fn integrate_interval(a: f64, b: f64, n: usize, f: impl FnMut(f64) -> f64) -> f64 {
    rule_on_interval(a, b, n).integrate(f)
}

/// Composite rule representing the measure e^{-rate t} dt on [0, ∞).
///
/// The weight is folded into the returned weights, so
/// `rule.integrate(g)` approximates `∫_0^∞ g(t) e^{-rate t} dt`. The panel
/// span is sized from `max_degree`, the largest polynomial degree the caller
/// intends to integrate: beyond the last panel the integrand envelope
/// `t^d e^{-rate t}` is below 1e-18 of its peak.
pub fn rule_halfline_exp(rate: f64, max_degree: usize) -> Rule {
    assert!(rate > 0.0);
    let d = max_degree as f64;
    // products of orthonormal polynomials against the weight keep mass out
    // to twice the degree (the soft edge of the degree-d/2 factors), with an
    // Airy-type stretched-exponential tail; span the edge plus many tail
    // widths
    let t_end = (2.0 * d + 14.0 * (2.0 * d + 1.0).cbrt() + 40.0) / rate;
    let panel_w = 4.0 / rate;
    let per_panel = 40;
    let n_panels = (t_end / panel_w).ceil() as usize;
    let mut nodes = Vec::with_capacity(n_panels * per_panel);
    let mut weights = Vec::with_capacity(n_panels * per_panel);
    for j in 0..n_panels {
        let a = j as f64 * panel_w;
        let b = a + panel_w;
        let r = rule_on_interval(a, b, per_panel);
        for (x, w) in r.nodes.iter().zip(&r.weights) {
            nodes.push(*x);
            weights.push(w * (-rate * x).exp());
        }
    }
    Rule { nodes, weights }
}
