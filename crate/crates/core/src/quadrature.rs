//! Gauss–Legendre quadrature.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

/// Default node count.
pub const DEFAULT_NODES: usize = 256;

/// Nodes and weights on `[-1, 1]`.
#[derive(Clone, Debug)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Computes the rule by Newton iteration on `P_n`, starting from the
    /// Tricomi approximation of each root.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "need at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 1.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        GaussLegendre { nodes, weights }
    }

    /// Shared rule for `n` nodes.
    pub fn cached(n: usize) -> Arc<GaussLegendre> {
        static CACHE: OnceLock<Mutex<HashMap<usize, Arc<GaussLegendre>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut guard = cache.lock().expect("quadrature cache poisoned");
        guard.entry(n).or_insert_with(|| Arc::new(GaussLegendre::new(n))).clone()
    }

    /// `∫_a^b f`.
    pub fn integrate(&self, a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let s: f64 = self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(mid + half * x)).sum();
        half * s
    }

    /// `∫_a^b f` after the substitution `u = a + (b - a)(1 - cos t)/2`,
    /// `t ∈ [0, π]`. The Jacobian vanishes like `sqrt((u - a)(b - u))` at the
    /// ends, which absorbs inverse square-root endpoint singularities.
    pub fn integrate_endpoint_weighted(&self, a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
        self.integrate_endpoint_gaps(a, b, |u, _, _| f(u))
    }

    /// Same substitution, but `f` also receives the distances `u - a` and
    /// `b - u`, computed without cancellation as `w sin²(t/2)` and `w cos²(t/2)`.
    pub fn integrate_endpoint_gaps(&self, a: f64, b: f64, f: impl Fn(f64, f64, f64) -> f64) -> f64 {
        let width = b - a;
        self.integrate(0.0, PI, |t| {
            let (s, c) = (0.5 * t).sin_cos();
            let d_lo = width * s * s;
            let d_hi = width * c * c;
            let u = if d_lo <= d_hi { a + d_lo } else { b - d_hi };
            f(u, d_lo, d_hi) * 0.5 * width * t.sin()
        })
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let d = n as f64 * (x * p - p0) / (x * x - 1.0);
    (p, d)
}

/// Integral together with the doubling check (`n` vs `2n` nodes).
#[derive(Clone, Copy, Debug)]
pub struct QuadratureValue {
    pub value: f64,
    pub doubling_delta: f64,
}

/// Endpoint-weighted integral with a node-doubling consistency check.
pub fn integrate_with_doubling(a: f64, b: f64, nodes: usize, f: impl Fn(f64, f64, f64) -> f64) -> QuadratureValue {
    let coarse = GaussLegendre::cached(nodes).integrate_endpoint_gaps(a, b, &f);
    let fine = GaussLegendre::cached(2 * nodes).integrate_endpoint_gaps(a, b, &f);
    QuadratureValue { value: fine, doubling_delta: (fine - coarse).abs() }
}
