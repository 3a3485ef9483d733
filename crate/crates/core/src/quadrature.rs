//! Gauss–Legendre rules: single-panel, composite, and kink-aware integration.

use std::sync::OnceLock;

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Computes the `n`-point rule by Newton iteration on the Legendre recurrence.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            // Tricomi initial guess, refined by Newton.
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() <= 1e-16 * x.abs().max(1.0) {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    /// Shared 64-point rule.
    pub fn standard() -> &'static GaussLegendre {
        static RULE: OnceLock<GaussLegendre> = OnceLock::new();
        RULE.get_or_init(|| GaussLegendre::new(64))
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Integrates `f` over `[a, b]`.
    pub fn integrate(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        if a == b {
            return 0.0;
        }
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(mid + half * x))
            .sum::<f64>()
            * half
    }

    /// Integrates `f` over `[a, b]`, splitting into panels at each breakpoint
    /// strictly inside the interval.
    pub fn integrate_split(
        &self,
        a: f64,
        b: f64,
        breaks: &[f64],
        mut f: impl FnMut(f64) -> f64,
    ) -> f64 {
        let mut cuts: Vec<f64> = breaks
            .iter()
            .copied()
            .filter(|&c| c > a && c < b)
            .collect();
        cuts.sort_by(f64::total_cmp);
        let mut lo = a;
        let mut total = 0.0;
        for c in cuts.into_iter().chain(std::iter::once(b)) {
            total += self.integrate(lo, c, &mut f);
            lo = c;
        }
        total
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

/// Composite Gauss–Legendre rule on `[0, 1]` with equal panels.
#[derive(Debug, Clone)]
pub struct CompositeRule {
    panels: usize,
    order: usize,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    reference: GaussLegendre,
    barycentric: Vec<f64>,
}

impl CompositeRule {
    pub fn new(panels: usize, order: usize) -> Self {
        assert!(panels >= 1 && order >= 1);
        let reference = GaussLegendre::new(order);
        let h = 1.0 / panels as f64;
        let mut nodes = Vec::with_capacity(panels * order);
        let mut weights = Vec::with_capacity(panels * order);
        for p in 0..panels {
            let a = p as f64 * h;
            for (&x, &w) in reference.nodes.iter().zip(&reference.weights) {
                nodes.push(a + 0.5 * h * (x + 1.0));
                weights.push(0.5 * h * w);
            }
        }
        let xs = &reference.nodes;
        let barycentric = (0..order)
            .map(|j| {
                xs.iter()
                    .enumerate()
                    .filter(|&(m, _)| m != j)
                    .fold(1.0, |acc, (_, &xm)| acc / (xs[j] - xm))
            })
            .collect();
        Self {
            panels,
            order,
            nodes,
            weights,
            reference,
            barycentric,
        }
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn panels(&self) -> usize {
        self.panels
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Evaluates the panel-wise Lagrange interpolant of nodal `values` at `t`.
    pub fn interpolate(&self, values: &[f64], t: f64) -> f64 {
        debug_assert_eq!(values.len(), self.nodes.len());
        let h = 1.0 / self.panels as f64;
        let p = ((t / h).floor() as isize).clamp(0, self.panels as isize - 1) as usize;
        let x = 2.0 * (t - p as f64 * h) / h - 1.0;
        let xs = &self.reference.nodes;
        let ys = &values[p * self.order..(p + 1) * self.order];
        let mut num = 0.0;
        let mut den = 0.0;
        for j in 0..self.order {
            let diff = x - xs[j];
            if diff == 0.0 {
                return ys[j];
            }
            let c = self.barycentric[j] / diff;
            num += c * ys[j];
            den += c;
        }
        num / den
    }
}
