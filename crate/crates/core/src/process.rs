//! Process families, covariance kernels, demeaning and differential operators.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::finite_diff::{fornberg_weights, UniformGrid};
use crate::quadrature::GaussLegendre;

/// Catalog of Gaussian processes on `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Family {
    Wiener,
    BrownianBridge,
    /// `W(t) - c W(1)` with `c = alpha / (1 + alpha)`.
    Xalpha { alpha: f64 },
    /// Stationary Ornstein–Uhlenbeck process.
    #[serde(rename = "ou")]
    OU { beta: f64 },
    /// Ornstein–Uhlenbeck process started at zero.
    #[serde(rename = "ou_zero")]
    OUZero { beta: f64 },
    /// Integral of the stationary Ornstein–Uhlenbeck process.
    #[serde(rename = "integrated_ou")]
    IntegratedOU { beta: f64 },
}

impl Family {
    pub fn beta(&self) -> Option<f64> {
        match *self {
            Family::OU { beta } | Family::OUZero { beta } | Family::IntegratedOU { beta } => {
                Some(beta)
            }
            _ => None,
        }
    }

    pub fn alpha(&self) -> Option<f64> {
        match *self {
            Family::Xalpha { alpha } => Some(alpha),
            _ => None,
        }
    }

    /// Short name used in labels and on the command line.
    pub fn name(&self) -> &'static str {
        match self {
            Family::Wiener => "wiener",
            Family::BrownianBridge => "bridge",
            Family::Xalpha { .. } => "xalpha",
            Family::OU { .. } => "ou",
            Family::OUZero { .. } => "ou0",
            Family::IntegratedOU { .. } => "iou",
        }
    }
}

/// A validated process selection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProcessSpec {
    #[serde(flatten)]
    pub family: Family,
    pub demeaned: bool,
}

impl ProcessSpec {
    pub fn new(family: Family, demeaned: bool) -> Result<Self> {
        if let Some(beta) = family.beta() {
            if !(beta > 0.0 && beta.is_finite()) {
                return Err(Error::Parameter(format!(
                    "beta must be positive and finite, got {beta}"
                )));
            }
        }
        if let Some(alpha) = family.alpha() {
            if !alpha.is_finite() {
                return Err(Error::Parameter(format!("alpha must be finite, got {alpha}")));
            }
            if alpha == -1.0 {
                return Err(Error::Parameter(
                    "alpha = -1 makes the boundary problem degenerate".into(),
                ));
            }
        }
        Ok(Self { family, demeaned })
    }

    pub fn demeaned(family: Family) -> Result<Self> {
        Self::new(family, true)
    }

    pub fn label(&self) -> String {
        let base = match self.family {
            Family::Xalpha { alpha } => format!("xalpha(alpha={alpha})"),
            f => match f.beta() {
                Some(beta) => format!("{}(beta={beta})", f.name()),
                None => f.name().to_string(),
            },
        };
        if self.demeaned {
            format!("demeaned-{base}")
        } else {
            base
        }
    }
}

impl fmt::Display for ProcessSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

type KernelFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

#[derive(Clone)]
enum Repr {
    Catalog(Family),
    Demeaned { base: Arc<Kernel>, total: f64 },
    Integrated(Arc<Kernel>),
    Custom(KernelFn),
}

/// Symmetric covariance kernel on `[0, 1]²`.
///
/// Catalog kernels carry closed-form row integrals; custom kernels fall back to
/// Gauss–Legendre quadrature split at the diagonal.
#[derive(Clone)]
pub struct Kernel {
    label: String,
    smoothness_hint: u32,
    repr: Repr,
}

impl fmt::Debug for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Kernel")
            .field("label", &self.label)
            .field("smoothness_hint", &self.smoothness_hint)
            .finish()
    }
}

impl Kernel {
    /// Wraps an arbitrary symmetric function.
    pub fn custom(
        label: impl Into<String>,
        smoothness_hint: u32,
        f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            label: label.into(),
            smoothness_hint,
            repr: Repr::Custom(Arc::new(f)),
        }
    }

    pub fn constant(c: f64) -> Self {
        Self::custom(format!("constant({c})"), u32::MAX, move |_, _| c)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Number of continuous derivatives across the diagonal `t = s`.
    pub fn smoothness_hint(&self) -> u32 {
        self.smoothness_hint
    }

    pub fn eval(&self, t: f64, s: f64) -> f64 {
        match &self.repr {
            Repr::Catalog(f) => catalog_eval(*f, t, s),
            Repr::Demeaned { base, total } => {
                base.eval(t, s) - base.row_integral(t) - base.row_integral(s) + total
            }
            Repr::Integrated(base) => integrate_box(base, t, s),
            Repr::Custom(f) => f(t, s),
        }
    }

    /// `∫₀¹ G(t, y) dy`.
    pub fn row_integral(&self, t: f64) -> f64 {
        match &self.repr {
            Repr::Catalog(f) => catalog_row(*f, t),
            Repr::Demeaned { .. } => 0.0,
            _ => GaussLegendre::standard().integrate_split(0.0, 1.0, &[t], |y| self.eval(t, y)),
        }
    }

    /// `∬ G`.
    pub fn total_integral(&self) -> f64 {
        match &self.repr {
            Repr::Demeaned { .. } => 0.0,
            _ => GaussLegendre::standard().integrate(0.0, 1.0, |t| self.row_integral(t)),
        }
    }

    /// Row-major matrix `G(x_i, x_j)` together with the row integrals at the
    /// same points. Row integrals of a demeaned base are computed once.
    pub fn gram(&self, x: &[f64]) -> (Vec<f64>, Vec<f64>) {
        use rayon::prelude::*;
        let n = x.len();
        let mut g = vec![0.0; n * n];
        match &self.repr {
            Repr::Demeaned { base, total } => {
                let r: Vec<f64> = x.par_iter().map(|&t| base.row_integral(t)).collect();
                g.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
                    for (j, v) in row.iter_mut().enumerate() {
                        *v = base.eval(x[i], x[j]) - r[i] - r[j] + total;
                    }
                });
                (g, vec![0.0; n])
            }
            _ => {
                g.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
                    for (j, v) in row.iter_mut().enumerate() {
                        *v = self.eval(x[i], x[j]);
                    }
                });
                let r = x.par_iter().map(|&t| self.row_integral(t)).collect();
                (g, r)
            }
        }
    }

    /// `(t, s, value)` rows on an `n × n` uniform grid, CSV with header.
    pub fn grid_csv(&self, n: usize) -> String {
        let mut out = String::from("t,s,value\n");
        let h = 1.0 / (n.max(2) - 1) as f64;
        for i in 0..n {
            for j in 0..n {
                let (t, s) = (i as f64 * h, j as f64 * h);
                out.push_str(&format!(
                    "{},{},{}\n",
                    crate::fmt17(t),
                    crate::fmt17(s),
                    crate::fmt17(self.eval(t, s))
                ));
            }
        }
        out
    }
}

/// Covariance kernel of a process specification (demeaned if requested).
pub fn kernel(spec: &ProcessSpec) -> Result<Kernel> {
    let spec = ProcessSpec::new(spec.family, spec.demeaned)?;
    let smoothness_hint = match spec.family {
        Family::IntegratedOU { .. } => 2,
        _ => 0,
    };
    let base = Kernel {
        label: ProcessSpec { demeaned: false, ..spec }.label(),
        smoothness_hint,
        repr: Repr::Catalog(spec.family),
    };
    Ok(if spec.demeaned {
        demean_kernel(&base)
    } else {
        base
    })
}

/// `Ḡ(t,s) = G(t,s) − ∫G(t,y)dy − ∫G(x,s)dx + ∬G`.
///
/// Kernels whose row integrals already vanish are returned unchanged.
pub fn demean_kernel(k: &Kernel) -> Kernel {
    if matches!(k.repr, Repr::Demeaned { .. }) {
        return k.clone();
    }
    let probes = 33;
    let rows: Vec<f64> = (0..probes)
        .map(|i| k.row_integral(i as f64 / (probes - 1) as f64))
        .collect();
    let scale = (0..probes)
        .map(|i| {
            let t = i as f64 / (probes - 1) as f64;
            k.eval(t, t).abs()
        })
        .fold(0.0, f64::max);
    if rows.iter().all(|r| r.abs() <= 1e-14 * scale.max(f64::MIN_POSITIVE)) {
        return k.clone();
    }
    Kernel {
        label: format!("demeaned-{}", k.label),
        smoothness_hint: k.smoothness_hint,
        repr: Repr::Demeaned {
            total: k.total_integral(),
            base: Arc::new(k.clone()),
        },
    }
}

/// `(t, s) ↦ ∫₀ᵗ∫₀ˢ k(u, v) dv du`.
///
/// The stationary OU kernel maps to the integrated-OU closed form; anything
/// else is integrated numerically.
pub fn integrated_kernel(k: &Kernel) -> Kernel {
    let label = format!("integrated-{}", k.label);
    if let Repr::Catalog(Family::OU { beta }) = k.repr {
        return Kernel {
            label,
            smoothness_hint: k.smoothness_hint + 2,
            repr: Repr::Catalog(Family::IntegratedOU { beta }),
        };
    }
    Kernel {
        label,
        smoothness_hint: k.smoothness_hint.saturating_add(2),
        repr: Repr::Integrated(Arc::new(k.clone())),
    }
}

fn integrate_box(k: &Kernel, t: f64, s: f64) -> f64 {
    let rule = GaussLegendre::standard();
    rule.integrate_split(0.0, t, &[s], |u| {
        rule.integrate_split(0.0, s, &[u], |v| k.eval(u, v))
    })
}

/// `X_α` kernel as the Green function of `−u″` under
/// `u(0) + αu(1) = 0`, `αu′(0) + u′(1) = 0`.
///
/// `G(·, s)` is `a + b t` left of `s` and `a + s + (b − 1) t` right of it
/// (continuity plus a unit drop in slope); the two boundary forms fix `a, b`.
pub fn xalpha_green(alpha: f64, t: f64, s: f64) -> f64 {
    // Unknowns (a, b). Boundary form 1: a + α(a + s + b − 1) = 0.
    // Boundary form 2: αb + (b − 1) = 0.
    let m = [[1.0 + alpha, alpha], [0.0, 1.0 + alpha]];
    let rhs = [alpha * (1.0 - s), 1.0];
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let a = (rhs[0] * m[1][1] - m[0][1] * rhs[1]) / det;
    let b = (m[0][0] * rhs[1] - rhs[0] * m[1][0]) / det;
    if t <= s {
        a + b * t
    } else {
        a + s + (b - 1.0) * t
    }
}

/// `h(x) = 2(βx − 1 + e^{−βx})/β²`, the variance profile of integrated OU
/// up to the factor `1/(2β)`.
fn iou_h(beta: f64, x: f64) -> f64 {
    let z = beta * x;
    if z < 0.1 {
        // 2/β² Σ_{n≥2} (−z)^n / n!
        let mut term = z * z / 2.0;
        let mut sum: f64 = 0.0;
        let mut n = 2.0;
        while term.abs() > 1e-18 * sum.abs().max(1e-300) {
            sum += term;
            n += 1.0;
            term *= -z / n;
        }
        2.0 * sum / (beta * beta)
    } else {
        2.0 * (z + (-z).exp_m1()) / (beta * beta)
    }
}

/// `H(x) = ∫₀ˣ h`.
fn iou_h_int(beta: f64, x: f64) -> f64 {
    let z = beta * x;
    if z < 0.1 {
        // 2/β³ Σ_{n≥2} (−1)^n z^{n+1} / (n+1)!
        let mut term = z * z * z / 6.0;
        let mut sum: f64 = 0.0;
        let mut n = 3.0;
        while term.abs() > 1e-18 * sum.abs().max(1e-300) {
            sum += term;
            n += 1.0;
            term *= -z / n;
        }
        2.0 * sum / beta.powi(3)
    } else {
        x * x / beta - 2.0 * x / (beta * beta) - 2.0 * (-z).exp_m1() / beta.powi(3)
    }
}

fn catalog_eval(family: Family, t: f64, s: f64) -> f64 {
    match family {
        Family::Wiener => t.min(s),
        Family::BrownianBridge => t.min(s) - t * s,
        Family::Xalpha { alpha } => xalpha_green(alpha, t, s),
        Family::OU { beta } => (-beta * (t - s).abs()).exp() / (2.0 * beta),
        Family::OUZero { beta } => {
            // e^{−β|t−s|} − e^{−β(t+s)} = e^{−β|t−s|}(1 − e^{−2β min})
            let m = t.min(s);
            -(-beta * (t - s).abs()).exp() * (-2.0 * beta * m).exp_m1() / (2.0 * beta)
        }
        Family::IntegratedOU { beta } => {
            (iou_h(beta, t) + iou_h(beta, s) - iou_h(beta, (t - s).abs())) / (4.0 * beta)
        }
    }
}

fn catalog_row(family: Family, t: f64) -> f64 {
    match family {
        Family::Wiener => t - 0.5 * t * t,
        Family::BrownianBridge => 0.5 * (t - t * t),
        Family::Xalpha { alpha } => {
            let c = alpha / (1.0 + alpha);
            t - 0.5 * t * t - c * (t + 0.5) + c * c
        }
        Family::OU { beta } => ou_row(beta, t),
        Family::OUZero { beta } => {
            ou_row(beta, t) + (-beta * t).exp() * (-beta).exp_m1() / (2.0 * beta * beta)
        }
        Family::IntegratedOU { beta } => {
            (iou_h(beta, t) + iou_h_int(beta, 1.0) - iou_h_int(beta, t) - iou_h_int(beta, 1.0 - t))
                / (4.0 * beta)
        }
    }
}

fn ou_row(beta: f64, t: f64) -> f64 {
    -((-beta * t).exp_m1() + (-beta * (1.0 - t)).exp_m1()) / (2.0 * beta * beta)
}

/// Linear boundary form `Σ_j at0[j] u^{(j)}(0) + Σ_j at1[j] u^{(j)}(1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryForm {
    pub label: String,
    pub at0: Vec<f64>,
    pub at1: Vec<f64>,
}

impl BoundaryForm {
    pub fn new(label: impl Into<String>, at0: Vec<f64>, at1: Vec<f64>) -> Self {
        Self {
            label: label.into(),
            at0,
            at1,
        }
    }

    fn zero_order(&self) -> f64 {
        self.at0.first().copied().unwrap_or(0.0) + self.at1.first().copied().unwrap_or(0.0)
    }

    fn has_zero_order(&self) -> bool {
        self.at0.first().is_some_and(|c| *c != 0.0) || self.at1.first().is_some_and(|c| *c != 0.0)
    }

    fn scaled(&self, f: f64) -> Self {
        Self {
            label: self.label.clone(),
            at0: self.at0.iter().map(|c| c * f).collect(),
            at1: self.at1.iter().map(|c| c * f).collect(),
        }
    }

    fn minus(&self, other: &Self, label: String) -> Self {
        let len0 = self.at0.len().max(other.at0.len());
        let len1 = self.at1.len().max(other.at1.len());
        let get = |v: &[f64], i: usize| v.get(i).copied().unwrap_or(0.0);
        Self {
            label,
            at0: (0..len0).map(|i| get(&self.at0, i) - get(&other.at0, i)).collect(),
            at1: (0..len1).map(|i| get(&self.at1, i) - get(&other.at1, i)).collect(),
        }
    }
}

/// Constant-coefficient operator
/// `ℒu = (−1)^ℓ p_ℓ u^{(2ℓ)} + Σ_{j<ℓ} p_j u^{(2j)}` with boundary forms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorSpec {
    /// `p_0, …, p_ℓ`.
    pub p: Vec<f64>,
    pub boundary_forms: Vec<BoundaryForm>,
}

impl OperatorSpec {
    pub fn new(p: Vec<f64>, boundary_forms: Vec<BoundaryForm>) -> Result<Self> {
        if p.len() < 2 || p.last().is_none_or(|&pl| pl <= 0.0) {
            return Err(Error::Parameter(
                "leading coefficient p_l must exist and be positive".into(),
            ));
        }
        Ok(Self { p, boundary_forms })
    }

    pub fn order(&self) -> usize {
        2 * (self.p.len() - 1)
    }

    /// Coefficients `c_m` of `ℒu = Σ_m c_m u^{(m)}`.
    pub fn derivative_coefficients(&self) -> Vec<f64> {
        let l = self.p.len() - 1;
        let mut c = vec![0.0; 2 * l + 1];
        for (j, &pj) in self.p.iter().enumerate() {
            c[2 * j] = if j == l && l % 2 == 1 { -pj } else { pj };
        }
        c
    }

    /// Boundary problem of the demeaned process.
    ///
    /// Forms involving `u(0)` or `u(1)` are discarded (two such forms are
    /// replaced by their normalized difference) and the flux condition
    /// `(Lu′)(0) − (Lu′)(1) = 0` is appended. Requires `p_0 = 0`.
    pub fn demeaned(&self) -> Result<Self> {
        if self.p[0] != 0.0 {
            return Err(Error::NotApplicable(
                "demeaned boundary problem needs p_0 = 0; the operator does not annihilate constants"
                    .into(),
            ));
        }
        let (with_zero, mut forms): (Vec<_>, Vec<_>) = self
            .boundary_forms
            .iter()
            .cloned()
            .partition(BoundaryForm::has_zero_order);
        match with_zero.len() {
            0 | 1 => {}
            2 => {
                let u1 = with_zero[0].scaled(1.0 / with_zero[0].zero_order());
                let u2 = with_zero[1].scaled(1.0 / with_zero[1].zero_order());
                let label = format!("[{}] - [{}]", with_zero[1].label, with_zero[0].label);
                forms.push(u2.minus(&u1, label));
            }
            n => {
                return Err(Error::NotApplicable(format!(
                    "{n} boundary forms involve u itself"
                )))
            }
        }
        // L v = Σ_{j≥1} s_j p_j v^{(2j−2)}, s_ℓ = (−1)^ℓ, else 1; applied to u′.
        let l = self.p.len() - 1;
        let mut flux = vec![0.0; 2 * l];
        for j in 1..=l {
            let s = if j == l && l % 2 == 1 { -1.0 } else { 1.0 };
            flux[2 * j - 1] = s * self.p[j];
        }
        forms.push(BoundaryForm::new(
            "(Lu')(0) - (Lu')(1)",
            flux.clone(),
            flux.iter().map(|c| -c).collect(),
        ));
        Ok(Self {
            p: self.p.clone(),
            boundary_forms: forms,
        })
    }
}

/// Operator and boundary conditions whose Green function is the process
/// covariance (the demeaned version if `spec.demeaned`).
pub fn operator_spec(spec: &ProcessSpec) -> Result<OperatorSpec> {
    let f = BoundaryForm::new;
    let base = match spec.family {
        Family::Wiener => OperatorSpec::new(
            vec![0.0, 1.0],
            vec![f("u(0)", vec![1.0], vec![]), f("u'(1)", vec![], vec![0.0, 1.0])],
        )?,
        Family::BrownianBridge => OperatorSpec::new(
            vec![0.0, 1.0],
            vec![f("u(0)", vec![1.0], vec![]), f("u(1)", vec![], vec![1.0])],
        )?,
        Family::Xalpha { alpha } => OperatorSpec::new(
            vec![0.0, 1.0],
            vec![
                f("u(0) + a u(1)", vec![1.0], vec![alpha]),
                f("a u'(0) + u'(1)", vec![0.0, alpha], vec![0.0, 1.0]),
            ],
        )?,
        Family::OU { beta } => OperatorSpec::new(
            vec![beta * beta, 1.0],
            vec![
                f("u'(0) - b u(0)", vec![-beta, 1.0], vec![]),
                f("u'(1) + b u(1)", vec![], vec![beta, 1.0]),
            ],
        )?,
        Family::OUZero { beta } => OperatorSpec::new(
            vec![beta * beta, 1.0],
            vec![
                f("u(0)", vec![1.0], vec![]),
                f("u'(1) + b u(1)", vec![], vec![beta, 1.0]),
            ],
        )?,
        Family::IntegratedOU { beta } => {
            let b2 = beta * beta;
            OperatorSpec::new(
                vec![0.0, -b2, 1.0],
                vec![
                    f("u(0)", vec![1.0], vec![]),
                    f("u'''(1) - b^2 u'(1)", vec![], vec![0.0, -b2, 0.0, 1.0]),
                    f("u''(0) - b u'(0)", vec![0.0, -beta, 1.0], vec![]),
                    f("u''(1) + b u'(1)", vec![], vec![0.0, beta, 1.0]),
                ],
            )?
        }
    };
    if spec.demeaned {
        base.demeaned()
    } else {
        Ok(base)
    }
}

/// Grid stride for finite differences of order `m`; wider steps for high
/// orders keep round-off from dominating truncation error.
pub fn fd_stride(m: usize) -> usize {
    match m {
        0..=2 => 1,
        3 => 2,
        _ => 8,
    }
}

/// Value of one boundary form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FormValue {
    pub label: String,
    pub value: f64,
    /// `|value|` over `Σ_j |coef_j| λ^{j/order} ‖u‖∞`.
    pub relative: f64,
}

/// Finite-difference residual of `ℒu = λu`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub h: f64,
    pub interior_max: f64,
    /// `interior_max / (|λ| ‖u‖∞)`.
    pub interior_relative: f64,
    pub forms: Vec<FormValue>,
}

/// Residual of `ℒu − λu` at interior points and every boundary form.
pub fn operator_residual(op: &OperatorSpec, u: &UniformGrid, lambda: f64) -> Result<ResidualReport> {
    let order = op.order();
    let n = u.len();
    let coeffs = op.derivative_coefficients();
    let reach = (0..=order)
        .map(|m| crate::finite_diff::central_half_width(m) * fd_stride(m))
        .max()
        .unwrap_or(0);
    let layer = reach.max(order);
    if n < 512 || n <= 2 * layer + 1 {
        return Err(Error::Resolution(format!(
            "grid of {n} points is too coarse for order {order} (need at least 512)"
        )));
    }
    let norm = u.abs_max();
    let mut interior_max: f64 = 0.0;
    for i in layer..n - layer {
        let lu: f64 = coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| **c != 0.0)
            .map(|(m, c)| c * u.central_derivative(i, m, fd_stride(m)))
            .sum();
        interior_max = interior_max.max((lu - lambda * u.values()[i]).abs());
    }
    let zeta = lambda.abs().powf(1.0 / order as f64).max(1.0);
    let forms = op
        .boundary_forms
        .iter()
        .map(|form| {
            let mut value = 0.0;
            let mut scale = 0.0;
            for (side, coefs) in [(false, &form.at0), (true, &form.at1)] {
                for (m, &c) in coefs.iter().enumerate() {
                    if c != 0.0 {
                        value += c * u.endpoint_derivative_strided(m, side, fd_stride(m));
                        scale += c.abs() * zeta.powi(m as i32);
                    }
                }
            }
            FormValue {
                label: form.label.clone(),
                value,
                relative: value.abs() / (scale * norm).max(f64::MIN_POSITIVE),
            }
        })
        .collect();
    let denom = (lambda.abs() * norm).max(norm).max(f64::MIN_POSITIVE);
    Ok(ResidualReport {
        h: u.step(),
        interior_max,
        interior_relative: interior_max / denom,
        forms,
    })
}

/// Off-diagonal check of a linear differential identity in `t` applied to a
/// kernel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OffDiagReport {
    pub h: f64,
    pub points: usize,
    pub skipped: usize,
    pub max_error: f64,
}

/// Evaluates `Σ_m coeffs[m] ∂_t^m k(t, s)` on a `grid × grid` uniform mesh at
/// points with `|t − s| ≥ band·h`, compared with `target`.
///
/// Stencils stay on one side of the diagonal: centered when they fit,
/// one-sided otherwise. Points with no room for a stencil are skipped.
pub fn offdiag_identity(
    k: &Kernel,
    coeffs: &[f64],
    target: f64,
    grid: usize,
    band: usize,
) -> Result<OffDiagReport> {
    if grid < 16 {
        return Err(Error::Resolution(format!("grid of {grid} points")));
    }
    let h = 1.0 / (grid - 1) as f64;
    let mut max_error: f64 = 0.0;
    let mut points = 0;
    let mut skipped = 0;
    for js in 0..grid {
        let s = js as f64 * h;
        for it in 0..grid {
            let t = it as f64 * h;
            if (t - s).abs() < band as f64 * h - 1e-12 {
                continue;
            }
            let (lo, hi) = if t < s { (0.0, s) } else { (s, 1.0) };
            let mut value = 0.0;
            let mut ok = true;
            for (m, &c) in coeffs.iter().enumerate() {
                if c == 0.0 {
                    continue;
                }
                let step = fd_offdiag_stride(m) as f64 * h;
                match one_side_stencil(t, m, step, lo, hi) {
                    Some(nodes) => {
                        let w = fornberg_weights(t, &nodes, m);
                        value += c * nodes.iter().zip(&w).map(|(&x, wi)| wi * k.eval(x, s)).sum::<f64>();
                    }
                    None => {
                        ok = false;
                        break;
                    }
                }
            }
            if ok {
                points += 1;
                max_error = max_error.max((value - target).abs());
            } else {
                skipped += 1;
            }
        }
    }
    Ok(OffDiagReport {
        h,
        points,
        skipped,
        max_error,
    })
}

fn fd_offdiag_stride(m: usize) -> usize {
    match m {
        0..=2 => 1,
        3 => 2,
        _ => 8,
    }
}

/// One-sided stencils amplify round-off more than centered ones, so they
/// use a doubled step.
const ONE_SIDE_SCALE: f64 = 2.0;

/// Stencil of fourth-order accuracy containing `t`, inside `[lo, hi]`.
fn one_side_stencil(t: f64, m: usize, step: f64, lo: f64, hi: f64) -> Option<Vec<f64>> {
    if m == 0 {
        return Some(vec![t]);
    }
    let r = crate::finite_diff::central_half_width(m) as i64;
    let room_left = ((t - lo) / step + 1e-9).floor() as i64;
    let room_right = ((hi - t) / step + 1e-9).floor() as i64;
    if room_left >= r && room_right >= r {
        return Some((-r..=r).map(|o| t + o as f64 * step).collect());
    }
    let step = step * ONE_SIDE_SCALE;
    let room_left = ((t - lo) / step + 1e-9).floor() as i64;
    let room_right = ((hi - t) / step + 1e-9).floor() as i64;
    let count = m as i64 + 4;
    // First offset o0 with o0 >= -room_left and o0 + count - 1 <= room_right.
    let (min_o, max_o) = (-room_left, room_right - (count - 1));
    if min_o > max_o {
        return None;
    }
    let o0 = (-(count - 1) / 2).clamp(min_o, max_o);
    Some((o0..o0 + count).map(|o| t + o as f64 * step).collect())
}
