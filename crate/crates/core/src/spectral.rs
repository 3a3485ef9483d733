//! Karhunen–Loève spectra: the `Spectrum` container and the Nyström solver.

use std::sync::Arc;

use faer::{Mat, Side};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::finite_diff::UniformGrid;
use crate::process::{self, Kernel, ProcessSpec};
use crate::quadrature::{CompositeRule, GaussLegendre};

/// Where a spectrum came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Nystrom,
    Characteristic,
    ClosedForm,
}

/// Positive KL eigenvalues in non-increasing order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub label: String,
    pub mu: Vec<f64>,
    /// Near-zero eigenvalues with (numerically) constant eigenfunctions,
    /// excluded from `mu`.
    pub zero_modes: usize,
    pub provenance: Provenance,
    /// `mu[k-1]` is the reciprocal of the `(k + numbering_shift)`-th
    /// eigenvalue of the underlying boundary problem.
    pub numbering_shift: usize,
}

impl Spectrum {
    /// Validates positivity and ordering.
    pub fn new(
        label: impl Into<String>,
        mu: Vec<f64>,
        zero_modes: usize,
        provenance: Provenance,
        numbering_shift: usize,
    ) -> Result<Self> {
        if let Some(bad) = mu.iter().position(|m| !(*m > 0.0 && m.is_finite())) {
            return Err(Error::Parameter(format!(
                "eigenvalue {} is not positive: {}",
                bad + 1,
                mu[bad]
            )));
        }
        if mu.windows(2).any(|w| w[1] > w[0]) {
            return Err(Error::Parameter("eigenvalues must be non-increasing".into()));
        }
        Ok(Self {
            label: label.into(),
            mu,
            zero_modes,
            provenance,
            numbering_shift,
        })
    }

    /// `μ_k = f(k)` for `k = 1..=len`.
    pub fn closed_form(label: impl Into<String>, len: usize, f: impl Fn(usize) -> f64) -> Result<Self> {
        Self::new(label, (1..=len).map(f).collect(), 0, Provenance::ClosedForm, 0)
    }

    /// `(πk)^{-2}`: demeaned Wiener / Brownian bridge spectrum.
    pub fn neumann(len: usize) -> Self {
        Self::closed_form("(pi k)^-2", len, |k| (std::f64::consts::PI * k as f64).powi(-2))
            .expect("closed form is positive and decreasing")
    }

    /// `(π(k − ½))^{-4}`: reference spectrum for demeaned integrated OU.
    pub fn half_shifted_quartic(len: usize) -> Self {
        Self::closed_form("(pi (k-1/2))^-4", len, |k| {
            (std::f64::consts::PI * (k as f64 - 0.5)).powi(-4)
        })
        .expect("closed form is positive and decreasing")
    }

    pub fn len(&self) -> usize {
        self.mu.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mu.is_empty()
    }

    /// Number of retained terms `K`.
    pub fn truncation(&self) -> usize {
        self.mu.len()
    }

    pub fn lambda(&self) -> Vec<f64> {
        self.mu.iter().map(|m| 1.0 / m).collect()
    }

    pub fn truncated(&self, k: usize) -> Self {
        Self {
            mu: self.mu[..k.min(self.mu.len())].to_vec(),
            ..self.clone()
        }
    }

    /// `k,mu,lambda` rows with header.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,mu,lambda\n");
        for (i, m) in self.mu.iter().enumerate() {
            out.push_str(&format!(
                "{},{},{}\n",
                i + 1,
                crate::fmt17(*m),
                crate::fmt17(1.0 / m)
            ));
        }
        out
    }
}

/// Eigenfunction of the integral operator, sampled at quadrature nodes.
#[derive(Debug, Clone)]
pub struct EigenPair {
    pub mu: f64,
    /// Nodal values, `Σ w_j u_j² = 1`.
    pub u: Vec<f64>,
    rule: Arc<CompositeRule>,
}

impl EigenPair {
    pub fn nodes(&self) -> &[f64] {
        self.rule.nodes()
    }

    /// Quadrature `L2` norm.
    pub fn norm(&self) -> f64 {
        self.u
            .iter()
            .zip(self.rule.weights())
            .map(|(u, w)| w * u * u)
            .sum::<f64>()
            .sqrt()
    }

    /// Panel-wise polynomial interpolant at `t`.
    pub fn eval(&self, t: f64) -> f64 {
        self.rule.interpolate(&self.u, t)
    }

    /// Samples on `n` uniform points of `[0, 1]`.
    pub fn uniform(&self, n: usize) -> UniformGrid {
        UniformGrid::sample(n, |t| self.eval(t))
    }

    /// `(1/μ) ∫ G(t,s) u(s) ds` with the quadrature of the panel containing
    /// `t` split at `t`.
    ///
    /// Unlike [`eval`](Self::eval) this is smooth in `t` even though the
    /// nodal values carry quadrature noise, so it tolerates differentiation.
    pub fn eval_operator(&self, kernel: &Kernel, t: f64) -> f64 {
        let rule = &*self.rule;
        let order = rule.order();
        let h = 1.0 / rule.panels() as f64;
        let p = ((t / h).floor() as usize).min(rule.panels() - 1);
        let (a, b) = (p as f64 * h, (p + 1) as f64 * h);
        let x = rule.nodes();
        let w = rule.weights();
        let far: f64 = (0..x.len())
            .filter(|j| j / order != p)
            .map(|j| w[j] * kernel.eval(t, x[j]) * self.u[j])
            .sum();
        let near = GaussLegendre::new(2 * order)
            .integrate_split(a, b, &[t], |s| kernel.eval(t, s) * self.eval(s));
        (far + near) / self.mu
    }

    /// [`eval_operator`](Self::eval_operator) on `n` uniform points.
    pub fn uniform_operator(&self, kernel: &Kernel, n: usize) -> UniformGrid {
        use rayon::prelude::*;
        let h = 1.0 / (n - 1) as f64;
        let pts: Vec<f64> = (0..n)
            .into_par_iter()
            .map(|i| self.eval_operator(kernel, i as f64 * h))
            .collect();
        UniformGrid::new(pts)
    }
}

/// Output of [`nystrom_spectrum`].
#[derive(Debug, Clone)]
pub struct NystromResult {
    pub spectrum: Spectrum,
    pub pairs: Vec<EigenPair>,
    /// Smallest and largest eigenvalue of the discretized operator.
    pub min_eigenvalue: f64,
    pub max_eigenvalue: f64,
    pub n_nodes: usize,
}

/// Gauss–Legendre points per panel.
pub const PANEL_ORDER: usize = 8;
/// Relative threshold separating null vectors from positive eigenvalues.
pub const ZERO_MODE_THRESHOLD: f64 = 1e-10;
/// Tolerated negative eigenvalue, relative to the largest one.
pub const PSD_TOLERANCE: f64 = 1e-8;
/// Default number of quadrature nodes.
pub const DEFAULT_NODES: usize = 2000;
/// Polynomial degree bound of the subspace used to recognise null vectors.
const SMOOTH_DEGREE: usize = PANEL_ORDER;

/// Largest `k_max` eigenpairs of `∫₀¹ G(t,s) u(s) ds = μ u(t)`.
///
/// The kernel is discretized on a composite Gauss–Legendre rule (`n_nodes`
/// rounded up to whole panels) with singularity subtraction:
/// `Σ_j w_j G(t_i,t_j)(u_j − u_i) + u_i ∫G(t_i,y)dy`, symmetrized with `W^{1/2}`.
/// The subtraction term keeps high-order accuracy despite the diagonal kink
/// and makes constants exact null vectors of demeaned kernels.
pub fn nystrom_spectrum(k: &Kernel, n_nodes: usize, k_max: usize) -> Result<NystromResult> {
    if k_max == 0 {
        return Err(Error::Parameter("k_max must be at least 1".into()));
    }
    if n_nodes < 4 * k_max || n_nodes < PANEL_ORDER {
        return Err(Error::Resolution(format!(
            "{n_nodes} nodes cannot resolve {k_max} eigenvalues (need n >= 4 k_max)"
        )));
    }
    let panels = n_nodes.div_ceil(PANEL_ORDER);
    let rule = Arc::new(CompositeRule::new(panels, PANEL_ORDER));
    let x = rule.nodes();
    let w = rule.weights();
    let n = x.len();
    let (g, r) = k.gram(x);
    let sw: Vec<f64> = w.iter().map(|v| v.sqrt()).collect();
    let diag: Vec<f64> = (0..n)
        .map(|i| {
            let row = &g[i * n..(i + 1) * n];
            r[i] - row.iter().zip(w).map(|(gij, wj)| gij * wj).sum::<f64>()
        })
        .collect();
    let a = Mat::<f64>::from_fn(n, n, |i, j| {
        let v = sw[i] * g[i * n + j] * sw[j];
        if i == j {
            v + diag[i]
        } else {
            v
        }
    });
    drop(g);
    let evd = a
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Eigensolver(format!("{e:?}")))?;
    let s = evd.S().column_vector();
    let vecs = evd.U();
    // Eigenvalues come in ascending order.
    let min_eigenvalue = s[0];
    let max_eigenvalue = s[n - 1];
    if min_eigenvalue < -PSD_TOLERANCE * max_eigenvalue.abs() {
        return Err(Error::NotPsd {
            min: min_eigenvalue,
            max: max_eigenvalue,
        });
    }
    let threshold = ZERO_MODE_THRESHOLD * max_eigenvalue;
    let basis = smooth_basis(&rule);
    let zero_modes = (0..n)
        .take_while(|&j| s[j] <= threshold)
        .filter(|&j| {
            let v: Vec<f64> = (0..n).map(|i| vecs[(i, j)]).collect();
            smooth_fraction(&basis, &v) >= 0.5
        })
        .count();
    let mut mu = Vec::with_capacity(k_max);
    let mut pairs = Vec::with_capacity(k_max);
    for j in (0..n).rev().take(k_max) {
        if s[j] <= threshold {
            break;
        }
        let mut u: Vec<f64> = (0..n).map(|i| vecs[(i, j)] / sw[i]).collect();
        let lead = u
            .iter()
            .copied()
            .find(|v| v.abs() > 1e-8)
            .unwrap_or(1.0);
        if lead < 0.0 {
            u.iter_mut().for_each(|v| *v = -*v);
        }
        let norm = u.iter().zip(w).map(|(u, w)| w * u * u).sum::<f64>().sqrt();
        u.iter_mut().for_each(|v| *v /= norm);
        mu.push(s[j]);
        pairs.push(EigenPair {
            mu: s[j],
            u,
            rule: Arc::clone(&rule),
        });
    }
    let spectrum = Spectrum::new(k.label(), mu, zero_modes, Provenance::Nystrom, zero_modes)?;
    Ok(NystromResult {
        spectrum,
        pairs,
        min_eigenvalue,
        max_eigenvalue,
        n_nodes: n,
    })
}

/// Columns `√w_i P_d(2t_i − 1)·√(2d+1)`, orthonormal for the composite rule.
fn smooth_basis(rule: &CompositeRule) -> Vec<Vec<f64>> {
    let mut cols: Vec<Vec<f64>> = (0..SMOOTH_DEGREE).map(|_| Vec::with_capacity(rule.len())).collect();
    for (&t, &w) in rule.nodes().iter().zip(rule.weights()) {
        let x = 2.0 * t - 1.0;
        let (mut p0, mut p1) = (1.0, x);
        for (d, col) in cols.iter_mut().enumerate() {
            let p = match d {
                0 => p0,
                1 => p1,
                _ => {
                    let df = d as f64;
                    let p2 = ((2.0 * df - 1.0) * x * p1 - (df - 1.0) * p0) / df;
                    p0 = p1;
                    p1 = p2;
                    p2
                }
            };
            col.push(w.sqrt() * p * (2.0 * d as f64 + 1.0).sqrt());
        }
    }
    cols
}

/// Squared norm of the projection of a unit vector onto the smooth subspace.
fn smooth_fraction(basis: &[Vec<f64>], v: &[f64]) -> f64 {
    basis
        .iter()
        .map(|b| b.iter().zip(v).map(|(x, y)| x * y).sum::<f64>().powi(2))
        .sum()
}

/// Outcome of one boundary or interior check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionCheck {
    pub label: String,
    pub relative: f64,
    pub tolerance: f64,
    pub passed: bool,
}

/// Result of [`verify_theorem1`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryCheckReport {
    pub process: String,
    pub k: usize,
    pub mu: f64,
    pub lambda: f64,
    pub interior: ConditionCheck,
    pub forms: Vec<ConditionCheck>,
    pub passed: bool,
}

/// Uniform grid size for eigenfunction residuals.
pub const RESIDUAL_GRID: usize = 1024;
/// `C` in the `C·h²` tolerance of boundary and interior residuals.
pub const RESIDUAL_CONSTANT: f64 = 10.0;

/// Checks that the `k`-th Nyström eigenfunction of a demeaned kernel solves
/// the demeaned boundary problem, including the flux condition.
pub fn verify_theorem1(spec: &ProcessSpec, k: usize) -> Result<BoundaryCheckReport> {
    if !spec.demeaned {
        return Err(Error::Parameter(
            "verification applies to demeaned processes".into(),
        ));
    }
    if k == 0 {
        return Err(Error::Parameter("k starts at 1".into()));
    }
    let op = process::operator_spec(spec)?;
    let kernel = process::kernel(spec)?;
    let res = nystrom_spectrum(&kernel, DEFAULT_NODES, k.max(4))?;
    let pair = res
        .pairs
        .get(k - 1)
        .ok_or_else(|| Error::Resolution(format!("only {} eigenpairs", res.pairs.len())))?;
    let lambda = 1.0 / pair.mu;
    let grid = pair.uniform_operator(&kernel, RESIDUAL_GRID);
    let report = process::operator_residual(&op, &grid, lambda)?;
    let tol = RESIDUAL_CONSTANT * report.h * report.h;
    let check = |label: &str, relative: f64| ConditionCheck {
        label: label.to_string(),
        relative,
        tolerance: tol,
        passed: relative <= tol,
    };
    let interior = check("Lu - lambda u", report.interior_relative);
    let forms: Vec<_> = report
        .forms
        .iter()
        .map(|f| check(&f.label, f.relative))
        .collect();
    let passed = interior.passed && forms.iter().all(|f| f.passed);
    Ok(BoundaryCheckReport {
        process: spec.label(),
        k,
        mu: pair.mu,
        lambda,
        interior,
        forms,
        passed,
    })
}
