//! Spectra from characteristic roots, distortion constants and the Li
//! comparison constant.

use serde::{Deserialize, Serialize};

use crate::charfn::CharFunction;
use crate::error::{Error, Result};
use crate::process::{Family, ProcessSpec};
use crate::roots::{roots, RootList};
use crate::special::{hurwitz_zeta, trigamma};
use crate::spectral::{Provenance, Spectrum};

/// KL eigenvalues `μ_k` from the roots of a characteristic function.
///
/// For `𝔉₂` the zero eigenvalue of the boundary problem is already excluded,
/// so `μ_k` is the reciprocal of its `(k+1)`-th eigenvalue.
pub fn spectrum_from_roots(f: &CharFunction, r: &RootList) -> Result<Spectrum> {
    let mu = r.zeta.iter().map(|&z| f.mu_of_root(z)).collect();
    // Every characteristic family here belongs to a demeaned problem whose
    // constant eigenfunction is excluded.
    Spectrum::new(
        format!("{:?}(beta={})", f.family, f.beta),
        mu,
        1,
        Provenance::Characteristic,
        1,
    )
}

/// Roots and spectrum of a demeaned OU-type process.
pub fn characteristic_spectrum(spec: &ProcessSpec, k: usize) -> Result<Spectrum> {
    let f = CharFunction::for_spec(spec)?;
    let r = roots(&f, k)?;
    let mut s = spectrum_from_roots(&f, &r)?;
    s.label = spec.label();
    Ok(s)
}

/// `2e^β/(2+β)`; valid for `β ≥ 0`.
pub fn closed_form_ou(beta: f64) -> f64 {
    2.0 * beta.exp() / (2.0 + beta)
}

/// `e^β`; valid for `β ≥ 0`.
pub fn closed_form_ou0(beta: f64) -> f64 {
    beta.exp()
}

/// `C_dist = 2√(βe^β)` for demeaned integrated OU.
pub fn closed_form_iou(beta: f64) -> f64 {
    2.0 * (beta * beta.exp()).sqrt()
}

/// How a distortion constant is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstantMethod {
    ClosedForm,
    Product,
}

/// Partial product with its tail-corrected limit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductEstimate {
    pub terms: usize,
    /// `∏_{k≤K} r_k`.
    pub partial: f64,
    /// `Σ_{k>K} (a/k² + b/k³)` with `a`, `b` fitted near `K` and `K/2`.
    pub tail_log: f64,
    pub estimate: f64,
    /// `(K', ∏_{k≤K'} r_k)` at `K' = 10, 20, 40, …` and `K`.
    pub trace: Vec<(usize, f64)>,
}

/// `∏ r_k` with the tail model `log r_k ≈ a/k² + b/k³`.
///
/// Fails with a divergence error when the terms do not approach 1 faster
/// than `1/k`.
pub fn tail_corrected_product(ratios: &[f64]) -> Result<ProductEstimate> {
    let kk = ratios.len();
    if kk < 10 {
        return Err(Error::Parameter(format!("need at least 10 factors, got {kk}")));
    }
    if let Some(bad) = ratios.iter().position(|r| !(*r > 0.0 && r.is_finite())) {
        return Err(Error::Divergence(format!("factor {} is {}", bad + 1, ratios[bad])));
    }
    let last = ratios[kk - 1].ln();
    if last.abs() * kk as f64 > 1.0 {
        return Err(Error::Divergence(format!(
            "factor {kk} is {:.6}; terms are not approaching 1",
            ratios[kk - 1]
        )));
    }
    let mut log_sum = 0.0;
    let mut trace = Vec::new();
    let mut next = 10;
    for (i, r) in ratios.iter().enumerate() {
        log_sum += r.ln();
        let k = i + 1;
        if k == next || k == kk {
            trace.push((k, log_sum.exp()));
            next *= 2;
        }
    }
    // g(k) = k² log r_k averaged over a consecutive pair, which cancels
    // odd/even alternation; fitted as a + b/k at K and K/2.
    let g = |j: usize| {
        let lo = (j - 1) as f64;
        let hi = j as f64;
        (0.5 * (lo * lo * ratios[j - 2].ln() + hi * hi * ratios[j - 1].ln()), 1.0 / (hi - 0.5))
    };
    let (g_end, e_end) = g(kk);
    let (g_mid, e_mid) = g(kk / 2);
    let b = (g_end - g_mid) / (e_end - e_mid);
    let a = g_end - b * e_end;
    let k2 = kk as f64;
    let tail_log = a * trigamma(k2 + 1.0) + b * hurwitz_zeta(3.0, k2 + 1.0);
    Ok(ProductEstimate {
        terms: kk,
        partial: log_sum.exp(),
        tail_log,
        estimate: (log_sum + tail_log).exp(),
        trace,
    })
}

/// Distortion constant with diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistortionConstant {
    pub process: String,
    pub method: ConstantMethod,
    pub value: f64,
    pub closed_form: f64,
    /// `|value − closed_form|`.
    pub abs_diff: f64,
    pub product: Option<ProductEstimate>,
}

/// Default number of factors in the product method.
pub const DEFAULT_PRODUCT_TERMS: usize = 500;

/// Distortion constant of a demeaned OU, OU-from-zero or integrated-OU
/// process: `2e^β/(2+β)`, `e^β`, or `C_dist = 2√(βe^β)`.
pub fn distortion_constant(spec: &ProcessSpec, method: ConstantMethod) -> Result<DistortionConstant> {
    distortion_constant_with(spec, method, DEFAULT_PRODUCT_TERMS)
}

/// [`distortion_constant`] with `terms` factors in the product.
pub fn distortion_constant_with(
    spec: &ProcessSpec,
    method: ConstantMethod,
    terms: usize,
) -> Result<DistortionConstant> {
    if !spec.demeaned {
        return Err(Error::NotAvailable(format!(
            "distortion constant is defined for demeaned processes, got {}",
            spec.label()
        )));
    }
    let (closed, reference, power): (f64, Spectrum, f64) = match spec.family {
        Family::OU { beta } => (closed_form_ou(beta), Spectrum::neumann(terms), 1.0),
        Family::OUZero { beta } => (closed_form_ou0(beta), Spectrum::neumann(terms), 1.0),
        Family::IntegratedOU { beta } => (
            closed_form_iou(beta),
            Spectrum::half_shifted_quartic(terms),
            0.5,
        ),
        _ => {
            return Err(Error::NotAvailable(format!(
                "no distortion constant for {}",
                spec.label()
            )))
        }
    };
    match method {
        ConstantMethod::ClosedForm => Ok(DistortionConstant {
            process: spec.label(),
            method,
            value: closed,
            closed_form: closed,
            abs_diff: 0.0,
            product: None,
        }),
        ConstantMethod::Product => {
            let target = characteristic_spectrum(spec, terms)?;
            let ratios: Vec<f64> = reference
                .mu
                .iter()
                .zip(&target.mu)
                .map(|(r, t)| r / t)
                .collect();
            let est = tail_corrected_product(&ratios)?;
            let value = est.estimate.powf(power);
            Ok(DistortionConstant {
                process: spec.label(),
                method,
                value,
                closed_form: closed,
                abs_diff: (value - closed).abs(),
                product: Some(est),
            })
        }
    }
}

/// Result of [`li_comparison`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LiComparison {
    /// `(∏ reference_k / target_k)^{1/2}`, tail-corrected.
    pub constant: f64,
    pub product: ProductEstimate,
}

/// Comparison constant `(∏ reference_k/target_k)^{1/2}` of two spectra.
pub fn li_comparison(target: &Spectrum, reference: &Spectrum) -> Result<LiComparison> {
    if target.len() != reference.len() {
        return Err(Error::Parameter(format!(
            "spectra truncated differently: {} vs {}",
            target.len(),
            reference.len()
        )));
    }
    let ratios: Vec<f64> = reference
        .mu
        .iter()
        .zip(&target.mu)
        .map(|(r, t)| r / t)
        .collect();
    let product = tail_corrected_product(&ratios)?;
    Ok(LiComparison {
        constant: product.estimate.sqrt(),
        product,
    })
}
