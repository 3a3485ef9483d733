//! Distribution of `Σ μ_k ξ_k²`: exact CDF, Monte Carlo, and the closed-form
//! small-ball asymptotics.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distortion::characteristic_spectrum;
use crate::error::{Error, Result};
use crate::process::{kernel, Family, ProcessSpec};
use crate::quadrature::GaussLegendre;
use crate::special::hurwitz_zeta;
use crate::spectral::{nystrom_spectrum, Spectrum, DEFAULT_NODES};

/// Quadratic form `Σ_{k≤K} μ_k ξ_k² + tail_mean`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadFormDist {
    pub spectrum: Spectrum,
    /// Deterministic stand-in for `Σ_{k>K} μ_k`.
    pub tail_mean: f64,
    pub seed: u64,
}

impl QuadFormDist {
    pub fn new(spectrum: Spectrum, tail_mean: f64, seed: u64) -> Result<Self> {
        if !(tail_mean >= 0.0 && tail_mean.is_finite()) {
            return Err(Error::Parameter(format!("tail mean must be >= 0, got {tail_mean}")));
        }
        Ok(Self {
            spectrum,
            tail_mean,
            seed,
        })
    }

    /// Finite list of weights with no tail.
    pub fn from_weights(mu: Vec<f64>, seed: u64) -> Result<Self> {
        let mut mu = mu;
        mu.sort_by(|a, b| b.total_cmp(a));
        let s = Spectrum::new("weights", mu, 0, crate::Provenance::ClosedForm, 0)?;
        Self::new(s, 0.0, seed)
    }

    /// Spectrum with the tail mean extrapolated from its decay.
    pub fn with_estimated_tail(spectrum: Spectrum, seed: u64) -> Result<Self> {
        let tail = tail_mean_estimate(&spectrum);
        Self::new(spectrum, tail, seed)
    }

    pub fn mean(&self) -> f64 {
        self.spectrum.mu.iter().sum::<f64>() + self.tail_mean
    }
}

/// `Σ_{k>K} μ_k` assuming `μ_k ∝ k^{-p}` beyond `K`, with `p ∈ {2, 4}` read off
/// the last two eigenvalues.
pub fn tail_mean_estimate(s: &Spectrum) -> f64 {
    let k = s.len();
    if k < 2 {
        return 0.0;
    }
    let kf = k as f64;
    let slope = (s.mu[k - 2] / s.mu[k - 1]).ln() / (kf / (kf - 1.0)).ln();
    let p = if slope > 3.0 { 4.0 } else { 2.0 };
    s.mu[k - 1] * kf.powf(p) * hurwitz_zeta(p, kf + 1.0)
}

/// Value of [`quadform_cdf`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CdfValue {
    pub p: f64,
    /// Set when `x ≤ tail_mean`; `p` is then the lower bound 0.
    pub below_shift: bool,
    /// Estimated absolute quadrature error.
    pub error: f64,
}

/// Inversion scheme for [`quadform_cdf_with`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CdfMethod {
    /// Steepest-descent parabola through the saddle point of the Laplace
    /// inversion integral.
    Contour,
    /// Real-axis oscillatory integral.
    Imhof,
}

/// Absolute accuracy target of the CDF.
pub const CDF_TOLERANCE: f64 = 1e-8;

/// `P{Q ≤ x}` by the default (contour) inversion.
pub fn quadform_cdf(d: &QuadFormDist, x: f64) -> Result<CdfValue> {
    quadform_cdf_with(d, x, CdfMethod::Contour)
}

pub fn quadform_cdf_with(d: &QuadFormDist, x: f64, method: CdfMethod) -> Result<CdfValue> {
    if !x.is_finite() {
        return Err(Error::Parameter(format!("x = {x}")));
    }
    let y = x - d.tail_mean;
    if y <= 0.0 {
        return Ok(CdfValue {
            p: 0.0,
            below_shift: true,
            error: 0.0,
        });
    }
    if d.spectrum.is_empty() {
        return Ok(CdfValue {
            p: 1.0,
            below_shift: false,
            error: 0.0,
        });
    }
    match method {
        CdfMethod::Contour => contour_cdf(&d.spectrum.mu, y),
        CdfMethod::Imhof => imhof_cdf(&d.spectrum.mu, y),
    }
}

/// `log Φ(s) = −½ Σ log(1 + 2sμ_k)`, the Laplace transform of `Q`.
fn log_laplace(mu: &[f64], s: Complex64) -> Complex64 {
    -0.5 * mu.iter().map(|&m| (1.0 + 2.0 * m * s).ln()).sum::<Complex64>()
}

fn contour_cdf(mu: &[f64], x: f64) -> Result<CdfValue> {
    // Saddle point c of s·x + log Φ(s) − log s on the positive axis.
    let g = |c: f64| x - mu.iter().map(|m| m / (1.0 + 2.0 * c * m)).sum::<f64>() - 1.0 / c;
    let mut hi = 1.0 / x;
    while g(hi) < 0.0 {
        hi *= 2.0;
    }
    let mut lo = hi / 2.0;
    while g(lo) > 0.0 {
        lo /= 2.0;
    }
    let (c, _) = crate::roots::brent(|c| Ok(g(c)), lo, hi)?;
    let curv: f64 = mu
        .iter()
        .map(|m| 2.0 * m * m / (1.0 + 2.0 * c * m).powi(2))
        .sum::<f64>()
        + 1.0 / (c * c);
    let sigma = 1.0 / curv.sqrt();
    let a = 0.05 / (x * sigma * sigma);
    let rule = rule16();
    let panels = 64;
    let width = sigma / 2.0;
    let integrand = |t: f64| -> f64 {
        let s = Complex64::new(c - a * t * t, t);
        let ds = Complex64::new(-2.0 * a * t, 1.0);
        let v = (s * x + log_laplace(mu, s)).exp() / s * ds;
        v.im
    };
    let pieces: Vec<f64> = (0..panels)
        .into_par_iter()
        .map(|p| rule.integrate(p as f64 * width, (p + 1) as f64 * width, integrand))
        .collect();
    let total: f64 = pieces.iter().sum::<f64>() / std::f64::consts::PI;
    // The last panel bounds the neglected tail.
    let error = pieces.last().copied().unwrap_or(0.0).abs() / std::f64::consts::PI;
    if !total.is_finite() || error > CDF_TOLERANCE {
        return Err(Error::Precision {
            achieved: if error.is_finite() { error } else { f64::INFINITY },
        });
    }
    Ok(CdfValue {
        p: total.clamp(0.0, 1.0),
        below_shift: false,
        error,
    })
}

fn rule16() -> &'static GaussLegendre {
    static RULE: std::sync::OnceLock<GaussLegendre> = std::sync::OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(16))
}

/// Largest integration limit tried by the real-axis method.
const IMHOF_MAX_PANELS: usize = 200_000;

fn imhof_cdf(mu: &[f64], x: f64) -> Result<CdfValue> {
    // P{Q > x} = ½ + (1/π) ∫₀^∞ sin θ(u) / (u ρ(u)) du with
    // θ(u) = ½ Σ arctan(μu) − ½ x u and ρ(u) = ∏ (1 + μ²u²)^{1/4}.
    let theta = |u: f64| 0.5 * mu.iter().map(|m| (m * u).atan()).sum::<f64>() - 0.5 * x * u;
    let log_rho = |u: f64| 0.25 * mu.iter().map(|m| (m * m * u * u).ln_1p()).sum::<f64>();
    let integrand = |u: f64| {
        if u == 0.0 {
            return 0.5 * (mu.iter().sum::<f64>() - x);
        }
        theta(u).sin() / (u * log_rho(u).exp())
    };
    let freq = 0.5 * x.max(mu.iter().sum::<f64>());
    let width = std::f64::consts::PI / (2.0 * freq);
    let rule = rule16();
    let mut acc = 0.0;
    let mut envelope = f64::INFINITY;
    for p in 0..IMHOF_MAX_PANELS {
        let a = p as f64 * width;
        acc += rule.integrate(a, a + width, integrand);
        let b = a + width;
        envelope = 1.0 / (b * log_rho(b).exp());
        if envelope < 1e-12 {
            let p_upper = 0.5 + acc / std::f64::consts::PI;
            return Ok(CdfValue {
                p: (1.0 - p_upper).clamp(0.0, 1.0),
                below_shift: false,
                error: envelope,
            });
        }
    }
    Err(Error::Precision { achieved: envelope })
}

/// Monte Carlo estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub p: f64,
    pub stderr: f64,
    pub n_samples: u64,
}

/// Samples per independent random stream.
pub const MC_CHUNK: u64 = 1 << 16;
/// Minimum sample count.
pub const MC_MIN_SAMPLES: u64 = 10_000;

/// Empirical `P{Q ≤ x}`. Chunk `j` of the sample draws from ChaCha8 stream
/// `j` of the seed, so the estimate does not depend on the thread count.
pub fn quadform_mc(d: &QuadFormDist, x: f64, n_samples: u64) -> Result<McEstimate> {
    if n_samples < MC_MIN_SAMPLES {
        return Err(Error::Parameter(format!(
            "need at least {MC_MIN_SAMPLES} samples, got {n_samples}"
        )));
    }
    let y = x - d.tail_mean;
    let chunks = n_samples.div_ceil(MC_CHUNK);
    let mu = &d.spectrum.mu;
    let hits: u64 = (0..chunks)
        .into_par_iter()
        .map(|j| {
            let mut rng = ChaCha8Rng::seed_from_u64(d.seed);
            rng.set_stream(j);
            let count = MC_CHUNK.min(n_samples - j * MC_CHUNK);
            let mut hits = 0u64;
            for _ in 0..count {
                let mut q = 0.0;
                for &m in mu {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    q += m * z * z;
                }
                if q <= y {
                    hits += 1;
                }
            }
            hits
        })
        .sum();
    let p = hits as f64 / n_samples as f64;
    Ok(McEstimate {
        p,
        stderr: (p * (1.0 - p) / n_samples as f64).sqrt(),
        n_samples,
    })
}

/// `√(8/π) e^{−1/(8ε²)}`: demeaned Wiener and demeaned `X_α`.
pub fn asymptotic_wiener(eps: f64) -> f64 {
    (8.0 / std::f64::consts::PI).sqrt() * (-1.0 / (8.0 * eps * eps)).exp()
}

/// `√(16e^β/(π(2+β))) e^{−1/(8ε²)}`: demeaned OU, `β ≥ 0`.
pub fn asymptotic_ou(beta: f64, eps: f64) -> f64 {
    (16.0 * beta.exp() / (std::f64::consts::PI * (2.0 + beta))).sqrt()
        * (-1.0 / (8.0 * eps * eps)).exp()
}

/// `√(8e^β/π) e^{−1/(8ε²)}`: demeaned OU from zero, `β ≥ 0`.
pub fn asymptotic_ou0(beta: f64, eps: f64) -> f64 {
    (8.0 * beta.exp() / std::f64::consts::PI).sqrt() * (-1.0 / (8.0 * eps * eps)).exp()
}

/// `16 √(βe^β/(3π)) ε^{1/3} e^{−(3/8) ε^{−2/3}}`: demeaned integrated OU.
pub fn asymptotic_iou(beta: f64, eps: f64) -> f64 {
    16.0 * (beta * beta.exp() / (3.0 * std::f64::consts::PI)).sqrt()
        * eps.cbrt()
        * (-0.375 * eps.powf(-2.0 / 3.0)).exp()
}

/// Leading-order `P{‖X‖ ≤ ε}` as `ε → 0`.
pub fn asymptotic_prob(spec: &ProcessSpec, eps: f64) -> Result<f64> {
    if eps.is_nan() || eps <= 0.0 {
        return Err(Error::Parameter(format!("epsilon must be positive, got {eps}")));
    }
    if !spec.demeaned {
        return Err(Error::NotAvailable(format!(
            "no asymptotic formula for non-demeaned {}",
            spec.label()
        )));
    }
    match spec.family {
        Family::Wiener | Family::Xalpha { .. } => Ok(asymptotic_wiener(eps)),
        Family::OU { beta } => Ok(asymptotic_ou(beta, eps)),
        Family::OUZero { beta } => Ok(asymptotic_ou0(beta, eps)),
        Family::IntegratedOU { beta } => Ok(asymptotic_iou(beta, eps)),
        Family::BrownianBridge => Err(Error::NotAvailable(format!(
            "no asymptotic formula for {}",
            spec.label()
        ))),
    }
}

/// Where [`spectrum_for`] takes eigenvalues from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectrumSource {
    Nystrom,
    Characteristic,
    /// Closed form where known, characteristic roots for OU-type demeaned
    /// processes, Nyström otherwise.
    Auto,
}

/// First `k` KL eigenvalues of a process.
pub fn spectrum_for(spec: &ProcessSpec, k: usize, source: SpectrumSource) -> Result<Spectrum> {
    let closed = |s: Spectrum| Spectrum {
        label: spec.label(),
        zero_modes: 1,
        numbering_shift: 1,
        ..s
    };
    match source {
        SpectrumSource::Characteristic => characteristic_spectrum(spec, k),
        SpectrumSource::Nystrom => {
            let n = DEFAULT_NODES.max(4 * k);
            Ok(nystrom_spectrum(&kernel(spec)?, n, k)?.spectrum)
        }
        SpectrumSource::Auto => match (spec.demeaned, spec.family) {
            (true, Family::Wiener | Family::Xalpha { .. }) => Ok(closed(Spectrum::neumann(k))),
            (true, Family::OU { .. } | Family::OUZero { .. } | Family::IntegratedOU { .. }) => {
                characteristic_spectrum(spec, k)
            }
            _ => spectrum_for(spec, k.min(DEFAULT_NODES / 4), SpectrumSource::Nystrom),
        },
    }
}

/// Which probabilities a report contains.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Methods {
    pub exact: bool,
    pub mc: bool,
    pub asymptotic: bool,
}

impl Default for Methods {
    fn default() -> Self {
        Self {
            exact: true,
            mc: false,
            asymptotic: true,
        }
    }
}

/// Knobs of [`report`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportConfig {
    pub methods: Methods,
    pub source: SpectrumSource,
    /// Terms kept in the exact path.
    pub k_trunc: usize,
    /// Terms kept in the Monte Carlo path.
    pub k_mc: usize,
    pub n_samples: u64,
    pub seed: u64,
    /// Inversion scheme of the exact path.
    pub cdf_method: CdfMethod,
}

impl Default for ReportConfig {
    fn default() -> Self {
        Self {
            methods: Methods::default(),
            source: SpectrumSource::Auto,
            k_trunc: 2000,
            k_mc: 100,
            n_samples: 1_000_000,
            seed: 0,
            cdf_method: CdfMethod::Contour,
        }
    }
}

/// Smallest exact probability that is reported.
pub const MIN_EXACT_PROB: f64 = 1e-12;

/// One row of a small-ball report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmallBallReport {
    pub process: String,
    pub beta_or_alpha: Option<f64>,
    pub epsilon: f64,
    pub p_exact: Option<f64>,
    pub p_mc: Option<f64>,
    pub mc_stderr: Option<f64>,
    pub p_asymptotic: Option<f64>,
    pub ratio_exact_over_asymptotic: Option<f64>,
}

/// Exact, Monte Carlo and asymptotic `P{‖X‖ ≤ ε}` for each `ε`.
pub fn report(spec: &ProcessSpec, eps_list: &[f64], cfg: &ReportConfig) -> Result<Vec<SmallBallReport>> {
    if eps_list.is_empty() {
        return Ok(Vec::new());
    }
    if let Some(e) = eps_list.iter().find(|e| !(**e > 0.0 && e.is_finite())) {
        return Err(Error::Parameter(format!("epsilon must be positive, got {e}")));
    }
    let exact = if cfg.methods.exact {
        let s = spectrum_for(spec, cfg.k_trunc, cfg.source)?;
        Some(QuadFormDist::with_estimated_tail(s, cfg.seed)?)
    } else {
        None
    };
    let mc = if cfg.methods.mc {
        let s = match &exact {
            Some(d) if d.spectrum.len() <= cfg.k_mc => d.spectrum.clone(),
            Some(d) => d.spectrum.truncated(cfg.k_mc),
            None => spectrum_for(spec, cfg.k_mc, cfg.source)?,
        };
        Some(QuadFormDist::with_estimated_tail(s, cfg.seed)?)
    } else {
        None
    };
    let param = spec.family.beta().or(spec.family.alpha());
    eps_list
        .iter()
        .map(|&eps| {
            let x = eps * eps;
            let p_exact = match &exact {
                Some(d) => {
                    let v = quadform_cdf_with(d, x, cfg.cdf_method)?;
                    (v.p >= MIN_EXACT_PROB).then_some(v.p)
                }
                None => None,
            };
            let (p_mc, mc_stderr) = match &mc {
                Some(d) => {
                    let m = quadform_mc(d, x, cfg.n_samples)?;
                    (Some(m.p), Some(m.stderr))
                }
                None => (None, None),
            };
            let p_asymptotic = if cfg.methods.asymptotic {
                Some(asymptotic_prob(spec, eps)?)
            } else {
                None
            };
            let ratio = match (p_exact, p_asymptotic) {
                (Some(e), Some(a)) if a > 0.0 => Some(e / a),
                _ => None,
            };
            Ok(SmallBallReport {
                process: spec.label(),
                beta_or_alpha: param,
                epsilon: eps,
                p_exact,
                p_mc,
                mc_stderr,
                p_asymptotic,
                ratio_exact_over_asymptotic: ratio,
            })
        })
        .collect()
}

/// CSV with header
/// `process,beta_or_alpha,epsilon,p_exact,p_mc,mc_stderr,p_asymptotic,ratio`.
pub fn reports_to_csv(rows: &[SmallBallReport]) -> String {
    let opt = |v: Option<f64>| v.map(crate::fmt17).unwrap_or_default();
    let mut out =
        String::from("process,beta_or_alpha,epsilon,p_exact,p_mc,mc_stderr,p_asymptotic,ratio\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.process,
            opt(r.beta_or_alpha),
            crate::fmt17(r.epsilon),
            opt(r.p_exact),
            opt(r.p_mc),
            opt(r.mc_stderr),
            opt(r.p_asymptotic),
            opt(r.ratio_exact_over_asymptotic),
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dist(mu: Vec<f64>) -> QuadFormDist {
        QuadFormDist::from_weights(mu, 1).unwrap()
    }

    #[test]
    fn chi_square_one_and_two() {
        let p1 = quadform_cdf(&dist(vec![1.0]), 1.0).unwrap().p;
        assert!((p1 - 0.682_689_492_137_085_9).abs() < 1e-12, "{p1}");
        let p2 = quadform_cdf(&dist(vec![1.0, 1.0]), 1.0).unwrap().p;
        assert!((p2 - (1.0 - (-0.5f64).exp())).abs() < 1e-12, "{p2}");
    }

    #[test]
    fn imhof_agrees_with_contour_on_long_spectrum() {
        let d = QuadFormDist::with_estimated_tail(Spectrum::neumann(200), 0).unwrap();
        for x in [0.03, 0.05, 0.1] {
            let a = quadform_cdf_with(&d, x, CdfMethod::Contour).unwrap().p;
            let b = quadform_cdf_with(&d, x, CdfMethod::Imhof).unwrap().p;
            assert!((a - b).abs() < 1e-9, "x={x}: {a} vs {b}");
        }
    }

    #[test]
    fn imhof_reports_precision_failure_on_single_weight() {
        let r = quadform_cdf_with(&dist(vec![1.0]), 1.0, CdfMethod::Imhof);
        assert!(matches!(r, Err(Error::Precision { .. })));
    }

    #[test]
    fn below_shift_is_flagged() {
        let d = QuadFormDist::new(Spectrum::neumann(10), 0.5, 0).unwrap();
        let v = quadform_cdf(&d, 0.4).unwrap();
        assert!(v.below_shift && v.p == 0.0);
    }

    #[test]
    fn mc_total_mass_and_reproducibility() {
        let d = dist(vec![1.0]);
        let m = quadform_mc(&d, 100.0, 20_000).unwrap();
        assert_eq!(m.p, 1.0);
        let a = quadform_mc(&d, 1.0, 50_000).unwrap();
        let b = quadform_mc(&d, 1.0, 50_000).unwrap();
        assert_eq!(a.p.to_bits(), b.p.to_bits());
        assert!(quadform_mc(&d, 1.0, 100).is_err());
    }

    #[test]
    fn asymptotic_values() {
        let w = ProcessSpec::new(Family::Wiener, true).unwrap();
        let v = asymptotic_prob(&w, 0.1).unwrap();
        assert!((v - 5.946_878e-6).abs() < 1e-11, "{v}");
        for eps in [0.3, 0.1] {
            assert!((asymptotic_ou(0.0, eps) - asymptotic_wiener(eps)).abs() < 1e-18);
            assert!((asymptotic_ou0(0.0, eps) - asymptotic_wiener(eps)).abs() < 1e-18);
        }
        let bb = ProcessSpec::new(Family::BrownianBridge, true).unwrap();
        assert!(matches!(asymptotic_prob(&bb, 0.1), Err(Error::NotAvailable(_))));
    }

    #[test]
    fn empty_eps_list_gives_empty_report() {
        let w = ProcessSpec::new(Family::Wiener, true).unwrap();
        assert!(report(&w, &[], &ReportConfig::default()).unwrap().is_empty());
    }
}
