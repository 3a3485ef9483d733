//! Spectra and probabilities checked against independently derived values.

use std::f64::consts::PI;

use smallball::distortion::{characteristic_spectrum, distortion_constant_with, ConstantMethod};
use smallball::process::{demean_kernel, kernel, Family, Kernel, ProcessSpec};
use smallball::smallball::{quadform_cdf, quadform_cdf_with, CdfMethod, QuadFormDist};
use smallball::spectral::nystrom_spectrum;

fn spec(f: Family, demeaned: bool) -> ProcessSpec {
    ProcessSpec::new(f, demeaned).unwrap()
}

fn max_rel(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x / y - 1.0).abs()).fold(0.0, f64::max)
}

/// Roots of `g` on `((k−1)π, kπ)` after a shift, by bisection.
fn bisect_roots(g: impl Fn(f64) -> f64, count: usize, lo_of: impl Fn(usize) -> (f64, f64)) -> Vec<f64> {
    (1..=count)
        .map(|k| {
            let (mut a, mut b) = lo_of(k);
            let mut ga = g(a);
            assert!(ga * g(b) < 0.0, "no bracket for root {k}");
            for _ in 0..200 {
                let m = 0.5 * (a + b);
                let gm = g(m);
                if gm * ga <= 0.0 {
                    b = m;
                } else {
                    a = m;
                    ga = gm;
                }
            }
            0.5 * (a + b)
        })
        .collect()
}

#[test]
fn wiener_and_bridge_spectra() {
    let w = nystrom_spectrum(&kernel(&spec(Family::Wiener, false)).unwrap(), 800, 8).unwrap();
    let expect: Vec<f64> = (1..=8).map(|k| (PI * (k as f64 - 0.5)).powi(-2)).collect();
    assert!(max_rel(&w.spectrum.mu, &expect) < 1e-7);
    assert_eq!(w.spectrum.zero_modes, 0);

    let b = nystrom_spectrum(&kernel(&spec(Family::BrownianBridge, false)).unwrap(), 800, 8).unwrap();
    let expect: Vec<f64> = (1..=8).map(|k| (PI * k as f64).powi(-2)).collect();
    assert!(max_rel(&b.spectrum.mu, &expect) < 1e-7, "{:?}", b.spectrum);
}

#[test]
fn stationary_ou_matches_robin_roots() {
    // u = A cos ωt + B sin ωt with u′ = βu at 0 and u′ = −βu at 1 gives
    // (ω² − β²) sin ω − 2βω cos ω = 0 and μ = 1/(ω² + β²).
    let beta: f64 = 1.3;
    let g = |w: f64| (w * w - beta * beta) * w.sin() - 2.0 * beta * w * w.cos();
    // One root in each ((k−1)π, kπ) for k ≥ 1, the first above 0.
    let omegas = bisect_roots(g, 8, |k| ((k as f64 - 1.0) * PI + 1e-9, k as f64 * PI - 1e-9));
    let expect: Vec<f64> = omegas.iter().map(|w| 1.0 / (w * w + beta * beta)).collect();
    let got = nystrom_spectrum(&kernel(&spec(Family::OU { beta }, false)).unwrap(), 800, 8).unwrap();
    assert!(max_rel(&got.spectrum.mu, &expect) < 1e-8, "{:?} {:?}", got.spectrum.mu, expect);
}

#[test]
fn ou_from_zero_matches_robin_roots() {
    // u = sin ωt with ω cos ω + β sin ω = 0.
    let beta: f64 = 0.7;
    let g = |w: f64| w * w.cos() + beta * w.sin();
    let omegas = bisect_roots(g, 8, |k| ((k as f64 - 0.5) * PI + 1e-9, k as f64 * PI - 1e-9));
    let expect: Vec<f64> = omegas.iter().map(|w| 1.0 / (w * w + beta * beta)).collect();
    let got =
        nystrom_spectrum(&kernel(&spec(Family::OUZero { beta }, false)).unwrap(), 800, 8).unwrap();
    assert!(max_rel(&got.spectrum.mu, &expect) < 1e-8);
}

#[test]
fn quadrature_demeaning_matches_closed_rows() {
    // Same OU covariance, but row integrals come from quadrature.
    let beta = 1.0;
    let raw = Kernel::custom("ou by hand", 0, move |t, s| {
        (-beta * (t - s).abs()).exp() / (2.0 * beta)
    });
    let by_hand = nystrom_spectrum(&demean_kernel(&raw), 800, 6).unwrap();
    let roots = characteristic_spectrum(&spec(Family::OU { beta }, true), 6).unwrap();
    assert!(max_rel(&by_hand.spectrum.mu, &roots.mu) < 1e-8);
    assert_eq!(by_hand.spectrum.zero_modes, 1);
}

#[test]
fn chi_square_four() {
    let d = QuadFormDist::from_weights(vec![1.0; 4], 0).unwrap();
    for x in [0.5, 2.0, 4.0, 9.0] {
        let exact = 1.0 - (-x / 2.0f64).exp() * (1.0 + x / 2.0);
        let p = quadform_cdf(&d, x).unwrap().p;
        assert!((p - exact).abs() < 1e-12, "x={x}: {p} vs {exact}");
    }
}

#[test]
fn two_distinct_pairs_are_hypoexponential() {
    // a(ξ₁²+ξ₂²) + b(ξ₃²+ξ₄²) = 2a E₁ + 2b E₂ with unit exponentials.
    let (a, b) = (0.3f64, 0.05f64);
    let d = QuadFormDist::from_weights(vec![a, a, b, b], 0).unwrap();
    for x in [0.05, 0.2, 0.6, 2.0] {
        let exact = 1.0 - (a * (-x / (2.0 * a)).exp() - b * (-x / (2.0 * b)).exp()) / (a - b);
        for m in [CdfMethod::Contour, CdfMethod::Imhof] {
            let p = quadform_cdf_with(&d, x, m).unwrap().p;
            assert!((p - exact).abs() < 1e-9, "{m:?} x={x}: {p} vs {exact}");
        }
    }
}

#[test]
fn more_product_terms_sharpen_the_constant() {
    let s = spec(Family::OUZero { beta: 1.0 }, true);
    let short = distortion_constant_with(&s, ConstantMethod::Product, 100).unwrap();
    let long = distortion_constant_with(&s, ConstantMethod::Product, 1000).unwrap();
    assert!(long.abs_diff < short.abs_diff);
    assert!(long.abs_diff < 1e-5);
}
