//! One line per acceptance criterion; exits non-zero if any fails.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use smallball::charfn::{CharFamily, CharFunction};
use smallball::distortion::{characteristic_spectrum, distortion_constant_with, ConstantMethod};
use smallball::process::{kernel, offdiag_identity, operator_spec, Family, ProcessSpec};
use smallball::roots::roots;
use smallball::smallball::{
    quadform_cdf, quadform_mc, report, spectrum_for, QuadFormDist, ReportConfig, SpectrumSource,
};
use smallball::spectral::{nystrom_spectrum, verify_theorem1, DEFAULT_NODES, RESIDUAL_CONSTANT};
use smallball::Error;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

fn demeaned(f: Family) -> ProcessSpec {
    ProcessSpec::new(f, true).unwrap()
}

const BETAS: [f64; 3] = [0.5, 1.0, 2.0];

fn neumann_spectrum() -> Outcome {
    let start = Instant::now();
    let k = kernel(&demeaned(Family::Wiener)).unwrap();
    let res = nystrom_spectrum(&k, DEFAULT_NODES, 10).unwrap();
    let err = res
        .spectrum
        .mu
        .iter()
        .enumerate()
        .map(|(i, m)| (m * (PI * (i + 1) as f64).powi(2) - 1.0).abs())
        .fold(0.0, f64::max);
    let took = start.elapsed();
    outcome(
        err <= 1e-6 && took < Duration::from_secs(30),
        format!("max rel err {err:.2e} (tol 1e-6), {:.1}s (limit 30s)", took.as_secs_f64()),
    )
}

fn alpha_invariance() -> Outcome {
    let spectra: Vec<Vec<f64>> = [0.0, 1.0, 2.0, -0.5]
        .iter()
        .map(|&alpha| {
            let k = kernel(&demeaned(Family::Xalpha { alpha })).unwrap();
            nystrom_spectrum(&k, DEFAULT_NODES, 10).unwrap().spectrum.mu
        })
        .collect();
    let mut worst: f64 = 0.0;
    for a in &spectra {
        for b in &spectra {
            for (x, y) in a.iter().zip(b) {
                worst = worst.max((x / y - 1.0).abs());
            }
        }
    }
    outcome(worst <= 1e-8, format!("max pairwise rel diff {worst:.2e} (tol 1e-8)"))
}

fn dual_solver() -> Outcome {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for beta in BETAS {
        for fam in [
            Family::OU { beta },
            Family::OUZero { beta },
            Family::IntegratedOU { beta },
        ] {
            let spec = demeaned(fam);
            let ny = nystrom_spectrum(&kernel(&spec).unwrap(), DEFAULT_NODES, 10).unwrap();
            let ch = characteristic_spectrum(&spec, 10).unwrap();
            for (a, b) in ny.spectrum.mu.iter().zip(&ch.mu) {
                worst = worst.max((a / b - 1.0).abs());
            }
        }
    }
    let took = start.elapsed();
    outcome(
        worst <= 1e-6 && took < Duration::from_secs(120),
        format!("max rel diff {worst:.2e} (tol 1e-6), {:.1}s (limit 120s)", took.as_secs_f64()),
    )
}

fn distortion_constants() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut parts = Vec::new();
    for beta in BETAS {
        for fam in [
            Family::OU { beta },
            Family::OUZero { beta },
            Family::IntegratedOU { beta },
        ] {
            let d = distortion_constant_with(&demeaned(fam), ConstantMethod::Product, 500).unwrap();
            let diff = if matches!(fam, Family::IntegratedOU { .. }) {
                // C²_dist = 4βe^β
                (d.value * d.value - 4.0 * beta * beta.exp()).abs()
            } else {
                d.abs_diff
            };
            worst = worst.max(diff);
            parts.push(format!("{}:{diff:.1e}", demeaned(fam)));
        }
    }
    outcome(
        worst <= 1e-4,
        format!("max abs diff {worst:.2e} (tol 1e-4) [{}]", parts.join(" ")),
    )
}

fn root_asymptotics() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for beta in BETAS {
        let f = CharFunction::new(CharFamily::Fdet2, beta).unwrap();
        let r = roots(&f, 50).unwrap();
        let scaled: Vec<f64> = (3..=50)
            .map(|k| (r.zeta[k - 1] - PI * (k as f64 - 0.5)).abs() * k as f64)
            .collect();
        let early = scaled[..23].iter().copied().fold(0.0, f64::max);
        let late = scaled[23..].iter().copied().fold(0.0, f64::max);
        // Bounded: finite, and the second half never exceeds the first.
        ok &= early.is_finite() && late <= early;
        parts.push(format!("beta={beta}: C={early:.4}, max k>25 {late:.4}"));
    }
    outcome(ok, parts.join("; "))
}

fn sharpness() -> Outcome {
    let start = Instant::now();
    let eps = [0.30, 0.20, 0.15, 0.10];
    let mut ok = true;
    let mut parts = Vec::new();
    for fam in [
        Family::Wiener,
        Family::OU { beta: 1.0 },
        Family::OUZero { beta: 1.0 },
        Family::IntegratedOU { beta: 1.0 },
    ] {
        let spec = demeaned(fam);
        let rows = report(&spec, &eps, &ReportConfig::default()).unwrap();
        let ratios: Vec<f64> = rows
            .iter()
            .map(|r| r.ratio_exact_over_asymptotic.unwrap())
            .collect();
        let monotone = ratios
            .windows(2)
            .all(|w| (w[1] - 1.0).abs() < (w[0] - 1.0).abs());
        let band = if matches!(fam, Family::IntegratedOU { .. }) {
            0.2
        } else {
            0.15
        };
        let last = ratios[ratios.len() - 1];
        let in_band = (last - 1.0).abs() <= band;
        ok &= monotone && in_band;
        parts.push(format!(
            "{spec}: ratios {:?} monotone={monotone} in ±{band}={in_band}",
            ratios.iter().map(|r| format!("{r:.4}")).collect::<Vec<_>>()
        ));
    }
    let took = start.elapsed();
    ok &= took < Duration::from_secs(300);
    parts.push(format!("{:.1}s (limit 300s)", took.as_secs_f64()));
    outcome(ok, parts.join("; "))
}

fn mc_consistency() -> Outcome {
    let eps: f64 = 0.2;
    let n = 1_000_000;
    let mut ok = true;
    let mut worst: f64 = 0.0;
    let mut identical = true;
    let mut specs = Vec::new();
    for d in [true, false] {
        for fam in [
            Family::Wiener,
            Family::BrownianBridge,
            Family::Xalpha { alpha: 1.0 },
            Family::OU { beta: 1.0 },
            Family::OUZero { beta: 1.0 },
            Family::IntegratedOU { beta: 1.0 },
        ] {
            specs.push(ProcessSpec::new(fam, d).unwrap());
        }
    }
    for spec in &specs {
        let s = spectrum_for(spec, 500, SpectrumSource::Auto).unwrap();
        let exact = QuadFormDist::with_estimated_tail(s.clone(), 11).unwrap();
        let p = quadform_cdf(&exact, eps * eps).unwrap().p;
        let mc_dist = QuadFormDist::with_estimated_tail(s.truncated(100), 11).unwrap();
        let a = quadform_mc(&mc_dist, eps * eps, n).unwrap();
        let b = quadform_mc(&mc_dist, eps * eps, n).unwrap();
        let z = (a.p - p).abs() / a.stderr.max(1e-300);
        worst = worst.max(z);
        identical &= a.p.to_bits() == b.p.to_bits();
        ok &= z <= 4.0;
    }
    outcome(
        ok && identical,
        format!(
            "{} spectra, max |p_mc - p_exact|/stderr {worst:.2} (tol 4), reruns bit-identical: {identical}",
            specs.len()
        ),
    )
}

fn boundary_problem() -> Outcome {
    let mut ok = true;
    let mut worst: f64 = 0.0;
    for fam in [
        Family::Wiener,
        Family::Xalpha { alpha: 2.0 },
        Family::Xalpha { alpha: -0.5 },
        Family::IntegratedOU { beta: 1.0 },
    ] {
        for k in 1..=3 {
            let r = verify_theorem1(&demeaned(fam), k).unwrap();
            ok &= r.passed;
            worst = worst
                .max(r.interior.relative / r.interior.tolerance)
                .max(r.forms.iter().map(|f| f.relative / f.tolerance).fold(0.0, f64::max));
        }
    }
    let mut refused = true;
    for fam in [Family::OU { beta: 1.0 }, Family::OUZero { beta: 1.0 }] {
        refused &= matches!(verify_theorem1(&demeaned(fam), 1), Err(Error::NotApplicable(_)));
    }
    outcome(
        ok && refused,
        format!("worst residual/tolerance {worst:.3}, OU and OU0 refused: {refused}"),
    )
}

fn offdiag() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    let mut cases: Vec<(ProcessSpec, Vec<f64>, f64)> = Vec::new();
    for fam in [
        Family::Wiener,
        Family::Xalpha { alpha: 2.0 },
        Family::IntegratedOU { beta: 1.0 },
    ] {
        let spec = demeaned(fam);
        let coeffs = operator_spec(&ProcessSpec::new(fam, false).unwrap())
            .unwrap()
            .derivative_coefficients();
        cases.push((spec, coeffs, -1.0));
    }
    let beta = 1.0;
    cases.push((demeaned(Family::OU { beta }), vec![0.0, beta * beta, 0.0, -1.0], 0.0));
    for (spec, coeffs, target) in cases {
        let r = offdiag_identity(&kernel(&spec).unwrap(), &coeffs, target, 1024, 5).unwrap();
        let tol = RESIDUAL_CONSTANT * r.h * r.h;
        ok &= r.max_error <= tol;
        parts.push(format!("{spec}: {:.2e} (tol {tol:.2e})", r.max_error));
    }
    outcome(ok, parts.join("; "))
}

fn main() {
    type Criterion = (&'static str, fn() -> Outcome);
    let criteria: [Criterion; 9] = [
        ("Neumann spectrum", neumann_spectrum),
        ("alpha invariance", alpha_invariance),
        ("dual-solver agreement", dual_solver),
        ("distortion constants", distortion_constants),
        ("root asymptotics", root_asymptotics),
        ("small-ball sharpness", sharpness),
        ("MC/inversion consistency", mc_consistency),
        ("boundary-problem verification", boundary_problem),
        ("off-diagonal identities", offdiag),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let o = f();
        if !o.passed {
            failed += 1;
        }
        println!(
            "criterion {} {}: {} -- {}",
            i + 1,
            name,
            if o.passed { "PASS" } else { "FAIL" },
            o.detail
        );
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
