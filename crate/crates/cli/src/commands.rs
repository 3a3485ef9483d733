use smallball::distortion::{
    characteristic_spectrum, distortion_constant, distortion_constant_with, ConstantMethod,
};
use smallball::process::kernel;
use smallball::smallball::{report, CdfMethod, Methods, ReportConfig, SpectrumSource};
use smallball::spectral::nystrom_spectrum;
use smallball::{Family, ProcessSpec};

use crate::output::{Cell, Table};
use crate::{
    CliError, ConstantArgs, ConstantMethodArg, EigsArgs, EigsMethod, ProbArgs, ProbMethod,
    ProcessArgs, SelftestArgs, SourceArg,
};

fn need(v: Option<f64>, name: &str, process: &str) -> Result<f64, CliError> {
    v.ok_or_else(|| CliError::Usage(format!("--{name} is required for {process}")))
}

pub fn parse_process(a: &ProcessArgs) -> Result<ProcessSpec, CliError> {
    let (demeaned, base) = match a.process.strip_prefix("demeaned-") {
        Some(rest) => (true, rest),
        None => (false, a.process.as_str()),
    };
    let family = match base {
        "wiener" => Family::Wiener,
        "bridge" => Family::BrownianBridge,
        "xalpha" => Family::Xalpha {
            alpha: need(a.alpha, "alpha", &a.process)?,
        },
        "ou" => Family::OU {
            beta: need(a.beta, "beta", &a.process)?,
        },
        "ou0" => Family::OUZero {
            beta: need(a.beta, "beta", &a.process)?,
        },
        "iou" => Family::IntegratedOU {
            beta: need(a.beta, "beta", &a.process)?,
        },
        other => {
            return Err(CliError::Usage(format!(
                "unknown process {other:?}; expected wiener, bridge, xalpha, ou, ou0 or iou"
            )))
        }
    };
    Ok(ProcessSpec::new(family, demeaned)?)
}

pub fn eigs(a: &EigsArgs) -> Result<Table, CliError> {
    let spec = parse_process(&a.process)?;
    if a.compare {
        let ny = nystrom_spectrum(&kernel(&spec)?, a.n_nodes, a.k)?;
        let ch = characteristic_spectrum(&spec, a.k)?;
        let mut t = Table::new(vec!["k", "mu_nystrom", "mu_charfn", "rel_diff"]);
        let mut worst: f64 = 0.0;
        for (i, (x, y)) in ny.spectrum.mu.iter().zip(&ch.mu).enumerate() {
            let d = (x / y - 1.0).abs();
            worst = worst.max(d);
            t.push(vec![(i + 1).into(), (*x).into(), (*y).into(), d.into()]);
        }
        t.meta("process", spec.label());
        t.meta("n_nodes", ny.n_nodes);
        t.meta("zero_modes", ny.spectrum.zero_modes);
        t.meta("max_rel_diff", worst);
        return Ok(t);
    }
    let (s, nodes) = match a.method {
        EigsMethod::Nystrom => {
            let r = nystrom_spectrum(&kernel(&spec)?, a.n_nodes, a.k)?;
            (r.spectrum, Some(r.n_nodes))
        }
        EigsMethod::Charfn => (characteristic_spectrum(&spec, a.k)?, None),
    };
    let mut t = Table::new(vec!["k", "mu", "lambda"]);
    for (i, m) in s.mu.iter().enumerate() {
        t.push(vec![(i + 1).into(), (*m).into(), (1.0 / m).into()]);
    }
    t.meta("process", spec.label());
    t.meta("provenance", format!("{:?}", s.provenance).to_lowercase());
    if let Some(n) = nodes {
        t.meta("n_nodes", n);
    }
    t.meta("zero_modes", s.zero_modes);
    t.meta("numbering_shift", s.numbering_shift);
    Ok(t)
}

pub fn constant(a: &ConstantArgs) -> Result<Table, CliError> {
    let spec = parse_process(&a.process)?;
    let mut t = Table::new(vec!["process", "method", "value", "closed_form", "abs_diff", "terms"]);
    let methods: &[ConstantMethod] = match a.method {
        ConstantMethodArg::Closed => &[ConstantMethod::ClosedForm],
        ConstantMethodArg::Product => &[ConstantMethod::Product],
        ConstantMethodArg::Both => &[ConstantMethod::ClosedForm, ConstantMethod::Product],
    };
    for &m in methods {
        let d = distortion_constant_with(&spec, m, a.terms)?;
        let (name, terms) = match m {
            ConstantMethod::ClosedForm => ("closed", Cell::Empty),
            ConstantMethod::Product => ("product", a.terms.into()),
        };
        t.push(vec![
            d.process.into(),
            name.into(),
            d.value.into(),
            d.closed_form.into(),
            d.abs_diff.into(),
            terms,
        ]);
    }
    Ok(t)
}

pub fn prob(a: &ProbArgs) -> Result<Table, CliError> {
    let spec = parse_process(&a.process)?;
    let has = |m: ProbMethod| a.method.contains(&m);
    if has(ProbMethod::Exact) && has(ProbMethod::Imhof) {
        return Err(CliError::Usage("choose one of exact and imhof".into()));
    }
    let mc = has(ProbMethod::Mc);
    let seed = match (mc, a.seed) {
        (true, None) => return Err(CliError::Usage("--seed is required with mc".into())),
        (_, s) => s.unwrap_or(0),
    };
    let cfg = ReportConfig {
        methods: Methods {
            exact: has(ProbMethod::Exact) || has(ProbMethod::Imhof),
            mc,
            asymptotic: has(ProbMethod::Asymptotic),
        },
        source: match a.source {
            SourceArg::Auto => SpectrumSource::Auto,
            SourceArg::Nystrom => SpectrumSource::Nystrom,
            SourceArg::Charfn => SpectrumSource::Characteristic,
        },
        k_trunc: a.k_trunc,
        k_mc: a.k_mc,
        n_samples: a.samples,
        seed,
        cdf_method: if has(ProbMethod::Imhof) {
            CdfMethod::Imhof
        } else {
            CdfMethod::Contour
        },
    };
    let rows = report(&spec, &a.eps, &cfg)?;
    let mut t = Table::new(vec![
        "process",
        "beta_or_alpha",
        "epsilon",
        "p_exact",
        "p_mc",
        "mc_stderr",
        "p_asymptotic",
        "ratio",
    ]);
    for r in rows {
        t.push(vec![
            r.process.into(),
            r.beta_or_alpha.into(),
            r.epsilon.into(),
            r.p_exact.into(),
            r.p_mc.into(),
            r.mc_stderr.into(),
            r.p_asymptotic.into(),
            r.ratio_exact_over_asymptotic.into(),
        ]);
    }
    Ok(t)
}

const BETAS: [f64; 3] = [0.5, 1.0, 2.0];

/// Runs the checks; returns the table and the number of failures.
pub fn selftest(a: &SelftestArgs) -> Result<(Table, usize), CliError> {
    let mut t = Table::new(vec!["check", "process", "value", "tolerance", "status"]);
    let mut failed = 0;
    let mut row = |t: &mut Table, check: &str, process: String, value: f64, tol: f64| {
        let ok = value <= tol;
        if !ok {
            failed += 1;
        }
        t.push(vec![check.into(), process.into(), value.into(), tol.into(), ok.into()]);
    };

    let k = 10;
    let reference = nystrom_spectrum(&kernel(&xalpha(0.0)?)?, a.n_nodes, k)?.spectrum;
    for alpha in [1.0, 2.0, -0.5] {
        let s = nystrom_spectrum(&kernel(&xalpha(alpha)?)?, a.n_nodes, k)?.spectrum;
        row(
            &mut t,
            "alpha-invariance",
            format!("alpha=0 vs alpha={alpha}"),
            max_rel(&s.mu, &reference.mu),
            1e-8,
        );
    }

    for beta in BETAS {
        for fam in [
            Family::OU { beta },
            Family::OUZero { beta },
            Family::IntegratedOU { beta },
        ] {
            let spec = ProcessSpec::new(fam, true)?;
            let ny = nystrom_spectrum(&kernel(&spec)?, a.n_nodes, k)?.spectrum;
            let ch = characteristic_spectrum(&spec, k)?;
            row(&mut t, "dual-solver", spec.label(), max_rel(&ny.mu, &ch.mu), 1e-6);
        }
    }

    for beta in BETAS {
        for fam in [
            Family::OU { beta },
            Family::OUZero { beta },
            Family::IntegratedOU { beta },
        ] {
            let spec = ProcessSpec::new(fam, true)?;
            let d = distortion_constant(&spec, ConstantMethod::Product)?;
            let diff = if matches!(fam, Family::IntegratedOU { .. }) {
                (d.value * d.value - d.closed_form * d.closed_form).abs()
            } else {
                d.abs_diff
            };
            row(&mut t, "product-convergence", spec.label(), diff, 1e-4);
        }
    }
    t.meta("n_nodes", a.n_nodes);
    Ok((t, failed))
}

fn xalpha(alpha: f64) -> Result<ProcessSpec, CliError> {
    Ok(ProcessSpec::new(Family::Xalpha { alpha }, true)?)
}

fn max_rel(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x / y - 1.0).abs())
        .fold(0.0, f64::max)
}
