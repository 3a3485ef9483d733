//! Positive real roots of characteristic functions.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::charfn::CharFunction;
use crate::error::{Error, Result};

/// Ascending positive real roots with diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RootList {
    pub zeta: Vec<f64>,
    /// `|f(ζ_k)|` relative to the largest sampled `|f|` in the bracket.
    pub residual: Vec<f64>,
    pub bracket_width: Vec<f64>,
}

impl RootList {
    pub fn len(&self) -> usize {
        self.zeta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.zeta.is_empty()
    }

    /// `max_{k ∈ range} |ζ_k − spacing(k)|·k`.
    pub fn asymptotic_bound(&self, f: &CharFunction, ks: std::ops::RangeInclusive<usize>) -> f64 {
        ks.filter(|&k| k >= 1 && k <= self.zeta.len())
            .map(|k| (self.zeta[k - 1] - f.root_spacing(k)).abs() * k as f64)
            .fold(0.0, f64::max)
    }
}

/// Sampling step when scanning for sign changes.
const SCAN_STEP: f64 = PI / 64.0;
/// How far past the nominal bracket the scan may extend before giving up.
const MAX_WIDENINGS: usize = 8;

/// First `k_max` positive real roots of `f`.
///
/// Roots are found in order. The `k`-th search starts just past root `k − 1`
/// and scans up to `spacing(k) + π/2`, widening by `π/2` until a sign change
/// appears. The first sign change is refined by Brent's method; the scanned
/// interval up to that point must contain exactly one.
pub fn roots(f: &CharFunction, k_max: usize) -> Result<RootList> {
    if k_max == 0 {
        return Err(Error::Parameter("k_max must be at least 1".into()));
    }
    let mut out = RootList {
        zeta: Vec::with_capacity(k_max),
        residual: Vec::with_capacity(k_max),
        bracket_width: Vec::with_capacity(k_max),
    };
    let mut prev = 0.0;
    for k in 1..=k_max {
        let start = prev + SCAN_STEP / 2.0;
        let mut hi = (f.root_spacing(k) + PI / 2.0).max(start + PI);
        let mut widenings = 0;
        let mut a = start;
        let mut fa = f.real_profile(a)?;
        let mut scale = fa.abs();
        let bracket = loop {
            let mut found = None;
            while a < hi {
                let b = (a + SCAN_STEP).min(hi);
                let fb = f.real_profile(b)?;
                scale = scale.max(fb.abs());
                if fa == 0.0 {
                    found = Some((a, a));
                    break;
                }
                if fa.signum() != fb.signum() {
                    found = Some((a, b));
                    break;
                }
                a = b;
                fa = fb;
            }
            if let Some(br) = found {
                break br;
            }
            widenings += 1;
            if widenings > MAX_WIDENINGS {
                return Err(Error::RootIsolation {
                    k,
                    reason: format!("no sign change in [{start:.6}, {hi:.6}]"),
                });
            }
            hi += PI / 2.0;
        };
        let (zeta, width) = if bracket.0 == bracket.1 {
            (bracket.0, 0.0)
        } else {
            brent(|x| f.real_profile(x), bracket.0, bracket.1)?
        };
        let res = f.real_profile(zeta)?.abs() / scale.max(f64::MIN_POSITIVE);
        out.zeta.push(zeta);
        out.residual.push(res);
        out.bracket_width.push(width);
        prev = zeta;
    }
    Ok(out)
}

/// Brent's method on a sign-changing bracket; returns the root and the final
/// bracket width.
pub fn brent(mut f: impl FnMut(f64) -> Result<f64>, a: f64, b: f64) -> Result<(f64, f64)> {
    let (mut a, mut b) = (a, b);
    let mut fa = f(a)?;
    let mut fb = f(b)?;
    if fa == 0.0 {
        return Ok((a, 0.0));
    }
    if fb == 0.0 {
        return Ok((b, 0.0));
    }
    if fa.signum() == fb.signum() {
        return Err(Error::RootIsolation {
            k: 0,
            reason: format!("no sign change on [{a}, {b}]"),
        });
    }
    let (mut c, mut fc) = (a, fa);
    let mut d = b - a;
    let mut e = d;
    for _ in 0..200 {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol = 2.0 * f64::EPSILON * b.abs() + 1e-300;
        let m = 0.5 * (c - b);
        if m.abs() <= tol || fb == 0.0 {
            return Ok((b, (c - b).abs()));
        }
        if e.abs() >= tol && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                let qq = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * m * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * m * q - (tol * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        } else {
            d = m;
            e = m;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol { d } else { tol.copysign(m) };
        fb = f(b)?;
    }
    Ok((b, (c - b).abs()))
}
