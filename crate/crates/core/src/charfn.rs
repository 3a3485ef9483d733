//! Characteristic functions whose real zeros parameterize the eigenvalues of
//! the demeaned OU, OU-from-zero and integrated-OU boundary problems.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::process::{Family, ProcessSpec};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Below this modulus `F_β` and `F°_β` switch to their Maclaurin series.
pub const SERIES_RADIUS: f64 = 1.0;
const SERIES_TERMS: usize = 30;
/// Points on the averaging circle used at removable singularities.
const CIRCLE_POINTS: usize = 32;

fn cos_coef(n: isize) -> f64 {
    // (−1)^n / (2n)!
    if n < 0 {
        return 0.0;
    }
    let mut f = 1.0;
    for j in 1..=(2 * n) {
        f /= j as f64;
    }
    if n % 2 == 0 {
        f
    } else {
        -f
    }
}

fn zsin_coef(n: isize) -> f64 {
    // coefficient of x^n in ζ sin ζ, x = ζ²: (−1)^{n−1} / (2n−1)!
    if n < 1 {
        return 0.0;
    }
    let mut f = 1.0;
    for j in 1..=(2 * n - 1) {
        f /= j as f64;
    }
    if n % 2 == 1 {
        f
    } else {
        -f
    }
}

/// Series coefficients `a_m` (m ≥ 2) of the numerator in `x = ζ²`, given the
/// polynomial weights of the numerator's three groups.
fn series(z: Complex64, coef: impl Fn(isize) -> f64) -> Complex64 {
    let x = z * z;
    // Horner in x over a_2 … a_{2+SERIES_TERMS}.
    let mut acc = Complex64::new(0.0, 0.0);
    for m in (2..2 + SERIES_TERMS as isize).rev() {
        acc = acc * x + coef(m);
    }
    acc
}

/// `F_β(ζ) = ζ⁻⁴[2β(ζ²+β²) − 2β cos ζ (ζ²+βζ²+β²) + ζ sin ζ (2ζ²+βζ²+2β²−β³)]`.
///
/// Accepts `β ≥ 0`; at `β = 0` it reduces to `2 sin ζ / ζ`.
pub fn charfn_ou(z: Complex64, beta: f64) -> Complex64 {
    let b = beta;
    if z.norm() < SERIES_RADIUS {
        return series(z, |m| {
            let d0 = if m == 0 { 2.0 * b.powi(3) } else { 0.0 };
            let d1 = if m == 1 { 2.0 * b } else { 0.0 };
            d0 + d1 - 2.0 * b * (1.0 + b) * cos_coef(m - 1) - 2.0 * b.powi(3) * cos_coef(m)
                + (2.0 + b) * zsin_coef(m - 1)
                + (2.0 * b * b - b.powi(3)) * zsin_coef(m)
        });
    }
    let z2 = z * z;
    let num = 2.0 * b * (z2 + b * b) - 2.0 * b * z.cos() * (z2 * (1.0 + b) + b * b)
        + z * z.sin() * (z2 * (2.0 + b) + 2.0 * b * b - b.powi(3));
    num / (z2 * z2)
}

/// `F°_β(ζ) = ζ⁻⁴[2β(ζ²+β²) − β cos ζ (2ζ²+βζ²+2β²) + ζ sin ζ (ζ²+β²−β³)]`.
///
/// Accepts `β ≥ 0`; at `β = 0` it reduces to `sin ζ / ζ`.
pub fn charfn_ou0(z: Complex64, beta: f64) -> Complex64 {
    let b = beta;
    if z.norm() < SERIES_RADIUS {
        return series(z, |m| {
            let d0 = if m == 0 { 2.0 * b.powi(3) } else { 0.0 };
            let d1 = if m == 1 { 2.0 * b } else { 0.0 };
            d0 + d1 - b * (2.0 + b) * cos_coef(m - 1) - 2.0 * b.powi(3) * cos_coef(m)
                + zsin_coef(m - 1)
                + (b * b - b.powi(3)) * zsin_coef(m)
        });
    }
    let z2 = z * z;
    let num = 2.0 * b * (z2 + b * b) - b * z.cos() * (z2 * (2.0 + b) + 2.0 * b * b)
        + z * z.sin() * (z2 + b * b - b.powi(3));
    num / (z2 * z2)
}

/// Complex number stored as `mantissa · e^{log_scale}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scaled {
    pub mantissa: Complex64,
    pub log_scale: f64,
}

impl Scaled {
    /// `ln |value|`.
    pub fn ln_abs(&self) -> f64 {
        self.mantissa.norm().ln() + self.log_scale
    }

    /// Full value; a range error if it does not fit in `f64`.
    pub fn value(&self) -> Result<Complex64> {
        let v = self.mantissa * self.log_scale.exp();
        if v.re.is_finite() && v.im.is_finite() {
            Ok(v)
        } else {
            Err(Error::Range(format!(
                "|value| = exp({:.6e}) exceeds f64",
                self.ln_abs()
            )))
        }
    }
}

/// Column rescaling policy for [`det_f_with`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rescale {
    Always,
    Never,
    /// Rescale only when some exponential exceeds `e^{50}`.
    Auto,
}

/// `ζ₁ = i√(ζ² + β²)` with the principal square root.
pub fn zeta1(z: Complex64, beta: f64) -> Complex64 {
    I * (z * z + beta * beta).sqrt()
}

/// Determinant of the boundary forms
/// `u‴(0)−β²u′(0)`, `u″(0)−βu′(0)`, `u‴(1)−β²u′(1)`, `u″(1)+βu′(1)`
/// applied to `e^{±iζ₀t}`, `e^{±iζ₁t}`.
pub fn det_f(z: Complex64, beta: f64) -> Result<Scaled> {
    det_f_with(z, beta, Rescale::Auto)
}

/// [`det_f`] with an explicit rescaling policy. Each column is divided by
/// `max(1, |e^{iθ}|)`; the logarithm of the removed factors is `log_scale`.
pub fn det_f_with(z: Complex64, beta: f64, rescale: Rescale) -> Result<Scaled> {
    let z1 = zeta1(z, beta);
    let thetas = [z, -z, z1, -z1];
    let b2 = beta * beta;
    let growth: Vec<f64> = thetas.iter().map(|t| (-t.im).max(0.0)).collect();
    let scale_on = match rescale {
        Rescale::Always => true,
        Rescale::Never => false,
        Rescale::Auto => growth.iter().any(|g| *g > 50.0),
    };
    let mut m = [[Complex64::new(0.0, 0.0); 4]; 4];
    let mut log_scale = 0.0;
    for (c, &th) in thetas.iter().enumerate() {
        let g = if scale_on { growth[c] } else { 0.0 };
        log_scale += g;
        let d1 = I * th;
        let d2 = -th * th;
        let d3 = -I * th * th * th;
        // e^{iθ} / e^{g}
        let e = (I * th - g).exp();
        let s = (-g).exp();
        m[0][c] = (d3 - b2 * d1) * s;
        m[1][c] = (d2 - beta * d1) * s;
        m[2][c] = (d3 - b2 * d1) * e;
        m[3][c] = (d2 + beta * d1) * e;
    }
    let mantissa = det4(m);
    if !(mantissa.re.is_finite() && mantissa.im.is_finite()) {
        return Err(Error::Range(format!(
            "determinant overflow at zeta = {z} without rescaling"
        )));
    }
    Ok(Scaled {
        mantissa,
        log_scale,
    })
}

fn det4(mut m: [[Complex64; 4]; 4]) -> Complex64 {
    let mut det = Complex64::new(1.0, 0.0);
    for col in 0..4 {
        let piv = (col..4)
            .max_by(|&a, &b| m[a][col].norm().total_cmp(&m[b][col].norm()))
            .unwrap_or(col);
        if m[piv][col].norm() == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        if piv != col {
            m.swap(piv, col);
            det = -det;
        }
        det *= m[col][col];
        for r in col + 1..4 {
            let f = m[r][col] / m[col][col];
            let pivot_row = m[col];
            for (x, v) in m[r].iter_mut().zip(pivot_row).skip(col) {
                *x -= f * v;
            }
        }
    }
    det
}

/// Vandermonde determinant `𝔙(ζ₀, −ζ₀, ζ₁, −ζ₁) = 4ζ₀ζ₁(ζ₁² − ζ₀²)²`.
pub fn vandermonde(z: Complex64, beta: f64) -> Complex64 {
    let z1 = zeta1(z, beta);
    let d = z1 * z1 - z * z;
    4.0 * z * z1 * d * d
}

/// Points where `𝔉 / (𝔙 (ζ⁴ + β²ζ²))` has a removable singularity.
pub fn removable_points(beta: f64) -> [Complex64; 5] {
    let s = beta / 2f64.sqrt();
    [
        Complex64::new(0.0, 0.0),
        Complex64::new(0.0, beta),
        Complex64::new(0.0, -beta),
        Complex64::new(0.0, s),
        Complex64::new(0.0, -s),
    ]
}

/// Radius below which the limit path is used for `𝔉₂`.
pub fn removable_radius(beta: f64) -> f64 {
    // Nearest distinct removable points are β(1 − 1/√2) apart.
    (0.03f64).min(0.2 * beta * (1.0 - 0.5f64.sqrt())).min(0.2 * beta / 2f64.sqrt())
}

/// `𝔉₂ = 𝔉 / (𝔙 · (ζ⁴ + β²ζ²))` evaluated directly; a singularity error
/// inside the removable radius.
pub fn charfn_f2_direct(z: Complex64, beta: f64) -> Result<Scaled> {
    let rho = removable_radius(beta);
    if removable_points(beta).iter().any(|p| (z - p).norm() < rho) {
        return Err(Error::Singularity(z));
    }
    f2_unchecked(z, beta)
}

fn f2_unchecked(z: Complex64, beta: f64) -> Result<Scaled> {
    let d = det_f(z, beta)?;
    let z2 = z * z;
    let denom = vandermonde(z, beta) * (z2 * z2 + beta * beta * z2);
    Ok(Scaled {
        mantissa: d.mantissa / denom,
        log_scale: d.log_scale,
    })
}

/// `𝔉₂` with removable singularities filled in by the mean value over a
/// circle of radius `3ρ` (exact for analytic functions up to `O(r^{32})`).
pub fn charfn_f2(z: Complex64, beta: f64) -> Result<Scaled> {
    let rho = removable_radius(beta);
    if !removable_points(beta).iter().any(|p| (z - p).norm() < rho) {
        return f2_unchecked(z, beta);
    }
    let r = 3.0 * rho;
    let mut acc = Complex64::new(0.0, 0.0);
    for j in 0..CIRCLE_POINTS {
        let phase = 2.0 * PI * (j as f64 + 0.5) / CIRCLE_POINTS as f64;
        let p = z + r * Complex64::from_polar(1.0, phase);
        // All points lie in the unscaled regime near the origin.
        let s = f2_unchecked(p, beta)?;
        acc += s.mantissa * s.log_scale.exp();
    }
    Ok(Scaled {
        mantissa: acc / CIRCLE_POINTS as f64,
        log_scale: 0.0,
    })
}

/// The four characteristic functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CharFamily {
    /// `F_β`: demeaned stationary OU.
    FOu,
    /// `F°_β`: demeaned OU started at zero.
    FOu0,
    /// `𝔉`: raw determinant for demeaned integrated OU.
    Fdet,
    /// `𝔉₂`: `𝔉` with spurious zeros divided out.
    Fdet2,
}

/// A characteristic function with its parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CharFunction {
    pub family: CharFamily,
    pub beta: f64,
}

impl CharFunction {
    /// `β ≥ 0` for `F_β`/`F°_β` (zero is the Wiener limit), `β > 0` otherwise.
    pub fn new(family: CharFamily, beta: f64) -> Result<Self> {
        let ok = match family {
            CharFamily::FOu | CharFamily::FOu0 => beta >= 0.0 && beta.is_finite(),
            CharFamily::Fdet | CharFamily::Fdet2 => beta > 0.0 && beta.is_finite(),
        };
        if !ok {
            return Err(Error::Parameter(format!("invalid beta {beta} for {family:?}")));
        }
        Ok(Self { family, beta })
    }

    /// Characteristic function of a demeaned process other than the bridge.
    pub fn for_spec(spec: &ProcessSpec) -> Result<Self> {
        if !spec.demeaned {
            return Err(Error::NotAvailable(format!(
                "no characteristic function for non-demeaned {}",
                spec.label()
            )));
        }
        match spec.family {
            // Wiener limit of F_β: 2 sin ζ / ζ, the Neumann problem.
            Family::Wiener | Family::Xalpha { .. } => Self::new(CharFamily::FOu, 0.0),
            Family::OU { beta } => Self::new(CharFamily::FOu, beta),
            Family::OUZero { beta } => Self::new(CharFamily::FOu0, beta),
            Family::IntegratedOU { beta } => Self::new(CharFamily::Fdet2, beta),
            _ => Err(Error::NotAvailable(format!(
                "no characteristic function for {}",
                spec.label()
            ))),
        }
    }

    /// Full complex value.
    pub fn eval(&self, z: Complex64) -> Result<Complex64> {
        match self.family {
            CharFamily::FOu => Ok(charfn_ou(z, self.beta)),
            CharFamily::FOu0 => Ok(charfn_ou0(z, self.beta)),
            CharFamily::Fdet => det_f(z, self.beta)?.value(),
            CharFamily::Fdet2 => charfn_f2(z, self.beta)?.value(),
        }
    }

    /// Real function on `(0, ∞)` with the same zeros and signs, rescaled to
    /// stay `O(1)` for large arguments.
    pub fn real_profile(&self, x: f64) -> Result<f64> {
        let z = Complex64::new(x, 0.0);
        Ok(match self.family {
            CharFamily::FOu => charfn_ou(z, self.beta).re,
            CharFamily::FOu0 => charfn_ou0(z, self.beta).re,
            // 𝔉 is purely imaginary on the real axis.
            CharFamily::Fdet => det_f_with(z, self.beta, Rescale::Always)?.mantissa.im,
            CharFamily::Fdet2 => {
                let rho = removable_radius(self.beta);
                if x < rho {
                    charfn_f2(z, self.beta)?.mantissa.re
                } else {
                    let d = det_f_with(z, self.beta, Rescale::Always)?;
                    let z2 = z * z;
                    let denom = vandermonde(z, self.beta) * (z2 * z2 + self.beta * self.beta * z2);
                    (d.mantissa / denom).re
                }
            }
        })
    }

    /// Asymptotic location of the `k`-th positive real root.
    pub fn root_spacing(&self, k: usize) -> f64 {
        match self.family {
            CharFamily::FOu | CharFamily::FOu0 => PI * k as f64,
            CharFamily::Fdet | CharFamily::Fdet2 => PI * (k as f64 - 0.5),
        }
    }

    pub fn removable_singularity_radius(&self) -> f64 {
        match self.family {
            CharFamily::FOu | CharFamily::FOu0 => SERIES_RADIUS,
            CharFamily::Fdet | CharFamily::Fdet2 => removable_radius(self.beta),
        }
    }

    /// Map from a root `ζ` to the KL eigenvalue `μ`.
    pub fn mu_of_root(&self, zeta: f64) -> f64 {
        let b2 = self.beta * self.beta;
        match self.family {
            CharFamily::FOu | CharFamily::FOu0 => 1.0 / (zeta * zeta + b2),
            CharFamily::Fdet | CharFamily::Fdet2 => {
                let z2 = zeta * zeta;
                1.0 / (z2 * z2 + b2 * z2)
            }
        }
    }
}
