//! Small-ball probabilities in `L2` for demeaned Green Gaussian processes.
//!
//! The crate builds covariance kernels of a small catalog of processes,
//! computes their Karhunen–Loève spectra twice (Nyström discretization and
//! roots of transcendental characteristic functions), evaluates distortion
//! constants, and computes `P{‖X‖ ≤ ε}` exactly, by Monte Carlo, and through
//! the leading-order asymptotic formulas.
//!
//! ```
//! use smallball::process::{kernel, Family, ProcessSpec};
//! use smallball::spectral::nystrom_spectrum;
//!
//! let spec = ProcessSpec::new(Family::Wiener, true).unwrap();
//! let res = nystrom_spectrum(&kernel(&spec).unwrap(), 400, 3).unwrap();
//! let pi2 = std::f64::consts::PI.powi(2);
//! assert!((res.spectrum.mu[0] * pi2 - 1.0).abs() < 1e-7);
//! assert_eq!(res.spectrum.zero_modes, 1);
//! ```

pub mod charfn;
pub mod distortion;
pub mod error;
pub mod finite_diff;
pub mod process;
pub mod quadrature;
pub mod roots;
pub mod smallball;
pub mod spectral;
pub mod special;

pub use error::{Error, Result};
pub use process::{Family, Kernel, ProcessSpec};
pub use spectral::{Provenance, Spectrum};

/// Formats with 17 significant digits.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/intro.md")]
    struct Intro;
    #[doc = include_str!("../../../book/src/kernels.md")]
    struct Kernels;
    #[doc = include_str!("../../../book/src/spectra.md")]
    struct Spectra;
    #[doc = include_str!("../../../book/src/characteristic.md")]
    struct Characteristic;
    #[doc = include_str!("../../../book/src/probabilities.md")]
    struct Probabilities;
    #[doc = include_str!("../../../book/src/cli.md")]
    struct Cli;
}
