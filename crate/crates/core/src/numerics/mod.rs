//! Special functions, quadrature, transforms and random streams.

pub mod dft;
pub mod quadrature;
pub mod rng;
pub mod special;

pub use dft::{dft, DftPlan};
pub use num_complex::Complex64;
pub use quadrature::{integrate, integrate_pieces, integrate_to_infinity, Estimate, Tolerance};
pub use rng::{complex_gaussian, RngStream};
pub use special::{
    bessel_i, chi2_pdf, gamma_fn, gaussian_q, ln_bessel_i, ln_chi2_pdf, ln_gamma,
    ln_noncentral_chi2_pdf, noncentral_chi2_pdf, sin_power_integral,
};

/// Complex baseband sample.
pub type ComplexSample = Complex64;
