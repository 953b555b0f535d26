//! Shared numerical kernels: adaptive quadrature, one-sided Fourier
//! integrals and bounded nonlinear least squares.

mod fourier;
mod least_squares;
mod quadrature;

use num_complex::Complex64;
use thiserror::Error;

pub use fourier::{fourier_integral, fourier_integral_truncated};
pub use least_squares::{least_squares_fit, minimize, DataPoint, FitOptions, FitResult, Termination};
pub use quadrature::{integrate, Domain, Integrator, QuadValue, QuadratureResult, DEFAULT_MAX_SUBDIVISIONS};

/// Failure raised by a user model inside [`minimize`].
pub type ModelFailure = Box<dyn std::error::Error + Send + Sync>;

#[derive(Debug, Error)]
pub enum NumericsError {
    #[error("quadrature did not converge after {evaluations} evaluations (estimate {estimate}, error {abs_error_estimate:e})")]
    NotConverged {
        estimate: Complex64,
        abs_error_estimate: f64,
        evaluations: usize,
    },
    #[error("integrand is not finite at x = {abscissa}")]
    NonFiniteIntegrand { abscissa: f64 },
    #[error("tolerances must be positive (rel {rel_tol}, abs {abs_tol})")]
    InvalidTolerance { rel_tol: f64, abs_tol: f64 },
    #[error("invalid integration domain {0}")]
    InvalidDomain(String),
    #[error("jacobian column {parameter} vanishes at {params:?}: parameter has no influence on the residuals")]
    SingularJacobian { parameter: usize, params: Vec<f64> },
    #[error("invalid fit input: {0}")]
    InvalidInput(String),
    #[error("model evaluation failed: {source}")]
    Model { source: ModelFailure },
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn quadrature_is_linear(a in -3.0f64..3.0, b in -3.0f64..3.0, w in 0.2f64..4.0) {
            let f = move |x: f64| (-x * x).exp() * (w * x).cos();
            let g = move |x: f64| x * x * (-x).exp();
            let tol = 1e-12;
            let fi = integrate(f, Domain::SemiInfinite(0.0), tol, tol).unwrap().value;
            let gi = integrate(g, Domain::SemiInfinite(0.0), tol, tol).unwrap().value;
            let hi = integrate(move |x| a * f(x) + b * g(x), Domain::SemiInfinite(0.0), tol, tol).unwrap().value;
            prop_assert!((hi - (a * fi + b * gi)).abs() < 1e-10 * (1.0 + a.abs() + b.abs()));
        }

        #[test]
        fn even_functions_two_sided(c in 0.3f64..3.0, w in 0.0f64..5.0) {
            let f = move |x: f64| (-c * x * x).exp() * (w * x).cos();
            let cut = (40.0 / c).sqrt();
            let two = integrate(f, Domain::Finite(-cut, cut), 1e-12, 1e-14).unwrap().value;
            let half = integrate(f, Domain::SemiInfinite(0.0), 1e-12, 1e-14).unwrap().value;
            let exact = (std::f64::consts::PI / c).sqrt() * (-w * w / (4.0 * c)).exp();
            prop_assert!((two - 2.0 * half).abs() < 1e-10);
            prop_assert!((two - exact).abs() < 1e-10);
        }
    }
}
