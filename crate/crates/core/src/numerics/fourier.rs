//! One-sided Fourier integrals `∫₀^∞ f(τ) e^{−iωτ} dτ` of decaying functions.

use num_complex::Complex64;

use super::quadrature::{Domain, Integrator};
use super::NumericsError;

/// `∫₀^∞ f(τ) e^{−iωτ} dτ` to absolute/relative tolerance `tol`.
pub fn fourier_integral<F>(f: F, omega: f64, tol: f64) -> Result<Complex64, NumericsError>
where
    F: Fn(f64) -> Complex64,
{
    check_omega(omega)?;
    let integrand = |tau: f64| f(tau) * Complex64::new(0.0, -omega * tau).exp();
    Ok(Integrator::new(tol, tol).integrate(integrand, Domain::SemiInfinite(0.0))?.value)
}

/// Same as [`fourier_integral`] but over `[0, upper]`, for integrands that
/// are negligible beyond `upper`.
pub fn fourier_integral_truncated<F>(f: F, omega: f64, upper: f64, tol: f64) -> Result<Complex64, NumericsError>
where
    F: Fn(f64) -> Complex64,
{
    check_omega(omega)?;
    if !(upper > 0.0 && upper.is_finite()) {
        return Err(NumericsError::InvalidDomain(format!("[0, {upper}]")));
    }
    let integrand = |tau: f64| f(tau) * Complex64::new(0.0, -omega * tau).exp();
    // Split at oscillation periods so the first bisection levels are not wasted.
    let periods = (omega.abs() * upper / std::f64::consts::TAU).ceil().clamp(1.0, 256.0) as usize;
    let integrator = Integrator::new(tol, tol / periods as f64);
    let step = upper / periods as f64;
    let mut total = Complex64::new(0.0, 0.0);
    for k in 0..periods {
        let a = k as f64 * step;
        let b = if k + 1 == periods { upper } else { a + step };
        total += integrator.integrate(integrand, Domain::Finite(a, b))?.value;
    }
    Ok(total)
}

fn check_omega(omega: f64) -> Result<(), NumericsError> {
    if omega.is_finite() {
        Ok(())
    } else {
        Err(NumericsError::InvalidDomain(format!("omega = {omega}")))
    }
}
