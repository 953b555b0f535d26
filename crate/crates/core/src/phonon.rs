//! Acoustic-phonon environment of the dot: spectral density, thermal
//! occupation, the polaron correlation function φ(τ), Franck–Condon factor,
//! virtual-transition pure-dephasing rate, sideband spectrum and the
//! cavity-filtered sideband fraction.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::emitter::CavityFilter;
use crate::error::{ensure, Result};
use crate::numerics::{fourier_integral_truncated, Domain, Integrator};

/// k_B/ħ in ps⁻¹ K⁻¹.
pub const K_B_OVER_HBAR: f64 = 0.1309;
/// 1 meV expressed as an angular frequency, in ps⁻¹.
pub const MEV_TO_PS_INV: f64 = 1.519;

/// Spectral integrals stop at `CUTOFF_MULTIPLE · ν_c`, where exp(−ν²/ν_c²)
/// has fallen below 1e-15 of its peak.
pub const CUTOFF_MULTIPLE: f64 = 6.0;

const REL_TOL: f64 = 1e-11;

/// Effective electron–phonon parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhononParams {
    /// Coupling strength α, ps².
    pub alpha: f64,
    /// Cut-off frequency ν_c, ps⁻¹.
    pub nu_c: f64,
    /// Virtual-process strength μ, ps².
    pub mu: f64,
}

impl PhononParams {
    pub fn new(alpha: f64, nu_c: f64, mu: f64) -> Result<Self> {
        let p = Self { alpha, nu_c, mu };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        ensure(self.alpha >= 0.0 && self.alpha.is_finite(), "alpha", self.alpha, "alpha >= 0")?;
        ensure(self.nu_c > 0.0 && self.nu_c.is_finite(), "nu_c", self.nu_c, "nu_c > 0")?;
        ensure(self.mu >= 0.0 && self.mu.is_finite(), "mu", self.mu, "mu >= 0")
    }

    fn cutoff(&self) -> f64 {
        CUTOFF_MULTIPLE * self.nu_c
    }
}

/// Bath temperature.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Temperature(f64);

impl Temperature {
    pub fn from_kelvin(kelvin: f64) -> Result<Self> {
        ensure(kelvin > 0.0 && kelvin.is_finite(), "temperature", kelvin, "T > 0 K")?;
        Ok(Self(kelvin))
    }

    pub fn kelvin(&self) -> f64 {
        self.0
    }

    /// β = ħ/(k_B T), in ps.
    pub fn beta(&self) -> f64 {
        1.0 / (K_B_OVER_HBAR * self.0)
    }
}

impl TryFrom<f64> for Temperature {
    type Error = crate::Error;
    fn try_from(kelvin: f64) -> Result<Self> {
        Self::from_kelvin(kelvin)
    }
}

impl From<Temperature> for f64 {
    fn from(t: Temperature) -> f64 {
        t.0
    }
}

/// Bulk material constants for deformation-potential coupling.
///
/// Unit sheet: deformation potentials in eV, mass density in kg m⁻³, speed
/// of sound in m s⁻¹, s–p level splittings in meV.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaterialParams {
    pub d_e_ev: f64,
    pub d_h_ev: f64,
    pub rho_kg_m3: f64,
    pub c_s_m_s: f64,
    pub delta_e_mev: f64,
    pub delta_h_mev: f64,
}

/// Coupling constants derived from material data. `mu_ps2` is `None` when
/// the deformation potentials cancel (it divides by (D_e − D_h)⁴).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CouplingConstants {
    pub alpha_ps2: f64,
    pub mu_ps2: Option<f64>,
}

/// Which even/odd form of the sideband weight enters the filtered fraction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SidebandWeight {
    /// ω·coth(βω/2)·e^{−ω²/ν_c²}, symmetric in ω.
    #[default]
    Symmetric,
    /// ω·(coth(βω/2) − 1)·e^{−ω²/ν_c²}: the first-order sideband with its
    /// emission/absorption asymmetry.
    DetailedBalance,
}

/// How the sideband spectrum is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectrumMode {
    /// Fourier transform of G(τ) − 1.
    #[default]
    Exact,
    /// First order in α, real part only (imaginary part reported as zero).
    WeakCoupling,
}

/// n(ν) = 1/(e^{βν} − 1).
pub fn thermal_occupation(nu: f64, temperature: Temperature) -> Result<f64> {
    ensure(nu > 0.0 && nu.is_finite(), "nu", nu, "nu > 0")?;
    Ok(1.0 / (temperature.beta() * nu).exp_m1())
}

/// J(ν) = α ν³ e^{−ν²/ν_c²}.
pub fn spectral_density(nu: f64, params: &PhononParams) -> Result<f64> {
    ensure(nu >= 0.0 && nu.is_finite(), "nu", nu, "nu >= 0")?;
    Ok(params.alpha * nu.powi(3) * (-(nu / params.nu_c).powi(2)).exp())
}

/// ω·coth(βω/2), continuous through ω = 0 where it tends to 2/β.
pub fn omega_coth(omega: f64, beta: f64) -> f64 {
    let y = beta * omega;
    if y.abs() < 1e-4 {
        let y2 = y * y;
        (2.0 + y2 / 6.0 - y2 * y2 / 360.0) / beta
    } else {
        omega / (0.5 * y).tanh()
    }
}

/// ω·(coth(βω/2) − 1) = 2ω/(e^{βω} − 1), continuous through ω = 0.
pub fn omega_coth_minus_one(omega: f64, beta: f64) -> f64 {
    let y = beta * omega;
    if y == 0.0 {
        2.0 / beta
    } else {
        2.0 * omega / y.exp_m1()
    }
}

/// φ(τ) = α ∫₀^∞ ν e^{−ν²/ν_c²} [coth(βν/2) cos ντ − i sin ντ] dν.
pub fn phi(tau: f64, params: &PhononParams, temperature: Temperature) -> Result<Complex64> {
    ensure(tau >= 0.0 && tau.is_finite(), "tau", tau, "tau >= 0")?;
    params.validate()?;
    if params.alpha == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let beta = temperature.beta();
    let nu_c = params.nu_c;
    let integrand = |nu: f64| {
        let env = (-(nu / nu_c).powi(2)).exp();
        let (s, c) = (nu * tau).sin_cos();
        Complex64::new(omega_coth(nu, beta) * c, -nu * s) * env
    };
    let upper = params.cutoff();
    let abs_tol = 1e-14 * nu_c * nu_c * (1.0 + 2.0 / (beta * nu_c));
    let pieces = ((upper * tau) / (2.0 * PI)).ceil().clamp(1.0, 512.0) as usize;
    let integrator = Integrator::new(REL_TOL, abs_tol / pieces as f64);
    let width = upper / pieces as f64;
    let mut total = Complex64::new(0.0, 0.0);
    for k in 0..pieces {
        let a = k as f64 * width;
        let b = if k + 1 == pieces { upper } else { a + width };
        total += integrator.integrate(integrand, Domain::Finite(a, b))?.value;
    }
    Ok(total * params.alpha)
}

/// Re φ(0) = α ∫ ν coth(βν/2) e^{−ν²/ν_c²} dν.
fn phi_zero(params: &PhononParams, temperature: Temperature) -> Result<f64> {
    Ok(phi(0.0, params, temperature)?.re)
}

/// B = e^{−φ(0)/2}.
pub fn franck_condon(params: &PhononParams, temperature: Temperature) -> Result<f64> {
    Ok((-0.5 * phi_zero(params, temperature)?).exp())
}

/// G(τ) = e^{φ(τ)}; the full correlation is B²G(τ).
pub fn phonon_correlation(tau: f64, params: &PhononParams, temperature: Temperature) -> Result<Complex64> {
    Ok(phi(tau, params, temperature)?.exp())
}

/// γ_pd = (α²μ/ν_c⁴) ∫₀^∞ ν¹⁰ e^{−2ν²/ν_c²} n(ν)(n(ν)+1) dν, in ps⁻¹.
pub fn dephasing_rate(params: &PhononParams, temperature: Temperature) -> Result<f64> {
    params.validate()?;
    if params.alpha == 0.0 || params.mu == 0.0 {
        return Ok(0.0);
    }
    let unit = dephasing_integral(params.nu_c, temperature)?;
    Ok(params.alpha * params.alpha * params.mu * unit)
}

/// γ_pd at α = μ = 1; γ_pd scales as α²μ times this.
pub fn dephasing_integral(nu_c: f64, temperature: Temperature) -> Result<f64> {
    ensure(nu_c > 0.0 && nu_c.is_finite(), "nu_c", nu_c, "nu_c > 0")?;
    let beta = temperature.beta();
    let integrand = |nu: f64| {
        if nu == 0.0 {
            return 0.0;
        }
        let s = (0.5 * beta * nu).sinh();
        // n(n+1) = 1/(4 sinh²(βν/2)); sinh overflow gives 0, not NaN.
        nu.powi(10) * (-2.0 * (nu / nu_c).powi(2)).exp() / (4.0 * s * s)
    };
    let scale = nu_c.powi(11);
    let value = Integrator::new(REL_TOL, 1e-300_f64.max(1e-30 * scale))
        .integrate(integrand, Domain::Finite(0.0, CUTOFF_MULTIPLE * nu_c))?
        .value;
    Ok(value / nu_c.powi(4))
}

/// φ(0) at α = 1; φ(0) scales linearly in α.
pub fn phi_zero_per_alpha(nu_c: f64, temperature: Temperature) -> Result<f64> {
    phi_zero(&PhononParams::new(1.0, nu_c, 0.0)?, temperature)
}

/// Time after which |G(τ) − 1| is negligible: the Gaussian cut-off decay
/// and the thermal decay e^{−2πτ/β} both below ~1e-13.
pub fn correlation_horizon(params: &PhononParams, temperature: Temperature) -> f64 {
    let gaussian = 12.0 / params.nu_c;
    let thermal = 5.0 * temperature.beta();
    gaussian.max(thermal).min(400.0)
}

/// S_PH(ω) = ∫₀^∞ (G(τ) − 1) e^{−iωτ} dτ.
pub fn sideband_spectrum(
    omega: f64,
    params: &PhononParams,
    temperature: Temperature,
    mode: SpectrumMode,
) -> Result<Complex64> {
    ensure(omega.is_finite(), "omega", omega, "finite")?;
    params.validate()?;
    if params.alpha == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    match mode {
        SpectrumMode::WeakCoupling => Ok(Complex64::new(weak_sideband_re(omega, params, temperature), 0.0)),
        SpectrumMode::Exact => {
            let horizon = correlation_horizon(params, temperature);
            // Quadrature failures inside the closure surface as NaN and are
            // reported by the outer integrator with their abscissa.
            let g_minus_one = |tau: f64| match phi(tau, params, temperature) {
                Ok(v) => v.exp_m1(),
                Err(_) => Complex64::new(f64::NAN, f64::NAN),
            };
            Ok(fourier_integral_truncated(g_minus_one, omega, horizon, 1e-10)?)
        }
    }
}

/// (π/2)·α·ω·e^{−ω²/ν_c²}·(coth(βω/2) − 1).
fn weak_sideband_re(omega: f64, params: &PhononParams, temperature: Temperature) -> f64 {
    0.5 * PI * params.alpha * omega_coth_minus_one(omega, temperature.beta()) * (-(omega / params.nu_c).powi(2)).exp()
}

trait ExpM1 {
    fn exp_m1(self) -> Self;
}

impl ExpM1 for Complex64 {
    /// e^z − 1 without cancellation for small |z|.
    fn exp_m1(self) -> Self {
        if self.norm() < 1e-5 {
            self * (Complex64::new(1.0, 0.0) + self * (0.5 + self / 6.0))
        } else {
            self.exp() - 1.0
        }
    }
}

/// Tabulated G(τ) − 1 on a uniform grid, for fast evaluation of the exact
/// sideband spectrum at many frequencies (composite Simpson rule).
#[derive(Debug, Clone)]
pub struct SidebandTable {
    step: f64,
    values: Vec<Complex64>,
}

impl SidebandTable {
    pub fn new(params: &PhononParams, temperature: Temperature) -> Result<Self> {
        params.validate()?;
        let horizon = correlation_horizon(params, temperature);
        let target = 0.04 / params.nu_c;
        let mut panels = (horizon / target).ceil() as usize;
        panels += panels % 2;
        let step = horizon / panels as f64;
        let values = (0..=panels)
            .into_par_iter()
            .map(|k| phi(k as f64 * step, params, temperature).map(ExpM1::exp_m1))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { step, values })
    }

    /// Exact-mode S_PH(ω).
    pub fn spectrum(&self, omega: f64) -> Complex64 {
        let last = self.values.len() - 1;
        let rot = Complex64::new(0.0, -omega * self.step).exp();
        let mut phase = Complex64::new(1.0, 0.0);
        let mut sum = Complex64::new(0.0, 0.0);
        for (k, v) in self.values.iter().enumerate() {
            let w = if k == 0 || k == last {
                1.0
            } else if k % 2 == 1 {
                4.0
            } else {
                2.0
            };
            sum += *v * phase * w;
            phase *= rot;
            if k % 64 == 63 {
                // Re-anchor the running phase against accumulated rounding.
                phase = Complex64::new(0.0, -omega * self.step * (k + 1) as f64).exp();
            }
        }
        sum * (self.step / 3.0)
    }

    /// G(0) − 1.
    pub fn at_origin(&self) -> Complex64 {
        self.values[0]
    }
}

/// Fraction of the phonon sideband transmitted by the filter:
/// F = ∫|h(ω)|² w(ω) dω / ∫ w(ω) dω.
pub fn filtered_fraction(
    params: &PhononParams,
    temperature: Temperature,
    filter: &CavityFilter,
    weight: SidebandWeight,
) -> Result<f64> {
    params.validate()?;
    filter.validate()?;
    if filter.is_flat() {
        return Ok(1.0);
    }
    let beta = temperature.beta();
    let nu_c = params.nu_c;
    let w = move |omega: f64| {
        let env = (-(omega / nu_c).powi(2)).exp();
        match weight {
            SidebandWeight::Symmetric => omega_coth(omega, beta) * env,
            SidebandWeight::DetailedBalance => omega_coth_minus_one(omega, beta) * env,
        }
    };
    let cut = params.cutoff();
    let mut breaks = vec![-cut, 0.0, cut];
    for x in [
        filter.delta,
        filter.delta - filter.kappa,
        filter.delta + filter.kappa,
        filter.delta - 0.5 * filter.kappa,
        filter.delta + 0.5 * filter.kappa,
    ] {
        if x > -cut && x < cut {
            breaks.push(x);
        }
    }
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();

    let integrator = Integrator::new(REL_TOL, 1e-300);
    let mut num = 0.0;
    let mut den = 0.0;
    for pair in breaks.windows(2) {
        let dom = Domain::Finite(pair[0], pair[1]);
        num += integrator.integrate(|x| filter.transmission(x) * w(x), dom)?.value;
        den += integrator.integrate(w, dom)?.value;
    }
    Ok((num / den).clamp(0.0, 1.0))
}

/// Map deformation-potential material constants to (α, μ).
pub fn phonon_params_from_material(m: &MaterialParams) -> Result<CouplingConstants> {
    ensure(m.rho_kg_m3 > 0.0, "rho_mass", m.rho_kg_m3, "rho > 0")?;
    ensure(m.c_s_m_s > 0.0, "c_s", m.c_s_m_s, "c_s > 0")?;
    ensure(m.delta_e_mev > 0.0, "delta_e", m.delta_e_mev, "Delta_e > 0")?;
    ensure(m.delta_h_mev > 0.0, "delta_h", m.delta_h_mev, "Delta_h > 0")?;

    const EV: f64 = 1.602_176_634e-19;
    const HBAR: f64 = 1.054_571_817e-34;
    const PS2_PER_S2: f64 = 1e24;

    let d_e = m.d_e_ev * EV;
    let d_h = m.d_h_ev * EV;
    let dd = d_e - d_h;
    // ħ restored: α = (D_e − D_h)² / (4π² ϱ ħ c_s⁵), in s².
    let alpha_s2 = dd * dd / (4.0 * PI * PI * m.rho_kg_m3 * HBAR * m.c_s_m_s.powi(5));
    let mu_ps2 = if dd == 0.0 {
        None
    } else {
        let delta_e = m.delta_e_mev * 1e-3 * EV;
        let delta_h = m.delta_h_mev * 1e-3 * EV;
        let s = d_e * d_e / delta_e + d_h * d_h / delta_h;
        // μ = π ħ² (D_e²/Δ_e + D_h²/Δ_h)² / (D_e − D_h)⁴, in s².
        Some(PI * HBAR * HBAR * s * s / dd.powi(4) * PS2_PER_S2)
    };
    Ok(CouplingConstants {
        alpha_ps2: alpha_s2 * PS2_PER_S2,
        mu_ps2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn qd1() -> PhononParams {
        PhononParams::new(0.0082, 7.9, 4.4e-4).unwrap()
    }

    fn kelvin(t: f64) -> Temperature {
        Temperature::from_kelvin(t).unwrap()
    }

    fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
        let h = (b - a) / n as f64;
        let mut s = f(a) + f(b);
        for i in 1..n {
            s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(a + i as f64 * h);
        }
        s * h / 3.0
    }

    #[test]
    fn occupation_is_one_at_ln2() {
        let t = kelvin(10.0);
        let nu = 2f64.ln() / t.beta();
        assert!((thermal_occupation(nu, t).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn occupation_frozen_bath() {
        let t = kelvin(10.0);
        let nu = 50.0 / t.beta();
        assert!(thermal_occupation(nu, t).unwrap() < 2e-22);
    }

    #[test]
    fn occupation_matches_series_oracle() {
        // β = 1/(0.1309·10) = 0.763942... ps; n = Σ_{k≥1} e^{−kβν} (geometric series).
        let t = kelvin(10.0);
        let x = t.beta();
        let mut oracle = 0.0;
        let mut term = (-x).exp();
        let q = term;
        for _ in 0..200 {
            oracle += term;
            term *= q;
        }
        let n = thermal_occupation(1.0, t).unwrap();
        assert!((n - oracle).abs() < 1e-14 * oracle, "{n} vs {oracle}");
        assert!((t.beta() - 0.7639).abs() < 1e-4);
    }

    #[test]
    fn occupation_rejects_non_positive_frequency() {
        assert!(thermal_occupation(0.0, kelvin(4.0)).is_err());
        assert!(thermal_occupation(-1.0, kelvin(4.0)).is_err());
    }

    #[test]
    fn occupation_monotonic() {
        let mut prev = 0.0;
        for t in [1.0, 2.0, 5.0, 10.0, 30.0] {
            let n = thermal_occupation(2.0, kelvin(t)).unwrap();
            assert!(n > prev);
            prev = n;
        }
        assert!(thermal_occupation(1.0, kelvin(5.0)).unwrap() > thermal_occupation(2.0, kelvin(5.0)).unwrap());
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(PhononParams::new(-1e-3, 7.9, 0.0).is_err());
        assert!(PhononParams::new(1e-3, 0.0, 0.0).is_err());
        assert!(PhononParams::new(1e-3, 7.9, -1.0).is_err());
        assert!(Temperature::from_kelvin(0.0).is_err());
    }

    #[test]
    fn spectral_density_values() {
        let p = qd1();
        assert_eq!(spectral_density(0.0, &p).unwrap(), 0.0);
        let at_cut = spectral_density(p.nu_c, &p).unwrap();
        assert!((at_cut - p.alpha * p.nu_c.powi(3) * (-1.0f64).exp()).abs() < 1e-15);
        assert!(spectral_density(-1.0, &p).is_err());
    }

    #[test]
    fn spectral_density_peak_by_grid_search() {
        let p = qd1();
        let (mut best, mut best_nu) = (0.0, 0.0);
        for i in 0..=200_000 {
            let nu = 3.0 * p.nu_c * i as f64 / 200_000.0;
            let j = spectral_density(nu, &p).unwrap();
            if j > best {
                best = j;
                best_nu = nu;
            }
        }
        assert!((best_nu - 1.5f64.sqrt() * p.nu_c).abs() < 2e-4 * p.nu_c);
    }

    #[test]
    fn omega_coth_series_is_continuous() {
        let beta = 1.9f64;
        for &w in &[1e-9, 1e-6, 5.2e-5, 5.3e-5, 1e-3] {
            let direct = w / (0.5 * beta * w).tanh();
            assert!((omega_coth(w, beta) - direct).abs() < 1e-9 * direct);
            assert!((omega_coth(-w, beta) - direct).abs() < 1e-9 * direct);
        }
        assert!((omega_coth(0.0, beta) - 2.0 / beta).abs() < 1e-15);
        assert!((omega_coth_minus_one(0.0, beta) - 2.0 / beta).abs() < 1e-15);
        assert!((omega_coth_minus_one(3.0, beta) - (omega_coth(3.0, beta) - 3.0)).abs() < 1e-12);
    }

    #[test]
    fn phi_at_origin_zero_temperature() {
        let p = qd1();
        let v = phi(0.0, &p, kelvin(1e-3)).unwrap();
        let oracle = p.alpha * p.nu_c * p.nu_c / 2.0;
        assert!((v.re - oracle).abs() < 1e-12 * oracle, "{v} vs {oracle}");
        assert_eq!(v.im, 0.0);
    }

    #[test]
    fn phi_imaginary_part_is_zero_at_origin() {
        for t in [2.0, 4.0, 20.0] {
            assert_eq!(phi(0.0, &qd1(), kelvin(t)).unwrap().im, 0.0);
        }
    }

    #[test]
    fn phi_imaginary_part_matches_gaussian_moment() {
        // ∫₀^∞ ν e^{−ν²/c²} sin(ντ) dν = (√π c³ τ / 4) e^{−c²τ²/4}.
        let p = qd1();
        for tau in [0.05, 0.2, 0.5] {
            let v = phi(tau, &p, kelvin(4.0)).unwrap();
            let c = p.nu_c;
            let oracle = -p.alpha * PI.sqrt() * c.powi(3) * tau / 4.0 * (-(c * tau).powi(2) / 4.0).exp();
            assert!((v.im - oracle).abs() < 1e-10, "{} vs {}", v.im, oracle);
        }
    }

    #[test]
    fn phi_decays_vs_simpson_oracle() {
        let p = qd1();
        let t = kelvin(4.0);
        let beta = t.beta();
        let tau = 10.0 / p.nu_c;
        let re = p.alpha
            * simpson(
                |nu| {
                    let w = if nu == 0.0 { 2.0 / beta } else { nu / (0.5 * beta * nu).tanh() };
                    w * (-(nu / p.nu_c).powi(2)).exp() * (nu * tau).cos()
                },
                0.0,
                6.0 * p.nu_c,
                1_000_000,
            );
        let im = -p.alpha
            * simpson(
                |nu| nu * (-(nu / p.nu_c).powi(2)).exp() * (nu * tau).sin(),
                0.0,
                6.0 * p.nu_c,
                1_000_000,
            );
        let v = phi(tau, &p, t).unwrap();
        let v0 = phi(0.0, &p, t).unwrap();
        assert!((v.re - re).abs() < 1e-9 && (v.im - im).abs() < 1e-9, "{v} vs {re} {im}");
        assert!(v.norm() < 0.02 * v0.norm());
    }

    #[test]
    fn franck_condon_limits() {
        let free = PhononParams::new(0.0, 7.9, 0.0).unwrap();
        assert_eq!(franck_condon(&free, kelvin(4.0)).unwrap(), 1.0);
        let p = qd1();
        let b = franck_condon(&p, kelvin(1e-3)).unwrap();
        let oracle = (-p.alpha * p.nu_c * p.nu_c / 2.0).exp();
        assert!((b * b - oracle).abs() < 1e-10);
        assert!((oracle - 0.774).abs() < 1e-3);
        assert!(franck_condon(&p, kelvin(22.0)).unwrap() < franck_condon(&p, kelvin(4.0)).unwrap());
    }

    #[test]
    fn correlation_normalisation_and_decay() {
        let p = qd1();
        let t = kelvin(4.0);
        let b = franck_condon(&p, t).unwrap();
        let g0 = phonon_correlation(0.0, &p, t).unwrap();
        assert!((b * b * g0 - 1.0).norm() < 1e-14);
        let far = phonon_correlation(30.0, &p, t).unwrap();
        assert!((far - 1.0).norm() < 1e-9);
    }

    #[test]
    fn correlation_vs_composed_simpson_oracle() {
        let p = qd1();
        let t = kelvin(4.0);
        let beta = t.beta();
        let tau = 0.5;
        let re = p.alpha
            * simpson(
                |nu| {
                    let w = if nu == 0.0 { 2.0 / beta } else { nu / (0.5 * beta * nu).tanh() };
                    w * (-(nu / p.nu_c).powi(2)).exp() * (nu * tau).cos()
                },
                0.0,
                6.0 * p.nu_c,
                200_000,
            );
        let im = -p.alpha
            * simpson(|nu| nu * (-(nu / p.nu_c).powi(2)).exp() * (nu * tau).sin(), 0.0, 6.0 * p.nu_c, 200_000);
        let oracle = Complex64::new(re, im).exp();
        let g = phonon_correlation(tau, &p, t).unwrap();
        assert!((g - oracle).norm() < 1e-10, "{g} vs {oracle}");
    }

    #[test]
    fn dephasing_limits() {
        let p = qd1();
        assert!(dephasing_rate(&p, kelvin(0.05)).unwrap() < 1e-30);
        let no_mu = PhononParams::new(0.0082, 7.9, 0.0).unwrap();
        assert_eq!(dephasing_rate(&no_mu, kelvin(20.0)).unwrap(), 0.0);
        let no_alpha = PhononParams::new(0.0, 7.9, 4.4e-4).unwrap();
        assert_eq!(dephasing_rate(&no_alpha, kelvin(20.0)).unwrap(), 0.0);
    }

    #[test]
    fn dephasing_vs_simpson_oracle() {
        let p = qd1();
        let t = kelvin(20.0);
        let beta = t.beta();
        let f = |nu: f64| {
            if nu == 0.0 {
                return 0.0;
            }
            let n = 1.0 / (beta * nu).exp_m1();
            nu.powi(10) * (-2.0 * (nu / p.nu_c).powi(2)).exp() * n * (n + 1.0)
        };
        let oracle = p.alpha * p.alpha * p.mu / p.nu_c.powi(4) * simpson(f, 0.0, 6.0 * p.nu_c, 1_000_000);
        let v = dephasing_rate(&p, t).unwrap();
        assert!((v / oracle - 1.0).abs() < 1e-6, "{v} vs {oracle}");
    }

    #[test]
    fn dephasing_monotone_on_log_grid() {
        let p = qd1();
        let mut prev = 0.0;
        for i in 0..=24 {
            let t = 50f64.powf(i as f64 / 24.0);
            let g = dephasing_rate(&p, kelvin(t)).unwrap();
            assert!(g >= prev, "T = {t}");
            prev = g;
        }
    }

    #[test]
    fn weak_sideband_vanishes_at_zero_temperature_for_absorption() {
        let p = qd1();
        let v = sideband_spectrum(5.0, &p, kelvin(0.01), SpectrumMode::WeakCoupling).unwrap();
        assert!(v.re.abs() < 1e-100);
        let e = sideband_spectrum(-5.0, &p, kelvin(0.01), SpectrumMode::WeakCoupling).unwrap();
        assert!(e.re > 0.0);
    }

    #[test]
    fn sideband_vanishes_without_coupling() {
        let free = PhononParams::new(0.0, 7.9, 4.4e-4).unwrap();
        for mode in [SpectrumMode::Exact, SpectrumMode::WeakCoupling] {
            assert_eq!(sideband_spectrum(-3.0, &free, kelvin(4.0), mode).unwrap(), Complex64::new(0.0, 0.0));
        }
    }

    #[test]
    fn exact_and_weak_sideband_agree_at_first_order() {
        let p = qd1();
        let t = kelvin(4.0);
        let exact = sideband_spectrum(-5.0, &p, t, SpectrumMode::Exact).unwrap();
        let weak = sideband_spectrum(-5.0, &p, t, SpectrumMode::WeakCoupling).unwrap();
        assert!((exact.re / weak.re - 1.0).abs() < 0.15, "{exact} vs {weak}");
    }

    #[test]
    fn table_matches_direct_exact_spectrum() {
        let p = qd1();
        let t = kelvin(4.0);
        let table = SidebandTable::new(&p, t).unwrap();
        for omega in [-12.0, -5.0, 0.0, 3.0, 20.0] {
            let direct = sideband_spectrum(omega, &p, t, SpectrumMode::Exact).unwrap();
            let tab = table.spectrum(omega);
            assert!((direct - tab).norm() < 1e-5 * (1.0 + direct.norm()), "ω={omega}: {direct} vs {tab}");
        }
        let b = franck_condon(&p, t).unwrap();
        assert!((table.at_origin().re - (1.0 / (b * b) - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn filtered_fraction_flat_filter_is_one() {
        let f = CavityFilter::flat();
        assert_eq!(filtered_fraction(&qd1(), kelvin(4.0), &f, SidebandWeight::Symmetric).unwrap(), 1.0);
        let wide = CavityFilter::new(1e7, 0.0).unwrap();
        let v = filtered_fraction(&qd1(), kelvin(4.0), &wide, SidebandWeight::Symmetric).unwrap();
        assert!((v - 1.0).abs() < 1e-5);
    }

    #[test]
    fn filtered_fraction_weights_agree_on_resonance() {
        let f = CavityFilter::new(6.84, 0.0).unwrap();
        let a = filtered_fraction(&qd1(), kelvin(4.0), &f, SidebandWeight::Symmetric).unwrap();
        let b = filtered_fraction(&qd1(), kelvin(4.0), &f, SidebandWeight::DetailedBalance).unwrap();
        assert!((a - b).abs() < 1e-9);
        let detuned = CavityFilter::new(6.84, 2.0).unwrap();
        let a = filtered_fraction(&qd1(), kelvin(4.0), &detuned, SidebandWeight::Symmetric).unwrap();
        let b = filtered_fraction(&qd1(), kelvin(4.0), &detuned, SidebandWeight::DetailedBalance).unwrap();
        assert!((a - b).abs() > 0.05);
    }

    #[test]
    fn material_mapping() {
        let base = MaterialParams {
            d_e_ev: 7.0,
            d_h_ev: 7.0,
            rho_kg_m3: 5370.0,
            c_s_m_s: 5110.0,
            delta_e_mev: 30.0,
            delta_h_mev: 20.0,
        };
        let c = phonon_params_from_material(&base).unwrap();
        assert_eq!(c.alpha_ps2, 0.0);
        assert!(c.mu_ps2.is_none());

        let gaas = MaterialParams {
            d_e_ev: 7.0,
            d_h_ev: -1.0,
            ..base
        };
        let c1 = phonon_params_from_material(&gaas).unwrap();
        let doubled = MaterialParams {
            delta_e_mev: 60.0,
            delta_h_mev: 40.0,
            ..gaas
        };
        let c2 = phonon_params_from_material(&doubled).unwrap();
        assert!((c2.mu_ps2.unwrap() / c1.mu_ps2.unwrap() - 0.25).abs() < 1e-12);
        assert_eq!(c1.alpha_ps2, c2.alpha_ps2);

        // Worked once at 30 digits: (8 eV)² / (4π² · 5370 · ħ · 5110⁵) and
        // π ħ² ((7 eV)²/30 meV + (1 eV)²/20 meV)² / (8 eV)⁴, both in ps².
        assert!((c1.alpha_ps2 / ALPHA_GAAS_PS2 - 1.0).abs() < 1e-9, "{}", c1.alpha_ps2);
        assert!((c1.mu_ps2.unwrap() / MU_GAAS_PS2 - 1.0).abs() < 1e-9, "{:?}", c1.mu_ps2);

        let bad = MaterialParams {
            delta_e_mev: 0.0,
            ..gaas
        };
        assert!(phonon_params_from_material(&bad).is_err());
    }

    const ALPHA_GAAS_PS2: f64 = 0.021_090_461_233_455_115;
    const MU_GAAS_PS2: f64 = 9.415_897_141_664_825e-4;
}
