//! Optical observables of the dot behind a Lorentzian cavity filter:
//! first-order correlation, two-colour spectra, power partition and the
//! two-photon indistinguishability (closed form and brute-force frequency
//! integral).
//!
//! Spectra are expressed in the frame rotating at the polaron-shifted
//! exciton line, so ω = 0 is the zero-phonon line.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};
use crate::phonon::{
    self, PhononParams, SidebandTable, SidebandWeight, SpectrumMode, Temperature, CUTOFF_MULTIPLE, MEV_TO_PS_INV,
};

/// Radiative decay of the bare emitter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmitterParams {
    /// Γ = 1/T₁, ps⁻¹.
    pub gamma: f64,
}

impl EmitterParams {
    pub fn new(gamma: f64) -> Result<Self> {
        ensure(gamma > 0.0 && gamma.is_finite(), "gamma", gamma, "gamma > 0")?;
        Ok(Self { gamma })
    }

    pub fn from_t1_ps(t1: f64) -> Result<Self> {
        ensure(t1 > 0.0 && t1.is_finite(), "T1", t1, "T1 > 0")?;
        Self::new(1.0 / t1)
    }

    pub fn validate(&self) -> Result<()> {
        Self::new(self.gamma).map(|_| ())
    }
}

/// Lorentzian cavity filter h(ω) = (κ/2)/(i(ω − δ) + κ/2).
///
/// `kappa = ∞` is the flat filter h ≡ 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CavityFilter {
    /// Full width κ, ps⁻¹.
    pub kappa: f64,
    /// Dot–cavity detuning δ, ps⁻¹.
    pub delta: f64,
}

impl CavityFilter {
    pub fn new(kappa: f64, delta: f64) -> Result<Self> {
        let f = Self { kappa, delta };
        f.validate()?;
        Ok(f)
    }

    pub fn from_mev(kappa_mev: f64, delta_mev: f64) -> Result<Self> {
        Self::new(kappa_mev * MEV_TO_PS_INV, delta_mev * MEV_TO_PS_INV)
    }

    pub fn flat() -> Self {
        Self {
            kappa: f64::INFINITY,
            delta: 0.0,
        }
    }

    pub fn is_flat(&self) -> bool {
        self.kappa == f64::INFINITY
    }

    pub fn validate(&self) -> Result<()> {
        ensure(self.kappa > 0.0 && !self.kappa.is_nan(), "kappa", self.kappa, "kappa > 0")?;
        ensure(self.delta.is_finite(), "delta", self.delta, "finite detuning")
    }

    /// h(ω).
    pub fn response(&self, omega: f64) -> Complex64 {
        if self.is_flat() {
            return Complex64::new(1.0, 0.0);
        }
        let half = 0.5 * self.kappa;
        Complex64::new(half, 0.0) / Complex64::new(half, omega - self.delta)
    }

    /// |h(ω)|².
    pub fn transmission(&self, omega: f64) -> f64 {
        if self.is_flat() {
            return 1.0;
        }
        let half = 0.5 * self.kappa;
        let d = omega - self.delta;
        half * half / (d * d + half * half)
    }

    /// |h(0)|² = (κ/2)²/(δ² + (κ/2)²).
    pub fn zpl_transmission(&self) -> f64 {
        self.transmission(0.0)
    }
}

/// h(ω) of `filter`.
pub fn cavity_response(omega: f64, filter: &CavityFilter) -> Complex64 {
    filter.response(omega)
}

/// P_ZPL, P_SB and the detected power P ≈ |h(0)|²P_ZPL + F·P_SB.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Powers {
    pub zpl: f64,
    pub sideband: f64,
    pub filtered_fraction: f64,
    pub detected: f64,
}

/// Closed-form indistinguishability from its ingredients:
/// I = Γ/(Γ + 2γ_pd) · (|h(0)|²B² / (|h(0)|²B² + F(1 − B²)))².
pub fn closed_form_indistinguishability(gamma: f64, gamma_pd: f64, b2: f64, h0_sq: f64, fraction: f64) -> f64 {
    let zpl = h0_sq * b2;
    let ratio = zpl / (zpl + fraction * (1.0 - b2));
    gamma / (gamma + 2.0 * gamma_pd) * ratio * ratio
}

/// Closed-form indistinguishability (weak-coupling filtered fraction).
pub fn indistinguishability(
    emitter: &EmitterParams,
    filter: &CavityFilter,
    params: &PhononParams,
    temperature: Temperature,
) -> Result<f64> {
    EmissionModel::new(*emitter, *filter, *params, temperature, SpectrumMode::WeakCoupling)?.indistinguishability()
}

#[derive(Debug, Clone)]
enum Sideband {
    Absent,
    Weak,
    Tabulated(SidebandTable),
}

/// The dot–bath–filter system at one temperature, with the bath integrals
/// (B², γ_pd and, in exact mode, the tabulated G(τ) − 1) evaluated once.
#[derive(Debug, Clone)]
pub struct EmissionModel {
    emitter: EmitterParams,
    filter: CavityFilter,
    params: PhononParams,
    temperature: Temperature,
    b2: f64,
    gamma_pd: f64,
    sideband: Sideband,
}

impl EmissionModel {
    pub fn new(
        emitter: EmitterParams,
        filter: CavityFilter,
        params: PhononParams,
        temperature: Temperature,
        mode: SpectrumMode,
    ) -> Result<Self> {
        emitter.validate()?;
        filter.validate()?;
        params.validate()?;
        let b = phonon::franck_condon(&params, temperature)?;
        let gamma_pd = phonon::dephasing_rate(&params, temperature)?;
        let sideband = if params.alpha == 0.0 {
            Sideband::Absent
        } else {
            match mode {
                SpectrumMode::WeakCoupling => Sideband::Weak,
                SpectrumMode::Exact => Sideband::Tabulated(SidebandTable::new(&params, temperature)?),
            }
        };
        Ok(Self {
            emitter,
            filter,
            params,
            temperature,
            b2: b * b,
            gamma_pd,
            sideband,
        })
    }

    /// Same model with the pure dephasing switched off (sideband-only curve).
    pub fn without_dephasing(mut self) -> Self {
        self.gamma_pd = 0.0;
        self
    }

    pub fn emitter(&self) -> &EmitterParams {
        &self.emitter
    }

    pub fn filter(&self) -> &CavityFilter {
        &self.filter
    }

    pub fn phonon_params(&self) -> &PhononParams {
        &self.params
    }

    pub fn temperature(&self) -> Temperature {
        self.temperature
    }

    /// B².
    pub fn zpl_weight(&self) -> f64 {
        self.b2
    }

    pub fn dephasing_rate(&self) -> f64 {
        self.gamma_pd
    }

    /// Γ + 2γ_pd, the ZPL full width.
    pub fn zpl_width(&self) -> f64 {
        self.emitter.gamma + 2.0 * self.gamma_pd
    }

    /// g¹(t, τ) = (Γ/2π) B² G(τ) e^{−Γt − (Γ + 2γ_pd)τ/2}.
    pub fn g1(&self, t: f64, tau: f64) -> Result<Complex64> {
        ensure(t >= 0.0 && t.is_finite(), "t", t, "t >= 0")?;
        ensure(tau >= 0.0 && tau.is_finite(), "tau", tau, "tau >= 0")?;
        let g = phonon::phonon_correlation(tau, &self.params, self.temperature)?;
        let gamma = self.emitter.gamma;
        let envelope = (-gamma * t - 0.5 * self.zpl_width() * tau).exp();
        Ok(g * (gamma / TAU * self.b2 * envelope))
    }

    /// S_PH(ω) in the model's spectrum mode.
    pub fn phonon_spectrum(&self, omega: f64) -> Complex64 {
        match &self.sideband {
            Sideband::Absent => Complex64::new(0.0, 0.0),
            Sideband::Weak => Complex64::new(
                0.5 * PI
                    * self.params.alpha
                    * phonon::omega_coth_minus_one(omega, self.temperature.beta())
                    * (-(omega / self.params.nu_c).powi(2)).exp(),
                0.0,
            ),
            Sideband::Tabulated(table) => table.spectrum(omega),
        }
    }

    /// S_ZPL(ω, ν).
    pub fn zpl_two_colour(&self, omega: f64, nu: f64) -> Complex64 {
        let gamma = self.emitter.gamma;
        let width = self.zpl_width();
        let i = Complex64::i();
        let num = Complex64::new(width, omega - nu) * gamma;
        let den = (0.5 * width - i * nu) * (gamma - i * (nu - omega)) * (0.5 * width + i * omega);
        self.filter.response(omega).conj() * self.filter.response(nu) * self.b2 * num / den
    }

    /// 𝒮_SB(ω, ν) = S_SB(ω, ν) + S_SB(ν, ω)*, with
    /// S_SB(ω, ν) = Γ B² h*(ω) h(ν) S_PH(ω) / (Γ − i(ν − ω)).
    pub fn sideband_two_colour(&self, omega: f64, nu: f64) -> Complex64 {
        self.half_sideband(omega, nu) + self.half_sideband(nu, omega).conj()
    }

    fn half_sideband(&self, omega: f64, nu: f64) -> Complex64 {
        let gamma = self.emitter.gamma;
        let h = self.filter.response(omega).conj() * self.filter.response(nu);
        h * gamma * self.b2 * self.phonon_spectrum(omega) / Complex64::new(gamma, omega - nu)
    }

    /// Diagonal of the full two-colour spectrum.
    pub fn emission_spectrum(&self, omega: f64) -> f64 {
        (self.zpl_two_colour(omega, omega) + self.sideband_two_colour(omega, omega)).re
    }

    pub fn filtered_fraction(&self, weight: SidebandWeight) -> Result<f64> {
        phonon::filtered_fraction(&self.params, self.temperature, &self.filter, weight)
    }

    pub fn powers(&self) -> Result<Powers> {
        let fraction = self.filtered_fraction(SidebandWeight::Symmetric)?;
        let zpl = TAU * self.b2;
        let sideband = TAU * (1.0 - self.b2);
        Ok(Powers {
            zpl,
            sideband,
            filtered_fraction: fraction,
            detected: self.filter.zpl_transmission() * zpl + fraction * sideband,
        })
    }

    /// Closed-form indistinguishability.
    pub fn indistinguishability(&self) -> Result<f64> {
        let fraction = self.filtered_fraction(SidebandWeight::Symmetric)?;
        Ok(closed_form_indistinguishability(
            self.emitter.gamma,
            self.gamma_pd,
            self.b2,
            self.filter.zpl_transmission(),
            fraction,
        ))
    }

    /// Brute-force frequency-space indistinguishability
    /// I = ∬|S_ZPL(ω, ν)|² dω dν / (∫[S_ZPL(ω, ω) + 𝒮_SB(ω, ω)] dω)²,
    /// with the true filter response and the incoherent sideband left out of
    /// the numerator. Evaluated at two grid resolutions; a shift above
    /// `grid.refinement_limit` is an error.
    pub fn indistinguishability_numeric(&self, grid: &FrequencyGrid) -> Result<NumericIndistinguishability> {
        grid.validate()?;
        let coarse = self.numeric_at(grid.zpl_points, grid.sideband_panels, grid.sideband_extent);
        let fine = self.numeric_at(2 * grid.zpl_points, 2 * grid.sideband_panels, grid.sideband_extent);
        let shift = ((fine.value - coarse.value) / fine.value).abs();
        if !(shift <= grid.refinement_limit) {
            return Err(Error::GridResolution {
                relative_shift: shift,
                limit: grid.refinement_limit,
            });
        }
        Ok(NumericIndistinguishability {
            refinement_shift: shift,
            ..fine
        })
    }

    fn numeric_at(&self, zpl_points: usize, sideband_panels: usize, extent: f64) -> NumericIndistinguishability {
        // ZPL patch: ω = w·tan θ on midpoints of (−π/2, π/2) turns the
        // Lorentzian factors into constants and reaches ~N·w/π on each side.
        let w = 0.5 * self.zpl_width();
        let dtheta = PI / zpl_points as f64;
        let nodes: Vec<(f64, f64)> = (0..zpl_points)
            .map(|k| {
                let theta = -FRAC_PI_2 + (k as f64 + 0.5) * dtheta;
                let c = theta.cos();
                (w * theta.tan(), w * dtheta / (c * c))
            })
            .collect();

        let mut numerator = 0.0;
        let mut zpl_power = 0.0;
        for &(omega, wo) in &nodes {
            zpl_power += wo * self.zpl_two_colour(omega, omega).re;
            let mut row = 0.0;
            for &(nu, wn) in &nodes {
                row += wn * self.zpl_two_colour(omega, nu).norm_sqr();
            }
            numerator += wo * row;
        }

        // Sideband patch: composite Simpson over ±extent·ν_c.
        let half = extent * self.params.nu_c;
        let panels = sideband_panels + sideband_panels % 2;
        let h = 2.0 * half / panels as f64;
        let mut sideband_power = 0.0;
        if !matches!(self.sideband, Sideband::Absent) {
            for k in 0..=panels {
                let omega = -half + k as f64 * h;
                let weight = if k == 0 || k == panels {
                    1.0
                } else if k % 2 == 1 {
                    4.0
                } else {
                    2.0
                };
                sideband_power += weight * self.sideband_two_colour(omega, omega).re;
            }
            sideband_power *= h / 3.0;
        }

        let power = zpl_power + sideband_power;
        NumericIndistinguishability {
            value: numerator / (power * power),
            numerator,
            zpl_power,
            sideband_power,
            refinement_shift: 0.0,
        }
    }
}

/// Resolution of the two-patch frequency grid used by the numeric
/// indistinguishability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrequencyGrid {
    /// Points per axis on the ZPL patch (tan-mapped).
    pub zpl_points: usize,
    /// Simpson panels across the sideband patch.
    pub sideband_panels: usize,
    /// Half-width of the sideband patch in units of ν_c.
    pub sideband_extent: f64,
    /// Maximum tolerated relative change under grid doubling.
    pub refinement_limit: f64,
}

impl Default for FrequencyGrid {
    fn default() -> Self {
        Self {
            zpl_points: 400,
            sideband_panels: 600,
            sideband_extent: CUTOFF_MULTIPLE,
            refinement_limit: 0.01,
        }
    }
}

impl FrequencyGrid {
    fn validate(&self) -> Result<()> {
        ensure(self.zpl_points >= 400, "zpl_points", self.zpl_points as f64, ">= 400 points per axis")?;
        ensure(self.sideband_panels >= 2, "sideband_panels", self.sideband_panels as f64, ">= 2")?;
        ensure(self.sideband_extent > 0.0, "sideband_extent", self.sideband_extent, "> 0")?;
        ensure(self.refinement_limit > 0.0, "refinement_limit", self.refinement_limit, "> 0")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NumericIndistinguishability {
    pub value: f64,
    pub numerator: f64,
    pub zpl_power: f64,
    pub sideband_power: f64,
    /// Relative change of `value` between the two grid levels.
    pub refinement_shift: f64,
}
