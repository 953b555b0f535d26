use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};
use crate::numerics::{least_squares_fit, DataPoint};

/// One fringe-contrast measurement at a Michelson path delay.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FringeSample {
    pub delay_ps: f64,
    pub contrast: f64,
    pub sigma: f64,
}

/// Fringe contrast versus delay (Fourier-transform spectroscopy scan).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FringeContrast {
    samples: Vec<FringeSample>,
}

impl FringeContrast {
    pub fn new(samples: Vec<FringeSample>) -> Result<Self> {
        for s in &samples {
            ensure(s.delay_ps.is_finite(), "delay_ps", s.delay_ps, "finite")?;
            ensure(s.sigma > 0.0 && s.sigma.is_finite(), "sigma", s.sigma, "sigma > 0")?;
            ensure(
                s.contrast >= -3.0 * s.sigma && s.contrast <= 1.0 + 3.0 * s.sigma,
                "contrast",
                s.contrast,
                "contrast within [0, 1] up to 3 sigma",
            )?;
        }
        if let Some(w) = samples.windows(2).find(|w| w[1].delay_ps <= w[0].delay_ps) {
            return Err(Error::InvalidInput(format!(
                "delays must be strictly increasing ({} ps followed by {} ps)",
                w[0].delay_ps, w[1].delay_ps
            )));
        }
        Ok(Self { samples })
    }

    pub fn samples(&self) -> &[FringeSample] {
        &self.samples
    }

    /// Largest |delay| covered.
    pub fn span_ps(&self) -> f64 {
        self.samples.iter().map(|s| s.delay_ps.abs()).fold(0.0, f64::max)
    }
}

/// f(t) = (1 − η) e^{−|t|/T₂} + η e^{−(t/T₂)²}.
pub fn pseudo_voigt(t: f64, t2: f64, eta: f64) -> f64 {
    let x = t / t2;
    (1.0 - eta) * (-x.abs()).exp() + eta * (-x * x).exp()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FringeFit {
    pub t2_ps: f64,
    pub eta: f64,
    pub t2_sigma_ps: f64,
    pub eta_sigma: f64,
    pub chi_square: f64,
    pub reduced_chi_square: f64,
    pub converged: bool,
    pub iterations: usize,
    /// η ended on 0 or 1.
    pub eta_clamped: bool,
    /// Scan does not reach 2·T₂; expect a 10–15 % bias in T₂.
    pub short_span: bool,
}

const MIN_SAMPLES: usize = 8;

/// Pseudo-Voigt fit of the fringe-contrast decay, η restricted to [0, 1].
pub fn fit_fringe_contrast(data: &FringeContrast) -> Result<FringeFit> {
    let samples = data.samples();
    if samples.len() < MIN_SAMPLES {
        return Err(Error::InvalidInput(format!(
            "fringe fit needs at least {MIN_SAMPLES} samples, got {}",
            samples.len()
        )));
    }
    let points: Vec<DataPoint> = samples
        .iter()
        .map(|s| DataPoint::new(s.delay_ps, s.contrast, s.sigma))
        .collect();
    let span = data.span_ps();
    ensure(span > 0.0, "delay span", span, "scan must cover nonzero delays")?;

    let t2_init = initial_t2(samples).unwrap_or(span / 2.0);
    let model = |p: &[f64], t: f64| pseudo_voigt(t, p[0], p[1]);
    let lower = [1e-6 * span, 0.0];
    let upper = [1e3 * span, 1.0];

    // Two starts bracketing the exponential and Gaussian limits.
    let mut best = None;
    for eta0 in [0.2, 0.8] {
        let fit = least_squares_fit(model, &points, &[t2_init.clamp(lower[0], upper[0]), eta0], &lower, &upper)?;
        if best.as_ref().is_none_or(|b: &crate::numerics::FitResult| fit.chi_square < b.chi_square) {
            best = Some(fit);
        }
    }
    let fit = best.expect("at least one start");
    let dof = (points.len() - 2).max(1) as f64;
    let t2 = fit.params[0];
    Ok(FringeFit {
        t2_ps: t2,
        eta: fit.params[1],
        t2_sigma_ps: fit.uncertainties[0],
        eta_sigma: fit.uncertainties[1],
        chi_square: fit.chi_square,
        reduced_chi_square: fit.chi_square / dof,
        converged: fit.converged,
        iterations: fit.iterations,
        eta_clamped: fit.at_bound[1],
        short_span: span < 2.0 * t2,
    })
}

/// First delay at which the contrast crosses e⁻¹, linearly interpolated.
fn initial_t2(samples: &[FringeSample]) -> Option<f64> {
    let level = (-1.0f64).exp();
    let mut positive: Vec<&FringeSample> = samples.iter().filter(|s| s.delay_ps >= 0.0).collect();
    if positive.len() < 2 {
        positive = samples.iter().collect();
        positive.sort_by(|a, b| a.delay_ps.abs().total_cmp(&b.delay_ps.abs()));
    }
    positive.windows(2).find_map(|w| {
        let (a, b) = (w[0], w[1]);
        if a.contrast >= level && b.contrast < level {
            let frac = (a.contrast - level) / (a.contrast - b.contrast);
            Some(a.delay_ps.abs() + frac * (b.delay_ps.abs() - a.delay_ps.abs()))
        } else {
            None
        }
    })
}

/// Ṽ = T₂ / (2 T₁).
pub fn expected_visibility_ratio(t1_ps: f64, t2_ps: f64) -> Result<f64> {
    ensure(t1_ps > 0.0 && t1_ps.is_finite(), "T1", t1_ps, "T1 > 0")?;
    ensure(t2_ps > 0.0 && t2_ps.is_finite(), "T2", t2_ps, "T2 > 0")?;
    Ok(t2_ps / (2.0 * t1_ps))
}
