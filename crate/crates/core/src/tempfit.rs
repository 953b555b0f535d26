//! Temperature-sweep fits of the TPI visibility to the closed-form
//! indistinguishability over (α, ν_c, μ) at fixed Γ, κ, δ.

use std::collections::HashMap;
use std::sync::RwLock;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::emitter::{closed_form_indistinguishability, CavityFilter, EmitterParams};
use crate::error::{ensure, Error, Result};
use crate::numerics::{minimize, FitOptions, FitResult, ModelFailure};
use crate::phonon::{self, PhononParams, SidebandWeight, Temperature};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VisibilityPoint {
    pub temperature_k: f64,
    pub visibility: f64,
    pub sigma: f64,
}

/// Measured visibilities of one dot, with its emitter and filter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VisibilityDataset {
    points: Vec<VisibilityPoint>,
    emitter: EmitterParams,
    filter: CavityFilter,
}

const MIN_POINTS: usize = 4;

impl VisibilityDataset {
    pub fn new(points: Vec<VisibilityPoint>, emitter: EmitterParams, filter: CavityFilter) -> Result<Self> {
        emitter.validate()?;
        filter.validate()?;
        if points.len() < MIN_POINTS {
            return Err(Error::InvalidInput(format!(
                "a 3-parameter fit needs at least {MIN_POINTS} points, got {}",
                points.len()
            )));
        }
        for p in &points {
            ensure(p.temperature_k > 0.0 && p.temperature_k.is_finite(), "temperature_K", p.temperature_k, "T > 0")?;
            ensure(p.sigma > 0.0 && p.sigma.is_finite(), "sigma", p.sigma, "sigma > 0")?;
            ensure(
                p.visibility >= -3.0 * p.sigma && p.visibility <= 1.0 + 3.0 * p.sigma,
                "visibility",
                p.visibility,
                "visibility within [0, 1] up to 3 sigma",
            )?;
        }
        if points.windows(2).any(|w| w[1].temperature_k < w[0].temperature_k) {
            return Err(Error::InvalidInput("temperatures must be sorted ascending".into()));
        }
        Ok(Self { points, emitter, filter })
    }

    pub fn points(&self) -> &[VisibilityPoint] {
        &self.points
    }

    pub fn emitter(&self) -> &EmitterParams {
        &self.emitter
    }

    pub fn filter(&self) -> &CavityFilter {
        &self.filter
    }

    fn distinct_temperatures(&self) -> usize {
        1 + self
            .points
            .windows(2)
            .filter(|w| w[1].temperature_k > w[0].temperature_k)
            .count()
    }
}

/// The bath integrals at unit α (and μ) that fix I(T) for every (α, μ).
#[derive(Debug, Clone, Copy)]
struct BathIntegrals {
    phi_zero: f64,
    dephasing: f64,
    fraction: f64,
}

type CacheKey = (u64, u64, u64, u64);

/// Closed-form visibility at fixed emitter and filter, caching the
/// α-independent bath integrals per (ν_c, T, κ, δ).
#[derive(Debug)]
pub struct VisibilityModel {
    emitter: EmitterParams,
    filter: CavityFilter,
    cache: RwLock<HashMap<CacheKey, BathIntegrals>>,
}

impl VisibilityModel {
    pub fn new(emitter: EmitterParams, filter: CavityFilter) -> Result<Self> {
        emitter.validate()?;
        filter.validate()?;
        Ok(Self {
            emitter,
            filter,
            cache: RwLock::new(HashMap::new()),
        })
    }

    pub fn cached_entries(&self) -> usize {
        self.cache.read().map(|c| c.len()).unwrap_or(0)
    }

    fn integrals(&self, nu_c: f64, temperature: Temperature) -> Result<BathIntegrals> {
        let key = (
            nu_c.to_bits(),
            temperature.kelvin().to_bits(),
            self.filter.kappa.to_bits(),
            self.filter.delta.to_bits(),
        );
        if let Some(hit) = self.cache.read().ok().and_then(|c| c.get(&key).copied()) {
            return Ok(hit);
        }
        let unit = PhononParams::new(1.0, nu_c, 0.0)?;
        let value = BathIntegrals {
            phi_zero: phonon::phi_zero_per_alpha(nu_c, temperature)?,
            dephasing: phonon::dephasing_integral(nu_c, temperature)?,
            fraction: phonon::filtered_fraction(&unit, temperature, &self.filter, SidebandWeight::Symmetric)?,
        };
        if let Ok(mut c) = self.cache.write() {
            c.insert(key, value);
        }
        Ok(value)
    }

    pub fn evaluate(&self, params: &PhononParams, temperature: Temperature, mode: CurveMode) -> Result<f64> {
        params.validate()?;
        let bath = self.integrals(params.nu_c, temperature)?;
        let b2 = (-params.alpha * bath.phi_zero).exp();
        let gamma_pd = match mode {
            CurveMode::Full => params.alpha * params.alpha * params.mu * bath.dephasing,
            CurveMode::SidebandOnly => 0.0,
        };
        Ok(closed_form_indistinguishability(
            self.emitter.gamma,
            gamma_pd,
            b2,
            self.filter.zpl_transmission(),
            bath.fraction,
        ))
    }

    /// Evaluate at several temperatures in parallel; output follows input order.
    pub fn evaluate_many(&self, params: &PhononParams, temperatures: &[f64], mode: CurveMode) -> Result<Vec<f64>> {
        temperatures
            .par_iter()
            .map(|&t| self.evaluate(params, Temperature::from_kelvin(t)?, mode))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurveMode {
    #[default]
    Full,
    /// γ_pd forced to 0: only the phonon sideband limits the visibility.
    SidebandOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub temperature_k: f64,
    pub visibility: f64,
}

pub fn visibility_curve(
    params: &PhononParams,
    emitter: &EmitterParams,
    filter: &CavityFilter,
    t_grid: &[f64],
    mode: CurveMode,
) -> Result<Vec<CurvePoint>> {
    let model = VisibilityModel::new(*emitter, *filter)?;
    let values = model.evaluate_many(params, t_grid, mode)?;
    Ok(t_grid
        .iter()
        .zip(values)
        .map(|(&t, v)| CurvePoint {
            temperature_k: t,
            visibility: v,
        })
        .collect())
}

/// Box constraints on (α, ν_c, μ).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamBounds {
    pub lower: PhononParams,
    pub upper: PhononParams,
}

impl Default for ParamBounds {
    fn default() -> Self {
        Self {
            lower: PhononParams {
                alpha: 1e-5,
                nu_c: 0.5,
                mu: 0.0,
            },
            upper: PhononParams {
                alpha: 0.1,
                nu_c: 50.0,
                mu: 1e-1,
            },
        }
    }
}

impl ParamBounds {
    fn contains(&self, p: &PhononParams) -> bool {
        let (l, u) = (to_vec(&self.lower), to_vec(&self.upper));
        to_vec(p).iter().zip(l.iter().zip(&u)).all(|(x, (lo, hi))| lo <= x && x <= hi)
    }
}

fn to_vec(p: &PhononParams) -> [f64; 3] {
    [p.alpha, p.nu_c, p.mu]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VisibilityFit {
    pub params: PhononParams,
    pub uncertainties: PhononParams,
    pub chi_square: f64,
    pub reduced_chi_square: f64,
    pub initial_chi_square: f64,
    pub converged: bool,
    /// Some parameter finished on its bound.
    pub bound_stuck: bool,
    pub at_bound: [bool; 3],
    pub starts: usize,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TempFitOptions {
    /// Restart from init × {0.5, 1, 2} in every parameter.
    pub multistart: bool,
}

impl Default for TempFitOptions {
    fn default() -> Self {
        Self { multistart: true }
    }
}

/// Least-squares fit of Σ((Vᵢ − I(Tᵢ))/σᵢ)² over (α, ν_c, μ).
pub fn fit_visibility(data: &VisibilityDataset, init: &PhononParams, bounds: &ParamBounds) -> Result<VisibilityFit> {
    fit_visibility_with(data, init, bounds, &TempFitOptions::default())
}

pub fn fit_visibility_with(
    data: &VisibilityDataset,
    init: &PhononParams,
    bounds: &ParamBounds,
    options: &TempFitOptions,
) -> Result<VisibilityFit> {
    init.validate()?;
    if !bounds.contains(init) {
        return Err(Error::InvalidInput(format!("initial parameters {init:?} lie outside the bounds")));
    }
    if data.distinct_temperatures() < 2 {
        return Err(Error::InvalidInput(
            "all points share one temperature: the temperature dependence is unconstrained".into(),
        ));
    }
    let model = VisibilityModel::new(data.emitter, data.filter)?;
    let temps: Vec<f64> = data.points.iter().map(|p| p.temperature_k).collect();

    // Work in units of the initial guess so the three parameters are O(1).
    let scale: [f64; 3] = to_vec(init).map(|x| if x > 0.0 { x } else { 1.0 });
    let scale = [
        scale[0],
        scale[1],
        if init.mu > 0.0 { init.mu } else { 1e-4_f64.min(bounds.upper.mu) },
    ];
    let unscale = |x: &[f64]| PhononParams {
        alpha: x[0] * scale[0],
        nu_c: x[1] * scale[1],
        mu: x[2] * scale[2],
    };
    let lower: Vec<f64> = to_vec(&bounds.lower).iter().zip(scale).map(|(b, s)| b / s).collect();
    let upper: Vec<f64> = to_vec(&bounds.upper).iter().zip(scale).map(|(b, s)| b / s).collect();

    let residuals = |x: &[f64]| -> std::result::Result<Vec<f64>, ModelFailure> {
        let p = unscale(x);
        let values = model.evaluate_many(&p, &temps, CurveMode::Full)?;
        Ok(data
            .points
            .iter()
            .zip(values)
            .map(|(d, v)| (d.visibility - v) / d.sigma)
            .collect())
    };
    let chi2 = |x: &[f64]| -> Result<f64> {
        let r = residuals(x).map_err(|e| Error::InvalidInput(e.to_string()))?;
        Ok(r.iter().map(|v| v * v).sum())
    };

    let x0 = to_vec(init).iter().zip(scale).map(|(v, s)| v / s).collect::<Vec<_>>();
    let initial_chi_square = chi2(&x0)?;

    let factors: &[f64] = if options.multistart { &[1.0, 0.5, 2.0] } else { &[1.0] };
    let mut starts = Vec::new();
    for &fa in factors {
        for &fn_ in factors {
            for &fm in factors {
                let s: Vec<f64> = x0
                    .iter()
                    .zip([fa, fn_, fm])
                    .zip(lower.iter().zip(&upper))
                    .map(|((x, f), (lo, hi))| {
                        let v = if *x == 0.0 && f != 1.0 { f - 0.5 } else { x * f };
                        v.clamp(*lo, *hi)
                    })
                    .collect();
                if !starts.contains(&s) {
                    starts.push(s);
                }
            }
        }
    }

    let options = FitOptions::default();
    let mut best: Option<FitResult> = None;
    let mut last_error = None;
    for s in &starts {
        match minimize(residuals, s, &lower, &upper, &options) {
            Ok(fit) => {
                if best.as_ref().is_none_or(|b| fit.chi_square < b.chi_square) {
                    best = Some(fit);
                }
            }
            // A start on a flat patch (e.g. μ = 0 makes the μ column vanish) is skipped.
            Err(e) => last_error = Some(e),
        }
    }
    let fit = match (best, last_error) {
        (Some(fit), _) => fit,
        (None, Some(e)) => return Err(e.into()),
        (None, None) => unreachable!("at least one start"),
    };
    let dof = (data.points.len().saturating_sub(3)).max(1) as f64;
    let params = unscale(&fit.params);
    Ok(VisibilityFit {
        params,
        uncertainties: PhononParams {
            alpha: fit.uncertainties[0] * scale[0],
            nu_c: fit.uncertainties[1] * scale[1],
            mu: fit.uncertainties[2] * scale[2],
        },
        chi_square: fit.chi_square,
        reduced_chi_square: fit.chi_square / dof,
        initial_chi_square,
        converged: fit.converged,
        bound_stuck: fit.bound_stuck(),
        at_bound: [fit.at_bound[0], fit.at_bound[1], fit.at_bound[2]],
        starts: starts.len(),
        iterations: fit.iterations,
    })
}
