//! Seeded planted-truth data generators for round-trip tests and demos.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};

use crate::emitter::{CavityFilter, EmitterParams};
use crate::error::{ensure, Error, Result};
use crate::experiment::histogram::laplace_mass;
use crate::experiment::{
    pseudo_voigt, CoincidenceHistogram, FringeContrast, FringeSample, HistogramBin, HistogramMeta, SetupImperfections,
};
use crate::phonon::PhononParams;
use crate::tempfit::{visibility_curve, CurveMode, VisibilityPoint};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Closed-form visibilities at `temps` with Gaussian noise of relative size
/// `rel_noise`; σ is reported as `rel_noise·V` (or 0.01 when noiseless).
pub fn visibility_points(
    params: &PhononParams,
    emitter: &EmitterParams,
    filter: &CavityFilter,
    temps: &[f64],
    rel_noise: f64,
    seed: u64,
) -> Result<Vec<VisibilityPoint>> {
    ensure(rel_noise >= 0.0 && rel_noise.is_finite(), "rel_noise", rel_noise, ">= 0")?;
    let curve = visibility_curve(params, emitter, filter, temps, CurveMode::Full)?;
    let mut rng = rng(seed);
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    Ok(curve
        .into_iter()
        .map(|c| {
            let sigma = if rel_noise > 0.0 { rel_noise * c.visibility } else { 0.01 };
            VisibilityPoint {
                temperature_k: c.temperature_k,
                visibility: c.visibility * (1.0 + rel_noise * normal.sample(&mut rng)),
                sigma: sigma.max(1e-6),
            }
        })
        .collect())
}

/// Pseudo-Voigt contrast at `delays_ps` with additive Gaussian noise.
pub fn fringe_scan(t2_ps: f64, eta: f64, delays_ps: &[f64], noise: f64, seed: u64) -> Result<FringeContrast> {
    ensure(t2_ps > 0.0, "T2", t2_ps, "T2 > 0")?;
    ensure((0.0..=1.0).contains(&eta), "eta", eta, "0 <= eta <= 1")?;
    ensure(noise >= 0.0 && noise.is_finite(), "noise", noise, ">= 0")?;
    let mut rng = rng(seed);
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let sigma = if noise > 0.0 { noise } else { 0.01 };
    FringeContrast::new(
        delays_ps
            .iter()
            .map(|&t| FringeSample {
                delay_ps: t,
                contrast: pseudo_voigt(t, t2_ps, eta) + noise * normal.sample(&mut rng),
                sigma,
            })
            .collect(),
    )
}

/// Delay grid and peak shape of a synthetic histogram.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistogramLayout {
    pub meta: HistogramMeta,
    pub bin_width_ns: f64,
    /// Bins cover ±span.
    pub span_ns: f64,
    pub decay_ns: f64,
}

impl Default for HistogramLayout {
    fn default() -> Self {
        Self {
            meta: HistogramMeta::default(),
            bin_width_ns: 0.05,
            span_ns: 22.0,
            decay_ns: 1.1,
        }
    }
}

/// Poisson-sampled histogram of two-sided exponential peaks with the given
/// expected areas. `seed = None` gives the rounded expectation.
pub fn histogram(layout: &HistogramLayout, centers: &[f64], areas: &[f64], seed: Option<u64>) -> Result<CoincidenceHistogram> {
    if centers.len() != areas.len() {
        return Err(Error::InvalidInput("centres and areas differ in length".into()));
    }
    ensure(layout.bin_width_ns > 0.0, "bin_width_ns", layout.bin_width_ns, "> 0")?;
    ensure(layout.span_ns > layout.bin_width_ns, "span_ns", layout.span_ns, "> bin width")?;
    ensure(layout.decay_ns > 0.0, "decay_ns", layout.decay_ns, "> 0")?;
    let mut rng = seed.map(rng);
    let w = layout.bin_width_ns;
    let n = (2.0 * layout.span_ns / w).round() as usize;
    let bins = (0..n)
        .map(|k| {
            let t = -layout.span_ns + (k as f64 + 0.5) * w;
            let mean: f64 = centers
                .iter()
                .zip(areas)
                .map(|(&c, &a)| a * laplace_mass(t - 0.5 * w, t + 0.5 * w, c, layout.decay_ns))
                .sum();
            let counts = match rng.as_mut() {
                Some(r) if mean > 0.0 => Poisson::new(mean).expect("positive mean").sample(r) as u64,
                _ => mean.round() as u64,
            };
            HistogramBin { delay_ns: t, counts }
        })
        .collect();
    CoincidenceHistogram::new(bins, layout.meta)
}

/// Planted HBT + HOM experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HomExperiment {
    pub g2_hbt: f64,
    /// Planted TPI visibility.
    pub visibility: f64,
    pub setup: SetupImperfections,
    /// Share of the HOM central-bunch counts due to laser leakage.
    pub background_fraction: f64,
    /// Expected area of the outer peaks of an HBT side bunch (1:2:1 pattern).
    pub hbt_side_area: f64,
    /// Expected photon area of the outer HOM central peaks.
    pub hom_peak_area: f64,
    pub t_hbt_s: f64,
    pub layout: HistogramLayout,
}

impl Default for HomExperiment {
    fn default() -> Self {
        Self {
            g2_hbt: 0.12,
            visibility: 0.79,
            setup: SetupImperfections {
                r: 0.430,
                t: 0.570,
                c2: 0.98,
            },
            background_fraction: 0.10,
            hbt_side_area: 2.0e5,
            hom_peak_area: 2.0e5,
            t_hbt_s: 600.0,
            layout: HistogramLayout::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HomSample {
    pub hbt: CoincidenceHistogram,
    pub hom: CoincidenceHistogram,
    /// Background-free g²_HOM implied by the planted visibility.
    pub g2_hom: f64,
    pub t_hom_s: f64,
}

impl HomExperiment {
    pub fn generate(&self, seed: u64) -> Result<HomSample> {
        self.setup.validate()?;
        ensure(self.g2_hbt > 0.0, "g2_hbt", self.g2_hbt, "> 0")?;
        ensure(
            (0.0..1.0).contains(&self.background_fraction),
            "background_fraction",
            self.background_fraction,
            "0 <= f < 1",
        )?;
        let factor = self.setup.correction_factor();
        let g2_hom = 1.0 - self.visibility / factor;
        ensure(g2_hom >= 0.0, "visibility", self.visibility, "visibility <= correction factor")?;

        let meta = self.layout.meta;
        let (rep, sep) = (meta.rep_period_ns, meta.pair_separation_ns);
        let centers: Vec<f64> = (-1..=1)
            .flat_map(|k| [-sep, 0.0, sep].map(|s| k as f64 * rep + s))
            .collect();
        let pattern = [1.0, 2.0, 1.0];
        let s = self.hbt_side_area;
        let hbt_areas: Vec<f64> = (-1..=1)
            .flat_map(|k: i32| pattern.map(|p| p * s * if k == 0 { self.g2_hbt } else { 1.0 }))
            .collect();

        let h = self.hom_peak_area;
        let photon_central = [h, 2.0 * h * g2_hom, h];
        let photon_central_sum: f64 = photon_central.iter().sum();
        let hbt_central_sum = 4.0 * s * self.g2_hbt;
        let f = self.background_fraction;
        let scale = f / (1.0 - f) * photon_central_sum / hbt_central_sum;
        let t_hom_s = 0.5 * scale * self.t_hbt_s;

        let hom_photon: Vec<f64> = (-1..=1)
            .flat_map(|k: i32| {
                if k == 0 {
                    photon_central
                } else {
                    pattern.map(|p| p * h)
                }
            })
            .collect();
        let hom_areas: Vec<f64> = hom_photon.iter().zip(&hbt_areas).map(|(p, b)| p + scale * b).collect();

        let hbt_layout = HistogramLayout {
            meta: HistogramMeta {
                acquisition_time_s: self.t_hbt_s,
                ..meta
            },
            ..self.layout
        };
        let hom_layout = HistogramLayout {
            meta: HistogramMeta {
                acquisition_time_s: t_hom_s,
                ..meta
            },
            ..self.layout
        };
        Ok(HomSample {
            hbt: histogram(&hbt_layout, &centers, &hbt_areas, Some(seed))?,
            hom: histogram(&hom_layout, &centers, &hom_areas, Some(seed.wrapping_add(1)))?,
            g2_hom,
            t_hom_s,
        })
    }
}
