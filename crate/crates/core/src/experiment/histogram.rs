use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};
use crate::numerics::{minimize, FitOptions, ModelFailure};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    /// Bin centre, ns.
    pub delay_ns: f64,
    pub counts: u64,
}

/// Acquisition metadata carried alongside a histogram.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistogramMeta {
    pub acquisition_time_s: f64,
    /// Laser repetition period (12.2 ns at 82 MHz).
    pub rep_period_ns: f64,
    /// Unbalanced Mach–Zehnder delay between the two pulses of a pair.
    pub pair_separation_ns: f64,
}

impl Default for HistogramMeta {
    fn default() -> Self {
        Self {
            acquisition_time_s: 1.0,
            rep_period_ns: 12.2,
            pair_separation_ns: 3.0,
        }
    }
}

impl HistogramMeta {
    pub fn validate(&self) -> Result<()> {
        ensure(
            self.acquisition_time_s > 0.0 && self.acquisition_time_s.is_finite(),
            "acquisition_time_s",
            self.acquisition_time_s,
            "> 0",
        )?;
        ensure(self.pair_separation_ns > 0.0, "pair_separation_ns", self.pair_separation_ns, "> 0")?;
        ensure(
            self.rep_period_ns > self.pair_separation_ns && self.rep_period_ns.is_finite(),
            "rep_period_ns",
            self.rep_period_ns,
            "rep_period > pair_separation",
        )
    }
}

/// Start–stop coincidence histogram on a uniform delay grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoincidenceHistogram {
    bins: Vec<HistogramBin>,
    meta: HistogramMeta,
    bin_width_ns: f64,
}

impl CoincidenceHistogram {
    pub fn new(bins: Vec<HistogramBin>, meta: HistogramMeta) -> Result<Self> {
        meta.validate()?;
        if bins.len() < 2 {
            return Err(Error::InvalidInput("histogram needs at least two bins".into()));
        }
        if let Some(b) = bins.iter().find(|b| !b.delay_ns.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite delay {}", b.delay_ns)));
        }
        let width = (bins[bins.len() - 1].delay_ns - bins[0].delay_ns) / (bins.len() - 1) as f64;
        ensure(width > 0.0, "bin width", width, "delays strictly increasing")?;
        for (k, w) in bins.windows(2).enumerate() {
            let d = w[1].delay_ns - w[0].delay_ns;
            if !(d > 0.0) || (d - width).abs() > 0.01 * width {
                return Err(Error::InvalidInput(format!(
                    "delay grid must be uniform and increasing: step {d} ns at bin {k}, expected {width} ns"
                )));
            }
        }
        Ok(Self {
            bins,
            meta,
            bin_width_ns: width,
        })
    }

    pub fn bins(&self) -> &[HistogramBin] {
        &self.bins
    }

    pub fn meta(&self) -> &HistogramMeta {
        &self.meta
    }

    pub fn bin_width_ns(&self) -> f64 {
        self.bin_width_ns
    }

    pub fn total_counts(&self) -> u64 {
        self.bins.iter().map(|b| b.counts).sum()
    }

    /// Peak centres of the central bunch and the two neighbouring bunches:
    /// k·rep + {−sep, 0, +sep} for k ∈ {−1, 0, 1}.
    pub fn standard_centers(&self) -> Vec<f64> {
        let (rep, sep) = (self.meta.rep_period_ns, self.meta.pair_separation_ns);
        (-1..=1)
            .flat_map(|k| [-sep, 0.0, sep].map(|s| k as f64 * rep + s))
            .collect()
    }

    /// Counts within ±`half_width` of `center`.
    pub fn window_sum(&self, center: f64, half_width: f64) -> f64 {
        self.bins
            .iter()
            .filter(|b| (b.delay_ns - center).abs() <= half_width)
            .map(|b| b.counts as f64)
            .sum()
    }
}

/// Areas of the three central peaks (−sep, 0, +sep) and the mean integrated
/// area of the two neighbouring three-peak bunches.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PeakAreas {
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    pub side_bunch_mean: f64,
}

impl PeakAreas {
    pub fn central(&self) -> [f64; 3] {
        [self.a1, self.a2, self.a3]
    }

    fn from_centers(centers: &[f64], areas: &[f64], meta: &HistogramMeta) -> Self {
        let [a1, a2, a3] = central_values(centers, areas, meta, |a| a);
        let rep = meta.rep_period_ns;
        let bunch = |k: f64| -> (f64, usize) {
            let members: Vec<f64> = centers
                .iter()
                .zip(areas)
                .filter(|(c, _)| (**c - k * rep).abs() < 0.5 * rep)
                .map(|(_, a)| *a)
                .collect();
            (members.iter().sum(), members.len())
        };
        let sides: Vec<f64> = [-1.0, 1.0]
            .into_iter()
            .map(bunch)
            .filter(|(_, n)| *n > 0)
            .map(|(s, _)| s)
            .collect();
        let side_bunch_mean = if sides.is_empty() {
            0.0
        } else {
            sides.iter().sum::<f64>() / sides.len() as f64
        };
        Self {
            a1,
            a2,
            a3,
            side_bunch_mean,
        }
    }
}

/// Per central peak (−sep, 0, +sep): g⁻¹(Σ g(xᵢ)) over the matching centres.
fn central_values(centers: &[f64], values: &[f64], meta: &HistogramMeta, g: fn(f64) -> f64) -> [f64; 3] {
    let sep = meta.pair_separation_ns;
    [-sep, 0.0, sep].map(|target| {
        centers
            .iter()
            .zip(values)
            .filter(|(c, _)| (**c - target).abs() < 0.25 * sep)
            .map(|(_, v)| g(*v))
            .sum()
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PeakQuality {
    /// Joint two-sided-exponential fit converged.
    JointFit,
    /// Fit failed; areas are ±sep/2 windowed sums.
    WindowedFallback,
    /// Histogram holds no counts.
    Empty,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeakFit {
    pub areas: PeakAreas,
    pub centers_ns: Vec<f64>,
    pub peak_areas: Vec<f64>,
    pub peak_area_sigmas: Vec<f64>,
    /// 1σ of (A₁, A₂, A₃) from the fit covariance (√area for windowed sums).
    pub central_sigmas: [f64; 3],
    pub decay_ns: f64,
    pub decay_fixed: bool,
    pub converged: bool,
    pub quality: PeakQuality,
    pub reduced_chi_square: f64,
}

/// Integral of e^{−|t−c|/τ}/(2τ) over [lo, hi].
pub(crate) fn laplace_mass(lo: f64, hi: f64, c: f64, tau: f64) -> f64 {
    let cdf = |t: f64| {
        let x = (t - c) / tau;
        if x < 0.0 {
            0.5 * x.exp()
        } else {
            1.0 - 0.5 * (-x).exp()
        }
    };
    cdf(hi) - cdf(lo)
}

/// Joint fit of back-to-back exponential peaks at `centers` with a shared
/// decay (fixed to `decay_ns` when given), returning the analytic areas.
/// Falls back to windowed sums if the fit does not converge.
pub fn fit_peak_areas(hist: &CoincidenceHistogram, centers: &[f64], decay_ns: Option<f64>) -> Result<PeakFit> {
    if centers.is_empty() {
        return Err(Error::InvalidInput("no peak centres given".into()));
    }
    let meta = *hist.meta();
    let half_window = 0.5 * meta.pair_separation_ns;
    let (first, last) = (hist.bins[0].delay_ns, hist.bins[hist.bins.len() - 1].delay_ns);
    for &c in centers {
        ensure(
            c - 0.5 * meta.rep_period_ns >= first - hist.bin_width_ns && c + 0.5 * meta.rep_period_ns <= last + hist.bin_width_ns,
            "peak centre",
            c,
            "bins must cover centre +- rep_period/2",
        )?;
    }
    if let Some(d) = decay_ns {
        ensure(d > 0.0 && d.is_finite(), "decay_ns", d, "> 0")?;
    }

    let windowed: Vec<f64> = centers.iter().map(|&c| hist.window_sum(c, half_window)).collect();
    let fallback = |quality: PeakQuality, decay: f64| PeakFit {
        areas: PeakAreas::from_centers(centers, &windowed, &meta),
        centers_ns: centers.to_vec(),
        peak_areas: windowed.clone(),
        peak_area_sigmas: windowed.iter().map(|a| a.sqrt()).collect(),
        central_sigmas: central_values(centers, &windowed, &meta, |a| a).map(f64::sqrt),
        decay_ns: decay,
        decay_fixed: decay_ns.is_some(),
        converged: false,
        quality,
        reduced_chi_square: f64::NAN,
    };
    if hist.total_counts() == 0 {
        return Ok(fallback(PeakQuality::Empty, decay_ns.unwrap_or(0.0)));
    }

    let width = hist.bin_width_ns;
    let edges: Vec<(f64, f64, f64)> = hist
        .bins
        .iter()
        .map(|b| (b.delay_ns - 0.5 * width, b.delay_ns + 0.5 * width, b.counts as f64))
        .collect();
    let decay_init = decay_ns.unwrap_or_else(|| estimate_decay(hist, centers, &windowed));
    let n = centers.len();
    let model = |p: &[f64], lo: f64, hi: f64| -> f64 {
        let tau = decay_ns.unwrap_or_else(|| p[n]);
        centers
            .iter()
            .zip(p)
            .map(|(&c, &a)| a * laplace_mass(lo, hi, c, tau))
            .sum()
    };
    let residuals = |p: &[f64]| -> std::result::Result<Vec<f64>, ModelFailure> {
        Ok(edges
            .iter()
            .map(|&(lo, hi, y)| (y - model(p, lo, hi)) / y.max(1.0).sqrt())
            .collect())
    };

    let total = hist.total_counts() as f64;
    let mut init: Vec<f64> = windowed.iter().map(|a| a.max(1e-3 * total / n as f64)).collect();
    let mut lower = vec![0.0; n];
    let mut upper = vec![10.0 * total + 10.0; n];
    if decay_ns.is_none() {
        init.push(decay_init);
        lower.push(1e-3 * width);
        upper.push(meta.rep_period_ns);
    }
    let fit = match minimize(residuals, &init, &lower, &upper, &FitOptions::default()) {
        Ok(f) if f.converged && f.params.iter().all(|p| p.is_finite()) => f,
        _ => return Ok(fallback(PeakQuality::WindowedFallback, decay_init)),
    };
    let areas = fit.params[..n].to_vec();
    let dof = edges.len().saturating_sub(init.len()).max(1) as f64;
    Ok(PeakFit {
        areas: PeakAreas::from_centers(centers, &areas, &meta),
        centers_ns: centers.to_vec(),
        peak_area_sigmas: fit.uncertainties[..n].to_vec(),
        central_sigmas: central_values(centers, &fit.uncertainties[..n], &meta, |s| s * s).map(f64::sqrt),
        peak_areas: areas,
        decay_ns: decay_ns.unwrap_or(fit.params[n.min(fit.params.len() - 1)]),
        decay_fixed: decay_ns.is_some(),
        converged: true,
        quality: PeakQuality::JointFit,
        reduced_chi_square: fit.chi_square / dof,
    })
}

/// Area / (2 · peak density) of the strongest peak.
fn estimate_decay(hist: &CoincidenceHistogram, centers: &[f64], windowed: &[f64]) -> f64 {
    let (k, _) = windowed
        .iter()
        .enumerate()
        .fold((0, f64::MIN), |acc, (i, &a)| if a > acc.1 { (i, a) } else { acc });
    let c = centers[k];
    let peak = hist
        .bins
        .iter()
        .filter(|b| (b.delay_ns - c).abs() <= hist.bin_width_ns)
        .map(|b| b.counts as f64)
        .fold(0.0, f64::max);
    let guess = windowed[k] * hist.bin_width_ns / (2.0 * peak.max(1.0));
    guess.clamp(2.0 * hist.bin_width_ns, 0.5 * hist.meta.pair_separation_ns)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn planted(areas: &[f64], centers: &[f64], tau: f64, width: f64, span: f64) -> CoincidenceHistogram {
        let nbins = (2.0 * span / width).round() as usize;
        let bins = (0..nbins)
            .map(|k| {
                let t = -span + (k as f64 + 0.5) * width;
                let mean: f64 = centers
                    .iter()
                    .zip(areas)
                    .map(|(&c, &a)| a * laplace_mass(t - 0.5 * width, t + 0.5 * width, c, tau))
                    .sum();
                HistogramBin {
                    delay_ns: t,
                    counts: mean.round() as u64,
                }
            })
            .collect();
        CoincidenceHistogram::new(bins, HistogramMeta::default()).unwrap()
    }

    #[test]
    fn laplace_mass_normalised() {
        assert!((laplace_mass(-100.0, 100.0, 0.3, 1.1) - 1.0).abs() < 1e-15);
        assert!((laplace_mass(0.3, 100.0, 0.3, 1.1) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn isolated_peaks_match_windowed_sums() {
        let centers = [-12.2, 0.0, 12.2];
        let areas = [5.0e5, 3.0e5, 5.0e5];
        let h = planted(&areas, &centers, 0.1, 0.02, 20.0);
        let fit = fit_peak_areas(&h, &centers, None).unwrap();
        assert_eq!(fit.quality, PeakQuality::JointFit);
        for (k, &c) in centers.iter().enumerate() {
            let w = h.window_sum(c, 1.5);
            assert!((fit.peak_areas[k] / w - 1.0).abs() < 0.01);
        }
        assert!((fit.decay_ns - 0.1).abs() < 0.005);
    }

    #[test]
    fn overlapping_peaks_need_joint_fit() {
        let h0 = planted(&[1.0], &[0.0], 1.1, 0.05, 22.0);
        let centers = h0.standard_centers();
        let planted_areas: Vec<f64> = [1.0, 2.0, 1.0, 0.4, 0.2, 0.4, 1.0, 2.0, 1.0].iter().map(|a| a * 1e5).collect();
        let h = planted(&planted_areas, &centers, 1.1, 0.05, 22.0);
        let fit = fit_peak_areas(&h, &centers, None).unwrap();
        assert!(fit.converged);
        let mut worst_window = 0.0f64;
        for (k, &c) in centers.iter().enumerate() {
            assert!((fit.peak_areas[k] / planted_areas[k] - 1.0).abs() < 0.03, "{k}: {}", fit.peak_areas[k]);
            worst_window = worst_window.max((h.window_sum(c, 1.5) / planted_areas[k] - 1.0).abs());
        }
        assert!(worst_window > 0.10);
        assert!((fit.areas.a2 - 2.0e4).abs() < 0.03 * 2.0e4);
        assert!((fit.areas.side_bunch_mean - 4.0e5).abs() < 0.03 * 4.0e5);

        let fixed = fit_peak_areas(&h, &centers, Some(1.1)).unwrap();
        assert!(fixed.decay_fixed && fixed.decay_ns == 1.1);
        assert!((fixed.areas.a1 / 4.0e4 - 1.0).abs() < 0.03);
    }

    #[test]
    fn empty_histogram() {
        let bins = (0..880)
            .map(|k| HistogramBin {
                delay_ns: -22.0 + 0.05 * k as f64,
                counts: 0,
            })
            .collect();
        let h = CoincidenceHistogram::new(bins, HistogramMeta::default()).unwrap();
        let fit = fit_peak_areas(&h, &h.standard_centers(), None).unwrap();
        assert!(!fit.converged);
        assert_eq!(fit.quality, PeakQuality::Empty);
        assert_eq!(fit.areas, PeakAreas::default());
    }

    #[test]
    fn rejects_bad_grids_and_coverage() {
        let meta = HistogramMeta::default();
        let bins = vec![
            HistogramBin { delay_ns: 0.0, counts: 1 },
            HistogramBin { delay_ns: 1.0, counts: 1 },
            HistogramBin { delay_ns: 3.0, counts: 1 },
        ];
        assert!(CoincidenceHistogram::new(bins, meta).is_err());
        let bad_meta = HistogramMeta {
            rep_period_ns: 2.0,
            ..meta
        };
        assert!(bad_meta.validate().is_err());
        let h = planted(&[1e4], &[0.0], 1.0, 0.1, 5.0);
        assert!(fit_peak_areas(&h, &[0.0, 12.2], None).is_err());
    }
}
