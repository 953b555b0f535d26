use serde::{Deserialize, Serialize};

use super::histogram::{fit_peak_areas, CoincidenceHistogram, PeakAreas, PeakFit, PeakQuality};
use crate::error::{ensure, Error, Result};

/// g²_HBT = (A₁ + A₂ + A₃) / side-bunch mean.
pub fn g2_hbt(a: &PeakAreas) -> Result<f64> {
    if !(a.side_bunch_mean > 0.0) {
        return Err(Error::InvalidInput(
            "side-bunch area is zero: g2_HBT is undefined".into(),
        ));
    }
    Ok((a.a1 + a.a2 + a.a3) / a.side_bunch_mean)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BackgroundCorrection {
    pub corrected: PeakAreas,
    /// 2·t_HOM/t_HBT.
    pub scale: f64,
    /// Some corrected area was negative and floored at 0.
    pub clipped: bool,
    /// Some corrected area is negative by more than 3σ of counting noise.
    pub inconsistent: bool,
}

/// Bᵢ = Aᵢ^HOM − 2 (t_HOM/t_HBT) Aᵢ^HBT, elementwise, floored at 0.
pub fn hom_background_correction(
    a_hom: &PeakAreas,
    a_hbt: &PeakAreas,
    t_hom_s: f64,
    t_hbt_s: f64,
) -> Result<BackgroundCorrection> {
    ensure(t_hom_s > 0.0 && t_hom_s.is_finite(), "t_hom", t_hom_s, "t_hom > 0")?;
    ensure(t_hbt_s > 0.0 && t_hbt_s.is_finite(), "t_hbt", t_hbt_s, "t_hbt > 0")?;
    let scale = 2.0 * t_hom_s / t_hbt_s;
    let mut clipped = false;
    let mut inconsistent = false;
    let mut fix = |hom: f64, hbt: f64| {
        let b = hom - scale * hbt;
        if b < 0.0 {
            clipped = true;
            let sigma = (hom.max(0.0) + scale * scale * hbt.max(0.0)).sqrt().max(1.0);
            if b < -3.0 * sigma {
                inconsistent = true;
            }
            0.0
        } else {
            b
        }
    };
    let corrected = PeakAreas {
        a1: fix(a_hom.a1, a_hbt.a1),
        a2: fix(a_hom.a2, a_hbt.a2),
        a3: fix(a_hom.a3, a_hbt.a3),
        side_bunch_mean: fix(a_hom.side_bunch_mean, a_hbt.side_bunch_mean),
    };
    Ok(BackgroundCorrection {
        corrected,
        scale,
        clipped,
        inconsistent,
    })
}

/// g²_HOM = B₂ / (B₁ + B₃).
pub fn g2_hom(b: &PeakAreas) -> Result<f64> {
    let den = b.a1 + b.a3;
    if !(den > 0.0) {
        return Err(Error::InvalidInput("B1 + B3 is zero: g2_HOM is undefined".into()));
    }
    Ok(b.a2 / den)
}

/// Beamsplitter reflectance/transmittance and interferometer contrast².
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SetupImperfections {
    pub r: f64,
    pub t: f64,
    pub c2: f64,
}

impl SetupImperfections {
    pub const IDEAL: Self = Self { r: 0.5, t: 0.5, c2: 1.0 };

    pub fn new(r: f64, t: f64, c2: f64) -> Result<Self> {
        let s = Self { r, t, c2 };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        ensure(self.r > 0.0 && self.r < 1.0, "R", self.r, "0 < R < 1")?;
        ensure(self.t > 0.0 && self.t < 1.0, "T", self.t, "0 < T < 1")?;
        ensure((self.r + self.t - 1.0).abs() <= 0.01 + 1e-12, "R + T", self.r + self.t, "R + T = 1 within 0.01")?;
        ensure(self.c2 > 0.0 && self.c2 <= 1.0, "C2", self.c2, "0 < C2 <= 1")
    }

    /// (R² + T²) / (2 R T C²).
    pub fn correction_factor(&self) -> f64 {
        (self.r * self.r + self.t * self.t) / (2.0 * self.r * self.t * self.c2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TpiVisibility {
    /// Reported value, clamped to [0, 1].
    pub value: f64,
    pub unclamped: f64,
    pub correction_factor: f64,
    pub clamped: bool,
}

/// V = (R² + T²)/(2RTC²) · (1 − g²_HOM).
pub fn tpi_visibility(g2hom: f64, setup: &SetupImperfections) -> Result<TpiVisibility> {
    ensure(g2hom >= 0.0 && g2hom.is_finite(), "g2_hom", g2hom, "g2_hom >= 0")?;
    setup.validate()?;
    let factor = setup.correction_factor();
    let v = factor * (1.0 - g2hom);
    Ok(TpiVisibility {
        value: v.clamp(0.0, 1.0),
        unclamped: v,
        correction_factor: factor,
        clamped: !(0.0..=1.0).contains(&v),
    })
}

/// Full HBT + HOM analysis of two histograms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HomAnalysis {
    pub hbt: PeakFit,
    pub hom: PeakFit,
    pub correction: BackgroundCorrection,
    pub g2_hbt: f64,
    pub g2_hom: f64,
    pub g2_hom_sigma: f64,
    pub visibility: TpiVisibility,
    pub visibility_sigma: f64,
    /// At least one peak fit fell back to windowed sums.
    pub degraded: bool,
}

pub fn analyze_hom(
    hbt: &CoincidenceHistogram,
    hom: &CoincidenceHistogram,
    setup: &SetupImperfections,
    decay_ns: Option<f64>,
) -> Result<HomAnalysis> {
    let hbt_fit = fit_peak_areas(hbt, &hbt.standard_centers(), decay_ns)?;
    let hom_fit = fit_peak_areas(hom, &hom.standard_centers(), decay_ns)?;
    let g2_hbt = g2_hbt(&hbt_fit.areas)?;
    let correction = hom_background_correction(
        &hom_fit.areas,
        &hbt_fit.areas,
        hom.meta().acquisition_time_s,
        hbt.meta().acquisition_time_s,
    )?;
    let b = correction.corrected;
    let g2 = g2_hom(&b)?;

    // var(Bᵢ) = σᵢ(HOM)² + s² σᵢ(HBT)², σ from the peak-fit covariance.
    let s = correction.scale;
    let (h, r) = (hom_fit.central_sigmas, hbt_fit.central_sigmas);
    let var: Vec<f64> = (0..3).map(|i| h[i] * h[i] + s * s * r[i] * r[i]).collect();
    let den = b.a1 + b.a3;
    let g2_sigma = (var[1] + g2 * g2 * (var[0] + var[2])).sqrt() / den;

    let visibility = tpi_visibility(g2, setup)?;
    Ok(HomAnalysis {
        degraded: hbt_fit.quality != PeakQuality::JointFit || hom_fit.quality != PeakQuality::JointFit,
        hbt: hbt_fit,
        hom: hom_fit,
        correction,
        g2_hbt,
        g2_hom: g2,
        g2_hom_sigma: g2_sigma,
        visibility_sigma: visibility.correction_factor * g2_sigma,
        visibility,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn areas(a1: f64, a2: f64, a3: f64, side: f64) -> PeakAreas {
        PeakAreas {
            a1,
            a2,
            a3,
            side_bunch_mean: side,
        }
    }

    #[test]
    fn g2_hbt_limits() {
        assert_eq!(g2_hbt(&areas(0.0, 0.0, 0.0, 10.0)).unwrap(), 0.0);
        assert_eq!(g2_hbt(&areas(1.0, 2.0, 1.0, 4.0)).unwrap(), 1.0);
        assert!(g2_hbt(&areas(1.0, 2.0, 1.0, 0.0)).is_err());
    }

    #[test]
    fn background_correction_limits() {
        let hom = areas(100.0, 30.0, 100.0, 400.0);
        let c = hom_background_correction(&hom, &PeakAreas::default(), 10.0, 20.0).unwrap();
        assert_eq!(c.corrected, hom);
        assert!(!c.clipped);

        let half = areas(50.0, 15.0, 50.0, 200.0);
        let c = hom_background_correction(&hom, &half, 7.0, 7.0).unwrap();
        assert_eq!(c.corrected, PeakAreas::default());

        let c = hom_background_correction(&areas(10.0, 10.0, 10.0, 10.0), &areas(100.0, 0.0, 0.0, 0.0), 1.0, 1.0).unwrap();
        assert!(c.clipped && c.inconsistent);
        assert_eq!(c.corrected.a1, 0.0);
        let c = hom_background_correction(&areas(10.0, 10.0, 10.0, 10.0), &areas(5.5, 0.0, 0.0, 0.0), 1.0, 1.0).unwrap();
        assert!(c.clipped && !c.inconsistent);
        assert!(hom_background_correction(&hom, &half, 0.0, 1.0).is_err());
    }

    #[test]
    fn g2_hom_limits() {
        assert_eq!(g2_hom(&areas(3.0, 0.0, 3.0, 0.0)).unwrap(), 0.0);
        assert_eq!(g2_hom(&areas(3.0, 3.0, 3.0, 0.0)).unwrap(), 0.5);
        assert!(g2_hom(&areas(0.0, 1.0, 0.0, 0.0)).is_err());
    }

    #[test]
    fn visibility_values() {
        let v = tpi_visibility(0.0, &SetupImperfections::IDEAL).unwrap();
        assert_eq!(v.value, 1.0);
        assert!(!v.clamped);
        let measured = SetupImperfections::new(0.430, 0.570, 0.98).unwrap();
        assert_eq!(tpi_visibility(1.0, &measured).unwrap().value, 0.0);
        assert!((measured.correction_factor() - 1.061).abs() < 0.005);
        let g = 1.0 - 0.79 / measured.correction_factor();
        assert!((g - 0.256).abs() < 0.002);
        let v = tpi_visibility(0.0, &measured).unwrap();
        assert!(v.clamped && v.value == 1.0 && v.unclamped > 1.0);
        assert!(SetupImperfections::new(0.43, 0.55, 0.98).is_err());
        assert!(SetupImperfections::new(0.5, 0.5, 0.0).is_err());
    }
}
