//! Analysis of measured data: fringe-contrast fitting, coincidence-histogram
//! peak areas, HBT normalisation, HOM background correction and the TPI
//! visibility.

mod fringe;
pub(crate) mod histogram;
mod hom;

pub use fringe::{expected_visibility_ratio, fit_fringe_contrast, pseudo_voigt, FringeContrast, FringeFit, FringeSample};
pub use histogram::{
    fit_peak_areas, CoincidenceHistogram, HistogramBin, HistogramMeta, PeakAreas, PeakFit, PeakQuality,
};
pub use hom::{
    analyze_hom, g2_hbt, g2_hom, hom_background_correction, tpi_visibility, BackgroundCorrection, HomAnalysis,
    SetupImperfections, TpiVisibility,
};

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn areas() -> impl Strategy<Value = PeakAreas> {
        (0.0..1e5f64, 0.0..1e5f64, 0.0..1e5f64, 0.0..1e5f64).prop_map(|(a1, a2, a3, s)| PeakAreas {
            a1,
            a2,
            a3,
            side_bunch_mean: s,
        })
    }

    fn add(a: &PeakAreas, b: &PeakAreas) -> PeakAreas {
        PeakAreas {
            a1: a.a1 + b.a1,
            a2: a.a2 + b.a2,
            a3: a.a3 + b.a3,
            side_bunch_mean: a.side_bunch_mean + b.side_bunch_mean,
        }
    }

    proptest! {
        #[test]
        fn correction_is_linear(h1 in areas(), h2 in areas(), b1 in areas(), b2 in areas(), t in 0.1f64..10.0) {
            // Keep every term non-negative so flooring does not kick in.
            let scale = 2.0 * t;
            let lift = |h: &PeakAreas, b: &PeakAreas| PeakAreas {
                a1: h.a1 + scale * b.a1,
                a2: h.a2 + scale * b.a2,
                a3: h.a3 + scale * b.a3,
                side_bunch_mean: h.side_bunch_mean + scale * b.side_bunch_mean,
            };
            let (x1, x2) = (lift(&h1, &b1), lift(&h2, &b2));
            let sum = hom_background_correction(&add(&x1, &x2), &add(&b1, &b2), t, 1.0).unwrap().corrected;
            let c1 = hom_background_correction(&x1, &b1, t, 1.0).unwrap().corrected;
            let c2 = hom_background_correction(&x2, &b2, t, 1.0).unwrap().corrected;
            let parts = add(&c1, &c2);
            for (a, b) in sum.central().iter().zip(parts.central()) {
                prop_assert!((a - b).abs() <= 1e-9 * (1.0 + a.abs()));
            }
        }

        #[test]
        fn visibility_decreasing_and_factor_at_least_one(
            r in 0.3f64..0.7, dt in -0.01f64..0.01, c2 in 0.5f64..1.0, g in 0.0f64..0.99, dg in 0.001f64..0.5,
        ) {
            let s = SetupImperfections::new(r, 1.0 - r + dt, c2);
            prop_assume!(s.is_ok());
            let s = s.unwrap();
            let a = tpi_visibility(g, &s).unwrap();
            let b = tpi_visibility(g + dg, &s).unwrap();
            prop_assert!(b.unclamped < a.unclamped);
            prop_assert!(a.correction_factor >= 1.0);
        }
    }

    #[test]
    fn factor_is_one_only_for_ideal_setup() {
        assert_eq!(SetupImperfections::IDEAL.correction_factor(), 1.0);
        assert!(SetupImperfections::new(0.5, 0.5, 0.99).unwrap().correction_factor() > 1.0);
        assert!(SetupImperfections::new(0.49, 0.51, 1.0).unwrap().correction_factor() > 1.0);
    }
}
