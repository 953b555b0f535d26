//! Phonon-limited coherence of resonantly driven quantum-dot single-photon
//! sources.
//!
//! The crate covers the whole chain from the phonon spectral density to the
//! two-photon-interference indistinguishability, together with the analysis
//! of measured data (fringe contrast, coincidence histograms, HOM visibility)
//! and a temperature-sweep fitter for the phonon parameters.
//!
//! Units: ħ = 1, frequencies and rates in ps⁻¹, times in ps, temperatures in
//! kelvin. Coincidence histograms use ns on the delay axis, as recorded.

pub mod emitter;
mod error;
pub mod experiment;
pub mod io;
pub mod numerics;
pub mod phonon;
pub mod synthetic;
pub mod tempfit;

pub use emitter::{CavityFilter, EmissionModel, EmitterParams};
pub use error::{Error, Result};
pub use phonon::{PhononParams, SidebandWeight, SpectrumMode, Temperature, K_B_OVER_HBAR, MEV_TO_PS_INV};
