//! Stability diagnostics on top of the generator and evolution.

pub mod decay;
pub mod multiplier;
pub mod spectrum;

pub use decay::{datko_check, decay_fit, DatkoReport, DecayFit};
pub use multiplier::{multiplier_report, LedgerAccumulator, MultiplierLedger};
pub use spectrum::{spectrum, spectrum_of, SpectrumReport};
