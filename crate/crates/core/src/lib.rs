//! Simulation and bit-error analysis for the Flip-KLJN noise-driven key
//! exchange and its classical KLJN baseline.
//!
//! The crate is organised bottom-up:
//!
//! * [`noise`] — Johnson-noise levels of the loop, shared wire samples,
//!   measurement noise and the mean-of-squares variance estimator.
//! * [`protocol`] — bit/resistor mapping, the per-party decision trees,
//!   the four detectors and the two-party state machine.
//! * [`analytics`] — closed-form error chain built on the Gaussian tail
//!   function, plus an exact chi-square tail for checking it.
//! * [`optimizer`] — grid-plus-refinement threshold search.
//! * [`harness`] — sharded Monte Carlo runs, eavesdropper models and
//!   aggregated reports.

pub mod analytics;
pub mod error;
pub mod harness;
pub mod noise;
pub mod optimizer;
pub mod protocol;
pub mod rng;

pub use error::{Error, Result};
