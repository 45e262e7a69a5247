//! Stability and quadratic-performance certificates for linear discrete-time
//! impulsive systems, plus synthesis of non-impulsive estimators.
//!
//! The crate is organised bottom-up:
//!
//! * [`matcore`] dense helpers for assembling LMIs,
//! * [`model`] system forms and conversions,
//! * [`dwell`] dwell-time classes, clocks and admissible impulse paths,
//! * [`iqcfilter`] IQC outer filters and the augmented/auxiliary systems,
//! * [`sdp`] the LMI program layer and its interior-point backend,
//! * [`analysis`] the certificate tests,
//! * [`synthesis`] estimator synthesis,
//! * [`sim`] simulation and empirical checks,
//! * [`catalog`] reference systems and disturbance signals,
//! * [`reproduce`] reproduction targets with pass/fail summaries,
//! * [`cli`] the command-line front end.

pub mod analysis;
pub mod catalog;
pub mod cli;
pub mod dwell;
mod error;
pub mod iqcfilter;
pub mod matcore;
pub mod model;
pub mod reproduce;
pub mod sdp;
pub mod sim;
pub mod synthesis;

pub use error::{Error, Result};
