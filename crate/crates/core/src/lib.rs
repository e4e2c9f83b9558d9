//! Spectral and timing simulator for cavity-enhanced SPDC photon-pair sources.
//!
//! The crate models a doubly-resonant type-II parametric oscillator operated far
//! below threshold: crystal dispersion and quasi-phase-matching ([`dispersion`]),
//! the bow-tie resonator ([`cavity`]), the joint spectral intensity and its
//! cluster structure ([`spectrum`]), a temperature-tuned Fabry-Perot mode
//! filter ([`filter`]), signal-idler timing correlations ([`correlation`]),
//! rubidium vapour spectroscopy of the output ([`rb`]) and the laser/AOM
//! frequency chain that places signal and idler on atomic lines ([`plan`]).
//!
//! [`config`] and [`run`] tie the pieces to the command-line front end.

pub mod cavity;
pub mod config;
pub mod consts;
pub mod correlation;
pub mod csvio;
pub mod dispersion;
pub mod error;
pub mod filter;
pub mod plan;
pub mod rb;
pub mod run;
pub mod spectrum;

pub use error::{Error, Result};
