//! Hong-Ou-Mandel coincidence dips through dispersive, lossy samples.
//!
//! Modules:
//!
//! - [`spectral`]: units, quadrature grids, Gaussian joint spectral amplitude
//! - [`elements`]: complex transmission functions (waveplate + polariser,
//!   Lorentz oscillator, super-Gaussian band-pass, tabulated data)
//! - [`engine`]: coincidence rate R_c(τ), closed form, accidental background
//! - [`analysis`]: visibility, dip position, shift, asymmetry, θ sweeps
//! - [`inversion`]: Lorentz fits and dephasing-time extraction
//! - [`scenario`], [`commands`], [`plot`], [`cli`]: config files, runs that
//!   write CSV/SVG/manifest, and the `homdip` front end

pub mod analysis;
pub mod cli;
pub mod commands;
pub mod elements;
pub mod engine;
pub mod error;
pub mod inversion;
pub mod plot;
pub mod scenario;
pub mod spectral;

pub use error::{Error, Result};
