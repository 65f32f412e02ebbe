//! Numerical models for probing the quantum vacuum with intense lasers.
//!
//! Two measurement concepts are covered. The first images a phase-contrast
//! signal: a probe pulse crosses a focused target pulse, picks up a tiny
//! Euler–Heisenberg phase shift, and the shift is read off in the focal plane
//! of a lens where the unperturbed probe collapses into a narrow pedestal.
//! The second estimates the yield of resonant photon-photon scattering
//! mediated by a light scalar or pseudoscalar field when a single beam is
//! focused onto itself.
//!
//! Length units follow the physics at each stage: interaction and focal
//! plane quantities are in micrometres, lens geometry in metres, energies and
//! masses in eV with natural units (ħ = c = 1) for the scattering amplitudes.

pub mod constants;
pub mod error;
pub mod export;
pub mod fourier_imaging;
pub mod gauss_integral;
pub mod gaussian_optics;
pub mod phase_reconstruction;
pub mod qed_vacuum;
pub mod quadrature;
pub mod resonance_search;

pub use error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
