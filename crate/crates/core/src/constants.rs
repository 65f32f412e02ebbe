//! Physical constants (CODATA 2018) and the handful of unit conversions the
//! pipelines need.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{require_finite, require_positive, Error, Result};

/// Speed of light in vacuum, m/s (exact).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
/// Joules per electronvolt (exact).
pub const JOULE_PER_EV: f64 = 1.602_176_634e-19;
/// Boltzmann constant, J/K (exact).
pub const BOLTZMANN: f64 = 1.380_649e-23;
/// Reduced Planck constant, eV·s.
pub const HBAR_EV_S: f64 = 6.582_119_569e-16;
/// ħc, eV·m.
pub const HBAR_C_EV_M: f64 = 197.326_980_4e-9;
/// Fine-structure constant.
pub const ALPHA: f64 = 7.297_352_569_3e-3;
/// Electron rest energy, eV.
pub const ELECTRON_REST_ENERGY_EV: f64 = 0.510_998_950_00e6;
/// Reduced Planck mass, eV.
pub const REDUCED_PLANCK_MASS_EV: f64 = 2.435_323e27;
/// One barn in m².
pub const BARN_M2: f64 = 1e-28;

/// Immutable bundle of the constants used across the crate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhysicalConstants {
    pub fine_structure_alpha: f64,
    /// eV
    pub electron_rest_energy: f64,
    /// cm
    pub classical_electron_radius: f64,
    /// eV·m
    pub hbar_c: f64,
    /// m/s
    pub speed_of_light: f64,
    /// Reduced Planck mass, eV.
    pub planck_mass: f64,
    /// m_e c² divided by the cube of the reduced Compton wavelength, J/m³.
    pub compton_energy_density: f64,
}

impl PhysicalConstants {
    pub const fn codata2018() -> Self {
        let compton_wavelength = HBAR_C_EV_M / ELECTRON_REST_ENERGY_EV;
        PhysicalConstants {
            fine_structure_alpha: ALPHA,
            electron_rest_energy: ELECTRON_REST_ENERGY_EV,
            classical_electron_radius: ALPHA * compton_wavelength * 100.0,
            hbar_c: HBAR_C_EV_M,
            speed_of_light: SPEED_OF_LIGHT,
            planck_mass: REDUCED_PLANCK_MASS_EV,
            compton_energy_density: ELECTRON_REST_ENERGY_EV * JOULE_PER_EV
                / (compton_wavelength * compton_wavelength * compton_wavelength),
        }
    }
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self::codata2018()
    }
}

pub const CODATA2018: PhysicalConstants = PhysicalConstants::codata2018();

/// Photon energy in eV for a vacuum wavelength in metres.
pub fn photon_energy_from_wavelength(wavelength_m: f64) -> Result<f64> {
    if wavelength_m.is_infinite() && wavelength_m > 0.0 {
        return Ok(0.0);
    }
    let lambda = require_positive("photon_energy_from_wavelength", "wavelength", wavelength_m)?;
    Ok(2.0 * std::f64::consts::PI * HBAR_C_EV_M / lambda)
}

/// Vacuum wavelength in metres of a photon with the given energy in eV.
pub fn wavelength_from_photon_energy(energy_ev: f64) -> Result<f64> {
    let e = require_positive("wavelength_from_photon_energy", "photon energy", energy_ev)?;
    Ok(2.0 * std::f64::consts::PI * HBAR_C_EV_M / e)
}

/// Number of photons carried by a pulse of `energy_j` joules at `wavelength_m`.
pub fn photons_in_pulse(energy_j: f64, wavelength_m: f64) -> Result<f64> {
    require_finite("photons_in_pulse", "pulse energy", energy_j)?;
    if energy_j < 0.0 {
        return Err(Error::domain("photons_in_pulse", "pulse energy must be non-negative"));
    }
    let e = photon_energy_from_wavelength(wavelength_m)?;
    Ok(energy_j / (e * JOULE_PER_EV))
}

/// Physical dimension of a quantity expressed in natural units (ħ = c = 1).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Dimension {
    /// eV ↔ J
    Energy,
    /// eV⁻¹ ↔ m
    Length,
    /// eV⁻¹ ↔ s
    Time,
    /// eV⁻² ↔ m²
    CrossSection,
}

impl Dimension {
    fn si_factor(self) -> f64 {
        match self {
            Dimension::Energy => JOULE_PER_EV,
            Dimension::Length => HBAR_C_EV_M,
            Dimension::Time => HBAR_EV_S,
            Dimension::CrossSection => HBAR_C_EV_M * HBAR_C_EV_M,
        }
    }

    pub fn si_unit(self) -> &'static str {
        match self {
            Dimension::Energy => "J",
            Dimension::Length => "m",
            Dimension::Time => "s",
            Dimension::CrossSection => "m^2",
        }
    }
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Dimension::Energy => "energy",
            Dimension::Length => "length",
            Dimension::Time => "time",
            Dimension::CrossSection => "cross-section",
        };
        f.write_str(s)
    }
}

impl FromStr for Dimension {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "energy" => Ok(Dimension::Energy),
            "length" => Ok(Dimension::Length),
            "time" => Ok(Dimension::Time),
            "cross-section" | "crosssection" | "area" => Ok(Dimension::CrossSection),
            other => Err(Error::domain(
                "natural_to_si",
                format!("unknown dimension `{other}` (expected energy, length, time or cross-section)"),
            )),
        }
    }
}

/// Convert a natural-unit value (eV, eV⁻¹ or eV⁻²) to SI.
pub fn natural_to_si(value: f64, dimension: Dimension) -> f64 {
    value * dimension.si_factor()
}

/// Inverse of [`natural_to_si`].
pub fn si_to_natural(value: f64, dimension: Dimension) -> f64 {
    value / dimension.si_factor()
}

/// eV⁻² to barn.
pub fn inverse_ev2_to_barn(value: f64) -> f64 {
    natural_to_si(value, Dimension::CrossSection) / BARN_M2
}
