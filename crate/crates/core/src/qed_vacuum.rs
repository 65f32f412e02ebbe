//! Euler–Heisenberg vacuum response: refractive index shift, the phase a
//! probe picks up crossing a target pulse, photon-photon cross sections and
//! the residual-gas plasma background.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::constants::{BOLTZMANN, CODATA2018};
use crate::error::{require_finite, require_positive, Error, Result};
use crate::gaussian_optics::GaussianBeam;

/// Relative polarization of probe and target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolarizationCombo {
    Parallel,
    Perpendicular,
}

impl PolarizationCombo {
    /// ζ = 4 (parallel) or 7 (perpendicular).
    pub fn zeta(self) -> f64 {
        match self {
            PolarizationCombo::Parallel => 4.0,
            PolarizationCombo::Perpendicular => 7.0,
        }
    }

    pub fn of(probe: &GaussianBeam, target: &GaussianBeam) -> Self {
        if probe.polarization() == target.polarization() {
            PolarizationCombo::Parallel
        } else {
            PolarizationCombo::Perpendicular
        }
    }
}

/// N₀ = (2/45) α² ħ³/(m_e⁴ c⁵) expressed as (2/45) α² / U_c, in μm³/J.
pub fn n0_constant() -> f64 {
    let c = CODATA2018;
    2.0 / 45.0 * c.fine_structure_alpha * c.fine_structure_alpha / c.compton_energy_density * 1e18
}

fn one_minus_cos(theta: f64) -> f64 {
    let s = (0.5 * theta).sin();
    2.0 * s * s
}

fn check_angle(op: &'static str, theta: f64) -> Result<f64> {
    require_finite(op, "crossing angle", theta)?;
    if !(0.0..=PI).contains(&theta) {
        return Err(Error::domain(op, format!("crossing angle must lie in [0, π], got {theta}")));
    }
    Ok(theta)
}

/// Vacuum response at a given field energy density.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VacuumResponse {
    pub combo: PolarizationCombo,
    /// z_k/k², J/μm³
    pub energy_density: f64,
    /// 1 − v/c
    pub refractive_shift: f64,
}

impl VacuumResponse {
    pub fn from_energy_density(combo: PolarizationCombo, energy_density: f64) -> Result<Self> {
        let u = require_finite("VacuumResponse::from_energy_density", "energy density", energy_density)?;
        if u < 0.0 {
            return Err(Error::domain("VacuumResponse::from_energy_density", "energy density must be non-negative"));
        }
        Ok(VacuumResponse {
            combo,
            energy_density: u,
            refractive_shift: combo.zeta() * n0_constant() * u,
        })
    }

    /// v/c
    pub fn phase_velocity(&self) -> f64 {
        1.0 - self.refractive_shift
    }
}

/// z_k/k² = ε² (1 + k̂·n̂)² for a field of energy density ε² and direction cosine k̂·n̂.
pub fn zk_over_k2(energy_density: f64, k_dot_n: f64) -> f64 {
    energy_density * (1.0 + k_dot_n).powi(2)
}

/// δn = ζ N₀ (1 − cos θ) E_t / (π w₀t² c τ_t).
pub fn refractive_shift(
    combo: PolarizationCombo,
    theta: f64,
    energy_j: f64,
    waist_um: f64,
    duration_fs: f64,
) -> Result<f64> {
    const OP: &str = "refractive_shift";
    let theta = check_angle(OP, theta)?;
    let w = require_positive(OP, "target waist", waist_um)?;
    let tau = require_positive(OP, "target duration", duration_fs)?;
    let e = require_finite(OP, "target energy", energy_j)?;
    if e < 0.0 {
        return Err(Error::domain(OP, "target energy must be non-negative"));
    }
    let c_tau_um = crate::constants::SPEED_OF_LIGHT * tau * 1e-9;
    Ok(combo.zeta() * n0_constant() * one_minus_cos(theta) * e / (PI * w * w * c_tau_um))
}

/// Embedded phase δ = (2π/λ_p) ζ N₀ (1 − cos θ) E_t/(π w₀t²) · weight.
///
/// The optical length c τ_t of the overlap cancels against the energy density,
/// so no duration enters.
pub fn phase_shift(
    probe_wavelength_um: f64,
    combo: PolarizationCombo,
    theta: f64,
    energy_j: f64,
    waist_um: f64,
    weight: f64,
) -> Result<f64> {
    const OP: &str = "phase_shift";
    let lambda = require_positive(OP, "probe wavelength", probe_wavelength_um)?;
    let theta = check_angle(OP, theta)?;
    let w = require_positive(OP, "target waist", waist_um)?;
    let e = require_finite(OP, "target energy", energy_j)?;
    if e < 0.0 {
        return Err(Error::domain(OP, "target energy must be non-negative"));
    }
    if !(0.0..=1.0).contains(&weight) {
        return Err(Error::domain(OP, format!("weight must lie in [0, 1], got {weight}")));
    }
    Ok(2.0 * PI / lambda * combo.zeta() * n0_constant() * one_minus_cos(theta) * e / (PI * w * w) * weight)
}

/// Transverse weight φ_t over the probe cross section.
#[derive(Debug, Clone, Copy)]
pub enum TransverseWeight {
    Uniform,
    Custom(fn(f64, f64) -> f64),
}

impl TransverseWeight {
    pub fn at(&self, x: f64, y: f64) -> f64 {
        match self {
            TransverseWeight::Uniform => 1.0,
            TransverseWeight::Custom(f) => f(x, y).clamp(0.0, 1.0),
        }
    }
}

/// Probe crossing a target pulse at angle θ.
#[derive(Debug, Clone, Copy)]
pub struct CrossingGeometry {
    pub theta: f64,
    pub target: GaussianBeam,
    pub probe: GaussianBeam,
    pub weight: TransverseWeight,
}

impl CrossingGeometry {
    pub fn new(theta: f64, target: GaussianBeam, probe: GaussianBeam) -> Result<Self> {
        check_angle("CrossingGeometry::new", theta)?;
        Ok(CrossingGeometry {
            theta,
            target,
            probe,
            weight: TransverseWeight::Uniform,
        })
    }

    pub fn with_weight(mut self, weight: TransverseWeight) -> Self {
        self.weight = weight;
        self
    }

    pub fn combo(&self) -> PolarizationCombo {
        PolarizationCombo::of(&self.probe, &self.target)
    }

    /// c τ_t < z_Rt and τ_t < τ_p.
    pub fn within_validity_window(&self) -> bool {
        self.target.optical_length() < self.target.rayleigh_length() && self.target.duration() < self.probe.duration()
    }

    pub fn refractive_shift(&self) -> Result<f64> {
        refractive_shift(
            self.combo(),
            self.theta,
            self.target.pulse_energy(),
            self.target.waist(),
            self.target.duration(),
        )
    }

    pub fn phase_shift_at(&self, x: f64, y: f64) -> Result<f64> {
        phase_shift(
            self.probe.wavelength(),
            self.combo(),
            self.theta,
            self.target.pulse_energy(),
            self.target.waist(),
            self.weight.at(x, y),
        )
    }
}

/// Low-energy elastic photon-photon cross section in barn,
/// (973/10125π) α² r_e² (ω/m_e)⁶ for centre-of-mass photon energy ω in eV.
pub fn qed_elastic_cross_section(omega_ev: f64) -> Result<f64> {
    let w = require_positive("qed_elastic_cross_section", "photon energy", omega_ev)?;
    let c = CODATA2018;
    let re = c.classical_electron_radius;
    let ratio = w / c.electron_rest_energy;
    let sigma_cm2 = 973.0 / (10125.0 * PI) * c.fine_structure_alpha.powi(2) * re * re * ratio.powi(6);
    Ok(sigma_cm2 * 1e24)
}

/// Forward QED scattering scale (α²/m_e⁴)² ω⁶ ϑ⁴ in eV⁻².
pub fn qed_forward_background(omega_ev: f64, vartheta: f64) -> Result<f64> {
    const OP: &str = "qed_forward_background";
    let w = require_positive(OP, "photon energy", omega_ev)?;
    require_finite(OP, "angle", vartheta)?;
    if vartheta < 0.0 {
        return Err(Error::domain(OP, "angle must be non-negative"));
    }
    let c = CODATA2018;
    let k = c.fine_structure_alpha.powi(2) / c.electron_rest_energy.powi(4);
    Ok(k * k * w.powi(6) * vartheta.powi(4))
}

/// Electron density of a residual gas, ideal gas law with Z_eff electrons per molecule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlasmaModel {
    pub temperature_k: f64,
    pub z_eff: f64,
}

impl Default for PlasmaModel {
    fn default() -> Self {
        PlasmaModel {
            temperature_k: 300.0,
            z_eff: 1.0,
        }
    }
}

impl PlasmaModel {
    /// n_e in cm⁻³.
    pub fn electron_density(&self, pressure_pa: f64) -> Result<f64> {
        const OP: &str = "PlasmaModel::electron_density";
        require_finite(OP, "pressure", pressure_pa)?;
        if pressure_pa < 0.0 {
            return Err(Error::domain(OP, "pressure must be non-negative"));
        }
        let t = require_positive(OP, "temperature", self.temperature_k)?;
        Ok(pressure_pa / (BOLTZMANN * t) * 1e-6 * self.z_eff)
    }
}

/// n_cr = 1.12e21 / λ² cm⁻³ (λ in μm).
pub fn critical_density(wavelength_um: f64) -> f64 {
    1.12e21 / (wavelength_um * wavelength_um)
}

/// a₀ = 0.85e-9 λ √I (λ in μm, I in W/cm²).
pub fn normalized_vector_potential(wavelength_um: f64, intensity_w_cm2: f64) -> f64 {
    0.85e-9 * wavelength_um * intensity_w_cm2.sqrt()
}

fn plasma_ratio(op: &'static str, n_e: f64, wavelength_um: f64, intensity: Option<f64>) -> Result<f64> {
    require_finite(op, "electron density", n_e)?;
    if n_e < 0.0 {
        return Err(Error::domain(op, "electron density must be non-negative"));
    }
    let lambda = require_positive(op, "wavelength", wavelength_um)?;
    let gamma = match intensity {
        Some(i) => {
            require_finite(op, "intensity", i)?;
            if i < 0.0 {
                return Err(Error::domain(op, "intensity must be non-negative"));
            }
            let a0 = normalized_vector_potential(lambda, i);
            (1.0 + a0 * a0).sqrt()
        }
        None => 1.0,
    };
    let x = n_e / (gamma * critical_density(lambda));
    if x > 1.0 {
        return Err(Error::domain(op, format!("electron density exceeds γ·n_cr (ratio {x}); wave is evanescent")));
    }
    Ok(x)
}

/// N = √(1 − ω_p²/(γω₀²)). γ = 1 unless an intensity in W/cm² is supplied.
pub fn plasma_refractive_index(n_e_cm3: f64, wavelength_um: f64, intensity_w_cm2: Option<f64>) -> Result<f64> {
    let x = plasma_ratio("plasma_refractive_index", n_e_cm3, wavelength_um, intensity_w_cm2)?;
    Ok((1.0 - x).sqrt())
}

/// 1 − N, evaluated without cancellation.
pub fn plasma_index_shift(n_e_cm3: f64, wavelength_um: f64, intensity_w_cm2: Option<f64>) -> Result<f64> {
    let x = plasma_ratio("plasma_index_shift", n_e_cm3, wavelength_um, intensity_w_cm2)?;
    Ok(x / (1.0 + (1.0 - x).sqrt()))
}
