//! Fundamental-mode Gaussian beams and the lens-to-waist focusing relation.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{require_finite, require_positive, Error, Result};

/// Linear polarization state of a pulse.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Polarization {
    State1,
    State2,
}

/// Wavefront curvature radius. The waist plane is flat.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Curvature {
    Infinite,
    Finite(f64),
}

impl Curvature {
    /// 1/R, zero for a flat wavefront.
    pub fn inverse(self) -> f64 {
        match self {
            Curvature::Infinite => 0.0,
            Curvature::Finite(r) => 1.0 / r,
        }
    }
}

/// One laser pulse. Lengths in μm, energy in J, duration in fs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GaussianBeam {
    wavelength: f64,
    pulse_energy: f64,
    duration: f64,
    waist: f64,
    polarization: Polarization,
    rayleigh_length: f64,
}

impl GaussianBeam {
    /// Waists below one wavelength are accepted with a logged warning so
    /// parameter scans can cross the diffraction limit.
    pub fn new(
        wavelength_um: f64,
        pulse_energy_j: f64,
        duration_fs: f64,
        waist_um: f64,
        polarization: Polarization,
    ) -> Result<Self> {
        const OP: &str = "GaussianBeam::new";
        let wavelength = require_positive(OP, "wavelength", wavelength_um)?;
        let duration = require_positive(OP, "duration", duration_fs)?;
        let waist = require_positive(OP, "waist", waist_um)?;
        let pulse_energy = require_finite(OP, "pulse energy", pulse_energy_j)?;
        if pulse_energy < 0.0 {
            return Err(Error::domain(OP, "pulse energy must be non-negative"));
        }
        if waist < wavelength {
            log::warn!("waist {waist} um is below the diffraction limit (wavelength {wavelength} um)");
        }
        Ok(GaussianBeam {
            wavelength,
            pulse_energy,
            duration,
            waist,
            polarization,
            rayleigh_length: PI * waist * waist / wavelength,
        })
    }

    pub fn wavelength(&self) -> f64 {
        self.wavelength
    }
    pub fn pulse_energy(&self) -> f64 {
        self.pulse_energy
    }
    pub fn duration(&self) -> f64 {
        self.duration
    }
    pub fn waist(&self) -> f64 {
        self.waist
    }
    pub fn polarization(&self) -> Polarization {
        self.polarization
    }
    /// z_R = π w₀² / λ, μm.
    pub fn rayleigh_length(&self) -> f64 {
        self.rayleigh_length
    }
    pub fn wave_number(&self) -> f64 {
        2.0 * PI / self.wavelength
    }
    pub fn below_diffraction_limit(&self) -> bool {
        self.waist < self.wavelength
    }

    /// Pulse length c·τ in μm.
    pub fn optical_length(&self) -> f64 {
        crate::constants::SPEED_OF_LIGHT * self.duration * 1e-15 * 1e6
    }

    pub fn photon_count(&self) -> f64 {
        crate::constants::photons_in_pulse(self.pulse_energy, self.wavelength * 1e-6).unwrap_or(0.0)
    }

    /// Same pulse with the transverse profile magnified by `factor`.
    pub fn magnified(&self, factor: f64) -> Result<Self> {
        let f = require_positive("GaussianBeam::magnified", "magnification", factor)?;
        GaussianBeam::new(self.wavelength, self.pulse_energy, self.duration, self.waist * f, self.polarization)
    }

    pub fn waist_at(&self, z: f64) -> f64 {
        let s = z / self.rayleigh_length;
        self.waist * (1.0 + s * s).sqrt()
    }

    /// R(z) = z (1 + z_R²/z²).
    pub fn curvature(&self, z: f64) -> Curvature {
        if z == 0.0 {
            Curvature::Infinite
        } else {
            let s = self.rayleigh_length / z;
            Curvature::Finite(z * (1.0 + s * s))
        }
    }

    /// η(z) = atan(z / z_R).
    pub fn gouy_phase(&self, z: f64) -> f64 {
        (z / self.rayleigh_length).atan()
    }

    /// Complex field normalized to 1 at the focus centre:
    /// (w₀/w) exp{−i[kz − η] − r²(1/w² + ik/2R)}.
    pub fn field_amplitude(&self, x: f64, y: f64, z: f64) -> Complex64 {
        let w = self.waist_at(z);
        let r2 = x * x + y * y;
        let k = self.wave_number();
        let phase = -(k * z - self.gouy_phase(z)) - r2 * k * 0.5 * self.curvature(z).inverse();
        Complex64::from_polar((self.waist / w) * (-r2 / (w * w)).exp(), phase)
    }
}

/// Focusing of a collimated beam of diameter `d` by a lens of focal length `f`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FocusingSetup {
    /// m
    pub lens_diameter: f64,
    /// m
    pub focal_length: f64,
    /// μm
    pub wavelength: f64,
    /// m
    pub waist: f64,
    /// m
    pub rayleigh_length: f64,
    /// rad
    pub angular_uncertainty: f64,
    pub iterations: usize,
}

impl FocusingSetup {
    pub fn f_over_zr(&self) -> f64 {
        self.focal_length / self.rayleigh_length
    }
}

/// Solve the self-consistent waist of a focused beam.
///
/// With `u = w₀/(d/2)` and `z_R = πw₀²/λ`, the focusing relation
/// `w₀ = (d/2) s / √(1+s²)`, `s = f/z_R`, becomes the cubic
/// `v³ + K²v − K² = 0` in `v = u²` with `K = fλ / (π(d/2)²)`. It has exactly
/// one root in (0, 1), found by bracketed Newton iteration.
pub fn waist_from_lens(d_m: f64, f_m: f64, wavelength_um: f64) -> Result<FocusingSetup> {
    const OP: &str = "waist_from_lens";
    let d = require_positive(OP, "lens diameter", d_m)?;
    let f = require_positive(OP, "focal length", f_m)?;
    let lambda_um = require_positive(OP, "wavelength", wavelength_um)?;
    let lambda = lambda_um * 1e-6;
    let half = 0.5 * d;
    let k = f * lambda / (PI * half * half);
    let k2 = k * k;

    let g = |v: f64| v * v * v + k2 * v - k2;
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    let mut v = k.powf(2.0 / 3.0).min(0.5);
    let mut iterations = 0;
    for it in 1..=200 {
        iterations = it;
        let gv = g(v);
        if gv == 0.0 {
            break;
        }
        if gv > 0.0 {
            hi = v;
        } else {
            lo = v;
        }
        let step = gv / (3.0 * v * v + k2);
        let mut next = v - step;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - v).abs() <= 1e-16 * v {
            v = next;
            break;
        }
        v = next;
    }
    if !(v > 0.0 && v < 1.0) {
        return Err(Error::domain(OP, "no waist smaller than the lens radius"));
    }
    let waist = half * v.sqrt();
    let rayleigh_length = PI * waist * waist / lambda;
    Ok(FocusingSetup {
        lens_diameter: d,
        focal_length: f,
        wavelength: lambda_um,
        waist,
        rayleigh_length,
        angular_uncertainty: (lambda / waist).powi(2) / PI,
        iterations,
    })
}

/// Approximate waist (dfλ/2π)^{1/3} valid for f ≪ z_R, metres.
pub fn approximate_waist(d_m: f64, f_m: f64, wavelength_um: f64) -> f64 {
    (d_m * f_m * wavelength_um * 1e-6 / (2.0 * PI)).cbrt()
}
