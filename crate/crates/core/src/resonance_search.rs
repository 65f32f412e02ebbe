//! Resonant photon-photon scattering through a light scalar or pseudoscalar
//! in a quasi-parallel collision, and the sensitivity of a one-beam focusing
//! setup.
//!
//! Energies, masses and amplitudes are in natural units (eV); the luminosity
//! chain and yields are in SI (metres) with ħc converting cross sections.

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::constants::{wavelength_from_photon_energy, HBAR_C_EV_M, SPEED_OF_LIGHT};
use crate::error::{require_finite, require_positive, Error, Result};
use crate::gaussian_optics::{approximate_waist, waist_from_lens};
use crate::quadrature::{integrate_adaptive, AdaptiveOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldKind {
    Scalar,
    Pseudoscalar,
}

/// Exchanged field with coupling `g/M` to two photons.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LightField {
    pub kind: FieldKind,
    /// eV
    pub mass: f64,
    pub coupling_g: f64,
    /// eV
    pub mass_scale: f64,
}

impl LightField {
    pub fn new(kind: FieldKind, mass_ev: f64, coupling_g: f64, mass_scale_ev: f64) -> Result<Self> {
        const OP: &str = "LightField::new";
        require_positive(OP, "mass", mass_ev)?;
        require_positive(OP, "mass scale", mass_scale_ev)?;
        require_finite(OP, "coupling", coupling_g)?;
        if coupling_g < 0.0 {
            return Err(Error::domain(OP, "coupling must be non-negative"));
        }
        Ok(LightField {
            kind,
            mass: mass_ev,
            coupling_g,
            mass_scale: mass_scale_ev,
        })
    }

    /// g/M, eV⁻¹.
    pub fn coupling_over_scale(&self) -> f64 {
        self.coupling_g / self.mass_scale
    }

    /// g/M, GeV⁻¹.
    pub fn coupling_inv_gev(&self) -> f64 {
        self.coupling_over_scale() * 1e9
    }

    /// g m / M, dimensionless.
    pub fn gm_over_m(&self) -> f64 {
        self.coupling_g * self.mass / self.mass_scale
    }
}

/// Γ = (g/M)² m³ / 16π, eV.
pub fn decay_rate(field: &LightField) -> f64 {
    let c = field.coupling_over_scale();
    c * c * field.mass.powi(3) / (16.0 * PI)
}

/// Four-vector (x, y, z, t) with metric (+, +, +, −).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FourVector {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub t: f64,
}

impl FourVector {
    pub fn photon(energy: f64, polar_angle: f64) -> Self {
        FourVector {
            x: energy * polar_angle.sin(),
            y: 0.0,
            z: energy * polar_angle.cos(),
            t: energy,
        }
    }

    pub fn dot(&self, o: &FourVector) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z - self.t * o.t
    }

    pub fn square(&self) -> f64 {
        self.dot(self)
    }

    pub fn add(&self, o: &FourVector) -> FourVector {
        FourVector {
            x: self.x + o.x,
            y: self.y + o.y,
            z: self.z + o.z,
            t: self.t + o.t,
        }
    }
}

/// q_s² = (p₁ + p₂)² = 2ω²(cos 2ϑ − 1) = −4ω² sin²ϑ.
pub fn s_channel_momentum_squared(omega: f64, vartheta: f64) -> f64 {
    let s = vartheta.sin();
    -4.0 * omega * omega * s * s
}

/// Two photons of energy ω at ±ϑ to the z axis scatter into ω₃ at θ₃ (same
/// side as photon 1) and ω₄ at θ₄ on the other side.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CollisionKinematics {
    pub omega: f64,
    pub vartheta: f64,
    pub theta3: f64,
    pub omega3: f64,
    pub omega4: f64,
    pub theta4: f64,
}

/// Conservation residuals relative to the total energy 2ω.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConservationResiduals {
    pub energy: f64,
    pub z_momentum: f64,
    pub x_momentum: f64,
}

impl ConservationResiduals {
    pub fn max(&self) -> f64 {
        self.energy.abs().max(self.z_momentum.abs()).max(self.x_momentum.abs())
    }
}

impl CollisionKinematics {
    pub fn residuals(&self) -> ConservationResiduals {
        let scale = 2.0 * self.omega;
        ConservationResiduals {
            energy: (self.omega3 + self.omega4 - scale) / scale,
            z_momentum: (self.omega3 * self.theta3.cos() + self.omega4 * self.theta4.cos() - scale * self.vartheta.cos())
                / scale,
            x_momentum: (self.omega3 * self.theta3.sin() - self.omega4 * self.theta4.sin()) / scale,
        }
    }

    /// Incoming and outgoing four-momenta p₁…p₄.
    pub fn momenta(&self) -> [FourVector; 4] {
        [
            FourVector::photon(self.omega, self.vartheta),
            FourVector::photon(self.omega, -self.vartheta),
            FourVector::photon(self.omega3, self.theta3),
            FourVector::photon(self.omega4, -self.theta4),
        ]
    }
}

/// Solve energy-momentum conservation for given (ω, ϑ, θ₃).
///
/// Uses `ω₃ = ω sin²ϑ / D` with `D = 1 − cosϑ cosθ₃` written as
/// `2sin²(ϑ/2) + cosϑ·2sin²(θ₃/2)`, and the matching cancellation-free forms
/// for ω₄ and the z momentum of photon 4.
pub fn solve_kinematics(omega: f64, vartheta: f64, theta3: f64) -> Result<CollisionKinematics> {
    const OP: &str = "solve_kinematics";
    require_positive(OP, "photon energy", omega)?;
    require_finite(OP, "incidence angle", vartheta)?;
    require_finite(OP, "scattering angle", theta3)?;
    if !(vartheta > 0.0 && vartheta < PI / 2.0) {
        return Err(Error::domain(OP, format!("incidence angle must lie in (0, π/2), got {vartheta}")));
    }
    if !(0.0..vartheta).contains(&theta3) {
        return Err(Error::domain(OP, format!("θ₃ = {theta3} must satisfy 0 ≤ θ₃ < ϑ = {vartheta}")));
    }
    let c = vartheta.cos();
    let u = 2.0 * (0.5 * vartheta).sin().powi(2);
    let v = 2.0 * (0.5 * theta3).sin().powi(2);
    let d = u + c * v;
    let sv = vartheta.sin();
    let s3 = theta3.sin();
    let omega3 = omega * sv * sv / d;
    let diff = 2.0 * (0.5 * (vartheta + theta3)).sin() * (0.5 * (vartheta - theta3)).sin();
    let omega4 = omega * (s3 * s3 + diff * diff) / d;
    let pz4 = omega * (v * (1.0 + c * c) - u * u) / d;
    let px4 = omega3 * s3;
    Ok(CollisionKinematics {
        omega,
        vartheta,
        theta3,
        omega3,
        omega4,
        theta4: px4.atan2(pz4),
    })
}

/// Solve `n` configurations with ϑ uniform in (0, π/2) and θ₃ uniform in [0, ϑ).
pub fn random_kinematics<R: Rng + ?Sized>(omega: f64, n: usize, rng: &mut R) -> Result<Vec<CollisionKinematics>> {
    (0..n)
        .map(|_| {
            let vartheta = rng.gen_range(f64::EPSILON..PI / 2.0);
            let theta3 = vartheta * rng.gen_range(0.0..1.0);
            solve_kinematics(omega, vartheta, theta3)
        })
        .collect()
}

/// Sign of the invariant amplitude M_{ijkl} for incoming polarizations (i, j)
/// and outgoing (k, l), each 1 or 2. Zero for channels the field does not couple.
pub fn amplitude_selection(kind: FieldKind, pol_in: (u8, u8), pol_out: (u8, u8)) -> i8 {
    match (kind, pol_in, pol_out) {
        (FieldKind::Scalar, (1, 1), (1, 1)) | (FieldKind::Scalar, (2, 2), (2, 2)) => 1,
        (FieldKind::Scalar, (1, 1), (2, 2)) | (FieldKind::Scalar, (2, 2), (1, 1)) => -1,
        (FieldKind::Pseudoscalar, (1, 2), (1, 2)) | (FieldKind::Pseudoscalar, (1, 2), (2, 1)) => 1,
        (FieldKind::Pseudoscalar, (2, 1), (1, 2)) | (FieldKind::Pseudoscalar, (2, 1), (2, 1)) => -1,
        _ => 0,
    }
}

/// Breit–Wigner parameters at a given (ω, ϑ).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResonanceState {
    /// ω_r, eV
    pub omega_r: f64,
    /// χ = ω² − ω_r², eV²
    pub chi: f64,
    /// a = (ω_r²/8π)(gm/M)², eV²
    pub width_a: f64,
    /// Angle at which ω is resonant, rad.
    pub vartheta_r: f64,
    /// ϑ/ϑ_r
    pub epsilon: f64,
}

impl ResonanceState {
    pub fn new(omega: f64, vartheta: f64, field: &LightField) -> Result<Self> {
        const OP: &str = "ResonanceState::new";
        require_positive(OP, "photon energy", omega)?;
        if !(vartheta > 0.0 && vartheta <= PI / 2.0) {
            return Err(Error::domain(OP, format!("incidence angle must lie in (0, π/2], got {vartheta}")));
        }
        let s = vartheta.sin();
        // ω_r² = (m²/2)/(1 − cos 2ϑ) = m²/(4 sin²ϑ)
        let omega_r2 = field.mass * field.mass / (4.0 * s * s);
        let g = field.gm_over_m();
        let ratio = field.mass / (2.0 * omega);
        let vartheta_r = if ratio <= 1.0 { ratio.asin() } else { f64::NAN };
        Ok(ResonanceState {
            omega_r: omega_r2.sqrt(),
            chi: omega * omega - omega_r2,
            width_a: omega_r2 / (8.0 * PI) * g * g,
            vartheta_r,
            epsilon: vartheta / vartheta_r,
        })
    }
}

/// Small-angle resonance angle ϑ_r = m/(2ω).
pub fn resonance_condition(mass: f64, omega: f64) -> f64 {
    mass / (2.0 * omega)
}

/// χ(ϑ) = ω_opt² (1 − ε⁻²), ε = ϑ/ϑ_r.
pub fn chi_of_vartheta(omega_opt: f64, mass: f64, vartheta: f64) -> f64 {
    let eps = vartheta / resonance_condition(mass, omega_opt);
    omega_opt * omega_opt * (1.0 - 1.0 / (eps * eps))
}

/// Lorentzian |M|² ≈ (2π)² a²/(χ² + a²).
pub fn resonant_amplitude_squared(omega: f64, vartheta: f64, field: &LightField) -> Result<f64> {
    let st = ResonanceState::new(omega, vartheta, field)?;
    Ok(lorentzian(st.chi, st.width_a))
}

fn lorentzian(chi: f64, a: f64) -> f64 {
    if a == 0.0 {
        return 0.0;
    }
    let r = chi / a;
    4.0 * PI * PI / (1.0 + r * r)
}

/// |M|² from the full propagator with m² → m² − 2imΓ, without the near-peak
/// approximation. Equals the Lorentzian times (ω/ω_r)⁸.
pub fn exact_amplitude_squared(omega: f64, vartheta: f64, field: &LightField) -> Result<f64> {
    require_positive("exact_amplitude_squared", "photon energy", omega)?;
    let s2 = vartheta.sin().powi(2);
    Ok(amplitude_squared_over_sin4(omega, s2, field) * s2 * s2)
}

/// |M|²/sin⁴ϑ for sin²ϑ = `s2`.
fn amplitude_squared_over_sin4(omega: f64, s2: f64, field: &LightField) -> f64 {
    let c = field.coupling_over_scale();
    let m = field.mass;
    let re = m * m - 4.0 * omega * omega * s2;
    let im = 2.0 * m * decay_rate(field);
    16.0 * c.powi(4) * omega.powi(8) * s2 * s2 / (re * re + im * im)
}

/// ∫_{χ−}^{χ+} a²/(χ² + a²) dχ = a [atan(χ/a)].
pub fn bw_integral(chi_minus: f64, chi_plus: f64, a: f64) -> Result<f64> {
    const OP: &str = "bw_integral";
    require_positive(OP, "width", a)?;
    if chi_minus.is_nan() || chi_plus.is_nan() || chi_minus >= chi_plus {
        return Err(Error::domain(OP, "need χ₋ < χ₊"));
    }
    Ok(a * ((chi_plus / a).atan() - (chi_minus / a).atan()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AveragingMethod {
    Numeric,
    ClosedForm,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AveragedAmplitude {
    pub value: f64,
    /// The resonance angle lies inside the acceptance (ϑ_r ≤ Δϑ).
    pub on_resonance: bool,
}

fn quad(f: impl FnMut(f64) -> f64, a: f64, b: f64) -> Result<f64> {
    if b <= a {
        return Ok(0.0);
    }
    let opts = AdaptiveOptions {
        abs_tol: 0.0,
        rel_tol: 1e-10,
        max_intervals: 5000,
    };
    Ok(integrate_adaptive(f, a, b, opts)?.value)
}

/// ∫_{−∞}^{ξ_up} (1 − ãξ)^{-3/2} / (1 + ξ²) dξ with ξ_up = (1 − r²)/ã.
///
/// Near the Breit–Wigner peak the substitution ξ = tan t is used; beyond
/// |ãξ| = 1/2 the variable s = (1 − ãξ)^{-1/2} (which is ϑ/ϑ_r) turns the
/// integrand into 2ã/(u² + ã²) with u = 1 − s⁻², smooth on both tails.
fn weighted_bw_integral(a_tilde: f64, r: f64) -> Result<f64> {
    let xi_up = (1.0 - r * r) / a_tilde;
    let cut = 0.5 / a_tilde;
    let upper = xi_up.min(cut);
    let core = quad(|t| (1.0 - a_tilde * t.tan()).powf(-1.5), (-cut).atan(), upper.atan())?;
    let tail_kernel = |s: f64| {
        let u = 1.0 - 1.0 / (s * s);
        2.0 * a_tilde / (u * u + a_tilde * a_tilde)
    };
    let lower_tail = quad(|s| if s == 0.0 { 0.0 } else { tail_kernel(s) }, 0.0, (2.0f64 / 3.0).sqrt())?;
    let upper_tail = if xi_up > cut { quad(tail_kernel, 2f64.sqrt(), 1.0 / r)? } else { 0.0 };
    Ok(core + lower_tail + upper_tail)
}

/// Average of |M|² over incidence angles uniform on (0, Δϑ].
///
/// With ϑ_r ≤ Δϑ the closed form is `((2π)²/2ω²)(ϑ_r/Δϑ) a π`; the numeric
/// route integrates the weighted Breit–Wigner kernel. With ϑ_r > Δϑ the peak
/// is outside the acceptance and the off-resonance average, suppressed by a²,
/// is returned with `on_resonance = false` for either method.
pub fn averaged_amplitude_squared(
    omega_opt: f64,
    vartheta_r: f64,
    delta_theta: f64,
    a: f64,
    method: AveragingMethod,
) -> Result<AveragedAmplitude> {
    const OP: &str = "averaged_amplitude_squared";
    let w = require_positive(OP, "photon energy", omega_opt)?;
    let tr = require_positive(OP, "resonance angle", vartheta_r)?;
    let dt = require_positive(OP, "angular uncertainty", delta_theta)?;
    let a = require_positive(OP, "width", a)?;
    let a_tilde = a / (w * w);
    let r = tr / dt;
    if r > 1.0 {
        let inv = 1.0 / r;
        let avg = quad(
            |e| {
                let e2 = e * e;
                let num = a_tilde * e2;
                num * num / ((1.0 - e2).powi(2) + num * num)
            },
            0.0,
            inv,
        )?;
        return Ok(AveragedAmplitude {
            value: 4.0 * PI * PI * r * avg,
            on_resonance: false,
        });
    }
    let prefactor = 4.0 * PI * PI / (2.0 * w * w) * r * a;
    let value = match method {
        AveragingMethod::ClosedForm => prefactor * PI,
        AveragingMethod::Numeric => prefactor * weighted_bw_integral(a_tilde, r)?,
    };
    Ok(AveragedAmplitude {
        value,
        on_resonance: true,
    })
}

/// Resonance width a at the resonance angle, (ω_opt²/8π)(gm/M)².
pub fn width_at_resonance(omega_opt: f64, field: &LightField) -> f64 {
    let g = field.gm_over_m();
    omega_opt * omega_opt / (8.0 * PI) * g * g
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CrossSection {
    /// dσ/dΩ₃, eV⁻² per steradian.
    pub value: f64,
    pub on_resonance: bool,
}

impl CrossSection {
    /// m² per steradian.
    pub fn si(&self) -> f64 {
        self.value * HBAR_C_EV_M * HBAR_C_EV_M
    }
}

fn check_angles(op: &'static str, omega: f64, vartheta_r: f64, delta_theta: f64) -> Result<()> {
    require_positive(op, "photon energy", omega)?;
    require_positive(op, "resonance angle", vartheta_r)?;
    require_positive(op, "angular uncertainty", delta_theta)?;
    Ok(())
}

/// Angle-averaged forward cross section.
///
/// On resonance this is the small-angle closed form
/// `(π/64) ω⁻² (ϑ_r/Δϑ) (gm/M)² ϑ_r⁻⁴`. Off resonance the cross section
/// `(8πω)⁻² sin⁻⁴ϑ (ω₃/2ω)² |M|²` is averaged over (0, Δϑ] with the exact
/// amplitude and forward emission.
pub fn differential_cross_section(omega_opt: f64, vartheta_r: f64, delta_theta: f64, field: &LightField) -> Result<CrossSection> {
    check_angles("differential_cross_section", omega_opt, vartheta_r, delta_theta)?;
    if vartheta_r <= delta_theta {
        let g = field.gm_over_m();
        let value = PI / 64.0 / (omega_opt * omega_opt) * (vartheta_r / delta_theta) * g * g / vartheta_r.powi(4);
        return Ok(CrossSection {
            value,
            on_resonance: true,
        });
    }
    let k = 1.0 / (64.0 * PI * PI * omega_opt * omega_opt);
    let avg = quad(
        |t| {
            let s2 = t.sin().powi(2);
            let fwd = (0.5 * t).cos().powi(4);
            k * fwd * amplitude_squared_over_sin4(omega_opt, s2, field)
        },
        0.0,
        delta_theta,
    )? / delta_theta;
    Ok(CrossSection {
        value: avg,
        on_resonance: false,
    })
}

/// The same on-resonance cross section assembled from its parts:
/// `(8πω)⁻² sin⁻⁴ϑ_r (ω₃/2ω)² ⟨|M|²⟩` with forward ω₃ = ω(1 + cosϑ_r) and
/// the closed-form average.
pub fn assembled_cross_section(omega_opt: f64, vartheta_r: f64, delta_theta: f64, field: &LightField) -> Result<f64> {
    check_angles("assembled_cross_section", omega_opt, vartheta_r, delta_theta)?;
    let st = ResonanceState::new(omega_opt, vartheta_r, field)?;
    let avg = averaged_amplitude_squared(omega_opt, vartheta_r, delta_theta, st.width_a, AveragingMethod::ClosedForm)?;
    let w3_ratio = 0.5 * (1.0 + vartheta_r.cos());
    Ok((8.0 * PI * omega_opt).powi(-2) * vartheta_r.sin().powi(-4) * w3_ratio * w3_ratio * avg.value)
}

/// One-beam focusing luminosity inputs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LuminositySetup {
    pub n_photons: f64,
    /// fs
    pub tau: f64,
    /// fs
    pub delta_t: f64,
    /// μm
    pub wavelength: f64,
    /// m
    pub focal_length: f64,
    /// m
    pub rayleigh_length: f64,
    /// m
    pub waist: f64,
}

impl LuminositySetup {
    pub fn validate(&self) -> Result<()> {
        const OP: &str = "effective_luminosity";
        require_finite(OP, "photon number", self.n_photons)?;
        if self.n_photons < 0.0 {
            return Err(Error::domain(OP, "photon number must be non-negative"));
        }
        require_positive(OP, "pulse duration", self.tau)?;
        require_positive(OP, "interaction time", self.delta_t)?;
        require_positive(OP, "wavelength", self.wavelength)?;
        require_positive(OP, "focal length", self.focal_length)?;
        require_positive(OP, "Rayleigh length", self.rayleigh_length)?;
        require_positive(OP, "waist", self.waist)?;
        let period_fs = self.wavelength * 1e-6 / SPEED_OF_LIGHT * 1e15;
        if self.delta_t < period_fs * (1.0 - 1e-12) {
            return Err(Error::domain(
                OP,
                format!("interaction time {} fs is shorter than one optical period {period_fs} fs", self.delta_t),
            ));
        }
        Ok(())
    }

    pub fn with_photons(mut self, n: f64) -> Self {
        self.n_photons = n;
        self
    }
}

/// Intermediate products of the luminosity chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LuminosityBreakdown {
    /// min(Δt/τ, 1)
    pub time_ratio: f64,
    /// Photons within Δt.
    pub n_int: f64,
    /// Effective bunches f/(cΔt).
    pub bunches: f64,
    /// Focal-length averaged instantaneous luminosity, m⁻².
    pub mean_luminosity: f64,
    pub atan_f_over_zr: f64,
    /// m⁻² per pulse.
    pub luminosity: f64,
}

/// 𝓛 = b L̄ = (Δt/τ) N²/(2cτλ) atan(f/z_R), with Δt/τ clamped to 1.
pub fn effective_luminosity(setup: &LuminositySetup) -> Result<LuminosityBreakdown> {
    setup.validate()?;
    let time_ratio = (setup.delta_t / setup.tau).min(1.0);
    let dt_s = time_ratio * setup.tau * 1e-15;
    let lambda = setup.wavelength * 1e-6;
    let n_int = time_ratio * setup.n_photons;
    let bunches = setup.focal_length / (SPEED_OF_LIGHT * dt_s);
    let atan = (setup.focal_length / setup.rayleigh_length).atan();
    let mean_luminosity = n_int * n_int / (2.0 * setup.focal_length * lambda) * atan;
    Ok(LuminosityBreakdown {
        time_ratio,
        n_int,
        bunches,
        mean_luminosity,
        atan_f_over_zr: atan,
        luminosity: bunches * mean_luminosity,
    })
}

/// dY/dΩ₃ = 𝓛 · dσ/dΩ₃ per pulse and steradian.
pub fn differential_yield(
    setup: &LuminositySetup,
    omega_opt: f64,
    vartheta_r: f64,
    delta_theta: f64,
    field: &LightField,
) -> Result<f64> {
    let lum = effective_luminosity(setup)?;
    let xs = differential_cross_section(omega_opt, vartheta_r, delta_theta, field)?;
    Ok(lum.luminosity * xs.si())
}

/// Photon number per pulse giving `target_yield` events per steradian.
pub fn required_photons(
    target_yield: f64,
    setup: &LuminositySetup,
    omega_opt: f64,
    vartheta_r: f64,
    delta_theta: f64,
    field: &LightField,
) -> Result<f64> {
    const OP: &str = "required_photons";
    require_positive(OP, "target yield", target_yield)?;
    let coefficient = differential_yield(&setup.with_photons(1.0), omega_opt, vartheta_r, delta_theta, field)?;
    if coefficient.is_nan() || coefficient <= 0.0 {
        return Err(Error::domain(OP, "yield does not grow with photon number (zero coupling?)"));
    }
    Ok((target_yield / coefficient).sqrt())
}

/// Mass range accessible to a focusing setup.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MassReach {
    /// 2ω Δϑ, eV
    pub m_cut: f64,
    /// 2π⁻¹ (λ/d)² ω, eV
    pub m_min: f64,
    pub waist: f64,
    pub delta_theta: f64,
    /// The f ≪ z_R waist approximation was used.
    pub approximate: bool,
}

/// f/z_R below which the approximate waist (dfλ/2π)^{1/3} is used.
pub const APPROXIMATION_LIMIT: f64 = 0.1;

pub fn mass_reach(omega_opt: f64, d_m: f64, f_m: f64, wavelength_um: f64) -> Result<MassReach> {
    const OP: &str = "mass_reach";
    require_positive(OP, "photon energy", omega_opt)?;
    require_positive(OP, "lens diameter", d_m)?;
    require_positive(OP, "focal length", f_m)?;
    require_positive(OP, "wavelength", wavelength_um)?;
    let lambda = wavelength_um * 1e-6;
    let w_approx = approximate_waist(d_m, f_m, wavelength_um);
    let zr = PI * w_approx * w_approx / lambda;
    let (waist, approximate) = if f_m / zr < APPROXIMATION_LIMIT {
        (w_approx, true)
    } else {
        (waist_from_lens(d_m, f_m, wavelength_um)?.waist, false)
    };
    let delta_theta = (lambda / waist).powi(2) / PI;
    Ok(MassReach {
        m_cut: 2.0 * omega_opt * delta_theta,
        m_min: 2.0 / PI * (lambda / d_m).powi(2) * omega_opt,
        waist,
        delta_theta,
        approximate,
    })
}

/// Focusing geometry for a sensitivity estimate. Waist and angular
/// uncertainty are solved from the lens unless given explicitly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FocusingSpec {
    pub lens_diameter: f64,
    pub focal_length: f64,
    pub waist: Option<f64>,
    pub delta_theta: Option<f64>,
}

/// Everything needed to estimate the signal of one parameter point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensitivityInputs {
    pub field: LightField,
    /// Incoming and outgoing polarizations; `None` assumes a coupled channel.
    pub channel: Option<((u8, u8), (u8, u8))>,
    /// eV
    pub omega_opt: f64,
    pub n_photons: f64,
    /// fs
    pub tau: f64,
    /// fs
    pub delta_t: f64,
    pub focusing: FocusingSpec,
    pub target_yield: f64,
}

impl SensitivityInputs {
    /// One-beam focusing reference point: m = 1e-10 eV, g = 1/137,
    /// M = 1e27 eV, ω = 1 eV, τ = Δt = 10 fs, w₀ = 0.01 m, d = 2 m, f = 3 m,
    /// Δϑ = 4e-9 rad.
    pub fn reference() -> Self {
        SensitivityInputs {
            field: LightField {
                kind: FieldKind::Scalar,
                mass: 1e-10,
                coupling_g: 1.0 / 137.0,
                mass_scale: 1e27,
            },
            channel: None,
            omega_opt: 1.0,
            n_photons: 1e22,
            tau: 10.0,
            delta_t: 10.0,
            focusing: FocusingSpec {
                lens_diameter: 2.0,
                focal_length: 3.0,
                waist: Some(0.01),
                delta_theta: Some(4e-9),
            },
            target_yield: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SensitivityReport {
    pub differential_yield: f64,
    pub required_photons: f64,
    pub m_cut: f64,
    pub m_min: f64,
    pub exclusion_flag: bool,
    pub on_resonance: bool,
    pub channel_coupled: bool,
    /// μm, 2πħc/ω
    pub wavelength: f64,
    pub vartheta_r: f64,
    pub delta_theta: f64,
    pub waist: f64,
    pub rayleigh_length: f64,
    pub width_a: f64,
    pub decay_rate: f64,
    /// eV⁻²/sr
    pub cross_section: f64,
    /// QED forward scattering scale at ϑ_r, eV⁻².
    pub qed_background: f64,
    pub luminosity: LuminosityBreakdown,
}

/// Yield, required photons and mass reach for one parameter point.
pub fn sensitivity_report(inputs: &SensitivityInputs) -> Result<SensitivityReport> {
    const OP: &str = "sensitivity_report";
    let field = LightField::new(inputs.field.kind, inputs.field.mass, inputs.field.coupling_g, inputs.field.mass_scale)?;
    let omega = require_positive(OP, "photon energy", inputs.omega_opt)?;
    let wavelength_um = wavelength_from_photon_energy(omega)? * 1e6;
    let lambda = wavelength_um * 1e-6;
    let fs = inputs.focusing;
    require_positive(OP, "lens diameter", fs.lens_diameter)?;
    require_positive(OP, "focal length", fs.focal_length)?;
    let half = 0.5 * fs.lens_diameter;
    let (waist, rayleigh_length) = match fs.waist {
        Some(w) => {
            require_positive(OP, "waist", w)?;
            if w >= half {
                return Err(Error::domain(OP, "waist must be smaller than the lens radius"));
            }
            let f_over_zr = w / (half * half - w * w).sqrt();
            (w, fs.focal_length / f_over_zr)
        }
        None => {
            let s = waist_from_lens(fs.lens_diameter, fs.focal_length, wavelength_um)?;
            (s.waist, s.rayleigh_length)
        }
    };
    let delta_theta = match fs.delta_theta {
        Some(d) => require_positive(OP, "angular uncertainty", d)?,
        None => (lambda / waist).powi(2) / PI,
    };
    let vartheta_r = resonance_condition(field.mass, omega);
    let channel_coupled = match inputs.channel {
        Some((pin, pout)) => amplitude_selection(field.kind, pin, pout) != 0,
        None => true,
    };
    let setup = LuminositySetup {
        n_photons: inputs.n_photons,
        tau: inputs.tau,
        delta_t: inputs.delta_t,
        wavelength: wavelength_um,
        focal_length: fs.focal_length,
        rayleigh_length,
        waist,
    };
    let luminosity = effective_luminosity(&setup)?;
    let xs = differential_cross_section(omega, vartheta_r, delta_theta, &field)?;
    let (differential_yield, required) = if channel_coupled {
        (
            luminosity.luminosity * xs.si(),
            required_photons(inputs.target_yield, &setup, omega, vartheta_r, delta_theta, &field)?,
        )
    } else {
        (0.0, f64::INFINITY)
    };
    let reach = mass_reach(omega, fs.lens_diameter, fs.focal_length, wavelength_um)?;
    Ok(SensitivityReport {
        differential_yield,
        required_photons: required,
        m_cut: reach.m_cut,
        m_min: reach.m_min,
        exclusion_flag: xs.on_resonance && differential_yield >= inputs.target_yield,
        on_resonance: xs.on_resonance,
        channel_coupled,
        wavelength: wavelength_um,
        vartheta_r,
        delta_theta,
        waist,
        rayleigh_length,
        width_a: width_at_resonance(omega, &field),
        decay_rate: decay_rate(&field),
        cross_section: if channel_coupled { xs.value } else { 0.0 },
        qed_background: crate::qed_vacuum::qed_forward_background(omega, vartheta_r)?,
        luminosity,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn reference_field() -> LightField {
        LightField::new(FieldKind::Scalar, 1e-10, 1.0 / 137.0, 1e27).unwrap()
    }

    #[test]
    fn decay_rate_reference() {
        let g = decay_rate(&reference_field());
        assert!((g / 1.05996e-90 - 1.0).abs() < 1e-4);
        let heavy = LightField::new(FieldKind::Scalar, 2e-10, 1.0 / 137.0, 1e27).unwrap();
        assert!((decay_rate(&heavy) / g - 8.0).abs() < 1e-12);
        let free = LightField::new(FieldKind::Scalar, 1e-10, 0.0, 1e27).unwrap();
        assert_eq!(decay_rate(&free), 0.0);
    }

    #[test]
    fn kinematic_special_points() {
        let k = solve_kinematics(1.0, 0.3, 0.3 - 1e-15).unwrap();
        assert!((k.omega3 - 1.0).abs() < 1e-12);
        let k = solve_kinematics(1.0, PI / 2.0 - 1e-12, 0.0).unwrap();
        assert!((k.omega3 - 1.0).abs() < 1e-11);
        let k = solve_kinematics(2.0, 1e-6, 0.0).unwrap();
        assert!((k.omega3 / 4.0 - 1.0).abs() < 1e-10);
        assert!(solve_kinematics(1.0, 0.3, 0.3).is_err());
        assert!(solve_kinematics(1.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn photon_momenta_are_null_and_conserved() {
        let k = solve_kinematics(1.3, 0.4, 0.1).unwrap();
        let p = k.momenta();
        for v in &p {
            assert!(v.square().abs() < 1e-14);
        }
        let total_in = p[0].add(&p[1]);
        let total_out = p[2].add(&p[3]);
        assert!((total_in.t - total_out.t).abs() < 1e-14);
        assert!((total_in.z - total_out.z).abs() < 1e-14);
        assert!((total_in.x - total_out.x).abs() < 1e-14);
        assert!((total_in.square() - s_channel_momentum_squared(1.3, 0.4)).abs() < 1e-14);
    }

    #[test]
    fn polarization_channels() {
        assert_eq!(amplitude_selection(FieldKind::Scalar, (1, 1), (2, 2)), -1);
        assert_eq!(amplitude_selection(FieldKind::Scalar, (1, 2), (1, 2)), 0);
        assert_eq!(amplitude_selection(FieldKind::Pseudoscalar, (1, 2), (2, 1)), 1);
        let all: Vec<((u8, u8), (u8, u8))> = (0..16)
            .map(|n| (((n >> 3 & 1) as u8 + 1, (n >> 2 & 1) as u8 + 1), ((n >> 1 & 1) as u8 + 1, (n & 1) as u8 + 1)))
            .collect();
        for &(pin, pout) in &all {
            let s = amplitude_selection(FieldKind::Scalar, pin, pout);
            let p = amplitude_selection(FieldKind::Pseudoscalar, pin, pout);
            assert!(s == 0 || p == 0);
        }
        assert_eq!(all.iter().filter(|c| amplitude_selection(FieldKind::Scalar, c.0, c.1) != 0).count(), 4);
    }

    #[test]
    fn lorentzian_shape() {
        let f = reference_field();
        let omega = 1.0;
        let vr = (f.mass / (2.0 * omega)).asin();
        let peak = resonant_amplitude_squared(omega, vr, &f).unwrap();
        assert!((peak / (4.0 * PI * PI) - 1.0).abs() < 1e-12);
        assert_eq!(lorentzian(0.0, 1.0), 4.0 * PI * PI);
        assert_eq!(lorentzian(2.5, 2.5), 2.0 * PI * PI);
    }

    #[test]
    fn exact_amplitude_matches_lorentzian_near_peak() {
        let f = LightField::new(FieldKind::Scalar, 1e-3, 1.0, 1e2).unwrap();
        let omega = 1.0;
        let vr = (f.mass / (2.0 * omega)).asin();
        for &eps in &[0.999, 1.0, 1.001] {
            let th = vr * eps;
            let st = ResonanceState::new(omega, th, &f).unwrap();
            let approx = resonant_amplitude_squared(omega, th, &f).unwrap();
            let exact = exact_amplitude_squared(omega, th, &f).unwrap();
            let factor = (omega / st.omega_r).powi(8);
            assert!((exact / (approx * factor) - 1.0).abs() < 1e-6, "{eps}: {exact} {approx}");
        }
    }

    #[test]
    fn breit_wigner_integral() {
        let a = 3.7e-5;
        assert_eq!(bw_integral(-a, a, a).unwrap(), a * PI / 2.0);
        assert_eq!(bw_integral(f64::NEG_INFINITY, f64::INFINITY, a).unwrap(), a * PI);
        assert_eq!(bw_integral(0.0, f64::INFINITY, a).unwrap(), a * PI / 2.0);
        assert!(bw_integral(1.0, -1.0, a).is_err());
    }

    #[test]
    fn averaged_amplitude_routes_agree() {
        for &a_tilde in &[1e-10, 1e-14, 1e-40, 1e-80] {
            for &r in &[0.5, 0.0125, 1e-3] {
                let closed = averaged_amplitude_squared(1.0, r, 1.0, a_tilde, AveragingMethod::ClosedForm).unwrap();
                let num = averaged_amplitude_squared(1.0, r, 1.0, a_tilde, AveragingMethod::Numeric).unwrap();
                assert!(closed.on_resonance && num.on_resonance);
                let ratio = num.value / closed.value;
                assert!((0.95..=1.05).contains(&ratio), "a={a_tilde} r={r}: {ratio}");
            }
        }
    }

    #[test]
    fn peak_at_acceptance_edge_keeps_half() {
        let num = averaged_amplitude_squared(1.0, 1.0, 1.0, 1e-12, AveragingMethod::Numeric).unwrap();
        let closed = averaged_amplitude_squared(1.0, 1.0, 1.0, 1e-12, AveragingMethod::ClosedForm).unwrap();
        assert!((num.value / closed.value - 0.5).abs() < 1e-6);
    }

    #[test]
    fn off_resonance_average_is_suppressed() {
        let on = averaged_amplitude_squared(1.0, 1.0, 1.0, 1e-12, AveragingMethod::ClosedForm).unwrap();
        let off = averaged_amplitude_squared(1.0, 2.0, 1.0, 1e-12, AveragingMethod::ClosedForm).unwrap();
        assert!(!off.on_resonance);
        assert!(off.value < 1e-10 * on.value);
        let off2 = averaged_amplitude_squared(1.0, 2.0, 1.0, 1e-13, AveragingMethod::Numeric).unwrap();
        assert!((off2.value / off.value - 1e-2).abs() < 1e-8);
    }

    #[test]
    fn chi_relation() {
        let (m, w) = (1e-10, 1.0);
        assert_eq!(resonance_condition(m, w), 5e-11);
        assert_eq!(chi_of_vartheta(w, m, resonance_condition(m, w)), 0.0);
        assert!(chi_of_vartheta(w, m, 4e-11) < 0.0);
        assert!(chi_of_vartheta(w, m, 6e-11) > 0.0);
        assert!((chi_of_vartheta(w, m, 1.0) - 1.0).abs() < 1e-18);
    }

    #[test]
    fn closed_form_cross_section_is_four_pi_times_assembly() {
        let f = reference_field();
        let xs = differential_cross_section(1.0, 5e-11, 4e-9, &f).unwrap();
        let parts = assembled_cross_section(1.0, 5e-11, 4e-9, &f).unwrap();
        assert!((xs.value / parts / (4.0 * PI) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn luminosity_chain() {
        let setup = LuminositySetup {
            n_photons: 1e20,
            tau: 10.0,
            delta_t: 30.0,
            wavelength: 0.8,
            focal_length: 3.0,
            rayleigh_length: 300.0,
            waist: 0.01,
        };
        let l = effective_luminosity(&setup).unwrap();
        assert_eq!(l.time_ratio, 1.0);
        let direct = 1e40 / (2.0 * SPEED_OF_LIGHT * 10e-15 * 0.8e-6) * (0.01f64).atan();
        assert!((l.luminosity / direct - 1.0).abs() < 1e-12);
        let l2 = effective_luminosity(&setup.with_photons(2e20)).unwrap();
        assert!((l2.luminosity / l.luminosity - 4.0).abs() < 1e-12);
        let short = LuminositySetup { delta_t: 1.0, ..setup };
        assert!(effective_luminosity(&short).is_err());
    }

    #[test]
    fn reference_required_photons() {
        let r = sensitivity_report(&SensitivityInputs::reference()).unwrap();
        assert!(r.on_resonance);
        assert!(r.required_photons > 2.4e22 / 3.0 && r.required_photons < 2.4e22 * 3.0);
        assert!(r.m_min <= r.m_cut);
        assert!(r.qed_background < 1e-6 * r.cross_section);
    }

    #[test]
    fn mass_reach_reference() {
        let m = mass_reach(1.0, 2.0, 3.0, 0.8).unwrap();
        assert!(m.approximate);
        assert!((m.m_cut / 4.8755e-9 - 1.0).abs() < 1e-4);
        let m2 = mass_reach(1.0, 4.0, 3.0, 0.8).unwrap();
        assert!((m.m_cut / m2.m_cut - 2f64.powf(2.0 / 3.0)).abs() < 1e-12);
        let exact = mass_reach(1.0, 1e-3, 1e3, 0.8).unwrap();
        assert!(!exact.approximate);
    }

    #[test]
    fn random_configurations_are_valid() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        let ks = random_kinematics(1.0, 200, &mut rng).unwrap();
        assert_eq!(ks.len(), 200);
        assert!(ks.iter().all(|k| k.theta3 < k.vartheta && k.residuals().max() < 1e-12));
        assert_eq!(reference_field().coupling_inv_gev(), 1.0 / 137.0 / 1e27 * 1e9);
    }

    proptest! {
        #[test]
        fn kinematics_conserve(omega in 1e-3f64..1e3, vt in 1e-6f64..1.5, frac in 0.0f64..0.999_999) {
            let k = solve_kinematics(omega, vt, vt * frac).unwrap();
            prop_assert!(k.residuals().max() < 1e-12);
            prop_assert!(k.theta4 > k.vartheta && k.theta4 <= PI);
        }

        #[test]
        fn s_channel_is_timelike(omega in 1e-3f64..1e3, vt in 0.0f64..std::f64::consts::FRAC_PI_2) {
            prop_assert!(s_channel_momentum_squared(omega, vt) <= 0.0);
        }
    }
}
