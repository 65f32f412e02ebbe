//! Phase-contrast Fourier imaging.
//!
//! A probe with Gaussian envelope `A₀ e^{-a r²}` carries an extra phase δ over
//! a rectangle R. A lens of focal length f maps the input plane to its Fourier
//! transform on the focal plane, with spatial frequency `ω = 2πx/(fλ)`. The
//! focal field is split into the pedestal (full Gaussian) and the signal part
//! supported on R:
//!
//! ```text
//! ψ̃(ω) = (e^{iΦ} − 1) J_R(ω) + B(ω),    Φ = δ + offset,
//! I(x, y) = (A₀/fλ)² |ψ̃|²   photons/μm²
//! ```
//!
//! where `J_R` is the transform of the envelope restricted to R and `B` the
//! full-plane transform. For a centred rectangle `J_R = C_sig` is real and
//! `|ψ̃|² = 2C_sig(C_sig − C_bkg)(1 − cos Φ) + C_bkg²`.
//!
//! Both `J_R` and `B` factorize over x and y, so integrals of the intensity
//! over a pixel reduce to three 1D integrals per axis.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{require_finite, require_positive, Error, Result};
use crate::gauss_integral::{line_transform, segment_transform, symmetric_transform};
use crate::gaussian_optics::GaussianBeam;
use crate::quadrature::gl8_composite_nodes;

/// Axis-aligned rectangle `|x − cx| ≤ μ`, `|y − cy| ≤ ν`, lengths in μm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RectRegion {
    pub half_width: f64,
    pub half_height: f64,
    pub center: (f64, f64),
}

impl RectRegion {
    pub fn centered(half_width: f64, half_height: f64) -> Result<Self> {
        Self::at(half_width, half_height, (0.0, 0.0))
    }

    pub fn at(half_width: f64, half_height: f64, center: (f64, f64)) -> Result<Self> {
        const OP: &str = "RectRegion::new";
        require_positive(OP, "half width", half_width)?;
        require_positive(OP, "half height", half_height)?;
        require_finite(OP, "centre x", center.0)?;
        require_finite(OP, "centre y", center.1)?;
        Ok(RectRegion {
            half_width,
            half_height,
            center,
        })
    }

    pub fn x_bounds(&self) -> (f64, f64) {
        (self.center.0 - self.half_width, self.center.0 + self.half_width)
    }

    pub fn y_bounds(&self) -> (f64, f64) {
        (self.center.1 - self.half_height, self.center.1 + self.half_height)
    }

    pub fn is_centered(&self) -> bool {
        self.center == (0.0, 0.0)
    }

    pub fn area(&self) -> f64 {
        4.0 * self.half_width * self.half_height
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        (x - self.center.0).abs() <= self.half_width && (y - self.center.1).abs() <= self.half_height
    }

    /// Area of the intersection with `other`.
    pub fn overlap_area(&self, other: &RectRegion) -> f64 {
        let (ax0, ax1) = self.x_bounds();
        let (bx0, bx1) = other.x_bounds();
        let (ay0, ay1) = self.y_bounds();
        let (by0, by1) = other.y_bounds();
        let w = (ax1.min(bx1) - ax0.max(bx0)).max(0.0);
        let h = (ay1.min(by1) - ay0.max(by0)).max(0.0);
        w * h
    }

    /// The rectangle after a transverse magnification about the origin.
    pub fn magnified(&self, factor: f64) -> Result<Self> {
        require_positive("RectRegion::magnified", "magnification", factor)?;
        Self::at(
            self.half_width * factor,
            self.half_height * factor,
            (self.center.0 * factor, self.center.1 * factor),
        )
    }
}

/// Probe amplitude at the lens plane and the lens that images it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProbeProfile {
    /// A₀, √photons per μm.
    pub peak_amplitude: f64,
    /// Envelope exponent a, μm⁻².
    pub gaussian_a: f64,
    /// μm
    pub wavelength: f64,
    /// m
    pub focal_length: f64,
    /// Constant phase added to the signal region, rad.
    pub offset_phase: f64,
}

impl ProbeProfile {
    pub fn new(peak_amplitude: f64, gaussian_a: f64, wavelength_um: f64, focal_length_m: f64, offset_phase: f64) -> Result<Self> {
        const OP: &str = "ProbeProfile::new";
        Ok(ProbeProfile {
            peak_amplitude: require_positive(OP, "peak amplitude", peak_amplitude)?,
            gaussian_a: require_positive(OP, "envelope exponent", gaussian_a)?,
            wavelength: require_positive(OP, "wavelength", wavelength_um)?,
            focal_length: require_positive(OP, "focal length", focal_length_m)?,
            offset_phase: require_finite(OP, "offset phase", offset_phase)?,
        })
    }

    /// Normalized so that the input plane carries `photons` in total:
    /// `A₀² π/(2a) = N`.
    pub fn from_photons(photons: f64, gaussian_a: f64, wavelength_um: f64, focal_length_m: f64, offset_phase: f64) -> Result<Self> {
        let n = require_positive("ProbeProfile::from_photons", "photon number", photons)?;
        let a = require_positive("ProbeProfile::from_photons", "envelope exponent", gaussian_a)?;
        Self::new((n * 2.0 * a / PI).sqrt(), a, wavelength_um, focal_length_m, offset_phase)
    }

    /// Profile of `beam` after expansion by `expansion` ahead of the lens.
    ///
    /// The beam width w is read as the intensity radius with peak fluence
    /// `E/(2πw²)`, so the amplitude envelope is `e^{-r²/4w²}` and `a = 1/(4w²)`.
    pub fn from_beam(beam: &GaussianBeam, expansion: f64, focal_length_m: f64, offset_phase: f64) -> Result<Self> {
        let r = require_positive("ProbeProfile::from_beam", "expansion", expansion)?;
        let w = beam.waist() * r;
        Self::from_photons(beam.photon_count(), envelope_exponent(w), beam.wavelength(), focal_length_m, offset_phase)
    }

    pub fn total_photons(&self) -> f64 {
        self.peak_amplitude * self.peak_amplitude * PI / (2.0 * self.gaussian_a)
    }

    /// Photons per μm² at the beam centre, A₀².
    pub fn peak_fluence(&self) -> f64 {
        self.peak_amplitude * self.peak_amplitude
    }

    /// fλ in μm².
    pub fn focal_scale(&self) -> f64 {
        self.focal_length * 1e6 * self.wavelength
    }

    /// dω/dx = 2π/(fλ), μm⁻².
    pub fn frequency_per_um(&self) -> f64 {
        2.0 * PI / self.focal_scale()
    }

    pub fn spatial_frequency(&self, x_um: f64) -> f64 {
        x_um * self.frequency_per_um()
    }

    /// (A₀/fλ)²
    pub fn intensity_prefactor(&self) -> f64 {
        let s = self.peak_amplitude / self.focal_scale();
        s * s
    }

    /// Standard deviation of the focal pedestal intensity, μm.
    pub fn pedestal_sigma(&self) -> f64 {
        self.gaussian_a.sqrt() / self.frequency_per_um()
    }

    pub fn with_offset(mut self, offset_phase: f64) -> Self {
        self.offset_phase = offset_phase;
        self
    }
}

/// a = 1/(4w²) for intensity radius w (μm).
pub fn envelope_exponent(width_um: f64) -> f64 {
    1.0 / (4.0 * width_um * width_um)
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// Far-field pattern of a μ × ν slit (or, by Babinet, a wire), normalized to 1.
pub fn slit_fraunhofer(mu: f64, nu: f64, omega_x: f64, omega_y: f64) -> f64 {
    let sx = sinc(mu * omega_x);
    let sy = sinc(nu * omega_y);
    sx * sx * sy * sy
}

/// C_sig: transform of the Gaussian envelope over the centred rectangle
/// [−μ, μ] × [−ν, ν], μm².
pub fn c_sig(omega_x: f64, omega_y: f64, mu: f64, nu: f64, a: f64) -> f64 {
    symmetric_transform(a, mu, omega_x) * symmetric_transform(a, nu, omega_y)
}

/// C_bkg = (π/a) e^{-(ωx²+ωy²)/4a}, μm².
pub fn c_bkg(omega_x: f64, omega_y: f64, a: f64) -> f64 {
    PI / a * (-(omega_x * omega_x + omega_y * omega_y) / (4.0 * a)).exp()
}

/// e^{iΦ} − 1 without cancellation for small Φ.
pub(crate) fn phase_factor(phi: f64) -> Complex64 {
    let s = (0.5 * phi).sin();
    Complex64::new(-2.0 * s * s, phi.sin())
}

/// Transform of the envelope restricted to `region` at (ωx, ωy).
pub fn region_transform(region: &RectRegion, omega_x: f64, omega_y: f64, a: f64) -> Complex64 {
    let (x0, x1) = region.x_bounds();
    let (y0, y1) = region.y_bounds();
    segment_transform(a, x0, x1, omega_x) * segment_transform(a, y0, y1, omega_y)
}

/// Focal-plane photon density (photons/μm²) at spatial frequency (ωx, ωy).
pub fn focal_intensity(omega_x: f64, omega_y: f64, delta: f64, profile: &ProbeProfile, region: &RectRegion) -> f64 {
    let a = profile.gaussian_a;
    let phi = delta + profile.offset_phase;
    let cb = c_bkg(omega_x, omega_y, a);
    if region.is_centered() {
        let cs = c_sig(omega_x, omega_y, region.half_width, region.half_height, a);
        let s = (0.5 * phi).sin();
        let one_minus_cos = 2.0 * s * s;
        (profile.intensity_prefactor() * (2.0 * cs * (cs - cb) * one_minus_cos + cb * cb)).max(0.0)
    } else {
        let amp = phase_factor(phi) * region_transform(region, omega_x, omega_y, a) + cb;
        profile.intensity_prefactor() * amp.norm_sqr()
    }
}

/// Per-axis integrals over a focal-plane interval: ∫|J|², ∫J·B and ∫B².
#[derive(Debug, Clone, Copy, Default)]
struct AxisProducts {
    s: f64,
    t: Complex64,
    u: f64,
}

/// Panel width (μm on the focal plane) that resolves both the pedestal and
/// the finest oscillation of the region transform along one axis.
fn panel_width(profile: &ProbeProfile, bounds: (f64, f64)) -> f64 {
    let k = profile.frequency_per_um();
    let sigma = profile.pedestal_sigma();
    let extent = (bounds.1 - bounds.0).max(2.0 * bounds.0.abs().max(bounds.1.abs()));
    let period = 2.0 * PI / (k * extent);
    (0.5 * sigma).min(period / 8.0)
}

fn axis_products(
    profile: &ProbeProfile,
    bounds: (f64, f64),
    lo: f64,
    hi: f64,
    panels: usize,
    with_signal: bool,
) -> AxisProducts {
    let a = profile.gaussian_a;
    let k = profile.frequency_per_um();
    let mut acc = AxisProducts::default();
    for (x, w) in gl8_composite_nodes(lo, hi, panels) {
        let om = k * x;
        let b = line_transform(a, om);
        acc.u += w * b * b;
        if with_signal {
            let j = segment_transform(a, bounds.0, bounds.1, om);
            acc.s += w * j.norm_sqr();
            acc.t += j * (w * b);
        }
    }
    acc
}

fn combine(profile: &ProbeProfile, e: Complex64, x: &AxisProducts, y: &AxisProducts) -> f64 {
    let v = e.norm_sqr() * x.s * y.s + 2.0 * (e * x.t * y.t).re + x.u * y.u;
    (profile.intensity_prefactor() * v).max(0.0)
}

/// Photons landing in the focal-plane window `[x0, x1] × [y0, y1]` (μm).
pub fn focal_window_photons(
    profile: &ProbeProfile,
    region: &RectRegion,
    delta: f64,
    x_range: (f64, f64),
    y_range: (f64, f64),
) -> f64 {
    let e = phase_factor(delta + profile.offset_phase);
    let with_signal = e != Complex64::new(0.0, 0.0);
    let panels = |bounds: (f64, f64), range: (f64, f64)| {
        (((range.1 - range.0) / panel_width(profile, bounds)).ceil() as usize).max(1)
    };
    let bx = region.x_bounds();
    let by = region.y_bounds();
    let px = axis_products(profile, bx, x_range.0, x_range.1, panels(bx, x_range), with_signal);
    let py = axis_products(profile, by, y_range.0, y_range.1, panels(by, y_range), with_signal);
    combine(profile, e, &px, &py)
}

/// Focal-plane total compared with the photons launched.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct PhotonBalance {
    /// Window total extrapolated to the infinite plane.
    pub focal_total: f64,
    /// Photons inside the largest window evaluated.
    pub window_total: f64,
    pub input_total: f64,
    /// Half extent of the largest square window, μm.
    pub half_extent: f64,
}

/// Integrate the focal plane over square windows of doubling size.
///
/// Edge diffraction of the signal region leaves tails that fall off as
/// 1/W with the window half extent W, so each pair of windows is combined
/// as `2T(2W) − T(W)` to cancel that term. Doubling stops once two such
/// estimates agree to 1e-7.
pub fn focal_plane_total(profile: &ProbeProfile, region: &RectRegion, delta: f64) -> PhotonBalance {
    let period_scale = {
        let (x0, x1) = region.x_bounds();
        let (y0, y1) = region.y_bounds();
        let ext = (x1 - x0).max(y1 - y0).max(2.0 * x0.abs().max(x1.abs()).max(y0.abs()).max(y1.abs()));
        2.0 * PI / (profile.frequency_per_um() * ext)
    };
    let window = |h: f64| focal_window_photons(profile, region, delta, (-h, h), (-h, h));
    let mut half = 10.0 * profile.pedestal_sigma().max(period_scale);
    let mut total = window(half);
    let mut estimate = f64::NAN;
    for _ in 0..40 {
        let next = window(2.0 * half);
        let next_estimate = 2.0 * next - total;
        half *= 2.0;
        total = next;
        let done = (next_estimate - estimate).abs() < 1e-7 * next_estimate.abs();
        estimate = next_estimate;
        if done {
            break;
        }
    }
    PhotonBalance {
        focal_total: estimate,
        window_total: total,
        input_total: profile.total_photons(),
        half_extent: half,
    }
}

/// Square focal-plane grid centred on the optical axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub nx: usize,
    pub ny: usize,
    /// μm
    pub pitch: f64,
}

impl GridSpec {
    pub fn new(nx: usize, ny: usize, pitch_um: f64) -> Result<Self> {
        require_positive("GridSpec::new", "pixel pitch", pitch_um)?;
        Ok(GridSpec { nx, ny, pitch: pitch_um })
    }

    pub fn x_center(&self, i: usize) -> f64 {
        (i as f64 - 0.5 * (self.nx as f64 - 1.0)) * self.pitch
    }

    pub fn y_center(&self, j: usize) -> f64 {
        (j as f64 - 0.5 * (self.ny as f64 - 1.0)) * self.pitch
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    WithSignal,
    PedestalOnly,
}

/// Photons per pixel on a focal-plane grid, stored row-major (row = y index).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FocalPlaneImage {
    pub grid: GridSpec,
    pub values: Vec<f64>,
    pub delta: f64,
    pub offset_phase: f64,
    pub provenance: Provenance,
    /// Set when the pixel pitch exceeds the pedestal σ.
    pub coarse_pedestal: bool,
    pub input_photons: f64,
}

impl FocalPlaneImage {
    pub fn value(&self, ix: usize, iy: usize) -> f64 {
        self.values[iy * self.grid.nx + ix]
    }

    pub fn row(&self, iy: usize) -> &[f64] {
        &self.values[iy * self.grid.nx..(iy + 1) * self.grid.nx]
    }

    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }
}

/// Maximum quadrature panels per pixel and axis.
const MAX_PANELS_PER_PIXEL: usize = 4096;

/// Integrate the focal intensity over every pixel of `grid`.
///
/// Each pixel uses composite 8-point Gauss–Legendre along each axis with the
/// panel count set by the pedestal width and the region's oscillation period.
/// Pixels are independent, so the result does not depend on thread count.
pub fn render_focal_image(profile: &ProbeProfile, region: &RectRegion, delta: f64, grid: GridSpec) -> Result<FocalPlaneImage> {
    require_finite("render_focal_image", "phase shift", delta)?;
    let e = phase_factor(delta + profile.offset_phase);
    let with_signal = e != Complex64::new(0.0, 0.0);
    let p = grid.pitch;
    let axis = |n: usize, bounds: (f64, f64), center: &(dyn Fn(usize) -> f64 + Sync)| -> Vec<AxisProducts> {
        let panels = ((p / panel_width(profile, bounds)).ceil() as usize).clamp(1, MAX_PANELS_PER_PIXEL);
        (0..n)
            .into_par_iter()
            .map(|i| {
                let c = center(i);
                axis_products(profile, bounds, c - 0.5 * p, c + 0.5 * p, panels, with_signal)
            })
            .collect()
    };
    let xs = axis(grid.nx, region.x_bounds(), &|i| grid.x_center(i));
    let ys = axis(grid.ny, region.y_bounds(), &|j| grid.y_center(j));
    let values: Vec<f64> = (0..grid.len())
        .into_par_iter()
        .map(|idx| combine(profile, e, &xs[idx % grid.nx], &ys[idx / grid.nx]))
        .collect();
    let coarse_pedestal = p > profile.pedestal_sigma();
    if coarse_pedestal {
        log::warn!(
            "pixel pitch {p} um exceeds the pedestal width {:.3} um; the pedestal is not resolved",
            profile.pedestal_sigma()
        );
    }
    Ok(FocalPlaneImage {
        grid,
        values,
        delta,
        offset_phase: profile.offset_phase,
        provenance: if delta == 0.0 && profile.offset_phase == 0.0 {
            Provenance::PedestalOnly
        } else {
            Provenance::WithSignal
        },
        coarse_pedestal,
        input_photons: profile.total_photons(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
}

/// One pixel row or column through the optical axis.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LineProfile {
    pub axis: Axis,
    /// Pixel centres, m.
    pub positions_m: Vec<f64>,
    pub photons: Vec<f64>,
}

/// Extract the pixel row (axis x) or column (axis y) through the origin.
/// For an even pixel count the pixel just above the origin is used.
pub fn pixel_line_profile(image: &FocalPlaneImage, axis: Axis) -> Result<LineProfile> {
    let g = image.grid;
    if g.is_empty() {
        return Err(Error::domain("pixel_line_profile", "image has no pixels along the requested axis"));
    }
    let (positions_m, photons) = match axis {
        Axis::X => {
            let row = g.ny / 2;
            ((0..g.nx).map(|i| g.x_center(i) * 1e-6).collect(), image.row(row).to_vec())
        }
        Axis::Y => {
            let col = g.nx / 2;
            ((0..g.ny).map(|j| g.y_center(j) * 1e-6).collect(), (0..g.ny).map(|j| image.value(col, j)).collect())
        }
    };
    Ok(LineProfile { axis, positions_m, photons })
}

/// Slit/wire far-field pattern sampled on a grid of spatial frequencies.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlitPattern {
    pub mu: f64,
    pub nu: f64,
    /// Spatial-frequency step, μm⁻¹.
    pub omega_step: f64,
    pub nx: usize,
    pub ny: usize,
    pub values: Vec<f64>,
}

pub fn render_slit_pattern(mu: f64, nu: f64, omega_step: f64, nx: usize, ny: usize) -> Result<SlitPattern> {
    const OP: &str = "render_slit_pattern";
    require_positive(OP, "slit half width", mu)?;
    require_positive(OP, "slit half height", nu)?;
    require_positive(OP, "frequency step", omega_step)?;
    let cx = 0.5 * (nx as f64 - 1.0);
    let cy = 0.5 * (ny as f64 - 1.0);
    let values = (0..nx * ny)
        .map(|idx| {
            let ox = (idx % nx) as f64 - cx;
            let oy = (idx / nx) as f64 - cy;
            slit_fraunhofer(mu, nu, ox * omega_step, oy * omega_step)
        })
        .collect();
    Ok(SlitPattern { mu, nu, omega_step, nx, ny, values })
}
