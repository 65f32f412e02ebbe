//! χ² template fitting of focal-plane images.
//!
//! The transverse probe profile is divided into rectangles `R_i` carrying
//! phases `φ_i`; the rest of the plane carries the exterior phase `φ_ext`.
//! The focal amplitude is
//!
//! ```text
//! ψ(W) = Σ_i (e^{iφ_i} − e^{iφ_ext}) I_i(W) + e^{iφ_ext} I_∞(W),
//! ```
//!
//! with `I_i` the envelope transform over `R_i` and `I_∞` the full-plane
//! pedestal. A physical template δ_i enters as `φ_i → φ_i + κ δ_i` and κ is
//! found by minimizing
//!
//! ```text
//! χ²(κ) = 1/(N_W − 1) Σ_W (I_meas − I_model)² / (I_meas + I_model)
//! ```
//!
//! over the sampling points outside a central mask.

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{require_finite, require_positive, Error, Result};
use crate::fourier_imaging::{phase_factor, region_transform, ProbeProfile, RectRegion};
use crate::gauss_integral::line_transform;

/// Regions of the transverse plane with their phases (rad).
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseMap {
    regions: Vec<RectRegion>,
    phases: Vec<f64>,
    exterior_phase: f64,
}

/// Serialized form of one region of a [`PhaseMap`] or [`SignalTemplate`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseCell {
    pub x0: f64,
    pub y0: f64,
    pub half_w: f64,
    pub half_h: f64,
    pub phase: f64,
}

fn overlaps(a: &RectRegion, b: &RectRegion) -> bool {
    let area = a.overlap_area(b);
    area > 1e-12 * a.area().min(b.area())
}

impl PhaseMap {
    pub fn new(regions: Vec<RectRegion>, phases: Vec<f64>) -> Result<Self> {
        const OP: &str = "PhaseMap::new";
        if regions.len() != phases.len() {
            return Err(Error::domain(
                OP,
                format!("{} regions but {} phases", regions.len(), phases.len()),
            ));
        }
        for &p in &phases {
            require_finite(OP, "phase", p)?;
        }
        for i in 0..regions.len() {
            for j in i + 1..regions.len() {
                if overlaps(&regions[i], &regions[j]) {
                    return Err(Error::domain(OP, format!("regions {i} and {j} overlap")));
                }
            }
        }
        Ok(PhaseMap {
            regions,
            phases,
            exterior_phase: 0.0,
        })
    }

    /// `nx × ny` cells of size `cell_w × cell_h` (μm) tiling a centred
    /// rectangle, raster order with x fastest, all phases zero.
    pub fn grid(nx: usize, ny: usize, cell_w: f64, cell_h: f64) -> Result<Self> {
        require_positive("PhaseMap::grid", "cell width", cell_w)?;
        require_positive("PhaseMap::grid", "cell height", cell_h)?;
        let mut regions = Vec::with_capacity(nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                let cx = (i as f64 - 0.5 * (nx as f64 - 1.0)) * cell_w;
                let cy = (j as f64 - 0.5 * (ny as f64 - 1.0)) * cell_h;
                regions.push(RectRegion::at(0.5 * cell_w, 0.5 * cell_h, (cx, cy))?);
            }
        }
        let n = regions.len();
        Ok(PhaseMap {
            regions,
            phases: vec![0.0; n],
            exterior_phase: 0.0,
        })
    }

    pub fn from_cells(cells: &[PhaseCell]) -> Result<Self> {
        let regions = cells
            .iter()
            .map(|c| RectRegion::at(c.half_w, c.half_h, (c.x0, c.y0)))
            .collect::<Result<Vec<_>>>()?;
        Self::new(regions, cells.iter().map(|c| c.phase).collect())
    }

    pub fn to_cells(&self) -> Vec<PhaseCell> {
        self.regions
            .iter()
            .zip(&self.phases)
            .map(|(r, &phase)| PhaseCell {
                x0: r.center.0,
                y0: r.center.1,
                half_w: r.half_width,
                half_h: r.half_height,
                phase,
            })
            .collect()
    }

    pub fn len(&self) -> usize {
        self.regions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.regions.is_empty()
    }

    pub fn regions(&self) -> &[RectRegion] {
        &self.regions
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    pub fn exterior_phase(&self) -> f64 {
        self.exterior_phase
    }

    pub fn with_phases(&self, phases: Vec<f64>) -> Result<Self> {
        if phases.len() != self.len() {
            return Err(Error::domain("PhaseMap::with_phases", "phase count does not match region count"));
        }
        let mut m = self.clone();
        m.phases = phases;
        Ok(m)
    }

    /// Add `c` to every phase including the exterior; leaves all intensities unchanged.
    pub fn gauge_shifted(&self, c: f64) -> Self {
        let mut m = self.clone();
        m.phases.iter_mut().for_each(|p| *p += c);
        m.exterior_phase += c;
        m
    }

    /// Gauge-equivalent map with region 0 at phase zero.
    pub fn anchored_to_first_region(&self) -> Self {
        match self.phases.first() {
            Some(&p0) => self.gauge_shifted(-p0),
            None => self.clone(),
        }
    }

    /// Root-mean-square of the region phases.
    pub fn rms(&self) -> f64 {
        if self.phases.is_empty() {
            return 0.0;
        }
        (self.phases.iter().map(|p| p * p).sum::<f64>() / self.phases.len() as f64).sqrt()
    }

    fn same_grid(&self, regions: &[RectRegion]) -> bool {
        self.regions.len() == regions.len()
            && self.regions.iter().zip(regions).all(|(a, b)| {
                let tol = 1e-12 * (a.half_width + a.half_height);
                (a.half_width - b.half_width).abs() <= tol
                    && (a.half_height - b.half_height).abs() <= tol
                    && (a.center.0 - b.center.0).abs() <= tol
                    && (a.center.1 - b.center.1).abs() <= tol
            })
    }
}

/// Physical phase shift δ_i per region, scaled by κ in the fit.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalTemplate {
    regions: Vec<RectRegion>,
    deltas: Vec<f64>,
    pub note: String,
}

impl SignalTemplate {
    pub fn new(regions: Vec<RectRegion>, deltas: Vec<f64>, note: impl Into<String>) -> Result<Self> {
        const OP: &str = "SignalTemplate::new";
        if regions.len() != deltas.len() {
            return Err(Error::domain(OP, "region and phase-shift counts differ"));
        }
        for &d in &deltas {
            require_finite(OP, "phase shift", d)?;
        }
        Ok(SignalTemplate {
            regions,
            deltas,
            note: note.into(),
        })
    }

    /// δ on the cells of `map` weighted by the fraction of each cell covered by `footprint`.
    pub fn from_footprint(map: &PhaseMap, footprint: &RectRegion, delta: f64) -> Result<Self> {
        let deltas = map
            .regions
            .iter()
            .map(|r| delta * r.overlap_area(footprint) / r.area())
            .collect();
        Self::new(
            map.regions.clone(),
            deltas,
            format!(
                "footprint {}x{} um centred at ({}, {})",
                2.0 * footprint.half_width,
                2.0 * footprint.half_height,
                footprint.center.0,
                footprint.center.1
            ),
        )
    }

    /// Unit shift on region `index` only.
    pub fn single_region(map: &PhaseMap, index: usize, delta: f64) -> Result<Self> {
        if index >= map.len() {
            return Err(Error::domain("SignalTemplate::single_region", "region index out of range"));
        }
        let mut deltas = vec![0.0; map.len()];
        deltas[index] = delta;
        Self::new(map.regions.clone(), deltas, format!("region {index}"))
    }

    pub fn regions(&self) -> &[RectRegion] {
        &self.regions
    }

    pub fn deltas(&self) -> &[f64] {
        &self.deltas
    }

    pub fn to_cells(&self) -> Vec<PhaseCell> {
        self.regions
            .iter()
            .zip(&self.deltas)
            .map(|(r, &phase)| PhaseCell {
                x0: r.center.0,
                y0: r.center.1,
                half_w: r.half_width,
                half_h: r.half_height,
                phase,
            })
            .collect()
    }
}

/// I_i(W) = ∫_{R_i} e^{-a(x²+y²)} e^{-i(ωx x + ωy y)} dx dy, μm².
pub fn region_integral(region: &RectRegion, omega_x: f64, omega_y: f64, a: f64) -> Complex64 {
    region_transform(region, omega_x, omega_y, a)
}

fn region_phases(map: &PhaseMap, template: &SignalTemplate, offset: f64, kappa: f64) -> Vec<f64> {
    map.phases
        .iter()
        .zip(&template.deltas)
        .map(|(&phi, &d)| {
            let extra = if d != 0.0 { offset + kappa * d } else { 0.0 };
            phi + extra - map.exterior_phase
        })
        .collect()
}

fn check_aligned(op: &'static str, map: &PhaseMap, template: &SignalTemplate) -> Result<()> {
    if map.same_grid(&template.regions) {
        Ok(())
    } else {
        Err(Error::MismatchedGrid { op })
    }
}

fn amplitude(rel_phases: &[f64], integrals: &[Complex64], pedestal: f64) -> Complex64 {
    let mut psi = Complex64::new(pedestal, 0.0);
    for (&p, &i) in rel_phases.iter().zip(integrals) {
        if p != 0.0 {
            psi += phase_factor(p) * i;
        }
    }
    psi
}

/// Focal-plane photon density at W for phases `φ + κδ` (offset phase added on
/// the template support).
pub fn model_intensity(
    profile: &ProbeProfile,
    map: &PhaseMap,
    template: &SignalTemplate,
    kappa: f64,
    omega: (f64, f64),
) -> Result<f64> {
    check_aligned("model_intensity", map, template)?;
    let a = profile.gaussian_a;
    let integrals: Vec<Complex64> = map.regions.iter().map(|r| region_integral(r, omega.0, omega.1, a)).collect();
    let pedestal = line_transform(a, omega.0) * line_transform(a, omega.1);
    let rel = region_phases(map, template, profile.offset_phase, kappa);
    Ok(profile.intensity_prefactor() * amplitude(&rel, &integrals, pedestal).norm_sqr())
}

/// Intensities sampled at focal-plane positions (μm), photons/μm².
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FocalSamples {
    pub positions: Vec<(f64, f64)>,
    pub intensity: Vec<f64>,
}

impl FocalSamples {
    /// Square `n × n` sampling lattice over `[-half, half]²` with zero intensities.
    pub fn lattice(n: usize, half_extent_um: f64) -> Self {
        let step = if n > 1 { 2.0 * half_extent_um / (n as f64 - 1.0) } else { 0.0 };
        let positions = (0..n * n)
            .map(|k| {
                let i = (k % n) as f64;
                let j = (k / n) as f64;
                (-half_extent_um + i * step, -half_extent_um + j * step)
            })
            .collect();
        FocalSamples {
            positions,
            intensity: vec![0.0; n * n],
        }
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }
}

/// Evaluate the model at every position of `at`.
pub fn synthesize_samples(
    profile: &ProbeProfile,
    map: &PhaseMap,
    template: &SignalTemplate,
    kappa: f64,
    at: &FocalSamples,
) -> Result<FocalSamples> {
    check_aligned("synthesize_samples", map, template)?;
    let k = profile.frequency_per_um();
    let intensity = at
        .positions
        .par_iter()
        .map(|&(x, y)| model_intensity(profile, map, template, kappa, (k * x, k * y)))
        .collect::<Result<Vec<_>>>()?;
    Ok(FocalSamples {
        positions: at.positions.clone(),
        intensity,
    })
}

/// Map on the regions of `base` with phases drawn uniformly from [−1, 1) and
/// rescaled to the given RMS.
pub fn random_phase_map<R: Rng + ?Sized>(base: &PhaseMap, rms: f64, rng: &mut R) -> Result<PhaseMap> {
    const OP: &str = "random_phase_map";
    require_finite(OP, "RMS", rms)?;
    if rms < 0.0 {
        return Err(Error::domain(OP, "RMS must be non-negative"));
    }
    let raw: Vec<f64> = (0..base.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let norm = (raw.iter().map(|v| v * v).sum::<f64>() / raw.len().max(1) as f64).sqrt();
    if rms == 0.0 || norm == 0.0 {
        return base.with_phases(vec![0.0; base.len()]);
    }
    base.with_phases(raw.iter().map(|v| v * rms / norm).collect())
}

/// Multiply every intensity by `1 + ε`, ε uniform in [−level, level).
pub fn perturb_samples<R: Rng + ?Sized>(meas: &FocalSamples, level: f64, rng: &mut R) -> Result<FocalSamples> {
    const OP: &str = "perturb_samples";
    require_finite(OP, "noise level", level)?;
    if !(0.0..1.0).contains(&level) {
        return Err(Error::domain(OP, format!("noise level must lie in [0, 1), got {level}")));
    }
    let mut out = meas.clone();
    if level > 0.0 {
        for v in out.intensity.iter_mut() {
            *v *= 1.0 + rng.gen_range(-level..level);
        }
    }
    Ok(out)
}

/// Sampling points closer than `radius` (μm) to the optical axis are excluded.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CentralMask {
    pub radius: f64,
}

impl CentralMask {
    /// Five pedestal standard deviations.
    pub fn for_profile(profile: &ProbeProfile) -> Self {
        CentralMask {
            radius: 5.0 * profile.pedestal_sigma(),
        }
    }

    pub fn excludes(&self, x: f64, y: f64) -> bool {
        x * x + y * y < self.radius * self.radius
    }
}

/// κ grid: `min, min + step, …, max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KappaScan {
    pub min: f64,
    pub max: f64,
    pub step: f64,
}

impl Default for KappaScan {
    fn default() -> Self {
        KappaScan {
            min: -2.0,
            max: 2.0,
            step: 1e-2,
        }
    }
}

impl KappaScan {
    /// The scan grid.
    pub fn values(&self) -> Result<Vec<f64>> {
        self.points("KappaScan::values")
    }

    fn points(&self, op: &'static str) -> Result<Vec<f64>> {
        require_finite(op, "scan minimum", self.min)?;
        require_finite(op, "scan maximum", self.max)?;
        require_positive(op, "scan step", self.step)?;
        if self.max < self.min {
            return Err(Error::domain(op, "scan maximum is below the minimum"));
        }
        let n = ((self.max - self.min) / self.step + 1e-9).floor() as usize + 1;
        if n > 10_000_000 {
            return Err(Error::domain(op, "scan has more than 1e7 points"));
        }
        Ok((0..n).map(|k| self.min + k as f64 * self.step).collect())
    }
}

/// Outcome of a κ scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub kappa_hat: f64,
    pub chi2_min: f64,
    pub scan_step: f64,
    pub n_points: usize,
    pub scan: KappaScan,
    /// The best grid point was the first or last one; widen the range.
    pub boundary_hit: bool,
    /// χ²(−κ̂) equals χ²(κ̂): the data cannot tell the sign of the shift.
    pub sign_degenerate: bool,
}

struct Prepared {
    meas: Vec<f64>,
    /// Row-major `[sample][region]`.
    integrals: Vec<Complex64>,
    pedestal: Vec<f64>,
    n_regions: usize,
}

impl Prepared {
    fn new(op: &'static str, meas: &FocalSamples, profile: &ProbeProfile, regions: &[RectRegion], mask: &CentralMask) -> Result<Self> {
        if meas.positions.len() != meas.intensity.len() {
            return Err(Error::domain(op, "positions and intensities differ in length"));
        }
        let a = profile.gaussian_a;
        let k = profile.frequency_per_um();
        let kept: Vec<usize> = (0..meas.len())
            .filter(|&i| {
                let (x, y) = meas.positions[i];
                !mask.excludes(x, y)
            })
            .collect();
        if kept.is_empty() {
            return Err(Error::domain(op, "no sampling points remain outside the central mask"));
        }
        let integrals: Vec<Complex64> = kept
            .par_iter()
            .flat_map_iter(|&i| {
                let (x, y) = meas.positions[i];
                regions.iter().map(move |r| region_integral(r, k * x, k * y, a))
            })
            .collect();
        let pedestal = kept
            .iter()
            .map(|&i| {
                let (x, y) = meas.positions[i];
                line_transform(a, k * x) * line_transform(a, k * y)
            })
            .collect();
        Ok(Prepared {
            meas: kept.iter().map(|&i| meas.intensity[i]).collect(),
            integrals,
            pedestal,
            n_regions: regions.len(),
        })
    }

    fn len(&self) -> usize {
        self.meas.len()
    }

    fn row(&self, s: usize) -> &[Complex64] {
        &self.integrals[s * self.n_regions..(s + 1) * self.n_regions]
    }
}

fn chi2_term(meas: f64, model: f64) -> f64 {
    let den = meas + model;
    if den > 0.0 {
        let d = meas - model;
        d * d / den
    } else {
        0.0
    }
}

fn normalize(sum: f64, n: usize) -> f64 {
    if n > 1 {
        sum / (n as f64 - 1.0)
    } else {
        sum
    }
}

/// A measured image together with the model it is compared against.
pub struct FitProblem {
    prepared: Prepared,
    map: PhaseMap,
    template: SignalTemplate,
    prefactor: f64,
    offset: f64,
}

impl FitProblem {
    pub fn new(
        meas: &FocalSamples,
        profile: &ProbeProfile,
        map: &PhaseMap,
        template: &SignalTemplate,
        mask: &CentralMask,
    ) -> Result<Self> {
        const OP: &str = "chi_square";
        check_aligned(OP, map, template)?;
        let prepared = Prepared::new(OP, meas, profile, &map.regions, mask)?;
        if prepared.len() < 2 {
            return Err(Error::domain(OP, "need at least two sampling points for one free parameter"));
        }
        Ok(FitProblem {
            prepared,
            map: map.clone(),
            template: template.clone(),
            prefactor: profile.intensity_prefactor(),
            offset: profile.offset_phase,
        })
    }

    pub fn n_points(&self) -> usize {
        self.prepared.len()
    }

    pub fn chi_square(&self, kappa: f64) -> f64 {
        let rel = region_phases(&self.map, &self.template, self.offset, kappa);
        let p = &self.prepared;
        let sum: f64 = (0..p.len())
            .map(|s| {
                let model = self.prefactor * amplitude(&rel, p.row(s), p.pedestal[s]).norm_sqr();
                chi2_term(p.meas[s], model)
            })
            .sum();
        normalize(sum, p.len())
    }
}

/// χ² of `meas` against the model at κ.
pub fn chi_square(
    meas: &FocalSamples,
    profile: &ProbeProfile,
    map: &PhaseMap,
    template: &SignalTemplate,
    kappa: f64,
    mask: &CentralMask,
) -> Result<f64> {
    Ok(FitProblem::new(meas, profile, map, template, mask)?.chi_square(kappa))
}

const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Golden-section minimum of `f` on [lo, hi] to bracket width `tol`.
fn golden_section<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64) {
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > tol {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        }
    }
    let x = 0.5 * (lo + hi);
    (x, f(x))
}

/// Relative refinement of the κ grid by golden section.
pub const REFINEMENT: f64 = 1e-4;

fn scan_and_refine<F: Fn(f64) -> f64 + Sync>(f: F, scan: &KappaScan, op: &'static str) -> Result<(f64, f64, bool)> {
    let grid = scan.points(op)?;
    let values: Vec<f64> = grid.par_iter().map(|&k| f(k)).collect();
    let (best, _) = values
        .iter()
        .enumerate()
        .fold((0usize, f64::INFINITY), |(bi, bv), (i, &v)| if v < bv { (i, v) } else { (bi, bv) });
    let boundary = grid.len() > 1 && (best == 0 || best == grid.len() - 1);
    let lo = if best > 0 { grid[best - 1] } else { grid[0] };
    let hi = if best + 1 < grid.len() { grid[best + 1] } else { grid[best] };
    let (k, v) = if hi > lo {
        golden_section(&f, lo, hi, REFINEMENT * scan.step)
    } else {
        (grid[best], values[best])
    };
    if v <= values[best] {
        Ok((k, v, boundary))
    } else {
        Ok((grid[best], values[best], boundary))
    }
}

/// Minimize χ²(κ) over `scan`, then refine around the best grid point to
/// `1e-4` of the step. A minimum on the scan boundary is flagged.
pub fn fit_kappa(
    meas: &FocalSamples,
    profile: &ProbeProfile,
    map: &PhaseMap,
    template: &SignalTemplate,
    scan: KappaScan,
    mask: &CentralMask,
) -> Result<FitResult> {
    let problem = FitProblem::new(meas, profile, map, template, mask)?;
    let (kappa_hat, chi2_min, boundary_hit) = scan_and_refine(|k| problem.chi_square(k), &scan, "fit_kappa")?;
    let mirrored = problem.chi_square(-kappa_hat);
    let scale = problem.chi_square(0.0).max(f64::MIN_POSITIVE);
    Ok(FitResult {
        kappa_hat,
        chi2_min,
        scan_step: scan.step,
        n_points: problem.n_points(),
        scan,
        boundary_hit,
        sign_degenerate: (mirrored - chi2_min).abs() <= 1e-9 * scale,
    })
}

/// Schedule of the coordinate-wise reconstruction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepOptions {
    pub max_sweeps: usize,
    /// Stop when a sweep lowers χ² by less than this fraction.
    pub tolerance: f64,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions {
            max_sweeps: 20,
            tolerance: 1e-12,
        }
    }
}

/// Default per-region scan: ±λ/100 of phase.
pub fn default_region_scan() -> KappaScan {
    let r = 2.0 * std::f64::consts::PI / 100.0;
    KappaScan {
        min: -r,
        max: r,
        step: r / 50.0,
    }
}

#[derive(Debug, Clone)]
pub struct Reconstruction {
    pub map: PhaseMap,
    pub chi2: f64,
    pub sweeps: usize,
    pub converged: bool,
}

/// Recover per-region phases by scanning each region's phase in turn (raster
/// order), keeping the others fixed, until a full sweep no longer lowers χ².
/// The scan range is relative to the current phase of the region. The
/// exterior phase stays fixed and anchors the global gauge.
pub fn reconstruct_phase_map(
    meas_set: &[FocalSamples],
    profile: &ProbeProfile,
    initial: &PhaseMap,
    scan: KappaScan,
    mask: &CentralMask,
    opts: SweepOptions,
) -> Result<Reconstruction> {
    const OP: &str = "reconstruct_phase_map";
    if meas_set.is_empty() {
        return Err(Error::domain(OP, "no measured images"));
    }
    scan.points(OP)?;
    let prepared = meas_set
        .iter()
        .map(|m| Prepared::new(OP, m, profile, &initial.regions, mask))
        .collect::<Result<Vec<_>>>()?;
    let n_w: usize = prepared.iter().map(|p| p.len()).sum();
    if n_w < initial.len() {
        return Err(Error::domain(
            OP,
            format!("{n_w} sampling points cannot determine {} region phases", initial.len()),
        ));
    }
    let prefactor = profile.intensity_prefactor();
    let mut phases: Vec<f64> = initial.phases.iter().map(|p| p - initial.exterior_phase).collect();
    let mut psi: Vec<Vec<Complex64>> = prepared
        .iter()
        .map(|p| (0..p.len()).map(|s| amplitude(&phases, p.row(s), p.pedestal[s])).collect())
        .collect();

    let total_chi2 = |psi: &Vec<Vec<Complex64>>| -> f64 {
        prepared
            .iter()
            .zip(psi)
            .map(|(p, amps)| {
                let sum: f64 = amps.iter().zip(&p.meas).map(|(a, &m)| chi2_term(m, prefactor * a.norm_sqr())).sum();
                normalize(sum, p.len())
            })
            .sum::<f64>()
            / prepared.len() as f64
    };

    let mut chi2 = total_chi2(&psi);
    let mut sweeps = 0;
    let mut converged = chi2 == 0.0;
    while !converged && sweeps < opts.max_sweeps {
        sweeps += 1;
        let before = chi2;
        #[allow(clippy::needless_range_loop)]
        for r in 0..phases.len() {
            let current = phases[r];
            let base = phase_factor(current);
            let trial = |dphi: f64| -> f64 {
                let change = phase_factor(current + dphi) - base;
                prepared
                    .iter()
                    .zip(&psi)
                    .map(|(p, amps)| {
                        let sum: f64 = (0..p.len())
                            .map(|s| {
                                let a = amps[s] + change * p.integrals[s * p.n_regions + r];
                                chi2_term(p.meas[s], prefactor * a.norm_sqr())
                            })
                            .sum();
                        normalize(sum, p.len())
                    })
                    .sum::<f64>()
                    / prepared.len() as f64
            };
            let (dphi, value, _) = scan_and_refine(trial, &scan, OP)?;
            if value < chi2 && dphi != 0.0 {
                phases[r] = current + dphi;
                let change = phase_factor(phases[r]) - base;
                for (p, amps) in prepared.iter().zip(psi.iter_mut()) {
                    for (s, a) in amps.iter_mut().enumerate() {
                        *a += change * p.integrals[s * p.n_regions + r];
                    }
                }
                chi2 = total_chi2(&psi);
            }
        }
        converged = chi2 == 0.0 || before - chi2 < opts.tolerance * before;
    }
    let map = initial.with_phases(phases.iter().map(|p| p + initial.exterior_phase).collect())?;
    Ok(Reconstruction {
        map,
        chi2,
        sweeps,
        converged,
    })
}
