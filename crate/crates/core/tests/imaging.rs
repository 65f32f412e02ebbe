use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vacuumprobe::fourier_imaging::{
    focal_intensity, pixel_line_profile, render_focal_image, slit_fraunhofer, Axis, GridSpec, ProbeProfile, RectRegion,
};
use vacuumprobe::gaussian_optics::{GaussianBeam, Polarization};
use vacuumprobe::qed_vacuum::{phase_shift, PolarizationCombo};
use vacuumprobe::quadrature::gl8_composite_nodes;

/// ∫_lo^hi e^{-a t²} e^{-iωt} dt by composite Gauss–Legendre, four panels per
/// oscillation period.
fn gl_segment(a: f64, lo: f64, hi: f64, omega: f64) -> Complex64 {
    let period = if omega == 0.0 { f64::INFINITY } else { 2.0 * PI / omega.abs() };
    let h = (period / 4.0).min(0.25 / a.sqrt());
    let panels = ((hi - lo) / h).ceil().max(1.0) as usize;
    gl8_composite_nodes(lo, hi, panels)
        .into_iter()
        .map(|(t, w)| Complex64::from_polar(w * (-a * t * t).exp(), -omega * t))
        .sum()
}

/// Focal amplitude of the input field e^{-ar²}·(e^{iΦ} inside R, 1 outside),
/// summed over the nine pieces of the plane cut along the edges of R.
fn direct_amplitude(a: f64, region: &RectRegion, phi: f64, wx: f64, wy: f64) -> Complex64 {
    let reach = 7.0 / a.sqrt();
    let (x0, x1) = region.x_bounds();
    let (y0, y1) = region.y_bounds();
    let xs = [(x0 - reach, x0), (x0, x1), (x1, x1 + reach)];
    let ys = [(y0 - reach, y0), (y0, y1), (y1, y1 + reach)];
    let ix: Vec<Complex64> = xs.iter().map(|&(l, h)| gl_segment(a, l, h, wx)).collect();
    let iy: Vec<Complex64> = ys.iter().map(|&(l, h)| gl_segment(a, l, h, wy)).collect();
    let inside = Complex64::from_polar(1.0, phi);
    let mut total = Complex64::new(0.0, 0.0);
    for (i, jx) in ix.iter().enumerate() {
        for (j, jy) in iy.iter().enumerate() {
            let factor = if i == 1 && j == 1 { inside } else { Complex64::new(1.0, 0.0) };
            total += factor * jx * jy;
        }
    }
    total
}

#[test]
fn analytic_intensity_matches_direct_transform_off_centre() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let profile = ProbeProfile::from_photons(1e6, 0.3, 1.0, 2.0 * PI * 1e-6, 0.4).unwrap();
    let region = RectRegion::at(0.9, 0.6, (0.7, -0.35)).unwrap();
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let wx = rng.gen_range(-12.0..12.0);
        let wy = rng.gen_range(-12.0..12.0);
        let delta = rng.gen_range(-2.0..2.0);
        let got = focal_intensity(wx, wy, delta, &profile, &region);
        let amp = direct_amplitude(profile.gaussian_a, &region, delta + profile.offset_phase, wx, wy);
        let want = profile.intensity_prefactor() * amp.norm_sqr();
        worst = worst.max((got - want).abs() / want);
    }
    assert!(worst < 1e-6, "worst relative deviation {worst:e}");
}

#[test]
fn phase_object_ridges_sit_at_slit_zeros() {
    // Far from the pedestal a phase region with e^{iΦ} − 1 of unit modulus
    // diffracts like the aperture itself.
    let (mu, nu) = (2.0, 0.5);
    let a = 1e-6;
    let profile = ProbeProfile::new(1.0, a, 1.0, 2.0 * PI * 1e-6, 0.0).unwrap();
    let region = RectRegion::centered(mu, nu).unwrap();
    let phi = PI / 3.0;
    let norm = focal_intensity(0.02, 0.0, phi, &profile, &region) / slit_fraunhofer(mu, nu, 0.02, 0.0);
    for k in 1..6 {
        let zero = k as f64 * PI / mu;
        let lobe = (k as f64 + 0.5) * PI / mu;
        let at_zero = focal_intensity(zero, 0.0, phi, &profile, &region);
        let at_lobe = focal_intensity(lobe, 0.0, phi, &profile, &region);
        assert!(at_zero < 1e-6 * at_lobe, "k={k}: {at_zero:e} vs {at_lobe:e}");
        let shape = at_lobe / norm / slit_fraunhofer(mu, nu, lobe, 0.0);
        assert!((shape - 1.0).abs() < 1e-3, "k={k}: {shape}");
        let zero_y = k as f64 * PI / nu;
        assert!(focal_intensity(0.3, zero_y, phi, &profile, &region) < 1e-6 * at_lobe);
    }
}

struct Table1 {
    profile: ProbeProfile,
    region: RectRegion,
    delta: f64,
}

/// Target 10 kJ / 10 fs / 0.96 μm and probe 10 kJ / 12 fs / 3.6 μm at
/// 0.8 μm, probe expanded 5e4 times onto a 5 m lens; the signal region is the
/// 3.6 × 0.96 μm crossing footprint, magnified with the probe.
fn table1() -> Table1 {
    let target = GaussianBeam::new(0.8, 1e4, 10.0, 0.96, Polarization::State1).unwrap();
    let probe = GaussianBeam::new(0.8, 1e4, 12.0, 3.6, Polarization::State2).unwrap();
    let delta = phase_shift(probe.wavelength(), PolarizationCombo::of(&probe, &target), PI / 2.0, 1e4, 0.96, 1.0).unwrap();
    let expansion = 5e4;
    Table1 {
        profile: ProbeProfile::from_beam(&probe, expansion, 5.0, 0.0).unwrap(),
        region: RectRegion::centered(3.6, 0.96).unwrap().magnified(expansion).unwrap(),
        delta,
    }
}

fn fig5_grid() -> GridSpec {
    GridSpec::new(401, 401, 50.0).unwrap()
}

#[test]
fn signal_ridges_run_along_the_axes() {
    let t = table1();
    let grid = GridSpec::new(201, 201, 50.0).unwrap();
    let with = render_focal_image(&t.profile, &t.region, t.delta, grid).unwrap();
    let without = render_focal_image(&t.profile, &t.region, 0.0, grid).unwrap();
    let c = 100;
    for r in [20usize, 40, 60, 80] {
        let d = (r as f64 / 2f64.sqrt()).round() as usize;
        let signal = |ix: usize, iy: usize| with.value(ix, iy) - without.value(ix, iy);
        let on_x = signal(c + r, c);
        let on_y = signal(c, c + r);
        let diagonal = signal(c + d, c + d);
        assert!(on_x > 10.0 * diagonal && on_y > 10.0 * diagonal, "r={r}: {on_x:e} {on_y:e} {diagonal:e}");
    }
}

#[test]
fn signal_to_pedestal_ratio_grows_with_radius() {
    let t = table1();
    let grid = GridSpec::new(41, 41, 50.0).unwrap();
    let with = pixel_line_profile(&render_focal_image(&t.profile, &t.region, t.delta, grid).unwrap(), Axis::X).unwrap();
    let without = pixel_line_profile(&render_focal_image(&t.profile, &t.region, 0.0, grid).unwrap(), Axis::X).unwrap();
    let ratio: Vec<f64> = (21..41).map(|i| (with.photons[i] - without.photons[i]) / without.photons[i]).collect();
    for w in ratio.windows(2) {
        assert!(w[1] > w[0] || w[1].is_infinite(), "{ratio:?}");
    }
}

#[test]
fn table1_line_profile_golden_values() {
    let t = table1();
    let grid = fig5_grid();
    let img = render_focal_image(&t.profile, &t.region, t.delta, grid).unwrap();
    let x = pixel_line_profile(&img, Axis::X).unwrap();
    let y = pixel_line_profile(&img, Axis::Y).unwrap();
    assert_eq!(x.positions_m[200], 0.0);
    let pinned = [
        (&x, 220usize, GOLDEN_X_1MM),
        (&x, 300, GOLDEN_X_5MM),
        (&x, 400, GOLDEN_X_10MM),
        (&y, 220, GOLDEN_Y_1MM),
        (&y, 300, GOLDEN_Y_5MM),
        (&y, 400, GOLDEN_Y_10MM),
    ];
    for (line, i, want) in pinned {
        let got = line.photons[i];
        let (cx, cy) = match line.axis {
            Axis::X => (grid.x_center(i), 0.0),
            Axis::Y => (0.0, grid.y_center(i)),
        };
        let oracle = pixel_oracle(&t, cx, cy, grid.pitch);
        assert!((got / oracle - 1.0).abs() < 1e-9, "{:?}[{i}]: {got:e} vs oracle {oracle:e}", line.axis);
        assert!((got / want - 1.0).abs() < 1e-10, "{:?}[{i}] = {got:e}, pinned {want:e}", line.axis);
    }
}

/// Pixel photons from a dense tensor Gauss–Legendre rule over the focal
/// intensity density.
fn pixel_oracle(t: &Table1, cx: f64, cy: f64, pitch: f64) -> f64 {
    let k = t.profile.frequency_per_um();
    let xs = gl8_composite_nodes(cx - 0.5 * pitch, cx + 0.5 * pitch, 64);
    let ys = gl8_composite_nodes(cy - 0.5 * pitch, cy + 0.5 * pitch, 16);
    xs.iter()
        .map(|&(x, wx)| {
            ys.iter()
                .map(|&(y, wy)| wx * wy * focal_intensity(k * x, k * y, t.delta, &t.profile, &t.region))
                .sum::<f64>()
        })
        .sum()
}

// Photons per 50 μm pixel at 1, 5 and 10 mm from the axis, δ from the
// `table1` preset. Written exactly as exported.
#[allow(clippy::excessive_precision)]
mod golden {
    pub const GOLDEN_X_1MM: f64 = 9.0067061594800725e3;
    pub const GOLDEN_X_5MM: f64 = 3.6008058706315228e2;
    pub const GOLDEN_X_10MM: f64 = 9.0018681504345537e1;
    pub const GOLDEN_Y_1MM: f64 = 6.6524191027284935e4;
    pub const GOLDEN_Y_5MM: f64 = 2.6585017972291353e3;
    pub const GOLDEN_Y_10MM: f64 = 6.6460619820510033e2;
}
use golden::*;
