//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any fails.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;
use vacuumprobe::fourier_imaging::{
    focal_intensity, focal_plane_total, render_focal_image, GridSpec, ProbeProfile, RectRegion,
};
use vacuumprobe::qed_vacuum::{
    n0_constant, plasma_index_shift, qed_elastic_cross_section, refractive_shift, PlasmaModel, PolarizationCombo,
};
use vacuumprobe::quadrature::gl8_composite_nodes;
use vacuumprobe::resonance_search::{
    averaged_amplitude_squared, bw_integral, decay_rate, differential_cross_section, resonant_amplitude_squared,
    solve_kinematics, AveragingMethod, FieldKind, LightField,
};
use vacuumprobe_cli::config::{parse_toml, Scenario};
use vacuumprobe_cli::run_scenario;
use vacuumprobe_cli::scenarios::{table1_report, Table1Setup};

fn close(got: f64, want: f64, rel: f64) -> bool {
    (got / want - 1.0).abs() <= rel
}

fn check(ok: bool, what: impl std::fmt::Display) {
    assert!(ok, "{what}");
}

fn within(limit: Duration, start: Instant) {
    let t = start.elapsed();
    check(t < limit, format!("took {t:?}, limit {limit:?}"));
}

/// Run a scenario from TOML text into a fresh directory.
fn run_toml(scenario: Scenario, toml: &str, seed: u64) -> (tempfile::TempDir, Vec<PathBuf>) {
    let dir = tempfile::tempdir().unwrap();
    let cfg = parse_toml(toml).unwrap();
    let files = run_scenario(scenario, &cfg, seed, dir.path()).unwrap();
    (dir, files)
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

/// Columns of a CSV written by the runner, keyed by header name.
fn read_csv(path: &Path) -> BTreeMap<String, Vec<String>> {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header: Vec<String> = lines.next().unwrap().split(',').map(str::to_string).collect();
    let mut cols: BTreeMap<String, Vec<String>> = header.iter().map(|h| (h.clone(), Vec::new())).collect();
    for line in lines {
        for (h, v) in header.iter().zip(line.split(',')) {
            cols.get_mut(h).unwrap().push(v.to_string());
        }
    }
    cols
}

fn floats(cols: &BTreeMap<String, Vec<String>>, name: &str) -> Vec<f64> {
    cols[name].iter().map(|v| v.parse().unwrap()).collect()
}

fn table1_reproduction() {
    let start = Instant::now();
    let r = table1_report(&Table1Setup::new().unwrap()).unwrap();
    check(close(r.phase_shift, 3.17e-7, 0.01), format!("δ = {:e}", r.phase_shift));
    check(close(r.refractive_shift, 1.34e-8, 0.01), format!("δn = {:e}", r.refractive_shift));
    check(close(r.target_rayleigh_length_um, 3.6, 0.01), format!("z_Rt = {}", r.target_rayleigh_length_um));
    check(close(r.probe_rayleigh_length_um, 50.9, 0.01), format!("z_Rp = {}", r.probe_rayleigh_length_um));
    check(close(r.target_photons, 4.03e22, 0.005), format!("photons = {:e}", r.target_photons));
    within(Duration::from_secs(1), start);
}

/// (973/10125π) α² r_e² (ω/m_e)⁶ from tabulated CODATA 2018 values, barn.
fn hand_sigma(omega_ev: f64) -> f64 {
    let alpha = 7.297_352_569_3e-3;
    let r_e_cm = 2.817_940_326_2e-13;
    let m_e_ev = 510_998.950_00;
    973.0 / (10125.0 * PI) * alpha * alpha * r_e_cm * r_e_cm * (omega_ev / m_e_ev).powi(6) * 1e24
}

fn qed_constants() {
    let start = Instant::now();
    let n0 = n0_constant();
    check(close(n0, 1.67e-12, 0.01), format!("N₀ = {n0:e}"));
    // (2/45) α² ħ³/(m_e⁴ c⁵) in SI, converted to μm³/J.
    let (hbar, m_e, c, alpha): (f64, f64, f64, f64) = (1.054_571_817e-34, 9.109_383_701_5e-31, 299_792_458.0, 7.297_352_569_3e-3);
    let n0_si = 2.0 / 45.0 * alpha * alpha * hbar.powi(3) / (m_e.powi(4) * c.powi(5)) * 1e18;
    check(close(n0, n0_si, 1e-6), format!("N₀ {n0:e} vs SI {n0_si:e}"));
    let sigma = qed_elastic_cross_section(1.0).unwrap();
    check((1e-42..=1e-41).contains(&sigma), format!("σ(1 eV) = {sigma:e} b"));
    check(close(sigma, hand_sigma(1.0), 0.05), format!("σ {sigma:e} vs hand {:e}", hand_sigma(1.0)));
    within(Duration::from_secs(1), start);
}

/// ∫_lo^hi e^{-a t²} e^{-iωt} dt, four GL8 panels per oscillation period.
fn gl_segment(a: f64, lo: f64, hi: f64, omega: f64) -> (f64, f64) {
    let period = if omega == 0.0 { f64::INFINITY } else { 2.0 * PI / omega.abs() };
    let h = (period / 4.0).min(0.25 / a.sqrt());
    let panels = ((hi - lo) / h).ceil().max(1.0) as usize;
    gl8_composite_nodes(lo, hi, panels).into_iter().fold((0.0, 0.0), |(re, im), (t, w)| {
        let g = w * (-a * t * t).exp();
        (re + g * (omega * t).cos(), im - g * (omega * t).sin())
    })
}

/// |ψ|² of e^{-ar²}·(e^{iΦ} in R, 1 outside) by direct quadrature over the
/// nine pieces of the plane cut along the edges of R.
fn direct_intensity(profile: &ProbeProfile, region: &RectRegion, phi: f64, wx: f64, wy: f64) -> f64 {
    let a = profile.gaussian_a;
    let reach = 7.0 / a.sqrt();
    let (x0, x1) = region.x_bounds();
    let (y0, y1) = region.y_bounds();
    let ix: Vec<(f64, f64)> = [(x0 - reach, x0), (x0, x1), (x1, x1 + reach)].iter().map(|&(l, h)| gl_segment(a, l, h, wx)).collect();
    let iy: Vec<(f64, f64)> = [(y0 - reach, y0), (y0, y1), (y1, y1 + reach)].iter().map(|&(l, h)| gl_segment(a, l, h, wy)).collect();
    let (mut re, mut im) = (0.0, 0.0);
    for (i, jx) in ix.iter().enumerate() {
        for (j, jy) in iy.iter().enumerate() {
            let (pr, pi) = (jx.0 * jy.0 - jx.1 * jy.1, jx.0 * jy.1 + jx.1 * jy.0);
            let (fr, fi) = if i == 1 && j == 1 { (phi.cos(), phi.sin()) } else { (1.0, 0.0) };
            re += fr * pr - fi * pi;
            im += fr * pi + fi * pr;
        }
    }
    profile.intensity_prefactor() * (re * re + im * im)
}

fn fourier_imaging_oracle() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let profile = ProbeProfile::from_photons(1e6, 0.3, 1.0, 2.0 * PI * 1e-6, 0.4).unwrap();
    let region = RectRegion::at(0.9, 0.6, (0.7, -0.35)).unwrap();
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let (wx, wy) = (rng.gen_range(-12.0..12.0), rng.gen_range(-12.0..12.0));
        let delta = rng.gen_range(-2.0..2.0);
        let got = focal_intensity(wx, wy, delta, &profile, &region);
        let want = direct_intensity(&profile, &region, delta + profile.offset_phase, wx, wy);
        worst = worst.max((got / want - 1.0).abs());
    }
    check(worst < 1e-6, format!("analytic vs direct transform: worst {worst:e}"));

    let setup = Table1Setup::new().unwrap();
    let t1_profile = setup.profile().unwrap();
    let t1_region = setup.region().unwrap();
    for (p, r, d) in [(&t1_profile, &t1_region, setup.phase_shift().unwrap()), (&profile, &region, 1.3)] {
        let b = focal_plane_total(p, r, d);
        check(close(b.focal_total, b.input_total, 1e-4), format!("Parseval {:e} vs {:e}", b.focal_total, b.input_total));
    }

    // 512 × 512 pixels of 0.5 μm: the central 40 × 40 pixels are the 20 × 20 μm² square.
    let grid = GridSpec::new(512, 512, 0.5).unwrap();
    let pedestal = render_focal_image(&t1_profile, &t1_region, 0.0, grid).unwrap();
    let inside: f64 = (236..276).flat_map(|j| (236..276).map(move |i| (i, j))).map(|(i, j)| pedestal.value(i, j)).sum();
    let fraction = inside / t1_profile.total_photons();
    check(fraction >= 0.999, format!("pedestal fraction in 20×20 μm² = {fraction}"));
    let with_signal = render_focal_image(&t1_profile, &t1_region, setup.phase_shift().unwrap(), grid).unwrap();
    check(with_signal.total() > 0.0, "signal image is empty");
    within(Duration::from_secs(60), start);
}

fn fit_toml(background_rms: f64, offset: f64) -> String {
    format!(
        r#"
schema_version = 1
[fit]
kappa_true = 1.0
[fit.profile]
photons = 1e10
gaussian_a = 0.25
wavelength_um = 1.0
focal_length_m = 6.283185307179586e-6
offset_phase = {offset}
[fit.map]
nx = 4
ny = 4
cell_width_um = 1.0
cell_height_um = 1.0
background_rms = {background_rms}
[fit.template]
half_width_um = 1.0
half_height_um = 1.0
delta = 1e-3
[fit.samples]
n = 64
half_extent_um = 12.0
[fit.scan]
min = -2.0
max = 2.0
step = 0.01
"#
    )
}

fn phase_fit_self_consistency() {
    let start = Instant::now();
    for &(rms, offset) in &[(0.0, PI / 2.0), (1e-2, PI / 2.0), (0.0, 0.0)] {
        let (dir, _) = run_toml(Scenario::Fit, &fit_toml(rms, offset), 5);
        let report = read_json(&dir.path().join("fit.json"));
        let fit = &report["fit"];
        let kappa = fit["kappa_hat"].as_f64().unwrap();
        let step = fit["scan_step"].as_f64().unwrap();
        check(report["background"].as_array().unwrap().len() == 16, "N_X != 16");
        check(fit["n_points"].as_u64().unwrap() <= 4096 && report["samples"].as_u64() == fit["n_points"].as_u64(), "N_W");
        let degenerate = fit["sign_degenerate"].as_bool().unwrap();
        if offset == 0.0 {
            check(degenerate, "κ ↔ −κ degeneracy missing at offset 0");
            check((kappa.abs() - 1.0).abs() <= 1e-4 * step, format!("|κ̂| = {kappa}"));
        } else {
            check(!degenerate, format!("degeneracy not broken at offset π/2 (rms {rms})"));
            check((kappa - 1.0).abs() <= 1e-4 * step, format!("κ̂ = {kappa} (rms {rms})"));
        }
    }
    within(Duration::from_secs(300), start);
}

fn kinematics_closure() {
    let start = Instant::now();
    let toml = "schema_version = 1\n[kinematics]\nomega_ev = 1.0\nrandom = 10000\n";
    let (dir, _) = run_toml(Scenario::Kinematics, toml, 11);
    let cols = read_csv(&dir.path().join("kinematics.csv"));
    check(cols["omega_eV"].len() == 10_000, "row count");
    for name in ["energy_residual", "pz_residual", "px_residual"] {
        let worst = floats(&cols, name).into_iter().fold(0.0, f64::max);
        check(worst <= 1e-12, format!("{name} = {worst:e}"));
    }
    let omega = 1.7;
    let k = solve_kinematics(omega, 1e-6, 0.0).unwrap();
    check(close(k.omega3, 2.0 * omega, 1e-10), format!("ω₃ = {} at ϑ = 1e-6", k.omega3));
    within(Duration::from_secs(1), start);
}

fn breit_wigner_suite() {
    let start = Instant::now();
    let a = 2.5e-3;
    check(bw_integral(-a, a, a).unwrap() == a * PI / 2.0, "∫_{-a}^{a}");
    check(bw_integral(f64::NEG_INFINITY, f64::INFINITY, a).unwrap() == a * PI, "∫_{-∞}^{∞}");
    for &a_tilde in &[1e-10, 1e-12, 1e-20] {
        for &r in &[0.9, 0.5, 0.1, 0.01] {
            let num = averaged_amplitude_squared(1.0, r, 1.0, a_tilde, AveragingMethod::Numeric).unwrap().value;
            let closed = averaged_amplitude_squared(1.0, r, 1.0, a_tilde, AveragingMethod::ClosedForm).unwrap().value;
            check(close(num, closed, 0.05), format!("ã = {a_tilde}, ϑr/Δϑ = {r}: {num:e} vs {closed:e}"));
        }
    }
    let field = |scale: f64| LightField::new(FieldKind::Scalar, 1e-10, 1.0 / 137.0, scale).unwrap();
    let vr = (1e-10f64 / 2.0).asin();
    let peak = resonant_amplitude_squared(1.0, vr, &field(1e27)).unwrap();
    check(close(peak, 4.0 * PI * PI, 1e-12), format!("peak |M|² = {peak}"));
    let on = |s: f64| differential_cross_section(1.0, 5e-11, 4e-9, &field(s)).unwrap();
    let off = |s: f64| differential_cross_section(1.0, 5e-11, 2e-11, &field(s)).unwrap();
    check(on(1e27).on_resonance && !off(1e27).on_resonance, "resonance flags");
    let on_ratio = on(1e28).value / on(1e27).value;
    let off_ratio = off(1e28).value / off(1e27).value;
    check(close(on_ratio, 1e-2, 1e-9), format!("on-resonance M scaling {on_ratio:e}"));
    check(close(off_ratio, 1e-4, 1e-6), format!("off-resonance M scaling {off_ratio:e}"));
    within(Duration::from_secs(10), start);
}

const REFERENCE_SENSITIVITY: &str = r#"
schema_version = 1
[sensitivity]
omega_ev = 1.0
n_photons = 1e22
tau_fs = 10.0
delta_t_fs = 10.0
lens_diameter_m = 2.0
focal_length_m = 3.0
waist_m = 0.01
delta_theta = 4e-9
target_yield = 1.0
[sensitivity.field]
kind = "scalar"
mass_ev = 1e-10
coupling_g = 0.0072992700729927005
mass_scale_ev = 1e27
"#;

fn reference_sensitivity() {
    let start = Instant::now();
    let (dir, _) = run_toml(Scenario::Sensitivity, REFERENCE_SENSITIVITY, 0);
    let report = read_json(&dir.path().join("report.json"));
    let n1 = report["report"]["required_photons"].as_f64().unwrap();
    check(n1 > 2.4e22 / 3.0 && n1 < 2.4e22 * 3.0, format!("N̄₁ = {n1:e}"));
    check(report["report"]["on_resonance"].as_bool().unwrap(), "reference point is off resonance");
    within(Duration::from_secs(1), start);
}

fn sweep_toml(list: &str) -> String {
    let base = REFERENCE_SENSITIVITY.replace("waist_m = 0.01\ndelta_theta = 4e-9\n", "");
    format!("{base}[sensitivity.sweep]\n{list}\n")
}

fn ratios_follow(x: &[f64], y: &[f64], power: f64) -> bool {
    x.windows(2).zip(y.windows(2)).all(|(xs, ys)| close(ys[1] / ys[0], (xs[1] / xs[0]).powf(power), 1e-12))
}

fn scaling_laws() {
    let start = Instant::now();
    let (dir, _) = run_toml(Scenario::Sensitivity, &sweep_toml("focal_length_m = [1.0, 3.0, 10.0, 100.0, 1000.0]"), 0);
    let cols = read_csv(&dir.path().join("sweep.csv"));
    check(cols["f_m"].len() == 5, "sweep rows");
    check(ratios_follow(&floats(&cols, "f_m"), &floats(&cols, "m_cut_eV"), -2.0 / 3.0), "m_cut ∝ f^{-2/3}");

    let (dir, _) = run_toml(Scenario::Sensitivity, &sweep_toml("lens_diameter_m = [0.5, 1.0, 2.0, 4.0]"), 0);
    let cols = read_csv(&dir.path().join("sweep.csv"));
    check(ratios_follow(&floats(&cols, "d_m"), &floats(&cols, "m_cut_eV"), -2.0 / 3.0), "m_cut ∝ d^{-2/3}");

    let (dir, _) = run_toml(Scenario::Sensitivity, &sweep_toml("n_photons = [1e20, 1e21, 3e22]"), 0);
    let cols = read_csv(&dir.path().join("sweep.csv"));
    check(ratios_follow(&floats(&cols, "N_photons"), &floats(&cols, "yield_per_pulse"), 2.0), "yield ∝ N²");

    let gamma = |m: f64| decay_rate(&LightField::new(FieldKind::Pseudoscalar, m, 1.0 / 137.0, 1e27).unwrap());
    check(close(gamma(3e-10) / gamma(1e-10), 27.0, 1e-12), "Γ ∝ m³");

    let shift = |c| refractive_shift(c, PI / 2.0, 1e4, 0.96, 10.0).unwrap();
    let ratio = shift(PolarizationCombo::Perpendicular) / shift(PolarizationCombo::Parallel);
    check((ratio - 1.75).abs() <= 2.0 * f64::EPSILON, format!("birefringence ratio {ratio}"));

    let n_e = PlasmaModel::default().electron_density(1e-6).unwrap();
    let dn = plasma_index_shift(n_e, 0.8, None).unwrap();
    check(dn <= 1e-11, format!("plasma ΔN = {dn:e}"));
    within(Duration::from_secs(10), start);
}

fn run_binary(args: &[&str], out: &Path, threads: &str) {
    let status = Command::new(env!("CARGO_BIN_EXE_vacuumprobe"))
        .args(args)
        .arg("--out")
        .arg(out)
        .arg("--threads")
        .arg(threads)
        .output()
        .unwrap();
    check(status.status.success(), format!("{args:?}: {}", String::from_utf8_lossy(&status.stderr)));
}

fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect()
}

fn determinism() {
    let configs = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
    let noisy = fit_toml(1e-2, PI / 2.0).replace("kappa_true = 1.0", "kappa_true = 1.0\nnoise = 1e-3");
    let scratch = tempfile::tempdir().unwrap();
    let noisy_path = scratch.path().join("noisy_fit.toml");
    std::fs::write(&noisy_path, noisy).unwrap();
    let mut cases: Vec<(String, PathBuf)> = std::fs::read_dir(&configs)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "toml"))
        .map(|p| {
            let text = std::fs::read_to_string(&p).unwrap();
            let scenario = parse_toml(&text).unwrap().scenario.unwrap();
            (scenario.name().to_string(), p)
        })
        .collect();
    cases.push(("fit".into(), noisy_path));
    cases.sort();
    let seen: std::collections::BTreeSet<&str> = cases.iter().map(|(s, _)| s.as_str()).collect();
    check(seen.len() == 5, format!("scenarios covered: {seen:?}"));
    for (scenario, path) in &cases {
        let config = path.to_str().unwrap();
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        run_binary(&[scenario, "--config", config, "--seed", "42"], a.path(), "1");
        run_binary(&[scenario, "--config", config, "--seed", "42"], b.path(), "4");
        let (sa, sb) = (snapshot(a.path()), snapshot(b.path()));
        check(!sa.is_empty(), format!("{config}: no output"));
        check(sa == sb, format!("{config}: outputs differ between runs"));
    }
}

fn main() {
    let criteria: [(&str, fn()); 9] = [
        ("1 table reproduction", table1_reproduction),
        ("2 QED constants", qed_constants),
        ("3 Fourier-imaging oracle", fourier_imaging_oracle),
        ("4 phase-fit self-consistency", phase_fit_self_consistency),
        ("5 kinematics closure", kinematics_closure),
        ("6 Breit-Wigner suite", breit_wigner_suite),
        ("7 reference sensitivity", reference_sensitivity),
        ("8 scaling laws", scaling_laws),
        ("9 determinism", determinism),
    ];
    std::panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (name, criterion) in criteria {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(criterion));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(()) => println!("PASS  criterion {name} ({secs:.2} s)"),
            Err(e) => {
                failed += 1;
                let msg = e
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_default();
                println!("FAIL  criterion {name} ({secs:.2} s): {msg}");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
