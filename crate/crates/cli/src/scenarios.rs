//! Scenario execution. Each runner checks its block first, mapping module
//! preconditions to field paths, then computes and writes its artifacts.
//! Every number written comes from a `vacuumprobe` operation.

use std::f64::consts::FRAC_PI_2;

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;
use vacuumprobe::constants::photon_energy_from_wavelength;
use vacuumprobe::export::{write_image_csv, write_json, write_line_profile_csv, write_slit_pattern_csv, Field, ImageMetadata};
use vacuumprobe::fourier_imaging::{
    focal_window_photons, pixel_line_profile, render_focal_image, render_slit_pattern, Axis, GridSpec, ProbeProfile,
    RectRegion, SlitPattern,
};
use vacuumprobe::gaussian_optics::{GaussianBeam, Polarization};
use vacuumprobe::phase_reconstruction::{
    fit_kappa, perturb_samples, random_phase_map, synthesize_samples, CentralMask, FitProblem, FitResult, FocalSamples,
    PhaseCell, PhaseMap, SignalTemplate,
};
use vacuumprobe::qed_vacuum::{n0_constant, phase_shift, refractive_shift, PolarizationCombo};
use vacuumprobe::resonance_search::{
    random_kinematics, sensitivity_report, solve_kinematics, CollisionKinematics, FocusingSpec, LightField,
    SensitivityInputs, SensitivityReport,
};

use crate::config::{
    BeamConfig, FitConfig, GridConfig, ImageConfig, KinematicsConfig, Scenario, ScenarioConfig, SensitivityConfig,
    Table1Config,
};
use crate::error::{AtField, CliError};
use crate::output::{col, finish, Column, Outputs};

fn invalid(path: &str, message: impl std::fmt::Display) -> CliError {
    CliError::Validation(format!("{path}: {message}"))
}

fn block<T>(block: &Option<T>, scenario: Scenario) -> Result<&T, CliError> {
    block
        .as_ref()
        .ok_or_else(|| invalid(scenario.name(), format!("the `{0}` scenario needs a [{0}] block", scenario.name())))
}

/// Run `scenario` and write its artifacts and manifest into `out`.
pub fn execute(scenario: Scenario, cfg: &ScenarioConfig, seed: u64, out: &mut Outputs) -> Result<(), CliError> {
    let derived = match scenario {
        Scenario::Image => image(block(&cfg.image, scenario)?, out)?,
        Scenario::Fit => fit(block(&cfg.fit, scenario)?, seed, out)?,
        Scenario::Sensitivity => sensitivity(block(&cfg.sensitivity, scenario)?, out)?,
        Scenario::Kinematics => kinematics(block(&cfg.kinematics, scenario)?, seed, out)?,
        Scenario::Table1 => table1(cfg.table1.as_ref(), out)?,
    };
    finish(out, scenario, seed, cfg, derived)
}

fn beam(b: &BeamConfig, path: &str) -> Result<GaussianBeam, CliError> {
    GaussianBeam::new(b.wavelength_um, b.energy_j, b.duration_fs, b.waist_um, b.polarization).at(path)
}

fn grid(g: &GridConfig, path: &str) -> Result<GridSpec, CliError> {
    GridSpec::new(g.nx, g.ny, g.pitch_um).at(path)
}

const LINE_COLUMNS: [Column; 2] = [
    col("position_m", "focal-plane position of the pixel centre", "m"),
    col("photons_per_pixel", "photons integrated over the pixel", "photons"),
];

#[derive(Serialize)]
struct LineSidecar<'a> {
    file: String,
    axis: Axis,
    rows: usize,
    columns: &'a [Column],
}

#[derive(Serialize)]
struct SlitSidecar<'a> {
    file: &'a str,
    half_width: f64,
    half_height: f64,
    omega_step: f64,
    omega_step_unit: &'static str,
    nx: usize,
    ny: usize,
    value: &'static str,
}

/// Image CSV with sidecar and, when asked and non-empty, the two line profiles.
fn write_image(
    profile: &ProbeProfile,
    region: &RectRegion,
    delta: f64,
    grid: GridSpec,
    line_profiles: bool,
    out: &mut Outputs,
) -> Result<ImageMetadata, CliError> {
    let img = render_focal_image(profile, region, delta, grid)?;
    write_image_csv(&out.path("image.csv")?, &img)?;
    let meta = ImageMetadata::of(&img);
    write_json(&out.path("image.json")?, &meta)?;
    if line_profiles && !grid.is_empty() {
        for (axis, stem) in [(Axis::X, "line_x"), (Axis::Y, "line_y")] {
            let line = pixel_line_profile(&img, axis)?;
            let csv = format!("{stem}.csv");
            write_line_profile_csv(&out.path(&csv)?, &line)?;
            let sidecar = LineSidecar {
                file: csv,
                axis,
                rows: line.photons.len(),
                columns: &LINE_COLUMNS,
            };
            write_json(&out.path(&format!("{stem}.json"))?, &sidecar)?;
        }
    }
    Ok(meta)
}

fn image(cfg: &ImageConfig, out: &mut Outputs) -> Result<serde_json::Value, CliError> {
    let probe = beam(&cfg.probe, "image.probe")?;
    let target = cfg.target.as_ref().map(|t| beam(t, "image.target")).transpose()?;
    let delta = match (cfg.delta, target) {
        (Some(d), _) if d.is_finite() => d,
        (Some(d), _) => return Err(invalid("image.delta", format!("must be finite, got {d}"))),
        (None, Some(t)) => phase_shift(
            probe.wavelength(),
            PolarizationCombo::of(&probe, &t),
            cfg.crossing_angle_rad,
            t.pulse_energy(),
            t.waist(),
            cfg.weight,
        )
        .at("image.target")?,
        (None, None) => return Err(invalid("image", "either `delta` or a [image.target] block is required")),
    };
    let profile = ProbeProfile::from_beam(&probe, cfg.expansion, cfg.focal_length_m, cfg.offset_phase).at("image")?;
    let footprint = match (cfg.region, target) {
        (Some(r), _) => RectRegion::at(r.half_width_um, r.half_height_um, (r.center_um[0], r.center_um[1])).at("image.region")?,
        (None, Some(t)) => RectRegion::centered(probe.waist(), t.waist()).at("image.target")?,
        (None, None) => return Err(invalid("image.region", "required when no target is given")),
    };
    let region = footprint.magnified(cfg.expansion).at("image.expansion")?;
    let grid = grid(&cfg.grid, "image.grid")?;
    let slit = cfg
        .slit
        .map(|s| render_slit_pattern(s.half_width, s.half_height, s.omega_step, s.nx, s.ny).at("image.slit"))
        .transpose()?;

    let meta = write_image(&profile, &region, delta, grid, cfg.line_profiles, out)?;
    if let Some(pattern) = &slit {
        write_slit(pattern, out)?;
    }
    Ok(json!({
        "delta": delta,
        "probe_photons": probe.photon_count(),
        "profile": profile,
        "pedestal_sigma_um": profile.pedestal_sigma(),
        "signal_region_um": region,
        "provenance": meta.provenance,
        "coarse_pedestal": meta.coarse_pedestal,
        "image_photons": meta.image_photons,
    }))
}

fn write_slit(pattern: &SlitPattern, out: &mut Outputs) -> Result<(), CliError> {
    write_slit_pattern_csv(&out.path("slit.csv")?, pattern)?;
    let sidecar = SlitSidecar {
        file: "slit.csv",
        half_width: pattern.mu,
        half_height: pattern.nu,
        omega_step: pattern.omega_step,
        omega_step_unit: "1/um",
        nx: pattern.nx,
        ny: pattern.ny,
        value: "far-field intensity normalized to 1 on axis",
    };
    write_json(&out.path("slit.json")?, &sidecar)?;
    Ok(())
}

#[derive(Serialize)]
struct FitReport {
    fit: FitResult,
    kappa_true: f64,
    mask_radius_um: f64,
    samples: usize,
    compensate_background: bool,
    background: Vec<PhaseCell>,
    template: Vec<PhaseCell>,
}

fn fit(cfg: &FitConfig, seed: u64, out: &mut Outputs) -> Result<serde_json::Value, CliError> {
    let p = cfg.profile;
    let profile = ProbeProfile::from_photons(p.photons, p.gaussian_a, p.wavelength_um, p.focal_length_m, p.offset_phase)
        .at("fit.profile")?;
    let m = cfg.map;
    let base = PhaseMap::grid(m.nx, m.ny, m.cell_width_um, m.cell_height_um).at("fit.map")?;
    let t = cfg.template;
    let footprint = RectRegion::centered(t.half_width_um, t.half_height_um).at("fit.template")?;
    let template = SignalTemplate::from_footprint(&base, &footprint, t.delta).at("fit.template")?;
    if !cfg.kappa_true.is_finite() {
        return Err(invalid("fit.kappa_true", "must be finite"));
    }
    if !(0.0..1.0).contains(&cfg.noise) {
        return Err(invalid("fit.noise", format!("must lie in [0, 1), got {}", cfg.noise)));
    }
    if !(m.background_rms.is_finite() && m.background_rms >= 0.0) {
        return Err(invalid("fit.map.background_rms", "must be finite and non-negative"));
    }
    let s = cfg.samples;
    if s.n < 2 || !(s.half_extent_um.is_finite() && s.half_extent_um > 0.0) {
        return Err(invalid("fit.samples", "need n ≥ 2 and a positive half extent"));
    }
    let kappas = cfg.scan.values().at("fit.scan")?;
    let mask = match cfg.mask_radius_um {
        Some(r) if r.is_finite() && r >= 0.0 => CentralMask { radius: r },
        Some(r) => return Err(invalid("fit.mask_radius_um", format!("must be finite and non-negative, got {r}"))),
        None => CentralMask::for_profile(&profile),
    };

    // Draw order is fixed: background phases first, then intensity noise.
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let background = random_phase_map(&base, m.background_rms, &mut rng)?;
    let clean = synthesize_samples(&profile, &background, &template, cfg.kappa_true, &FocalSamples::lattice(s.n, s.half_extent_um))?;
    let meas = perturb_samples(&clean, cfg.noise, &mut rng)?;
    let model_map = if cfg.compensate_background { &background } else { &base };
    let result = fit_kappa(&meas, &profile, model_map, &template, cfg.scan, &mask)?;
    let problem = FitProblem::new(&meas, &profile, model_map, &template, &mask)?;

    let sample_rows: Vec<Vec<Field>> = meas
        .positions
        .iter()
        .zip(&meas.intensity)
        .map(|(&(x, y), &v)| vec![x.into(), y.into(), v.into()])
        .collect();
    out.table(
        "samples",
        &[
            col("x_um", "focal-plane x", "um"),
            col("y_um", "focal-plane y", "um"),
            col("intensity", "synthetic measured intensity", "photons/um^2"),
        ],
        &sample_rows,
    )?;
    let scan_rows: Vec<Vec<Field>> = kappas.iter().map(|&k| vec![k.into(), problem.chi_square(k).into()]).collect();
    out.table(
        "chi2_scan",
        &[col("kappa", "template scale", "1"), col("chi2", "reduced chi-square", "photons/um^2")],
        &scan_rows,
    )?;
    let report = FitReport {
        fit: result,
        kappa_true: cfg.kappa_true,
        mask_radius_um: mask.radius,
        samples: problem.n_points(),
        compensate_background: cfg.compensate_background,
        background: background.to_cells(),
        template: template.to_cells(),
    };
    write_json(&out.path("fit.json")?, &report)?;
    Ok(json!({
        "kappa_hat": result.kappa_hat,
        "chi2_min": result.chi2_min,
        "boundary_hit": result.boundary_hit,
        "sign_degenerate": result.sign_degenerate,
        "background_rms": background.rms(),
        "pedestal_sigma_um": profile.pedestal_sigma(),
    }))
}

fn positive(path: &str, value: f64) -> Result<f64, CliError> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(invalid(path, format_args!("must be finite and positive, got {value}")))
    }
}

fn sensitivity_inputs(cfg: &SensitivityConfig) -> Result<SensitivityInputs, CliError> {
    for (path, v) in [
        ("sensitivity.omega_ev", Some(cfg.omega_ev)),
        ("sensitivity.n_photons", Some(cfg.n_photons)),
        ("sensitivity.tau_fs", Some(cfg.tau_fs)),
        ("sensitivity.delta_t_fs", Some(cfg.delta_t_fs)),
        ("sensitivity.lens_diameter_m", Some(cfg.lens_diameter_m)),
        ("sensitivity.focal_length_m", Some(cfg.focal_length_m)),
        ("sensitivity.waist_m", cfg.waist_m),
        ("sensitivity.delta_theta", cfg.delta_theta),
        ("sensitivity.target_yield", Some(cfg.target_yield)),
    ] {
        if let Some(v) = v {
            positive(path, v)?;
        }
    }
    let f = cfg.field;
    let field = LightField::new(f.kind, f.mass_ev, f.coupling_g, f.mass_scale_ev).at("sensitivity.field")?;
    let channel = match cfg.channel {
        Some(c) => {
            if !c.incoming.iter().chain(&c.outgoing).all(|&p| p == 1 || p == 2) {
                return Err(invalid("sensitivity.channel", "polarization labels must be 1 or 2"));
            }
            Some(((c.incoming[0], c.incoming[1]), (c.outgoing[0], c.outgoing[1])))
        }
        None => None,
    };
    Ok(SensitivityInputs {
        field,
        channel,
        omega_opt: cfg.omega_ev,
        n_photons: cfg.n_photons,
        tau: cfg.tau_fs,
        delta_t: cfg.delta_t_fs,
        focusing: FocusingSpec {
            lens_diameter: cfg.lens_diameter_m,
            focal_length: cfg.focal_length_m,
            waist: cfg.waist_m,
            delta_theta: cfg.delta_theta,
        },
        target_yield: cfg.target_yield,
    })
}

#[derive(Serialize)]
struct PointReport {
    inputs: SensitivityInputs,
    report: SensitivityReport,
}

const SWEEP_COLUMNS: [Column; 8] = [
    col("m_eV", "exchanged field mass", "eV"),
    col("gM_inv_GeV", "coupling g/M", "1/GeV"),
    col("f_m", "focal length", "m"),
    col("d_m", "lens diameter", "m"),
    col("N_photons", "photons per pulse", "1"),
    col("yield_per_pulse", "signal photons per pulse", "1"),
    col("m_cut_eV", "largest mass resonant within the angular acceptance", "eV"),
    col("excluded_bool", "on resonance with yield at or above target", "bool"),
];

fn values(list: &Option<Vec<f64>>, base: f64) -> Vec<f64> {
    list.clone().unwrap_or_else(|| vec![base])
}

fn sensitivity(cfg: &SensitivityConfig, out: &mut Outputs) -> Result<serde_json::Value, CliError> {
    let base = sensitivity_inputs(cfg)?;
    let Some(sweep) = &cfg.sweep else {
        let report = sensitivity_report(&base)?;
        write_json(&out.path("report.json")?, &PointReport { inputs: base, report })?;
        return Ok(json!({
            "required_photons": report.required_photons,
            "differential_yield": report.differential_yield,
            "on_resonance": report.on_resonance,
            "m_cut": report.m_cut,
        }));
    };
    for (path, list) in [
        ("sensitivity.sweep.focal_length_m", &sweep.focal_length_m),
        ("sensitivity.sweep.lens_diameter_m", &sweep.lens_diameter_m),
        ("sensitivity.sweep.n_photons", &sweep.n_photons),
    ] {
        for (i, &v) in list.iter().flatten().enumerate() {
            positive(&format!("{path}[{i}]"), v)?;
        }
    }
    let f0 = base.field;
    let mut rows = Vec::new();
    for &mass in &values(&sweep.mass_ev, f0.mass) {
        for &scale in &values(&sweep.mass_scale_ev, f0.mass_scale) {
            let field = LightField::new(f0.kind, mass, f0.coupling_g, scale).at("sensitivity.sweep")?;
            for &f in &values(&sweep.focal_length_m, base.focusing.focal_length) {
                for &d in &values(&sweep.lens_diameter_m, base.focusing.lens_diameter) {
                    for &n in &values(&sweep.n_photons, base.n_photons) {
                        let inputs = SensitivityInputs {
                            field,
                            n_photons: n,
                            focusing: FocusingSpec {
                                lens_diameter: d,
                                focal_length: f,
                                ..base.focusing
                            },
                            ..base
                        };
                        let r = sensitivity_report(&inputs)?;
                        rows.push(vec![
                            mass.into(),
                            field.coupling_inv_gev().into(),
                            f.into(),
                            d.into(),
                            n.into(),
                            r.differential_yield.into(),
                            r.m_cut.into(),
                            r.exclusion_flag.into(),
                        ]);
                    }
                }
            }
        }
    }
    out.table("sweep", &SWEEP_COLUMNS, &rows)?;
    Ok(json!({ "rows": rows.len() }))
}

const KINEMATICS_COLUMNS: [Column; 9] = [
    col("omega_eV", "incident photon energy", "eV"),
    col("vartheta_rad", "incidence angle to the beam axis", "rad"),
    col("theta3_rad", "scattering angle of photon 3", "rad"),
    col("omega3_eV", "energy of photon 3", "eV"),
    col("omega4_eV", "energy of photon 4", "eV"),
    col("theta4_rad", "scattering angle of photon 4", "rad"),
    col("energy_residual", "energy balance relative to 2 omega", "1"),
    col("pz_residual", "longitudinal momentum balance relative to 2 omega", "1"),
    col("px_residual", "transverse momentum balance relative to 2 omega", "1"),
];

fn kinematics(cfg: &KinematicsConfig, seed: u64, out: &mut Outputs) -> Result<serde_json::Value, CliError> {
    if !(cfg.omega_ev.is_finite() && cfg.omega_ev > 0.0) {
        return Err(invalid("kinematics.omega_ev", "must be finite and positive"));
    }
    let mut solved: Vec<CollisionKinematics> = cfg
        .points
        .iter()
        .enumerate()
        .map(|(i, p)| solve_kinematics(cfg.omega_ev, p[0], p[1]).at(&format!("kinematics.points[{i}]")))
        .collect::<Result<_, _>>()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    solved.extend(random_kinematics(cfg.omega_ev, cfg.random, &mut rng)?);
    let rows: Vec<Vec<Field>> = solved
        .iter()
        .map(|k| {
            let r = k.residuals();
            vec![
                k.omega.into(),
                k.vartheta.into(),
                k.theta3.into(),
                k.omega3.into(),
                k.omega4.into(),
                k.theta4.into(),
                r.energy.into(),
                r.z_momentum.into(),
                r.x_momentum.into(),
            ]
        })
        .collect();
    out.table("kinematics", &KINEMATICS_COLUMNS, &rows)?;
    Ok(json!({ "rows": rows.len() }))
}

/// Tabulated configuration: 0.8 μm pulses of 10 kJ; target 10 fs focused to
/// 0.96 μm, probe 12 fs at 3.6 μm with orthogonal polarization, crossing at
/// right angles; the probe is expanded 5e4 times onto a 5 m lens.
pub struct Table1Setup {
    pub target: GaussianBeam,
    pub probe: GaussianBeam,
    pub crossing_angle: f64,
    pub expansion: f64,
    pub focal_length_m: f64,
}

impl Table1Setup {
    pub fn new() -> vacuumprobe::Result<Self> {
        Ok(Table1Setup {
            target: GaussianBeam::new(0.8, 1e4, 10.0, 0.96, Polarization::State1)?,
            probe: GaussianBeam::new(0.8, 1e4, 12.0, 3.6, Polarization::State2)?,
            crossing_angle: FRAC_PI_2,
            expansion: 5e4,
            focal_length_m: 5.0,
        })
    }

    pub fn combo(&self) -> PolarizationCombo {
        PolarizationCombo::of(&self.probe, &self.target)
    }

    pub fn phase_shift(&self) -> vacuumprobe::Result<f64> {
        phase_shift(
            self.probe.wavelength(),
            self.combo(),
            self.crossing_angle,
            self.target.pulse_energy(),
            self.target.waist(),
            1.0,
        )
    }

    pub fn profile(&self) -> vacuumprobe::Result<ProbeProfile> {
        ProbeProfile::from_beam(&self.probe, self.expansion, self.focal_length_m, 0.0)
    }

    /// Crossing footprint (probe waist × target waist) magnified with the probe.
    pub fn region(&self) -> vacuumprobe::Result<RectRegion> {
        RectRegion::centered(self.probe.waist(), self.target.waist())?.magnified(self.expansion)
    }
}

#[derive(Debug, Serialize)]
pub struct Table1Report {
    pub wavelength_um: f64,
    pub photon_energy_ev: f64,
    pub target_photons: f64,
    pub probe_photons: f64,
    pub target_rayleigh_length_um: f64,
    pub probe_rayleigh_length_um: f64,
    pub n0_um3_per_j: f64,
    pub polarization: PolarizationCombo,
    pub refractive_shift: f64,
    pub phase_shift: f64,
    pub expansion: f64,
    pub focal_length_m: f64,
    pub lens_peak_fluence_per_um2: f64,
    pub pedestal_sigma_um: f64,
    /// Pedestal-only photons inside the central 20 × 20 μm² of the focal plane.
    pub pedestal_photons_in_20um_square: f64,
    pub input_photons: f64,
}

pub fn table1_report(setup: &Table1Setup) -> vacuumprobe::Result<Table1Report> {
    let profile = setup.profile()?;
    let t = &setup.target;
    Ok(Table1Report {
        wavelength_um: setup.probe.wavelength(),
        photon_energy_ev: photon_energy_from_wavelength(setup.probe.wavelength() * 1e-6)?,
        target_photons: t.photon_count(),
        probe_photons: setup.probe.photon_count(),
        target_rayleigh_length_um: t.rayleigh_length(),
        probe_rayleigh_length_um: setup.probe.rayleigh_length(),
        n0_um3_per_j: n0_constant(),
        polarization: setup.combo(),
        refractive_shift: refractive_shift(setup.combo(), setup.crossing_angle, t.pulse_energy(), t.waist(), t.duration())?,
        phase_shift: setup.phase_shift()?,
        expansion: setup.expansion,
        focal_length_m: setup.focal_length_m,
        lens_peak_fluence_per_um2: profile.peak_fluence(),
        pedestal_sigma_um: profile.pedestal_sigma(),
        pedestal_photons_in_20um_square: focal_window_photons(
            &profile.with_offset(0.0),
            &setup.region()?,
            0.0,
            (-10.0, 10.0),
            (-10.0, 10.0),
        ),
        input_photons: profile.total_photons(),
    })
}

fn table1(cfg: Option<&Table1Config>, out: &mut Outputs) -> Result<serde_json::Value, CliError> {
    let image_grid = cfg.and_then(|c| c.grid).map(|g| grid(&g, "table1.grid")).transpose()?;
    let setup = Table1Setup::new()?;
    let report = table1_report(&setup)?;
    write_json(&out.path("report.json")?, &report)?;
    if let Some(g) = image_grid {
        write_image(&setup.profile()?, &setup.region()?, report.phase_shift, g, true, out)?;
    }
    Ok(json!({ "phase_shift": report.phase_shift, "refractive_shift": report.refractive_shift }))
}
