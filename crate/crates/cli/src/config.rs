//! Scenario configuration, read from TOML (or JSON when the file ends in
//! `.json`). Unknown keys are rejected and every diagnostic carries the
//! dotted path of the offending field.

use std::f64::consts::FRAC_PI_2;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use vacuumprobe::gaussian_optics::Polarization;
use vacuumprobe::phase_reconstruction::KappaScan;
use vacuumprobe::resonance_search::FieldKind;

use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    Image,
    Fit,
    Sensitivity,
    Kinematics,
    Table1,
}

impl Scenario {
    pub fn name(self) -> &'static str {
        match self {
            Scenario::Image => "image",
            Scenario::Fit => "fit",
            Scenario::Sensitivity => "sensitivity",
            Scenario::Kinematics => "kinematics",
            Scenario::Table1 => "table1",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub schema_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario: Option<Scenario>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Used when `--out` is not given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image: Option<ImageConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit: Option<FitConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sensitivity: Option<SensitivityConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kinematics: Option<KinematicsConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table1: Option<Table1Config>,
}

impl ScenarioConfig {
    /// Configuration with no blocks; only `table1` runs from it.
    pub fn empty() -> Self {
        ScenarioConfig {
            schema_version: SCHEMA_VERSION,
            scenario: None,
            seed: None,
            out_dir: None,
            image: None,
            fit: None,
            sensitivity: None,
            kinematics: None,
            table1: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BeamConfig {
    pub wavelength_um: f64,
    pub energy_j: f64,
    pub duration_fs: f64,
    pub waist_um: f64,
    pub polarization: Polarization,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionConfig {
    pub half_width_um: f64,
    pub half_height_um: f64,
    #[serde(default)]
    pub center_um: [f64; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub nx: usize,
    pub ny: usize,
    pub pitch_um: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SlitConfig {
    pub half_width: f64,
    pub half_height: f64,
    /// Spatial-frequency step, μm⁻¹.
    pub omega_step: f64,
    pub nx: usize,
    pub ny: usize,
}

fn default_angle() -> f64 {
    FRAC_PI_2
}

fn one() -> f64 {
    1.0
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImageConfig {
    pub probe: BeamConfig,
    /// Needed unless `delta` is given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<BeamConfig>,
    #[serde(default = "default_angle")]
    pub crossing_angle_rad: f64,
    #[serde(default = "one")]
    pub weight: f64,
    /// Overrides the phase computed from the target.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    pub expansion: f64,
    pub focal_length_m: f64,
    #[serde(default)]
    pub offset_phase: f64,
    /// Signal region in the interaction plane; magnified with the probe.
    /// Defaults to the probe waist × target waist crossing footprint.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub region: Option<RegionConfig>,
    pub grid: GridConfig,
    #[serde(default = "yes")]
    pub line_profiles: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slit: Option<SlitConfig>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileConfig {
    pub photons: f64,
    pub gaussian_a: f64,
    pub wavelength_um: f64,
    pub focal_length_m: f64,
    #[serde(default)]
    pub offset_phase: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapConfig {
    pub nx: usize,
    pub ny: usize,
    pub cell_width_um: f64,
    pub cell_height_um: f64,
    /// RMS of the seeded random background phase map, rad.
    #[serde(default)]
    pub background_rms: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TemplateConfig {
    pub half_width_um: f64,
    pub half_height_um: f64,
    pub delta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplesConfig {
    pub n: usize,
    pub half_extent_um: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitConfig {
    pub profile: ProfileConfig,
    pub map: MapConfig,
    pub template: TemplateConfig,
    #[serde(default = "one")]
    pub kappa_true: f64,
    /// Relative amplitude of the seeded multiplicative noise.
    #[serde(default)]
    pub noise: f64,
    pub samples: SamplesConfig,
    #[serde(default)]
    pub scan: KappaScan,
    /// Defaults to five pedestal widths.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mask_radius_um: Option<f64>,
    /// Fit with the background map in the model (true) or a flat map.
    #[serde(default = "yes")]
    pub compensate_background: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldConfig {
    pub kind: FieldKind,
    pub mass_ev: f64,
    pub coupling_g: f64,
    pub mass_scale_ev: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelConfig {
    pub incoming: [u8; 2],
    pub outgoing: [u8; 2],
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mass_ev: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mass_scale_ev: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub focal_length_m: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lens_diameter_m: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_photons: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensitivityConfig {
    pub field: FieldConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub channel: Option<ChannelConfig>,
    pub omega_ev: f64,
    pub n_photons: f64,
    pub tau_fs: f64,
    pub delta_t_fs: f64,
    pub lens_diameter_m: f64,
    pub focal_length_m: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub waist_m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_theta: Option<f64>,
    #[serde(default = "one")]
    pub target_yield: f64,
    /// When present, every combination of the listed values is evaluated
    /// and written as one CSV row; unlisted parameters keep their base value.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KinematicsConfig {
    pub omega_ev: f64,
    /// Explicit (ϑ, θ₃) pairs, rad.
    #[serde(default)]
    pub points: Vec<[f64; 2]>,
    /// Additional seeded random configurations.
    #[serde(default)]
    pub random: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Table1Config {
    /// Render the focal-plane image for the tabulated parameters.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridConfig>,
}

fn format_error(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Validation(format!("{}: {e}", path.display()))
}

pub fn parse_toml(text: &str) -> Result<ScenarioConfig, String> {
    let de = toml::Deserializer::new(text);
    serde_path_to_error::deserialize(de).map_err(|e| describe(e.path().to_string(), e.into_inner().message().trim()))
}

pub fn parse_json(text: &str) -> Result<ScenarioConfig, String> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| describe(e.path().to_string(), &e.into_inner().to_string()))
}

fn describe(path: String, message: &str) -> String {
    if path == "." {
        message.to_string()
    } else {
        format!("{path}: {message}")
    }
}

/// Read and check the schema version of a configuration file.
pub fn load(path: &Path) -> Result<ScenarioConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
    let cfg = if is_json { parse_json(&text) } else { parse_toml(&text) }.map_err(|m| format_error(path, m))?;
    if cfg.schema_version != SCHEMA_VERSION {
        return Err(format_error(
            path,
            format!("schema_version: expected {SCHEMA_VERSION}, found {}", cfg.schema_version),
        ));
    }
    Ok(cfg)
}
