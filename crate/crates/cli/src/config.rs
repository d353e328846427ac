//! Run configuration: a TOML document whose sections mirror the subcommands.
//!
//! ```toml
//! seed = 7
//! preset = "W4"              # built-in name, or a name inside `preset_file`
//! preset_file = "mine.toml"  # optional [[preset]] document
//! detection_mode = "PL"      # optional readout override: "PL" or "absorption"
//!
//! [physics]                  # zero_field_splitting_Hz, gamma_over_2pi_Hz_per_T, [physics.hyperfine]
//! [levels]                   # field_start_T, field_stop_T, n_points, transverse_T, search_lo_T, search_hi_T
//! [scan]                     # field_start_T, field_stop_T, n_points, beta_deg, pump_W, photon_rate_per_s, ...
//! [fit]                      # model, window_lo_T, window_hi_T
//! [angle_study]              # beta_min_deg, beta_max_deg, n_angles, window_half_width_T, ...
//! [magnetometer]             # gslac_fwhm_T, field_noise_asd_T_per_sqrtHz, [magnetometer.modulation], ...
//! [sense]                    # fwhm_T, contrast, power_W, wavelength_m, prefactor
//! ```
//!
//! Every key is optional; unknown keys are rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use gslac::scan_engine::{
    builtin_preset, presets_from_toml, DetectionMode, SamplePreset, ScanConfig,
};
use gslac::spin_model::SpinSystemParams;
use gslac::studies::{AngleStudyConfig, MagnetometerConfig};

use crate::CliError;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub preset_file: Option<PathBuf>,
    /// Overrides the preset's readout; feature polarities follow.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detection_mode: Option<DetectionMode>,
    pub physics: SpinSystemParams,
    pub levels: LevelsConfig,
    pub scan: ScanConfig,
    pub fit: FitConfig,
    pub angle_study: AngleStudyConfig,
    pub magnetometer: MagnetometerConfig,
    pub sense: SenseConfig,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LevelsConfig {
    #[serde(rename = "field_start_T", skip_serializing_if = "Option::is_none")]
    pub field_start: Option<f64>,
    #[serde(rename = "field_stop_T", skip_serializing_if = "Option::is_none")]
    pub field_stop: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_points: Option<usize>,
    #[serde(rename = "transverse_T")]
    pub transverse: f64,
    #[serde(rename = "search_lo_T", skip_serializing_if = "Option::is_none")]
    pub search_lo: Option<f64>,
    #[serde(rename = "search_hi_T", skip_serializing_if = "Option::is_none")]
    pub search_hi: Option<f64>,
}

impl LevelsConfig {
    /// Fills unset ranges around the expected crossing D/γ.
    pub fn resolve(&mut self, physics: &SpinSystemParams) {
        let crossing = physics.crossing_field();
        self.field_start.get_or_insert(0.8 * crossing);
        self.field_stop.get_or_insert(1.2 * crossing);
        self.n_points.get_or_insert(401);
        self.search_lo.get_or_insert(0.8 * crossing);
        self.search_hi.get_or_insert(1.2 * crossing);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum FitModel {
    #[default]
    Lorentzian,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitConfig {
    pub model: FitModel,
    #[serde(rename = "window_lo_T", skip_serializing_if = "Option::is_none")]
    pub window_lo: Option<f64>,
    #[serde(rename = "window_hi_T", skip_serializing_if = "Option::is_none")]
    pub window_hi: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SenseConfig {
    #[serde(rename = "fwhm_T")]
    pub fwhm: f64,
    pub contrast: f64,
    #[serde(rename = "power_W")]
    pub power: f64,
    #[serde(rename = "wavelength_m")]
    pub wavelength: f64,
    /// Overrides the rate derived from power and wavelength.
    #[serde(rename = "photon_rate_per_s", skip_serializing_if = "Option::is_none")]
    pub photon_rate: Option<f64>,
    pub prefactor: f64,
}

impl Default for SenseConfig {
    fn default() -> Self {
        Self {
            fwhm: 0.84e-3,
            contrast: 0.15,
            power: 4.2e-3,
            wavelength: 1042e-9,
            photon_rate: None,
            prefactor: 1.0,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    /// Preset selected by name or file, falling back to `default_name`.
    pub fn resolve_preset(&self, default_name: &str) -> Result<SamplePreset, CliError> {
        let name = self.preset.as_deref();
        match &self.preset_file {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| {
                    CliError::Io(format!("cannot read preset file {}: {e}", path.display()))
                })?;
                let presets = presets_from_toml(&text)?;
                match name {
                    Some(n) => presets
                        .into_iter()
                        .find(|p| p.name.eq_ignore_ascii_case(n))
                        .ok_or_else(|| {
                            CliError::Config(format!(
                                "preset '{n}' not found in {}",
                                path.display()
                            ))
                        }),
                    None => presets.into_iter().next().ok_or_else(|| {
                        CliError::Config(format!("{} defines no presets", path.display()))
                    }),
                }
            }
            None => builtin_preset(name.unwrap_or(default_name))
                .map_err(|e| CliError::Config(e.to_string())),
        }
        .map(|p| match self.detection_mode {
            Some(mode) => p.with_detection_mode(mode),
            None => p,
        })
    }
}

/// Everything a run depended on, written next to its outputs.
#[derive(Debug, Serialize)]
pub struct Manifest<'a> {
    pub command: &'a str,
    pub version: &'a str,
    pub config: &'a RunConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub resolved_preset: Option<&'a SamplePreset>,
}

impl Manifest<'_> {
    pub fn to_toml(&self) -> Result<String, CliError> {
        toml::to_string_pretty(self)
            .map_err(|e| CliError::Config(format!("cannot serialise manifest: {e}")))
    }
}
