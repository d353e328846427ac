//! End-to-end pipelines built from the lower modules: the misalignment
//! study, the pump-power saturation study and the magnetometer chain.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::inference::{
    extract_angle_dependence, fit_line, fit_lorentzian, fit_saturation, AngleDependence, FitResult,
    LorentzianParams, SaturationParams,
};
use crate::lockin_dsp::{
    add_white_noise, band_average, calibrate_slope, demodulate, modulate_and_sample,
    modulate_and_sample_with, noise_spectrum, photon_rate, shot_noise_limit, Calibration,
    FieldNoise, ModulationParams, NoiseSpectrum, SensitivityReport, WelchConfig,
    REFERENCE_SENSITIVITY,
};
use crate::scan_engine::{
    builtin_preset, synthesize_scan, Background, Feature, FeatureLabel, SamplePreset, ScanConfig,
    TraceModel,
};
use crate::{Error, Result, MILLITESLA};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AngleStudyConfig {
    pub preset: String,
    pub beta_min_deg: f64,
    pub beta_max_deg: f64,
    pub n_angles: usize,
    pub alpha_deg: f64,
    #[serde(rename = "window_half_width_T")]
    pub window_half_width: f64,
    pub n_points: usize,
    #[serde(rename = "pump_W")]
    pub pump: f64,
}

impl Default for AngleStudyConfig {
    fn default() -> Self {
        Self {
            preset: "W4".into(),
            beta_min_deg: -0.2,
            beta_max_deg: 0.2,
            n_angles: 81,
            alpha_deg: 0.0,
            window_half_width: 6.0 * MILLITESLA,
            n_points: 601,
            pump: 0.6,
        }
    }
}

impl AngleStudyConfig {
    pub fn betas(&self) -> Result<Vec<f64>> {
        if self.n_angles < 2 || !(self.beta_max_deg > self.beta_min_deg) {
            return Err(Error::invalid(
                "angle grid needs two angles and beta_max > beta_min",
            ));
        }
        let step = (self.beta_max_deg - self.beta_min_deg) / (self.n_angles - 1) as f64;
        let mut grid: Vec<f64> = (0..self.n_angles)
            .map(|i| self.beta_min_deg + step * i as f64)
            .collect();
        grid[self.n_angles - 1] = self.beta_max_deg;
        if self.beta_min_deg == -self.beta_max_deg {
            // exact mirror symmetry
            for i in 0..self.n_angles / 2 {
                grid[self.n_angles - 1 - i] = -grid[i];
            }
            if self.n_angles % 2 == 1 {
                grid[self.n_angles / 2] = 0.0;
            }
        }
        Ok(grid)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AngleStudyRow {
    pub beta_deg: f64,
    pub fit: FitResult<LorentzianParams>,
    /// Fitted contrast over fitted width, 1/T.
    pub figure_of_merit: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AngleStudy {
    pub rows: Vec<AngleStudyRow>,
    pub summary: AngleDependence,
}

impl AngleStudy {
    /// Angle with the highest fitted figure of merit.
    pub fn best_angle(&self) -> f64 {
        self.rows
            .iter()
            .max_by(|a, b| a.figure_of_merit.total_cmp(&b.figure_of_merit))
            .map(|r| r.beta_deg)
            .unwrap_or(0.0)
    }
}

/// Scans the GSLAC window at each tilt, fits a Lorentzian and extracts the
/// misalignment summary.
pub fn angle_study(preset: &SamplePreset, config: &AngleStudyConfig) -> Result<AngleStudy> {
    let gslac = preset
        .gslac()
        .ok_or_else(|| Error::invalid(format!("preset {} has no GSLAC feature", preset.name)))?;
    if preset.angle_model.is_none() {
        return Err(Error::invalid(format!(
            "preset {} has no angle model",
            preset.name
        )));
    }
    let mut rows = Vec::new();
    for beta in config.betas()? {
        let scan = ScanConfig {
            field_start: gslac.center - config.window_half_width,
            field_stop: gslac.center + config.window_half_width,
            n_points: config.n_points,
            alpha_deg: config.alpha_deg,
            beta_deg: beta,
            pump: config.pump,
            ..ScanConfig::default()
        };
        let trace = synthesize_scan(preset, &scan)?;
        let fit = fit_lorentzian(&trace, None)?;
        let figure_of_merit = fit.params.contrast() / fit.params.fwhm;
        rows.push(AngleStudyRow {
            beta_deg: beta,
            fit,
            figure_of_merit,
        });
    }
    let pairs: Vec<(f64, FitResult<LorentzianParams>)> =
        rows.iter().map(|r| (r.beta_deg, r.fit.clone())).collect();
    let summary = extract_angle_dependence(&pairs)?;
    Ok(AngleStudy { rows, summary })
}

/// Noise-free GSLAC contrast at each pump power, read from fitted scans.
pub fn saturation_contrasts(preset: &SamplePreset, powers_mw: &[f64]) -> Result<Vec<f64>> {
    let gslac = preset
        .gslac()
        .ok_or_else(|| Error::invalid(format!("preset {} has no GSLAC feature", preset.name)))?;
    let half = 8.0 * gslac.fwhm;
    powers_mw
        .iter()
        .map(|p| {
            let scan = ScanConfig {
                field_start: gslac.center - half,
                field_stop: gslac.center + half,
                n_points: 401,
                pump: p * 1e-3,
                ..ScanConfig::default()
            };
            let fit = fit_lorentzian(&synthesize_scan(preset, &scan)?, None)?;
            Ok(fit.params.contrast())
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SaturationStudy {
    pub powers_mw: Vec<f64>,
    pub contrasts: Vec<f64>,
    pub fit: FitResult<SaturationParams>,
}

/// Applies multiplicative Gaussian noise of relative size `noise` to the
/// contrasts and fits the saturation curve.
pub fn saturation_study(
    powers_mw: &[f64],
    clean: &[f64],
    noise: f64,
    seed: u64,
) -> Result<SaturationStudy> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let contrasts: Vec<f64> = clean
        .iter()
        .map(|c| {
            let e: f64 = StandardNormal.sample(&mut rng);
            c * (1.0 + noise * e)
        })
        .collect();
    let fit = fit_saturation(powers_mw, &contrasts)?;
    Ok(SaturationStudy {
        powers_mw: powers_mw.to_vec(),
        contrasts,
        fit,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MagnetometerConfig {
    pub preset: String,
    #[serde(rename = "gslac_center_T")]
    pub gslac_center: f64,
    #[serde(rename = "gslac_fwhm_T")]
    pub gslac_fwhm: f64,
    pub gslac_contrast: f64,
    #[serde(rename = "insensitive_bias_T")]
    pub insensitive_bias: f64,
    #[serde(rename = "field_noise_asd_T_per_sqrtHz")]
    pub field_noise_asd: f64,
    /// Single-pole bandwidth of the field noise; the coil does not pass
    /// noise near twice the modulation frequency.
    #[serde(rename = "field_noise_bandwidth_Hz")]
    pub field_noise_bandwidth: f64,
    #[serde(rename = "electronic_floor_T_per_sqrtHz")]
    pub electronic_floor: f64,
    pub duration_s: f64,
    pub settle_time_constants: f64,
    pub sweep_points: usize,
    pub calibration_points: usize,
    pub phase_deg: f64,
    #[serde(rename = "band_lo_Hz")]
    pub band_lo: f64,
    #[serde(rename = "band_hi_Hz")]
    pub band_hi: f64,
    #[serde(rename = "collected_power_W")]
    pub collected_power: f64,
    #[serde(rename = "wavelength_m")]
    pub wavelength: f64,
    pub prefactor: f64,
    pub modulation: ModulationParams,
    pub welch: WelchConfig,
}

impl Default for MagnetometerConfig {
    fn default() -> Self {
        Self {
            preset: "B3A".into(),
            gslac_center: 102.4 * MILLITESLA,
            gslac_fwhm: 0.84 * MILLITESLA,
            gslac_contrast: 0.15,
            insensitive_bias: 80.0 * MILLITESLA,
            field_noise_asd: 0.45e-9,
            field_noise_bandwidth: 1e3,
            electronic_floor: 70e-12,
            duration_s: 1.0,
            settle_time_constants: 10.0,
            sweep_points: 41,
            calibration_points: 9,
            phase_deg: 0.0,
            band_lo: 1.0,
            band_hi: 100.0,
            collected_power: 4.2e-3,
            wavelength: 1042e-9,
            prefactor: 1.0,
            modulation: ModulationParams::default(),
            welch: WelchConfig::default(),
        }
    }
}

impl MagnetometerConfig {
    pub fn validate(&self) -> Result<()> {
        self.modulation.validate()?;
        if !(self.gslac_fwhm > 0.0) || !(self.gslac_contrast > 0.0 && self.gslac_contrast < 1.0) {
            return Err(Error::invalid(
                "GSLAC width must be positive and contrast in (0, 1)",
            ));
        }
        if !(self.field_noise_asd >= 0.0
            && self.electronic_floor >= 0.0
            && self.field_noise_bandwidth > 0.0)
        {
            return Err(Error::invalid("noise levels must be non-negative"));
        }
        if self.sweep_points < 5 || self.calibration_points < 5 {
            return Err(Error::invalid("sweeps need at least five points"));
        }
        if !(self.duration_s > 0.0 && self.settle_time_constants >= 0.0) {
            return Err(Error::invalid("duration must be positive"));
        }
        Ok(())
    }

    /// Signal model: the preset with its GSLAC replaced by the configured line.
    pub fn signal_model(&self) -> Result<TraceModel> {
        let preset = builtin_preset(&self.preset)?;
        let mut features: Vec<Feature> = preset
            .features
            .iter()
            .filter(|f| f.label != FeatureLabel::Gslac)
            .copied()
            .collect();
        features.push(Feature {
            center: self.gslac_center,
            fwhm: self.gslac_fwhm,
            contrast: self.gslac_contrast,
            polarity: preset.detection_mode.polarity(),
            label: FeatureLabel::Gslac,
        });
        for f in &features {
            f.validate()?;
        }
        Ok(TraceModel::new(preset.background, features))
    }
}

/// Demodulated X settled mean at each bias.
pub fn demodulated_sweep<F: Fn(f64) -> f64>(
    signal: F,
    biases: &[f64],
    modulation: &ModulationParams,
    phase_deg: f64,
    settle_time_constants: f64,
) -> Result<Vec<(f64, f64)>> {
    let settle = settle_time_constants * modulation.time_constant;
    let duration = settle + 10.0 * modulation.time_constant;
    biases
        .iter()
        .map(|&b| {
            let ts = modulate_and_sample(&signal, b, modulation, duration, None, 0)?;
            let d = demodulate(&ts, modulation, phase_deg)?;
            Ok((b, d.settled_mean(settle).0))
        })
        .collect()
}

fn linspace(center: f64, half: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| center - half + 2.0 * half * i as f64 / (n - 1) as f64)
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseRun {
    pub label: String,
    pub bias: f64,
    pub field_noise_asd: f64,
    /// Field-equivalent spectrum of the X output, filter response removed.
    pub spectrum: NoiseSpectrum,
    pub band_average: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MagnetometerResult {
    /// (bias, X) across ±fwhm of the GSLAC.
    pub sweep: Vec<(f64, f64)>,
    /// Line fit over ±fwhm/4.
    pub linearity: Calibration,
    /// Same fit applied to A·s′(B)/2 from a central-difference derivative.
    pub linearity_oracle_slope: f64,
    /// Local slope used to convert X to field.
    pub calibration: Calibration,
    /// A·s″/2 at the GSLAC centre, from a second central difference.
    pub calibration_oracle_slope: f64,
    pub runs: Vec<NoiseRun>,
    pub sensitivity: SensitivityReport,
    pub implied_prefactor: f64,
}

impl MagnetometerResult {
    pub fn run(&self, label: &str) -> Option<&NoiseRun> {
        self.runs.iter().find(|r| r.label == label)
    }
}

pub const SENSITIVE: &str = "sensitive";
pub const INSENSITIVE: &str = "insensitive";
pub const ELECTRONICS_ONLY: &str = "electronics-only";

/// Full magnetometer scenario: calibration sweeps, three noise recordings
/// and the shot-noise sensitivity estimate.
pub fn magnetometer(config: &MagnetometerConfig, seed: u64) -> Result<MagnetometerResult> {
    config.validate()?;
    let model = config.signal_model()?;
    let signal = |b: f64| model.eval(b);
    let m = &config.modulation;
    let c = config.gslac_center;
    let w = config.gslac_fwhm;

    let sweep_biases = linspace(c, w, config.sweep_points);
    let sweep = demodulated_sweep(
        signal,
        &sweep_biases,
        m,
        config.phase_deg,
        config.settle_time_constants,
    )?;
    let linearity = calibrate_slope(&sweep, c, w / 4.0)?;

    let h = w * 1e-4;
    let derivative = |b: f64| (signal(b + h) - signal(b - h)) / (2.0 * h);
    let window: Vec<(f64, f64)> = sweep
        .iter()
        .filter(|(b, _)| (b - c).abs() <= w / 4.0 * (1.0 + 1e-12))
        .map(|(b, _)| (*b, 0.5 * m.amplitude * derivative(*b)))
        .collect();
    let (wb, wx): (Vec<f64>, Vec<f64>) = window.into_iter().unzip();
    let linearity_oracle_slope = fit_line(&wb, &wx)?.slope;

    let cal_half = w / 40.0;
    let cal_biases = linspace(c, cal_half, config.calibration_points);
    let cal_sweep = demodulated_sweep(
        signal,
        &cal_biases,
        m,
        config.phase_deg,
        config.settle_time_constants,
    )?;
    let calibration = calibrate_slope(&cal_sweep, c, cal_half)?;
    let h2 = w * 1e-3;
    let curvature = (signal(c + h2) - 2.0 * signal(c) + signal(c - h2)) / (h2 * h2);
    let calibration_oracle_slope = 0.5 * m.amplitude * curvature;

    let settle = config.settle_time_constants * m.time_constant;
    let detector_asd = std::f64::consts::SQRT_2 * calibration.slope.abs() * config.electronic_floor;
    let scenarios = [
        (SENSITIVE, c, config.field_noise_asd),
        (INSENSITIVE, config.insensitive_bias, config.field_noise_asd),
        (ELECTRONICS_ONLY, c, 0.0),
    ];
    let mut runs = Vec::new();
    for (i, (label, bias, field_asd)) in scenarios.into_iter().enumerate() {
        let run_seed = seed.wrapping_add(i as u64);
        let noise = FieldNoise {
            asd: field_asd,
            bandwidth: Some(config.field_noise_bandwidth),
        };
        let clean = modulate_and_sample_with(
            signal,
            bias,
            m,
            config.duration_s + settle,
            Some(noise),
            run_seed,
        )?;
        let noisy = add_white_noise(&clean, detector_asd, run_seed)?;
        let demod = demodulate(&noisy, m, config.phase_deg)?;
        let field = demod
            .x_series()
            .skip(settle)
            .scaled(1.0 / calibration.slope);
        let spectrum =
            noise_spectrum(&field, &config.welch)?.compensate(|f| demod.transfer_magnitude(f));
        let band_average = band_average(&spectrum, config.band_lo, config.band_hi)?;
        runs.push(NoiseRun {
            label: label.to_string(),
            bias,
            field_noise_asd: field_asd,
            spectrum,
            band_average,
        });
    }

    let rate = photon_rate(config.collected_power, config.wavelength)?;
    let sensitivity = shot_noise_limit(
        config.gslac_fwhm,
        config.gslac_contrast,
        rate,
        config.prefactor,
    )?
    .with_note("fwhm_T", "GSLAC linewidth of the scenario line")
    .with_note("contrast", "GSLAC contrast of the scenario line")
    .with_note(
        "photon_rate_per_s",
        "collected power times wavelength over hc",
    )
    .with_note(
        "prefactor",
        "user supplied; the relation is a proportionality",
    );
    let implied_prefactor = sensitivity.implied_prefactor(REFERENCE_SENSITIVITY);
    Ok(MagnetometerResult {
        sweep,
        linearity,
        linearity_oracle_slope,
        calibration,
        calibration_oracle_slope,
        runs,
        sensitivity,
        implied_prefactor,
    })
}

/// Key/value lines summarising a magnetometer run.
pub fn magnetometer_summary(result: &MagnetometerResult) -> BTreeMap<String, String> {
    let mut out = BTreeMap::new();
    out.insert(
        "linearity_slope_per_T".into(),
        format!("{:.6e}", result.linearity.slope),
    );
    out.insert(
        "linearity_oracle_slope_per_T".into(),
        format!("{:.6e}", result.linearity_oracle_slope),
    );
    out.insert(
        "linearity_rms_fraction".into(),
        format!("{:.4}", result.linearity.rms_fraction),
    );
    out.insert(
        "calibration_slope_per_T".into(),
        format!("{:.6e}", result.calibration.slope),
    );
    out.insert(
        "calibration_oracle_slope_per_T".into(),
        format!("{:.6e}", result.calibration_oracle_slope),
    );
    out.insert(
        "zero_crossing_T".into(),
        format!("{:.9e}", result.linearity.center),
    );
    for run in &result.runs {
        out.insert(
            format!("band_average_{}_T_per_sqrtHz", run.label.replace('-', "_")),
            format!("{:.4e}", run.band_average),
        );
    }
    out.insert(
        "delta_B_T_per_sqrtHz".into(),
        format!("{:.4e}", result.sensitivity.delta_b),
    );
    out.insert(
        "reference_delta_B_T_per_sqrtHz".into(),
        format!("{:.4e}", REFERENCE_SENSITIVITY),
    );
    out.insert(
        "implied_prefactor".into(),
        format!("{:.4}", result.implied_prefactor),
    );
    out
}

/// Flat-background GSLAC model used by the demodulation tests.
pub fn isolated_gslac(center: f64, fwhm: f64, contrast: f64) -> TraceModel {
    TraceModel::new(
        Background::FLAT,
        vec![Feature {
            center,
            fwhm,
            contrast,
            polarity: crate::scan_engine::Polarity::PlDip,
            label: FeatureLabel::Gslac,
        }],
    )
}
