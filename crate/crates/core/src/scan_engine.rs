//! Synthetic magnetic-field scans: sample presets with their feature
//! catalogue, the misalignment-dependent GSLAC lineshape, electromagnet
//! arithmetic and photon shot noise.
//!
//! A trace is a smooth background multiplied by one Lorentzian dip per
//! feature, normalised to its value at 80 mT.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::photophysics::{contrast_saturation, thermal_center_shift};
use crate::spin_model::FieldVector;
use crate::{Error, Result, MILLITESLA};

/// Field at which traces are normalised.
pub const NORMALIZATION_FIELD: f64 = 80.0 * MILLITESLA;

/// Electromagnet calibration, tesla per ampere.
pub const FIELD_PER_AMPERE: f64 = 2.9e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GrowthType {
    #[serde(rename = "CVD")]
    Cvd,
    #[serde(rename = "HPHT")]
    Hpht,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DetectionMode {
    #[serde(rename = "PL")]
    Pl,
    Absorption,
}

impl DetectionMode {
    pub fn polarity(self) -> Polarity {
        match self {
            DetectionMode::Pl => Polarity::PlDip,
            DetectionMode::Absorption => Polarity::AbsorptionPeak,
        }
    }
}

impl std::str::FromStr for DetectionMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "pl" | "fluorescence" => Ok(DetectionMode::Pl),
            "absorption" | "transmission" => Ok(DetectionMode::Absorption),
            other => Err(Error::invalid(format!("unknown detection mode '{other}'"))),
        }
    }
}

/// How a feature shows up. Both polarities are dips in the recorded signal:
/// a PL reduction, or a transmission reduction caused by extra absorption.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Polarity {
    PlDip,
    AbsorptionPeak,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FeatureLabel {
    #[serde(rename = "GSLAC")]
    Gslac,
    #[serde(rename = "P1-cross-relaxation")]
    P1CrossRelaxation,
    #[serde(rename = "off-axis-NV")]
    OffAxisNv,
    #[serde(rename = "ESLAC-candidate")]
    EslacCandidate,
}

/// Unit-height Lorentzian of full width `fwhm` centred at `center`.
pub fn lorentzian(x: f64, center: f64, fwhm: f64) -> f64 {
    let u = 2.0 * (x - center) / fwhm;
    1.0 / (1.0 + u * u)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Feature {
    #[serde(rename = "center_T")]
    pub center: f64,
    #[serde(rename = "fwhm_T")]
    pub fwhm: f64,
    pub contrast: f64,
    pub polarity: Polarity,
    pub label: FeatureLabel,
}

impl Feature {
    pub fn validate(&self) -> Result<()> {
        if !(self.fwhm > 0.0 && self.fwhm.is_finite()) {
            return Err(Error::invalid("feature width must be positive"));
        }
        if !(self.contrast > 0.0 && self.contrast < 1.0) {
            return Err(Error::invalid("feature contrast must lie in (0, 1)"));
        }
        if !self.center.is_finite() {
            return Err(Error::invalid("feature centre must be finite"));
        }
        Ok(())
    }

    /// Multiplicative factor 1 − contrast·L(B).
    pub fn factor(&self, b: f64) -> f64 {
        1.0 - self.contrast * lorentzian(b, self.center, self.fwhm)
    }
}

/// Smooth background 1 − depth·(1 − exp(−B/scale)).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Background {
    pub depth: f64,
    #[serde(rename = "scale_T")]
    pub scale: f64,
}

impl Background {
    pub const FLAT: Background = Background {
        depth: 0.0,
        scale: 1.0,
    };

    pub fn value(&self, b: f64) -> f64 {
        1.0 - self.depth * (1.0 - (-b.abs() / self.scale).exp())
    }

    fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.depth) || !(self.scale > 0.0) {
            return Err(Error::invalid(
                "background depth must lie in [0, 1) and scale must be positive",
            ));
        }
        Ok(())
    }
}

/// Misalignment dependence of the GSLAC feature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AngleModelParams {
    /// Width at perfect alignment.
    #[serde(rename = "fwhm_min_T")]
    pub fwhm_min: f64,
    /// Linear broadening beyond the elbow angle.
    #[serde(rename = "linewidth_slope_T_per_deg")]
    pub linewidth_slope: f64,
    /// Misalignment below which the width stays at its minimum.
    pub beta_elbow_deg: f64,
    /// Contrast far from alignment.
    pub contrast_far: f64,
    /// Fractional contrast loss at perfect alignment.
    pub dip_depth: f64,
    /// Full width of the contrast dip versus angle.
    pub beta_width_deg: f64,
}

impl Default for AngleModelParams {
    fn default() -> Self {
        Self {
            fwhm_min: 0.46 * MILLITESLA,
            linewidth_slope: 8.0 * MILLITESLA,
            beta_elbow_deg: 0.01,
            contrast_far: 0.01,
            dip_depth: 0.35,
            beta_width_deg: 0.054,
        }
    }
}

impl AngleModelParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            self.fwhm_min,
            self.linewidth_slope,
            self.contrast_far,
            self.dip_depth,
            self.beta_width_deg,
        ];
        if positive.iter().any(|v| !(*v > 0.0 && v.is_finite())) || !(self.beta_elbow_deg >= 0.0) {
            return Err(Error::invalid("angle model parameters must be positive"));
        }
        if self.dip_depth >= 1.0 {
            return Err(Error::invalid("dip depth must be below 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AngleResponse {
    #[serde(rename = "fwhm_T")]
    pub fwhm: f64,
    pub contrast: f64,
}

/// GSLAC width and contrast at misalignment `beta_deg`.
pub fn angle_response(beta_deg: f64, params: &AngleModelParams) -> AngleResponse {
    let excess = (beta_deg.abs() - params.beta_elbow_deg).max(0.0);
    let fwhm = params.fwhm_min + params.linewidth_slope * excess;
    let contrast = params.contrast_far
        * (1.0 - params.dip_depth * lorentzian(beta_deg, 0.0, params.beta_width_deg));
    AngleResponse { fwhm, contrast }
}

/// Contrast over width, a proxy for longitudinal sensitivity (1/T).
pub fn figure_of_merit(beta_deg: f64, params: &AngleModelParams) -> f64 {
    let r = angle_response(beta_deg, params);
    r.contrast / r.fwhm
}

/// Pump-power dependence of the GSLAC feature in absorption.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerModel {
    pub contrast_max: f64,
    #[serde(rename = "saturation_power_W")]
    pub saturation_power: f64,
    /// Centre shift per watt of pump (heating). Zero unless supplied.
    #[serde(rename = "thermal_shift_T_per_W", default)]
    pub thermal_shift: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplePreset {
    pub name: String,
    pub growth_type: GrowthType,
    pub surface_cut: String,
    /// Tabulated upper bound on the nitrogen concentration.
    pub nitrogen_ppm: f64,
    pub irradiation_dose_cm2: f64,
    #[serde(rename = "irradiation_energy_MeV")]
    pub irradiation_energy_mev: f64,
    pub annealing_note: String,
    pub detection_mode: DetectionMode,
    pub background: Background,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub angle_model: Option<AngleModelParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub power_model: Option<PowerModel>,
    pub features: Vec<Feature>,
}

impl SamplePreset {
    pub fn validate(&self) -> Result<()> {
        if !(self.nitrogen_ppm > 0.0) {
            return Err(Error::invalid(format!(
                "{}: nitrogen_ppm must be positive",
                self.name
            )));
        }
        self.background.validate()?;
        let polarity = self.detection_mode.polarity();
        for (i, f) in self.features.iter().enumerate() {
            f.validate()?;
            if f.polarity != polarity {
                return Err(Error::invalid(format!(
                    "{}: feature polarity {:?} does not match detection mode {:?}",
                    self.name, f.polarity, self.detection_mode
                )));
            }
            if self.features[..i].iter().any(|g| g.center == f.center) {
                return Err(Error::invalid(format!(
                    "{}: two features share the centre {} T",
                    self.name, f.center
                )));
            }
        }
        if let Some(a) = &self.angle_model {
            a.validate()?;
        }
        if let Some(p) = &self.power_model {
            if !(p.saturation_power > 0.0) || !(p.contrast_max > 0.0 && p.contrast_max < 1.0) {
                return Err(Error::invalid(
                    "power model needs P_sat > 0 and C_max in (0, 1)",
                ));
            }
        }
        Ok(())
    }

    /// Same sample read out in another mode; feature polarities follow.
    pub fn with_detection_mode(mut self, mode: DetectionMode) -> Self {
        self.detection_mode = mode;
        for f in &mut self.features {
            f.polarity = mode.polarity();
        }
        self
    }

    pub fn gslac(&self) -> Option<&Feature> {
        self.features
            .iter()
            .find(|f| f.label == FeatureLabel::Gslac)
    }
}

fn feature(
    center_mt: f64,
    fwhm_mt: f64,
    contrast: f64,
    mode: DetectionMode,
    label: FeatureLabel,
) -> Feature {
    Feature {
        center: center_mt * MILLITESLA,
        fwhm: fwhm_mt * MILLITESLA,
        contrast,
        polarity: mode.polarity(),
        label,
    }
}

/// The four characterised samples. Sample metadata is as tabulated; feature
/// widths and contrasts other than the W4 51.2 mT dip and the GSLAC models
/// are editable placeholders.
pub fn builtin_presets() -> Vec<SamplePreset> {
    use FeatureLabel::*;
    let pl = DetectionMode::Pl;
    let abs = DetectionMode::Absorption;
    vec![
        SamplePreset {
            name: "W4".into(),
            growth_type: GrowthType::Cvd,
            surface_cut: "(100)".into(),
            nitrogen_ppm: 1.0,
            irradiation_dose_cm2: 1e18,
            irradiation_energy_mev: 10.0,
            annealing_note: "720 °C, 2 h".into(),
            detection_mode: pl,
            background: Background {
                depth: 0.05,
                scale: 8.0 * MILLITESLA,
            },
            angle_model: Some(AngleModelParams::default()),
            power_model: None,
            features: vec![
                feature(51.2, 0.3, 0.0005, pl, EslacCandidate),
                feature(60.0, 1.0, 0.003, pl, OffAxisNv),
                feature(102.4, 0.46, 0.01, pl, Gslac),
            ],
        },
        SamplePreset {
            name: "B3A".into(),
            growth_type: GrowthType::Hpht,
            surface_cut: "(111)".into(),
            nitrogen_ppm: 110.0,
            irradiation_dose_cm2: 2e19,
            irradiation_energy_mev: 10.0,
            annealing_note: "700 °C, 2 h".into(),
            detection_mode: abs,
            background: Background {
                depth: 0.15,
                scale: 8.0 * MILLITESLA,
            },
            angle_model: None,
            power_model: Some(PowerModel {
                contrast_max: 0.15,
                saturation_power: 0.150,
                thermal_shift: 0.0,
            }),
            features: vec![
                feature(51.2, 1.0, 0.01, abs, P1CrossRelaxation),
                feature(60.0, 1.5, 0.02, abs, OffAxisNv),
                feature(102.4, 0.84, 0.12, abs, Gslac),
            ],
        },
        SamplePreset {
            name: "F11".into(),
            growth_type: GrowthType::Hpht,
            surface_cut: "(111)".into(),
            nitrogen_ppm: 200.0,
            irradiation_dose_cm2: 1e18,
            irradiation_energy_mev: 10.0,
            annealing_note: "700 °C, 3 h".into(),
            detection_mode: pl,
            background: Background {
                depth: 0.08,
                scale: 8.0 * MILLITESLA,
            },
            angle_model: None,
            power_model: None,
            features: vec![
                feature(51.2, 1.0, 0.01, pl, P1CrossRelaxation),
                feature(60.0, 1.5, 0.01, pl, OffAxisNv),
                feature(102.4, 1.2, 0.01, pl, Gslac),
            ],
        },
        SamplePreset {
            name: "C7".into(),
            growth_type: GrowthType::Hpht,
            surface_cut: "(100)".into(),
            nitrogen_ppm: 200.0,
            irradiation_dose_cm2: 1e18,
            irradiation_energy_mev: 10.0,
            annealing_note: "750 °C, 3 h".into(),
            detection_mode: pl,
            background: Background {
                depth: 0.08,
                scale: 8.0 * MILLITESLA,
            },
            angle_model: None,
            power_model: None,
            features: vec![
                feature(51.2, 1.0, 0.01, pl, P1CrossRelaxation),
                feature(60.0, 1.5, 0.01, pl, OffAxisNv),
                feature(102.4, 1.2, 0.008, pl, Gslac),
            ],
        },
    ]
}

pub fn builtin_preset(name: &str) -> Result<SamplePreset> {
    builtin_presets()
        .into_iter()
        .find(|p| p.name.eq_ignore_ascii_case(name))
        .ok_or_else(|| Error::invalid(format!("unknown preset '{name}' (known: W4, B3A, F11, C7)")))
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PresetFile {
    preset: Vec<SamplePreset>,
}

/// Serialises presets as a TOML document with one `[[preset]]` table each.
pub fn presets_to_toml(presets: &[SamplePreset]) -> Result<String> {
    toml::to_string_pretty(&PresetFile {
        preset: presets.to_vec(),
    })
    .map_err(|e| Error::Parse(e.to_string()))
}

pub fn presets_from_toml(text: &str) -> Result<Vec<SamplePreset>> {
    let file: PresetFile = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    for p in &file.preset {
        p.validate()?;
    }
    Ok(file.preset)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScanConfig {
    #[serde(rename = "field_start_T")]
    pub field_start: f64,
    #[serde(rename = "field_stop_T")]
    pub field_stop: f64,
    pub n_points: usize,
    pub scan_duration_s: f64,
    pub n_averages: u32,
    pub alpha_deg: f64,
    pub beta_deg: f64,
    #[serde(rename = "pump_W")]
    pub pump: f64,
    /// Detected photon rate for shot noise; `None` gives a noise-free trace.
    #[serde(
        rename = "photon_rate_per_s",
        default,
        skip_serializing_if = "Option::is_none"
    )]
    pub photon_rate: Option<f64>,
    pub seed: u64,
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self {
            field_start: 0.0,
            field_stop: 110.0 * MILLITESLA,
            n_points: 2201,
            scan_duration_s: 10.0,
            n_averages: 64,
            alpha_deg: 0.0,
            beta_deg: 0.0,
            pump: 0.6,
            photon_rate: None,
            seed: 0,
        }
    }
}

impl ScanConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.field_stop > self.field_start) || !self.field_start.is_finite() {
            return Err(Error::invalid("scan must have field_stop > field_start"));
        }
        if self.n_points < 2 {
            return Err(Error::invalid("scan needs at least two points"));
        }
        if !(self.scan_duration_s > 0.0) || self.n_averages == 0 {
            return Err(Error::invalid(
                "scan duration and averages must be positive",
            ));
        }
        if !(self.pump >= 0.0) {
            return Err(Error::invalid("pump power must be non-negative"));
        }
        if let Some(r) = self.photon_rate {
            if !(r > 0.0) {
                return Err(Error::invalid("photon rate must be positive"));
            }
        }
        Ok(())
    }

    pub fn fields(&self) -> Vec<f64> {
        let step = (self.field_stop - self.field_start) / (self.n_points - 1) as f64;
        (0..self.n_points)
            .map(|i| {
                if i + 1 == self.n_points {
                    self.field_stop
                } else {
                    self.field_start + step * i as f64
                }
            })
            .collect()
    }

    /// Integration time per point summed over averages.
    pub fn dwell_time(&self) -> f64 {
        self.scan_duration_s * f64::from(self.n_averages) / self.n_points as f64
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TraceMetadata {
    pub sample: String,
    pub config: Option<ScanConfig>,
    #[serde(rename = "normalization_point_T")]
    pub normalization_point: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanTrace {
    /// Applied field magnitude, T.
    pub field: Vec<f64>,
    pub signal: Vec<f64>,
    pub metadata: TraceMetadata,
}

impl ScanTrace {
    pub fn new(field: Vec<f64>, signal: Vec<f64>) -> Result<Self> {
        let trace = Self {
            field,
            signal,
            metadata: TraceMetadata::default(),
        };
        trace.validate()?;
        Ok(trace)
    }

    pub fn validate(&self) -> Result<()> {
        if self.field.len() != self.signal.len() {
            return Err(Error::invalid("field and signal lengths differ"));
        }
        let increasing = self.field.windows(2).all(|w| w[1] > w[0]);
        let decreasing = self.field.windows(2).all(|w| w[1] < w[0]);
        if !(increasing || decreasing) {
            return Err(Error::invalid("field values must be strictly monotone"));
        }
        if self
            .field
            .iter()
            .chain(&self.signal)
            .any(|v| !v.is_finite())
        {
            return Err(Error::invalid("trace contains non-finite values"));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.field.len()
    }

    pub fn is_empty(&self) -> bool {
        self.field.is_empty()
    }

    /// Sub-trace with field inside [lo, hi].
    pub fn window(&self, lo: f64, hi: f64) -> ScanTrace {
        let (field, signal) = self
            .field
            .iter()
            .zip(&self.signal)
            .filter(|(b, _)| **b >= lo && **b <= hi)
            .map(|(b, s)| (*b, *s))
            .unzip();
        ScanTrace {
            field,
            signal,
            metadata: self.metadata.clone(),
        }
    }
}

/// Noise-free signal model of one sample at a fixed orientation and pump power.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceModel {
    pub background: Background,
    pub features: Vec<Feature>,
    normalization: f64,
}

impl TraceModel {
    /// Resolves the GSLAC feature through the preset's angle and power models.
    /// The misalignment fed to the angle model is the polar angle between
    /// field and NV axis.
    pub fn from_preset(
        preset: &SamplePreset,
        alpha_deg: f64,
        beta_deg: f64,
        pump_w: f64,
    ) -> Result<Self> {
        preset.validate()?;
        let misalignment =
            FieldVector::from_experiment_angles(1.0, alpha_deg, beta_deg)?.theta_deg();
        let pump_mw = pump_w * 1e3;
        let mut features = preset.features.clone();
        for f in features
            .iter_mut()
            .filter(|f| f.label == FeatureLabel::Gslac)
        {
            if let Some(angle) = &preset.angle_model {
                let r = angle_response(misalignment, angle);
                f.fwhm = r.fwhm;
                f.contrast = r.contrast;
            }
            if let Some(power) = &preset.power_model {
                f.contrast =
                    contrast_saturation(pump_mw, power.contrast_max, power.saturation_power * 1e3)?;
                f.center = thermal_center_shift(pump_mw, power.thermal_shift * 1e-3, f.center);
            }
        }
        features.retain(|f| f.contrast > 0.0);
        Ok(Self::new(preset.background, features))
    }

    pub fn new(background: Background, features: Vec<Feature>) -> Self {
        let mut model = Self {
            background,
            features,
            normalization: 1.0,
        };
        model.normalization = model.raw(NORMALIZATION_FIELD);
        model
    }

    /// Unnormalised signal.
    pub fn raw(&self, b: f64) -> f64 {
        self.features
            .iter()
            .fold(self.background.value(b), |acc, f| acc * f.factor(b))
    }

    /// Signal normalised to its value at 80 mT.
    pub fn eval(&self, b: f64) -> f64 {
        self.raw(b) / self.normalization
    }

    pub fn gslac(&self) -> Option<&Feature> {
        self.features
            .iter()
            .find(|f| f.label == FeatureLabel::Gslac)
    }
}

/// Builds a trace from a preset. Noise-free traces equal 1 at the grid point
/// nearest 80 mT (or are scaled by the model value at 80 mT when the scan
/// does not reach it).
pub fn synthesize_scan(preset: &SamplePreset, config: &ScanConfig) -> Result<ScanTrace> {
    config.validate()?;
    let model = TraceModel::from_preset(preset, config.alpha_deg, config.beta_deg, config.pump)?;
    let field = config.fields();
    let raw: Vec<f64> = field.iter().map(|&b| model.raw(b)).collect();

    let in_range =
        NORMALIZATION_FIELD >= config.field_start && NORMALIZATION_FIELD <= config.field_stop;
    let (norm, norm_point) = if in_range {
        let (i, _) = field
            .iter()
            .enumerate()
            .min_by(|a, b| {
                (a.1 - NORMALIZATION_FIELD)
                    .abs()
                    .total_cmp(&(b.1 - NORMALIZATION_FIELD).abs())
            })
            .expect("at least two points");
        (raw[i], field[i])
    } else {
        (model.raw(NORMALIZATION_FIELD), NORMALIZATION_FIELD)
    };
    let signal = raw.iter().map(|r| r / norm).collect();
    let trace = ScanTrace {
        field,
        signal,
        metadata: TraceMetadata {
            sample: preset.name.clone(),
            config: Some(config.clone()),
            normalization_point: Some(norm_point),
        },
    };
    match config.photon_rate {
        Some(rate) => add_shot_noise(&trace, rate, config.dwell_time(), config.seed),
        None => Ok(trace),
    }
}

/// B = 2.9 mT/A × I.
pub fn field_from_current(current_a: f64) -> f64 {
    FIELD_PER_AMPERE * current_a
}

pub fn current_for_field(field_t: f64) -> f64 {
    field_t / FIELD_PER_AMPERE
}

/// Ohmic dissipation I²R in the coil.
pub fn coil_power(current_a: f64, resistance_ohm: f64) -> Result<f64> {
    if !(resistance_ohm > 0.0) {
        return Err(Error::invalid("coil resistance must be positive"));
    }
    Ok(current_a * current_a * resistance_ohm)
}

/// Multiplies each point by (1 + ε), ε ~ N(0, 1/(rate·dwell)).
pub fn add_shot_noise(
    trace: &ScanTrace,
    photon_rate: f64,
    dwell_time: f64,
    seed: u64,
) -> Result<ScanTrace> {
    if !(photon_rate > 0.0 && dwell_time > 0.0) {
        return Err(Error::invalid(
            "photon rate and dwell time must be positive",
        ));
    }
    let sigma = 1.0 / (photon_rate * dwell_time).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let signal = trace
        .signal
        .iter()
        .map(|s| {
            let e: f64 = StandardNormal.sample(&mut rng);
            s * (1.0 + sigma * e)
        })
        .collect();
    Ok(ScanTrace {
        field: trace.field.clone(),
        signal,
        metadata: trace.metadata.clone(),
    })
}
