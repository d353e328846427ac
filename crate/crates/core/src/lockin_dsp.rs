//! Lock-in measurement chain: field modulation, synchronous demodulation,
//! slope calibration, Welch noise spectra and the shot-noise sensitivity
//! estimate.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::inference::fit_line;
use crate::{Error, Result};

pub const PLANCK: f64 = 6.62607015e-34;
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Sensitivity quoted for the experimental device, T/√Hz.
pub const REFERENCE_SENSITIVITY: f64 = 12.2e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModulationParams {
    #[serde(rename = "amplitude_T")]
    pub amplitude: f64,
    #[serde(rename = "frequency_Hz")]
    pub frequency: f64,
    #[serde(rename = "time_constant_s")]
    pub time_constant: f64,
    #[serde(rename = "sample_rate_Hz")]
    pub sample_rate: f64,
    pub filter_order: u32,
}

impl Default for ModulationParams {
    fn default() -> Self {
        Self {
            amplitude: 1e-5,
            frequency: 15e3,
            time_constant: 3e-3,
            sample_rate: 300e3,
            filter_order: 1,
        }
    }
}

impl ModulationParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.sample_rate > 0.0 && self.sample_rate.is_finite()) {
            return Err(Error::invalid("sample rate must be positive"));
        }
        if !(self.frequency > 0.0) || self.frequency >= 0.5 * self.sample_rate {
            return Err(Error::invalid(format!(
                "modulation frequency {} Hz must lie below the Nyquist frequency {} Hz",
                self.frequency,
                0.5 * self.sample_rate
            )));
        }
        if !(self.time_constant > 1.0 / self.frequency) {
            return Err(Error::invalid(
                "time constant must exceed one modulation period",
            ));
        }
        if !(self.amplitude >= 0.0 && self.amplitude.is_finite()) {
            return Err(Error::invalid("modulation amplitude must be non-negative"));
        }
        if self.filter_order == 0 {
            return Err(Error::invalid("filter order must be at least 1"));
        }
        Ok(())
    }

    /// Samples averaged into one demodulated output point.
    pub fn decimation(&self) -> usize {
        ((self.sample_rate * self.time_constant / 4.0).floor() as usize).max(1)
    }

    fn smoothing(&self) -> f64 {
        1.0 - (-1.0 / (self.sample_rate * self.time_constant)).exp()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    pub sample_rate: f64,
    pub values: Vec<f64>,
    pub t0: f64,
}

impl TimeSeries {
    pub fn new(sample_rate: f64, values: Vec<f64>, t0: f64) -> Result<Self> {
        let ts = Self {
            sample_rate,
            values,
            t0,
        };
        ts.validate()?;
        Ok(ts)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sample_rate > 0.0 && self.sample_rate.is_finite()) {
            return Err(Error::invalid("sample rate must be positive"));
        }
        if self.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical(
                "time series contains non-finite values".into(),
            ));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn time(&self, i: usize) -> f64 {
        self.t0 + i as f64 / self.sample_rate
    }

    pub fn duration(&self) -> f64 {
        self.values.len() as f64 / self.sample_rate
    }

    /// Drops samples before `t0 + skip_s`.
    pub fn skip(&self, skip_s: f64) -> TimeSeries {
        let n = ((skip_s * self.sample_rate).ceil() as usize).min(self.values.len());
        TimeSeries {
            sample_rate: self.sample_rate,
            values: self.values[n..].to_vec(),
            t0: self.time(n),
        }
    }

    pub fn scaled(&self, factor: f64) -> TimeSeries {
        TimeSeries {
            sample_rate: self.sample_rate,
            values: self.values.iter().map(|v| v * factor).collect(),
            t0: self.t0,
        }
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len().max(1) as f64
    }
}

fn gaussian_stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Standard deviation per sample of white noise with one-sided ASD `asd`.
pub fn white_noise_sigma(asd: f64, sample_rate: f64) -> f64 {
    asd * (0.5 * sample_rate).sqrt()
}

/// Samples `signal(B_bias + A·sin(2πft) + δB(t))`, with δB white Gaussian of
/// one-sided amplitude spectral density `field_noise_asd` (T/√Hz).
pub fn modulate_and_sample<F: Fn(f64) -> f64>(
    signal: F,
    bias: f64,
    modulation: &ModulationParams,
    duration_s: f64,
    field_noise_asd: Option<f64>,
    seed: u64,
) -> Result<TimeSeries> {
    let noise = field_noise_asd.map(|asd| FieldNoise {
        asd,
        bandwidth: None,
    });
    modulate_and_sample_with(signal, bias, modulation, duration_s, noise, seed)
}

/// Gaussian field noise, optionally shaped by a single-pole low-pass of unit
/// DC gain so that its ASD is `asd` well below `bandwidth`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldNoise {
    #[serde(rename = "asd_T_per_sqrtHz")]
    pub asd: f64,
    #[serde(
        rename = "bandwidth_Hz",
        default,
        skip_serializing_if = "Option::is_none"
    )]
    pub bandwidth: Option<f64>,
}

pub fn modulate_and_sample_with<F: Fn(f64) -> f64>(
    signal: F,
    bias: f64,
    modulation: &ModulationParams,
    duration_s: f64,
    noise: Option<FieldNoise>,
    seed: u64,
) -> Result<TimeSeries> {
    modulation.validate()?;
    if !(duration_s >= 10.0 * modulation.time_constant) {
        return Err(Error::invalid(format!(
            "duration {duration_s} s is shorter than ten time constants"
        )));
    }
    let (sigma, shaping) = match noise {
        Some(n) if !(n.asd >= 0.0) => return Err(Error::invalid("noise ASD must be non-negative")),
        Some(FieldNoise {
            bandwidth: Some(bw),
            ..
        }) if !(bw > 0.0) => return Err(Error::invalid("noise bandwidth must be positive")),
        Some(n) => (
            white_noise_sigma(n.asd, modulation.sample_rate),
            n.bandwidth
                .map(|bw| 1.0 - (-2.0 * PI * bw / modulation.sample_rate).exp())
                .unwrap_or(1.0),
        ),
        None => (0.0, 1.0),
    };
    let n = (duration_s * modulation.sample_rate).round() as usize;
    let w = 2.0 * PI * modulation.frequency;
    let mut rng = gaussian_stream(seed, 0);
    let mut shaped = 0.0;
    let values = (0..n)
        .map(|i| {
            let t = i as f64 / modulation.sample_rate;
            let mut b = bias + modulation.amplitude * (w * t).sin();
            if sigma > 0.0 {
                let e: f64 = StandardNormal.sample(&mut rng);
                shaped += shaping * (sigma * e - shaped);
                b += shaped;
            }
            signal(b)
        })
        .collect();
    TimeSeries::new(modulation.sample_rate, values, 0.0)
}

/// Adds white Gaussian noise of one-sided ASD `asd` in signal units/√Hz.
pub fn add_white_noise(ts: &TimeSeries, asd: f64, seed: u64) -> Result<TimeSeries> {
    if !(asd >= 0.0) {
        return Err(Error::invalid("noise ASD must be non-negative"));
    }
    let sigma = white_noise_sigma(asd, ts.sample_rate);
    let mut rng = gaussian_stream(seed, 1);
    let values = ts
        .values
        .iter()
        .map(|v| {
            let e: f64 = StandardNormal.sample(&mut rng);
            v + sigma * e
        })
        .collect();
    TimeSeries::new(ts.sample_rate, values, ts.t0)
}

/// In-phase (X) and quadrature (Y) outputs after filtering and decimation.
#[derive(Debug, Clone, PartialEq)]
pub struct DemodOutput {
    pub sample_rate: f64,
    pub t0: f64,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    input_rate: f64,
    decimation: usize,
    smoothing: f64,
    filter_order: u32,
}

impl DemodOutput {
    pub fn x_series(&self) -> TimeSeries {
        TimeSeries {
            sample_rate: self.sample_rate,
            values: self.x.clone(),
            t0: self.t0,
        }
    }

    pub fn y_series(&self) -> TimeSeries {
        TimeSeries {
            sample_rate: self.sample_rate,
            values: self.y.clone(),
            t0: self.t0,
        }
    }

    /// Mean (X, Y) after discarding the first `settle_s` seconds.
    pub fn settled_mean(&self, settle_s: f64) -> (f64, f64) {
        let skip = (settle_s * self.sample_rate).ceil() as usize;
        let mean = |v: &[f64]| {
            let tail = &v[skip.min(v.len())..];
            tail.iter().sum::<f64>() / tail.len().max(1) as f64
        };
        (mean(&self.x), mean(&self.y))
    }

    /// Amplitude response of the filter cascade and block decimator to a
    /// baseband component at `f` Hz.
    pub fn transfer_magnitude(&self, f: f64) -> f64 {
        let wd = 2.0 * PI * f / self.input_rate;
        let a = self.smoothing;
        let denom = Complex::new(1.0 - (1.0 - a) * wd.cos(), (1.0 - a) * wd.sin()).norm();
        let section = a / denom;
        let n = self.decimation as f64;
        let block = if f == 0.0 || self.decimation == 1 {
            1.0
        } else {
            ((PI * f * n / self.input_rate).sin() / (n * (PI * f / self.input_rate).sin())).abs()
        };
        section.powi(self.filter_order as i32) * block
    }
}

/// Cascade of identical first-order exponential sections.
#[derive(Debug, Clone)]
pub struct LowPass {
    alpha: f64,
    state: Vec<f64>,
}

impl LowPass {
    pub fn new(modulation: &ModulationParams) -> Self {
        Self {
            alpha: modulation.smoothing(),
            state: vec![0.0; modulation.filter_order as usize],
        }
    }

    pub fn step(&mut self, input: f64) -> f64 {
        let mut v = input;
        for s in &mut self.state {
            *s += self.alpha * (v - *s);
            v = *s;
        }
        v
    }
}

/// X = LPF(s·sin(2πft + φ)), Y = LPF(s·cos(2πft + φ)). A sinusoid of
/// amplitude a in phase with the reference gives X = a/2.
pub fn demodulate(
    ts: &TimeSeries,
    modulation: &ModulationParams,
    phase_deg: f64,
) -> Result<DemodOutput> {
    modulation.validate()?;
    ts.validate()?;
    if (ts.sample_rate - modulation.sample_rate).abs() > 1e-9 * modulation.sample_rate {
        return Err(Error::invalid(
            "time-series sample rate differs from the modulation settings",
        ));
    }
    let w = 2.0 * PI * modulation.frequency;
    let phi = phase_deg.to_radians();
    let mut lpf_x = LowPass::new(modulation);
    let mut lpf_y = LowPass::new(modulation);
    let n_dec = modulation.decimation();
    let (mut acc_x, mut acc_y) = (0.0, 0.0);
    let mut x = Vec::with_capacity(ts.len() / n_dec + 1);
    let mut y = Vec::with_capacity(ts.len() / n_dec + 1);

    for (i, s) in ts.values.iter().enumerate() {
        let arg = w * ts.time(i) + phi;
        acc_x += lpf_x.step(s * arg.sin());
        acc_y += lpf_y.step(s * arg.cos());
        if (i + 1) % n_dec == 0 {
            x.push(acc_x / n_dec as f64);
            y.push(acc_y / n_dec as f64);
            acc_x = 0.0;
            acc_y = 0.0;
        }
    }
    Ok(DemodOutput {
        sample_rate: modulation.sample_rate / n_dec as f64,
        t0: ts.t0,
        x,
        y,
        input_rate: modulation.sample_rate,
        decimation: n_dec,
        smoothing: modulation.smoothing(),
        filter_order: modulation.filter_order,
    })
}

/// Small-modulation first harmonic: X ≈ A·s′(B)/2.
pub fn first_harmonic_estimate(derivative: f64, modulation: &ModulationParams) -> f64 {
    0.5 * modulation.amplitude * derivative
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    /// dX/dB in signal units per tesla.
    #[serde(rename = "slope_per_T")]
    pub slope: f64,
    #[serde(rename = "center_T")]
    pub center: f64,
    /// rms residual of the line fit as a fraction of the X range.
    pub rms_fraction: f64,
    pub n_points: usize,
}

/// Maximum rms residual, relative to the X range, accepted as linear.
pub const LINEARITY_LIMIT: f64 = 0.05;

/// Line fit of (bias, X) pairs inside `center ± half_window`.
pub fn calibrate_slope(
    points: &[(f64, f64)],
    center: f64,
    half_window: f64,
) -> Result<Calibration> {
    if !(half_window > 0.0) {
        return Err(Error::invalid("calibration window must be positive"));
    }
    let (b, x): (Vec<f64>, Vec<f64>) = points
        .iter()
        .filter(|(b, _)| (b - center).abs() <= half_window * (1.0 + 1e-12))
        .copied()
        .unzip();
    if b.len() < 5 {
        return Err(Error::InsufficientData(format!(
            "calibration needs five points in the window, got {}",
            b.len()
        )));
    }
    let line = fit_line(&b, &x)?;
    let hi = x.iter().copied().fold(f64::MIN, f64::max);
    let lo = x.iter().copied().fold(f64::MAX, f64::min);
    let range = hi - lo;
    if !(range > 0.0) || line.slope == 0.0 {
        return Err(Error::NoFeature);
    }
    let rms_fraction = line.residual_rms / range;
    if rms_fraction >= LINEARITY_LIMIT {
        return Err(Error::NonLinear { rms_fraction });
    }
    Ok(Calibration {
        slope: line.slope,
        center: line.zero_crossing(),
        rms_fraction,
        n_points: b.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Window {
    Hann,
    Rectangular,
}

impl Window {
    pub fn coefficients(self, n: usize) -> Vec<f64> {
        match self {
            Window::Rectangular => vec![1.0; n],
            Window::Hann => (0..n)
                .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / n as f64).cos())
                .collect(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Window::Hann => "hann",
            Window::Rectangular => "rectangular",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WelchConfig {
    pub segment_length: usize,
    pub overlap_fraction: f64,
    pub window: Window,
}

impl Default for WelchConfig {
    fn default() -> Self {
        Self {
            segment_length: 256,
            overlap_fraction: 0.5,
            window: Window::Hann,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpectrum {
    pub frequencies: Vec<f64>,
    /// One-sided amplitude spectral density, units/√Hz.
    pub asd: Vec<f64>,
    pub window: String,
    pub n_averages: usize,
}

impl NoiseSpectrum {
    /// Frequency spacing.
    pub fn resolution(&self) -> f64 {
        self.frequencies.get(1).copied().unwrap_or(0.0) - self.frequencies[0]
    }

    /// ∫ PSD df.
    pub fn integrated_power(&self) -> f64 {
        self.asd.iter().map(|a| a * a).sum::<f64>() * self.resolution()
    }

    /// Divides out a known amplitude response.
    pub fn compensate<F: Fn(f64) -> f64>(&self, response: F) -> NoiseSpectrum {
        let asd = self
            .frequencies
            .iter()
            .zip(&self.asd)
            .map(|(f, a)| {
                let g = response(*f);
                if g > 0.0 {
                    a / g
                } else {
                    *a
                }
            })
            .collect();
        NoiseSpectrum {
            asd,
            ..self.clone()
        }
    }
}

/// Averaged-periodogram ASD with per-segment mean removal.
pub fn noise_spectrum(ts: &TimeSeries, config: &WelchConfig) -> Result<NoiseSpectrum> {
    ts.validate()?;
    let n = config.segment_length;
    if n < 4 {
        return Err(Error::invalid("segment length must be at least 4"));
    }
    if !(0.0..1.0).contains(&config.overlap_fraction) {
        return Err(Error::invalid("overlap fraction must lie in [0, 1)"));
    }
    if ts.len() < 2 * n {
        return Err(Error::InsufficientData(format!(
            "spectrum needs two segments of {n} samples, got {} samples",
            ts.len()
        )));
    }
    let hop = ((n as f64 * (1.0 - config.overlap_fraction)).round() as usize).max(1);
    let window = config.window.coefficients(n);
    let window_power: f64 = window.iter().map(|w| w * w).sum();
    let fft = FftPlanner::new().plan_fft_forward(n);
    let n_bins = n / 2 + 1;
    let mut psd = vec![0.0; n_bins];
    let mut n_avg = 0;
    let mut buf = vec![Complex::new(0.0, 0.0); n];

    let mut start = 0;
    while start + n <= ts.len() {
        let seg = &ts.values[start..start + n];
        let mean = seg.iter().sum::<f64>() / n as f64;
        for ((b, v), w) in buf.iter_mut().zip(seg).zip(&window) {
            *b = Complex::new((v - mean) * w, 0.0);
        }
        fft.process(&mut buf);
        for (k, p) in psd.iter_mut().enumerate() {
            let one_sided = if k == 0 || (n.is_multiple_of(2) && k == n / 2) {
                1.0
            } else {
                2.0
            };
            *p += one_sided * buf[k].norm_sqr() / (ts.sample_rate * window_power);
        }
        n_avg += 1;
        start += hop;
    }
    let df = ts.sample_rate / n as f64;
    Ok(NoiseSpectrum {
        frequencies: (0..n_bins).map(|k| k as f64 * df).collect(),
        asd: psd.iter().map(|p| (p / n_avg as f64).sqrt()).collect(),
        window: config.window.name().to_string(),
        n_averages: n_avg,
    })
}

/// Mean ASD over the bins with f_lo ≤ f ≤ f_hi.
pub fn band_average(spectrum: &NoiseSpectrum, f_lo: f64, f_hi: f64) -> Result<f64> {
    let top = *spectrum
        .frequencies
        .last()
        .ok_or(Error::InsufficientData("empty spectrum".into()))?;
    if !(f_lo <= f_hi) || f_lo < 0.0 || f_hi > top {
        return Err(Error::invalid(format!(
            "band [{f_lo}, {f_hi}] Hz is outside the spectrum [0, {top}] Hz"
        )));
    }
    let band: Vec<f64> = spectrum
        .frequencies
        .iter()
        .zip(&spectrum.asd)
        .filter(|(f, _)| **f >= f_lo && **f <= f_hi)
        .map(|(_, a)| *a)
        .collect();
    if band.is_empty() {
        return Err(Error::InsufficientData(format!(
            "no spectral bins in [{f_lo}, {f_hi}] Hz"
        )));
    }
    Ok(band.iter().sum::<f64>() / band.len() as f64)
}

/// Photons per second in a beam of `power_w` at `wavelength_m`.
pub fn photon_rate(power_w: f64, wavelength_m: f64) -> Result<f64> {
    if !(power_w >= 0.0) || !(wavelength_m > 0.0) {
        return Err(Error::invalid(
            "power must be non-negative and wavelength positive",
        ));
    }
    Ok(power_w * wavelength_m / (PLANCK * SPEED_OF_LIGHT))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityReport {
    /// T/√Hz.
    pub delta_b: f64,
    #[serde(rename = "fwhm_T")]
    pub fwhm: f64,
    pub contrast: f64,
    #[serde(rename = "photon_rate_per_s")]
    pub photon_rate: f64,
    pub prefactor: f64,
    /// Where each input came from, keyed by field name.
    pub provenance: BTreeMap<String, String>,
}

impl SensitivityReport {
    /// δB recomputed from the stored inputs.
    pub fn recompute(&self) -> f64 {
        self.prefactor * self.fwhm / (self.contrast * self.photon_rate.sqrt())
    }

    /// Prefactor that would make this report equal `target`.
    pub fn implied_prefactor(&self, target: f64) -> f64 {
        self.prefactor * target / self.delta_b
    }

    pub fn with_note(mut self, key: &str, note: &str) -> Self {
        self.provenance.insert(key.to_string(), note.to_string());
        self
    }
}

/// δB = prefactor·fwhm/(C·√R), with the width already in field units.
pub fn shot_noise_limit(
    fwhm: f64,
    contrast: f64,
    photon_rate: f64,
    prefactor: f64,
) -> Result<SensitivityReport> {
    if !(fwhm > 0.0 && fwhm.is_finite()) {
        return Err(Error::invalid("linewidth must be positive"));
    }
    if !(contrast > 0.0 && contrast <= 1.0) {
        return Err(Error::invalid("contrast must lie in (0, 1]"));
    }
    if !(photon_rate > 0.0 && photon_rate.is_finite()) {
        return Err(Error::invalid("photon rate must be positive"));
    }
    if !(prefactor > 0.0 && prefactor.is_finite()) {
        return Err(Error::invalid("prefactor must be positive"));
    }
    let mut report = SensitivityReport {
        delta_b: 0.0,
        fwhm,
        contrast,
        photon_rate,
        prefactor,
        provenance: BTreeMap::new(),
    };
    report.delta_b = report.recompute();
    Ok(report)
}
