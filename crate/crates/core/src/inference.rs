//! Parameter extraction: Lorentzian lineshapes, straight lines, pump-power
//! saturation curves and the misalignment summary of an angle study.

use serde::{Deserialize, Serialize};

use crate::lm::{self, Model};
use crate::scan_engine::{lorentzian, ScanTrace};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LorentzianParams {
    #[serde(rename = "center_T")]
    pub center: f64,
    #[serde(rename = "fwhm_T")]
    pub fwhm: f64,
    /// Signed peak height; negative for a dip.
    pub amplitude: f64,
    pub baseline: f64,
}

impl LorentzianParams {
    pub fn eval(&self, b: f64) -> f64 {
        self.baseline + self.amplitude * lorentzian(b, self.center, self.fwhm)
    }

    /// Fractional dip depth relative to the baseline.
    pub fn contrast(&self) -> f64 {
        -self.amplitude / self.baseline
    }

    fn to_vec(self) -> Vec<f64> {
        vec![self.center, self.fwhm, self.amplitude, self.baseline]
    }

    fn from_slice(p: &[f64]) -> Self {
        Self {
            center: p[0],
            fwhm: p[1],
            amplitude: p[2],
            baseline: p[3],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult<P> {
    pub params: P,
    /// One-sigma uncertainties, laid out like `params`.
    pub stderr: P,
    pub residual_rms: f64,
    pub n_iterations: usize,
    pub converged: bool,
}

struct LorentzianModel;

impl Model for LorentzianModel {
    fn n_params(&self) -> usize {
        4
    }

    fn eval(&self, x: f64, p: &[f64], grad: &mut [f64]) -> f64 {
        let (c, w, a, base) = (p[0], p[1], p[2], p[3]);
        let u = 2.0 * (x - c) / w;
        let d = 1.0 + u * u;
        grad[0] = 4.0 * a * u / (w * d * d);
        grad[1] = 2.0 * a * u * u / (w * d * d);
        grad[2] = 1.0 / d;
        grad[3] = 1.0;
        base + a / d
    }

    fn admissible(&self, p: &[f64]) -> bool {
        p[1] > 0.0
    }
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Starting point for a Lorentzian fit: centre at the extremum, amplitude
/// as extremum minus median, width from interpolated half-extremum crossings.
pub fn lorentzian_initial_guess(trace: &ScanTrace) -> Result<LorentzianParams> {
    let (x, y) = (&trace.field, &trace.signal);
    if y.is_empty() {
        return Err(Error::InsufficientData("empty trace".into()));
    }
    let base = median(y);
    let (ext, amplitude) = y
        .iter()
        .enumerate()
        .map(|(i, v)| (i, v - base))
        .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
        .expect("non-empty");
    if amplitude.abs() <= 1e-12 * base.abs().max(f64::MIN_POSITIVE) {
        return Err(Error::NoFeature);
    }

    let half = 0.5 * amplitude.abs();
    let below_half = |i: usize| (y[i] - base).abs() < half;
    let crossing = |inner: usize, outer: usize| -> f64 {
        // linear interpolation of the half level between two samples
        let (di, do_) = ((y[inner] - base).abs(), (y[outer] - base).abs());
        let t = if di == do_ {
            0.5
        } else {
            (di - half) / (di - do_)
        };
        x[inner] + t * (x[outer] - x[inner])
    };
    let left = (0..ext)
        .rev()
        .find(|&i| below_half(i))
        .map(|i| crossing(i + 1, i))
        .unwrap_or(x[0]);
    let right = (ext + 1..y.len())
        .find(|&i| below_half(i))
        .map(|i| crossing(i - 1, i))
        .unwrap_or(x[y.len() - 1]);
    let mut fwhm = (right - left).abs();
    if fwhm == 0.0 {
        fwhm = (x[y.len() - 1] - x[0]).abs() / y.len() as f64;
    }
    Ok(LorentzianParams {
        center: x[ext],
        fwhm,
        amplitude,
        baseline: base,
    })
}

/// Fits baseline + amplitude/(1 + (2(B − centre)/fwhm)²).
///
/// Non-convergence is reported through `converged`, with the best parameters
/// found so far.
pub fn fit_lorentzian(
    trace: &ScanTrace,
    guess: Option<LorentzianParams>,
) -> Result<FitResult<LorentzianParams>> {
    trace.validate()?;
    if trace.len() < 8 {
        return Err(Error::InsufficientData(format!(
            "Lorentzian fit needs at least 8 points, got {}",
            trace.len()
        )));
    }
    let guess = match guess {
        Some(g) => g,
        None => lorentzian_initial_guess(trace)?,
    };
    if !(guess.fwhm > 0.0) {
        return Err(Error::invalid("initial width must be positive"));
    }
    let span = (trace.field[trace.len() - 1] - trace.field[0]).abs();
    if span < 3.0 * guess.fwhm {
        return Err(Error::InsufficientData(format!(
            "trace spans {span:e} T, less than three widths ({:e} T)",
            3.0 * guess.fwhm
        )));
    }
    let out = lm::fit(
        &LorentzianModel,
        &trace.field,
        &trace.signal,
        &guess.to_vec(),
    );
    Ok(FitResult {
        params: LorentzianParams::from_slice(&out.params),
        stderr: LorentzianParams::from_slice(&out.stderr),
        residual_rms: out.residual_rms,
        n_iterations: out.iterations,
        converged: out.converged,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub stderr_slope: f64,
    pub residual_rms: f64,
}

impl LineFit {
    /// Abscissa where the line crosses zero.
    pub fn zero_crossing(&self) -> f64 {
        -self.intercept / self.slope
    }
}

/// Ordinary least squares y = slope·x + intercept.
pub fn fit_line(x: &[f64], y: &[f64]) -> Result<LineFit> {
    if x.len() != y.len() {
        return Err(Error::invalid("x and y lengths differ"));
    }
    let n = x.len();
    if n < 2 {
        return Err(Error::InsufficientData("line fit needs two points".into()));
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    if !(sxx > 0.0) {
        return Err(Error::InsufficientData(
            "line fit needs two distinct x values".into(),
        ));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| {
            let r = b - (slope * a + intercept);
            r * r
        })
        .sum();
    let stderr_slope = if n > 2 {
        (sse / (nf - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    Ok(LineFit {
        slope,
        intercept,
        stderr_slope,
        residual_rms: (sse / nf).sqrt(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SaturationParams {
    pub c_max: f64,
    #[serde(rename = "p_sat_mW")]
    pub p_sat_mw: f64,
}

struct SaturationModel;

impl Model for SaturationModel {
    fn n_params(&self) -> usize {
        2
    }

    fn eval(&self, p_mw: f64, p: &[f64], grad: &mut [f64]) -> f64 {
        let (c, ps) = (p[0], p[1]);
        let d = p_mw + ps;
        grad[0] = p_mw / d;
        grad[1] = -c * p_mw / (d * d);
        c * p_mw / d
    }

    fn admissible(&self, p: &[f64]) -> bool {
        p[1] > 0.0
    }
}

/// Least-squares fit of C_max·P/(P + P_sat). The fitted P_sat must fall
/// inside the sampled power range, otherwise the data cannot separate the
/// two parameters.
pub fn fit_saturation(powers_mw: &[f64], contrasts: &[f64]) -> Result<FitResult<SaturationParams>> {
    if powers_mw.len() != contrasts.len() {
        return Err(Error::invalid("powers and contrasts lengths differ"));
    }
    let mut distinct = powers_mw.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < 3 {
        return Err(Error::InsufficientData(
            "saturation fit needs three distinct powers".into(),
        ));
    }
    if powers_mw.iter().any(|p| !(*p > 0.0)) {
        return Err(Error::invalid("pump powers must be positive"));
    }

    // double-reciprocal linearisation for the starting point
    let inv_p: Vec<f64> = powers_mw.iter().map(|p| 1.0 / p).collect();
    let inv_c: Vec<f64> = contrasts.iter().map(|c| 1.0 / c).collect();
    let max_c = contrasts.iter().copied().fold(f64::MIN, f64::max);
    let p0 = match fit_line(&inv_p, &inv_c) {
        Ok(l) if l.intercept > 0.0 && l.slope > 0.0 && contrasts.iter().all(|c| *c > 0.0) => {
            vec![1.0 / l.intercept, l.slope / l.intercept]
        }
        _ => vec![2.0 * max_c, median(powers_mw)],
    };

    let out = lm::fit(&SaturationModel, powers_mw, contrasts, &p0);
    let params = SaturationParams {
        c_max: out.params[0],
        p_sat_mw: out.params[1],
    };
    let (lo, hi) = (distinct[0], distinct[distinct.len() - 1]);
    if !(params.p_sat_mw > lo && params.p_sat_mw < hi) {
        return Err(Error::NotIdentifiable(format!(
            "fitted saturation power {:.3} mW lies outside the sampled range [{lo}, {hi}] mW",
            params.p_sat_mw
        )));
    }
    Ok(FitResult {
        params,
        stderr: SaturationParams {
            c_max: out.stderr[0],
            p_sat_mw: out.stderr[1],
        },
        residual_rms: out.residual_rms,
        n_iterations: out.iterations,
        converged: out.converged,
    })
}

/// Summary of how the GSLAC feature depends on misalignment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AngleDependence {
    #[serde(rename = "fwhm_min_T")]
    pub fwhm_min: f64,
    pub contrast_dip_fwhm_deg: f64,
    pub dip_depth: f64,
    #[serde(rename = "linewidth_slope_T_per_deg")]
    pub linewidth_slope: f64,
    pub beta_elbow_deg: f64,
    pub contrast_far: f64,
    pub converged: bool,
}

/// One angle of an angle study.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnglePoint {
    pub beta_deg: f64,
    #[serde(rename = "fwhm_T")]
    pub fwhm: f64,
    pub contrast: f64,
}

impl AnglePoint {
    pub fn from_fit(beta_deg: f64, fit: &FitResult<LorentzianParams>) -> Self {
        Self {
            beta_deg,
            fwhm: fit.params.fwhm,
            contrast: fit.params.contrast(),
        }
    }
}

struct ContrastDipModel;

impl Model for ContrastDipModel {
    fn n_params(&self) -> usize {
        3
    }

    fn eval(&self, beta: f64, p: &[f64], grad: &mut [f64]) -> f64 {
        let (c, d, w) = (p[0], p[1], p[2]);
        let u = 2.0 * beta / w;
        let l = 1.0 / (1.0 + u * u);
        grad[0] = 1.0 - d * l;
        grad[1] = -c * l;
        grad[2] = -c * d * 2.0 * u * u * l * l / w;
        c * (1.0 - d * l)
    }

    fn admissible(&self, p: &[f64]) -> bool {
        p[2] > 0.0
    }
}

/// Fits the angle model to per-angle Lorentzian fits.
pub fn extract_angle_dependence(
    fits: &[(f64, FitResult<LorentzianParams>)],
) -> Result<AngleDependence> {
    let points: Vec<AnglePoint> = fits
        .iter()
        .map(|(b, f)| AnglePoint::from_fit(*b, f))
        .collect();
    extract_angle_dependence_from_points(&points)
}

/// Width: hinge fit fwhm_min + slope·max(0, |β| − elbow). Contrast:
/// C_far·(1 − depth·L(β)) by damped least squares.
pub fn extract_angle_dependence_from_points(points: &[AnglePoint]) -> Result<AngleDependence> {
    let mut betas: Vec<f64> = points.iter().map(|p| p.beta_deg).collect();
    betas.sort_by(f64::total_cmp);
    betas.dedup();
    if betas.len() < 7 {
        return Err(Error::InsufficientData(format!(
            "angle study needs at least 7 angles, got {}",
            betas.len()
        )));
    }
    const SPAN: f64 = 0.1 - 1e-9;
    if betas[0] > -SPAN || betas[betas.len() - 1] < SPAN {
        return Err(Error::InsufficientData(
            "angles must span at least ±0.1°".into(),
        ));
    }

    // canonical order so that mirrored inputs give identical sums
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| {
        a.beta_deg
            .abs()
            .total_cmp(&b.beta_deg.abs())
            .then(a.fwhm.total_cmp(&b.fwhm))
            .then(a.contrast.total_cmp(&b.contrast))
    });

    let abs_beta: Vec<f64> = pts.iter().map(|p| p.beta_deg.abs()).collect();
    let widths: Vec<f64> = pts.iter().map(|p| p.fwhm).collect();
    let hinge = fit_hinge(&abs_beta, &widths)?;

    let contrasts: Vec<f64> = pts.iter().map(|p| p.contrast).collect();
    let c0 = contrasts.iter().copied().fold(f64::MIN, f64::max);
    let cmin = contrasts.iter().copied().fold(f64::MAX, f64::min);
    let d0 = (1.0 - cmin / c0).clamp(1e-3, 0.999);
    let half_level = c0 * (1.0 - 0.5 * d0);
    let w0 = abs_beta
        .iter()
        .zip(&contrasts)
        .find(|(_, c)| **c >= half_level)
        .map(|(b, _)| 2.0 * b)
        .filter(|w| *w > 0.0)
        .unwrap_or(0.25 * abs_beta[abs_beta.len() - 1]);
    let signed: Vec<f64> = pts.iter().map(|p| p.beta_deg.abs()).collect();
    let out = lm::fit(&ContrastDipModel, &signed, &contrasts, &[c0, d0, w0]);

    Ok(AngleDependence {
        fwhm_min: hinge.floor,
        contrast_dip_fwhm_deg: out.params[2],
        dip_depth: out.params[1],
        linewidth_slope: hinge.slope,
        beta_elbow_deg: hinge.elbow,
        contrast_far: out.params[0],
        converged: out.converged,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Hinge {
    floor: f64,
    slope: f64,
    elbow: f64,
    sse: f64,
}

impl Hinge {
    fn eval(&self, a: f64) -> f64 {
        self.floor + self.slope * (a - self.elbow).max(0.0)
    }
}

fn hinge_sse(a: &[f64], y: &[f64], h: &Hinge) -> f64 {
    a.iter().zip(y).map(|(a, y)| (y - h.eval(*a)).powi(2)).sum()
}

/// Least squares for a fixed elbow: linear in (floor, slope).
fn hinge_at(a: &[f64], y: &[f64], elbow: f64) -> Option<Hinge> {
    let z: Vec<f64> = a.iter().map(|v| (v - elbow).max(0.0)).collect();
    let line = fit_line(&z, y).ok()?;
    let mut h = Hinge {
        floor: line.intercept,
        slope: line.slope,
        elbow,
        sse: 0.0,
    };
    h.sse = hinge_sse(a, y, &h);
    Some(h)
}

/// Continuous piecewise-linear regression y = floor + slope·max(0, a − elbow)
/// with `a` sorted ascending. Exact: for every split of the points into a
/// flat and a sloped group, either the unconstrained fit is consistent with
/// the split or the optimum sits on a split boundary.
fn fit_hinge(a: &[f64], y: &[f64]) -> Result<Hinge> {
    let n = a.len();
    let mut best: Option<Hinge> = None;
    let mut consider = |h: Option<Hinge>| {
        if let Some(h) = h {
            if h.sse.is_finite() && best.is_none_or(|b| h.sse < b.sse) {
                best = Some(h);
            }
        }
    };
    for k in 0..n {
        let lo = if k == 0 { 0.0 } else { a[k - 1] };
        let hi = a[k];
        consider(hinge_at(a, y, lo));
        if k >= 1 && n - k >= 2 {
            let floor = y[..k].iter().sum::<f64>() / k as f64;
            if let Ok(line) = fit_line(&a[k..], &y[k..]) {
                if line.slope != 0.0 {
                    let elbow = (floor - line.intercept) / line.slope;
                    if elbow >= lo && elbow <= hi {
                        let mut h = Hinge {
                            floor,
                            slope: line.slope,
                            elbow,
                            sse: 0.0,
                        };
                        h.sse = hinge_sse(a, y, &h);
                        consider(Some(h));
                    }
                }
            }
        }
    }
    best.ok_or_else(|| Error::InsufficientData("width data cannot constrain a hinge fit".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scan_engine::{angle_response, AngleModelParams};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn synthetic(truth: &LorentzianParams, n: usize, half_span: f64) -> ScanTrace {
        let field: Vec<f64> = (0..n)
            .map(|i| truth.center - half_span + 2.0 * half_span * i as f64 / (n - 1) as f64)
            .collect();
        let signal = field.iter().map(|b| truth.eval(*b)).collect();
        ScanTrace::new(field, signal).unwrap()
    }

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    const TRUTH: LorentzianParams = LorentzianParams {
        center: 0.1024,
        fwhm: 0.46e-3,
        amplitude: -0.03,
        baseline: 1.0,
    };

    #[test]
    fn noise_free_round_trip() {
        let trace = synthetic(&TRUTH, 401, 3e-3);
        let fit = fit_lorentzian(&trace, None).unwrap();
        assert!(fit.converged);
        let p = fit.params;
        assert!(rel(p.center, TRUTH.center) < 1e-6);
        assert!(rel(p.fwhm, TRUTH.fwhm) < 1e-6);
        assert!(rel(p.amplitude, TRUTH.amplitude) < 1e-6);
        assert!(rel(p.baseline, TRUTH.baseline) < 1e-6);
        assert!(fit.residual_rms < 1e-8 * 0.03);
    }

    #[test]
    fn shot_noise_monte_carlo() {
        let clean = synthetic(&TRUTH, 401, 3e-3);
        let mut passes = 0;
        for seed in 0..100 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut noisy = clean.clone();
            for s in &mut noisy.signal {
                let e: f64 = StandardNormal.sample(&mut rng);
                *s *= 1.0 + 1e-4 * e;
            }
            let p = fit_lorentzian(&noisy, None).unwrap().params;
            if (p.center - TRUTH.center).abs() < 1e-6 && rel(p.fwhm, TRUTH.fwhm) < 0.02 {
                passes += 1;
            }
        }
        assert!(passes >= 95, "{passes}/100");
    }

    #[test]
    fn flat_trace_has_no_feature() {
        let trace = ScanTrace::new((0..50).map(|i| i as f64).collect(), vec![1.0; 50]).unwrap();
        assert!(matches!(
            fit_lorentzian(&trace, None),
            Err(Error::NoFeature)
        ));
    }

    #[test]
    fn too_few_points_rejected() {
        let trace = synthetic(&TRUTH, 7, 3e-3);
        assert!(matches!(
            fit_lorentzian(&trace, None),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn narrow_span_rejected() {
        let trace = synthetic(&TRUTH, 50, 0.5e-3);
        assert!(fit_lorentzian(&trace, Some(TRUTH)).is_err());
    }

    #[test]
    fn positive_peak_fits_too() {
        let truth = LorentzianParams {
            amplitude: 0.2,
            baseline: 0.4,
            ..TRUTH
        };
        let p = fit_lorentzian(&synthetic(&truth, 301, 2.5e-3), None)
            .unwrap()
            .params;
        assert!(rel(p.amplitude, 0.2) < 1e-6);
    }

    #[test]
    fn initial_guess_is_close() {
        let g = lorentzian_initial_guess(&synthetic(&TRUTH, 601, 3e-3)).unwrap();
        assert!((g.center - TRUTH.center).abs() < 1e-5);
        assert!(rel(g.fwhm, TRUTH.fwhm) < 0.1);
    }

    #[test]
    fn line_exact_on_collinear_points() {
        let x: Vec<f64> = (0..10).map(f64::from).collect();
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v + 1.0).collect();
        let l = fit_line(&x, &y).unwrap();
        assert_eq!(l.slope, 2.0);
        assert_eq!(l.intercept, 1.0);
        assert_eq!(l.stderr_slope, 0.0);
    }

    #[test]
    fn line_needs_distinct_x() {
        assert!(fit_line(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]).is_err());
        assert!(fit_line(&[1.0], &[1.0]).is_err());
    }

    #[test]
    fn saturation_round_trip() {
        let powers = [50.0, 100.0, 200.0, 400.0, 800.0];
        let c: Vec<f64> = powers.iter().map(|p| 0.15 * p / (p + 150.0)).collect();
        let fit = fit_saturation(&powers, &c).unwrap();
        assert!(rel(fit.params.c_max, 0.15) < 1e-8);
        assert!(rel(fit.params.p_sat_mw, 150.0) < 1e-8);

        let doubled: Vec<f64> = c.iter().map(|v| 2.0 * v).collect();
        let fit2 = fit_saturation(&powers, &doubled).unwrap();
        assert!(rel(fit2.params.c_max, 0.30) < 1e-8);
        assert!(rel(fit2.params.p_sat_mw, 150.0) < 1e-8);
    }

    #[test]
    fn saturation_far_below_knee_is_not_identifiable() {
        let powers = [1.0, 2.0, 3.0, 4.0];
        let c: Vec<f64> = powers.iter().map(|p| 0.15 * p / (p + 5000.0)).collect();
        assert!(matches!(
            fit_saturation(&powers, &c),
            Err(Error::NotIdentifiable(_))
        ));
        assert!(fit_saturation(&[1.0, 1.0, 2.0], &[0.1, 0.1, 0.2]).is_err());
    }

    fn grid() -> Vec<f64> {
        (-40..=40).map(|i| i as f64 * 0.005).collect()
    }

    #[test]
    fn angle_summary_round_trip() {
        let params = AngleModelParams::default();
        let points: Vec<AnglePoint> = grid()
            .into_iter()
            .map(|b| {
                let r = angle_response(b, &params);
                AnglePoint {
                    beta_deg: b,
                    fwhm: r.fwhm,
                    contrast: r.contrast,
                }
            })
            .collect();
        let s = extract_angle_dependence_from_points(&points).unwrap();
        assert!(rel(s.fwhm_min, 0.46e-3) < 1e-6);
        assert!(rel(s.contrast_dip_fwhm_deg, 0.054) < 1e-6);
        assert!(rel(s.dip_depth, 0.35) < 1e-6);
        assert!(rel(s.linewidth_slope, params.linewidth_slope) < 1e-6);
        assert!(rel(s.beta_elbow_deg, params.beta_elbow_deg) < 1e-6);

        let mirrored: Vec<AnglePoint> = points
            .iter()
            .rev()
            .map(|p| AnglePoint {
                beta_deg: -p.beta_deg,
                ..*p
            })
            .collect();
        assert_eq!(extract_angle_dependence_from_points(&mirrored).unwrap(), s);
    }

    #[test]
    fn angle_summary_under_contrast_noise() {
        let params = AngleModelParams::default();
        let mut passes = 0;
        for seed in 0..100 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let points: Vec<AnglePoint> = grid()
                .into_iter()
                .map(|b| {
                    let r = angle_response(b, &params);
                    let e: f64 = StandardNormal.sample(&mut rng);
                    AnglePoint {
                        beta_deg: b,
                        fwhm: r.fwhm,
                        contrast: r.contrast * (1.0 + 0.02 * e),
                    }
                })
                .collect();
            let s = extract_angle_dependence_from_points(&points).unwrap();
            if rel(s.contrast_dip_fwhm_deg, 0.054) < 0.15 {
                passes += 1;
            }
        }
        assert!(passes >= 95, "{passes}/100");
    }

    #[test]
    fn angle_summary_needs_coverage() {
        let points: Vec<AnglePoint> = (0..10)
            .map(|i| AnglePoint {
                beta_deg: i as f64 * 0.01,
                fwhm: 1e-3,
                contrast: 0.01,
            })
            .collect();
        assert!(extract_angle_dependence_from_points(&points).is_err());
    }

    #[test]
    fn hinge_recovers_pure_v() {
        let a: Vec<f64> = (0..20).map(|i| i as f64 * 0.01).collect();
        let y: Vec<f64> = a.iter().map(|v| 1.0 + 3.0 * v).collect();
        let h = fit_hinge(&a, &y).unwrap();
        assert!((h.floor - 1.0).abs() < 1e-12 && (h.slope - 3.0).abs() < 1e-12);
        assert!(h.elbow.abs() < 1e-12);
    }
}
