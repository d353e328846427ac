//! Browser bindings. Each exported function returns a flat row-major
//! `Float64Array`; the page reshapes it by the documented column count.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use wasm_bindgen::prelude::*;

use gslac::scan_engine::{
    angle_response, builtin_preset, figure_of_merit, synthesize_scan, DetectionMode, ScanConfig,
};
use gslac::spin_model::{find_gslac, levels, FieldVector, SpinSystemParams};
use gslac::Result;

/// Rows of (B_T, E1_Hz, E2_Hz, E3_Hz) for a field sweep at fixed transverse field.
pub fn level_rows(
    d_hz: f64,
    transverse_t: f64,
    start_t: f64,
    stop_t: f64,
    n: usize,
) -> Result<Vec<f64>> {
    let params = SpinSystemParams {
        zero_field_splitting_hz: d_hz,
        ..SpinSystemParams::default()
    };
    params.validate()?;
    if n < 2 || !(stop_t > start_t) {
        return Err(gslac::Error::InvalidParameter(
            "need n >= 2 and stop > start".into(),
        ));
    }
    let mut out = Vec::with_capacity(4 * n);
    for i in 0..n {
        let b = start_t + (stop_t - start_t) * i as f64 / (n - 1) as f64;
        let set = levels(&params, &FieldVector::with_transverse(b, transverse_t)?)?;
        out.push(b);
        out.extend_from_slice(&set.energies);
    }
    Ok(out)
}

/// Field of minimum gap near D/γ.
pub fn crossing_field(d_hz: f64, transverse_t: f64) -> Result<f64> {
    let params = SpinSystemParams {
        zero_field_splitting_hz: d_hz,
        ..SpinSystemParams::default()
    };
    params.validate()?;
    let guess = params.crossing_field();
    Ok(find_gslac(&params, transverse_t, (0.8 * guess, 1.2 * guess))?.center)
}

/// Rows of (B_T, signal) for a noise-free preset scan.
pub fn scan_rows(
    preset: &str,
    mode: &str,
    beta_deg: f64,
    start_t: f64,
    stop_t: f64,
    n: usize,
) -> Result<Vec<f64>> {
    let mode: DetectionMode = mode.parse()?;
    let preset = builtin_preset(preset)?.with_detection_mode(mode);
    let config = ScanConfig {
        field_start: start_t,
        field_stop: stop_t,
        n_points: n,
        beta_deg,
        ..ScanConfig::default()
    };
    let trace = synthesize_scan(&preset, &config)?;
    Ok(trace
        .field
        .iter()
        .zip(&trace.signal)
        .flat_map(|(b, s)| [*b, *s])
        .collect())
}

/// Rows of (beta_deg, fwhm_T, contrast, figure_of_merit_per_T) for the W4 angle model.
pub fn angle_rows(beta_max_deg: f64, n: usize) -> Result<Vec<f64>> {
    if n < 2 || !(beta_max_deg > 0.0) {
        return Err(gslac::Error::InvalidParameter(
            "need n >= 2 and a positive range".into(),
        ));
    }
    let preset = builtin_preset("W4")?;
    let params = preset.angle_model.expect("W4 carries an angle model");
    let mut out = Vec::with_capacity(4 * n);
    for i in 0..n {
        let beta = -beta_max_deg + 2.0 * beta_max_deg * i as f64 / (n - 1) as f64;
        let r = angle_response(beta, &params);
        out.extend_from_slice(&[beta, r.fwhm, r.contrast, figure_of_merit(beta, &params)]);
    }
    Ok(out)
}

fn js<T>(r: Result<T>) -> std::result::Result<T, JsError> {
    r.map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen(js_name = levelSweep)]
pub fn level_sweep(
    d_hz: f64,
    transverse_t: f64,
    start_t: f64,
    stop_t: f64,
    n: usize,
) -> std::result::Result<Vec<f64>, JsError> {
    js(level_rows(d_hz, transverse_t, start_t, stop_t, n))
}

#[wasm_bindgen(js_name = crossingField)]
pub fn crossing_field_js(d_hz: f64, transverse_t: f64) -> std::result::Result<f64, JsError> {
    js(crossing_field(d_hz, transverse_t))
}

#[wasm_bindgen(js_name = presetScan)]
pub fn preset_scan(
    preset: &str,
    mode: &str,
    beta_deg: f64,
    start_t: f64,
    stop_t: f64,
    n: usize,
) -> std::result::Result<Vec<f64>, JsError> {
    js(scan_rows(preset, mode, beta_deg, start_t, stop_t, n))
}

#[wasm_bindgen(js_name = angleCurve)]
pub fn angle_curve(beta_max_deg: f64, n: usize) -> std::result::Result<Vec<f64>, JsError> {
    js(angle_rows(beta_max_deg, n))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn level_rows_have_four_columns() {
        let rows = level_rows(2.87e9, 0.0, 0.09, 0.11, 11).unwrap();
        assert_eq!(rows.len(), 44);
        assert_eq!(rows[0], 0.09);
        assert!(rows[1] <= rows[2] && rows[2] <= rows[3]);
    }

    #[test]
    fn crossing_tracks_d() {
        let one = crossing_field(2.87e9, 0.0).unwrap();
        let two = crossing_field(5.74e9, 0.0).unwrap();
        assert!((one - 0.10241).abs() < 1e-5);
        assert!((two / one - 2.0).abs() < 1e-6);
    }

    #[test]
    fn scan_rows_pair_field_and_signal() {
        let rows = scan_rows("W4", "PL", 0.0, 0.07, 0.11, 401).unwrap();
        assert_eq!(rows.len(), 802);
        let at_80 = rows
            .chunks(2)
            .find(|r| (r[0] - 0.08).abs() < 1e-12)
            .unwrap();
        assert_eq!(at_80[1], 1.0);
        assert!(scan_rows("W4", "sideways", 0.0, 0.07, 0.11, 401).is_err());
    }

    #[test]
    fn angle_rows_peak_off_axis() {
        let rows = angle_rows(0.1, 401).unwrap();
        let best = rows.chunks(4).max_by(|a, b| a[3].total_cmp(&b[3])).unwrap();
        assert!(best[0] != 0.0 && best[0].abs() <= 0.03);
    }
}
