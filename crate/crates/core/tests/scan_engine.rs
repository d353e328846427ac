use proptest::prelude::*;

use gslac::inference::fit_lorentzian;
use gslac::scan_engine::{
    angle_response, builtin_preset, builtin_presets, figure_of_merit, presets_from_toml,
    presets_to_toml, synthesize_scan, AngleModelParams, Background, Feature, FeatureLabel,
    Polarity, ScanConfig, TraceModel, NORMALIZATION_FIELD,
};
use gslac::MILLITESLA;

fn local_depth(trace: &gslac::scan_engine::ScanTrace, center: f64) -> f64 {
    let at = |b: f64| {
        let i = trace
            .field
            .iter()
            .enumerate()
            .min_by(|x, y| (x.1 - b).abs().total_cmp(&(y.1 - b).abs()))
            .unwrap()
            .0;
        trace.signal[i]
    };
    0.5 * (at(center - 3.0 * MILLITESLA) + at(center + 3.0 * MILLITESLA)) - at(center)
}

#[test]
fn w4_shows_three_dips() {
    let trace = synthesize_scan(&builtin_preset("W4").unwrap(), &ScanConfig::default()).unwrap();
    for center in [51.2, 60.0, 102.4] {
        assert!(
            local_depth(&trace, center * MILLITESLA) > 0.0,
            "no dip at {center} mT"
        );
    }
    let small = local_depth(&trace, 51.2 * MILLITESLA);
    assert!((small - 0.0005).abs() < 1e-4, "{small}");
}

#[test]
fn normalised_to_one_at_80_mt() {
    for preset in builtin_presets() {
        let config = ScanConfig {
            field_start: 0.0,
            field_stop: 0.11,
            n_points: 1101,
            ..ScanConfig::default()
        };
        let trace = synthesize_scan(&preset, &config).unwrap();
        let i = trace
            .field
            .iter()
            .position(|b| (b - NORMALIZATION_FIELD).abs() < 1e-12)
            .unwrap();
        assert_eq!(trace.signal[i], 1.0, "{}", preset.name);
    }
}

#[test]
fn gslac_only_scan_round_trips_through_the_fit() {
    let feature = Feature {
        center: 102.4 * MILLITESLA,
        fwhm: 0.46 * MILLITESLA,
        contrast: 0.03,
        polarity: Polarity::PlDip,
        label: FeatureLabel::Gslac,
    };
    let model = TraceModel::new(Background::FLAT, vec![feature]);
    let field: Vec<f64> = (0..801).map(|i| 0.0994 + 6e-3 * i as f64 / 800.0).collect();
    let signal = field.iter().map(|b| model.eval(*b)).collect();
    let trace = gslac::scan_engine::ScanTrace::new(field, signal).unwrap();
    let p = fit_lorentzian(&trace, None).unwrap().params;
    assert!(((p.center - feature.center) / feature.center).abs() < 1e-6);
    assert!(((p.fwhm - feature.fwhm) / feature.fwhm).abs() < 1e-6);
    assert!(((p.contrast() - feature.contrast) / feature.contrast).abs() < 1e-6);
}

#[test]
fn removing_a_feature_only_changes_its_lorentzian_tail() {
    // Far from a feature the change is the Lorentzian tail c·L(B), bounded by
    // c·(fwhm/2d)²; at five widths that is about c/100, not below 1e-9.
    let preset = builtin_preset("B3A").unwrap();
    let full = TraceModel::new(preset.background, preset.features.clone());
    for (k, removed) in preset.features.iter().enumerate() {
        let mut rest = preset.features.clone();
        rest.remove(k);
        let partial = TraceModel::new(preset.background, rest);
        for i in 0..=2200 {
            let b = 0.11 * i as f64 / 2200.0;
            let d = (b - removed.center).abs();
            let diff = (full.raw(b) - partial.raw(b)).abs();
            let tail = partial.raw(b) * removed.contrast / (1.0 + (2.0 * d / removed.fwhm).powi(2));
            assert!((diff - tail).abs() <= 1e-15);
            if d > 5.0 * removed.fwhm {
                assert!(diff <= removed.contrast * (removed.fwhm / (2.0 * d)).powi(2));
            }
        }
    }
}

#[test]
fn figure_of_merit_peaks_off_axis() {
    let params = AngleModelParams::default();
    let grid: Vec<f64> = (-40_000..=40_000)
        .map(|i| i as f64 * 0.2 / 40_000.0)
        .collect();
    let best = grid
        .iter()
        .copied()
        .max_by(|a, b| figure_of_merit(*a, &params).total_cmp(&figure_of_merit(*b, &params)))
        .unwrap();
    assert!(best.abs() > 0.005 && best.abs() < 0.03, "{best}");
    assert!(figure_of_merit(0.0, &params) < figure_of_merit(0.01, &params));
    assert!(figure_of_merit(0.0, &params) < figure_of_merit(1e-4, &params));
}

#[test]
fn angle_response_examples() {
    let params = AngleModelParams::default();
    let zero = angle_response(0.0, &params);
    assert_eq!(zero.fwhm, 0.46 * MILLITESLA);
    assert!((zero.contrast - 0.65 * params.contrast_far).abs() < 1e-15);
    let half = angle_response(0.027, &params);
    assert!((half.contrast - params.contrast_far * (1.0 - 0.35 / 2.0)).abs() < 1e-15);
    let far = angle_response(0.2, &params);
    assert!((far.contrast - params.contrast_far).abs() < 0.01 * params.contrast_far);
    assert!(far.fwhm > params.fwhm_min);
}

#[test]
fn presets_survive_serialisation() {
    let presets = builtin_presets();
    let text = presets_to_toml(&presets).unwrap();
    assert_eq!(presets_from_toml(&text).unwrap(), presets);
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 500, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn angle_response_is_continuous_and_bounded(beta in -1.0..1.0f64) {
        let params = AngleModelParams::default();
        let r = angle_response(beta, &params);
        let h = 1e-9;
        let near = angle_response(beta + h, &params);
        prop_assert!(r.fwhm >= params.fwhm_min);
        prop_assert!((near.fwhm - r.fwhm).abs() <= params.linewidth_slope * 2.0 * h);
        prop_assert!((near.contrast - r.contrast).abs() < 1e-6 * params.contrast_far);
        prop_assert_eq!(figure_of_merit(beta, &params), figure_of_merit(-beta, &params));
    }

    #[test]
    fn seeded_scans_are_deterministic(seed in any::<u64>(), beta in -0.1..0.1f64) {
        let config = ScanConfig {
            n_points: 201,
            beta_deg: beta,
            photon_rate: Some(1e12),
            seed,
            ..ScanConfig::default()
        };
        let preset = builtin_preset("W4").unwrap();
        prop_assert_eq!(synthesize_scan(&preset, &config).unwrap(), synthesize_scan(&preset, &config).unwrap());
    }
}
