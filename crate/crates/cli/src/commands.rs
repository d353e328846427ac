use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use gslac::inference::{fit_lorentzian, FitResult, LorentzianParams};
use gslac::io::{levels_to_csv, read_trace, report, spectrum_to_csv, trace_to_csv};
use gslac::lockin_dsp::{photon_rate, shot_noise_limit, REFERENCE_SENSITIVITY};
use gslac::scan_engine::{synthesize_scan, DetectionMode, SamplePreset};
use gslac::spin_model::{find_gslac, levels as level_set, FieldVector, LevelSet, SpinSystemParams};
use gslac::studies::{
    angle_study as run_angle_study, magnetometer as run_magnetometer, magnetometer_summary,
};

use crate::config::{Manifest, RunConfig};
use crate::CliError;

pub struct Output {
    dir: PathBuf,
}

impl Output {
    pub fn new(dir: PathBuf) -> Self {
        Self { dir }
    }

    pub fn write(&self, name: &str, contents: &str) -> Result<(), CliError> {
        std::fs::create_dir_all(&self.dir)
            .map_err(|e| CliError::Io(format!("cannot create {}: {e}", self.dir.display())))?;
        let path = self.dir.join(name);
        std::fs::write(&path, contents)
            .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
    }

    fn manifest(
        &self,
        command: &str,
        config: &RunConfig,
        preset: Option<&SamplePreset>,
    ) -> Result<(), CliError> {
        let text = Manifest {
            command,
            version: env!("CARGO_PKG_VERSION"),
            config,
            resolved_preset: preset,
        }
        .to_toml()?;
        self.write("manifest.toml", &text)
    }
}

fn sweep_levels(
    params: &SpinSystemParams,
    fields: &[FieldVector],
) -> Result<Vec<LevelSet>, CliError> {
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get());
    let chunk = fields.len().div_ceil(workers).max(1);
    std::thread::scope(|s| {
        let handles: Vec<_> = fields
            .chunks(chunk)
            .map(|part| {
                s.spawn(move || {
                    part.iter()
                        .map(|f| level_set(params, f))
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        let mut out = Vec::with_capacity(fields.len());
        for h in handles {
            for set in h.join().expect("level worker panicked") {
                out.push(set?);
            }
        }
        Ok(out)
    })
}

pub fn levels(config: &mut RunConfig, out: &Output) -> Result<String, CliError> {
    config.physics.validate()?;
    config.levels.resolve(&config.physics);
    let lv = &config.levels;
    let (start, stop, n) = (
        lv.field_start.unwrap(),
        lv.field_stop.unwrap(),
        lv.n_points.unwrap(),
    );
    if n < 2 || !(stop > start) {
        return Err(CliError::Config(
            "levels need n_points >= 2 and field_stop_T > field_start_T".into(),
        ));
    }
    let fields = (0..n)
        .map(|i| {
            FieldVector::with_transverse(
                start + (stop - start) * i as f64 / (n - 1) as f64,
                lv.transverse,
            )
        })
        .collect::<Result<Vec<_>, _>>()?;
    let sets = sweep_levels(&config.physics, &fields)?;
    let gslac = find_gslac(
        &config.physics,
        lv.transverse,
        (lv.search_lo.unwrap(), lv.search_hi.unwrap()),
    )?;

    out.manifest("levels", config, None)?;
    out.write("levels.csv", &levels_to_csv(&sets))?;
    let text = report([
        ("gslac_center_T", gslac.center.to_string()),
        ("gslac_center_mT", format!("{:.5}", gslac.center * 1e3)),
        ("min_gap_Hz", format!("{:.6e}", gslac.min_gap_hz)),
        ("transverse_T", lv.transverse.to_string()),
    ]);
    out.write("gslac.txt", &text)?;
    Ok(text)
}

pub fn scan(config: &mut RunConfig, out: &Output) -> Result<String, CliError> {
    let preset = config.resolve_preset("W4")?;
    config.scan.seed = config.seed;
    config.scan.validate()?;
    let trace = synthesize_scan(&preset, &config.scan)?;
    out.manifest("scan", config, Some(&preset))?;
    out.write("scan.csv", &trace_to_csv(&trace)?)?;
    Ok(report([
        ("sample", preset.name.clone()),
        (
            "detection_mode",
            match preset.detection_mode {
                DetectionMode::Pl => "PL".to_string(),
                DetectionMode::Absorption => "absorption".to_string(),
            },
        ),
        ("n_points", trace.len().to_string()),
        ("output", "scan.csv".to_string()),
    ]))
}

fn fit_pairs(fit: &FitResult<LorentzianParams>) -> Vec<(&'static str, String)> {
    let (p, e) = (&fit.params, &fit.stderr);
    vec![
        ("model", "lorentzian".into()),
        ("center_T", format!("{:e}", p.center)),
        ("center_stderr_T", format!("{:e}", e.center)),
        ("fwhm_T", format!("{:e}", p.fwhm)),
        ("fwhm_stderr_T", format!("{:e}", e.fwhm)),
        ("amplitude", format!("{:e}", p.amplitude)),
        ("amplitude_stderr", format!("{:e}", e.amplitude)),
        ("baseline", format!("{:e}", p.baseline)),
        ("baseline_stderr", format!("{:e}", e.baseline)),
        ("contrast", format!("{:e}", p.contrast())),
        ("residual_rms", format!("{:e}", fit.residual_rms)),
        ("n_iterations", fit.n_iterations.to_string()),
        ("converged", fit.converged.to_string()),
    ]
}

pub fn fit(config: &RunConfig, trace_path: &Path, out: &Output) -> Result<String, CliError> {
    let mut trace = read_trace(trace_path).map_err(|e| match e {
        gslac::Error::Io(io) => CliError::Io(format!("cannot read {}: {io}", trace_path.display())),
        other => CliError::from(other),
    })?;
    if let (Some(lo), Some(hi)) = (config.fit.window_lo, config.fit.window_hi) {
        trace = trace.window(lo, hi);
    }
    let fit = fit_lorentzian(&trace, None)?;
    let pairs = fit_pairs(&fit);
    let text = report(pairs.iter().map(|(k, v)| (*k, v.as_str())));
    let mut row = String::new();
    let _ = writeln!(
        row,
        "{}",
        pairs.iter().map(|(k, _)| *k).collect::<Vec<_>>().join(",")
    );
    let _ = writeln!(
        row,
        "{}",
        pairs
            .iter()
            .map(|(_, v)| v.as_str())
            .collect::<Vec<_>>()
            .join(",")
    );

    out.manifest("fit", config, None)?;
    out.write("fit_report.txt", &text)?;
    out.write("fit_summary.csv", &row)?;
    Ok(text)
}

pub fn angle_study(config: &mut RunConfig, out: &Output) -> Result<String, CliError> {
    let default_name = config.angle_study.preset.clone();
    let preset = config.resolve_preset(&default_name)?;
    config.angle_study.preset = preset.name.clone();
    let study = run_angle_study(&preset, &config.angle_study)?;

    let mut table =
        String::from("beta_deg,center_T,fwhm_T,contrast,figure_of_merit_per_T,converged\n");
    for r in &study.rows {
        let p = &r.fit.params;
        let _ = writeln!(
            table,
            "{},{},{},{},{},{}",
            r.beta_deg,
            p.center,
            p.fwhm,
            p.contrast(),
            r.figure_of_merit,
            r.fit.converged
        );
    }
    let s = &study.summary;
    let text = report([
        ("sample", preset.name.clone()),
        ("fwhm_min_T", s.fwhm_min.to_string()),
        ("fwhm_min_mT", format!("{:.4}", s.fwhm_min * 1e3)),
        (
            "contrast_dip_fwhm_deg",
            format!("{:.5}", s.contrast_dip_fwhm_deg),
        ),
        ("dip_depth", format!("{:.4}", s.dip_depth)),
        (
            "linewidth_slope_T_per_deg",
            format!("{:.6e}", s.linewidth_slope),
        ),
        ("beta_elbow_deg", format!("{:.5}", s.beta_elbow_deg)),
        ("contrast_far", format!("{:.6}", s.contrast_far)),
        ("best_beta_deg", study.best_angle().to_string()),
        ("converged", s.converged.to_string()),
    ]);
    out.manifest("angle-study", config, Some(&preset))?;
    out.write("angle_fits.csv", &table)?;
    out.write("angle_summary.txt", &text)?;
    Ok(text)
}

pub fn magnetometer(config: &mut RunConfig, out: &Output) -> Result<String, CliError> {
    if config.preset_file.is_some() {
        return Err(CliError::Config(
            "magnetometer runs on built-in presets only".into(),
        ));
    }
    if let Some(name) = &config.preset {
        config.magnetometer.preset = name.clone();
    }
    let result = run_magnetometer(&config.magnetometer, config.seed)?;

    let mut sweep = String::from("B_T,X\n");
    for (b, x) in &result.sweep {
        let _ = writeln!(sweep, "{b},{x}");
    }
    let mut summary = magnetometer_summary(&result);
    let delta_b = result.sensitivity.delta_b;
    summary.insert(
        "delta_B_pT_per_sqrtHz".into(),
        format!("{:.1}", delta_b * 1e12),
    );
    summary.insert(
        "reference_delta_B_pT_per_sqrtHz".into(),
        format!("{:.1}", REFERENCE_SENSITIVITY * 1e12),
    );
    let text = report(&summary);

    out.manifest("magnetometer", config, None)?;
    out.write("demodulated_sweep.csv", &sweep)?;
    for run in &result.runs {
        out.write(
            &format!("spectrum_{}.csv", run.label),
            &spectrum_to_csv(&run.spectrum),
        )?;
    }
    out.write("magnetometer_report.txt", &text)?;
    Ok(text)
}

pub fn sense(config: &RunConfig, out: &Output) -> Result<String, CliError> {
    let s = &config.sense;
    let rate = match s.photon_rate {
        Some(r) => r,
        None => photon_rate(s.power, s.wavelength)?,
    };
    let r = shot_noise_limit(s.fwhm, s.contrast, rate, s.prefactor)?;
    let text = report([
        ("fwhm_T", s.fwhm.to_string()),
        ("contrast", s.contrast.to_string()),
        ("photon_rate_per_s", format!("{rate:.4e}")),
        ("prefactor", s.prefactor.to_string()),
        ("delta_B_T_per_sqrtHz", format!("{:.4e}", r.delta_b)),
        ("delta_B_pT_per_sqrtHz", format!("{:.1}", r.delta_b * 1e12)),
        (
            "reference_delta_B_pT_per_sqrtHz",
            format!("{:.1}", REFERENCE_SENSITIVITY * 1e12),
        ),
        (
            "implied_prefactor",
            format!("{:.3}", r.implied_prefactor(REFERENCE_SENSITIVITY)),
        ),
    ]);
    out.manifest("sense", config, None)?;
    out.write("sense_report.txt", &text)?;
    Ok(text)
}
