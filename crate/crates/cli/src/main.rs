#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{FitModel, RunConfig};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("I/O error: {0}")]
    Io(String),
    #[error("numerical error: {0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io(_) => 3,
            CliError::Numerical(_) => 4,
        }
    }
}

impl From<gslac::Error> for CliError {
    fn from(e: gslac::Error) -> Self {
        use gslac::Error as E;
        match e {
            E::Io(_) | E::Parse(_) => CliError::Io(e.to_string()),
            E::InvalidParameter(_) => CliError::Config(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "gslac",
    version,
    about = "Microwave-free NV-diamond GSLAC magnetometer simulator"
)]
struct Cli {
    /// TOML run configuration; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for every random draw of the run.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Directory receiving the outputs and manifest.toml.
    #[arg(long, global = true, default_value = "gslac-out")]
    out_dir: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct PresetArgs {
    /// Built-in preset name (W4, B3A, F11, C7) or a name inside --preset-file.
    #[arg(long)]
    preset: Option<String>,
    /// TOML document with [[preset]] tables.
    #[arg(long)]
    preset_file: Option<PathBuf>,
    /// Readout: PL or absorption.
    #[arg(long)]
    mode: Option<String>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Eigenlevels versus field and the located GSLAC.
    Levels {
        /// Zero-field splitting in Hz.
        #[arg(long = "D")]
        d_hz: Option<f64>,
        /// Gyromagnetic ratio γ/2π in Hz/T.
        #[arg(long = "gamma")]
        gamma_hz_per_t: Option<f64>,
        #[arg(long = "transverse-T")]
        transverse: Option<f64>,
        #[arg(long = "field-start-T")]
        field_start: Option<f64>,
        #[arg(long = "field-stop-T")]
        field_stop: Option<f64>,
        #[arg(long)]
        points: Option<usize>,
    },
    /// Synthetic field scan of a sample preset.
    Scan {
        #[command(flatten)]
        preset: PresetArgs,
        #[arg(long = "field-start-T")]
        field_start: Option<f64>,
        #[arg(long = "field-stop-T")]
        field_stop: Option<f64>,
        #[arg(long)]
        points: Option<usize>,
        #[arg(long = "alpha-deg", allow_hyphen_values = true)]
        alpha: Option<f64>,
        #[arg(long = "beta-deg", allow_hyphen_values = true)]
        beta: Option<f64>,
        #[arg(long = "pump-W")]
        pump: Option<f64>,
        /// Detected photons per second; enables shot noise.
        #[arg(long = "photon-rate")]
        photon_rate: Option<f64>,
    },
    /// Lorentzian fit of a trace CSV.
    Fit {
        trace: PathBuf,
        #[arg(long, value_enum)]
        model: Option<FitModel>,
        /// Fit window as LO:HI in tesla.
        #[arg(long)]
        window: Option<String>,
    },
    /// Linewidth and contrast versus misalignment.
    AngleStudy {
        #[command(flatten)]
        preset: PresetArgs,
        #[arg(long)]
        angles: Option<usize>,
    },
    /// Lock-in magnetometer scenario: calibration, noise spectra, sensitivity.
    Magnetometer {
        #[arg(long)]
        preset: Option<String>,
        #[arg(long = "duration-s")]
        duration: Option<f64>,
        #[arg(long = "field-noise-T-per-sqrtHz")]
        field_noise: Option<f64>,
        #[arg(long = "electronic-floor-T-per-sqrtHz")]
        electronic_floor: Option<f64>,
    },
    /// Shot-noise sensitivity δB = k·fwhm/(C·√R).
    Sense {
        #[arg(long = "fwhm-T")]
        fwhm: Option<f64>,
        #[arg(long)]
        contrast: Option<f64>,
        #[arg(long = "power-W")]
        power: Option<f64>,
        #[arg(long = "wavelength-m")]
        wavelength: Option<f64>,
        #[arg(long = "photon-rate")]
        photon_rate: Option<f64>,
        #[arg(long)]
        prefactor: Option<f64>,
    },
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

fn apply_preset_args(config: &mut RunConfig, args: PresetArgs) -> Result<(), CliError> {
    if args.preset.is_some() {
        config.preset = args.preset;
    }
    if args.preset_file.is_some() {
        config.preset_file = args.preset_file;
    }
    if let Some(mode) = args.mode {
        config.detection_mode = Some(
            mode.parse()
                .map_err(|e: gslac::Error| CliError::Config(e.to_string()))?,
        );
    }
    Ok(())
}

fn parse_window(text: &str) -> Result<(f64, f64), CliError> {
    let bad = || CliError::Config(format!("window must be LO:HI in tesla, got '{text}'"));
    let (lo, hi) = text.split_once(':').ok_or_else(bad)?;
    let lo: f64 = lo.trim().parse().map_err(|_| bad())?;
    let hi: f64 = hi.trim().parse().map_err(|_| bad())?;
    if !(hi > lo) {
        return Err(bad());
    }
    Ok((lo, hi))
}

fn run(cli: Cli) -> Result<String, CliError> {
    let mut config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    set(&mut config.seed, cli.seed);
    let out = commands::Output::new(cli.out_dir);
    match cli.command {
        Command::Levels {
            d_hz,
            gamma_hz_per_t,
            transverse,
            field_start,
            field_stop,
            points,
        } => {
            set(&mut config.physics.zero_field_splitting_hz, d_hz);
            set(&mut config.physics.gamma_over_2pi_hz_per_t, gamma_hz_per_t);
            set(&mut config.levels.transverse, transverse);
            config.levels.field_start = field_start.or(config.levels.field_start);
            config.levels.field_stop = field_stop.or(config.levels.field_stop);
            config.levels.n_points = points.or(config.levels.n_points);
            commands::levels(&mut config, &out)
        }
        Command::Scan {
            preset,
            field_start,
            field_stop,
            points,
            alpha,
            beta,
            pump,
            photon_rate,
        } => {
            apply_preset_args(&mut config, preset)?;
            let scan = &mut config.scan;
            set(&mut scan.field_start, field_start);
            set(&mut scan.field_stop, field_stop);
            set(&mut scan.n_points, points);
            set(&mut scan.alpha_deg, alpha);
            set(&mut scan.beta_deg, beta);
            set(&mut scan.pump, pump);
            scan.photon_rate = photon_rate.or(scan.photon_rate);
            commands::scan(&mut config, &out)
        }
        Command::Fit {
            trace,
            model,
            window,
        } => {
            set(&mut config.fit.model, model);
            if let Some(w) = window {
                let (lo, hi) = parse_window(&w)?;
                config.fit.window_lo = Some(lo);
                config.fit.window_hi = Some(hi);
            }
            commands::fit(&config, &trace, &out)
        }
        Command::AngleStudy { preset, angles } => {
            apply_preset_args(&mut config, preset)?;
            set(&mut config.angle_study.n_angles, angles);
            commands::angle_study(&mut config, &out)
        }
        Command::Magnetometer {
            preset,
            duration,
            field_noise,
            electronic_floor,
        } => {
            if preset.is_some() {
                config.preset = preset;
            }
            let m = &mut config.magnetometer;
            set(&mut m.duration_s, duration);
            set(&mut m.field_noise_asd, field_noise);
            set(&mut m.electronic_floor, electronic_floor);
            commands::magnetometer(&mut config, &out)
        }
        Command::Sense {
            fwhm,
            contrast,
            power,
            wavelength,
            photon_rate,
            prefactor,
        } => {
            let s = &mut config.sense;
            set(&mut s.fwhm, fwhm);
            set(&mut s.contrast, contrast);
            set(&mut s.power, power);
            set(&mut s.wavelength, wavelength);
            s.photon_rate = photon_rate.or(s.photon_rate);
            set(&mut s.prefactor, prefactor);
            commands::sense(&config, &out)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(report) => {
            print!("{report}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("gslac: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
