//! Command-line front end: parameter resolution, dataset ingestion and
//! artifact writing for the `ion-autocorr` binary.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use clap::{Args, Parser, Subcommand};
use ion_autocorr::contrast::{
    autocorr_contrast_curve, echo_contrast, return_probabilities, AutocorrParams, EchoModelParams,
    RAD_PER_PS_PER_KHZ,
};
use ion_autocorr::dynamics::{
    dip_fwhm, double_pulse_scan, energy_scan, EnergyScanPoint, IntegratorConfig,
};
use ion_autocorr::exec::Execution;
use ion_autocorr::fit::{
    fit_autocorrelation, fit_contrast_revival, generate_revival_synthetic, generate_synthetic,
    AutocorrDataset, DataPoint, FitConfig, FixedMask,
};
use ion_autocorr::format::sig9;
use ion_autocorr::motion::{
    delta_n_for, lamb_dicke, mean_phonon_from_sidebands, recoil_energy, IonSpec, KickTiming,
};
use ion_autocorr::pulse::{chirp_transform, fwhm_stretch, PulseSpec, FWHM_PER_SIGMA};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use thiserror::Error;

pub const TOOL: &str = env!("CARGO_PKG_NAME");
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub const THREADS_ENV: &str = "ION_AUTOCORR_THREADS";
pub const DATASET_HEADER: [&str; 3] = ["delay_ps", "contrast", "sigma_err"];

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Input { path: PathBuf, message: String },
    #[error(transparent)]
    Lib(#[from] ion_autocorr::Error),
}

impl CliError {
    /// 2 for numerical failures, 1 for everything the user can fix in the inputs.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Lib(e) if e.is_numerical() => 2,
            _ => 1,
        }
    }
}

type CliResult<T> = Result<T, CliError>;

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.to_path_buf(), source }
}

#[derive(Debug, Parser)]
#[command(name = "ion-autocorr", version, about = "Chirped-pulse dynamics and autocorrelation fits for a trapped ion")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Chirp transform and widths of one pulse.
    Pulse(Flags),
    /// Single and phase-averaged double pulse excitation versus pulse energy.
    RapScan(Flags),
    /// Two-pulse interference profile and the echo contrast it implies.
    Autocorr(Flags),
    /// Echo contrast revival versus inter-pair delay.
    Contrast(Flags),
    /// Fit (I, σ, D, scale) to a contrast-versus-delay dataset.
    Fit(Flags),
    /// Fit (C₀, n̄) to echo-contrast revival data.
    FitRevival(Flags),
    /// Recoil, Lamb-Dicke factor and phonon gain of the kicks.
    Kick(Flags),
    /// Synthetic dataset from the forward model.
    Synth(Flags),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Pulse(_) => "pulse",
            Command::RapScan(_) => "rap-scan",
            Command::Autocorr(_) => "autocorr",
            Command::Contrast(_) => "contrast",
            Command::Fit(_) => "fit",
            Command::FitRevival(_) => "fit-revival",
            Command::Kick(_) => "kick",
            Command::Synth(_) => "synth",
        }
    }

    fn flags(&self) -> &Flags {
        match self {
            Command::Pulse(f)
            | Command::RapScan(f)
            | Command::Autocorr(f)
            | Command::Contrast(f)
            | Command::Fit(f)
            | Command::FitRevival(f)
            | Command::Kick(f)
            | Command::Synth(f) => f,
        }
    }
}

/// Flags shared by every subcommand. Each one overrides the same key of `--config`.
#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    /// JSON parameter file, or a previous run_manifest.json.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Dataset CSV with header `delay_ps,contrast,sigma_err`.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "ion-autocorr-out")]
    pub out: PathBuf,
    #[arg(long)]
    pub sigma_ps: Option<f64>,
    #[arg(long)]
    pub gdd_ps2: Option<f64>,
    /// I = |Ω_D|², (rad/ps)².
    #[arg(long)]
    pub intensity: Option<f64>,
    #[arg(long)]
    pub contrast_scale: Option<f64>,
    #[arg(long)]
    pub wavelength_nm: Option<f64>,
    #[arg(long)]
    pub mass_amu: Option<f64>,
    #[arg(long)]
    pub nu_khz: Option<f64>,
    #[arg(long)]
    pub nbar: Option<f64>,
    #[arg(long)]
    pub c0: Option<f64>,
    /// Lamb-Dicke factor; derived from the ion when absent.
    #[arg(long)]
    pub eta_ld: Option<f64>,
    #[arg(long)]
    pub n_phase: Option<usize>,
    #[arg(long)]
    pub rel_tol: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub noise_rms: Option<f64>,
    /// Number of scan or grid points.
    #[arg(long)]
    pub points: Option<usize>,
    /// Half-width of the delay grid, ps.
    #[arg(long)]
    pub delay_max_ps: Option<f64>,
    /// Largest intensity of the RAP scan.
    #[arg(long)]
    pub intensity_max: Option<f64>,
    /// Pulse separation for the double-pulse scan, ps.
    #[arg(long)]
    pub pair_delay_ps: Option<f64>,
    /// Trap periods covered by `contrast` and revival `synth`.
    #[arg(long)]
    pub periods: Option<f64>,
    /// rms echo phase jitter, rad.
    #[arg(long)]
    pub jitter: Option<f64>,
    /// Comma-separated fit parameters to hold: intensity, sigma, gdd, contrast_scale.
    #[arg(long, value_delimiter = ',')]
    pub fix: Option<Vec<String>>,
    /// Optimizer iteration budget for the fits.
    #[arg(long)]
    pub max_iterations: Option<usize>,
    #[arg(long)]
    pub p_red: Option<f64>,
    #[arg(long)]
    pub p_blue: Option<f64>,
    /// Dataset kind for `synth`.
    #[arg(long, value_parser = ["autocorr", "revival"])]
    pub kind: Option<String>,
    /// Kick timing for `kick`.
    #[arg(long, value_parser = ["aligned", "opposed"])]
    pub timing: Option<String>,
    /// Run every integration on the calling thread.
    #[arg(long)]
    pub sequential: bool,
}

/// Fully resolved parameters, recorded verbatim in the run manifest.
///
/// Defaults: ⁴⁰Ca⁺ at 393 nm, ν = 2π×890 kHz, σ = 1.5 ps, D = 5.8 ps²,
/// I = 0.05, scale 0.79, C₀ = 0.56, n̄ = 21.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Params {
    pub input: Option<String>,
    pub sigma_ps: f64,
    pub gdd_ps2: f64,
    pub intensity: f64,
    pub contrast_scale: f64,
    pub wavelength_nm: f64,
    pub mass_amu: f64,
    pub nu_khz: f64,
    pub nbar: f64,
    pub c0: f64,
    pub eta_ld: Option<f64>,
    pub n_phase: usize,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub seed: u64,
    pub noise_rms: f64,
    pub points: Option<usize>,
    pub delay_max_ps: Option<f64>,
    pub intensity_max: f64,
    pub pair_delay_ps: Option<f64>,
    pub periods: f64,
    pub jitter: f64,
    pub fix: Vec<String>,
    pub max_iterations: usize,
    pub p_red: Option<f64>,
    pub p_blue: Option<f64>,
    pub kind: String,
    pub timing: String,
    pub execution: Execution,
}

impl Default for Params {
    fn default() -> Self {
        Params {
            input: None,
            sigma_ps: 1.5,
            gdd_ps2: 5.8,
            intensity: 0.05,
            contrast_scale: 0.79,
            wavelength_nm: 393.0,
            mass_amu: 40.0,
            nu_khz: 890.0,
            nbar: 21.0,
            c0: 0.56,
            eta_ld: None,
            n_phase: 16,
            rel_tol: IntegratorConfig::default().rel_tol,
            abs_tol: IntegratorConfig::default().abs_tol,
            seed: 0,
            noise_rms: 0.04,
            points: None,
            delay_max_ps: None,
            intensity_max: 0.36,
            pair_delay_ps: None,
            periods: 3.0,
            jitter: 0.0,
            fix: vec![],
            max_iterations: FitConfig::default().max_iterations,
            p_red: None,
            p_blue: None,
            kind: "autocorr".to_string(),
            timing: "aligned".to_string(),
            execution: Execution::Parallel,
        }
    }
}

/// `--config` content: either bare parameters or a manifest holding them under `resolved`.
fn load_config(path: &Path, command: &str) -> CliResult<Params> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| CliError::Input {
        path: path.to_path_buf(),
        message: format!("not valid JSON: {e}"),
    })?;
    let bad = |message: String| CliError::Input { path: path.to_path_buf(), message };
    let params = match value.get("resolved") {
        Some(resolved) => {
            if let Some(c) = value.get("command").and_then(|c| c.as_str()) {
                if c != command {
                    return Err(bad(format!("manifest is for `{c}`, not `{command}`")));
                }
            }
            resolved.clone()
        }
        None => value,
    };
    serde_json::from_value(params).map_err(|e| bad(e.to_string()))
}

/// Config file first, then flags on top.
pub fn resolve(command: &Command) -> CliResult<Params> {
    let f = command.flags();
    let mut p = match &f.config {
        Some(path) => load_config(path, command.name())?,
        None => Params::default(),
    };
    macro_rules! set {
        ($($field:ident),*) => { $( if let Some(v) = f.$field.clone() { p.$field = v; } )* };
    }
    set!(sigma_ps, gdd_ps2, intensity, contrast_scale, wavelength_nm, mass_amu, nu_khz, nbar, c0);
    set!(n_phase, rel_tol, seed, noise_rms, intensity_max, periods, jitter, fix, kind, timing, max_iterations);
    macro_rules! set_opt {
        ($($field:ident),*) => { $( if f.$field.is_some() { p.$field = f.$field.clone(); } )* };
    }
    set_opt!(eta_ld, points, delay_max_ps, pair_delay_ps, p_red, p_blue);
    if let Some(input) = &f.input {
        p.input = Some(input.to_string_lossy().into_owned());
    }
    if f.sequential {
        p.execution = Execution::Sequential;
    }
    Ok(p)
}

impl Params {
    fn integrator(&self) -> CliResult<IntegratorConfig> {
        let cfg = IntegratorConfig {
            rel_tol: self.rel_tol,
            abs_tol: self.abs_tol,
            execution: self.execution,
            ..IntegratorConfig::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn fit_config(&self) -> CliResult<FitConfig> {
        Ok(FitConfig {
            integrator: self.integrator()?,
            n_phase: self.n_phase,
            phase_jitter_rms: self.jitter,
            max_iterations: self.max_iterations,
            ..FitConfig::default()
        })
    }

    fn autocorr(&self) -> AutocorrParams {
        AutocorrParams {
            intensity: self.intensity,
            sigma: self.sigma_ps,
            gdd: self.gdd_ps2,
            contrast_scale: self.contrast_scale,
        }
    }

    fn ion(&self) -> CliResult<IonSpec> {
        Ok(IonSpec::new(
            self.mass_amu,
            std::f64::consts::TAU * self.nu_khz * 1e3,
            self.wavelength_nm,
            0.0,
        )?)
    }

    fn echo(&self) -> CliResult<EchoModelParams> {
        let eta = match self.eta_ld {
            Some(e) => e,
            None => lamb_dicke(&self.ion()?),
        };
        Ok(EchoModelParams::new(self.c0, self.nbar, eta, self.nu_khz * RAD_PER_PS_PER_KHZ)?)
    }

    fn fixed_mask(&self) -> CliResult<FixedMask> {
        let mut m = FixedMask::default();
        for name in &self.fix {
            match name.trim() {
                "intensity" => m.intensity = true,
                "sigma" => m.sigma = true,
                "gdd" => m.gdd = true,
                "contrast_scale" => m.contrast_scale = true,
                "" => {}
                other => {
                    return Err(CliError::Usage(format!(
                        "unknown parameter `{other}` in --fix (expected intensity, sigma, gdd, contrast_scale)"
                    )))
                }
            }
        }
        Ok(m)
    }

    fn input_path(&self) -> CliResult<PathBuf> {
        self.input
            .as_ref()
            .map(PathBuf::from)
            .ok_or_else(|| CliError::Usage("--input is required".to_string()))
    }
}

/// Reads and validates a `delay_ps,contrast,sigma_err` CSV.
pub fn ingest_dataset(path: &Path) -> CliResult<AutocorrDataset> {
    let bad = |message: String| CliError::Input { path: path.to_path_buf(), message };
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header = reader.headers().map_err(|e| bad(format!("line 1: {e}")))?.clone();
    if header.len() != DATASET_HEADER.len() {
        return Err(bad(format!(
            "line 1: expected {} columns ({}), found {}",
            DATASET_HEADER.len(),
            DATASET_HEADER.join(","),
            header.len()
        )));
    }
    for (i, (got, want)) in header.iter().zip(DATASET_HEADER).enumerate() {
        if got != want {
            return Err(bad(format!("line 1: column {} is `{got}`, expected `{want}`", i + 1)));
        }
    }
    let mut points: Vec<DataPoint> = Vec::new();
    let mut lines: Vec<u64> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            bad(format!("line {line}: {e}"))
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let mut vals = [0.0; 3];
        for (j, slot) in vals.iter_mut().enumerate() {
            let raw = &record[j];
            *slot = raw
                .parse::<f64>()
                .map_err(|_| bad(format!("line {line}: `{}` is not a number: `{raw}`", DATASET_HEADER[j])))?;
            if !slot.is_finite() {
                return Err(bad(format!("line {line}: `{}` is not finite", DATASET_HEADER[j])));
            }
        }
        let [delay, contrast, sigma_err] = vals;
        if !(sigma_err > 0.0) {
            return Err(bad(format!("line {line}: sigma_err must be > 0, got {sigma_err}")));
        }
        if !(0.0..=1.0).contains(&contrast) {
            return Err(bad(format!("line {line}: contrast must lie in [0, 1], got {contrast}")));
        }
        if let Some(prev) = points.last() {
            let prev_line = lines[lines.len() - 1];
            if delay == prev.delay {
                return Err(bad(format!("line {line}: duplicate delay {delay} (also on line {prev_line})")));
            }
            if delay < prev.delay {
                return Err(bad(format!(
                    "line {line}: delays must increase; {delay} follows {} on line {prev_line}",
                    prev.delay
                )));
            }
        }
        points.push(DataPoint { delay, contrast, sigma_err });
        lines.push(line);
    }
    AutocorrDataset::new(points, None).map_err(|e| bad(e.to_string()))
}

/// Files written by one run, in write order.
struct Artifacts {
    dir: PathBuf,
    written: Vec<(String, String)>,
}

impl Artifacts {
    fn new(dir: &Path) -> CliResult<Self> {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
        Ok(Artifacts { dir: dir.to_path_buf(), written: vec![] })
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> CliResult<()> {
        let path = self.dir.join(name);
        fs::write(&path, bytes).map_err(io_err(&path))?;
        self.written.push((name.to_string(), sha256_hex(bytes)));
        Ok(())
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> CliResult<()> {
        let mut text = serde_json::to_string_pretty(value).expect("serializable");
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    fn csv(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> CliResult<()> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let map = |e: csv::Error| CliError::Usage(format!("{name}: {e}"));
        w.write_record(header).map_err(map)?;
        for r in rows {
            w.write_record(r).map_err(map)?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Usage(format!("{name}: {e}")))?;
        self.write(name, &bytes)
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub resolved: Params,
    /// sha256 of each input file, keyed by the path as given.
    pub inputs: BTreeMap<String, String>,
    /// sha256 of each artifact, keyed by file name.
    pub outputs: BTreeMap<String, String>,
}

fn row(vals: &[f64]) -> Vec<String> {
    vals.iter().map(|v| sig9(*v)).collect()
}

fn scan_rows(points: &[EnergyScanPoint]) -> CliResult<Vec<Vec<String>>> {
    points
        .iter()
        .map(|p| Ok(row(&[p.omega0_sq(), p.p1.clone()?])))
        .collect()
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![a];
    }
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

fn check_points(n: usize, min: usize) -> CliResult<usize> {
    if n < min {
        return Err(CliError::Usage(format!("--points must be >= {min}, got {n}")));
    }
    Ok(n)
}

#[derive(Serialize)]
struct PulseReport {
    sigma_ps: f64,
    gdd_ps2: f64,
    omega0: f64,
    wavelength_nm: f64,
    carrier_frequency_rad_per_ps: f64,
    sigma_d_ps: f64,
    chirp_rate_rad_per_ps2: f64,
    omega_d: f64,
    carrier_phase_rad: f64,
    fwhm_unchirped_ps: f64,
    fwhm_ps: f64,
    fwhm_stretch_ps: f64,
    intensity: f64,
}

fn cmd_pulse(p: &Params, out: &mut Artifacts) -> CliResult<String> {
    let pulse = p.autocorr().to_chirped()?;
    let stretch = (p.sigma_ps.powi(4) + p.gdd_ps2.powi(2)).powf(0.25);
    let spec = PulseSpec::new(p.sigma_ps, p.gdd_ps2, p.intensity.sqrt() * stretch, p.wavelength_nm)?;
    let report = PulseReport {
        sigma_ps: spec.sigma,
        gdd_ps2: spec.gdd,
        omega0: spec.omega0,
        wavelength_nm: spec.wavelength,
        carrier_frequency_rad_per_ps: spec.carrier_frequency(),
        sigma_d_ps: pulse.sigma_d,
        chirp_rate_rad_per_ps2: pulse.chirp_rate,
        omega_d: pulse.omega_d,
        carrier_phase_rad: chirp_transform(&spec).carrier_phase,
        fwhm_unchirped_ps: FWHM_PER_SIGMA * spec.sigma,
        fwhm_ps: pulse.fwhm(),
        fwhm_stretch_ps: fwhm_stretch(FWHM_PER_SIGMA * spec.sigma, spec.gdd)?,
        intensity: p.intensity,
    };
    out.json("pulse.json", &report)?;
    Ok(serde_json::to_string_pretty(&report).expect("serializable"))
}

fn cmd_rap_scan(p: &Params, out: &mut Artifacts) -> CliResult<String> {
    let cfg = p.integrator()?;
    let n = check_points(p.points.unwrap_or(40), 2)?;
    if !(p.intensity_max > 0.0) {
        return Err(CliError::Usage("--intensity-max must be > 0".to_string()));
    }
    let spec = PulseSpec::new(p.sigma_ps, p.gdd_ps2, 1.0, p.wavelength_nm)?;
    let unit = chirp_transform(&spec);
    // Equal steps in pulse energy, I ∝ Ω₀².
    let amplitudes: Vec<f64> = linspace(0.0, p.intensity_max, n)
        .into_iter()
        .map(|i| i.sqrt() / unit.omega_d)
        .collect();
    let delay = p.pair_delay_ps.unwrap_or(12.0 * unit.sigma_d);
    let single = energy_scan(&spec, &amplitudes, &cfg)?;
    let double = double_pulse_scan(&spec, &amplitudes, delay, p.n_phase, &cfg)?;
    out.csv("energy_scan.csv", &["omega0_sq", "p1"], &scan_rows(&single)?)?;
    out.csv("double_pulse_scan.csv", &["omega0_sq", "p2"], &scan_rows(&double)?)?;
    Ok(format!("{n} energies, double-pulse delay {} ps", sig9(delay)))
}

#[derive(Serialize)]
struct AutocorrSidecar {
    params: AutocorrParams,
    n_phase: usize,
    phase_jitter_rms: f64,
    fwhm_chirped_ps: f64,
    dip_fwhm_ps: Option<f64>,
}

fn autocorr_delays(p: &Params, fwhm: f64) -> CliResult<Vec<f64>> {
    let half = p.delay_max_ps.unwrap_or(3.0 * fwhm);
    if !(half > 0.0) {
        return Err(CliError::Usage("--delay-max-ps must be > 0".to_string()));
    }
    Ok(linspace(-half, half, check_points(p.points.unwrap_or(61), 3)?))
}

fn cmd_autocorr(p: &Params, out: &mut Artifacts) -> CliResult<String> {
    let cfg = p.integrator()?;
    let params = p.autocorr();
    let pulse = params.to_chirped()?;
    let delays = autocorr_delays(p, pulse.fwhm())?;
    let returns = return_probabilities(&params, &delays, p.n_phase, &cfg)?;
    let profile: Vec<(f64, f64)> = delays.iter().cloned().zip(returns).collect();
    let width = dip_fwhm(&profile);
    let mut rows: Vec<Vec<String>> = profile
        .iter()
        .map(|&(d, r)| vec![sig9(d), sig9(r), String::new()])
        .collect();
    rows.push(vec![String::new(), String::new(), width.map(sig9).unwrap_or_default()]);
    out.csv("interference.csv", &["delay_ps", "p_return", "dip_fwhm_ps"], &rows)?;

    let curve = autocorr_contrast_curve(&params, &delays, p.n_phase, p.jitter, &cfg)?;
    let rows: Vec<Vec<String>> = curve.iter().map(|&(d, c)| row(&[d, c])).collect();
    out.csv("autocorr_contrast.csv", &["delay_ps", "contrast"], &rows)?;
    out.json(
        "autocorr_contrast.json",
        &AutocorrSidecar {
            params,
            n_phase: p.n_phase,
            phase_jitter_rms: p.jitter,
            fwhm_chirped_ps: pulse.fwhm(),
            dip_fwhm_ps: width,
        },
    )?;
    Ok(format!(
        "{} delays, dip FWHM {} ps, chirped FWHM {} ps",
        delays.len(),
        width.map(sig9).unwrap_or_else(|| "n/a".to_string()),
        sig9(pulse.fwhm())
    ))
}

#[derive(Serialize)]
struct ContrastSidecar {
    model: EchoModelParams,
    nu_khz: f64,
    period_ps: f64,
}

fn cmd_contrast(p: &Params, out: &mut Artifacts) -> CliResult<String> {
    let echo = p.echo()?;
    if !(p.periods > 0.0) {
        return Err(CliError::Usage("--periods must be > 0".to_string()));
    }
    let delays = linspace(0.0, p.periods * echo.period(), check_points(p.points.unwrap_or(301), 2)?);
    let rows: Vec<Vec<String>> = delays.iter().map(|&t| row(&[t, echo_contrast(t, &echo)])).collect();
    out.csv("contrast.csv", &["delay_ps", "contrast"], &rows)?;
    out.json("contrast.json", &ContrastSidecar { model: echo, nu_khz: p.nu_khz, period_ps: echo.period() })?;
    Ok(format!("{} delays over {} trap periods", delays.len(), sig9(p.periods)))
}

#[derive(Serialize)]
struct FitReport {
    #[serde(flatten)]
    result: ion_autocorr::fit::FitResult,
    init: AutocorrParams,
    /// Fitted contrast on a uniform grid across the data range, for plotting.
    plot_curve: Vec<(f64, f64)>,
}

fn cmd_fit(p: &Params, out: &mut Artifacts, inputs: &mut BTreeMap<String, String>) -> CliResult<String> {
    let path = p.input_path()?;
    let data = read_input(&path, inputs)?;
    let cfg = p.fit_config()?;
    let init = p.autocorr();
    let result = fit_autocorrelation(&data, &init, p.fixed_mask()?, &cfg)?;
    let (first, last) = (data.points()[0].delay, data.points()[data.len() - 1].delay);
    let plot_curve = autocorr_contrast_curve(
        &result.params(),
        &linspace(first, last, 121),
        cfg.n_phase,
        cfg.phase_jitter_rms,
        &cfg.integrator,
    )?;
    let summary = format!(
        "I = {}, sigma = {} ps, D = {} ps^2, scale = {}, FWHM = {} ps, chi2_red = {}",
        sig9(result.intensity),
        sig9(result.sigma),
        sig9(result.gdd),
        sig9(result.contrast_scale),
        sig9(result.fwhm_chirped),
        sig9(result.chi2_reduced)
    );
    out.json("fit.json", &FitReport { result, init, plot_curve })?;
    Ok(summary)
}

fn cmd_fit_revival(p: &Params, out: &mut Artifacts, inputs: &mut BTreeMap<String, String>) -> CliResult<String> {
    let path = p.input_path()?;
    let data = read_input(&path, inputs)?;
    let init = p.echo()?;
    let result = fit_contrast_revival(&data, &init, &p.fit_config()?)?;
    let summary = format!("C0 = {}, nbar = {}", sig9(result.c0), sig9(result.nbar));
    out.json("fit_revival.json", &result)?;
    Ok(summary)
}

#[derive(Serialize)]
struct KickReport {
    #[serde(rename = "e_rec_J")]
    e_rec_j: f64,
    eta_ld: f64,
    delta_n: f64,
    nbar_estimate: Option<f64>,
    timing: KickTiming,
    nu_khz: f64,
}

fn cmd_kick(p: &Params, out: &mut Artifacts) -> CliResult<String> {
    let ion = p.ion()?;
    let timing = match p.timing.as_str() {
        "aligned" => KickTiming::Aligned,
        "opposed" => KickTiming::Opposed,
        other => return Err(CliError::Usage(format!("unknown timing `{other}`"))),
    };
    let nbar_estimate = match (p.p_red, p.p_blue) {
        (Some(r), Some(b)) => Some(mean_phonon_from_sidebands(r, b)?),
        (None, None) => None,
        _ => return Err(CliError::Usage("--p-red and --p-blue must be given together".to_string())),
    };
    let report = KickReport {
        e_rec_j: recoil_energy(&ion),
        eta_ld: lamb_dicke(&ion),
        delta_n: delta_n_for(&ion, timing),
        nbar_estimate,
        timing,
        nu_khz: p.nu_khz,
    };
    out.json("kick.json", &report)?;
    Ok(serde_json::to_string_pretty(&report).expect("serializable"))
}

#[derive(Serialize)]
struct SynthSidecar<'a> {
    kind: &'a str,
    seed: u64,
    noise_rms: f64,
    autocorr_truth: Option<AutocorrParams>,
    revival_truth: Option<EchoModelParams>,
}

fn cmd_synth(p: &Params, out: &mut Artifacts) -> CliResult<String> {
    let (data, sidecar) = match p.kind.as_str() {
        "autocorr" => {
            let truth = p.autocorr();
            let delays = autocorr_delays(
                &Params { points: Some(p.points.unwrap_or(30)), ..p.clone() },
                truth.to_chirped()?.fwhm(),
            )?;
            let data = generate_synthetic(&truth, &delays, p.noise_rms, p.seed, &p.fit_config()?)?;
            (data, SynthSidecar { kind: "autocorr", seed: p.seed, noise_rms: p.noise_rms, autocorr_truth: Some(truth), revival_truth: None })
        }
        "revival" => {
            let truth = p.echo()?;
            let delays = linspace(0.0, p.periods * truth.period(), check_points(p.points.unwrap_or(60), 8)?);
            let data = generate_revival_synthetic(&truth, &delays, p.noise_rms, p.seed)?;
            (data, SynthSidecar { kind: "revival", seed: p.seed, noise_rms: p.noise_rms, autocorr_truth: None, revival_truth: Some(truth) })
        }
        other => return Err(CliError::Usage(format!("unknown kind `{other}`"))),
    };
    let rows: Vec<Vec<String>> = data
        .points()
        .iter()
        .map(|pt| row(&[pt.delay, pt.contrast, pt.sigma_err]))
        .collect();
    out.csv("dataset.csv", &DATASET_HEADER, &rows)?;
    out.json("synth.json", &sidecar)?;
    Ok(format!("{} points, seed {}", data.len(), p.seed))
}

fn read_input(path: &Path, inputs: &mut BTreeMap<String, String>) -> CliResult<AutocorrDataset> {
    let bytes = fs::read(path).map_err(io_err(path))?;
    inputs.insert(path.to_string_lossy().into_owned(), sha256_hex(&bytes));
    ingest_dataset(path)
}

/// Caps the global rayon pool from `ION_AUTOCORR_THREADS`.
pub fn configure_threads() -> CliResult<()> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| CliError::Usage(format!("{THREADS_ENV} must be a positive integer, got `{raw}`")))?;
    // A pool that already exists (repeated calls in one process) keeps its size.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

/// Runs one command and writes its artifacts plus `run_manifest.json`.
///
/// Returns a one-line (or JSON) summary for the terminal.
pub fn execute(command: &Command) -> CliResult<String> {
    let params = resolve(command)?;
    let mut out = Artifacts::new(&command.flags().out)?;
    let mut inputs = BTreeMap::new();
    let summary = match command {
        Command::Pulse(_) => cmd_pulse(&params, &mut out)?,
        Command::RapScan(_) => cmd_rap_scan(&params, &mut out)?,
        Command::Autocorr(_) => cmd_autocorr(&params, &mut out)?,
        Command::Contrast(_) => cmd_contrast(&params, &mut out)?,
        Command::Fit(_) => cmd_fit(&params, &mut out, &mut inputs)?,
        Command::FitRevival(_) => cmd_fit_revival(&params, &mut out, &mut inputs)?,
        Command::Kick(_) => cmd_kick(&params, &mut out)?,
        Command::Synth(_) => cmd_synth(&params, &mut out)?,
    };
    let manifest = Manifest {
        tool: TOOL.to_string(),
        version: VERSION.to_string(),
        command: command.name().to_string(),
        resolved: params,
        inputs,
        outputs: out.written.iter().cloned().collect(),
    };
    out.json("run_manifest.json", &manifest)?;
    Ok(summary)
}

/// Parses `args` and runs; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return e.exit_code();
    }
    match execute(&cli.command) {
        Ok(summary) => {
            println!("{summary}");
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
