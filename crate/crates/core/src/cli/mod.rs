//! The `cascadesim` command line.
//!
//! Every flag has a matching config-file key; see [`config::RunConfig`].
//! Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.

pub mod config;
pub mod io;

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use crate::cascade::{latency_bias_sweep, simulate_cascade, CascadeError};
use crate::error::ModelError;
use crate::fitter::{fit_curve, log_spaced_fluxes, CountCurve, FitError, Regime};
use crate::mc::estimate_trigger_probability;
use crate::scanmap::{fmt_num, generate_response_map, OpticalSpot, Region};
use crate::trigger::{
    trigger_probability, trigger_probability_uneven, IlluminationProfile, PhotonStatistics, TriggerResult,
};

use config::{ConfigError, RunConfig};
use io::{load_count_curve, write_count_curve, CurveFileError};

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Fit(#[from] FitError),
    #[error(transparent)]
    Curve(#[from] CurveFileError),
    #[error(transparent)]
    Cascade(#[from] CascadeError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(ConfigError::Io { .. }) => 1,
            CliError::Config(_) | CliError::Usage(_) => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "cascadesim", version, about = "Cascade-triggered multi-pixel detector models")]
pub struct Cli {
    /// key = value config file; flags take precedence over it.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Worker threads for the parallel engines.
    #[arg(long, global = true, env = "CASCADESIM_THREADS")]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Analytic trigger probability and rate, or a count curve.
    Model(ModelArgs),
    /// Monte Carlo estimate against the analytic value.
    Mc(McArgs),
    /// Fit a count curve (CSV with a flux,counts header).
    Fit(FitArgs),
    /// Raster-scan response map, written as CSV and PGM.
    Map(MapArgs),
    /// Current trace or latency-versus-bias sweep of the cascade circuit.
    Cascade(CascadeArgs),
}

#[derive(Debug, Args, Default)]
pub struct DetectorArgs {
    /// Number of pixels.
    #[arg(long)]
    pub n: Option<u32>,
    /// Cascade threshold: armed pixels needed to trigger.
    #[arg(long)]
    pub b: Option<u32>,
    /// Illuminated pixels (default: all).
    #[arg(long)]
    pub k: Option<u32>,
    /// Per-photon hotspot probability.
    #[arg(long)]
    pub eta: Option<f64>,
    /// Per-pixel dark arming probability per pulse.
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Mean dark events per pixel per pulse (sets gamma).
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Pulse frequency in Hz.
    #[arg(long)]
    pub freq: Option<f64>,
    /// Photons per pulse (mean, for Poissonian pulses).
    #[arg(long)]
    pub mu: Option<f64>,
    /// Poissonian photon statistics.
    #[arg(long)]
    pub poisson: bool,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    #[command(flatten)]
    pub detector: DetectorArgs,
    /// Write a flux,counts curve instead of a single value.
    #[arg(long)]
    pub curve: bool,
    #[arg(long)]
    pub mu_min: Option<f64>,
    #[arg(long)]
    pub mu_max: Option<f64>,
    #[arg(long)]
    pub points: Option<usize>,
    /// Output file (default: stdout).
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct McArgs {
    #[command(flatten)]
    pub detector: DetectorArgs,
    #[arg(long)]
    pub pulses: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Comma-separated photon numbers (default: --mu).
    #[arg(long, value_delimiter = ',')]
    pub mu_list: Option<Vec<f64>>,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Curve file; `<input>.cfg` next to it is read if present and no
    /// --config is given.
    pub input: Option<PathBuf>,
    /// single_pixel or two_pixel (default from --b).
    #[arg(long)]
    pub regime: Option<Regime>,
    #[arg(long)]
    pub b: Option<u32>,
    #[arg(long)]
    pub freq: Option<f64>,
    /// Fit the dark probability too (default: two_pixel only).
    #[arg(long)]
    pub fit_gamma: Option<bool>,
    #[arg(long)]
    pub eta_min: Option<f64>,
    #[arg(long)]
    pub eta_max: Option<f64>,
    #[arg(long)]
    pub gamma_min: Option<f64>,
    #[arg(long)]
    pub gamma_max: Option<f64>,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MapArgs {
    #[command(flatten)]
    pub detector: DetectorArgs,
    /// Pixel edge length, µm.
    #[arg(long)]
    pub pixel_size: Option<f64>,
    /// Centre-to-centre pixel spacing, µm.
    #[arg(long)]
    pub pitch: Option<f64>,
    /// Comma-separated dead pixel indices (TL, TR, BL, BR = 0..3).
    #[arg(long, value_delimiter = ',', num_args = 0..)]
    pub dead: Option<Vec<usize>>,
    /// Spot FWHM, µm.
    #[arg(long)]
    pub fwhm: Option<f64>,
    /// Half width of the square scan window, µm.
    #[arg(long)]
    pub half_width: Option<f64>,
    /// Scan step, µm.
    #[arg(long)]
    pub step: Option<f64>,
    /// PGM scaling: linear or log.
    #[arg(long)]
    pub norm: Option<String>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// Output file stem.
    #[arg(long)]
    pub name: Option<String>,
}

#[derive(Debug, Args)]
pub struct CascadeArgs {
    #[arg(long)]
    pub wires: Option<usize>,
    /// Per-wire inductance, H.
    #[arg(long)]
    pub l_wire: Option<f64>,
    /// Shared series inductance, H.
    #[arg(long)]
    pub l_series: Option<f64>,
    /// Hotspot resistance, Ω.
    #[arg(long)]
    pub r_hotspot: Option<f64>,
    /// Shunt resistance, Ω.
    #[arg(long)]
    pub r_shunt: Option<f64>,
    /// Critical current per wire, A.
    #[arg(long)]
    pub i_c: Option<f64>,
    /// Bias as a fraction of the critical current.
    #[arg(long)]
    pub bias: Option<f64>,
    /// Wires armed at t = 0.
    #[arg(long)]
    pub armed: Option<usize>,
    #[arg(long)]
    pub horizon: Option<f64>,
    #[arg(long)]
    pub dt: Option<f64>,
    /// Sweep from this bias fraction (with --bias-max).
    #[arg(long)]
    pub bias_min: Option<f64>,
    #[arg(long)]
    pub bias_max: Option<f64>,
    #[arg(long)]
    pub bias_steps: Option<usize>,
    /// Keep every Nth trace sample.
    #[arg(long)]
    pub every: Option<usize>,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

type Flags = Vec<(&'static str, String)>;

macro_rules! push_flags {
    ($out:ident; $($key:literal => $val:expr),* $(,)?) => {
        $( if let Some(v) = &$val { $out.push(($key, v.to_string())); } )*
    };
}

fn join<T: ToString>(v: &[T]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
}

impl DetectorArgs {
    fn flags(&self, out: &mut Flags) {
        push_flags!(out;
            "n" => self.n, "b" => self.b, "k" => self.k, "eta" => self.eta,
            "gamma" => self.gamma, "lambda" => self.lambda, "freq" => self.freq, "mu" => self.mu,
        );
        if self.poisson {
            out.push(("poisson", "true".into()));
        }
    }
}

impl Command {
    fn flags(&self) -> Flags {
        let mut out = Flags::new();
        match self {
            Command::Model(a) => {
                a.detector.flags(&mut out);
                push_flags!(out; "mu_min" => a.mu_min, "mu_max" => a.mu_max, "points" => a.points);
                if a.curve {
                    out.push(("curve", "true".into()));
                }
                push_flags!(out; "output" => a.output.as_ref().map(|p| p.display().to_string()));
            }
            Command::Mc(a) => {
                a.detector.flags(&mut out);
                push_flags!(out;
                    "pulses" => a.pulses, "seed" => a.seed,
                    "mu_list" => a.mu_list.as_deref().map(join),
                    "output" => a.output.as_ref().map(|p| p.display().to_string()),
                );
            }
            Command::Fit(a) => {
                push_flags!(out;
                    "input" => a.input.as_ref().map(|p| p.display().to_string()),
                    "regime" => a.regime, "b" => a.b, "freq" => a.freq, "fit_gamma" => a.fit_gamma,
                    "eta_min" => a.eta_min, "eta_max" => a.eta_max,
                    "gamma_min" => a.gamma_min, "gamma_max" => a.gamma_max,
                    "output" => a.output.as_ref().map(|p| p.display().to_string()),
                );
            }
            Command::Map(a) => {
                a.detector.flags(&mut out);
                push_flags!(out;
                    "pixel_size" => a.pixel_size, "pitch" => a.pitch,
                    "dead" => a.dead.as_deref().map(join),
                    "fwhm" => a.fwhm, "half_width" => a.half_width, "step" => a.step, "norm" => a.norm,
                    "out_dir" => a.out_dir.as_ref().map(|p| p.display().to_string()),
                    "name" => a.name,
                );
            }
            Command::Cascade(a) => {
                push_flags!(out;
                    "wires" => a.wires, "l_wire" => a.l_wire, "l_series" => a.l_series,
                    "r_hotspot" => a.r_hotspot, "r_shunt" => a.r_shunt, "i_c" => a.i_c,
                    "bias" => a.bias, "armed" => a.armed, "horizon" => a.horizon, "dt" => a.dt,
                    "bias_min" => a.bias_min, "bias_max" => a.bias_max, "bias_steps" => a.bias_steps,
                    "every" => a.every,
                    "output" => a.output.as_ref().map(|p| p.display().to_string()),
                );
            }
        }
        out
    }
}

/// Parses `argv` (program name first) and runs the command, writing results
/// to `out` and diagnostics to `err`. Returns the process exit code.
pub fn run_with<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            let _ = if code == 0 { out.write_all(text.as_bytes()) } else { err.write_all(text.as_bytes()) };
            return code;
        }
    };
    match execute(&cli, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

/// [`run_with`] on the process's stdout and stderr.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    let mut out = stdout.lock();
    let mut err = stderr.lock();
    let code = run_with(argv, &mut out, &mut err);
    let _ = out.flush();
    code
}

fn config_path(cli: &Cli) -> Option<PathBuf> {
    if cli.config.is_some() {
        return cli.config.clone();
    }
    if let Command::Fit(FitArgs { input: Some(input), .. }) = &cli.command {
        let mut sidecar = input.clone().into_os_string();
        sidecar.push(".cfg");
        let sidecar = PathBuf::from(sidecar);
        if sidecar.is_file() {
            return Some(sidecar);
        }
    }
    None
}

fn execute(cli: &Cli, out: &mut dyn Write) -> Result<(), CliError> {
    let cfg = RunConfig::resolve(config_path(cli).as_deref(), &cli.command.flags())?;
    // results are buffered so the pool's worker thread never holds `out`
    let task = || -> Result<Vec<u8>, CliError> {
        let mut buf = Vec::new();
        match &cli.command {
            Command::Model(_) => cmd_model(&cfg, &mut buf),
            Command::Mc(_) => cmd_mc(&cfg, &mut buf),
            Command::Fit(_) => cmd_fit(&cfg, &mut buf),
            Command::Map(_) => cmd_map(&cfg, &mut buf),
            Command::Cascade(_) => cmd_cascade(&cfg, &mut buf),
        }?;
        Ok(buf)
    };
    let buf = match cli.threads {
        None => task()?,
        Some(0) => return Err(CliError::Usage("--threads must be at least 1".into())),
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .map_err(|e| CliError::Runtime(e.to_string()))?;
            pool.install(task)?
        }
    };
    out.write_all(&buf)?;
    Ok(())
}

/// Runs `body` against the configured output file, or `out` when there is none.
fn with_output(
    path: Option<&Path>,
    out: &mut dyn Write,
    body: impl FnOnce(&mut dyn Write) -> Result<(), CliError>,
) -> Result<(), CliError> {
    match path {
        Some(p) => {
            let mut w = BufWriter::new(File::create(p)?);
            body(&mut w)?;
            w.flush()?;
            Ok(())
        }
        None => body(out),
    }
}

fn photon_mode(cfg: &RunConfig) -> PhotonStatistics {
    if cfg.poisson {
        PhotonStatistics::Poissonian
    } else {
        PhotonStatistics::FixedPhotonNumber
    }
}

fn analytic(cfg: &RunConfig, mu: f64) -> Result<TriggerResult, CliError> {
    let model = cfg.detector()?;
    let k = cfg.illuminated();
    if cfg.poisson {
        let illum = IlluminationProfile::uniform(cfg.n, k, mu, PhotonStatistics::Poissonian)?;
        Ok(trigger_probability_uneven(&model, &illum)?)
    } else {
        if !(mu >= 0.0 && mu.fract() == 0.0 && mu <= u64::MAX as f64) {
            return Err(CliError::Usage(format!(
                "photon number {mu} must be a nonnegative integer for fixed-number pulses (use --poisson for a mean)"
            )));
        }
        Ok(trigger_probability(&model, k, mu as u64)?)
    }
}

fn cmd_model(cfg: &RunConfig, out: &mut dyn Write) -> Result<(), CliError> {
    let model = cfg.detector()?;
    if cfg.curve {
        let regime = Regime::from_threshold(cfg.b)
            .ok_or_else(|| CliError::Usage(format!("count curves need b = 1 or 2, got b = {}", cfg.b)))?;
        if !(cfg.mu_min > 0.0 && cfg.mu_max > cfg.mu_min && cfg.points >= 2) {
            return Err(CliError::Usage(
                "curve needs 0 < mu_min < mu_max and at least 2 points".into(),
            ));
        }
        let fluxes = log_spaced_fluxes(cfg.mu_min, cfg.mu_max, cfg.points);
        let curve = CountCurve::synthetic(regime, cfg.freq, cfg.eta, model.dark_prob(), &fluxes, "model")?;
        return with_output(cfg.output.as_deref(), out, |w| Ok(write_count_curve(&curve, w)?));
    }
    let result = analytic(cfg, cfg.mu)?;
    with_output(cfg.output.as_deref(), out, |w| {
        writeln!(w, "n = {}", cfg.n)?;
        writeln!(w, "b = {}", cfg.b)?;
        writeln!(w, "k = {}", cfg.illuminated())?;
        writeln!(w, "photons = {}", if cfg.poisson { "poisson" } else { "fixed" })?;
        writeln!(w, "mu = {}", fmt_num(cfg.mu))?;
        writeln!(w, "eta = {}", fmt_num(cfg.eta))?;
        writeln!(w, "gamma = {}", fmt_num(model.dark_prob()))?;
        writeln!(w, "freq = {}", fmt_num(cfg.freq))?;
        writeln!(w, "probability = {}", fmt_num(result.probability))?;
        writeln!(w, "rate = {}", fmt_num(result.rate))?;
        Ok(())
    })
}

fn cmd_mc(cfg: &RunConfig, out: &mut dyn Write) -> Result<(), CliError> {
    let model = cfg.detector()?;
    let mus = if cfg.mu_list.is_empty() { vec![cfg.mu] } else { cfg.mu_list.clone() };
    let mut rows = Vec::with_capacity(mus.len());
    for &mu in &mus {
        let exact = analytic(cfg, mu)?;
        let illum = IlluminationProfile::uniform(cfg.n, cfg.illuminated(), mu, photon_mode(cfg))?;
        let est = estimate_trigger_probability(&model, &illum, cfg.pulses, cfg.seed)?;
        let sigma = (exact.probability * (1.0 - exact.probability) / cfg.pulses as f64).sqrt();
        let z = if sigma > 0.0 {
            (est.probability - exact.probability) / sigma
        } else if est.probability == exact.probability {
            0.0
        } else {
            f64::INFINITY
        };
        rows.push((mu, est, exact.probability, z));
    }
    with_output(cfg.output.as_deref(), out, |w| {
        writeln!(
            w,
            "# n = {}, b = {}, k = {}, eta = {}, gamma = {}, pulses = {}, seed = {}",
            cfg.n,
            cfg.b,
            cfg.illuminated(),
            fmt_num(cfg.eta),
            fmt_num(model.dark_prob()),
            cfg.pulses,
            cfg.seed
        )?;
        writeln!(w, "mu,mc_probability,std_error,analytic_probability,z_score")?;
        for (mu, est, exact, z) in &rows {
            writeln!(
                w,
                "{},{},{},{},{}",
                fmt_num(*mu),
                fmt_num(est.probability),
                fmt_num(est.std_error),
                fmt_num(*exact),
                fmt_num(*z)
            )?;
        }
        Ok(())
    })
}

/// Rounds to the nine significant digits used for all printed numbers.
fn round9(v: f64) -> f64 {
    if v.is_finite() {
        fmt_num(v).parse().unwrap_or(v)
    } else {
        v
    }
}

fn cmd_fit(cfg: &RunConfig, out: &mut dyn Write) -> Result<(), CliError> {
    let input = cfg
        .input
        .as_deref()
        .ok_or_else(|| CliError::Usage("fit needs an input curve file".into()))?;
    let regime = match cfg.regime {
        Some(r) => r,
        None => Regime::from_threshold(cfg.b)
            .ok_or_else(|| CliError::Usage(format!("no fit model for b = {}; set regime", cfg.b)))?,
    };
    let curve = load_count_curve(input, cfg.freq, regime)?;
    let fit_gamma = cfg.fit_gamma.unwrap_or(regime.fits_gamma_by_default());
    let report = fit_curve(&curve, fit_gamma, &cfg.fit_bounds())?;
    let mut summary = report.summary();
    summary.eta = round9(summary.eta);
    summary.gamma = round9(summary.gamma);
    summary.r_squared = round9(summary.r_squared);
    let json = serde_json::to_string_pretty(&summary).map_err(|e| CliError::Runtime(e.to_string()))?;
    with_output(cfg.output.as_deref(), out, |w| Ok(writeln!(w, "{json}")?))
}

fn cmd_map(cfg: &RunConfig, out: &mut dyn Write) -> Result<(), CliError> {
    let geometry = cfg.geometry()?;
    let alive = geometry.alive_indices().len() as u32;
    // the trigger logic only sees alive pixels
    let mut cfg_alive = cfg.clone();
    cfg_alive.n = alive;
    let model = cfg_alive.detector()?;
    let spot = OpticalSpot::new(cfg.fwhm, (0.0, 0.0), cfg.mu)?;
    let map = generate_response_map(&geometry, &spot, &cfg.scan_window(), cfg.step, &model, cfg.mu)?;

    std::fs::create_dir_all(&cfg.out_dir)?;
    let csv_path = cfg.out_dir.join(format!("{}.csv", cfg.name));
    let pgm_path = cfg.out_dir.join(format!("{}.pgm", cfg.name));
    let mut csv = BufWriter::new(File::create(&csv_path)?);
    map.write_csv(&mut csv)?;
    csv.flush()?;
    let mut pgm = BufWriter::new(File::create(&pgm_path)?);
    map.write_pgm(&mut pgm, cfg.norm)?;
    pgm.flush()?;

    let (x, y, v) = map.argmax();
    let region = match geometry.classify(x, y) {
        Region::OnPixel(i) => format!("on_pixel({i})"),
        Region::BetweenPixels(i, j) => format!("between_pixels({i},{j})"),
        Region::Elsewhere => "elsewhere".to_string(),
    };
    writeln!(out, "csv = {}", csv_path.display())?;
    writeln!(out, "pgm = {}", pgm_path.display())?;
    writeln!(out, "grid = {}x{}", map.xs.len(), map.ys.len())?;
    writeln!(out, "max_rate = {}", fmt_num(v))?;
    writeln!(out, "argmax_x = {}", fmt_num(x))?;
    writeln!(out, "argmax_y = {}", fmt_num(y))?;
    writeln!(out, "argmax_region = {region}")?;
    Ok(())
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_num).unwrap_or_else(|| "nan".to_string())
}

fn cmd_cascade(cfg: &RunConfig, out: &mut dyn Write) -> Result<(), CliError> {
    let circuit = cfg.circuit();
    let settings = cfg.simulation();
    match (cfg.bias_min, cfg.bias_max) {
        (Some(lo), Some(hi)) => {
            if !(hi >= lo && cfg.bias_steps >= 1) {
                return Err(CliError::Usage("sweep needs bias_min <= bias_max and bias_steps >= 1".into()));
            }
            let biases: Vec<f64> = if cfg.bias_steps == 1 {
                vec![lo * cfg.i_c]
            } else {
                (0..cfg.bias_steps)
                    .map(|i| (lo + (hi - lo) * i as f64 / (cfg.bias_steps - 1) as f64) * cfg.i_c)
                    .collect()
            };
            let sweep = latency_bias_sweep(&circuit, cfg.armed, &biases, settings)?;
            with_output(cfg.output.as_deref(), out, |w| {
                writeln!(w, "# armed = {}, wires = {}", cfg.armed, cfg.wires)?;
                writeln!(w, "# cascade_threshold_current = {}", fmt_opt(sweep.cascade_threshold_current))?;
                writeln!(w, "bias,latency")?;
                for p in &sweep.points {
                    writeln!(w, "{},{}", fmt_num(p.bias), fmt_opt(p.latency))?;
                }
                Ok(())
            })
        }
        (None, None) => {
            if cfg.armed == 0 || cfg.armed >= cfg.wires {
                return Err(CliError::Usage(format!(
                    "armed = {} must be between 1 and wires - 1 = {}",
                    cfg.armed,
                    cfg.wires.saturating_sub(1)
                )));
            }
            let armed: Vec<usize> = (0..cfg.armed).collect();
            let trace = simulate_cascade(&circuit, &armed, settings)?;
            let every = cfg.every.max(1);
            with_output(cfg.output.as_deref(), out, |w| {
                writeln!(w, "# armed = {}, bias = {}", cfg.armed, fmt_num(circuit.bias_current))?;
                writeln!(w, "# cascade_latency = {}", fmt_opt(trace.cascade_latency))?;
                let mut header = String::from("time");
                for i in 0..cfg.wires {
                    header.push_str(&format!(",i_wire_{i}"));
                }
                header.push_str(",i_shunt");
                writeln!(w, "{header}")?;
                let last = trace.times.len().saturating_sub(1);
                for (s, t) in trace.times.iter().enumerate() {
                    if s % every != 0 && s != last {
                        continue;
                    }
                    let mut line = fmt_num(*t);
                    for c in &trace.per_wire_currents[s] {
                        line.push(',');
                        line.push_str(&fmt_num(*c));
                    }
                    line.push(',');
                    line.push_str(&fmt_num(trace.shunt_currents[s]));
                    writeln!(w, "{line}")?;
                }
                Ok(())
            })
        }
        _ => Err(CliError::Usage("a sweep needs both bias_min and bias_max".into())),
    }
}
