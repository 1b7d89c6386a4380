//! Flat `key = value` run configuration.
//!
//! Values are resolved in three layers: built-in defaults, then a config
//! file, then command-line flags. Unknown keys are an error.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::cascade::{CascadeCircuit, SimulationSettings};
use crate::fitter::{FitBounds, Regime};
use crate::scanmap::{Normalization, PixelGeometry, ScanWindow};
use crate::trigger::{dark_probability, DetectorModel};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}:{line}: expected 'key = value', got '{text}'")]
    Syntax { path: String, line: usize, text: String },
    #[error("{origin}: unknown key '{key}'")]
    UnknownKey { origin: String, key: String },
    #[error("{origin}: key '{key}': cannot parse '{value}': {reason}")]
    BadValue {
        origin: String,
        key: String,
        value: String,
        reason: String,
    },
    #[error("cannot read config {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

/// Every tunable of every subcommand.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    // detector
    pub n: u32,
    pub b: u32,
    pub k: Option<u32>,
    pub eta: f64,
    pub gamma: f64,
    pub lambda: Option<f64>,
    pub freq: f64,
    pub mu: f64,
    /// Poissonian pulses instead of a fixed photon number.
    pub poisson: bool,
    pub i_c: f64,
    // curves and sweeps over flux
    pub mu_min: f64,
    pub mu_max: f64,
    pub points: usize,
    /// `model` writes a count curve over `mu_min..mu_max` instead of one value.
    pub curve: bool,
    pub mu_list: Vec<f64>,
    // monte carlo
    pub pulses: u64,
    pub seed: u64,
    // fitting
    pub input: Option<PathBuf>,
    pub regime: Option<Regime>,
    pub fit_gamma: Option<bool>,
    pub eta_min: f64,
    pub eta_max: f64,
    pub gamma_min: f64,
    pub gamma_max: f64,
    // geometry and maps
    pub pixel_size: f64,
    pub pitch: f64,
    pub dead: Vec<usize>,
    pub fwhm: f64,
    pub half_width: f64,
    pub step: f64,
    pub norm: Normalization,
    // circuit
    pub wires: usize,
    pub l_wire: f64,
    pub l_series: f64,
    pub r_hotspot: f64,
    pub r_shunt: f64,
    /// Bias as a fraction of the critical current.
    pub bias: f64,
    pub armed: usize,
    pub horizon: f64,
    pub dt: f64,
    pub bias_min: Option<f64>,
    pub bias_max: Option<f64>,
    pub bias_steps: usize,
    pub every: usize,
    // output
    pub out_dir: PathBuf,
    /// File stem for map outputs.
    pub name: String,
    pub output: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let circuit = CascadeCircuit::default();
        let sim = SimulationSettings::default();
        Self {
            n: 2,
            b: 2,
            k: None,
            eta: 1.59e-4,
            gamma: 0.0,
            lambda: None,
            freq: 1e6,
            mu: 8000.0,
            poisson: false,
            i_c: circuit.critical_current,
            mu_min: 10.0,
            mu_max: 1e5,
            points: 41,
            curve: false,
            mu_list: Vec::new(),
            pulses: 1_000_000,
            seed: 0,
            input: None,
            regime: None,
            fit_gamma: None,
            eta_min: FitBounds::default().eta_min,
            eta_max: FitBounds::default().eta_max,
            gamma_min: FitBounds::default().gamma_min,
            gamma_max: FitBounds::default().gamma_max,
            pixel_size: 3.0,
            pitch: 5.0,
            dead: vec![3],
            fwhm: 1.3,
            half_width: 7.9,
            step: 0.2,
            norm: Normalization::Linear,
            wires: circuit.n_wires,
            l_wire: circuit.wire_inductance,
            l_series: circuit.series_inductance,
            r_hotspot: circuit.hotspot_resistance,
            r_shunt: circuit.shunt_resistance,
            bias: 0.69,
            armed: 1,
            horizon: sim.horizon,
            dt: sim.dt,
            bias_min: None,
            bias_max: None,
            bias_steps: 31,
            every: 1,
            out_dir: PathBuf::from("."),
            name: "map".to_string(),
            output: None,
        }
    }
}

fn parse<T: std::str::FromStr>(origin: &str, key: &str, value: &str) -> Result<T, ConfigError>
where
    T::Err: std::fmt::Display,
{
    value.trim().parse::<T>().map_err(|e| ConfigError::BadValue {
        origin: origin.to_string(),
        key: key.to_string(),
        value: value.to_string(),
        reason: e.to_string(),
    })
}

fn parse_list<T: std::str::FromStr>(origin: &str, key: &str, value: &str) -> Result<Vec<T>, ConfigError>
where
    T::Err: std::fmt::Display,
{
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse(origin, key, s))
        .collect()
}

impl RunConfig {
    /// Applies one `key = value` setting.
    pub fn set(&mut self, origin: &str, key: &str, value: &str) -> Result<(), ConfigError> {
        match key {
            "n" => self.n = parse(origin, key, value)?,
            "b" => self.b = parse(origin, key, value)?,
            "k" => self.k = Some(parse(origin, key, value)?),
            "eta" => self.eta = parse(origin, key, value)?,
            "gamma" => self.gamma = parse(origin, key, value)?,
            "lambda" => self.lambda = Some(parse(origin, key, value)?),
            "freq" => self.freq = parse(origin, key, value)?,
            "mu" => self.mu = parse(origin, key, value)?,
            "poisson" => self.poisson = parse(origin, key, value)?,
            "i_c" => self.i_c = parse(origin, key, value)?,
            "mu_min" => self.mu_min = parse(origin, key, value)?,
            "mu_max" => self.mu_max = parse(origin, key, value)?,
            "points" => self.points = parse(origin, key, value)?,
            "curve" => self.curve = parse(origin, key, value)?,
            "mu_list" => self.mu_list = parse_list(origin, key, value)?,
            "pulses" => self.pulses = parse(origin, key, value)?,
            "seed" => self.seed = parse(origin, key, value)?,
            "input" => self.input = Some(PathBuf::from(value.trim())),
            "regime" => self.regime = Some(parse(origin, key, value)?),
            "fit_gamma" => self.fit_gamma = Some(parse(origin, key, value)?),
            "eta_min" => self.eta_min = parse(origin, key, value)?,
            "eta_max" => self.eta_max = parse(origin, key, value)?,
            "gamma_min" => self.gamma_min = parse(origin, key, value)?,
            "gamma_max" => self.gamma_max = parse(origin, key, value)?,
            "pixel_size" => self.pixel_size = parse(origin, key, value)?,
            "pitch" => self.pitch = parse(origin, key, value)?,
            "dead" => self.dead = parse_list(origin, key, value)?,
            "fwhm" => self.fwhm = parse(origin, key, value)?,
            "half_width" => self.half_width = parse(origin, key, value)?,
            "step" => self.step = parse(origin, key, value)?,
            "norm" => self.norm = parse(origin, key, value)?,
            "wires" => self.wires = parse(origin, key, value)?,
            "l_wire" => self.l_wire = parse(origin, key, value)?,
            "l_series" => self.l_series = parse(origin, key, value)?,
            "r_hotspot" => self.r_hotspot = parse(origin, key, value)?,
            "r_shunt" => self.r_shunt = parse(origin, key, value)?,
            "bias" => self.bias = parse(origin, key, value)?,
            "armed" => self.armed = parse(origin, key, value)?,
            "horizon" => self.horizon = parse(origin, key, value)?,
            "dt" => self.dt = parse(origin, key, value)?,
            "bias_min" => self.bias_min = Some(parse(origin, key, value)?),
            "bias_max" => self.bias_max = Some(parse(origin, key, value)?),
            "bias_steps" => self.bias_steps = parse(origin, key, value)?,
            "every" => self.every = parse(origin, key, value)?,
            "out_dir" => self.out_dir = PathBuf::from(value.trim()),
            "name" => self.name = value.trim().to_string(),
            "output" => self.output = Some(PathBuf::from(value.trim())),
            _ => {
                return Err(ConfigError::UnknownKey {
                    origin: origin.to_string(),
                    key: key.to_string(),
                })
            }
        }
        Ok(())
    }

    /// Parses `key = value` lines; `#` starts a comment.
    pub fn parse_file_text(path: &str, text: &str) -> Result<BTreeMap<String, String>, ConfigError> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
                path: path.to_string(),
                line: i + 1,
                text: raw.to_string(),
            })?;
            entries.insert(key.trim().to_string(), value.trim().to_string());
        }
        Ok(entries)
    }

    /// Defaults, overlaid with the config file (if any), overlaid with flags.
    pub fn resolve(file: Option<&Path>, flags: &[(&'static str, String)]) -> Result<Self, ConfigError> {
        let mut cfg = Self::default();
        if let Some(path) = file {
            let shown = path.display().to_string();
            let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
                path: shown.clone(),
                source,
            })?;
            let entries = Self::parse_file_text(&shown, &text)?;
            for (k, v) in &entries {
                cfg.set(&shown, k, v)?;
            }
            // relative paths inside a config file are relative to that file
            if let Some(dir) = path.parent() {
                if let Some(input) = cfg.input.as_mut().filter(|p| p.is_relative() && entries.contains_key("input")) {
                    *input = dir.join(&*input);
                }
            }
        }
        for (k, v) in flags {
            cfg.set("command line", k, v)?;
        }
        Ok(cfg)
    }

    pub fn dark_prob(&self) -> Result<f64, ConfigError> {
        match self.lambda {
            Some(l) => dark_probability(l).map_err(|e| ConfigError::Invalid(e.to_string())),
            None => Ok(self.gamma),
        }
    }

    pub fn detector(&self) -> Result<DetectorModel, ConfigError> {
        DetectorModel::new(self.n, self.b, self.eta, self.dark_prob()?, self.freq)
            .map_err(|e| ConfigError::Invalid(e.to_string()))
    }

    pub fn illuminated(&self) -> u32 {
        self.k.unwrap_or(self.n)
    }

    pub fn fit_bounds(&self) -> FitBounds {
        FitBounds {
            eta_min: self.eta_min,
            eta_max: self.eta_max,
            gamma_min: self.gamma_min,
            gamma_max: self.gamma_max,
        }
    }

    pub fn geometry(&self) -> Result<PixelGeometry, ConfigError> {
        PixelGeometry::quad(self.pixel_size, self.pitch, &self.dead).map_err(|e| ConfigError::Invalid(e.to_string()))
    }

    pub fn scan_window(&self) -> ScanWindow {
        ScanWindow::square(self.half_width)
    }

    pub fn circuit(&self) -> CascadeCircuit {
        CascadeCircuit {
            n_wires: self.wires,
            wire_inductance: self.l_wire,
            hotspot_resistance: self.r_hotspot,
            shunt_resistance: self.r_shunt,
            series_inductance: self.l_series,
            bias_current: self.bias * self.i_c,
            critical_current: self.i_c,
        }
    }

    pub fn simulation(&self) -> SimulationSettings {
        SimulationSettings {
            horizon: self.horizon,
            dt: self.dt,
        }
    }
}
