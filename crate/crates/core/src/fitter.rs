//! Recovering efficiency and dark probability from count-rate curves.
//!
//! The objective is the coefficient of determination of `log10(rate)`: count
//! curves span several decades, and a linear-space R² would be decided by the
//! brightest point alone. Points with a zero measured rate have no logarithm;
//! they are excluded from the objective but kept in the report.
//!
//! Minimization is a coarse scan over a logarithmic `(eta, gamma)` grid
//! followed by a Nelder-Mead polish started from the best grid node.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::optimize::{nelder_mead, SimplexOptions};
use crate::trigger::{rate_b1, rate_b1_dark, rate_b2_closed};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FitError {
    #[error("invalid count curve: {0}")]
    InvalidCurve(String),
    #[error("curve has no nonzero count rates")]
    NoSignal,
    #[error("need at least {needed} points with nonzero rate, found {found}")]
    TooFewPoints { needed: usize, found: usize },
    #[error("observed values have zero variance; R² is undefined")]
    DegenerateVariance,
    #[error("predicted and observed lengths differ ({0} vs {1}) or are below 2")]
    LengthMismatch(usize, usize),
    #[error("invalid bounds: {0}")]
    InvalidBounds(String),
    #[error("optimizer did not converge after {evaluations} evaluations (best eta = {best_eta}, gamma = {best_gamma}, R² = {best_r_squared})")]
    NotConverged {
        evaluations: usize,
        best_eta: f64,
        best_gamma: f64,
        best_r_squared: f64,
    },
}

/// Which trigger model a curve is fitted with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// One illuminated pixel, cascade on any single hotspot (b = 1).
    SinglePixel,
    /// Two evenly illuminated pixels, both must arm (b = 2).
    TwoPixel,
}

impl Regime {
    pub fn threshold(self) -> u32 {
        match self {
            Regime::SinglePixel => 1,
            Regime::TwoPixel => 2,
        }
    }

    pub fn from_threshold(b: u32) -> Option<Self> {
        match b {
            1 => Some(Regime::SinglePixel),
            2 => Some(Regime::TwoPixel),
            _ => None,
        }
    }

    /// Whether the dark probability is a free parameter by default.
    pub fn fits_gamma_by_default(self) -> bool {
        matches!(self, Regime::TwoPixel)
    }

    /// Expected count rate at mean photon number `mu`.
    pub fn rate(self, f: f64, mu: f64, eta: f64, gamma: f64) -> f64 {
        match self {
            Regime::SinglePixel if gamma == 0.0 => rate_b1(f, mu, eta),
            Regime::SinglePixel => rate_b1_dark(f, mu, eta, gamma),
            Regime::TwoPixel => rate_b2_closed(f, mu, eta, gamma),
        }
    }
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Regime::SinglePixel => "single_pixel",
            Regime::TwoPixel => "two_pixel",
        })
    }
}

impl std::str::FromStr for Regime {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "single_pixel" | "single" | "b1" | "1" => Ok(Regime::SinglePixel),
            "two_pixel" | "two" | "b2" | "2" => Ok(Regime::TwoPixel),
            other => Err(format!("unknown regime '{other}' (expected single_pixel or two_pixel)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    /// Mean photons per pulse.
    pub flux: f64,
    /// Counts per second.
    pub count_rate: f64,
}

/// Count rate against photon flux, with the pulse frequency it was taken at.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountCurve {
    points: Vec<CurvePoint>,
    pulse_freq: f64,
    regime: Regime,
    label: String,
}

impl CountCurve {
    pub fn new(
        points: Vec<CurvePoint>,
        pulse_freq: f64,
        regime: Regime,
        label: impl Into<String>,
    ) -> Result<Self, FitError> {
        if !(pulse_freq > 0.0 && pulse_freq.is_finite()) {
            return Err(FitError::InvalidCurve(format!("pulse frequency {pulse_freq} must be positive")));
        }
        for (i, p) in points.iter().enumerate() {
            if !(p.flux.is_finite() && p.flux >= 0.0) {
                return Err(FitError::InvalidCurve(format!("point {i}: flux {} is not a valid photon number", p.flux)));
            }
            if !(p.count_rate.is_finite() && p.count_rate >= 0.0) {
                return Err(FitError::InvalidCurve(format!("point {i}: count rate {} is negative", p.count_rate)));
            }
            if p.count_rate > pulse_freq * (1.0 + 1e-12) {
                return Err(FitError::InvalidCurve(format!(
                    "point {i}: count rate {} exceeds the pulse frequency {pulse_freq}",
                    p.count_rate
                )));
            }
        }
        if let Some(i) = points.windows(2).position(|w| w[1].flux <= w[0].flux) {
            return Err(FitError::InvalidCurve(format!(
                "fluxes must be strictly increasing (point {} has flux {} after {})",
                i + 1,
                points[i + 1].flux,
                points[i].flux
            )));
        }
        Ok(Self {
            points,
            pulse_freq,
            regime,
            label: label.into(),
        })
    }

    /// Noiseless curve of the regime's model at the given fluxes.
    pub fn synthetic(
        regime: Regime,
        pulse_freq: f64,
        eta: f64,
        gamma: f64,
        fluxes: &[f64],
        label: impl Into<String>,
    ) -> Result<Self, FitError> {
        let points = fluxes
            .iter()
            .map(|&mu| CurvePoint {
                flux: mu,
                count_rate: regime.rate(pulse_freq, mu, eta, gamma),
            })
            .collect();
        Self::new(points, pulse_freq, regime, label)
    }

    pub fn points(&self) -> &[CurvePoint] {
        &self.points
    }

    pub fn pulse_freq(&self) -> f64 {
        self.pulse_freq
    }

    pub fn regime(&self) -> Regime {
        self.regime
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn with_regime(mut self, regime: Regime) -> Self {
        self.regime = regime;
        self
    }

    /// Copy with every rate multiplied by the matching factor.
    pub fn scaled_rates(&self, factors: &[f64]) -> Result<Self, FitError> {
        if factors.len() != self.points.len() {
            return Err(FitError::LengthMismatch(factors.len(), self.points.len()));
        }
        let points = self
            .points
            .iter()
            .zip(factors)
            .map(|(p, s)| CurvePoint {
                flux: p.flux,
                count_rate: (p.count_rate * s).clamp(0.0, self.pulse_freq),
            })
            .collect();
        Self::new(points, self.pulse_freq, self.regime, self.label.clone())
    }
}

/// `log10` with a floor so a vanishing model rate is a large, finite miss.
fn log_rate(r: f64) -> f64 {
    r.max(1e-300).log10()
}

/// Coefficient of determination of `log10(predicted)` against
/// `log10(observed)`, over pairs with a positive observation.
pub fn r_squared(predicted: &[f64], observed: &[f64]) -> Result<f64, FitError> {
    if predicted.len() != observed.len() || observed.len() < 2 {
        return Err(FitError::LengthMismatch(predicted.len(), observed.len()));
    }
    let pairs: Vec<(f64, f64)> = predicted
        .iter()
        .zip(observed)
        .filter(|(_, &o)| o > 0.0)
        .map(|(&p, &o)| (log_rate(p), o.log10()))
        .collect();
    if pairs.len() < 2 {
        return Err(FitError::TooFewPoints {
            needed: 2,
            found: pairs.len(),
        });
    }
    let mean = pairs.iter().map(|(_, o)| o).sum::<f64>() / pairs.len() as f64;
    let ss_tot: f64 = pairs.iter().map(|(_, o)| (o - mean).powi(2)).sum();
    if ss_tot <= f64::EPSILON * mean.abs().max(1.0) * pairs.len() as f64 * 1e-6 || ss_tot == 0.0 {
        return Err(FitError::DegenerateVariance);
    }
    let ss_res: f64 = pairs.iter().map(|(p, o)| (o - p).powi(2)).sum();
    Ok(1.0 - ss_res / ss_tot)
}

/// Search box for the fitted parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitBounds {
    pub eta_min: f64,
    pub eta_max: f64,
    pub gamma_min: f64,
    pub gamma_max: f64,
}

impl Default for FitBounds {
    fn default() -> Self {
        Self {
            eta_min: 1e-7,
            eta_max: 0.5,
            gamma_min: 0.0,
            gamma_max: 0.2,
        }
    }
}

impl FitBounds {
    fn validate(&self) -> Result<(), FitError> {
        let ok = self.eta_min > 0.0
            && self.eta_max <= 1.0
            && self.eta_min < self.eta_max
            && self.gamma_min >= 0.0
            && self.gamma_max <= 1.0
            && self.gamma_min <= self.gamma_max;
        if ok {
            Ok(())
        } else {
            Err(FitError::InvalidBounds(format!("{self:?}")))
        }
    }

    fn clamp_eta(&self, eta: f64) -> f64 {
        eta.clamp(self.eta_min, self.eta_max)
    }

    fn clamp_gamma(&self, gamma: f64) -> f64 {
        gamma.clamp(self.gamma_min, self.gamma_max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub eta: f64,
    pub gamma: f64,
    pub r_squared: f64,
    /// `log10(observed) - log10(model)` per data point; NaN where the
    /// observed rate is zero and the point was excluded.
    pub residuals: Vec<f64>,
    pub model_curve: CountCurve,
    pub n_points: usize,
    pub excluded_points: usize,
    pub regime: Regime,
}

/// The fields written by the command-line `fit` report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitSummary {
    pub eta: f64,
    pub gamma: f64,
    pub r_squared: f64,
    pub n_points: usize,
    pub regime: Regime,
}

impl FitReport {
    pub fn summary(&self) -> FitSummary {
        FitSummary {
            eta: self.eta,
            gamma: self.gamma,
            r_squared: self.r_squared,
            n_points: self.n_points,
            regime: self.regime,
        }
    }
}

const ETA_GRID: usize = 121;
const GAMMA_GRID: usize = 41;

struct Objective<'a> {
    fluxes: Vec<f64>,
    log_observed: Vec<f64>,
    curve: &'a CountCurve,
}

impl Objective<'_> {
    fn ss_res(&self, eta: f64, gamma: f64) -> f64 {
        let f = self.curve.pulse_freq;
        let regime = self.curve.regime;
        self.fluxes
            .iter()
            .zip(&self.log_observed)
            .map(|(&mu, &o)| (o - log_rate(regime.rate(f, mu, eta, gamma))).powi(2))
            .sum()
    }
}

fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.log10(), hi.log10());
    (0..n)
        .map(|i| 10f64.powf(a + (b - a) * i as f64 / (n - 1) as f64))
        .collect()
}

fn gamma_grid(bounds: &FitBounds) -> Vec<f64> {
    let mut grid = Vec::with_capacity(GAMMA_GRID);
    let lo = if bounds.gamma_min > 0.0 {
        bounds.gamma_min
    } else {
        grid.push(0.0);
        (bounds.gamma_max * 1e-6).max(1e-12)
    };
    if bounds.gamma_max > lo {
        grid.extend(log_grid(lo, bounds.gamma_max, GAMMA_GRID - grid.len()));
    } else if grid.is_empty() {
        grid.push(lo);
    }
    grid
}

/// Fits the curve's regime model by maximizing log-space R².
///
/// With `fit_gamma = false` the dark probability is pinned to zero (or to
/// `bounds.gamma_min` if that is positive).
pub fn fit_curve(data: &CountCurve, fit_gamma: bool, bounds: &FitBounds) -> Result<FitReport, FitError> {
    bounds.validate()?;
    let included: Vec<&CurvePoint> = data.points.iter().filter(|p| p.count_rate > 0.0).collect();
    if included.is_empty() {
        return Err(FitError::NoSignal);
    }
    if included.len() < 3 {
        return Err(FitError::TooFewPoints {
            needed: 3,
            found: included.len(),
        });
    }
    let objective = Objective {
        fluxes: included.iter().map(|p| p.flux).collect(),
        log_observed: included.iter().map(|p| p.count_rate.log10()).collect(),
        curve: data,
    };

    let etas = log_grid(bounds.eta_min, bounds.eta_max, ETA_GRID);
    let gammas = if fit_gamma {
        gamma_grid(bounds)
    } else {
        vec![bounds.gamma_min]
    };

    // Lexicographic scan; strict improvement keeps the smallest tied vector.
    let mut best = (f64::INFINITY, etas[0], gammas[0], 0_usize);
    for (ie, &eta) in etas.iter().enumerate() {
        for &gamma in &gammas {
            let v = objective.ss_res(eta, gamma);
            if v < best.0 {
                best = (v, eta, gamma, ie);
            }
        }
    }

    let eta_step = (bounds.eta_max / bounds.eta_min).log10() / (ETA_GRID - 1) as f64;
    let (mut eta, mut gamma) = (best.1, best.2);
    let mut evaluations = 0;
    let mut converged = false;
    // Restart the simplex from its own answer until it stops moving.
    for round in 0..4 {
        let shrink = 0.25_f64.powi(round);
        let result = if fit_gamma {
            let gamma_step = (gamma.abs() * 0.5).max((bounds.gamma_max - bounds.gamma_min) * 1e-4).max(1e-12) * shrink;
            nelder_mead(
                |x| objective.ss_res(10f64.powf(x[0]).clamp(bounds.eta_min, bounds.eta_max), bounds.clamp_gamma(x[1])),
                &[eta.log10(), gamma],
                &[eta_step * shrink, gamma_step],
                SimplexOptions::default(),
            )
        } else {
            nelder_mead(
                |x| objective.ss_res(10f64.powf(x[0]).clamp(bounds.eta_min, bounds.eta_max), gamma),
                &[eta.log10()],
                &[eta_step * shrink],
                SimplexOptions::default(),
            )
        };
        evaluations += result.evaluations;
        let new_eta = bounds.clamp_eta(10f64.powf(result.x[0]));
        let new_gamma = if fit_gamma { bounds.clamp_gamma(result.x[1]) } else { gamma };
        let settled = result.converged
            && ((new_eta - eta).abs() <= 1e-10 * eta)
            && ((new_gamma - gamma).abs() <= 1e-10 * gamma.max(1e-12));
        eta = new_eta;
        gamma = new_gamma;
        converged = result.converged;
        if settled {
            break;
        }
    }

    let f = data.pulse_freq;
    let regime = data.regime;
    let predicted: Vec<f64> = data.points.iter().map(|p| regime.rate(f, p.flux, eta, gamma)).collect();
    let observed: Vec<f64> = data.points.iter().map(|p| p.count_rate).collect();
    let r2 = r_squared(&predicted, &observed)?;
    if !converged {
        return Err(FitError::NotConverged {
            evaluations,
            best_eta: eta,
            best_gamma: gamma,
            best_r_squared: r2,
        });
    }
    let residuals = data
        .points
        .iter()
        .zip(&predicted)
        .map(|(p, &m)| if p.count_rate > 0.0 { p.count_rate.log10() - log_rate(m) } else { f64::NAN })
        .collect();
    let fluxes: Vec<f64> = data.points.iter().map(|p| p.flux).collect();
    let model_curve = CountCurve::synthetic(regime, f, eta, gamma, &fluxes, format!("{} (model)", data.label))?;
    Ok(FitReport {
        eta,
        gamma,
        r_squared: r2,
        residuals,
        model_curve,
        n_points: data.points.len(),
        excluded_points: data.points.len() - included.len(),
        regime,
    })
}

/// Log-log slope of the regime's model between two fluxes.
pub fn log_log_slope(regime: Regime, eta: f64, gamma: f64, mu_lo: f64, mu_hi: f64) -> f64 {
    let lo = regime.rate(1.0, mu_lo, eta, gamma);
    let hi = regime.rate(1.0, mu_hi, eta, gamma);
    (hi / lo).ln() / (mu_hi / mu_lo).ln()
}

/// `n` logarithmically spaced fluxes from `lo` to `hi` inclusive.
pub fn log_spaced_fluxes(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    log_grid(lo, hi, n)
}

#[cfg(test)]
mod rounded_input {
    use super::*;

    // curves read back from 9-digit CSV leave the objective on a rounding-noise floor
    #[test]
    fn nine_digit_curve_converges() {
        let fluxes = log_spaced_fluxes(1.0, 1e4, 15);
        let exact = CountCurve::synthetic(Regime::SinglePixel, 1e6, 7.5e-4, 0.0, &fluxes, "x").unwrap();
        let round = |v: f64| format!("{v:.8e}").parse::<f64>().unwrap();
        let points = exact
            .points()
            .iter()
            .map(|p| CurvePoint {
                flux: round(p.flux),
                count_rate: round(p.count_rate),
            })
            .collect();
        let curve = CountCurve::new(points, 1e6, Regime::SinglePixel, "y").unwrap();
        let fit = fit_curve(&curve, false, &FitBounds::default()).unwrap();
        assert!((fit.eta / 7.5e-4 - 1.0).abs() < 1e-7);
    }
}
