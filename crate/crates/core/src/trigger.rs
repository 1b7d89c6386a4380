//! Exact trigger probabilities for a detector that registers a count only when
//! at least `b` of its `n` parallel pixels are armed within one pulse window.
//!
//! A pixel becomes armed either through a dark event (independently, with
//! probability `gamma` per window) or through a photon that lands on it and
//! forms a hotspot (probability `eta` per photon). Photons landing on a pixel
//! that is already armed add nothing.
//!
//! The uniform engine conditions on the dark-armed set, counts the photon
//! hotspots that fall on free illuminated pixels (a binomial thinning of the
//! `mu` incident photons), and asks how likely those hotspots are to cover
//! enough distinct free pixels. The uneven engine works with Poissonian pulses
//! and per-pixel mean photon numbers.

use serde::{Deserialize, Serialize};

use crate::error::{check_probability, ModelError};
use crate::numeric::{binomial_pmf, choose, one_minus_one_minus_pow, one_minus_pow};

/// The statistical detector: `n` pixels, cascade threshold `b`, per-photon
/// hotspot probability, per-pixel dark-event probability per window, and the
/// pulse repetition frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorModel {
    n_pixels: u32,
    cascade_threshold: u32,
    efficiency: f64,
    dark_prob: f64,
    pulse_freq: f64,
}

impl DetectorModel {
    pub fn new(
        n_pixels: u32,
        cascade_threshold: u32,
        efficiency: f64,
        dark_prob: f64,
        pulse_freq: f64,
    ) -> Result<Self, ModelError> {
        if n_pixels == 0 {
            return Err(ModelError::invalid("n_pixels", n_pixels, "must be positive"));
        }
        if cascade_threshold == 0 || cascade_threshold > n_pixels {
            return Err(ModelError::invalid(
                "cascade_threshold",
                cascade_threshold,
                "must satisfy 1 <= b <= n",
            ));
        }
        check_probability("efficiency", efficiency)?;
        check_probability("dark_prob", dark_prob)?;
        if !(pulse_freq > 0.0 && pulse_freq.is_finite()) {
            return Err(ModelError::invalid("pulse_freq", pulse_freq, "must be positive and finite"));
        }
        Ok(Self {
            n_pixels,
            cascade_threshold,
            efficiency,
            dark_prob,
            pulse_freq,
        })
    }

    /// Builds the model from a mean dark-event count per window instead of a
    /// probability.
    pub fn with_dark_rate(
        n_pixels: u32,
        cascade_threshold: u32,
        efficiency: f64,
        dark_rate: f64,
        pulse_freq: f64,
    ) -> Result<Self, ModelError> {
        let gamma = dark_probability(dark_rate)?;
        Self::new(n_pixels, cascade_threshold, efficiency, gamma, pulse_freq)
    }

    pub fn n_pixels(&self) -> u32 {
        self.n_pixels
    }

    pub fn cascade_threshold(&self) -> u32 {
        self.cascade_threshold
    }

    pub fn efficiency(&self) -> f64 {
        self.efficiency
    }

    pub fn dark_prob(&self) -> f64 {
        self.dark_prob
    }

    pub fn pulse_freq(&self) -> f64 {
        self.pulse_freq
    }

    /// Same detector with a different cascade threshold.
    pub fn with_threshold(&self, b: u32) -> Result<Self, ModelError> {
        Self::new(self.n_pixels, b, self.efficiency, self.dark_prob, self.pulse_freq)
    }

    pub fn with_efficiency(&self, eta: f64) -> Result<Self, ModelError> {
        Self::new(self.n_pixels, self.cascade_threshold, eta, self.dark_prob, self.pulse_freq)
    }

    pub fn with_dark_prob(&self, gamma: f64) -> Result<Self, ModelError> {
        Self::new(self.n_pixels, self.cascade_threshold, self.efficiency, gamma, self.pulse_freq)
    }
}

/// Photon-number statistics of one pulse.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PhotonStatistics {
    /// Exactly `total_mean` photons per pulse (must be integral).
    FixedPhotonNumber,
    /// Independent Poisson photon numbers per pixel.
    Poissonian,
}

/// Mean photon number delivered to each pixel in one pulse.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IlluminationProfile {
    per_pixel_mean: Vec<f64>,
    total_mean: f64,
    mode: PhotonStatistics,
}

impl IlluminationProfile {
    pub fn new(per_pixel_mean: Vec<f64>, mode: PhotonStatistics) -> Result<Self, ModelError> {
        if per_pixel_mean.is_empty() {
            return Err(ModelError::Domain("illumination profile has no pixels".into()));
        }
        for &mu in &per_pixel_mean {
            if !(mu >= 0.0 && mu.is_finite()) {
                return Err(ModelError::invalid("per_pixel_mean", mu, "must be finite and >= 0"));
            }
        }
        let total_mean = per_pixel_mean.iter().sum::<f64>();
        if mode == PhotonStatistics::FixedPhotonNumber && total_mean.fract() != 0.0 {
            let rounded = total_mean.round();
            if (total_mean - rounded).abs() > 1e-9 * rounded.max(1.0) {
                return Err(ModelError::invalid(
                    "total_mean",
                    total_mean,
                    "fixed photon number must be integral",
                ));
            }
        }
        Ok(Self {
            per_pixel_mean,
            total_mean,
            mode,
        })
    }

    /// `photons` split evenly over the first `k` of `n` pixels.
    pub fn uniform(n: u32, k: u32, photons: f64, mode: PhotonStatistics) -> Result<Self, ModelError> {
        if k == 0 || k > n {
            return Err(ModelError::Domain(format!(
                "illuminated pixel count k = {k} must satisfy 1 <= k <= n = {n}"
            )));
        }
        let share = photons / k as f64;
        let per_pixel = (0..n).map(|i| if i < k { share } else { 0.0 }).collect();
        let mut profile = Self::new(per_pixel, mode)?;
        profile.total_mean = photons;
        Ok(profile)
    }

    pub fn per_pixel_mean(&self) -> &[f64] {
        &self.per_pixel_mean
    }

    pub fn total_mean(&self) -> f64 {
        self.total_mean
    }

    pub fn mode(&self) -> PhotonStatistics {
        self.mode
    }

    pub fn n_pixels(&self) -> usize {
        self.per_pixel_mean.len()
    }

    /// Copy restricted to the given pixel indices, in order.
    pub fn select(&self, indices: &[usize]) -> Result<Self, ModelError> {
        let per_pixel = indices
            .iter()
            .map(|&i| {
                self.per_pixel_mean
                    .get(i)
                    .copied()
                    .ok_or_else(|| ModelError::Domain(format!("pixel index {i} out of range")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(per_pixel, self.mode)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TriggerResult {
    pub probability: f64,
    /// Counts per second: pulse frequency times probability.
    pub rate: f64,
}

impl TriggerResult {
    fn new(model: &DetectorModel, probability: f64) -> Self {
        let probability = probability.clamp(0.0, 1.0);
        Self {
            probability,
            rate: model.pulse_freq * probability,
        }
    }
}

/// Probability of at least one event from a Poisson process with mean
/// `lambda` per window: `1 - exp(-lambda)`.
pub fn dark_probability(lambda: f64) -> Result<f64, ModelError> {
    if lambda.is_nan() || lambda < 0.0 {
        return Err(ModelError::invalid("lambda", lambda, "must be >= 0"));
    }
    Ok(-(-lambda).exp_m1())
}

/// Probability that exactly `g` of `n` pixels are armed by dark events.
pub fn dark_arm_pmf(g: i64, n: i64, gamma: f64) -> Result<f64, ModelError> {
    if n < 0 || g < 0 || g > n {
        return Err(ModelError::Domain(format!("dark count g = {g} outside [0, n = {n}]")));
    }
    check_probability("gamma", gamma)?;
    Ok(binomial_pmf(g as u64, n as u64, gamma))
}

/// Probability that `d` of `mu` photons form hotspots on free pixels, where
/// each photon does so with probability `p_eff`.
///
/// With `g` of `n` evenly illuminated pixels already dark-armed,
/// `p_eff = (n - g) / n * eta`.
pub fn arm_count_pmf(d: i64, mu: i64, p_eff: f64) -> Result<f64, ModelError> {
    if mu < 0 || d < 0 || d > mu {
        return Err(ModelError::Domain(format!("arming count d = {d} outside [0, mu = {mu}]")));
    }
    check_probability("p_eff", p_eff)?;
    Ok(binomial_pmf(d as u64, mu as u64, p_eff))
}

/// Occupancy distribution of balls dropped uniformly into `bins` bins.
///
/// `probs[j]` is the probability that exactly `j` bins are occupied. Each
/// added ball follows the Stirling recurrence, so every update is a convex
/// combination and no cancellation occurs.
#[derive(Debug, Clone)]
pub(crate) struct Occupancy {
    bins: usize,
    probs: Vec<f64>,
}

impl Occupancy {
    pub(crate) fn new(bins: usize) -> Self {
        let mut probs = vec![0.0; bins + 1];
        probs[0] = 1.0;
        Self { bins, probs }
    }

    pub(crate) fn add_ball(&mut self) {
        if self.bins == 0 {
            return;
        }
        let k = self.bins as f64;
        for j in (1..=self.bins).rev() {
            let stay = self.probs[j] * (j as f64 / k);
            let grow = self.probs[j - 1] * ((self.bins - j + 1) as f64 / k);
            self.probs[j] = stay + grow;
        }
        self.probs[0] = 0.0;
    }

    /// Probability that at least `m` bins are occupied.
    pub(crate) fn at_least(&self, m: usize) -> f64 {
        if m == 0 {
            return 1.0;
        }
        if m > self.bins {
            return 0.0;
        }
        self.probs[m..].iter().sum::<f64>().min(1.0)
    }
}

/// Probability that `d` events placed independently and uniformly on `k`
/// pixels occupy at least `m` distinct pixels.
pub fn coverage_probability(d: u64, k: u64, m: u64) -> Result<f64, ModelError> {
    if k == 0 {
        return Err(ModelError::Domain("coverage needs at least one pixel".into()));
    }
    if m == 0 {
        return Ok(1.0);
    }
    if m > d.min(k) {
        return Ok(0.0);
    }
    let mut occ = Occupancy::new(k as usize);
    for _ in 0..d {
        occ.add_ball();
    }
    Ok(occ.at_least(m as usize))
}

/// Probability that photon hotspots cover at least `needed` of `free` free
/// pixels, out of `illuminated` evenly lit pixels, with `mu` photons.
fn photon_coverage(mu: u64, eta: f64, illuminated: u32, free: u32, needed: u32) -> f64 {
    if needed == 0 {
        return 1.0;
    }
    if free < needed || (mu as u128) < needed as u128 || eta == 0.0 {
        return 0.0;
    }
    let p_eff = (eta * free as f64 / illuminated as f64).min(1.0);
    if needed == 1 {
        return one_minus_one_minus_pow(p_eff, mu as f64);
    }
    // Terms far beyond the mean carry no mass at f64 precision.
    let mean = mu as f64 * p_eff;
    let sd = (mean * (1.0 - p_eff)).sqrt();
    let upper = ((mean + 40.0 * sd + 60.0).ceil() as u64).min(mu);
    let mut occ = Occupancy::new(free as usize);
    let mut total = 0.0;
    for d in 0..=upper {
        if d > 0 {
            occ.add_ball();
        }
        if d < needed as u64 {
            continue;
        }
        let cover = occ.at_least(needed as usize);
        if cover > 0.0 {
            total += binomial_pmf(d, mu, p_eff) * cover;
        }
    }
    total.min(1.0)
}

/// Exact probability that a pulse of exactly `mu` photons, spread evenly over
/// the first `k` pixels, triggers the detector.
///
/// Dark events arm each of the `n` pixels independently. A trigger needs at
/// least `b` distinct armed pixels counting both sources; once `b` pixels are
/// dark-armed the pulse triggers regardless of the light.
pub fn trigger_probability(model: &DetectorModel, k: u32, mu: u64) -> Result<TriggerResult, ModelError> {
    let n = model.n_pixels;
    let b = model.cascade_threshold;
    if k == 0 || k > n {
        return Err(ModelError::Domain(format!(
            "illuminated pixel count k = {k} must satisfy 1 <= k <= n = {n}"
        )));
    }
    let gamma = model.dark_prob;
    let eta = model.efficiency;
    let mut total = 0.0;
    for g in 0..=n {
        let weight = binomial_pmf(g as u64, n as u64, gamma);
        if weight == 0.0 {
            continue;
        }
        if g >= b {
            total += weight;
            continue;
        }
        let needed = b - g;
        // Dark-armed pixels are a uniformly random g-subset of all n pixels;
        // g_in of them fall inside the illuminated set.
        let lo = g.saturating_sub(n - k);
        let hi = g.min(k);
        let all = choose(n as u64, g as u64);
        for g_in in lo..=hi {
            let split = choose(k as u64, g_in as u64) * choose((n - k) as u64, (g - g_in) as u64) / all;
            let free = k - g_in;
            total += weight * split * photon_coverage(mu, eta, k, free, needed);
        }
    }
    Ok(TriggerResult::new(model, total))
}

/// Trigger probability for an arbitrary profile under Poissonian pulses.
///
/// Pixel `i` is armed with probability `1 - (1 - gamma) exp(-eta mu_i)`,
/// independently of the others; the number of armed pixels then follows a
/// Poisson-binomial law, accumulated exactly by dynamic programming.
pub fn trigger_probability_uneven(
    model: &DetectorModel,
    illum: &IlluminationProfile,
) -> Result<TriggerResult, ModelError> {
    if illum.n_pixels() != model.n_pixels as usize {
        return Err(ModelError::Domain(format!(
            "profile covers {} pixels but the detector has {}",
            illum.n_pixels(),
            model.n_pixels
        )));
    }
    let b = model.cascade_threshold as usize;
    let log_dark_free = (-model.dark_prob).ln_1p();
    let mut armed = vec![0.0_f64; illum.n_pixels() + 1];
    armed[0] = 1.0;
    for (seen, &mu_i) in illum.per_pixel_mean.iter().enumerate() {
        let a = if model.dark_prob >= 1.0 {
            1.0
        } else {
            -(log_dark_free - model.efficiency * mu_i).exp_m1()
        };
        for j in (0..=seen + 1).rev() {
            let without = armed[j] * (1.0 - a);
            let with = if j > 0 { armed[j - 1] * a } else { 0.0 };
            armed[j] = without + with;
        }
    }
    let probability = armed[b..].iter().sum::<f64>();
    Ok(TriggerResult::new(model, probability))
}

/// Single-pixel count rate with a fixed photon number per pulse,
/// `f (1 - (1 - eta)^mu)`.
pub fn rate_b1(f: f64, mu: f64, eta: f64) -> f64 {
    f * one_minus_one_minus_pow(eta, mu)
}

/// Poissonian approximation of [`rate_b1`], `f (1 - exp(-mu eta))`.
pub fn rate_b1_poisson(f: f64, mu: f64, eta: f64) -> f64 {
    -f * (-mu * eta).exp_m1()
}

/// Two-pixel, two-fold count rate with dark events:
/// `f (1 + (1 - gamma)^2 (1 - eta)^mu - 2 (1 - gamma) (1 - eta/2)^mu)`.
///
/// Evaluated as `A^2 - B` with `A = 1 - (1 - gamma)(1 - eta/2)^mu` and
/// `B = (1 - gamma)^2 ((1 - eta/2)^(2 mu) - (1 - eta)^mu)`; both are formed
/// from `ln_1p`/`exp_m1`, so tiny rates keep their relative precision.
pub fn rate_b2_closed(f: f64, mu: f64, eta: f64, gamma: f64) -> f64 {
    if gamma >= 1.0 {
        return f;
    }
    if mu == 0.0 || eta == 0.0 {
        return f * gamma * gamma;
    }
    let log_c = (-gamma).ln_1p();
    let log_y = mu * (-0.5 * eta).ln_1p();
    let a = -(log_c + log_y).exp_m1();
    // (1 - eta) / (1 - eta/2)^2 = 1 - (eta / (2 - eta))^2
    let r = eta / (2.0 - eta);
    let ratio_log = mu * (-(r * r)).ln_1p();
    let b = (2.0 * (log_c + log_y)).exp() * -ratio_log.exp_m1();
    let p = a * a - b;
    f * p.clamp(0.0, 1.0)
}

/// Single-fold rate on two pixels with dark events,
/// `f (1 - (1 - gamma)^2 (1 - eta)^mu)`.
pub fn rate_b1_dark(f: f64, mu: f64, eta: f64, gamma: f64) -> f64 {
    if gamma >= 1.0 || eta >= 1.0 && mu > 0.0 {
        return f;
    }
    let log_miss = 2.0 * (-gamma).ln_1p() + mu * (-eta).ln_1p();
    -f * log_miss.exp_m1()
}

/// `(1 - eta)^mu`, exposed for callers building their own closed forms.
pub fn photon_miss_probability(mu: f64, eta: f64) -> f64 {
    one_minus_pow(eta, mu)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn model(n: u32, b: u32, eta: f64, gamma: f64) -> DetectorModel {
        DetectorModel::new(n, b, eta, gamma, 1e6).unwrap()
    }

    /// Brute-force occupancy: walk all k^d placements.
    fn enumerate_coverage(d: u32, k: u32, m: u32) -> f64 {
        let total = (k as u64).pow(d);
        let mut hits = 0_u64;
        for code in 0..total {
            let mut c = code;
            let mut seen = 0_u32;
            for _ in 0..d {
                seen |= 1 << (c % k as u64);
                c /= k as u64;
            }
            if seen.count_ones() >= m {
                hits += 1;
            }
        }
        hits as f64 / total as f64
    }

    #[test]
    fn dark_probability_values() {
        assert_eq!(dark_probability(0.0).unwrap(), 0.0);
        assert_relative_eq!(dark_probability(std::f64::consts::LN_2).unwrap(), 0.5, max_relative = 1e-15);
        assert_relative_eq!(
            dark_probability(0.01).unwrap(),
            0.009_950_166_250_831_946,
            max_relative = 1e-14
        );
        assert!(dark_probability(-1e-3).is_err());
        assert!(dark_probability(f64::NAN).is_err());
        assert!(dark_probability(1e3).unwrap() <= 1.0);
    }

    #[test]
    fn dark_arm_pmf_values() {
        assert_eq!(dark_arm_pmf(0, 3, 0.0).unwrap(), 1.0);
        assert_relative_eq!(dark_arm_pmf(1, 2, 0.5).unwrap(), 0.5, max_relative = 1e-15);
        assert_eq!(dark_arm_pmf(2, 2, 1.0).unwrap(), 1.0);
        assert!(dark_arm_pmf(3, 2, 0.5).is_err());
        assert!(dark_arm_pmf(-1, 2, 0.5).is_err());
        assert!(dark_arm_pmf(1, 2, 1.5).is_err());
    }

    #[test]
    fn arm_count_pmf_values() {
        assert_eq!(arm_count_pmf(0, 5, 0.0).unwrap(), 1.0);
        assert_relative_eq!(arm_count_pmf(1, 2, 0.5).unwrap(), 0.5, max_relative = 1e-15);
        assert_eq!(arm_count_pmf(2, 2, 1.0).unwrap(), 1.0);
        assert!(arm_count_pmf(3, 2, 0.5).is_err());
    }

    #[test]
    fn coverage_examples() {
        assert_eq!(coverage_probability(1, 2, 2).unwrap(), 0.0);
        assert_relative_eq!(coverage_probability(3, 2, 2).unwrap(), 0.75, max_relative = 1e-15);
        assert_relative_eq!(coverage_probability(3, 3, 2).unwrap(), 8.0 / 9.0, max_relative = 1e-15);
        assert_eq!(coverage_probability(5, 3, 0).unwrap(), 1.0);
        assert_eq!(coverage_probability(2, 3, 3).unwrap(), 0.0);
        assert!(coverage_probability(2, 0, 1).is_err());
    }

    #[test]
    fn coverage_matches_enumeration() {
        for d in 0..=8 {
            for k in 1..=4 {
                for m in 0..=4 {
                    let exact = enumerate_coverage(d, k, m);
                    let got = coverage_probability(d as u64, k as u64, m as u64).unwrap();
                    assert!((exact - got).abs() <= 1e-12, "d={d} k={k} m={m}: {got} vs {exact}");
                }
            }
        }
    }

    #[test]
    fn two_fold_coverage_on_two_pixels() {
        for d in 1..=30_u64 {
            let expected = 1.0 - 2.0_f64.powi(1 - d as i32);
            assert_relative_eq!(coverage_probability(d, 2, 2).unwrap(), expected, epsilon = 1e-15);
        }
    }

    #[test]
    fn trigger_examples() {
        let m = model(2, 2, 0.3, 0.0);
        assert_eq!(trigger_probability(&m, 2, 1).unwrap().probability, 0.0);

        let m = model(2, 2, 0.5, 0.0);
        let r = trigger_probability(&m, 2, 2).unwrap();
        assert_relative_eq!(r.probability, 0.125, max_relative = 1e-14);
        assert_relative_eq!(r.rate, 1.25e5, max_relative = 1e-14);

        let m = model(3, 1, 7.5e-4, 0.0);
        let r = trigger_probability(&m, 1, 25).unwrap();
        assert_relative_eq!(r.probability, 0.018_582_216_322_537_48, max_relative = 1e-13);

        assert!(trigger_probability(&m, 4, 25).is_err());
        assert!(trigger_probability(&m, 0, 25).is_err());
    }

    #[test]
    fn trigger_with_certain_dark_events() {
        let m = model(3, 2, 0.1, 1.0);
        assert_eq!(trigger_probability(&m, 1, 0).unwrap().probability, 1.0);
    }

    #[test]
    fn trigger_agrees_with_closed_forms() {
        for &(mu, eta, gamma) in &[(1_u64, 0.05, 0.01), (40, 0.02, 0.0), (8000, 1.59e-4, 0.0), (500, 0.01, 0.05)] {
            let m = model(2, 2, eta, gamma);
            let p = trigger_probability(&m, 2, mu).unwrap();
            let closed = rate_b2_closed(1e6, mu as f64, eta, gamma);
            assert_relative_eq!(p.rate, closed, max_relative = 1e-12);

            let m1 = model(2, 1, eta, gamma);
            let p1 = trigger_probability(&m1, 2, mu).unwrap();
            assert_relative_eq!(p1.rate, rate_b1_dark(1e6, mu as f64, eta, gamma), max_relative = 1e-12);
        }
    }

    #[test]
    fn partial_illumination_with_dark_outside() {
        // n=3, b=2, one lit pixel: a trigger needs a dark event on another
        // pixel plus a hotspot on the lit one (or two dark events).
        let (eta, gamma, mu) = (0.2, 0.1, 3_u64);
        let m = model(3, 2, eta, gamma);
        let got = trigger_probability(&m, 1, mu).unwrap().probability;
        let hot = 1.0 - (1.0 - eta).powi(mu as i32);
        // Enumerate dark states of the three pixels directly.
        let mut expected = 0.0;
        for mask in 0..8_u32 {
            let g = mask.count_ones();
            let w = gamma.powi(g as i32) * (1.0 - gamma).powi(3 - g as i32);
            let lit_dark = mask & 1 == 1;
            let armed_if_hot = if lit_dark { g } else { g + 1 };
            let p = if g >= 2 {
                1.0
            } else if armed_if_hot >= 2 {
                hot
            } else {
                0.0
            };
            expected += w * p;
        }
        assert_relative_eq!(got, expected, max_relative = 1e-13);
    }

    #[test]
    fn uneven_examples() {
        let m = model(2, 2, 1e-3, 0.0);
        let zero = IlluminationProfile::new(vec![0.0, 0.0], PhotonStatistics::Poissonian).unwrap();
        assert_eq!(trigger_probability_uneven(&m, &zero).unwrap().probability, 0.0);

        let even = IlluminationProfile::new(vec![1000.0, 1000.0], PhotonStatistics::Poissonian).unwrap();
        let expected = (1.0 - (-1.0_f64).exp()).powi(2);
        assert_relative_eq!(
            trigger_probability_uneven(&m, &even).unwrap().probability,
            expected,
            max_relative = 1e-14
        );
        assert_relative_eq!(expected, 0.399_576_400_893_728_05, max_relative = 1e-15);

        let a = IlluminationProfile::new(vec![300.0, 1700.0], PhotonStatistics::Poissonian).unwrap();
        let b = IlluminationProfile::new(vec![1700.0, 300.0], PhotonStatistics::Poissonian).unwrap();
        assert_eq!(
            trigger_probability_uneven(&m, &a).unwrap().probability,
            trigger_probability_uneven(&m, &b).unwrap().probability
        );

        let short = IlluminationProfile::new(vec![1.0], PhotonStatistics::Poissonian).unwrap();
        assert!(trigger_probability_uneven(&m, &short).is_err());
    }

    #[test]
    fn rate_b1_values() {
        assert_eq!(rate_b1(1e6, 0.0, 0.3), 0.0);
        assert_eq!(rate_b1(1e6, 1.0, 1.0), 1e6);
        assert_relative_eq!(rate_b1(1e6, 25.0, 7.5e-4), 18_582.216_322_537_48, max_relative = 1e-13);
        assert_relative_eq!(
            rate_b1_poisson(1e6, 25.0, 7.5e-4),
            1e6 * (1.0 - (-25.0 * 7.5e-4_f64).exp()),
            max_relative = 1e-13
        );
    }

    #[test]
    fn rate_b2_values() {
        assert_eq!(rate_b2_closed(1e6, 0.0, 0.1, 0.0), 0.0);
        assert_eq!(rate_b2_closed(1e6, 50.0, 0.1, 1.0), 1e6);
        assert_relative_eq!(
            rate_b2_closed(1e6, 8000.0, 1.59e-4, 0.0),
            221_457.309_656_387_23,
            max_relative = 1e-12
        );
        // literal evaluation where it is well conditioned
        let (mu, eta, gamma) = (300.0_f64, 0.01_f64, 0.05_f64);
        let c = 1.0 - gamma;
        let literal = 1.0 + c * c * (1.0 - eta).powf(mu) - 2.0 * c * (1.0 - eta / 2.0).powf(mu);
        assert_relative_eq!(rate_b2_closed(1.0, mu, eta, gamma), literal, max_relative = 1e-12);
    }

    #[test]
    fn rate_b1_dark_values() {
        assert_eq!(rate_b1_dark(1e6, 40.0, 0.02, 0.0), rate_b1(1e6, 40.0, 0.02));
        assert_relative_eq!(rate_b1_dark(1e6, 0.0, 0.3, 0.1), 0.19e6, max_relative = 1e-14);
        assert_eq!(rate_b1_dark(1e6, 10.0, 0.3, 1.0), 1e6);
    }

    #[test]
    fn model_validation() {
        assert!(DetectorModel::new(0, 1, 0.1, 0.0, 1e6).is_err());
        assert!(DetectorModel::new(2, 3, 0.1, 0.0, 1e6).is_err());
        assert!(DetectorModel::new(2, 0, 0.1, 0.0, 1e6).is_err());
        assert!(DetectorModel::new(2, 2, 1.1, 0.0, 1e6).is_err());
        assert!(DetectorModel::new(2, 2, 0.1, -0.1, 1e6).is_err());
        assert!(DetectorModel::new(2, 2, 0.1, 0.0, 0.0).is_err());
        let m = DetectorModel::with_dark_rate(2, 2, 0.1, std::f64::consts::LN_2, 1e6).unwrap();
        assert_relative_eq!(m.dark_prob(), 0.5, max_relative = 1e-15);
    }

    #[test]
    fn profile_validation() {
        assert!(IlluminationProfile::new(vec![], PhotonStatistics::Poissonian).is_err());
        assert!(IlluminationProfile::new(vec![-1.0], PhotonStatistics::Poissonian).is_err());
        assert!(IlluminationProfile::new(vec![0.5, 1.0], PhotonStatistics::FixedPhotonNumber).is_err());
        let u = IlluminationProfile::uniform(4, 2, 10.0, PhotonStatistics::FixedPhotonNumber).unwrap();
        assert_eq!(u.per_pixel_mean(), &[5.0, 5.0, 0.0, 0.0]);
        assert_eq!(u.total_mean(), 10.0);
        assert!(IlluminationProfile::uniform(4, 5, 10.0, PhotonStatistics::Poissonian).is_err());
    }
}
