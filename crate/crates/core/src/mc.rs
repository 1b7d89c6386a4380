//! Pulse-by-pulse Monte Carlo of the detector, used as an independent check
//! on the analytic trigger probabilities.
//!
//! Pulses are split into fixed-size batches. Batch `i` draws from the ChaCha8
//! stream `i` of the master seed, so the estimate does not depend on how many
//! worker threads share the batches.

use std::collections::BTreeSet;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::ModelError;
use crate::trigger::{DetectorModel, IlluminationProfile, PhotonStatistics};

/// Pulses simulated per RNG stream.
pub const BATCH_PULSES: u64 = 1 << 16;

/// Everything that happened in one simulated pulse window.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PulseOutcome {
    pub armed_pixels: BTreeSet<usize>,
    pub triggered: bool,
    /// Landing pixel of each photon and whether it formed a hotspot.
    pub photon_landings: Vec<(usize, bool)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub probability: f64,
    pub std_error: f64,
    pub pulses: u64,
    pub seed: u64,
}

impl McEstimate {
    fn from_counts(hits: u64, pulses: u64, seed: u64) -> Self {
        let p = hits as f64 / pulses as f64;
        Self {
            probability: p,
            std_error: (p * (1.0 - p) / pulses as f64).sqrt(),
            pulses,
            seed,
        }
    }
}

/// Precomputed per-configuration sampling tables.
#[derive(Debug, Clone)]
struct PulseSampler {
    n: usize,
    b: usize,
    eta: f64,
    gamma: f64,
    mode: PhotonStatistics,
    photons: u64,
    cumulative: Vec<f64>,
    poisson: Vec<Option<Poisson<f64>>>,
}

impl PulseSampler {
    fn new(model: &DetectorModel, illum: &IlluminationProfile) -> Result<Self, ModelError> {
        let n = model.n_pixels() as usize;
        if illum.n_pixels() != n {
            return Err(ModelError::Domain(format!(
                "profile covers {} pixels but the detector has {n}",
                illum.n_pixels()
            )));
        }
        let means = illum.per_pixel_mean();
        let total: f64 = means.iter().sum();
        let mut acc = 0.0;
        let cumulative = means
            .iter()
            .map(|&m| {
                acc += if total > 0.0 { m / total } else { 0.0 };
                acc
            })
            .collect();
        let poisson = means
            .iter()
            .map(|&m| {
                if m > 0.0 {
                    Poisson::new(m)
                        .map(Some)
                        .map_err(|e| ModelError::Domain(format!("poisson mean {m}: {e}")))
                } else {
                    Ok(None)
                }
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self {
            n,
            b: model.cascade_threshold() as usize,
            eta: model.efficiency(),
            gamma: model.dark_prob(),
            mode: illum.mode(),
            photons: illum.total_mean().round() as u64,
            cumulative,
            poisson,
        })
    }

    fn land<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        self.cumulative
            .iter()
            .position(|&c| u < c)
            .unwrap_or_else(|| {
                // u landed on the rounding sliver above the last cumulative
                // weight; give it to the last illuminated pixel.
                self.cumulative
                    .iter()
                    .rposition(|&c| c > 0.0)
                    .unwrap_or(self.n - 1)
            })
    }

    /// Simulates one pulse into `armed`, optionally logging photon landings.
    fn sample<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
        armed: &mut [bool],
        mut landings: Option<&mut Vec<(usize, bool)>>,
    ) -> bool {
        for slot in armed.iter_mut() {
            *slot = rng.random_bool(self.gamma);
        }
        match self.mode {
            PhotonStatistics::FixedPhotonNumber => {
                for _ in 0..self.photons {
                    let pixel = self.land(rng);
                    let hot = rng.random_bool(self.eta);
                    if hot {
                        armed[pixel] = true;
                    }
                    if let Some(log) = landings.as_deref_mut() {
                        log.push((pixel, hot));
                    }
                }
            }
            PhotonStatistics::Poissonian => {
                for (pixel, dist) in self.poisson.iter().enumerate() {
                    let Some(dist) = dist else { continue };
                    let count = dist.sample(rng) as u64;
                    for _ in 0..count {
                        let hot = rng.random_bool(self.eta);
                        if hot {
                            armed[pixel] = true;
                        }
                        if let Some(log) = landings.as_deref_mut() {
                            log.push((pixel, hot));
                        }
                    }
                }
            }
        }
        armed.iter().filter(|&&a| a).count() >= self.b
    }
}

/// Simulates a single pulse window.
///
/// Each pixel dark-arms with the model's dark probability. In fixed-number
/// mode exactly `total_mean` photons land on pixels in proportion to the
/// profile; in Poissonian mode each pixel receives a Poisson number of
/// photons. Every photon forms a hotspot with the model efficiency.
pub fn simulate_pulse<R: Rng + ?Sized>(
    model: &DetectorModel,
    illum: &IlluminationProfile,
    rng: &mut R,
) -> Result<PulseOutcome, ModelError> {
    let sampler = PulseSampler::new(model, illum)?;
    let mut armed = vec![false; sampler.n];
    let mut landings = Vec::new();
    let triggered = sampler.sample(rng, &mut armed, Some(&mut landings));
    Ok(PulseOutcome {
        armed_pixels: armed
            .iter()
            .enumerate()
            .filter_map(|(i, &a)| a.then_some(i))
            .collect(),
        triggered,
        photon_landings: landings,
    })
}

/// RNG for batch `stream` of a run seeded with `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Fraction of `pulses` simulated pulses that trigger.
///
/// Batches run in parallel on the current rayon pool; the result depends
/// only on the inputs and `seed`.
pub fn estimate_trigger_probability(
    model: &DetectorModel,
    illum: &IlluminationProfile,
    pulses: u64,
    seed: u64,
) -> Result<McEstimate, ModelError> {
    if pulses == 0 {
        return Err(ModelError::Domain("pulse count must be at least 1".into()));
    }
    let sampler = PulseSampler::new(model, illum)?;
    let batches = pulses.div_ceil(BATCH_PULSES);
    let hits: u64 = (0..batches)
        .into_par_iter()
        .map(|batch| {
            let mut rng = stream_rng(seed, batch);
            let start = batch * BATCH_PULSES;
            let len = BATCH_PULSES.min(pulses - start);
            let mut armed = vec![false; sampler.n];
            (0..len)
                .filter(|_| sampler.sample(&mut rng, &mut armed, None))
                .count() as u64
        })
        .sum();
    Ok(McEstimate::from_counts(hits, pulses, seed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trigger::trigger_probability;

    fn uniform(n: u32, k: u32, mu: f64) -> IlluminationProfile {
        IlluminationProfile::uniform(n, k, mu, PhotonStatistics::FixedPhotonNumber).unwrap()
    }

    #[test]
    fn dark_and_empty_pulse_never_triggers() {
        let m = DetectorModel::new(2, 1, 0.5, 0.0, 1e6).unwrap();
        let mut rng = stream_rng(1, 0);
        for _ in 0..100 {
            let out = simulate_pulse(&m, &uniform(2, 2, 0.0), &mut rng).unwrap();
            assert!(!out.triggered);
            assert!(out.armed_pixels.is_empty());
            assert!(out.photon_landings.is_empty());
        }
    }

    #[test]
    fn certain_hotspot_triggers_single_fold() {
        let m = DetectorModel::new(3, 1, 1.0, 0.0, 1e6).unwrap();
        let mut rng = stream_rng(2, 0);
        let out = simulate_pulse(&m, &uniform(3, 1, 1.0), &mut rng).unwrap();
        assert!(out.triggered);
        assert_eq!(out.photon_landings, vec![(0, true)]);
        assert_eq!(out.armed_pixels.iter().copied().collect::<Vec<_>>(), vec![0]);
    }

    #[test]
    fn outcome_is_reproducible() {
        let m = DetectorModel::new(4, 2, 0.3, 0.05, 1e6).unwrap();
        let illum = uniform(4, 3, 12.0);
        let a = simulate_pulse(&m, &illum, &mut stream_rng(99, 3)).unwrap();
        let b = simulate_pulse(&m, &illum, &mut stream_rng(99, 3)).unwrap();
        assert_eq!(serde_json::to_vec(&a).unwrap(), serde_json::to_vec(&b).unwrap());
    }

    #[test]
    fn outcome_invariants_hold() {
        let m = DetectorModel::new(4, 2, 0.3, 0.1, 1e6).unwrap();
        let illum = uniform(4, 2, 6.0);
        let mut rng = stream_rng(5, 0);
        for _ in 0..500 {
            let out = simulate_pulse(&m, &illum, &mut rng).unwrap();
            assert_eq!(out.triggered, out.armed_pixels.len() >= 2);
            assert!(out.armed_pixels.iter().all(|&p| p < 4));
            assert_eq!(out.photon_landings.len(), 6);
            // photons only land on the two lit pixels
            assert!(out.photon_landings.iter().all(|&(p, _)| p < 2));
            for &(p, hot) in &out.photon_landings {
                if hot {
                    assert!(out.armed_pixels.contains(&p));
                }
            }
        }
    }

    #[test]
    fn degenerate_estimates_are_exact() {
        let m = DetectorModel::new(3, 2, 0.0, 0.0, 1e6).unwrap();
        let est = estimate_trigger_probability(&m, &uniform(3, 3, 20.0), 10_000, 1).unwrap();
        assert_eq!(est.probability, 0.0);
        assert_eq!(est.std_error, 0.0);

        let m = DetectorModel::new(3, 3, 0.2, 1.0, 1e6).unwrap();
        let est = estimate_trigger_probability(&m, &uniform(3, 3, 20.0), 10_000, 1).unwrap();
        assert_eq!(est.probability, 1.0);
    }

    #[test]
    fn zero_pulses_rejected() {
        let m = DetectorModel::new(2, 2, 0.5, 0.0, 1e6).unwrap();
        assert!(estimate_trigger_probability(&m, &uniform(2, 2, 2.0), 0, 1).is_err());
    }

    #[test]
    fn two_fold_two_pixel_estimate() {
        let m = DetectorModel::new(2, 2, 0.5, 0.0, 1e6).unwrap();
        let est = estimate_trigger_probability(&m, &uniform(2, 2, 2.0), 1_000_000, 11).unwrap();
        let exact = trigger_probability(&m, 2, 2).unwrap().probability;
        assert_eq!(exact, 0.125);
        assert!((est.probability - exact).abs() < 5.0 * est.std_error, "{est:?}");
    }

    #[test]
    fn thread_count_does_not_change_estimate() {
        let m = DetectorModel::new(3, 2, 0.2, 0.02, 1e6).unwrap();
        let illum = uniform(3, 3, 9.0);
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| estimate_trigger_probability(&m, &illum, 300_001, 42).unwrap())
        };
        assert_eq!(run(1), run(3));
    }

    #[test]
    fn poissonian_mode_matches_uneven_engine() {
        use crate::trigger::trigger_probability_uneven;
        let m = DetectorModel::new(3, 2, 0.05, 0.01, 1e6).unwrap();
        let illum = IlluminationProfile::new(vec![4.0, 20.0, 9.0], PhotonStatistics::Poissonian).unwrap();
        let est = estimate_trigger_probability(&m, &illum, 400_000, 3).unwrap();
        let exact = trigger_probability_uneven(&m, &illum).unwrap().probability;
        assert!((est.probability - exact).abs() < 5.0 * est.std_error.max(1e-6), "{est:?} vs {exact}");
    }
}
