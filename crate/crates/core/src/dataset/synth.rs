//! Synthetic multipath CSI standing in for measured fingerprints.
//!
//! Every antenna pair sees a line-of-sight path shared by all locations plus a
//! location-specific cluster of scattered paths. Path delays follow a Poisson
//! arrival process, so more paths means a longer delay spread and a more
//! frequency-selective amplitude response.

use std::f64::consts::PI;
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Normal};
use serde::{Deserialize, Serialize};

use super::{CsiSample, Dataset, Split};
use crate::error::{CsixError, Result};

/// Grouped subcarrier spacing: 312.5 kHz OFDM spacing, reported in groups of 4.
const SUBCARRIER_SPACING_HZ: f64 = 4.0 * 312.5e3;
const LOS_DELAY_MAX_S: f64 = 20e-9;
const MEAN_INTER_ARRIVAL_S: f64 = 25e-9;
const POWER_DECAY_S: f64 = 250e-9;
/// Line-of-sight power relative to the scattered cluster (about 9 dB). The
/// transceivers are fixed, so the direct path is common to every location.
const LOS_POWER: f64 = 8.0;
const SCATTER_POWER: f64 = 1.0;
/// Expected squared amplitude of a channel before drift and noise.
const MEAN_POWER: f64 = 2.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    /// Number of locations M.
    pub locations: usize,
    /// Subcarriers per antenna pair S.
    pub subcarriers: usize,
    /// Antenna pairs A.
    pub antenna_pairs: usize,
    pub paths_per_location: usize,
    pub train_per_loc: usize,
    pub test_per_loc: usize,
    pub sessions_train: usize,
    pub sessions_test: usize,
    /// Standard deviation of the per-session log-amplitude drift.
    pub session_drift_sigma: f64,
    /// Standard deviation of the additive per-sample noise.
    pub noise_sigma: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            locations: 8,
            subcarriers: 30,
            antenna_pairs: 4,
            paths_per_location: 6,
            train_per_loc: 100,
            test_per_loc: 50,
            sessions_train: 4,
            sessions_test: 2,
            session_drift_sigma: 0.1,
            noise_sigma: 0.05,
            seed: 42,
        }
    }
}

impl SynthConfig {
    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| CsixError::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: SynthConfig =
            serde_json::from_str(text).map_err(|e| CsixError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("locations", self.locations),
            ("subcarriers", self.subcarriers),
            ("antenna_pairs", self.antenna_pairs),
            ("paths_per_location", self.paths_per_location),
            ("train_per_loc", self.train_per_loc),
            ("test_per_loc", self.test_per_loc),
            ("sessions_train", self.sessions_train),
            ("sessions_test", self.sessions_test),
        ];
        if let Some((name, _)) = counts.iter().find(|(_, v)| *v == 0) {
            return Err(CsixError::Config(format!("{name} must be at least 1")));
        }
        for (name, v) in [
            ("session_drift_sigma", self.session_drift_sigma),
            ("noise_sigma", self.noise_sigma),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(CsixError::Config(format!("{name} must be a finite value >= 0")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
struct Ray {
    re: f64,
    im: f64,
    delay: f64,
}

fn amplitude_response(paths: &[Ray], freq: f64) -> f64 {
    let (mut re, mut im) = (0.0, 0.0);
    for p in paths {
        // g * exp(-j 2 pi f tau)
        let (sin, cos) = (-2.0 * PI * freq * p.delay).sin_cos();
        re += p.re * cos - p.im * sin;
        im += p.re * sin + p.im * cos;
    }
    re.hypot(im)
}

fn random_phase_gain(rng: &mut ChaCha8Rng, amplitude: f64) -> (f64, f64) {
    let phase = rng.gen::<f64>() * 2.0 * PI;
    (amplitude * phase.cos(), amplitude * phase.sin())
}

/// Generates a deterministic (train, test) pair from `config`.
///
/// Train samples use sessions `0..sessions_train`, test samples the following
/// `sessions_test` ids. Each (session, location) visit scales the noiseless
/// response by a log-normal factor; each sample then gets additive Gaussian
/// noise and is clamped at zero.
pub fn generate_synthetic(config: &SynthConfig) -> Result<(Dataset, Dataset)> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let (m, s, a) = (config.locations, config.subcarriers, config.antenna_pairs);
    let freqs: Vec<f64> = (1..=s).map(|i| i as f64 * SUBCARRIER_SPACING_HZ).collect();
    let arrival = Exp::new(1.0 / MEAN_INTER_ARRIVAL_S).expect("positive rate");
    let unit = Normal::new(0.0, 1.0).expect("unit normal");

    let los: Vec<Ray> = (0..a)
        .map(|_| {
            let (re, im) = random_phase_gain(&mut rng, LOS_POWER.sqrt());
            Ray {
                re,
                im,
                delay: rng.gen::<f64>() * LOS_DELAY_MAX_S,
            }
        })
        .collect();

    // base[m][k]: noiseless amplitude for location m, channel k
    let mut base = vec![vec![0.0; s * a]; m];
    for row in base.iter_mut() {
        for (pair, los_path) in los.iter().enumerate() {
            let mut delay = los_path.delay;
            let mut paths = Vec::with_capacity(config.paths_per_location + 1);
            let mut weights = Vec::with_capacity(config.paths_per_location);
            for _ in 0..config.paths_per_location {
                delay += arrival.sample(&mut rng);
                let w = (-(delay - los_path.delay) / POWER_DECAY_S).exp();
                let re: f64 = unit.sample(&mut rng);
                let im: f64 = unit.sample(&mut rng);
                paths.push(Ray { re, im, delay });
                weights.push(w);
            }
            let norm: f64 = weights.iter().sum();
            for (p, w) in paths.iter_mut().zip(&weights) {
                // complex Gaussian with E|g|^2 = SCATTER_POWER * w / norm
                let scale = (SCATTER_POWER * w / norm / 2.0).sqrt();
                p.re *= scale;
                p.im *= scale;
            }
            paths.push(*los_path);
            let gain = (MEAN_POWER / (LOS_POWER + SCATTER_POWER)).sqrt();
            for (i, &f) in freqs.iter().enumerate() {
                row[pair * s + i] = gain * amplitude_response(&paths, f);
            }
        }
    }

    let drift_dist = Normal::new(0.0, config.session_drift_sigma).map_err(|e| CsixError::Config(e.to_string()))?;
    let noise_dist = Normal::new(0.0, config.noise_sigma).map_err(|e| CsixError::Config(e.to_string()))?;

    let mut make_split = |split: Split, first_session: usize, sessions: usize, per_loc: usize| {
        let drift: Vec<Vec<f64>> = (0..sessions)
            .map(|_| (0..m).map(|_| drift_dist.sample(&mut rng).exp()).collect())
            .collect();
        let mut samples = Vec::with_capacity(m * per_loc);
        for (loc, response) in base.iter().enumerate() {
            for j in 0..per_loc {
                let session = j % sessions;
                let factor = drift[session][loc];
                let channels = response
                    .iter()
                    .map(|&h| (factor * h + noise_dist.sample(&mut rng)).max(0.0))
                    .collect();
                samples.push(CsiSample {
                    channels,
                    location: loc + 1,
                    session: (first_session + session) as u32,
                    split,
                });
            }
        }
        Dataset::new(samples, s, a, m)
    };

    let train = make_split(Split::Train, 0, config.sessions_train, config.train_per_loc)?;
    let test = make_split(
        Split::Test,
        config.sessions_train,
        config.sessions_test,
        config.test_per_loc,
    )?;
    Ok((train, test))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SynthConfig {
        SynthConfig {
            locations: 3,
            train_per_loc: 6,
            test_per_loc: 4,
            ..SynthConfig::default()
        }
    }

    #[test]
    fn deterministic() {
        let a = generate_synthetic(&small()).unwrap();
        let b = generate_synthetic(&small()).unwrap();
        assert_eq!(a, b);
        let other = generate_synthetic(&SynthConfig { seed: 7, ..small() }).unwrap();
        assert_ne!(a.0, other.0);
    }

    #[test]
    fn noiseless_samples_coincide() {
        let cfg = SynthConfig {
            noise_sigma: 0.0,
            session_drift_sigma: 0.0,
            ..small()
        };
        let (train, _) = generate_synthetic(&cfg).unwrap();
        let loc1: Vec<_> = train.of_location(1).collect();
        assert_eq!(loc1[0].channels, loc1[1].channels);
        assert_eq!(loc1[0].channels, loc1[3].channels);
    }

    #[test]
    fn sessions_are_disjoint_and_amplitudes_valid() {
        let (train, test) = generate_synthetic(&small()).unwrap();
        let max_train = train.samples().iter().map(|s| s.session).max().unwrap();
        let min_test = test.samples().iter().map(|s| s.session).min().unwrap();
        assert!(max_train < min_test);
        for s in train.samples().iter().chain(test.samples()) {
            assert!(s.channels.iter().all(|v| v.is_finite() && *v >= 0.0));
        }
        assert_eq!(train.len(), 18);
        assert_eq!(test.len(), 12);
        assert!(test.samples().iter().all(|s| s.split == Split::Test));
    }

    #[test]
    fn config_json_rejects_unknown_keys() {
        assert!(SynthConfig::from_json(r#"{"locations": 4}"#).is_ok());
        assert!(SynthConfig::from_json(r#"{"locationz": 4}"#).is_err());
        assert!(SynthConfig::from_json(r#"{"train_per_loc": 0}"#).is_err());
        assert!(SynthConfig::from_json(r#"{"noise_sigma": -1.0}"#).is_err());
    }
}
