//! CSI fingerprint data model.
//!
//! A sample is a K-dimensional vector of linear CSI amplitudes, K = S·A,
//! laid out as S subcarriers for antenna pair 1, then S for pair 2, and so on.

mod csv_io;
mod stats;
mod synth;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{CsixError, Result};

pub use csv_io::{load_csv, load_csv_with, save_csv, CsvOptions};
pub use stats::{adjacent_subcarrier_correlation, class_stats, ClassStats, STD_FLOOR};
pub use synth::{generate_synthetic, SynthConfig};

pub const DEFAULT_SUBCARRIERS: usize = 30;
pub const DEFAULT_ANTENNA_PAIRS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Test => "test",
        })
    }
}

impl FromStr for Split {
    type Err = CsixError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "train" => Ok(Split::Train),
            "test" => Ok(Split::Test),
            other => Err(CsixError::InvalidInput(format!("unknown split tag {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CsiSample {
    pub channels: Vec<f64>,
    /// 1-based location label.
    pub location: usize,
    pub session: u32,
    pub split: Split,
}

impl CsiSample {
    /// Zero-based class index.
    pub fn class(&self) -> usize {
        self.location - 1
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    samples: Vec<CsiSample>,
    subcarriers: usize,
    antenna_pairs: usize,
    locations: usize,
    location_names: Vec<String>,
}

impl Dataset {
    /// Builds a dataset and checks every sample invariant.
    pub fn new(
        samples: Vec<CsiSample>,
        subcarriers: usize,
        antenna_pairs: usize,
        locations: usize,
    ) -> Result<Self> {
        if subcarriers == 0 || antenna_pairs == 0 {
            return Err(CsixError::InvalidInput(
                "subcarrier and antenna-pair counts must be positive".into(),
            ));
        }
        if locations == 0 {
            return Err(CsixError::InvalidInput("at least one location is required".into()));
        }
        let k = subcarriers * antenna_pairs;
        for (i, s) in samples.iter().enumerate() {
            validate_sample(s, k, locations).map_err(|message| CsixError::Row {
                row: i + 1,
                message,
            })?;
        }
        let mut seen = vec![false; locations];
        let mut any_train = false;
        for s in samples.iter().filter(|s| s.split == Split::Train) {
            any_train = true;
            seen[s.location - 1] = true;
        }
        if any_train {
            if let Some(missing) = seen.iter().position(|&b| !b) {
                return Err(CsixError::InvalidInput(format!(
                    "train split has no samples for location {}",
                    missing + 1
                )));
            }
        }
        Ok(Dataset {
            samples,
            subcarriers,
            antenna_pairs,
            locations,
            location_names: (1..=locations).map(|m| format!("p{m}")).collect(),
        })
    }

    pub fn samples(&self) -> &[CsiSample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Channel count K.
    pub fn channels(&self) -> usize {
        self.subcarriers * self.antenna_pairs
    }

    pub fn subcarriers(&self) -> usize {
        self.subcarriers
    }

    pub fn antenna_pairs(&self) -> usize {
        self.antenna_pairs
    }

    /// Number of location classes M.
    pub fn locations(&self) -> usize {
        self.locations
    }

    pub fn location_names(&self) -> &[String] {
        &self.location_names
    }

    /// Samples with the given 1-based location.
    pub fn of_location(&self, location: usize) -> impl Iterator<Item = &CsiSample> {
        self.samples.iter().filter(move |s| s.location == location)
    }

    pub fn labels(&self) -> Vec<usize> {
        self.samples.iter().map(CsiSample::class).collect()
    }

    /// Concatenates two datasets with identical geometry (e.g. train + test).
    pub fn concat(&self, other: &Dataset) -> Result<Dataset> {
        if self.channels() != other.channels() {
            return Err(CsixError::DimensionMismatch {
                expected: self.channels(),
                got: other.channels(),
            });
        }
        let mut samples = self.samples.clone();
        samples.extend_from_slice(&other.samples);
        Dataset::new(
            samples,
            self.subcarriers,
            self.antenna_pairs,
            self.locations.max(other.locations),
        )
    }

    /// Rescales every channel column to [0, 1] using this dataset's min/max.
    /// Optional preprocessing; the default pipeline trains on raw amplitudes.
    pub fn min_max_scaled(&self) -> Dataset {
        MinMax::fit(self)
            .apply(self)
            .expect("scaler fitted on the same dataset")
    }
}

/// Per-channel min-max scaler. Values map to `(v - min) / (max - min)`;
/// constant columns map to 0 and values below the fitted minimum clamp to 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinMax {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl MinMax {
    pub fn fit(data: &Dataset) -> MinMax {
        let k = data.channels();
        let mut min = vec![f64::INFINITY; k];
        let mut max = vec![f64::NEG_INFINITY; k];
        for s in &data.samples {
            for (c, &v) in s.channels.iter().enumerate() {
                min[c] = min[c].min(v);
                max[c] = max[c].max(v);
            }
        }
        if data.is_empty() {
            min.fill(0.0);
            max.fill(0.0);
        }
        MinMax { min, max }
    }

    pub fn channels(&self) -> usize {
        self.min.len()
    }

    pub fn apply_row(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.channels() {
            return Err(CsixError::DimensionMismatch {
                expected: self.channels(),
                got: x.len(),
            });
        }
        Ok(x.iter()
            .zip(self.min.iter().zip(&self.max))
            .map(|(&v, (&lo, &hi))| {
                let span = hi - lo;
                if span > 0.0 {
                    ((v - lo) / span).max(0.0)
                } else {
                    0.0
                }
            })
            .collect())
    }

    pub fn apply(&self, data: &Dataset) -> Result<Dataset> {
        let samples = data
            .samples
            .iter()
            .map(|s| {
                Ok(CsiSample {
                    channels: self.apply_row(&s.channels)?,
                    ..s.clone()
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Dataset {
            samples,
            ..data.clone()
        })
    }
}

fn validate_sample(s: &CsiSample, k: usize, locations: usize) -> std::result::Result<(), String> {
    if s.channels.len() != k {
        return Err(format!("expected {k} channels, got {}", s.channels.len()));
    }
    if let Some(c) = s.channels.iter().position(|v| !v.is_finite() || *v < 0.0) {
        return Err(format!(
            "channel {} amplitude {} is negative or non-finite",
            c + 1,
            s.channels[c]
        ));
    }
    if s.location == 0 || s.location > locations {
        return Err(format!("location {} outside 1..={locations}", s.location));
    }
    Ok(())
}

/// Splits K into (S, A) for a bare channel count read from a file header.
pub(crate) fn infer_geometry(k: usize) -> (usize, usize) {
    if k % DEFAULT_ANTENNA_PAIRS == 0 {
        (k / DEFAULT_ANTENNA_PAIRS, DEFAULT_ANTENNA_PAIRS)
    } else {
        (k, 1)
    }
}
