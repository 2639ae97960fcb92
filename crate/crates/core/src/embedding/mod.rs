//! 2D projections of inputs or hidden activations, and cluster scoring.

mod silhouette;
mod tsne;

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, Split};
use crate::error::{CsixError, Result};
use crate::mlp::{forward, NetworkParams};

pub use silhouette::{silhouette, silhouette_samples};
pub use tsne::{joint_affinities, kl_divergence, tsne, Affinity, TsneConfig, TsneResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Embedding2D {
    pub points: Vec<[f64; 2]>,
    /// Zero-based class of each point.
    pub labels: Vec<usize>,
    pub splits: Vec<Split>,
    pub initial_kl: f64,
    pub final_kl: f64,
}

impl Embedding2D {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Average silhouette over the points of one split, computed among those points only.
    pub fn silhouette_on(&self, split: Split) -> Result<f64> {
        let (pts, labels): (Vec<[f64; 2]>, Vec<usize>) = self
            .points
            .iter()
            .zip(&self.labels)
            .zip(&self.splits)
            .filter(|(_, s)| **s == split)
            .map(|((p, l), _)| (*p, *l))
            .unzip();
        silhouette(&pts, &labels)
    }

    /// `x,y,label,split` with 1-based labels.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,y,label,split\n");
        for ((p, l), s) in self.points.iter().zip(&self.labels).zip(&self.splits) {
            out.push_str(&format!("{},{},{},{}\n", p[0], p[1], l + 1, s));
        }
        out
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_csv()).map_err(|e| CsixError::io(path, e))
    }
}

/// Last-hidden-layer activations of every sample, one row per sample.
pub fn extract_last_hidden(params: &NetworkParams, dataset: &Dataset) -> Result<Vec<Vec<f64>>> {
    if dataset.channels() != params.input_dim() {
        return Err(CsixError::DimensionMismatch {
            expected: params.input_dim(),
            got: dataset.channels(),
        });
    }
    dataset
        .samples()
        .iter()
        .map(|s| Ok(forward(params, &s.channels)?.last_hidden().to_vec()))
        .collect()
}

/// Raw channel vectors as rows.
pub fn raw_inputs(dataset: &Dataset) -> Vec<Vec<f64>> {
    dataset.samples().iter().map(|s| s.channels.clone()).collect()
}

/// Runs t-SNE on `rows` and attaches the dataset's labels and split tags.
pub fn embed(rows: &[Vec<f64>], dataset: &Dataset, config: &TsneConfig) -> Result<Embedding2D> {
    if rows.len() != dataset.len() {
        return Err(CsixError::DimensionMismatch {
            expected: dataset.len(),
            got: rows.len(),
        });
    }
    let result = tsne(rows, config)?;
    Ok(Embedding2D {
        points: result.points,
        labels: dataset.labels(),
        splits: dataset.samples().iter().map(|s| s.split).collect(),
        initial_kl: result.initial_kl,
        final_kl: result.final_kl,
    })
}
