use serde::{Deserialize, Serialize};

use super::{Dataset, Split};
use crate::error::{CsixError, Result};

/// Lower bound applied to per-class standard deviations so that std ratios
/// used in channel modification stay finite.
pub const STD_FLOOR: f64 = 1e-8;

/// Per-class, per-channel training moments. Rows are zero-based classes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassStats {
    pub mean: Vec<Vec<f64>>,
    pub std: Vec<Vec<f64>>,
}

impl ClassStats {
    pub fn classes(&self) -> usize {
        self.mean.len()
    }

    pub fn channels(&self) -> usize {
        self.mean.first().map_or(0, Vec::len)
    }
}

/// Population mean and standard deviation (denominator N) of every channel
/// for every class, over train-split samples only.
pub fn class_stats(train: &Dataset) -> Result<ClassStats> {
    let m = train.locations();
    let k = train.channels();
    let mut count = vec![0usize; m];
    let mut mean = vec![vec![0.0; k]; m];
    for s in train.samples().iter().filter(|s| s.split == Split::Train) {
        let c = s.class();
        count[c] += 1;
        for (acc, v) in mean[c].iter_mut().zip(&s.channels) {
            *acc += v;
        }
    }
    if let Some(c) = count.iter().position(|&n| n < 2) {
        return Err(CsixError::InvalidInput(format!(
            "location {} has {} training samples; at least 2 are required",
            c + 1,
            count[c]
        )));
    }
    for (row, &n) in mean.iter_mut().zip(&count) {
        row.iter_mut().for_each(|v| *v /= n as f64);
    }
    let mut var = vec![vec![0.0; k]; m];
    for s in train.samples().iter().filter(|s| s.split == Split::Train) {
        let c = s.class();
        for ((acc, v), mu) in var[c].iter_mut().zip(&s.channels).zip(&mean[c]) {
            *acc += (v - mu) * (v - mu);
        }
    }
    let std = var
        .into_iter()
        .zip(&count)
        .map(|(row, &n)| {
            row.into_iter()
                .map(|v| (v / n as f64).sqrt().max(STD_FLOOR))
                .collect()
        })
        .collect();
    Ok(ClassStats { mean, std })
}

/// Pearson correlation between adjacent subcarrier columns (i, i+1) inside
/// every antenna-pair block, averaged over the blocks. Entry i is `None` when
/// a column involved in that pair has zero variance in some block.
pub fn adjacent_subcarrier_correlation(dataset: &Dataset) -> Result<Vec<Option<f64>>> {
    if dataset.len() < 2 {
        return Err(CsixError::InvalidInput(
            "correlation needs at least 2 samples".into(),
        ));
    }
    let s = dataset.subcarriers();
    let a = dataset.antenna_pairs();
    let n = dataset.len() as f64;
    let k = dataset.channels();

    let mut mean = vec![0.0; k];
    for sample in dataset.samples() {
        for (acc, v) in mean.iter_mut().zip(&sample.channels) {
            *acc += v;
        }
    }
    mean.iter_mut().for_each(|v| *v /= n);

    let mut out = Vec::with_capacity(s.saturating_sub(1));
    for i in 0..s.saturating_sub(1) {
        let mut total = 0.0;
        let mut defined = true;
        for block in 0..a {
            let (c0, c1) = (block * s + i, block * s + i + 1);
            let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
            for sample in dataset.samples() {
                let dx = sample.channels[c0] - mean[c0];
                let dy = sample.channels[c1] - mean[c1];
                sxy += dx * dy;
                sxx += dx * dx;
                syy += dy * dy;
            }
            if sxx == 0.0 || syy == 0.0 {
                defined = false;
                break;
            }
            total += (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0);
        }
        out.push(defined.then(|| total / a as f64));
    }
    Ok(out)
}
