//! Exact t-SNE.
//!
//! High-dimensional affinities come from Gaussian conditionals whose
//! bandwidths are calibrated per point to a target perplexity and then
//! symmetrized; low-dimensional affinities use a Student-t kernel with one
//! degree of freedom. KL(P || Q) is minimized by gradient descent with
//! momentum, per-coordinate gains, and early exaggeration.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{CsixError, Result};

const BINARY_SEARCH_STEPS: usize = 200;
const ENTROPY_TOLERANCE: f64 = 1e-5;
const P_FLOOR: f64 = 1e-12;
const MIN_GAIN: f64 = 0.01;
const INIT_STD: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Affinity {
    /// Per-point Gaussian bandwidths calibrated to the perplexity, symmetrized.
    #[default]
    Perplexity,
    /// One global kernel `exp(-||x_i - x_j||^2)` normalized over all pairs.
    FixedBandwidth,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TsneConfig {
    pub perplexity: f64,
    pub iterations: usize,
    pub learning_rate: f64,
    pub initial_momentum: f64,
    pub final_momentum: f64,
    pub momentum_switch: usize,
    pub exaggeration: f64,
    pub exaggeration_iters: usize,
    pub affinity: Affinity,
    pub seed: u64,
}

impl Default for TsneConfig {
    fn default() -> Self {
        TsneConfig {
            perplexity: 30.0,
            iterations: 1000,
            learning_rate: 200.0,
            initial_momentum: 0.5,
            final_momentum: 0.8,
            momentum_switch: 250,
            exaggeration: 12.0,
            exaggeration_iters: 250,
            affinity: Affinity::Perplexity,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TsneResult {
    pub points: Vec<[f64; 2]>,
    /// KL divergence at the random initialization.
    pub initial_kl: f64,
    pub final_kl: f64,
}

fn squared_distances(data: &[Vec<f64>]) -> Vec<f64> {
    let n = data.len();
    let mut d = vec![0.0; n * n];
    d.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
        for (j, out) in row.iter_mut().enumerate() {
            if i != j {
                *out = data[i]
                    .iter()
                    .zip(&data[j])
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum();
            }
        }
    });
    d
}

/// Fills `out` with row `i` of the conditionals at precision `beta`; returns (normalizer, entropy).
fn conditional_row(d: &[f64], i: usize, beta: f64, shift: f64, out: &mut [f64]) -> (f64, f64) {
    let mut sum = 0.0;
    let mut weighted = 0.0;
    for (j, (p, &dij)) in out.iter_mut().zip(d).enumerate() {
        if j == i {
            *p = 0.0;
            continue;
        }
        let v = (-(dij - shift) * beta).exp();
        *p = v;
        sum += v;
        weighted += (dij - shift) * v;
    }
    if sum > 0.0 {
        out.iter_mut().for_each(|p| *p /= sum);
    }
    // H = ln(sum) + beta * E[d - shift]
    let entropy = sum.ln() + beta * weighted / sum;
    (sum, entropy)
}

/// Conditional distribution p_{j|i} of row `i` calibrated to `perplexity`.
fn calibrate_row(row: &[f64], i: usize, perplexity: f64) -> Result<Vec<f64>> {
    let target = perplexity.ln();
    let shift = row
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != i)
        .map(|(_, &v)| v)
        .fold(f64::INFINITY, f64::min);
    let mut p = vec![0.0; row.len()];
    let (mut beta, mut lo, mut hi) = (1.0, 0.0, f64::INFINITY);
    let spread = row.iter().fold(0.0f64, |m, &v| m.max(v - shift));
    if spread > 0.0 {
        beta = 1.0 / spread;
    }
    for _ in 0..BINARY_SEARCH_STEPS {
        let (_, h) = conditional_row(row, i, beta, shift, &mut p);
        if !h.is_finite() {
            break;
        }
        let diff = h - target;
        if diff.abs() < ENTROPY_TOLERANCE {
            break;
        }
        if diff > 0.0 {
            lo = beta;
            beta = if hi.is_finite() { 0.5 * (beta + hi) } else { beta * 2.0 };
        } else {
            hi = beta;
            beta = 0.5 * (beta + lo);
        }
    }
    let (sum, _) = conditional_row(row, i, beta, shift, &mut p);
    if !(sum > 0.0) || p.iter().any(|v| !v.is_finite()) {
        return Err(CsixError::Numeric(format!(
            "perplexity calibration failed for point {i}"
        )));
    }
    Ok(p)
}

fn perplexity_affinities(d: &[f64], n: usize, perplexity: f64) -> Result<Vec<f64>> {
    let rows: Vec<Result<Vec<f64>>> = (0..n)
        .into_par_iter()
        .map(|i| calibrate_row(&d[i * n..(i + 1) * n], i, perplexity))
        .collect();
    let mut cond = Vec::with_capacity(n * n);
    for r in rows {
        cond.extend(r?);
    }
    let mut p = vec![0.0; n * n];
    let norm = 2.0 * n as f64;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                p[i * n + j] = ((cond[i * n + j] + cond[j * n + i]) / norm).max(P_FLOOR);
            }
        }
    }
    Ok(p)
}

fn fixed_bandwidth_affinities(d: &[f64], n: usize) -> Vec<f64> {
    let shift = (0..n)
        .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
        .map(|(i, j)| d[i * n + j])
        .fold(f64::INFINITY, f64::min);
    let mut p = vec![0.0; n * n];
    let mut sum = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let v = (-(d[i * n + j] - shift)).exp();
                p[i * n + j] = v;
                sum += v;
            }
        }
    }
    for i in 0..n {
        for j in 0..n {
            if i != j {
                p[i * n + j] = (p[i * n + j] / sum).max(P_FLOOR);
            }
        }
    }
    p
}

/// Student-t kernel values `1 / (1 + ||y_i - y_j||^2)` (zero diagonal) and their total.
fn student_kernel(y: &[[f64; 2]]) -> (Vec<f64>, f64) {
    let n = y.len();
    let mut num = vec![0.0; n * n];
    num.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
        for (j, v) in row.iter_mut().enumerate() {
            if i != j {
                let dx = y[i][0] - y[j][0];
                let dy = y[i][1] - y[j][1];
                *v = 1.0 / (1.0 + dx * dx + dy * dy);
            }
        }
    });
    let total = num.chunks(n).map(|r| r.iter().sum::<f64>()).sum();
    (num, total)
}

/// KL(P || Q) of an embedding against joint affinities `p` (row-major N x N).
pub fn kl_divergence(p: &[f64], y: &[[f64; 2]]) -> f64 {
    let (num, total) = student_kernel(y);
    p.iter()
        .zip(&num)
        .filter(|(pij, _)| **pij > 0.0)
        .map(|(pij, nij)| {
            let q = (nij / total).max(f64::MIN_POSITIVE);
            pij * (pij / q).ln()
        })
        .sum()
}

/// Joint affinities used by [`tsne`]; exposed for diagnostics and tests.
pub fn joint_affinities(data: &[Vec<f64>], config: &TsneConfig) -> Result<Vec<f64>> {
    validate(data, config)?;
    let n = data.len();
    let d = squared_distances(data);
    if d.iter().all(|&v| v == 0.0) {
        return Err(CsixError::InvalidInput(
            "all points coincide; nothing to embed".into(),
        ));
    }
    match config.affinity {
        Affinity::Perplexity => perplexity_affinities(&d, n, config.perplexity),
        Affinity::FixedBandwidth => Ok(fixed_bandwidth_affinities(&d, n)),
    }
}

fn validate(data: &[Vec<f64>], config: &TsneConfig) -> Result<()> {
    let n = data.len();
    if n < 4 {
        return Err(CsixError::InvalidInput(format!(
            "t-SNE needs at least 4 points, got {n}"
        )));
    }
    if !(config.perplexity > 0.0) || config.perplexity >= n as f64 {
        return Err(CsixError::InvalidInput(format!(
            "perplexity {} must lie in (0, {n})",
            config.perplexity
        )));
    }
    let dim = data[0].len();
    if let Some(i) = data
        .iter()
        .position(|r| r.len() != dim || r.iter().any(|v| !v.is_finite()))
    {
        return Err(CsixError::InvalidInput(format!(
            "row {i} has the wrong length or a non-finite value"
        )));
    }
    Ok(())
}

pub fn tsne(data: &[Vec<f64>], config: &TsneConfig) -> Result<TsneResult> {
    let p = joint_affinities(data, config)?;
    let n = data.len();

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let normal = Normal::new(0.0, INIT_STD).expect("valid std");
    let mut y: Vec<[f64; 2]> = (0..n)
        .map(|_| [normal.sample(&mut rng), normal.sample(&mut rng)])
        .collect();
    let initial_kl = kl_divergence(&p, &y);

    let mut update = vec![[0.0; 2]; n];
    let mut gains = vec![[1.0f64; 2]; n];
    for iter in 0..config.iterations {
        let exaggeration = if iter < config.exaggeration_iters {
            config.exaggeration
        } else {
            1.0
        };
        let momentum = if iter < config.momentum_switch {
            config.initial_momentum
        } else {
            config.final_momentum
        };
        let (num, total) = student_kernel(&y);
        let grad: Vec<[f64; 2]> = (0..n)
            .into_par_iter()
            .map(|i| {
                let mut g = [0.0; 2];
                for j in 0..n {
                    if i == j {
                        continue;
                    }
                    let nij = num[i * n + j];
                    let mult = (exaggeration * p[i * n + j] - nij / total) * nij;
                    g[0] += mult * (y[i][0] - y[j][0]);
                    g[1] += mult * (y[i][1] - y[j][1]);
                }
                [4.0 * g[0], 4.0 * g[1]]
            })
            .collect();
        for i in 0..n {
            for c in 0..2 {
                let same_sign = (grad[i][c] > 0.0) == (update[i][c] > 0.0);
                gains[i][c] = if same_sign {
                    (gains[i][c] * 0.8).max(MIN_GAIN)
                } else {
                    gains[i][c] + 0.2
                };
                update[i][c] = momentum * update[i][c] - config.learning_rate * gains[i][c] * grad[i][c];
                y[i][c] += update[i][c];
            }
        }
        let cx = y.iter().map(|v| v[0]).sum::<f64>() / n as f64;
        let cy = y.iter().map(|v| v[1]).sum::<f64>() / n as f64;
        for v in y.iter_mut() {
            v[0] -= cx;
            v[1] -= cy;
        }
        if y.iter().any(|v| !v[0].is_finite() || !v[1].is_finite()) {
            return Err(CsixError::Numeric(format!(
                "t-SNE diverged at iteration {}",
                iter + 1
            )));
        }
    }
    let final_kl = kl_divergence(&p, &y);
    Ok(TsneResult {
        points: y,
        initial_kl,
        final_kl,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn nearest(points: &[[f64; 2]], i: usize) -> usize {
        (0..points.len())
            .filter(|&j| j != i)
            .min_by(|&a, &b| {
                let da = (points[a][0] - points[i][0]).hypot(points[a][1] - points[i][1]);
                let db = (points[b][0] - points[i][0]).hypot(points[b][1] - points[i][1]);
                da.total_cmp(&db)
            })
            .unwrap()
    }

    fn small_config(perplexity: f64) -> TsneConfig {
        TsneConfig {
            perplexity,
            iterations: 500,
            learning_rate: 10.0,
            exaggeration: 4.0,
            seed: 3,
            ..TsneConfig::default()
        }
    }

    #[test]
    fn square_corners_keep_edge_neighbours() {
        // corners in cyclic order: 0-1, 1-2, 2-3, 3-0 are edges; 0-2 and 1-3 diagonals
        let data = vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![1.0, 1.0], vec![0.0, 1.0]];
        let r = tsne(&data, &small_config(1.5)).unwrap();
        for i in 0..4 {
            let j = nearest(&r.points, i);
            assert_ne!((i + 2) % 4, j, "point {i} nearest to its diagonal");
        }
        assert!(r.final_kl < r.initial_kl);
    }

    #[test]
    fn rectangle_pairs_stay_mutual_neighbours() {
        let data = vec![vec![0.0, 0.0], vec![0.0, 1.0], vec![3.0, 0.0], vec![3.0, 1.0]];
        let r = tsne(&data, &small_config(1.5)).unwrap();
        assert_eq!(nearest(&r.points, 0), 1);
        assert_eq!(nearest(&r.points, 1), 0);
        assert_eq!(nearest(&r.points, 2), 3);
        assert_eq!(nearest(&r.points, 3), 2);
    }

    #[test]
    fn deterministic_given_seed() {
        let data: Vec<Vec<f64>> = (0..12).map(|i| vec![i as f64, (i * i % 7) as f64]).collect();
        let cfg = TsneConfig {
            perplexity: 3.0,
            iterations: 100,
            ..TsneConfig::default()
        };
        assert_eq!(tsne(&data, &cfg).unwrap(), tsne(&data, &cfg).unwrap());
    }

    #[test]
    fn rejects_degenerate_input() {
        let dup = vec![vec![1.0, 2.0]; 5];
        assert!(tsne(&dup, &small_config(2.0)).is_err());
        let few = vec![vec![0.0], vec![1.0], vec![2.0]];
        assert!(tsne(&few, &small_config(1.0)).is_err());
        let data: Vec<Vec<f64>> = (0..5).map(|i| vec![i as f64]).collect();
        assert!(tsne(&data, &small_config(5.0)).is_err());
    }

    #[test]
    fn affinities_are_a_symmetric_distribution() {
        let data: Vec<Vec<f64>> = (0..10).map(|i| vec![(i as f64).sin() * 5.0, i as f64]).collect();
        for affinity in [Affinity::Perplexity, Affinity::FixedBandwidth] {
            let cfg = TsneConfig {
                perplexity: 4.0,
                affinity,
                ..TsneConfig::default()
            };
            let p = joint_affinities(&data, &cfg).unwrap();
            let total: f64 = p.iter().sum();
            assert!((total - 1.0).abs() < 1e-6, "{affinity:?}: {total}");
            for i in 0..10 {
                assert_eq!(p[i * 10 + i], 0.0);
                for j in 0..10 {
                    assert!((p[i * 10 + j] - p[j * 10 + i]).abs() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn calibrated_rows_hit_the_perplexity() {
        let data: Vec<Vec<f64>> = (0..30)
            .map(|i| vec![(i as f64 * 0.7).cos() * 3.0, i as f64 * 0.1])
            .collect();
        let n = data.len();
        let d = squared_distances(&data);
        for i in [0, 7, 29] {
            let p = calibrate_row(&d[i * n..(i + 1) * n], i, 8.0).unwrap();
            let entropy: f64 = p.iter().filter(|v| **v > 0.0).map(|v| -v * v.ln()).sum();
            assert!((entropy.exp() - 8.0).abs() < 1e-3, "row {i}: {}", entropy.exp());
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }
}
