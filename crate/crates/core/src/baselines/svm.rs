//! One-against-all RBF support vector machine trained with SMO.
//!
//! Each binary problem solves the C-SVC dual with maximal-violating-pair
//! working set selection and stops once the duality gap proxy
//! `max_up(-y G) - min_low(-y G)` falls below the tolerance.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{CsixError, Result};
use crate::mlp::argmax;

const TAU: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmConfig {
    /// RBF width; `None` uses [`default_gamma`].
    pub gamma: Option<f64>,
    pub c: f64,
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for SvmConfig {
    fn default() -> Self {
        SvmConfig {
            gamma: None,
            c: 1.0,
            tolerance: 1e-3,
            max_iterations: 1_000_000,
        }
    }
}

/// `1 / (K * var)` where var is the variance of all training amplitudes.
pub fn default_gamma(train: &Dataset) -> f64 {
    let values: Vec<f64> = train
        .samples()
        .iter()
        .flat_map(|s| s.channels.iter().copied())
        .collect();
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    if var > 0.0 {
        1.0 / (train.channels() as f64 * var)
    } else {
        1.0 / train.channels() as f64
    }
}

/// One class-versus-rest decision function over the shared training vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinarySvm {
    /// Dual coefficients, one per training vector.
    pub alpha: Vec<f64>,
    /// +1 for the positive class, -1 otherwise.
    pub y: Vec<f64>,
    pub bias: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub gamma: f64,
    pub c: f64,
    pub vectors: Vec<Vec<f64>>,
    pub machines: Vec<BinarySvm>,
}

pub fn rbf(gamma: f64, u: &[f64], v: &[f64]) -> f64 {
    let d: f64 = u.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum();
    (-gamma * d).exp()
}

impl SvmModel {
    /// Decision value of every machine for `x`.
    pub fn decision_values(&self, x: &[f64]) -> Vec<f64> {
        let kernel: Vec<f64> = self.vectors.iter().map(|v| rbf(self.gamma, v, x)).collect();
        self.machines
            .iter()
            .map(|m| {
                m.alpha
                    .iter()
                    .zip(&m.y)
                    .zip(&kernel)
                    .filter(|((a, _), _)| **a > 0.0)
                    .map(|((a, y), k)| a * y * k)
                    .sum::<f64>()
                    + m.bias
            })
            .collect()
    }

    /// Zero-based class with the largest decision value.
    pub fn predict(&self, x: &[f64]) -> Result<usize> {
        let dim = self.vectors.first().map_or(0, Vec::len);
        if x.len() != dim {
            return Err(CsixError::DimensionMismatch {
                expected: dim,
                got: x.len(),
            });
        }
        Ok(argmax(&self.decision_values(x)))
    }

    pub fn predict_all(&self, data: &Dataset) -> Result<Vec<usize>> {
        data.samples()
            .par_iter()
            .map(|s| self.predict(&s.channels))
            .collect()
    }

    pub fn support_vector_count(&self) -> usize {
        (0..self.vectors.len())
            .filter(|&i| self.machines.iter().any(|m| m.alpha[i] > 0.0))
            .count()
    }
}

fn solve_binary(kernel: &[f64], y: &[f64], c: f64, tol: f64, max_iter: usize) -> Result<BinarySvm> {
    let n = y.len();
    let q = |i: usize, j: usize| y[i] * y[j] * kernel[i * n + j];
    let mut alpha = vec![0.0; n];
    let mut grad = vec![-1.0; n];
    let up = |a: f64, yi: f64| (yi > 0.0 && a < c) || (yi < 0.0 && a > 0.0);
    let low = |a: f64, yi: f64| (yi > 0.0 && a > 0.0) || (yi < 0.0 && a < c);

    let mut iterations = 0;
    loop {
        // i: maximal -y G over I_up; j: second-order selection over I_low
        let mut i = usize::MAX;
        let mut g_max = f64::NEG_INFINITY;
        let mut g_min = f64::INFINITY;
        for t in 0..n {
            let v = -y[t] * grad[t];
            if up(alpha[t], y[t]) && v > g_max {
                g_max = v;
                i = t;
            }
            if low(alpha[t], y[t]) && v < g_min {
                g_min = v;
            }
        }
        if i == usize::MAX || g_max - g_min < tol {
            break;
        }
        if iterations >= max_iter {
            return Err(CsixError::Numeric(format!(
                "SMO did not converge in {max_iter} iterations (gap {:.3e}, tolerance {tol:.1e})",
                g_max - g_min
            )));
        }
        iterations += 1;

        let mut j = usize::MAX;
        let mut best = f64::INFINITY;
        for t in 0..n {
            if !low(alpha[t], y[t]) {
                continue;
            }
            let b = g_max + y[t] * grad[t];
            if b > 0.0 {
                let a = (q(i, i) + q(t, t) - 2.0 * y[i] * y[t] * q(i, t)).max(TAU);
                let obj = -(b * b) / a;
                if obj < best {
                    best = obj;
                    j = t;
                }
            }
        }
        if j == usize::MAX {
            break;
        }

        let (old_i, old_j) = (alpha[i], alpha[j]);
        let (kii, kjj, kij) = (kernel[i * n + i], kernel[j * n + j], kernel[i * n + j]);
        let quad = (kii + kjj - 2.0 * kij).max(TAU);
        if y[i] != y[j] {
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 && alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = diff;
            } else if diff <= 0.0 && alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 && alpha[i] > c {
                alpha[i] = c;
                alpha[j] = c - diff;
            } else if diff <= 0.0 && alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c && alpha[i] > c {
                alpha[i] = c;
                alpha[j] = sum - c;
            } else if sum <= c && alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c && alpha[j] > c {
                alpha[j] = c;
                alpha[i] = sum - c;
            } else if sum <= c && alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        for (t, g) in grad.iter_mut().enumerate() {
            *g += q(t, i) * di + q(t, j) * dj;
        }
    }

    // rho from free vectors, midpoint of the feasible interval otherwise
    let (mut sum, mut free) = (0.0, 0usize);
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    for t in 0..n {
        let yg = y[t] * grad[t];
        if alpha[t] > 0.0 && alpha[t] < c {
            sum += yg;
            free += 1;
        } else if (alpha[t] >= c && y[t] < 0.0) || (alpha[t] <= 0.0 && y[t] > 0.0) {
            ub = ub.min(yg);
        } else {
            lb = lb.max(yg);
        }
    }
    let rho = if free > 0 { sum / free as f64 } else { 0.5 * (ub + lb) };
    Ok(BinarySvm {
        alpha,
        y: y.to_vec(),
        bias: -rho,
        iterations,
    })
}

/// Trains one RBF machine per class against the rest.
pub fn svm_train(train: &Dataset, config: &SvmConfig) -> Result<SvmModel> {
    let classes = train.locations();
    if classes < 2 {
        return Err(CsixError::InvalidInput("SVM needs at least 2 classes".into()));
    }
    let gamma = config.gamma.unwrap_or_else(|| default_gamma(train));
    if !(gamma > 0.0) || !(config.c > 0.0) {
        return Err(CsixError::Config("gamma and C must be positive".into()));
    }
    let vectors: Vec<Vec<f64>> = train.samples().iter().map(|s| s.channels.clone()).collect();
    let n = vectors.len();
    let mut kernel = vec![0.0; n * n];
    kernel.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
        for (j, k) in row.iter_mut().enumerate() {
            *k = rbf(gamma, &vectors[i], &vectors[j]);
        }
    });
    let labels = train.labels();
    let machines = (0..classes)
        .map(|c| {
            let y: Vec<f64> = labels.iter().map(|&l| if l == c { 1.0 } else { -1.0 }).collect();
            solve_binary(&kernel, &y, config.c, config.tolerance, config.max_iterations)
                .map_err(|e| CsixError::Numeric(format!("class {}: {e}", c + 1)))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SvmModel {
        gamma,
        c: config.c,
        vectors,
        machines,
    })
}
