//! Progressive channel nullification and modification driven by relevance
//! orderings.
//!
//! For every class-n test sample, relevance toward class m fixes an ordering
//! of its channels (or subcarriers). Channels are then altered one at a time
//! along that ordering, each step acting on the output of the previous one,
//! and the network's decision is recorded after every step.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{ClassStats, Dataset};
use crate::error::{CsixError, Result};
use crate::lrp::{explain, subcarrier_scores};
use crate::mlp::{predict, NetworkParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum OrderingKind {
    /// Descending relevance.
    O1,
    /// Ascending relevance.
    O2,
    /// Descending absolute relevance.
    O3,
    /// Ascending absolute relevance.
    O4,
}

impl fmt::Display for OrderingKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

impl FromStr for OrderingKind {
    type Err = CsixError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "O1" => Ok(OrderingKind::O1),
            "O2" => Ok(OrderingKind::O2),
            "O3" => Ok(OrderingKind::O3),
            "O4" => Ok(OrderingKind::O4),
            _ => Err(CsixError::InvalidInput(format!("unknown ordering {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Granularity {
    Channel,
    Subcarrier,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Nullify,
    Modify,
}

/// Where the ordering of a sample comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OrderingSource {
    /// Each sample is ordered by its own relevance scores.
    #[default]
    PerSample,
    /// All samples share the ordering of the class-mean normalized relevance.
    ClassMean,
}

/// 1-based permutation of channels (or subcarriers).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrderingSequence {
    pub order: Vec<usize>,
    pub kind: OrderingKind,
    pub pair: (usize, usize),
    pub granularity: Granularity,
}

/// Stable ordering of `scores` by `kind`; ties keep ascending index order.
/// Returns 1-based indices.
pub fn ordering(scores: &[f64], kind: OrderingKind) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    let key = |i: usize| match kind {
        OrderingKind::O1 => -scores[i],
        OrderingKind::O2 => scores[i],
        OrderingKind::O3 => -scores[i].abs(),
        OrderingKind::O4 => scores[i].abs(),
    };
    idx.sort_by(|&a, &b| key(a).total_cmp(&key(b)));
    idx.into_iter().map(|i| i + 1).collect()
}

fn check_index(r: usize, k: usize) -> Result<usize> {
    if r == 0 || r > k {
        return Err(CsixError::IndexOutOfRange { index: r, max: k });
    }
    Ok(r - 1)
}

/// Sets 1-based channel `r` to zero.
pub fn g_null(x: &[f64], r: usize) -> Result<Vec<f64>> {
    let i = check_index(r, x.len())?;
    let mut out = x.to_vec();
    out[i] = 0.0;
    Ok(out)
}

fn modified_value(x: f64, c: usize, stats: &ClassStats, n: usize, m: usize, h: f64) -> f64 {
    let ratio = stats.std[m][c] / stats.std[n][c];
    (stats.mean[m][c] + h * ratio * (x - stats.mean[n][c])).max(0.0)
}

/// Moves 1-based channel `r` of a class-`n` sample toward class `m` with the
/// linear MMSE form `E[x_m] + h' * (sigma_m / sigma_n) * (x - E[x_n])`,
/// clamped at zero. `h_r` plays the role of the correlation coefficient.
pub fn g_mod(
    x: &[f64],
    r: usize,
    stats: &ClassStats,
    n: usize,
    m: usize,
    h_r: f64,
) -> Result<Vec<f64>> {
    let i = check_index(r, x.len())?;
    if stats.channels() != x.len() {
        return Err(CsixError::DimensionMismatch {
            expected: stats.channels(),
            got: x.len(),
        });
    }
    if n >= stats.classes() || m >= stats.classes() {
        return Err(CsixError::IndexOutOfRange {
            index: n.max(m) + 1,
            max: stats.classes(),
        });
    }
    let mut out = x.to_vec();
    out[i] = modified_value(x[i], i, stats, n, m, h_r);
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub t: usize,
    pub frac_true: f64,
    pub frac_target: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentCurve {
    pub mode: Mode,
    pub kind: OrderingKind,
    pub granularity: Granularity,
    /// Zero-based (true class, target class).
    pub pair: (usize, usize),
    pub samples: usize,
    pub points: Vec<CurvePoint>,
}

impl ExperimentCurve {
    /// Normalized trapezoidal area under the `frac_true` series, in [0, 1].
    pub fn auc_true(&self) -> f64 {
        trapezoid(self.points.iter().map(|p| p.frac_true))
    }

    pub fn auc_target(&self) -> f64 {
        trapezoid(self.points.iter().map(|p| p.frac_target))
    }

    pub fn steps(&self) -> usize {
        self.points.len().saturating_sub(1)
    }

    pub fn at(&self, t: usize) -> Option<&CurvePoint> {
        self.points.get(t)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,frac_true,frac_target\n");
        for p in &self.points {
            out.push_str(&format!("{},{},{}\n", p.t, p.frac_true, p.frac_target));
        }
        out
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_csv()).map_err(|e| CsixError::io(path, e))
    }

    /// Parses the `t,frac_true,frac_target` export back into points.
    pub fn parse_csv(text: &str) -> Result<Vec<CurvePoint>> {
        let mut reader = csv::Reader::from_reader(text.as_bytes());
        reader
            .records()
            .enumerate()
            .map(|(i, rec)| {
                let rec = rec?;
                let field = |j: usize| -> Result<f64> {
                    rec.get(j)
                        .and_then(|v| v.trim().parse().ok())
                        .ok_or_else(|| CsixError::Row {
                            row: i + 1,
                            message: format!("bad field {}", j + 1),
                        })
                };
                Ok(CurvePoint {
                    t: field(0)? as usize,
                    frac_true: field(1)?,
                    frac_target: field(2)?,
                })
            })
            .collect()
    }
}

fn trapezoid(values: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = values.collect();
    if v.len() < 2 {
        return v.first().copied().unwrap_or(0.0);
    }
    let area: f64 = v.windows(2).map(|w| 0.5 * (w[0] + w[1])).sum();
    area / (v.len() - 1) as f64
}

#[derive(Debug, Clone, Copy)]
pub struct CurveSpec {
    /// Zero-based true class n.
    pub true_class: usize,
    /// Zero-based target class m.
    pub target_class: usize,
    pub kind: OrderingKind,
    pub mode: Mode,
    pub granularity: Granularity,
    pub source: OrderingSource,
}

/// Channel groups touched by one step, zero-based.
fn step_groups(granularity: Granularity, s: usize, a: usize) -> Vec<Vec<usize>> {
    match granularity {
        Granularity::Channel => (0..s * a).map(|c| vec![c]).collect(),
        Granularity::Subcarrier => (0..s).map(|i| (0..a).map(|p| i + p * s).collect()).collect(),
    }
}

fn ordering_scores(h_prime: &[f64], granularity: Granularity, s: usize, a: usize) -> Result<Vec<f64>> {
    match granularity {
        Granularity::Channel => Ok(h_prime.to_vec()),
        Granularity::Subcarrier => Ok(subcarrier_scores(h_prime, s, a)?.scores),
    }
}

/// Runs one nullification/modification experiment over the class-n test samples.
pub fn progressive_curve(
    params: &NetworkParams,
    test: &Dataset,
    spec: &CurveSpec,
    stats: Option<&ClassStats>,
) -> Result<ExperimentCurve> {
    let (n, m) = (spec.true_class, spec.target_class);
    let classes = params.classes();
    if n >= classes || m >= classes {
        return Err(CsixError::IndexOutOfRange {
            index: n.max(m) + 1,
            max: classes,
        });
    }
    if test.channels() != params.input_dim() {
        return Err(CsixError::DimensionMismatch {
            expected: params.input_dim(),
            got: test.channels(),
        });
    }
    let stats = match (spec.mode, stats) {
        (Mode::Modify, None) => {
            return Err(CsixError::InvalidInput(
                "channel modification needs training class statistics".into(),
            ))
        }
        (Mode::Modify, Some(st)) => {
            if st.channels() != test.channels() || st.classes() <= n.max(m) {
                return Err(CsixError::InvalidInput(
                    "class statistics do not match the model".into(),
                ));
            }
            Some(st)
        }
        (Mode::Nullify, _) => None,
    };
    let samples: Vec<&[f64]> = test
        .samples()
        .iter()
        .filter(|s| s.class() == n)
        .map(|s| s.channels.as_slice())
        .collect();
    if samples.is_empty() {
        return Err(CsixError::InvalidInput(format!(
            "no test samples for location {}",
            n + 1
        )));
    }
    let (s, a) = (test.subcarriers(), test.antenna_pairs());
    let groups = step_groups(spec.granularity, s, a);

    let maps = samples
        .par_iter()
        .map(|x| explain(params, x, n, m).map(|r| r.h_prime))
        .collect::<Result<Vec<_>>>()?;

    let shared_order = match spec.source {
        OrderingSource::PerSample => None,
        OrderingSource::ClassMean => {
            let k = test.channels();
            let mut mean = vec![0.0; k];
            for h in &maps {
                for (acc, v) in mean.iter_mut().zip(h) {
                    *acc += v / maps.len() as f64;
                }
            }
            Some(ordering(&ordering_scores(&mean, spec.granularity, s, a)?, spec.kind))
        }
    };

    // per sample: decisions after t = 0..=steps manipulations
    let decisions = samples
        .par_iter()
        .zip(&maps)
        .map(|(x, h_prime)| -> Result<Vec<usize>> {
            let order = match &shared_order {
                Some(o) => o.clone(),
                None => ordering(&ordering_scores(h_prime, spec.granularity, s, a)?, spec.kind),
            };
            let mut current = x.to_vec();
            let mut out = Vec::with_capacity(order.len() + 1);
            out.push(predict(params, &current)?);
            for r in order {
                for &c in &groups[r - 1] {
                    current[c] = match stats {
                        None => 0.0,
                        Some(st) => modified_value(current[c], c, st, n, m, h_prime[c]),
                    };
                }
                out.push(predict(params, &current)?);
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?;

    let steps = groups.len();
    let mut hits_true = vec![0usize; steps + 1];
    let mut hits_target = vec![0usize; steps + 1];
    for d in &decisions {
        for (t, &pred) in d.iter().enumerate() {
            hits_true[t] += usize::from(pred == n);
            hits_target[t] += usize::from(pred == m);
        }
    }
    let total = samples.len() as f64;
    let points = (0..=steps)
        .map(|t| CurvePoint {
            t,
            frac_true: hits_true[t] as f64 / total,
            frac_target: hits_target[t] as f64 / total,
        })
        .collect();
    Ok(ExperimentCurve {
        mode: spec.mode,
        kind: spec.kind,
        granularity: spec.granularity,
        pair: (n, m),
        samples: samples.len(),
        points,
    })
}
