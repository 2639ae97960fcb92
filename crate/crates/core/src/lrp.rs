//! Layer-wise relevance propagation.
//!
//! The pre-softmax score of a target class is decomposed into contributions
//! of the last hidden layer, then redistributed layer by layer down to the
//! input channels. Each neuron `k` hands out its relevance in proportion to
//! the share `a_i * w_{k,i}` of its pre-activation `z_k` contributed by input
//! `i`. With zero biases the total relevance is conserved at every layer.

use ndarray::Array1;
use serde::{Deserialize, Serialize};

use crate::error::{CsixError, Result};
use crate::mlp::{forward, ForwardTrace, NetworkParams};

/// Stabilizer added to every denominator, with the denominator's sign.
pub const LRP_EPSILON: f64 = 1e-9;

fn stabilize(denominator: f64) -> f64 {
    if denominator >= 0.0 {
        denominator + LRP_EPSILON
    } else {
        denominator - LRP_EPSILON
    }
}

/// Relevance for an input pair (n -> m). Classes are zero-based.
#[derive(Debug, Clone, PartialEq)]
pub struct RelevanceMap {
    pub input_class: usize,
    pub target_class: usize,
    /// `layers[l]` is the relevance of hidden layer `l + 1`.
    pub layers: Vec<Array1<f64>>,
    /// Input-channel relevance h.
    pub h: Vec<f64>,
    /// h scaled into [-1, 1].
    pub h_prime: Vec<f64>,
    /// Pre-softmax score of the target class.
    pub output_score: f64,
}

impl RelevanceMap {
    /// Sum of relevance in each hidden layer (first to last), then the input.
    pub fn layer_sums(&self) -> Vec<f64> {
        self.layers
            .iter()
            .map(|r| r.sum())
            .chain(std::iter::once(self.h.iter().sum()))
            .collect()
    }

    /// Largest relative gap between a layer's total relevance and the output score.
    pub fn conservation_error(&self) -> f64 {
        let z = self.output_score;
        self.layer_sums()
            .into_iter()
            .map(|s| (s - z).abs() / z.abs().max(f64::MIN_POSITIVE))
            .fold(0.0, f64::max)
    }
}

/// JSON export consumed by the plotting side. Classes are 1-based.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelevanceExport {
    pub n: usize,
    pub m: usize,
    pub h: Vec<f64>,
    pub h_prime: Vec<f64>,
    pub s_prime: Vec<f64>,
    pub z_out: f64,
}

impl RelevanceExport {
    pub fn new(map: &RelevanceMap, subcarriers: usize, antenna_pairs: usize) -> Result<Self> {
        let s = subcarrier_scores(&map.h_prime, subcarriers, antenna_pairs)?;
        Ok(RelevanceExport {
            n: map.input_class + 1,
            m: map.target_class + 1,
            h: map.h.clone(),
            h_prime: map.h_prime.clone(),
            s_prime: s.scores,
            z_out: map.output_score,
        })
    }
}

fn check_class(params: &NetworkParams, m: usize) -> Result<()> {
    if m >= params.classes() {
        return Err(CsixError::IndexOutOfRange {
            index: m + 1,
            max: params.classes(),
        });
    }
    Ok(())
}

/// Relevance of the last hidden layer for target class `m`.
pub fn relevance_last_hidden(
    trace: &ForwardTrace,
    params: &NetworkParams,
    m: usize,
) -> Result<Array1<f64>> {
    check_class(params, m)?;
    let out = params.weights.len() - 1;
    let a = trace.layer_input(out);
    let w = params.weights[out].row(m);
    if a.len() != w.len() {
        return Err(CsixError::DimensionMismatch {
            expected: w.len(),
            got: a.len(),
        });
    }
    let z = trace.output_scores()[m];
    let denominator = a.dot(&w) + params.biases[out][m];
    let factor = z / stabilize(denominator);
    Ok(Array1::from_iter(a.iter().zip(w.iter()).map(|(ai, wi)| ai * wi * factor)))
}

/// Redistributes the relevance of layer `l`'s outputs onto its inputs.
/// `layer` is the zero-based weight index, so `layer = 0` targets the input channels.
fn redistribute(
    trace: &ForwardTrace,
    params: &NetworkParams,
    upper: &Array1<f64>,
    layer: usize,
) -> Result<Array1<f64>> {
    let w = &params.weights[layer];
    if upper.len() != w.nrows() {
        return Err(CsixError::DimensionMismatch {
            expected: w.nrows(),
            got: upper.len(),
        });
    }
    let input = trace.layer_input(layer);
    // the denominators are the stored pre-activations z_k = sum_j a_j w_kj + b_k
    let z = &trace.z[layer];
    let ratio = Array1::from_iter(upper.iter().zip(z.iter()).map(|(r, zk)| r / stabilize(*zk)));
    let spread = w.t().dot(&ratio);
    Ok(input * &spread)
}

/// Relevance of hidden layer `l - 1` from hidden layer `l`, for `2 <= l <= L`
/// (1-based hidden-layer numbering).
pub fn relevance_backward(
    trace: &ForwardTrace,
    params: &NetworkParams,
    upper: &Array1<f64>,
    l: usize,
) -> Result<Array1<f64>> {
    let hidden = params.hidden_layers();
    if l < 2 || l > hidden {
        return Err(CsixError::InvalidInput(format!(
            "layer index {l} outside 2..={hidden}"
        )));
    }
    redistribute(trace, params, upper, l - 1)
}

/// Input-channel relevance h from the first hidden layer's relevance.
pub fn relevance_input(
    trace: &ForwardTrace,
    params: &NetworkParams,
    first_hidden: &Array1<f64>,
) -> Result<Vec<f64>> {
    Ok(redistribute(trace, params, first_hidden, 0)?.to_vec())
}

/// `h / max|h|`; the all-zero vector maps to itself.
pub fn normalize(h: &[f64]) -> Vec<f64> {
    let max = h.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    if max == 0.0 {
        return vec![0.0; h.len()];
    }
    h.iter().map(|v| (v / max).clamp(-1.0, 1.0)).collect()
}

/// Full relevance decomposition of input `x` (true class `n`) toward output class `m`.
pub fn explain(params: &NetworkParams, x: &[f64], n: usize, m: usize) -> Result<RelevanceMap> {
    let trace = forward(params, x)?;
    explain_trace(&trace, params, n, m)
}

/// Same as [`explain`] on an existing forward trace.
pub fn explain_trace(
    trace: &ForwardTrace,
    params: &NetworkParams,
    n: usize,
    m: usize,
) -> Result<RelevanceMap> {
    check_class(params, n)?;
    check_class(params, m)?;
    let hidden = params.hidden_layers();
    let output_score = trace.output_scores()[m];
    let (layers, h) = if hidden == 0 {
        // single linear layer: relevance flows straight to the inputs
        (Vec::new(), relevance_last_hidden(trace, params, m)?.to_vec())
    } else {
        let mut layers = vec![Array1::zeros(0); hidden];
        layers[hidden - 1] = relevance_last_hidden(trace, params, m)?;
        for l in (2..=hidden).rev() {
            layers[l - 2] = relevance_backward(trace, params, &layers[l - 1], l)?;
        }
        let h = relevance_input(trace, params, &layers[0])?;
        (layers, h)
    };
    Ok(RelevanceMap {
        input_class: n,
        target_class: m,
        layers,
        h_prime: normalize(&h),
        h,
        output_score,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubcarrierScores {
    pub input_class: usize,
    pub target_class: usize,
    /// Average normalized relevance of each subcarrier across antenna pairs.
    pub scores: Vec<f64>,
}

/// `s'_i = (1/A) * sum_a h'_{i + a*S}` for every subcarrier i.
pub fn subcarrier_scores(
    h_prime: &[f64],
    subcarriers: usize,
    antenna_pairs: usize,
) -> Result<SubcarrierScores> {
    subcarrier_scores_for(h_prime, subcarriers, antenna_pairs, 0, 0)
}

pub fn subcarrier_scores_for(
    h_prime: &[f64],
    subcarriers: usize,
    antenna_pairs: usize,
    n: usize,
    m: usize,
) -> Result<SubcarrierScores> {
    if subcarriers * antenna_pairs != h_prime.len() || antenna_pairs == 0 {
        return Err(CsixError::DimensionMismatch {
            expected: subcarriers * antenna_pairs,
            got: h_prime.len(),
        });
    }
    let scores = (0..subcarriers)
        .map(|i| {
            (0..antenna_pairs)
                .map(|a| h_prime[i + a * subcarriers])
                .sum::<f64>()
                / antenna_pairs as f64
        })
        .collect();
    Ok(SubcarrierScores {
        input_class: n,
        target_class: m,
        scores,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mlp::{init_random, Init};
    use ndarray::{array, Array2};
    use proptest::prelude::*;

    fn net(dims: Vec<usize>, weights: Vec<Array2<f64>>) -> NetworkParams {
        let biases = dims[1..].iter().map(|&n| Array1::zeros(n)).collect();
        NetworkParams::from_parts(dims, weights, biases).unwrap()
    }

    #[test]
    fn hand_example_last_hidden() {
        // hidden activations a = [1, 2] via identity, output row m = [3, -1], z = 1
        let p = net(
            vec![2, 2, 1],
            vec![Array2::eye(2), array![[3.0, -1.0]]],
        );
        let t = forward(&p, &[1.0, 2.0]).unwrap();
        assert_eq!(t.output_scores()[0], 1.0);
        let r = relevance_last_hidden(&t, &p, 0).unwrap();
        assert!((r[0] - 3.0).abs() < 1e-8 && (r[1] + 2.0).abs() < 1e-8, "{r}");
    }

    #[test]
    fn single_active_unit_takes_all_relevance() {
        let p = net(
            vec![2, 2, 2],
            vec![array![[1.0, 0.0], [-1.0, 0.0]], array![[2.0, 5.0], [1.0, 1.0]]],
        );
        let t = forward(&p, &[3.0, 1.0]).unwrap();
        let r = relevance_last_hidden(&t, &p, 0).unwrap();
        assert_eq!(r[1], 0.0);
        assert!((r[0] - t.output_scores()[0]).abs() < 1e-8);
    }

    #[test]
    fn hand_example_backward() {
        // a^(l-1) = [1, 1], W = [[1, 0], [0, 2]], R = [4, 6]
        let p = net(
            vec![2, 2, 2, 1],
            vec![Array2::eye(2), array![[1.0, 0.0], [0.0, 2.0]], array![[1.0, 1.0]]],
        );
        let t = forward(&p, &[1.0, 1.0]).unwrap();
        let r = relevance_backward(&t, &p, &array![4.0, 6.0], 2).unwrap();
        assert!((r[0] - 4.0).abs() < 1e-8 && (r[1] - 6.0).abs() < 1e-8, "{r}");

        let zero = relevance_backward(&t, &p, &array![0.0, 0.0], 2).unwrap();
        assert_eq!(zero, array![0.0, 0.0]);
        assert!(relevance_backward(&t, &p, &array![1.0, 1.0], 1).is_err());
        assert!(relevance_backward(&t, &p, &array![1.0, 1.0], 3).is_err());
    }

    #[test]
    fn single_nonzero_input_channel() {
        let p = init_random(&[4, 6, 3], 3, Init::Scaled).unwrap().without_biases();
        let t = forward(&p, &[0.0, 2.5, 0.0, 0.0]).unwrap();
        let r1 = relevance_last_hidden(&t, &p, 1).unwrap();
        let h = relevance_input(&t, &p, &r1).unwrap();
        assert_eq!(h[0], 0.0);
        assert_eq!(h[2], 0.0);
        assert_eq!(h[3], 0.0);
    }

    #[test]
    fn zero_bias_conservation_end_to_end() {
        let p = init_random(&[6, 8, 7, 5, 3], 21, Init::Scaled).unwrap().without_biases();
        let x = [0.5, 1.5, 0.2, 2.0, 0.9, 1.1];
        for m in 0..3 {
            let map = explain(&p, &x, 0, m).unwrap();
            for s in map.layer_sums() {
                let rel = (s - map.output_score).abs() / map.output_score.abs();
                assert!(rel < 1e-6, "m={m}: sum {s} vs {}", map.output_score);
            }
        }
    }

    #[test]
    fn explain_is_deterministic_and_normalized() {
        let p = init_random(&[6, 8, 3], 4, Init::Scaled).unwrap();
        let x = [0.5, 1.5, 0.2, 2.0, 0.9, 1.1];
        let a = explain(&p, &x, 1, 2).unwrap();
        assert_eq!(a, explain(&p, &x, 1, 2).unwrap());
        let max = a.h_prime.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(max == 1.0 || a.h.iter().all(|v| *v == 0.0));
        assert!(explain(&p, &x, 0, 3).is_err());
    }

    #[test]
    fn normalize_examples() {
        assert_eq!(normalize(&[2.0, -4.0, 1.0]), vec![0.5, -1.0, 0.25]);
        assert_eq!(normalize(&[0.0, 0.0]), vec![0.0, 0.0]);
    }

    #[test]
    fn subcarrier_averaging() {
        let s = subcarrier_scores(&[0.3; 12], 3, 4).unwrap();
        assert!(s.scores.iter().all(|v| (v - 0.3).abs() < 1e-15));

        let mut blocks = vec![1.0; 3];
        blocks.extend([-1.0; 3]);
        blocks.extend([1.0; 3]);
        blocks.extend([-1.0; 3]);
        let s = subcarrier_scores(&blocks, 3, 4).unwrap();
        assert_eq!(s.scores, vec![0.0; 3]);

        assert!(subcarrier_scores(&[0.0; 11], 3, 4).is_err());
    }

    proptest! {
        #[test]
        fn normalize_preserves_sign_and_order(h in prop::collection::vec(-1e3f64..1e3, 1..40)) {
            let n = normalize(&h);
            for (a, b) in h.iter().zip(&n) {
                prop_assert!((-1.0..=1.0).contains(b));
                prop_assert_eq!(a.partial_cmp(&0.0), b.partial_cmp(&0.0));
            }
            for i in 0..h.len() {
                for j in 0..h.len() {
                    if h[i] < h[j] {
                        prop_assert!(n[i] <= n[j]);
                    }
                }
            }
        }

        #[test]
        fn subcarrier_score_bounded_by_constituents(h in prop::collection::vec(-1f64..1.0, 20)) {
            let s = subcarrier_scores(&h, 5, 4).unwrap();
            for (i, v) in s.scores.iter().enumerate() {
                let bound = (0..4).map(|a| h[i + 5 * a].abs()).fold(0.0, f64::max);
                prop_assert!(v.abs() <= bound + 1e-15);
            }
        }
    }
}
