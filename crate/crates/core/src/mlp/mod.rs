//! Fully connected ReLU network with a softmax output layer.
//!
//! `dims = [K, n_1, ..., n_L, M]`: `L` hidden ReLU layers followed by a linear
//! output layer whose pre-activations feed the softmax. Layer `l` (zero-based
//! here) maps `dims[l]` inputs to `dims[l + 1]` outputs with a weight matrix of
//! shape `dims[l + 1] x dims[l]`.

mod io;
mod train;

use ndarray::{Array1, Array2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::dataset::MinMax;
use crate::error::{CsixError, Result};

pub use io::{load_model, model_from_json, model_to_json, save_model, MODEL_FORMAT};
pub use train::{gradient_check, gradients, train, Gradients, TrainConfig};

/// Hidden layer sizes of the reference architecture.
pub const DEFAULT_HIDDEN: [usize; 3] = [300, 280, 260];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Init {
    /// Every weight and bias drawn from N(0, 1).
    GaussianUnit,
    /// He-style N(0, 2 / fan_in) weights and zero biases.
    #[default]
    Scaled,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkParams {
    dims: Vec<usize>,
    pub weights: Vec<Array2<f64>>,
    pub biases: Vec<Array1<f64>>,
    /// Scaler fitted on the training set when the network was trained on
    /// scaled inputs. `forward` and LRP take already-scaled vectors; callers
    /// feeding raw amplitudes apply it first.
    pub input_scaling: Option<MinMax>,
}

impl NetworkParams {
    /// Assembles parameters, checking the shape chain and finiteness.
    pub fn from_parts(
        dims: Vec<usize>,
        weights: Vec<Array2<f64>>,
        biases: Vec<Array1<f64>>,
    ) -> Result<Self> {
        check_dims(&dims)?;
        let layers = dims.len() - 1;
        if weights.len() != layers || biases.len() != layers {
            return Err(CsixError::DimensionMismatch {
                expected: layers,
                got: weights.len().min(biases.len()),
            });
        }
        for l in 0..layers {
            let (rows, cols) = weights[l].dim();
            if rows != dims[l + 1] || cols != dims[l] {
                return Err(CsixError::InvalidInput(format!(
                    "layer {} weights are {rows}x{cols}, expected {}x{}",
                    l + 1,
                    dims[l + 1],
                    dims[l]
                )));
            }
            if biases[l].len() != dims[l + 1] {
                return Err(CsixError::DimensionMismatch {
                    expected: dims[l + 1],
                    got: biases[l].len(),
                });
            }
        }
        let params = NetworkParams {
            dims,
            weights,
            biases,
            input_scaling: None,
        };
        if !params.is_finite() {
            return Err(CsixError::Numeric("non-finite network parameter".into()));
        }
        Ok(params)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn input_dim(&self) -> usize {
        self.dims[0]
    }

    pub fn classes(&self) -> usize {
        *self.dims.last().expect("dims validated non-empty")
    }

    /// Number of hidden layers L.
    pub fn hidden_layers(&self) -> usize {
        self.dims.len() - 2
    }

    pub fn parameter_count(&self) -> usize {
        self.weights.iter().map(|w| w.len()).sum::<usize>()
            + self.biases.iter().map(|b| b.len()).sum::<usize>()
    }

    pub fn is_finite(&self) -> bool {
        self.weights.iter().all(|w| w.iter().all(|v| v.is_finite()))
            && self.biases.iter().all(|b| b.iter().all(|v| v.is_finite()))
    }

    /// Copy with every bias set to zero.
    pub fn without_biases(&self) -> NetworkParams {
        NetworkParams {
            dims: self.dims.clone(),
            weights: self.weights.clone(),
            biases: self.biases.iter().map(|b| Array1::zeros(b.len())).collect(),
            input_scaling: self.input_scaling.clone(),
        }
    }
}

fn check_dims(dims: &[usize]) -> Result<()> {
    if dims.len() < 2 {
        return Err(CsixError::InvalidInput(
            "network needs at least an input and an output size".into(),
        ));
    }
    if dims.contains(&0) {
        return Err(CsixError::InvalidInput("layer sizes must be positive".into()));
    }
    Ok(())
}

/// `[input, hidden..., classes]`.
pub fn layer_dims(input: usize, hidden: &[usize], classes: usize) -> Vec<usize> {
    let mut dims = Vec::with_capacity(hidden.len() + 2);
    dims.push(input);
    dims.extend_from_slice(hidden);
    dims.push(classes);
    dims
}

pub fn init_random(dims: &[usize], seed: u64, init: Init) -> Result<NetworkParams> {
    check_dims(dims)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let unit = Normal::new(0.0, 1.0).expect("unit normal");
    let mut weights = Vec::with_capacity(dims.len() - 1);
    let mut biases = Vec::with_capacity(dims.len() - 1);
    for pair in dims.windows(2) {
        let (fan_in, fan_out) = (pair[0], pair[1]);
        let scale = match init {
            Init::GaussianUnit => 1.0,
            Init::Scaled => (2.0 / fan_in as f64).sqrt(),
        };
        let w = Array2::from_shape_simple_fn((fan_out, fan_in), || scale * unit.sample(&mut rng));
        let b = match init {
            Init::GaussianUnit => Array1::from_shape_simple_fn(fan_out, || unit.sample(&mut rng)),
            Init::Scaled => Array1::zeros(fan_out),
        };
        weights.push(w);
        biases.push(b);
    }
    NetworkParams::from_parts(dims.to_vec(), weights, biases)
}

/// Every intermediate of one forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardTrace {
    pub x: Array1<f64>,
    /// Pre-activations of layers 1..=L+1; the last entry is the output score vector.
    pub z: Vec<Array1<f64>>,
    /// ReLU activations of hidden layers 1..=L.
    pub a: Vec<Array1<f64>>,
    /// Softmax output.
    pub y: Array1<f64>,
}

impl ForwardTrace {
    /// Pre-softmax output scores.
    pub fn output_scores(&self) -> &Array1<f64> {
        self.z.last().expect("trace has an output layer")
    }

    /// Input to layer `l` (zero-based): `x` for the first layer, otherwise the
    /// previous hidden activation.
    pub fn layer_input(&self, l: usize) -> &Array1<f64> {
        if l == 0 {
            &self.x
        } else {
            &self.a[l - 1]
        }
    }

    pub fn last_hidden(&self) -> &Array1<f64> {
        self.a.last().unwrap_or(&self.x)
    }

    pub fn predicted(&self) -> usize {
        argmax(self.y.as_slice().expect("contiguous"))
    }
}

pub fn relu(v: f64) -> f64 {
    v.max(0.0)
}

/// Numerically stable softmax.
pub fn softmax(z: &[f64]) -> Vec<f64> {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exp: Vec<f64> = z.iter().map(|v| (v - max).exp()).collect();
    let sum: f64 = exp.iter().sum();
    exp.into_iter().map(|e| e / sum).collect()
}

/// Index of the largest value; ties go to the smallest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

pub fn forward(params: &NetworkParams, x: &[f64]) -> Result<ForwardTrace> {
    if x.len() != params.input_dim() {
        return Err(CsixError::DimensionMismatch {
            expected: params.input_dim(),
            got: x.len(),
        });
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(CsixError::InvalidInput("non-finite input value".into()));
    }
    let x = Array1::from(x.to_vec());
    let layers = params.weights.len();
    let mut z = Vec::with_capacity(layers);
    let mut a = Vec::with_capacity(layers - 1);
    for l in 0..layers {
        let input = if l == 0 { &x } else { &a[l - 1] };
        let pre = params.weights[l].dot(input) + &params.biases[l];
        if l + 1 < layers {
            a.push(pre.mapv(relu));
        }
        z.push(pre);
    }
    let out = z.last().expect("at least one layer");
    let y = Array1::from(softmax(out.as_slice().expect("contiguous")));
    Ok(ForwardTrace { x, z, a, y })
}

/// Zero-based predicted class (argmax of the softmax output).
pub fn predict(params: &NetworkParams, x: &[f64]) -> Result<usize> {
    Ok(forward(params, x)?.predicted())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn reference_architecture_shapes() {
        let dims = layer_dims(120, &DEFAULT_HIDDEN, 16);
        let p = init_random(&dims, 3, Init::Scaled).unwrap();
        let shapes: Vec<_> = p.weights.iter().map(|w| w.dim()).collect();
        assert_eq!(shapes, vec![(300, 120), (280, 300), (260, 280), (16, 260)]);
        assert_eq!(p.hidden_layers(), 3);
        assert_eq!(init_random(&dims, 3, Init::Scaled).unwrap(), p);
    }

    #[test]
    fn empty_dims_rejected() {
        assert!(init_random(&[], 0, Init::Scaled).is_err());
        assert!(init_random(&[4], 0, Init::Scaled).is_err());
        assert!(init_random(&[4, 0, 2], 0, Init::Scaled).is_err());
    }

    #[test]
    fn gaussian_unit_draws_are_standard_normal() {
        // 10 x 10_000 weights + 10_000 biases
        let p = init_random(&[10, 10_000], 11, Init::GaussianUnit).unwrap();
        let draws: Vec<f64> = p.weights[0].iter().chain(p.biases[0].iter()).copied().collect();
        let n = draws.len() as f64;
        let mean = draws.iter().sum::<f64>() / n;
        let std = (draws.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
        assert!(mean.abs() < 0.02, "mean {mean}");
        assert!((0.98..=1.02).contains(&std), "std {std}");
    }

    #[test]
    fn identity_hidden_layer() {
        let p = NetworkParams::from_parts(
            vec![2, 2, 2],
            vec![Array2::eye(2), Array2::zeros((2, 2))],
            vec![Array1::zeros(2), Array1::zeros(2)],
        )
        .unwrap();
        let t = forward(&p, &[1.0, 2.0]).unwrap();
        assert_eq!(t.a[0], array![1.0, 2.0]);
        // zero output scores give a uniform softmax
        assert_eq!(t.y, array![0.5, 0.5]);
        assert_eq!(t.predicted(), 0);
    }

    #[test]
    fn argmax_ties_take_smallest_index() {
        assert_eq!(argmax(&[0.1, 0.7, 0.2]), 1);
        assert_eq!(argmax(&[0.5, 0.5]), 0);
        assert_eq!(argmax(&[0.2, 0.9, 0.9]), 1);
    }

    #[test]
    fn forward_rejects_bad_input() {
        let p = init_random(&[3, 2], 0, Init::Scaled).unwrap();
        assert!(matches!(
            forward(&p, &[1.0, 2.0]),
            Err(CsixError::DimensionMismatch { expected: 3, got: 2 })
        ));
        assert!(forward(&p, &[1.0, f64::NAN, 0.0]).is_err());
    }

    #[test]
    fn from_parts_checks_shapes() {
        let bad = NetworkParams::from_parts(
            vec![2, 3],
            vec![Array2::zeros((2, 3))],
            vec![Array1::zeros(3)],
        );
        assert!(bad.is_err());
    }

    #[test]
    fn softmax_is_shift_invariant_and_stable() {
        let y = softmax(&[1000.0, 1000.0]);
        assert_eq!(y, vec![0.5, 0.5]);
        let a = softmax(&[1.0, 2.0, 3.0]);
        let b = softmax(&[11.0, 12.0, 13.0]);
        for (u, v) in a.iter().zip(&b) {
            assert!((u - v).abs() < 1e-15);
        }
    }
}
