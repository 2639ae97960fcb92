use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{forward, relu, softmax, Init, NetworkParams};
use crate::dataset::Dataset;
use crate::error::{CsixError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    /// Supervised epochs of minibatch backpropagation.
    pub backprop_iters: usize,
    /// Autoencoder epochs per hidden layer before backpropagation; 0 disables pretraining.
    pub pretrain_iters: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub seed: u64,
    pub init: Init,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            backprop_iters: 1500,
            pretrain_iters: 30,
            learning_rate: 0.01,
            batch_size: 32,
            seed: 1,
            init: Init::Scaled,
        }
    }
}

impl TrainConfig {
    fn validate(&self) -> Result<()> {
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(CsixError::Config("learning_rate must be finite and >= 0".into()));
        }
        if self.batch_size == 0 {
            return Err(CsixError::Config("batch_size must be at least 1".into()));
        }
        Ok(())
    }
}

/// Gradients of the cross-entropy loss, shaped like the network parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weights: Vec<Array2<f64>>,
    pub biases: Vec<Array1<f64>>,
}

/// Batch forward pass. Returns per-layer pre-activations and the inputs each
/// layer saw (`inputs[0]` is the batch itself).
fn forward_batch(
    params: &NetworkParams,
    batch: ArrayView2<f64>,
) -> (Vec<Array2<f64>>, Vec<Array2<f64>>) {
    let layers = params.weights.len();
    let mut inputs = Vec::with_capacity(layers);
    let mut pre = Vec::with_capacity(layers);
    inputs.push(batch.to_owned());
    for l in 0..layers {
        let z = inputs[l].dot(&params.weights[l].t()) + &params.biases[l];
        if l + 1 < layers {
            inputs.push(z.mapv(relu));
        }
        pre.push(z);
    }
    (pre, inputs)
}

/// Mean cross-entropy over the batch and its gradients.
fn batch_gradients(
    params: &NetworkParams,
    batch: ArrayView2<f64>,
    labels: &[usize],
) -> (f64, Gradients) {
    let layers = params.weights.len();
    let rows = batch.nrows();
    let (pre, inputs) = forward_batch(params, batch);

    let mut delta = pre[layers - 1].clone();
    let mut loss = 0.0;
    for (mut row, &label) in delta.axis_iter_mut(Axis(0)).zip(labels) {
        let y = softmax(row.as_slice().expect("contiguous row"));
        loss -= y[label].max(f64::MIN_POSITIVE).ln();
        for (d, p) in row.iter_mut().zip(&y) {
            *d = *p;
        }
        row[label] -= 1.0;
    }
    let scale = 1.0 / rows as f64;
    delta *= scale;

    let mut gw = vec![Array2::zeros((0, 0)); layers];
    let mut gb = vec![Array1::zeros(0); layers];
    for l in (0..layers).rev() {
        gw[l] = delta.t().dot(&inputs[l]);
        gb[l] = delta.sum_axis(Axis(0));
        if l > 0 {
            let mut back = delta.dot(&params.weights[l]);
            back.zip_mut_with(&pre[l - 1], |d, &z| {
                if z <= 0.0 {
                    *d = 0.0;
                }
            });
            delta = back;
        }
    }
    (
        loss * scale,
        Gradients {
            weights: gw,
            biases: gb,
        },
    )
}

/// Cross-entropy `-ln y_label` of one sample and its analytic gradients.
pub fn gradients(params: &NetworkParams, x: &[f64], label: usize) -> Result<(f64, Gradients)> {
    check_label(label, params.classes())?;
    // validates dimensions and finiteness
    forward(params, x)?;
    let batch = Array2::from_shape_vec((1, x.len()), x.to_vec()).expect("1 x K");
    Ok(batch_gradients(params, batch.view(), &[label]))
}

fn check_label(label: usize, classes: usize) -> Result<()> {
    if label >= classes {
        return Err(CsixError::IndexOutOfRange {
            index: label + 1,
            max: classes,
        });
    }
    Ok(())
}

fn sample_loss(params: &NetworkParams, x: &[f64], label: usize) -> Result<f64> {
    let trace = forward(params, x)?;
    Ok(-trace.y[label].max(f64::MIN_POSITIVE).ln())
}

/// Largest relative disagreement between the analytic gradient and a central
/// finite difference with step `epsilon`, over every weight and bias.
///
/// Relative error is `|g - g_fd| / max(|g|, |g_fd|, 1e-7)`; the floor keeps
/// gradients that are zero up to roundoff from dominating the result.
pub fn gradient_check(
    params: &NetworkParams,
    x: &[f64],
    label: usize,
    epsilon: f64,
) -> Result<f64> {
    if !(epsilon > 0.0) {
        return Err(CsixError::InvalidInput("epsilon must be positive".into()));
    }
    let (_, analytic) = gradients(params, x, label)?;
    let mut probe = params.clone();
    let mut worst = 0.0f64;
    let rel = |a: f64, n: f64| (a - n).abs() / a.abs().max(n.abs()).max(1e-7);

    for l in 0..params.weights.len() {
        for idx in 0..params.weights[l].len() {
            let (r, c) = (idx / params.weights[l].ncols(), idx % params.weights[l].ncols());
            let orig = params.weights[l][[r, c]];
            probe.weights[l][[r, c]] = orig + epsilon;
            let up = sample_loss(&probe, x, label)?;
            probe.weights[l][[r, c]] = orig - epsilon;
            let down = sample_loss(&probe, x, label)?;
            probe.weights[l][[r, c]] = orig;
            worst = worst.max(rel(analytic.weights[l][[r, c]], (up - down) / (2.0 * epsilon)));
        }
        for i in 0..params.biases[l].len() {
            let orig = params.biases[l][i];
            probe.biases[l][i] = orig + epsilon;
            let up = sample_loss(&probe, x, label)?;
            probe.biases[l][i] = orig - epsilon;
            let down = sample_loss(&probe, x, label)?;
            probe.biases[l][i] = orig;
            worst = worst.max(rel(analytic.biases[l][i], (up - down) / (2.0 * epsilon)));
        }
    }
    Ok(worst)
}

fn design_matrix(data: &Dataset) -> Array2<f64> {
    let k = data.channels();
    let flat: Vec<f64> = data
        .samples()
        .iter()
        .flat_map(|s| s.channels.iter().copied())
        .collect();
    Array2::from_shape_vec((data.len(), k), flat).expect("rows of length K")
}

fn gather(x: &Array2<f64>, rows: &[usize]) -> Array2<f64> {
    x.select(Axis(0), rows)
}

/// Greedy layer-wise pretraining: each hidden layer is trained as a ReLU
/// autoencoder with a tied linear decoder on the activations of the layers
/// below it, minimizing mean squared reconstruction error.
fn pretrain(
    params: &mut NetworkParams,
    x: &Array2<f64>,
    config: &TrainConfig,
    rng: &mut ChaCha8Rng,
) -> Result<()> {
    let hidden = params.hidden_layers();
    let mut layer_input = x.clone();
    let mut order: Vec<usize> = (0..x.nrows()).collect();
    for l in 0..hidden {
        let n_in = params.dims()[l];
        // start the decoder at the input mean so hidden units only model deviations
        let mut decoder_bias = layer_input
            .mean_axis(Axis(0))
            .unwrap_or_else(|| Array1::zeros(n_in));
        for epoch in 0..config.pretrain_iters {
            order.shuffle(rng);
            let mut total = 0.0;
            for chunk in order.chunks(config.batch_size) {
                let batch = gather(&layer_input, chunk);
                let rows = batch.nrows() as f64;
                let w = &params.weights[l];
                let z = batch.dot(&w.t()) + &params.biases[l];
                let h = z.mapv(relu);
                let recon = h.dot(w) + &decoder_bias;
                // squared error averaged over both samples and features
                let err = (&recon - &batch) / (rows * n_in as f64);
                total += err.iter().map(|e| e * e).sum::<f64>() * rows * n_in as f64 * 0.5;

                let mut dh = err.dot(&w.t());
                dh.zip_mut_with(&z, |d, &zz| {
                    if zz <= 0.0 {
                        *d = 0.0;
                    }
                });
                let gw = dh.t().dot(&batch) + h.t().dot(&err);
                let gb = dh.sum_axis(Axis(0));
                let gc = err.sum_axis(Axis(0));
                params.weights[l].scaled_add(-config.learning_rate, &gw);
                params.biases[l].scaled_add(-config.learning_rate, &gb);
                decoder_bias.scaled_add(-config.learning_rate, &gc);
            }
            if !total.is_finite() || !params.is_finite() {
                return Err(CsixError::Numeric(format!(
                    "pretraining of hidden layer {} diverged at epoch {}",
                    l + 1,
                    epoch + 1
                )));
            }
        }
        layer_input = (layer_input.dot(&params.weights[l].t()) + &params.biases[l]).mapv(relu);
    }
    Ok(())
}

/// Minibatch SGD on mean cross-entropy, optionally preceded by greedy
/// layer-wise pretraining. One iteration is one epoch over the shuffled
/// training set; the returned history holds the mean loss of every epoch.
pub fn train(
    params: &NetworkParams,
    data: &Dataset,
    config: &TrainConfig,
) -> Result<(NetworkParams, Vec<f64>)> {
    config.validate()?;
    if data.is_empty() {
        return Err(CsixError::InvalidInput("training set is empty".into()));
    }
    if data.channels() != params.input_dim() {
        return Err(CsixError::DimensionMismatch {
            expected: params.input_dim(),
            got: data.channels(),
        });
    }
    let labels = data.labels();
    for &label in &labels {
        check_label(label, params.classes())?;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut params = params.clone();
    let x = design_matrix(data);
    if config.pretrain_iters > 0 && params.hidden_layers() > 0 {
        pretrain(&mut params, &x, config, &mut rng)?;
    }

    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut history = Vec::with_capacity(config.backprop_iters);
    let mut batch_labels = Vec::with_capacity(config.batch_size);
    for epoch in 0..config.backprop_iters {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for chunk in order.chunks(config.batch_size) {
            let batch = gather(&x, chunk);
            batch_labels.clear();
            batch_labels.extend(chunk.iter().map(|&i| labels[i]));
            let (loss, grads) = batch_gradients(&params, batch.view(), &batch_labels);
            total += loss * chunk.len() as f64;
            if config.learning_rate > 0.0 {
                for (w, g) in params.weights.iter_mut().zip(&grads.weights) {
                    w.scaled_add(-config.learning_rate, g);
                }
                for (b, g) in params.biases.iter_mut().zip(&grads.biases) {
                    b.scaled_add(-config.learning_rate, g);
                }
            }
        }
        let mean = total / data.len() as f64;
        if !mean.is_finite() || !params.is_finite() {
            return Err(CsixError::Numeric(format!(
                "training diverged at epoch {} (loss {mean})",
                epoch + 1
            )));
        }
        history.push(mean);
    }
    Ok((params, history))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{CsiSample, Split};
    use crate::mlp::{init_random, predict};

    fn toy_separable() -> Dataset {
        let mut samples = Vec::new();
        for i in 0..20 {
            let t = i as f64 / 19.0;
            samples.push(CsiSample {
                channels: vec![1.0 + t, 0.2 * t],
                location: 1,
                session: 0,
                split: Split::Train,
            });
            samples.push(CsiSample {
                channels: vec![0.2 * t, 1.0 + t],
                location: 2,
                session: 0,
                split: Split::Train,
            });
        }
        Dataset::new(samples, 2, 1, 2).unwrap()
    }

    #[test]
    fn separable_toy_set_is_learned() {
        let data = toy_separable();
        let p0 = init_random(&[2, 8, 2], 5, Init::Scaled).unwrap();
        let cfg = TrainConfig {
            backprop_iters: 200,
            pretrain_iters: 5,
            learning_rate: 0.1,
            batch_size: 8,
            seed: 9,
            init: Init::Scaled,
        };
        let (p, hist) = train(&p0, &data, &cfg).unwrap();
        assert_eq!(hist.len(), 200);
        assert!(hist.last().unwrap() < &hist[0]);
        for s in data.samples() {
            assert_eq!(predict(&p, &s.channels).unwrap(), s.class());
        }
    }

    #[test]
    fn zero_learning_rate_is_a_no_op() {
        let data = toy_separable();
        let p0 = init_random(&[2, 4, 2], 1, Init::Scaled).unwrap();
        let cfg = TrainConfig {
            backprop_iters: 5,
            pretrain_iters: 0,
            learning_rate: 0.0,
            ..TrainConfig::default()
        };
        let (p, hist) = train(&p0, &data, &cfg).unwrap();
        assert_eq!(p, p0);
        // batch order changes the summation order, so only approximately equal
        assert!(hist.windows(2).all(|w| (w[0] - w[1]).abs() < 1e-12 * w[0]));
    }

    #[test]
    fn training_is_deterministic() {
        let data = toy_separable();
        let p0 = init_random(&[2, 6, 5, 2], 2, Init::Scaled).unwrap();
        let cfg = TrainConfig {
            backprop_iters: 20,
            pretrain_iters: 3,
            ..TrainConfig::default()
        };
        assert_eq!(train(&p0, &data, &cfg).unwrap(), train(&p0, &data, &cfg).unwrap());
    }

    #[test]
    fn label_outside_network_is_rejected() {
        let data = toy_separable();
        let p0 = init_random(&[2, 4, 1], 1, Init::Scaled).unwrap();
        assert!(train(&p0, &data, &TrainConfig::default()).is_err());
    }

    #[test]
    fn divergence_is_reported() {
        let data = toy_separable();
        let p0 = init_random(&[2, 4, 2], 1, Init::GaussianUnit).unwrap();
        let cfg = TrainConfig {
            backprop_iters: 50,
            pretrain_iters: 0,
            learning_rate: 1e200,
            ..TrainConfig::default()
        };
        let err = train(&p0, &data, &cfg).unwrap_err();
        assert!(matches!(err, CsixError::Numeric(_)), "{err}");
    }

    #[test]
    fn tiny_net_gradient_check() {
        let p = init_random(&[2, 3, 2], 4, Init::GaussianUnit).unwrap();
        let err = gradient_check(&p, &[0.7, -0.3], 1, 1e-5).unwrap();
        assert!(err < 1e-4, "{err}");
    }

    #[test]
    fn finite_difference_error_shrinks_with_epsilon() {
        let p = init_random(&[3, 4, 3], 8, Init::GaussianUnit).unwrap();
        let x = [0.4, 1.1, -0.6];
        let coarse = gradient_check(&p, &x, 2, 1e-3).unwrap();
        let fine = gradient_check(&p, &x, 2, 1e-5).unwrap();
        assert!(fine < coarse, "{fine} !< {coarse}");
    }

    #[test]
    fn tied_units_get_tied_gradients() {
        let p = NetworkParams::from_parts(
            vec![2, 3, 2],
            vec![Array2::zeros((3, 2)), Array2::zeros((2, 3))],
            vec![Array1::zeros(3), Array1::zeros(2)],
        )
        .unwrap();
        let (loss, g) = gradients(&p, &[1.0, 1.0], 0).unwrap();
        assert!((loss - 2f64.ln()).abs() < 1e-15);
        let w0 = &g.weights[0];
        for r in 1..3 {
            assert_eq!(w0.row(r), w0.row(0));
        }
        assert_eq!(w0[[0, 0]], w0[[0, 1]]);
        assert_eq!(g.biases[1][0], -g.biases[1][1]);
    }
}
