use std::fs;
use std::path::Path;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use super::NetworkParams;
use crate::dataset::MinMax;
use crate::error::{CsixError, Result};

pub const MODEL_FORMAT: &str = "mlp-v1";

/// On-disk layout: weights are row-major, one flat array per layer.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelDoc {
    format: String,
    dims: Vec<usize>,
    weights: Vec<Vec<f64>>,
    biases: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    input_scaling: Option<MinMax>,
}

pub fn model_to_json(params: &NetworkParams) -> String {
    let doc = ModelDoc {
        format: MODEL_FORMAT.to_string(),
        dims: params.dims().to_vec(),
        weights: params
            .weights
            .iter()
            .map(|w| w.iter().copied().collect())
            .collect(),
        biases: params.biases.iter().map(|b| b.to_vec()).collect(),
        input_scaling: params.input_scaling.clone(),
    };
    serde_json::to_string(&doc).expect("model document serializes")
}

pub fn model_from_json(text: &str) -> Result<NetworkParams> {
    let doc: ModelDoc =
        serde_json::from_str(text).map_err(|e| CsixError::Format(e.to_string()))?;
    if doc.format != MODEL_FORMAT {
        return Err(CsixError::Format(format!(
            "unsupported format {:?}, expected {MODEL_FORMAT:?}",
            doc.format
        )));
    }
    if doc.dims.len() < 2 || doc.weights.len() != doc.dims.len() - 1 {
        return Err(CsixError::Format(format!(
            "{} weight arrays for dims {:?}",
            doc.weights.len(),
            doc.dims
        )));
    }
    let weights = doc
        .weights
        .into_iter()
        .zip(doc.dims.windows(2))
        .enumerate()
        .map(|(l, (flat, pair))| {
            Array2::from_shape_vec((pair[1], pair[0]), flat).map_err(|_| {
                CsixError::Format(format!(
                    "layer {} weights do not hold {}x{} values",
                    l + 1,
                    pair[1],
                    pair[0]
                ))
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let biases = doc.biases.into_iter().map(Array1::from).collect();
    let mut params = NetworkParams::from_parts(doc.dims, weights, biases)
        .map_err(|e| CsixError::Format(e.to_string()))?;
    if let Some(scaling) = &doc.input_scaling {
        let k = params.input_dim();
        let finite = scaling.min.iter().chain(&scaling.max).all(|v| v.is_finite());
        if scaling.min.len() != k || scaling.max.len() != k || !finite {
            return Err(CsixError::Format(format!(
                "input scaling must hold {k} finite minima and maxima"
            )));
        }
    }
    params.input_scaling = doc.input_scaling;
    Ok(params)
}

/// Serde's float formatting is shortest-round-trip, so reloading reproduces
/// every parameter bit for bit.
pub fn save_model(params: &NetworkParams, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, model_to_json(params)).map_err(|e| CsixError::io(path, e))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<NetworkParams> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| CsixError::io(path, e))?;
    model_from_json(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mlp::{forward, init_random, Init};

    #[test]
    fn round_trip_is_exact() {
        let p = init_random(&[5, 4, 3], 17, Init::GaussianUnit).unwrap();
        let back = model_from_json(&model_to_json(&p)).unwrap();
        assert_eq!(back, p);
        let x = [0.3, 1.7, 0.0, 2.2, 0.9];
        assert_eq!(forward(&back, &x).unwrap().y, forward(&p, &x).unwrap().y);
    }

    #[test]
    fn truncated_and_mismatched_documents_fail() {
        let p = init_random(&[3, 2], 1, Init::Scaled).unwrap();
        let text = model_to_json(&p);
        assert!(model_from_json(&text[..text.len() / 2]).is_err());

        let wrong = text.replace("mlp-v1", "mlp-v0");
        assert!(model_from_json(&wrong).is_err());

        let shape = r#"{"format":"mlp-v1","dims":[3,2],"weights":[[1,2,3]],"biases":[[0,0]]}"#;
        assert!(matches!(model_from_json(shape), Err(CsixError::Format(_))));
    }

    #[test]
    fn input_scaling_round_trips_and_is_checked() {
        let mut p = init_random(&[2, 2], 3, Init::Scaled).unwrap();
        assert!(!model_to_json(&p).contains("input_scaling"));
        p.input_scaling = Some(MinMax {
            min: vec![0.1, 0.2],
            max: vec![1.5, 2.5],
        });
        let text = model_to_json(&p);
        assert_eq!(model_from_json(&text).unwrap(), p);
        let short = text.replace("[0.1,0.2]", "[0.1]");
        assert!(matches!(model_from_json(&short), Err(CsixError::Format(_))));
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.json");
        let p = init_random(&[4, 3, 2], 2, Init::Scaled).unwrap();
        save_model(&p, &path).unwrap();
        assert_eq!(load_model(&path).unwrap(), p);
    }
}
