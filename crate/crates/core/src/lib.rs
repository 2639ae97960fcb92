//! Device-free indoor localization on Wi-Fi CSI fingerprints with an
//! explainable fully connected network.
//!
//! The crate covers the whole analysis pipeline: synthetic multipath CSI
//! generation, a ReLU/softmax MLP trained with cross-entropy, layer-wise
//! relevance propagation back to the 120 CSI channels, progressive channel
//! nullification/modification experiments, t-SNE with silhouette scoring,
//! k-NN/SVM reference classifiers, and SVG rendering of the resulting plots.

pub mod baselines;
pub mod cli;
pub mod dataset;
pub mod embedding;
pub mod error;
pub mod lrp;
pub mod manipulation;
pub mod mlp;
pub mod report;

pub use error::{CsixError, Result};
