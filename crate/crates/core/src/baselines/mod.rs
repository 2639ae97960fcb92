//! Reference classifiers on raw CSI and the shared evaluation metrics.

mod knn;
mod metrics;
mod svm;

pub use knn::{knn_predict, knn_predict_all, DEFAULT_K};
pub use metrics::{confusion, precision_recall, ClassMetric, ConfusionMatrix, EvalReport, Metrics};
pub use svm::{default_gamma, rbf, svm_train, BinarySvm, SvmConfig, SvmModel};
