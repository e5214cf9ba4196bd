//! Fitted predictors.
//!
//! All classifiers here are plug-in rules: they estimate the class
//! posteriors at a query as a [`Votes`] histogram and predict its argmax,
//! lowest class index on ties. Models are immutable once fitted.

mod gamma_net;
mod knn;
mod persist;
mod proto_knn;
mod proto_nn;
mod regression;

pub use gamma_net::{build_gamma_net, default_gamma_grid, fit_optinet_lite, GammaNetModel};
pub use knn::{predict_knn, KnnModel};
pub use persist::{FittedModel, ModelFile, Prediction, MODEL_FORMAT, MODEL_VERSION};
pub use proto_knn::{fit_proto_knn, ProtoKnnModel};
pub use proto_nn::{fit_proto_nn, select_proto_nn_size, ProtoNnModel};
pub use regression::{fit_partition_regressor, PartitionRegressor};

pub use crate::dataset::LabeledDataset;
pub use crate::partition::Votes;

use crate::error::Result;
use crate::metric::Point;

/// Anything that maps a point to a class in `0..n_classes`.
pub trait Classifier: Send + Sync {
    fn n_classes(&self) -> usize;

    fn predict(&self, x: &Point) -> Result<usize>;
}

/// A classifier that exposes its posterior estimate as a class histogram.
pub trait PlugInRule: Classifier {
    fn votes(&self, x: &Point) -> Result<Votes>;
}

/// `m_n = ceil(sqrt(n))` nuclei for Proto-NN.
pub fn default_proto_nn_size(n: usize) -> usize {
    ((n as f64).sqrt().ceil() as usize).max(1)
}

/// `k_n = floor(n^(2 beta / (2 beta + d)))`, at least 1 and at most `n`.
pub fn default_knn_k(n: usize, beta: f64, d: usize) -> usize {
    let e = 2.0 * beta / (2.0 * beta + d as f64);
    crate::harness::snap_floor((n as f64).powf(e)).clamp(1.0, n.max(1) as f64) as usize
}

/// `m = ceil(n / k)` nuclei for Proto-k-NN.
pub fn default_proto_knn_size(n: usize, k: usize) -> usize {
    n.div_ceil(k.max(1)).max(1)
}
