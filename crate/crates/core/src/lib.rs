//! Prototype nearest-neighbor rules in general metric spaces.
//!
//! The crate provides metric spaces and exact neighbor search
//! ([`metric`], [`neighbors`]), Voronoi partitions over a set of nuclei
//! ([`partition`]), the fitted rules built on them ([`models`]), synthetic
//! distributions with known posteriors ([`synthetic`]) and an experiment
//! driver that measures excess risk and fits convergence rates
//! ([`harness`]).

pub mod dataset;
pub mod error;
pub mod harness;
pub mod metric;
pub mod models;
pub mod neighbors;
pub mod partition;
pub mod synthetic;

pub use dataset::{LabeledDataset, Labels};
pub use error::{Error, Result};
pub use metric::{AugmentedSpace, DistanceTable, MetricSpace, Point};
pub use partition::{VoronoiPartition, Votes};
