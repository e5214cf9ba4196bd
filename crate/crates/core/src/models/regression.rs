use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};
use crate::metric::{MetricSpace, Point};
use crate::partition::{CellStats, VoronoiPartition};

/// Partitioning regression estimate: the mean label of the query's cell.
#[derive(Clone, Debug)]
pub struct PartitionRegressor {
    partition: VoronoiPartition,
    means: Vec<f64>,
    counts: Vec<usize>,
    n: usize,
}

impl PartitionRegressor {
    pub fn fit(data: &LabeledDataset, nuclei: Vec<Point>, space: &MetricSpace) -> Result<Self> {
        data.real_labels()?;
        let partition = VoronoiPartition::build(space, nuclei)?;
        let (sums, counts) = match partition.tally(data)? {
            CellStats::Sums { sums, counts } => (sums, counts),
            CellStats::Classes(_) => unreachable!("real labels tally sums"),
        };
        let means = sums
            .iter()
            .zip(&counts)
            .map(|(&s, &c)| if c == 0 { 0.0 } else { s / c as f64 })
            .collect();
        Ok(PartitionRegressor {
            partition,
            means,
            counts,
            n: data.len(),
        })
    }

    pub(crate) fn from_parts(
        partition: VoronoiPartition,
        means: Vec<f64>,
        counts: Vec<usize>,
        n: usize,
    ) -> Result<Self> {
        if means.len() != partition.len() || counts.len() != partition.len() {
            return Err(Error::ModelFormat("cell means do not match the partition".into()));
        }
        Ok(PartitionRegressor {
            partition,
            means,
            counts,
            n,
        })
    }

    pub fn partition(&self) -> &VoronoiPartition {
        &self.partition
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn training_size(&self) -> usize {
        self.n
    }

    /// Cell mean at `x`. With `truncated`, cells holding fewer than `ln n`
    /// training points predict 0.
    pub fn predict(&self, x: &Point, truncated: bool) -> Result<f64> {
        let cell = self.partition.assign_cell(x)?;
        if truncated && (self.counts[cell] as f64) < (self.n as f64).ln() {
            return Ok(0.0);
        }
        Ok(self.means[cell])
    }
}

pub fn fit_partition_regressor(
    data: &LabeledDataset,
    nuclei: Vec<Point>,
    space: &MetricSpace,
) -> Result<PartitionRegressor> {
    PartitionRegressor::fit(data, nuclei, space)
}
