//! Voronoi partitions induced by an ordered nucleus set.
//!
//! A point belongs to the cell of its nearest nucleus; among equidistant
//! nuclei the one drawn first wins. Cells exist only through this
//! assignment rule.

use crate::dataset::{LabeledDataset, Labels};
use crate::error::{Error, Result};
use crate::metric::{MetricSpace, Point};
use crate::neighbors::NeighborIndex;

/// Class histogram of a cell or neighborhood.
///
/// The estimated posterior is `counts[j] / total`, with `0/0 = 0`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Votes {
    counts: Vec<u32>,
    total: u32,
}

impl Votes {
    pub fn zeros(n_classes: usize) -> Self {
        Votes {
            counts: vec![0; n_classes],
            total: 0,
        }
    }

    pub fn from_counts(counts: Vec<u32>) -> Self {
        let total = counts.iter().sum();
        Votes { counts, total }
    }

    pub fn from_labels(labels: impl IntoIterator<Item = usize>, n_classes: usize) -> Self {
        let mut v = Votes::zeros(n_classes);
        for y in labels {
            v.add(y);
        }
        v
    }

    #[inline]
    pub fn add(&mut self, label: usize) {
        self.counts[label] += 1;
        self.total += 1;
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    pub fn total(&self) -> u32 {
        self.total
    }

    pub fn n_classes(&self) -> usize {
        self.counts.len()
    }

    pub fn posterior(&self) -> Vec<f64> {
        if self.total == 0 {
            return vec![0.0; self.counts.len()];
        }
        let t = f64::from(self.total);
        self.counts.iter().map(|&c| f64::from(c) / t).collect()
    }

    /// Most frequent class, lowest index on ties (class 0 for an empty histogram).
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (j, &c) in self.counts.iter().enumerate().skip(1) {
            if c > self.counts[best] {
                best = j;
            }
        }
        best
    }
}

#[derive(Clone, Debug)]
pub struct VoronoiPartition {
    space: MetricSpace,
    index: NeighborIndex,
}

impl VoronoiPartition {
    pub fn build(space: &MetricSpace, nuclei: Vec<Point>) -> Result<Self> {
        if nuclei.is_empty() {
            return Err(Error::Empty("nucleus set"));
        }
        Ok(VoronoiPartition {
            space: space.clone(),
            index: NeighborIndex::build(space, nuclei)?,
        })
    }

    pub fn space(&self) -> &MetricSpace {
        &self.space
    }

    pub fn nuclei(&self) -> &[Point] {
        self.index.points()
    }

    /// Number of cells `m`.
    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }

    /// Cell of `x` (0-based).
    pub fn assign_cell(&self, x: &Point) -> Result<usize> {
        Ok(self.index.nearest(x)?.index)
    }

    pub fn tally(&self, data: &LabeledDataset) -> Result<CellStats> {
        let cells = data
            .points()
            .iter()
            .map(|x| self.assign_cell(x))
            .collect::<Result<Vec<_>>>()?;
        let m = self.len();
        Ok(match data.labels() {
            Labels::Classes { labels, n_classes } => {
                let mut votes = vec![Votes::zeros(*n_classes); m];
                for (&c, &y) in cells.iter().zip(labels) {
                    votes[c].add(y);
                }
                CellStats::Classes(votes)
            }
            Labels::Real(ys) => {
                let mut members: Vec<Vec<f64>> = vec![Vec::new(); m];
                for (&c, &y) in cells.iter().zip(ys) {
                    members[c].push(y);
                }
                let mut sums = Vec::with_capacity(m);
                let mut counts = Vec::with_capacity(m);
                for mut ys in members {
                    // fixed summation order keeps sums independent of data order
                    ys.sort_unstable_by(f64::total_cmp);
                    counts.push(ys.len());
                    sums.push(ys.iter().sum());
                }
                CellStats::Sums { sums, counts }
            }
        })
    }
}

/// Per-cell label statistics.
#[derive(Clone, Debug, PartialEq)]
pub enum CellStats {
    Classes(Vec<Votes>),
    Sums { sums: Vec<f64>, counts: Vec<usize> },
}

impl CellStats {
    /// `n_l` for every cell.
    pub fn counts(&self) -> Vec<usize> {
        match self {
            CellStats::Classes(v) => v.iter().map(|c| c.total() as usize).collect(),
            CellStats::Sums { counts, .. } => counts.clone(),
        }
    }
}

pub fn build_partition(space: &MetricSpace, nuclei: Vec<Point>) -> Result<VoronoiPartition> {
    VoronoiPartition::build(space, nuclei)
}

pub fn assign_cell(partition: &VoronoiPartition, x: &Point) -> Result<usize> {
    partition.assign_cell(x)
}

pub fn tally(partition: &VoronoiPartition, data: &LabeledDataset) -> Result<CellStats> {
    partition.tally(data)
}
