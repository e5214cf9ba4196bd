use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};
use crate::metric::{MetricSpace, Point};
use crate::partition::{CellStats, Votes, VoronoiPartition};

use super::{Classifier, PlugInRule};

/// Majority vote of the labeled points in the query's Voronoi cell.
///
/// Construction costs `m * n` distance evaluations; a query costs at most `m`.
#[derive(Clone, Debug)]
pub struct ProtoNnModel {
    partition: VoronoiPartition,
    cells: Vec<Votes>,
    n_classes: usize,
}

impl ProtoNnModel {
    pub fn fit(data: &LabeledDataset, nuclei: Vec<Point>, space: &MetricSpace) -> Result<Self> {
        let (_, n_classes) = data.classes()?;
        let partition = VoronoiPartition::build(space, nuclei)?;
        let cells = match partition.tally(data)? {
            CellStats::Classes(v) => v,
            CellStats::Sums { .. } => unreachable!("classification data tallies classes"),
        };
        Ok(ProtoNnModel {
            partition,
            cells,
            n_classes,
        })
    }

    pub(crate) fn from_parts(partition: VoronoiPartition, cells: Vec<Votes>, n_classes: usize) -> Result<Self> {
        if cells.len() != partition.len() || cells.iter().any(|c| c.n_classes() != n_classes) {
            return Err(Error::ModelFormat("cell histograms do not match the partition".into()));
        }
        Ok(ProtoNnModel {
            partition,
            cells,
            n_classes,
        })
    }

    pub fn partition(&self) -> &VoronoiPartition {
        &self.partition
    }

    /// Per-cell class histograms `c_{l,j}`.
    pub fn cells(&self) -> &[Votes] {
        &self.cells
    }

    /// `P~_{n,j}` for every cell; all-zero rows for empty cells.
    pub fn posteriors(&self) -> Vec<Vec<f64>> {
        self.cells.iter().map(Votes::posterior).collect()
    }
}

impl Classifier for ProtoNnModel {
    fn n_classes(&self) -> usize {
        self.n_classes
    }

    fn predict(&self, x: &Point) -> Result<usize> {
        Ok(self.cells[self.partition.assign_cell(x)?].argmax())
    }
}

impl PlugInRule for ProtoNnModel {
    fn votes(&self, x: &Point) -> Result<Votes> {
        Ok(self.cells[self.partition.assign_cell(x)?].clone())
    }
}

pub fn fit_proto_nn(data: &LabeledDataset, nuclei: Vec<Point>, space: &MetricSpace) -> Result<ProtoNnModel> {
    ProtoNnModel::fit(data, nuclei, space)
}

/// Hold-out choice of the nucleus count: fits Proto-NN on the first `m`
/// points of `nucleus_pool` for each candidate `m` and keeps the one with the
/// fewest hold-out errors, smallest `m` on ties.
pub fn select_proto_nn_size(
    train: &LabeledDataset,
    holdout: &LabeledDataset,
    nucleus_pool: &[Point],
    sizes: &[usize],
    space: &MetricSpace,
) -> Result<(usize, ProtoNnModel)> {
    let (truth, _) = holdout.classes()?;
    let mut best: Option<(usize, usize, ProtoNnModel)> = None;
    for &m in sizes {
        if m == 0 || m > nucleus_pool.len() {
            return Err(Error::KOutOfRange {
                k: m,
                n: nucleus_pool.len(),
            });
        }
        let model = ProtoNnModel::fit(train, nucleus_pool[..m].to_vec(), space)?;
        let mut errors = 0;
        for (x, &y) in holdout.points().iter().zip(truth) {
            errors += usize::from(model.predict(x)? != y);
        }
        let better = match &best {
            None => true,
            Some((e, bm, _)) => errors < *e || (errors == *e && m < *bm),
        };
        if better {
            best = Some((errors, m, model));
        }
    }
    best.map(|(_, m, model)| (m, model))
        .ok_or(Error::Empty("candidate sizes"))
}
