use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};
use crate::metric::{MetricSpace, Point};
use crate::partition::{Votes, VoronoiPartition};

use super::knn::KnnVoter;
use super::{Classifier, PlugInRule};

/// Hybrid rule: each nucleus stores the class histogram of its k nearest
/// labeled points; a query is answered by its nearest nucleus.
#[derive(Clone, Debug)]
pub struct ProtoKnnModel {
    partition: VoronoiPartition,
    nucleus_votes: Vec<Votes>,
    k: usize,
    n_classes: usize,
}

impl ProtoKnnModel {
    pub fn fit(data: &LabeledDataset, nuclei: Vec<Point>, k: usize, space: &MetricSpace) -> Result<Self> {
        let (labels, n_classes) = data.classes()?;
        if data.is_empty() {
            return Err(Error::Empty("training set"));
        }
        if k == 0 || k > data.len() {
            return Err(Error::KOutOfRange { k, n: data.len() });
        }
        let partition = VoronoiPartition::build(space, nuclei)?;
        let voter = KnnVoter::build(space, data.points().to_vec(), labels.to_vec(), n_classes)?;
        let nucleus_votes = partition
            .nuclei()
            .iter()
            .map(|c| voter.votes(c, k))
            .collect::<Result<Vec<_>>>()?;
        Ok(ProtoKnnModel {
            partition,
            nucleus_votes,
            k,
            n_classes,
        })
    }

    pub(crate) fn from_parts(
        partition: VoronoiPartition,
        nucleus_votes: Vec<Votes>,
        k: usize,
        n_classes: usize,
    ) -> Result<Self> {
        if nucleus_votes.len() != partition.len()
            || nucleus_votes
                .iter()
                .any(|v| v.n_classes() != n_classes || v.total() as usize != k)
        {
            return Err(Error::ModelFormat("nucleus histograms do not match k or the partition".into()));
        }
        Ok(ProtoKnnModel {
            partition,
            nucleus_votes,
            k,
            n_classes,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn partition(&self) -> &VoronoiPartition {
        &self.partition
    }

    pub fn nucleus_votes(&self) -> &[Votes] {
        &self.nucleus_votes
    }
}

impl Classifier for ProtoKnnModel {
    fn n_classes(&self) -> usize {
        self.n_classes
    }

    fn predict(&self, x: &Point) -> Result<usize> {
        Ok(self.nucleus_votes[self.partition.assign_cell(x)?].argmax())
    }
}

impl PlugInRule for ProtoKnnModel {
    fn votes(&self, x: &Point) -> Result<Votes> {
        Ok(self.nucleus_votes[self.partition.assign_cell(x)?].clone())
    }
}

pub fn fit_proto_knn(
    data: &LabeledDataset,
    nuclei: Vec<Point>,
    k: usize,
    space: &MetricSpace,
) -> Result<ProtoKnnModel> {
    ProtoKnnModel::fit(data, nuclei, k, space)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(xs: &[f64]) -> Vec<Point> {
        xs.iter().map(|&x| Point::scalar(x)).collect()
    }

    #[test]
    fn nucleus_stores_neighborhood_vote() {
        let data = LabeledDataset::classification(line(&[4.0, 6.0, 100.0]), vec![0, 0, 1], 2).unwrap();
        let m = ProtoKnnModel::fit(&data, line(&[5.0]), 2, &MetricSpace::Euclidean).unwrap();
        assert_eq!(m.nucleus_votes()[0].posterior(), vec![1.0, 0.0]);
        for q in [-1e6, 5.0, 100.0] {
            assert_eq!(m.predict(&Point::scalar(q)).unwrap(), 0);
        }
    }

    #[test]
    fn k_equal_n_stores_global_frequencies() {
        let data = LabeledDataset::classification(line(&[0.0, 1.0, 2.0, 3.0]), vec![0, 1, 1, 2], 3).unwrap();
        let m = ProtoKnnModel::fit(&data, line(&[-5.0, 1.5, 9.0]), 4, &MetricSpace::Euclidean).unwrap();
        for v in m.nucleus_votes() {
            assert_eq!(v.counts(), &[1, 2, 1]);
        }
    }

    #[test]
    fn k_out_of_range() {
        let data = LabeledDataset::classification(line(&[0.0]), vec![0], 1).unwrap();
        assert!(matches!(
            ProtoKnnModel::fit(&data, line(&[0.0]), 2, &MetricSpace::Euclidean),
            Err(Error::KOutOfRange { .. })
        ));
    }
}
