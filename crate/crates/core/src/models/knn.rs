use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};
use crate::metric::{MetricSpace, Point};
use crate::neighbors::{k_nearest, NeighborIndex};
use crate::partition::Votes;

use super::{Classifier, PlugInRule};

/// Class histograms of k-neighborhoods over a fixed labeled sample.
///
/// On one-dimensional line metrics the histogram is read from per-class
/// prefix counts over the sorted sample, so a query costs `O(log n + M)`.
#[derive(Clone, Debug)]
pub(crate) struct KnnVoter {
    space: MetricSpace,
    index: NeighborIndex,
    labels: Vec<usize>,
    n_classes: usize,
    prefix: Option<Vec<u32>>,
}

impl KnnVoter {
    pub(crate) fn build(
        space: &MetricSpace,
        points: Vec<Point>,
        labels: Vec<usize>,
        n_classes: usize,
    ) -> Result<Self> {
        let index = NeighborIndex::build(space, points)?;
        let prefix = index.line().map(|line| {
            let mut prefix = vec![0u32; (line.len() + 1) * n_classes];
            for s in 0..line.len() {
                let (done, rest) = prefix.split_at_mut((s + 1) * n_classes);
                rest[..n_classes].copy_from_slice(&done[s * n_classes..]);
                rest[labels[line.original(s)]] += 1;
            }
            prefix
        });
        Ok(KnnVoter {
            space: space.clone(),
            index,
            labels,
            n_classes,
            prefix,
        })
    }

    pub(crate) fn len(&self) -> usize {
        self.labels.len()
    }

    pub(crate) fn points(&self) -> &[Point] {
        self.index.points()
    }

    pub(crate) fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub(crate) fn votes(&self, x: &Point, k: usize) -> Result<Votes> {
        if let (Some(line), Some(prefix), Some([q])) =
            (self.index.line(), self.prefix.as_ref(), x.as_vector())
        {
            let sel = line.select(*q, k)?;
            let m = self.n_classes;
            let (a, b) = (sel.inner.start * m, sel.inner.end * m);
            let mut counts: Vec<u32> = (0..m).map(|j| prefix[b + j] - prefix[a + j]).collect();
            for s in sel.boundary {
                counts[self.labels[line.original(s)]] += 1;
            }
            return Ok(Votes::from_counts(counts));
        }
        let list = self.index.k_nearest(x, k)?;
        Ok(Votes::from_labels(
            list.indices().map(|i| self.labels[i]),
            self.n_classes,
        ))
    }
}

/// The k-nearest-neighbor rule over a stored labeled sample.
#[derive(Clone, Debug)]
pub struct KnnModel {
    voter: KnnVoter,
    k: usize,
}

impl KnnModel {
    pub fn fit(data: &LabeledDataset, k: usize, space: &MetricSpace) -> Result<Self> {
        let (labels, n_classes) = data.classes()?;
        if data.is_empty() {
            return Err(Error::Empty("training set"));
        }
        if k == 0 || k > data.len() {
            return Err(Error::KOutOfRange { k, n: data.len() });
        }
        Ok(KnnModel {
            voter: KnnVoter::build(space, data.points().to_vec(), labels.to_vec(), n_classes)?,
            k,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn points(&self) -> &[Point] {
        self.voter.points()
    }

    pub fn labels(&self) -> &[usize] {
        self.voter.labels()
    }

    pub fn space(&self) -> &MetricSpace {
        &self.voter.space
    }

    pub fn training_size(&self) -> usize {
        self.voter.len()
    }
}

impl Classifier for KnnModel {
    fn n_classes(&self) -> usize {
        self.voter.n_classes
    }

    fn predict(&self, x: &Point) -> Result<usize> {
        Ok(self.votes(x)?.argmax())
    }
}

impl PlugInRule for KnnModel {
    fn votes(&self, x: &Point) -> Result<Votes> {
        self.voter.votes(x, self.k)
    }
}

/// Brute-force k-NN decision at one query: returns the class and the
/// estimated posterior vector.
pub fn predict_knn(
    data: &LabeledDataset,
    x: &Point,
    k: usize,
    space: &MetricSpace,
) -> Result<(usize, Vec<f64>)> {
    let (labels, n_classes) = data.classes()?;
    let list = k_nearest(space, data.points(), x, k)?;
    let votes = Votes::from_labels(list.indices().map(|i| labels[i]), n_classes);
    Ok((votes.argmax(), votes.posterior()))
}
