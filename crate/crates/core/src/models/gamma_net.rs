use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};
use crate::metric::{MetricSpace, Point};
use crate::partition::Votes;

use super::proto_nn::ProtoNnModel;
use super::{Classifier, PlugInRule};

/// Greedy gamma-net: sweeps `points` in index order and keeps a point iff it
/// is at distance `>= gamma` from every point kept so far. The result is
/// gamma-separated and maximal. Returns indices into `points`.
pub fn build_gamma_net(points: &[Point], gamma: f64, space: &MetricSpace) -> Result<Vec<usize>> {
    if !(gamma > 0.0) {
        return Err(Error::NonPositive("gamma", gamma));
    }
    if points.is_empty() {
        return Err(Error::Empty("point set"));
    }
    let mut net: Vec<usize> = Vec::new();
    'candidates: for (i, p) in points.iter().enumerate() {
        for &j in &net {
            if space.distance(p, &points[j])? < gamma {
                continue 'candidates;
            }
        }
        net.push(i);
    }
    Ok(net)
}

/// Candidate scales `diam * 2^-i` for `i = 0..=ceil(log2 n)`, where `diam` is
/// the empirical diameter (1 when all points coincide).
pub fn default_gamma_grid(points: &[Point], space: &MetricSpace) -> Result<Vec<f64>> {
    if points.is_empty() {
        return Err(Error::Empty("point set"));
    }
    let mut diameter = 0.0_f64;
    for (i, a) in points.iter().enumerate() {
        for b in &points[i + 1..] {
            diameter = diameter.max(space.distance(a, b)?);
        }
    }
    if diameter == 0.0 {
        diameter = 1.0;
    }
    let levels = (points.len() as f64).log2().ceil().max(0.0) as i32;
    Ok((0..=levels).map(|i| diameter * 2f64.powi(-i)).collect())
}

/// Voronoi majority vote over a gamma-net of the training points, with
/// `gamma` chosen on a hold-out set.
#[derive(Clone, Debug)]
pub struct GammaNetModel {
    gamma: f64,
    inner: ProtoNnModel,
    /// `(gamma, hold-out errors)` for every candidate, in candidate order.
    holdout_errors: Vec<(f64, usize)>,
}

impl GammaNetModel {
    /// Fits the net classifier for one fixed `gamma`.
    pub fn fit(train: &LabeledDataset, gamma: f64, space: &MetricSpace) -> Result<Self> {
        let net = build_gamma_net(train.points(), gamma, space)?;
        let nuclei = net.iter().map(|&i| train.points()[i].clone()).collect();
        Ok(GammaNetModel {
            gamma,
            inner: ProtoNnModel::fit(train, nuclei, space)?,
            holdout_errors: Vec::new(),
        })
    }

    pub(crate) fn from_parts(gamma: f64, inner: ProtoNnModel) -> Self {
        GammaNetModel {
            gamma,
            inner,
            holdout_errors: Vec::new(),
        }
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn net(&self) -> &[Point] {
        self.inner.partition().nuclei()
    }

    pub fn holdout_errors(&self) -> &[(f64, usize)] {
        &self.holdout_errors
    }

    pub(crate) fn inner(&self) -> &ProtoNnModel {
        &self.inner
    }
}

impl Classifier for GammaNetModel {
    fn n_classes(&self) -> usize {
        self.inner.n_classes()
    }

    fn predict(&self, x: &Point) -> Result<usize> {
        self.inner.predict(x)
    }
}

impl PlugInRule for GammaNetModel {
    fn votes(&self, x: &Point) -> Result<Votes> {
        self.inner.votes(x)
    }
}

/// Builds a net classifier for every candidate and keeps the one with the
/// fewest hold-out errors; equal error counts go to the smaller gamma.
pub fn fit_optinet_lite(
    train: &LabeledDataset,
    holdout: &LabeledDataset,
    gammas: &[f64],
    space: &MetricSpace,
) -> Result<GammaNetModel> {
    if gammas.is_empty() {
        return Err(Error::Empty("gamma candidate list"));
    }
    if holdout.is_empty() {
        return Err(Error::Empty("hold-out set"));
    }
    let (truth, _) = holdout.classes()?;
    let mut table = Vec::with_capacity(gammas.len());
    let mut best: Option<(usize, GammaNetModel)> = None;
    for &gamma in gammas {
        let model = GammaNetModel::fit(train, gamma, space)?;
        let mut errors = 0;
        for (x, &y) in holdout.points().iter().zip(truth) {
            errors += usize::from(model.predict(x)? != y);
        }
        table.push((gamma, errors));
        let better = match &best {
            None => true,
            Some((e, m)) => errors < *e || (errors == *e && gamma < m.gamma),
        };
        if better {
            best = Some((errors, model));
        }
    }
    let (_, mut model) = best.expect("at least one candidate");
    model.holdout_errors = table;
    Ok(model)
}
