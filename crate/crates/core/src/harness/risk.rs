//! Conditional risk of a fitted classifier under known posteriors.

use crate::error::{Error, Result};
use crate::metric::Point;
use crate::models::Classifier;
use crate::synthetic::DistributionSpec;

/// Rao-Blackwellized risk estimate over `T` test points.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RiskEstimate {
    /// Mean of `1 - P_{g(x)}(x)`.
    pub risk: f64,
    /// Sample standard deviation of the risk integrand over `sqrt(T)`.
    pub stderr: f64,
    /// Mean of `P_{g*(x)}(x) - P_{g(x)}(x)` on the same points.
    pub excess: f64,
    pub excess_stderr: f64,
    pub test_points: usize,
}

fn coords(p: &Point) -> Result<&[f64]> {
    match p {
        Point::Vector(v) => Ok(v),
        Point::Augmented { base, .. } => coords(base),
        _ => Err(Error::Config("synthetic families need vector points".into())),
    }
}

struct Moments {
    n: f64,
    sum: f64,
    sum_sq: f64,
}

impl Moments {
    fn new() -> Self {
        Moments { n: 0.0, sum: 0.0, sum_sq: 0.0 }
    }

    fn push(&mut self, v: f64) {
        self.n += 1.0;
        self.sum += v;
        self.sum_sq += v * v;
    }

    fn mean_and_stderr(&self) -> (f64, f64) {
        let mean = self.sum / self.n;
        if self.n < 2.0 {
            return (mean, 0.0);
        }
        let var = ((self.sum_sq - self.n * mean * mean) / (self.n - 1.0)).max(0.0);
        (mean, (var / self.n).sqrt())
    }
}

/// Evaluates `predict` at every test point. `points[i]` carries the
/// coordinates; `predict(i)` returns the class the rule assigns there.
pub(crate) fn measure(
    spec: &DistributionSpec,
    points: &[Point],
    mut predict: impl FnMut(usize) -> Result<usize>,
) -> Result<RiskEstimate> {
    if points.is_empty() {
        return Err(Error::Empty("test sample"));
    }
    let m = spec.n_classes();
    let mut post = vec![0.0; m];
    let (mut risk, mut excess) = (Moments::new(), Moments::new());
    for (i, p) in points.iter().enumerate() {
        spec.posterior_into(coords(p)?, &mut post);
        let g = predict(i)?;
        if g >= m {
            return Err(Error::LabelOutOfRange { label: g as i64 + 1, classes: m });
        }
        let best = post.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        risk.push(1.0 - post[g]);
        excess.push(best - post[g]);
    }
    let (risk, stderr) = risk.mean_and_stderr();
    let (excess, excess_stderr) = excess.mean_and_stderr();
    Ok(RiskEstimate {
        risk,
        stderr,
        excess,
        excess_stderr,
        test_points: points.len(),
    })
}

/// `L(g)` given the training sample, estimated from `test_points` fresh
/// draws of `X` as the mean of `1 - P_{g(x)}(x)`.
pub fn conditional_risk(
    spec: &DistributionSpec,
    model: &dyn Classifier,
    test_points: usize,
    seed: u64,
) -> Result<RiskEstimate> {
    let points = spec.sample_points(test_points, seed);
    measure(spec, &points, |i| model.predict(&points[i]))
}

/// The Bayes rule `g*` of a synthetic family.
#[derive(Clone, Debug)]
pub struct BayesClassifier {
    spec: DistributionSpec,
}

impl BayesClassifier {
    pub fn new(spec: DistributionSpec) -> Self {
        BayesClassifier { spec }
    }
}

impl Classifier for BayesClassifier {
    fn n_classes(&self) -> usize {
        self.spec.n_classes()
    }

    fn predict(&self, x: &Point) -> Result<usize> {
        Ok(self.spec.bayes_class(coords(x)?))
    }
}

/// Predicts one class everywhere.
#[derive(Clone, Copy, Debug)]
pub struct ConstantClassifier {
    pub class: usize,
    pub n_classes: usize,
}

impl Classifier for ConstantClassifier {
    fn n_classes(&self) -> usize {
        self.n_classes
    }

    fn predict(&self, _: &Point) -> Result<usize> {
        Ok(self.class)
    }
}
