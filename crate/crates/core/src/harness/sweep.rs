//! Risk-versus-n sweeps.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};
use crate::metric::{default_delta, AugmentedSpace, MetricSpace, Point};
use crate::models::{
    default_gamma_grid, fit_optinet_lite, Classifier, KnnModel, ProtoKnnModel, ProtoNnModel,
};

use super::config::{Augmentation, ClassifierKind, Experiment, ExperimentConfig};
use super::risk::{measure, BayesClassifier};
use super::seeds::{derive_seed, Stream};
use super::slope::fit_log_slope;

/// One `(n, trial)` measurement.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrialRow {
    pub n: usize,
    pub trial: usize,
    pub k: Option<usize>,
    pub m: Option<usize>,
    pub risk: f64,
    pub bayes_risk: f64,
    /// Paired estimate of `L(g_n) - L*` on the test points.
    pub excess: f64,
    /// Standard error of `risk`.
    pub stderr: f64,
}

/// Across-trial aggregate at one grid point.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GridPoint {
    pub n: usize,
    pub mean_excess: f64,
    /// Across-trial standard deviation of the excess over `sqrt(trials)`.
    pub excess_stderr: f64,
    pub mean_risk: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RiskReport {
    pub family: String,
    pub classifier: String,
    pub bayes_risk: f64,
    pub theoretical_exponent: Option<f64>,
    /// Sorted by `(n, trial)`.
    pub rows: Vec<TrialRow>,
    pub grid: Vec<GridPoint>,
}

/// Fields of the summary JSON.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Summary {
    pub slope: Option<f64>,
    pub slope_stderr: Option<f64>,
    pub theoretical_exponent: Option<f64>,
    pub grid: Vec<usize>,
    pub mean_excess: Vec<f64>,
}

fn cell<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

impl RiskReport {
    /// Writes `n,trial,k,m,risk,bayes_risk,excess,stderr` rows. Unused `k`
    /// or `m` fields are empty. Floats use the shortest round-trip form.
    pub fn write_csv(&self, writer: impl Write) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record(["n", "trial", "k", "m", "risk", "bayes_risk", "excess", "stderr"])?;
        for r in &self.rows {
            wtr.write_record([
                r.n.to_string(),
                r.trial.to_string(),
                cell(r.k),
                cell(r.m),
                r.risk.to_string(),
                r.bayes_risk.to_string(),
                r.excess.to_string(),
                r.stderr.to_string(),
            ])?;
        }
        wtr.flush().map_err(|e| Error::io("<csv output>", e))?;
        Ok(())
    }

    /// Slope fields are `None` when fewer than three grid points have
    /// positive mean excess.
    pub fn summary(&self) -> Summary {
        let fit = fit_log_slope(self).ok();
        Summary {
            slope: fit.as_ref().map(|f| f.slope),
            slope_stderr: fit.as_ref().map(|f| f.stderr),
            theoretical_exponent: self.theoretical_exponent,
            grid: self.grid.iter().map(|g| g.n).collect(),
            mean_excess: self.grid.iter().map(|g| g.mean_excess).collect(),
        }
    }
}

/// Worker count from `METRIC_PROTO_THREADS`, else all cores.
pub fn thread_count() -> usize {
    std::env::var("METRIC_PROTO_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&t| t > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

struct Lifter(Option<AugmentedSpace>);

impl Lifter {
    fn space<'a>(&'a self, base: &'a MetricSpace) -> &'a MetricSpace {
        self.0.as_ref().map_or(base, AugmentedSpace::space)
    }

    // each sample gets its own index block so tie-breakers never repeat
    fn lift(&self, points: Vec<Point>, block: u64) -> Vec<Point> {
        match &self.0 {
            None => points,
            Some(aug) => points
                .into_iter()
                .enumerate()
                .map(|(i, p)| aug.lift(p, (block << 40) | i as u64))
                .collect(),
        }
    }
}

fn run_trial(
    e: &Experiment,
    (n, k, m): (usize, Option<usize>, Option<usize>),
    trial: usize,
    bayes_risk: f64,
) -> Result<TrialRow> {
    let seed = |s| derive_seed(e.seed, n as u64, trial as u64, s);
    let spec = &e.spec;
    let train = spec.sample(n, seed(Stream::Labeled));
    let lifter = Lifter(match e.augmentation {
        Augmentation::Off => None,
        Augmentation::Fixed(delta) => Some(AugmentedSpace::new(e.space.clone(), delta, seed(Stream::TieBreak))?),
        Augmentation::Auto => {
            let delta = default_delta(&e.space, train.points())?;
            Some(AugmentedSpace::new(e.space.clone(), delta, seed(Stream::TieBreak))?)
        }
    });
    let space = lifter.space(&e.space);
    let (labels, n_classes) = train.classes()?;
    let labels = labels.to_vec();
    let train = LabeledDataset::classification(lifter.lift(train.into_points(), 0), labels, n_classes)?;
    let nuclei = |count: usize| lifter.lift(spec.sample_points(count, seed(Stream::Nuclei)), 1);

    let model: Box<dyn Classifier> = match e.classifier {
        ClassifierKind::Bayes => Box::new(BayesClassifier::new(spec.clone())),
        ClassifierKind::Knn => Box::new(KnnModel::fit(&train, k.expect("planned"), space)?),
        ClassifierKind::ProtoNn => Box::new(ProtoNnModel::fit(&train, nuclei(m.expect("planned")), space)?),
        ClassifierKind::ProtoKnn => Box::new(ProtoKnnModel::fit(
            &train,
            nuclei(m.expect("planned")),
            k.expect("planned"),
            space,
        )?),
        ClassifierKind::OptinetLite => {
            let holdout = (n as f64 * e.holdout_fraction).round() as usize;
            let (fit_part, holdout_part) = train.split_at(n - holdout);
            let gammas = default_gamma_grid(fit_part.points(), space)?;
            Box::new(fit_optinet_lite(&fit_part, &holdout_part, &gammas, space)?)
        }
    };

    let test = spec.sample_points(e.test_points, seed(Stream::Test));
    let lifted = lifter.lift(test.clone(), 2);
    let est = measure(spec, &test, |i| model.predict(&lifted[i]))?;
    Ok(TrialRow {
        n,
        trial,
        k,
        m,
        risk: est.risk,
        bayes_risk,
        excess: est.excess,
        stderr: est.stderr,
    })
}

/// Runs every `(n, trial)` of the experiment, in parallel over trials.
pub fn rate_sweep(e: &Experiment) -> Result<RiskReport> {
    let bayes_risk = e.spec.bayes_risk()?.value;
    let jobs: Vec<(usize, usize)> = (0..e.plan.len())
        .flat_map(|p| (0..e.trials).map(move |t| (p, t)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(thread_count())
        .build()
        .map_err(|err| Error::Config(format!("thread pool: {err}")))?;
    let mut rows = pool.install(|| {
        jobs.par_iter()
            .map(|&(p, t)| run_trial(e, e.plan[p], t, bayes_risk))
            .collect::<Result<Vec<_>>>()
    })?;
    rows.sort_by_key(|r| (r.n, r.trial));

    let grid = e
        .plan
        .iter()
        .map(|&(n, _, _)| {
            let at: Vec<&TrialRow> = rows.iter().filter(|r| r.n == n).collect();
            let t = at.len() as f64;
            let mean_excess = at.iter().map(|r| r.excess).sum::<f64>() / t;
            let mean_risk = at.iter().map(|r| r.risk).sum::<f64>() / t;
            let excess_stderr = if at.len() < 2 {
                0.0
            } else {
                let var = at.iter().map(|r| (r.excess - mean_excess).powi(2)).sum::<f64>() / (t - 1.0);
                (var / t).sqrt()
            };
            GridPoint {
                n,
                mean_excess,
                excess_stderr,
                mean_risk,
            }
        })
        .collect();
    Ok(RiskReport {
        family: e.spec.name().to_string(),
        classifier: e.classifier.name().to_string(),
        bayes_risk,
        theoretical_exponent: e.spec.theoretical_exponent(),
        rows,
        grid,
    })
}

/// Validates `config` and runs it.
pub fn rate_sweep_config(config: &ExperimentConfig) -> Result<RiskReport> {
    rate_sweep(&config.validate()?)
}
