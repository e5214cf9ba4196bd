//! Experiment configuration files.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::MetricSpace;
use crate::models::default_knn_k;
use crate::synthetic::DistributionSpec;

use super::schedule::Schedule;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassifierKind {
    Knn,
    ProtoNn,
    ProtoKnn,
    OptinetLite,
    Bayes,
}

impl ClassifierKind {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "knn" => Ok(Self::Knn),
            "proto_nn" => Ok(Self::ProtoNn),
            "proto_knn" => Ok(Self::ProtoKnn),
            "optinet_lite" => Ok(Self::OptinetLite),
            "bayes" => Ok(Self::Bayes),
            other => Err(Error::UnknownClassifier(other.to_string())),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Knn => "knn",
            Self::ProtoNn => "proto_nn",
            Self::ProtoKnn => "proto_knn",
            Self::OptinetLite => "optinet_lite",
            Self::Bayes => "bayes",
        }
    }

    fn uses_k(self) -> bool {
        matches!(self, Self::Knn | Self::ProtoKnn)
    }

    fn uses_m(self) -> bool {
        matches!(self, Self::ProtoNn | Self::ProtoKnn)
    }
}

/// Tie-breaking augmentation: none, a fixed `delta`, or `"auto"`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DeltaSetting {
    #[default]
    Off,
    Fixed(f64),
    Named(String),
}

/// The JSON experiment file, as written.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub family: String,
    pub classifier: String,
    #[serde(default = "default_metric")]
    pub metric: String,
    #[serde(default)]
    pub delta: Option<DeltaSetting>,
    pub n_grid: Vec<usize>,
    #[serde(default)]
    pub k_schedule: Option<String>,
    #[serde(default)]
    pub m_schedule: Option<String>,
    pub trials: usize,
    pub test_points: usize,
    pub seed: u64,
    /// Share of each training sample held out to select gamma for
    /// `optinet_lite`.
    #[serde(default)]
    pub holdout_fraction: Option<f64>,
}

fn default_metric() -> String {
    "euclidean".into()
}

/// Augmentation resolved from [`DeltaSetting`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Augmentation {
    Off,
    Fixed(f64),
    Auto,
}

/// A validated configuration with schedules evaluated on the grid.
#[derive(Clone, Debug)]
pub struct Experiment {
    pub spec: DistributionSpec,
    pub classifier: ClassifierKind,
    pub space: MetricSpace,
    pub augmentation: Augmentation,
    /// `(n, k, m)` for each grid point; `k` and `m` are present only when
    /// the classifier uses them.
    pub plan: Vec<(usize, Option<usize>, Option<usize>)>,
    pub trials: usize,
    pub test_points: usize,
    pub seed: u64,
    pub holdout_fraction: f64,
    pub config: ExperimentConfig,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    /// Checks every field and evaluates the schedules at each grid point.
    pub fn validate(&self) -> Result<Experiment> {
        let spec = DistributionSpec::parse(&self.family)?;
        let classifier = ClassifierKind::parse(&self.classifier)?;
        let space = MetricSpace::parse(&self.metric)?;
        if !matches!(space, MetricSpace::Euclidean | MetricSpace::Lp(_)) {
            return Err(Error::Config(format!(
                "synthetic families live in R^d; metric `{}` does not apply",
                self.metric
            )));
        }
        let augmentation = match &self.delta {
            None | Some(DeltaSetting::Off) => Augmentation::Off,
            Some(DeltaSetting::Fixed(d)) if *d > 0.0 && d.is_finite() => Augmentation::Fixed(*d),
            Some(DeltaSetting::Fixed(d)) => return Err(Error::NonPositive("delta", *d)),
            Some(DeltaSetting::Named(s)) if s == "auto" => Augmentation::Auto,
            Some(DeltaSetting::Named(s)) => {
                return Err(Error::Config(format!("delta must be a number, null or \"auto\", got `{s}`")))
            }
        };
        if self.n_grid.is_empty() {
            return Err(Error::Config("n_grid is empty".into()));
        }
        if self.n_grid[0] == 0 || self.n_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("n_grid must be positive and strictly increasing".into()));
        }
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if self.test_points == 0 {
            return Err(Error::Config("test_points must be at least 1".into()));
        }
        let holdout_fraction = self.holdout_fraction.unwrap_or(0.3);
        if !(holdout_fraction > 0.0 && holdout_fraction < 1.0) {
            return Err(Error::Config(format!(
                "holdout_fraction must lie in (0, 1), got {holdout_fraction}"
            )));
        }

        let k_schedule = self.k_schedule.as_deref().map(Schedule::parse).transpose()?;
        let m_schedule = match (&self.m_schedule, classifier) {
            (Some(s), _) => Some(Schedule::parse(s)?),
            (None, ClassifierKind::ProtoNn) => Some(Schedule::parse("ceil(sqrt(n))")?),
            (None, ClassifierKind::ProtoKnn) => Some(Schedule::parse("ceil(n/k)")?),
            (None, _) => None,
        };
        let beta = spec.holder();
        let mut plan = Vec::with_capacity(self.n_grid.len());
        for &n in &self.n_grid {
            let k = if classifier.uses_k() {
                Some(match (&k_schedule, beta) {
                    (Some(s), _) => s.eval(n, None, 1, n)?,
                    (None, Some(beta)) => default_knn_k(n, beta, spec.dimension()),
                    (None, None) => {
                        return Err(Error::Config(format!(
                            "k_schedule is required: {} declares no smoothness exponent",
                            spec.name()
                        )))
                    }
                })
            } else {
                None
            };
            let m = if classifier.uses_m() {
                let s = m_schedule.as_ref().expect("set for nucleus classifiers");
                Some(s.eval(n, k, 1, usize::MAX)?)
            } else {
                None
            };
            if classifier == ClassifierKind::OptinetLite {
                let holdout = (n as f64 * holdout_fraction).round() as usize;
                if holdout == 0 || holdout >= n {
                    return Err(Error::Config(format!(
                        "n = {n} is too small to hold out {holdout_fraction} of the sample"
                    )));
                }
            }
            plan.push((n, k, m));
        }
        Ok(Experiment {
            spec,
            classifier,
            space,
            augmentation,
            plan,
            trials: self.trials,
            test_points: self.test_points,
            seed: self.seed,
            holdout_fraction,
            config: self.clone(),
        })
    }
}
