//! JSON model files.
//!
//! A model file records the metric, the nucleus (or training) points and the
//! exact per-cell class counts or cell means. Floats are written in shortest
//! round-trip form, so a reloaded model makes bit-identical predictions.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::{MetricSpace, Point};
use crate::partition::{Votes, VoronoiPartition};

use super::{
    Classifier, GammaNetModel, KnnModel, LabeledDataset, PartitionRegressor, ProtoKnnModel,
    ProtoNnModel,
};

pub const MODEL_FORMAT: &str = "metric-proto-model";
pub const MODEL_VERSION: u32 = 1;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ModelFile {
    pub format: String,
    pub version: u32,
    pub metric: MetricSpace,
    pub model: StoredModel,
}

/// Histogram rows are the exact counts; `posteriors` repeats them as ratios
/// for readers and is checked on load.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StoredModel {
    ProtoNn {
        n_classes: usize,
        nuclei: Vec<Point>,
        counts: Vec<Vec<u32>>,
        posteriors: Vec<Vec<f64>>,
    },
    ProtoKnn {
        n_classes: usize,
        k: usize,
        nuclei: Vec<Point>,
        counts: Vec<Vec<u32>>,
        posteriors: Vec<Vec<f64>>,
    },
    Knn {
        n_classes: usize,
        k: usize,
        points: Vec<Point>,
        /// 1-based class labels.
        labels: Vec<usize>,
    },
    GammaNet {
        n_classes: usize,
        gamma: f64,
        nuclei: Vec<Point>,
        counts: Vec<Vec<u32>>,
        posteriors: Vec<Vec<f64>>,
    },
    Regressor {
        n: usize,
        nuclei: Vec<Point>,
        means: Vec<f64>,
        counts: Vec<usize>,
    },
}

/// A prediction from any fitted model.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Prediction {
    /// 0-based class.
    Class(usize),
    Real(f64),
}

/// Any fitted model, as stored on disk.
#[derive(Clone, Debug)]
pub enum FittedModel {
    ProtoNn(ProtoNnModel),
    ProtoKnn(ProtoKnnModel),
    Knn(KnnModel),
    GammaNet(GammaNetModel),
    Regressor { model: PartitionRegressor, truncated: bool },
}

fn histogram_rows(votes: &[Votes]) -> (Vec<Vec<u32>>, Vec<Vec<f64>>) {
    (
        votes.iter().map(|v| v.counts().to_vec()).collect(),
        votes.iter().map(Votes::posterior).collect(),
    )
}

fn restore_votes(counts: Vec<Vec<u32>>, posteriors: &[Vec<f64>]) -> Result<Vec<Votes>> {
    let votes: Vec<Votes> = counts.into_iter().map(Votes::from_counts).collect();
    if votes.len() != posteriors.len() || votes.iter().zip(posteriors).any(|(v, p)| v.posterior() != *p) {
        return Err(Error::ModelFormat("posteriors disagree with counts".into()));
    }
    Ok(votes)
}

impl FittedModel {
    pub fn name(&self) -> &'static str {
        match self {
            FittedModel::ProtoNn(_) => "proto_nn",
            FittedModel::ProtoKnn(_) => "proto_knn",
            FittedModel::Knn(_) => "knn",
            FittedModel::GammaNet(_) => "optinet_lite",
            FittedModel::Regressor { .. } => "regressor",
        }
    }

    pub fn space(&self) -> &MetricSpace {
        match self {
            FittedModel::ProtoNn(m) => m.partition().space(),
            FittedModel::ProtoKnn(m) => m.partition().space(),
            FittedModel::Knn(m) => m.space(),
            FittedModel::GammaNet(m) => m.inner().partition().space(),
            FittedModel::Regressor { model, .. } => model.partition().space(),
        }
    }

    pub fn as_classifier(&self) -> Option<&dyn Classifier> {
        match self {
            FittedModel::ProtoNn(m) => Some(m),
            FittedModel::ProtoKnn(m) => Some(m),
            FittedModel::Knn(m) => Some(m),
            FittedModel::GammaNet(m) => Some(m),
            FittedModel::Regressor { .. } => None,
        }
    }

    pub fn predict(&self, x: &Point) -> Result<Prediction> {
        match self {
            FittedModel::Regressor { model, truncated } => Ok(Prediction::Real(model.predict(x, *truncated)?)),
            other => Ok(Prediction::Class(
                other.as_classifier().expect("classifier variant").predict(x)?,
            )),
        }
    }

    pub fn to_file(&self) -> ModelFile {
        let model = match self {
            FittedModel::ProtoNn(m) => {
                let (counts, posteriors) = histogram_rows(m.cells());
                StoredModel::ProtoNn {
                    n_classes: m.n_classes(),
                    nuclei: m.partition().nuclei().to_vec(),
                    counts,
                    posteriors,
                }
            }
            FittedModel::ProtoKnn(m) => {
                let (counts, posteriors) = histogram_rows(m.nucleus_votes());
                StoredModel::ProtoKnn {
                    n_classes: m.n_classes(),
                    k: m.k(),
                    nuclei: m.partition().nuclei().to_vec(),
                    counts,
                    posteriors,
                }
            }
            FittedModel::Knn(m) => StoredModel::Knn {
                n_classes: m.n_classes(),
                k: m.k(),
                points: m.points().to_vec(),
                labels: m.labels().iter().map(|y| y + 1).collect(),
            },
            FittedModel::GammaNet(m) => {
                let (counts, posteriors) = histogram_rows(m.inner().cells());
                StoredModel::GammaNet {
                    n_classes: m.n_classes(),
                    gamma: m.gamma(),
                    nuclei: m.net().to_vec(),
                    counts,
                    posteriors,
                }
            }
            FittedModel::Regressor { model, .. } => StoredModel::Regressor {
                n: model.training_size(),
                nuclei: model.partition().nuclei().to_vec(),
                means: model.means().to_vec(),
                counts: model.counts().to_vec(),
            },
        };
        ModelFile {
            format: MODEL_FORMAT.to_owned(),
            version: MODEL_VERSION,
            metric: self.space().clone(),
            model,
        }
    }

    /// Rebuilds a model. `truncated` only affects regressors.
    pub fn from_file(file: ModelFile, truncated: bool) -> Result<Self> {
        if file.format != MODEL_FORMAT {
            return Err(Error::ModelFormat(format!("unexpected format `{}`", file.format)));
        }
        if file.version != MODEL_VERSION {
            return Err(Error::ModelFormat(format!("unsupported version {}", file.version)));
        }
        let space = &file.metric;
        Ok(match file.model {
            StoredModel::ProtoNn {
                n_classes,
                nuclei,
                counts,
                posteriors,
            } => FittedModel::ProtoNn(ProtoNnModel::from_parts(
                VoronoiPartition::build(space, nuclei)?,
                restore_votes(counts, &posteriors)?,
                n_classes,
            )?),
            StoredModel::ProtoKnn {
                n_classes,
                k,
                nuclei,
                counts,
                posteriors,
            } => FittedModel::ProtoKnn(ProtoKnnModel::from_parts(
                VoronoiPartition::build(space, nuclei)?,
                restore_votes(counts, &posteriors)?,
                k,
                n_classes,
            )?),
            StoredModel::Knn {
                n_classes,
                k,
                points,
                labels,
            } => {
                if labels.contains(&0) {
                    return Err(Error::ModelFormat("class labels are 1-based".into()));
                }
                let data = LabeledDataset::classification(points, labels.iter().map(|y| y - 1).collect(), n_classes)?;
                FittedModel::Knn(KnnModel::fit(&data, k, space)?)
            }
            StoredModel::GammaNet {
                n_classes,
                gamma,
                nuclei,
                counts,
                posteriors,
            } => FittedModel::GammaNet(GammaNetModel::from_parts(
                gamma,
                ProtoNnModel::from_parts(
                    VoronoiPartition::build(space, nuclei)?,
                    restore_votes(counts, &posteriors)?,
                    n_classes,
                )?,
            )),
            StoredModel::Regressor {
                n,
                nuclei,
                means,
                counts,
            } => FittedModel::Regressor {
                model: PartitionRegressor::from_parts(VoronoiPartition::build(space, nuclei)?, means, counts, n)?,
                truncated,
            },
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_file())?)
    }

    pub fn from_json(text: &str, truncated: bool) -> Result<Self> {
        Self::from_file(serde_json::from_str(text)?, truncated)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>, truncated: bool) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text, truncated)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_data(seed: u64, n: usize) -> LabeledDataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pts = (0..n)
            .map(|_| Point::vector(vec![rng.gen::<f64>(), rng.gen::<f64>()]))
            .collect();
        let labels = (0..n).map(|_| rng.gen_range(0..3)).collect();
        LabeledDataset::classification(pts, labels, 3).unwrap()
    }

    fn probes() -> Vec<Point> {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        (0..200)
            .map(|_| Point::vector(vec![rng.gen::<f64>() * 1.2 - 0.1, rng.gen::<f64>()]))
            .collect()
    }

    fn assert_same(a: &FittedModel, b: &FittedModel) {
        for x in probes() {
            let (pa, pb) = (a.predict(&x).unwrap(), b.predict(&x).unwrap());
            match (pa, pb) {
                (Prediction::Real(u), Prediction::Real(v)) => assert_eq!(u.to_bits(), v.to_bits()),
                _ => assert_eq!(pa, pb),
            }
        }
    }

    #[test]
    fn every_kind_round_trips() {
        let space = MetricSpace::Lp(3.0);
        let data = random_data(1, 120);
        let nuclei: Vec<Point> = data.points()[..11].to_vec();
        let holdout = random_data(2, 40);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let reg = LabeledDataset::regression(
            data.points().to_vec(),
            (0..120).map(|_| rng.gen::<f64>() * 10.0 - 5.0).collect(),
        )
        .unwrap();
        let models = vec![
            FittedModel::ProtoNn(ProtoNnModel::fit(&data, nuclei.clone(), &space).unwrap()),
            FittedModel::ProtoKnn(ProtoKnnModel::fit(&data, nuclei.clone(), 7, &space).unwrap()),
            FittedModel::Knn(KnnModel::fit(&data, 5, &space).unwrap()),
            FittedModel::GammaNet(
                super::super::fit_optinet_lite(&data, &holdout, &[0.5, 0.2, 0.1], &space).unwrap(),
            ),
            FittedModel::Regressor {
                model: PartitionRegressor::fit(&reg, nuclei, &space).unwrap(),
                truncated: false,
            },
        ];
        for m in &models {
            let back = FittedModel::from_json(&m.to_json().unwrap(), false).unwrap();
            assert_eq!(back.name(), m.name());
            assert_same(m, &back);
        }
    }

    #[test]
    fn rejects_foreign_files() {
        let data = random_data(4, 10);
        let m = FittedModel::Knn(KnnModel::fit(&data, 1, &MetricSpace::Euclidean).unwrap());
        let mut file = m.to_file();
        file.version = 99;
        assert!(FittedModel::from_file(file.clone(), false).is_err());
        file.version = MODEL_VERSION;
        file.format = "other".into();
        assert!(FittedModel::from_file(file, false).is_err());
        assert!(FittedModel::from_json("{\"format\":1}", false).is_err());
    }

    #[test]
    fn tampered_posteriors_rejected() {
        let data = random_data(5, 30);
        let m = FittedModel::ProtoNn(ProtoNnModel::fit(&data, data.points()[..3].to_vec(), &MetricSpace::Euclidean).unwrap());
        let mut file = m.to_file();
        if let StoredModel::ProtoNn { posteriors, .. } = &mut file.model {
            posteriors[0][0] += 0.25;
        }
        assert!(FittedModel::from_file(file, false).is_err());
    }
}
