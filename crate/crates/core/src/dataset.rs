//! Labeled samples and their CSV representation.
//!
//! Class labels are stored 0-based (`0..n_classes`). On disk, and in
//! user-facing output, classes are numbered `1..=M`.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::metric::{DistanceTable, MetricSpace, Point};

#[derive(Clone, Debug, PartialEq)]
pub enum Labels {
    Classes { labels: Vec<usize>, n_classes: usize },
    Real(Vec<f64>),
}

impl Labels {
    pub fn len(&self) -> usize {
        match self {
            Labels::Classes { labels, .. } => labels.len(),
            Labels::Real(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn mode(&self) -> &'static str {
        match self {
            Labels::Classes { .. } => "class",
            Labels::Real(_) => "real",
        }
    }
}

/// `(X_1, Y_1), ..., (X_n, Y_n)` in draw order.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledDataset {
    points: Vec<Point>,
    labels: Labels,
}

impl LabeledDataset {
    /// Classification data; `labels` are 0-based and must be below `n_classes`.
    pub fn classification(points: Vec<Point>, labels: Vec<usize>, n_classes: usize) -> Result<Self> {
        if n_classes == 0 {
            return Err(Error::Dataset("class count must be at least 1".into()));
        }
        if let Some(&bad) = labels.iter().find(|&&y| y >= n_classes) {
            return Err(Error::LabelOutOfRange {
                label: bad as i64 + 1,
                classes: n_classes,
            });
        }
        Self::new(points, Labels::Classes { labels, n_classes })
    }

    pub fn regression(points: Vec<Point>, labels: Vec<f64>) -> Result<Self> {
        if labels.iter().any(|y| !y.is_finite()) {
            return Err(Error::Dataset("regression labels must be finite".into()));
        }
        Self::new(points, Labels::Real(labels))
    }

    fn new(points: Vec<Point>, labels: Labels) -> Result<Self> {
        if points.len() != labels.len() {
            return Err(Error::LengthMismatch {
                points: points.len(),
                labels: labels.len(),
            });
        }
        Ok(LabeledDataset { points, labels })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn labels(&self) -> &Labels {
        &self.labels
    }

    pub fn into_points(self) -> Vec<Point> {
        self.points
    }

    /// Class labels and class count, or an error for regression data.
    pub fn classes(&self) -> Result<(&[usize], usize)> {
        match &self.labels {
            Labels::Classes { labels, n_classes } => Ok((labels, *n_classes)),
            other => Err(Error::LabelMode {
                expected: "class",
                found: other.mode(),
            }),
        }
    }

    pub fn real_labels(&self) -> Result<&[f64]> {
        match &self.labels {
            Labels::Real(v) => Ok(v),
            other => Err(Error::LabelMode {
                expected: "real",
                found: other.mode(),
            }),
        }
    }

    /// Keeps the rows at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> LabeledDataset {
        let points = indices.iter().map(|&i| self.points[i].clone()).collect();
        let labels = match &self.labels {
            Labels::Classes { labels, n_classes } => Labels::Classes {
                labels: indices.iter().map(|&i| labels[i]).collect(),
                n_classes: *n_classes,
            },
            Labels::Real(v) => Labels::Real(indices.iter().map(|&i| v[i]).collect()),
        };
        LabeledDataset { points, labels }
    }

    /// Splits rows `[0, at)` from `[at, n)`.
    pub fn split_at(&self, at: usize) -> (LabeledDataset, LabeledDataset) {
        let at = at.min(self.len());
        let head: Vec<usize> = (0..at).collect();
        let tail: Vec<usize> = (at..self.len()).collect();
        (self.subset(&head), self.subset(&tail))
    }
}

/// How CSV feature columns become points.
#[derive(Clone, Debug)]
pub enum FeatureKind {
    /// Numeric columns `x1..xd`.
    Vector,
    /// A single text column `x1` holding a symbol sequence.
    Sequence,
    /// A single column `x1` naming a catalog symbol.
    Symbol(std::sync::Arc<DistanceTable>),
}

impl FeatureKind {
    /// The representation a metric expects.
    pub fn for_metric(space: &MetricSpace) -> Self {
        match space.base() {
            MetricSpace::Edit => FeatureKind::Sequence,
            MetricSpace::Table(t) => FeatureKind::Symbol(t.clone()),
            _ => FeatureKind::Vector,
        }
    }
}

/// Whether a CSV `label` column is read as class numbers or reals.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LabelKind {
    Class,
    Real,
}

/// Parsed CSV rows before labels are interpreted.
#[derive(Clone, Debug)]
pub struct CsvTable {
    pub points: Vec<Point>,
    pub labels: Option<Vec<String>>,
}

fn feature_columns(headers: &csv::StringRecord) -> Result<(Vec<usize>, Option<usize>)> {
    let mut features = Vec::new();
    let mut label = None;
    for (i, h) in headers.iter().enumerate() {
        if h == "label" {
            label = Some(i);
        } else if let Some(num) = h.strip_prefix('x').and_then(|s| s.parse::<usize>().ok()) {
            if num != features.len() + 1 {
                return Err(Error::Dataset(format!(
                    "feature columns must be x1..xd in order, found `{h}`"
                )));
            }
            features.push(i);
        } else {
            return Err(Error::Dataset(format!("unexpected column `{h}`")));
        }
    }
    if features.is_empty() {
        return Err(Error::Dataset("no feature columns x1..xd".into()));
    }
    Ok((features, label))
}

/// Reads `x1..xd[,label]` rows.
pub fn read_csv(reader: impl Read, kind: &FeatureKind) -> Result<CsvTable> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let (features, label_col) = feature_columns(rdr.headers()?)?;
    if !matches!(kind, FeatureKind::Vector) && features.len() != 1 {
        return Err(Error::Dataset(
            "sequence and symbol data take exactly one feature column x1".into(),
        ));
    }
    let mut points = Vec::new();
    let mut labels = label_col.map(|_| Vec::new());
    for (row, record) in rdr.records().enumerate() {
        let record = record?;
        let cell = |i: usize| record.get(i).unwrap_or_default();
        let point = match kind {
            FeatureKind::Vector => Point::Vector(
                features
                    .iter()
                    .map(|&i| {
                        let v: f64 = cell(i).parse().map_err(|_| {
                            Error::Dataset(format!("row {}: bad number `{}`", row + 1, cell(i)))
                        })?;
                        if v.is_finite() {
                            Ok(v)
                        } else {
                            Err(Error::Dataset(format!("row {}: non-finite feature", row + 1)))
                        }
                    })
                    .collect::<Result<_>>()?,
            ),
            FeatureKind::Sequence => Point::Sequence(cell(features[0]).to_owned()),
            FeatureKind::Symbol(table) => table.symbol(cell(features[0]))?,
        };
        points.push(point);
        if let (Some(col), Some(out)) = (label_col, labels.as_mut()) {
            out.push(cell(col).to_owned());
        }
    }
    Ok(CsvTable { points, labels })
}

impl CsvTable {
    /// Interprets the label column; class labels are `1..=M` with `M` the largest seen
    /// unless `n_classes` is given.
    pub fn into_dataset(self, kind: LabelKind, n_classes: Option<usize>) -> Result<LabeledDataset> {
        let raw = self
            .labels
            .ok_or_else(|| Error::Dataset("missing `label` column".into()))?;
        match kind {
            LabelKind::Real => {
                let ys = raw
                    .iter()
                    .map(|s| {
                        s.parse::<f64>()
                            .map_err(|_| Error::Dataset(format!("bad real label `{s}`")))
                    })
                    .collect::<Result<Vec<_>>>()?;
                LabeledDataset::regression(self.points, ys)
            }
            LabelKind::Class => {
                let ys = raw
                    .iter()
                    .map(|s| {
                        s.parse::<i64>()
                            .map_err(|_| Error::Dataset(format!("bad class label `{s}`")))
                    })
                    .collect::<Result<Vec<_>>>()?;
                let m = n_classes.unwrap_or_else(|| ys.iter().copied().max().unwrap_or(1).max(1) as usize);
                let labels = ys
                    .iter()
                    .map(|&y| {
                        if y >= 1 && (y as usize) <= m {
                            Ok(y as usize - 1)
                        } else {
                            Err(Error::LabelOutOfRange { label: y, classes: m })
                        }
                    })
                    .collect::<Result<Vec<_>>>()?;
                LabeledDataset::classification(self.points, labels, m)
            }
        }
    }
}

pub fn read_csv_path(path: impl AsRef<Path>, kind: &FeatureKind) -> Result<CsvTable> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(file, kind)
}

fn point_cells(p: &Point, table: Option<&DistanceTable>) -> Vec<String> {
    match p {
        Point::Vector(v) => v.iter().map(|x| x.to_string()).collect(),
        Point::Sequence(s) => vec![s.clone()],
        Point::Symbol(i) => vec![table
            .and_then(|t| t.names().get(*i).cloned())
            .unwrap_or_else(|| format!("#{i}"))],
        Point::Augmented { base, .. } => point_cells(base, table),
    }
}

/// Writes `x1..xd,<label_header>` rows.
pub fn write_rows<W: Write>(
    writer: W,
    points: &[Point],
    labels: &[String],
    label_header: &str,
    table: Option<&DistanceTable>,
) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    let d = points.first().map_or(1, |p| point_cells(p, table).len());
    let mut header: Vec<String> = (1..=d).map(|i| format!("x{i}")).collect();
    header.push(label_header.to_owned());
    wtr.write_record(&header)?;
    for (p, y) in points.iter().zip(labels) {
        let mut row = point_cells(p, table);
        row.push(y.clone());
        wtr.write_record(&row)?;
    }
    wtr.flush().map_err(|e| Error::io("<csv output>", e))?;
    Ok(())
}
