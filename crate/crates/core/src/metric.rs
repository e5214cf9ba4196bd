//! Metric spaces over an opaque point universe.
//!
//! A [`MetricSpace`] is a distance oracle. Points are dense real vectors,
//! symbol sequences (edit distance) or elements of a finite catalog
//! (table lookup). [`AugmentedSpace`] appends a uniform coordinate `u` to
//! every point and measures `base(x, z) + delta * |u - v|`, which makes
//! exact distance ties a probability-zero event.
//!
//! Distances are `f64` and ties are exact bitwise equality; every built-in
//! metric returns `+0.0` rather than `-0.0` so that `f64::total_cmp` agrees
//! with numeric comparison.

use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An element of some point universe.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Point {
    Vector(Vec<f64>),
    Sequence(String),
    /// Index into a [`DistanceTable`] catalog.
    Symbol(usize),
    /// A base point carrying an extra uniform coordinate.
    Augmented { base: Box<Point>, u: f64 },
}

impl Point {
    pub fn vector(coords: impl Into<Vec<f64>>) -> Self {
        Point::Vector(coords.into())
    }

    pub fn scalar(x: f64) -> Self {
        Point::Vector(vec![x])
    }

    pub fn as_vector(&self) -> Option<&[f64]> {
        match self {
            Point::Vector(v) => Some(v),
            _ => None,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            Point::Vector(_) => "vector",
            Point::Sequence(_) => "sequence",
            Point::Symbol(_) => "symbol",
            Point::Augmented { .. } => "augmented",
        }
    }
}

/// Symmetric distance matrix over a finite catalog of named symbols.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistanceTable {
    names: Vec<String>,
    distances: Vec<f64>,
}

impl DistanceTable {
    /// Builds a table from a square matrix, rejecting anything that is not a metric.
    pub fn new(names: Vec<String>, matrix: Vec<Vec<f64>>) -> Result<Self> {
        let s = names.len();
        if s == 0 {
            return Err(Error::Empty("distance table"));
        }
        if matrix.len() != s || matrix.iter().any(|row| row.len() != s) {
            return Err(Error::InvalidMetric(format!(
                "distance table must be {s}x{s}"
            )));
        }
        for (i, name) in names.iter().enumerate() {
            if names[..i].contains(name) {
                return Err(Error::InvalidMetric(format!("duplicate symbol `{name}`")));
            }
        }
        // + 0.0 turns a stray -0.0 into +0.0
        let distances: Vec<f64> = matrix.into_iter().flatten().map(|d| d + 0.0).collect();
        let table = DistanceTable { names, distances };
        table.validate()?;
        Ok(table)
    }

    /// Loads a CSV whose header row and first column both list the symbol names.
    pub fn from_csv_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv_reader(file)
    }

    pub fn from_csv_reader(reader: impl std::io::Read) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let names: Vec<String> = rdr.headers()?.iter().skip(1).map(str::to_owned).collect();
        let mut matrix = Vec::with_capacity(names.len());
        for (i, record) in rdr.records().enumerate() {
            let record = record?;
            let row_name = record.get(0).unwrap_or_default();
            if names.get(i).map(String::as_str) != Some(row_name) {
                return Err(Error::InvalidMetric(format!(
                    "row {} is labelled `{row_name}`, expected the column order of the header",
                    i + 1
                )));
            }
            let row = record
                .iter()
                .skip(1)
                .map(|cell| {
                    cell.parse::<f64>().map_err(|_| {
                        Error::InvalidMetric(format!("non-numeric distance `{cell}`"))
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            matrix.push(row);
        }
        Self::new(names, matrix)
    }

    fn validate(&self) -> Result<()> {
        let s = self.len();
        let scale = self.distances.iter().cloned().fold(0.0_f64, f64::max);
        let slack = 1e-12 * scale.max(1.0);
        for a in 0..s {
            if self.get(a, a) != 0.0 {
                return Err(Error::AxiomViolation(format!(
                    "d({0},{0}) = {1}",
                    self.names[a],
                    self.get(a, a)
                )));
            }
            for b in 0..s {
                let d = self.get(a, b);
                if !d.is_finite() || d < 0.0 {
                    return Err(Error::AxiomViolation(format!(
                        "d({},{}) = {d}",
                        self.names[a], self.names[b]
                    )));
                }
                if d != self.get(b, a) {
                    return Err(Error::AxiomViolation(format!(
                        "asymmetric entry for ({},{})",
                        self.names[a], self.names[b]
                    )));
                }
                if a != b && d == 0.0 {
                    return Err(Error::AxiomViolation(format!(
                        "distinct symbols {} and {} at distance 0",
                        self.names[a], self.names[b]
                    )));
                }
            }
        }
        for a in 0..s {
            for b in 0..s {
                for c in 0..s {
                    if self.get(a, c) > self.get(a, b) + self.get(b, c) + slack {
                        return Err(Error::AxiomViolation(format!(
                            "triangle inequality fails for ({},{},{})",
                            self.names[a], self.names[b], self.names[c]
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    fn get(&self, a: usize, b: usize) -> f64 {
        self.distances[a * self.names.len() + b]
    }

    /// Resolves a symbol name to its catalog point.
    pub fn symbol(&self, name: &str) -> Result<Point> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(Point::Symbol)
            .ok_or_else(|| Error::UnknownSymbol(name.to_owned()))
    }

    fn distance(&self, a: usize, b: usize) -> Result<f64> {
        let s = self.len();
        for i in [a, b] {
            if i >= s {
                return Err(Error::UnknownSymbol(format!("#{i}")));
            }
        }
        Ok(self.get(a, b))
    }
}

/// A distance rule over one point universe.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricSpace {
    Euclidean,
    /// `l_p` norm distance, `p >= 1`.
    Lp(f64),
    /// 0 for identical points, 1 otherwise.
    Discrete,
    /// Levenshtein distance over Unicode scalar values.
    Edit,
    Table(Arc<DistanceTable>),
    Augmented { base: Box<MetricSpace>, delta: f64 },
}

impl MetricSpace {
    pub fn lp(p: f64) -> Result<Self> {
        if !(p >= 1.0 && p.is_finite()) {
            return Err(Error::InvalidMetric(format!("l_p needs finite p >= 1, got {p}")));
        }
        Ok(MetricSpace::Lp(p))
    }

    pub fn table(table: DistanceTable) -> Self {
        MetricSpace::Table(Arc::new(table))
    }

    /// Parses `euclidean`, `lp:<p>`, `discrete`, `edit` or `table:<path>`.
    /// The table variant reads its file.
    pub fn parse(descriptor: &str) -> Result<Self> {
        let descriptor = descriptor.trim();
        let (head, arg) = match descriptor.split_once(':') {
            Some((h, a)) => (h, Some(a)),
            None => (descriptor, None),
        };
        match (head, arg) {
            ("euclidean", None) => Ok(MetricSpace::Euclidean),
            ("discrete", None) => Ok(MetricSpace::Discrete),
            ("edit", None) => Ok(MetricSpace::Edit),
            ("lp", Some(p)) => {
                let p = p
                    .trim()
                    .parse::<f64>()
                    .map_err(|_| Error::InvalidMetric(format!("bad exponent in `{descriptor}`")))?;
                MetricSpace::lp(p)
            }
            ("table", Some(path)) => Ok(MetricSpace::table(DistanceTable::from_csv_path(path)?)),
            _ => Err(Error::InvalidMetric(format!("unknown metric `{descriptor}`"))),
        }
    }

    /// The base space with any augmentation layers removed.
    pub fn base(&self) -> &MetricSpace {
        match self {
            MetricSpace::Augmented { base, .. } => base.base(),
            other => other,
        }
    }

    pub fn distance(&self, a: &Point, b: &Point) -> Result<f64> {
        match (self, a, b) {
            (MetricSpace::Euclidean, Point::Vector(x), Point::Vector(y)) => {
                check_dims(x, y)?;
                Ok(euclidean(x, y))
            }
            (MetricSpace::Lp(p), Point::Vector(x), Point::Vector(y)) => {
                check_dims(x, y)?;
                Ok(lp(*p, x, y))
            }
            (MetricSpace::Discrete, a, b) => Ok(if a == b { 0.0 } else { 1.0 }),
            (MetricSpace::Edit, Point::Sequence(x), Point::Sequence(y)) => {
                Ok(strsim::levenshtein(x, y) as f64)
            }
            (MetricSpace::Table(t), Point::Symbol(x), Point::Symbol(y)) => t.distance(*x, *y),
            (
                MetricSpace::Augmented { base, delta },
                Point::Augmented { base: x, u },
                Point::Augmented { base: y, u: v },
            ) => Ok(base.distance(x, y)? + delta * (u - v).abs()),
            (metric, a, b) => {
                let point = if a.kind() == b.kind() {
                    a.kind().to_owned()
                } else {
                    format!("{}/{}", a.kind(), b.kind())
                };
                Err(Error::UniverseMismatch {
                    metric: metric.to_string(),
                    point,
                })
            }
        }
    }

    /// True when distances between one-dimensional vectors are a monotone
    /// function of `|a - b|`, computed exactly as [`Self::distance_1d`] does.
    pub(crate) fn is_line_metric(&self) -> bool {
        match self {
            MetricSpace::Euclidean => true,
            MetricSpace::Lp(p) => *p == 1.0,
            _ => false,
        }
    }

    /// Bit-identical to `distance` on one-element vectors for line metrics.
    #[inline]
    pub(crate) fn distance_1d(&self, a: f64, b: f64) -> f64 {
        match self {
            MetricSpace::Euclidean => euclidean(&[a], &[b]),
            _ => lp(1.0, &[a], &[b]),
        }
    }
}

impl fmt::Display for MetricSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MetricSpace::Euclidean => write!(f, "euclidean"),
            MetricSpace::Lp(p) => write!(f, "lp:{p}"),
            MetricSpace::Discrete => write!(f, "discrete"),
            MetricSpace::Edit => write!(f, "edit"),
            MetricSpace::Table(t) => write!(f, "table[{} symbols]", t.len()),
            MetricSpace::Augmented { base, delta } => write!(f, "augmented({base}, delta={delta})"),
        }
    }
}

impl FromStr for MetricSpace {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        MetricSpace::parse(s)
    }
}

fn check_dims(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    Ok(())
}

#[inline]
fn euclidean(x: &[f64], y: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (a, b) in x.iter().zip(y) {
        let d = a - b;
        acc += d * d;
    }
    acc.sqrt()
}

#[inline]
fn lp(p: f64, x: &[f64], y: &[f64]) -> f64 {
    if p == 1.0 {
        let mut acc = 0.0;
        for (a, b) in x.iter().zip(y) {
            acc += (a - b).abs();
        }
        return acc;
    }
    let mut acc = 0.0;
    for (a, b) in x.iter().zip(y) {
        acc += (a - b).abs().powf(p);
    }
    acc.powf(p.recip())
}

/// Uniform `[0, 1)` coordinate keyed by `(seed, index)`, independent of draw order.
pub fn counter_uniform(seed: u64, index: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng.gen::<f64>()
}

/// A base space extended by a uniform tie-breaking coordinate.
///
/// Points are lifted with [`AugmentedSpace::lift`]; the attached `u` is a
/// pure function of the seed and the point's draw index, so an augmented
/// dataset can be replayed exactly. Use distinct seeds for independent
/// samples (training points, nuclei, queries).
#[derive(Clone, Debug, PartialEq)]
pub struct AugmentedSpace {
    space: MetricSpace,
    seed: u64,
}

impl AugmentedSpace {
    pub fn new(base: MetricSpace, delta: f64, seed: u64) -> Result<Self> {
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::NonPositive("delta", delta));
        }
        Ok(AugmentedSpace {
            space: MetricSpace::Augmented {
                base: Box::new(base),
                delta,
            },
            seed,
        })
    }

    /// The metric over augmented points.
    pub fn space(&self) -> &MetricSpace {
        &self.space
    }

    pub fn delta(&self) -> f64 {
        match self.space {
            MetricSpace::Augmented { delta, .. } => delta,
            _ => unreachable!("AugmentedSpace always wraps an augmented metric"),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn lift(&self, x: Point, index: u64) -> Point {
        Point::Augmented {
            base: Box::new(x),
            u: counter_uniform(self.seed, index),
        }
    }

    pub fn lift_all(&self, points: impl IntoIterator<Item = Point>) -> Vec<Point> {
        points
            .into_iter()
            .enumerate()
            .map(|(i, p)| self.lift(p, i as u64))
            .collect()
    }
}

/// Creates an augmented space with the given `delta` over `space`.
pub fn augment(space: &MetricSpace, delta: f64, rng_seed: u64) -> Result<AugmentedSpace> {
    AugmentedSpace::new(space.clone(), delta, rng_seed)
}

/// `1e-6` times the median pairwise distance among the first 100 pilot points.
pub fn default_delta(space: &MetricSpace, pilot: &[Point]) -> Result<f64> {
    let pilot = &pilot[..pilot.len().min(100)];
    let mut distances = Vec::with_capacity(pilot.len() * pilot.len() / 2);
    for (i, a) in pilot.iter().enumerate() {
        for b in &pilot[i + 1..] {
            distances.push(space.distance(a, b)?);
        }
    }
    if distances.is_empty() {
        return Ok(1e-6);
    }
    distances.sort_by(f64::total_cmp);
    let median = distances[distances.len() / 2];
    Ok(if median > 0.0 { 1e-6 * median } else { 1e-6 })
}
