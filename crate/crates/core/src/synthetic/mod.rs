//! Synthetic distributions on `[0,1]^d` with closed-form class posteriors.
//!
//! Families are selected by descriptor strings such as `margin:beta=1.0`,
//! `linear`, `noiseless:d=2`, `purenoise:M=3` or `simplex:d=2,M=3`. Every
//! family declares whatever margin and smoothness constants are known for
//! it, so the checks in [`checks`] and the harness can compare measured
//! behavior against them.

pub mod checks;
pub mod finite;
pub mod quadrature;

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};
use crate::metric::Point;

pub use checks::{
    check_generalized_lipschitz, check_margin, LipschitzReport, LipschitzViolation, MarginReport,
    MarginRow,
};
pub use finite::FiniteSpec;

const SIMPLEX_SCALE: f64 = 0.1;
const QUADRATURE_TOL: f64 = 1e-6;
const QMC_POINTS: usize = 1_000_000;

/// Built-in family and its parameters.
#[derive(Clone, Debug, PartialEq)]
pub enum Family {
    PureNoise { d: usize, classes: usize },
    Noiseless { d: usize },
    /// `P_1(x) = 1/2 + sgn(x - 1/2) |2x - 1|^beta / 2` on `[0,1]`.
    Margin { beta: f64 },
    /// `P_1(x) = x` on `[0,1]`.
    Linear,
    /// Softmax of negative anchor distances over `M` anchors.
    Simplex { d: usize, classes: usize },
}

/// Margin condition `P{P_(1) - P_(2) <= t} <= c t^alpha`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MarginParams {
    pub alpha: f64,
    pub c: f64,
}

/// Modulus `h(s) = c s^gamma` of the generalized Lipschitz condition.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PowerH {
    pub c: f64,
    pub gamma: f64,
}

impl PowerH {
    pub fn eval(&self, s: f64) -> f64 {
        self.c * s.max(0.0).powf(self.gamma)
    }

    /// Grid check that `h((a+b)/2) >= (h(a)+h(b))/2` on 1000 points of
    /// `[0,1]`. A diagnostic only.
    pub fn concavity_diagnostic(&self) -> bool {
        const N: usize = 1000;
        let s = |i: usize| i as f64 / (N - 1) as f64;
        for i in 0..N {
            for j in (i + 2..N).step_by(2) {
                let mid = self.eval(s((i + j) / 2));
                let chord = 0.5 * (self.eval(s(i)) + self.eval(s(j)));
                if mid < chord - 1e-12 * chord.abs().max(1.0) {
                    return false;
                }
            }
        }
        true
    }
}

/// How a Bayes risk value was obtained.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RiskProvenance {
    ClosedForm,
    Quadrature { error: f64 },
    QuasiMonteCarlo { error: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BayesRisk {
    pub value: f64,
    pub provenance: RiskProvenance,
}

/// A distribution of `(X, Y)` with `X` uniform on `[0,1]^d`.
#[derive(Clone, Debug, PartialEq)]
pub struct DistributionSpec {
    name: String,
    family: Family,
    anchors: Vec<Vec<f64>>,
}

impl DistributionSpec {
    pub fn new(family: Family) -> Result<Self> {
        let bad = |msg: String| Err(Error::Config(msg));
        match family {
            Family::PureNoise { d, classes } if d == 0 || classes < 2 => {
                return bad("purenoise needs d >= 1 and M >= 2".into())
            }
            Family::Noiseless { d } if d == 0 => return bad("noiseless needs d >= 1".into()),
            Family::Margin { beta } if !(beta > 0.0 && beta.is_finite()) => {
                return bad(format!("margin beta must be positive, got {beta}"))
            }
            Family::Simplex { d, classes } if d == 0 || classes < 2 => {
                return bad("simplex needs d >= 1 and M >= 2".into())
            }
            _ => {}
        }
        let anchors = match family {
            Family::Simplex { d, classes } => simplex_anchors(d, classes),
            _ => Vec::new(),
        };
        let name = match &family {
            Family::PureNoise { d: 1, classes } => format!("purenoise:M={classes}"),
            Family::PureNoise { d, classes } => format!("purenoise:M={classes},d={d}"),
            Family::Noiseless { d } => format!("noiseless:d={d}"),
            Family::Margin { beta } => format!("margin:beta={beta:?}"),
            Family::Linear => "linear".into(),
            Family::Simplex { d, classes } => format!("simplex:d={d},M={classes}"),
        };
        Ok(DistributionSpec {
            name,
            family,
            anchors,
        })
    }

    /// Parses a family descriptor.
    pub fn parse(descriptor: &str) -> Result<Self> {
        let unknown = || Error::UnknownFamily(descriptor.to_string());
        let (head, rest) = descriptor.split_once(':').unwrap_or((descriptor, ""));
        let mut params: Vec<(&str, &str)> = Vec::new();
        for part in rest.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            params.push(part.split_once('=').ok_or_else(unknown)?);
        }
        let mut take = |key: &str| -> Option<&str> {
            let pos = params.iter().position(|(k, _)| k.trim() == key)?;
            Some(params.remove(pos).1.trim())
        };
        let int = |v: Option<&str>, default: usize| -> Result<usize> {
            v.map_or(Ok(default), |s| s.parse().map_err(|_| unknown()))
        };
        let family = match head.trim() {
            "purenoise" => Family::PureNoise {
                classes: int(take("M"), 2)?,
                d: int(take("d"), 1)?,
            },
            "noiseless" => Family::Noiseless { d: int(take("d"), 1)? },
            "margin" => Family::Margin {
                beta: take("beta")
                    .map_or(Ok(1.0), |s| s.parse::<f64>())
                    .map_err(|_| unknown())?,
            },
            "linear" | "linear-1d" => Family::Linear,
            "simplex" => Family::Simplex {
                d: int(take("d"), 2)?,
                classes: int(take("M"), 3)?,
            },
            _ => return Err(unknown()),
        };
        if !params.is_empty() {
            return Err(unknown());
        }
        Self::new(family)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn dimension(&self) -> usize {
        match self.family {
            Family::PureNoise { d, .. } | Family::Noiseless { d } | Family::Simplex { d, .. } => d,
            Family::Margin { .. } | Family::Linear => 1,
        }
    }

    pub fn n_classes(&self) -> usize {
        match self.family {
            Family::PureNoise { classes, .. } | Family::Simplex { classes, .. } => classes,
            _ => 2,
        }
    }

    /// Declared margin constants, if known.
    pub fn margin(&self) -> Option<MarginParams> {
        match self.family {
            Family::Margin { beta } => Some(MarginParams {
                alpha: 1.0 / beta,
                c: 1.0,
            }),
            Family::Linear | Family::Noiseless { .. } => Some(MarginParams { alpha: 1.0, c: 1.0 }),
            Family::PureNoise { .. } => Some(MarginParams { alpha: 0.0, c: 1.0 }),
            Family::Simplex { .. } => None,
        }
    }

    /// Declared generalized Lipschitz modulus, if known.
    pub fn lipschitz(&self) -> Option<PowerH> {
        match self.family {
            Family::Margin { beta } if beta >= 1.0 => Some(PowerH { c: beta, gamma: 1.0 }),
            Family::Margin { beta } => Some(PowerH { c: 1.0, gamma: beta }),
            Family::Linear => Some(PowerH { c: 1.0, gamma: 1.0 }),
            _ => None,
        }
    }

    /// Hölder exponent of the posteriors in the Euclidean metric, if known.
    pub fn holder(&self) -> Option<f64> {
        match self.family {
            Family::Margin { beta } => Some(beta.min(1.0)),
            Family::Linear | Family::Simplex { .. } => Some(1.0),
            _ => None,
        }
    }

    /// `beta (1 + alpha) / (2 beta + d)` when both exponents are known and
    /// the result is positive.
    pub fn theoretical_exponent(&self) -> Option<f64> {
        let beta = self.holder()?;
        let alpha = self.margin()?.alpha;
        let e = beta * (1.0 + alpha) / (2.0 * beta + self.dimension() as f64);
        (e > 0.0).then_some(e)
    }

    /// Writes `P_j(x)` for every class into `out`.
    pub fn posterior_into(&self, x: &[f64], out: &mut [f64]) {
        match self.family {
            Family::PureNoise { classes, .. } => out.fill(1.0 / classes as f64),
            Family::Noiseless { .. } => {
                let c = usize::from(x[0] >= 0.5);
                out[c] = 1.0;
                out[1 - c] = 0.0;
            }
            Family::Margin { beta } => {
                let u = 2.0 * x[0] - 1.0;
                let p = 0.5 + 0.5 * u.signum() * u.abs().powf(beta);
                let p = if u == 0.0 { 0.5 } else { p };
                out[0] = p;
                out[1] = 1.0 - p;
            }
            Family::Linear => {
                out[0] = x[0];
                out[1] = 1.0 - x[0];
            }
            Family::Simplex { .. } => {
                let mut min = f64::INFINITY;
                for (o, a) in out.iter_mut().zip(&self.anchors) {
                    let d2: f64 = a.iter().zip(x).map(|(a, x)| (a - x) * (a - x)).sum();
                    *o = d2.sqrt();
                    min = min.min(*o);
                }
                let mut total = 0.0;
                for o in out.iter_mut() {
                    *o = (-(*o - min) / SIMPLEX_SCALE).exp();
                    total += *o;
                }
                for o in out.iter_mut() {
                    *o /= total;
                }
            }
        }
    }

    pub fn posterior(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_classes()];
        self.posterior_into(x, &mut out);
        out
    }

    /// `argmax_j P_j(x)`, lowest index on ties.
    pub fn bayes_class(&self, x: &[f64]) -> usize {
        argmax(&self.posterior(x))
    }

    fn draw_x(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        (0..self.dimension()).map(|_| rng.gen::<f64>()).collect()
    }

    /// `n` i.i.d. labeled pairs. Each pair consumes `d + 1` uniforms: the
    /// coordinates, then one inverted through the posterior CDF.
    pub fn sample(&self, n: usize, seed: u64) -> LabeledDataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = self.n_classes();
        let mut post = vec![0.0; m];
        let mut points = Vec::with_capacity(n);
        let mut labels = Vec::with_capacity(n);
        for _ in 0..n {
            let x = self.draw_x(&mut rng);
            self.posterior_into(&x, &mut post);
            let u: f64 = rng.gen();
            let mut acc = 0.0;
            let mut y = m - 1;
            for (j, p) in post.iter().enumerate() {
                acc += p;
                if u < acc {
                    y = j;
                    break;
                }
            }
            // zero-probability classes are never drawn
            while post[y] == 0.0 && y > 0 {
                y -= 1;
            }
            points.push(Point::Vector(x));
            labels.push(y);
        }
        LabeledDataset::classification(points, labels, m).expect("labels are in range")
    }

    /// `n` i.i.d. draws of `X` alone.
    pub fn sample_points(&self, n: usize, seed: u64) -> Vec<Point> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| Point::Vector(self.draw_x(&mut rng))).collect()
    }

    /// `L* = E[1 - max_j P_j(X)]`, closed form where available.
    pub fn bayes_risk(&self) -> Result<BayesRisk> {
        let closed = |value| {
            Ok(BayesRisk {
                value,
                provenance: RiskProvenance::ClosedForm,
            })
        };
        match self.family {
            Family::PureNoise { classes, .. } => closed((classes - 1) as f64 / classes as f64),
            Family::Noiseless { .. } => closed(0.0),
            Family::Margin { beta } => closed(0.5 - 0.5 / (beta + 1.0)),
            Family::Linear => closed(0.25),
            Family::Simplex { .. } => self.bayes_risk_numeric(),
        }
    }

    /// `L*` by integration of the posteriors, ignoring any closed form:
    /// adaptive quadrature for `d <= 3`, a Halton rule above.
    pub fn bayes_risk_numeric(&self) -> Result<BayesRisk> {
        let m = self.n_classes();
        let f = |x: &[f64]| {
            let mut buf = [0.0; 16];
            let top = if m <= buf.len() {
                self.posterior_into(x, &mut buf[..m]);
                buf[..m].iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            } else {
                self.posterior(x).into_iter().fold(f64::NEG_INFINITY, f64::max)
            };
            1.0 - top
        };
        let d = self.dimension();
        if d <= 3 {
            let (value, error) = quadrature::integrate_unit_cube(&f, d, QUADRATURE_TOL)?;
            Ok(BayesRisk {
                value,
                provenance: RiskProvenance::Quadrature { error },
            })
        } else {
            let (value, error) = quadrature::quasi_monte_carlo(&f, d, QMC_POINTS)?;
            Ok(BayesRisk {
                value,
                provenance: RiskProvenance::QuasiMonteCarlo { error },
            })
        }
    }
}

impl fmt::Display for DistributionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

pub(crate) fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (j, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = j;
        }
    }
    best
}

fn simplex_anchors(d: usize, classes: usize) -> Vec<Vec<f64>> {
    (0..classes)
        .map(|j| {
            if d == 1 {
                return vec![(j as f64 + 0.5) / classes as f64];
            }
            let angle = std::f64::consts::TAU * j as f64 / classes as f64;
            let mut a = vec![0.5; d];
            a[0] += 0.3 * angle.cos();
            a[1] += 0.3 * angle.sin();
            a
        })
        .collect()
}

pub fn sample(spec: &DistributionSpec, n: usize, seed: u64) -> LabeledDataset {
    spec.sample(n, seed)
}

pub fn bayes_risk(spec: &DistributionSpec) -> Result<BayesRisk> {
    spec.bayes_risk()
}

/// Descriptor and one-line description of every built-in family.
pub fn registry() -> Vec<(&'static str, &'static str)> {
    vec![
        ("purenoise:M=<M>[,d=<d>]", "uniform X, every class equally likely; L* = 1 - 1/M"),
        ("noiseless:d=<d>", "uniform X, class 2 iff x1 >= 1/2; L* = 0"),
        (
            "margin:beta=<b>",
            "uniform X on [0,1], P1 = 1/2 + sgn(x-1/2)|2x-1|^b / 2; margin exponent 1/b",
        ),
        ("linear", "uniform X on [0,1], P1 = x; L* = 1/4"),
        (
            "simplex:d=<d>,M=<M>",
            "uniform X, posteriors a softmax of anchor distances; L* by quadrature",
        ),
    ]
}
