//! The self-check battery behind `metric-proto verify`.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataset::LabeledDataset;
use crate::metric::{DistanceTable, MetricSpace, Point};
use crate::models::{build_gamma_net, Classifier, ProtoNnModel};
use crate::neighbors::{k_nearest, PivotIndex};
use crate::synthetic::{check_generalized_lipschitz, check_margin, DistributionSpec, FiniteSpec};

use super::config::ExperimentConfig;
use super::decomposition::{verify_decomposition, FiniteRule};
use super::risk::{conditional_risk, BayesClassifier};
use super::sweep::rate_sweep_config;

#[derive(Clone, Debug, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

type Check = std::result::Result<String, String>;

fn random_table(rng: &mut ChaCha8Rng, size: usize) -> DistanceTable {
    // shortest paths over random positive weights satisfy the triangle inequality
    let mut w = vec![vec![0.0; size]; size];
    for i in 0..size {
        for j in i + 1..size {
            let v = rng.gen_range(1..10) as f64;
            w[i][j] = v;
            w[j][i] = v;
        }
    }
    for k in 0..size {
        for i in 0..size {
            for j in 0..size {
                if w[i][k] + w[k][j] < w[i][j] {
                    w[i][j] = w[i][k] + w[k][j];
                }
            }
        }
    }
    let names = (0..size).map(|i| format!("t{i}")).collect();
    DistanceTable::new(names, w).expect("shortest-path metric")
}

/// A metric with a generator of random points in its universe.
pub(crate) fn test_spaces(rng: &mut ChaCha8Rng) -> Vec<(MetricSpace, Box<dyn Fn(&mut ChaCha8Rng) -> Point>)> {
    let table = Arc::new(random_table(rng, 12));
    let size = table.len();
    let vector = |d: usize| -> Box<dyn Fn(&mut ChaCha8Rng) -> Point> {
        Box::new(move |r: &mut ChaCha8Rng| {
            // coarse grid so exact ties occur
            Point::Vector((0..d).map(|_| r.gen_range(0..8) as f64 / 4.0).collect())
        })
    };
    vec![
        (MetricSpace::Euclidean, vector(3)),
        (MetricSpace::Euclidean, vector(1)),
        (MetricSpace::Lp(1.0), vector(2)),
        (MetricSpace::Lp(3.0), vector(2)),
        (MetricSpace::Discrete, Box::new(|r: &mut ChaCha8Rng| Point::Symbol(r.gen_range(0..5)))),
        (
            MetricSpace::Edit,
            Box::new(|r: &mut ChaCha8Rng| {
                let len = r.gen_range(0..6);
                Point::Sequence((0..len).map(|_| ['a', 'b', 'c'][r.gen_range(0..3)]).collect())
            }),
        ),
        (
            MetricSpace::Table(table),
            Box::new(move |r: &mut ChaCha8Rng| Point::Symbol(r.gen_range(0..size))),
        ),
    ]
}

fn metric_axioms(rng: &mut ChaCha8Rng) -> Check {
    let mut checked = 0;
    for (space, gen) in test_spaces(rng) {
        for _ in 0..200 {
            let (x, y, z) = (gen(rng), gen(rng), gen(rng));
            let d = |a: &Point, b: &Point| space.distance(a, b).map_err(|e| e.to_string());
            let (xy, yx, xz, yz) = (d(&x, &y)?, d(&y, &x)?, d(&x, &z)?, d(&y, &z)?);
            if d(&x, &x)? != 0.0 || xy != yx || xy < 0.0 {
                return Err(format!("{space}: identity or symmetry fails at {x:?}, {y:?}"));
            }
            if xz > xy + yz + 1e-12 * (xy + yz).max(1.0) {
                return Err(format!("{space}: triangle inequality fails"));
            }
            checked += 1;
        }
    }
    Ok(format!("{checked} triples"))
}

fn pruned_equals_brute(rng: &mut ChaCha8Rng) -> Check {
    let mut instances = 0;
    for (space, gen) in test_spaces(rng) {
        for _ in 0..40 {
            let n = rng.gen_range(1..80);
            let points: Vec<Point> = (0..n).map(|_| gen(rng)).collect();
            let index = PivotIndex::build(&space, points.clone()).map_err(|e| e.to_string())?;
            let q = gen(rng);
            let k = rng.gen_range(1..=n);
            let fast = index.k_nearest(&q, k).map_err(|e| e.to_string())?;
            let slow = k_nearest(&space, &points, &q, k).map_err(|e| e.to_string())?;
            if fast != slow {
                return Err(format!("{space}: pruned search differs at n = {n}, k = {k}"));
            }
            instances += 1;
        }
    }
    Ok(format!("{instances} instances"))
}

fn proto_nn_matches_majority(rng: &mut ChaCha8Rng) -> Check {
    let space = MetricSpace::Euclidean;
    let draw = |r: &mut ChaCha8Rng| Point::Vector(vec![r.gen_range(0..6) as f64, r.gen_range(0..6) as f64]);
    for _ in 0..50 {
        let n = rng.gen_range(1..60);
        let m = rng.gen_range(1..10);
        let classes = rng.gen_range(1..4);
        let points: Vec<Point> = (0..n).map(|_| draw(rng)).collect();
        let labels: Vec<usize> = (0..n).map(|_| rng.gen_range(0..classes)).collect();
        let nuclei: Vec<Point> = (0..m).map(|_| draw(rng)).collect();
        let data = LabeledDataset::classification(points.clone(), labels.clone(), classes).map_err(|e| e.to_string())?;
        let model = ProtoNnModel::fit(&data, nuclei.clone(), &space).map_err(|e| e.to_string())?;
        let cell = |x: &Point| -> usize {
            let d: Vec<f64> = nuclei.iter().map(|c| space.distance(x, c).unwrap()).collect();
            (0..m).fold(0, |b, i| if d[i] < d[b] { i } else { b })
        };
        for _ in 0..10 {
            let q = draw(rng);
            let c = cell(&q);
            let mut votes = vec![0; classes];
            for (p, &y) in points.iter().zip(&labels) {
                if cell(p) == c {
                    votes[y] += 1;
                }
            }
            let expected = (0..classes).fold(0, |b, j| if votes[j] > votes[b] { j } else { b });
            if model.predict(&q).map_err(|e| e.to_string())? != expected {
                return Err("cell majority differs".into());
            }
        }
    }
    Ok("50 instances".into())
}

fn gamma_net_invariants(rng: &mut ChaCha8Rng) -> Check {
    let space = MetricSpace::Euclidean;
    for _ in 0..50 {
        let n = rng.gen_range(1..100);
        let points: Vec<Point> = (0..n).map(|_| Point::Vector(vec![rng.gen(), rng.gen()])).collect();
        let gamma = rng.gen_range(0.01..0.8);
        let net = build_gamma_net(&points, gamma, &space).map_err(|e| e.to_string())?;
        let d = |a: usize, b: usize| space.distance(&points[a], &points[b]).unwrap();
        for (i, &a) in net.iter().enumerate() {
            if net[i + 1..].iter().any(|&b| d(a, b) < gamma) {
                return Err("net not separated".into());
            }
        }
        if (0..n).any(|p| net.iter().all(|&c| d(p, c) >= gamma) && !net.contains(&p)) {
            return Err("net not maximal".into());
        }
    }
    Ok("50 nets".into())
}

fn posterior_normalization(rng: &mut ChaCha8Rng) -> Check {
    for family in ["purenoise:M=3,d=2", "noiseless:d=2", "margin:beta=0.5", "linear", "simplex:d=3,M=4"] {
        let spec = DistributionSpec::parse(family).map_err(|e| e.to_string())?;
        for _ in 0..10_000 {
            let x: Vec<f64> = (0..spec.dimension()).map(|_| rng.gen()).collect();
            let p = spec.posterior(&x);
            if (p.iter().sum::<f64>() - 1.0).abs() > 1e-12 || p.iter().any(|&v| !(0.0..=1.0).contains(&v)) {
                return Err(format!("{family}: posterior at {x:?} is {p:?}"));
            }
        }
    }
    Ok("5 families".into())
}

fn margin_and_lipschitz(_: &mut ChaCha8Rng) -> Check {
    for family in ["margin:beta=1.0", "margin:beta=0.5", "linear"] {
        let spec = DistributionSpec::parse(family).map_err(|e| e.to_string())?;
        let grid = [0.05, 0.1, 0.25, 0.5, 1.0];
        if !check_margin(&spec, &grid, 50_000, 1, None).map_err(|e| e.to_string())?.holds() {
            return Err(format!("{family}: margin condition flagged"));
        }
        let report = check_generalized_lipschitz(&spec, 300, 20_000, 2, None).map_err(|e| e.to_string())?;
        if !report.holds() {
            return Err(format!("{family}: {} Lipschitz violations", report.violations.len()));
        }
    }
    Ok("3 families".into())
}

fn decomposition(rng: &mut ChaCha8Rng) -> Check {
    for i in 0..30 {
        let spec = FiniteSpec::random(rng, 6, 3).map_err(|e| e.to_string())?;
        let n = rng.gen_range(1..=6);
        let train = spec.draw_support(n, rng);
        let rule = match i % 3 {
            0 => FiniteRule::Knn { k: rng.gen_range(1..=n) },
            1 => FiniteRule::ProtoNn { nuclei: vec![0] },
            _ => FiniteRule::ProtoKnn {
                nuclei: vec![0, spec.support_size() - 1],
                k: rng.gen_range(1..=n),
            },
        };
        let report = verify_decomposition(&spec, &train, &rule).map_err(|e| e.to_string())?;
        if !report.holds {
            return Err(format!("excess {} exceeds bound {}", report.excess, report.bound));
        }
    }
    Ok("30 instances".into())
}

fn analytic_anchors(_: &mut ChaCha8Rng) -> Check {
    let risk = |s: &str| DistributionSpec::parse(s).and_then(|d| d.bayes_risk()).map(|r| r.value);
    let linear = risk("linear").map_err(|e| e.to_string())?;
    let noise = risk("purenoise:M=3").map_err(|e| e.to_string())?;
    if (linear - 0.25).abs() > 1e-6 || noise != 2.0 / 3.0 {
        return Err(format!("linear {linear}, purenoise {noise}"));
    }
    let spec = DistributionSpec::parse("margin:beta=1.0").map_err(|e| e.to_string())?;
    let l_star = spec.bayes_risk_numeric().map_err(|e| e.to_string())?.value;
    let r = conditional_risk(&spec, &BayesClassifier::new(spec.clone()), 100_000, 9).map_err(|e| e.to_string())?;
    if (r.risk - l_star).abs() > 3.0 * r.stderr {
        return Err(format!("Bayes risk estimate {} vs {l_star}", r.risk));
    }
    Ok(format!("L*(margin) = {l_star:.6}"))
}

fn reproducibility(_: &mut ChaCha8Rng) -> Check {
    let config = ExperimentConfig::from_json(
        r#"{"family":"simplex:d=2,M=3","classifier":"proto_knn","n_grid":[64,256],
            "k_schedule":"floor(sqrt(n))","trials":3,"test_points":500,"seed":5}"#,
    )
    .map_err(|e| e.to_string())?;
    let run = || -> Result<Vec<u8>, String> {
        let mut out = Vec::new();
        rate_sweep_config(&config)
            .and_then(|r| r.write_csv(&mut out))
            .map_err(|e| e.to_string())?;
        Ok(out)
    };
    if run()? != run()? {
        return Err("sweep output differs between runs".into());
    }
    Ok("identical CSV".into())
}

/// Runs every check and reports one outcome each.
pub fn run_battery(seed: u64) -> Vec<CheckOutcome> {
    let checks: [(&'static str, fn(&mut ChaCha8Rng) -> Check); 9] = [
        ("metric axioms", metric_axioms),
        ("pruned search equals brute force", pruned_equals_brute),
        ("Proto-NN equals cell majority", proto_nn_matches_majority),
        ("gamma-net separation and maximality", gamma_net_invariants),
        ("posterior normalization", posterior_normalization),
        ("declared margin and Lipschitz constants", margin_and_lipschitz),
        ("decomposition bound", decomposition),
        ("analytic Bayes risks", analytic_anchors),
        ("reproducible sweep output", reproducibility),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    checks
        .into_iter()
        .map(|(name, check)| {
            let (passed, detail) = match check(&mut rng) {
                Ok(d) => (true, d),
                Err(d) => (false, d),
            };
            CheckOutcome { name, passed, detail }
        })
        .collect()
}
