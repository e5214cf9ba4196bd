//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Oracles here are written from scratch and share no code with the library
//! paths they check. The process exits 0 after reporting so that a failing
//! statistical criterion does not hide the others; set
//! `ACCEPTANCE_STRICT=1` to turn any FAIL into a nonzero exit.

use std::cmp::Ordering;
use std::time::Instant;

use metric_proto::harness::{
    conditional_risk, fit_log_slope, rate_sweep_config, verify_decomposition, BayesClassifier, ExperimentConfig,
    FiniteRule, RiskReport,
};
use metric_proto::metric::{AugmentedSpace, DistanceTable, MetricSpace, Point};
use metric_proto::models::{build_gamma_net, Classifier, LabeledDataset, PartitionRegressor, ProtoNnModel};
use metric_proto::neighbors::{LineIndex, PivotIndex};
use metric_proto::synthetic::{DistributionSpec, FiniteSpec};
use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

// ---------------------------------------------------------------- sweeps

fn sweep(json: &str) -> Result<RiskReport, String> {
    let config = ExperimentConfig::from_json(json).map_err(|e| e.to_string())?;
    rate_sweep_config(&config).map_err(|e| e.to_string())
}

fn knn_config(classifier: &str, m_schedule: &str) -> String {
    format!(
        r#"{{"family":"margin:beta=1.0","classifier":"{classifier}",
            "n_grid":[256,1024,4096,16384,65536],
            "k_schedule":"floor(pow(n,2/3))"{m_schedule},
            "trials":200,"test_points":100000,"seed":1}}"#
    )
}

fn means(report: &RiskReport) -> Vec<f64> {
    report.grid.iter().map(|g| g.mean_excess).collect()
}

fn sci(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.3e}")).collect();
    format!("[{}]", parts.join(", "))
}

fn criterion_1(knn: &RiskReport) -> Outcome {
    let fit = fit_log_slope(knn).map_err(|e| e.to_string())?;
    let detail = format!("slope {:.4} (stderr {:.4}), mean excess {}", fit.slope, fit.stderr, sci(&means(knn)));
    if (-0.92..=-0.42).contains(&fit.slope) {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn criterion_2(knn: &RiskReport, hybrid: &RiskReport) -> Outcome {
    let a = fit_log_slope(knn).map_err(|e| e.to_string())?.slope;
    let b = fit_log_slope(hybrid).map_err(|e| e.to_string())?.slope;
    let ratios: Vec<f64> = means(hybrid).iter().zip(means(knn)).map(|(h, k)| h / k).collect();
    let detail = format!(
        "slope {b:.4} vs knn {a:.4} (diff {:.4}); excess ratios {:.3?}",
        (b - a).abs(),
        ratios
    );
    let slope_ok = (b - a).abs() <= 0.15;
    let ratio_ok = ratios.iter().all(|&r| (1.0 / 3.0..=3.0).contains(&r));
    if slope_ok && ratio_ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn criterion_3() -> Outcome {
    let report = sweep(
        r#"{"family":"noiseless:d=2","classifier":"proto_nn",
            "n_grid":[256,2048,16384,131072],"m_schedule":"ceil(sqrt(n))",
            "trials":100,"test_points":20000,"seed":3}"#,
    )?;
    let g = &report.grid;
    let mut problems = Vec::new();
    for w in g.windows(2) {
        let slack = 2.0 * w[0].excess_stderr.hypot(w[1].excess_stderr);
        if w[1].mean_excess >= w[0].mean_excess + slack {
            problems.push(format!("n={} does not decrease", w[1].n));
        }
    }
    let (first, last) = (g[0].mean_excess, g[g.len() - 1].mean_excess);
    if last >= first / 3.0 {
        problems.push(format!("final {last:.4e} not below first/3 = {:.4e}", first / 3.0));
    }
    let detail = format!("mean excess {}", sci(&means(&report)));
    if problems.is_empty() {
        Ok(detail)
    } else {
        Err(format!("{detail}; {}", problems.join("; ")))
    }
}

// --------------------------------------------------------- decomposition

fn ranked_by(d: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..d.len()).collect();
    order.sort_by(|&a, &b| d[a].partial_cmp(&d[b]).unwrap().then(a.cmp(&b)));
    order
}

fn closest(d: &[f64]) -> usize {
    ranked_by(d)[0]
}

/// Independent excess computation: enumerate label patterns recursively
/// with rational probabilities.
fn oracle_excess(spec: &FiniteSpec, train: &[usize], rule: &FiniteRule) -> Ratio<i128> {
    let s = spec.support_size();
    let m = spec.n_classes();
    let d = spec.denom() as i128;
    let dist = |a: usize, b: usize| spec.space().distance(&Point::Symbol(a), &Point::Symbol(b)).unwrap();
    let knn_of = |x: usize, k: usize| -> Vec<usize> {
        let ds: Vec<f64> = train.iter().map(|&t| dist(x, t)).collect();
        ranked_by(&ds).into_iter().take(k).collect()
    };
    let cell_of = |x: usize, nuclei: &[usize]| closest(&nuclei.iter().map(|&c| dist(x, c)).collect::<Vec<_>>());
    let hood: Vec<Option<Vec<usize>>> = (0..s)
        .map(|x| match rule {
            FiniteRule::Exact => None,
            FiniteRule::Knn { k } => Some(knn_of(x, *k)),
            FiniteRule::ProtoNn { nuclei } => {
                let c = cell_of(x, nuclei);
                Some((0..train.len()).filter(|&i| cell_of(train[i], nuclei) == c).collect())
            }
            FiniteRule::ProtoKnn { nuclei, k } => Some(knn_of(nuclei[cell_of(x, nuclei)], *k)),
        })
        .collect();
    let p = |x: usize, j: usize| Ratio::new(spec.posterior(x)[j] as i128, d);
    let argmax = |v: &[Ratio<i128>]| (0..v.len()).fold(0, |b, j| if v[j] > v[b] { j } else { b });

    fn walk(
        i: usize,
        labels: &mut Vec<usize>,
        prob: Ratio<i128>,
        out: &mut Ratio<i128>,
        ctx: &dyn Fn(&[usize]) -> Ratio<i128>,
        step: &dyn Fn(usize, usize) -> Ratio<i128>,
        n: usize,
        m: usize,
    ) {
        if prob == Ratio::from_integer(0) {
            return;
        }
        if i == n {
            *out += prob * ctx(labels);
            return;
        }
        for y in 0..m {
            labels.push(y);
            walk(i + 1, labels, prob * step(i, y), out, ctx, step, n, m);
            labels.pop();
        }
    }

    let loss_gap = |labels: &[usize]| -> Ratio<i128> {
        let mut total = Ratio::from_integer(0);
        for x in 0..s {
            let truth: Vec<_> = (0..m).map(|j| p(x, j)).collect();
            let estimate: Vec<Ratio<i128>> = match &hood[x] {
                None => truth.clone(),
                Some(h) => (0..m)
                    .map(|j| Ratio::from_integer(h.iter().filter(|&&i| labels[i] == j).count() as i128))
                    .collect(),
            };
            let g = argmax(&estimate);
            let best = argmax(&truth);
            total += Ratio::new(spec.mass()[x] as i128, d) * (truth[best] - truth[g]);
        }
        total
    };
    let step = |i: usize, y: usize| p(train[i], y);
    let mut out = Ratio::from_integer(0);
    walk(0, &mut Vec::new(), Ratio::from_integer(1), &mut out, &loss_gap, &step, train.len(), m);
    out
}

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut per_rule = [0usize; 4];
    for i in 0..100 {
        let spec = FiniteSpec::random(&mut rng, 8, 4).map_err(|e| e.to_string())?;
        let m = spec.n_classes() as u32;
        let max_n = (1..=12u32).rev().find(|&n| m.pow(n) <= 1 << 16).unwrap();
        let n = rng.gen_range(1..=max_n as usize);
        let train = spec.draw_support(n, &mut rng);
        let s = spec.support_size();
        let mut nuclei: Vec<usize> = (0..rng.gen_range(1..=s)).map(|_| rng.gen_range(0..s)).collect();
        nuclei.dedup();
        let rule = match i % 4 {
            0 => FiniteRule::Exact,
            1 => FiniteRule::Knn { k: rng.gen_range(1..=n) },
            2 => FiniteRule::ProtoNn { nuclei },
            _ => FiniteRule::ProtoKnn { nuclei, k: rng.gen_range(1..=n) },
        };
        let report = verify_decomposition(&spec, &train, &rule).map_err(|e| e.to_string())?;
        if report.excess > report.bound {
            return Err(format!("instance {i}: excess {} > bound {}", report.excess, report.bound));
        }
        let expected = oracle_excess(&spec, &train, &rule);
        if report.excess != expected {
            return Err(format!("instance {i}: excess {} but oracle gives {expected}", report.excess));
        }
        per_rule[i % 4] += 1;
    }
    Ok(format!("100 instances hold; exact/knn/proto_nn/proto_knn = {per_rule:?}"))
}

// -------------------------------------------------------------- oracles

fn random_table(rng: &mut ChaCha8Rng, size: usize) -> DistanceTable {
    // distinct integer points on a line under |a - b| form a metric
    let pos: Vec<f64> = rand::seq::index::sample(rng, 3 * size, size).into_iter().map(|p| p as f64).collect();
    let matrix = pos.iter().map(|a| pos.iter().map(|b| (a - b).abs()).collect()).collect();
    DistanceTable::new((0..size).map(|i| format!("s{i}")).collect(), matrix).unwrap()
}

type Gen = Box<dyn Fn(&mut ChaCha8Rng) -> Point>;

fn grid_vector(d: usize, levels: u32) -> Gen {
    Box::new(move |r| Point::Vector((0..d).map(|_| r.gen_range(0..levels) as f64 * 0.25).collect()))
}

fn spaces(rng: &mut ChaCha8Rng) -> Vec<(String, MetricSpace, Gen)> {
    let table = random_table(rng, 15);
    let augmented = AugmentedSpace::new(MetricSpace::Euclidean, 1e-3, 11).unwrap();
    let counter = std::cell::Cell::new(0u64);
    let aug_space = augmented.space().clone();
    vec![
        ("euclidean-1d".into(), MetricSpace::Euclidean, grid_vector(1, 40)),
        ("euclidean-3d".into(), MetricSpace::Euclidean, grid_vector(3, 8)),
        ("l1".into(), MetricSpace::Lp(1.0), grid_vector(2, 8)),
        ("l3".into(), MetricSpace::Lp(3.0), grid_vector(2, 8)),
        ("discrete".into(), MetricSpace::Discrete, Box::new(|r| Point::Symbol(r.gen_range(0..6)))),
        (
            "edit".into(),
            MetricSpace::Edit,
            Box::new(|r| {
                let len = r.gen_range(0..7);
                Point::Sequence((0..len).map(|_| ['a', 'b', 'c'][r.gen_range(0..3)]).collect())
            }),
        ),
        ("table".into(), MetricSpace::table(table), Box::new(|r| Point::Symbol(r.gen_range(0..15)))),
        (
            "augmented".into(),
            aug_space,
            Box::new(move |r| {
                let i = counter.get();
                counter.set(i + 1);
                augmented.lift(Point::Vector(vec![r.gen_range(0..6) as f64]), i)
            }),
        ),
    ]
}

fn brute_knn(space: &MetricSpace, points: &[Point], q: &Point, k: usize) -> Vec<(usize, f64)> {
    let d: Vec<f64> = points.iter().map(|p| space.distance(q, p).unwrap()).collect();
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| d[a].total_cmp(&d[b]).then(a.cmp(&b)));
    order.into_iter().take(k).map(|i| (i, d[i])).collect()
}

fn flatten(list: &metric_proto::neighbors::NeighborList) -> Vec<(usize, f64)> {
    list.entries().iter().map(|n| (n.index, n.distance)).collect()
}

fn criterion_5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut done = Vec::new();
    for (name, space, gen) in spaces(&mut rng) {
        for inst in 0..1000 {
            let n = rng.gen_range(1..200);
            let points: Vec<Point> = (0..n).map(|_| gen(&mut rng)).collect();
            let q = gen(&mut rng);
            let k = rng.gen_range(1..=n);
            let expected = brute_knn(&space, &points, &q, k);
            let pivot = PivotIndex::build(&space, points.clone()).map_err(|e| e.to_string())?;
            let got = flatten(&pivot.k_nearest(&q, k).map_err(|e| e.to_string())?);
            // bit-exact: distances compared by representation
            let same = |a: &[(usize, f64)]| {
                a.len() == expected.len()
                    && a.iter().zip(&expected).all(|(x, y)| x.0 == y.0 && x.1.to_bits() == y.1.to_bits())
            };
            if !same(&got) {
                return Err(format!("{name}: pivot search differs at instance {inst} (n={n}, k={k})"));
            }
            if let Some(line) = LineIndex::build(&space, &points) {
                let got = flatten(&line.k_nearest(&q, k).map_err(|e| e.to_string())?);
                if !same(&got) {
                    return Err(format!("{name}: line search differs at instance {inst} (n={n}, k={k})"));
                }
            }
        }
        done.push(name);
    }

    // Proto-NN against a from-scratch cell majority
    for inst in 0..100 {
        let (space, gen): (MetricSpace, Gen) = if inst % 2 == 0 {
            (MetricSpace::Euclidean, grid_vector(2, 6))
        } else {
            (MetricSpace::table(random_table(&mut rng, 10)), Box::new(|r| Point::Symbol(r.gen_range(0..10))))
        };
        let n = rng.gen_range(1..80);
        let m = rng.gen_range(1..12);
        let classes = rng.gen_range(1..5);
        let points: Vec<Point> = (0..n).map(|_| gen(&mut rng)).collect();
        let labels: Vec<usize> = (0..n).map(|_| rng.gen_range(0..classes)).collect();
        let nuclei: Vec<Point> = (0..m).map(|_| gen(&mut rng)).collect();
        let data = LabeledDataset::classification(points.clone(), labels.clone(), classes).map_err(|e| e.to_string())?;
        let model = ProtoNnModel::fit(&data, nuclei.clone(), &space).map_err(|e| e.to_string())?;
        let cell = |x: &Point| closest(&nuclei.iter().map(|c| space.distance(x, c).unwrap()).collect::<Vec<_>>());
        for _ in 0..20 {
            let q = gen(&mut rng);
            let c = cell(&q);
            let mut votes = vec![0usize; classes];
            for (p, &y) in points.iter().zip(&labels) {
                if cell(p) == c {
                    votes[y] += 1;
                }
            }
            // lowest class among the maxima
            let top = *votes.iter().max().unwrap();
            let expected = votes.iter().position(|&v| v == top).unwrap();
            let got = model.predict(&q).map_err(|e| e.to_string())?;
            if got != expected {
                return Err(format!("proto_nn instance {inst}: predicted {got}, majority {expected}"));
            }
        }
    }
    Ok(format!("1000 instances each on {}; proto_nn 100 instances", done.join(", ")))
}

// -------------------------------------------------------------- anchors

fn criterion_6() -> Outcome {
    let risk = |s: &str| DistributionSpec::parse(s).and_then(|d| d.bayes_risk()).map_err(|e| e.to_string());
    let linear = risk("linear")?.value;
    let noise = risk("purenoise:M=3")?.value;
    let spec = DistributionSpec::parse("margin:beta=1.0").map_err(|e| e.to_string())?;
    let l_star = spec.bayes_risk_numeric().map_err(|e| e.to_string())?.value;
    let est = conditional_risk(&spec, &BayesClassifier::new(spec.clone()), 1_000_000, 6).map_err(|e| e.to_string())?;
    let detail = format!(
        "linear {linear:.9}, purenoise {noise}, margin L* {l_star:.6} vs Bayes estimate {:.6} (stderr {:.2e})",
        est.risk, est.stderr
    );
    let ok = (linear - 0.25).abs() <= 1e-6 && noise == 2.0 / 3.0 && (est.risk - l_star).abs() <= 3.0 * est.stderr;
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn criterion_7() -> Outcome {
    // n = 20, ln n ~ 2.996: cell sizes 2 (sparse), 3 and 15 (dense)
    let mut points = Vec::new();
    let mut labels = Vec::new();
    for (center, count, base) in [(0.0, 2, 10.0), (10.0, 3, -4.0), (20.0, 15, 1.5)] {
        for i in 0..count {
            points.push(Point::scalar(center + 0.01 * i as f64));
            labels.push(base + i as f64);
        }
    }
    let data = LabeledDataset::regression(points, labels).map_err(|e| e.to_string())?;
    let nuclei = vec![Point::scalar(0.0), Point::scalar(10.0), Point::scalar(20.0)];
    let model = PartitionRegressor::fit(&data, nuclei, &MetricSpace::Euclidean).map_err(|e| e.to_string())?;
    let expected_means = [10.5, -3.0, 1.5 + 7.0];
    let mut problems = Vec::new();
    for (c, &mean) in expected_means.iter().enumerate() {
        let q = Point::scalar(c as f64 * 10.0 + 0.5);
        let plain = model.predict(&q, false).map_err(|e| e.to_string())?;
        let trunc = model.predict(&q, true).map_err(|e| e.to_string())?;
        let want_trunc = if c == 0 { 0.0 } else { mean };
        if plain != mean || trunc != want_trunc {
            problems.push(format!("cell {c}: plain {plain}, truncated {trunc}"));
        }
    }
    if problems.is_empty() {
        Ok("sparse cell gives exactly 0 truncated, cell means otherwise".into())
    } else {
        Err(problems.join("; "))
    }
}

// ----------------------------------------------------------- properties

fn criterion_8() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for (name, space, gen) in spaces(&mut rng) {
        for _ in 0..2000 {
            let (x, y, z) = (gen(&mut rng), gen(&mut rng), gen(&mut rng));
            let d = |a: &Point, b: &Point| space.distance(a, b).unwrap();
            let (xy, yx, xz, yz) = (d(&x, &y), d(&y, &x), d(&x, &z), d(&y, &z));
            if d(&x, &x) != 0.0 || xy < 0.0 || (xy - yx).abs() > 1e-12 || xz > xy + yz + 1e-12 {
                return Err(format!("{name}: metric axiom fails at {x:?}, {y:?}, {z:?}"));
            }
        }
    }
    for family in ["purenoise:M=3,d=2", "noiseless:d=3", "margin:beta=0.5", "margin:beta=2", "linear", "simplex:d=2,M=4"] {
        let spec = DistributionSpec::parse(family).map_err(|e| e.to_string())?;
        for _ in 0..10_000 {
            let x: Vec<f64> = (0..spec.dimension()).map(|_| rng.gen()).collect();
            let p = spec.posterior(&x);
            if (p.iter().sum::<f64>() - 1.0).abs() > 1e-12 || p.iter().any(|v| !(0.0..=1.0).contains(v)) {
                return Err(format!("{family}: posterior {p:?} at {x:?}"));
            }
        }
    }
    let space = MetricSpace::Euclidean;
    for _ in 0..200 {
        let n = rng.gen_range(1..150);
        let points: Vec<Point> = (0..n).map(|_| Point::Vector(vec![rng.gen(), rng.gen()])).collect();
        let gamma = rng.gen_range(0.01..0.7);
        let net = build_gamma_net(&points, gamma, &space).map_err(|e| e.to_string())?;
        let d = |a: usize, b: usize| space.distance(&points[a], &points[b]).unwrap();
        for (i, &a) in net.iter().enumerate() {
            if net[i + 1..].iter().any(|&b| d(a, b).partial_cmp(&gamma) == Some(Ordering::Less)) {
                return Err(format!("gamma-net not {gamma}-separated"));
            }
        }
        if (0..n).any(|p| !net.contains(&p) && net.iter().all(|&c| d(p, c) >= gamma)) {
            return Err("gamma-net not maximal".into());
        }
    }
    let csv = |seed: u64| -> Result<Vec<u8>, String> {
        let report = sweep(&format!(
            r#"{{"family":"margin:beta=0.5","classifier":"proto_knn","n_grid":[128,512],
                "k_schedule":"floor(sqrt(n))","trials":4,"test_points":2000,"seed":{seed}}}"#
        ))?;
        let mut out = Vec::new();
        report.write_csv(&mut out).map_err(|e| e.to_string())?;
        Ok(out)
    };
    let (a, b, c) = (csv(21)?, csv(21)?, csv(22)?);
    if a != b {
        return Err("sweep CSV differs between identical runs".into());
    }
    if a == c {
        return Err("sweep CSV ignores the seed".into());
    }
    Ok("metric axioms on 8 metrics, posterior normalization on 6 families, 200 gamma-nets, identical CSV".into())
}

fn main() {
    let started = Instant::now();
    let mut failures = 0;
    let mut report = |name: &str, outcome: Outcome| {
        let (status, detail) = match outcome {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failures += 1;
                ("FAIL", d)
            }
        };
        println!("{status} criterion {name}: {detail} [{:.0}s]", started.elapsed().as_secs_f64());
    };

    let knn = sweep(&knn_config("knn", ""));
    let hybrid = sweep(&knn_config("proto_knn", r#","m_schedule":"ceil(n/k)""#));
    match (&knn, &hybrid) {
        (Ok(knn), Ok(hybrid)) => {
            report("1 (knn rate)", criterion_1(knn));
            report("2 (proto_knn matches knn)", criterion_2(knn, hybrid));
        }
        (a, b) => {
            let e = a.as_ref().err().or(b.as_ref().err()).cloned().unwrap_or_default();
            report("1 (knn rate)", Err(e.clone()));
            report("2 (proto_knn matches knn)", Err(e));
        }
    }
    report("3 (proto_nn consistency)", criterion_3());
    report("4 (decomposition bound)", criterion_4());
    report("5 (oracle equivalences)", criterion_5());
    report("6 (analytic anchors)", criterion_6());
    report("7 (truncation)", criterion_7());
    report("8 (property suites)", criterion_8());

    println!("{failures} of 8 criteria failed");
    let strict = std::env::var("ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    if strict && failures > 0 {
        std::process::exit(1);
    }
}
