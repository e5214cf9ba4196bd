use std::sync::Arc;

use metric_proto::harness::{rate_sweep_config, ExperimentConfig};
use metric_proto::metric::{AugmentedSpace, DistanceTable, MetricSpace, Point};
use metric_proto::models::{build_gamma_net, Classifier, KnnModel, LabeledDataset, ProtoKnnModel};
use metric_proto::neighbors::{k_nearest, NeighborIndex, PivotIndex};
use metric_proto::synthetic::DistributionSpec;
use proptest::prelude::*;

fn vector(d: usize) -> impl Strategy<Value = Point> {
    prop::collection::vec(-4i32..=4, d).prop_map(|v| Point::Vector(v.into_iter().map(|c| c as f64 * 0.5).collect()))
}

fn real_vector(d: usize) -> impl Strategy<Value = Point> {
    prop::collection::vec(-10.0f64..10.0, d).prop_map(Point::Vector)
}

fn word() -> impl Strategy<Value = Point> {
    "[abc]{0,8}".prop_map(|s| Point::Sequence(s))
}

/// Plain dynamic-programming edit distance.
fn levenshtein(a: &[char], b: &[char]) -> usize {
    let mut row: Vec<usize> = (0..=b.len()).collect();
    for (i, ca) in a.iter().enumerate() {
        let mut prev = row[0];
        row[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let cur = row[j + 1];
            row[j + 1] = (prev + usize::from(ca != cb)).min(row[j] + 1).min(cur + 1);
            prev = cur;
        }
    }
    row[b.len()]
}

fn axioms(space: &MetricSpace, x: &Point, y: &Point, z: &Point) -> Result<(), TestCaseError> {
    let d = |a: &Point, b: &Point| space.distance(a, b).unwrap();
    prop_assert_eq!(d(x, x), 0.0);
    prop_assert!(d(x, y) >= 0.0);
    prop_assert!((d(x, y) - d(y, x)).abs() <= 1e-12);
    prop_assert!(d(x, z) <= d(x, y) + d(y, z) + 1e-12);
    Ok(())
}

fn oracle_knn(space: &MetricSpace, points: &[Point], q: &Point, k: usize) -> Vec<usize> {
    let d: Vec<f64> = points.iter().map(|p| space.distance(q, p).unwrap()).collect();
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| d[a].total_cmp(&d[b]).then(a.cmp(&b)));
    order.truncate(k);
    order
}

proptest! {
    #[test]
    fn euclidean_and_lp_axioms(x in real_vector(3), y in real_vector(3), z in real_vector(3), p in 1.0f64..6.0) {
        axioms(&MetricSpace::Euclidean, &x, &y, &z)?;
        axioms(&MetricSpace::Lp(p), &x, &y, &z)?;
    }

    #[test]
    fn edit_distance_axioms_and_oracle(x in word(), y in word(), z in word()) {
        axioms(&MetricSpace::Edit, &x, &y, &z)?;
        let (Point::Sequence(a), Point::Sequence(b)) = (&x, &y) else { unreachable!() };
        prop_assert_eq!(MetricSpace::Edit.distance(&x, &y).unwrap(), levenshtein(&a.chars().collect::<Vec<_>>(), &b.chars().collect::<Vec<_>>()) as f64);
    }

    #[test]
    fn discrete_axioms(a in 0usize..4, b in 0usize..4, c in 0usize..4) {
        axioms(&MetricSpace::Discrete, &Point::Symbol(a), &Point::Symbol(b), &Point::Symbol(c))?;
    }

    #[test]
    fn augmented_axioms_and_ties_broken(x in real_vector(2), y in real_vector(2), delta in 1e-6f64..1.0, seed in any::<u64>()) {
        let aug = AugmentedSpace::new(MetricSpace::Euclidean, delta, seed).unwrap();
        let (lx, ly, lz) = (aug.lift(x.clone(), 0), aug.lift(y, 1), aug.lift(x, 2));
        axioms(aug.space(), &lx, &ly, &lz)?;
        // equal base points become distinct
        prop_assert!(aug.space().distance(&lx, &lz).unwrap() > 0.0);
    }

    #[test]
    fn pivot_search_equals_brute_force(
        points in prop::collection::vec(vector(2), 1..120),
        q in vector(2),
        k_frac in 0.0f64..1.0,
        p in prop::sample::select(vec![1.0, 2.0, 3.0]),
    ) {
        let space = if p == 2.0 { MetricSpace::Euclidean } else { MetricSpace::Lp(p) };
        let k = 1 + (k_frac * (points.len() - 1) as f64) as usize;
        let expected = oracle_knn(&space, &points, &q, k);
        let pivot = PivotIndex::build(&space, points.clone()).unwrap();
        let got: Vec<usize> = pivot.k_nearest(&q, k).unwrap().indices().collect();
        prop_assert_eq!(&got, &expected);
        let brute: Vec<usize> = k_nearest(&space, &points, &q, k).unwrap().indices().collect();
        prop_assert_eq!(&brute, &expected);
    }

    #[test]
    fn line_search_equals_brute_force(xs in prop::collection::vec(-20i32..20, 1..200), q in -25i32..25, k_frac in 0.0f64..1.0) {
        let points: Vec<Point> = xs.iter().map(|&x| Point::scalar(x as f64 * 0.5)).collect();
        let q = Point::scalar(q as f64 * 0.5);
        let k = 1 + (k_frac * (points.len() - 1) as f64) as usize;
        for space in [MetricSpace::Euclidean, MetricSpace::Lp(1.0)] {
            let index = NeighborIndex::build(&space, points.clone()).unwrap();
            prop_assert!(index.line().is_some());
            let got: Vec<usize> = index.k_nearest(&q, k).unwrap().indices().collect();
            prop_assert_eq!(got, oracle_knn(&space, &points, &q, k));
        }
    }

    #[test]
    fn proto_knn_with_training_nuclei_matches_knn(
        rows in prop::collection::vec((vector(2), 0usize..3), 1..60),
        k_frac in 0.0f64..1.0,
    ) {
        let (points, labels): (Vec<Point>, Vec<usize>) = rows.into_iter().unzip();
        let k = 1 + (k_frac * (points.len() - 1) as f64) as usize;
        let data = LabeledDataset::classification(points.clone(), labels, 3).unwrap();
        let space = MetricSpace::Euclidean;
        let knn = KnnModel::fit(&data, k, &space).unwrap();
        let hybrid = ProtoKnnModel::fit(&data, points.clone(), k, &space).unwrap();
        for p in &points {
            prop_assert_eq!(hybrid.predict(p).unwrap(), knn.predict(p).unwrap());
        }
    }

    #[test]
    fn gamma_net_is_separated_and_maximal(points in prop::collection::vec(real_vector(2), 1..80), gamma in 0.1f64..8.0) {
        let space = MetricSpace::Euclidean;
        let net = build_gamma_net(&points, gamma, &space).unwrap();
        let d = |a: usize, b: usize| space.distance(&points[a], &points[b]).unwrap();
        for (i, &a) in net.iter().enumerate() {
            for &b in &net[i + 1..] {
                prop_assert!(d(a, b) >= gamma);
            }
        }
        for p in 0..points.len() {
            prop_assert!(net.contains(&p) || net.iter().any(|&c| d(p, c) < gamma));
        }
    }

    #[test]
    fn posteriors_are_normalized(
        family in prop::sample::select(vec!["purenoise:M=4,d=2", "noiseless:d=2", "margin:beta=0.3", "margin:beta=3", "linear", "simplex:d=2,M=3", "simplex:d=1,M=5"]),
        raw in prop::collection::vec(0.0f64..=1.0, 2),
    ) {
        let spec = DistributionSpec::parse(family).unwrap();
        let x = &raw[..spec.dimension()];
        let p = spec.posterior(x);
        prop_assert_eq!(p.len(), spec.n_classes());
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        prop_assert!(p.iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn table_metric_from_line_positions(pos in prop::collection::btree_set(0u8..30, 2..10).prop_map(|s| s.into_iter().collect::<Vec<_>>()), i in 0usize..10, j in 0usize..10, l in 0usize..10) {
        let s = pos.len();
        let matrix = pos.iter().map(|a| pos.iter().map(|b| (*a as f64 - *b as f64).abs()).collect()).collect();
        let table = Arc::new(DistanceTable::new((0..s).map(|i| format!("s{i}")).collect(), matrix).unwrap());
        let space = MetricSpace::Table(table);
        axioms(&space, &Point::Symbol(i % s), &Point::Symbol(j % s), &Point::Symbol(l % s))?;
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn sweeps_are_reproducible(seed in any::<u64>(), classifier in prop::sample::select(vec!["knn", "proto_nn", "proto_knn", "optinet_lite"])) {
        let config = ExperimentConfig::from_json(&format!(
            r#"{{"family":"margin:beta=0.5","classifier":"{classifier}","n_grid":[50,100],
                "trials":2,"test_points":300,"seed":{seed}}}"#
        )).unwrap();
        let csv = || {
            let mut out = Vec::new();
            rate_sweep_config(&config).unwrap().write_csv(&mut out).unwrap();
            out
        };
        prop_assert_eq!(csv(), csv());
    }
}
