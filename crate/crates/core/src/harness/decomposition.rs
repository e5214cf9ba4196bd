//! Exact excess risk of plug-in rules on finite supports, against the sum
//! of per-class, per-competitor deviation terms.
//!
//! Training positions are fixed and every label pattern is enumerated with
//! its exact probability. All arithmetic is integral over the common scale
//! `D^(n+2)`, where `D` is the spec's denominator.

use num_rational::Ratio;

use crate::error::{Error, Result};
use crate::metric::Point;
use crate::neighbors::k_nearest;
use crate::partition::VoronoiPartition;
use crate::synthetic::FiniteSpec;

/// Label patterns enumerated per instance at most.
pub const MAX_PATTERNS: u64 = 1 << 16;
pub const MAX_SUPPORT: usize = 8;
pub const MAX_CLASSES: usize = 4;
pub const MAX_TRAINING: usize = 12;

/// How the posterior estimate at a support point is formed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FiniteRule {
    /// The true posteriors.
    Exact,
    /// Cell vote fractions over nuclei given as support indices.
    ProtoNn { nuclei: Vec<usize> },
    /// Vote fractions of the `k` nearest training points.
    Knn { k: usize },
    /// Vote fractions of the `k` training points nearest the query's nucleus.
    ProtoKnn { nuclei: Vec<usize>, k: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct DecompositionReport {
    /// `E{L(g_n)} - L*` given the training positions.
    pub excess: Ratio<i128>,
    /// `J[j][l]`.
    pub terms: Vec<Vec<Ratio<i128>>>,
    pub bound: Ratio<i128>,
    /// `Delta*_l(x) = P_{g*(x)}(x) - P_l(x)` for every support point `x`.
    pub delta: Vec<Vec<Ratio<i128>>>,
    pub holds: bool,
}

/// Training indices whose labels form the estimate at each support point,
/// or `None` for the exact rule.
fn neighborhoods(spec: &FiniteSpec, train: &[usize], rule: &FiniteRule) -> Result<Option<Vec<Vec<usize>>>> {
    let space = spec.space();
    let train_points: Vec<Point> = train.iter().map(|&i| Point::Symbol(i)).collect();
    let support = spec.support();
    let nucleus_points = |nuclei: &[usize]| -> Result<Vec<Point>> {
        if nuclei.iter().any(|&c| c >= spec.support_size()) {
            return Err(Error::Config("nucleus outside the support".into()));
        }
        Ok(nuclei.iter().map(|&c| Point::Symbol(c)).collect())
    };
    let sets = match rule {
        FiniteRule::Exact => return Ok(None),
        FiniteRule::ProtoNn { nuclei } => {
            let partition = VoronoiPartition::build(space, nucleus_points(nuclei)?)?;
            let train_cells = train_points
                .iter()
                .map(|p| partition.assign_cell(p))
                .collect::<Result<Vec<_>>>()?;
            support
                .iter()
                .map(|x| {
                    let c = partition.assign_cell(x)?;
                    Ok((0..train.len()).filter(|&i| train_cells[i] == c).collect())
                })
                .collect::<Result<Vec<_>>>()?
        }
        FiniteRule::Knn { k } => support
            .iter()
            .map(|x| Ok(k_nearest(space, &train_points, x, *k)?.indices().collect()))
            .collect::<Result<Vec<_>>>()?,
        FiniteRule::ProtoKnn { nuclei, k } => {
            let nuclei = nucleus_points(nuclei)?;
            let partition = VoronoiPartition::build(space, nuclei.clone())?;
            let at_nucleus = nuclei
                .iter()
                .map(|c| Ok(k_nearest(space, &train_points, c, *k)?.indices().collect()))
                .collect::<Result<Vec<Vec<usize>>>>()?;
            support
                .iter()
                .map(|x| Ok(at_nucleus[partition.assign_cell(x)?].clone()))
                .collect::<Result<Vec<_>>>()?
        }
    };
    Ok(Some(sets))
}

/// Computes both sides of the decomposition for `rule` trained on labeled
/// copies of the support points `train`.
pub fn verify_decomposition(spec: &FiniteSpec, train: &[usize], rule: &FiniteRule) -> Result<DecompositionReport> {
    let s = spec.support_size();
    let m = spec.n_classes();
    let n = train.len();
    if s > MAX_SUPPORT || m > MAX_CLASSES || n > MAX_TRAINING || n == 0 {
        return Err(Error::EnumerationLimit(format!(
            "support {s} (max {MAX_SUPPORT}), classes {m} (max {MAX_CLASSES}), training size {n} (1..={MAX_TRAINING})"
        )));
    }
    if train.iter().any(|&i| i >= s) {
        return Err(Error::Config("training position outside the support".into()));
    }
    let patterns = (m as u64).checked_pow(n as u32).filter(|&p| p <= MAX_PATTERNS).ok_or_else(|| {
        Error::EnumerationLimit(format!("{m}^{n} label patterns exceed {MAX_PATTERNS}"))
    })?;
    let sets = neighborhoods(spec, train, rule)?;

    let d = spec.denom() as i128;
    let mi = m as i128;
    let bayes: Vec<usize> = (0..s).map(|x| spec.bayes_class(x)).collect();
    let post = |x: usize, j: usize| spec.posterior(x)[j] as i128;
    let gap = |x: usize, l: usize| post(x, bayes[x]) - post(x, l);

    let mut excess: i128 = 0;
    let mut terms = vec![vec![0i128; m]; m];
    let mut labels = vec![0usize; n];
    let mut counts = vec![0i128; m];
    for _ in 0..patterns {
        let prob: i128 = (0..n).map(|i| spec.posterior(train[i])[labels[i]] as i128).product();
        if prob != 0 {
            for x in 0..s {
                let weight = spec.mass()[x] as i128 * prob;
                // estimate numerators over a common denominator
                let den = match &sets {
                    None => d,
                    Some(sets) => {
                        counts.fill(0);
                        for &i in &sets[x] {
                            counts[labels[i]] += 1;
                        }
                        (sets[x].len() as i128).max(1)
                    }
                };
                let num = |j: usize| if sets.is_none() { post(x, j) } else { counts[j] };
                let predicted = (1..m).fold(0, |b, j| if num(j) > num(b) { j } else { b });
                excess += weight * gap(x, predicted);
                for l in (0..m).filter(|&l| l != bayes[x]) {
                    let g = gap(x, l);
                    if g == 0 {
                        continue;
                    }
                    for (j, row) in terms.iter_mut().enumerate() {
                        // |num/den - P_j| >= gap/(D M)
                        if mi * (num(j) * d - post(x, j) * den).abs() >= g * den {
                            row[l] += weight * g;
                        }
                    }
                }
            }
        }
        // next pattern, first index fastest
        for y in labels.iter_mut() {
            *y += 1;
            if *y < m {
                break;
            }
            *y = 0;
        }
    }

    let scale = d.pow(n as u32 + 2);
    let ratio = |v: i128| Ratio::new(v, scale);
    let total: i128 = terms.iter().flatten().sum();
    Ok(DecompositionReport {
        excess: ratio(excess),
        terms: terms.iter().map(|row| row.iter().map(|&v| ratio(v)).collect()).collect(),
        bound: ratio(total),
        delta: (0..s).map(|x| (0..m).map(|l| Ratio::new(gap(x, l), d)).collect()).collect(),
        holds: excess <= total,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::DistanceTable;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn two_point(posterior: Vec<Vec<u64>>) -> FiniteSpec {
        let table = DistanceTable::new(vec!["a".into(), "b".into()], vec![vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        FiniteSpec::new(table, 4, vec![2, 2], posterior).unwrap()
    }

    #[test]
    fn single_nucleus_small_case() {
        // P_1(a) = 3/4, P_1(b) = 1/4; one cell pools both points
        let spec = two_point(vec![vec![3, 1], vec![1, 3]]);
        let r = verify_decomposition(&spec, &[0, 1, 0], &FiniteRule::ProtoNn { nuclei: vec![0] }).unwrap();
        // majority over 3 labels, exact enumeration by hand:
        // P{class 1 majority} = P{at least 2 of (3/4, 1/4, 3/4) are class 1}
        let p = |a: f64, b: f64, c: f64| a * b * c + a * b * (1.0 - c) + a * (1.0 - b) * c + (1.0 - a) * b * c;
        let maj1 = p(0.75, 0.25, 0.75);
        // excess: at a the Bayes class is 1 (gap 1/2 when predicting 2), at b the reverse
        let expected = 0.5 * (0.5 * (1.0 - maj1)) + 0.5 * (0.5 * maj1);
        let got = *r.excess.numer() as f64 / *r.excess.denom() as f64;
        assert!((got - expected).abs() < 1e-15, "{got} vs {expected}");
        assert!(r.holds);
        assert_eq!(r.delta[0], vec![Ratio::new(0, 4), Ratio::new(2, 4)]);
    }

    #[test]
    fn exact_posteriors_have_zero_excess() {
        let spec = two_point(vec![vec![3, 1], vec![2, 2]]);
        let r = verify_decomposition(&spec, &[0, 1], &FiniteRule::Exact).unwrap();
        assert_eq!(r.excess, Ratio::from_integer(0));
        assert!(r.holds);
    }

    #[test]
    fn pure_noise_is_zero_on_both_sides() {
        let spec = two_point(vec![vec![2, 2], vec![2, 2]]);
        for rule in [FiniteRule::Knn { k: 1 }, FiniteRule::ProtoNn { nuclei: vec![1] }] {
            let r = verify_decomposition(&spec, &[0, 1, 1], &rule).unwrap();
            assert_eq!(r.excess, Ratio::from_integer(0));
            assert_eq!(r.bound, Ratio::from_integer(0));
        }
    }

    #[test]
    fn limits_enforced() {
        let spec = two_point(vec![vec![3, 1], vec![1, 3]]);
        assert!(matches!(
            verify_decomposition(&spec, &[0; 13], &FiniteRule::Exact),
            Err(Error::EnumerationLimit(_))
        ));
        assert!(verify_decomposition(&spec, &[], &FiniteRule::Exact).is_err());
        assert!(verify_decomposition(&spec, &[2], &FiniteRule::Exact).is_err());
    }

    #[test]
    fn random_instances_hold() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let spec = FiniteSpec::random(&mut rng, 6, 3).unwrap();
            let n = rng.gen_range(1..=6);
            let train = spec.draw_support(n, &mut rng);
            let k = rng.gen_range(1..=n);
            for rule in [
                FiniteRule::Knn { k },
                FiniteRule::ProtoNn { nuclei: vec![0, spec.support_size() - 1] },
                FiniteRule::ProtoKnn { nuclei: vec![1], k },
            ] {
                assert!(verify_decomposition(&spec, &train, &rule).unwrap().holds);
            }
        }
    }
}
