//! Distributions on a finite set of symbols with rational masses and
//! posteriors over a common denominator.

use rand::seq::index::sample as sample_indices;
use rand::Rng;

use crate::error::{Error, Result};
use crate::metric::{DistanceTable, MetricSpace, Point};

/// `mu(x_i) = mass[i] / denom` and `P_j(x_i) = posterior[i][j] / denom`.
#[derive(Clone, Debug)]
pub struct FiniteSpec {
    space: MetricSpace,
    denom: u64,
    mass: Vec<u64>,
    posterior: Vec<Vec<u64>>,
    n_classes: usize,
}

impl FiniteSpec {
    pub fn new(table: DistanceTable, denom: u64, mass: Vec<u64>, posterior: Vec<Vec<u64>>) -> Result<Self> {
        let bad = |msg: &str| Err(Error::Config(format!("finite distribution: {msg}")));
        if denom == 0 {
            return bad("denominator must be positive");
        }
        if table.is_empty() || mass.len() != table.len() || posterior.len() != table.len() {
            return bad("mass and posterior rows must cover the table's symbols");
        }
        if mass.iter().sum::<u64>() != denom {
            return bad("masses must sum to the denominator");
        }
        let n_classes = posterior[0].len();
        if n_classes == 0 {
            return bad("at least one class is required");
        }
        for row in &posterior {
            if row.len() != n_classes || row.iter().sum::<u64>() != denom {
                return bad("every posterior row must sum to the denominator");
            }
        }
        Ok(FiniteSpec {
            space: MetricSpace::table(table),
            denom,
            mass,
            posterior,
            n_classes,
        })
    }

    /// Random instance: up to `max_support` symbols at distinct integer grid
    /// points under the L1 distance, `2..=max_classes` classes, and
    /// denominator 12.
    pub fn random(rng: &mut impl Rng, max_support: usize, max_classes: usize) -> Result<Self> {
        const DENOM: u64 = 12;
        const GRID: usize = 5;
        let s = rng.gen_range(2..=max_support.clamp(2, DENOM as usize));
        let m = rng.gen_range(2..=max_classes.max(2));
        let cells = sample_indices(rng, GRID * GRID, s).into_vec();
        let coords: Vec<(i64, i64)> = cells.iter().map(|&c| ((c / GRID) as i64, (c % GRID) as i64)).collect();
        let matrix = coords
            .iter()
            .map(|a| coords.iter().map(|b| ((a.0 - b.0).abs() + (a.1 - b.1).abs()) as f64).collect())
            .collect();
        let names = (0..s).map(|i| format!("s{i}")).collect();
        let table = DistanceTable::new(names, matrix)?;

        // s positive parts: s - 1 distinct cuts in 1..DENOM
        let mut cuts: Vec<u64> = sample_indices(rng, DENOM as usize - 1, s - 1)
            .into_iter()
            .map(|c| c as u64 + 1)
            .collect();
        cuts.sort_unstable();
        let mass = parts(&cuts, DENOM);
        let posterior = (0..s)
            .map(|_| {
                let mut cuts: Vec<u64> = (0..m - 1).map(|_| rng.gen_range(0..=DENOM)).collect();
                cuts.sort_unstable();
                parts(&cuts, DENOM)
            })
            .collect();
        Self::new(table, DENOM, mass, posterior)
    }

    pub fn space(&self) -> &MetricSpace {
        &self.space
    }

    pub fn support_size(&self) -> usize {
        self.mass.len()
    }

    pub fn support(&self) -> Vec<Point> {
        (0..self.support_size()).map(Point::Symbol).collect()
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn denom(&self) -> u64 {
        self.denom
    }

    pub fn mass(&self) -> &[u64] {
        &self.mass
    }

    pub fn posterior(&self, i: usize) -> &[u64] {
        &self.posterior[i]
    }

    /// `argmax_j P_j(x_i)`, lowest index on ties.
    pub fn bayes_class(&self, i: usize) -> usize {
        let row = &self.posterior[i];
        (1..row.len()).fold(0, |best, j| if row[j] > row[best] { j } else { best })
    }

    /// `n` support indices drawn from `mu`.
    pub fn draw_support(&self, n: usize, rng: &mut impl Rng) -> Vec<usize> {
        (0..n)
            .map(|_| {
                let mut u = rng.gen_range(0..self.denom);
                self.mass
                    .iter()
                    .position(|&w| {
                        if u < w {
                            true
                        } else {
                            u -= w;
                            false
                        }
                    })
                    .expect("masses sum to the denominator")
            })
            .collect()
    }
}

fn parts(sorted_cuts: &[u64], total: u64) -> Vec<u64> {
    let mut out = Vec::with_capacity(sorted_cuts.len() + 1);
    let mut prev = 0;
    for &c in sorted_cuts.iter().chain(std::iter::once(&total)) {
        out.push(c - prev);
        prev = c;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn random_instances_are_valid() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..200 {
            let spec = FiniteSpec::random(&mut rng, 8, 4).unwrap();
            assert!((2..=8).contains(&spec.support_size()));
            assert!((2..=4).contains(&spec.n_classes()));
            assert!(spec.mass().iter().all(|&w| w > 0));
            let draws = spec.draw_support(50, &mut rng);
            assert!(draws.iter().all(|&i| i < spec.support_size()));
        }
    }

    #[test]
    fn rejects_unnormalized() {
        let table = DistanceTable::new(vec!["a".into(), "b".into()], vec![vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        assert!(FiniteSpec::new(table.clone(), 4, vec![1, 2], vec![vec![2, 2], vec![4, 0]]).is_err());
        assert!(FiniteSpec::new(table.clone(), 4, vec![2, 2], vec![vec![2, 1], vec![4, 0]]).is_err());
        let ok = FiniteSpec::new(table, 4, vec![2, 2], vec![vec![2, 2], vec![1, 3]]).unwrap();
        assert_eq!(ok.bayes_class(0), 0);
        assert_eq!(ok.bayes_class(1), 1);
    }
}
