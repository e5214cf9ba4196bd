//! Monte-Carlo checks of the declared margin and smoothness constants.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

use super::{DistributionSpec, MarginParams, PowerH};

#[derive(Clone, Debug, PartialEq)]
pub struct MarginRow {
    pub t: f64,
    /// Empirical `P{P_(1)(X) - P_(2)(X) <= t}`.
    pub empirical: f64,
    pub stderr: f64,
    /// `c t^alpha`.
    pub bound: f64,
    /// Empirical value exceeds `bound + 3 stderr`.
    pub flagged: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MarginReport {
    pub params: MarginParams,
    pub rows: Vec<MarginRow>,
}

impl MarginReport {
    pub fn holds(&self) -> bool {
        self.rows.iter().all(|r| !r.flagged)
    }
}

fn top_two_gap(post: &[f64]) -> f64 {
    let (mut first, mut second) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for &p in post {
        if p > first {
            second = first;
            first = p;
        } else if p > second {
            second = p;
        }
    }
    first - second
}

fn uniform_point(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    (0..d).map(|_| rng.gen::<f64>()).collect()
}

/// Monte-Carlo CDF of the posterior gap at each `t`, against the declared
/// margin constants or `params` when given.
pub fn check_margin(
    spec: &DistributionSpec,
    t_grid: &[f64],
    n_mc: usize,
    seed: u64,
    params: Option<MarginParams>,
) -> Result<MarginReport> {
    let params = params.or_else(|| spec.margin()).ok_or(Error::Undeclared("margin condition"))?;
    if let Some(&t) = t_grid.iter().find(|&&t| !(t > 0.0 && t <= 1.0)) {
        return Err(Error::Config(format!("margin grid value {t} outside (0, 1]")));
    }
    if n_mc == 0 {
        return Err(Error::Empty("Monte-Carlo sample"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut post = vec![0.0; spec.n_classes()];
    let mut gaps: Vec<f64> = (0..n_mc)
        .map(|_| {
            let x = uniform_point(&mut rng, spec.dimension());
            spec.posterior_into(&x, &mut post);
            top_two_gap(&post)
        })
        .collect();
    gaps.sort_by(f64::total_cmp);
    let n = n_mc as f64;
    let rows = t_grid
        .iter()
        .map(|&t| {
            // gaps within rounding of t count as <= t
            let count = gaps.partition_point(|&g| g <= t + 1e-12);
            let empirical = count as f64 / n;
            let stderr = (empirical * (1.0 - empirical) / n).sqrt();
            let bound = params.c * t.powf(params.alpha);
            MarginRow {
                t,
                empirical,
                stderr,
                bound,
                flagged: empirical > bound + 3.0 * stderr,
            }
        })
        .collect();
    Ok(MarginReport { params, rows })
}

#[derive(Clone, Debug, PartialEq)]
pub struct LipschitzViolation {
    pub x: Vec<f64>,
    pub z: Vec<f64>,
    pub class: usize,
    /// `|P_j(x) - P_j(z)|`.
    pub gap: f64,
    /// Estimated `mu(S_{x, rho(x,z)})`.
    pub ball_mass: f64,
    /// `h` at the upper confidence limit of the ball mass.
    pub allowed: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LipschitzReport {
    pub h: PowerH,
    pub pairs: usize,
    pub violations: Vec<LipschitzViolation>,
}

impl LipschitzReport {
    pub fn holds(&self) -> bool {
        self.violations.is_empty()
    }
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
}

/// Samples `n_pairs` pairs `(x, z)`, half independent and half with `z`
/// within 0.1 of `x` per coordinate, and compares every posterior gap with
/// `h` evaluated at the upper 3-sigma limit of the Monte-Carlo ball mass.
/// Ball masses share one set of `n_ball_mc` uniform draws.
pub fn check_generalized_lipschitz(
    spec: &DistributionSpec,
    n_pairs: usize,
    n_ball_mc: usize,
    seed: u64,
    h: Option<PowerH>,
) -> Result<LipschitzReport> {
    let h = h.or_else(|| spec.lipschitz()).ok_or(Error::Undeclared("Lipschitz modulus"))?;
    if n_ball_mc == 0 {
        return Err(Error::Empty("Monte-Carlo sample"));
    }
    let d = spec.dimension();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cloud: Vec<Vec<f64>> = (0..n_ball_mc).map(|_| uniform_point(&mut rng, d)).collect();
    let m = spec.n_classes();
    let (mut px, mut pz) = (vec![0.0; m], vec![0.0; m]);
    let mut dists = vec![0.0; n_ball_mc];
    let mut violations = Vec::new();
    let n = n_ball_mc as f64;
    for i in 0..n_pairs {
        let x = uniform_point(&mut rng, d);
        let z: Vec<f64> = if i % 2 == 0 {
            uniform_point(&mut rng, d)
        } else {
            x.iter()
                .map(|&c| (c + 0.1 * (rng.gen::<f64>() - 0.5)).clamp(0.0, 1.0))
                .collect()
        };
        spec.posterior_into(&x, &mut px);
        spec.posterior_into(&z, &mut pz);
        let worst = (0..m)
            .map(|j| (j, (px[j] - pz[j]).abs()))
            .fold((0, 0.0), |a, b| if b.1 > a.1 { b } else { a });
        if worst.1 == 0.0 {
            continue;
        }
        let r = euclidean(&x, &z);
        for (slot, c) in dists.iter_mut().zip(&cloud) {
            *slot = euclidean(&x, c);
        }
        let count = dists.iter().filter(|&&dd| dd <= r).count();
        let p = count as f64 / n;
        // shrunk proportion keeps the error positive when the count is 0 or n
        let shrunk = (count as f64 + 1.0) / (n + 2.0);
        let se = (shrunk * (1.0 - shrunk) / n).sqrt();
        let allowed = h.eval((p + 3.0 * se).min(1.0));
        if worst.1 > allowed + 1e-12 {
            violations.push(LipschitzViolation {
                x,
                z,
                class: worst.0,
                gap: worst.1,
                ball_mass: p,
                allowed,
            });
        }
    }
    Ok(LipschitzReport {
        h,
        pairs: n_pairs,
        violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(s: &str) -> DistributionSpec {
        DistributionSpec::parse(s).unwrap()
    }

    #[test]
    fn margin_family_gap_is_uniform() {
        let r = check_margin(&spec("margin:beta=1.0"), &[0.25, 0.5, 1.0], 100_000, 1, None).unwrap();
        assert!((r.rows[1].empirical - 0.5).abs() < 0.01);
        assert!(r.holds());
        let r = check_margin(&spec("margin:beta=0.5"), &[0.1, 0.5], 100_000, 2, None).unwrap();
        assert!(r.holds());
        assert!((r.rows[1].empirical - 0.25).abs() < 0.01);
    }

    #[test]
    fn pure_noise_fails_positive_alpha() {
        let s = spec("purenoise:M=3");
        let r = check_margin(&s, &[0.1, 0.5], 1000, 1, Some(MarginParams { alpha: 1.0, c: 1.0 })).unwrap();
        assert!(r.rows.iter().all(|row| row.flagged && row.empirical == 1.0));
        assert!(check_margin(&s, &[0.1, 0.5], 1000, 1, None).unwrap().holds());
    }

    #[test]
    fn noiseless_gap_is_one() {
        let s = spec("noiseless:d=2");
        for alpha in [0.5, 1.0, 5.0] {
            let r = check_margin(&s, &[0.1, 0.9], 1000, 1, Some(MarginParams { alpha, c: 1.0 })).unwrap();
            assert!(r.holds() && r.rows.iter().all(|row| row.empirical == 0.0));
        }
    }

    #[test]
    fn margin_rejects_bad_grid_and_undeclared() {
        assert!(check_margin(&spec("linear"), &[0.0], 10, 1, None).is_err());
        assert!(check_margin(&spec("linear"), &[1.5], 10, 1, None).is_err());
        assert!(matches!(
            check_margin(&spec("simplex:d=2,M=3"), &[0.5], 10, 1, None),
            Err(Error::Undeclared(_))
        ));
    }

    #[test]
    fn linear_family_is_lipschitz_in_mass() {
        let r = check_generalized_lipschitz(&spec("linear"), 1000, 100_000, 5, None).unwrap();
        assert!(r.holds(), "{:?}", r.violations.first());
    }

    #[test]
    fn margin_family_declared_modulus_holds() {
        for s in ["margin:beta=1.0", "margin:beta=0.5", "margin:beta=2.0"] {
            let r = check_generalized_lipschitz(&spec(s), 500, 50_000, 6, None).unwrap();
            assert!(r.holds(), "{s}: {:?}", r.violations.first());
        }
    }

    #[test]
    fn pure_noise_passes_any_modulus() {
        let h = PowerH { c: 1e-9, gamma: 3.0 };
        let r = check_generalized_lipschitz(&spec("purenoise:M=3,d=2"), 200, 1000, 1, Some(h)).unwrap();
        assert!(r.holds());
    }

    #[test]
    fn noiseless_boundary_pairs_flagged() {
        let h = PowerH { c: 1.0, gamma: 1.0 };
        let r = check_generalized_lipschitz(&spec("noiseless:d=2"), 400, 20_000, 1, Some(h)).unwrap();
        assert!(!r.violations.is_empty());
        for v in &r.violations {
            assert!((v.x[0] < 0.5) != (v.z[0] < 0.5));
            assert_eq!(v.gap, 1.0);
        }
        assert!(matches!(
            check_generalized_lipschitz(&spec("noiseless:d=2"), 10, 10, 1, None),
            Err(Error::Undeclared(_))
        ));
    }
}
