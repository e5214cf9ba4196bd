//! Adaptive Gauss-Kronrod integration over intervals and unit cubes.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

// 15-point Kronrod nodes on [0, 1] half-interval, with the embedded 7-point Gauss rule.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_225,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

const MAX_INTERVALS: usize = 4000;

fn gk15(f: &mut dyn FnMut(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for i in 0..7 {
        let dx = half * XGK[i];
        let s = f(center - dx) + f(center + dx);
        kronrod += WGK[i] * s;
        if i % 2 == 1 {
            gauss += WG[i / 2] * s;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

struct Piece {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Piece {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Piece {}
impl PartialOrd for Piece {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Piece {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Integrates `f` over `[a, b]` to absolute tolerance `tol`, bisecting the
/// interval with the largest error estimate. Returns `(value, error estimate)`.
pub fn integrate(mut f: impl FnMut(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<(f64, f64)> {
    let mut heap = BinaryHeap::new();
    let (value, error) = gk15(&mut f, a, b);
    heap.push(Piece { a, b, value, error });
    let mut total_err = error;
    // negated so a NaN error estimate keeps refining and then fails
    while !(total_err <= tol) {
        if heap.len() >= MAX_INTERVALS || total_err.is_infinite() {
            return Err(Error::Quadrature {
                estimate: total_err,
                tolerance: tol,
            });
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        let (lv, le) = gk15(&mut f, worst.a, mid);
        let (rv, re) = gk15(&mut f, mid, worst.b);
        total_err += le + re - worst.error;
        heap.push(Piece { a: worst.a, b: mid, value: lv, error: le });
        heap.push(Piece { a: mid, b: worst.b, value: rv, error: re });
    }
    // re-sum to shed accumulated update rounding
    Ok(heap.iter().fold((0.0, 0.0), |(v, e), p| (v + p.value, e + p.error)))
}

/// Iterated adaptive integration over `[0,1]^d`, `d <= 3`.
pub fn integrate_unit_cube(f: &dyn Fn(&[f64]) -> f64, d: usize, tol: f64) -> Result<(f64, f64)> {
    fn level(f: &dyn Fn(&[f64]) -> f64, x: &mut Vec<f64>, d: usize, tol: f64) -> Result<(f64, f64)> {
        if x.len() + 1 == d {
            let mut buf = x.clone();
            buf.push(0.0);
            return integrate(
                |t| {
                    *buf.last_mut().expect("non-empty") = t;
                    f(&buf)
                },
                0.0,
                1.0,
                tol,
            );
        }
        let mut inner_err = 0.0_f64;
        let mut failure = None;
        let (v, e) = integrate(
            |t| {
                x.push(t);
                let r = level(f, x, d, tol * 1e-2);
                x.pop();
                match r {
                    Ok((v, e)) => {
                        inner_err = inner_err.max(e);
                        v
                    }
                    Err(err) => {
                        failure.get_or_insert(err);
                        0.0
                    }
                }
            },
            0.0,
            1.0,
            tol,
        )?;
        if let Some(err) = failure {
            return Err(err);
        }
        Ok((v, e + inner_err))
    }
    if d == 0 || d > 3 {
        return Err(Error::Config(format!("iterated quadrature supports 1..=3 dimensions, got {d}")));
    }
    level(f, &mut Vec::with_capacity(d), d, tol)
}

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut scale = inv;
    let mut out = 0.0;
    while i > 0 {
        out += (i % base) as f64 * scale;
        i /= base;
        scale *= inv;
    }
    out
}

const PRIMES: [u64; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

/// Halton-sequence average of `f` over `[0,1]^d`. The error estimate is the
/// plain Monte-Carlo standard error, which overstates the quasi-random error.
pub fn quasi_monte_carlo(f: &dyn Fn(&[f64]) -> f64, d: usize, points: usize) -> Result<(f64, f64)> {
    if d == 0 || d > PRIMES.len() {
        return Err(Error::Config(format!("Halton integration supports 1..=16 dimensions, got {d}")));
    }
    let mut x = vec![0.0; d];
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for i in 1..=points as u64 {
        for (c, p) in x.iter_mut().zip(PRIMES) {
            *c = radical_inverse(i, p);
        }
        let v = f(&x);
        sum += v;
        sum_sq += v * v;
    }
    let n = points as f64;
    let mean = sum / n;
    let var = (sum_sq / n - mean * mean).max(0.0);
    Ok((mean, (var / n).sqrt()))
}
