//! Integer-valued schedules `k(n)` and `m(n, k)` given as expressions.

use std::str::FromStr;

use meval::{Context, Expr};

use crate::error::{Error, Result};

const SNAP: f64 = 1e-9;

fn snap(x: f64) -> Option<f64> {
    let r = x.round();
    ((x - r).abs() <= SNAP * x.abs().max(1.0)).then_some(r)
}

/// `floor(x)`, except that values within a relative `1e-9` of an integer
/// snap to it, so `pow(4096, 2/3)` floors to 256.
pub fn snap_floor(x: f64) -> f64 {
    snap(x).unwrap_or_else(|| x.floor())
}

/// `ceil(x)` with the same snapping as [`snap_floor`].
pub fn snap_ceil(x: f64) -> f64 {
    snap(x).unwrap_or_else(|| x.ceil())
}

fn context(n: f64, k: Option<f64>) -> Context<'static> {
    let mut ctx = Context::empty();
    ctx.var("n", n);
    if let Some(k) = k {
        ctx.var("k", k);
    }
    ctx.func("floor", snap_floor)
        .func("ceil", snap_ceil)
        .func("round", f64::round)
        .func("sqrt", f64::sqrt)
        .func("ln", f64::ln)
        .func("log2", f64::log2)
        .func("log", f64::log10)
        .func("exp", f64::exp)
        .func("abs", f64::abs)
        .func2("pow", f64::powf)
        .funcn("min", |xs: &[f64]| xs.iter().cloned().fold(f64::INFINITY, f64::min), 1..)
        .funcn("max", |xs: &[f64]| xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max), 1..);
    ctx
}

/// A parsed schedule expression over `n` and, for nucleus counts, `k`.
///
/// Available functions: `floor`, `ceil`, `round`, `sqrt`, `ln`, `log2`,
/// `log` (base 10), `exp`, `abs`, `pow`, `min`, `max`.
#[derive(Clone, Debug)]
pub struct Schedule {
    source: String,
    expr: Expr,
}

impl Schedule {
    pub fn parse(source: &str) -> Result<Self> {
        let expr = Expr::from_str(source).map_err(|e| Error::Schedule {
            expr: source.to_string(),
            reason: e.to_string(),
        })?;
        Ok(Schedule {
            source: source.to_string(),
            expr,
        })
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    /// Evaluates at `n` (and `k`) and requires an integer in `lo..=hi`.
    pub fn eval(&self, n: usize, k: Option<usize>, lo: usize, hi: usize) -> Result<usize> {
        let fail = |reason: String| Error::Schedule {
            expr: self.source.clone(),
            reason,
        };
        let ctx = context(n as f64, k.map(|k| k as f64));
        let v = self.expr.eval_with_context(ctx).map_err(|e| fail(e.to_string()))?;
        let r = snap(v).ok_or_else(|| fail(format!("value {v} at n = {n} is not an integer")))?;
        if r < lo as f64 || r > hi as f64 {
            return Err(fail(format!("value {r} at n = {n} outside {lo}..={hi}")));
        }
        Ok(r as usize)
    }
}
