//! Golden-section search on a bounded interval.

use crate::error::{Error, Result};

const INV_PHI: f64 = 0.618_033_988_749_894_8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Minimum {
    pub x: f64,
    pub value: f64,
    pub iterations: usize,
}

/// Minimize a unimodal `f` on `[lo, hi]` until the bracket is narrower than
/// `tol`. Fails with [`Error::NonConvergence`] after `max_iter` iterations.
pub fn minimize<F>(mut f: F, lo: f64, hi: f64, tol: f64, max_iter: usize) -> Result<Minimum>
where
    F: FnMut(f64) -> f64,
{
    if !(lo <= hi) {
        return Err(Error::domain(format!("empty search bracket [{lo}, {hi}]")));
    }
    let (mut a, mut b) = (lo, hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    let mut iterations = 0;
    while (b - a) > tol {
        if iterations == max_iter {
            return Err(Error::NonConvergence {
                iterations,
                width: b - a,
            });
        }
        iterations += 1;
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    // the bracket ends are candidates too when the optimum sits on a bound
    let mut best = if fc <= fd { (c, fc) } else { (d, fd) };
    for x in [lo, hi] {
        if x >= a - tol && x <= b + tol {
            let v = f(x);
            if v < best.1 {
                best = (x, v);
            }
        }
    }
    Ok(Minimum {
        x: best.0,
        value: best.1,
        iterations,
    })
}

/// Maximize a unimodal `f`; the returned `value` is the maximum.
pub fn maximize<F>(mut f: F, lo: f64, hi: f64, tol: f64, max_iter: usize) -> Result<Minimum>
where
    F: FnMut(f64) -> f64,
{
    let m = minimize(|x| -f(x), lo, hi, tol, max_iter)?;
    Ok(Minimum {
        value: -m.value,
        ..m
    })
}
