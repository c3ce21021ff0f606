//! Bracketed scalar root finding.

use crate::{Error, Result};

const MAX_ITER: usize = 200;

/// Brent's method on `[lo, hi]`. `f(lo)` and `f(hi)` must have opposite signs
/// (or one of them be zero). Stops when the bracket is narrower than
/// `xtol * max(1, |x|)`.
pub(crate) fn brent<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, xtol: f64) -> Result<f64> {
    let mut a = lo;
    let mut b = hi;
    let mut fa = clamp_inf(f(a));
    let mut fb = clamp_inf(f(b));
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.is_nan() || fb.is_nan() || fa.signum() == fb.signum() {
        return Err(Error::numerical(format!(
            "root not bracketed on [{lo}, {hi}] (f = {fa}, {fb})"
        )));
    }
    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;
    for _ in 0..MAX_ITER {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol = 2.0 * f64::EPSILON * b.abs() + 0.5 * xtol * b.abs().max(1.0);
        let m = 0.5 * (c - b);
        if m.abs() <= tol || fb == 0.0 {
            return Ok(b);
        }
        if e.abs() >= tol && fa.abs() > fb.abs() {
            // inverse quadratic interpolation, or secant when a == c
            let s = fb / fa;
            let (mut p, mut q) = if a == c {
                (2.0 * m * s, 1.0 - s)
            } else {
                let q0 = fa / fc;
                let r = fb / fc;
                (
                    s * (2.0 * m * q0 * (q0 - r) - (b - a) * (r - 1.0)),
                    (q0 - 1.0) * (r - 1.0) * (s - 1.0),
                )
            };
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * m * q - (tol * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        } else {
            d = m;
            e = m;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol { d } else { tol.copysign(m) };
        fb = clamp_inf(f(b));
        if fb.is_nan() {
            return Err(Error::numerical(format!("objective is NaN at {b}")));
        }
    }
    Err(Error::numerical(format!(
        "Brent iteration did not converge on [{lo}, {hi}]"
    )))
}

/// Expands `[x0 - step, x0 + step]` outwards geometrically until `f` changes
/// sign over it, for an increasing or decreasing `f` on the real line.
pub(crate) fn expand_bracket<F: FnMut(f64) -> f64>(mut f: F, x0: f64, step: f64) -> Result<(f64, f64)> {
    let mut lo = x0 - step;
    let mut hi = x0 + step;
    let mut flo = f(lo);
    let mut fhi = f(hi);
    let mut width = step;
    for _ in 0..80 {
        if flo.signum() != fhi.signum() || flo == 0.0 || fhi == 0.0 {
            return Ok((lo, hi));
        }
        width *= 2.0;
        // move the endpoint whose value is closer to zero
        if flo.abs() < fhi.abs() {
            hi = lo;
            fhi = flo;
            lo -= width;
            flo = f(lo);
        } else {
            lo = hi;
            flo = fhi;
            hi += width;
            fhi = f(hi);
        }
    }
    Err(Error::numerical(format!(
        "could not bracket a root starting from {x0}"
    )))
}

fn clamp_inf(v: f64) -> f64 {
    if v.is_infinite() {
        v.signum() * f64::MAX
    } else {
        v
    }
}
