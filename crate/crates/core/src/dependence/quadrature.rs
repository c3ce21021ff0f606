use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::{Error, Result};

/// Absolute tolerance used for the tail integrals of pair measures.
pub const QUAD_TOL: f64 = 1e-9;

const MAX_INTERVALS: usize = 200_000;

struct Panel {
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    refined: f64,
    err: f64,
}

impl Panel {
    fn new<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> Self {
        let m = 0.5 * (a + b);
        let h = b - a;
        let flm = f(0.5 * (a + m));
        let frm = f(0.5 * (m + b));
        let whole = h / 6.0 * (fa + 4.0 * fm + fb);
        let left = h / 12.0 * (fa + 4.0 * flm + fm);
        let right = h / 12.0 * (fm + 4.0 * frm + fb);
        let refined = left + right;
        Panel {
            a,
            b,
            fa,
            fm,
            fb,
            whole,
            refined,
            err: (refined - whole).abs() / 15.0,
        }
    }

    fn value(&self) -> f64 {
        self.refined + (self.refined - self.whole) / 15.0
    }
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}

impl Eq for Panel {}

impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.total_cmp(&other.err)
    }
}

/// Globally adaptive Simpson rule: the panel with the largest error estimate
/// is bisected until the summed estimate drops below `tol`. Copes with
/// integrands that are only piecewise smooth, such as step functions.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<f64> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::invalid(format!("integration limits must be finite, got [{a}, {b}]")));
    }
    if a == b {
        return Ok(0.0);
    }
    if a > b {
        return adaptive_simpson(f, b, a, tol).map(|v| -v);
    }
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let mut heap = BinaryHeap::new();
    let first = Panel::new(&f, a, b, fa, fm, fb);
    let mut total_err = first.err;
    heap.push(first);
    while !(total_err <= tol) {
        if !total_err.is_finite() {
            return Err(Error::numerical("quadrature produced a non-finite value"));
        }
        if heap.len() >= MAX_INTERVALS {
            return Err(Error::numerical(format!(
                "quadrature on [{a}, {b}] stalled at error estimate {total_err:e} after {} panels",
                heap.len()
            )));
        }
        let p = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (p.a + p.b);
        if !(mid > p.a && mid < p.b) {
            return Err(Error::numerical(format!(
                "quadrature panel near {mid} cannot be split further (error {total_err:e})"
            )));
        }
        total_err -= p.err;
        let left = Panel::new(&f, p.a, mid, p.fa, f(0.5 * (p.a + mid)), p.fm);
        let right = Panel::new(&f, mid, p.b, p.fm, f(0.5 * (mid + p.b)), p.fb);
        total_err += left.err + right.err;
        heap.push(left);
        heap.push(right);
    }
    // sum the smallest contributions first
    let mut values: Vec<f64> = heap.iter().map(Panel::value).collect();
    values.sort_by(|x, y| x.abs().total_cmp(&y.abs()));
    Ok(values.iter().sum())
}

/// `∫_a^∞ g(x) dx/x` for `g` bounded by `x^{-α}`, computed as
/// `(1/α) ∫_0^{a^{-α}} g(u^{-1/α}) du/u`. The piece below `1e-14·a^{-α}`
/// contributes at most that much and is dropped.
pub fn tail_integral<G: Fn(f64) -> f64>(g: G, a: f64, alpha: f64, tol: f64) -> Result<f64> {
    if !(a > 0.0 && a.is_finite()) {
        return Err(Error::domain(format!("lower limit must be positive, got {a}")));
    }
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::domain(format!("alpha must be positive, got {alpha}")));
    }
    let upper = a.powf(-alpha);
    let lower = upper * 1e-14;
    let inv = -1.0 / alpha;
    let v = adaptive_simpson(|u: f64| g(u.powf(inv)) / u, lower, upper, tol * alpha)?;
    Ok(v / alpha)
}
