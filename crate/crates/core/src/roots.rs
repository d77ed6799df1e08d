//! Bracketed scalar root finding.

use crate::error::{DprhError, Result};

/// Brent's method on a bracket `[a, b]` with `f(a)` and `f(b)` of opposite sign.
/// Stops when the bracket is narrower than `xtol` or `|f| <= ftol`.
pub fn brent<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, xtol: f64, ftol: f64) -> Result<f64> {
    let (mut a, mut b) = (a, b);
    let (mut fa, mut fb) = (f(a), f(b));
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() || !fa.is_finite() || !fb.is_finite() {
        return Err(DprhError::Numerical(format!(
            "root not bracketed on [{a}, {b}] (f = {fa}, {fb})"
        )));
    }
    let (mut c, mut fc) = (a, fa);
    let mut d = b - a;
    let mut e = d;
    for _ in 0..500 {
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
        let tol = 2.0 * f64::EPSILON * b.abs() + 0.5 * xtol;
        let m = 0.5 * (c - b);
        if m.abs() <= tol || fb.abs() <= ftol {
            return Ok(b);
        }
        if e.abs() >= tol && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                let qq = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * m * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
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
        b += if d.abs() > tol { d } else { tol * m.signum() };
        fb = f(b);
    }
    Err(DprhError::Convergence("brent: iteration limit".into()))
}

/// Plain bisection; slower than [`brent`] but never leaves the bracket.
pub fn bisect<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, xtol: f64) -> Result<f64> {
    let fa = f(a);
    let fb = f(b);
    if fa.signum() == fb.signum() {
        return Err(DprhError::Numerical(format!("root not bracketed on [{a}, {b}]")));
    }
    let increasing = fb > fa;
    for _ in 0..2000 {
        let m = 0.5 * (a + b);
        if (b - a).abs() <= xtol || m == a || m == b {
            return Ok(m);
        }
        let fm = f(m);
        if fm == 0.0 {
            return Ok(m);
        }
        if (fm > 0.0) == increasing {
            b = m;
        } else {
            a = m;
        }
    }
    Ok(0.5 * (a + b))
}

/// Find `[lo, hi]` bracketing a sign change of an increasing function on
/// `(floor, ceiling)`, starting from `start` and expanding geometrically.
pub fn bracket_increasing<F: Fn(f64) -> f64>(
    f: &F,
    start: f64,
    floor: f64,
    ceiling: f64,
) -> Result<(f64, f64)> {
    let mut x = start;
    let fx = f(x);
    if fx == 0.0 {
        return Ok((x, x));
    }
    if fx < 0.0 {
        // move right
        let mut step = (x.abs()).max(1.0);
        for _ in 0..200 {
            let next = (x + step).min(ceiling);
            if f(next) >= 0.0 {
                return Ok((x, next));
            }
            if next >= ceiling {
                break;
            }
            x = next;
            step *= 2.0;
        }
    } else {
        let mut step = (x.abs()).max(1.0);
        for _ in 0..200 {
            let mut next = x - step;
            if next <= floor {
                next = 0.5 * (x + floor);
            }
            if f(next) <= 0.0 {
                return Ok((next, x));
            }
            if next == x {
                break;
            }
            x = next;
            step *= 2.0;
        }
    }
    Err(DprhError::Numerical(format!(
        "no bracket found between {floor} and {ceiling}"
    )))
}
