//! Scalar root finding and one-dimensional optimization.

use crate::error::{Error, Result};

/// Brent's method on a sign-changing bracket `[a, b]`.
///
/// Stops when `|f| <= ftol` or the bracket is narrower than `xtol`.
pub fn brent<F>(mut f: F, a: f64, b: f64, xtol: f64, ftol: f64, max_iter: usize) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let (mut a, mut b) = (a, b);
    let mut fa = f(a)?;
    let mut fb = f(b)?;
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::Root(format!(
            "no sign change on [{a}, {b}]: f = {fa}, {fb}"
        )));
    }
    let (mut c, mut fc) = (a, fa);
    let mut d = b - a;
    let mut e = d;
    for _ in 0..max_iter {
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
        let tol1 = 2.0 * f64::EPSILON * b.abs() + 0.5 * xtol;
        let xm = 0.5 * (c - b);
        if xm.abs() <= tol1 || fb.abs() <= ftol {
            return Ok(b);
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                let qq = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * xm * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            }
            p = p.abs();
            let min1 = 3.0 * xm * q - (tol1 * q).abs();
            let min2 = (e * q).abs();
            if 2.0 * p < min1.min(min2) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol1 { d } else { tol1 * xm.signum() };
        fb = f(b)?;
    }
    Err(Error::Root(format!("brent: no convergence in {max_iter} iterations")))
}

/// Newton's method kept inside a sign-changing bracket, falling back to
/// bisection whenever the Newton step leaves it or stalls.
///
/// `f` returns `(value, derivative)`.
pub fn newton_bracketed<F>(
    mut f: F,
    a: f64,
    b: f64,
    ftol: f64,
    xtol: f64,
    max_iter: usize,
) -> Result<f64>
where
    F: FnMut(f64) -> Result<(f64, f64)>,
{
    let (mut lo, mut hi) = if a < b { (a, b) } else { (b, a) };
    let (flo, _) = f(lo)?;
    let (fhi, _) = f(hi)?;
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(Error::Root(format!(
            "no sign change on [{lo}, {hi}]: f = {flo}, {fhi}"
        )));
    }
    let s_lo = flo.signum();
    let mut dx_old = hi - lo;
    let mut dx = dx_old;
    let mut x = 0.5 * (lo + hi);
    let (mut fx, mut dfx) = f(x)?;
    for _ in 0..max_iter {
        if fx.abs() <= ftol {
            return Ok(x);
        }
        if fx.signum() == s_lo {
            lo = x;
        } else {
            hi = x;
        }
        let newton = x - fx / dfx;
        let outside = !(newton > lo && newton < hi);
        if outside || (2.0 * fx).abs() > (dx_old * dfx).abs() {
            dx_old = dx;
            dx = 0.5 * (hi - lo);
            x = lo + dx;
        } else {
            dx_old = dx;
            dx = fx / dfx;
            x = newton;
        }
        if dx.abs() <= xtol || hi - lo <= xtol {
            return Ok(x);
        }
        (fx, dfx) = f(x)?;
    }
    Err(Error::Root(format!(
        "bracketed newton: no convergence in {max_iter} iterations"
    )))
}

/// Golden-section search for a maximum of a unimodal function on `[a, b]`,
/// driven by a comparator: `better(x, y)` returns true when `x` is strictly
/// better than `y`.
///
/// Using a comparator instead of function values lets callers compare in a
/// cancellation-free form.
pub fn golden_section_by<C>(mut better: C, a: f64, b: f64, xtol: f64, max_iter: usize) -> f64
where
    C: FnMut(f64, f64) -> bool,
{
    let invphi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (a, b);
    let mut c = b - invphi * (b - a);
    let mut d = a + invphi * (b - a);
    for _ in 0..max_iter {
        if (b - a).abs() <= xtol * (a.abs() + b.abs()).max(f64::MIN_POSITIVE) {
            break;
        }
        if better(c, d) {
            b = d;
            d = c;
            c = b - invphi * (b - a);
        } else {
            a = c;
            c = d;
            d = a + invphi * (b - a);
        }
        if c >= d {
            break;
        }
    }
    0.5 * (a + b)
}

/// Golden-section maximization of `f` on `[a, b]`.
pub fn golden_max<F>(mut f: F, a: f64, b: f64, xtol: f64) -> f64
where
    F: FnMut(f64) -> f64,
{
    golden_section_by(|x, y| f(x) > f(y), a, b, xtol, 400)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn brent_finds_cubic_root() {
        let r = brent(|x| Ok(x * x * x - 2.0), 0.0, 2.0, 1e-15, 0.0, 100).unwrap();
        assert!((r - 2f64.cbrt()).abs() < 1e-14);
    }

    #[test]
    fn brent_rejects_missing_bracket() {
        assert!(brent(|x| Ok(x * x + 1.0), -1.0, 1.0, 1e-12, 0.0, 50).is_err());
    }

    #[test]
    fn newton_bracketed_handles_flat_start() {
        // derivative vanishes at the bracket midpoint
        let r = newton_bracketed(|x| Ok((x.powi(3) - 0.001, 3.0 * x * x)), -1.0, 1.0, 1e-15, 1e-15, 200)
            .unwrap();
        assert!((r - 0.1).abs() < 1e-12);
    }

    #[test]
    fn golden_max_of_parabola() {
        let x = golden_max(|x| -(x - 0.3) * (x - 0.3), 0.0, 1.0, 1e-12);
        assert!((x - 0.3).abs() < 1e-6);
    }

    #[test]
    fn golden_by_comparator_is_exact_on_differences() {
        // f(x) = -x + c ln x has its maximum at x = c; compare differences
        let c = 1e-3;
        let better = |a: f64, b: f64| -(a - b) + c * ((a - b) / b).ln_1p() > 0.0;
        let x = golden_section_by(better, 1e-5, 1e-1, 1e-15, 500);
        assert!(((x - c) / c).abs() < 1e-12, "{x}");
    }
}
