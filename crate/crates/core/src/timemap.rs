//! Quadrature form of the boundary value problem for ε > 0.
//!
//! The first integral of `ũ'' = λũ⁻²(1 − ε²ũ⁻²)` gives, with `v = ũ − ε`,
//!
//! ```text
//! w² = 2λ (v² h(v) − η² h(η)),   h(v) = (3ε + 2v) / (3ε (ε + v)³)
//! ```
//!
//! where `η = ũ_min − ε`. The substitution `v = η cosh τ` removes the
//! turning-point singularity and turns the half-length condition into
//! `√λ = J(η) = ∫ dτ / √(2 (h(v) + η h[v, η] / (cosh τ + 1)))`, so every
//! `η` yields exactly one `λ`. This is independent of the shooting code and
//! serves as its oracle.

use crate::error::{domain, Error, Result};
use crate::roots;

/// Adaptive splitting on top of double-exponential quadrature: a panel is
/// bisected until its error estimate meets its width-proportional share of
/// `tol`, or is at rounding level relative to the panel's value.
pub fn integrate_adaptive<F>(f: &F, a: f64, b: f64, tol: f64, depth: u32) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    if b <= a {
        return Ok(0.0);
    }
    adaptive_panel(f, a, b, tol / (b - a), depth)
}

fn adaptive_panel<F>(f: &F, a: f64, b: f64, density: f64, depth: u32) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    let share = density * (b - a);
    let o = quadrature::integrate(f, a, b, share);
    let floor = 64.0 * f64::EPSILON * o.integral.abs();
    if o.integral.is_finite() && (o.error_estimate <= share || o.error_estimate <= floor) {
        return Ok(o.integral);
    }
    if depth == 0 {
        return Err(Error::Quadrature(format!(
            "panel [{a}, {b}] stuck at error {:e}",
            o.error_estimate
        )));
    }
    let m = 0.5 * (a + b);
    Ok(adaptive_panel(f, a, m, density, depth - 1)? + adaptive_panel(f, m, b, density, depth - 1)?)
}

/// One point of the solution curve, labelled by `θ = ln(ũ_min − ε)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeMapPoint {
    pub eps: f64,
    pub theta: f64,
    /// `ũ_min = ε + e^θ`.
    pub u_min: f64,
    pub lambda: f64,
    pub norm2: f64,
}

fn ln_cosh(t: f64) -> f64 {
    t + (-2.0 * t).exp().ln_1p() - std::f64::consts::LN_2
}

/// `acosh(e^l)` for `l ≥ 0` without overflow.
fn acosh_exp(l: f64) -> f64 {
    if l <= 0.0 {
        0.0
    } else {
        l + (-(-2.0 * l).exp_m1()).sqrt().ln_1p()
    }
}

/// `λ` and `‖u‖²` of the solution with `ũ_min = ε + e^θ`.
pub fn time_map(eps: f64, theta: f64) -> Result<TimeMapPoint> {
    if !(eps > 0.0 && eps < 0.5) {
        return domain(format!("time map needs 0 < eps < 0.5, got {eps}"));
    }
    let vmax = 1.0 - eps;
    if !(theta < vmax.ln()) {
        return domain(format!("theta = {theta} puts the minimum above the boundary"));
    }
    let eta = theta.exp();
    let tmax = acosh_exp(vmax.ln() - theta);
    let c3 = 1.0 / (3.0 * eps);

    let parts = |t: f64| -> (f64, f64) {
        let v = (theta + ln_cosh(t)).exp();
        let a = eps + v;
        let b = eps + eta;
        let h = c3 * (3.0 * eps + 2.0 * v) / (a * a * a);
        let d2 = -(2.0 * eps + v + eta) / (a * a * b * b);
        let d3 = -(a * a + a * b + b * b) / (a * a * a * b * b * b);
        let hd = c3 * (2.0 * d2 + eps * d3);
        // η / (cosh τ + 1), in logs
        let c1 = (theta - (ln_cosh(t) + (-ln_cosh(t)).exp().ln_1p())).exp();
        let g = 1.0 / (2.0 * (h + c1 * hd)).sqrt();
        (g, v)
    };
    let g = |t: f64| parts(t).0;
    let gn = |t: f64| {
        let (g, v) = parts(t);
        let u = eps + v - 1.0;
        g * u * u
    };

    let split = (tmax - 60.0).max(0.0);
    // g is bounded by √(ε³/2) on the plateau and by O(1) near the boundary
    let tol = 1e-15;
    let j = integrate_adaptive(&g, 0.0, split, tol * split * eps.powf(1.5), 40)?
        + integrate_adaptive(&g, split, tmax, tol, 40)?;
    let n = integrate_adaptive(&gn, 0.0, split, tol * split * eps.powf(1.5), 40)?
        + integrate_adaptive(&gn, split, tmax, tol, 40)?;
    Ok(TimeMapPoint {
        eps,
        theta,
        u_min: eps + eta,
        lambda: j * j,
        norm2: 2.0 * n / j,
    })
}

/// Lower fold λ∗(ε): the local minimum of `λ(θ)` below the S-curve knee.
pub fn lower_fold(eps: f64) -> Result<TimeMapPoint> {
    let lo = eps.ln() - 12.0;
    let hi = (0.3f64).ln();
    extremum(eps, lo, hi, false)
}

/// Upper fold λ*(ε): the local maximum of `λ(θ)`.
pub fn upper_fold(eps: f64) -> Result<TimeMapPoint> {
    let lo = (0.3 - eps).ln();
    let hi = (0.9 - eps).ln();
    extremum(eps, lo, hi, true)
}

fn extremum(eps: f64, lo: f64, hi: f64, maximize: bool) -> Result<TimeMapPoint> {
    let sign = if maximize { 1.0 } else { -1.0 };
    let mut failure = None;
    let theta = roots::golden_max(
        |t| match time_map(eps, t) {
            Ok(p) => sign * p.lambda,
            Err(e) => {
                failure = Some(e);
                f64::NEG_INFINITY
            }
        },
        lo,
        hi,
        1e-10,
    );
    if let Some(e) = failure {
        return Err(e);
    }
    time_map(eps, theta)
}

/// `θ` with `λ(θ) = lambda` inside `[lo, hi]`.
pub fn theta_for_lambda(eps: f64, lambda: f64, lo: f64, hi: f64) -> Result<TimeMapPoint> {
    let t = roots::brent(
        |t| Ok(time_map(eps, t)?.lambda - lambda),
        lo,
        hi,
        1e-13,
        1e-15,
        200,
    )?;
    time_map(eps, t)
}
