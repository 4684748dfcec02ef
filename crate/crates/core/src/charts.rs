//! Blow-up charts of the degenerate line `ũ = ε = 0`.
//!
//! Chart K1 is the phase-directional chart `(u, w, ξ, ε) = (r₁, w₁, ξ₁, r₁ε₁)`
//! and K2 the rescaling chart `(u, w, ξ, ε) = (r₂u₂, w₂, ξ₂, r₂)`; both vector
//! fields are shown after dividing out the common factor `r³`. The chart κ1
//! blows up `(ũ, λ) = (0, 0)` for the small-λ regime with `λ = r₁λ₁`.

use crate::error::{domain, Error, Result};
use crate::integrate::{integrate, Direction, EventSpec, Options, Status};

const SQRT3: f64 = 1.732_050_807_568_877_2;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct K1State {
    pub r1: f64,
    pub w1: f64,
    pub xi1: f64,
    pub eps1: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct K2State {
    pub u2: f64,
    pub w2: f64,
    pub xi2: f64,
    pub r2: f64,
}

/// State of the κ1 chart.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Kappa1State {
    pub r1: f64,
    pub w: f64,
    pub xi: f64,
    pub lambda1: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum Section {
    Sigma1In,
    Sigma1Out,
    Sigma2In,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct SectionSpec {
    pub which: Section,
    pub rho: f64,
    pub sigma: f64,
    pub w_range: (f64, f64),
    pub xi_range: (f64, f64),
}

impl SectionSpec {
    /// Section with the default `w` and `ξ` windows, which contain both
    /// manifold limits `∓2/√3` and the half interval `[−1, 0]`.
    pub fn new(which: Section, rho: f64, sigma: f64) -> Result<Self> {
        if !(rho > 0.0 && rho < 1.0 && sigma > 0.0 && sigma < 1.0) {
            return domain(format!("sections need 0 < rho, sigma < 1, got ({rho}, {sigma})"));
        }
        Ok(Self {
            which,
            rho,
            sigma,
            w_range: (-1.5, 1.5),
            xi_range: (-2.0, 2.0),
        })
    }

    fn in_windows(&self, w: f64, xi: f64) -> bool {
        (self.w_range.0..=self.w_range.1).contains(&w) && (self.xi_range.0..=self.xi_range.1).contains(&xi)
    }

    /// Membership of a K1 point (tolerance `tol` on the defining equation).
    pub fn contains_k1(&self, s: &K1State, tol: f64) -> bool {
        self.in_windows(s.w1, s.xi1)
            && match self.which {
                Section::Sigma1In => (s.r1 - self.rho).abs() <= tol && (0.0..=self.sigma).contains(&s.eps1),
                Section::Sigma1Out => (s.eps1 - self.sigma).abs() <= tol && (0.0..=self.rho).contains(&s.r1),
                Section::Sigma2In => false,
            }
    }

    pub fn contains_k2(&self, s: &K2State, tol: f64) -> bool {
        self.which == Section::Sigma2In
            && self.in_windows(s.w2, s.xi2)
            && (s.u2 - 1.0 / self.sigma).abs() <= tol * (1.0 / self.sigma)
            && s.r2 >= 0.0
            && s.r2 <= self.rho * self.sigma * (1.0 + tol)
    }
}

/// K1 field `(r₁w₁, ε₁(1 − ε₁²), δr₁, −ε₁w₁)`.
pub fn rhs_k1(s: &K1State, delta: f64) -> K1State {
    K1State {
        r1: s.r1 * s.w1,
        w1: s.eps1 * (1.0 - s.eps1 * s.eps1),
        xi1: delta * s.r1,
        eps1: -s.eps1 * s.w1,
    }
}

/// K2 field `(u₂⁴w₂, u₂² − 1, δr₂u₂⁴, 0)`.
pub fn rhs_k2(s: &K2State, delta: f64) -> Result<K2State> {
    if !(s.u2 > 0.0) {
        return domain(format!("K2 field needs u2 > 0, got {}", s.u2));
    }
    let u4 = s.u2.powi(4);
    Ok(K2State {
        u2: u4 * s.w2,
        w2: s.u2 * s.u2 - 1.0,
        xi2: delta * s.r2 * u4,
        r2: 0.0,
    })
}

/// κ1 field `(r₁w, λ₁(1 − δ⁴λ₁²), r₁, −λ₁w)`.
pub fn rhs_kappa1(s: &Kappa1State, delta: f64) -> Kappa1State {
    let d4 = delta.powi(4);
    Kappa1State {
        r1: s.r1 * s.w,
        w: s.lambda1 * (1.0 - d4 * s.lambda1 * s.lambda1),
        xi: s.r1,
        lambda1: -s.lambda1 * s.w,
    }
}

pub fn kappa12(s: &K1State) -> Result<K2State> {
    if !(s.eps1 > 0.0) {
        return domain(format!("kappa12 needs eps1 > 0, got {}", s.eps1));
    }
    Ok(K2State {
        u2: 1.0 / s.eps1,
        w2: s.w1,
        xi2: s.xi1,
        r2: s.r1 * s.eps1,
    })
}

pub fn kappa21(s: &K2State) -> Result<K1State> {
    if !(s.u2 > 0.0) {
        return domain(format!("kappa21 needs u2 > 0, got {}", s.u2));
    }
    Ok(K1State {
        r1: s.r2 * s.u2,
        w1: s.w2,
        xi1: s.xi2,
        eps1: 1.0 / s.u2,
    })
}

/// Branch of an invariant manifold graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    /// `w < 0`, the stable manifold of the saddle `(1, 0)`.
    Stable,
    /// `w > 0`.
    Unstable,
}

impl Branch {
    fn sign(self) -> f64 {
        match self {
            Branch::Stable => -1.0,
            Branch::Unstable => 1.0,
        }
    }
}

/// `w₂ = ∓√(4/3 − 2/u₂ + 2/(3u₂³))`.
pub fn w2_manifold(u2: f64, branch: Branch) -> Result<f64> {
    if !(u2 >= 1.0) {
        return domain(format!("manifold graph needs u2 >= 1, got {u2}"));
    }
    let e = 1.0 / u2;
    Ok(branch.sign() * radicand(e).max(0.0).sqrt())
}

/// `w₁ = ∓√(4/3 − 2ε₁ + 2ε₁³/3)`.
pub fn w1_manifold(eps1: f64, branch: Branch) -> Result<f64> {
    if !(0.0..=1.0).contains(&eps1) {
        return domain(format!("manifold graph needs 0 <= eps1 <= 1, got {eps1}"));
    }
    Ok(branch.sign() * radicand(eps1).max(0.0).sqrt())
}

fn radicand(e: f64) -> f64 {
    4.0 / 3.0 - 2.0 * e + 2.0 / 3.0 * e * e * e
}

/// First integral of the `(u₂, w₂)` subsystem.
pub fn hamiltonian_k2(u2: f64, w2: f64) -> Result<f64> {
    if !(u2 > 0.0) {
        return domain(format!("hamiltonian needs u2 > 0, got {u2}"));
    }
    Ok(0.5 * w2 * w2 + 1.0 / u2 - 1.0 / (3.0 * u2 * u2 * u2))
}

/// Central-difference Jacobian of the `(u₂, w₂)` block. The field is
/// polynomial of degree ≤ 2 in each direction at the saddle, so the
/// differences carry rounding error only.
pub fn k2_jacobian(u2: f64, w2: f64, h: f64) -> Result<[[f64; 2]; 2]> {
    let f = |u: f64, w: f64| -> Result<[f64; 2]> {
        let d = rhs_k2(&K2State { u2: u, w2: w, xi2: 0.0, r2: 0.0 }, 0.0)?;
        Ok([d.u2, d.w2])
    };
    let (up, um) = (f(u2 + h, w2)?, f(u2 - h, w2)?);
    let (wp, wm) = (f(u2, w2 + h)?, f(u2, w2 - h)?);
    Ok([
        [(up[0] - um[0]) / (2.0 * h), (wp[0] - wm[0]) / (2.0 * h)],
        [(up[1] - um[1]) / (2.0 * h), (wp[1] - wm[1]) / (2.0 * h)],
    ])
}

/// Eigenvalues of a real 2×2 matrix with real spectrum, ascending.
pub fn eig2(m: &[[f64; 2]; 2]) -> Result<(f64, f64)> {
    let tr = m[0][0] + m[1][1];
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let disc = 0.25 * tr * tr - det;
    if disc < 0.0 {
        return domain("complex eigenvalues");
    }
    let s = disc.sqrt();
    Ok((0.5 * tr - s, 0.5 * tr + s))
}

/// Exit data of the K1 passage from `(r₁, w₁, ξ₁, ε₁) = (1, w, −1, ε)` to
/// `Σ₁ᵒᵘᵗ = {ε₁ = σ}`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct K1Transition {
    pub r1_out: f64,
    pub w1_out: f64,
    pub xi1_out: f64,
    /// `w₁(σ)` from the explicit solution, for comparison with `w1_out`.
    pub w1_closed_form: f64,
}

/// `w₁(ε₁)` on the orbit through `(w, ε)`.
pub fn w1_along(w: f64, eps: f64, eps1: f64) -> Result<f64> {
    let q = w * w + 2.0 * (eps - eps1) - 2.0 / 3.0 * (eps.powi(3) - eps1.powi(3));
    if !(q > 0.0) {
        return domain(format!("orbit from w = {w} turns before eps1 = {eps1}"));
    }
    Ok(-q.sqrt())
}

/// K1 passage with `ε₁` as the independent variable, integrated in
/// `s = ln ε₁` so the `1/ε₁` growth near entry is resolved uniformly.
pub fn transition_k1(w_init: f64, eps: f64, delta: f64, sigma: f64) -> Result<K1Transition> {
    transition_k1_with(w_init, eps, delta, sigma, &Options::with_tol(1e-13, 1e-13))
}

pub fn transition_k1_with(
    w_init: f64,
    eps: f64,
    delta: f64,
    sigma: f64,
    opts: &Options,
) -> Result<K1Transition> {
    if !(w_init < 0.0) {
        return domain(format!("transition needs w_init < 0, got {w_init}"));
    }
    if !(eps > 0.0 && eps < sigma && sigma < 1.0) {
        return domain(format!("transition needs 0 < eps < sigma < 1, got ({eps}, {sigma})"));
    }
    let closed = w1_along(w_init, eps, sigma)?;
    let rhs = |s: f64, y: &[f64], dy: &mut [f64]| {
        let e1 = s.exp();
        dy[0] = -y[0];
        dy[1] = -e1 * (1.0 - e1 * e1) / y[1];
        dy[2] = -delta * y[0] / y[1];
    };
    let traj = integrate(rhs, &[1.0, w_init, -1.0], (eps.ln(), sigma.ln()), opts, &[])?;
    let y = traj.last();
    Ok(K1Transition {
        r1_out: y[0],
        w1_out: y[1],
        xi1_out: y[2],
        w1_closed_form: closed,
    })
}

/// Entry point in `Σ₂ⁱⁿ` of the orbit leaving `ũ = 1` with slope `w`:
/// `(u₂, w₂) = (1/σ, w₁(σ))`.
pub fn sigma2_entry(w: f64, eps: f64, sigma: f64) -> Result<(f64, f64)> {
    Ok((1.0 / sigma, w1_along(w, eps, sigma)?))
}

/// Outcome of a K2 passage started at `(u₂, w₂)` with `w₂ < 0`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct K2Passage {
    /// `u₂` where `w₂` reaches 0, if it does.
    pub u2_turn: Option<f64>,
    /// `∫ u₂⁴ dt` up to the turn (the ξ₂ increment per unit `δr₂`).
    pub xi2_per_delta_r2: f64,
    /// `max |H − H₀| / |H₀|` over the accepted steps.
    pub h_drift: f64,
    /// `min |u₂ − 1|` before the turn.
    pub closest_to_saddle: f64,
}

/// Orbits past the saddle fall into `u₂ → 0` in finite time, where `H` is a
/// difference of terms of size `u₂⁻³`; they are stopped well before that.
pub const U2_FLOOR: f64 = 0.5;

/// Integrate the `(u₂, w₂)` subsystem together with `∫u₂⁴` until `w₂ = 0`,
/// `u₂` drops below [`U2_FLOOR`], or time `t_max` passes.
pub fn k2_passage(u2: f64, w2: f64, t_max: f64, opts: &Options) -> Result<K2Passage> {
    let h0 = hamiltonian_k2(u2, w2)?;
    let rhs = |_: f64, y: &[f64], dy: &mut [f64]| {
        let u4 = y[0].powi(4);
        dy[0] = u4 * y[1];
        dy[1] = y[0] * y[0] - 1.0;
        dy[2] = u4;
    };
    let events = [
        EventSpec::new("turn", Direction::Up, true, |_, y: &[f64]| y[1]),
        EventSpec::new("collapse", Direction::Down, true, |_, y: &[f64]| y[0] - U2_FLOOR),
    ];
    let traj = integrate(rhs, &[u2, w2, 0.0], (0.0, t_max), opts, &events)?;
    let mut drift: f64 = 0.0;
    let mut closest = f64::INFINITY;
    for y in &traj.y {
        let h = hamiltonian_k2(y[0], y[1])?;
        drift = drift.max(((h - h0) / h0).abs());
        closest = closest.min((y[0] - 1.0).abs());
    }
    let turned = matches!(traj.status, Status::Terminated("turn"));
    Ok(K2Passage {
        u2_turn: turned.then(|| traj.last()[0]),
        xi2_per_delta_r2: traj.last()[2],
        h_drift: drift,
        closest_to_saddle: closest,
    })
}

/// Turning point `u₂ᵒᵘᵗ` for the orbit leaving `ũ = 1` with slope
/// `−2/√3 + Δw`, carried through K1 by the explicit solution.
pub fn u2_out(dw: f64, eps: f64, sigma: f64, opts: &Options) -> Result<f64> {
    let (u, w) = sigma2_entry(-2.0 / SQRT3 + dw, eps, sigma)?;
    k2_passage(u, w, 1e6, opts)?
        .u2_turn
        .ok_or_else(|| Error::Domain(format!("orbit with dw = {dw} passes the saddle")))
}

/// `1 + (13√3/9)Δw − (13/6)ε`, the linear turning-point expansion.
pub fn u2_out_linear_expansion(dw: f64, eps: f64) -> f64 {
    1.0 + 13.0 * SQRT3 / 9.0 * dw - 13.0 / 6.0 * eps
}

/// Leading term of the turning point from the first integral: near the
/// saddle `H ≈ 2/3 − (u₂ − 1)²`, so `u₂ᵒᵘᵗ − 1 ≈ √((2/√3)Δw − ε)`.
pub fn u2_out_root_law(dw: f64, eps: f64) -> Result<f64> {
    let k = 2.0 / SQRT3 * dw - eps;
    if !(k > 0.0) {
        return domain("orbit does not turn");
    }
    Ok(1.0 + k.sqrt())
}

/// Least-squares slope of `∫u₂⁴ dt` (entry to turn) against `ln Δw`.
pub fn passage_time_slope(dws: &[f64], sigma: f64, opts: &Options) -> Result<f64> {
    let mut pts = Vec::with_capacity(dws.len());
    for &dw in dws {
        let (u, w) = sigma2_entry(-2.0 / SQRT3 + dw, 0.0, sigma)?;
        let p = k2_passage(u, w, 1e6, opts)?;
        if p.u2_turn.is_none() {
            return domain(format!("orbit with dw = {dw} did not turn"));
        }
        pts.push((dw.ln(), p.xi2_per_delta_r2));
    }
    Ok(regression_slope(&pts))
}

fn regression_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// Solution of `w₀ + 1 − (4 + 3w₀)λ ln λ + (1/288)(1 + w₀)δ⁸ ln λ = 0`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct W0Relation {
    pub w0: f64,
    /// `−1 + λ ln λ`.
    pub leading: f64,
}

pub fn solve_w0a(lambda: f64, delta: f64) -> Result<W0Relation> {
    if !(0.0..1.0).contains(&lambda) {
        return domain(format!("slope relation needs 0 <= lambda < 1, got {lambda}"));
    }
    if !(delta >= 0.0 && delta.is_finite()) {
        return domain(format!("slope relation needs delta >= 0, got {delta}"));
    }
    if lambda == 0.0 {
        return Ok(W0Relation { w0: -1.0, leading: -1.0 });
    }
    let ll = lambda * lambda.ln();
    let d = delta.powi(8) * lambda.ln() / 288.0;
    let g = |w: f64| w + 1.0 - (4.0 + 3.0 * w) * ll + (1.0 + w) * d;
    let dg = 1.0 - 3.0 * ll + d;
    if dg.abs() < 1e-12 {
        return Err(Error::Root("slope relation is degenerate".into()));
    }
    let leading = -1.0 + ll;
    let mut w = leading;
    for _ in 0..8 {
        let step = g(w) / dg;
        w -= step;
        if step.abs() <= 1e-16 * w.abs() {
            break;
        }
    }
    if !w.is_finite() || g(w).abs() > 1e-12 {
        return Err(Error::Root(format!("slope relation diverged at lambda = {lambda}")));
    }
    Ok(W0Relation { w0: w, leading })
}

/// One line of the invariant report.
#[derive(Debug, Clone, serde::Serialize)]
pub struct Check {
    pub name: &'static str,
    /// `invariant` checks decide the verdict; `expansion` lines compare
    /// against truncated expansions and are informational.
    pub kind: &'static str,
    pub measured: f64,
    pub expected: f64,
    pub threshold: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct ChartsReport {
    pub rho: f64,
    pub sigma: f64,
    pub checks: Vec<Check>,
    pub all_invariants_pass: bool,
}

fn check(name: &'static str, kind: &'static str, measured: f64, expected: f64, threshold: f64) -> Check {
    let pass = (measured - expected).abs() <= threshold;
    Check {
        name,
        kind,
        measured,
        expected,
        threshold,
        pass,
    }
}

fn max_product_drift<F, G>(rhs: F, y0: &[f64], t1: f64, product: G) -> Result<f64>
where
    F: Fn(f64, &[f64], &mut [f64]),
    G: Fn(&[f64]) -> f64,
{
    let traj = integrate(rhs, y0, (0.0, t1), &Options::with_tol(1e-14, 1e-14), &[])?;
    let p0 = product(y0);
    Ok(traj
        .y
        .iter()
        .map(|y| ((product(y) - p0) / p0).abs())
        .fold(0.0, f64::max))
}

/// Run the chart invariant suite.
pub fn invariant_suite(rho: f64, sigma: f64) -> Result<ChartsReport> {
    let s_out = SectionSpec::new(Section::Sigma1Out, rho, sigma)?;
    let s_in2 = SectionSpec::new(Section::Sigma2In, rho, sigma)?;
    let tight = Options::with_tol(1e-10, 1e-10);
    let mut checks = Vec::new();

    // blow-down relations
    let k1 = |_: f64, y: &[f64], dy: &mut [f64]| {
        let d = rhs_k1(&K1State { r1: y[0], w1: y[1], xi1: y[2], eps1: y[3] }, 1.0);
        dy.copy_from_slice(&[d.r1, d.w1, d.xi1, d.eps1]);
    };
    let drift = max_product_drift(k1, &[0.8, -1.1, -1.0, 0.05], 2.0, |y| y[0] * y[3])?;
    checks.push(check("k1_r1_eps1_conservation", "invariant", drift, 0.0, 1e-12));
    let kap = |_: f64, y: &[f64], dy: &mut [f64]| {
        let d = rhs_kappa1(&Kappa1State { r1: y[0], w: y[1], xi: y[2], lambda1: y[3] }, 0.5);
        dy.copy_from_slice(&[d.r1, d.w, d.xi, d.lambda1]);
    };
    let drift = max_product_drift(kap, &[1.0, -1.0, -1.0, 0.01], 2.0, |y| y[0] * y[3])?;
    checks.push(check("kappa1_r1_lambda1_conservation", "invariant", drift, 0.0, 1e-12));

    // first integral over the transit from u2 = 20 to the turning point
    let w = w2_manifold(20.0, Branch::Stable)? + 1e-3;
    let p = k2_passage(20.0, w, 1e6, &tight)?;
    checks.push(check("k2_hamiltonian_drift", "invariant", p.h_drift, 0.0, 1e-8));

    // manifold graphs agree under eps1 = 1/u2
    let worst = (1..=200)
        .map(|i| {
            let u = 1.0 + 0.05 * i as f64;
            (w2_manifold(u, Branch::Stable).unwrap() - w1_manifold(1.0 / u, Branch::Stable).unwrap()).abs()
        })
        .fold(0.0, f64::max);
    checks.push(check("manifold_graphs_agree", "invariant", worst, 0.0, 1e-15));

    let (lo, hi) = eig2(&k2_jacobian(1.0, 0.0, 1e-5)?)?;
    checks.push(check("saddle_eigenvalue_negative", "invariant", lo, -2f64.sqrt(), 1e-10));
    checks.push(check("saddle_eigenvalue_positive", "invariant", hi, 2f64.sqrt(), 1e-10));

    // chart change round trip and section image
    let a = K1State { r1: 0.3, w1: -1.1, xi1: -0.4, eps1: sigma };
    let b = kappa21(&kappa12(&a)?)?;
    let rt = [a.r1 - b.r1, a.w1 - b.w1, a.xi1 - b.xi1, a.eps1 - b.eps1]
        .iter()
        .map(|d| d.abs())
        .fold(0.0, f64::max);
    checks.push(check("kappa_round_trip", "invariant", rt, 0.0, 1e-15));
    let img = s_out.contains_k1(&a, 1e-15) && s_in2.contains_k2(&kappa12(&a)?, 1e-15);
    checks.push(check("sigma1out_maps_into_sigma2in", "invariant", f64::from(u8::from(img)), 1.0, 0.0));

    // stable manifold leads into the saddle
    let w = w2_manifold(10.0, Branch::Stable)?;
    let p = k2_passage(10.0, w, 200.0, &tight)?;
    checks.push(check("stable_manifold_reaches_saddle", "invariant", p.closest_to_saddle, 0.0, 1e-4));

    // exact K1 solution against the numerical passage
    let t = transition_k1(-2.0 / SQRT3, 1e-3, 1.0, sigma)?;
    checks.push(check(
        "k1_transition_closed_form",
        "invariant",
        t.w1_out,
        t.w1_closed_form,
        1e-10,
    ));

    // truncated expansions of the K2 passage
    for dw in [1e-3, 1e-4] {
        let u = u2_out(dw, 0.0, sigma, &tight)?;
        let lin = u2_out_linear_expansion(dw, 0.0);
        checks.push(check(
            if dw == 1e-3 { "u2out_linear_ratio_dw1e-3" } else { "u2out_linear_ratio_dw1e-4" },
            "expansion",
            (u - 1.0) / (lin - 1.0),
            1.0,
            0.1,
        ));
    }
    let slope = passage_time_slope(&[1e-3, 1e-4, 1e-5, 1e-6], sigma, &tight)?;
    checks.push(check(
        "passage_time_log_slope",
        "expansion",
        slope,
        -2f64.sqrt() / 2.0,
        0.05 * 2f64.sqrt() / 2.0,
    ));

    let all = checks.iter().filter(|c| c.kind == "invariant").all(|c| c.pass);
    Ok(ChartsReport {
        rho,
        sigma,
        checks,
        all_invariants_pass: all,
    })
}
