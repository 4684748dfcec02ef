//! Shooting for the symmetric boundary value problem on the desingularized
//! system.
//!
//! Two shooting maps are provided:
//!
//! * [`shoot_half`] / [`residual`]: start at the boundary `ξ = −1` with
//!   `ũ = 1, w = w₀` and integrate until the slope vanishes; the residual is
//!   the `ξ` of that turning point.
//! * [`shoot_center`]: start at the symmetry point `ξ = 0` with `w = 0` and
//!   `ũ = ε + e^θ`, and integrate outwards until `ũ = 1`; the residual is
//!   `ξ_exit − 1`.
//!
//! Solutions with a long plateau at `ũ ≈ ε` linger near a saddle for many
//! e-folds, which makes the boundary map exponentially ill-conditioned in
//! `w₀` (the required precision of `w₀` is far below double precision).
//! Parametrizing by the log-offset `θ` of the minimum from the saddle level
//! turns that plateau into a length that is roughly linear in `θ`, so the
//! centre map is well-conditioned on every branch. The solvers here use the
//! centre map; the boundary map remains available and is used to cross-check
//! solutions where it is well-conditioned.

use rayon::prelude::*;

use crate::error::{domain, Error, Result};
use crate::integrate::{integrate, AbsTol, Direction, EventSpec, Options, Status, Trajectory};
use crate::model::{rhs_desingularized_slice, ModelParams};
use crate::profile::SolutionProfile;
use crate::roots;

/// Integration settings shared by both shooting maps.
#[derive(Debug, Clone)]
pub struct ShootingOptions {
    pub atol: f64,
    pub rtol: f64,
    pub event_tol: f64,
    /// Cap on the pseudo-time of the boundary map.
    pub max_pseudo_time: f64,
    /// Root-solve target for `|residual|`.
    pub residual_tol: f64,
}

impl Default for ShootingOptions {
    fn default() -> Self {
        Self {
            atol: 1e-12,
            rtol: 1e-12,
            event_tol: 1e-12,
            max_pseudo_time: 1e12,
            residual_tol: 1e-10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShotOutcome {
    /// The slope vanished.
    Turned,
    /// `ũ` collapsed toward the saddle level (or 0) or `ξ` ran past `+1`
    /// before the slope vanished.
    NoTurn,
}

/// Result of a boundary shot.
#[derive(Debug, Clone)]
pub struct ShotResult {
    pub w0: f64,
    pub outcome: ShotOutcome,
    pub xi_at_turn: Option<f64>,
    pub u_at_turn: Option<f64>,
    /// Trajectory of `[ũ, w, ξ]` in pseudo-time.
    pub half_profile: Trajectory,
}

/// Boundary shot with default options.
pub fn shoot_half(p: &ModelParams, w0: f64) -> Result<ShotResult> {
    shoot_half_with(p, w0, &ShootingOptions::default())
}

pub fn shoot_half_with(p: &ModelParams, w0: f64, opts: &ShootingOptions) -> Result<ShotResult> {
    if !(w0 < 0.0) {
        return domain(format!("initial slope must be negative, got {w0}"));
    }
    let eps = p.eps;
    let events = vec![
        EventSpec::new("turn", Direction::Up, true, |_t, y: &[f64]| y[1]),
        EventSpec::new("past_end", Direction::Up, true, |_t, y: &[f64]| y[2] - 1.0),
        EventSpec::new("collapse", Direction::Down, true, move |_t, y: &[f64]| {
            if eps > 0.0 {
                y[0] - eps
            } else {
                1.0
            }
        }),
    ];
    let iopts = Options {
        atol: AbsTol::Scalar(opts.atol),
        rtol: opts.rtol,
        event_tol: opts.event_tol,
        ..Options::default()
    };
    let traj = integrate(
        |_t, y, dy| rhs_desingularized_slice(p, y, dy),
        &[1.0, w0, -1.0],
        (0.0, opts.max_pseudo_time),
        &iopts,
        &events,
    )?;
    let (outcome, xi, u) = match traj.status {
        Status::Terminated("turn") => {
            let y = traj.last();
            (ShotOutcome::Turned, Some(y[2]), Some(y[0]))
        }
        _ => (ShotOutcome::NoTurn, None, None),
    };
    Ok(ShotResult {
        w0,
        outcome,
        xi_at_turn: xi,
        u_at_turn: u,
        half_profile: traj,
    })
}

/// `ξ` at the turning point, or `+1` when the shot does not turn.
pub fn residual(p: &ModelParams, w0: f64) -> Result<f64> {
    residual_with(p, w0, &ShootingOptions::default())
}

pub fn residual_with(p: &ModelParams, w0: f64, opts: &ShootingOptions) -> Result<f64> {
    let shot = shoot_half_with(p, w0, opts)?;
    Ok(shot.xi_at_turn.unwrap_or(1.0))
}

/// Solve `residual(w0) = 0` on a sign-changing bracket in `w0`.
pub fn refine_w0(p: &ModelParams, a: f64, b: f64, opts: &ShootingOptions) -> Result<f64> {
    roots::brent(|w| residual_with(p, w, opts), a, b, 1e-15, opts.residual_tol, 200)
}

/// Analytic start used when `e^θ` is far below the saddle level: there the
/// flow is linear, `v = η cosh(μx)` with `μ = √(2λ/ε³)`.
#[derive(Debug, Clone, Copy)]
pub struct HeadStart {
    pub eta_ln: f64,
    pub mu: f64,
    pub x_s: f64,
    pub v_s: f64,
    pub w_s: f64,
}

impl HeadStart {
    /// `v`, `w` on `[0, x_s]`.
    pub fn eval(&self, x: f64) -> (f64, f64) {
        let t = self.mu * x;
        let ln_cosh = t + (-2.0 * t).exp().ln_1p() - std::f64::consts::LN_2;
        let v = (self.eta_ln + ln_cosh).exp();
        let w = if t > 0.0 {
            let ln_sinh = t + (-(-2.0 * t).exp_m1()).ln() - std::f64::consts::LN_2;
            (self.eta_ln + self.mu.ln() + ln_sinh).exp()
        } else {
            0.0
        };
        (v, w)
    }
}

/// Relative offset of the analytic start below the saddle level.
const HEAD_START_LEVEL: f64 = 1e-12;
/// The analytic start is used only when the minimum is at least this many
/// e-folds below the start level, keeping away from its turning point.
const HEAD_START_GAP: f64 = 5.0;

/// Result of a centre shot.
#[derive(Debug, Clone)]
pub struct CenterShot {
    pub eps: f64,
    pub lambda: f64,
    pub theta: f64,
    /// `ξ_exit − 1`.
    pub f: f64,
    pub df_dtheta: f64,
    pub df_dlambda: f64,
    /// Slope at `x = +1`; the boundary slope at `x = −1` is its negative.
    pub w_exit: f64,
    pub xi_exit: f64,
    pub head: Option<HeadStart>,
    /// Trajectory of `[v, w, …]` against `x`, with `v = ũ − ε`, starting at
    /// `x = 0` (or at the end of the head start).
    pub trajectory: Trajectory,
}

impl CenterShot {
    pub fn w0(&self) -> f64 {
        -self.w_exit
    }
}

fn center_rhs(eps: f64, lambda: f64, sens: bool, y: &[f64], dy: &mut [f64]) {
    let v = y[0];
    let a = eps + v;
    let a2 = a * a;
    let inv4 = 1.0 / (a2 * a2);
    let g = v * (2.0 * eps + v) * inv4;
    dy[0] = y[1];
    dy[1] = lambda * g;
    if sens {
        // ∂/∂v of λ v(2ε+v)/(ε+v)⁴
        let gv = 2.0 * lambda * (eps * eps - 2.0 * eps * v - v * v) * inv4 / a;
        dy[2] = y[3];
        dy[3] = gv * y[2];
        dy[4] = y[5];
        dy[5] = gv * y[4] + g;
    }
}

/// Centre shot at `(λ, θ)`; with `sens` the derivatives of the residual are
/// computed from the variational equations (otherwise they are NaN).
///
/// The shot never approaches `ũ = 0` (it starts at the minimum), so it is
/// integrated with `x` itself as the independent variable: the desingularized
/// field divided by `ũ⁴`. Pseudo-time would accumulate astronomically large
/// values on the plateau and lose the resolution needed afterwards.
pub fn shoot_center(
    eps: f64,
    lambda: f64,
    theta: f64,
    sens: bool,
    opts: &ShootingOptions,
) -> Result<CenterShot> {
    if !(0.0..0.5).contains(&eps) {
        return domain(format!("eps must lie in [0, 0.5), got {eps}"));
    }
    if !(lambda > 0.0 && lambda.is_finite()) {
        return domain(format!("lambda must be positive, got {lambda}"));
    }
    let vmax = 1.0 - eps;
    if !(theta < vmax.ln()) {
        return domain(format!("theta = {theta} puts the minimum at or above the boundary"));
    }
    let v_s = HEAD_START_LEVEL * eps;
    let mut y0 = vec![0.0; if sens { 6 } else { 2 }];
    let mut x0 = 0.0;
    let head = if eps > 0.0 && theta < v_s.ln() - HEAD_START_GAP {
        let mu = (2.0 * lambda / (eps * eps * eps)).sqrt();
        let ln_vs = v_s.ln();
        let r = (theta - ln_vs).exp();
        let root = (1.0 - r * r).sqrt();
        let x_s = (ln_vs - theta + root.ln_1p()) / mu;
        // exact first integral: w² = 2λ(v²h(v) − η²h(η))
        let h = |v: f64| (3.0 * eps + 2.0 * v) / (3.0 * eps * (eps + v).powi(3));
        let eta = theta.exp();
        let w_s = (2.0 * lambda).sqrt() * v_s * (h(v_s) - r * r * h(eta)).max(0.0).sqrt();
        y0[0] = v_s;
        y0[1] = w_s;
        x0 = x_s;
        if sens {
            // the start point moves with the parameters: y_p = y0_p − f(y0) x_s_p
            let f2 = lambda * v_s * (2.0 * eps + v_s) / (eps + v_s).powi(4);
            let d_eta2h = eta * eta * (2.0 * eps + eta) / (eps + eta).powi(4);
            let dw_dth = -lambda * d_eta2h / w_s;
            let dx_dth = -1.0 / (mu * root);
            let dw_dla = w_s / (2.0 * lambda);
            let dx_dla = -x_s / (2.0 * lambda);
            y0[2] = -w_s * dx_dth;
            y0[3] = dw_dth - f2 * dx_dth;
            y0[4] = -w_s * dx_dla;
            y0[5] = dw_dla - f2 * dx_dla;
        }
        Some(HeadStart {
            eta_ln: theta,
            mu,
            x_s,
            v_s,
            w_s,
        })
    } else {
        let eta = theta.exp();
        y0[0] = eta;
        if sens {
            y0[2] = eta;
        }
        None
    };

    let scale = y0[0].min(1.0);
    let iopts = Options {
        atol: AbsTol::Scalar(opts.atol * scale),
        rtol: opts.rtol,
        event_tol: opts.event_tol * 1e-3,
        ..Options::default()
    };
    let exit = vec![EventSpec::new("exit", Direction::Up, true, move |_t, y: &[f64]| {
        y[0] - vmax
    })];
    let traj = integrate(
        |_t, y, dy| center_rhs(eps, lambda, sens, y, dy),
        &y0,
        (x0, x0 + 1e6),
        &iopts,
        &exit,
    )?;
    if traj.status != Status::Terminated("exit") {
        return Err(Error::Integration {
            t: traj.t_end(),
            state: traj.last().to_vec(),
            reason: "centre shot never reached the boundary".into(),
        });
    }
    let y = traj.last();
    let w = y[1];
    let xi = traj.t_end();
    let (dth, dla) = if sens {
        // moving endpoint: dx_exit/dp = −v_p / v'
        (-y[2] / w, -y[4] / w)
    } else {
        (f64::NAN, f64::NAN)
    };
    Ok(CenterShot {
        eps,
        lambda,
        theta,
        f: xi - 1.0,
        df_dtheta: dth,
        df_dlambda: dla,
        w_exit: w,
        xi_exit: xi,
        head,
        trajectory: traj,
    })
}

/// Largest admissible `θ` for a given `λ` (the minimum of ũ sits slightly
/// below the flat-membrane estimate `1 − λ/2`).
pub fn theta_max(eps: f64, lambda: f64) -> f64 {
    (1.0 - eps - (lambda / 16.0).min(0.25 * (1.0 - eps))).ln()
}

/// Smallest `θ` worth scanning: far enough below the saddle that the
/// plateau is longer than the interval.
pub fn theta_min(eps: f64, lambda: f64) -> f64 {
    if eps > 0.0 {
        let mu = (2.0 * lambda / (eps * eps * eps)).sqrt();
        -(mu + 40.0)
    } else {
        lambda.ln() - 10.0
    }
}

/// Solve `F(λ, θ) = 0` for `θ` on a sign-changing bracket.
pub fn solve_theta(
    eps: f64,
    lambda: f64,
    lo: f64,
    hi: f64,
    opts: &ShootingOptions,
) -> Result<f64> {
    roots::newton_bracketed(
        |t| {
            let s = shoot_center(eps, lambda, t, true, opts)?;
            Ok((s.f, s.df_dtheta))
        },
        lo,
        hi,
        opts.residual_tol,
        1e-14 * (1.0 + lo.abs().max(hi.abs())),
        200,
    )
}

/// Newton on `θ` from a nearby guess, without a bracket.
pub fn newton_theta(
    eps: f64,
    lambda: f64,
    theta0: f64,
    opts: &ShootingOptions,
) -> Result<f64> {
    let tmax = (1.0 - eps).ln();
    let mut t = theta0;
    for _ in 0..50 {
        let s = shoot_center(eps, lambda, t, true, opts)?;
        if s.f.abs() <= opts.residual_tol {
            return Ok(t);
        }
        let mut step = -s.f / s.df_dtheta;
        if !step.is_finite() {
            break;
        }
        while t + step >= tmax {
            step *= 0.5;
        }
        t += step;
    }
    Err(Error::Root(format!(
        "newton in theta did not converge at lambda = {lambda}"
    )))
}

/// Seeds for the root scan: dense near the fold region, coarse over the long
/// plateau tail, and clustered near the flat-membrane end.
fn seeds(eps: f64, lambda: f64, n: usize) -> Vec<f64> {
    let lo = theta_min(eps, lambda);
    let hi = theta_max(eps, lambda);
    let knee = if eps > 0.0 {
        (eps.ln() - 15.0).max(lo)
    } else {
        lo
    };
    let mut s = Vec::with_capacity(2 * n);
    if knee > lo {
        let m = n / 2;
        for i in 0..m {
            s.push(lo + (knee - lo) * i as f64 / m as f64);
        }
    }
    for i in 0..n {
        s.push(knee + (hi - knee) * i as f64 / (n - 1) as f64);
    }
    // log-spaced distance of ũ_min from 1, down to λ/8
    let dmin = (lambda / 8.0).min(0.1);
    let dmax = 0.5f64.min(1.0 - eps - 1e-3);
    if dmax > dmin {
        for i in 0..n {
            let d = dmin * (dmax / dmin).powf(i as f64 / (n - 1) as f64);
            let t = (1.0 - eps - d).ln();
            if t < hi && t > lo {
                s.push(t);
            }
        }
    }
    s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    s.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    s
}

/// A located solution: its `θ` and sampled profile.
#[derive(Debug, Clone)]
pub struct Solution {
    pub theta: f64,
    pub profile: SolutionProfile,
}

/// All solutions at fixed `(ε, λ)` found by scanning the centre residual
/// over `n_seeds` seeds in `θ`, refining each sign change, and sorting by
/// norm.
pub fn find_solutions(p: &ModelParams, n_seeds: usize) -> Result<Vec<SolutionProfile>> {
    Ok(find_solutions_with(p, n_seeds, &ShootingOptions::default())?
        .into_iter()
        .map(|s| s.profile)
        .collect())
}

pub fn find_solutions_with(
    p: &ModelParams,
    n_seeds: usize,
    opts: &ShootingOptions,
) -> Result<Vec<Solution>> {
    if n_seeds < 16 {
        return domain(format!("need at least 16 seeds, got {n_seeds}"));
    }
    if !(p.lambda > 0.0) {
        return domain("find_solutions needs lambda > 0");
    }
    let (eps, lambda) = (p.eps, p.lambda);
    let seeds = seeds(eps, lambda, n_seeds);
    let values: Vec<Result<f64>> = seeds
        .par_iter()
        .map(|&t| shoot_center(eps, lambda, t, false, opts).map(|s| s.f))
        .collect();
    let mut brackets = Vec::new();
    let mut prev: Option<(f64, f64)> = None;
    for (&t, v) in seeds.iter().zip(values) {
        let v = v?;
        if let Some((tp, vp)) = prev {
            if vp == 0.0 {
                brackets.push((tp, tp));
            } else if vp.signum() != v.signum() && v != 0.0 {
                brackets.push((tp, t));
            }
        }
        prev = Some((t, v));
    }
    let roots: Vec<Result<f64>> = brackets
        .par_iter()
        .map(|&(a, b)| {
            if a == b {
                Ok(a)
            } else {
                solve_theta(eps, lambda, a, b, opts)
            }
        })
        .collect();
    let mut thetas = Vec::new();
    for r in roots {
        let t = r?;
        if thetas
            .iter()
            .all(|&u: &f64| (u - t).abs() > 1e-8 * (1.0 + t.abs()))
        {
            thetas.push(t);
        }
    }
    let mut out: Vec<Solution> = thetas
        .par_iter()
        .map(|&t| {
            Ok(Solution {
                theta: t,
                profile: build_profile(eps, lambda, t, opts)?,
            })
        })
        .collect::<Result<_>>()?;
    out.sort_by(|a, b| a.profile.norm2.partial_cmp(&b.profile.norm2).unwrap());
    Ok(out)
}

/// Maximum spacing in `x` between profile samples.
const MAX_DX: f64 = 2e-3;

/// Sample the solution with minimum offset `θ` on `[−1, 1]`.
pub fn build_profile(
    eps: f64,
    lambda: f64,
    theta: f64,
    opts: &ShootingOptions,
) -> Result<SolutionProfile> {
    let shot = shoot_center(eps, lambda, theta, false, opts)?;
    profile_from_shot(&shot)
}

pub fn profile_from_shot(shot: &CenterShot) -> Result<SolutionProfile> {
    let eps = shot.eps;
    let p = ModelParams::new(eps, shot.lambda)?;
    // right half, x from 0 to ξ_exit
    let mut xs = Vec::new();
    let mut vs = Vec::new();
    let mut ws = Vec::new();
    if let Some(h) = &shot.head {
        let k = ((h.x_s / MAX_DX).ceil() as usize).max(1);
        for i in 0..k {
            let x = h.x_s * i as f64 / k as f64;
            let (v, w) = h.eval(x);
            xs.push(x);
            vs.push(v);
            ws.push(w);
        }
    }
    let traj = &shot.trajectory;
    xs.push(traj.t[0]);
    vs.push(traj.y[0][0]);
    ws.push(traj.y[0][1]);
    let mut buf = vec![0.0; traj.dim()];
    for (i, (t0, t1)) in traj.steps().enumerate() {
        let k = (((t1 - t0) / MAX_DX).ceil() as usize).clamp(1, 200);
        for j in 1..k {
            let t = t0 + (t1 - t0) * j as f64 / k as f64;
            traj.eval_into(t, &mut buf);
            xs.push(t);
            vs.push(buf[0]);
            ws.push(buf[1]);
        }
        let y = &traj.y[i + 1];
        xs.push(traj.t[i + 1]);
        vs.push(y[0]);
        ws.push(y[1]);
    }
    let xe = shot.xi_exit;
    let n = xs.len();
    let mut x = Vec::with_capacity(n);
    let mut u = Vec::with_capacity(n);
    let mut w = Vec::with_capacity(n);
    for i in (0..n).rev() {
        x.push(-xs[i] / xe);
        u.push(eps + vs[i] - 1.0);
        w.push(-ws[i]);
    }
    // the exit event lands on ũ = 1 up to the event tolerance
    u[0] = 0.0;
    x[0] = -1.0;
    // drop samples that collapsed onto each other in x
    let mut keep_x = vec![x[0]];
    let mut keep_u = vec![u[0]];
    let mut keep_w = vec![w[0]];
    for i in 1..n {
        if x[i] > *keep_x.last().unwrap() + 1e-15 {
            keep_x.push(x[i]);
            keep_u.push(u[i]);
            keep_w.push(w[i]);
        }
    }
    *keep_x.last_mut().unwrap() = 0.0;
    SolutionProfile::from_half(p, &keep_x, &keep_u, &keep_w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::timemap;

    #[test]
    fn boundary_shot_turns_for_small_slope() {
        let p = ModelParams::new(0.05, 0.07).unwrap();
        let s = shoot_half(&p, -0.01).unwrap();
        assert_eq!(s.outcome, ShotOutcome::Turned);
        assert!(s.xi_at_turn.unwrap() < 0.0);
        let u = s.u_at_turn.unwrap();
        assert!(u > 0.0 && u <= 1.0);
    }

    #[test]
    fn steep_slope_gives_positive_sentinel() {
        let p = ModelParams::new(0.05, 0.07).unwrap();
        let s = shoot_half(&p, -20.0).unwrap();
        assert_eq!(s.outcome, ShotOutcome::NoTurn);
        assert_eq!(residual(&p, -20.0).unwrap(), 1.0);
        // without regularization every shot turns: ũ'' = λ/ũ² repels from 0
        let p0 = ModelParams::new(0.0, 0.07).unwrap();
        assert_eq!(shoot_half(&p0, -5.0).unwrap().outcome, ShotOutcome::Turned);
    }

    #[test]
    fn rejects_nonnegative_slope() {
        let p = ModelParams::new(0.05, 0.07).unwrap();
        assert!(shoot_half(&p, 0.0).is_err());
    }

    #[test]
    fn lower_branch_boundary_root() {
        // the centre solution's slope is a root of the boundary residual
        let p = ModelParams::new(0.05, 0.07).unwrap();
        let sols = find_solutions_with(&p, 32, &ShootingOptions::default()).unwrap();
        let w0 = sols[0].profile.w0;
        let opts = ShootingOptions::default();
        let r = residual_with(&p, w0, &opts).unwrap();
        assert!(r.abs() < 1e-8, "residual {r}");
        let refined = refine_w0(&p, w0 * (1.0 + 1e-6), w0 * (1.0 - 1e-6), &opts).unwrap();
        assert!(residual_with(&p, refined, &opts).unwrap().abs() <= 1e-10);
        assert!((refined - w0).abs() < 1e-8);
    }

    #[test]
    fn residual_is_continuous_across_sign_change() {
        let p = ModelParams::new(0.05, 0.07).unwrap();
        let grid: Vec<f64> = (0..60).map(|i| -0.05 - 0.0005 * i as f64).collect();
        let r: Vec<f64> = grid.iter().map(|&w| residual(&p, w).unwrap()).collect();
        let k = r.windows(2).position(|w| w[0] < 0.0 && w[1] >= 0.0).unwrap();
        assert!(r[k + 1] - r[k] < 0.02, "{} {}", r[k], r[k + 1]);
    }

    #[test]
    fn center_derivatives_match_differences() {
        let opts = ShootingOptions::default();
        for &(eps, lam, th) in &[(0.05, 0.2, -1.0), (0.05, 0.2, -40.0), (0.0, 0.1, -3.0)] {
            let s = shoot_center(eps, lam, th, true, &opts).unwrap();
            let h = 1e-5;
            let fp = shoot_center(eps, lam, th + h, false, &opts).unwrap().f;
            let fm = shoot_center(eps, lam, th - h, false, &opts).unwrap().f;
            let d = (fp - fm) / (2.0 * h);
            assert!((d - s.df_dtheta).abs() < 1e-5 * (1.0 + d.abs()), "{d} vs {}", s.df_dtheta);
            let fp = shoot_center(eps, lam + h, th, false, &opts).unwrap().f;
            let fm = shoot_center(eps, lam - h, th, false, &opts).unwrap().f;
            let d = (fp - fm) / (2.0 * h);
            assert!((d - s.df_dlambda).abs() < 1e-5 * (1.0 + d.abs()), "{d} vs {}", s.df_dlambda);
        }
    }

    #[test]
    fn head_start_is_continuous() {
        let opts = ShootingOptions::default();
        let eps = 0.05;
        let edge = (HEAD_START_LEVEL * eps).ln() - HEAD_START_GAP;
        let a = shoot_center(eps, 0.3, edge - 1e-9, true, &opts).unwrap();
        let b = shoot_center(eps, 0.3, edge + 1e-9, true, &opts).unwrap();
        assert!(a.head.is_some() && b.head.is_none());
        assert!((a.f - b.f).abs() < 1e-9, "{} {}", a.f, b.f);
        assert!((a.df_dtheta - b.df_dtheta).abs() < 1e-6);
        assert!((a.df_dlambda - b.df_dlambda).abs() < 1e-6);
    }

    #[test]
    fn center_shot_agrees_with_time_map() {
        let opts = ShootingOptions::default();
        for &(eps, th) in &[(0.05, -0.7), (0.05, -4.8), (0.02, -60.0), (0.01, -878.41)] {
            let tm = timemap::time_map(eps, th).unwrap();
            let s = shoot_center(eps, tm.lambda, th, false, &opts).unwrap();
            assert!(s.f.abs() < 1e-9, "eps {eps} theta {th}: F = {}", s.f);
            let prof = profile_from_shot(&s).unwrap();
            assert!((prof.norm2 - tm.norm2).abs() < 1e-8, "{} vs {}", prof.norm2, tm.norm2);
        }
    }

    #[test]
    fn three_solutions_between_folds() {
        let p = ModelParams::new(0.05, 0.2).unwrap();
        let sols = find_solutions(&p, 64).unwrap();
        assert_eq!(sols.len(), 3);
        for s in &sols {
            assert!(s.symmetry_error() <= 1e-8);
            assert!(s.u[0].abs() <= 1e-10 && s.u.last().unwrap().abs() <= 1e-10);
            assert!(s.u_min() > -1.0 + 0.05 * (1.0 - 1e-6));
            assert!(s.bvp_residual() <= 1e-6, "bvp residual {}", s.bvp_residual());
        }
        assert!(sols[0].norm2 < sols[1].norm2 && sols[1].norm2 < sols[2].norm2);
    }

    #[test]
    fn one_solution_outside_folds() {
        for lam in [0.8, 0.03] {
            let p = ModelParams::new(0.05, lam).unwrap();
            assert_eq!(find_solutions(&p, 64).unwrap().len(), 1, "lambda {lam}");
        }
    }

    #[test]
    fn two_solutions_without_regularization() {
        let p = ModelParams::new(0.0, 0.2).unwrap();
        let sols = find_solutions(&p, 64).unwrap();
        assert_eq!(sols.len(), 2);
        let p = ModelParams::new(0.0, 0.4).unwrap();
        assert!(find_solutions(&p, 64).unwrap().is_empty());
    }
}
