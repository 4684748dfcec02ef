//! Pseudo-arclength continuation of the solution curve at fixed ε.
//!
//! The curve is traced in the plane `(λ, ψ)` with `ψ = −ln(1 − θ)` and
//! `θ = ln(ũ_min − ε)` the centre-shooting parameter. The logarithmic
//! compression keeps the very long upper branch (θ of order −10³) at
//! moderate arclength, while leaving the fold region essentially unscaled.

use rayon::prelude::*;

use crate::asymptotics;
use crate::error::{domain, Error, Result};
use crate::model::delta_of;
use crate::shooting::{self, CenterShot, ShootingOptions};
use crate::stability::{classify_with_grid, Stability, GRID_POINTS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FoldKind {
    /// Local minimum of λ, λ∗(ε).
    Lower,
    /// Local maximum of λ, λ*(ε).
    Upper,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct BranchPoint {
    pub lambda: f64,
    pub eps: f64,
    pub delta: Option<f64>,
    pub w0: f64,
    pub norm2: f64,
    pub stability: Stability,
    pub arclength: f64,
    pub theta: f64,
    pub is_fold: bool,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct FoldPoint {
    pub lambda_fold: f64,
    pub w0_fold: f64,
    pub norm2_fold: f64,
    pub kind: FoldKind,
    pub theta: f64,
    /// `|dλ/ds|` at the refined point.
    pub dlambda_ds: f64,
    /// Index of the fold in [`Branch::points`].
    pub index: usize,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct Branch {
    pub eps: f64,
    pub points: Vec<BranchPoint>,
    pub folds: Vec<FoldPoint>,
    /// Why tracing stopped early, if it did.
    pub diagnostic: Option<String>,
}

#[derive(Debug, Clone)]
pub struct ContinuationOptions {
    pub h0: f64,
    pub h_min: f64,
    pub h_max: f64,
    pub s_max: f64,
    pub lambda_max: f64,
    /// Tracing stops below this λ (the ε = 0 branch ends on the λ = 0 axis).
    pub lambda_min: f64,
    pub max_points: usize,
    pub max_newton: usize,
    /// Compute norms and stability labels for every point.
    pub annotate: bool,
    /// Grid size of the stability eigenproblem.
    pub stability_grid: usize,
    pub shooting: ShootingOptions,
}

impl Default for ContinuationOptions {
    fn default() -> Self {
        Self {
            h0: 0.01,
            h_min: 1e-6,
            h_max: 0.05,
            s_max: 100.0,
            lambda_max: 1.0,
            lambda_min: 0.0,
            max_points: 5000,
            max_newton: 10,
            annotate: true,
            stability_grid: GRID_POINTS,
            shooting: ShootingOptions::default(),
        }
    }
}

fn theta_of(psi: f64) -> f64 {
    -(-psi).exp_m1()
}

fn psi_of(theta: f64) -> f64 {
    -(-theta).ln_1p()
}

/// Residual and its gradient in `(λ, ψ)`.
struct Eval {
    f: f64,
    f_l: f64,
    f_p: f64,
    shot: CenterShot,
}

fn eval(eps: f64, lambda: f64, psi: f64, opts: &ShootingOptions) -> Result<Eval> {
    let theta = theta_of(psi);
    let shot = shooting::shoot_center(eps, lambda, theta, true, opts)?;
    Ok(Eval {
        f: shot.f,
        f_l: shot.df_dlambda,
        f_p: shot.df_dtheta * (1.0 - theta),
        shot,
    })
}

/// A solved point of the curve.
#[derive(Debug, Clone, Copy)]
pub struct StartPoint {
    pub lambda: f64,
    pub theta: f64,
}

/// Lower-branch start at `λ0`, seeded by the flat-membrane estimate
/// `ũ_min ≈ 1 − λ/2`.
pub fn lower_start(eps: f64, lambda0: f64, opts: &ShootingOptions) -> Result<StartPoint> {
    let guess = (1.0 - eps - 0.5 * lambda0).ln();
    let theta = shooting::newton_theta(eps, lambda0, guess, opts)?;
    Ok(StartPoint {
        lambda: lambda0,
        theta,
    })
}

/// Default start: λ = 0.005, lowered to ε/4 when that would already be past
/// the lower fold.
pub fn default_start_lambda(eps: f64) -> f64 {
    if eps > 0.0 {
        0.005f64.min(0.25 * eps)
    } else {
        0.005
    }
}

/// Trace the branch through `start` with default options, stopping at
/// arclength `s_max`.
pub fn trace_branch(eps: f64, start: StartPoint, s_max: f64, h0: f64) -> Result<Branch> {
    let opts = ContinuationOptions {
        s_max,
        h0,
        lambda_min: if eps == 0.0 { 1e-6 } else { 0.0 },
        ..ContinuationOptions::default()
    };
    trace_branch_with(eps, start, &opts)
}

struct Raw {
    lambda: f64,
    psi: f64,
    s: f64,
    w0: f64,
}

/// Predictor-corrector tracing. Points carry exact shooting derivatives; the
/// corrector is a damped Newton iteration on the bordered system
/// `{F = 0, t·(z − z_pred) = 0}`.
pub fn trace_branch_with(eps: f64, start: StartPoint, opts: &ContinuationOptions) -> Result<Branch> {
    if !(opts.h0 > 0.0) {
        return domain("initial step must be positive");
    }
    let sopts = &opts.shooting;
    let mut z = (start.lambda, psi_of(start.theta));
    let e0 = eval(eps, z.0, z.1, sopts)?;
    if e0.f.abs() > 1e-9 {
        return domain(format!("start point has residual {:e}", e0.f));
    }
    // tangent (F_ψ, −F_λ), oriented so that λ increases
    let mut t = {
        let n = e0.f_l.hypot(e0.f_p);
        let mut t = (e0.f_p / n, -e0.f_l / n);
        if t.0 < 0.0 {
            t = (-t.0, -t.1);
        }
        t
    };
    let mut raw = vec![Raw {
        lambda: z.0,
        psi: z.1,
        s: 0.0,
        w0: e0.shot.w0(),
    }];
    let mut h = opts.h0.min(opts.h_max);
    let mut s = 0.0;
    let mut diagnostic = None;
    let psi_cap = psi_of(shooting::theta_max(eps, 0.0).min((1.0 - eps).ln() - 1e-9));

    while raw.len() < opts.max_points {
        if s >= opts.s_max {
            break;
        }
        let zp = (z.0 + h * t.0, z.1 + h * t.1);
        let corrected = if zp.1 >= psi_cap || zp.0 <= 0.0 {
            None
        } else {
            correct(eps, zp, t, opts).ok()
        };
        let accepted = corrected.and_then(|(zn, e, iters)| {
            let d = ((zn.0 - z.0).powi(2) + (zn.1 - z.1).powi(2)).sqrt();
            let sec = ((zn.0 - z.0) / d, (zn.1 - z.1) / d);
            let cos = sec.0 * t.0 + sec.1 * t.1;
            if d > 0.0 && d < 2.0 * h && cos > 0.8 {
                Some((zn, e, iters, d, sec))
            } else {
                None
            }
        });
        match accepted {
            Some((zn, e, iters, d, sec)) => {
                s += d;
                z = zn;
                t = sec;
                raw.push(Raw {
                    lambda: z.0,
                    psi: z.1,
                    s,
                    w0: e.shot.w0(),
                });
                if z.0 > opts.lambda_max || z.0 < opts.lambda_min {
                    break;
                }
                if iters <= 3 {
                    h = (1.5 * h).min(opts.h_max);
                }
            }
            None => {
                h *= 0.5;
                if h < opts.h_min {
                    diagnostic = Some(format!(
                        "corrector failed at lambda = {}, theta = {}; branch truncated",
                        z.0,
                        theta_of(z.1)
                    ));
                    break;
                }
            }
        }
    }

    let mut points: Vec<BranchPoint> = raw
        .iter()
        .map(|r| BranchPoint {
            lambda: r.lambda,
            eps,
            delta: delta_of(eps, r.lambda).ok(),
            w0: r.w0,
            norm2: f64::NAN,
            stability: Stability::Unknown,
            arclength: r.s,
            theta: theta_of(r.psi),
            is_fold: false,
        })
        .collect();
    if points.len() < 2 {
        return Err(Error::Continuation(
            diagnostic.unwrap_or_else(|| "no step could be taken".into()),
        ));
    }
    let mut branch = Branch {
        eps,
        points: std::mem::take(&mut points),
        folds: Vec::new(),
        diagnostic,
    };
    let folds = detect_folds_with(&branch, sopts)?;
    insert_folds(&mut branch, folds);
    if opts.annotate {
        annotate(&mut branch, sopts, opts.stability_grid)?;
    }
    Ok(branch)
}

fn correct(
    eps: f64,
    zp: (f64, f64),
    t: (f64, f64),
    opts: &ContinuationOptions,
) -> Result<((f64, f64), Eval, usize)> {
    let sopts = &opts.shooting;
    let mut z = zp;
    let mut e = eval(eps, z.0, z.1, sopts)?;
    for it in 1..=opts.max_newton {
        let g = t.0 * (z.0 - zp.0) + t.1 * (z.1 - zp.1);
        // [F_λ F_ψ; t_λ t_ψ] δ = −[F; g]
        let det = e.f_l * t.1 - e.f_p * t.0;
        if det == 0.0 || !det.is_finite() {
            return Err(Error::Continuation("singular corrector matrix".into()));
        }
        let dl = (-e.f * t.1 + e.f_p * g) / det;
        let dp = (-e.f_l * g + e.f * t.0) / det;
        let mut damp = 1.0;
        let mut next = None;
        for _ in 0..6 {
            let zn = (z.0 + damp * dl, z.1 + damp * dp);
            if zn.0 > 0.0 {
                if let Ok(en) = eval(eps, zn.0, zn.1, sopts) {
                    if en.f.abs() < e.f.abs().max(1e-12) || damp < 0.05 {
                        next = Some((zn, en));
                        break;
                    }
                }
            }
            damp *= 0.5;
        }
        let (zn, en) = next.ok_or_else(|| Error::Continuation("damping exhausted".into()))?;
        let step = (damp * dl).hypot(damp * dp);
        z = zn;
        e = en;
        if e.f.abs() <= sopts.residual_tol && step < 1e-8 {
            return Ok((z, e, it));
        }
        if e.f.abs() <= 0.1 * sopts.residual_tol {
            return Ok((z, e, it));
        }
    }
    Err(Error::Continuation("corrector did not converge".into()))
}

/// Locate the folds of a traced branch: sign changes of `dλ/ds` between
/// consecutive points, each refined to `|dλ/ds| ≤ 1e−10`.
pub fn detect_folds(branch: &Branch) -> Result<Vec<FoldPoint>> {
    detect_folds_with(branch, &ShootingOptions::default())
}

pub fn detect_folds_with(branch: &Branch, sopts: &ShootingOptions) -> Result<Vec<FoldPoint>> {
    let pts = &branch.points;
    if pts.len() < 3 {
        return Ok(Vec::new());
    }
    let mut out = Vec::new();
    for i in 1..pts.len() - 1 {
        let d0 = pts[i].lambda - pts[i - 1].lambda;
        let d1 = pts[i + 1].lambda - pts[i].lambda;
        if d0 == 0.0 || d1 == 0.0 || d0.signum() == d1.signum() {
            continue;
        }
        let kind = if d0 > 0.0 {
            FoldKind::Upper
        } else {
            FoldKind::Lower
        };
        let fold = if branch.points[i].theta.is_finite() {
            refine_fold(branch.eps, &pts[i - 1], &pts[i], &pts[i + 1], kind, sopts)?
        } else {
            continue;
        };
        out.push(FoldPoint { index: i, ..fold });
    }
    Ok(out)
}

/// `λ` solving `F(λ, θ) = 0` at fixed `θ`, by Newton from `lambda0`.
pub fn lambda_at_theta(eps: f64, theta: f64, lambda0: f64, sopts: &ShootingOptions) -> Result<CenterShot> {
    let mut l = lambda0;
    for _ in 0..60 {
        let s = shooting::shoot_center(eps, l, theta, true, sopts)?;
        if s.f.abs() <= 0.01 * sopts.residual_tol {
            return Ok(s);
        }
        let mut step = -s.f / s.df_dlambda;
        while l + step <= 0.0 {
            step *= 0.5;
        }
        if step.abs() <= 1e-16 * l {
            return Ok(s);
        }
        l += step;
    }
    Err(Error::Root(format!("no lambda at theta = {theta}")))
}

fn refine_fold(
    eps: f64,
    a: &BranchPoint,
    m: &BranchPoint,
    b: &BranchPoint,
    kind: FoldKind,
    sopts: &ShootingOptions,
) -> Result<FoldPoint> {
    let (pa, pm, pb) = (psi_of(a.theta), psi_of(m.theta), psi_of(b.theta));
    let lam_guess = |psi: f64| {
        // quadratic through the three points, in ψ
        let l = |x: f64, x0: f64, x1: f64, x2: f64| (x - x1) * (x - x2) / ((x0 - x1) * (x0 - x2));
        a.lambda * l(psi, pa, pm, pb) + m.lambda * l(psi, pm, pa, pb) + b.lambda * l(psi, pb, pa, pm)
    };
    // g(ψ) = F_ψ on the curve; the fold is its zero
    let g = |psi: f64| -> Result<f64> {
        let th = theta_of(psi);
        let s = lambda_at_theta(eps, th, lam_guess(psi), sopts)?;
        Ok(s.df_dtheta * (1.0 - th) / s.df_dlambda.abs())
    };
    let (lo, hi) = if pa < pb { (pa, pb) } else { (pb, pa) };
    // pick the sub-bracket with a sign change
    let gl = g(lo)?;
    let gm = g(pm)?;
    let gh = g(hi)?;
    let (x0, x1) = if gl.signum() != gm.signum() {
        (lo.min(pm), lo.max(pm))
    } else if gm.signum() != gh.signum() {
        (pm.min(hi), pm.max(hi))
    } else {
        return Err(Error::Continuation(format!(
            "fold near lambda = {} not bracketed",
            m.lambda
        )));
    };
    let psi = crate::roots::brent(g, x0, x1, 1e-14, 1e-13, 200)?;
    let th = theta_of(psi);
    let shot = lambda_at_theta(eps, th, lam_guess(psi), sopts)?;
    let fp = shot.df_dtheta * (1.0 - th);
    let dlds = (fp / fp.hypot(shot.df_dlambda)).abs();
    let prof = shooting::profile_from_shot(&shooting::shoot_center(eps, shot.lambda, th, false, sopts)?)?;
    Ok(FoldPoint {
        lambda_fold: shot.lambda,
        w0_fold: shot.w0(),
        norm2_fold: prof.norm2,
        kind,
        theta: th,
        dlambda_ds: dlds,
        index: 0,
    })
}

fn insert_folds(branch: &mut Branch, folds: Vec<FoldPoint>) {
    let mut shifted = Vec::with_capacity(folds.len());
    for (k, f) in folds.into_iter().enumerate() {
        // place the fold between the neighbours whose θ brackets it
        let i = f.index + k;
        let pts = &branch.points;
        let pos = if (pts[i - 1].theta - f.theta) * (pts[i].theta - f.theta) <= 0.0 {
            i
        } else {
            i + 1
        };
        let prev = &pts[pos - 1];
        let dl = f.lambda_fold - prev.lambda;
        let dp = psi_of(f.theta) - psi_of(prev.theta);
        let s = prev.arclength + dl.hypot(dp);
        let bp = BranchPoint {
            lambda: f.lambda_fold,
            eps: branch.eps,
            delta: delta_of(branch.eps, f.lambda_fold).ok(),
            w0: f.w0_fold,
            norm2: f.norm2_fold,
            stability: Stability::Unknown,
            arclength: s,
            theta: f.theta,
            is_fold: true,
        };
        branch.points.insert(pos, bp);
        // keep arclength strictly increasing after the insertion
        let next = pos + 1;
        if next < branch.points.len() && branch.points[next].arclength <= s {
            let nudge = s - branch.points[next].arclength + 1e-12;
            for p in &mut branch.points[next..] {
                p.arclength += nudge;
            }
        }
        shifted.push(FoldPoint { index: pos, ..f });
    }
    branch.folds = shifted;
}

fn annotate(branch: &mut Branch, sopts: &ShootingOptions, grid: usize) -> Result<()> {
    let eps = branch.eps;
    let results: Vec<Result<(f64, Stability)>> = branch
        .points
        .par_iter()
        .map(|p| {
            let shot = shooting::shoot_center(eps, p.lambda, p.theta, false, sopts)?;
            let prof = shooting::profile_from_shot(&shot)?;
            let st = if p.is_fold {
                Stability::Unknown
            } else {
                classify_with_grid(&prof, &prof.params, grid)
            };
            Ok((prof.norm2, st))
        })
        .collect();
    for (p, r) in branch.points.iter_mut().zip(results) {
        let (n, st) = r?;
        if !p.is_fold {
            p.norm2 = n;
        }
        p.stability = st;
    }
    Ok(())
}

/// Branch from the default lower-branch start, traced until `λ > 1` (or the
/// λ = 0 axis for ε = 0).
pub fn compute_branch(eps: f64, opts: &ContinuationOptions) -> Result<Branch> {
    let start = lower_start(eps, default_start_lambda(eps), &opts.shooting)?;
    let mut o = opts.clone();
    if eps == 0.0 && o.lambda_min <= 0.0 {
        o.lambda_min = 1e-6;
    }
    trace_branch_with(eps, start, &o)
}

/// Re-solve the branch at a given λ near a traced point, by Newton in θ.
pub fn solve_near(
    eps: f64,
    lambda: f64,
    theta_guess: f64,
    sopts: &ShootingOptions,
) -> Result<(f64, crate::profile::SolutionProfile)> {
    let th = shooting::newton_theta(eps, lambda, theta_guess, sopts)?;
    Ok((th, shooting::build_profile(eps, lambda, th, sopts)?))
}

/// `d‖u‖²/dλ` by central differences of width `2·dl` along the branch
/// through `(λ, θ_guess)`.
pub fn fd_slope(
    eps: f64,
    lambda: f64,
    theta_guess: f64,
    dl: f64,
    sopts: &ShootingOptions,
) -> Result<f64> {
    let (t0, _) = solve_near(eps, lambda, theta_guess, sopts)?;
    let (_, p_plus) = solve_near(eps, lambda + dl, t0, sopts)?;
    let (_, p_minus) = solve_near(eps, lambda - dl, t0, sopts)?;
    Ok((p_plus.norm2 - p_minus.norm2) / (2.0 * dl))
}

/// `d‖u‖²/dλ` on the largest-norm solution at `λ`.
pub fn upper_slope_at(eps: f64, lambda: f64, dl: f64, sopts: &ShootingOptions) -> Result<f64> {
    let p = crate::model::ModelParams::new(eps, lambda)?;
    let sols = shooting::find_solutions_with(&p, 64, sopts)?;
    let top = sols
        .last()
        .ok_or_else(|| Error::Root(format!("no solution at lambda = {lambda}")))?;
    fd_slope(eps, lambda, top.theta, dl, sopts)
}

/// One row of the fold comparison table.
#[derive(Debug, Clone, serde::Serialize)]
pub struct FoldRow {
    pub eps: f64,
    pub lambda_star_numeric: Option<f64>,
    pub lambda_star_asymptotic: f64,
    pub abs_error: Option<f64>,
    pub lambda_upper_numeric: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Lower and upper folds for each ε, computed concurrently. Tracing failures
/// are reported per row.
pub fn fold_report(eps_list: &[f64], opts: &ContinuationOptions) -> Result<Vec<FoldRow>> {
    for &e in eps_list {
        if !(e > 0.0 && e <= 0.1) {
            return domain(format!("fold report needs eps in (0, 0.1], got {e}"));
        }
    }
    let o = ContinuationOptions {
        annotate: false,
        ..opts.clone()
    };
    Ok(eps_list
        .par_iter()
        .map(|&eps| {
            let asym = asymptotics::lambda_star_lower(eps).unwrap_or(f64::NAN);
            match compute_branch(eps, &o) {
                Ok(b) => {
                    let lower = b
                        .folds
                        .iter()
                        .find(|f| f.kind == FoldKind::Lower)
                        .map(|f| f.lambda_fold);
                    let upper = b
                        .folds
                        .iter()
                        .find(|f| f.kind == FoldKind::Upper)
                        .map(|f| f.lambda_fold);
                    FoldRow {
                        eps,
                        lambda_star_numeric: lower,
                        lambda_star_asymptotic: asym,
                        abs_error: lower.map(|l| (l - asym).abs()),
                        lambda_upper_numeric: upper,
                        error: b.diagnostic,
                    }
                }
                Err(e) => FoldRow {
                    eps,
                    lambda_star_numeric: None,
                    lambda_star_asymptotic: asym,
                    abs_error: None,
                    lambda_upper_numeric: None,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect())
}
