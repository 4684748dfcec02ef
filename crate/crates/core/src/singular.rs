//! Singular (ε = 0) solutions.
//!
//! Type I: touchdown on a plateau `u ≡ −1` joined to the boundary by linear
//! ramps. Type II: the corner `u = |x| − 1`. Type III: touchdown-free
//! solutions of `ũ'' = λ/ũ²`, computed from the first integral
//! `w² = 2λ(1/a − 1/ũ)` with `a = ũ_min` by quadrature.

use rayon::prelude::*;

use crate::error::{domain, Result};
use crate::model::ModelParams;
use crate::profile::SolutionProfile;
use crate::roots;
use crate::timemap::integrate_adaptive;

const SQRT3: f64 = 1.732_050_807_568_877_2;

/// Samples per singular profile (breakpoints are added on top).
pub const SAMPLES: usize = 2001;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum OrbitKind {
    TypeI,
    TypeII,
    TypeIII,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct SingularOrbit {
    pub kind: OrbitKind,
    /// Type I only.
    pub delta: Option<f64>,
    /// Type III only; types I and II live at λ = 0.
    pub lambda: Option<f64>,
    /// Interior corners of the piecewise description.
    pub breakpoints: Vec<f64>,
    pub profile: SolutionProfile,
    pub norm2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Type3BranchPoint {
    /// `ũ_min`.
    pub u_min: f64,
    pub lambda: f64,
    pub norm2: f64,
}

/// Uniform grid on `[−1, 1]` with `extra` merged in.
fn grid_with(extra: &[f64]) -> Vec<f64> {
    let mut g: Vec<f64> = (0..SAMPLES)
        .map(|i| -1.0 + 2.0 * i as f64 / (SAMPLES - 1) as f64)
        .collect();
    for &b in extra {
        if !g.iter().any(|&x| (x - b).abs() < 1e-14) {
            g.push(b);
        }
    }
    g.sort_by(f64::total_cmp);
    g
}

/// `u = |x| − 1`, norm 2/3.
pub fn type2_orbit() -> SingularOrbit {
    let grid = grid_with(&[0.0]);
    let u: Vec<f64> = grid.iter().map(|x| x.abs() - 1.0).collect();
    let w: Vec<f64> = grid
        .iter()
        .map(|&x| if x < 0.0 { -1.0 } else if x > 0.0 { 1.0 } else { 0.0 })
        .collect();
    let params = ModelParams { eps: 0.0, lambda: 0.0 };
    let norm2 = 2.0 / 3.0;
    SingularOrbit {
        kind: OrbitKind::TypeII,
        delta: None,
        lambda: None,
        breakpoints: vec![0.0],
        profile: SolutionProfile::with_norm(params, grid, u, w, norm2).expect("matching samples"),
        norm2,
    }
}

/// Plateau `u = −1` on `|x| ≤ 1 − (√3/2)δ` with ramps of slope `∓2/(√3δ)`.
pub fn type1_orbit(delta: f64) -> Result<SingularOrbit> {
    if !(delta > 0.0 && delta < 2.0 / SQRT3) {
        return domain(format!("type I orbit needs 0 < delta < 2/sqrt 3, got {delta}"));
    }
    let ramp = SQRT3 / 2.0 * delta;
    let edge = 1.0 - ramp;
    let slope = 1.0 / ramp;
    let grid = grid_with(&[-edge, edge]);
    let u: Vec<f64> = grid
        .iter()
        .map(|&x| {
            if x.abs() >= edge {
                (x.abs() - 1.0) * slope
            } else {
                -1.0
            }
        })
        .collect();
    let w: Vec<f64> = grid
        .iter()
        .map(|&x| {
            if x <= -edge {
                -slope
            } else if x >= edge {
                slope
            } else {
                0.0
            }
        })
        .collect();
    let norm2 = 2.0 * (1.0 - SQRT3 * delta / 3.0);
    let params = ModelParams { eps: 0.0, lambda: 0.0 };
    Ok(SingularOrbit {
        kind: OrbitKind::TypeI,
        delta: Some(delta),
        lambda: None,
        breakpoints: vec![-edge, edge],
        profile: SolutionProfile::with_norm(params, grid, u, w, norm2)?,
        norm2,
    })
}

/// Upper limit of the substitution variable, `S = √(1/a − 1)`.
fn s_end(a: f64) -> f64 {
    ((1.0 - a) / a).sqrt()
}

/// `G(a) = ∫_a^1 dũ / √(1/a − 1/ũ)`, computed after `ũ = a(1 + s²)` as
/// `2a^{3/2} ∫_0^S √(1 + s²) ds`.
pub fn g_integral(a: f64) -> Result<f64> {
    if !(a > 0.0 && a < 1.0) {
        return domain(format!("u_min must lie in (0, 1), got {a}"));
    }
    let s = s_end(a);
    let i = integrate_adaptive(&|t: f64| (1.0 + t * t).sqrt(), 0.0, s, 1e-14 * s.max(1.0).powi(2), 40)?;
    Ok(2.0 * a * a.sqrt() * i)
}

/// One point of the ε = 0 branch of touchdown-free solutions.
pub fn type3_point(a: f64) -> Result<Type3BranchPoint> {
    let g = g_integral(a)?;
    let s = s_end(a);
    // ‖u‖² = 2 ∫ (ũ − 1)² dx, dx/ds = 2a^{3/2} √(1+s²) / G
    let c = 2.0 * a * a.sqrt() / g;
    let f = |t: f64| {
        let d = a * (1.0 + t * t) - 1.0;
        d * d * (1.0 + t * t).sqrt()
    };
    let n = integrate_adaptive(&f, 0.0, s, 1e-14 * s.max(1.0), 40)?;
    Ok(Type3BranchPoint {
        u_min: a,
        lambda: 0.5 * g * g,
        norm2: 2.0 * c * n,
    })
}

/// Branch points for each `ũ_min` in the grid, evaluated concurrently.
/// Failures are kept per point.
pub fn type3_branch(u_min_grid: &[f64]) -> Vec<Result<Type3BranchPoint>> {
    u_min_grid.par_iter().map(|&a| type3_point(a)).collect()
}

/// Default `ũ_min` grid: geometric from 1e−6 towards 1.
pub fn type3_grid(n: usize) -> Vec<f64> {
    let l = (1e-6f64).ln();
    (0..n)
        .map(|i| (l * (1.0 - (i as f64 + 0.5) / n as f64)).exp())
        .collect()
}

/// The type III solution with minimum `ũ_min = a`.
pub fn type3_profile(a: f64) -> Result<SingularOrbit> {
    let pt = type3_point(a)?;
    let g = (2.0 * pt.lambda).sqrt();
    let s_max = s_end(a);
    let k = a * a.sqrt() / g;
    // distance from the centre as a function of s, increasing from 0 to 1
    let xc = |s: f64| k * (s * (1.0 + s * s).sqrt() + s.asinh());
    let dxc = |s: f64| 2.0 * k * (1.0 + s * s).sqrt();
    let grid = grid_with(&[0.0]);
    let mut u = Vec::with_capacity(grid.len());
    let mut w = Vec::with_capacity(grid.len());
    for &x in &grid {
        let target = x.abs();
        let s = if target <= 0.0 {
            0.0
        } else if target >= 1.0 {
            s_max
        } else {
            roots::newton_bracketed(
                |s| Ok((xc(s) - target, dxc(s))),
                0.0,
                s_max,
                1e-16,
                1e-15 * s_max,
                200,
            )?
        };
        let ut = a * (1.0 + s * s);
        let slope = g * s / (a.sqrt() * (1.0 + s * s).sqrt());
        u.push(ut - 1.0);
        w.push(if x < 0.0 { -slope } else { slope });
    }
    // exact boundary values
    u[0] = 0.0;
    *u.last_mut().unwrap() = 0.0;
    let params = ModelParams::new(0.0, pt.lambda)?;
    Ok(SingularOrbit {
        kind: OrbitKind::TypeIII,
        delta: None,
        lambda: Some(pt.lambda),
        breakpoints: Vec::new(),
        profile: SolutionProfile::with_norm(params, grid, u, w, pt.norm2)?,
        norm2: pt.norm2,
    })
}

/// `λ*₀ = max λ` over the type III branch, with the maximizing `ũ_min`.
pub fn lambda_star0() -> Result<Type3BranchPoint> {
    let mut failure = None;
    let a = roots::golden_max(
        |a| match g_integral(a) {
            Ok(g) => g,
            Err(e) => {
                failure = Some(e);
                f64::NEG_INFINITY
            }
        },
        1e-3,
        0.9,
        1e-12,
    );
    if let Some(e) = failure {
        return Err(e);
    }
    type3_point(a)
}

/// One row of the ε = 0 bifurcation set.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct DiagramRow {
    /// `B1`, `B2`, `B3` or `B`.
    pub kind: &'static str,
    /// δ on B1, λ on B2, `ũ_min` on B3, 0 for the point B.
    pub param: f64,
    pub lambda: f64,
    pub norm_u2: f64,
}

/// The ε = 0 bifurcation set: the vertical segment B1 of type I orbits, the
/// horizontal segment B2 at norm 2, the type III curve B3, and the point B.
pub fn singular_diagram(n: usize) -> Result<Vec<DiagramRow>> {
    let n = n.max(2);
    let dmax = 2.0 / SQRT3;
    let mut rows = Vec::with_capacity(3 * n + 1);
    for i in 0..n {
        let d = dmax * (i as f64 + 0.5) / n as f64;
        rows.push(DiagramRow {
            kind: "B1",
            param: d,
            lambda: 0.0,
            norm_u2: 2.0 * (1.0 - SQRT3 * d / 3.0),
        });
    }
    for i in 1..=n {
        let l = i as f64 / n as f64;
        rows.push(DiagramRow {
            kind: "B2",
            param: l,
            lambda: l,
            norm_u2: 2.0,
        });
    }
    for p in type3_branch(&type3_grid(n)) {
        let p = p?;
        rows.push(DiagramRow {
            kind: "B3",
            param: p.u_min,
            lambda: p.lambda,
            norm_u2: p.norm2,
        });
    }
    rows.push(DiagramRow {
        kind: "B",
        param: 0.0,
        lambda: 0.0,
        norm_u2: 2.0 / 3.0,
    });
    Ok(rows)
}
