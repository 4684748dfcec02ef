//! Linear stability of steady states.
//!
//! A steady state is stable when the smallest eigenvalue of
//! `−ψ'' + f_u(u) ψ` with Dirichlet conditions is positive, where
//! `f(u) = λ(1+u)⁻² − λε²(1+u)⁻⁴`.

use std::fmt;

use crate::model::ModelParams;
use crate::profile::SolutionProfile;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stability {
    Stable,
    Unstable,
    Unknown,
}

impl fmt::Display for Stability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stability::Stable => "stable",
            Stability::Unstable => "unstable",
            Stability::Unknown => "unknown",
        })
    }
}

impl std::str::FromStr for Stability {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "stable" => Ok(Stability::Stable),
            "unstable" => Ok(Stability::Unstable),
            "unknown" => Ok(Stability::Unknown),
            other => Err(format!("unknown stability label '{other}'")),
        }
    }
}

/// Default number of grid points on `[−1, 1]`.
pub const GRID_POINTS: usize = 2001;
const MARGIN: f64 = 1e-8;

/// `f_u` for `f(u) = λ(1+u)⁻² − λε²(1+u)⁻⁴`.
pub fn f_u(u: f64, p: &ModelParams) -> f64 {
    let v = 1.0 + u;
    let v3 = v * v * v;
    -2.0 * p.lambda / v3 + 4.0 * p.lambda * p.eps * p.eps / (v3 * v * v)
}

/// Number of eigenvalues below `mu` of the symmetric tridiagonal matrix with
/// diagonal `d` and constant off-diagonal `e` (Sturm count).
fn count_below(d: &[f64], e: f64, mu: f64) -> usize {
    let mut count = 0;
    let mut q = d[0] - mu;
    if q < 0.0 {
        count += 1;
    }
    for &di in &d[1..] {
        let denom = if q == 0.0 { f64::EPSILON * e.abs() } else { q };
        q = di - mu - e * e / denom;
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// Smallest eigenvalue on a uniform grid of `n` points (second-order
/// differences, Sturm bisection).
pub fn smallest_eigenvalue(profile: &SolutionProfile, n: usize) -> f64 {
    let h = 2.0 / (n - 1) as f64;
    let p = &profile.params;
    let inv = 1.0 / (h * h);
    let d: Vec<f64> = (1..n - 1)
        .map(|i| {
            let x = -1.0 + i as f64 * h;
            2.0 * inv + f_u(profile.sample(x).0, p)
        })
        .collect();
    let e = -inv;
    let lo0 = d.iter().cloned().fold(f64::INFINITY, f64::min) - 2.0 * inv;
    let hi0 = d.iter().cloned().fold(f64::NEG_INFINITY, f64::max) + 2.0 * inv;
    let (mut lo, mut hi) = (lo0, hi0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if count_below(&d, e, mid) >= 1 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Classify a steady state by the sign of the smallest eigenvalue.
///
/// Returns `Unknown` when the eigenvalue is within the margin of zero or the
/// grid cannot resolve the local length scale `|f_u(u_min)|^(−1/2)`.
pub fn classify_stability(profile: &SolutionProfile, p: &ModelParams) -> Stability {
    classify_with_grid(profile, p, GRID_POINTS)
}

pub fn classify_with_grid(profile: &SolutionProfile, p: &ModelParams, n: usize) -> Stability {
    let h = 2.0 / (n - 1) as f64;
    let fu = f_u(profile.u_min(), p).abs();
    if fu > 0.0 && 1.0 / fu.sqrt() < 5.0 * h {
        return Stability::Unknown;
    }
    let mut prof = profile.clone();
    prof.params = *p;
    let mu = smallest_eigenvalue(&prof, n);
    if mu > MARGIN {
        Stability::Stable
    } else if mu < -MARGIN {
        Stability::Unstable
    } else {
        Stability::Unknown
    }
}
