//! Closed-form asymptotic expansions.
//!
//! Every evaluator is the bare truncated expansion; remainders are never
//! modelled here.

use crate::error::{domain, Result};
use crate::roots;

/// A truncated expansion evaluated at one point.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Expansion {
    pub name: &'static str,
    pub value: f64,
    /// Order of the neglected remainder.
    pub remainder: &'static str,
}

const SQRT3: f64 = 1.732_050_807_568_877_2;

/// `2√2/3`.
pub const BIFEQ_C: f64 = 0.942_809_041_582_063_4;

/// Lower fold `λ∗(ε) ≈ ¾ε − (√(3/2) + 9/8) ε² ln ε`.
pub fn lambda_star_lower(eps: f64) -> Result<f64> {
    if !(eps > 0.0 && eps < 1.0) {
        return domain(format!("lambda_star_lower needs 0 < eps < 1, got {eps}"));
    }
    Ok(0.75 * eps - (1.5f64.sqrt() + 9.0 / 8.0) * eps * eps * eps.ln())
}

pub fn lambda_star_lower_expansion(eps: f64) -> Result<Expansion> {
    Ok(Expansion {
        name: "lambda_star_lower",
        value: lambda_star_lower(eps)?,
        remainder: "O(eps^2)",
    })
}

/// Upper-branch norm `2(1 − (√3/3)√(ε/λ) − 2ε)`, for `λ ≥ ¾ε`.
pub fn norm_upper(eps: f64, lambda: f64) -> Result<f64> {
    if !(eps >= 0.0) || !(lambda > 0.0) {
        return domain(format!("norm_upper needs eps >= 0, lambda > 0, got ({eps}, {lambda})"));
    }
    if lambda < 0.75 * eps {
        return domain(format!(
            "norm_upper needs lambda >= 3 eps / 4 (delta <= 2/sqrt 3), got lambda = {lambda}"
        ));
    }
    Ok(2.0 * (1.0 - SQRT3 / 3.0 * (eps / lambda).sqrt() - 2.0 * eps))
}

/// [`norm_upper`] together with a flag telling whether `λ` lies within
/// `O(ε)` of the fold corridor `λ ≈ ¾ε`, where the expansion is only
/// marginally valid.
pub fn norm_upper_flagged(eps: f64, lambda: f64) -> Result<(Expansion, bool)> {
    let value = norm_upper(eps, lambda)?;
    let near_fold = lambda < 0.75 * eps + eps;
    Ok((
        Expansion {
            name: "norm_upper",
            value,
            remainder: "O(eps^(3/2) ln eps)",
        },
        near_fold,
    ))
}

/// Exit coordinate of the chart-K1 transition along the stable manifold,
/// `−1 + (√3/2)δ − (3√3/8) δ ε ln ε`.
pub fn xi1_out_expansion(delta: f64, eps: f64) -> Result<f64> {
    if !(eps > 0.0) || !(delta >= 0.0) {
        return domain(format!("xi1_out_expansion needs eps > 0, delta >= 0, got ({delta}, {eps})"));
    }
    Ok(-1.0 + SQRT3 / 2.0 * delta - 3.0 * SQRT3 / 8.0 * delta * eps * eps.ln())
}

/// `Δδ(Δw) = −Δw + (2√2/3) ε ln Δw + (√3/2) ε ln ε`.
pub fn bifeq_delta(dw: f64, eps: f64) -> Result<f64> {
    if !(dw > 0.0) {
        return domain(format!("bifeq_delta needs dw > 0, got {dw}"));
    }
    if !(eps > 0.0) {
        return domain(format!("bifeq_delta needs eps > 0, got {eps}"));
    }
    Ok(-dw + BIFEQ_C * eps * dw.ln() + SQRT3 / 2.0 * eps * eps.ln())
}

/// `d²Δδ/dΔw² = −(2√2/3) ε / Δw²`.
pub fn bifeq_second_derivative(dw: f64, eps: f64) -> f64 {
    -BIFEQ_C * eps / (dw * dw)
}

/// Stationary point `Δw∗ = (2√2/3) ε` of [`bifeq_delta`].
///
/// `Δδ` is concave, so this is its maximum; since `λ = ε(2/√3 + Δδ)⁻²` it is
/// where `λ` is smallest, i.e. the lower fold.
pub fn bifeq_minimizer(eps: f64) -> f64 {
    BIFEQ_C * eps
}

/// Numerical counterpart of [`bifeq_minimizer`] by golden-section search.
///
/// Candidates are compared through
/// `Δδ(a) − Δδ(b) = −(a − b) + (2√2/3) ε ln(1 + (a − b)/b)`, which keeps full
/// relative precision close to the optimum where the values themselves
/// agree to all digits.
pub fn bifeq_golden(eps: f64) -> Result<f64> {
    if !(eps > 0.0) {
        return domain(format!("bifeq_golden needs eps > 0, got {eps}"));
    }
    let c = BIFEQ_C * eps;
    let better = |a: f64, b: f64| {
        let d = a - b;
        -d + c * (d / b).ln_1p() > 0.0
    };
    Ok(roots::golden_section_by(better, c * 1e-3, c * 1e3, 1e-16, 2000))
}

/// `λ∗ = ε (2/√3 + Δδ∗)⁻²` with `Δδ∗ = Δδ(Δw∗)`.
pub fn lambda_star_from_bifeq(eps: f64) -> Result<f64> {
    let dd = bifeq_delta(bifeq_minimizer(eps), eps)?;
    Ok(eps / (2.0 / SQRT3 + dd).powi(2))
}

/// Slope of the norm along the branch at the lower fold,
/// `8/(9ε) + (2/9)(9 + 4√6) ln ε + (5/36)(59 + 24√6) ε (ln ε)²`.
pub fn fold_slope(eps: f64) -> Result<f64> {
    if !(eps > 0.0 && eps < 1.0) {
        return domain(format!("fold_slope needs 0 < eps < 1, got {eps}"));
    }
    let l = eps.ln();
    let s6 = 6f64.sqrt();
    Ok(8.0 / (9.0 * eps)
        + 2.0 / 9.0 * (9.0 + 4.0 * s6) * l
        + 5.0 / 36.0 * (59.0 + 24.0 * s6) * eps * l * l)
}
