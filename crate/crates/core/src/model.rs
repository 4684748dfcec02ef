//! Problem definition, parameter algebra and the norm functional.

use crate::error::{domain, Result};

/// The pair `(ε, λ)`; `δ = √(ε/λ)` is derived on demand.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ModelParams {
    pub eps: f64,
    pub lambda: f64,
}

impl ModelParams {
    pub fn new(eps: f64, lambda: f64) -> Result<Self> {
        if !(eps >= 0.0 && eps.is_finite()) {
            return domain(format!("eps must be finite and >= 0, got {eps}"));
        }
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return domain(format!("lambda must be finite and >= 0, got {lambda}"));
        }
        Ok(Self { eps, lambda })
    }

    /// Build from `(ε, δ)`, i.e. `λ = ε/δ²`.
    pub fn from_delta(eps: f64, delta: f64) -> Result<Self> {
        Self::new(eps, lambda_of(eps, delta)?)
    }

    /// `None` when λ = 0.
    pub fn delta(&self) -> Option<f64> {
        delta_of(self.eps, self.lambda).ok()
    }

    /// δ, or a domain error when λ = 0.
    pub fn require_delta(&self) -> Result<f64> {
        delta_of(self.eps, self.lambda)
    }
}

/// `δ = √(ε/λ)`.
pub fn delta_of(eps: f64, lambda: f64) -> Result<f64> {
    if !(eps >= 0.0) {
        return domain(format!("eps must be >= 0, got {eps}"));
    }
    if !(lambda > 0.0) {
        return domain("delta is undefined for lambda <= 0");
    }
    Ok((eps / lambda).sqrt())
}

/// `λ = ε/δ²`.
pub fn lambda_of(eps: f64, delta: f64) -> Result<f64> {
    if !(eps >= 0.0) {
        return domain(format!("eps must be >= 0, got {eps}"));
    }
    if !(delta > 0.0) {
        return domain("lambda is undefined for delta <= 0");
    }
    Ok(eps / (delta * delta))
}

/// `(u, w)` in original variables, `u ∈ (−1, 0]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateOriginal {
    pub u: f64,
    pub w: f64,
}

/// Shifted deflection `ũ = 1 + u`, slope and spatial variable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateShifted {
    pub u: f64,
    pub w: f64,
    pub xi: f64,
}

/// Shifted deflection with rescaled slope `w̃ = δ w`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateRescaled {
    pub u: f64,
    pub w: f64,
    pub xi: f64,
}

impl StateShifted {
    pub fn to_rescaled(self, delta: f64) -> StateRescaled {
        StateRescaled {
            u: self.u,
            w: self.w * delta,
            xi: self.xi,
        }
    }

    pub fn to_original(self) -> StateOriginal {
        StateOriginal {
            u: self.u - 1.0,
            w: self.w,
        }
    }
}

impl StateRescaled {
    pub fn to_shifted(self, delta: f64) -> Result<StateShifted> {
        if !(delta > 0.0) {
            return domain("cannot undo the slope rescaling with delta <= 0");
        }
        Ok(StateShifted {
            u: self.u,
            w: self.w / delta,
            xi: self.xi,
        })
    }
}

impl StateOriginal {
    pub fn to_shifted(self, xi: f64) -> StateShifted {
        StateShifted {
            u: 1.0 + self.u,
            w: self.w,
            xi,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Formulation {
    /// `(u, w)` against `x`.
    Original,
    /// Shifted variables, pseudo-time with the `ũ⁴` factor divided out.
    Desingularized,
    /// Desingularized with `w̃ = δ w` and pseudo-time scaled by `δ`.
    Rescaled,
}

/// `(ũ⁴w, λ(ũ² − ε²), ũ⁴)`.
pub fn rhs_desingularized(s: StateShifted, p: &ModelParams) -> StateShifted {
    let u2 = s.u * s.u;
    let u4 = u2 * u2;
    StateShifted {
        u: u4 * s.w,
        w: p.lambda * (u2 - p.eps * p.eps),
        xi: u4,
    }
}

/// `(ũ⁴w̃, ε(ũ² − ε²), δũ⁴)`.
pub fn rhs_rescaled(s: StateRescaled, p: &ModelParams) -> Result<StateRescaled> {
    let delta = p.require_delta()?;
    let u2 = s.u * s.u;
    let u4 = u2 * u2;
    Ok(StateRescaled {
        u: u4 * s.w,
        w: p.eps * (u2 - p.eps * p.eps),
        xi: delta * u4,
    })
}

/// `(w, λ/(1+u)² [1 − ε²/(1+u)²])`.
pub fn rhs_original(_x: f64, s: StateOriginal, p: &ModelParams) -> Result<StateOriginal> {
    let v = 1.0 + s.u;
    if !(v > 0.0) {
        return domain(format!("u = {} is at or below touchdown", s.u));
    }
    let inv2 = 1.0 / (v * v);
    Ok(StateOriginal {
        u: s.w,
        w: p.lambda * inv2 * (1.0 - p.eps * p.eps * inv2),
    })
}

/// Same as [`rhs_desingularized`] on a flat `[ũ, w, ξ]` slice, for the
/// integrator.
pub fn rhs_desingularized_slice(p: &ModelParams, y: &[f64], dy: &mut [f64]) {
    let d = rhs_desingularized(
        StateShifted {
            u: y[0],
            w: y[1],
            xi: y[2],
        },
        p,
    );
    dy[0] = d.u;
    dy[1] = d.w;
    dy[2] = d.xi;
}

/// `∫₋₁¹ u² dx` from samples of `ũ = 1 + u` and `w = u'`, via
/// `‖u‖² = 2 − 2‖ũ‖₁ + ‖ũ‖₂²`.
///
/// Each integral uses the endpoint-corrected trapezoid rule
/// `h/2 (f₀ + f₁) + h²/12 (f₀' − f₁')`, which is fourth order for smooth
/// integrands; the derivatives are `w` for `ũ` and `2ũw` for `ũ²`.
pub fn norm_u2(x: &[f64], u_shift: &[f64], w: &[f64]) -> Result<f64> {
    let n = x.len();
    if n < 2 || u_shift.len() != n || w.len() != n {
        return domain("norm needs at least two samples of matching length");
    }
    let tol = 1e-12;
    if (x[0] + 1.0).abs() > tol || (x[n - 1] - 1.0).abs() > tol {
        return domain(format!(
            "grid [{}, {}] does not cover [-1, 1]",
            x[0],
            x[n - 1]
        ));
    }
    let mut l1 = 0.0;
    let mut l2 = 0.0;
    for i in 0..n - 1 {
        let h = x[i + 1] - x[i];
        if !(h > 0.0) {
            return domain("grid is not strictly increasing");
        }
        let (a, b) = (u_shift[i], u_shift[i + 1]);
        let (da, db) = (w[i], w[i + 1]);
        l1 += 0.5 * h * (a + b) + h * h / 12.0 * (da - db);
        l2 += 0.5 * h * (a * a + b * b) + h * h / 12.0 * (2.0 * a * da - 2.0 * b * db);
    }
    Ok(2.0 - 2.0 * l1 + l2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + b.abs())
    }

    #[test]
    fn desingularized_examples() {
        let p = ModelParams::new(0.0, 1.0).unwrap();
        let d = rhs_desingularized(StateShifted { u: 1.0, w: 0.0, xi: 0.3 }, &p);
        assert_eq!((d.u, d.w, d.xi), (0.0, 1.0, 1.0));

        let p = ModelParams::new(0.1, 0.2).unwrap();
        let d = rhs_desingularized(StateShifted { u: 0.5, w: -1.0, xi: 0.0 }, &p);
        assert!(close(d.u, -0.0625, 1e-15));
        assert!(close(d.w, 0.048, 1e-15));
        assert!(close(d.xi, 0.0625, 1e-15));

        let eps = 0.07;
        let p = ModelParams::new(eps, 0.4).unwrap();
        let d = rhs_desingularized(StateShifted { u: eps, w: -0.3, xi: 0.0 }, &p);
        assert_eq!(d.w, 0.0);
        assert!(close(d.u, eps.powi(4) * -0.3, 1e-15));
    }

    #[test]
    fn rescaled_examples() {
        let p = ModelParams::from_delta(0.01, 1.0).unwrap();
        let d = rhs_rescaled(StateRescaled { u: 1.0, w: 0.0, xi: 0.0 }, &p).unwrap();
        assert_eq!(d.u, 0.0);
        assert!(close(d.w, 0.009999, 1e-14));
        assert!(close(d.xi, 1.0, 1e-14));
        let zero = ModelParams::new(0.01, 0.0).unwrap();
        assert!(rhs_rescaled(StateRescaled { u: 1.0, w: 0.0, xi: 0.0 }, &zero).is_err());
    }

    #[test]
    fn original_examples() {
        let p = ModelParams::new(0.0, 1.0).unwrap();
        let d = rhs_original(0.0, StateOriginal { u: 0.0, w: 0.0 }, &p).unwrap();
        assert_eq!((d.u, d.w), (0.0, 1.0));
        let p = ModelParams::new(0.1, 0.2).unwrap();
        let d = rhs_original(0.0, StateOriginal { u: -0.5, w: 0.3 }, &p).unwrap();
        assert!(close(d.u, 0.3, 1e-15));
        assert!(close(d.w, 0.768, 1e-14));
        let d = rhs_original(0.0, StateOriginal { u: -1.0 + 0.1, w: 0.3 }, &p).unwrap();
        assert!(d.w.abs() < 1e-13);
        assert!(rhs_original(0.0, StateOriginal { u: -1.0, w: 0.0 }, &p).is_err());
    }

    #[test]
    fn delta_examples() {
        let d = delta_of(0.01, 0.0075).unwrap();
        assert!(close(d, 2.0 / 3f64.sqrt(), 1e-14));
        assert_eq!(delta_of(0.0, 0.5).unwrap(), 0.0);
        assert!(close(lambda_of(0.04, 2.0).unwrap(), 0.01, 1e-15));
        assert!(delta_of(0.01, 0.0).is_err());
        assert!(lambda_of(0.01, 0.0).is_err());
        assert!(ModelParams::new(0.01, 0.0).unwrap().delta().is_none());
    }

    #[test]
    fn norm_of_flat_profile_is_zero() {
        let x: Vec<f64> = (0..=100).map(|i| -1.0 + i as f64 / 50.0).collect();
        let u = vec![1.0; x.len()];
        let w = vec![0.0; x.len()];
        assert!(norm_u2(&x, &u, &w).unwrap().abs() < 1e-15);
    }

    #[test]
    fn norm_of_corner_profile() {
        // u = |x| - 1, with the kink on a grid node
        let x: Vec<f64> = (0..=200).map(|i| -1.0 + i as f64 / 100.0).collect();
        let u: Vec<f64> = x.iter().map(|x| x.abs()).collect();
        let w: Vec<f64> = x.iter().map(|&x| if x <= 0.0 { -1.0 } else { 1.0 }).collect();
        // the node at x = 0 carries a one-sided slope, so split the integral
        let mid = 100;
        let left = norm_half(&x[..=mid], &u[..=mid], &w[..=mid]);
        let mut wr = w[mid..].to_vec();
        wr[0] = 1.0;
        let right = norm_half(&x[mid..], &u[mid..], &wr);
        assert!(close(left + right, 2.0 / 3.0, 1e-14));
    }

    fn norm_half(x: &[f64], u: &[f64], w: &[f64]) -> f64 {
        // ∫ (ũ − 1)² over a sub-interval with the same corrected trapezoid
        let mut s = 0.0;
        for i in 0..x.len() - 1 {
            let h = x[i + 1] - x[i];
            let (a, b) = (u[i] - 1.0, u[i + 1] - 1.0);
            s += 0.5 * h * (a * a + b * b) + h * h / 12.0 * (2.0 * a * w[i] - 2.0 * b * w[i + 1]);
        }
        s
    }

    #[test]
    fn norm_is_fourth_order() {
        // u = -c(1 - x²): ‖u‖² = 16c²/15
        let c = 0.4;
        let err = |n: usize| {
            let x: Vec<f64> = (0..=n).map(|i| -1.0 + 2.0 * i as f64 / n as f64).collect();
            let u: Vec<f64> = x.iter().map(|x| 1.0 - c * (1.0 - x * x)).collect();
            let w: Vec<f64> = x.iter().map(|x| 2.0 * c * x).collect();
            (norm_u2(&x, &u, &w).unwrap() - 16.0 * c * c / 15.0).abs()
        };
        let (e1, e2) = (err(20), err(40));
        assert!(e1 / e2 > 12.0, "observed ratio {}", e1 / e2);
    }

    #[test]
    fn norm_rejects_short_grid() {
        let x = [-1.0, 0.0, 0.5];
        assert!(norm_u2(&x, &[1.0; 3], &[0.0; 3]).is_err());
        assert!(norm_u2(&[-1.0, 1.0, 0.5, 1.0], &[1.0; 4], &[0.0; 4]).is_err());
    }

    proptest! {
        #[test]
        fn original_and_desingularized_agree(
            u in -0.99f64..0.0, w in -3.0f64..3.0, eps in 0.0f64..0.2, lam in 0.0f64..1.0
        ) {
            let p = ModelParams::new(eps, lam).unwrap();
            let o = rhs_original(0.0, StateOriginal { u, w }, &p).unwrap();
            let v = 1.0 + u;
            let d = rhs_desingularized(StateShifted { u: v, w, xi: 0.0 }, &p);
            let f = v.powi(4);
            prop_assert!((d.u - f * o.u).abs() <= 1e-12 * (1.0 + d.u.abs()));
            prop_assert!((d.w - f * o.w).abs() <= 1e-12 * (1.0 + d.w.abs()));
        }

        #[test]
        fn rescaled_matches_desingularized(
            u in 0.01f64..1.0, w in -3.0f64..0.0, eps in 0.001f64..0.1, lam in 0.01f64..1.0
        ) {
            // with w̃ = δw and dt = δ dτ the two fields coincide
            let p = ModelParams::new(eps, lam).unwrap();
            let delta = p.delta().unwrap();
            let s = StateShifted { u, w, xi: 0.0 };
            let d = rhs_desingularized(s, &p);
            let r = rhs_rescaled(s.to_rescaled(delta), &p).unwrap();
            prop_assert!((r.u - delta * d.u).abs() <= 1e-12 * (1.0 + r.u.abs()));
            prop_assert!((r.w - delta * delta * d.w).abs() <= 1e-12 * (1.0 + r.w.abs()));
            prop_assert!((r.xi - delta * d.xi).abs() <= 1e-12 * (1.0 + r.xi.abs()));
            let back = s.to_rescaled(delta).to_shifted(delta).unwrap();
            prop_assert!((back.w - w).abs() <= 1e-14 * w.abs());
        }

        #[test]
        fn delta_round_trip(eps in 0.0f64..1.0, lam in 1e-6f64..10.0) {
            let d = delta_of(eps, lam).unwrap();
            prop_assume!(d > 0.0);
            let l = lambda_of(eps, d).unwrap();
            prop_assert!((l - lam).abs() <= 1e-14 * lam * 4.0);
        }
    }
}
