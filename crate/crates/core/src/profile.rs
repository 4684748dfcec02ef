//! Sampled solutions on `[−1, 1]`.

use crate::error::{domain, Result};
use crate::model::{norm_u2, ModelParams};

/// A solution sampled on `[−1, 1]` in original variables.
#[derive(Debug, Clone, serde::Serialize)]
pub struct SolutionProfile {
    pub grid: Vec<f64>,
    /// Deflection `u`, in `(−1, 0]`.
    pub u: Vec<f64>,
    /// Slope `u'`.
    pub w: Vec<f64>,
    pub params: ModelParams,
    pub norm2: f64,
    /// Slope at `x = −1`.
    pub w0: f64,
}

impl SolutionProfile {
    /// Mirror samples of the left half `x ∈ [−1, 0]` (increasing, ending at
    /// 0) to the full interval and compute the norm.
    pub fn from_half(params: ModelParams, x: &[f64], u: &[f64], w: &[f64]) -> Result<Self> {
        let n = x.len();
        if n < 2 || u.len() != n || w.len() != n {
            return domain("half profile needs matching samples");
        }
        if (x[0] + 1.0).abs() > 1e-12 || x[n - 1].abs() > 1e-12 {
            return domain(format!("half grid [{}, {}] is not [-1, 0]", x[0], x[n - 1]));
        }
        let mut grid = Vec::with_capacity(2 * n - 1);
        let mut uu = Vec::with_capacity(2 * n - 1);
        let mut ww = Vec::with_capacity(2 * n - 1);
        grid.push(-1.0);
        uu.push(u[0]);
        ww.push(w[0]);
        grid.extend_from_slice(&x[1..n - 1]);
        uu.extend_from_slice(&u[1..n - 1]);
        ww.extend_from_slice(&w[1..n - 1]);
        grid.push(0.0);
        uu.push(u[n - 1]);
        ww.push(0.0);
        for i in (0..n - 1).rev() {
            grid.push(-x[i]);
            uu.push(u[i]);
            ww.push(-w[i]);
        }
        *grid.last_mut().unwrap() = 1.0;
        let ushift: Vec<f64> = uu.iter().map(|u| 1.0 + u).collect();
        let norm2 = norm_u2(&grid, &ushift, &ww)?;
        Ok(Self {
            w0: ww[0],
            grid,
            u: uu,
            w: ww,
            params,
            norm2,
        })
    }

    /// A profile whose norm is known in closed form.
    pub fn with_norm(
        params: ModelParams,
        grid: Vec<f64>,
        u: Vec<f64>,
        w: Vec<f64>,
        norm2: f64,
    ) -> Result<Self> {
        let n = grid.len();
        if n < 2 || u.len() != n || w.len() != n {
            return domain("profile needs matching samples");
        }
        Ok(Self {
            w0: w[0],
            grid,
            u,
            w,
            params,
            norm2,
        })
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    /// `min u` over the samples.
    pub fn u_min(&self) -> f64 {
        self.u.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// `(u, w)` at `x`: cubic Hermite in `u` (using `w` as its derivative),
    /// linear in `w`.
    pub fn sample(&self, x: f64) -> (f64, f64) {
        let g = &self.grid;
        let n = g.len();
        let x = x.clamp(g[0], g[n - 1]);
        let i = g.partition_point(|&t| t <= x).clamp(1, n - 1) - 1;
        let h = g[i + 1] - g[i];
        let s = (x - g[i]) / h;
        let (u0, u1, d0, d1) = (self.u[i], self.u[i + 1], self.w[i], self.w[i + 1]);
        let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
        let h10 = s * (1.0 - s) * (1.0 - s);
        let h01 = s * s * (3.0 - 2.0 * s);
        let h11 = s * s * (s - 1.0);
        let u = h00 * u0 + h10 * h * d0 + h01 * u1 + h11 * h * d1;
        let w = d0 + s * (d1 - d0);
        (u, w)
    }

    /// `max |u(x) − u(−x)|` over the samples.
    pub fn symmetry_error(&self) -> f64 {
        self.grid
            .iter()
            .zip(&self.u)
            .map(|(&x, &u)| (u - self.sample(-x).0).abs())
            .fold(0.0, f64::max)
    }

    /// Largest mismatch of `w' = λ(1+u)⁻²[1 − ε²(1+u)⁻²]` over the grid
    /// cells, measured as `|Δw − ∫f| / h` with Simpson's rule on each cell.
    pub fn bvp_residual(&self) -> f64 {
        let (eps, lam) = (self.params.eps, self.params.lambda);
        let f = |u: f64| {
            let v = 1.0 + u;
            let i2 = 1.0 / (v * v);
            lam * i2 * (1.0 - eps * eps * i2)
        };
        let mut worst: f64 = 0.0;
        for i in 0..self.grid.len() - 1 {
            let (a, b) = (self.grid[i], self.grid[i + 1]);
            let h = b - a;
            if h <= 0.0 {
                continue;
            }
            let um = self.sample(0.5 * (a + b)).0;
            let integral = h / 6.0 * (f(self.u[i]) + 4.0 * f(um) + f(self.u[i + 1]));
            let r = ((self.w[i + 1] - self.w[i]) - integral).abs() / h;
            worst = worst.max(r);
        }
        worst
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cosine(n: usize) -> SolutionProfile {
        // u = -c cos(πx/2) is not a solution but exercises the plumbing
        let c = 0.3;
        let k = std::f64::consts::FRAC_PI_2;
        let x: Vec<f64> = (0..=n).map(|i| -1.0 + i as f64 / n as f64).collect();
        let u: Vec<f64> = x.iter().map(|x| -c * (k * x).cos()).collect();
        let w: Vec<f64> = x.iter().map(|x| c * k * (k * x).sin()).collect();
        SolutionProfile::from_half(ModelParams::new(0.0, 0.1).unwrap(), &x, &u, &w).unwrap()
    }

    #[test]
    fn mirrored_profile_is_even() {
        let p = cosine(50);
        assert_eq!(p.grid[0], -1.0);
        assert_eq!(*p.grid.last().unwrap(), 1.0);
        assert!(p.symmetry_error() < 1e-14);
        assert!(p.grid.windows(2).all(|w| w[1] > w[0]));
        assert!((p.norm2 - 0.09).abs() < 1e-7);
        assert!((p.w0 - p.w[0]).abs() == 0.0 && p.w0 < 0.0);
    }

    #[test]
    fn hermite_sample_is_accurate() {
        let p = cosine(50);
        let k = std::f64::consts::FRAC_PI_2;
        for x in [-0.987, -0.5001, 0.003, 0.77] {
            let (u, _) = p.sample(x);
            assert!((u + 0.3 * (k * x).cos()).abs() < 1e-8);
        }
    }

    #[test]
    fn rejects_bad_half_grid() {
        let p = ModelParams::new(0.0, 0.1).unwrap();
        assert!(SolutionProfile::from_half(p, &[-1.0, -0.5], &[0.0, -0.1], &[-1.0, 0.0]).is_err());
    }
}
