//! Acceptance criteria. Every test writes one `PASS`/`FAIL` line straight to
//! stderr (bypassing libtest capture) and then asserts.

use std::io::Write;
use std::time::{Duration, Instant};

use mems_fold::asymptotics;
use mems_fold::charts;
use mems_fold::continuation::{self, ContinuationOptions, FoldKind};
use mems_fold::integrate::Options;
use mems_fold::shooting::{self, ShootingOptions};
use mems_fold::singular;
use mems_fold::stability::{self, Stability};
use mems_fold::ModelParams;

fn report(n: u32, name: &str, pass: bool, detail: String) {
    let line = format!(
        "criterion {n:>2} {:<28} {}  {detail}\n",
        name,
        if pass { "PASS" } else { "FAIL" }
    );
    let _ = std::io::stderr().write_all(line.as_bytes());
}

fn sopts() -> ShootingOptions {
    ShootingOptions::default()
}

/// θ of the minimum for the solutions at `(ε, λ)`, in increasing norm.
fn solutions(eps: f64, lambda: f64) -> Vec<shooting::Solution> {
    let p = ModelParams::new(eps, lambda).unwrap();
    shooting::find_solutions_with(&p, 64, &sopts()).unwrap()
}

// Closed form of the ε = 0 type III time map:
// √(2λ) = a^{3/2} (S√(1+S²) + asinh S), S = √(1/a − 1).
fn type3_lambda_exact(a: f64) -> f64 {
    let s = (1.0 / a - 1.0).sqrt();
    let g = a.powf(1.5) * (s * (1.0 + s * s).sqrt() + s.asinh());
    g * g / 2.0
}

#[test]
fn c01_s_shape_and_fold_count() {
    let t0 = Instant::now();
    let b = continuation::compute_branch(0.05, &ContinuationOptions::default()).unwrap();
    let lower = b.folds.iter().find(|f| f.kind == FoldKind::Lower).map(|f| f.lambda_fold);
    let upper = b.folds.iter().find(|f| f.kind == FoldKind::Upper).map(|f| f.lambda_fold);
    let flagged = b.points.iter().filter(|p| p.is_fold).count();
    let (lo, hi) = (lower.unwrap_or(f64::NAN), upper.unwrap_or(f64::NAN));
    let mid = solutions(0.05, 0.5 * (lo + hi)).len();
    let below = solutions(0.05, 0.5 * lo).len();
    let above = solutions(0.05, 0.5 * (hi + 1.0)).len();
    let elapsed = t0.elapsed();
    let pass = b.folds.len() == 2
        && flagged == 2
        && lo < hi
        && mid == 3
        && below == 1
        && above == 1
        && elapsed < Duration::from_secs(60);
    report(
        1,
        "S-shape, two folds",
        pass,
        format!(
            "folds={} lambda_lower={lo:.10} lambda_upper={hi:.10} counts(below,mid,above)=({below},{mid},{above}) {:.1}s",
            b.folds.len(),
            elapsed.as_secs_f64()
        ),
    );
    assert!(pass);
}

#[test]
fn c02_fold_asymptotics() {
    let t0 = Instant::now();
    let eps = [0.05, 0.02, 0.01, 0.005];
    let rows = continuation::fold_report(&eps, &ContinuationOptions::default()).unwrap();
    let ratios: Vec<f64> = rows
        .iter()
        .map(|r| r.abs_error.unwrap_or(f64::NAN) / (r.eps * r.eps))
        .collect();
    // least-squares slope of the ratio against ln(1/ε)
    let xs: Vec<f64> = eps.iter().map(|e| -e.ln()).collect();
    let (mx, my) = (
        xs.iter().sum::<f64>() / 4.0,
        ratios.iter().sum::<f64>() / 4.0,
    );
    let trend = xs.iter().zip(&ratios).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>()
        / xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
    let elapsed = t0.elapsed();
    let bounded = ratios.iter().all(|r| r.is_finite() && *r <= 10.0);
    let pass = bounded && trend <= 0.0 && elapsed < Duration::from_secs(300);
    report(
        2,
        "lower fold vs expansion",
        pass,
        format!("|err|/eps^2 = {ratios:.4?} trend per unit ln(1/eps) = {trend:+.3} {:.1}s", elapsed.as_secs_f64()),
    );
    assert!(pass);
}

#[test]
fn c03_upper_branch_norm() {
    let t0 = Instant::now();
    let lambda = 0.5;
    let mut ratios = Vec::new();
    for eps in [0.01, 0.005, 0.002] {
        let sols = solutions(eps, lambda);
        let num = sols.last().unwrap().profile.norm2;
        let asym = asymptotics::norm_upper(eps, lambda).unwrap();
        ratios.push((num - asym).abs() / (eps.powf(1.5) * eps.ln().abs()));
    }
    let elapsed = t0.elapsed();
    let pass = ratios.iter().all(|r| *r <= 1.0) && elapsed < Duration::from_secs(60);
    report(
        3,
        "upper-branch norm",
        pass,
        format!("|err|/(eps^1.5 |ln eps|) = {ratios:.4?} (C = 1) {:.1}s", elapsed.as_secs_f64()),
    );
    assert!(pass);
}

#[test]
fn c04_point_b() {
    let analytic = singular::type2_orbit().norm2;
    let opts = ContinuationOptions {
        lambda_min: 1e-5,
        annotate: false,
        ..ContinuationOptions::default()
    };
    let b = continuation::compute_branch(0.0, &opts).unwrap();
    // traced point nearest λ = 1e-4 past the fold, polished there
    let fold = b.folds[0].index;
    let near = b.points[fold..]
        .iter()
        .min_by(|p, q| (p.lambda.ln() - 1e-4f64.ln()).abs().total_cmp(&(q.lambda.ln() - 1e-4f64.ln()).abs()))
        .unwrap();
    let (_, prof) = continuation::solve_near(0.0, 1e-4, near.theta, &sopts()).unwrap();
    let gap = (prof.norm2 - 2.0 / 3.0).abs();
    let pass = (analytic - 2.0 / 3.0).abs() <= 1e-15 && gap <= 1e-3;
    report(
        4,
        "point B",
        pass,
        format!("type II norm = {analytic:.16} ; eps=0 upper branch at lambda=1e-4: norm = {:.9} (gap {gap:.2e})", prof.norm2),
    );
    assert!(pass);
}

#[test]
fn c05_k2_first_integral() {
    let o = Options::with_tol(1e-10, 1e-10);
    let w = -2.0 / 3f64.sqrt();
    let mut worst: f64 = 0.0;
    let mut n = 0;
    // both sides of the separatrix: turning and saddle-passing orbits
    for dw in [-0.1, -1e-2, 1e-3, 1e-2, 0.1] {
        for eps in [1e-3, 1e-2] {
            let (u2, w2) = charts::sigma2_entry(w + dw, eps, 0.1).unwrap();
            // first integral w²/2 + 1/u − 1/(3u³)
            let h = w2 * w2 / 2.0 + 1.0 / u2 - 1.0 / (3.0 * u2.powi(3));
            assert!((charts::hamiltonian_k2(u2, w2).unwrap() - h).abs() <= 1e-15);
            let p = charts::k2_passage(u2, w2, 1e6, &o).unwrap();
            worst = worst.max(p.h_drift);
            n += 1;
        }
    }
    let pass = worst <= 1e-8;
    report(5, "K2 first integral", pass, format!("max relative drift over {n} orbits = {worst:.2e}"));
    assert!(pass);
}

#[test]
fn c06_saddle_spectrum() {
    let j = charts::k2_jacobian(1.0, 0.0, 1e-6).unwrap();
    let (a, b) = charts::eig2(&j).unwrap();
    let (lo, hi) = (a.min(b), a.max(b));
    let r2 = 2f64.sqrt();
    let err = (lo + r2).abs().max((hi - r2).abs());
    let pass = err <= 1e-10;
    report(6, "saddle spectrum", pass, format!("eigenvalues = ({lo:.15}, {hi:.15}), error {err:.1e}"));
    assert!(pass);
}

#[test]
fn c07_xi_out_switchback() {
    let t0 = Instant::now();
    let w = -2.0 / 3f64.sqrt();
    let delta = 1.0;
    let ratios: Vec<f64> = [1e-2, 1e-3, 1e-4]
        .iter()
        .map(|&eps| {
            let t = charts::transition_k1(w, eps, delta, 0.1).unwrap();
            let asym = asymptotics::xi1_out_expansion(delta, eps).unwrap();
            (t.xi1_out - asym) / (delta * eps)
        })
        .collect();
    let max = ratios.iter().cloned().fold(f64::MIN, f64::max);
    let min = ratios.iter().cloned().fold(f64::MAX, f64::min);
    let spread = (max - min) / min.abs().max(max.abs());
    let elapsed = t0.elapsed();
    let pass = ratios.iter().all(|r| r.is_finite()) && spread <= 0.05 && elapsed < Duration::from_secs(30);
    report(
        7,
        "xi1_out switchback",
        pass,
        format!("residual/(delta eps) = {ratios:.4?} spread {:.2}% {:.2}s", 100.0 * spread, elapsed.as_secs_f64()),
    );
    assert!(pass);
}

#[test]
fn c08_small_lambda_slope() {
    let mut cs = Vec::new();
    let mut oracle_gap: f64 = 0.0;
    for lambda in [1e-2, 1e-3, 1e-4] {
        let sols = solutions(0.0, lambda);
        let w0 = sols.iter().map(|s| s.profile.w0).fold(f64::INFINITY, f64::min);
        cs.push((w0 - (-1.0 + lambda * lambda.ln())).abs() / lambda);
        // first integral: w0 = −√(2λ(1/a − 1)) with a the touchdown-side root
        // of the exact time map, found by bisection
        let (mut lo, mut hi) = (1e-12f64, 0.3f64);
        for _ in 0..200 {
            let m = (lo * hi).sqrt();
            if type3_lambda_exact(m) < lambda {
                lo = m;
            } else {
                hi = m;
            }
        }
        let a = (lo * hi).sqrt();
        let w_exact = -(2.0 * lambda * (1.0 / a - 1.0)).sqrt();
        oracle_gap = oracle_gap.max((w0 - w_exact).abs());
    }
    let max = cs.iter().cloned().fold(f64::MIN, f64::max);
    let min = cs.iter().cloned().fold(f64::MAX, f64::min);
    let pass = max <= 2.0 && (max - min) / max <= 0.25 && oracle_gap <= 1e-6;
    report(
        8,
        "small-lambda slope law",
        pass,
        format!("C = {cs:.4?} (C <= 2, spread <= 25%), shooting vs exact w0 gap {oracle_gap:.1e}"),
    );
    assert!(pass);
}

#[test]
fn c09_oracle_equivalence() {
    let grid: Vec<f64> = (0..50).map(|i| 1e-4 * (0.9e4f64).powf(i as f64 / 49.0)).collect();
    let quad = singular::type3_branch(&grid);
    let mut worst: f64 = 0.0;
    let mut guess = 0.2;
    for (a, q) in grid.iter().zip(quad) {
        let q = q.unwrap();
        let shot = continuation::lambda_at_theta(0.0, a.ln(), guess, &sopts()).unwrap();
        let prof = shooting::profile_from_shot(&shot).unwrap();
        guess = shot.lambda;
        worst = worst.max((shot.lambda - q.lambda).abs()).max((prof.norm2 - q.norm2).abs());
    }
    let quad_star = singular::lambda_star0().unwrap().lambda;
    let b = continuation::compute_branch(
        0.0,
        &ContinuationOptions {
            annotate: false,
            ..ContinuationOptions::default()
        },
    )
    .unwrap();
    let shoot_star = b.folds.iter().find(|f| f.kind == FoldKind::Upper).unwrap().lambda_fold;
    // golden-section maximum of the closed-form time map
    let (mut lo, mut hi) = (1e-3f64, 0.9f64);
    let r = (5f64.sqrt() - 1.0) / 2.0_f64;
    for _ in 0..200 {
        let (c, d) = (hi - r * (hi - lo), lo + r * (hi - lo));
        if type3_lambda_exact(c) > type3_lambda_exact(d) {
            hi = d;
        } else {
            lo = c;
        }
    }
    let exact_star = type3_lambda_exact(0.5 * (lo + hi));
    let star_gap = (quad_star - shoot_star).abs().max((quad_star - exact_star).abs());
    let pass = worst <= 1e-6 && star_gap <= 1e-6 && (exact_star - 0.35).abs() < 1e-3;
    report(
        9,
        "quadrature vs shooting",
        pass,
        format!(
            "max (lambda, norm) gap over 50 points = {worst:.1e}; lambda*0 quad {quad_star:.12} shoot {shoot_star:.12} exact {exact_star:.12}"
        ),
    );
    assert!(pass);
}

#[test]
fn c10_fold_slope() {
    let eps = 0.01;
    let at = asymptotics::lambda_star_lower(eps).unwrap();
    let slope = continuation::upper_slope_at(eps, at, 1e-6, &sopts()).unwrap();
    let expected = asymptotics::fold_slope(eps).unwrap();
    let rel = (slope - expected).abs() / expected;
    let pass = rel <= 0.2;
    report(
        10,
        "fold slope",
        pass,
        format!("d|u|^2/dlambda at lambda = {at:.7}: {slope:.3} vs {expected:.3} ({:.1}%)", 100.0 * rel),
    );
    assert!(pass);
}

#[test]
fn c11_bifurcation_minimizer() {
    let mut worst: f64 = 0.0;
    for eps in [1e-2, 1e-3] {
        let exact = 2.0 * 2f64.sqrt() / 3.0 * eps;
        worst = worst.max((asymptotics::bifeq_golden(eps).unwrap() - exact).abs() / exact);
    }
    let pass = worst <= 1e-12;
    report(11, "bifurcation minimizer", pass, format!("max relative error {worst:.1e}"));
    assert!(pass);
}

#[test]
fn c12_stability_pattern() {
    let eps = 0.05;
    let b = continuation::compute_branch(
        eps,
        &ContinuationOptions {
            annotate: false,
            ..ContinuationOptions::default()
        },
    )
    .unwrap();
    let lo = b.folds.iter().find(|f| f.kind == FoldKind::Lower).unwrap().lambda_fold;
    let hi = b.folds.iter().find(|f| f.kind == FoldKind::Upper).unwrap().lambda_fold;
    let lambda = 0.5 * (lo + hi);
    let p = ModelParams::new(eps, lambda).unwrap();
    let sols = solutions(eps, lambda);
    let labels: Vec<Stability> = sols
        .iter()
        .map(|s| stability::classify_stability(&s.profile, &p))
        .collect();
    // a coarser eigenproblem must agree in sign
    let coarse: Vec<Stability> = sols
        .iter()
        .map(|s| stability::classify_with_grid(&s.profile, &p, 801))
        .collect();
    let want = [Stability::Stable, Stability::Unstable, Stability::Stable];
    let pass = labels == want && coarse == want;
    report(12, "stability pattern", pass, format!("lambda = {lambda:.6}: {labels:?}"));
    assert!(pass);
}
