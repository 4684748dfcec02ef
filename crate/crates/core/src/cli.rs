//! `mems-fold` command line.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage error.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::asymptotics;
use crate::charts;
use crate::config::{parse_list, RunConfig};
use crate::continuation::{self, ContinuationOptions};
use crate::error::Error;
use crate::export::{self, CompareRow};
use crate::model::ModelParams;
use crate::shooting;
use crate::singular;
use crate::stability;

#[derive(Debug, Parser)]
#[command(name = "mems-fold", version, about = "Steady states and folds of the regularized MEMS equation")]
struct Cli {
    /// Key-value config file; flags override its values.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// List the solutions at one parameter point.
    Solve(SolveArgs),
    /// Trace the solution curve and write it as CSV.
    Branch {
        #[arg(long, allow_hyphen_values = true)]
        eps: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Lower and upper folds for several ε, as JSON.
    Folds {
        /// Comma-separated, e.g. 0.05,0.02,0.01.
        #[arg(long, default_value = "")]
        eps_list: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// ε = 0 singular solutions; without --type, the whole bifurcation set.
    Singular {
        #[arg(long = "type", value_enum)]
        kind: Option<Kind>,
        #[arg(long, allow_hyphen_values = true)]
        delta: Option<f64>,
        #[arg(long)]
        grid: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Blow-up chart checks.
    Charts {
        #[command(subcommand)]
        action: ChartsCmd,
    },
    /// Numerics against the asymptotic expansions, as CSV.
    Compare(CompareArgs),
    /// Render a branch CSV as SVG.
    Plot {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
struct SolveArgs {
    #[arg(long, allow_hyphen_values = true)]
    eps: f64,
    #[arg(long, allow_hyphen_values = true, required_unless_present = "delta", conflicts_with = "delta")]
    lambda: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    delta: Option<f64>,
    /// Print every solution rather than only the smallest one.
    #[arg(long)]
    all: bool,
    /// Profile CSV of the printed solutions.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum ChartsCmd {
    /// Run the invariant suite; exits 1 if any invariant fails.
    Check {
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Kind {
    #[value(name = "I")]
    One,
    #[value(name = "II")]
    Two,
    #[value(name = "III")]
    Three,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum What {
    LambdaStar,
    NormUpper,
    XiOut,
    Slope,
}

#[derive(Debug, Args)]
struct CompareArgs {
    #[arg(long, value_enum)]
    what: What,
    #[arg(long, allow_hyphen_values = true)]
    eps: Option<f64>,
    #[arg(long)]
    eps_list: Option<String>,
    /// λ for norm-upper (default 0.5) and slope (default 1e-2, 1e-3, 1e-4).
    #[arg(long, allow_hyphen_values = true)]
    lambda: Option<f64>,
    /// δ for xi-out (default 1).
    #[arg(long, allow_hyphen_values = true)]
    delta: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

enum Failure {
    Usage(String),
    Runtime(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Domain(_) | Error::Config { .. } => Failure::Usage(e.to_string()),
            e => Failure::Runtime(e),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Runtime(Error::Io(e))
    }
}

type Outcome = std::result::Result<i32, Failure>;

/// Parse `args` (program name first) and run; returns the exit code.
pub fn run_from<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = out.write_all(text.as_bytes());
                    0
                }
                _ => {
                    let _ = err.write_all(text.as_bytes());
                    2
                }
            };
        }
    };
    match run(cli, out, err) {
        Ok(code) => code,
        Err(Failure::Usage(m)) => {
            let _ = writeln!(err, "error: {m}");
            2
        }
        Err(Failure::Runtime(e)) => {
            let _ = writeln!(err, "error: {e}");
            1
        }
    }
}

pub fn main_exit_code() -> i32 {
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    let mut o = stdout.lock();
    let mut e = stderr.lock();
    let code = run_from(std::env::args_os(), &mut o, &mut e);
    let _ = o.flush();
    code
}

fn run(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> Outcome {
    let cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    match cli.cmd {
        Command::Solve(a) => cmd_solve(&cfg, a, out),
        Command::Branch { eps, out: path } => cmd_branch(&cfg, eps, pick(path, &cfg), out, err),
        Command::Folds { eps_list, out: path } => cmd_folds(&cfg, &eps_list, pick(path, &cfg), out),
        Command::Singular { kind, delta, grid, out: path } => {
            cmd_singular(&cfg, kind, delta, grid, pick(path, &cfg), out)
        }
        Command::Charts { action: ChartsCmd::Check { out: path } } => {
            cmd_charts_check(&cfg, pick(path, &cfg), out)
        }
        Command::Compare(a) => {
            let path = pick(a.out.clone(), &cfg);
            cmd_compare(&cfg, a, path, out)
        }
        Command::Plot { input, out: path } => cmd_plot(&cfg, &input, pick(path, &cfg), out),
    }
}

fn pick(flag: Option<PathBuf>, cfg: &RunConfig) -> Option<PathBuf> {
    flag.or_else(|| cfg.out.clone())
}

/// Run `f` on the file at `path`, or on stdout when there is none.
fn emit<F>(path: Option<&Path>, out: &mut dyn Write, f: F) -> std::result::Result<(), Failure>
where
    F: FnOnce(&mut dyn Write) -> crate::Result<()>,
{
    match path {
        Some(p) => {
            let mut w = BufWriter::new(File::create(p)?);
            f(&mut w).map_err(Failure::Runtime)?;
            w.flush()?;
        }
        None => f(out).map_err(Failure::Runtime)?,
    }
    Ok(())
}

fn json_line(out: &mut dyn Write, v: &serde_json::Value) -> std::result::Result<(), Failure> {
    serde_json::to_writer_pretty(&mut *out, v).map_err(Error::from).map_err(Failure::Runtime)?;
    writeln!(out)?;
    Ok(())
}

fn continuation_opts(cfg: &RunConfig, eps: f64) -> ContinuationOptions {
    let mut o = cfg.continuation();
    if eps == 0.0 {
        o.lambda_min = 1e-6;
    }
    o
}

fn cmd_solve(cfg: &RunConfig, a: SolveArgs, out: &mut dyn Write) -> Outcome {
    let p = match (a.lambda, a.delta) {
        (Some(l), _) => ModelParams::new(a.eps, l)?,
        (None, Some(d)) => ModelParams::from_delta(a.eps, d)?,
        (None, None) => return Err(Failure::Usage("one of --lambda, --delta is required".into())),
    };
    let sols = shooting::find_solutions_with(&p, cfg.seeds, &cfg.shooting())?;
    let shown = if a.all { &sols[..] } else { &sols[..sols.len().min(1)] };
    let list: Vec<serde_json::Value> = shown
        .iter()
        .map(|s| {
            let st = stability::classify_with_grid(&s.profile, &p, cfg.stability_grid);
            serde_json::json!({
                "w0": s.profile.w0,
                "norm2": s.profile.norm2,
                "u_min": s.profile.u_min(),
                "stability": st.to_string(),
            })
        })
        .collect();
    json_line(
        out,
        &serde_json::json!({
            "eps": p.eps,
            "lambda": p.lambda,
            "delta": p.delta(),
            "count": sols.len(),
            "solutions": list,
        }),
    )?;
    if let Some(path) = &a.out {
        let profiles: Vec<_> = shown.iter().map(|s| s.profile.clone()).collect();
        let mut w = BufWriter::new(File::create(path)?);
        export::write_profiles_csv(&mut w, &profiles).map_err(Failure::Runtime)?;
        w.flush()?;
    }
    Ok(0)
}

fn cmd_branch(
    cfg: &RunConfig,
    eps: f64,
    path: Option<PathBuf>,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Outcome {
    let b = continuation::compute_branch(eps, &continuation_opts(cfg, eps))?;
    if let Some(d) = &b.diagnostic {
        writeln!(err, "warning: {d}")?;
    }
    let rows = export::branch_rows(&format!("eps={eps}"), &b);
    emit(path.as_deref(), out, |w| export::write_branch_csv(w, &rows))?;
    if path.is_some() {
        let folds: Vec<_> = b
            .folds
            .iter()
            .map(|f| {
                serde_json::json!({
                    "kind": format!("{:?}", f.kind).to_lowercase(),
                    "lambda": f.lambda_fold,
                    "w0": f.w0_fold,
                    "norm2": f.norm2_fold,
                })
            })
            .collect();
        json_line(out, &serde_json::json!({ "eps": eps, "points": rows.len(), "folds": folds }))?;
    }
    Ok(0)
}

fn cmd_folds(cfg: &RunConfig, list: &str, path: Option<PathBuf>, out: &mut dyn Write) -> Outcome {
    let eps = parse_list(list)?;
    let rows = continuation::fold_report(&eps, &cfg.continuation())?;
    emit(path.as_deref(), out, |w| export::write_fold_json(w, &rows))?;
    Ok(if rows.iter().any(|r| r.error.is_some()) { 1 } else { 0 })
}

fn cmd_singular(
    cfg: &RunConfig,
    kind: Option<Kind>,
    delta: Option<f64>,
    grid: Option<usize>,
    path: Option<PathBuf>,
    out: &mut dyn Write,
) -> Outcome {
    let grid = grid.unwrap_or(cfg.singular_grid);
    if grid < 2 {
        return Err(Failure::Usage(format!("--grid must be at least 2, got {grid}")));
    }
    let orbit = match kind {
        None => {
            let rows = singular::singular_diagram(grid)?;
            emit(path.as_deref(), out, |w| export::write_singular_csv(w, &rows))?;
            return Ok(0);
        }
        Some(Kind::Three) => {
            let mut rows = Vec::with_capacity(grid);
            for p in singular::type3_branch(&singular::type3_grid(grid)) {
                let p = p.map_err(Failure::Runtime)?;
                rows.push(singular::DiagramRow {
                    kind: "B3",
                    param: p.u_min,
                    lambda: p.lambda,
                    norm_u2: p.norm2,
                });
            }
            emit(path.as_deref(), out, |w| export::write_singular_csv(w, &rows))?;
            if path.is_some() {
                let top = singular::lambda_star0().map_err(Failure::Runtime)?;
                json_line(
                    out,
                    &serde_json::json!({
                        "kind": "III",
                        "points": rows.len(),
                        "lambda_star0": top.lambda,
                        "u_min_at_fold": top.u_min,
                        "norm2_at_fold": top.norm2,
                    }),
                )?;
            }
            return Ok(0);
        }
        Some(Kind::Two) => singular::type2_orbit(),
        Some(Kind::One) => {
            let d = delta.ok_or_else(|| Failure::Usage("--type I needs --delta".into()))?;
            singular::type1_orbit(d)?
        }
    };
    if path.is_some() {
        emit(path.as_deref(), out, |w| {
            export::write_profiles_csv(w, std::slice::from_ref(&orbit.profile))
        })?;
    }
    json_line(
        out,
        &serde_json::json!({
            "kind": format!("{:?}", orbit.kind),
            "delta": orbit.delta,
            "norm2": orbit.norm2,
            "breakpoints": orbit.breakpoints,
        }),
    )?;
    Ok(0)
}

fn cmd_charts_check(cfg: &RunConfig, path: Option<PathBuf>, out: &mut dyn Write) -> Outcome {
    let report = charts::invariant_suite(cfg.rho, cfg.sigma)?;
    emit(path.as_deref(), out, |w| {
        serde_json::to_writer_pretty(&mut *w, &report)?;
        writeln!(w)?;
        Ok(())
    })?;
    Ok(if report.all_invariants_pass { 0 } else { 1 })
}

const DEFAULT_EPS: [f64; 4] = [0.05, 0.02, 0.01, 0.005];

fn eps_values(a: &CompareArgs, default: &[f64]) -> std::result::Result<Vec<f64>, Failure> {
    let mut v = Vec::new();
    if let Some(e) = a.eps {
        v.push(e);
    }
    if let Some(l) = &a.eps_list {
        v.extend(parse_list(l)?);
    }
    if a.eps.is_none() && a.eps_list.is_none() {
        v.extend_from_slice(default);
    }
    Ok(v)
}

/// Largest-norm solution at `(ε, λ)`.
fn upper_norm(cfg: &RunConfig, eps: f64, lambda: f64) -> crate::Result<f64> {
    let p = ModelParams::new(eps, lambda)?;
    let sols = shooting::find_solutions_with(&p, cfg.seeds, &cfg.shooting())?;
    sols.last()
        .map(|s| s.profile.norm2)
        .ok_or_else(|| Error::Root(format!("no solution at eps = {eps}, lambda = {lambda}")))
}

/// Slope `w0` of the ε = 0 solution closest to touchdown.
fn touchdown_slope(cfg: &RunConfig, lambda: f64) -> crate::Result<f64> {
    let p = ModelParams::new(0.0, lambda)?;
    let sols = shooting::find_solutions_with(&p, cfg.seeds, &cfg.shooting())?;
    sols.iter()
        .map(|s| s.profile.w0)
        .reduce(f64::min)
        .ok_or_else(|| Error::Root(format!("no solution at eps = 0, lambda = {lambda}")))
}

fn row(what: &'static str, eps: f64, param: f64, numeric: f64, asymptotic: f64, scale: f64) -> CompareRow {
    let residual = numeric - asymptotic;
    CompareRow {
        what,
        eps,
        param,
        numeric,
        asymptotic,
        residual,
        scaled_residual: residual / scale,
    }
}

fn cmd_compare(cfg: &RunConfig, a: CompareArgs, path: Option<PathBuf>, out: &mut dyn Write) -> Outcome {
    let mut rows = Vec::new();
    match a.what {
        What::LambdaStar => {
            let eps = eps_values(&a, &DEFAULT_EPS)?;
            for r in continuation::fold_report(&eps, &cfg.continuation())? {
                let num = r.lambda_star_numeric.ok_or_else(|| {
                    Failure::Runtime(Error::Continuation(
                        r.error.unwrap_or_else(|| format!("no lower fold at eps = {}", r.eps)),
                    ))
                })?;
                rows.push(row("lambda-star", r.eps, 0.0, num, r.lambda_star_asymptotic, r.eps * r.eps));
            }
        }
        What::NormUpper => {
            let lambda = a.lambda.unwrap_or(0.5);
            for e in eps_values(&a, &[0.01, 0.005, 0.002])? {
                if !(e > 0.0) {
                    return Err(Failure::Usage(format!("norm-upper needs eps > 0, got {e}")));
                }
                let asym = asymptotics::norm_upper(e, lambda)?;
                let num = upper_norm(cfg, e, lambda)?;
                rows.push(row("norm-upper", e, lambda, num, asym, e.powf(1.5) * e.ln().abs()));
            }
        }
        What::XiOut => {
            let delta = a.delta.unwrap_or(1.0);
            let w = -2.0 / 3f64.sqrt();
            for e in eps_values(&a, &[1e-2, 1e-3, 1e-4])? {
                let asym = asymptotics::xi1_out_expansion(delta, e)?;
                let t = charts::transition_k1(w, e, delta, cfg.sigma)?;
                rows.push(row("xi-out", e, delta, t.xi1_out, asym, delta * e));
            }
        }
        What::Slope => {
            if a.eps.is_some_and(|e| e != 0.0) || a.eps_list.is_some() {
                return Err(Failure::Usage("slope is an eps = 0 comparison".into()));
            }
            let lambdas = match a.lambda {
                Some(l) => vec![l],
                None => vec![1e-2, 1e-3, 1e-4],
            };
            for l in lambdas {
                // two solutions exist only below the ε = 0 fold near 0.35
                if !(l > 0.0 && l < 0.35) {
                    return Err(Failure::Usage(format!("slope needs 0 < lambda < 0.35, got {l}")));
                }
                let num = touchdown_slope(cfg, l)?;
                rows.push(row("slope", 0.0, l, num, -1.0 + l * l.ln(), l));
            }
        }
    }
    emit(path.as_deref(), out, |w| export::write_compare_csv(w, &rows))?;
    Ok(0)
}

fn cmd_plot(cfg: &RunConfig, input: &Path, path: Option<PathBuf>, out: &mut dyn Write) -> Outcome {
    let rows = export::read_branch_csv(File::open(input)?).map_err(Failure::Runtime)?;
    let svg = export::plot_svg(&rows, cfg.plot_width, cfg.plot_height);
    emit(path.as_deref(), out, |w| {
        w.write_all(svg.as_bytes())?;
        Ok(())
    })?;
    Ok(0)
}
