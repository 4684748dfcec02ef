//! Run configuration: flat `key = value` files with `#` comments.

use std::path::PathBuf;

use crate::continuation::ContinuationOptions;
use crate::error::{Error, Result};
use crate::shooting::ShootingOptions;
use crate::stability::GRID_POINTS;

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct RunConfig {
    pub atol: f64,
    pub rtol: f64,
    /// Target for `|residual|` in root solves.
    pub root_tol: f64,
    pub event_tol: f64,
    pub rho: f64,
    pub sigma: f64,
    /// Seeds of the solution scan.
    pub seeds: usize,
    pub stability_grid: usize,
    pub h0: f64,
    pub h_max: f64,
    pub s_max: f64,
    pub singular_grid: usize,
    pub plot_width: u32,
    pub plot_height: u32,
    pub out: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let s = ShootingOptions::default();
        let c = ContinuationOptions::default();
        Self {
            atol: s.atol,
            rtol: s.rtol,
            root_tol: s.residual_tol,
            event_tol: s.event_tol,
            rho: 0.5,
            sigma: 0.1,
            seeds: 64,
            stability_grid: GRID_POINTS,
            h0: c.h0,
            h_max: c.h_max,
            s_max: c.s_max,
            singular_grid: 200,
            plot_width: 800,
            plot_height: 600,
            out: None,
        }
    }
}

fn positive(line: usize, key: &str, v: &str) -> Result<f64> {
    let x: f64 = v.parse().map_err(|_| Error::Config {
        line,
        msg: format!("{key}: '{v}' is not a number"),
    })?;
    if !(x > 0.0 && x.is_finite()) {
        return Err(Error::Config {
            line,
            msg: format!("{key} must be positive and finite, got {x}"),
        });
    }
    Ok(x)
}

fn unit(line: usize, key: &str, v: &str) -> Result<f64> {
    let x = positive(line, key, v)?;
    if x >= 1.0 {
        return Err(Error::Config {
            line,
            msg: format!("{key} must lie in (0, 1), got {x}"),
        });
    }
    Ok(x)
}

fn count<T: std::str::FromStr>(line: usize, key: &str, v: &str, min: u64) -> Result<T> {
    let n: u64 = v.parse().map_err(|_| Error::Config {
        line,
        msg: format!("{key}: '{v}' is not a non-negative integer"),
    })?;
    if n < min {
        return Err(Error::Config {
            line,
            msg: format!("{key} must be at least {min}, got {n}"),
        });
    }
    n.to_string().parse().map_err(|_| Error::Config {
        line,
        msg: format!("{key}: {n} is out of range"),
    })
}

impl RunConfig {
    /// Parse a config file body; keys absent from the text keep their
    /// defaults.
    pub fn parse(text: &str) -> Result<Self> {
        let mut c = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let (k, v) = body.split_once('=').ok_or_else(|| Error::Config {
                line,
                msg: format!("expected 'key = value', got '{body}'"),
            })?;
            let (k, v) = (k.trim(), v.trim());
            if v.is_empty() {
                return Err(Error::Config {
                    line,
                    msg: format!("{k} has no value"),
                });
            }
            match k {
                "atol" => c.atol = positive(line, k, v)?,
                "rtol" => c.rtol = positive(line, k, v)?,
                "root_tol" => c.root_tol = positive(line, k, v)?,
                "event_tol" => c.event_tol = positive(line, k, v)?,
                "rho" => c.rho = unit(line, k, v)?,
                "sigma" => c.sigma = unit(line, k, v)?,
                "seeds" => c.seeds = count(line, k, v, 16)?,
                "stability_grid" => c.stability_grid = count(line, k, v, 3)?,
                "h0" => c.h0 = positive(line, k, v)?,
                "h_max" => c.h_max = positive(line, k, v)?,
                "s_max" => c.s_max = positive(line, k, v)?,
                "singular_grid" => c.singular_grid = count(line, k, v, 2)?,
                "plot_width" => c.plot_width = count(line, k, v, 100)?,
                "plot_height" => c.plot_height = count(line, k, v, 100)?,
                "out" => c.out = Some(PathBuf::from(v)),
                _ => {
                    return Err(Error::Config {
                        line,
                        msg: format!("unknown key '{k}'"),
                    })
                }
            }
        }
        if c.h0 > c.h_max {
            return Err(Error::Config {
                line: 0,
                msg: format!("h0 = {} exceeds h_max = {}", c.h0, c.h_max),
            });
        }
        Ok(c)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn shooting(&self) -> ShootingOptions {
        ShootingOptions {
            atol: self.atol,
            rtol: self.rtol,
            event_tol: self.event_tol,
            residual_tol: self.root_tol,
            ..ShootingOptions::default()
        }
    }

    pub fn continuation(&self) -> ContinuationOptions {
        ContinuationOptions {
            h0: self.h0,
            h_max: self.h_max,
            s_max: self.s_max,
            stability_grid: self.stability_grid,
            shooting: self.shooting(),
            ..ContinuationOptions::default()
        }
    }
}

/// Comma-separated list of finite numbers, e.g. `0.05,0.02,0.01`. An empty
/// string gives an empty list.
pub fn parse_list(s: &str) -> Result<Vec<f64>> {
    let s = s.trim();
    if s.is_empty() {
        return Ok(Vec::new());
    }
    s.split(',')
        .map(|t| {
            let t = t.trim();
            match t.parse::<f64>() {
                Ok(x) if x.is_finite() => Ok(x),
                _ => Err(Error::Domain(format!("'{t}' is not a finite number"))),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn empty_text_gives_defaults() {
        assert_eq!(RunConfig::parse("").unwrap(), RunConfig::default());
        assert_eq!(RunConfig::parse("# nothing\n\n   \n").unwrap(), RunConfig::default());
    }

    #[test]
    fn keys_and_comments() {
        let c = RunConfig::parse("atol = 1e-9  # looser\nsigma=0.2\nout = runs/a.csv\nseeds = 32\n").unwrap();
        assert_eq!(c.atol, 1e-9);
        assert_eq!(c.sigma, 0.2);
        assert_eq!(c.seeds, 32);
        assert_eq!(c.out.as_deref(), Some(std::path::Path::new("runs/a.csv")));
        assert_eq!(c.shooting().atol, 1e-9);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let e = RunConfig::parse("atol = 1e-9\nbogus = 3\n").unwrap_err();
        assert!(matches!(e, Error::Config { line: 2, .. }), "{e}");
        assert!(matches!(RunConfig::parse("rtol = -1").unwrap_err(), Error::Config { line: 1, .. }));
        assert!(RunConfig::parse("rho = 1.5").is_err());
        assert!(RunConfig::parse("seeds = 3").is_err());
        assert!(RunConfig::parse("no equals sign").is_err());
        assert!(RunConfig::parse("atol =").is_err());
        assert!(RunConfig::parse("h0 = 0.1\nh_max = 0.05").is_err());
    }

    #[test]
    fn lists() {
        assert_eq!(parse_list("0.05, 0.02,0.01").unwrap(), vec![0.05, 0.02, 0.01]);
        assert!(parse_list("").unwrap().is_empty());
        assert!(parse_list("0.1,,0.2").is_err());
        assert!(parse_list("nan").is_err());
    }

    proptest! {
        #[test]
        fn parser_never_panics(s in "\\PC*") {
            let _ = RunConfig::parse(&s);
            let _ = parse_list(&s);
        }
    }
}
