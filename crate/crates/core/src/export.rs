//! File formats: branch and singular-set CSV, fold-report JSON, SVG plots.
//!
//! Floats are written with 17 significant digits, which round-trips every
//! `f64` exactly.

use std::fmt::Write as _;
use std::io::{Read, Write};

use crate::continuation::{Branch, FoldRow};
use crate::error::{Error, Result};
use crate::profile::SolutionProfile;
use crate::singular::DiagramRow;
use crate::stability::Stability;

pub const BRANCH_HEADER: [&str; 9] = [
    "branch_id", "idx", "eps", "lambda", "delta", "w0", "norm_u2", "stability", "is_fold",
];

pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn csv_err(e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        k => Error::Csv {
            line,
            msg: format!("{k:?}"),
        },
    }
}

/// One row of the branch CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchRow {
    pub branch_id: String,
    pub idx: usize,
    pub eps: f64,
    pub lambda: f64,
    pub delta: Option<f64>,
    pub w0: f64,
    pub norm_u2: f64,
    pub stability: Stability,
    pub is_fold: bool,
}

pub fn branch_rows(branch_id: &str, branch: &Branch) -> Vec<BranchRow> {
    branch
        .points
        .iter()
        .enumerate()
        .map(|(i, p)| BranchRow {
            branch_id: branch_id.to_string(),
            idx: i,
            eps: p.eps,
            lambda: p.lambda,
            delta: p.delta,
            w0: p.w0,
            norm_u2: p.norm2,
            stability: p.stability,
            is_fold: p.is_fold,
        })
        .collect()
}

pub fn write_branch_csv<W: Write>(out: W, rows: &[BranchRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(BRANCH_HEADER).map_err(csv_err)?;
    for r in rows {
        w.write_record([
            r.branch_id.clone(),
            r.idx.to_string(),
            fmt_f64(r.eps),
            fmt_f64(r.lambda),
            r.delta.map(fmt_f64).unwrap_or_default(),
            fmt_f64(r.w0),
            fmt_f64(r.norm_u2),
            r.stability.to_string(),
            u8::from(r.is_fold).to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn field_f64(rec: &csv::StringRecord, i: usize, line: usize) -> Result<f64> {
    let s = rec.get(i).unwrap_or("");
    s.trim().parse().map_err(|_| Error::Csv {
        line,
        msg: format!("column {}: '{s}' is not a number", BRANCH_HEADER[i]),
    })
}

/// Parse a branch CSV written by [`write_branch_csv`].
pub fn read_branch_csv<R: Read>(input: R) -> Result<Vec<BranchRow>> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let header = r.headers().map_err(csv_err)?.clone();
    if header.iter().map(str::trim).ne(BRANCH_HEADER) {
        return Err(Error::Csv {
            line: 1,
            msg: format!("unexpected header {:?}", header.iter().collect::<Vec<_>>()),
        });
    }
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(csv_err)?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let idx = rec.get(1).unwrap_or("").trim().parse().map_err(|_| Error::Csv {
            line,
            msg: "column idx is not an index".into(),
        })?;
        let delta = match rec.get(4).unwrap_or("").trim() {
            "" => None,
            _ => Some(field_f64(&rec, 4, line)?),
        };
        let stability = rec.get(7).unwrap_or("").trim().parse().map_err(|m| Error::Csv { line, msg: m })?;
        let is_fold = match rec.get(8).unwrap_or("").trim() {
            "0" => false,
            "1" => true,
            other => {
                return Err(Error::Csv {
                    line,
                    msg: format!("is_fold must be 0 or 1, got '{other}'"),
                })
            }
        };
        rows.push(BranchRow {
            branch_id: rec.get(0).unwrap_or("").to_string(),
            idx,
            eps: field_f64(&rec, 2, line)?,
            lambda: field_f64(&rec, 3, line)?,
            delta,
            w0: field_f64(&rec, 5, line)?,
            norm_u2: field_f64(&rec, 6, line)?,
            stability,
            is_fold,
        });
    }
    Ok(rows)
}

pub fn write_fold_json<W: Write>(mut out: W, rows: &[FoldRow]) -> Result<()> {
    serde_json::to_writer_pretty(&mut out, rows)?;
    writeln!(out)?;
    Ok(())
}

pub fn write_singular_csv<W: Write>(out: W, rows: &[DiagramRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["kind", "param", "lambda", "norm_u2"]).map_err(csv_err)?;
    for r in rows {
        w.write_record([r.kind.to_string(), fmt_f64(r.param), fmt_f64(r.lambda), fmt_f64(r.norm_u2)])
            .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Profiles as `solution,x,u,w`.
pub fn write_profiles_csv<W: Write>(out: W, profiles: &[SolutionProfile]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["solution", "x", "u", "w"]).map_err(csv_err)?;
    for (k, p) in profiles.iter().enumerate() {
        for i in 0..p.len() {
            w.write_record([k.to_string(), fmt_f64(p.grid[i]), fmt_f64(p.u[i]), fmt_f64(p.w[i])])
                .map_err(csv_err)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// One numeric-against-expansion comparison.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct CompareRow {
    pub what: &'static str,
    pub eps: f64,
    /// λ, δ, or unused (0), depending on `what`.
    pub param: f64,
    pub numeric: f64,
    pub asymptotic: f64,
    pub residual: f64,
    /// Residual divided by the order of the neglected remainder.
    pub scaled_residual: f64,
}

pub fn write_compare_csv<W: Write>(out: W, rows: &[CompareRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["what", "eps", "param", "numeric", "asymptotic", "residual", "scaled_residual"])
        .map_err(csv_err)?;
    for r in rows {
        w.write_record([
            r.what.to_string(),
            fmt_f64(r.eps),
            fmt_f64(r.param),
            fmt_f64(r.numeric),
            fmt_f64(r.asymptotic),
            fmt_f64(r.residual),
            fmt_f64(r.scaled_residual),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

/// Bifurcation diagram with λ ∈ [0, 1] across and ‖u‖² ∈ [0, 2] up: one
/// polyline per branch id, folds marked by circles.
pub fn plot_svg(rows: &[BranchRow], width: u32, height: u32) -> String {
    let (w, h) = (f64::from(width), f64::from(height));
    let (ml, mr, mt, mb) = (60.0, 20.0, 20.0, 50.0);
    let px = |l: f64| ml + l.clamp(0.0, 1.0) * (w - ml - mr);
    let py = |n: f64| h - mb - (n.clamp(0.0, 2.0) / 2.0) * (h - mt - mb);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<g stroke="black" stroke-width="1"><line x1="{:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}"/><line x1="{:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}"/></g>"#,
        px(0.0), py(0.0), px(1.0), py(0.0), px(0.0), py(0.0), px(0.0), py(2.0)
    );
    let _ = writeln!(s, r#"<g font-family="sans-serif" font-size="12" fill="black">"#);
    for i in 0..=5 {
        let l = i as f64 / 5.0;
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{l:.1}</text>"#,
            px(l),
            py(0.0) + 18.0
        );
    }
    for i in 0..=4 {
        let n = i as f64 / 2.0;
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{n:.1}</text>"#,
            px(0.0) - 6.0,
            py(n) + 4.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">λ</text>"#,
        px(0.5),
        h - 12.0
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{:.1}" text-anchor="middle" transform="rotate(-90 16 {:.1})">‖u‖²</text>"#,
        py(1.0),
        py(1.0)
    );
    let _ = writeln!(s, "</g>");

    let mut ids: Vec<&str> = Vec::new();
    for r in rows {
        if !ids.contains(&r.branch_id.as_str()) {
            ids.push(&r.branch_id);
        }
    }
    for (k, id) in ids.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let pts: Vec<String> = rows
            .iter()
            .filter(|r| r.branch_id == *id && r.norm_u2.is_finite())
            .map(|r| format!("{:.2},{:.2}", px(r.lambda), py(r.norm_u2)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            pts.join(" ")
        );
        for r in rows.iter().filter(|r| r.branch_id == *id && r.is_fold) {
            let _ = writeln!(
                s,
                r#"<circle cx="{:.2}" cy="{:.2}" r="4" fill="none" stroke="black"/>"#,
                px(r.lambda),
                py(r.norm_u2)
            );
        }
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Vec<BranchRow> {
        vec![
            BranchRow {
                branch_id: "0".into(),
                idx: 0,
                eps: 0.05,
                lambda: 0.1 + 1e-17,
                delta: Some((0.5f64).sqrt()),
                w0: -0.123_456_789_012_345_68,
                norm_u2: 1.0 / 3.0,
                stability: Stability::Stable,
                is_fold: false,
            },
            BranchRow {
                branch_id: "0".into(),
                idx: 1,
                eps: 0.0,
                lambda: 0.35,
                delta: None,
                w0: -1.0,
                norm_u2: 0.9,
                stability: Stability::Unknown,
                is_fold: true,
            },
        ]
    }

    #[test]
    fn branch_csv_round_trips_exactly() {
        let rows = sample();
        let mut buf = Vec::new();
        write_branch_csv(&mut buf, &rows).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("branch_id,idx,eps,lambda,delta,w0,norm_u2,stability,is_fold\n"));
        assert!(text.contains(",unknown,1\n"));
        let back = read_branch_csv(&buf[..]).unwrap();
        assert_eq!(back, rows);
    }

    #[test]
    fn bad_csv_is_rejected_with_line() {
        let bad = "branch_id,idx,eps,lambda,delta,w0,norm_u2,stability,is_fold\n0,0,0.1,x,,1,1,stable,0\n";
        match read_branch_csv(bad.as_bytes()).unwrap_err() {
            Error::Csv { line, .. } => assert_eq!(line, 2),
            e => panic!("{e}"),
        }
        assert!(read_branch_csv("a,b\n1,2\n".as_bytes()).is_err());
        let bad_fold = "branch_id,idx,eps,lambda,delta,w0,norm_u2,stability,is_fold\n0,0,0.1,0.1,,1,1,stable,2\n";
        assert!(read_branch_csv(bad_fold.as_bytes()).is_err());
        let short = "branch_id,idx,eps,lambda,delta,w0,norm_u2,stability,is_fold\n0,0\n";
        assert!(read_branch_csv(short.as_bytes()).is_err());
    }

    #[test]
    fn svg_has_polyline_and_fold_marker() {
        let s = plot_svg(&sample(), 400, 300);
        assert!(s.starts_with("<svg"));
        assert_eq!(s.matches("<polyline").count(), 1);
        assert_eq!(s.matches("<circle").count(), 1);
        assert!(s.trim_end().ends_with("</svg>"));
    }

    #[test]
    fn seventeen_digits() {
        assert_eq!(fmt_f64(0.1), "1.0000000000000001e-1");
        let x = 1.0 / 3.0;
        assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
    }
}
