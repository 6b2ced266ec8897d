//! CSV and JSON writers. UTF-8, LF line endings, round-trip reals.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;

use exgal_core::exhaust::{ExhaustionReport, P1Function, StudyRow};

pub const LEVELS_HEADER: &str =
    "level,dim,left,right,infsup_c,boundedness_M,norm_x,max_probe_residual,overlap_diff,newton_iters,error_vs_exact";
pub const SOLUTION_HEADER: &str = "x,u";
pub const STUDY_HEADER: &str = "elements,h,error_X,observed_rate";

/// Shortest representation that parses back to the same `f64`.
pub fn fmt_f64(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || (1e-4..1e15).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

fn opt<T, F: Fn(T) -> String>(v: Option<T>, f: F) -> String {
    v.map(f).unwrap_or_default()
}

pub fn levels_csv(report: &ExhaustionReport) -> String {
    let mut out = String::new();
    out.push_str(LEVELS_HEADER);
    out.push('\n');
    for l in &report.levels {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            l.level,
            l.dim,
            fmt_f64(l.subdomain.left),
            fmt_f64(l.subdomain.right),
            fmt_f64(l.certificate.infsup_c),
            fmt_f64(l.certificate.boundedness_m),
            fmt_f64(l.norm_x),
            opt(l.max_probe_residual(), fmt_f64),
            opt(l.overlap_diff, fmt_f64),
            opt(l.newton.map(|n| n.iterations), |n| n.to_string()),
            opt(l.error_vs_exact, fmt_f64),
        );
    }
    out
}

pub fn solution_csv(u: &P1Function) -> String {
    let mut out = String::new();
    out.push_str(SOLUTION_HEADER);
    out.push('\n');
    for (x, v) in u.nodes.iter().zip(&u.values) {
        let _ = writeln!(out, "{},{}", fmt_f64(*x), fmt_f64(*v));
    }
    out
}

pub fn study_csv(rows: &[StudyRow]) -> String {
    let mut out = String::new();
    out.push_str(STUDY_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            r.elements,
            fmt_f64(r.h),
            fmt_f64(r.error_x),
            opt(r.observed_rate, fmt_f64)
        );
    }
    out
}

pub fn write_text(dir: &Path, name: &str, text: &str) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).context("serializing report")?;
    text.push('\n');
    write_text(dir, name, &text)
}
