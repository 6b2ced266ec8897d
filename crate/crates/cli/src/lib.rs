//! Command implementations behind the `exgal` binary.
//!
//! Exit codes: `0` success (stabilised run, all verdicts pass, study
//! written), `2` a run that used every level without stabilising or a
//! certificate with a failing verdict, `1` any error.

pub mod config;
pub mod output;

use std::fs;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};

use exgal_core::exhaust::{convergence_study, run_exhaustion, solve_level};

use config::{RunConfig, RunPlan, DEFAULT_OUTPUT_DIR};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_INCOMPLETE: i32 = 2;

#[derive(Debug, Clone)]
pub struct Invocation {
    pub config: PathBuf,
    pub output_dir: Option<PathBuf>,
    pub quiet: bool,
}

impl Invocation {
    pub fn new(config: impl Into<PathBuf>) -> Self {
        Invocation {
            config: config.into(),
            output_dir: None,
            quiet: false,
        }
    }

    fn say(&self, line: impl AsRef<str>) {
        if !self.quiet {
            println!("{}", line.as_ref());
        }
    }
}

fn load(inv: &Invocation) -> Result<(RunPlan, PathBuf)> {
    let plan = RunConfig::from_path(&inv.config)?.validate()?;
    let dir = inv
        .output_dir
        .clone()
        .or_else(|| plan.output_dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR));
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok((plan, dir))
}

fn report_error(result: Result<i32>) -> i32 {
    result.unwrap_or_else(|e| {
        eprintln!("error: {e:#}");
        EXIT_ERROR
    })
}

pub fn cmd_solve(inv: &Invocation) -> i32 {
    report_error(solve(inv))
}

pub fn cmd_certify(inv: &Invocation) -> i32 {
    report_error(certify(inv))
}

pub fn cmd_study(inv: &Invocation) -> i32 {
    report_error(study(inv))
}

fn solve(inv: &Invocation) -> Result<i32> {
    let (plan, dir) = load(inv)?;
    let report = run_exhaustion(&plan.problem, &plan.schedule, &plan.probes, &plan.options)?;
    output::write_json(&dir, "report.json", &report)?;
    output::write_text(&dir, "levels.csv", &output::levels_csv(&report))?;
    if let Some(u) = &report.final_solution {
        output::write_text(&dir, "solution.csv", &output::solution_csv(u))?;
    }
    for l in &report.levels {
        inv.say(format!(
            "level {:>2}  [{:.6e}, {:.6e}]  dim {:>6}  infsup {:.6}  |x| {:.6e}  probe {}  overlap {}",
            l.level,
            l.subdomain.left,
            l.subdomain.right,
            l.dim,
            l.certificate.infsup_c,
            l.norm_x,
            l.max_probe_residual().map_or("-".into(), |v| format!("{v:.3e}")),
            l.overlap_diff.map_or("-".into(), |v| format!("{v:.3e}")),
        ));
    }
    if let Some(f) = &report.failure {
        bail!("{f}");
    }
    if let Some(e) = report.error_vs_exact {
        inv.say(format!("error vs exact: {e:.6e}"));
    }
    if report.stabilized {
        inv.say(format!(
            "stabilized at level {}",
            report.stabilized_at.unwrap_or_default()
        ));
        Ok(EXIT_OK)
    } else {
        inv.say("max levels reached without stabilization");
        Ok(EXIT_INCOMPLETE)
    }
}

fn certify(inv: &Invocation) -> Result<i32> {
    let (plan, dir) = load(inv)?;
    let sub = plan.schedule.level(1);
    let mesh = plan.options.mesh.mesh(sub, 1)?;
    let level = solve_level(&plan.problem, 1, mesh, &plan.options.level)?;
    let cert = &level.certificate;
    output::write_json(&dir, "certificate.json", cert)?;
    for v in &cert.verdicts {
        let relation = match v.relation {
            exgal_core::certify::Relation::AtLeast => ">=",
            exgal_core::certify::Relation::AtMost => "<=",
        };
        inv.say(format!(
            "{:<24} {:>14.6e} {} {:<14.6e} {}",
            v.hypothesis,
            v.value,
            relation,
            v.threshold,
            if v.pass { "ok" } else { "FAIL" }
        ));
    }
    Ok(if cert.passed() { EXIT_OK } else { EXIT_INCOMPLETE })
}

fn study(inv: &Invocation) -> Result<i32> {
    let (plan, dir) = load(inv)?;
    if plan.problem.exact().is_none() {
        bail!("config error at `problem.exact`: required by the study command");
    }
    let sub = plan.schedule.level(1);
    let rows = convergence_study(
        &plan.problem,
        sub,
        &plan.study_counts,
        plan.options.mesh.gamma,
        &plan.options.level,
    )?;
    output::write_text(&dir, "study.csv", &output::study_csv(&rows))?;
    for r in &rows {
        inv.say(format!(
            "{:>8}  h {:.4e}  error {:.6e}  rate {}",
            r.elements,
            r.h,
            r.error_x,
            r.observed_rate.map_or("-".into(), |v| format!("{v:.4}"))
        ));
    }
    Ok(EXIT_OK)
}
