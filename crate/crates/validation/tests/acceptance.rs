//! Acceptance criteria A1-A8. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any criterion fails.

use std::fs;
use std::path::Path;
use std::time::{Duration, Instant};

use exgal_cli::config::{RunConfig, RunPlan};
use exgal_cli::{cmd_solve, cmd_study, Invocation, EXIT_OK};
use exgal_core::assemble::{assemble_ls_graph, assemble_transport, gram_h1_seminorm, FeSpace, QuadratureRule};
use exgal_core::certify::{check_monotone, pencil_constants, Certificate, SamplingPlan, MONOTONE_TOL};
use exgal_core::coeff::Expression;
use exgal_core::exhaust::{
    run_exhaustion, solve_level, solve_level_cauchy_pg, CauchyProblem, ExhaustionReport, LevelOptions, Method, Problem,
};
use exgal_core::linalg::{pencil_extremes, DenseMatrix};
use exgal_core::mesh::{graded_mesh, uniform_mesh, Mesh};
use exgal_validation::{config_path, Outcome};

const CAUCHY: &str = "cauchy_manufactured.json";
const DIRICHLET: &str = "dirichlet_manufactured.json";
const NEGATIVE: &str = "cauchy_negative_coefficient.json";

fn plan(name: &str) -> RunPlan {
    RunConfig::from_path(&config_path(name))
        .and_then(|c| c.validate())
        .unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn run(plan: &RunPlan) -> (ExhaustionReport, Duration) {
    let start = Instant::now();
    let report = run_exhaustion(&plan.problem, &plan.schedule, &plan.probes, &plan.options).expect("run");
    (report, start.elapsed())
}

fn quiet(config: &Path, out: &Path) -> Invocation {
    Invocation {
        config: config.to_path_buf(),
        output_dir: Some(out.to_path_buf()),
        quiet: true,
    }
}

fn a1() -> Outcome {
    let (report, elapsed) = run(&plan(CAUCHY));
    let finest = report.levels.last().expect("levels");
    let err = report.error_vs_exact.unwrap_or(f64::INFINITY);
    let probe = finest.max_probe_residual().unwrap_or(f64::INFINITY);
    let secs = elapsed.as_secs_f64();
    let pass = report.failure.is_none() && report.levels.len() == 8 && err <= 1e-2 && probe <= 1e-4 && secs <= 30.0;
    Outcome::new(
        "A1",
        pass,
        format!(
            "levels {} error {err:.3e} <= 1e-2, finest probe residual {probe:.3e} <= 1e-4, runtime {secs:.2}s <= 30s",
            report.levels.len()
        ),
    )
}

fn a2() -> Outcome {
    let start = Instant::now();
    let quad = QuadratureRule::gauss_legendre(6).expect("quadrature");
    let mut worst = f64::INFINITY;
    let mut detail = Vec::new();
    for a in ["1/t", "1/t^2", "2 - t"] {
        let expr = Expression::parse(a, "t").expect("parse");
        for alpha in [0.25, 1.0 / 16.0, 1.0 / 64.0] {
            let space = FeSpace::p1(graded_mesh(alpha, 1.0, 128, 2.0).expect("mesh"), true, false);
            let n = assemble_ls_graph(&space, &expr, &quad).expect("normal matrix");
            let mx = gram_h1_seminorm(&space).expect("gram");
            let (lo, _) = pencil_extremes(&n, &mx).expect("pencil");
            if lo < worst {
                worst = lo;
                detail = vec![format!("a = {a}, alpha = {alpha}")];
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let pass = worst >= 1.0 - 1e-6 && secs <= 5.0;
    Outcome::new(
        "A2",
        pass,
        format!(
            "min lambda_min(N, M_X) {worst:.12} >= 1 - 1e-6 ({}), runtime {secs:.2}s <= 5s",
            detail.join("")
        ),
    )
}

fn a3() -> Outcome {
    let zero = Problem::Cauchy(CauchyProblem {
        a: Expression::parse("0", "t").expect("parse"),
        f: Expression::parse("1", "t").expect("parse"),
        exact: None,
    });
    let Problem::Cauchy(p) = &zero else { unreachable!() };
    let irregular: Vec<f64> = (0..=40)
        .map(|i| {
            let s = i as f64 / 40.0;
            0.1 + 0.9 * (s + 0.05 * (7.0 * s).sin() * s * (1.0 - s))
        })
        .collect();
    let meshes = [
        uniform_mesh(0.0, 1.0, 2).expect("mesh"),
        uniform_mesh(0.25, 1.0, 17).expect("mesh"),
        graded_mesh(1.0 / 64.0, 1.0, 256, 2.0).expect("mesh"),
        Mesh::from_nodes(irregular).expect("mesh"),
    ];
    let opts = LevelOptions::new(Method::Pg);
    let mut dev: f64 = 0.0;
    for mesh in meshes {
        let level = solve_level_cauchy_pg(p, 1, mesh, &opts).expect("pg level");
        dev = dev.max((level.certificate.infsup_c - 1.0).abs());
    }

    let mesh = Mesh::from_nodes(vec![0.0, 0.5, 1.0]).expect("mesh");
    let trial = FeSpace::p1(mesh.clone(), true, false);
    let test = FeSpace::p0(mesh);
    let quad = QuadratureRule::gauss_legendre(4).expect("quadrature");
    let b = assemble_transport(&trial, &test, &p.a, &quad)
        .expect("transport")
        .to_dense();
    let mx = gram_h1_seminorm(&trial).expect("gram").to_dense();
    let b_ok = b == DenseMatrix::from_rows(&[vec![1.0, 0.0], vec![-1.0, 1.0]]);
    let mx_ok = mx == DenseMatrix::from_rows(&[vec![4.0, -2.0], vec![-2.0, 2.0]]);
    let pass = dev <= 1e-8 && b_ok && mx_ok;
    Outcome::new(
        "A3",
        pass,
        format!("max |c_h - 1| {dev:.3e} <= 1e-8 over 4 meshes, hand B exact {b_ok}, hand M_X exact {mx_ok}"),
    )
}

fn a4() -> Outcome {
    let mut pg = plan(CAUCHY);
    pg.options.level.method = Method::Pg;
    let runs = [("ls", plan(CAUCHY)), ("pg", pg), ("newton", plan(DIRICHLET))];
    let mut worst = f64::NEG_INFINITY;
    let mut count = 0;
    let mut failures = Vec::new();
    for (name, p) in &runs {
        let (report, _) = run(p);
        if let Some(f) = &report.failure {
            failures.push(format!("{name}: {f}"));
        }
        for l in &report.levels {
            worst = worst.max(l.certificate.infsup_c * l.norm_x - l.load_norm);
            count += 1;
        }
    }
    let pass = failures.is_empty() && count > 0 && worst <= 1e-8;
    Outcome::new(
        "A4",
        pass,
        format!(
            "max (c * |x| - load norm) {worst:.3e} <= 1e-8 over {count} levels of ls, pg, newton runs{}",
            if failures.is_empty() {
                String::new()
            } else {
                format!(" failures: {}", failures.join("; "))
            }
        ),
    )
}

fn a5() -> Outcome {
    let (report, elapsed) = run(&plan(DIRICHLET));
    let secs = elapsed.as_secs_f64();
    let newton_ok = report.failure.is_none()
        && report.levels.len() == 6
        && report
            .levels
            .iter()
            .all(|l| l.newton.is_some_and(|n| n.iterations <= 20 && n.residual <= 1e-10));
    let max_iters = report
        .levels
        .iter()
        .filter_map(|l| l.newton.map(|n| n.iterations))
        .max()
        .unwrap_or(0);
    let max_res = report
        .levels
        .iter()
        .filter_map(|l| l.newton.map(|n| n.residual))
        .fold(0.0, f64::max);
    let mono = report
        .levels
        .iter()
        .filter_map(|l| l.certificate.monotonicity_min)
        .fold(f64::INFINITY, f64::min);
    let mono_ok = report.levels.iter().all(|l| l.certificate.monotonicity_min.is_some()) && mono >= MONOTONE_TOL;
    let coercive_ok = report.levels.iter().all(|l| {
        l.certificate.coercivity_table.len() >= 100
            && l.certificate.verdict("coercivity_estimate").is_some_and(|v| v.pass)
    });
    let err = report.error_vs_exact.unwrap_or(f64::INFINITY);
    let err_ok = err <= 1e-2;
    let pass = newton_ok && mono_ok && coercive_ok && err_ok && secs <= 60.0;
    Outcome::new(
        "A5",
        pass,
        format!(
            "newton max iters {max_iters} <= 20 and residual {max_res:.2e} <= 1e-10 ({}), error {err:.3e} <= 1e-2 ({}), monotonicity_min {mono:.3e} >= -1e-12 ({}), coercivity estimate on 100 samples ({}), runtime {secs:.2}s <= 60s",
            ok(newton_ok),
            ok(err_ok),
            ok(mono_ok),
            ok(coercive_ok)
        ),
    )
}

fn ok(b: bool) -> &'static str {
    if b {
        "ok"
    } else {
        "FAIL"
    }
}

fn a6() -> Outcome {
    let dir = tempfile::tempdir().expect("tempdir");
    let code = cmd_study(&quiet(&config_path(CAUCHY), dir.path()));
    let text = fs::read_to_string(dir.path().join("study.csv")).unwrap_or_default();
    let rows: Vec<Vec<&str>> = text.lines().skip(1).map(|l| l.split(',').collect()).collect();
    let rates: Vec<f64> = rows
        .iter()
        .filter_map(|r| r.get(3).and_then(|s| s.parse().ok()))
        .collect();
    let first_elems = rows.first().and_then(|r| r.first()).copied().unwrap_or("");
    let last_elems = rows.last().and_then(|r| r.first()).copied().unwrap_or("");
    let pass = code == EXIT_OK
        && first_elems == "64"
        && last_elems == "1024"
        && rates.len() == rows.len().saturating_sub(1)
        && !rates.is_empty()
        && rates.iter().all(|r| (r - 1.0).abs() <= 0.15);
    let shown: Vec<String> = rates.iter().map(|r| format!("{r:.4}")).collect();
    Outcome::new(
        "A6",
        pass,
        format!(
            "elements {first_elems}..{last_elems}, observed rates [{}] within 1.0 +- 0.15",
            shown.join(", ")
        ),
    )
}

fn a7() -> Outcome {
    let mut notes = Vec::new();
    let mut pass = true;
    for name in [CAUCHY, DIRICHLET] {
        let first = tempfile::tempdir().expect("tempdir");
        let second = tempfile::tempdir().expect("tempdir");
        let c1 = cmd_solve(&quiet(&config_path(name), first.path()));
        let c2 = cmd_solve(&quiet(&config_path(name), second.path()));
        let mut same = c1 == c2;
        for file in ["levels.csv", "solution.csv"] {
            let a = fs::read(first.path().join(file)).ok();
            let b = fs::read(second.path().join(file)).ok();
            same &= a.is_some() && a == b;
        }
        pass &= same;
        notes.push(format!("{name} identical {same}"));
    }
    Outcome::new("A7", pass, format!("levels.csv and solution.csv: {}", notes.join(", ")))
}

fn a8() -> Outcome {
    let negative = plan(NEGATIVE);
    let sub = negative.schedule.level(1);
    let mesh = negative.options.mesh.mesh(sub, 1).expect("mesh");
    let level = solve_level(&negative.problem, 1, mesh, &negative.options.level).expect("level");
    let hyp_fails = level
        .certificate
        .verdict("coefficient_nonnegative")
        .is_some_and(|v| !v.pass)
        && !level.certificate.passed();

    let eye = DenseMatrix::identity(3);
    let constants = pencil_constants(&DenseMatrix::zeros(3, 3), &eye, &eye).expect("pencil");
    let zero_cert = Certificate::new(1, 3, 3, constants, 1e-8);
    let zero_ok = constants.infsup_c == 0.0 && !zero_cert.passed();

    let plan = SamplingPlan {
        samples: 100,
        seed: 20240229,
        amplitude: 1.0,
    };
    let anti = check_monotone(|x| x.iter().map(|v| -v).collect(), 5, &plan);
    let anti_ok = anti < MONOTONE_TOL;

    let pass = hyp_fails && zero_ok && anti_ok;
    Outcome::new(
        "A8",
        pass,
        format!(
            "a = -1 hypothesis verdict fails ({}), B = 0 gives infsup {} and failed certificate ({}), anti-monotone min {anti:.3e} < -1e-12 ({})",
            ok(hyp_fails),
            constants.infsup_c,
            ok(zero_ok),
            ok(anti_ok)
        ),
    )
}

fn main() {
    let checks: [fn() -> Outcome; 8] = [a1, a2, a3, a4, a5, a6, a7, a8];
    let mut failed = 0;
    for check in checks {
        let outcome = check();
        println!("acceptance {}", outcome.line());
        if !outcome.pass {
            failed += 1;
        }
    }
    println!("acceptance: {} passed, {failed} failed", checks.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
