//! Exhaustion drivers.
//!
//! Both problem families live on `(0, 1)` with a singular point at an end of
//! the domain. Level `n` solves a regular problem on a subdomain from a nested
//! schedule, certifies it, and records two observable proxies for the weak
//! limit: probe residuals `|A(x_n, v) - <v*, v>|` and the overlap difference
//! `|x_n - x_{n-1}|` on the previous subdomain.

mod function;
mod level;
mod probe;
mod study;

pub use function::{h1_seminorm, h1_seminorm_diff, relative_h1_error, ExactSolution, P1Function};
pub use level::{
    evaluate_form, probe_load, probe_residual, solve_level, solve_level_cauchy_ls, solve_level_cauchy_pg,
    solve_level_dirichlet,
};
pub use probe::Probe;
pub use study::{convergence_study, CauchyLevelExact, StudyRow};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::assemble::{AssembleError, QuadratureRule};
use crate::certify::{Certificate, CertifyError};
use crate::coeff::{EvalError, Expression, MonotoneScalarFn};
use crate::linalg::LinalgError;
use crate::mesh::{graded_mesh, Mesh, MeshError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScheduleError {
    #[error("schedule touches singular point at level {level}")]
    TouchesSingular { level: usize },
    #[error("level {level} subdomain [{left}, {right}] is not a valid interval inside (0, 1]")]
    Interval { level: usize, left: f64, right: f64 },
    #[error("level {level} does not strictly contain level {}", level - 1)]
    NotNested { level: usize },
    #[error("geometric ratio must lie in (0, 1), got {0}")]
    Ratio(f64),
    #[error("schedule has no levels")]
    Empty,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExhaustError {
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Assemble(#[from] AssembleError),
    #[error(transparent)]
    Certify(#[from] CertifyError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("coefficient `{name}` could not be evaluated: {source}")]
    Coefficient {
        name: String,
        #[source]
        source: EvalError,
    },
    #[error("hypothesis violated at level {level}: {detail}")]
    Hypothesis { level: usize, detail: String },
    #[error("discrete problem at level {level} is degenerate: {detail}")]
    Degenerate { level: usize, detail: String },
    #[error("Newton did not converge at level {level}: residual {residual:e} after {iterations} iterations")]
    NewtonFailed {
        level: usize,
        iterations: usize,
        residual: f64,
    },
    #[error("probe {index} with support [{left}, {right}] does not fit the domain")]
    Probe { index: usize, left: f64, right: f64 },
    #[error("method `{method}` does not apply to {kind} problems")]
    Method { method: &'static str, kind: &'static str },
    #[error("invalid option: {0}")]
    Options(String),
    #[error("an exact solution is required")]
    MissingExact,
}

pub(crate) fn coefficient_error(name: &str) -> impl Fn(EvalError) -> ExhaustError + '_ {
    move |source| ExhaustError::Coefficient {
        name: name.to_string(),
        source,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Subdomain {
    pub left: f64,
    pub right: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProblemKind {
    Cauchy,
    Dirichlet,
}

impl ProblemKind {
    pub fn name(self) -> &'static str {
        match self {
            ProblemKind::Cauchy => "cauchy",
            ProblemKind::Dirichlet => "dirichlet",
        }
    }
}

/// Nested subdomains of `(0, 1)`. Cauchy levels are `(alpha_n, 1)`;
/// Dirichlet levels are `(l_n, r_n)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubdomainSchedule {
    kind: ProblemKind,
    subdomains: Vec<Subdomain>,
}

impl SubdomainSchedule {
    /// `alpha_n = alpha0 * rho^n`, `n = 1..=max_levels`.
    pub fn cauchy_geometric(alpha0: f64, rho: f64, max_levels: usize) -> Result<Self, ScheduleError> {
        check_ratio(rho)?;
        let subs = (1..=max_levels)
            .map(|n| Subdomain {
                left: alpha0 * rho.powi(n as i32),
                right: 1.0,
            })
            .collect();
        Self::explicit(ProblemKind::Cauchy, subs)
    }

    /// `l_n = l0 * rho^n`, `r_n = 1 - (1 - r0) * rho^n`.
    pub fn dirichlet_geometric(l0: f64, r0: f64, rho: f64, max_levels: usize) -> Result<Self, ScheduleError> {
        check_ratio(rho)?;
        let subs = (1..=max_levels)
            .map(|n| {
                let p = rho.powi(n as i32);
                Subdomain {
                    left: l0 * p,
                    right: 1.0 - (1.0 - r0) * p,
                }
            })
            .collect();
        Self::explicit(ProblemKind::Dirichlet, subs)
    }

    pub fn explicit(kind: ProblemKind, subdomains: Vec<Subdomain>) -> Result<Self, ScheduleError> {
        if subdomains.is_empty() {
            return Err(ScheduleError::Empty);
        }
        for (i, s) in subdomains.iter().enumerate() {
            let level = i + 1;
            let touches = match kind {
                ProblemKind::Cauchy => s.left <= 0.0,
                ProblemKind::Dirichlet => s.left <= 0.0 || s.right >= 1.0,
            };
            if touches {
                return Err(ScheduleError::TouchesSingular { level });
            }
            let right_ok = match kind {
                ProblemKind::Cauchy => s.right == 1.0,
                ProblemKind::Dirichlet => s.right < 1.0,
            };
            if !(s.left.is_finite() && s.right.is_finite() && s.left < s.right && right_ok) {
                return Err(ScheduleError::Interval {
                    level,
                    left: s.left,
                    right: s.right,
                });
            }
            if i > 0 {
                let p = subdomains[i - 1];
                let grows = s.left <= p.left && s.right >= p.right && (s.left < p.left || s.right > p.right);
                if !grows {
                    return Err(ScheduleError::NotNested { level });
                }
            }
        }
        Ok(SubdomainSchedule { kind, subdomains })
    }

    pub fn kind(&self) -> ProblemKind {
        self.kind
    }

    pub fn subdomains(&self) -> &[Subdomain] {
        &self.subdomains
    }

    pub fn max_levels(&self) -> usize {
        self.subdomains.len()
    }

    /// Subdomain of level `n` (1-based).
    pub fn level(&self, n: usize) -> Subdomain {
        self.subdomains[n - 1]
    }
}

fn check_ratio(rho: f64) -> Result<(), ScheduleError> {
    if rho > 0.0 && rho < 1.0 {
        Ok(())
    } else {
        Err(ScheduleError::Ratio(rho))
    }
}

/// `u' + a u = f` on `(0, 1)`, `u(0) = 0`; levels impose `u(alpha_n) = 0`.
#[derive(Debug, Clone)]
pub struct CauchyProblem {
    pub a: Expression,
    pub f: Expression,
    pub exact: Option<ExactSolution>,
}

/// `-(a u')' + psi(u) + g = 0` on `(0, 1)`, zero boundary values.
#[derive(Debug, Clone)]
pub struct DirichletProblem {
    pub a: Expression,
    pub c1: f64,
    /// Declared linear growth of `psi`: `|psi(u) + g| <= h_bound + c2 |u|`.
    pub c2: f64,
    pub psi: MonotoneScalarFn,
    pub g: Expression,
    pub h_bound: Expression,
    pub exact: Option<ExactSolution>,
}

#[derive(Debug, Clone)]
pub enum Problem {
    Cauchy(CauchyProblem),
    Dirichlet(DirichletProblem),
}

impl Problem {
    pub fn kind(&self) -> ProblemKind {
        match self {
            Problem::Cauchy(_) => ProblemKind::Cauchy,
            Problem::Dirichlet(_) => ProblemKind::Dirichlet,
        }
    }

    pub fn exact(&self) -> Option<&ExactSolution> {
        match self {
            Problem::Cauchy(p) => p.exact.as_ref(),
            Problem::Dirichlet(p) => p.exact.as_ref(),
        }
    }

    pub fn describe(&self) -> ProblemDescription {
        let mut expressions = BTreeMap::new();
        let mut constants = BTreeMap::new();
        let mut psi = None;
        let exact = self.exact();
        match self {
            Problem::Cauchy(p) => {
                expressions.insert("a".to_string(), p.a.to_string());
                expressions.insert("f".to_string(), p.f.to_string());
            }
            Problem::Dirichlet(p) => {
                expressions.insert("a".to_string(), p.a.to_string());
                expressions.insert("g".to_string(), p.g.to_string());
                expressions.insert("h_bound".to_string(), p.h_bound.to_string());
                constants.insert("c1".to_string(), p.c1);
                constants.insert("c2".to_string(), p.c2);
                psi = Some(p.psi);
            }
        }
        if let Some(e) = exact {
            expressions.insert("exact".to_string(), e.value.to_string());
            if let Some(d) = &e.derivative {
                expressions.insert("exact_derivative".to_string(), d.to_string());
            }
        }
        ProblemDescription {
            kind: self.kind(),
            expressions,
            constants,
            psi,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProblemDescription {
    pub kind: ProblemKind,
    pub expressions: BTreeMap<String, String>,
    pub constants: BTreeMap<String, f64>,
    pub psi: Option<MonotoneScalarFn>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Least squares in the graph norm of `u' + a u`.
    Ls,
    /// Petrov-Galerkin with P1 trial and P0 test functions.
    Pg,
    /// Damped Newton on the Galerkin system.
    Newton,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Ls => "ls",
            Method::Pg => "pg",
            Method::Newton => "newton",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NewtonOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub max_halvings: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        NewtonOptions {
            tol: 1e-10,
            max_iter: 25,
            max_halvings: 30,
        }
    }
}

/// Seeds and thresholds of the sampled hypothesis checks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CertifyOptions {
    pub seed: u64,
    pub infsup_min: f64,
    pub monotone_samples: usize,
    pub amplitude: f64,
    pub coercivity_directions: usize,
    pub coercivity_scales: usize,
    pub s_max: f64,
    pub target_ratio: f64,
    pub hemicontinuity_probes: usize,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        CertifyOptions {
            seed: 20240229,
            infsup_min: 1e-8,
            monotone_samples: 100,
            amplitude: 1.0,
            coercivity_directions: 10,
            coercivity_scales: 10,
            s_max: 1e3,
            target_ratio: 10.0,
            hemicontinuity_probes: 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LevelOptions {
    pub method: Method,
    pub quadrature: usize,
    pub newton: NewtonOptions,
    pub certify: CertifyOptions,
}

impl LevelOptions {
    pub fn new(method: Method) -> Self {
        LevelOptions {
            method,
            quadrature: 4,
            newton: NewtonOptions::default(),
            certify: CertifyOptions::default(),
        }
    }
}

/// Element count `initial * growth^(n-1)` at level `n`, nodes graded with
/// exponent `gamma` toward the left end.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeshPolicy {
    pub initial_elements: usize,
    pub growth: usize,
    pub gamma: f64,
}

impl Default for MeshPolicy {
    fn default() -> Self {
        MeshPolicy {
            initial_elements: 64,
            growth: 2,
            gamma: 2.0,
        }
    }
}

impl MeshPolicy {
    pub fn elements(&self, level: usize) -> usize {
        self.initial_elements * self.growth.pow(level as u32 - 1)
    }

    pub fn mesh(&self, sub: Subdomain, level: usize) -> Result<Mesh, MeshError> {
        graded_mesh(sub.left, sub.right, self.elements(level), self.gamma)
    }

    fn validate(&self) -> Result<(), ExhaustError> {
        if self.initial_elements < 2 {
            return Err(ExhaustError::Options("mesh.initial_elements must be at least 2".into()));
        }
        if self.growth < 1 {
            return Err(ExhaustError::Options("mesh.growth must be at least 1".into()));
        }
        if !(self.gamma.is_finite() && self.gamma >= 1.0) {
            return Err(ExhaustError::Options("mesh.gamma must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RunOptions {
    pub level: LevelOptions,
    pub mesh: MeshPolicy,
    pub stabilization_tol: f64,
    /// Interval of the error measure; defaults to the level-1 subdomain.
    pub error_interval: Option<(f64, f64)>,
}

impl RunOptions {
    pub fn new(method: Method) -> Self {
        RunOptions {
            level: LevelOptions::new(method),
            mesh: MeshPolicy::default(),
            stabilization_tol: 1e-4,
            error_interval: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProbeResidual {
    pub probe: usize,
    pub residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NewtonStats {
    pub iterations: usize,
    pub picard_steps: usize,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelSolution {
    pub level: usize,
    pub subdomain: Subdomain,
    pub elements: usize,
    pub dim: usize,
    pub norm_x: f64,
    /// Discrete dual norm of the load.
    pub load_norm: f64,
    /// Max-norm of the algebraic residual relative to the load.
    pub algebraic_residual: f64,
    pub certificate: Certificate,
    pub probe_residuals: Vec<ProbeResidual>,
    /// `A(x_n, x_n)`, when trial and test spaces coincide.
    pub self_pairing: Option<f64>,
    pub overlap_diff: Option<f64>,
    pub newton: Option<NewtonStats>,
    pub error_vs_exact: Option<f64>,
    #[serde(skip)]
    pub coefficients: Vec<f64>,
    #[serde(skip)]
    pub solution: P1Function,
}

impl LevelSolution {
    pub fn max_probe_residual(&self) -> Option<f64> {
        self.probe_residuals.iter().map(|p| p.residual).reduce(f64::max)
    }

    fn probes_within(&self, tol: f64) -> bool {
        self.probe_residuals.iter().all(|p| p.residual <= tol)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExhaustionReport {
    pub problem: ProblemDescription,
    pub method: Method,
    pub schedule: Vec<Subdomain>,
    pub probes: Vec<Probe>,
    pub stabilization_tol: f64,
    pub levels: Vec<LevelSolution>,
    pub stabilized: bool,
    pub stabilized_at: Option<usize>,
    pub error_interval: Option<(f64, f64)>,
    pub error_vs_exact: Option<f64>,
    pub final_solution: Option<P1Function>,
    pub failure: Option<String>,
}

fn check_method(problem: &Problem, method: Method) -> Result<(), ExhaustError> {
    let ok = matches!(
        (problem.kind(), method),
        (ProblemKind::Cauchy, Method::Ls | Method::Pg) | (ProblemKind::Dirichlet, Method::Newton)
    );
    if ok {
        Ok(())
    } else {
        Err(ExhaustError::Method {
            method: method.name(),
            kind: problem.kind().name(),
        })
    }
}

fn check_probes(problem: &Problem, probes: &[Probe], outer: Subdomain) -> Result<(), ExhaustError> {
    for (index, p) in probes.iter().enumerate() {
        let (left, right) = p.support();
        let indicator_misuse = matches!(p, Probe::Indicator { .. }) && problem.kind() == ProblemKind::Dirichlet;
        if !p.is_valid() || !p.inside(outer.left, outer.right) || indicator_misuse {
            return Err(ExhaustError::Probe { index, left, right });
        }
    }
    Ok(())
}

/// Runs the schedule until the probe residuals and overlap differences
/// stabilise or the levels run out. Errors before the first level (invalid
/// input) are returned as `Err`; a failing level yields a partial report
/// with `failure` set.
pub fn run_exhaustion(
    problem: &Problem,
    schedule: &SubdomainSchedule,
    probes: &[Probe],
    options: &RunOptions,
) -> Result<ExhaustionReport, ExhaustError> {
    if schedule.kind() != problem.kind() {
        return Err(ExhaustError::Options(format!(
            "schedule kind {} does not match problem kind {}",
            schedule.kind().name(),
            problem.kind().name()
        )));
    }
    check_method(problem, options.level.method)?;
    options.mesh.validate()?;
    if !(options.stabilization_tol > 0.0) {
        return Err(ExhaustError::Options("stabilization tol must be positive".into()));
    }
    check_probes(problem, probes, schedule.level(schedule.max_levels()))?;
    let quad = QuadratureRule::gauss_legendre(options.level.quadrature)?;
    let first = schedule.level(1);
    let error_interval = problem
        .exact()
        .map(|_| options.error_interval.unwrap_or((first.left, first.right)));

    let mut report = ExhaustionReport {
        problem: problem.describe(),
        method: options.level.method,
        schedule: schedule.subdomains().to_vec(),
        probes: probes.to_vec(),
        stabilization_tol: options.stabilization_tol,
        levels: Vec::new(),
        stabilized: false,
        stabilized_at: None,
        error_interval,
        error_vs_exact: None,
        final_solution: None,
        failure: None,
    };
    let tol = options.stabilization_tol;

    for n in 1..=schedule.max_levels() {
        let sub = schedule.level(n);
        let outcome = options
            .mesh
            .mesh(sub, n)
            .map_err(ExhaustError::from)
            .and_then(|mesh| solve_level(problem, n, mesh, &options.level))
            .and_then(|mut sol| {
                for (i, p) in probes.iter().enumerate() {
                    if p.inside(sub.left, sub.right) {
                        let residual = probe_residual(problem, &sol.solution, p, &quad)?;
                        sol.probe_residuals.push(ProbeResidual { probe: i, residual });
                    }
                }
                if let Some(prev) = report.levels.last() {
                    let ps = prev.subdomain;
                    sol.overlap_diff = Some(h1_seminorm_diff(&sol.solution, &prev.solution, ps.left, ps.right));
                }
                if let (Some(exact), Some((p, q))) = (problem.exact(), error_interval) {
                    let e = relative_h1_error(&sol.solution, |x| exact.slope(x), p, q, &quad)
                        .map_err(coefficient_error("exact"))?;
                    sol.error_vs_exact = Some(e);
                }
                Ok(sol)
            });
        let sol = match outcome {
            Ok(sol) => sol,
            Err(e) => {
                report.failure = Some(format!("level {n}: {e}"));
                return Ok(report);
            }
        };
        let stabilized = match report.levels.last() {
            Some(prev) => {
                prev.probes_within(tol)
                    && sol.probes_within(tol)
                    && sol.overlap_diff.is_some_and(|d| d <= tol * (1.0 + sol.norm_x))
            }
            None => false,
        };
        report.levels.push(sol);
        if stabilized {
            report.stabilized = true;
            report.stabilized_at = Some(n);
            break;
        }
    }

    let last = report.levels.last().expect("at least one level");
    report.error_vs_exact = last.error_vs_exact;
    report.final_solution = Some(last.solution.extend_by_zero(0.0, 1.0));
    Ok(report)
}
