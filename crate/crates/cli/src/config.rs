//! Run configuration: strict JSON, no defaults for physics, documented
//! defaults for numerics.

use std::path::Path;

use serde::Deserialize;
use thiserror::Error;

use exgal_core::coeff::{Expression, MonotoneScalarFn};
use exgal_core::exhaust::{
    CauchyProblem, CertifyOptions, DirichletProblem, ExactSolution, LevelOptions, MeshPolicy, Method, NewtonOptions,
    Probe, Problem, ProblemKind, RunOptions, Subdomain, SubdomainSchedule,
};

/// Configuration error naming the offending key.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("config error at `{key}`: {message}")]
pub struct ConfigError {
    pub key: String,
    pub message: String,
}

fn err(key: &str, message: impl Into<String>) -> ConfigError {
    ConfigError {
        key: key.to_string(),
        message: message.into(),
    }
}

pub const DEFAULT_SEED: u64 = 20240229;
pub const DEFAULT_OUTPUT_DIR: &str = "exgal-out";

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemConfig,
    pub schedule: ScheduleConfig,
    #[serde(default)]
    pub mesh: MeshConfig,
    pub method: MethodConfig,
    pub probes: Option<ProbesConfig>,
    #[serde(default)]
    pub stabilization: StabilizationConfig,
    #[serde(default)]
    pub certify: CertifyConfig,
    pub study: Option<StudyConfig>,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

fn default_seed() -> u64 {
    DEFAULT_SEED
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ProblemConfig {
    Cauchy {
        /// Independent variable name; `t` when omitted.
        variable: Option<String>,
        a: String,
        f: String,
        exact: Option<String>,
        exact_derivative: Option<String>,
    },
    Dirichlet {
        /// Independent variable name; `x` when omitted.
        variable: Option<String>,
        a: String,
        c1: f64,
        c2: f64,
        psi: MonotoneScalarFn,
        g: String,
        h_bound: String,
        exact: Option<String>,
        exact_derivative: Option<String>,
    },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "rule", rename_all = "lowercase", deny_unknown_fields)]
pub enum ScheduleConfig {
    /// Cauchy: `alpha_n = alpha0 rho^n`. Dirichlet: `l_n = l0 rho^n`,
    /// `r_n = 1 - (1 - r0) rho^n`.
    Geometric {
        alpha0: Option<f64>,
        l0: Option<f64>,
        r0: Option<f64>,
        rho: f64,
        max_levels: usize,
    },
    Explicit {
        subdomains: Vec<[f64; 2]>,
    },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MeshConfig {
    pub initial_elements: usize,
    pub growth: usize,
    pub gamma: f64,
    pub quadrature: usize,
}

impl Default for MeshConfig {
    fn default() -> Self {
        let p = MeshPolicy::default();
        MeshConfig {
            initial_elements: p.initial_elements,
            growth: p.growth,
            gamma: p.gamma,
            quadrature: 4,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MethodConfig {
    pub kind: Method,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default = "default_max_halvings")]
    pub max_halvings: usize,
}

fn default_tol() -> f64 {
    NewtonOptions::default().tol
}

fn default_max_iter() -> usize {
    NewtonOptions::default().max_iter
}

fn default_max_halvings() -> usize {
    NewtonOptions::default().max_halvings
}

/// Either `count` hats evenly placed in `interval`, or an explicit list.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbesConfig {
    pub count: Option<usize>,
    pub interval: Option<[f64; 2]>,
    pub explicit: Option<Vec<Probe>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StabilizationConfig {
    pub tol: f64,
    pub error_interval: Option<[f64; 2]>,
}

impl Default for StabilizationConfig {
    fn default() -> Self {
        StabilizationConfig {
            tol: 1e-4,
            error_interval: None,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CertifyConfig {
    pub infsup_min: f64,
    pub monotone_samples: usize,
    pub amplitude: f64,
    pub coercivity_directions: usize,
    pub coercivity_scales: usize,
    pub s_max: f64,
    pub target_ratio: f64,
    pub hemicontinuity_probes: usize,
}

impl Default for CertifyConfig {
    fn default() -> Self {
        let c = CertifyOptions::default();
        CertifyConfig {
            infsup_min: c.infsup_min,
            monotone_samples: c.monotone_samples,
            amplitude: c.amplitude,
            coercivity_directions: c.coercivity_directions,
            coercivity_scales: c.coercivity_scales,
            s_max: c.s_max,
            target_ratio: c.target_ratio,
            hemicontinuity_probes: c.hemicontinuity_probes,
        }
    }
}

/// Element counts `start * factor^k`, `k = 0..count`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StudyConfig {
    pub start: usize,
    pub factor: usize,
    pub count: usize,
}

impl Default for StudyConfig {
    fn default() -> Self {
        StudyConfig {
            start: 64,
            factor: 2,
            count: 5,
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: Option<String>,
}

/// Everything a command needs, validated.
#[derive(Debug, Clone)]
pub struct RunPlan {
    pub problem: Problem,
    pub schedule: SubdomainSchedule,
    pub probes: Vec<Probe>,
    pub options: RunOptions,
    pub study_counts: Vec<usize>,
    pub output_dir: Option<String>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<RunConfig, ConfigError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let key = if path == "." { "<root>".to_string() } else { path };
            err(&key, e.into_inner().to_string())
        })
    }

    pub fn from_path(path: &Path) -> Result<RunConfig, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| err("<file>", format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<RunPlan, ConfigError> {
        let problem = self.build_problem()?;
        let schedule = self.build_schedule(problem.kind())?;
        let options = self.build_options(&problem)?;
        let probes = self.build_probes(&problem, &schedule)?;
        if let Some([p, q]) = self.stabilization.error_interval {
            if !(p.is_finite() && q.is_finite() && 0.0 <= p && p < q && q <= 1.0) {
                return Err(err(
                    "stabilization.error_interval",
                    "must be [p, q] with 0 <= p < q <= 1",
                ));
            }
        }
        let study_counts = self.build_study()?;
        Ok(RunPlan {
            problem,
            schedule,
            probes,
            options,
            study_counts,
            output_dir: self.output.dir.clone(),
        })
    }

    fn build_problem(&self) -> Result<Problem, ConfigError> {
        let parse = |key: &str, text: &str, var: &str| {
            Expression::parse(text, var).map_err(|e| err(&format!("problem.{key}"), e.to_string()))
        };
        let exact = |value: &Option<String>, derivative: &Option<String>, var: &str| -> Result<_, ConfigError> {
            match (value, derivative) {
                (None, Some(_)) => Err(err("problem.exact_derivative", "given without problem.exact")),
                (None, None) => Ok(None),
                (Some(v), d) => Ok(Some(ExactSolution {
                    value: parse("exact", v, var)?,
                    derivative: d.as_ref().map(|d| parse("exact_derivative", d, var)).transpose()?,
                })),
            }
        };
        match &self.problem {
            ProblemConfig::Cauchy {
                variable,
                a,
                f,
                exact: ex,
                exact_derivative,
            } => {
                let var = variable.as_deref().unwrap_or("t");
                Ok(Problem::Cauchy(CauchyProblem {
                    a: parse("a", a, var)?,
                    f: parse("f", f, var)?,
                    exact: exact(ex, exact_derivative, var)?,
                }))
            }
            ProblemConfig::Dirichlet {
                variable,
                a,
                c1,
                c2,
                psi,
                g,
                h_bound,
                exact: ex,
                exact_derivative,
            } => {
                let var = variable.as_deref().unwrap_or("x");
                if !(c1.is_finite() && *c1 > 0.0) {
                    return Err(err("problem.c1", "must be finite and > 0"));
                }
                if !(c2.is_finite() && *c2 >= 0.0) {
                    return Err(err("problem.c2", "must be finite and >= 0"));
                }
                let psi =
                    MonotoneScalarFn::new(psi.kind, psi.scale).map_err(|e| err("problem.psi.scale", e.to_string()))?;
                Ok(Problem::Dirichlet(DirichletProblem {
                    a: parse("a", a, var)?,
                    c1: *c1,
                    c2: *c2,
                    psi,
                    g: parse("g", g, var)?,
                    h_bound: parse("h_bound", h_bound, var)?,
                    exact: exact(ex, exact_derivative, var)?,
                }))
            }
        }
    }

    fn build_schedule(&self, kind: ProblemKind) -> Result<SubdomainSchedule, ConfigError> {
        let built = match &self.schedule {
            ScheduleConfig::Geometric {
                alpha0,
                l0,
                r0,
                rho,
                max_levels,
            } => {
                if *max_levels == 0 {
                    return Err(err("schedule.max_levels", "must be at least 1"));
                }
                match kind {
                    ProblemKind::Cauchy => {
                        if l0.is_some() || r0.is_some() {
                            return Err(err("schedule.l0", "l0/r0 apply to dirichlet problems; use alpha0"));
                        }
                        let alpha0 = alpha0.ok_or_else(|| err("schedule.alpha0", "required for cauchy problems"))?;
                        SubdomainSchedule::cauchy_geometric(alpha0, *rho, *max_levels)
                    }
                    ProblemKind::Dirichlet => {
                        if alpha0.is_some() {
                            return Err(err(
                                "schedule.alpha0",
                                "alpha0 applies to cauchy problems; use l0 and r0",
                            ));
                        }
                        let l0 = l0.ok_or_else(|| err("schedule.l0", "required for dirichlet problems"))?;
                        let r0 = r0.ok_or_else(|| err("schedule.r0", "required for dirichlet problems"))?;
                        SubdomainSchedule::dirichlet_geometric(l0, r0, *rho, *max_levels)
                    }
                }
            }
            ScheduleConfig::Explicit { subdomains } => SubdomainSchedule::explicit(
                kind,
                subdomains
                    .iter()
                    .map(|&[left, right]| Subdomain { left, right })
                    .collect(),
            ),
        };
        built.map_err(|e| err("schedule", e.to_string()))
    }

    fn build_options(&self, problem: &Problem) -> Result<RunOptions, ConfigError> {
        let m = &self.mesh;
        if m.initial_elements < 2 {
            return Err(err("mesh.initial_elements", "must be at least 2"));
        }
        if m.growth < 1 {
            return Err(err("mesh.growth", "must be at least 1"));
        }
        if !(m.gamma.is_finite() && m.gamma >= 1.0) {
            return Err(err("mesh.gamma", "must be finite and >= 1"));
        }
        if !(1..=64).contains(&m.quadrature) {
            return Err(err("mesh.quadrature", "must be between 1 and 64"));
        }
        let method = self.method.kind;
        let compatible = matches!(
            (problem.kind(), method),
            (ProblemKind::Cauchy, Method::Ls | Method::Pg) | (ProblemKind::Dirichlet, Method::Newton)
        );
        if !compatible {
            return Err(err(
                "method.kind",
                format!(
                    "`{}` does not apply to {} problems",
                    method.name(),
                    problem.kind().name()
                ),
            ));
        }
        if !(self.method.tol.is_finite() && self.method.tol > 0.0) {
            return Err(err("method.tol", "must be finite and > 0"));
        }
        if self.method.max_iter == 0 {
            return Err(err("method.max_iter", "must be at least 1"));
        }
        let c = &self.certify;
        let positive = [
            ("certify.infsup_min", c.infsup_min),
            ("certify.amplitude", c.amplitude),
            ("certify.s_max", c.s_max),
            ("certify.target_ratio", c.target_ratio),
        ];
        for (key, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(err(key, "must be finite and > 0"));
            }
        }
        let counts = [
            ("certify.monotone_samples", c.monotone_samples),
            ("certify.coercivity_directions", c.coercivity_directions),
            ("certify.coercivity_scales", c.coercivity_scales),
            ("certify.hemicontinuity_probes", c.hemicontinuity_probes),
        ];
        for (key, v) in counts {
            if v == 0 {
                return Err(err(key, "must be at least 1"));
            }
        }
        if c.coercivity_scales < 2 {
            return Err(err("certify.coercivity_scales", "must be at least 2"));
        }
        let tol = self.stabilization.tol;
        if !(tol.is_finite() && tol > 0.0) {
            return Err(err("stabilization.tol", "must be finite and > 0"));
        }
        Ok(RunOptions {
            level: LevelOptions {
                method,
                quadrature: m.quadrature,
                newton: NewtonOptions {
                    tol: self.method.tol,
                    max_iter: self.method.max_iter,
                    max_halvings: self.method.max_halvings,
                },
                certify: CertifyOptions {
                    seed: self.seed,
                    infsup_min: c.infsup_min,
                    monotone_samples: c.monotone_samples,
                    amplitude: c.amplitude,
                    coercivity_directions: c.coercivity_directions,
                    coercivity_scales: c.coercivity_scales,
                    s_max: c.s_max,
                    target_ratio: c.target_ratio,
                    hemicontinuity_probes: c.hemicontinuity_probes,
                },
            },
            mesh: MeshPolicy {
                initial_elements: m.initial_elements,
                growth: m.growth,
                gamma: m.gamma,
            },
            stabilization_tol: tol,
            error_interval: self.stabilization.error_interval.map(|[p, q]| (p, q)),
        })
    }

    fn build_probes(&self, problem: &Problem, schedule: &SubdomainSchedule) -> Result<Vec<Probe>, ConfigError> {
        let first = schedule.level(1);
        let outer = schedule.level(schedule.max_levels());
        let probes = match &self.probes {
            None => Probe::hats_in(first.left, first.right, 3),
            Some(ProbesConfig {
                explicit: Some(list),
                count,
                interval,
            }) => {
                if count.is_some() || interval.is_some() {
                    return Err(err("probes.explicit", "cannot be combined with count/interval"));
                }
                list.clone()
            }
            Some(ProbesConfig { count, interval, .. }) => {
                let count = count.ok_or_else(|| err("probes.count", "required unless probes.explicit is given"))?;
                let [p, q] = interval.unwrap_or([first.left, first.right]);
                if !(p.is_finite() && q.is_finite() && p < q) {
                    return Err(err("probes.interval", "must be [p, q] with p < q"));
                }
                Probe::hats_in(p, q, count)
            }
        };
        for (i, p) in probes.iter().enumerate() {
            let key = format!("probes[{i}]");
            if !p.is_valid() {
                return Err(err(&key, "support must be a non-empty finite interval"));
            }
            if !p.inside(outer.left, outer.right) {
                return Err(err(&key, "support lies outside every scheduled subdomain"));
            }
            if matches!(p, Probe::Indicator { .. }) && problem.kind() == ProblemKind::Dirichlet {
                return Err(err(&key, "indicator probes are not admissible for dirichlet problems"));
            }
        }
        Ok(probes)
    }

    fn build_study(&self) -> Result<Vec<usize>, ConfigError> {
        let s = self.study.clone().unwrap_or_default();
        if s.start < 2 {
            return Err(err("study.start", "must be at least 2"));
        }
        if s.factor < 2 {
            return Err(err("study.factor", "must be at least 2"));
        }
        if s.count == 0 {
            return Err(err("study.count", "must be at least 1"));
        }
        Ok((0..s.count).map(|k| s.start * s.factor.pow(k as u32)).collect())
    }
}
