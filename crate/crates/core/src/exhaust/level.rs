use crate::assemble::{
    assemble_diffusion_sampled, assemble_load_sampled, assemble_ls_graph_sampled, assemble_ls_load_sampled,
    assemble_transport_sampled, gram_h1_seminorm, gram_l2, nemytskii_residual, nemytskii_tangent, FeSpace,
    QuadratureRule, Sampled,
};
use crate::certify::{
    band_constants, check_coercivity, check_monotone, default_t_sequence, geometric_scales, hemicontinuity_probe,
    random_directions, square_constants_from_normal, symmetric_constants, Certificate, CoercivityEstimate,
    SamplingPlan, Verdict,
};
use crate::linalg::{dot, norm_inf, TriBand};
use crate::mesh::Mesh;

use super::function::breakpoints;
use super::{
    coefficient_error, CauchyProblem, CertifyOptions, DirichletProblem, ExhaustError, LevelOptions, LevelSolution,
    Method, NewtonStats, P1Function, Probe, Problem, Subdomain,
};

type Result<T> = std::result::Result<T, ExhaustError>;

/// Solves one level with the configured method.
pub fn solve_level(problem: &Problem, level: usize, mesh: Mesh, opts: &LevelOptions) -> Result<LevelSolution> {
    match (problem, opts.method) {
        (Problem::Cauchy(p), Method::Ls) => solve_level_cauchy_ls(p, level, mesh, opts),
        (Problem::Cauchy(p), Method::Pg) => solve_level_cauchy_pg(p, level, mesh, opts),
        (Problem::Dirichlet(p), Method::Newton) => solve_level_dirichlet(p, level, mesh, opts),
        _ => Err(ExhaustError::Method {
            method: opts.method.name(),
            kind: problem.kind().name(),
        }),
    }
}

fn relative_residual(lhs: &[f64], rhs: &[f64]) -> f64 {
    let diff: Vec<f64> = lhs.iter().zip(rhs).map(|(a, b)| a - b).collect();
    let scale = norm_inf(rhs);
    if scale > 0.0 {
        norm_inf(&diff) / scale
    } else {
        norm_inf(&diff)
    }
}

fn x_norm(mx: &TriBand, x: &[f64]) -> f64 {
    mx.quad_form(x).max(0.0).sqrt()
}

/// `sqrt(r^T M^-1 r)`.
fn dual_norm(m: &TriBand, r: &[f64]) -> Result<f64> {
    let z = m.cholesky_solve(r)?;
    Ok(dot(r, &z).max(0.0).sqrt())
}

fn level_function(trial: &FeSpace, x: &[f64]) -> P1Function {
    P1Function::new(trial.mesh().nodes().to_vec(), trial.nodal_values(x))
}

fn subdomain(mesh: &Mesh) -> Subdomain {
    Subdomain {
        left: mesh.left(),
        right: mesh.right(),
    }
}

/// `a >= 0` and `a` non-increasing, checked at every quadrature point.
fn cauchy_hypotheses(cert: &mut Certificate, a: &Sampled) {
    // element-major samples with ascending points are already sorted by position
    let vals = a.values();
    let min = vals.iter().copied().fold(f64::INFINITY, f64::min);
    let scale = vals.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let rise = vals.windows(2).map(|w| w[1] - w[0]).fold(0.0f64, f64::max);
    cert.push(Verdict::at_least("coefficient_nonnegative", min, 0.0));
    cert.push(Verdict::at_most("coefficient_decreasing", rise, 1e-12 * scale));
}

/// Monotonicity, coercivity and hemicontinuity evidence for `T`, sampled
/// around `base`.
fn sampled_properties<T>(
    cert: &mut Certificate,
    apply_t: T,
    mx: &TriBand,
    base: &[f64],
    estimate: Option<CoercivityEstimate>,
    opts: &CertifyOptions,
) where
    T: Fn(&[f64]) -> Vec<f64>,
{
    let dim = base.len();
    let plan = SamplingPlan {
        samples: opts.monotone_samples,
        seed: opts.seed,
        amplitude: opts.amplitude,
    };
    cert.attach_monotonicity(check_monotone(&apply_t, dim, &plan));

    let normalise = |mut d: Vec<f64>| {
        let n = x_norm(mx, &d);
        d.iter_mut().for_each(|v| *v /= n);
        d
    };
    let directions: Vec<Vec<f64>> = random_directions(dim, opts.coercivity_directions, opts.seed.wrapping_add(1))
        .into_iter()
        .map(normalise)
        .collect();
    let scales = geometric_scales(opts.s_max, opts.coercivity_scales);
    let report = check_coercivity(
        |x| dot(&apply_t(x), x),
        |x| x_norm(mx, x),
        &directions,
        &scales,
        opts.target_ratio,
        estimate,
    );
    cert.attach_coercivity(report);

    let y = normalise(random_directions(dim, 1, opts.seed.wrapping_add(2)).remove(0));
    let probes = random_directions(dim, opts.hemicontinuity_probes, opts.seed.wrapping_add(3));
    let hemi = hemicontinuity_probe(&apply_t, base, &y, &default_t_sequence(), &probes);
    cert.attach_hemicontinuity(&hemi);
}

/// Least squares: minimise `|u' + a u - f|` over P1 with `u(alpha) = 0`.
/// The certificate treats the graph-norm Gram `N` as both form and test
/// Gram, so the inf-sup constant is `sqrt(lambda_min(N, M_X))`.
pub fn solve_level_cauchy_ls(
    p: &CauchyProblem,
    level: usize,
    mesh: Mesh,
    opts: &LevelOptions,
) -> Result<LevelSolution> {
    let quad = QuadratureRule::gauss_legendre(opts.quadrature)?;
    let a = Sampled::new(&p.a, "a", &mesh, &quad)?;
    let f = Sampled::new(&p.f, "f", &mesh, &quad)?;
    let elements = mesh.element_count();
    let sub = subdomain(&mesh);
    let trial = FeSpace::p1(mesh, true, false);
    let n = assemble_ls_graph_sampled(&trial, &a, &quad)?;
    let b = assemble_ls_load_sampled(&trial, &a, &f, &quad)?;
    let x = n.cholesky_solve(&b).map_err(|e| ExhaustError::Hypothesis {
        level,
        detail: format!("graph-norm matrix is not positive definite ({e})"),
    })?;
    let mx = gram_h1_seminorm(&trial)?;
    let constants = square_constants_from_normal(&n, &mx)?;
    let dim = trial.dim();
    let mut cert = Certificate::new(level, dim, dim, constants, opts.certify.infsup_min);
    cauchy_hypotheses(&mut cert, &a);
    cert.push(Verdict::at_least(
        "graph_norm_estimate",
        constants.infsup_c * constants.infsup_c,
        1.0 - 1e-6,
    ));
    sampled_properties(&mut cert, |u| n.matvec(u), &mx, &x, None, &opts.certify);

    let nx = n.matvec(&x);
    Ok(LevelSolution {
        level,
        subdomain: sub,
        elements,
        dim,
        norm_x: x_norm(&mx, &x),
        load_norm: dot(&b, &x).max(0.0).sqrt(),
        algebraic_residual: relative_residual(&nx, &b),
        certificate: cert,
        probe_residuals: Vec::new(),
        self_pairing: Some(dot(&nx, &x)),
        overlap_diff: None,
        newton: None,
        error_vs_exact: None,
        solution: level_function(&trial, &x),
        coefficients: x,
    })
}

/// Petrov-Galerkin: P1 trial with `u(alpha) = 0`, P0 test, square system.
pub fn solve_level_cauchy_pg(
    p: &CauchyProblem,
    level: usize,
    mesh: Mesh,
    opts: &LevelOptions,
) -> Result<LevelSolution> {
    let quad = QuadratureRule::gauss_legendre(opts.quadrature)?;
    let a = Sampled::new(&p.a, "a", &mesh, &quad)?;
    let f = Sampled::new(&p.f, "f", &mesh, &quad)?;
    let elements = mesh.element_count();
    let sub = subdomain(&mesh);
    let test = FeSpace::p0(mesh.clone());
    let trial = FeSpace::p1(mesh, true, false);
    let b = assemble_transport_sampled(&trial, &test, &a, &quad)?;
    let load = assemble_load_sampled(&test, &f, &quad)?;
    let x = b.lu_solve(&load).map_err(|e| ExhaustError::Degenerate {
        level,
        detail: e.to_string(),
    })?;
    let mx = gram_h1_seminorm(&trial)?;
    let my = gram_l2(&test);
    let constants = band_constants(&b, &mx, &my)?;
    let mut cert = Certificate::new(level, trial.dim(), test.dim(), constants, opts.certify.infsup_min);
    cauchy_hypotheses(&mut cert, &a);
    let load_norm = load
        .iter()
        .zip(my.diagonal())
        .map(|(l, w)| l * l / w)
        .sum::<f64>()
        .sqrt();

    Ok(LevelSolution {
        level,
        subdomain: sub,
        elements,
        dim: trial.dim(),
        norm_x: x_norm(&mx, &x),
        load_norm,
        algebraic_residual: relative_residual(&b.matvec(&x), &load),
        certificate: cert,
        probe_residuals: Vec::new(),
        self_pairing: None,
        overlap_diff: None,
        newton: None,
        error_vs_exact: None,
        solution: level_function(&trial, &x),
        coefficients: x,
    })
}

struct DirichletLevel<'a> {
    psi: &'a crate::coeff::MonotoneScalarFn,
    trial: FeSpace,
    quad: QuadratureRule,
    k: TriBand,
    g: Sampled,
}

impl DirichletLevel<'_> {
    /// `K x + int (psi(u_h) + g) phi`.
    fn operator(&self, x: &[f64]) -> Vec<f64> {
        let mut r =
            nemytskii_residual(&self.trial, self.psi, &self.g, x, &self.quad).expect("dimension fixed by the level");
        for (ri, ki) in r.iter_mut().zip(self.k.matvec(x)) {
            *ri += ki;
        }
        r
    }

    fn tangent(&self, x: &[f64]) -> Result<TriBand> {
        let psi = self.psi;
        Ok(self
            .k
            .plus(&nemytskii_tangent(&self.trial, |v| psi.derivative(v), x, &self.quad)?))
    }
}

/// Damped Newton for `K x + N(x) = 0` from `x = 0`. A step is kept when the
/// dual norm of the residual decreases, halving up to `max_halvings` times;
/// if no halving helps, one Picard step with the frozen tangent
/// `K + psi'(0) M` is tried instead.
pub fn solve_level_dirichlet(
    p: &DirichletProblem,
    level: usize,
    mesh: Mesh,
    opts: &LevelOptions,
) -> Result<LevelSolution> {
    let quad = QuadratureRule::gauss_legendre(opts.quadrature)?;
    let a = Sampled::new(&p.a, "a", &mesh, &quad)?;
    let g = Sampled::new(&p.g, "g", &mesh, &quad)?;
    let h = Sampled::new(&p.h_bound, "h_bound", &mesh, &quad)?;
    let elements = mesh.element_count();
    let sub = subdomain(&mesh);
    let trial = FeSpace::p1(mesh, true, true);
    if trial.dim() == 0 {
        return Err(ExhaustError::Options(
            "Dirichlet level needs at least two elements".into(),
        ));
    }
    let k = assemble_diffusion_sampled(&trial, &a, &quad)?;
    let mx = gram_h1_seminorm(&trial)?;
    let lvl = DirichletLevel {
        psi: &p.psi,
        trial,
        quad,
        k,
        g,
    };
    let dim = lvl.trial.dim();
    let newton = opts.newton;

    let zero = vec![0.0; dim];
    let load = nemytskii_residual(&lvl.trial, &p.psi, &lvl.g, &zero, &lvl.quad)?;
    let load_norm = dual_norm(&mx, &load)?;

    let mut x = zero;
    let mut r = lvl.operator(&x);
    let mut rn = dual_norm(&mx, &r)?;
    let mut iterations = 0;
    let mut picard_steps = 0;
    let mut picard: Option<TriBand> = None;
    let try_step = |x: &[f64], dx: &[f64], rn: f64| -> Result<Option<(Vec<f64>, Vec<f64>, f64)>> {
        let mut t = 1.0;
        for _ in 0..=newton.max_halvings {
            let cand: Vec<f64> = x.iter().zip(dx).map(|(a, b)| a + t * b).collect();
            let rc = lvl.operator(&cand);
            let nc = dual_norm(&mx, &rc)?;
            if nc < rn {
                return Ok(Some((cand, rc, nc)));
            }
            t *= 0.5;
        }
        Ok(None)
    };
    while rn > newton.tol {
        if iterations >= newton.max_iter {
            return Err(ExhaustError::NewtonFailed {
                level,
                iterations,
                residual: rn,
            });
        }
        iterations += 1;
        let neg: Vec<f64> = r.iter().map(|v| -v).collect();
        let dx = lvl
            .tangent(&x)?
            .cholesky_solve(&neg)
            .map_err(|e| ExhaustError::Hypothesis {
                level,
                detail: format!("Newton tangent is not positive definite ({e})"),
            })?;
        let step = match try_step(&x, &dx, rn)? {
            Some(s) => Some(s),
            None => {
                if picard.is_none() {
                    let d0 = p.psi.derivative(0.0);
                    picard = Some(lvl.k.plus(&nemytskii_tangent(&lvl.trial, |_| d0, &x, &lvl.quad)?));
                }
                picard_steps += 1;
                let dx = picard.as_ref().unwrap().cholesky_solve(&neg)?;
                try_step(&x, &dx, rn)?
            }
        };
        match step {
            Some((xn, rnew, nn)) => {
                x = xn;
                r = rnew;
                rn = nn;
            }
            None => {
                return Err(ExhaustError::NewtonFailed {
                    level,
                    iterations,
                    residual: rn,
                })
            }
        }
    }

    let constants = symmetric_constants(&lvl.k, &mx)?;
    let mut cert = Certificate::new(level, dim, dim, constants, opts.certify.infsup_min);
    let a_min = a.values().iter().copied().fold(f64::INFINITY, f64::min);
    cert.push(Verdict::at_least("diffusion_lower_bound", a_min, p.c1));
    let psi0 = p.psi.value(0.0);
    let excess = lvl
        .g
        .values()
        .iter()
        .zip(h.values())
        .map(|(g, h)| (psi0 + g).abs() - h)
        .fold(f64::NEG_INFINITY, f64::max);
    cert.push(Verdict::at_most("growth_bound", excess, 0.0));
    cert.push(Verdict::at_most("growth_constant", p.psi.growth(), p.c2));
    let h_norm = (0..lvl.trial.mesh().element_count())
        .map(|e| {
            let (x0, x1) = lvl.trial.mesh().element(e);
            let hv = h.element(e);
            lvl.quad.weights().iter().zip(hv).map(|(w, v)| w * v * v).sum::<f64>() * (x1 - x0)
        })
        .sum::<f64>()
        .sqrt();
    let estimate = CoercivityEstimate { c1: p.c1, h_norm };
    sampled_properties(&mut cert, |u| lvl.operator(u), &mx, &x, Some(estimate), &opts.certify);

    let tx = lvl.operator(&x);
    Ok(LevelSolution {
        level,
        subdomain: sub,
        elements,
        dim,
        norm_x: x_norm(&mx, &x),
        load_norm,
        algebraic_residual: if load_norm > 0.0 { rn / load_norm } else { rn },
        certificate: cert,
        probe_residuals: Vec::new(),
        self_pairing: Some(dot(&tx, &x)),
        overlap_diff: None,
        newton: Some(NewtonStats {
            iterations,
            picard_steps,
            residual: rn,
        }),
        error_vs_exact: None,
        solution: level_function(&lvl.trial, &x),
        coefficients: x,
    })
}

fn check_support(u: &P1Function, v: &Probe) -> Result<()> {
    if v.inside(u.left(), u.right()) {
        Ok(())
    } else {
        let (left, right) = v.support();
        Err(ExhaustError::Probe { index: 0, left, right })
    }
}

fn probe_pieces(u: &P1Function, v: &Probe) -> Vec<f64> {
    let (a, b) = v.support();
    breakpoints(a, b, &[u.nodes_in(a, b), &v.kinks()])
}

/// `A(u_h, v)` by quadrature on the breakpoints of `u_h` and `v`:
/// `int (u' + a u) v` for Cauchy, `int a u' v' + (psi(u) + g) v` for Dirichlet.
pub fn evaluate_form(problem: &Problem, u: &P1Function, v: &Probe, quad: &QuadratureRule) -> Result<f64> {
    check_support(u, v)?;
    let pieces = probe_pieces(u, v);
    let mut total = 0.0;
    for w in pieces.windows(2) {
        let du = u.slope(0.5 * (w[0] + w[1]));
        total += match problem {
            Problem::Cauchy(p) => quad.try_integrate(w[0], w[1], |x| {
                let a = p.a.eval(x).map_err(coefficient_error("a"))?;
                Ok::<_, ExhaustError>((du + a * u.eval(x)) * v.value(x))
            })?,
            Problem::Dirichlet(p) => {
                if matches!(v, Probe::Indicator { .. }) {
                    let (left, right) = v.support();
                    return Err(ExhaustError::Probe { index: 0, left, right });
                }
                let dv = v.slope(0.5 * (w[0] + w[1]));
                quad.try_integrate(w[0], w[1], |x| {
                    let a = p.a.eval(x).map_err(coefficient_error("a"))?;
                    let g = p.g.eval(x).map_err(coefficient_error("g"))?;
                    Ok::<_, ExhaustError>(a * du * dv + (p.psi.value(u.eval(x)) + g) * v.value(x))
                })?
            }
        };
    }
    Ok(total)
}

/// `<v*, v>` on the breakpoints of `u_h` and `v`: `int f v` for Cauchy;
/// zero for Dirichlet, whose data sit in the form.
pub fn probe_load(problem: &Problem, u: &P1Function, v: &Probe, quad: &QuadratureRule) -> Result<f64> {
    match problem {
        Problem::Cauchy(p) => {
            check_support(u, v)?;
            let mut total = 0.0;
            for w in probe_pieces(u, v).windows(2) {
                total += quad.try_integrate(w[0], w[1], |x| {
                    p.f.eval(x).map(|f| f * v.value(x)).map_err(coefficient_error("f"))
                })?;
            }
            Ok(total)
        }
        Problem::Dirichlet(_) => Ok(0.0),
    }
}

/// `|A(u_h, v) - <v*, v>|`.
pub fn probe_residual(problem: &Problem, u: &P1Function, v: &Probe, quad: &QuadratureRule) -> Result<f64> {
    Ok((evaluate_form(problem, u, v, quad)? - probe_load(problem, u, v, quad)?).abs())
}
