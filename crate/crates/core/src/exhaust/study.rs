use serde::Serialize;

use crate::assemble::QuadratureRule;
use crate::coeff::{EvalError, Expression};
use crate::mesh::{graded_mesh, uniform_mesh};

use super::function::{h1_seminorm, h1_seminorm_diff, relative_h1_error, ExactSolution};
use super::{coefficient_error, solve_level, ExhaustError, LevelOptions, Problem, Subdomain};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StudyRow {
    pub elements: usize,
    pub h: f64,
    pub error_x: f64,
    pub observed_rate: Option<f64>,
}

/// Exact solution of the Cauchy level problem on `(alpha, 1)`:
/// `u_n = u - u(alpha) exp(-int_alpha^t a)`, so
/// `u_n' = u' + u(alpha) a(t) exp(-int_alpha^t a)`.
pub struct CauchyLevelExact<'a> {
    a: &'a Expression,
    exact: &'a ExactSolution,
    u_alpha: f64,
    nodes: Vec<f64>,
    cumulative: Vec<f64>,
    quad: QuadratureRule,
}

const PRIMITIVE_CELLS: usize = 4096;

impl<'a> CauchyLevelExact<'a> {
    pub fn new(a: &'a Expression, exact: &'a ExactSolution, alpha: f64) -> Result<Self, ExhaustError> {
        let quad = QuadratureRule::gauss_legendre(8)?;
        let mesh = uniform_mesh(alpha, 1.0, PRIMITIVE_CELLS)?;
        let mut cumulative = Vec::with_capacity(PRIMITIVE_CELLS + 1);
        cumulative.push(0.0);
        let mut acc = 0.0;
        for (x0, x1) in mesh.elements() {
            acc += quad
                .try_integrate(x0, x1, |t| a.eval(t))
                .map_err(coefficient_error("a"))?;
            cumulative.push(acc);
        }
        let u_alpha = exact.eval(alpha).map_err(coefficient_error("exact"))?;
        Ok(CauchyLevelExact {
            a,
            exact,
            u_alpha,
            nodes: mesh.nodes().to_vec(),
            cumulative,
            quad,
        })
    }

    /// `int_alpha^t a`.
    pub fn primitive(&self, t: f64) -> Result<f64, EvalError> {
        let i = self.nodes.partition_point(|&n| n <= t).clamp(1, self.nodes.len() - 1) - 1;
        let x0 = self.nodes[i];
        Ok(self.cumulative[i] + self.quad.try_integrate(x0, t, |s| self.a.eval(s))?)
    }

    pub fn slope(&self, t: f64) -> Result<f64, EvalError> {
        let du = self.exact.slope(t)?;
        if self.u_alpha == 0.0 {
            return Ok(du);
        }
        Ok(du + self.u_alpha * self.a.eval(t)? * (-self.primitive(t)?).exp())
    }
}

/// Fixed subdomain, sweep of element counts. Cauchy errors are measured
/// against the exact level solution built from the manufactured solution;
/// Dirichlet errors against a reference solve with 16 times the largest
/// element count.
pub fn convergence_study(
    problem: &Problem,
    sub: Subdomain,
    counts: &[usize],
    gamma: f64,
    opts: &LevelOptions,
) -> Result<Vec<StudyRow>, ExhaustError> {
    if counts.is_empty() {
        return Err(ExhaustError::Options("study needs at least one element count".into()));
    }
    let quad = QuadratureRule::gauss_legendre(opts.quadrature)?;
    let mut errors = Vec::with_capacity(counts.len());
    match problem {
        Problem::Cauchy(p) => {
            let exact = p.exact.as_ref().ok_or(ExhaustError::MissingExact)?;
            let level_exact = CauchyLevelExact::new(&p.a, exact, sub.left)?;
            for &m in counts {
                let mesh = graded_mesh(sub.left, sub.right, m, gamma)?;
                let h = mesh.max_element_length();
                let sol = solve_level(problem, 1, mesh, opts)?;
                let e = relative_h1_error(&sol.solution, |t| level_exact.slope(t), sub.left, sub.right, &quad)
                    .map_err(coefficient_error("exact"))?;
                errors.push((m, h, e));
            }
        }
        Problem::Dirichlet(_) => {
            let fine = counts.iter().max().unwrap() * 16;
            let reference = solve_level(problem, 1, graded_mesh(sub.left, sub.right, fine, gamma)?, opts)?.solution;
            let scale = h1_seminorm(&reference, sub.left, sub.right);
            for &m in counts {
                let mesh = graded_mesh(sub.left, sub.right, m, gamma)?;
                let h = mesh.max_element_length();
                let sol = solve_level(problem, 1, mesh, opts)?;
                let d = h1_seminorm_diff(&sol.solution, &reference, sub.left, sub.right);
                errors.push((m, h, if scale > 0.0 { d / scale } else { d }));
            }
        }
    }
    let mut rows = Vec::with_capacity(errors.len());
    for (k, &(elements, h, error_x)) in errors.iter().enumerate() {
        let observed_rate = if k == 0 {
            None
        } else {
            let (_, hp, ep) = errors[k - 1];
            let rate = (ep / error_x).ln() / (hp / h).ln();
            rate.is_finite().then_some(rate)
        };
        rows.push(StudyRow {
            elements,
            h,
            error_x,
            observed_rate,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exhaust::{CauchyProblem, Method};

    fn exact(s: &str) -> ExactSolution {
        ExactSolution {
            value: Expression::parse(s, "t").unwrap(),
            derivative: None,
        }
    }

    #[test]
    fn level_exact_matches_closed_form() {
        // a = 1/t, u = t^2, alpha = 1/4: u_n' = 2t + alpha^3 / t^2
        let a = Expression::parse("1/t", "t").unwrap();
        let u = exact("t^2");
        let le = CauchyLevelExact::new(&a, &u, 0.25).unwrap();
        for t in [0.25, 0.3, 0.5, 0.77, 1.0] {
            let want = 2.0 * t + 0.25f64.powi(3) / (t * t);
            assert!((le.slope(t).unwrap() - want).abs() < 1e-9, "{t}");
        }
        assert!((le.primitive(1.0).unwrap() - 4f64.ln()).abs() < 1e-13);
    }

    #[test]
    fn representable_solution_has_zero_error() {
        let p = Problem::Cauchy(CauchyProblem {
            a: Expression::parse("0", "t").unwrap(),
            f: Expression::parse("1", "t").unwrap(),
            exact: Some(exact("t")),
        });
        let sub = Subdomain { left: 0.25, right: 1.0 };
        let rows = convergence_study(&p, sub, &[8, 16, 32], 2.0, &LevelOptions::new(Method::Ls)).unwrap();
        for r in &rows {
            assert!(r.error_x <= 1e-12, "{r:?}");
        }
        let one = convergence_study(&p, sub, &[8], 2.0, &LevelOptions::new(Method::Ls)).unwrap();
        assert_eq!(one.len(), 1);
        assert!(one[0].observed_rate.is_none());
    }

    #[test]
    fn missing_exact_is_an_error() {
        let p = Problem::Cauchy(CauchyProblem {
            a: Expression::parse("0", "t").unwrap(),
            f: Expression::parse("1", "t").unwrap(),
            exact: None,
        });
        let r = convergence_study(
            &p,
            Subdomain { left: 0.25, right: 1.0 },
            &[8],
            1.0,
            &LevelOptions::new(Method::Ls),
        );
        assert_eq!(r, Err(ExhaustError::MissingExact));
    }
}
