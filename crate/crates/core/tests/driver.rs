use proptest::prelude::*;

use exgal_core::coeff::{Expression, MonotoneScalarFn};
use exgal_core::exhaust::{
    run_exhaustion, CauchyProblem, DirichletProblem, Method, Probe, Problem, RunOptions, SubdomainSchedule,
};

fn expr(text: &str, var: &str) -> Expression {
    Expression::parse(text, var).unwrap()
}

fn cauchy(a: &str, f: &str) -> Problem {
    Problem::Cauchy(CauchyProblem {
        a: expr(a, "t"),
        f: expr(f, "t"),
        exact: None,
    })
}

fn small(method: Method) -> RunOptions {
    let mut opts = RunOptions::new(method);
    opts.mesh.initial_elements = 16;
    opts.level.certify.monotone_samples = 10;
    opts.level.certify.coercivity_directions = 3;
    opts.level.certify.coercivity_scales = 4;
    opts
}

fn dirichlet(scale: f64, g: &str) -> Problem {
    Problem::Dirichlet(DirichletProblem {
        a: expr("1 + x", "x"),
        c1: 1.0,
        c2: scale,
        psi: MonotoneScalarFn::new(exgal_core::coeff::MonotoneKind::Tanh, scale).unwrap(),
        g: expr(g, "x"),
        h_bound: expr(&format!("abs({g})"), "x"),
        exact: None,
    })
}

#[test]
fn zero_load_stabilizes_at_second_level() {
    let schedule = SubdomainSchedule::cauchy_geometric(0.5, 0.5, 5).unwrap();
    let probes = Probe::hats_in(0.5, 1.0, 3);
    let report = run_exhaustion(&cauchy("1/t", "0"), &schedule, &probes, &small(Method::Ls)).unwrap();
    assert_eq!(report.stabilized_at, Some(2));
    assert_eq!(report.levels.len(), 2);
    for level in &report.levels {
        assert!(level.solution.values.iter().all(|v| *v == 0.0));
    }
    let u = report.final_solution.unwrap();
    assert_eq!(u.left(), 0.0);
    assert!(u.values.iter().all(|v| *v == 0.0));
}

#[test]
fn identical_inputs_give_identical_reports() {
    let schedule = SubdomainSchedule::dirichlet_geometric(0.5, 0.5, 0.5, 3).unwrap();
    let probes = Probe::hats_in(0.25, 0.75, 2);
    let problem = dirichlet(1.0, "-2 + x");
    let opts = small(Method::Newton);
    let a = run_exhaustion(&problem, &schedule, &probes, &opts).unwrap();
    let b = run_exhaustion(&problem, &schedule, &probes, &opts).unwrap();
    assert_eq!(a, b);
}

#[test]
fn extended_solution_vanishes_outside_last_subdomain() {
    let schedule = SubdomainSchedule::cauchy_geometric(0.5, 0.5, 3).unwrap();
    let probes = Probe::hats_in(0.5, 1.0, 3);
    let report = run_exhaustion(&cauchy("1/t", "3*t"), &schedule, &probes, &small(Method::Ls)).unwrap();
    let u = report.final_solution.unwrap();
    let last = report.levels.last().unwrap();
    assert_eq!(u.eval(last.subdomain.left / 2.0), 0.0);
    let node = last.solution.nodes[5];
    assert_eq!(u.eval(node), last.solution.values[5]);
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 12, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn cauchy_levels_respect_norm_bound(c0 in -2.0f64..2.0, c1 in -2.0f64..2.0, pg in any::<bool>()) {
        let method = if pg { Method::Pg } else { Method::Ls };
        let schedule = SubdomainSchedule::cauchy_geometric(0.5, 0.5, 4).unwrap();
        let probes = Probe::hats_in(0.5, 1.0, 3);
        let problem = cauchy("1/t", &format!("{c0} + ({c1})*t*t"));
        let report = run_exhaustion(&problem, &schedule, &probes, &small(method)).unwrap();
        prop_assert!(report.failure.is_none());
        for l in &report.levels {
            prop_assert!(l.certificate.infsup_c * l.norm_x <= l.load_norm + 1e-8);
            prop_assert!(l.algebraic_residual <= 1e-10);
        }
    }

    #[test]
    fn active_probe_count_is_nondecreasing(count in 1usize..5, p in 0.3f64..0.6) {
        let schedule = SubdomainSchedule::dirichlet_geometric(0.5, 0.5, 0.5, 4).unwrap();
        let probes = Probe::hats_in(p / 2.0, 1.0 - p / 2.0, count);
        let mut opts = small(Method::Newton);
        opts.stabilization_tol = 1e-14;
        let report = run_exhaustion(&dirichlet(1.0, "-1"), &schedule, &probes, &opts).unwrap();
        let counts: Vec<usize> = report.levels.iter().map(|l| l.probe_residuals.len()).collect();
        prop_assert!(counts.windows(2).all(|w| w[0] <= w[1]), "{:?}", counts);
        prop_assert_eq!(*counts.last().unwrap(), count);
    }

    #[test]
    fn dirichlet_levels_respect_energy_bound(scale in 0.0f64..3.0, g0 in -3.0f64..3.0) {
        let schedule = SubdomainSchedule::dirichlet_geometric(0.5, 0.5, 0.5, 3).unwrap();
        let probes = Probe::hats_in(0.25, 0.75, 2);
        let report = run_exhaustion(&dirichlet(scale, &format!("{g0} + x")), &schedule, &probes, &small(Method::Newton)).unwrap();
        prop_assert!(report.failure.is_none());
        for l in &report.levels {
            prop_assert!(l.norm_x <= l.load_norm + 1e-8);
            prop_assert!(l.certificate.infsup_c * l.norm_x <= l.load_norm + 1e-8);
            prop_assert!(l.certificate.monotonicity_min.unwrap() >= -1e-12);
        }
    }
}
