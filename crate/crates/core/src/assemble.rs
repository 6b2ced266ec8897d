//! Finite-element assembly on a 1D mesh.
//!
//! Trial spaces are continuous piecewise-linear (P1) with optional zero
//! constraints at either endpoint, eliminated from the system; test spaces
//! for the Petrov-Galerkin pairing are piecewise constant (P0). Every
//! operator produced here is tridiagonal and returned as a [`TriBand`].
//!
//! Terms built only from basis derivatives are integrated in closed form
//! (`phi' = +-1/h` on each element), so with a zero coefficient the transport
//! and graph-norm matrices coincide bit-for-bit with their closed-form
//! counterparts. Coefficient terms use Gauss-Legendre quadrature.

use thiserror::Error;

use crate::coeff::{EvalError, Expression, MonotoneScalarFn};
use crate::linalg::TriBand;
use crate::mesh::Mesh;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AssembleError {
    #[error("coefficient `{name}` could not be evaluated: {source}")]
    Coefficient {
        name: String,
        #[source]
        source: EvalError,
    },
    #[error("incompatible spaces: {0}")]
    Space(String),
    #[error("quadrature order must be between 1 and 64, got {0}")]
    QuadratureOrder(usize),
}

/// Gauss-Legendre rule on the reference element `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    points: Vec<f64>,
    weights: Vec<f64>,
    weight_sum: f64,
}

impl QuadratureRule {
    pub fn gauss_legendre(q: usize) -> Result<QuadratureRule, AssembleError> {
        if q == 0 || q > 64 {
            return Err(AssembleError::QuadratureOrder(q));
        }
        let mut nodes = Vec::with_capacity(q);
        for i in 0..q {
            // Newton on P_q from the Tricomi initial guess
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (q as f64 + 0.5)).cos();
            let mut dp = 1.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=q {
                    let k = k as f64;
                    let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                    p0 = p1;
                    p1 = p2;
                }
                let pq = if q == 1 { x } else { p1 };
                let pqm1 = if q == 1 { 1.0 } else { p0 };
                dp = q as f64 * (x * pq - pqm1) / (x * x - 1.0);
                let dx = pq / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes.push((0.5 * (1.0 + x), 0.5 * w));
        }
        nodes.sort_by(|a, b| a.0.total_cmp(&b.0));
        let points: Vec<f64> = nodes.iter().map(|n| n.0).collect();
        let weights: Vec<f64> = nodes.iter().map(|n| n.1).collect();
        let weight_sum = weights.iter().sum();
        Ok(QuadratureRule {
            points,
            weights,
            weight_sum,
        })
    }

    pub fn order(&self) -> usize {
        self.points.len()
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Integral of `f` over `[a, b]`.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let h = b - a;
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(&p, &w)| w * f(a + h * p))
            .sum::<f64>()
            * h
    }

    /// Fallible variant of [`integrate`](Self::integrate).
    pub fn try_integrate<E, F: FnMut(f64) -> Result<f64, E>>(&self, a: f64, b: f64, mut f: F) -> Result<f64, E> {
        let h = b - a;
        let mut s = 0.0;
        for (&p, &w) in self.points.iter().zip(&self.weights) {
            s += w * f(a + h * p)?;
        }
        Ok(s * h)
    }

    /// Element average of sampled values, normalised by the weight sum so
    /// a constant averages to itself exactly.
    fn average(&self, vals: &[f64]) -> f64 {
        self.weights.iter().zip(vals).map(|(w, v)| w * v).sum::<f64>() / self.weight_sum
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpaceKind {
    P1,
    P0,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeSpace {
    mesh: Mesh,
    kind: SpaceKind,
    constrain_left: bool,
    constrain_right: bool,
    dof_of_node: Vec<Option<usize>>,
    dim: usize,
}

impl FeSpace {
    /// P1 space with the value pinned to zero at the chosen endpoints.
    pub fn p1(mesh: Mesh, constrain_left: bool, constrain_right: bool) -> FeSpace {
        let n = mesh.node_count();
        let mut dof_of_node = vec![None; n];
        let mut dim = 0;
        for (k, slot) in dof_of_node.iter_mut().enumerate() {
            let pinned = (k == 0 && constrain_left) || (k == n - 1 && constrain_right);
            if !pinned {
                *slot = Some(dim);
                dim += 1;
            }
        }
        FeSpace {
            mesh,
            kind: SpaceKind::P1,
            constrain_left,
            constrain_right,
            dof_of_node,
            dim,
        }
    }

    pub fn p0(mesh: Mesh) -> FeSpace {
        let dim = mesh.element_count();
        FeSpace {
            mesh,
            kind: SpaceKind::P0,
            constrain_left: false,
            constrain_right: false,
            dof_of_node: Vec::new(),
            dim,
        }
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn kind(&self) -> SpaceKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn constrained(&self) -> (bool, bool) {
        (self.constrain_left, self.constrain_right)
    }

    fn element_dofs(&self, e: usize) -> [Option<usize>; 2] {
        [self.dof_of_node[e], self.dof_of_node[e + 1]]
    }

    /// Nodal values of the P1 function with these free coefficients.
    pub fn nodal_values(&self, coeffs: &[f64]) -> Vec<f64> {
        assert_eq!(self.kind, SpaceKind::P1);
        assert_eq!(coeffs.len(), self.dim);
        self.dof_of_node.iter().map(|d| d.map_or(0.0, |i| coeffs[i])).collect()
    }

    /// Free coefficients of a nodal vector (constrained entries dropped).
    pub fn free_values(&self, nodal: &[f64]) -> Vec<f64> {
        assert_eq!(self.kind, SpaceKind::P1);
        self.dof_of_node
            .iter()
            .zip(nodal)
            .filter_map(|(d, v)| d.map(|_| *v))
            .collect()
    }

    fn require_p1(&self, what: &str) -> Result<(), AssembleError> {
        if self.kind != SpaceKind::P1 {
            return Err(AssembleError::Space(format!("{what} needs a P1 space")));
        }
        Ok(())
    }
}

/// An expression sampled at every quadrature point of a mesh, element-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Sampled {
    q: usize,
    values: Vec<f64>,
}

impl Sampled {
    pub fn new(expr: &Expression, name: &str, mesh: &Mesh, quad: &QuadratureRule) -> Result<Sampled, AssembleError> {
        let mut values = Vec::with_capacity(mesh.element_count() * quad.order());
        for (a, b) in mesh.elements() {
            for &p in quad.points() {
                let x = a + (b - a) * p;
                values.push(expr.eval(x).map_err(|source| AssembleError::Coefficient {
                    name: name.to_string(),
                    source,
                })?);
            }
        }
        Ok(Sampled {
            q: quad.order(),
            values,
        })
    }

    pub fn constant(value: f64, mesh: &Mesh, quad: &QuadratureRule) -> Sampled {
        Sampled {
            q: quad.order(),
            values: vec![value; mesh.element_count() * quad.order()],
        }
    }

    pub fn element(&self, e: usize) -> &[f64] {
        &self.values[e * self.q..(e + 1) * self.q]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    fn check(&self, mesh: &Mesh, quad: &QuadratureRule) -> Result<(), AssembleError> {
        if self.q != quad.order() || self.values.len() != mesh.element_count() * quad.order() {
            return Err(AssembleError::Space(
                "sampled coefficient does not match mesh/quadrature".into(),
            ));
        }
        Ok(())
    }
}

fn add_local(m: &mut TriBand, dofs: [Option<usize>; 2], local: [[f64; 2]; 2]) {
    for (r, dr) in dofs.iter().enumerate() {
        for (c, dc) in dofs.iter().enumerate() {
            if let (Some(i), Some(j)) = (dr, dc) {
                m.add(*i, *j, local[r][c]);
            }
        }
    }
}

/// `int phi_i' phi_j'` over free P1 degrees of freedom.
pub fn gram_h1_seminorm(space: &FeSpace) -> Result<TriBand, AssembleError> {
    space.require_p1("H1 seminorm Gram")?;
    let mut m = TriBand::zeros(space.dim(), space.dim());
    for (e, (a, b)) in space.mesh().elements().enumerate() {
        let k = 1.0 / (b - a);
        add_local(&mut m, space.element_dofs(e), [[k, -k], [-k, k]]);
    }
    Ok(m)
}

/// L2 Gram matrix: element lengths for P0, the tridiagonal mass matrix for P1.
pub fn gram_l2(space: &FeSpace) -> TriBand {
    match space.kind() {
        SpaceKind::P0 => {
            let d: Vec<f64> = space.mesh().elements().map(|(a, b)| b - a).collect();
            TriBand::from_diag(&d)
        }
        SpaceKind::P1 => {
            let mut m = TriBand::zeros(space.dim(), space.dim());
            for (e, (a, b)) in space.mesh().elements().enumerate() {
                let h = b - a;
                add_local(&mut m, space.element_dofs(e), [[h / 3.0, h / 6.0], [h / 6.0, h / 3.0]]);
            }
            m
        }
    }
}

fn same_mesh(a: &FeSpace, b: &FeSpace) -> Result<(), AssembleError> {
    if a.mesh().nodes() != b.mesh().nodes() {
        return Err(AssembleError::Space(
            "trial and test spaces live on different meshes".into(),
        ));
    }
    Ok(())
}

/// `B[i][j] = int_{K_i} (phi_j' + a phi_j)` for P0 test functions `chi_{K_i}`.
pub fn assemble_transport(
    trial: &FeSpace,
    test: &FeSpace,
    a: &Expression,
    quad: &QuadratureRule,
) -> Result<TriBand, AssembleError> {
    let a = Sampled::new(a, "a", trial.mesh(), quad)?;
    assemble_transport_sampled(trial, test, &a, quad)
}

pub fn assemble_transport_sampled(
    trial: &FeSpace,
    test: &FeSpace,
    a: &Sampled,
    quad: &QuadratureRule,
) -> Result<TriBand, AssembleError> {
    trial.require_p1("transport trial")?;
    if test.kind() != SpaceKind::P0 {
        return Err(AssembleError::Space("transport test space must be P0".into()));
    }
    same_mesh(trial, test)?;
    a.check(trial.mesh(), quad)?;
    let mut m = TriBand::zeros(test.dim(), trial.dim());
    for (e, (x0, x1)) in trial.mesh().elements().enumerate() {
        let h = x1 - x0;
        let av = a.element(e);
        let mut left = 0.0;
        let mut right = 0.0;
        for ((&p, &w), &ak) in quad.points().iter().zip(quad.weights()).zip(av) {
            left += w * ak * (1.0 - p);
            right += w * ak * p;
        }
        let dofs = trial.element_dofs(e);
        if let Some(j) = dofs[0] {
            m.add(e, j, -1.0 + h * left);
        }
        if let Some(j) = dofs[1] {
            m.add(e, j, 1.0 + h * right);
        }
    }
    Ok(m)
}

/// Graph-norm Gram matrix `N[j][k] = int (phi_j' + a phi_j)(phi_k' + a phi_k)`.
pub fn assemble_ls_graph(trial: &FeSpace, a: &Expression, quad: &QuadratureRule) -> Result<TriBand, AssembleError> {
    let a = Sampled::new(a, "a", trial.mesh(), quad)?;
    assemble_ls_graph_sampled(trial, &a, quad)
}

pub fn assemble_ls_graph_sampled(
    trial: &FeSpace,
    a: &Sampled,
    quad: &QuadratureRule,
) -> Result<TriBand, AssembleError> {
    trial.require_p1("graph-norm Gram")?;
    a.check(trial.mesh(), quad)?;
    let mut m = TriBand::zeros(trial.dim(), trial.dim());
    for (e, (x0, x1)) in trial.mesh().elements().enumerate() {
        let h = x1 - x0;
        let d = [-1.0 / h, 1.0 / h];
        let mut local = [[0.0; 2]; 2];
        for ((&p, &w), &ak) in quad.points().iter().zip(quad.weights()).zip(a.element(e)) {
            let phi = [1.0 - p, p];
            let wh = w * h;
            for r in 0..2 {
                for c in r..2 {
                    local[r][c] += wh * (ak * (d[r] * phi[c] + phi[r] * d[c]) + ak * ak * phi[r] * phi[c]);
                }
            }
        }
        // derivative-only part in closed form
        local[0][0] += 1.0 / h;
        local[1][1] += 1.0 / h;
        local[0][1] += -1.0 / h;
        local[1][0] = local[0][1];
        add_local(&mut m, trial.element_dofs(e), local);
    }
    Ok(m)
}

/// Least-squares right-hand side `b[j] = int f (phi_j' + a phi_j)`.
pub fn assemble_ls_load_sampled(
    trial: &FeSpace,
    a: &Sampled,
    f: &Sampled,
    quad: &QuadratureRule,
) -> Result<Vec<f64>, AssembleError> {
    trial.require_p1("least-squares load")?;
    a.check(trial.mesh(), quad)?;
    f.check(trial.mesh(), quad)?;
    let mut b = vec![0.0; trial.dim()];
    for (e, (x0, x1)) in trial.mesh().elements().enumerate() {
        let h = x1 - x0;
        let d = [-1.0 / h, 1.0 / h];
        let mut local = [0.0; 2];
        for (((&p, &w), &ak), &fk) in quad
            .points()
            .iter()
            .zip(quad.weights())
            .zip(a.element(e))
            .zip(f.element(e))
        {
            let phi = [1.0 - p, p];
            for r in 0..2 {
                local[r] += w * h * fk * (d[r] + ak * phi[r]);
            }
        }
        for (r, dof) in trial.element_dofs(e).iter().enumerate() {
            if let Some(j) = dof {
                b[*j] += local[r];
            }
        }
    }
    Ok(b)
}

/// `int a phi_i' phi_j'`.
pub fn assemble_diffusion(trial: &FeSpace, a: &Expression, quad: &QuadratureRule) -> Result<TriBand, AssembleError> {
    let a = Sampled::new(a, "a", trial.mesh(), quad)?;
    assemble_diffusion_sampled(trial, &a, quad)
}

pub fn assemble_diffusion_sampled(
    trial: &FeSpace,
    a: &Sampled,
    quad: &QuadratureRule,
) -> Result<TriBand, AssembleError> {
    trial.require_p1("diffusion")?;
    a.check(trial.mesh(), quad)?;
    let mut m = TriBand::zeros(trial.dim(), trial.dim());
    for (e, (x0, x1)) in trial.mesh().elements().enumerate() {
        let k = quad.average(a.element(e)) / (x1 - x0);
        add_local(&mut m, trial.element_dofs(e), [[k, -k], [-k, k]]);
    }
    Ok(m)
}

/// Residual `int (psi(u_h) + g) phi_i` and tangent `int psi'(u_h) phi_i phi_j`
/// of the superposition operator at the P1 function with coefficients `u`.
pub fn assemble_nemytskii(
    trial: &FeSpace,
    psi: &MonotoneScalarFn,
    g: &Expression,
    u: &[f64],
    quad: &QuadratureRule,
) -> Result<(Vec<f64>, TriBand), AssembleError> {
    let g = Sampled::new(g, "g", trial.mesh(), quad)?;
    let residual = nemytskii_residual(trial, psi, &g, u, quad)?;
    let tangent = nemytskii_tangent(trial, |v| psi.derivative(v), u, quad)?;
    Ok((residual, tangent))
}

pub fn nemytskii_residual(
    trial: &FeSpace,
    psi: &MonotoneScalarFn,
    g: &Sampled,
    u: &[f64],
    quad: &QuadratureRule,
) -> Result<Vec<f64>, AssembleError> {
    trial.require_p1("superposition operator")?;
    g.check(trial.mesh(), quad)?;
    if u.len() != trial.dim() {
        return Err(AssembleError::Space(format!(
            "coefficient vector has length {}, space dimension {}",
            u.len(),
            trial.dim()
        )));
    }
    let nodal = trial.nodal_values(u);
    let mut r = vec![0.0; trial.dim()];
    for (e, (x0, x1)) in trial.mesh().elements().enumerate() {
        let h = x1 - x0;
        let mut local = [0.0; 2];
        for ((&p, &w), &gk) in quad.points().iter().zip(quad.weights()).zip(g.element(e)) {
            let uh = nodal[e] * (1.0 - p) + nodal[e + 1] * p;
            let v = w * h * (psi.value(uh) + gk);
            local[0] += v * (1.0 - p);
            local[1] += v * p;
        }
        for (k, dof) in trial.element_dofs(e).iter().enumerate() {
            if let Some(i) = dof {
                r[*i] += local[k];
            }
        }
    }
    Ok(r)
}

/// `int c(u_h) phi_i phi_j` for a pointwise weight `c`, e.g. `psi'`.
pub fn nemytskii_tangent<F: Fn(f64) -> f64>(
    trial: &FeSpace,
    weight: F,
    u: &[f64],
    quad: &QuadratureRule,
) -> Result<TriBand, AssembleError> {
    trial.require_p1("superposition tangent")?;
    if u.len() != trial.dim() {
        return Err(AssembleError::Space(format!(
            "coefficient vector has length {}, space dimension {}",
            u.len(),
            trial.dim()
        )));
    }
    let nodal = trial.nodal_values(u);
    let mut m = TriBand::zeros(trial.dim(), trial.dim());
    for (e, (x0, x1)) in trial.mesh().elements().enumerate() {
        let h = x1 - x0;
        let mut local = [[0.0; 2]; 2];
        for (&p, &w) in quad.points().iter().zip(quad.weights()) {
            let uh = nodal[e] * (1.0 - p) + nodal[e + 1] * p;
            let c = w * h * weight(uh);
            let phi = [1.0 - p, p];
            local[0][0] += c * phi[0] * phi[0];
            local[0][1] += c * phi[0] * phi[1];
            local[1][1] += c * phi[1] * phi[1];
        }
        local[1][0] = local[0][1];
        add_local(&mut m, trial.element_dofs(e), local);
    }
    Ok(m)
}

/// `int f psi_i` for the basis of `test`.
pub fn assemble_load(test: &FeSpace, f: &Expression, quad: &QuadratureRule) -> Result<Vec<f64>, AssembleError> {
    let f = Sampled::new(f, "f", test.mesh(), quad)?;
    assemble_load_sampled(test, &f, quad)
}

pub fn assemble_load_sampled(test: &FeSpace, f: &Sampled, quad: &QuadratureRule) -> Result<Vec<f64>, AssembleError> {
    f.check(test.mesh(), quad)?;
    let mut out = vec![0.0; test.dim()];
    for (e, (x0, x1)) in test.mesh().elements().enumerate() {
        let h = x1 - x0;
        match test.kind() {
            SpaceKind::P0 => out[e] = h * quad.average(f.element(e)),
            SpaceKind::P1 => {
                let mut local = [0.0; 2];
                for ((&p, &w), &fk) in quad.points().iter().zip(quad.weights()).zip(f.element(e)) {
                    local[0] += w * h * fk * (1.0 - p);
                    local[1] += w * h * fk * p;
                }
                for (k, dof) in test.element_dofs(e).iter().enumerate() {
                    if let Some(i) = dof {
                        out[*i] += local[k];
                    }
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeff::parse;
    use crate::linalg::pencil_extremes;
    use crate::mesh::{graded_mesh, uniform_mesh};
    use proptest::prelude::*;

    fn expr(s: &str) -> Expression {
        parse(s, "t").unwrap()
    }

    fn q4() -> QuadratureRule {
        QuadratureRule::gauss_legendre(4).unwrap()
    }

    fn dense(m: &TriBand) -> Vec<Vec<f64>> {
        let d = m.to_dense();
        (0..d.rows()).map(|i| d.row(i).to_vec()).collect()
    }

    fn half_mesh() -> Mesh {
        Mesh::from_nodes(vec![0.0, 0.5, 1.0]).unwrap()
    }

    #[test]
    fn quadrature_rules() {
        for q in 1..=6 {
            let r = QuadratureRule::gauss_legendre(q).unwrap();
            assert!(r.weights().iter().all(|&w| w > 0.0));
            assert!((r.weights().iter().sum::<f64>() - 1.0).abs() < 1e-15);
            for k in 0..2 * q {
                let got = r.integrate(0.0, 1.0, |x| x.powi(k as i32));
                let want = 1.0 / (k as f64 + 1.0);
                assert!((got - want).abs() <= 1e-14 * want, "q={q} k={k}");
            }
        }
        assert!(QuadratureRule::gauss_legendre(0).is_err());
    }

    proptest! {
        #[test]
        fn quadrature_exact_on_random_intervals(a in -3.0f64..3.0, len in 0.01f64..3.0, q in 1usize..=6) {
            let b = a + len;
            let r = QuadratureRule::gauss_legendre(q).unwrap();
            for k in 0..2 * q {
                let kk = k as i32;
                let got = r.integrate(a, b, |x| x.powi(kk));
                let want = (b.powi(kk + 1) - a.powi(kk + 1)) / (kk as f64 + 1.0);
                // relative to the integral of |t|^k so sign cancellation cannot fake a failure
                let mag = r.integrate(a, b, |x| x.abs().powi(kk)).max(1e-300);
                prop_assert!((got - want).abs() <= 1e-13 * mag, "q={} k={} got={} want={}", q, k, got, want);
            }
        }
    }

    #[test]
    fn h1_gram_examples() {
        let s = FeSpace::p1(half_mesh(), true, false);
        assert_eq!(
            dense(&gram_h1_seminorm(&s).unwrap()),
            vec![vec![4.0, -2.0], vec![-2.0, 2.0]]
        );
        let s = FeSpace::p1(uniform_mesh(0.0, 1.0, 1).unwrap(), true, false);
        assert_eq!(dense(&gram_h1_seminorm(&s).unwrap()), vec![vec![1.0]]);
        let s = FeSpace::p1(graded_mesh(0.1, 1.0, 37, 2.0).unwrap(), true, true);
        assert!(gram_h1_seminorm(&s).unwrap().is_symmetric_exact());
        assert!(gram_h1_seminorm(&FeSpace::p0(half_mesh())).is_err());
    }

    #[test]
    fn l2_gram_examples() {
        assert_eq!(
            dense(&gram_l2(&FeSpace::p0(half_mesh()))),
            vec![vec![0.5, 0.0], vec![0.0, 0.5]]
        );
        let s = FeSpace::p1(uniform_mesh(0.0, 1.0, 1).unwrap(), false, false);
        let m = dense(&gram_l2(&s));
        assert!((m[0][0] - 1.0 / 3.0).abs() < 1e-16 && (m[0][1] - 1.0 / 6.0).abs() < 1e-16);
        assert!((m[1][1] - 1.0 / 3.0).abs() < 1e-16 && m[1][0] == m[0][1]);
        assert_eq!(
            dense(&gram_l2(&FeSpace::p0(uniform_mesh(0.0, 1.0, 1).unwrap()))),
            vec![vec![1.0]]
        );
    }

    #[test]
    fn transport_examples() {
        let trial = FeSpace::p1(half_mesh(), true, false);
        let test = FeSpace::p0(half_mesh());
        let b = assemble_transport(&trial, &test, &expr("0"), &q4()).unwrap();
        assert_eq!(dense(&b), vec![vec![1.0, 0.0], vec![-1.0, 1.0]]);

        let one = uniform_mesh(0.0, 1.0, 1).unwrap();
        let trial = FeSpace::p1(one.clone(), true, false);
        let test = FeSpace::p0(one);
        assert_eq!(
            dense(&assemble_transport(&trial, &test, &expr("0"), &q4()).unwrap()),
            vec![vec![1.0]]
        );
        // int phi' + int t dt = 1 + 1/2
        let b = assemble_transport(&trial, &test, &expr("1"), &q4()).unwrap();
        assert!((b.get(0, 0) - 1.5).abs() < 1e-15);

        let other = FeSpace::p0(uniform_mesh(0.0, 1.0, 2).unwrap());
        assert!(assemble_transport(&trial, &other, &expr("1"), &q4()).is_err());
    }

    #[test]
    fn transport_reports_singular_coefficient() {
        let m = uniform_mesh(0.0, 1.0, 4).unwrap();
        let err = assemble_transport(
            &FeSpace::p1(m.clone(), true, false),
            &FeSpace::p0(m.clone()),
            &expr("log(t - 0.5)"),
            &q4(),
        );
        assert!(matches!(err, Err(AssembleError::Coefficient { .. })));
    }

    #[test]
    fn ls_graph_examples() {
        let s = FeSpace::p1(half_mesh(), true, false);
        let n = assemble_ls_graph(&s, &expr("0"), &q4()).unwrap();
        assert_eq!(n, gram_h1_seminorm(&s).unwrap());
        assert_eq!(dense(&n), vec![vec![4.0, -2.0], vec![-2.0, 2.0]]);
        let s = FeSpace::p1(graded_mesh(0.05, 1.0, 50, 2.0).unwrap(), true, false);
        let n = assemble_ls_graph(&s, &expr("1/t"), &q4()).unwrap();
        assert!(n.is_symmetric_exact());
    }

    #[test]
    fn graph_norm_dominates_seminorm() {
        for a in ["1/t", "1/t^2", "2 - t", "0", "exp(-t)"] {
            for alpha in [0.25, 0.0625, 1.0 / 64.0] {
                for mesh in [
                    uniform_mesh(alpha, 1.0, 64).unwrap(),
                    graded_mesh(alpha, 1.0, 100, 2.0).unwrap(),
                ] {
                    let s = FeSpace::p1(mesh, true, false);
                    let n = assemble_ls_graph(&s, &expr(a), &q4()).unwrap();
                    let mx = gram_h1_seminorm(&s).unwrap();
                    let (lmin, _) = pencil_extremes(&n, &mx).unwrap();
                    assert!(lmin >= 1.0 - 1e-6, "a={a} alpha={alpha}: {lmin}");
                }
            }
        }
    }

    #[test]
    fn diffusion_examples() {
        let s = FeSpace::p1(graded_mesh(0.2, 1.0, 17, 1.5).unwrap(), true, true);
        assert_eq!(
            assemble_diffusion(&s, &expr("1"), &q4()).unwrap(),
            gram_h1_seminorm(&s).unwrap()
        );
        let one = FeSpace::p1(uniform_mesh(0.0, 1.0, 1).unwrap(), true, false);
        assert_eq!(
            dense(&assemble_diffusion(&one, &expr("2"), &q4()).unwrap()),
            vec![vec![2.0]]
        );
        // int_{0.5}^1 (1/x) * 2^2 dx = 4 ln 2
        let s = FeSpace::p1(Mesh::from_nodes(vec![0.5, 1.0]).unwrap(), true, false);
        // single-element 4-point Gauss leaves ~3e-6 of quadrature error
        let k = assemble_diffusion(&s, &expr("1/t"), &q4()).unwrap();
        assert!((k.get(0, 0) - 4.0 * 2f64.ln()).abs() < 1e-5, "{}", k.get(0, 0));
        let q12 = QuadratureRule::gauss_legendre(12).unwrap();
        let k = assemble_diffusion(&s, &expr("1/t"), &q12).unwrap();
        assert!((k.get(0, 0) - 4.0 * 2f64.ln()).abs() < 1e-12, "{}", k.get(0, 0));
    }

    #[test]
    fn nemytskii_examples() {
        let mesh = graded_mesh(0.1, 0.9, 9, 1.3).unwrap();
        let s = FeSpace::p1(mesh.clone(), true, true);
        let zero = vec![0.0; s.dim()];
        let (r, t) = assemble_nemytskii(&s, &MonotoneScalarFn::identity(), &expr("0"), &zero, &q4()).unwrap();
        assert!(r.iter().all(|&v| v == 0.0));
        let mass = gram_l2(&s);
        let u: Vec<f64> = (0..s.dim()).map(|i| (i as f64).sin()).collect();
        let (_, t2) = assemble_nemytskii(&s, &MonotoneScalarFn::identity(), &expr("0"), &u, &q4()).unwrap();
        for m in [&t, &t2] {
            for i in 0..s.dim() {
                for j in 0..s.dim() {
                    assert!((m.get(i, j) - mass.get(i, j)).abs() < 1e-15);
                }
            }
        }
        // tanh at u = 0: tangent is the mass matrix, residual is int g phi_i (g = 1: hat areas)
        let (r, t) = assemble_nemytskii(&s, &MonotoneScalarFn::tanh(), &expr("1"), &zero, &q4()).unwrap();
        let nodes = mesh.nodes();
        for i in 0..s.dim() {
            let area = 0.5 * (nodes[i + 2] - nodes[i]);
            assert!((r[i] - area).abs() < 1e-15);
            for j in 0..s.dim() {
                assert!((t.get(i, j) - mass.get(i, j)).abs() < 1e-15);
            }
        }
    }

    proptest! {
        #[test]
        fn nemytskii_tangent_is_psd(seed in any::<u64>()) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let s = FeSpace::p1(graded_mesh(0.0, 1.0, 20, 2.0).unwrap(), true, true);
            let u: Vec<f64> = (0..s.dim()).map(|_| rng.gen_range(-20.0..20.0)).collect();
            let x: Vec<f64> = (0..s.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            for psi in [MonotoneScalarFn::tanh(), MonotoneScalarFn::arctan(), MonotoneScalarFn::identity()] {
                let (_, t) = assemble_nemytskii(&s, &psi, &expr("t"), &u, &q4()).unwrap();
                prop_assert!(t.quad_form(&x) >= -1e-12);
            }
        }
    }

    #[test]
    fn load_examples() {
        let p0 = FeSpace::p0(half_mesh());
        assert_eq!(assemble_load(&p0, &expr("0"), &q4()).unwrap(), vec![0.0, 0.0]);
        assert_eq!(assemble_load(&p0, &expr("1"), &q4()).unwrap(), vec![0.5, 0.5]);
        let one = FeSpace::p0(uniform_mesh(0.0, 1.0, 1).unwrap());
        assert!((assemble_load(&one, &expr("3*t"), &q4()).unwrap()[0] - 1.5).abs() < 1e-15);
        let p1 = FeSpace::p1(half_mesh(), true, false);
        let l = assemble_load(&p1, &expr("1"), &q4()).unwrap();
        assert!((l[0] - 0.5).abs() < 1e-15 && (l[1] - 0.25).abs() < 1e-15);
    }
}
