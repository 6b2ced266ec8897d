use serde::Serialize;

use crate::assemble::QuadratureRule;
use crate::coeff::{EvalError, Expression};

/// Continuous piecewise-linear function given by nodal values, zero outside
/// `[nodes[0], nodes[last]]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct P1Function {
    pub nodes: Vec<f64>,
    pub values: Vec<f64>,
}

impl P1Function {
    pub fn new(nodes: Vec<f64>, values: Vec<f64>) -> P1Function {
        assert_eq!(nodes.len(), values.len());
        assert!(nodes.len() >= 2);
        P1Function { nodes, values }
    }

    pub fn left(&self) -> f64 {
        self.nodes[0]
    }

    pub fn right(&self) -> f64 {
        *self.nodes.last().unwrap()
    }

    /// Index `i` of the cell `[nodes[i], nodes[i+1]]` holding `x`.
    fn cell(&self, x: f64) -> Option<usize> {
        if !(x >= self.left() && x <= self.right()) {
            return None;
        }
        let i = self.nodes.partition_point(|&n| n <= x);
        Some(i.saturating_sub(1).min(self.nodes.len() - 2))
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self.cell(x) {
            None => 0.0,
            Some(i) => {
                let (x0, x1) = (self.nodes[i], self.nodes[i + 1]);
                let s = (x - x0) / (x1 - x0);
                self.values[i] * (1.0 - s) + self.values[i + 1] * s
            }
        }
    }

    /// Derivative at an interior point of a cell; zero outside the support.
    pub fn slope(&self, x: f64) -> f64 {
        match self.cell(x) {
            None => 0.0,
            Some(i) => (self.values[i + 1] - self.values[i]) / (self.nodes[i + 1] - self.nodes[i]),
        }
    }

    /// Nodes strictly inside `(a, b)`.
    pub fn nodes_in(&self, a: f64, b: f64) -> &[f64] {
        let lo = self.nodes.partition_point(|&n| n <= a);
        let hi = self.nodes.partition_point(|&n| n < b);
        &self.nodes[lo..hi.max(lo)]
    }

    /// The same function on `[left, right]`, zero outside its own support.
    /// Continuity relies on the function vanishing at the padded ends.
    pub fn extend_by_zero(&self, left: f64, right: f64) -> P1Function {
        let mut nodes = Vec::with_capacity(self.nodes.len() + 2);
        let mut values = Vec::with_capacity(self.nodes.len() + 2);
        if left < self.left() {
            nodes.push(left);
            values.push(0.0);
        }
        nodes.extend_from_slice(&self.nodes);
        values.extend_from_slice(&self.values);
        if right > self.right() {
            nodes.push(right);
            values.push(0.0);
        }
        P1Function { nodes, values }
    }
}

/// Sorted, deduplicated breakpoints of `[a, b]`.
pub(crate) fn breakpoints(a: f64, b: f64, extra: &[&[f64]]) -> Vec<f64> {
    let mut pts = vec![a, b];
    for set in extra {
        pts.extend(set.iter().copied().filter(|&x| x > a && x < b));
    }
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts
}

/// `|u - v|_{H^1(a, b)}`, exact for piecewise-linear inputs.
pub fn h1_seminorm_diff(u: &P1Function, v: &P1Function, a: f64, b: f64) -> f64 {
    let pts = breakpoints(a, b, &[u.nodes_in(a, b), v.nodes_in(a, b)]);
    let mut s = 0.0;
    for w in pts.windows(2) {
        let mid = 0.5 * (w[0] + w[1]);
        let d = u.slope(mid) - v.slope(mid);
        s += d * d * (w[1] - w[0]);
    }
    s.sqrt()
}

pub fn h1_seminorm(u: &P1Function, a: f64, b: f64) -> f64 {
    let pts = breakpoints(a, b, &[u.nodes_in(a, b)]);
    pts.windows(2)
        .map(|w| {
            let d = u.slope(0.5 * (w[0] + w[1]));
            d * d * (w[1] - w[0])
        })
        .sum::<f64>()
        .sqrt()
}

/// Relative `H^1`-seminorm distance on `[a, b]` between `u` and a function
/// known through its derivative.
pub fn relative_h1_error<D>(
    u: &P1Function,
    derivative: D,
    a: f64,
    b: f64,
    quad: &QuadratureRule,
) -> Result<f64, EvalError>
where
    D: Fn(f64) -> Result<f64, EvalError>,
{
    let pts = breakpoints(a, b, &[u.nodes_in(a, b)]);
    let mut num = 0.0;
    let mut den = 0.0;
    for w in pts.windows(2) {
        let s = u.slope(0.5 * (w[0] + w[1]));
        num += quad.try_integrate(w[0], w[1], |x| derivative(x).map(|d| (s - d) * (s - d)))?;
        den += quad.try_integrate(w[0], w[1], |x| derivative(x).map(|d| d * d))?;
    }
    Ok(if den > 0.0 { (num / den).sqrt() } else { num.sqrt() })
}

/// Derivative of a reference solution: an explicit expression when given,
/// otherwise a central difference of the solution expression.
#[derive(Debug, Clone)]
pub struct ExactSolution {
    pub value: Expression,
    pub derivative: Option<Expression>,
}

impl ExactSolution {
    pub fn eval(&self, x: f64) -> Result<f64, EvalError> {
        self.value.eval(x)
    }

    pub fn slope(&self, x: f64) -> Result<f64, EvalError> {
        match &self.derivative {
            Some(d) => d.eval(x),
            None => self.value.derivative(x),
        }
    }
}
