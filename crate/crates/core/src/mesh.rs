//! One-dimensional meshes on subdomain intervals.

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MeshError {
    #[error("invalid interval [{a}, {b}]")]
    Interval { a: f64, b: f64 },
    #[error("element count must be at least 1")]
    NoElements,
    #[error("grading exponent must be >= 1, got {0}")]
    Grading(f64),
    #[error("nodes not strictly increasing at index {0}")]
    NotIncreasing(usize),
}

/// Strictly increasing node sequence; element `i` is `[nodes[i], nodes[i+1]]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Mesh {
    nodes: Vec<f64>,
}

impl Mesh {
    pub fn from_nodes(nodes: Vec<f64>) -> Result<Mesh, MeshError> {
        if nodes.len() < 2 {
            return Err(MeshError::NoElements);
        }
        for (i, w) in nodes.windows(2).enumerate() {
            if !(w[0].is_finite() && w[1].is_finite() && w[1] > w[0]) {
                return Err(MeshError::NotIncreasing(i + 1));
            }
        }
        Ok(Mesh { nodes })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn element_count(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn left(&self) -> f64 {
        self.nodes[0]
    }

    pub fn right(&self) -> f64 {
        self.nodes[self.nodes.len() - 1]
    }

    pub fn element(&self, i: usize) -> (f64, f64) {
        (self.nodes[i], self.nodes[i + 1])
    }

    pub fn elements(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.nodes.windows(2).map(|w| (w[0], w[1]))
    }

    pub fn max_element_length(&self) -> f64 {
        self.elements().map(|(a, b)| b - a).fold(0.0, f64::max)
    }

    /// Index of the element containing `x`, or `None` outside the mesh.
    pub fn locate(&self, x: f64) -> Option<usize> {
        if !(x >= self.left() && x <= self.right()) {
            return None;
        }
        let k = self.nodes.partition_point(|&n| n <= x);
        Some(k.saturating_sub(1).min(self.element_count() - 1))
    }

    /// Reflects the mesh onto the same interval, `x -> a + b - x`.
    pub fn mirrored(&self) -> Mesh {
        let (a, b) = (self.left(), self.right());
        let m = self.element_count();
        let mut nodes: Vec<f64> = (0..=m).map(|i| b - (self.nodes[m - i] - a)).collect();
        nodes[0] = a;
        nodes[m] = b;
        Mesh { nodes }
    }
}

fn check(a: f64, b: f64, m: usize) -> Result<(), MeshError> {
    if !(a.is_finite() && b.is_finite() && a < b) {
        return Err(MeshError::Interval { a, b });
    }
    if m == 0 {
        return Err(MeshError::NoElements);
    }
    Ok(())
}

pub fn uniform_mesh(a: f64, b: f64, m: usize) -> Result<Mesh, MeshError> {
    graded_mesh(a, b, m, 1.0)
}

/// Nodes `a + (b-a)(i/m)^gamma`, clustered toward `a` for `gamma > 1`.
pub fn graded_mesh(a: f64, b: f64, m: usize, gamma: f64) -> Result<Mesh, MeshError> {
    check(a, b, m)?;
    if !(gamma.is_finite() && gamma >= 1.0) {
        return Err(MeshError::Grading(gamma));
    }
    let len = b - a;
    let mut nodes: Vec<f64> = (0..=m)
        .map(|i| {
            let s = i as f64 / m as f64;
            let s = if gamma == 1.0 { s } else { s.powf(gamma) };
            a + len * s
        })
        .collect();
    nodes[0] = a;
    nodes[m] = b;
    Mesh::from_nodes(nodes)
}

/// Graded toward `b` instead of `a`.
pub fn graded_mesh_right(a: f64, b: f64, m: usize, gamma: f64) -> Result<Mesh, MeshError> {
    Ok(graded_mesh(a, b, m, gamma)?.mirrored())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn uniform_examples() {
        assert_eq!(uniform_mesh(0.5, 1.0, 2).unwrap().nodes(), &[0.5, 0.75, 1.0]);
        assert_eq!(uniform_mesh(0.0, 1.0, 1).unwrap().nodes(), &[0.0, 1.0]);
        assert_eq!(
            uniform_mesh(0.25, 1.0, 4).unwrap().nodes(),
            &[0.25, 0.4375, 0.625, 0.8125, 1.0]
        );
    }

    #[test]
    fn graded_examples() {
        assert_eq!(graded_mesh(0.0, 1.0, 2, 2.0).unwrap().nodes(), &[0.0, 0.25, 1.0]);
        assert_eq!(graded_mesh(0.5, 1.0, 2, 2.0).unwrap().nodes(), &[0.5, 0.625, 1.0]);
        assert_eq!(
            graded_mesh(0.0, 1.0, 4, 1.0).unwrap(),
            uniform_mesh(0.0, 1.0, 4).unwrap()
        );
    }

    #[test]
    fn errors() {
        assert!(matches!(uniform_mesh(1.0, 1.0, 2), Err(MeshError::Interval { .. })));
        assert!(matches!(uniform_mesh(0.0, 1.0, 0), Err(MeshError::NoElements)));
        assert!(matches!(graded_mesh(0.0, 1.0, 3, 0.5), Err(MeshError::Grading(_))));
        assert!(matches!(
            Mesh::from_nodes(vec![0.0, 0.5, 0.5]),
            Err(MeshError::NotIncreasing(2))
        ));
    }

    #[test]
    fn mirrored_grading() {
        let m = graded_mesh_right(0.0, 1.0, 2, 2.0).unwrap();
        assert_eq!(m.nodes(), &[0.0, 0.75, 1.0]);
    }

    #[test]
    fn locate_elements() {
        let m = uniform_mesh(0.0, 1.0, 4).unwrap();
        assert_eq!(m.locate(0.0), Some(0));
        assert_eq!(m.locate(0.3), Some(1));
        assert_eq!(m.locate(0.5), Some(2));
        assert_eq!(m.locate(1.0), Some(3));
        assert_eq!(m.locate(1.1), None);
        assert_eq!(m.locate(-0.1), None);
    }

    proptest! {
        #[test]
        fn lengths_sum_to_interval(a in -10.0f64..10.0, len in 1e-3f64..10.0, m in 1usize..500, gamma in 1.0f64..4.0) {
            let b = a + len;
            let mesh = graded_mesh(a, b, m, gamma).unwrap();
            prop_assert_eq!(mesh.left(), a);
            prop_assert_eq!(mesh.right(), b);
            // compensated sum so the check measures the mesh, not the summation
            let (mut total, mut comp) = (0.0f64, 0.0f64);
            for (x, y) in mesh.elements() {
                let d = y - x;
                let t = total + d;
                comp += if total.abs() >= d.abs() { (total - t) + d } else { (d - t) + total };
                total = t;
            }
            let total = total + comp;
            prop_assert!((total - (b - a)).abs() <= 1e-14 * (b - a) + 4.0 * f64::EPSILON * a.abs().max(b.abs()));
        }

        #[test]
        fn gamma_one_is_uniform(a in -5.0f64..5.0, len in 1e-2f64..5.0, m in 1usize..200) {
            prop_assert_eq!(graded_mesh(a, a + len, m, 1.0).unwrap(), uniform_mesh(a, a + len, m).unwrap());
        }
    }
}
