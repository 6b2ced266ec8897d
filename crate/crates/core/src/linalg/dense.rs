use std::ops::{Index, IndexMut};

use super::LinalgError;

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_diag(d: &[f64]) -> Self {
        let mut m = Self::zeros(d.len(), d.len());
        for (i, v) in d.iter().enumerate() {
            m[(i, i)] = *v;
        }
        m
    }

    /// Panics if the rows are ragged.
    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows");
            data.extend_from_slice(row);
        }
        DenseMatrix { rows: r, cols: c, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols);
        (0..self.rows).map(|i| super::dot(self.row(i), x)).collect()
    }

    pub fn matmul(&self, other: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.cols, other.rows);
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn scale(&self, s: f64) -> DenseMatrix {
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }

    /// Infinity norm (max absolute row sum).
    pub fn norm_inf(&self) -> f64 {
        (0..self.rows)
            .map(|i| self.row(i).iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.rows {
            for j in 0..i {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst / self.max_abs().max(f64::MIN_POSITIVE)
    }

    fn symmetrized(&self) -> DenseMatrix {
        let mut s = self.clone();
        for i in 0..self.rows {
            for j in 0..i {
                let v = 0.5 * (self[(i, j)] + self[(j, i)]);
                s[(i, j)] = v;
                s[(j, i)] = v;
            }
        }
        s
    }

    fn check_symmetric(&self) -> Result<(), LinalgError> {
        if !self.is_square() {
            return Err(LinalgError::Dimension(format!(
                "expected square matrix, got {}x{}",
                self.rows, self.cols
            )));
        }
        let asym = self.asymmetry();
        if asym > 1e-12 {
            return Err(LinalgError::NotSymmetric(asym));
        }
        Ok(())
    }

    /// Lower Cholesky factor `L` with `A = L L^T`.
    pub fn cholesky(&self) -> Result<DenseMatrix, LinalgError> {
        self.check_symmetric()?;
        let n = self.rows;
        let mut l = DenseMatrix::zeros(n, n);
        for j in 0..n {
            let mut d = self[(j, j)];
            for k in 0..j {
                d -= l[(j, k)] * l[(j, k)];
            }
            if !(d > 0.0) {
                return Err(LinalgError::NotPositiveDefinite { row: j, pivot: d });
            }
            let d = d.sqrt();
            l[(j, j)] = d;
            for i in j + 1..n {
                let mut s = self[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = s / d;
            }
        }
        Ok(l)
    }
}

impl Index<(usize, usize)> for DenseMatrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for DenseMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

fn forward_sub(l: &DenseMatrix, b: &[f64]) -> Vec<f64> {
    let n = l.rows();
    let mut y = b.to_vec();
    for i in 0..n {
        let mut s = y[i];
        for k in 0..i {
            s -= l[(i, k)] * y[k];
        }
        y[i] = s / l[(i, i)];
    }
    y
}

fn backward_sub_t(l: &DenseMatrix, y: &[f64]) -> Vec<f64> {
    let n = l.rows();
    let mut x = y.to_vec();
    for i in (0..n).rev() {
        let mut s = x[i];
        for k in i + 1..n {
            s -= l[(k, i)] * x[k];
        }
        x[i] = s / l[(i, i)];
    }
    x
}

pub fn cholesky_solve(a: &DenseMatrix, b: &[f64]) -> Result<Vec<f64>, LinalgError> {
    if b.len() != a.rows() {
        return Err(LinalgError::Dimension(format!(
            "rhs length {} for {}x{} matrix",
            b.len(),
            a.rows(),
            a.cols()
        )));
    }
    let l = a.cholesky()?;
    Ok(backward_sub_t(&l, &forward_sub(&l, b)))
}

/// Gaussian elimination with partial pivoting. A pivot below
/// `1e-14 * ||A||_inf` is reported as singular.
pub fn lu_solve(a: &DenseMatrix, b: &[f64]) -> Result<Vec<f64>, LinalgError> {
    if !a.is_square() || b.len() != a.rows() {
        return Err(LinalgError::Dimension(format!(
            "{}x{} system with rhs length {}",
            a.rows(),
            a.cols(),
            b.len()
        )));
    }
    let n = a.rows();
    let tiny = 1e-14 * a.norm_inf();
    let mut m = a.clone();
    let mut x = b.to_vec();
    for k in 0..n {
        let p = (k..n)
            .max_by(|&i, &j| m[(i, k)].abs().total_cmp(&m[(j, k)].abs()))
            .unwrap();
        let piv = m[(p, k)];
        if !(piv.abs() > tiny) {
            return Err(LinalgError::Singular { col: k, pivot: piv });
        }
        if p != k {
            for j in 0..n {
                let t = m[(k, j)];
                m[(k, j)] = m[(p, j)];
                m[(p, j)] = t;
            }
            x.swap(k, p);
        }
        for i in k + 1..n {
            let f = m[(i, k)] / piv;
            if f == 0.0 {
                continue;
            }
            m[(i, k)] = 0.0;
            for j in k + 1..n {
                m[(i, j)] -= f * m[(k, j)];
            }
            x[i] -= f * x[k];
        }
    }
    for i in (0..n).rev() {
        let mut s = x[i];
        for j in i + 1..n {
            s -= m[(i, j)] * x[j];
        }
        x[i] = s / m[(i, i)];
    }
    Ok(x)
}

/// Eigenpairs of `A x = lambda B x`, eigenvalues ascending, eigenvectors
/// stored as B-orthonormal columns.
#[derive(Debug, Clone)]
pub struct GeneralizedEigen {
    pub values: Vec<f64>,
    pub vectors: DenseMatrix,
}

const JACOBI_TOL: f64 = 1e-12;
const JACOBI_MAX_SWEEPS: usize = 100;

/// Symmetric-definite generalized eigenproblem.
///
/// `B = L L^T` reduces the pencil to `C = L^-1 A L^-T`, which cyclic Jacobi
/// diagonalises until the off-diagonal Frobenius mass is below
/// `1e-12 * ||C||_F`.
pub fn eig_sym_generalized(a: &DenseMatrix, b: &DenseMatrix) -> Result<GeneralizedEigen, LinalgError> {
    a.check_symmetric()?;
    if a.rows() != b.rows() || !b.is_square() {
        return Err(LinalgError::Dimension(format!(
            "pencil {}x{} vs {}x{}",
            a.rows(),
            a.cols(),
            b.rows(),
            b.cols()
        )));
    }
    let n = a.rows();
    let l = b.cholesky()?;
    let a = a.symmetrized();

    // C = L^-1 A L^-T, column by column
    let mut w = DenseMatrix::zeros(n, n);
    for j in 0..n {
        let col: Vec<f64> = (0..n).map(|i| a[(i, j)]).collect();
        let y = forward_sub(&l, &col);
        for i in 0..n {
            w[(i, j)] = y[i];
        }
    }
    let mut c = DenseMatrix::zeros(n, n);
    for i in 0..n {
        let y = forward_sub(&l, w.row(i));
        for j in 0..n {
            c[(i, j)] = y[j];
        }
    }
    let c = c.symmetrized();

    let (values, v) = jacobi_eigen(c)?;

    // x = L^-T v
    let mut vectors = DenseMatrix::zeros(n, n);
    for j in 0..n {
        let col: Vec<f64> = (0..n).map(|i| v[(i, j)]).collect();
        let x = backward_sub_t(&l, &col);
        for i in 0..n {
            vectors[(i, j)] = x[i];
        }
    }
    Ok(GeneralizedEigen { values, vectors })
}

fn jacobi_eigen(mut c: DenseMatrix) -> Result<(Vec<f64>, DenseMatrix), LinalgError> {
    let n = c.rows();
    let mut v = DenseMatrix::identity(n);
    let total: f64 = c.data.iter().map(|x| x * x).sum::<f64>().sqrt();
    let mut converged = n <= 1 || total == 0.0;
    let mut sweeps = 0;
    while !converged {
        if sweeps == JACOBI_MAX_SWEEPS {
            return Err(LinalgError::NoConvergence(sweeps));
        }
        sweeps += 1;
        for p in 0..n {
            for q in p + 1..n {
                let apq = c[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let app = c[(p, p)];
                let aqq = c[(q, q)];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let cs = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * cs;
                for k in 0..n {
                    let akp = c[(k, p)];
                    let akq = c[(k, q)];
                    c[(k, p)] = cs * akp - sn * akq;
                    c[(k, q)] = sn * akp + cs * akq;
                }
                for k in 0..n {
                    let apk = c[(p, k)];
                    let aqk = c[(q, k)];
                    c[(p, k)] = cs * apk - sn * aqk;
                    c[(q, k)] = sn * apk + cs * aqk;
                }
                c[(p, q)] = 0.0;
                c[(q, p)] = 0.0;
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = cs * vkp - sn * vkq;
                    v[(k, q)] = sn * vkp + cs * vkq;
                }
            }
        }
        let mut off = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    off += c[(i, j)] * c[(i, j)];
                }
            }
        }
        converged = off.sqrt() <= JACOBI_TOL * total;
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| c[(i, i)].total_cmp(&c[(j, j)]));
    let values = order.iter().map(|&i| c[(i, i)]).collect();
    let mut sorted = DenseMatrix::zeros(n, n);
    for (new, &old) in order.iter().enumerate() {
        for k in 0..n {
            sorted[(k, new)] = v[(k, old)];
        }
    }
    Ok((values, sorted))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn m(rows: &[&[f64]]) -> DenseMatrix {
        DenseMatrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>())
    }

    fn random_spd(n: usize, rng: &mut ChaCha8Rng) -> DenseMatrix {
        let mut g = DenseMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                g[(i, j)] = rng.gen_range(-1.0..1.0);
            }
        }
        let mut a = g.transpose().matmul(&g);
        for i in 0..n {
            a[(i, i)] += n as f64 * 0.1;
        }
        a.symmetrized()
    }

    fn random_sym(n: usize, rng: &mut ChaCha8Rng) -> DenseMatrix {
        let mut a = DenseMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let v = rng.gen_range(-1.0..1.0);
                a[(i, j)] = v;
                a[(j, i)] = v;
            }
        }
        a
    }

    #[test]
    fn cholesky_examples() {
        assert_eq!(
            cholesky_solve(&DenseMatrix::identity(3), &[1.0, 2.0, 3.0]).unwrap(),
            vec![1.0, 2.0, 3.0]
        );
        let x = cholesky_solve(&m(&[&[4.0, -2.0], &[-2.0, 2.0]]), &[2.0, 0.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-15 && (x[1] - 1.0).abs() < 1e-15);
        assert!(matches!(
            cholesky_solve(&m(&[&[1.0, 0.0], &[0.0, -1.0]]), &[1.0, 1.0]),
            Err(LinalgError::NotPositiveDefinite { row: 1, .. })
        ));
        assert!(matches!(
            cholesky_solve(&m(&[&[1.0, 0.5], &[0.0, 1.0]]), &[1.0, 1.0]),
            Err(LinalgError::NotSymmetric(_))
        ));
    }

    #[test]
    fn lu_examples() {
        assert_eq!(
            lu_solve(&m(&[&[1.0, 0.0], &[-1.0, 1.0]]), &[1.0, 0.0]).unwrap(),
            vec![1.0, 1.0]
        );
        assert_eq!(
            lu_solve(&DenseMatrix::identity(3), &[4.0, 5.0, 6.0]).unwrap(),
            vec![4.0, 5.0, 6.0]
        );
        assert!(matches!(
            lu_solve(&DenseMatrix::zeros(2, 2), &[1.0, 1.0]),
            Err(LinalgError::Singular { col: 0, .. })
        ));
        assert!(matches!(
            lu_solve(&m(&[&[1.0, 2.0], &[2.0, 4.0]]), &[1.0, 1.0]),
            Err(LinalgError::Singular { col: 1, .. })
        ));
    }

    #[test]
    fn eig_examples() {
        let e = eig_sym_generalized(
            &DenseMatrix::from_diag(&[2.0, 8.0]),
            &DenseMatrix::from_diag(&[1.0, 2.0]),
        )
        .unwrap();
        assert!((e.values[0] - 2.0).abs() < 1e-14 && (e.values[1] - 4.0).abs() < 1e-14);

        let b = m(&[&[4.0, -2.0], &[-2.0, 2.0]]);
        let e = eig_sym_generalized(&b, &b).unwrap();
        for v in e.values {
            assert!((v - 1.0).abs() < 1e-13);
        }

        // characteristic polynomial l^2 - 6l + 4
        let e = eig_sym_generalized(&b, &DenseMatrix::identity(2)).unwrap();
        assert!((e.values[0] - (3.0 - 5f64.sqrt())).abs() < 1e-13);
        assert!((e.values[1] - (3.0 + 5f64.sqrt())).abs() < 1e-13);
    }

    #[test]
    fn eig_rejects_indefinite_b() {
        let a = DenseMatrix::identity(2);
        let b = m(&[&[1.0, 0.0], &[0.0, -1.0]]);
        assert!(matches!(
            eig_sym_generalized(&a, &b),
            Err(LinalgError::NotPositiveDefinite { .. })
        ));
    }

    #[test]
    fn eig_invariants_on_random_pencils() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in [1, 2, 5, 17, 40] {
            let a = random_sym(n, &mut rng);
            let b = random_spd(n, &mut rng);
            let e = eig_sym_generalized(&a, &b).unwrap();
            for w in e.values.windows(2) {
                assert!(w[0] <= w[1]);
            }
            // trace(B^-1 A)
            let mut tr = 0.0;
            for j in 0..n {
                let col: Vec<f64> = (0..n).map(|i| a[(i, j)]).collect();
                tr += cholesky_solve(&b, &col).unwrap()[j];
            }
            let sum: f64 = e.values.iter().sum();
            let scale = e.values.iter().map(|v| v.abs()).sum::<f64>().max(1.0);
            assert!((sum - tr).abs() <= 1e-9 * scale, "trace {tr} vs {sum}");
            let xtbx = e.vectors.transpose().matmul(&b).matmul(&e.vectors);
            let ident = DenseMatrix::identity(n);
            for i in 0..n {
                for j in 0..n {
                    assert!((xtbx[(i, j)] - ident[(i, j)]).abs() <= 1e-9);
                }
            }
            let anorm = a.norm_inf();
            for k in 0..n {
                let x: Vec<f64> = (0..n).map(|i| e.vectors[(i, k)]).collect();
                let ax = a.matvec(&x);
                let bx = b.matvec(&x);
                let r: f64 = ax
                    .iter()
                    .zip(&bx)
                    .map(|(p, q)| (p - e.values[k] * q).abs())
                    .fold(0.0, f64::max);
                assert!(r <= 1e-9 * anorm.max(1.0), "residual {r}");
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn cholesky_and_lu_agree(seed in any::<u64>(), n in 1usize..200) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = random_spd(n, &mut rng);
            let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let x1 = cholesky_solve(&a, &b).unwrap();
            let x2 = lu_solve(&a, &b).unwrap();
            let scale = super::super::norm_inf(&x1).max(1e-300);
            for (p, q) in x1.iter().zip(&x2) {
                prop_assert!((p - q).abs() <= 1e-9 * scale);
            }
            let r = a.matvec(&x1);
            let res = r.iter().zip(&b).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
            prop_assert!(res <= 1e-10 * (a.norm_inf() * scale + super::super::norm_inf(&b)));
        }
    }
}
