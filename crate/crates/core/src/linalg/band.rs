use super::{DenseMatrix, LinalgError};

/// Matrix whose only nonzeros satisfy `|i - j| <= 1`. Rectangular shapes are
/// allowed (a P0 test space against a P1 trial space).
#[derive(Debug, Clone, PartialEq)]
pub struct TriBand {
    rows: usize,
    cols: usize,
    // sub[i] = (i, i-1), diag[i] = (i, i), sup[i] = (i, i+1)
    sub: Vec<f64>,
    diag: Vec<f64>,
    sup: Vec<f64>,
}

impl TriBand {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        TriBand {
            rows,
            cols,
            sub: vec![0.0; rows],
            diag: vec![0.0; rows],
            sup: vec![0.0; rows],
        }
    }

    pub fn from_diag(d: &[f64]) -> Self {
        let mut t = Self::zeros(d.len(), d.len());
        t.diag.copy_from_slice(d);
        t
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

    fn in_band(&self, i: usize, j: usize) -> bool {
        i < self.rows && j < self.cols && i.abs_diff(j) <= 1
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if !self.in_band(i, j) {
            return 0.0;
        }
        if j + 1 == i {
            self.sub[i]
        } else if j == i {
            self.diag[i]
        } else {
            self.sup[i]
        }
    }

    fn slot(&mut self, i: usize, j: usize) -> &mut f64 {
        assert!(
            self.in_band(i, j),
            "({i}, {j}) outside tridiagonal band of {}x{}",
            self.rows,
            self.cols
        );
        if j + 1 == i {
            &mut self.sub[i]
        } else if j == i {
            &mut self.diag[i]
        } else {
            &mut self.sup[i]
        }
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        *self.slot(i, j) = v;
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        *self.slot(i, j) += v;
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.diag
    }

    fn row_range(&self, i: usize) -> std::ops::Range<usize> {
        i.saturating_sub(1)..(i + 2).min(self.cols)
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols);
        (0..self.rows)
            .map(|i| self.row_range(i).map(|j| self.get(i, j) * x[j]).sum())
            .collect()
    }

    /// `A^T y`.
    pub fn t_matvec(&self, y: &[f64]) -> Vec<f64> {
        assert_eq!(y.len(), self.rows);
        let mut out = vec![0.0; self.cols];
        for i in 0..self.rows {
            for j in self.row_range(i) {
                out[j] += self.get(i, j) * y[i];
            }
        }
        out
    }

    pub fn quad_form(&self, x: &[f64]) -> f64 {
        super::dot(x, &self.matvec(x))
    }

    pub fn transpose(&self) -> TriBand {
        let mut t = TriBand::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in self.row_range(i) {
                t.set(j, i, self.get(i, j));
            }
        }
        t
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut d = DenseMatrix::zeros(self.rows, self.cols);
        for i in 0..self.rows {
            for j in self.row_range(i) {
                d[(i, j)] = self.get(i, j);
            }
        }
        d
    }

    pub fn scale(&self, s: f64) -> TriBand {
        let f = |v: &Vec<f64>| v.iter().map(|x| x * s).collect();
        TriBand {
            rows: self.rows,
            cols: self.cols,
            sub: f(&self.sub),
            diag: f(&self.diag),
            sup: f(&self.sup),
        }
    }

    /// Entrywise sum; shapes must match.
    pub fn plus(&self, other: &TriBand) -> TriBand {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let f = |a: &Vec<f64>, b: &Vec<f64>| a.iter().zip(b).map(|(x, y)| x + y).collect();
        TriBand {
            rows: self.rows,
            cols: self.cols,
            sub: f(&self.sub, &other.sub),
            diag: f(&self.diag, &other.diag),
            sup: f(&self.sup, &other.sup),
        }
    }

    pub fn is_symmetric_exact(&self) -> bool {
        self.is_square() && (1..self.rows).all(|i| self.sub[i] == self.sup[i - 1])
    }

    pub fn is_finite(&self) -> bool {
        self.sub
            .iter()
            .chain(&self.diag)
            .chain(&self.sup)
            .all(|v| v.is_finite())
    }

    pub fn norm_inf(&self) -> f64 {
        (0..self.rows)
            .map(|i| self.row_range(i).map(|j| self.get(i, j).abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// `A^T diag(w)^-1 A`, provided the product stays tridiagonal (true when
    /// `A` has at most two adjacent diagonals, e.g. a P0 x P1 pairing).
    pub fn normal_product(&self, w: &[f64]) -> Result<TriBand, LinalgError> {
        assert_eq!(w.len(), self.rows);
        let n = self.cols;
        let mut out = TriBand::zeros(n, n);
        for i in 0..self.rows {
            let r = self.row_range(i);
            for j in r.clone() {
                for k in r.clone() {
                    let v = self.get(i, j) * self.get(i, k) / w[i];
                    if v == 0.0 {
                        continue;
                    }
                    if j.abs_diff(k) > 1 {
                        return Err(LinalgError::Dimension("normal product is not tridiagonal".into()));
                    }
                    out.add(j, k, v);
                }
            }
        }
        Ok(out)
    }

    /// Solve with a symmetric positive definite tridiagonal matrix (LDL^T).
    pub fn cholesky_solve(&self, b: &[f64]) -> Result<Vec<f64>, LinalgError> {
        if !self.is_square() || b.len() != self.rows {
            return Err(LinalgError::Dimension(format!(
                "{}x{} system with rhs length {}",
                self.rows,
                self.cols,
                b.len()
            )));
        }
        let n = self.rows;
        let mut d = vec![0.0; n];
        let mut l = vec![0.0; n];
        for i in 0..n {
            let mut di = self.diag[i];
            if i > 0 {
                let off = self.sub[i];
                l[i] = off / d[i - 1];
                di -= l[i] * off;
            }
            if !(di > 0.0) {
                return Err(LinalgError::NotPositiveDefinite { row: i, pivot: di });
            }
            d[i] = di;
        }
        let mut x = b.to_vec();
        for i in 1..n {
            x[i] -= l[i] * x[i - 1];
        }
        for i in 0..n {
            x[i] /= d[i];
        }
        for i in (0..n.saturating_sub(1)).rev() {
            x[i] -= l[i + 1] * x[i + 1];
        }
        Ok(x)
    }

    /// Tridiagonal solve with partial pivoting; a pivot below
    /// `1e-14 * ||A||_inf` is reported as singular.
    pub fn lu_solve(&self, b: &[f64]) -> Result<Vec<f64>, LinalgError> {
        if !self.is_square() || b.len() != self.rows {
            return Err(LinalgError::Dimension(format!(
                "{}x{} system with rhs length {}",
                self.rows,
                self.cols,
                b.len()
            )));
        }
        let n = self.rows;
        let tiny = 1e-14 * self.norm_inf();
        // row i holds u0 (i,i), u1 (i,i+1), u2 (i,i+2) after elimination
        let mut u0 = self.diag.clone();
        let mut u1 = self.sup.clone();
        let mut u2 = vec![0.0; n];
        let mut lo: Vec<f64> = (0..n).map(|i| if i + 1 < n { self.sub[i + 1] } else { 0.0 }).collect();
        let mut x = b.to_vec();
        for k in 0..n {
            if k + 1 < n && lo[k].abs() > u0[k].abs() {
                // swap row k with row k+1 (whose entries sit at k, k+1, k+2)
                let (a0, a1, a2) = (lo[k], u0[k + 1], u1[k + 1]);
                lo[k] = u0[k];
                u0[k + 1] = u1[k];
                u1[k + 1] = u2[k];
                u0[k] = a0;
                u1[k] = a1;
                u2[k] = a2;
                x.swap(k, k + 1);
            }
            if !(u0[k].abs() > tiny) {
                return Err(LinalgError::Singular { col: k, pivot: u0[k] });
            }
            if k + 1 < n {
                let f = lo[k] / u0[k];
                u0[k + 1] -= f * u1[k];
                u1[k + 1] -= f * u2[k];
                x[k + 1] -= f * x[k];
            }
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            if i + 1 < n {
                s -= u1[i] * x[i + 1];
            }
            if i + 2 < n {
                s -= u2[i] * x[i + 2];
            }
            x[i] = s / u0[i];
        }
        Ok(x)
    }
}

fn check_pencil(a: &TriBand, b: &TriBand) -> Result<(), LinalgError> {
    if !a.is_square() || !b.is_square() || a.rows() != b.rows() {
        return Err(LinalgError::Dimension(format!(
            "pencil {}x{} vs {}x{}",
            a.rows(),
            a.cols(),
            b.rows(),
            b.cols()
        )));
    }
    for m in [a, b] {
        let scale = m.norm_inf().max(f64::MIN_POSITIVE);
        let asym = (1..m.rows())
            .map(|i| (m.sub[i] - m.sup[i - 1]).abs())
            .fold(0.0, f64::max)
            / scale;
        if asym > 1e-12 {
            return Err(LinalgError::NotSymmetric(asym));
        }
    }
    // positive definiteness of b
    b.cholesky_solve(&vec![0.0; b.rows()]).map(|_| ())
}

/// Number of eigenvalues of `A x = l B x` strictly below `sigma`: the
/// negative pivots of the Sturm recurrence for `A - sigma B`.
fn sturm_count(a: &TriBand, b: &TriBand, sigma: f64) -> usize {
    let n = a.rows();
    let mut count = 0;
    let mut prev = 1.0;
    for i in 0..n {
        let mut d = a.diag[i] - sigma * b.diag[i];
        if i > 0 {
            let off = a.sub[i] - sigma * b.sub[i];
            d -= off * off / prev;
        }
        if d == 0.0 {
            d = -f64::EPSILON * (a.diag[i].abs() + sigma.abs() * b.diag[i].abs()).max(f64::MIN_POSITIVE);
        }
        if d < 0.0 {
            count += 1;
        }
        prev = d;
    }
    count
}

fn bracket(a: &TriBand, b: &TriBand) -> (f64, f64) {
    let n = a.rows();
    let bmax = b.diag.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut s = (a.norm_inf() / bmax).max(1e-300);
    let mut lo = -s;
    while sturm_count(a, b, lo) > 0 {
        s *= 4.0;
        lo = -s;
    }
    let mut hi = s.max(1e-300);
    while sturm_count(a, b, hi) < n {
        hi *= 4.0;
    }
    (lo, hi)
}

fn bisect(a: &TriBand, b: &TriBand, k: usize, mut lo: f64, mut hi: f64) -> f64 {
    let floor = 1e-32 * lo.abs().max(hi.abs());
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi || hi - lo <= 4.0 * f64::EPSILON * lo.abs().max(hi.abs()) || hi - lo <= floor {
            break;
        }
        if sturm_count(a, b, mid) > k {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// The `k`-th smallest eigenvalue (0-based) of the symmetric tridiagonal
/// pencil `(A, B)` with `B` positive definite.
pub fn pencil_eigenvalue(a: &TriBand, b: &TriBand, k: usize) -> Result<f64, LinalgError> {
    check_pencil(a, b)?;
    if k >= a.rows() {
        return Err(LinalgError::Dimension(format!("eigenvalue index {k} of {}", a.rows())));
    }
    let (lo, hi) = bracket(a, b);
    Ok(bisect(a, b, k, lo, hi))
}

/// Smallest and largest eigenvalues of the pencil.
pub fn pencil_extremes(a: &TriBand, b: &TriBand) -> Result<(f64, f64), LinalgError> {
    check_pencil(a, b)?;
    let n = a.rows();
    if n == 0 {
        return Err(LinalgError::Dimension("empty pencil".into()));
    }
    let (lo, hi) = bracket(a, b);
    Ok((bisect(a, b, 0, lo, hi), bisect(a, b, n - 1, lo, hi)))
}
