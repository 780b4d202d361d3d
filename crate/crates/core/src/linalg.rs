//! Dense kernels for the small systems that show up here (n ≤ ~10 for the
//! local fits, ≤ ~21 columns for the global polynomial sweep).

/// Row-major square or rectangular matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows, "matmul dimension mismatch");
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out.data[i * other.cols + j] += a * other.get(k, j);
                }
            }
        }
        out
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    /// Maximum absolute column sum.
    pub fn norm_one(&self) -> f64 {
        (0..self.cols)
            .map(|j| (0..self.rows).map(|i| self.get(i, j).abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }
}

/// Lower-triangular Cholesky factor of a symmetric positive-definite matrix.
#[derive(Debug, Clone)]
pub struct Cholesky {
    l: Matrix,
}

impl Cholesky {
    /// Returns `None` when a non-positive pivot is met.
    pub fn factor(a: &Matrix) -> Option<Self> {
        let n = a.rows();
        debug_assert_eq!(n, a.cols());
        let mut l = Matrix::zeros(n, n);
        for j in 0..n {
            let mut d = a.get(j, j);
            for k in 0..j {
                d -= l.get(j, k) * l.get(j, k);
            }
            if !(d > 0.0) || !d.is_finite() {
                return None;
            }
            let d = d.sqrt();
            l.set(j, j, d);
            for i in (j + 1)..n {
                let mut s = a.get(i, j);
                for k in 0..j {
                    s -= l.get(i, k) * l.get(j, k);
                }
                l.set(i, j, s / d);
            }
        }
        Some(Self { l })
    }

    /// Solves `A x = b` in place.
    pub fn solve_in_place(&self, b: &mut [f64]) {
        let n = self.l.rows();
        for i in 0..n {
            let mut s = b[i];
            for k in 0..i {
                s -= self.l.get(i, k) * b[k];
            }
            b[i] = s / self.l.get(i, i);
        }
        for i in (0..n).rev() {
            let mut s = b[i];
            for k in (i + 1)..n {
                s -= self.l.get(k, i) * b[k];
            }
            b[i] = s / self.l.get(i, i);
        }
    }

    /// Solves `A X = B` column by column.
    pub fn solve_matrix(&self, b: &Matrix) -> Matrix {
        let mut out = b.clone();
        let mut col = vec![0.0; b.rows()];
        for j in 0..b.cols() {
            for i in 0..b.rows() {
                col[i] = b.get(i, j);
            }
            self.solve_in_place(&mut col);
            for i in 0..b.rows() {
                out.set(i, j, col[i]);
            }
        }
        out
    }

    pub fn inverse(&self) -> Matrix {
        let n = self.l.rows();
        self.solve_matrix(&Matrix::from_fn(n, n, |i, j| if i == j { 1.0 } else { 0.0 }))
    }
}

/// 1-norm condition number of an SPD matrix, computed from the exact inverse.
/// Only meant for the tiny normal-equation matrices.
pub fn condition_one(a: &Matrix, chol: &Cholesky) -> f64 {
    a.norm_one() * chol.inverse().norm_one()
}

/// Least-squares solve of the tall system `A x ≈ b` by Householder QR.
/// Returns the coefficient vector, or `None` if a column is numerically
/// dependent on its predecessors.
pub fn householder_lstsq(a: &Matrix, b: &[f64]) -> Option<Vec<f64>> {
    let (m, n) = (a.rows(), a.cols());
    assert!(m >= n && b.len() == m);
    let mut r = a.clone();
    let mut qtb = b.to_vec();
    let scale = a.norm_one().max(f64::MIN_POSITIVE);
    for k in 0..n {
        let norm: f64 = (k..m).map(|i| r.get(i, k).powi(2)).sum::<f64>().sqrt();
        if norm <= 1e-13 * scale {
            return None;
        }
        let alpha = if r.get(k, k) > 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = (k..m).map(|i| r.get(i, k)).collect();
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        for j in k..n {
            let dot: f64 = (k..m).map(|i| v[i - k] * r.get(i, j)).sum();
            let f = 2.0 * dot / vnorm2;
            for i in k..m {
                let val = r.get(i, j) - f * v[i - k];
                r.set(i, j, val);
            }
        }
        let dot: f64 = (k..m).map(|i| v[i - k] * qtb[i]).sum();
        let f = 2.0 * dot / vnorm2;
        for i in k..m {
            qtb[i] -= f * v[i - k];
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = qtb[i];
        for j in (i + 1)..n {
            s -= r.get(i, j) * x[j];
        }
        x[i] = s / r.get(i, i);
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cholesky_solves_spd_system() {
        let a = Matrix::from_fn(3, 3, |i, j| [[4.0, 2.0, 0.6], [2.0, 5.0, 1.0], [0.6, 1.0, 3.0]][i][j]);
        let chol = Cholesky::factor(&a).unwrap();
        let mut x = vec![1.0, 2.0, 3.0];
        chol.solve_in_place(&mut x);
        for i in 0..3 {
            let ax: f64 = (0..3).map(|j| a.get(i, j) * x[j]).sum();
            assert!((ax - (i as f64 + 1.0)).abs() < 1e-14);
        }
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let a = Matrix::from_fn(2, 2, |i, j| if i == j { 1.0 } else { 2.0 });
        assert!(Cholesky::factor(&a).is_none());
    }

    #[test]
    fn identity_condition_is_one() {
        let a = Matrix::from_fn(4, 4, |i, j| if i == j { 1.0 } else { 0.0 });
        let chol = Cholesky::factor(&a).unwrap();
        assert_eq!(condition_one(&a, &chol), 1.0);
    }

    #[test]
    fn qr_recovers_exact_line() {
        let a = Matrix::from_fn(5, 2, |i, j| (i as f64).powi(j as i32));
        let b: Vec<f64> = (0..5).map(|i| 2.0 - 0.5 * i as f64).collect();
        let x = householder_lstsq(&a, &b).unwrap();
        assert!((x[0] - 2.0).abs() < 1e-13);
        assert!((x[1] + 0.5).abs() < 1e-13);
    }

    #[test]
    fn qr_flags_dependent_columns() {
        let a = Matrix::from_fn(4, 2, |i, _| i as f64 + 1.0);
        assert!(householder_lstsq(&a, &[1.0, 2.0, 3.0, 4.0]).is_none());
    }
}
