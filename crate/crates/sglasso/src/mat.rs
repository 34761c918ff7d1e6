use crate::error::{Error, Result};
use crate::rng::RngStream;
use rand_distr::{Distribution, StandardNormal};

/// Dense row-major rectangular matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Matrix::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::DimensionMismatch("ragged rows".into()));
        }
        Ok(Matrix {
            rows: r,
            cols: c,
            data: rows.concat(),
        })
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

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows, "matmul dimension mismatch");
        let mut out = Matrix::zeros(self.rows, other.cols);
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

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn add(&self, other: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Dense symmetric matrix; full storage, entries kept mirror-equal by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(dim: usize) -> Self {
        SymMatrix {
            dim,
            data: vec![0.0; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = SymMatrix::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = 1.0;
        }
        m
    }

    pub fn diag(values: &[f64]) -> Self {
        let mut m = SymMatrix::zeros(values.len());
        for (i, &v) in values.iter().enumerate() {
            m.data[i * values.len() + i] = v;
        }
        m
    }

    /// Builds from `f` evaluated on the lower triangle (i ≥ j) and mirrored.
    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = SymMatrix::zeros(dim);
        for i in 0..dim {
            for j in 0..=i {
                let v = f(i, j);
                m.data[i * dim + j] = v;
                m.data[j * dim + i] = v;
            }
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let m = Matrix::from_rows(rows)?;
        Self::from_matrix(&m)
    }

    /// Accepts a square matrix whose asymmetry is at rounding level and mirrors it.
    pub fn from_matrix(m: &Matrix) -> Result<Self> {
        if m.rows() != m.cols() {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} matrix is not square",
                m.rows(),
                m.cols()
            )));
        }
        let dim = m.rows();
        let scale = m.frobenius_norm().max(1.0);
        for i in 0..dim {
            for j in 0..i {
                if (m[(i, j)] - m[(j, i)]).abs() > 1e-9 * scale {
                    return Err(Error::DimensionMismatch(format!(
                        "entry ({i},{j}) breaks symmetry"
                    )));
                }
            }
        }
        Ok(SymMatrix::from_fn(dim, |i, j| {
            0.5 * (m[(i, j)] + m[(j, i)])
        }))
    }

    /// Symmetrizes an arbitrary square matrix: (M + Mᵀ)/2.
    pub fn symmetrize(m: &Matrix) -> SymMatrix {
        assert_eq!(m.rows(), m.cols(), "symmetrize needs a square matrix");
        SymMatrix::from_fn(m.rows(), |i, j| 0.5 * (m[(i, j)] + m[(j, i)]))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Sets both (i,j) and (j,i).
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.dim + j] = v;
        self.data[j * self.dim + i] = v;
    }

    pub fn to_matrix(&self) -> Matrix {
        Matrix {
            rows: self.dim,
            cols: self.dim,
            data: self.data.clone(),
        }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    pub fn scale(&self, s: f64) -> SymMatrix {
        SymMatrix {
            dim: self.dim,
            data: self.data.iter().map(|x| x * s).collect(),
        }
    }

    pub fn add(&self, other: &SymMatrix) -> SymMatrix {
        assert_eq!(self.dim, other.dim);
        SymMatrix {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &SymMatrix) -> SymMatrix {
        assert_eq!(self.dim, other.dim);
        SymMatrix {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    /// tr(self · other); both symmetric so this is Σ_ij self_ij · other_ij.
    pub fn trace_product(&self, other: &SymMatrix) -> f64 {
        assert_eq!(self.dim, other.dim);
        self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum()
    }

    /// Largest |eigenvalue|.
    pub fn spectral_norm(&self) -> f64 {
        let (vals, _) = sym_eigen(self);
        vals.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

impl std::ops::Index<(usize, usize)> for SymMatrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.dim + j]
    }
}

/// Symmetric boolean matrix for supports and adjacency.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymBoolMatrix {
    dim: usize,
    data: Vec<bool>,
}

impl SymBoolMatrix {
    pub fn new(dim: usize) -> Self {
        SymBoolMatrix {
            dim,
            data: vec![false; dim * dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.data[i * self.dim + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: bool) {
        self.data[i * self.dim + j] = v;
        self.data[j * self.dim + i] = v;
    }

    pub fn count_true(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }
}

/// Outcome of a definiteness probe.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpdCheck {
    pub is_pd: bool,
    pub min_eigenvalue: f64,
}

pub fn spd_check(m: &SymMatrix) -> SpdCheck {
    let (vals, _) = sym_eigen(m);
    let min_eigenvalue = vals.first().copied().unwrap_or(f64::NAN);
    SpdCheck {
        is_pd: min_eigenvalue > 0.0,
        min_eigenvalue,
    }
}

/// Lower-triangular Cholesky factor L with L·Lᵀ = m.
pub fn cholesky(m: &SymMatrix) -> Result<Matrix> {
    let p = m.dim();
    let mut l = Matrix::zeros(p, p);
    for i in 0..p {
        for j in 0..=i {
            let mut s = m[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            if i == j {
                if s <= 0.0 {
                    return Err(Error::NotPositiveDefinite(format!(
                        "pivot {s:.3e} at index {i}"
                    )));
                }
                l[(i, j)] = s.sqrt();
            } else {
                l[(i, j)] = s / l[(j, j)];
            }
        }
    }
    Ok(l)
}

/// Eigendecomposition by cyclic Jacobi rotations.
///
/// Returns (eigenvalues ascending, Q with eigenvectors as columns) satisfying
/// m = Q·diag(λ)·Qᵀ.
pub fn sym_eigen(m: &SymMatrix) -> (Vec<f64>, Matrix) {
    let p = m.dim();
    let mut a = m.to_matrix();
    let mut q = Matrix::zeros(p, p);
    for i in 0..p {
        q[(i, i)] = 1.0;
    }
    if p > 1 {
        let norm = m.frobenius_norm().max(f64::MIN_POSITIVE);
        let tol = 1e-15 * norm;
        for _sweep in 0..100 {
            let mut off = 0.0;
            for i in 0..p {
                for j in (i + 1)..p {
                    off += a[(i, j)] * a[(i, j)];
                }
            }
            if off.sqrt() <= tol {
                break;
            }
            for i in 0..p - 1 {
                for j in (i + 1)..p {
                    let apq = a[(i, j)];
                    if apq.abs() <= 1e-300 {
                        continue;
                    }
                    let app = a[(i, i)];
                    let aqq = a[(j, j)];
                    let theta = (aqq - app) / (2.0 * apq);
                    // Stable tangent of the rotation angle.
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    for k in 0..p {
                        let aki = a[(k, i)];
                        let akj = a[(k, j)];
                        a[(k, i)] = c * aki - s * akj;
                        a[(k, j)] = s * aki + c * akj;
                    }
                    for k in 0..p {
                        let aik = a[(i, k)];
                        let ajk = a[(j, k)];
                        a[(i, k)] = c * aik - s * ajk;
                        a[(j, k)] = s * aik + c * ajk;
                    }
                    for k in 0..p {
                        let qki = q[(k, i)];
                        let qkj = q[(k, j)];
                        q[(k, i)] = c * qki - s * qkj;
                        q[(k, j)] = s * qki + c * qkj;
                    }
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&x, &y| a[(x, x)].partial_cmp(&a[(y, y)]).unwrap());
    let vals: Vec<f64> = order.iter().map(|&k| a[(k, k)]).collect();
    let vecs = Matrix::from_fn(p, p, |i, j| q[(i, order[j])]);
    (vals, vecs)
}

/// log det m through the Cholesky factor: 2·Σ log L_ii.
pub fn log_det(m: &SymMatrix) -> Result<f64> {
    let l = cholesky(m)?;
    Ok(2.0 * (0..m.dim()).map(|i| l[(i, i)].ln()).sum::<f64>())
}

/// Inverse of an SPD matrix through its Cholesky factor.
pub fn inverse(m: &SymMatrix) -> Result<SymMatrix> {
    let p = m.dim();
    let l = cholesky(m)?;
    let mut inv = Matrix::zeros(p, p);
    // Solve L·Lᵀ x = e_col for each unit vector.
    for col in 0..p {
        let mut y = vec![0.0; p];
        for i in 0..p {
            let mut s = if i == col { 1.0 } else { 0.0 };
            for k in 0..i {
                s -= l[(i, k)] * y[k];
            }
            y[i] = s / l[(i, i)];
        }
        for i in (0..p).rev() {
            let mut s = y[i];
            for k in (i + 1)..p {
                s -= l[(k, i)] * y[k];
            }
            y[i] = s / l[(i, i)];
            inv[(i, col)] = y[i];
        }
    }
    Ok(SymMatrix::symmetrize(&inv))
}

/// Draws n rows from N(0, cov); deterministic in the stream value.
pub fn sample_mvn(cov: &SymMatrix, n: usize, rng: &RngStream) -> Result<Matrix> {
    let p = cov.dim();
    let l = cholesky(cov)?;
    let mut gen = rng.generator();
    let mut out = Matrix::zeros(n, p);
    let normal = StandardNormal;
    for i in 0..n {
        let z: Vec<f64> = (0..p).map(|_| normal.sample(&mut gen)).collect();
        for r in 0..p {
            let mut s = 0.0;
            for k in 0..=r {
                s += l[(r, k)] * z[k];
            }
            out[(i, r)] = s;
        }
    }
    Ok(out)
}

/// Uncentered covariance (1/n)·XᵀX; the mean-zero convention used throughout.
pub fn sample_covariance(data: &Matrix) -> SymMatrix {
    let n = data.rows();
    let p = data.cols();
    assert!(n >= 1, "sample_covariance needs at least one row");
    let mut cov = Matrix::zeros(p, p);
    for r in 0..n {
        let row = data.row(r);
        for i in 0..p {
            for j in 0..=i {
                cov[(i, j)] += row[i] * row[j];
            }
        }
    }
    let inv_n = 1.0 / n as f64;
    SymMatrix::from_fn(p, |i, j| cov[(i, j)] * inv_n)
}

/// Demeans each column in place and returns the column means.
pub fn demean_columns(data: &mut Matrix) -> Vec<f64> {
    let n = data.rows();
    let p = data.cols();
    let mut means = vec![0.0; p];
    if n == 0 {
        return means;
    }
    for i in 0..n {
        for j in 0..p {
            means[j] += data[(i, j)];
        }
    }
    for m in &mut means {
        *m /= n as f64;
    }
    for i in 0..n {
        for j in 0..p {
            data[(i, j)] -= means[j];
        }
    }
    means
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn cholesky_known_factor() {
        let m = SymMatrix::from_rows(&[vec![4.0, 2.0], vec![2.0, 5.0]]).unwrap();
        let l = cholesky(&m).unwrap();
        assert_abs_diff_eq!(l[(0, 0)], 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(l[(0, 1)], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(l[(1, 0)], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(l[(1, 1)], 2.0, epsilon = 1e-12);
        let r = l.matmul(&l.transpose());
        for i in 0..2 {
            for j in 0..2 {
                assert_abs_diff_eq!(r[(i, j)], m[(i, j)], epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn cholesky_identity() {
        let l = cholesky(&SymMatrix::identity(3)).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(l[(i, j)], expect, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let m = SymMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap();
        assert!(cholesky(&m).is_err());
    }

    #[test]
    fn eigen_two_by_two() {
        let m = SymMatrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap();
        let (vals, q) = sym_eigen(&m);
        assert_abs_diff_eq!(vals[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(vals[1], 3.0, epsilon = 1e-12);
        // Reconstruction Q diag(λ) Qᵀ.
        for i in 0..2 {
            for j in 0..2 {
                let mut s = 0.0;
                for k in 0..2 {
                    s += q[(i, k)] * vals[k] * q[(j, k)];
                }
                assert_abs_diff_eq!(s, m[(i, j)], epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn eigen_diagonal_sorted() {
        let m = SymMatrix::diag(&[5.0, -3.0, 0.0]);
        let (vals, _) = sym_eigen(&m);
        assert_abs_diff_eq!(vals[0], -3.0, epsilon = 1e-14);
        assert_abs_diff_eq!(vals[1], 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(vals[2], 5.0, epsilon = 1e-14);
    }

    #[test]
    fn log_det_values() {
        assert_abs_diff_eq!(
            log_det(&SymMatrix::identity(4)).unwrap(),
            0.0,
            epsilon = 1e-14
        );
        assert_abs_diff_eq!(
            log_det(&SymMatrix::diag(&[2.0, 2.0])).unwrap(),
            2.0 * 2.0f64.ln(),
            epsilon = 1e-14
        );
        assert_abs_diff_eq!(
            log_det(&SymMatrix::identity(3).scale(2.0)).unwrap(),
            3.0 * 2.0f64.ln(),
            epsilon = 1e-14
        );
    }

    #[test]
    fn inverse_reconstructs_identity() {
        let m = SymMatrix::from_rows(&[
            vec![4.0, 1.0, 0.5],
            vec![1.0, 3.0, 0.2],
            vec![0.5, 0.2, 2.0],
        ])
        .unwrap();
        let inv = inverse(&m).unwrap();
        let prod = m.to_matrix().matmul(&inv.to_matrix());
        for i in 0..3 {
            for j in 0..3 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(prod[(i, j)], expect, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn sample_covariance_rank_one() {
        let data = Matrix::from_rows(&[vec![1.0, 2.0]]).unwrap();
        let cov = sample_covariance(&data);
        assert_eq!(cov[(0, 0)], 1.0);
        assert_eq!(cov[(0, 1)], 2.0);
        assert_eq!(cov[(1, 1)], 4.0);
    }

    #[test]
    fn sample_covariance_two_rows() {
        let data = Matrix::from_rows(&[vec![1.0, 0.0], vec![-1.0, 0.0]]).unwrap();
        let cov = sample_covariance(&data);
        assert_eq!(cov[(0, 0)], 1.0);
        assert_eq!(cov[(0, 1)], 0.0);
        assert_eq!(cov[(1, 1)], 0.0);
    }

    #[test]
    fn sample_mvn_deterministic_and_sized() {
        let cov = SymMatrix::identity(2);
        let rng = RngStream::new(7, 3);
        let a = sample_mvn(&cov, 5, &rng).unwrap();
        let b = sample_mvn(&cov, 5, &rng).unwrap();
        assert_eq!(a, b);
        let empty = sample_mvn(&cov, 0, &rng).unwrap();
        assert_eq!(empty.rows(), 0);
    }

    #[test]
    fn spd_check_signs() {
        assert!(spd_check(&SymMatrix::identity(3)).is_pd);
        let m = SymMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap();
        let chk = spd_check(&m);
        assert!(!chk.is_pd);
        assert_abs_diff_eq!(chk.min_eigenvalue, -1.0, epsilon = 1e-12);
    }
}
