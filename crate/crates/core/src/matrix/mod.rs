//! Dense complex linear algebra.
//!
//! Matrices are square and stored row-major. Everything here is a pure
//! function of its inputs; [`ComplexMatrix`] is never mutated behind a
//! shared reference.

mod eigen;

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use eigen::{eigh, eigvalsh, HermitianEigenDecomposition, EIG_RESIDUAL_TOL};

pub(crate) const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub(crate) const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Dense square complex matrix, row-major.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexMatrix {
    dim: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    /// Builds a matrix from row-major entries, rejecting non-finite values.
    pub fn new(dim: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != dim * dim {
            return Err(Error::DimensionMismatch { left: dim * dim, right: data.len() });
        }
        if let Some(pos) = data.iter().position(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite { row: pos / dim.max(1), col: pos % dim.max(1) });
        }
        Ok(Self { dim, data })
    }

    pub fn from_rows(rows: &[Vec<Complex64>]) -> Result<Self> {
        let dim = rows.len();
        let mut data = Vec::with_capacity(dim * dim);
        for row in rows {
            if row.len() != dim {
                return Err(Error::DimensionMismatch { left: dim, right: row.len() });
            }
            data.extend_from_slice(row);
        }
        Self::new(dim, data)
    }

    /// Real-valued convenience constructor, mostly for tests and fixtures.
    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self> {
        let rows: Vec<Vec<Complex64>> = rows
            .iter()
            .map(|r| r.iter().map(|&x| Complex64::new(x, 0.0)).collect())
            .collect();
        Self::from_rows(&rows)
    }

    pub fn zeros(dim: usize) -> Self {
        Self { dim, data: vec![ZERO; dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = ONE;
        }
        m
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                data.push(f(i, j));
            }
        }
        Self { dim, data }
    }

    pub fn diagonal(entries: &[Complex64]) -> Self {
        let dim = entries.len();
        let mut m = Self::zeros(dim);
        for (i, &z) in entries.iter().enumerate() {
            m.data[i * dim + i] = z;
        }
        m
    }

    pub fn real_diagonal(entries: &[f64]) -> Self {
        let entries: Vec<Complex64> = entries.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        Self::diagonal(&entries)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[Complex64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    #[inline]
    pub(crate) fn row_mut(&mut self, i: usize) -> &mut [Complex64] {
        let d = self.dim;
        &mut self.data[i * d..(i + 1) * d]
    }

    pub fn column(&self, j: usize) -> Vec<Complex64> {
        (0..self.dim).map(|i| self.data[i * self.dim + j]).collect()
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self[(j, i)])
    }

    pub fn conj(&self) -> Self {
        Self { dim: self.dim, data: self.data.iter().map(|z| z.conj()).collect() }
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self { dim: self.dim, data: self.data.iter().map(|z| z * c).collect() }
    }

    pub fn scale_real(&self, c: f64) -> Self {
        Self { dim: self.dim, data: self.data.iter().map(|z| z * c).collect() }
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self.data[i * self.dim + i]).sum()
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `max |a_ij - b_ij|`. Panics on dimension mismatch.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    /// `max |M - M†|` entrywise.
    pub fn hermitian_deviation(&self) -> f64 {
        let n = self.dim;
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((self.data[i * n + j] - self.data[j * n + i].conj()).norm());
            }
        }
        worst
    }

    /// Default tolerance `1e-10 (1 + ‖M‖_max)` for the Hermiticity test.
    pub fn hermiticity_tol(&self) -> f64 {
        1e-10 * (1.0 + self.max_abs())
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian_deviation() <= self.hermiticity_tol()
    }

    pub(crate) fn ensure_hermitian(&self) -> Result<()> {
        let deviation = self.hermitian_deviation();
        let tol = self.hermiticity_tol();
        if deviation > tol {
            return Err(Error::NotHermitian { deviation, tol });
        }
        Ok(())
    }

    /// `max |M†M - I|` entrywise.
    pub fn unitarity_defect(&self) -> f64 {
        (&self.adjoint() * self).max_abs_diff(&Self::identity(self.dim))
    }

    pub fn mul_vec(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(v.len(), self.dim, "dimension mismatch");
        (0..self.dim).map(|i| dot(self.row(i), v)).collect()
    }

    /// `self · other`, or an error on dimension mismatch.
    pub fn try_mul(&self, other: &Self) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch { left: self.dim, right: other.dim });
        }
        Ok(matmul(self, other))
    }

    /// `self · other†`, computed without materialising the adjoint.
    pub fn mul_adjoint(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            let a = self.row(i);
            for j in 0..n {
                let b = other.row(j);
                out.data[i * n + j] = a.iter().zip(b).map(|(x, y)| x * y.conj()).sum();
            }
        }
        out
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix({}x{})", self.dim, self.dim)?;
        if self.dim <= 8 {
            for i in 0..self.dim {
                let row: Vec<String> = self
                    .row(i)
                    .iter()
                    .map(|z| format!("{:+.4}{:+.4}i", z.re, z.im))
                    .collect();
                writeln!(f, "  [{}]", row.join(", "))?;
            }
        }
        Ok(())
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.dim + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.dim + j]
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch");
        ComplexMatrix {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch");
        ComplexMatrix {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch");
        matmul(self, rhs)
    }
}

fn matmul(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let n = a.dim;
    let mut out = ComplexMatrix::zeros(n);
    for i in 0..n {
        let out_row = &mut out.data[i * n..(i + 1) * n];
        for k in 0..n {
            let aik = a.data[i * n + k];
            if aik == ZERO {
                continue;
            }
            let b_row = &b.data[k * n..(k + 1) * n];
            for (o, bkj) in out_row.iter_mut().zip(b_row) {
                *o += aik * bkj;
            }
        }
    }
    out
}

/// Unconjugated dot product `Σ a_i b_i`.
#[inline]
pub(crate) fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Hilbert-space inner product `⟨x, y⟩ = Σ conj(x_i) y_i`.
pub fn inner(x: &[Complex64], y: &[Complex64]) -> Complex64 {
    x.iter().zip(y).map(|(a, b)| a.conj() * b).sum()
}

pub fn norm2(x: &[Complex64]) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Kronecker product: `kron(a, b)[i·db + k, j·db + l] = a[i, j] · b[k, l]`.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let (da, db) = (a.dim, b.dim);
    let n = da * db;
    let mut out = ComplexMatrix::zeros(n);
    for i in 0..da {
        for j in 0..da {
            let aij = a.data[i * da + j];
            if aij == ZERO {
                continue;
            }
            for k in 0..db {
                let row = i * db + k;
                for l in 0..db {
                    out.data[row * n + j * db + l] = aij * b.data[k * db + l];
                }
            }
        }
    }
    out
}

/// `ab - ba`.
pub fn commutator(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    if a.dim != b.dim {
        return Err(Error::DimensionMismatch { left: a.dim, right: b.dim });
    }
    Ok(&matmul(a, b) - &matmul(b, a))
}

/// Largest singular value.
///
/// Hermitian input goes through `max |λ|`; anything else through the largest
/// eigenvalue of `M†M`.
pub fn operator_norm(m: &ComplexMatrix) -> f64 {
    if m.dim == 0 || m.max_abs() == 0.0 {
        return 0.0;
    }
    if m.hermitian_deviation() <= 1e-14 * m.max_abs() {
        let herm = hermitian_part(m);
        let ev = eigvalsh(&herm).expect("Hermitian eigenvalues");
        return ev.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()));
    }
    let gram = &m.adjoint() * m;
    let gram = hermitian_part(&gram);
    let ev = eigvalsh(&gram).expect("Gram matrix is Hermitian");
    ev.last().copied().unwrap_or(0.0).max(0.0).sqrt()
}

/// `(M + M†) / 2`.
pub fn hermitian_part(m: &ComplexMatrix) -> ComplexMatrix {
    let n = m.dim;
    ComplexMatrix::from_fn(n, |i, j| (m[(i, j)] + m[(j, i)].conj()) * 0.5)
}

fn gram_matrix(vectors: &[Vec<Complex64>]) -> ComplexMatrix {
    let d = vectors.len();
    ComplexMatrix::from_fn(d, |j, k| inner(&vectors[j], &vectors[k]))
}

fn check_same_dim(vectors: &[Vec<Complex64>]) -> Result<()> {
    let first = vectors.first().ok_or(Error::Empty("vector family"))?.len();
    if let Some(v) = vectors.iter().find(|v| v.len() != first) {
        return Err(Error::DimensionMismatch { left: first, right: v.len() });
    }
    Ok(())
}

/// Sufficient test for linear independence: every `‖ξ_j‖² ≥ α` and every
/// off-diagonal `|⟨ξ_j, ξ_k⟩| < α / d`.
///
/// Under the hypothesis the Gram matrix is `D(1 + M)` with `‖M‖ < 1`, so it
/// is invertible and the family is independent.
pub fn gram_independent(vectors: &[Vec<Complex64>], alpha: f64) -> Result<bool> {
    check_same_dim(vectors)?;
    if !(alpha > 0.0) {
        return Err(Error::InvalidArgument(format!("alpha must be positive, got {alpha}")));
    }
    let d = vectors.len();
    let gram = gram_matrix(vectors);
    let bound = alpha / d as f64;
    for j in 0..d {
        if gram[(j, j)].re < alpha {
            return Ok(false);
        }
        for k in 0..d {
            if j != k && gram[(j, k)].norm() >= bound {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Number of singular values above `rel_tol · σ_max` for the stacked vectors.
pub fn numerical_rank(vectors: &[Vec<Complex64>], rel_tol: f64) -> Result<usize> {
    check_same_dim(vectors)?;
    let ev = eigvalsh(&hermitian_part(&gram_matrix(vectors)))?;
    let sing: Vec<f64> = ev.iter().map(|x| x.max(0.0).sqrt()).collect();
    let top = sing.iter().cloned().fold(0.0, f64::max);
    if top == 0.0 {
        return Ok(0);
    }
    Ok(sing.iter().filter(|&&s| s > rel_tol * top).count())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn kron_identity_and_diagonal() {
        let i2 = ComplexMatrix::identity(2);
        assert_eq!(kron(&i2, &i2), ComplexMatrix::identity(4));

        let z = ComplexMatrix::real_diagonal(&[1.0, -1.0]);
        assert_eq!(kron(&z, &i2), ComplexMatrix::real_diagonal(&[1.0, 1.0, -1.0, -1.0]));
    }

    #[test]
    fn kron_block_structure() {
        let x = ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]).unwrap();
        let d = ComplexMatrix::real_diagonal(&[2.0, 3.0]);
        let expected = ComplexMatrix::from_real_rows(&[
            &[0.0, 0.0, 2.0, 0.0],
            &[0.0, 0.0, 0.0, 3.0],
            &[2.0, 0.0, 0.0, 0.0],
            &[0.0, 3.0, 0.0, 0.0],
        ])
        .unwrap();
        assert_eq!(kron(&x, &d), expected);
    }

    #[test]
    fn commutator_cases() {
        let m = ComplexMatrix::from_rows(&[vec![c(1.0, 2.0), c(0.5, 0.0)], vec![c(-3.0, 0.0), c(0.0, 1.0)]])
            .unwrap();
        assert_eq!(commutator(&ComplexMatrix::identity(2), &m).unwrap().max_abs(), 0.0);
        assert_eq!(commutator(&m, &m).unwrap().max_abs(), 0.0);

        let z = ComplexMatrix::real_diagonal(&[1.0, -1.0]);
        let x = ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]).unwrap();
        let expected = ComplexMatrix::from_real_rows(&[&[0.0, 2.0], &[-2.0, 0.0]]).unwrap();
        assert_eq!(commutator(&z, &x).unwrap(), expected);

        assert!(matches!(
            commutator(&z, &ComplexMatrix::identity(3)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn operator_norm_cases() {
        assert_eq!(operator_norm(&ComplexMatrix::zeros(3)), 0.0);
        assert_abs_diff_eq!(operator_norm(&ComplexMatrix::real_diagonal(&[3.0, -5.0])), 5.0, epsilon = 1e-12);
        let nil = ComplexMatrix::from_real_rows(&[&[0.0, 2.0], &[0.0, 0.0]]).unwrap();
        assert_abs_diff_eq!(operator_norm(&nil), 2.0, epsilon = 1e-12);
    }

    #[test]
    fn rejects_non_finite() {
        let err = ComplexMatrix::new(1, vec![c(f64::NAN, 0.0)]).unwrap_err();
        assert!(matches!(err, Error::NonFinite { row: 0, col: 0 }));
    }

    #[test]
    fn gram_orthonormal_and_duplicate() {
        let e1 = vec![c(1.0, 0.0), c(0.0, 0.0)];
        let e2 = vec![c(0.0, 0.0), c(0.0, 1.0)];
        assert!(gram_independent(&[e1.clone(), e2], 1.0).unwrap());
        assert!(!gram_independent(&[e1.clone(), e1], 1.0).unwrap());
        assert!(matches!(gram_independent(&[], 1.0), Err(Error::Empty(_))));
    }

    #[test]
    fn gram_three_vectors_with_overlap_point_three() {
        // Unit vectors with pairwise inner product 0.3: the Gram matrix is
        // 0.7 I + 0.3 J, determinant 0.7² · 1.6 = 0.784 > 0.
        let gram_sqrt = {
            // Cholesky factor of 0.7 I + 0.3 J, columns as vectors.
            let g = [[1.0, 0.3, 0.3], [0.3, 1.0, 0.3], [0.3, 0.3, 1.0]];
            let mut l = [[0.0f64; 3]; 3];
            for i in 0..3 {
                for j in 0..=i {
                    let s: f64 = (0..j).map(|k| l[i][k] * l[j][k]).sum();
                    l[i][j] = if i == j { (g[i][i] - s).sqrt() } else { (g[i][j] - s) / l[j][j] };
                }
            }
            l
        };
        // Nudged up by 1e-12 so rounding cannot push ‖ξ‖² below α = 1.
        let vectors: Vec<Vec<Complex64>> = (0..3)
            .map(|i| (0..3).map(|k| c(gram_sqrt[i][k] * (1.0 + 1e-12), 0.0)).collect())
            .collect();
        let det = 0.7f64 * 0.7 * 1.6;
        assert!(det > 0.0);
        assert!(gram_independent(&vectors, 1.0).unwrap());
        assert_eq!(numerical_rank(&vectors, 1e-8).unwrap(), 3);
    }
}
