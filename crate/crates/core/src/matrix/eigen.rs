//! Hermitian eigensolver: Householder reduction to a real symmetric
//! tridiagonal matrix followed by implicit-shift QL.
//!
//! The reduction works on a full copy of the matrix. Reflectors are kept so
//! the eigenvectors of the tridiagonal problem can be mapped back. After the
//! reduction the complex sub-diagonal is rotated onto the positive reals by a
//! diagonal phase matrix, which leaves a real problem for QL.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{ComplexMatrix, ZERO};
use crate::error::{Error, Result};

/// Relative residual tolerance: `‖M v - λ v‖ ≤ tol · ‖M‖_op`.
pub const EIG_RESIDUAL_TOL: f64 = 1e-9;

const MAX_QL_ITERATIONS: usize = 60;

/// Eigenvalues in ascending order; column `j` of `eigenvectors` pairs with
/// `eigenvalues[j]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HermitianEigenDecomposition {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: ComplexMatrix,
}

impl HermitianEigenDecomposition {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvector(&self, j: usize) -> Vec<Complex64> {
        self.eigenvectors.column(j)
    }

    /// `V · diag(f(λ)) · V†`.
    pub fn map_spectrum(&self, mut f: impl FnMut(f64) -> Complex64) -> ComplexMatrix {
        let values: Vec<Complex64> = self.eigenvalues.iter().map(|&l| f(l)).collect();
        self.with_diagonal(&values)
    }

    /// `V · diag(values) · V†` for precomputed diagonal values.
    pub fn with_diagonal(&self, values: &[Complex64]) -> ComplexMatrix {
        let n = self.dim();
        assert_eq!(values.len(), n, "dimension mismatch");
        let v = &self.eigenvectors;
        let scaled = ComplexMatrix::from_fn(n, |i, k| v[(i, k)] * values[k]);
        scaled.mul_adjoint(v)
    }

    /// `V · diag(λ) · V†`.
    pub fn reconstruct(&self) -> ComplexMatrix {
        self.map_spectrum(|l| Complex64::new(l, 0.0))
    }

    /// Worst `‖M v_j − λ_j v_j‖₂` over all pairs.
    pub fn max_residual(&self, m: &ComplexMatrix) -> f64 {
        let mut worst: f64 = 0.0;
        for (j, &lambda) in self.eigenvalues.iter().enumerate() {
            let v = self.eigenvector(j);
            let mv = m.mul_vec(&v);
            let r: f64 = mv.iter().zip(&v).map(|(a, b)| (a - b * lambda).norm_sqr()).sum();
            worst = worst.max(r.sqrt());
        }
        worst
    }
}

/// Full Hermitian eigendecomposition, eigenvalues ascending.
pub fn eigh(m: &ComplexMatrix) -> Result<HermitianEigenDecomposition> {
    m.ensure_hermitian()?;
    let n = m.dim();
    if n == 0 {
        return Ok(HermitianEigenDecomposition { eigenvalues: vec![], eigenvectors: ComplexMatrix::zeros(0) });
    }
    let reduced = tridiagonalize(m);
    let mut diag = reduced.diag.clone();
    let mut off = reduced.off_abs.clone();
    // Rows of `zt` are the columns of the tridiagonal eigenvector matrix.
    let mut zt = vec![0.0f64; n * n];
    for i in 0..n {
        zt[i * n + i] = 1.0;
    }
    implicit_ql(&mut diag, &mut off, Some(&mut zt))?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| diag[a].total_cmp(&diag[b]));

    // C = Φ · Z with eigenvectors as columns, then apply the reflectors.
    let mut vectors = ComplexMatrix::zeros(n);
    for (col, &src) in order.iter().enumerate() {
        let z = &zt[src * n..(src + 1) * n];
        for row in 0..n {
            vectors[(row, col)] = reduced.phases[row] * z[row];
        }
    }
    reduced.apply_reflectors(&mut vectors);

    Ok(HermitianEigenDecomposition {
        eigenvalues: order.iter().map(|&i| diag[i]).collect(),
        eigenvectors: vectors,
    })
}

/// Eigenvalues only, ascending.
pub fn eigvalsh(m: &ComplexMatrix) -> Result<Vec<f64>> {
    m.ensure_hermitian()?;
    if m.dim() == 0 {
        return Ok(vec![]);
    }
    let reduced = tridiagonalize(m);
    let mut diag = reduced.diag;
    let mut off = reduced.off_abs;
    implicit_ql(&mut diag, &mut off, None)?;
    diag.sort_by(f64::total_cmp);
    Ok(diag)
}

struct Tridiagonal {
    diag: Vec<f64>,
    /// `|e_k|` for k in 0..n-1, with a trailing zero.
    off_abs: Vec<f64>,
    /// Diagonal of Φ, mapping the real tridiagonal basis back to the
    /// Householder basis.
    phases: Vec<Complex64>,
    /// Reflector `k` acts on indices `k+1..n` as `I - u u† / h`.
    reflectors: Vec<(Vec<Complex64>, f64)>,
}

impl Tridiagonal {
    fn apply_reflectors(&self, c: &mut ComplexMatrix) {
        let n = c.dim();
        let mut w = vec![ZERO; n];
        for (k, (u, h)) in self.reflectors.iter().enumerate().rev() {
            if *h == 0.0 {
                continue;
            }
            let start = k + 1;
            w.iter_mut().for_each(|x| *x = ZERO);
            for (i, ui) in u.iter().enumerate() {
                let uc = ui.conj();
                for (wj, cij) in w.iter_mut().zip(c.row(start + i)) {
                    *wj += uc * cij;
                }
            }
            let inv_h = 1.0 / h;
            for (i, ui) in u.iter().enumerate() {
                let s = ui * inv_h;
                for (cij, wj) in c.row_mut(start + i).iter_mut().zip(&w) {
                    *cij -= s * wj;
                }
            }
        }
    }
}

fn tridiagonalize(m: &ComplexMatrix) -> Tridiagonal {
    let n = m.dim();
    let mut a = m.clone();
    let mut reflectors = Vec::with_capacity(n.saturating_sub(2));
    let mut sub = vec![ZERO; n.saturating_sub(1)];
    let mut p = vec![ZERO; n];

    for k in 0..n.saturating_sub(1) {
        let start = k + 1;
        let len = n - start;
        // Column k below the diagonal, read from row k by Hermiticity.
        let x: Vec<Complex64> = a.row(k)[start..].iter().map(|z| z.conj()).collect();
        let tail_sq: f64 = x[1..].iter().map(|z| z.norm_sqr()).sum();
        let alpha = x[0];
        if len == 1 || tail_sq == 0.0 {
            sub[k] = alpha;
            reflectors.push((vec![], 0.0));
            continue;
        }
        let xnorm = (alpha.norm_sqr() + tail_sq).sqrt();
        let phase = if alpha.norm() == 0.0 { Complex64::new(1.0, 0.0) } else { alpha / alpha.norm() };
        let beta = -phase * xnorm;
        let mut u = x;
        u[0] = alpha - beta;
        let h = 0.5 * u.iter().map(|z| z.norm_sqr()).sum::<f64>();

        // p = A22 u / h ; K = (u† p) / 2h ; q = p - K u
        let inv_h = 1.0 / h;
        for i in 0..len {
            let row = &a.row(start + i)[start..];
            p[i] = row.iter().zip(&u).map(|(x, y)| x * y).sum::<Complex64>() * inv_h;
        }
        let upk: f64 = u.iter().zip(&p[..len]).map(|(x, y)| (x.conj() * y).re).sum();
        let kk = upk * 0.5 * inv_h;
        for i in 0..len {
            p[i] -= u[i] * kk;
        }
        // A22 -= u q† + q u†
        for i in 0..len {
            let (ui, qi) = (u[i], p[i]);
            let row = &mut a.row_mut(start + i)[start..];
            for ((aij, uj), qj) in row.iter_mut().zip(&u).zip(&p[..len]) {
                *aij -= ui * qj.conj() + qi * uj.conj();
            }
        }
        sub[k] = beta;
        reflectors.push((u, h));
    }

    let diag: Vec<f64> = (0..n).map(|i| a[(i, i)].re).collect();
    let mut off_abs = vec![0.0; n];
    let mut phases = vec![Complex64::new(1.0, 0.0); n];
    for k in 0..n.saturating_sub(1) {
        let e = sub[k];
        let r = e.norm();
        off_abs[k] = r;
        phases[k + 1] = if r == 0.0 { phases[k] } else { phases[k] * (e / r) };
    }
    Tridiagonal { diag, off_abs, phases, reflectors }
}

/// Implicit-shift QL on a real symmetric tridiagonal matrix.
///
/// `off[i]` couples `i` and `i+1`; `off[n-1]` must be zero. When `zt` is given
/// its rows are rotated alongside, so row `i` ends up holding the eigenvector
/// of `diag[i]`.
fn implicit_ql(diag: &mut [f64], off: &mut [f64], mut zt: Option<&mut Vec<f64>>) -> Result<()> {
    let n = diag.len();
    // Off-diagonals below eps·‖T‖ are dropped as well, otherwise clusters of
    // zero eigenvalues never deflate under the purely relative test.
    let norm = diag.iter().zip(off.iter()).map(|(d, e)| d.abs() + e.abs()).fold(0.0, f64::max);
    let floor = f64::EPSILON * norm;
    for l in 0..n {
        let mut iterations = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = diag[m].abs() + diag[m + 1].abs();
                if off[m].abs() <= f64::EPSILON * dd || off[m].abs() <= floor {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iterations += 1;
            if iterations > MAX_QL_ITERATIONS {
                return Err(Error::NoConvergence { index: l, iterations });
            }
            let mut g = (diag[l + 1] - diag[l]) / (2.0 * off[l]);
            let mut r = g.hypot(1.0);
            g = diag[m] - diag[l] + off[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut deflated = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * off[i];
                let b = c * off[i];
                r = f.hypot(g);
                off[i + 1] = r;
                if r == 0.0 {
                    diag[i + 1] -= p;
                    off[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = diag[i + 1] - p;
                r = (diag[i] - g) * s + 2.0 * c * b;
                p = s * r;
                diag[i + 1] = g + p;
                g = c * r - b;
                if let Some(z) = zt.as_deref_mut() {
                    let (lo, hi) = z.split_at_mut((i + 1) * n);
                    let zi = &mut lo[i * n..];
                    let zi1 = &mut hi[..n];
                    for (a, b) in zi.iter_mut().zip(zi1.iter_mut()) {
                        let f = *b;
                        *b = s * *a + c * f;
                        *a = c * *a - s * f;
                    }
                }
            }
            if deflated {
                continue;
            }
            diag[l] -= p;
            off[l] = g;
            off[m] = 0.0;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::operator_norm;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_hermitian(n: usize, seed: u64) -> ComplexMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut m = ComplexMatrix::zeros(n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(rng.random_range(-1.0..1.0), 0.0);
            for j in i + 1..n {
                let z = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                m[(i, j)] = z;
                m[(j, i)] = z.conj();
            }
        }
        m
    }

    #[test]
    fn identity_and_diagonal() {
        let d = eigh(&ComplexMatrix::identity(3)).unwrap();
        assert_eq!(d.eigenvalues, vec![1.0, 1.0, 1.0]);
        let d = eigh(&ComplexMatrix::real_diagonal(&[1.0, -1.0])).unwrap();
        assert_eq!(d.eigenvalues, vec![-1.0, 1.0]);
    }

    #[test]
    fn rank_deficient_projection() {
        let h = random_hermitian(40, 11);
        let e = eigh(&h).unwrap();
        let keep: Vec<Complex64> =
            (0..40).map(|k| Complex64::new(if k % 7 == 0 { 1.0 } else { 0.0 }, 0.0)).collect();
        let p = e.with_diagonal(&keep);
        let ev = eigvalsh(&p).unwrap();
        let ones = ev.iter().filter(|x| (*x - 1.0).abs() < 1e-12).count();
        assert_eq!(ones, 6);
        assert!(ev.iter().all(|x| x.abs() < 1e-12 || (x - 1.0).abs() < 1e-12));
        let d = eigh(&p).unwrap();
        assert!(d.max_residual(&p) < 1e-12);
    }

    #[test]
    fn pauli_x() {
        let x = ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]).unwrap();
        let d = eigh(&x).unwrap();
        assert_abs_diff_eq!(d.eigenvalues[0], -1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(d.eigenvalues[1], 1.0, epsilon = 1e-14);
    }

    #[test]
    fn rejects_non_hermitian() {
        let m = ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]).unwrap();
        assert!(matches!(eigh(&m), Err(Error::NotHermitian { .. })));
        assert!(matches!(eigvalsh(&m), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn random_reconstruction_and_residuals() {
        for (n, seed) in [(1, 1), (2, 2), (5, 3), (17, 4), (64, 5)] {
            let h = random_hermitian(n, seed);
            let d = eigh(&h).unwrap();
            let scale = operator_norm(&h);
            assert!(d.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
            assert!(d.max_residual(&h) <= EIG_RESIDUAL_TOL * scale);
            assert!(d.eigenvectors.unitarity_defect() <= EIG_RESIDUAL_TOL);
            let rec = &d.reconstruct() - &h;
            assert!(operator_norm(&rec) <= 1e-10 * scale, "n={n}");
            let vals = eigvalsh(&h).unwrap();
            for (a, b) in vals.iter().zip(&d.eigenvalues) {
                assert_abs_diff_eq!(a, b, epsilon = 1e-12 * scale);
            }
        }
    }

    #[test]
    fn degenerate_block() {
        // diag(2,2,2) ⊕ a 2x2 block with eigenvalues 1 and 3.
        let mut m = ComplexMatrix::real_diagonal(&[2.0, 2.0, 2.0, 2.0, 2.0]);
        m[(3, 4)] = Complex64::new(0.0, 1.0);
        m[(4, 3)] = Complex64::new(0.0, -1.0);
        let d = eigh(&m).unwrap();
        let expected = [1.0, 2.0, 2.0, 2.0, 3.0];
        for (a, b) in d.eigenvalues.iter().zip(expected) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-13);
        }
        assert!(d.max_residual(&m) < 1e-12);
    }
}
