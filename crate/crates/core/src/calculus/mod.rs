//! Functional calculus of a self-adjoint matrix: unitary group, graph norm,
//! bounded functions by eigendecomposition or by Fourier cutoff, spectral
//! action and resolvent.

mod function;
mod iso;
mod quadrature;

use std::sync::OnceLock;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub use function::{FourierTransform, FunctionKind, SpectralFunction};
pub use iso::{iso_iso_check, tabulate_on_grid, IsoIsoReport, ISO_ISO_DEFAULT_GRID};
pub use quadrature::{integrate_channels, QuadratureReport};

use crate::error::{Error, Result};
use crate::matrix::{eigh, norm2, ComplexMatrix, HermitianEigenDecomposition};

/// A Hermitian matrix with its eigendecomposition computed on first use.
///
/// Safe to share between threads; the decomposition is populated at most once.
#[derive(Debug)]
pub struct SpectralCalculus {
    matrix: ComplexMatrix,
    eig: OnceLock<std::result::Result<HermitianEigenDecomposition, String>>,
}

impl SpectralCalculus {
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        if !matrix.is_hermitian() {
            return Err(Error::NotHermitian { deviation: matrix.hermitian_deviation(), tol: matrix.hermiticity_tol() });
        }
        Ok(Self { matrix, eig: OnceLock::new() })
    }

    /// Reuses a decomposition computed elsewhere, e.g. loaded from a cache.
    pub fn with_decomposition(matrix: ComplexMatrix, decomposition: HermitianEigenDecomposition) -> Result<Self> {
        if decomposition.dim() != matrix.dim() {
            return Err(Error::DimensionMismatch { left: matrix.dim(), right: decomposition.dim() });
        }
        let calc = Self::new(matrix)?;
        let _ = calc.eig.set(Ok(decomposition));
        Ok(calc)
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn eigen(&self) -> Result<&HermitianEigenDecomposition> {
        self.eig
            .get_or_init(|| eigh(&self.matrix).map_err(|e| e.to_string()))
            .as_ref()
            .map_err(|e| Error::InvalidState(format!("eigendecomposition failed: {e}")))
    }

    pub fn is_decomposed(&self) -> bool {
        self.eig.get().is_some()
    }

    /// `exp(itD)`.
    pub fn unitary_group(&self, t: f64) -> Result<ComplexMatrix> {
        Ok(self.eigen()?.map_spectrum(|l| Complex64::from_polar(1.0, t * l)))
    }

    /// `exp(itD) ξ`, without forming the matrix.
    pub fn evolve(&self, t: f64, xi: &[Complex64]) -> Result<Vec<Complex64>> {
        self.check_len(xi.len())?;
        let e = self.eigen()?;
        let v = &e.eigenvectors;
        let coeffs = v.adjoint().mul_vec(xi);
        let phased: Vec<Complex64> =
            coeffs.iter().zip(&e.eigenvalues).map(|(c, &l)| c * Complex64::from_polar(1.0, t * l)).collect();
        Ok(v.mul_vec(&phased))
    }

    /// `‖ξ‖ + ‖Dξ‖`.
    pub fn graph_norm(&self, xi: &[Complex64]) -> Result<f64> {
        graph_norm(&self.matrix, xi)
    }

    /// `V · diag(f(λ)) · V†`.
    pub fn apply_function_eig(&self, f: &SpectralFunction) -> Result<ComplexMatrix> {
        Ok(self.eigen()?.map_spectrum(|l| f.eval(l)))
    }

    /// `∫_{[−M,M]} f̂(t) exp(itD) dt` with `‖result − f(D)‖_op ≤ eps`.
    ///
    /// The integral is evaluated in the eigenbasis, where `exp(itD)` is
    /// diagonal, so the operator-norm error is the worst scalar error.
    pub fn apply_function_fourier(&self, f: &SpectralFunction, eps: f64) -> Result<FourierCalculus> {
        let ft = f.fourier.as_ref().ok_or(Error::MissingFourierTransform)?;
        let e = self.eigen()?;
        let report = integrate_channels(ft, &e.eigenvalues, eps)?;
        let matrix = e.with_diagonal(&report.values);
        Ok(FourierCalculus { matrix, eps, report })
    }

    /// `Σ_j f(λ_j / scale)` with multiplicity.
    pub fn spectral_action(&self, f: &SpectralFunction, scale: f64) -> Result<f64> {
        spectral_action_from_eigenvalues(&self.eigen()?.eigenvalues, f, scale)
    }

    /// `(D − λ)^{-1}`.
    pub fn resolvent(&self, lambda: Complex64) -> Result<ComplexMatrix> {
        self.apply_function_eig(&SpectralFunction::resolvent(lambda)?)
    }

    /// Whether `exp(itD)` preserves the graph norm of `ξ` to `1e-9` relative.
    pub fn group_isometry_check(&self, t: f64, xi: &[Complex64]) -> Result<bool> {
        let before = self.graph_norm(xi)?;
        let after = self.graph_norm(&self.evolve(t, xi)?)?;
        Ok((after - before).abs() <= 1e-9 * before)
    }

    /// `‖exp(isD)ξ − exp(itD)ξ‖` for `ξ` rescaled to graph norm 1, against `|s − t|`.
    pub fn displacement_check(&self, s: f64, t: f64, xi: &[Complex64]) -> Result<DisplacementCheck> {
        let g = self.graph_norm(xi)?;
        if g == 0.0 {
            return Err(Error::InvalidArgument("zero vector has no graph-norm normalization".into()));
        }
        let unit: Vec<Complex64> = xi.iter().map(|z| z / g).collect();
        let a = self.evolve(s, &unit)?;
        let b = self.evolve(t, &unit)?;
        let diff: Vec<Complex64> = a.iter().zip(&b).map(|(x, y)| x - y).collect();
        let displacement = norm2(&diff);
        let bound = (s - t).abs();
        Ok(DisplacementCheck { displacement, bound, holds: displacement <= bound + 1e-9 })
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.dim() {
            return Err(Error::DimensionMismatch { left: self.dim(), right: len });
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FourierCalculus {
    pub matrix: ComplexMatrix,
    pub eps: f64,
    pub report: QuadratureReport,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DisplacementCheck {
    pub displacement: f64,
    pub bound: f64,
    pub holds: bool,
}

/// A vector together with its graph norm `‖ξ‖ + ‖Dξ‖`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphNormedVector {
    pub vector: Vec<Complex64>,
    pub graph_norm: f64,
}

impl GraphNormedVector {
    pub fn new(d: &ComplexMatrix, vector: Vec<Complex64>) -> Result<Self> {
        let graph_norm = graph_norm(d, &vector)?;
        Ok(Self { vector, graph_norm })
    }
}

pub fn graph_norm(d: &ComplexMatrix, xi: &[Complex64]) -> Result<f64> {
    if xi.len() != d.dim() {
        return Err(Error::DimensionMismatch { left: d.dim(), right: xi.len() });
    }
    Ok(norm2(xi) + norm2(&d.mul_vec(xi)))
}

pub fn spectral_action_from_eigenvalues(eigenvalues: &[f64], f: &SpectralFunction, scale: f64) -> Result<f64> {
    if !(scale > 0.0) {
        return Err(Error::InvalidArgument(format!("scale must be positive, got {scale}")));
    }
    if !f.is_real() {
        return Err(Error::InvalidArgument("spectral action needs a real function".into()));
    }
    Ok(eigenvalues.iter().map(|&l| f.eval_real(l / scale)).sum())
}

pub fn unitary_group(d: &ComplexMatrix, t: f64) -> Result<ComplexMatrix> {
    SpectralCalculus::new(d.clone())?.unitary_group(t)
}

pub fn apply_function_eig(d: &ComplexMatrix, f: &SpectralFunction) -> Result<ComplexMatrix> {
    SpectralCalculus::new(d.clone())?.apply_function_eig(f)
}

pub fn apply_function_fourier(d: &ComplexMatrix, f: &SpectralFunction, eps: f64) -> Result<FourierCalculus> {
    SpectralCalculus::new(d.clone())?.apply_function_fourier(f, eps)
}

pub fn spectral_action(d: &ComplexMatrix, f: &SpectralFunction, scale: f64) -> Result<f64> {
    SpectralCalculus::new(d.clone())?.spectral_action(f, scale)
}

pub fn resolvent(d: &ComplexMatrix, lambda: Complex64) -> Result<ComplexMatrix> {
    SpectralCalculus::new(d.clone())?.resolvent(lambda)
}

pub fn group_isometry_check(d: &ComplexMatrix, t: f64, xi: &[Complex64]) -> Result<bool> {
    SpectralCalculus::new(d.clone())?.group_isometry_check(t, xi)
}
