//! Clock and shift unitaries, gamma matrices and the fuzzy-torus Dirac
//! operator, together with the closed-form spectra of the finite and limit
//! operators.
//!
//! `H_n` is the matrix algebra `M_n(C)` with inner product `Trace(a* b)`. It is
//! identified with `C^{n²}` by column-major flattening, `a[r][c] ↦ c·n + r`, so
//! `vec(X a) = (I ⊗ X) vec(a)` and `vec(a X) = (Xᵀ ⊗ I) vec(a)`. The spinor
//! factor is the fast index: basis vector `vec(a) ⊗ e_s` sits at `4·α + s`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{kron, ComplexMatrix, ONE, ZERO};

/// Identifies every convention that changes the matrix entries of `D_n`.
/// Cache files are keyed on a hash of this string.
pub const CONSTRUCTION_CONVENTION: &str =
    "dirac=n/2pi*sum[X_i,.](x)gamma_i;X=(ReU,ImU,ReV,ImV);V[k+1,k]=1;vec=column-major;spinor=fast;\
     gamma=(s1(x)s1,s1(x)s2,s1(x)s3,s3(x)I)";

fn check_n(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidArgument("matrix size n must be at least 1".into()));
    }
    Ok(())
}

/// `U_n = diag(exp(2iπk/n))`, k = 0..n-1.
pub fn clock(n: usize) -> Result<ComplexMatrix> {
    check_n(n)?;
    let entries: Vec<Complex64> =
        (0..n).map(|k| Complex64::from_polar(1.0, 2.0 * PI * k as f64 / n as f64)).collect();
    Ok(ComplexMatrix::diagonal(&entries))
}

/// Cyclic shift `V e_k = e_{k+1 mod n}`, i.e. `V[k+1 mod n, k] = 1`.
///
/// This orientation is the one for which `U V = exp(2iπ/n) V U` holds with
/// [`clock`]; the transpose satisfies the relation with `exp(−2iπ/n)`.
pub fn shift(n: usize) -> Result<ComplexMatrix> {
    check_n(n)?;
    let mut v = ComplexMatrix::zeros(n);
    for k in 0..n {
        v[((k + 1) % n, k)] = ONE;
    }
    Ok(v)
}

fn pauli() -> [ComplexMatrix; 3] {
    let i = Complex64::new(0.0, 1.0);
    [
        ComplexMatrix::from_fn(2, |r, c| if r != c { ONE } else { ZERO }),
        ComplexMatrix::from_fn(2, |r, c| match (r, c) {
            (0, 1) => -i,
            (1, 0) => i,
            _ => ZERO,
        }),
        ComplexMatrix::real_diagonal(&[1.0, -1.0]),
    ]
}

/// Euclidean Hermitian gamma matrices:
/// `γ_k = σ₁ ⊗ σ_k` for k = 1, 2, 3 and `γ₄ = σ₃ ⊗ I₂`.
pub fn gamma_matrices() -> [ComplexMatrix; 4] {
    let [s1, s2, s3] = pauli();
    let i2 = ComplexMatrix::identity(2);
    [kron(&s1, &s1), kron(&s1, &s2), kron(&s1, &s3), kron(&s3, &i2)]
}

/// `γ₅ = γ₁γ₂γ₃γ₄`, which equals `σ₂ ⊗ I₂` in this convention.
pub fn chirality_gamma() -> ComplexMatrix {
    let g = gamma_matrices();
    &(&(&g[0] * &g[1]) * &g[2]) * &g[3]
}

/// `ad(X)` on `H_n` in the column-major basis: `I ⊗ X − Xᵀ ⊗ I`.
pub fn adjoint_action(x: &ComplexMatrix) -> ComplexMatrix {
    let id = ComplexMatrix::identity(x.dim());
    &kron(&id, x) - &kron(&x.transpose(), &id)
}

/// The fuzzy-torus spectral triple at matrix size `n`.
#[derive(Clone, Debug)]
pub struct FuzzyTorusTriple {
    pub n: usize,
    pub dirac: ComplexMatrix,
    pub clock: ComplexMatrix,
    pub shift: ComplexMatrix,
    pub gammas: [ComplexMatrix; 4],
    /// `Re U, Im U, Re V, Im V`, paired with `γ₁..γ₄`.
    pub generators: [ComplexMatrix; 4],
}

impl FuzzyTorusTriple {
    /// `n / 2π`.
    pub fn prefactor(&self) -> f64 {
        self.n as f64 / (2.0 * PI)
    }

    pub fn hilbert_dim(&self) -> usize {
        4 * self.n * self.n
    }

    /// Max entry of `Γ D Γ + D` with `Γ = I ⊗ γ₅`, computed block by block.
    pub fn chirality_defect(&self) -> f64 {
        let g5 = chirality_gamma();
        let blocks = self.n * self.n;
        let mut worst: f64 = 0.0;
        let mut block = ComplexMatrix::zeros(4);
        for a in 0..blocks {
            for b in 0..blocks {
                for s in 0..4 {
                    for t in 0..4 {
                        block[(s, t)] = self.dirac[(4 * a + s, 4 * b + t)];
                    }
                }
                let conj = &(&g5 * &block) * &g5;
                worst = worst.max((&conj + &block).max_abs());
            }
        }
        worst
    }
}

pub fn real_part(m: &ComplexMatrix) -> ComplexMatrix {
    ComplexMatrix::from_fn(m.dim(), |i, j| (m[(i, j)] + m[(j, i)].conj()) * 0.5)
}

pub fn imag_part(m: &ComplexMatrix) -> ComplexMatrix {
    let two_i = Complex64::new(0.0, 2.0);
    ComplexMatrix::from_fn(m.dim(), |i, j| (m[(i, j)] - m[(j, i)].conj()) / two_i)
}

/// Builds `D_n = (n/2π) Σ ad(X_i) ⊗ γ_i` as a dense `4n² × 4n²` matrix.
pub fn dirac_fuzzy(n: usize) -> Result<FuzzyTorusTriple> {
    let u = clock(n)?;
    let v = shift(n)?;
    let gammas = gamma_matrices();
    let generators = [real_part(&u), imag_part(&u), real_part(&v), imag_part(&v)];
    let ads: Vec<ComplexMatrix> = generators.iter().map(adjoint_action).collect();
    let pref = n as f64 / (2.0 * PI);
    let blocks = n * n;
    let dim = 4 * blocks;
    let mut dirac = ComplexMatrix::zeros(dim);
    for a in 0..blocks {
        for b in 0..blocks {
            for (ad, gamma) in ads.iter().zip(&gammas) {
                let c = ad[(a, b)];
                if c == ZERO {
                    continue;
                }
                let c = c * pref;
                for s in 0..4 {
                    for t in 0..4 {
                        dirac[(4 * a + s, 4 * b + t)] += c * gamma[(s, t)];
                    }
                }
            }
        }
    }
    Ok(FuzzyTorusTriple { n, dirac, clock: u, shift: v, gammas, generators })
}

/// Which reading of the finite-n closed-form spectrum to evaluate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClosedFormConvention {
    /// The literal form:
    /// `±(−S ± √(S² − T²))^{1/2}` with `[x]_n = sin(2πx/n)/sin(2π/n)`,
    /// no prefactor, `m, k ∈ {0..n-1}`.
    Literal,
    /// The reading that reproduces `eigh(D_n)`:
    /// `±(n/2π)·√2·sin(π/n)·(S ± √(S² − 4T²))^{1/2}` with brackets at the
    /// doubled period, `{x}_n = sin(πx/n)/sin(π/n)`, and `m, k ∈ {0..n-1}`.
    Resolved,
}

/// Convention adopted after matching the eigensolver on n = 3..=8 (sorted
/// ℓ∞ distance below 1e-13). Relative to the literal form it flips the
/// sign in front of `S`, replaces `T²` by `4T²` under the inner root, halves
/// the bracket frequency and restores the `n/2π` scale of `D_n`.
pub const RESOLVED_CONVENTION: ClosedFormConvention = ClosedFormConvention::Resolved;

impl ClosedFormConvention {
    pub fn describe(self) -> &'static str {
        match self {
            Self::Literal => {
                "literal: ±(−S ± √(S²−T²))^½, [x]_n = sin(2πx/n)/sin(2π/n), m,k ∈ 0..n−1, no prefactor"
            }
            Self::Resolved => {
                "resolved: ±(n/2π)·√2·sin(π/n)·(S ± √(S²−4T²))^½, {x}_n = sin(πx/n)/sin(π/n), \
                 m,k ∈ 0..n−1; deviations from literal: +S instead of −S, 4T² instead of T², \
                 bracket period doubled, n/2π prefactor restored"
            }
        }
    }
}

/// `[x]_n = sin(2πx/n) / sin(2π/n)`.
pub fn q_bracket(x: f64, n: usize) -> f64 {
    let n = n as f64;
    (2.0 * PI * x / n).sin() / (2.0 * PI / n).sin()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClosedFormSpectrum {
    pub n: usize,
    pub convention: ClosedFormConvention,
    /// Real values, ascending, with multiplicity.
    pub values: Vec<f64>,
    /// `(m, k, inner sign)` branches dropped for a negative radicand; each
    /// removes a `±` pair.
    pub discarded_branches: usize,
}

pub fn fuzzy_spectrum_closed_form(n: usize) -> Result<ClosedFormSpectrum> {
    fuzzy_spectrum_closed_form_with(n, RESOLVED_CONVENTION)
}

pub fn fuzzy_spectrum_closed_form_with(
    n: usize,
    convention: ClosedFormConvention,
) -> Result<ClosedFormSpectrum> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("closed form needs n >= 2, got {n}")));
    }
    let (bracket_n, scale2) = match convention {
        ClosedFormConvention::Literal => {
            if (2.0 * PI / n as f64).sin().abs() < 1e-12 {
                return Err(Error::InvalidArgument(format!(
                    "literal bracket [x]_{n} divides by sin(2π/{n}) = 0"
                )));
            }
            (n, 1.0)
        }
        ClosedFormConvention::Resolved => {
            let pref = n as f64 / (2.0 * PI) * (PI / n as f64).sin();
            (2 * n, 2.0 * pref * pref)
        }
    };
    let b = |x: f64| q_bracket(x, bracket_n);
    let b_half = b(0.5);
    let mut values = Vec::with_capacity(4 * n * n);
    let mut discarded = 0;
    let push = |r: f64, values: &mut Vec<f64>, discarded: &mut usize, scale: f64| {
        if r < -1e-12 * scale.max(1.0) {
            *discarded += 1;
        } else {
            let l = (scale2 * r.max(0.0)).sqrt();
            values.push(l);
            values.push(-l);
        }
    };
    for m in 0..n {
        let m = m as f64;
        for k in 0..n {
            let k = k as f64;
            let s = b(1.0 - m).powi(2) + b(m).powi(2) + b(1.0 + k).powi(2) + b(k).powi(2);
            let t = b(0.5 - m).powi(2) + b(0.5 + k).powi(2) - 2.0 * b_half * b_half;
            match convention {
                ClosedFormConvention::Literal => {
                    let disc = s * s - t * t;
                    if disc < -1e-12 * (s * s).max(1.0) {
                        discarded += 2;
                        continue;
                    }
                    let root = disc.max(0.0).sqrt();
                    push(-s + root, &mut values, &mut discarded, s);
                    push(-s - root, &mut values, &mut discarded, s);
                }
                ClosedFormConvention::Resolved => {
                    let mut disc = s * s - 4.0 * t * t;
                    if disc < -1e-12 * (s * s).max(1.0) {
                        discarded += 2;
                        continue;
                    }
                    // At a double root the discriminant is pure rounding
                    // noise, and its square root would split the pair by √ε.
                    if disc.abs() <= 16.0 * f64::EPSILON * s * s {
                        disc = 0.0;
                    }
                    let root = disc.max(0.0).sqrt();
                    let large = s + root;
                    // S − √(S² − 4T²) rationalised, exact when T = 0.
                    let small = if large > 0.0 { 4.0 * t * t / large } else { 0.0 };
                    push(large, &mut values, &mut discarded, s);
                    push(small, &mut values, &mut discarded, s);
                }
            }
        }
    }
    values.sort_by(f64::total_cmp);
    Ok(ClosedFormSpectrum { n, convention, values, discarded_branches: discarded })
}

/// Closed-form spectrum of the limit operator on the torus.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LimitSpectrum {
    pub index_max: usize,
    /// Distinct values, ascending.
    pub values: Vec<f64>,
    /// Number of `(m, k, ±, ±)` tuples producing each value.
    pub generator_counts: Vec<usize>,
}

impl LimitSpectrum {
    pub fn count_of(&self, value: f64, tol: f64) -> usize {
        self.values
            .iter()
            .zip(&self.generator_counts)
            .filter(|(v, _)| (*v - value).abs() <= tol)
            .map(|(_, c)| *c)
            .sum()
    }
}

/// `±√(m² + k + k² + 1 − m ± √(2m² − 2m + 2k + 2k² + 1))` over
/// `m, k ∈ {0..=index_max}`.
///
/// With `s = √(2m² − 2m + 2k² + 2k + 1)` the outer radicand is `(s ± 1)²/2`,
/// so every branch is real and the values are `±(s ± 1)/√2`. Evaluating the
/// factored form keeps the zero branch exact.
pub fn limit_spectrum(index_max: usize) -> LimitSpectrum {
    let mut raw = Vec::with_capacity(4 * (index_max + 1).pow(2));
    for m in 0..=index_max as i64 {
        for k in 0..=index_max as i64 {
            raw.extend(limit_values(m, k));
        }
    }
    collect_limit(index_max, raw)
}

/// Same formula over `m, k ∈ {−index_max..=index_max}`. Because `m² − m` and
/// `k² + k` are symmetric under `m ↦ 1 − m` and `k ↦ −1 − k`, this yields the
/// same value set with larger generator counts.
pub fn limit_spectrum_integer_range(index_max: usize) -> LimitSpectrum {
    let r = index_max as i64;
    let mut raw = Vec::new();
    for m in -r..=r {
        for k in -r..=r {
            raw.extend(limit_values(m, k));
        }
    }
    collect_limit(index_max, raw)
}

fn limit_values(m: i64, k: i64) -> [f64; 4] {
    let s2 = 2 * m * m - 2 * m + 2 * k * k + 2 * k + 1;
    let s = (s2 as f64).sqrt();
    let hi = (s + 1.0) / std::f64::consts::SQRT_2;
    let lo = (s - 1.0) / std::f64::consts::SQRT_2;
    [hi, -hi, lo, -lo]
}

fn collect_limit(index_max: usize, mut raw: Vec<f64>) -> LimitSpectrum {
    for v in raw.iter_mut() {
        if *v == 0.0 {
            *v = 0.0;
        }
    }
    raw.sort_by(f64::total_cmp);
    let mut values: Vec<f64> = Vec::new();
    let mut counts: Vec<usize> = Vec::new();
    for v in raw {
        match values.last() {
            Some(&last) if last == v => *counts.last_mut().unwrap() += 1,
            _ => {
                values.push(v);
                counts.push(1);
            }
        }
    }
    LimitSpectrum { index_max, values, generator_counts: counts }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{commutator, eigvalsh};
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn clock_small_cases() {
        assert_eq!(clock(1).unwrap(), ComplexMatrix::identity(1));
        let u2 = clock(2).unwrap();
        assert_abs_diff_eq!(u2[(0, 0)].re, 1.0);
        assert!((u2[(1, 1)] - c(-1.0, 0.0)).norm() < 1e-15);
        let u4 = clock(4).unwrap();
        let expected = [c(1.0, 0.0), c(0.0, 1.0), c(-1.0, 0.0), c(0.0, -1.0)];
        for (k, e) in expected.iter().enumerate() {
            assert!((u4[(k, k)] - e).norm() < 1e-15);
        }
        assert!(clock(0).is_err());
    }

    #[test]
    fn shift_small_cases() {
        assert_eq!(shift(1).unwrap(), ComplexMatrix::identity(1));
        let v2 = shift(2).unwrap();
        assert_eq!(v2, ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]).unwrap());
        assert!(shift(0).is_err());
    }

    #[test]
    fn clock_shift_commutation_n3() {
        let (u, v) = (clock(3).unwrap(), shift(3).unwrap());
        let w = Complex64::from_polar(1.0, 2.0 * PI / 3.0);
        let defect = &(&u * &v) - &(&v * &u).scale(w);
        assert!(defect.max_abs() < 1e-15);
    }

    #[test]
    fn gamma_clifford_relations() {
        let g = gamma_matrices();
        let id = ComplexMatrix::identity(4);
        for a in 0..4 {
            assert!(g[a].is_hermitian());
            for b in 0..4 {
                let anti = &(&g[a] * &g[b]) + &(&g[b] * &g[a]);
                let expected = if a == b { id.scale_real(2.0) } else { ComplexMatrix::zeros(4) };
                assert_eq!(anti.max_abs_diff(&expected), 0.0);
            }
        }
        let g5 = chirality_gamma();
        for ga in &g {
            let anti = &(&g5 * ga) + &(ga * &g5);
            assert_eq!(anti.max_abs(), 0.0);
        }
    }

    #[test]
    fn adjoint_action_matches_commutator() {
        let n = 3;
        let x = &clock(n).unwrap() + &shift(n).unwrap();
        let a = ComplexMatrix::from_fn(n, |i, j| c(i as f64 + 0.5, j as f64 - 1.0));
        let mut vec_a = vec![ZERO; n * n];
        for r in 0..n {
            for col in 0..n {
                vec_a[col * n + r] = a[(r, col)];
            }
        }
        let lhs = adjoint_action(&x).mul_vec(&vec_a);
        let comm = commutator(&x, &a).unwrap();
        for r in 0..n {
            for col in 0..n {
                assert!((lhs[col * n + r] - comm[(r, col)]).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn dirac_n1_is_zero() {
        let t = dirac_fuzzy(1).unwrap();
        assert_eq!(t.dirac, ComplexMatrix::zeros(4));
        assert!(dirac_fuzzy(0).is_err());
    }

    #[test]
    fn dirac_traceless_hermitian_chiral() {
        for n in 2..=4 {
            let t = dirac_fuzzy(n).unwrap();
            assert_eq!(t.dirac.dim(), 4 * n * n);
            assert!(t.dirac.trace().norm() < 1e-12);
            assert!(t.dirac.hermitian_deviation() < 1e-12);
            assert!(t.chirality_defect() < 1e-12);
        }
    }

    #[test]
    fn dirac_n2_spectrum_fixture() {
        // 16x16 spectrum: ±(2/π)·√2 with multiplicity 4 each, and 0 eight times.
        let ev = eigvalsh(&dirac_fuzzy(2).unwrap().dirac).unwrap();
        let top = 2.0 * std::f64::consts::SQRT_2 / PI;
        let mut expected = vec![-top; 4];
        expected.extend(vec![0.0; 8]);
        expected.extend(vec![top; 4]);
        for (a, b) in ev.iter().zip(&expected) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn brackets() {
        for n in 3..10 {
            assert_abs_diff_eq!(q_bracket(1.0, n), 1.0, epsilon = 1e-15);
            assert_eq!(q_bracket(0.0, n), 0.0);
        }
    }

    #[test]
    fn closed_form_rejects_small_n() {
        assert!(fuzzy_spectrum_closed_form(1).is_err());
        assert!(fuzzy_spectrum_closed_form_with(2, ClosedFormConvention::Literal).is_err());
        assert_eq!(fuzzy_spectrum_closed_form(2).unwrap().values.len(), 16);
    }

    #[test]
    fn literal_convention_loses_branches() {
        let literal = fuzzy_spectrum_closed_form_with(5, ClosedFormConvention::Literal).unwrap();
        assert!(literal.discarded_branches > 0);
        assert_eq!(literal.values.len() + 2 * literal.discarded_branches, 4 * 25);
    }

    #[test]
    fn resolved_matches_eigensolver_small() {
        for n in 2..=8 {
            let cf = fuzzy_spectrum_closed_form(n).unwrap();
            assert_eq!(cf.discarded_branches, 0);
            let ev = eigvalsh(&dirac_fuzzy(n).unwrap().dirac).unwrap();
            let worst = ev.iter().zip(&cf.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            assert!(worst < 1e-12, "n={n}: {worst}");
        }
    }

    #[test]
    fn limit_spectrum_origin_branch() {
        let l = limit_spectrum(0);
        let s2 = std::f64::consts::SQRT_2;
        assert_eq!(l.values.len(), 3);
        assert_abs_diff_eq!(l.values[0], -s2, epsilon = 1e-15);
        assert_eq!(l.values[1], 0.0);
        assert_abs_diff_eq!(l.values[2], s2, epsilon = 1e-15);
        assert_eq!(l.generator_counts, vec![1, 2, 1]);
        for k in 0..5 {
            assert!(limit_spectrum(k).values.contains(&0.0));
        }
    }

    #[test]
    fn limit_spectrum_symmetric_and_stable() {
        let small = limit_spectrum(3);
        let big = limit_spectrum(6);
        for (v, c) in small.values.iter().zip(&small.generator_counts) {
            assert!(small.values.contains(&-v));
            let pos = big.values.iter().position(|w| w == v).expect("value kept");
            assert!(big.generator_counts[pos] >= *c);
        }
        let z = limit_spectrum_integer_range(2);
        assert!(z.count_of(0.0, 0.0) > limit_spectrum(2).count_of(0.0, 0.0));
    }
}
