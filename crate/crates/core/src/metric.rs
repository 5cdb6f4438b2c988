//! Lipschitz seminorm `Lip(a) = ‖[D, a]‖` and Monge-Kantorovich distances
//! between states of the matrix algebra.
//!
//! The distance is `sup{ |Tr((ρ_φ − ρ_ψ) a)| : Lip(a) ≤ 1 }`. It is computed
//! as `1 / min{ Lip(a) : ⟨Δρ, a⟩ = 1 }` over traceless Hermitian `a`, a
//! convex problem solved by projected subgradient descent.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{commutator, eigh, eigvalsh, kron, ComplexMatrix};
use crate::torus::FuzzyTorusTriple;

pub const NULL_TOL: f64 = 1e-8;

/// Positive semidefinite, unit-trace matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityState {
    rho: ComplexMatrix,
}

impl DensityState {
    pub fn new(rho: ComplexMatrix) -> Result<Self> {
        if !rho.is_hermitian() {
            return Err(Error::NotHermitian { deviation: rho.hermitian_deviation(), tol: rho.hermiticity_tol() });
        }
        let trace = rho.trace().re;
        if (trace - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidArgument(format!("state trace {trace} is not 1")));
        }
        let min = eigvalsh(&rho)?[0];
        if min < -1e-10 {
            return Err(Error::InvalidArgument(format!("state has negative eigenvalue {min:e}")));
        }
        Ok(Self { rho })
    }

    /// `|v⟩⟨v| / ‖v‖²`.
    pub fn vector_state(v: &[Complex64]) -> Result<Self> {
        let norm2: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        if !(norm2 > 0.0) {
            return Err(Error::InvalidArgument("vector state needs a nonzero vector".into()));
        }
        let rho = ComplexMatrix::from_fn(v.len(), |i, j| v[i] * v[j].conj() / norm2);
        Self::new(rho)
    }

    /// Vector state on the `k`-th basis vector of `C^n`.
    pub fn basis(n: usize, k: usize) -> Result<Self> {
        if k >= n {
            return Err(Error::InvalidArgument(format!("basis index {k} out of range for dimension {n}")));
        }
        let mut v = vec![Complex64::new(0.0, 0.0); n];
        v[k] = Complex64::new(1.0, 0.0);
        Self::vector_state(&v)
    }

    pub fn maximally_mixed(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Empty("state dimension"));
        }
        Self::new(ComplexMatrix::identity(n).scale_real(1.0 / n as f64))
    }

    pub fn rho(&self) -> &ComplexMatrix {
        &self.rho
    }

    pub fn dim(&self) -> usize {
        self.rho.dim()
    }

    /// `Tr(ρ a)`.
    pub fn expectation(&self, a: &ComplexMatrix) -> Complex64 {
        frob_inner_c(&self.rho, a)
    }
}

/// `Lip(a) = prefactor · ‖Σ_i [X_i, a] ⊗ γ_i‖_op`.
///
/// For the fuzzy torus the full commutator `[D, a ⊗ 1]` on `M_n ⊗ C⁴` is
/// `1_n ⊗` this operator, so the norms agree.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CommutatorMetric {
    pub prefactor: f64,
    pub generators: Vec<ComplexMatrix>,
    pub gammas: Vec<ComplexMatrix>,
}

impl CommutatorMetric {
    pub fn new(prefactor: f64, generators: Vec<ComplexMatrix>, gammas: Vec<ComplexMatrix>) -> Result<Self> {
        if generators.is_empty() || generators.len() != gammas.len() {
            return Err(Error::InvalidArgument("need one gamma per generator".into()));
        }
        let n = generators[0].dim();
        if let Some(g) = generators.iter().find(|g| g.dim() != n) {
            return Err(Error::DimensionMismatch { left: n, right: g.dim() });
        }
        let s = gammas[0].dim();
        if let Some(g) = gammas.iter().find(|g| g.dim() != s) {
            return Err(Error::DimensionMismatch { left: s, right: g.dim() });
        }
        Ok(Self { prefactor, generators, gammas })
    }

    pub fn from_triple(triple: &FuzzyTorusTriple) -> Self {
        Self {
            prefactor: triple.prefactor(),
            generators: triple.generators.to_vec(),
            gammas: triple.gammas.to_vec(),
        }
    }

    /// Same generators with the prefactor multiplied by `c`, i.e. `D ↦ c·D`.
    pub fn scaled(&self, c: f64) -> Self {
        Self { prefactor: self.prefactor * c, ..self.clone() }
    }

    pub fn algebra_dim(&self) -> usize {
        self.generators[0].dim()
    }

    fn commutator_operator(&self, a: &ComplexMatrix) -> ComplexMatrix {
        let mut iter = self.generators.iter().zip(&self.gammas).map(|(x, g)| {
            let c = commutator(x, a).expect("dimension checked");
            kron(&c, g)
        });
        let first = iter.next().expect("nonempty generators");
        iter.fold(first, |acc, m| &acc + &m).scale_real(self.prefactor)
    }

    fn check(&self, a: &ComplexMatrix) -> Result<()> {
        if a.dim() != self.algebra_dim() {
            return Err(Error::DimensionMismatch { left: self.algebra_dim(), right: a.dim() });
        }
        if !a.is_hermitian() {
            return Err(Error::NotHermitian { deviation: a.hermitian_deviation(), tol: a.hermiticity_tol() });
        }
        Ok(())
    }

    pub fn lip(&self, a: &ComplexMatrix) -> Result<f64> {
        self.check(a)?;
        Ok(self.lip_and_subgradient(a).0)
    }

    /// `Lip(a)` with a subgradient in the real inner product `Re Tr(G† δa)`,
    /// projected to traceless Hermitian matrices.
    pub fn lip_and_subgradient(&self, a: &ComplexMatrix) -> (f64, ComplexMatrix) {
        let c = self.commutator_operator(a);
        let gram = c.adjoint().try_mul(&c).expect("square");
        let gram = crate::matrix::hermitian_part(&gram);
        let n = self.algebra_dim();
        let s = self.gammas[0].dim();
        let e = match eigh(&gram) {
            Ok(e) => e,
            Err(_) => return (crate::matrix::operator_norm(&c), ComplexMatrix::zeros(n)),
        };
        let top = e.eigenvalues.len() - 1;
        let sigma = e.eigenvalues[top].max(0.0).sqrt();
        if sigma <= f64::MIN_POSITIVE {
            return (0.0, ComplexMatrix::zeros(n));
        }
        let v = e.eigenvector(top);
        let u: Vec<Complex64> = c.mul_vec(&v).iter().map(|z| z / sigma).collect();
        // d σ = Re u† C(δa) v = Re Σ δa_{rc} Q_{rc}.
        let mut q = ComplexMatrix::zeros(n);
        for (x, g) in self.generators.iter().zip(&self.gammas) {
            let k = ComplexMatrix::from_fn(n, |r, rp| {
                let mut acc = Complex64::new(0.0, 0.0);
                for si in 0..s {
                    for sj in 0..s {
                        acc += u[s * r + si].conj() * g[(si, sj)] * v[s * rp + sj];
                    }
                }
                acc
            });
            let xt = x.transpose();
            q = &q + &(&(&xt * &k) - &(&k * &xt));
        }
        let grad = (&q.conj() + &q.transpose()).scale_real(0.5 * self.prefactor);
        (sigma, traceless(&grad))
    }

    /// Traceless Hermitian directions `a` with `‖C(a)‖_F ≤ tol·‖a‖_F`.
    pub fn null_directions(&self, tol: f64) -> Result<Vec<ComplexMatrix>> {
        let basis = traceless_hermitian_basis(self.algebra_dim());
        let images: Vec<ComplexMatrix> = basis.iter().map(|b| self.commutator_operator(b)).collect();
        let m = basis.len();
        let gram = ComplexMatrix::from_fn(m, |i, j| Complex64::new(frob_inner(&images[i], &images[j]), 0.0));
        let e = eigh(&crate::matrix::hermitian_part(&gram))?;
        Ok(e.eigenvalues
            .iter()
            .enumerate()
            .filter(|(_, &l)| l.max(0.0).sqrt() <= tol)
            .map(|(k, _)| {
                let coeffs = e.eigenvector(k);
                combine(&basis, &coeffs.iter().map(|z| z.re).collect::<Vec<_>>())
            })
            .collect())
    }
}

/// Lip seminorm of `a` in the fuzzy-torus triple.
pub fn lip_seminorm(triple: &FuzzyTorusTriple, a: &ComplexMatrix) -> Result<f64> {
    CommutatorMetric::from_triple(triple).lip(a)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MkConfig {
    pub restarts: usize,
    pub max_iterations: usize,
    /// Initial step length relative to `1/‖Δρ‖_F`; steps decay as `1/√k`.
    pub step_scale: f64,
    pub seed: u64,
    pub null_tol: f64,
    /// Relative change in the best value over the last half of a run below
    /// which the run counts as converged.
    pub tol: f64,
}

impl Default for MkConfig {
    fn default() -> Self {
        Self { restarts: 8, max_iterations: 2000, step_scale: 0.5, seed: 0, null_tol: NULL_TOL, tol: 1e-4 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MkResult {
    /// `|φ(w) − ψ(w)|` for the returned witness, a certified lower bound.
    pub lower_bound: f64,
    pub estimate: f64,
    /// Traceless Hermitian with `Lip(w) ≤ 1`.
    pub witness: ComplexMatrix,
    pub iterations: usize,
    pub converged: bool,
    /// A Lip-null traceless direction separates the states; the distance is infinite.
    pub unbounded: bool,
}

pub fn mk_distance(
    triple: &FuzzyTorusTriple,
    phi: &DensityState,
    psi: &DensityState,
    config: &MkConfig,
) -> Result<MkResult> {
    mk_distance_with(&CommutatorMetric::from_triple(triple), phi, psi, config)
}

pub fn mk_distance_with(
    metric: &CommutatorMetric,
    phi: &DensityState,
    psi: &DensityState,
    config: &MkConfig,
) -> Result<MkResult> {
    let n = metric.algebra_dim();
    for s in [phi, psi] {
        if s.dim() != n {
            return Err(Error::DimensionMismatch { left: n, right: s.dim() });
        }
    }
    if config.restarts == 0 || config.max_iterations == 0 {
        return Err(Error::InvalidArgument("restarts and max_iterations must be positive".into()));
    }
    // Δρ and −Δρ give the same distance; solving for one fixed orientation
    // makes the result exactly symmetric in the two states.
    let raw = phi.rho() - psi.rho();
    let flip = leading_sign_negative(&raw);
    let delta = if flip { raw.scale_real(-1.0) } else { raw };
    let orient = |w: ComplexMatrix| if flip { w.scale_real(-1.0) } else { w };
    let dnorm2 = frob_inner(&delta, &delta);
    if dnorm2.sqrt() <= 1e-14 {
        return Ok(MkResult {
            lower_bound: 0.0,
            estimate: 0.0,
            witness: ComplexMatrix::zeros(n),
            iterations: 0,
            converged: true,
            unbounded: false,
        });
    }

    for v in metric.null_directions(config.null_tol)? {
        let overlap = frob_inner(&delta, &v);
        if overlap.abs() > config.null_tol {
            log::warn!("Lip-null direction separates the states; distance is infinite");
            let witness = orient(v.scale_real(overlap.signum()));
            return Ok(MkResult {
                lower_bound: f64::INFINITY,
                estimate: f64::INFINITY,
                witness,
                iterations: 0,
                converged: true,
                unbounded: true,
            });
        }
    }

    let base = delta.scale_real(1.0 / dnorm2);
    let radius = 1.0 / dnorm2.sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let dim_basis = traceless_hermitian_basis(n);

    let mut best_a = base.clone();
    let mut best_lip = f64::INFINITY;
    let mut iterations = 0;
    let mut converged = true;
    for restart in 0..config.restarts {
        let mut a = base.clone();
        if restart > 0 {
            let coeffs: Vec<f64> = (0..dim_basis.len()).map(|_| rng.sample(StandardNormal)).collect();
            let r = project_out(&combine(&dim_basis, &coeffs), &delta, dnorm2);
            let rn = frob_inner(&r, &r).sqrt();
            if rn > 0.0 {
                a = &a + &r.scale_real(radius / rn);
            }
        }
        let mut run_best = f64::INFINITY;
        let mut run_best_a = a.clone();
        let mut half_mark = f64::INFINITY;
        for k in 1..=config.max_iterations {
            let (lip, g) = metric.lip_and_subgradient(&a);
            iterations += 1;
            if lip < run_best {
                run_best = lip;
                run_best_a = a.clone();
            }
            if k == config.max_iterations / 2 {
                half_mark = run_best;
            }
            let p = project_out(&g, &delta, dnorm2);
            let pn = frob_inner(&p, &p).sqrt();
            if pn <= 1e-300 {
                break;
            }
            let step = config.step_scale * radius / (k as f64).sqrt();
            a = &a - &p.scale_real(step / pn);
        }
        if half_mark.is_finite() && (half_mark - run_best) > config.tol * run_best {
            converged = false;
        }
        if run_best < best_lip {
            best_lip = run_best;
            best_a = run_best_a;
        }
    }

    let raw_estimate = 1.0 / best_lip;
    let witness = hermitian_clean(&best_a);
    let mut lip = metric.lip(&witness)?;
    let mut witness = witness.scale_real(1.0 / lip);
    lip = metric.lip(&witness)?;
    if lip > 1.0 {
        witness = witness.scale_real(1.0 / lip);
    }
    let lower_bound = frob_inner(&delta, &witness).abs();
    Ok(MkResult {
        lower_bound,
        estimate: raw_estimate.max(lower_bound),
        witness: orient(witness),
        iterations,
        converged,
        unbounded: false,
    })
}

fn leading_sign_negative(m: &ComplexMatrix) -> bool {
    m.as_slice()
        .iter()
        .flat_map(|z| [z.re, z.im])
        .find(|x| *x != 0.0)
        .is_some_and(|x| x < 0.0)
}

/// Random-search lower bound for the distance, for algebras of size at most 3.
///
/// Samples are drawn in blocks of [`ORACLE_BLOCK`] from per-block seeds and
/// the best few of each block are refined by coordinate ascent, so raising
/// `samples` only adds blocks and never lowers the result.
pub fn mk_bruteforce_oracle(
    metric: &CommutatorMetric,
    phi: &DensityState,
    psi: &DensityState,
    samples: usize,
    seed: u64,
) -> Result<f64> {
    let n = metric.algebra_dim();
    if n > 3 {
        return Err(Error::InvalidArgument(format!("oracle limited to n ≤ 3, got {n}")));
    }
    let delta = phi.rho() - psi.rho();
    if frob_inner(&delta, &delta).sqrt() <= 1e-14 {
        return Ok(0.0);
    }
    let basis = traceless_hermitian_basis(n);
    let objective = |x: &[f64]| -> f64 {
        let a = combine(&basis, x);
        let lip = metric.lip(&a).unwrap_or(0.0);
        if lip <= 0.0 {
            0.0
        } else {
            frob_inner(&delta, &a).abs() / lip
        }
    };
    let blocks = samples.div_ceil(ORACLE_BLOCK).max(1);
    let mut best = 0.0f64;
    for b in 0..blocks {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (b as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let mut scored: Vec<(f64, Vec<f64>)> = (0..ORACLE_BLOCK)
            .map(|_| {
                let mut x: Vec<f64> = (0..basis.len()).map(|_| rng.sample(StandardNormal)).collect();
                let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
                x.iter_mut().for_each(|v| *v /= norm);
                (objective(&x), x)
            })
            .collect();
        scored.sort_by(|p, q| q.0.total_cmp(&p.0));
        for (value, x) in scored.into_iter().take(ORACLE_REFINE) {
            best = best.max(coordinate_ascent(&objective, x, value));
        }
    }
    Ok(best)
}

pub const ORACLE_BLOCK: usize = 256;
const ORACLE_REFINE: usize = 4;

fn coordinate_ascent(objective: &impl Fn(&[f64]) -> f64, mut x: Vec<f64>, mut value: f64) -> f64 {
    let mut h = 0.25;
    let mut passes = 0;
    while h > 1e-7 && passes < 5000 {
        passes += 1;
        let mut improved = false;
        for i in 0..x.len() {
            for sign in [1.0, -1.0] {
                let old = x[i];
                x[i] = old + sign * h;
                let v = objective(&x);
                if v > value * (1.0 + 1e-12) {
                    value = v;
                    improved = true;
                } else {
                    x[i] = old;
                }
            }
        }
        // The objective is scale invariant; keep the iterate on the unit sphere.
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            x.iter_mut().for_each(|v| *v /= norm);
        }
        if !improved {
            h *= 0.5;
        }
    }
    value
}

/// Orthonormal basis (Frobenius) of traceless Hermitian `n×n` matrices.
pub fn traceless_hermitian_basis(n: usize) -> Vec<ComplexMatrix> {
    let mut out = Vec::with_capacity(n * n - 1);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    for i in 0..n {
        for j in i + 1..n {
            let mut re = ComplexMatrix::zeros(n);
            re[(i, j)] = Complex64::new(s, 0.0);
            re[(j, i)] = Complex64::new(s, 0.0);
            out.push(re);
            let mut im = ComplexMatrix::zeros(n);
            im[(i, j)] = Complex64::new(0.0, -s);
            im[(j, i)] = Complex64::new(0.0, s);
            out.push(im);
        }
    }
    for k in 1..n {
        // Diagonal (1, …, 1, −k, 0, …) / sqrt(k(k+1)).
        let norm = ((k * (k + 1)) as f64).sqrt();
        let diag: Vec<f64> = (0..n)
            .map(|i| match i.cmp(&k) {
                std::cmp::Ordering::Less => 1.0 / norm,
                std::cmp::Ordering::Equal => -(k as f64) / norm,
                std::cmp::Ordering::Greater => 0.0,
            })
            .collect();
        out.push(ComplexMatrix::real_diagonal(&diag));
    }
    out
}

fn combine(basis: &[ComplexMatrix], coeffs: &[f64]) -> ComplexMatrix {
    let n = basis[0].dim();
    basis.iter().zip(coeffs).fold(ComplexMatrix::zeros(n), |acc, (b, &c)| &acc + &b.scale_real(c))
}

/// `Re Tr(a† b)`.
fn frob_inner(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| (x.conj() * y).re).sum()
}

/// `Tr(a b)`.
fn frob_inner_c(a: &ComplexMatrix, b: &ComplexMatrix) -> Complex64 {
    let n = a.dim();
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..n {
        for k in 0..n {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

fn traceless(m: &ComplexMatrix) -> ComplexMatrix {
    let n = m.dim();
    let shift = m.trace() / n as f64;
    m - &ComplexMatrix::identity(n).scale(shift)
}

fn hermitian_clean(m: &ComplexMatrix) -> ComplexMatrix {
    traceless(&crate::matrix::hermitian_part(m))
}

/// Removes the `Δρ` component so that `⟨Δρ, a⟩` stays fixed.
fn project_out(g: &ComplexMatrix, delta: &ComplexMatrix, dnorm2: f64) -> ComplexMatrix {
    let c = frob_inner(delta, g) / dnorm2;
    g - &delta.scale_real(c)
}
