use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};

/// Scalar function applied to a self-adjoint operator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FunctionKind {
    /// `exp(−x²/width²)`.
    Gaussian { width: f64 },
    /// Smooth bump equal to 1 at `center`, supported in `(center−radius, center+radius)`.
    Bump { center: f64, radius: f64 },
    /// `1/(x − λ)` for nonreal `λ`.
    Resolvent { lambda: Complex64 },
    /// Piecewise-linear through `(x, f(x))` samples, constant beyond the ends.
    Tabulated { samples: Vec<(f64, f64)> },
    /// `Σ c_k exp(i ω_k x)`, a finite almost-periodic function.
    Trigonometric { terms: Vec<(f64, Complex64)> },
}

/// `f̂` with `f(t) = ∫ f̂(x) exp(itx) dx`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FourierTransform {
    /// `(w/(2√π)) exp(−w²x²/4)`.
    Gaussian { width: f64 },
    /// `i exp(−iλx)` on `x ≤ 0` for `Im λ > 0`, `−i exp(−iλx)` on `x ≥ 0` for `Im λ < 0`.
    Resolvent { lambda: Complex64 },
    /// Piecewise-linear samples of `f̂`, with `|f̂(x)| ≤ c/(1+x²)` assumed outside the table.
    Tabulated { samples: Vec<(f64, Complex64)>, envelope: f64 },
    /// Point masses: `f̂ = Σ c_k δ_{ω_k}`.
    Atomic { terms: Vec<(f64, Complex64)> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralFunction {
    pub kind: FunctionKind,
    pub fourier: Option<FourierTransform>,
}

impl SpectralFunction {
    pub fn gaussian(width: f64) -> Result<Self> {
        positive("gaussian width", width)?;
        Ok(Self { kind: FunctionKind::Gaussian { width }, fourier: Some(FourierTransform::Gaussian { width }) })
    }

    pub fn bump(center: f64, radius: f64) -> Result<Self> {
        positive("bump radius", radius)?;
        if !center.is_finite() {
            return Err(Error::InvalidArgument("bump center must be finite".into()));
        }
        Ok(Self { kind: FunctionKind::Bump { center, radius }, fourier: None })
    }

    pub fn resolvent(lambda: Complex64) -> Result<Self> {
        if lambda.im == 0.0 || !lambda.is_finite() {
            return Err(Error::InvalidArgument(format!("resolvent needs a finite nonreal point, got {lambda}")));
        }
        Ok(Self { kind: FunctionKind::Resolvent { lambda }, fourier: Some(FourierTransform::Resolvent { lambda }) })
    }

    pub fn tabulated(mut samples: Vec<(f64, f64)>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Empty("function samples"));
        }
        if samples.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
            return Err(Error::InvalidArgument("function samples must be finite".into()));
        }
        samples.sort_by(|a, b| a.0.total_cmp(&b.0));
        Ok(Self { kind: FunctionKind::Tabulated { samples }, fourier: None })
    }

    pub fn trigonometric(terms: Vec<(f64, Complex64)>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::Empty("trigonometric terms"));
        }
        Ok(Self {
            kind: FunctionKind::Trigonometric { terms: terms.clone() },
            fourier: Some(FourierTransform::Atomic { terms }),
        })
    }

    /// Attaches a Fourier transform descriptor.
    pub fn with_fourier(mut self, fourier: FourierTransform) -> Result<Self> {
        if let FourierTransform::Tabulated { samples, envelope } = &fourier {
            if samples.len() < 2 {
                return Err(Error::InvalidArgument("tabulated transform needs two samples".into()));
            }
            if samples.windows(2).any(|w| w[1].0 <= w[0].0) {
                return Err(Error::InvalidArgument("transform sample abscissae must increase".into()));
            }
            if !(*envelope >= 0.0) {
                return Err(Error::InvalidArgument("envelope constant must be nonnegative".into()));
            }
        }
        self.fourier = Some(fourier);
        Ok(self)
    }

    pub fn is_real(&self) -> bool {
        match &self.kind {
            FunctionKind::Resolvent { .. } => false,
            FunctionKind::Trigonometric { terms } => {
                // Real iff terms pair up as conjugates at opposite frequencies.
                let at = |w: f64| -> Complex64 { terms.iter().filter(|(v, _)| *v == w).map(|(_, c)| *c).sum() };
                terms.iter().all(|(w, _)| {
                    let own = at(*w);
                    (at(-*w) - own.conj()).norm() <= 1e-14 * (1.0 + own.norm())
                })
            }
            _ => true,
        }
    }

    pub fn eval(&self, x: f64) -> Complex64 {
        match &self.kind {
            FunctionKind::Gaussian { width } => Complex64::from((-(x / width).powi(2)).exp()),
            FunctionKind::Bump { center, radius } => {
                let u = (x - center) / radius;
                if u.abs() < 1.0 {
                    Complex64::from((1.0 - 1.0 / (1.0 - u * u)).exp())
                } else {
                    Complex64::from(0.0)
                }
            }
            FunctionKind::Resolvent { lambda } => 1.0 / (Complex64::from(x) - lambda),
            FunctionKind::Tabulated { samples } => Complex64::from(interpolate(samples, x)),
            FunctionKind::Trigonometric { terms } => {
                terms.iter().map(|(w, c)| c * Complex64::from_polar(1.0, w * x)).sum()
            }
        }
    }

    pub fn eval_real(&self, x: f64) -> f64 {
        self.eval(x).re
    }

    /// Largest deviation `|f(t) − ∫ f̂(x) exp(itx) dx|` over `probes`,
    /// with the integral computed to `eps`.
    pub fn inversion_defect(&self, probes: &[f64], eps: f64) -> Result<f64> {
        let ft = self.fourier.as_ref().ok_or(Error::MissingFourierTransform)?;
        let q = super::quadrature::integrate_channels(ft, probes, eps)?;
        Ok(probes
            .iter()
            .zip(&q.values)
            .map(|(&t, v)| (v - self.eval(t)).norm())
            .fold(0.0, f64::max))
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("{name} must be positive and finite, got {v}")))
    }
}

fn interpolate(samples: &[(f64, f64)], x: f64) -> f64 {
    let pos = samples.partition_point(|s| s.0 < x);
    if pos == 0 {
        return samples[0].1;
    }
    if pos == samples.len() {
        return samples[pos - 1].1;
    }
    let (x0, y0) = samples[pos - 1];
    let (x1, y1) = samples[pos];
    if x1 == x0 {
        return y1;
    }
    y0 + (y1 - y0) * (x - x0) / (x1 - x0)
}

impl FourierTransform {
    pub fn eval(&self, x: f64) -> Complex64 {
        match self {
            FourierTransform::Gaussian { width } => {
                Complex64::from(width / (2.0 * PI.sqrt()) * (-(width * x / 2.0).powi(2)).exp())
            }
            FourierTransform::Resolvent { lambda } => {
                let i = Complex64::i();
                if lambda.im > 0.0 && x <= 0.0 {
                    i * (-i * lambda * x).exp()
                } else if lambda.im < 0.0 && x >= 0.0 {
                    -i * (-i * lambda * x).exp()
                } else {
                    Complex64::from(0.0)
                }
            }
            FourierTransform::Tabulated { samples, .. } => {
                let first = samples[0].0;
                let last = samples[samples.len() - 1].0;
                if x < first || x > last {
                    return Complex64::from(0.0);
                }
                let pos = samples.partition_point(|s| s.0 < x).max(1);
                let (x0, y0) = samples[pos - 1];
                let (x1, y1) = samples[pos];
                y0 + (y1 - y0) * ((x - x0) / (x1 - x0))
            }
            FourierTransform::Atomic { .. } => Complex64::from(0.0),
        }
    }

    /// `∫_{|x|>m} |f̂|`, or the envelope bound beyond the table.
    pub fn tail_integral(&self, m: f64) -> f64 {
        match self {
            FourierTransform::Gaussian { width } => erfc(width * m / 2.0),
            FourierTransform::Resolvent { lambda } => {
                let b = lambda.im.abs();
                (-b * m).exp() / b
            }
            FourierTransform::Tabulated { envelope, .. } => 2.0 * envelope * (PI / 2.0 - m.atan()),
            FourierTransform::Atomic { .. } => 0.0,
        }
    }

    /// Smallest cutoff with tail integral at most `budget`.
    pub(crate) fn cutoff(&self, budget: f64) -> Result<f64> {
        match self {
            FourierTransform::Gaussian { width } => {
                let mut hi = 1.0 / width;
                while self.tail_integral(hi) > budget {
                    hi *= 2.0;
                    if hi > 1e8 {
                        return Err(Error::TailBoundUnattainable(format!(
                            "gaussian tail above {budget:e} even at cutoff {hi:e}"
                        )));
                    }
                }
                let mut lo = 0.0;
                for _ in 0..100 {
                    let mid = 0.5 * (lo + hi);
                    if self.tail_integral(mid) > budget {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                Ok(hi)
            }
            FourierTransform::Resolvent { lambda } => {
                let b = lambda.im.abs();
                Ok((1.0 / (b * budget)).ln().max(0.0) / b)
            }
            FourierTransform::Tabulated { samples, .. } => {
                let m = samples[0].0.abs().min(samples[samples.len() - 1].0.abs());
                let tail = self.tail_integral(m);
                if tail > budget {
                    return Err(Error::TailBoundUnattainable(format!(
                        "envelope tail {tail:e} beyond the table edge {m} exceeds {budget:e}"
                    )));
                }
                Ok(m)
            }
            FourierTransform::Atomic { .. } => Ok(0.0),
        }
    }

    /// `sup_{x∈[a,b]} |f̂^{(k)}(x)|` for `k = 0..=4`, on a piece where `f̂` is smooth.
    pub(crate) fn derivative_bounds(&self, a: f64, b: f64) -> [f64; 5] {
        let mut out = [0.0; 5];
        match self {
            FourierTransform::Gaussian { width } => {
                // Cramér: |H_k(u) e^{-u²}| ≤ 1.086435 sqrt(2^k k!) e^{-u²/2}.
                let amp = width / (2.0 * PI.sqrt());
                let dist = if a <= 0.0 && b >= 0.0 { 0.0 } else { a.abs().min(b.abs()) };
                let u = width * dist / 2.0;
                let decay = (-u * u / 2.0).exp();
                let mut fact = 1.0;
                for (k, slot) in out.iter_mut().enumerate() {
                    if k > 0 {
                        fact *= k as f64;
                    }
                    *slot = amp
                        * (width / 2.0).powi(k as i32)
                        * 1.086435
                        * (2f64.powi(k as i32) * fact).sqrt()
                        * decay;
                }
            }
            FourierTransform::Resolvent { lambda } => {
                let dist = a.abs().min(b.abs());
                let envelope = (-lambda.im.abs() * dist).exp();
                for (k, slot) in out.iter_mut().enumerate() {
                    *slot = lambda.norm().powi(k as i32) * envelope;
                }
            }
            FourierTransform::Tabulated { .. } | FourierTransform::Atomic { .. } => {}
        }
        out
    }

    /// Sub-intervals of `[−m, m]` on which `f̂` is smooth.
    pub(crate) fn pieces(&self, m: f64) -> Vec<(f64, f64)> {
        match self {
            FourierTransform::Gaussian { .. } => vec![(-m, m)],
            FourierTransform::Resolvent { lambda } => {
                if lambda.im > 0.0 {
                    vec![(-m, 0.0)]
                } else {
                    vec![(0.0, m)]
                }
            }
            FourierTransform::Tabulated { .. } | FourierTransform::Atomic { .. } => vec![],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn bump_shape() {
        let f = SpectralFunction::bump(2.0, 0.5).unwrap();
        assert_eq!(f.eval_real(2.0), 1.0);
        assert_eq!(f.eval_real(2.5), 0.0);
        assert_eq!(f.eval_real(1.4), 0.0);
        assert!(f.eval_real(2.4) > 0.0);
    }

    #[test]
    fn constructors_reject_bad_parameters() {
        assert!(SpectralFunction::gaussian(0.0).is_err());
        assert!(SpectralFunction::bump(0.0, -1.0).is_err());
        assert!(SpectralFunction::resolvent(Complex64::new(1.0, 0.0)).is_err());
        assert!(SpectralFunction::tabulated(vec![]).is_err());
    }

    #[test]
    fn tabulated_interpolates_and_clamps() {
        let f = SpectralFunction::tabulated(vec![(1.0, 3.0), (0.0, 1.0)]).unwrap();
        assert_abs_diff_eq!(f.eval_real(0.25), 1.5);
        assert_eq!(f.eval_real(-4.0), 1.0);
        assert_eq!(f.eval_real(9.0), 3.0);
    }

    #[test]
    fn gaussian_tail_matches_direct_integral() {
        let ft = FourierTransform::Gaussian { width: 1.3 };
        // Midpoint rule on [m, 40] doubled.
        let m = 1.7;
        let h = 1e-4;
        let steps = ((40.0 - m) / h) as usize;
        let direct: f64 = (0..steps).map(|k| ft.eval(m + (k as f64 + 0.5) * h).re * h).sum::<f64>() * 2.0;
        assert_abs_diff_eq!(ft.tail_integral(m), direct, epsilon = 1e-9);
    }

    #[test]
    fn gaussian_derivative_bounds_dominate_finite_differences() {
        let ft = FourierTransform::Gaussian { width: 2.0 };
        let h = 1e-2;
        for &x in &[0.0, 0.3, 1.1, 2.5] {
            let b = ft.derivative_bounds(x, x);
            let f = |s: f64| ft.eval(s).re;
            let d2 = (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h);
            let d4 = (f(x + 2.0 * h) - 4.0 * f(x + h) + 6.0 * f(x) - 4.0 * f(x - h) + f(x - 2.0 * h)) / h.powi(4);
            assert!(f(x).abs() <= b[0]);
            assert!(d2.abs() <= b[2] * 1.01);
            assert!(d4.abs() <= b[4] * 1.01);
        }
    }

    #[test]
    fn real_trigonometric_detected() {
        let c = Complex64::new(0.5, 0.2);
        let f = SpectralFunction::trigonometric(vec![(1.0, c), (-1.0, c.conj())]).unwrap();
        assert!(f.is_real());
        assert_abs_diff_eq!(f.eval(0.3).im, 0.0, epsilon = 1e-15);
        let g = SpectralFunction::trigonometric(vec![(1.0, c)]).unwrap();
        assert!(!g.is_real());
    }

    #[test]
    fn tabulated_transform_needs_small_tail() {
        let ft = FourierTransform::Tabulated {
            samples: vec![(-1.0, Complex64::from(0.0)), (1.0, Complex64::from(0.0))],
            envelope: 1.0,
        };
        assert!(matches!(ft.cutoff(1e-3), Err(Error::TailBoundUnattainable(_))));
    }
}
