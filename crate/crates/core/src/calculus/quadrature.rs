//! Certified evaluation of `∫ f̂(x) exp(ixλ_j) dx` for a batch of real `λ_j`.
//!
//! The integral is cut at `±M` where the tail of `|f̂|` is at most `eps/2`,
//! then the remaining range is covered by Simpson panels whose a-priori
//! error `(b−a)⁵/2880 · sup|g⁽⁴⁾|` is charged against the other `eps/2`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::function::FourierTransform;
use crate::error::{Error, Result};

const MAX_PANELS: usize = 2_000_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureReport {
    pub values: Vec<Complex64>,
    pub cutoff: f64,
    /// Bound on the discarded tail `∫_{|x|>M} |f̂|`.
    pub tail_bound: f64,
    /// Bound on the quadrature error on `[−M, M]`.
    pub quadrature_bound: f64,
    pub panels: usize,
}

impl QuadratureReport {
    pub fn error_bound(&self) -> f64 {
        self.tail_bound + self.quadrature_bound
    }
}

/// Computes `c_j ≈ ∫ f̂(x) exp(ixλ_j) dx` with `max_j |c_j − f(λ_j)| ≤ eps`.
pub fn integrate_channels(ft: &FourierTransform, lambdas: &[f64], eps: f64) -> Result<QuadratureReport> {
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument(format!("eps must be positive, got {eps}")));
    }
    match ft {
        FourierTransform::Atomic { terms } => {
            let values = lambdas
                .iter()
                .map(|&l| terms.iter().map(|(w, c)| c * Complex64::from_polar(1.0, w * l)).sum())
                .collect();
            Ok(QuadratureReport { values, cutoff: 0.0, tail_bound: 0.0, quadrature_bound: 0.0, panels: 0 })
        }
        FourierTransform::Tabulated { samples, .. } => {
            let cutoff = ft.cutoff(eps / 2.0)?;
            let values = lambdas.iter().map(|&l| piecewise_linear_integral(samples, l)).collect();
            Ok(QuadratureReport {
                values,
                cutoff,
                tail_bound: ft.tail_integral(cutoff),
                quadrature_bound: 0.0,
                panels: samples.len() - 1,
            })
        }
        FourierTransform::Gaussian { .. } | FourierTransform::Resolvent { .. } => {
            let cutoff = ft.cutoff(eps / 2.0)?;
            let pieces = ft.pieces(cutoff);
            let total: f64 = pieces.iter().map(|(a, b)| b - a).sum();
            let mut values = vec![Complex64::from(0.0); lambdas.len()];
            let mut panels = 0;
            let mut quadrature_bound = 0.0;
            if total > 0.0 {
                let density = 0.5 * eps / total;
                let spread = lambdas.iter().fold(0.0f64, |m, l| m.max(l.abs()));
                for (a, b) in pieces {
                    let mut stack = vec![(a, b)];
                    while let Some((lo, hi)) = stack.pop() {
                        let bound = panel_bound(ft, lo, hi, spread);
                        if bound <= density * (hi - lo) {
                            simpson_panel(ft, lambdas, lo, hi, &mut values);
                            quadrature_bound += bound;
                            panels += 1;
                        } else {
                            if panels + stack.len() > MAX_PANELS {
                                return Err(Error::TailBoundUnattainable(format!(
                                    "quadrature needs more than {MAX_PANELS} panels for eps {eps:e}"
                                )));
                            }
                            let mid = 0.5 * (lo + hi);
                            stack.push((mid, hi));
                            stack.push((lo, mid));
                        }
                    }
                }
            }
            Ok(QuadratureReport { values, cutoff, tail_bound: ft.tail_integral(cutoff), quadrature_bound, panels })
        }
    }
}

/// Simpson error bound for `g(x) = f̂(x) e^{ixλ}` with `|λ| ≤ spread`.
fn panel_bound(ft: &FourierTransform, a: f64, b: f64, spread: f64) -> f64 {
    const BINOM: [f64; 5] = [1.0, 4.0, 6.0, 4.0, 1.0];
    let d = ft.derivative_bounds(a, b);
    let g4: f64 = (0..5).map(|k| BINOM[k] * spread.powi(4 - k as i32) * d[k]).sum();
    // Real and imaginary parts are bounded separately.
    std::f64::consts::SQRT_2 * (b - a).powi(5) / 2880.0 * g4
}

fn simpson_panel(ft: &FourierTransform, lambdas: &[f64], a: f64, b: f64, acc: &mut [Complex64]) {
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (ft.eval(a), ft.eval(m), ft.eval(b));
    let w = (b - a) / 6.0;
    for (out, &l) in acc.iter_mut().zip(lambdas) {
        let ga = fa * Complex64::from_polar(1.0, l * a);
        let gm = fm * Complex64::from_polar(1.0, l * m);
        let gb = fb * Complex64::from_polar(1.0, l * b);
        *out += w * (ga + 4.0 * gm + gb);
    }
}

/// Exact `∫ p(x) e^{ixλ} dx` for the piecewise-linear interpolant `p`.
fn piecewise_linear_integral(samples: &[(f64, Complex64)], lambda: f64) -> Complex64 {
    samples
        .windows(2)
        .map(|w| {
            let (x0, y0) = w[0];
            let (x1, y1) = w[1];
            let h = x1 - x0;
            let z = Complex64::new(0.0, lambda * h);
            let (p1, p2) = phi12(z);
            Complex64::from_polar(1.0, lambda * x0) * h * (y0 * p1 + (y1 - y0) * p2)
        })
        .sum()
}

/// `(∫₀¹ e^{zu} du, ∫₀¹ u e^{zu} du)`.
fn phi12(z: Complex64) -> (Complex64, Complex64) {
    if z.norm() < 1e-2 {
        let mut term = Complex64::from(1.0);
        let mut p1 = Complex64::from(0.0);
        let mut p2 = Complex64::from(0.0);
        for k in 0..10 {
            if k > 0 {
                term *= z / k as f64;
            }
            p1 += term / (k as f64 + 1.0);
            p2 += term / (k as f64 + 2.0);
        }
        (p1, p2)
    } else {
        let e = z.exp();
        ((e - 1.0) / z, (e * (z - 1.0) + 1.0) / (z * z))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn gaussian_inversion_within_eps() {
        let w = 1.0;
        let ft = FourierTransform::Gaussian { width: w };
        let lambdas = [-3.0, -1.0, 0.0, 0.4, 2.5];
        for eps in [1e-3, 1e-6, 1e-9] {
            let r = integrate_channels(&ft, &lambdas, eps).unwrap();
            assert!(r.error_bound() <= eps);
            for (v, &l) in r.values.iter().zip(&lambdas) {
                let exact = (-(l / w).powi(2)).exp();
                assert!((v - exact).norm() <= eps, "eps {eps} lambda {l}: {}", (v - exact).norm());
            }
        }
    }

    #[test]
    fn resolvent_inversion_both_half_planes() {
        for lambda in [Complex64::new(0.3, 0.8), Complex64::new(-1.0, -2.0)] {
            let ft = FourierTransform::Resolvent { lambda };
            let ts = [-2.0, 0.0, 1.5];
            let r = integrate_channels(&ft, &ts, 1e-6).unwrap();
            for (v, &t) in r.values.iter().zip(&ts) {
                let exact = 1.0 / (Complex64::from(t) - lambda);
                assert!((v - exact).norm() <= 1e-6);
            }
        }
    }

    #[test]
    fn atomic_is_exact() {
        let ft = FourierTransform::Atomic { terms: vec![(2.0, Complex64::new(0.0, 1.0))] };
        let r = integrate_channels(&ft, &[0.5], 1e-12).unwrap();
        assert_abs_diff_eq!((r.values[0] - Complex64::new(0.0, 1.0) * Complex64::from_polar(1.0, 1.0)).norm(), 0.0);
    }

    #[test]
    fn piecewise_linear_integral_matches_fine_midpoint() {
        let samples = vec![
            (-2.0, Complex64::new(0.0, 0.0)),
            (-0.5, Complex64::new(1.0, 0.5)),
            (1.0, Complex64::new(0.25, -0.5)),
            (3.0, Complex64::new(0.0, 0.0)),
        ];
        let ft = FourierTransform::Tabulated { samples: samples.clone(), envelope: 0.0 };
        for lambda in [0.0, 1e-4, 0.7, 5.0] {
            let exact = piecewise_linear_integral(&samples, lambda);
            let h = 1e-4;
            let n = (5.0 / h) as usize;
            let direct: Complex64 = (0..n)
                .map(|k| {
                    let x = -2.0 + (k as f64 + 0.5) * h;
                    ft.eval(x) * Complex64::from_polar(1.0, lambda * x) * h
                })
                .sum();
            assert!((exact - direct).norm() < 1e-7, "lambda {lambda}");
        }
    }

    #[test]
    fn rejects_nonpositive_eps() {
        assert!(integrate_channels(&FourierTransform::Gaussian { width: 1.0 }, &[0.0], 0.0).is_err());
    }
}
