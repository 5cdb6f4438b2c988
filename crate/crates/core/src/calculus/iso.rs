//! Grid checker for ε-iso-iso pairs of `[0, ∞)`.

use serde::{Deserialize, Serialize};

pub const ISO_ISO_DEFAULT_GRID: usize = 200;

/// Outcome of [`iso_iso_check`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IsoIsoReport {
    pub eps: f64,
    pub grid: usize,
    /// Largest `||s_j(x)+s_j(y)−z| − |x+y−s_k(z)||` over the grid.
    pub worst_value: f64,
    /// `(j, x, y, z)` realizing `worst_value`.
    pub worst_at: (usize, f64, f64, f64),
    pub definition_holds: bool,
    /// `max_j max_t |s_j(t) − t|` over the grid.
    pub max_identity_deviation: f64,
    /// Whether `max_identity_deviation < eps`.
    pub consequence_holds: bool,
    /// False only when the definition holds but the consequence does not.
    pub consistent: bool,
}

/// Samples `f` at `grid` evenly spaced points of `[0, 1/eps]`.
pub fn tabulate_on_grid(f: impl Fn(f64) -> f64, eps: f64, grid: usize) -> Vec<f64> {
    grid_points(eps, grid).into_iter().map(f).collect()
}

fn grid_points(eps: f64, grid: usize) -> Vec<f64> {
    let top = 1.0 / eps;
    match grid {
        0 => vec![],
        1 => vec![0.0],
        _ => (0..grid).map(|i| top * i as f64 / (grid - 1) as f64).collect(),
    }
}

/// Checks the ε-iso-iso inequality for tabulated maps over every grid triple.
///
/// `s1` and `s2` hold values at the points produced by [`tabulate_on_grid`]
/// with the same `eps`; their common length is the grid size.
pub fn iso_iso_check(s1: &[f64], s2: &[f64], eps: f64) -> IsoIsoReport {
    assert_eq!(s1.len(), s2.len(), "tabulated maps must share a grid");
    let grid = s1.len();
    let pts = grid_points(eps, grid);
    let maps = [s1, s2];
    let mut worst_value = 0.0;
    let mut worst_at = (1, 0.0, 0.0, 0.0);
    let mut zero_ok = true;
    for (j, m) in maps.iter().enumerate() {
        let k = 1 - j;
        if m.first().is_some_and(|&v| v != 0.0) {
            zero_ok = false;
        }
        for (ix, &x) in pts.iter().enumerate() {
            for (iy, &y) in pts.iter().enumerate() {
                let lhs = m[ix] + m[iy];
                let sum = x + y;
                for (iz, &z) in pts.iter().enumerate() {
                    let v = ((lhs - z).abs() - (sum - maps[k][iz]).abs()).abs();
                    if v > worst_value {
                        worst_value = v;
                        worst_at = (j + 1, x, y, z);
                    }
                }
            }
        }
    }
    let max_identity_deviation = maps
        .iter()
        .flat_map(|m| m.iter().zip(&pts).map(|(s, t)| (s - t).abs()))
        .fold(0.0, f64::max);
    let definition_holds = zero_ok && worst_value < eps;
    let consequence_holds = max_identity_deviation < eps;
    IsoIsoReport {
        eps,
        grid,
        worst_value,
        worst_at,
        definition_holds,
        max_identity_deviation,
        consequence_holds,
        consistent: !definition_holds || consequence_holds,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_pair_passes() {
        let eps = 0.25;
        let id = tabulate_on_grid(|t| t, eps, 40);
        let r = iso_iso_check(&id, &id, eps);
        assert!(r.definition_holds && r.consequence_holds && r.consistent);
        assert!(r.worst_value < 1e-12);
    }

    #[test]
    fn half_eps_shift_meets_consequence() {
        let eps = 0.2;
        let s1 = tabulate_on_grid(|t| if t == 0.0 { 0.0 } else { t + eps / 2.0 }, eps, 30);
        let id = tabulate_on_grid(|t| t, eps, 30);
        let r = iso_iso_check(&s1, &id, eps);
        assert!(r.max_identity_deviation <= eps / 2.0 + 1e-12);
        assert!(r.consequence_holds && r.consistent);
    }

    #[test]
    fn doubling_fails_at_large_t() {
        let eps = 0.1;
        let s1 = tabulate_on_grid(|t| 2.0 * t, eps, 50);
        let id = tabulate_on_grid(|t| t, eps, 50);
        let r = iso_iso_check(&s1, &id, eps);
        assert!(!r.definition_holds && !r.consequence_holds);
        assert!(r.worst_value > 1.0);
        let (_, x, y, _) = r.worst_at;
        assert!(x + y >= 10.0);
    }

    #[test]
    fn nonzero_origin_rejected() {
        let eps = 0.5;
        let s1 = tabulate_on_grid(|t| t + 0.01, eps, 5);
        let r = iso_iso_check(&s1, &s1, eps);
        assert!(!r.definition_holds);
    }
}
