//! Multiplicity clustering, integer indexing of spectra, Hausdorff distances
//! and eigenvalue tracking along a sequence of operators.
//!
//! Indexing follows one fixed scheme: clusters are numbered by an integer
//! interval containing 0, increasing with value, with index 0 on the
//! smallest nonnegative cluster. Tracking aligns spectra through this index
//! and nothing else.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default clustering tolerance `1e-6 · max(1, ‖D‖_op)`.
pub fn default_cluster_tol(operator_norm: f64) -> f64 {
    1e-6 * operator_norm.max(1.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cluster {
    pub value: f64,
    pub multiplicity: usize,
}

/// Clustered eigenvalues, optionally carrying the integer index.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IndexedSpectrum {
    pub clusters: Vec<Cluster>,
    /// Position of index 0 in `clusters`; `None` until indexed.
    pub index_offset: Option<usize>,
    pub cluster_tol: f64,
}

impl IndexedSpectrum {
    /// Builds an unindexed spectrum from given clusters, sorted by value.
    pub fn from_clusters(mut clusters: Vec<Cluster>, cluster_tol: f64) -> Result<Self> {
        if clusters.is_empty() {
            return Err(Error::Empty("cluster list"));
        }
        clusters.sort_by(|a, b| a.value.total_cmp(&b.value));
        Ok(Self { clusters, index_offset: None, cluster_tol })
    }

    pub fn values(&self) -> Vec<f64> {
        self.clusters.iter().map(|c| c.value).collect()
    }

    pub fn total_multiplicity(&self) -> usize {
        self.clusters.iter().map(|c| c.multiplicity).sum()
    }

    /// Each cluster value repeated by its multiplicity.
    pub fn flatten(&self) -> Vec<f64> {
        self.clusters
            .iter()
            .flat_map(|c| std::iter::repeat_n(c.value, c.multiplicity))
            .collect()
    }

    pub fn is_indexed(&self) -> bool {
        self.index_offset.is_some()
    }

    /// Inclusive index range, if indexed.
    pub fn index_range(&self) -> Option<(i64, i64)> {
        let off = self.index_offset? as i64;
        Some((-off, self.clusters.len() as i64 - 1 - off))
    }

    pub fn cluster(&self, index: i64) -> Option<&Cluster> {
        let pos = self.index_offset? as i64 + index;
        if pos < 0 {
            return None;
        }
        self.clusters.get(pos as usize)
    }

    pub fn value(&self, index: i64) -> Option<f64> {
        self.cluster(index).map(|c| c.value)
    }

    pub fn multiplicity(&self, index: i64) -> Option<usize> {
        self.cluster(index).map(|c| c.multiplicity)
    }

    /// Index of the cluster whose value lies within `tol` of `value`.
    pub fn index_of(&self, value: f64, tol: f64) -> Option<i64> {
        let off = self.index_offset? as i64;
        self.clusters
            .iter()
            .position(|c| (c.value - value).abs() <= tol)
            .map(|p| p as i64 - off)
    }
}

/// Greedy left-to-right merge: an eigenvalue joins the running cluster when
/// it lies within `tol` of the cluster mean. Cluster values are means.
pub fn cluster_multiplicities(eigenvalues: &[f64], tol: f64) -> Result<IndexedSpectrum> {
    if eigenvalues.is_empty() {
        return Err(Error::Empty("eigenvalue list"));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("cluster tolerance must be positive, got {tol}")));
    }
    if eigenvalues.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidArgument("eigenvalues must be ascending".into()));
    }
    let mut clusters = Vec::new();
    let mut sum = eigenvalues[0];
    let mut count = 1usize;
    for &x in &eigenvalues[1..] {
        let mean = sum / count as f64;
        if x - mean <= tol {
            sum += x;
            count += 1;
        } else {
            clusters.push(Cluster { value: mean, multiplicity: count });
            sum = x;
            count = 1;
        }
    }
    clusters.push(Cluster { value: sum / count as f64, multiplicity: count });
    Ok(IndexedSpectrum { clusters, index_offset: None, cluster_tol: tol })
}

/// Assigns index 0 to the smallest cluster with value `≥ −cluster_tol`.
///
/// The tolerance keeps a zero eigenvalue that the solver returned as
/// `-1e-16` at index 0.
pub fn index_spectrum(s: &IndexedSpectrum) -> Result<IndexedSpectrum> {
    let offset = s
        .clusters
        .iter()
        .position(|c| c.value >= -s.cluster_tol)
        .ok_or(Error::NoNonnegativeEigenvalue)?;
    Ok(IndexedSpectrum { clusters: s.clusters.clone(), index_offset: Some(offset), cluster_tol: s.cluster_tol })
}

/// Clusters then indexes an ascending eigenvalue list.
pub fn indexed_from_eigenvalues(eigenvalues: &[f64], tol: f64) -> Result<IndexedSpectrum> {
    index_spectrum(&cluster_multiplicities(eigenvalues, tol)?)
}

/// `max(sup_a inf_b |a − b|, sup_b inf_a |a − b|)`.
pub fn hausdorff_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Empty("point set"));
    }
    let mut sa = a.to_vec();
    let mut sb = b.to_vec();
    sa.sort_by(f64::total_cmp);
    sb.sort_by(f64::total_cmp);
    Ok(directed_hausdorff(&sa, &sb).max(directed_hausdorff(&sb, &sa)))
}

/// Distance from `x` to the nearest point of a sorted, nonempty set.
pub fn nearest_distance(sorted: &[f64], x: f64) -> f64 {
    let pos = sorted.partition_point(|&y| y < x);
    let mut best = f64::INFINITY;
    if pos < sorted.len() {
        best = best.min((sorted[pos] - x).abs());
    }
    if pos > 0 {
        best = best.min((x - sorted[pos - 1]).abs());
    }
    best
}

fn directed_hausdorff(from: &[f64], to_sorted: &[f64]) -> f64 {
    from.iter().map(|&x| nearest_distance(to_sorted, x)).fold(0.0, f64::max)
}

/// Cluster values with `|value| ≤ radius`.
pub fn windowed_spectrum(s: &IndexedSpectrum, radius: f64) -> Vec<f64> {
    s.clusters.iter().map(|c| c.value).filter(|v| v.abs() <= radius).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Trend {
    /// Deviations from the last value are all zero.
    Constant,
    /// Deviations strictly decrease along the sequence.
    Converging,
    NotMonotone,
}

fn classify(deviations: &[f64]) -> Trend {
    if deviations.iter().all(|&d| d == 0.0) {
        return Trend::Constant;
    }
    if deviations.windows(2).all(|w| w[1] < w[0]) {
        Trend::Converging
    } else {
        Trend::NotMonotone
    }
}

/// One index followed through the sequence.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IndexTrack {
    pub index: i64,
    pub values: Vec<f64>,
    pub multiplicities: Vec<usize>,
    /// Last value of the sequence, the limit candidate.
    pub limit_candidate: f64,
    /// `|λ_k − λ_last|` along the sequence.
    pub deviations: Vec<f64>,
    pub trend: Trend,
    /// `|λ_k − λ_∞|` when a limit spectrum was supplied.
    pub limit_deviations: Option<Vec<f64>>,
    pub limit_trend: Option<Trend>,
    /// `sup_k (λ_k^{j+1} − λ_k^j)` over the spectra where both exist.
    pub max_gap: Option<f64>,
    /// Supplied floor `δ_j` and whether every gap stayed at or above it.
    pub gap_floor: Option<f64>,
    pub gap_hypothesis_holds: Option<bool>,
}

/// Comparison of the direct alignment `λ_n^j ↔ λ_∞^j` against the shifted
/// one `λ_n^{j−1} ↔ λ_∞^j`, which is the alternative allowed when 0 is in
/// the limit spectrum.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BranchCheck {
    pub direct_residual: f64,
    pub shifted_residual: f64,
    pub shifted_fits_better: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrackingReport {
    /// Index range present in every spectrum.
    pub common_range: (i64, i64),
    pub tracks: Vec<IndexTrack>,
    pub branch_check: Option<BranchCheck>,
    pub warnings: Vec<String>,
}

impl TrackingReport {
    pub fn track(&self, index: i64) -> Option<&IndexTrack> {
        self.tracks.iter().find(|t| t.index == index)
    }
}

/// Aligns indexed spectra by index and reports per-index sequences.
///
/// `gap_floors` maps an index `j` to `δ_j`; the check is that
/// `λ^{j+1} − λ^j ≥ δ_j` in every spectrum where both indices exist. When `limit` is given the report
/// also carries deviations from the limit and the shifted-branch check.
pub fn track_sequence(
    spectra: &[IndexedSpectrum],
    gap_floors: Option<&BTreeMap<i64, f64>>,
    limit: Option<&IndexedSpectrum>,
) -> Result<TrackingReport> {
    if spectra.len() < 2 {
        return Err(Error::InvalidArgument("tracking needs at least two spectra".into()));
    }
    let mut ranges = Vec::with_capacity(spectra.len());
    for s in spectra {
        ranges.push(s.index_range().ok_or_else(|| {
            Error::InvalidArgument("spectra must be indexed before tracking".into())
        })?);
    }
    let lo = ranges.iter().map(|r| r.0).max().unwrap();
    let hi = ranges.iter().map(|r| r.1).min().unwrap();
    let mut warnings = Vec::new();
    for (k, r) in ranges.iter().enumerate() {
        if *r != (lo, hi) {
            warnings.push(format!(
                "spectrum {k}: indices {}..={} outside common range {lo}..={hi} not tracked",
                r.0, r.1
            ));
        }
    }
    if lo > hi {
        warnings.push("no common index range".into());
        return Ok(TrackingReport { common_range: (lo, hi), tracks: vec![], branch_check: None, warnings });
    }

    let mut tracks = Vec::new();
    for j in lo..=hi {
        let values: Vec<f64> = spectra.iter().map(|s| s.value(j).unwrap()).collect();
        let multiplicities: Vec<usize> = spectra.iter().map(|s| s.multiplicity(j).unwrap()).collect();
        let last = *values.last().unwrap();
        let deviations: Vec<f64> = values.iter().map(|v| (v - last).abs()).collect();
        let trend = classify(&deviations[..deviations.len() - 1]);

        let gaps: Vec<f64> =
            spectra.iter().filter_map(|s| Some(s.value(j + 1)? - s.value(j)?)).collect();
        let max_gap = gaps.iter().cloned().reduce(f64::max);
        let gap_floor = gap_floors.and_then(|g| g.get(&j).copied());
        let gap_hypothesis_holds = gap_floor.map(|d| gaps.iter().all(|&g| g >= d));

        let (limit_deviations, limit_trend) = match limit.and_then(|l| l.value(j)) {
            Some(target) => {
                let devs: Vec<f64> = values.iter().map(|v| (v - target).abs()).collect();
                let t = classify(&devs);
                (Some(devs), Some(t))
            }
            None => {
                if limit.is_some() {
                    warnings.push(format!("index {j} has no counterpart in the limit spectrum"));
                }
                (None, None)
            }
        };

        tracks.push(IndexTrack {
            index: j,
            values,
            multiplicities,
            limit_candidate: last,
            deviations,
            trend,
            limit_deviations,
            limit_trend,
            max_gap,
            gap_floor,
            gap_hypothesis_holds,
        });
    }

    let branch_check = limit.map(|l| {
        let last = spectra.last().unwrap();
        let mut direct = 0.0;
        let mut shifted = 0.0;
        for j in lo + 1..=hi {
            if let (Some(target), Some(a), Some(b)) = (l.value(j), last.value(j), last.value(j - 1)) {
                direct += (a - target).abs();
                shifted += (b - target).abs();
            }
        }
        BranchCheck { direct_residual: direct, shifted_residual: shifted, shifted_fits_better: shifted < direct }
    });

    Ok(TrackingReport { common_range: (lo, hi), tracks, branch_check, warnings })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MultiplicityVerdict {
    /// Eventually constant and equal to the limit multiplicity.
    Equal,
    /// At least the limit multiplicity, as the liminf bound requires.
    ConsistentWithLiminf,
    /// Eventual multiplicity below the limit multiplicity.
    Violated,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MultiplicityCheck {
    pub index: i64,
    pub eventual: usize,
    /// Length of the trailing run of equal multiplicities.
    pub constant_tail: usize,
    pub eventually_constant: bool,
    pub limit_multiplicity: usize,
    pub verdict: MultiplicityVerdict,
}

/// Compares each tracked multiplicity sequence with the limit multiplicity
/// at the same index.
///
/// A sequence counts as eventually constant when its last two entries agree
/// (or it has a single entry); the eventual value is the last entry.
pub fn multiplicity_convergence(report: &TrackingReport, limit: &IndexedSpectrum) -> Vec<MultiplicityCheck> {
    report
        .tracks
        .iter()
        .filter_map(|t| {
            let limit_multiplicity = limit.multiplicity(t.index)?;
            Some(check_multiplicities(t.index, &t.multiplicities, limit_multiplicity))
        })
        .collect()
}

pub fn check_multiplicities(index: i64, sequence: &[usize], limit_multiplicity: usize) -> MultiplicityCheck {
    let eventual = *sequence.last().expect("nonempty multiplicity sequence");
    let constant_tail = sequence.iter().rev().take_while(|&&m| m == eventual).count();
    let eventually_constant = sequence.len() == 1 || constant_tail >= 2;
    let verdict = if eventual < limit_multiplicity {
        MultiplicityVerdict::Violated
    } else if eventually_constant && eventual == limit_multiplicity {
        MultiplicityVerdict::Equal
    } else {
        MultiplicityVerdict::ConsistentWithLiminf
    };
    MultiplicityCheck { index, eventual, constant_tail, eventually_constant, limit_multiplicity, verdict }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn brute_hausdorff(a: &[f64], b: &[f64]) -> f64 {
        let dir = |x: &[f64], y: &[f64]| {
            x.iter()
                .map(|p| y.iter().map(|q| (p - q).abs()).fold(f64::INFINITY, f64::min))
                .fold(0.0, f64::max)
        };
        dir(a, b).max(dir(b, a))
    }

    fn spectrum_of(values: &[f64]) -> IndexedSpectrum {
        let clusters = values.iter().map(|&v| Cluster { value: v, multiplicity: 1 }).collect();
        IndexedSpectrum::from_clusters(clusters, 1e-9).unwrap()
    }

    #[test]
    fn cluster_examples() {
        let s = cluster_multiplicities(&[1.0, 1.0, 1.0], 1e-8).unwrap();
        assert_eq!(s.clusters, vec![Cluster { value: 1.0, multiplicity: 3 }]);

        let s = cluster_multiplicities(&[-1.0, 1.0], 0.5).unwrap();
        assert_eq!(s.clusters.len(), 2);

        let s = cluster_multiplicities(&[0.0, 1e-10, 2.0], 1e-8).unwrap();
        assert_eq!(s.clusters.len(), 2);
        assert_abs_diff_eq!(s.clusters[0].value, 5e-11, epsilon = 1e-20);
        assert_eq!(s.clusters[0].multiplicity, 2);
        assert_eq!(s.clusters[1], Cluster { value: 2.0, multiplicity: 1 });

        assert!(matches!(cluster_multiplicities(&[], 1e-8), Err(Error::Empty(_))));
        assert!(cluster_multiplicities(&[2.0, 1.0], 1e-8).is_err());
    }

    #[test]
    fn index_examples() {
        let s = index_spectrum(&spectrum_of(&[-2.0, 0.0, 3.0])).unwrap();
        assert_eq!(s.index_range(), Some((-1, 1)));
        assert_eq!(s.value(-1), Some(-2.0));
        assert_eq!(s.value(0), Some(0.0));
        assert_eq!(s.value(1), Some(3.0));

        let s = index_spectrum(&spectrum_of(&[5.0])).unwrap();
        assert_eq!(s.value(0), Some(5.0));

        assert!(matches!(
            index_spectrum(&spectrum_of(&[-1.0, -0.5])),
            Err(Error::NoNonnegativeEigenvalue)
        ));
    }

    #[test]
    fn index_tolerates_solver_noise_at_zero() {
        let s = indexed_from_eigenvalues(&[-1.0, -1e-16, 1e-16, 1.0], 1e-9).unwrap();
        assert_eq!(s.multiplicity(0), Some(2));
        assert_eq!(s.value(1), Some(1.0));
    }

    #[test]
    fn hausdorff_examples() {
        assert_eq!(hausdorff_distance(&[0.0, 1.0], &[1.0, 0.0]).unwrap(), 0.0);
        assert_eq!(hausdorff_distance(&[0.0], &[1.0]).unwrap(), 1.0);
        assert_eq!(hausdorff_distance(&[0.0, 2.0], &[1.0]).unwrap(), 1.0);
        assert!(hausdorff_distance(&[], &[1.0]).is_err());
    }

    #[test]
    fn window_examples() {
        assert_eq!(windowed_spectrum(&spectrum_of(&[-3.0, 0.0, 3.0]), 1.0), vec![0.0]);
        assert_eq!(windowed_spectrum(&spectrum_of(&[-3.0, 0.0, 3.0]), 10.0), vec![-3.0, 0.0, 3.0]);
        assert_eq!(windowed_spectrum(&spectrum_of(&[-2.0, -1.0, 1.0, 2.0]), 1.5), vec![-1.0, 1.0]);
    }

    #[test]
    fn tracking_identical_spectra() {
        let s = index_spectrum(&spectrum_of(&[-1.0, 0.0, 2.0])).unwrap();
        let report = track_sequence(&[s.clone(), s.clone(), s], None, None).unwrap();
        assert!(report.warnings.is_empty());
        for t in &report.tracks {
            assert!(t.deviations.iter().all(|&d| d == 0.0));
            assert_eq!(t.trend, Trend::Constant);
        }
    }

    #[test]
    fn tracking_synthetic_sequence() {
        let spectra: Vec<IndexedSpectrum> = (2..=10)
            .map(|n| index_spectrum(&spectrum_of(&[-1.0, 1.0 + 1.0 / n as f64])).unwrap())
            .collect();
        let report = track_sequence(&spectra, None, None).unwrap();
        let t = report.track(0).unwrap();
        assert_abs_diff_eq!(t.limit_candidate, 1.1, epsilon = 1e-15);
        assert_abs_diff_eq!(t.deviations[0], 0.4, epsilon = 1e-15);
        assert_eq!(t.trend, Trend::Converging);

        let limit = index_spectrum(&spectrum_of(&[-1.0, 1.0])).unwrap();
        let report = track_sequence(&spectra, None, Some(&limit)).unwrap();
        assert_eq!(report.track(0).unwrap().limit_trend, Some(Trend::Converging));
    }

    #[test]
    fn tracking_reports_partial_ranges_and_gaps() {
        let a = index_spectrum(&spectrum_of(&[-1.0, 0.0, 1.0, 2.0])).unwrap();
        let b = index_spectrum(&spectrum_of(&[-1.0, 0.0, 1.5])).unwrap();
        let bounds: BTreeMap<i64, f64> = [(0, 1.2), (-1, 0.5)].into_iter().collect();
        let report = track_sequence(&[a, b], Some(&bounds), None).unwrap();
        assert_eq!(report.common_range, (-1, 1));
        assert_eq!(report.warnings.len(), 1);
        let t0 = report.track(0).unwrap();
        assert_eq!(t0.max_gap, Some(1.5));
        assert_eq!(t0.gap_hypothesis_holds, Some(false));
        assert_eq!(report.track(-1).unwrap().gap_hypothesis_holds, Some(true));
        assert!(track_sequence(&[spectrum_of(&[1.0])], None, None).is_err());
    }

    #[test]
    fn shifted_branch_detected() {
        // A small negative eigenvalue tends to 0, so index −1 carries the limit's index 0.
        let limit = index_spectrum(&spectrum_of(&[-1.0, 0.0, 1.0, 2.0])).unwrap();
        let seq: Vec<IndexedSpectrum> = [0.1, 0.01]
            .iter()
            .map(|e| index_spectrum(&spectrum_of(&[-2.0 - e, -1.0 - e, -e, 1.0 + e, 2.0 + e])).unwrap())
            .collect();
        let report = track_sequence(&seq, None, Some(&limit)).unwrap();
        assert!(report.branch_check.unwrap().shifted_fits_better);

        let direct: Vec<IndexedSpectrum> = [0.1, 0.01]
            .iter()
            .map(|e| index_spectrum(&spectrum_of(&[-1.0 - e, *e, 1.0 + e, 2.0 + e])).unwrap())
            .collect();
        let report = track_sequence(&direct, None, Some(&limit)).unwrap();
        assert!(!report.branch_check.unwrap().shifted_fits_better);
    }

    #[test]
    fn multiplicity_verdicts() {
        assert_eq!(check_multiplicities(0, &[4, 4, 4], 4).verdict, MultiplicityVerdict::Equal);
        let c = check_multiplicities(0, &[2, 3, 4, 4, 4], 4);
        assert_eq!(c.verdict, MultiplicityVerdict::Equal);
        assert_eq!(c.constant_tail, 3);
        assert_eq!(check_multiplicities(0, &[4, 2, 2], 4).verdict, MultiplicityVerdict::Violated);
        assert_eq!(check_multiplicities(0, &[8, 8], 4).verdict, MultiplicityVerdict::ConsistentWithLiminf);
    }

    proptest! {
        #[test]
        fn hausdorff_matches_brute_force_and_is_symmetric(
            a in prop::collection::vec(-10.0f64..10.0, 1..20),
            b in prop::collection::vec(-10.0f64..10.0, 1..20),
            c in prop::collection::vec(-10.0f64..10.0, 1..20),
        ) {
            let ab = hausdorff_distance(&a, &b).unwrap();
            prop_assert_eq!(ab, brute_hausdorff(&a, &b));
            prop_assert_eq!(ab, hausdorff_distance(&b, &a).unwrap());
            let ac = hausdorff_distance(&a, &c).unwrap();
            let cb = hausdorff_distance(&c, &b).unwrap();
            prop_assert!(ab <= ac + cb + 1e-12);
        }

        #[test]
        fn cluster_flatten_round_trip(mut xs in prop::collection::vec(-5.0f64..5.0, 1..40)) {
            xs.sort_by(f64::total_cmp);
            let tol = 1e-3;
            let s = cluster_multiplicities(&xs, tol).unwrap();
            prop_assert_eq!(s.total_multiplicity(), xs.len());
            prop_assert!(s.clusters.windows(2).all(|w| w[1].value - w[0].value > tol));
            for (x, y) in s.flatten().iter().zip(&xs) {
                prop_assert!((x - y).abs() <= tol);
            }
        }

        #[test]
        fn indexing_is_idempotent(mut xs in prop::collection::vec(-5.0f64..5.0, 1..40)) {
            xs.push(0.5);
            xs.sort_by(f64::total_cmp);
            let s = cluster_multiplicities(&xs, 1e-6).unwrap();
            let once = index_spectrum(&s).unwrap();
            prop_assert_eq!(index_spectrum(&once).unwrap(), once);
        }
    }
}
