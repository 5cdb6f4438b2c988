use std::collections::BTreeMap;
use std::sync::Mutex;
use std::time::{SystemTime, UNIX_EPOCH};

use super::bundle::*;
use super::cache::EigenCache;
use super::config::{parse_state, RunConfig};
use crate::calculus::{spectral_action_from_eigenvalues, SpectralCalculus};
use crate::error::{Error, Result};
use crate::matrix::{eigvalsh, operator_norm, HermitianEigenDecomposition};
use crate::metric::{mk_bruteforce_oracle, mk_distance_with, CommutatorMetric};
use crate::spectrum::{
    default_cluster_tol, hausdorff_distance, index_spectrum, indexed_from_eigenvalues, multiplicity_convergence,
    track_sequence, Cluster, IndexedSpectrum,
};
use crate::torus::{dirac_fuzzy, fuzzy_spectrum_closed_form, limit_spectrum, CONSTRUCTION_CONVENTION, RESOLVED_CONVENTION};

pub const MK_MAX_N: usize = 8;
pub const ORACLE_MAX_N: usize = 3;

const MULTIPLICITY_NOTE: &str = "limit multiplicities are generator counts of (m, k, ±, ±) tuples over \
     m, k ∈ 0..=limit_index_max; they are a stand-in, not certified eigenspace dimensions";

/// Executes verbs against one configuration, sharing eigendecompositions
/// through the optional on-disk cache.
pub struct Runner {
    config: RunConfig,
    cache: Option<EigenCache>,
    hits: Mutex<BTreeMap<usize, bool>>,
}

impl Runner {
    pub fn new(config: RunConfig) -> Result<Self> {
        config.validate()?;
        let cache = config.cache.then(|| EigenCache::from_env_or(config.output_dir.join("cache")));
        Ok(Self { config, cache, hits: Mutex::new(BTreeMap::new()) })
    }

    pub fn with_cache(config: RunConfig, cache: Option<EigenCache>) -> Result<Self> {
        config.validate()?;
        Ok(Self { config, cache, hits: Mutex::new(BTreeMap::new()) })
    }

    pub fn config(&self) -> &RunConfig {
        &self.config
    }

    fn record(&self, n: usize, hit: bool) {
        let mut hits = self.hits.lock().expect("cache log poisoned");
        // A later miss for the same n cannot happen without corruption; keep the first answer.
        hits.entry(n).or_insert(hit);
    }

    fn eigenvalues(&self, n: usize) -> Result<Vec<f64>> {
        let t = dirac_fuzzy(n)?;
        match &self.cache {
            Some(c) => {
                let (e, hit) = c.load_or_compute(n, &t.dirac)?;
                self.record(n, hit);
                Ok(e.eigenvalues)
            }
            None => eigvalsh(&t.dirac),
        }
    }

    fn calculus(&self, n: usize) -> Result<SpectralCalculus> {
        let t = dirac_fuzzy(n)?;
        match &self.cache {
            Some(c) => {
                let (e, hit): (HermitianEigenDecomposition, bool) = c.load_or_compute(n, &t.dirac)?;
                self.record(n, hit);
                SpectralCalculus::with_decomposition(t.dirac, e)
            }
            None => SpectralCalculus::new(t.dirac),
        }
    }

    /// Runs `f` for every configured `n` on scoped threads, results in list order.
    fn per_n<T: Send>(&self, f: impl Fn(usize) -> Result<T> + Sync) -> Result<Vec<T>> {
        let f = &f;
        std::thread::scope(|s| {
            let handles: Vec<_> = self.config.n_list.iter().map(|&n| s.spawn(move || f(n))).collect();
            handles.into_iter().map(|h| h.join().expect("worker panicked")).collect()
        })
    }

    pub fn bundle(&self, command: &str) -> ResultBundle {
        let cache =
            self.hits.lock().expect("cache log poisoned").iter().map(|(&n, &hit)| CacheStatus { n, hit }).collect();
        let timestamp = self.config.timestamp.then(|| {
            let secs = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
            format!("unix:{secs}")
        });
        ResultBundle {
            schema_version: SCHEMA_VERSION,
            metadata: Metadata {
                crate_version: env!("CARGO_PKG_VERSION").to_string(),
                command: command.to_string(),
                config: self.config.clone(),
                closed_form_convention: RESOLVED_CONVENTION,
                closed_form_note: RESOLVED_CONVENTION.describe().to_string(),
                construction_convention: CONSTRUCTION_CONVENTION.to_string(),
                seed: self.config.mk.seed,
                cache,
                timestamp,
            },
            spectrum: None,
            action: None,
            calculus: None,
            mk: None,
            verify: None,
        }
    }

    pub fn cmd_spectrum(&self) -> Result<SpectrumSection> {
        let radius = self.config.window_radius;
        let rows = self.per_n(|n| {
            let eigs = self.eigenvalues(n)?;
            let norm = eigs.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
            let tol = self.config.cluster_tol.unwrap_or_else(|| default_cluster_tol(norm));
            let spectrum = indexed_from_eigenvalues(&eigs, tol)?;
            let closed_form_deviation = if n >= 2 {
                let cf = fuzzy_spectrum_closed_form(n)?;
                Some(sorted_linf(&eigs, &cf.values))
            } else {
                None
            };
            let symmetric = eigs.iter().zip(eigs.iter().rev()).all(|(a, b)| (a + b).abs() <= tol);
            Ok(SpectrumRow { n, dim: eigs.len(), cluster_tol: tol, operator_norm: norm, spectrum, closed_form_deviation, symmetric })
        })?;

        let limit = limit_spectrum(self.config.limit_index_max);
        let limit_clusters: Vec<Cluster> = limit
            .values
            .iter()
            .zip(&limit.generator_counts)
            .filter(|(v, _)| v.abs() <= radius)
            .map(|(&value, &multiplicity)| Cluster { value, multiplicity })
            .collect();
        let limit_window: Vec<f64> = limit_clusters.iter().map(|c| c.value).collect();

        let mut hausdorff = Vec::with_capacity(rows.len());
        let mut windowed = Vec::with_capacity(rows.len());
        for row in &rows {
            let clusters: Vec<Cluster> =
                row.spectrum.clusters.iter().filter(|c| c.value.abs() <= radius).cloned().collect();
            if clusters.is_empty() {
                return Err(Error::Empty("windowed spectrum"));
            }
            let w = index_spectrum(&IndexedSpectrum::from_clusters(clusters, row.cluster_tol)?)?;
            hausdorff.push(HausdorffRow {
                n: row.n,
                radius,
                cluster_tol: row.cluster_tol,
                distance: hausdorff_distance(&w.values(), &limit_window)?,
            });
            windowed.push(w);
        }

        let (tracking, multiplicities) = if windowed.len() >= 2 && !limit_clusters.is_empty() {
            let tol = rows.iter().map(|r| r.cluster_tol).fold(0.0, f64::max);
            let limit_indexed = index_spectrum(&IndexedSpectrum::from_clusters(limit_clusters, tol)?)?;
            let report = track_sequence(&windowed, None, Some(&limit_indexed))?;
            let checks = multiplicity_convergence(&report, &limit_indexed);
            (Some(report), checks)
        } else {
            (None, Vec::new())
        };

        Ok(SpectrumSection {
            rows,
            limit_window,
            hausdorff,
            tracking,
            multiplicities,
            multiplicity_note: MULTIPLICITY_NOTE.to_string(),
        })
    }

    pub fn cmd_action(&self) -> Result<ActionSection> {
        let f = self.config.spectral_function()?;
        let per_n = self.per_n(|n| {
            let eigs = self.eigenvalues(n)?;
            self.config
                .scales
                .iter()
                .map(|&scale| Ok(ActionRow { n, scale, value: spectral_action_from_eigenvalues(&eigs, &f, scale)? }))
                .collect::<Result<Vec<_>>>()
        })?;
        let mut differences = Vec::new();
        for pair in per_n.windows(2) {
            for (a, b) in pair[0].iter().zip(&pair[1]) {
                differences.push(ActionDifference {
                    n_from: a.n,
                    n_to: b.n,
                    scale: a.scale,
                    difference: (b.value - a.value).abs(),
                });
            }
        }
        Ok(ActionSection { function: self.config.function.clone(), rows: per_n.into_iter().flatten().collect(), differences })
    }

    pub fn cmd_calculus(&self) -> Result<CalculusSection> {
        let f = self.config.spectral_function()?;
        if f.fourier.is_none() {
            return Err(Error::MissingFourierTransform);
        }
        let eps = self.config.eps;
        let rows = self.per_n(|n| {
            let calc = self.calculus(n)?;
            let direct = calc.apply_function_eig(&f)?;
            let fourier = calc.apply_function_fourier(&f, eps)?;
            let route_delta = operator_norm(&(&direct - &fourier.matrix));
            Ok(CalculusRow {
                n,
                eps,
                route_delta,
                certified_bound: fourier.report.error_bound(),
                cutoff: fourier.report.cutoff,
                panels: fourier.report.panels,
                within_eps: route_delta <= eps,
            })
        })?;
        Ok(CalculusSection { function: self.config.function.clone(), rows })
    }

    pub fn cmd_mk(&self) -> Result<MkSection> {
        if let Some(&n) = self.config.n_list.iter().find(|&&n| n > MK_MAX_N) {
            return Err(Error::InvalidArgument(format!("mk supports n ≤ {MK_MAX_N}, got {n}")));
        }
        let settings = &self.config.mk;
        let solver = settings.solver();
        let per_n = self.per_n(|n| {
            let metric = CommutatorMetric::from_triple(&dirac_fuzzy(n)?);
            let states = settings.states.iter().map(|s| parse_state(s, n)).collect::<Result<Vec<_>>>()?;
            let mut rows = Vec::new();
            for i in 0..states.len() {
                for j in i + 1..states.len() {
                    let r = mk_distance_with(&metric, &states[i], &states[j], &solver)?;
                    let oracle = if n <= ORACLE_MAX_N && !r.unbounded {
                        Some(mk_bruteforce_oracle(&metric, &states[i], &states[j], settings.oracle_samples, settings.seed)?)
                    } else {
                        None
                    };
                    rows.push(MkRow {
                        n,
                        phi: settings.states[i].clone(),
                        psi: settings.states[j].clone(),
                        lower_bound: (!r.unbounded).then_some(r.lower_bound),
                        estimate: r.estimate.is_finite().then_some(r.estimate),
                        unbounded: r.unbounded,
                        converged: r.converged,
                        iterations: r.iterations,
                        oracle,
                        witness: r.witness,
                    });
                }
            }
            Ok(rows)
        })?;
        Ok(MkSection { seed: settings.seed, rows: per_n.into_iter().flatten().collect() })
    }
}

/// Sorted ℓ∞ distance between equal-length multisets; infinite on a length mismatch.
pub fn sorted_linf(a: &[f64], b: &[f64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_config(dir: &std::path::Path) -> RunConfig {
        let mut c = RunConfig::default();
        c.n_list = vec![2, 3, 4];
        c.output_dir = dir.to_path_buf();
        c
    }

    #[test]
    fn spectrum_small_sizes() {
        let dir = tempfile::tempdir().unwrap();
        let r = Runner::with_cache(small_config(dir.path()), None).unwrap();
        let s = r.cmd_spectrum().unwrap();
        assert_eq!(s.rows.len(), 3);
        for row in &s.rows {
            assert!(row.symmetric);
            assert!(row.closed_form_deviation.unwrap() < 1e-10);
            assert_eq!(row.spectrum.total_multiplicity(), 4 * row.n * row.n);
        }
        assert!(s.tracking.is_some());
        assert_eq!(s.hausdorff.len(), 3);
    }

    #[test]
    fn cache_hits_recorded() {
        let dir = tempfile::tempdir().unwrap();
        let cache = EigenCache::new(dir.path().join("cache"));
        let r = Runner::with_cache(small_config(dir.path()), Some(cache.clone())).unwrap();
        r.cmd_action().unwrap();
        assert!(r.bundle("action").metadata.cache.iter().all(|c| !c.hit));
        let r = Runner::with_cache(small_config(dir.path()), Some(cache)).unwrap();
        r.cmd_action().unwrap();
        assert!(r.bundle("action").metadata.cache.iter().all(|c| c.hit));
    }

    #[test]
    fn action_differences_pair_consecutive_sizes() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = small_config(dir.path());
        c.scales = vec![1.0, 2.0];
        let a = Runner::with_cache(c, None).unwrap().cmd_action().unwrap();
        assert_eq!(a.rows.len(), 6);
        assert_eq!(a.differences.len(), 4);
        assert_eq!((a.differences[0].n_from, a.differences[0].n_to), (2, 3));
    }

    #[test]
    fn calculus_routes_agree() {
        let dir = tempfile::tempdir().unwrap();
        let c = small_config(dir.path());
        let s = Runner::with_cache(c, None).unwrap().cmd_calculus().unwrap();
        assert!(s.rows.iter().all(|r| r.within_eps && r.route_delta <= r.eps));
    }

    #[test]
    fn mk_rejects_large_n_and_reports_oracle() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = small_config(dir.path());
        c.n_list = vec![9];
        assert!(Runner::with_cache(c.clone(), None).unwrap().cmd_mk().is_err());
        c.n_list = vec![2];
        c.mk.oracle_samples = 512;
        let m = Runner::with_cache(c, None).unwrap().cmd_mk().unwrap();
        assert_eq!(m.rows.len(), 3);
        assert!(m.rows.iter().all(|r| r.oracle.is_some()));
    }

    #[test]
    fn bundle_round_trip_and_byte_stable() {
        let dir = tempfile::tempdir().unwrap();
        let run = || {
            let r = Runner::with_cache(small_config(dir.path()), None).unwrap();
            let mut b = r.bundle("action");
            b.action = Some(r.cmd_action().unwrap());
            b.spectrum = Some(r.cmd_spectrum().unwrap());
            b
        };
        let a = run();
        let json = a.to_json().unwrap();
        assert_eq!(ResultBundle::from_json(&json).unwrap(), a);
        assert_eq!(run().to_json().unwrap(), json);
    }
}
