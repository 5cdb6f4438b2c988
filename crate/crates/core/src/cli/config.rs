use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::calculus::{FunctionKind, SpectralFunction};
use crate::error::{Error, Result};
use crate::metric::{DensityState, MkConfig};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub n_list: Vec<usize>,
    pub window_radius: f64,
    /// Clustering tolerance; unset means `1e-6 · max(1, ‖D_n‖)` per `n`.
    pub cluster_tol: Option<f64>,
    pub function: FunctionKind,
    pub scales: Vec<f64>,
    /// Certified accuracy for the Fourier route.
    pub eps: f64,
    /// Index range of the truncated limit spectrum.
    pub limit_index_max: usize,
    pub mk: MkSettings,
    pub output_dir: PathBuf,
    pub cache: bool,
    /// Record the wall-clock time in the bundle; off keeps bundles byte-stable.
    pub timestamp: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            n_list: vec![4, 8, 16],
            window_radius: 3.0,
            cluster_tol: None,
            function: FunctionKind::Gaussian { width: 1.0 },
            scales: vec![1.0],
            eps: 1e-3,
            limit_index_max: 12,
            mk: MkSettings::default(),
            output_dir: PathBuf::from("results"),
            cache: true,
            timestamp: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MkSettings {
    pub restarts: usize,
    pub max_iterations: usize,
    pub step_scale: f64,
    pub seed: u64,
    pub null_tol: f64,
    pub tol: f64,
    /// `basis:k`, `mixed`, or `vector:re,im;re,im;…`.
    pub states: Vec<String>,
    pub oracle_samples: usize,
}

impl Default for MkSettings {
    fn default() -> Self {
        let s = MkConfig::default();
        Self {
            restarts: s.restarts,
            max_iterations: s.max_iterations,
            step_scale: s.step_scale,
            seed: s.seed,
            null_tol: s.null_tol,
            tol: s.tol,
            states: vec!["basis:0".into(), "basis:1".into(), "mixed".into()],
            oracle_samples: 2048,
        }
    }
}

impl MkSettings {
    pub fn solver(&self) -> MkConfig {
        MkConfig {
            restarts: self.restarts,
            max_iterations: self.max_iterations,
            step_scale: self.step_scale,
            seed: self.seed,
            null_tol: self.null_tol,
            tol: self.tol,
        }
    }
}

/// Parses a state description for the algebra `M_n`.
pub fn parse_state(spec: &str, n: usize) -> Result<DensityState> {
    let spec = spec.trim();
    if spec == "mixed" {
        return DensityState::maximally_mixed(n);
    }
    if let Some(k) = spec.strip_prefix("basis:") {
        let k: usize = k.trim().parse().map_err(|_| Error::Config(format!("bad basis index in {spec:?}")))?;
        return DensityState::basis(n, k);
    }
    if let Some(body) = spec.strip_prefix("vector:") {
        let mut v = Vec::new();
        for entry in body.split(';') {
            let parts: Vec<&str> = entry.split(',').map(str::trim).collect();
            let num = |s: &str| s.parse::<f64>().map_err(|_| Error::Config(format!("bad number {s:?} in {spec:?}")));
            let z = match parts.as_slice() {
                [re] => Complex64::new(num(re)?, 0.0),
                [re, im] => Complex64::new(num(re)?, num(im)?),
                _ => return Err(Error::Config(format!("bad vector entry {entry:?}"))),
            };
            v.push(z);
        }
        if v.len() != n {
            return Err(Error::Config(format!("state {spec:?} has {} entries, algebra size is {n}", v.len())));
        }
        return DensityState::vector_state(&v);
    }
    Err(Error::Config(format!("unknown state {spec:?}")))
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_list.is_empty() {
            return Err(Error::Config("n_list must not be empty".into()));
        }
        if self.n_list.contains(&0) {
            return Err(Error::Config("n_list entries must be positive".into()));
        }
        if self.n_list.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config("n_list must be strictly ascending".into()));
        }
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must be positive, got {v}")))
            }
        };
        positive("window_radius", self.window_radius)?;
        positive("eps", self.eps)?;
        if let Some(t) = self.cluster_tol {
            positive("cluster_tol", t)?;
        }
        for &s in &self.scales {
            positive("scale", s)?;
        }
        positive("mk.null_tol", self.mk.null_tol)?;
        positive("mk.tol", self.mk.tol)?;
        positive("mk.step_scale", self.mk.step_scale)?;
        self.spectral_function()?;
        Ok(())
    }

    /// The configured function, with its Fourier transform where known.
    pub fn spectral_function(&self) -> Result<SpectralFunction> {
        match &self.function {
            FunctionKind::Gaussian { width } => SpectralFunction::gaussian(*width),
            FunctionKind::Bump { center, radius } => SpectralFunction::bump(*center, *radius),
            FunctionKind::Resolvent { lambda } => SpectralFunction::resolvent(*lambda),
            FunctionKind::Tabulated { samples } => SpectralFunction::tabulated(samples.clone()),
            FunctionKind::Trigonometric { terms } => SpectralFunction::trigonometric(terms.clone()),
        }
    }

    /// Defaults, overlaid by the file (if any), overlaid by `key=value` overrides.
    pub fn load(file: Option<&Path>, overrides: &[(String, String)]) -> Result<Self> {
        let mut value = toml::Value::try_from(Self::default()).map_err(|e| Error::Config(e.to_string()))?;
        if let Some(path) = file {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
            let file_value: toml::Value =
                toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
            merge(&mut value, file_value);
        }
        for (key, raw) in overrides {
            set_path(&mut value, key, parse_scalar(raw))?;
        }
        let config: Self = value.try_into().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }
}

fn merge(base: &mut toml::Value, overlay: toml::Value) {
    match (base, overlay) {
        (toml::Value::Table(b), toml::Value::Table(o)) => {
            for (k, v) in o {
                // A new function kind replaces the old parameters wholesale.
                let replaces = k == "function" && v.get("kind").is_some();
                match b.get_mut(&k) {
                    Some(existing) if existing.is_table() && v.is_table() && !replaces => merge(existing, v),
                    _ => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (b, o) => *b = o,
    }
}

/// Parses an override as a TOML value; bare comma lists become arrays and
/// anything unparseable is taken as a string.
fn parse_scalar(raw: &str) -> toml::Value {
    let attempt = |s: &str| -> Option<toml::Value> {
        let table: toml::Table = toml::from_str(&format!("v = {s}")).ok()?;
        table.get("v").cloned()
    };
    if let Some(v) = attempt(raw) {
        return v;
    }
    if raw.contains(',') && !raw.trim_start().starts_with('[') {
        if let Some(v) = attempt(&format!("[{raw}]")) {
            return v;
        }
        // Bare words: `basis:0,mixed`. Items that need a comma, such as
        // vector states, have to use TOML array syntax.
        let items = raw.split(',').map(|item| attempt(item).unwrap_or_else(|| toml::Value::String(item.to_string())));
        return toml::Value::Array(items.collect());
    }
    toml::Value::String(raw.to_string())
}

fn set_path(root: &mut toml::Value, key: &str, value: toml::Value) -> Result<()> {
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(Error::Config(format!("bad override key {key:?}")));
    }
    if key == "function.kind" {
        let mut fresh = toml::Table::new();
        fresh.insert("kind".into(), value);
        root.as_table_mut().expect("config root is a table").insert("function".into(), toml::Value::Table(fresh));
        return Ok(());
    }
    let mut node = root;
    for part in &parts[..parts.len() - 1] {
        let table = node.as_table_mut().ok_or_else(|| Error::Config(format!("{key:?} is not a table path")))?;
        node = table.entry(part.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
    }
    let table = node.as_table_mut().ok_or_else(|| Error::Config(format!("{key:?} is not a table path")))?;
    let leaf = parts[parts.len() - 1];
    // A lone value for a list field becomes a one-element list.
    let value = match (table.get(leaf), value) {
        (Some(toml::Value::Array(_)), v) if !v.is_array() => toml::Value::Array(vec![v]),
        (_, v) => v,
    };
    table.insert(leaf.to_string(), value);
    Ok(())
}

/// Splits `--a.b=value` / `--a.b value` arguments into key-value pairs.
pub fn parse_overrides(args: &[String]) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    let mut iter = args.iter();
    while let Some(arg) = iter.next() {
        let body = arg
            .strip_prefix("--")
            .ok_or_else(|| Error::Config(format!("expected --key=value, got {arg:?}")))?;
        match body.split_once('=') {
            Some((k, v)) => out.push((k.replace('-', "_"), v.to_string())),
            None => {
                let v = iter.next().ok_or_else(|| Error::Config(format!("missing value for --{body}")))?;
                out.push((body.replace('-', "_"), v.clone()));
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ov(pairs: &[(&str, &str)]) -> Vec<(String, String)> {
        pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
    }

    #[test]
    fn defaults_are_valid() {
        let c = RunConfig::load(None, &[]).unwrap();
        assert_eq!(c, RunConfig::default());
    }

    #[test]
    fn file_then_flags() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(&path, "n_list = [2, 3]\nwindow_radius = 2.0\n[function]\nkind = \"bump\"\ncenter = 0.0\nradius = 0.5\n[mk]\nseed = 9\n").unwrap();
        let c = RunConfig::load(Some(&path), &ov(&[("n_list", "4,8,16"), ("mk.restarts", "3")])).unwrap();
        assert_eq!(c.n_list, vec![4, 8, 16]);
        assert_eq!(c.window_radius, 2.0);
        assert_eq!(c.function, FunctionKind::Bump { center: 0.0, radius: 0.5 });
        assert_eq!(c.mk.seed, 9);
        assert_eq!(c.mk.restarts, 3);
        let c = RunConfig::load(Some(&path), &ov(&[("function.kind", "gaussian"), ("function.width", "2")])).unwrap();
        assert_eq!(c.function, FunctionKind::Gaussian { width: 2.0 });
        assert!(RunConfig::load(Some(&path), &ov(&[("function.width", "2")])).is_err());
    }

    #[test]
    fn invalid_configs_rejected() {
        assert!(RunConfig::load(None, &ov(&[("n_list", "8,4")])).is_err());
        assert!(RunConfig::load(None, &ov(&[("eps", "0")])).is_err());
        assert!(RunConfig::load(None, &ov(&[("nonsense", "1")])).is_err());
        assert!(RunConfig::load(None, &ov(&[("function.width", "-1")])).is_err());
    }

    #[test]
    fn override_parsing() {
        let args: Vec<String> = ["--n-list=1,2", "--window_radius", "4"].iter().map(|s| s.to_string()).collect();
        let o = parse_overrides(&args).unwrap();
        assert_eq!(o, ov(&[("n_list", "1,2"), ("window_radius", "4")]));
        assert!(parse_overrides(&["x".to_string()]).is_err());
        assert_eq!(parse_scalar("out/dir"), toml::Value::String("out/dir".into()));
        assert_eq!(parse_scalar("true"), toml::Value::Boolean(true));
        let c = RunConfig::load(None, &ov(&[("n_list", "5"), ("scales", "0.5")])).unwrap();
        assert_eq!(c.n_list, vec![5]);
        assert_eq!(c.scales, vec![0.5]);
        let c = RunConfig::load(None, &ov(&[("mk.states", "basis:1,mixed")])).unwrap();
        assert_eq!(c.mk.states, vec!["basis:1".to_string(), "mixed".to_string()]);
        let c = RunConfig::load(None, &ov(&[("mk.states", r#"["vector:1,0;0,1", "mixed"]"#)])).unwrap();
        assert_eq!(c.mk.states[0], "vector:1,0;0,1");
    }

    #[test]
    fn states_parse() {
        assert!(parse_state("mixed", 3).is_ok());
        assert!(parse_state("basis:2", 3).is_ok());
        assert!(parse_state("basis:3", 3).is_err());
        let s = parse_state("vector:1,0;0,1", 2).unwrap();
        assert!((s.rho()[(0, 1)] - Complex64::new(0.0, -0.5)).norm() < 1e-15);
        assert!(parse_state("vector:1", 2).is_err());
        assert!(parse_state("pure", 2).is_err());
    }
}
