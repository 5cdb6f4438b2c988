use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::RunConfig;
use crate::acceptance::CriterionResult;
use crate::calculus::FunctionKind;
use crate::error::Result;
use crate::matrix::ComplexMatrix;
use crate::spectrum::{IndexedSpectrum, MultiplicityCheck, TrackingReport};
use crate::torus::ClosedFormConvention;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultBundle {
    pub schema_version: u32,
    pub metadata: Metadata,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spectrum: Option<SpectrumSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub action: Option<ActionSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub calculus: Option<CalculusSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mk: Option<MkSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verify: Option<Vec<CriterionResult>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub crate_version: String,
    pub command: String,
    pub config: RunConfig,
    pub closed_form_convention: ClosedFormConvention,
    pub closed_form_note: String,
    pub construction_convention: String,
    pub seed: u64,
    pub cache: Vec<CacheStatus>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CacheStatus {
    pub n: usize,
    pub hit: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumRow {
    pub n: usize,
    pub dim: usize,
    pub cluster_tol: f64,
    pub operator_norm: f64,
    pub spectrum: IndexedSpectrum,
    /// Sorted ℓ∞ distance to the closed form, for `n ≥ 2`.
    pub closed_form_deviation: Option<f64>,
    pub symmetric: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HausdorffRow {
    pub n: usize,
    pub radius: f64,
    pub cluster_tol: f64,
    pub distance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumSection {
    pub rows: Vec<SpectrumRow>,
    pub limit_window: Vec<f64>,
    pub hausdorff: Vec<HausdorffRow>,
    pub tracking: Option<TrackingReport>,
    pub multiplicities: Vec<MultiplicityCheck>,
    pub multiplicity_note: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ActionRow {
    pub n: usize,
    pub scale: f64,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ActionDifference {
    pub n_from: usize,
    pub n_to: usize,
    pub scale: f64,
    pub difference: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ActionSection {
    pub function: FunctionKind,
    pub rows: Vec<ActionRow>,
    pub differences: Vec<ActionDifference>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalculusRow {
    pub n: usize,
    pub eps: f64,
    pub route_delta: f64,
    pub certified_bound: f64,
    pub cutoff: f64,
    pub panels: usize,
    pub within_eps: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalculusSection {
    pub function: FunctionKind,
    pub rows: Vec<CalculusRow>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MkRow {
    pub n: usize,
    pub phi: String,
    pub psi: String,
    /// `None` when a Lip-null direction makes the distance infinite.
    pub lower_bound: Option<f64>,
    pub estimate: Option<f64>,
    pub unbounded: bool,
    pub converged: bool,
    pub iterations: usize,
    pub oracle: Option<f64>,
    pub witness: ComplexMatrix,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MkSection {
    pub seed: u64,
    pub rows: Vec<MkRow>,
}

/// Plain decimal with 12 significant digits; scientific outside `[1e-4, 1e15)`.
pub fn format_sig(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let mag = x.abs().log10().floor() as i32;
    if (-4..15).contains(&mag) {
        let decimals = (11 - mag).max(0) as usize;
        format!("{x:.decimals$}")
    } else {
        format!("{x:.11e}")
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(format_sig).unwrap_or_default()
}

impl ResultBundle {
    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    /// CSV tables as `(file name, contents)`.
    pub fn csv_tables(&self) -> Result<Vec<(String, String)>> {
        let mut out = Vec::new();
        if let Some(s) = &self.spectrum {
            let mut w = csv::Writer::from_writer(vec![]);
            w.write_record(["n", "cluster_tol", "index", "value", "multiplicity"])?;
            for row in &s.rows {
                let off = row.spectrum.index_offset.unwrap_or(0) as i64;
                for (p, c) in row.spectrum.clusters.iter().enumerate() {
                    w.write_record([
                        row.n.to_string(),
                        format_sig(row.cluster_tol),
                        (p as i64 - off).to_string(),
                        format_sig(c.value),
                        c.multiplicity.to_string(),
                    ])?;
                }
            }
            out.push(("spectrum_clusters.csv".into(), finish(w)?));
            let mut w = csv::Writer::from_writer(vec![]);
            w.write_record(["n", "radius", "cluster_tol", "hausdorff_to_limit"])?;
            for r in &s.hausdorff {
                w.write_record([r.n.to_string(), format_sig(r.radius), format_sig(r.cluster_tol), format_sig(r.distance)])?;
            }
            out.push(("hausdorff.csv".into(), finish(w)?));
        }
        if let Some(a) = &self.action {
            let mut w = csv::Writer::from_writer(vec![]);
            w.write_record(["n", "scale", "trace_f"])?;
            for r in &a.rows {
                w.write_record([r.n.to_string(), format_sig(r.scale), format_sig(r.value)])?;
            }
            out.push(("action.csv".into(), finish(w)?));
            let mut w = csv::Writer::from_writer(vec![]);
            w.write_record(["n_from", "n_to", "scale", "difference"])?;
            for r in &a.differences {
                w.write_record([r.n_from.to_string(), r.n_to.to_string(), format_sig(r.scale), format_sig(r.difference)])?;
            }
            out.push(("action_differences.csv".into(), finish(w)?));
        }
        if let Some(c) = &self.calculus {
            let mut w = csv::Writer::from_writer(vec![]);
            w.write_record(["n", "eps", "route_delta", "certified_bound", "cutoff", "panels", "within_eps"])?;
            for r in &c.rows {
                w.write_record([
                    r.n.to_string(),
                    format_sig(r.eps),
                    format_sig(r.route_delta),
                    format_sig(r.certified_bound),
                    format_sig(r.cutoff),
                    r.panels.to_string(),
                    r.within_eps.to_string(),
                ])?;
            }
            out.push(("calculus.csv".into(), finish(w)?));
        }
        if let Some(m) = &self.mk {
            let mut w = csv::Writer::from_writer(vec![]);
            w.write_record(["n", "phi", "psi", "lower_bound", "estimate", "oracle", "unbounded", "converged"])?;
            for r in &m.rows {
                w.write_record([
                    r.n.to_string(),
                    r.phi.clone(),
                    r.psi.clone(),
                    opt(r.lower_bound),
                    opt(r.estimate),
                    opt(r.oracle),
                    r.unbounded.to_string(),
                    r.converged.to_string(),
                ])?;
            }
            out.push(("mk.csv".into(), finish(w)?));
        }
        if let Some(v) = &self.verify {
            let mut w = csv::Writer::from_writer(vec![]);
            w.write_record(["criterion", "name", "passed", "detail"])?;
            for r in v {
                w.write_record([r.id.to_string(), r.name.clone(), r.passed.to_string(), r.detail.clone()])?;
            }
            out.push(("verify.csv".into(), finish(w)?));
        }
        Ok(out)
    }

    /// Writes `<command>.json` and the CSV tables into `dir`.
    pub fn write_to(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        let json = dir.join(format!("{}.json", self.metadata.command));
        fs::write(&json, self.to_json()?)?;
        written.push(json);
        for (name, body) in self.csv_tables()? {
            let path = dir.join(name);
            fs::write(&path, body)?;
            written.push(path);
        }
        Ok(written)
    }
}

fn finish(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(|e| std::io::Error::other(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}
