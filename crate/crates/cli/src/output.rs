//! Artifact writing: atomic file creation and the run record manifest.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::ScenarioConfig;
use crate::error::{CliError, CliResult};

pub const RUN_RECORD_FILE: &str = "run_record.json";
pub const RUN_RECORD_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ManifestEntry {
    pub path: String,
    pub bytes: u64,
}

/// A summary quantity. Metrics are probabilities, fidelities and purities,
/// so they always lie in [0, 1]; `std` is the bootstrap spread when the
/// value came from simulated counts.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metric {
    pub name: String,
    pub value: f64,
    pub std: Option<f64>,
}

impl Metric {
    pub fn exact(name: impl Into<String>, value: f64) -> Self {
        let name = name.into();
        Self { value: unit_interval(&name, value), name, std: None }
    }

    pub fn estimated(name: impl Into<String>, value: f64, std: f64) -> Self {
        let name = name.into();
        Self { value: unit_interval(&name, value), name, std: Some(std) }
    }
}

/// Clamps rounding excursions (`1 + 1e-15`) back into [0, 1].
fn unit_interval(name: &str, v: f64) -> f64 {
    if !(-1e-9..=1.0 + 1e-9).contains(&v) {
        log::warn!("metric {name} = {v} outside [0, 1]; clamping");
    }
    v.clamp(0.0, 1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Quantity {
    pub name: String,
    pub value: f64,
    pub unit: String,
}

impl Quantity {
    pub fn new(name: impl Into<String>, value: f64, unit: impl Into<String>) -> Self {
        Self { name: name.into(), value, unit: unit.into() }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunRecord {
    pub schema_version: u32,
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config: ScenarioConfig,
    pub manifest: Vec<ManifestEntry>,
    pub metrics: Vec<Metric>,
    /// Physical quantities without a [0, 1] range (lengths, couplings).
    pub summary: Vec<Quantity>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_clock_s: Option<f64>,
}

/// Output directory that remembers everything written into it.
pub struct OutputDir {
    dir: PathBuf,
    manifest: Vec<ManifestEntry>,
}

impl OutputDir {
    pub fn create(dir: &Path) -> CliResult<Self> {
        fs::create_dir_all(dir).map_err(|source| CliError::Output { path: dir.display().to_string(), source })?;
        Ok(Self { dir: dir.to_path_buf(), manifest: Vec::new() })
    }

    pub fn path(&self) -> &Path {
        &self.dir
    }

    pub fn manifest(&self) -> &[ManifestEntry] {
        &self.manifest
    }

    pub fn write_text(&mut self, name: &str, contents: &str) -> CliResult<PathBuf> {
        let path = write_atomic(&self.dir, name, contents.as_bytes())?;
        self.manifest.retain(|e| e.path != name);
        self.manifest.push(ManifestEntry { path: name.to_string(), bytes: contents.len() as u64 });
        Ok(path)
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> CliResult<PathBuf> {
        let mut text = serde_json::to_string_pretty(value).expect("report types serialize");
        text.push('\n');
        self.write_text(name, &text)
    }

    /// Writes the run record listing every file written so far.
    pub fn finish(self, mut record: RunRecord) -> CliResult<PathBuf> {
        record.manifest = self.manifest;
        let mut text = serde_json::to_string_pretty(&record).expect("run record serializes");
        text.push('\n');
        write_atomic(&self.dir, RUN_RECORD_FILE, text.as_bytes())
    }
}

/// Write to a hidden temporary sibling, then rename over the target.
fn write_atomic(dir: &Path, name: &str, bytes: &[u8]) -> CliResult<PathBuf> {
    let target = dir.join(name);
    let tmp = dir.join(format!(".{name}.tmp-{}", std::process::id()));
    let err = |source| CliError::Output { path: target.display().to_string(), source };
    let mut f = fs::File::create(&tmp).map_err(err)?;
    f.write_all(bytes).map_err(err)?;
    f.sync_all().map_err(err)?;
    drop(f);
    fs::rename(&tmp, &target).map_err(err)?;
    Ok(target)
}

/// Grayscale plain-text PGM (`P2`) of a rows × columns intensity grid,
/// scaled so the largest value is white.
pub fn pgm_heatmap(rows: &[Vec<f64>]) -> String {
    let height = rows.len();
    let width = rows.first().map_or(0, Vec::len);
    let peak = rows.iter().flatten().cloned().fold(0.0f64, f64::max);
    let mut out = format!("P2\n{width} {height}\n255\n");
    for row in rows {
        let line: Vec<String> = row
            .iter()
            .map(|&v| {
                let g = if peak > 0.0 { (v / peak * 255.0).round() } else { 0.0 };
                (g.clamp(0.0, 255.0) as u8).to_string()
            })
            .collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}
