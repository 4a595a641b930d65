use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::config::StudyConfig;
use super::model::{model_id, run_sweep_model, ModelRun, SweepRecord};
use super::study::{calibrate_ambient, CalibrationResult};
use crate::error::{Error, Result};
use crate::fem::ThermalParams;
use crate::geometry::ShapeFamily;
use crate::par;

/// Writes `path` through a temporary sibling and a rename.
pub fn write_atomic<F>(path: &Path, fill: F) -> Result<()>
where
    F: FnOnce(&mut BufWriter<File>) -> Result<()>,
{
    let dir = path.parent().unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let name = path.file_name().and_then(|s| s.to_str()).unwrap_or("out");
    let tmp = dir.join(format!(".{name}.tmp"));
    let file = File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
    let mut w = BufWriter::new(file);
    fill(&mut w)?;
    w.flush().map_err(|e| Error::io(&tmp, e))?;
    drop(w);
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    write_atomic(path, |w| w.write_all(text.as_bytes()).map_err(|e| Error::io(path, e)))
}

pub fn sweep_dir(out: &Path, family: ShapeFamily) -> PathBuf {
    out.join("sweep").join(family.as_str())
}

pub fn dataset_path(out: &Path, family: ShapeFamily) -> PathBuf {
    sweep_dir(out, family).join("dataset.csv")
}

pub fn model_dir(out: &Path, family: ShapeFamily, n: u32) -> PathBuf {
    sweep_dir(out, family).join("models").join(model_id(family, n))
}

/// Per-model files written by a sweep, relative to the model directory.
pub const MODEL_ARTIFACTS: [&str; 4] = ["signature.csv", "profile.csv", "field.csv", "slice.csv"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelStatus {
    Done,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelEntry {
    pub n: u32,
    pub status: ModelStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub elements: usize,
    pub nodes: usize,
    pub iterations: usize,
    /// Relative heat-balance error of the thermal solve.
    pub energy_error: Option<f64>,
    /// Seconds.
    pub wall_time: f64,
    pub artifacts: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config_hash: String,
    pub family: ShapeFamily,
    pub t_ambient: f64,
    pub models: BTreeMap<String, ModelEntry>,
}

impl RunManifest {
    pub fn path(out: &Path, family: ShapeFamily) -> PathBuf {
        sweep_dir(out, family).join("manifest.json")
    }

    pub fn load(path: &Path) -> Result<Option<Self>> {
        match fs::read_to_string(path) {
            Ok(text) => Ok(Some(serde_json::from_str(&text)?)),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(Error::io(path, e)),
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        write_text(path, &(text + "\n"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutcome {
    pub family: ShapeFamily,
    /// Completed models in sweep order.
    pub records: Vec<SweepRecord>,
    pub solved: usize,
    pub skipped: usize,
    /// `(model_id, error)` of failed models.
    pub failures: Vec<(String, String)>,
    /// True when a failure came from a linear solve or the deformation.
    pub solver_failure: bool,
}

/// Thermal parameters with the configured ambient calibration applied.
pub fn resolve_thermal(cfg: &StudyConfig) -> Result<(ThermalParams, Option<CalibrationResult>)> {
    match &cfg.calibration {
        None => Ok((cfg.thermal, None)),
        Some(c) => {
            let cal = calibrate_ambient(cfg, c)?;
            Ok((
                ThermalParams {
                    t_ambient: cal.t_ambient,
                    ..cfg.thermal
                },
                Some(cal),
            ))
        }
    }
}

pub fn write_records<W: Write>(records: &[SweepRecord], w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    for r in records {
        wr.serialize(r)?;
    }
    wr.flush().map_err(|e| Error::format("dataset csv", e.to_string()))?;
    Ok(())
}

pub fn read_records(path: &Path) -> Result<Vec<SweepRecord>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rd = csv::Reader::from_reader(file);
    rd.deserialize().map(|r| r.map_err(Error::from)).collect()
}

/// Writes the per-model files of one run into `dir`.
pub fn write_model_artifacts(dir: &Path, run: &ModelRun) -> Result<()> {
    write_atomic(&dir.join("field.csv"), |w| run.field.write_csv(&run.solved_mesh, w))?;
    write_atomic(&dir.join("profile.csv"), |w| run.profile.write_csv(w))?;
    write_atomic(&dir.join("slice.csv"), |w| run.slice.write_csv(w))?;
    // Written last: its presence marks a complete model directory.
    write_atomic(&dir.join("signature.csv"), |w| write_records(std::slice::from_ref(&run.record), w))
}

fn completed_record(out: &Path, family: ShapeFamily, n: u32, entry: &ModelEntry) -> Option<SweepRecord> {
    if entry.status != ModelStatus::Done {
        return None;
    }
    let dir = model_dir(out, family, n);
    if !MODEL_ARTIFACTS.iter().all(|a| dir.join(a).is_file()) {
        return None;
    }
    read_records(&dir.join("signature.csv")).ok()?.into_iter().next()
}

/// Runs every model of the sweep that is not already complete on disk, then
/// writes the dataset CSV from all completed models in sweep order.
///
/// Individual model failures are recorded in the manifest and the outcome;
/// the sweep carries on with the remaining models.
pub fn run_sweep(cfg: &StudyConfig, thermal: &ThermalParams, family: ShapeFamily, workers: usize) -> Result<SweepOutcome> {
    cfg.validate()?;
    let out = &cfg.output_dir;
    let manifest_path = RunManifest::path(out, family);
    let hash = cfg.model_hash();
    let fresh = RunManifest {
        config_hash: hash.clone(),
        family,
        t_ambient: thermal.t_ambient,
        models: BTreeMap::new(),
    };
    let manifest = match RunManifest::load(&manifest_path)? {
        Some(m) if m.config_hash == hash && m.family == family && m.t_ambient == thermal.t_ambient => m,
        _ => fresh,
    };

    let values = cfg.sweep.values();
    let mut done: BTreeMap<u32, SweepRecord> = BTreeMap::new();
    let mut todo = Vec::new();
    for &n in &values {
        let id = model_id(family, n);
        match manifest.models.get(&id).and_then(|e| completed_record(out, family, n, e)) {
            Some(r) => {
                done.insert(n, r);
            }
            None => todo.push(n),
        }
    }
    let skipped = done.len();
    let manifest = Mutex::new(manifest);
    manifest
        .lock()
        .map_err(|_| Error::format("manifest", "lock poisoned"))?
        .save(&manifest_path)?;

    let results: Vec<(u32, Result<SweepRecord>)> = par::with_workers(workers, || {
        par::map_slice(&todo, |&n| {
            let id = model_id(family, n);
            let result = run_sweep_model(cfg, thermal, family, n).and_then(|run| {
                write_model_artifacts(&model_dir(out, family, n), &run)?;
                Ok(run)
            });
            let entry = match &result {
                Ok(run) => ModelEntry {
                    n,
                    status: ModelStatus::Done,
                    error: None,
                    elements: run.mesh.tet_count(),
                    nodes: run.mesh.node_count(),
                    iterations: run.stats.iterations,
                    energy_error: Some(run.balance.relative_error()),
                    wall_time: run.wall_time,
                    artifacts: MODEL_ARTIFACTS
                        .iter()
                        .map(|a| format!("models/{id}/{a}"))
                        .collect(),
                },
                Err(e) => ModelEntry {
                    n,
                    status: ModelStatus::Failed,
                    error: Some(e.to_string()),
                    elements: 0,
                    nodes: 0,
                    iterations: 0,
                    energy_error: None,
                    wall_time: 0.0,
                    artifacts: Vec::new(),
                },
            };
            let saved = match manifest.lock() {
                Ok(mut m) => {
                    m.models.insert(id, entry);
                    m.save(&manifest_path)
                }
                Err(_) => Err(Error::format("manifest", "lock poisoned")),
            };
            let result = match (result, saved) {
                (Ok(run), Ok(())) => Ok(run.record),
                (Err(e), _) | (Ok(_), Err(e)) => Err(e),
            };
            (n, result)
        })
    });

    let mut failures = Vec::new();
    let mut solver_failure = false;
    let mut solved = 0;
    for (n, r) in results {
        match r {
            Ok(rec) => {
                solved += 1;
                done.insert(n, rec);
            }
            Err(e) => {
                solver_failure |= e.is_solver_failure();
                failures.push((model_id(family, n), e.to_string()));
            }
        }
    }
    let records: Vec<SweepRecord> = done.into_values().collect();
    write_atomic(&dataset_path(out, family), |w| write_records(&records, w))?;
    Ok(SweepOutcome {
        family,
        records,
        solved,
        skipped,
        failures,
        solver_failure,
    })
}
