//! Study orchestration: sweeps, the mesh study, network training and figures.
//!
//! Output layout under the configured directory:
//!
//! ```text
//! calibration.json
//! sweep/<family>/{dataset.csv, manifest.json, models/<id>/...}
//! mesh_study/<id>.{csv,json}
//! learn/<family>/{model.txt, report.csv, report.txt, predictions.csv, seeds.csv}
//! figures/*.{csv,svg}
//! ```

mod config;
mod figures;
mod learning;
mod model;
mod study;
mod sweep;

pub use config::{Calibration, MeshStudySpec, StudyConfig, SweepSpec, TumorDefaults};
pub use figures::{make_figures, normalized_box_stats, render_svg, FigureKind};
pub use learning::{
    dataset_from_records, learn_dir, run_learning, seed_study, write_learning, write_seed_study, LearningOutcome,
    Prediction,
};
pub use model::{model_id, run_model, run_sweep_model, ModelRun, SweepRecord};
pub use study::{calibrate_ambient, max_relative_change, mesh_study, CalibrationResult, LevelReport, MeshStudyReport};
pub use sweep::{
    dataset_path, model_dir, read_records, resolve_thermal, run_sweep, sweep_dir, write_atomic, write_model_artifacts,
    write_records, write_text, ModelEntry, ModelStatus, RunManifest, SweepOutcome, MODEL_ARTIFACTS,
};

use std::path::Path;

use crate::error::Result;
use crate::fem::ThermalParams;

/// Calibrates (if configured) and records the result in `calibration.json`.
pub fn prepare_thermal(cfg: &StudyConfig) -> Result<ThermalParams> {
    let (thermal, cal) = resolve_thermal(cfg)?;
    if let Some(cal) = cal {
        let text = serde_json::to_string_pretty(&cal)? + "\n";
        write_text(&cfg.output_dir.join("calibration.json"), &text)?;
    }
    Ok(thermal)
}

/// Runs the mesh study and writes its CSV and JSON reports.
pub fn run_mesh_study(cfg: &StudyConfig, thermal: &ThermalParams, spec: &MeshStudySpec) -> Result<MeshStudyReport> {
    let report = mesh_study(cfg, thermal, spec)?;
    let stem = cfg.output_dir.join("mesh_study").join(model_id(spec.family, spec.n));
    write_atomic(&stem.with_extension("csv"), |w| report.write_csv(w))?;
    write_text(&stem.with_extension("json"), &(serde_json::to_string_pretty(&report)? + "\n"))?;
    Ok(report)
}

/// Loads a sweep's dataset, trains with the configured seed, evaluates and
/// writes all learning outputs including the multi-seed summary.
pub fn learn_family(cfg: &StudyConfig, family: crate::geometry::ShapeFamily) -> Result<LearningOutcome> {
    let records = read_records(&dataset_path(&cfg.output_dir, family))?;
    let outcome = run_learning(cfg, family, &records, cfg.seed)?;
    write_learning(&cfg.output_dir, &outcome)?;
    let (per_seed, mean) = seed_study(cfg, family, &records)?;
    write_seed_study(&cfg.output_dir, family, &per_seed, &mean)?;
    Ok(outcome)
}

/// Writes the effective configuration next to the outputs.
pub fn write_config(cfg: &StudyConfig, out: &Path) -> Result<()> {
    write_text(&out.join("config.json"), &(cfg.to_json() + "\n"))
}
