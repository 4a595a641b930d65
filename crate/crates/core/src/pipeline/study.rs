use std::io::Write;

use serde::{Deserialize, Serialize};

use super::config::{Calibration, MeshStudySpec, StudyConfig};
use super::model::{run_model, run_sweep_model, ModelRun};
use crate::error::{Error, Result};
use crate::fem::{PointLocator, ThermalParams};
use crate::geometry::ShapeFamily;
use crate::mesh::RefinementSpec;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationResult {
    pub family: ShapeFamily,
    pub n: u32,
    pub target: f64,
    /// °C
    pub t_ambient: f64,
    /// Reference maximum reached with the calibrated ambient, °C.
    pub t_max: f64,
    /// `∂T_max/∂t_ambient`.
    pub sensitivity: f64,
}

/// Finds `t_ambient` such that the reference model's surface maximum equals
/// the target. The problem is affine in `t_ambient`, so a secant step is
/// exact up to solver tolerance; a few extra steps guard against the
/// hottest sample moving.
pub fn calibrate_ambient(cfg: &StudyConfig, target: &Calibration) -> Result<CalibrationResult> {
    let t_max = |ta: f64| -> Result<f64> {
        let thermal = ThermalParams {
            t_ambient: ta,
            ..cfg.thermal
        };
        Ok(run_sweep_model(cfg, &thermal, target.family, target.n)?.record.t_max)
    };
    let (mut x0, mut x1) = (cfg.thermal.t_ambient, cfg.thermal.t_ambient + 1.0);
    let (mut f0, mut f1) = (t_max(x0)? - target.t_max, t_max(x1)? - target.t_max);
    for _ in 0..8 {
        if f1.abs() < 1e-9 {
            break;
        }
        let slope = (f1 - f0) / (x1 - x0);
        if !(slope.abs() > 0.0) {
            return Err(Error::Singular("surface maximum does not depend on ambient temperature".into()));
        }
        let x2 = x1 - f1 / slope;
        (x0, f0) = (x1, f1);
        x1 = x2;
        f1 = t_max(x1)? - target.t_max;
    }
    Ok(CalibrationResult {
        family: target.family,
        n: target.n,
        target: target.t_max,
        t_ambient: x1,
        t_max: f1 + target.t_max,
        sensitivity: (f1 - f0) / (x1 - x0),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelReport {
    pub refinement: RefinementSpec,
    pub elements: usize,
    pub nodes: usize,
    pub t_max: f64,
    pub iterations: usize,
    /// Seconds.
    pub wall_time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeshStudyReport {
    pub family: ShapeFamily,
    pub n: u32,
    pub levels: Vec<LevelReport>,
    /// Maximum relative nodal temperature change from level `k` to `k + 1`.
    pub differences: Vec<f64>,
    pub tolerance: f64,
    pub passed: bool,
}

impl MeshStudyReport {
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record([
            "level",
            "nx",
            "ny",
            "nz",
            "local_factor",
            "elements",
            "nodes",
            "T_max",
            "iterations",
            "wall_time_s",
            "max_rel_change_from_previous",
        ])?;
        for (k, l) in self.levels.iter().enumerate() {
            let diff = if k == 0 { String::new() } else { format!("{:?}", self.differences[k - 1]) };
            wr.write_record([
                (k + 1).to_string(),
                l.refinement.nx.to_string(),
                l.refinement.ny.to_string(),
                l.refinement.nz.to_string(),
                l.refinement.local_factor.to_string(),
                l.elements.to_string(),
                l.nodes.to_string(),
                format!("{:?}", l.t_max),
                l.iterations.to_string(),
                format!("{:.3}", l.wall_time),
                diff,
            ])?;
        }
        wr.flush().map_err(|e| Error::format("mesh study csv", e.to_string()))?;
        Ok(())
    }
}

/// Largest `|T_fine − T_coarse| / |T_coarse|` over the coarse nodes, with the
/// fine field interpolated at each coarse node's undeformed position.
pub fn max_relative_change(coarse: &ModelRun, fine: &ModelRun) -> Result<f64> {
    let locator = PointLocator::new(&fine.mesh);
    let mut worst: f64 = 0.0;
    for (p, &tc) in coarse.mesh.nodes.iter().zip(&coarse.field.values) {
        let (e, lam) = locator
            .locate(*p)
            .ok_or_else(|| Error::param(format!("node {p:?} outside the finer mesh")))?;
        let t = fine.mesh.tets[e];
        let tf: f64 = (0..4).map(|a| lam[a] * fine.field.values[t[a]]).sum();
        worst = worst.max((tf - tc).abs() / tc.abs());
    }
    Ok(worst)
}

/// Solves one model at each refinement level and compares consecutive levels.
pub fn mesh_study(cfg: &StudyConfig, thermal: &ThermalParams, spec: &MeshStudySpec) -> Result<MeshStudyReport> {
    if spec.levels.len() < 2 {
        return Err(Error::param("mesh study needs at least two levels"));
    }
    let focus = cfg.refinement_envelope()?;
    let runs: Vec<ModelRun> = spec
        .levels
        .iter()
        .map(|r| run_model(cfg, thermal, spec.family, spec.n, r, Some(focus)))
        .collect::<Result<_>>()?;
    let differences = runs
        .windows(2)
        .map(|w| max_relative_change(&w[0], &w[1]))
        .collect::<Result<Vec<_>>>()?;
    let levels = runs
        .iter()
        .zip(&spec.levels)
        .map(|(r, l)| LevelReport {
            refinement: *l,
            elements: r.mesh.tet_count(),
            nodes: r.mesh.node_count(),
            t_max: r.record.t_max,
            iterations: r.stats.iterations,
            wall_time: r.wall_time,
        })
        .collect();
    Ok(MeshStudyReport {
        family: spec.family,
        n: spec.n,
        levels,
        passed: differences[0] < spec.tolerance,
        differences,
        tolerance: spec.tolerance,
    })
}
