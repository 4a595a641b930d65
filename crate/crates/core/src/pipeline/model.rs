use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::config::StudyConfig;
use crate::error::Result;
use crate::fem::{
    deform_mesh, heat_balance, solve_elastic_with, solve_heat_with, surface_slice, Axis, HeatBalance, ScalarField,
    SliceGrid, SlicePlane, SolveStats, ThermalParams,
};
use crate::geometry::ShapeFamily;
use crate::mesh::{build_mesh_with_focus, Aabb, RefinementSpec, TetMesh};
use crate::signature::{extract_profile, fit_fourier4, max_surface_temp, FourierSignature, SurfaceProfile};

pub fn model_id(family: ShapeFamily, n: u32) -> String {
    format!("{family}-{n:03}")
}

/// One row of a sweep dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub model_id: String,
    pub family: ShapeFamily,
    pub n: u32,
    pub a0: f64,
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    pub a4: f64,
    pub b1: f64,
    pub b2: f64,
    pub b3: f64,
    pub b4: f64,
    pub w: f64,
    pub fit_rmse_rel: f64,
    #[serde(rename = "T_max")]
    pub t_max: f64,
    /// m
    pub x_max: f64,
}

impl SweepRecord {
    pub fn new(family: ShapeFamily, n: u32, sig: &FourierSignature, x_max: f64, t_max: f64) -> Self {
        Self {
            model_id: model_id(family, n),
            family,
            n,
            a0: sig.a0,
            a1: sig.a[0],
            a2: sig.a[1],
            a3: sig.a[2],
            a4: sig.a[3],
            b1: sig.b[0],
            b2: sig.b[1],
            b3: sig.b[2],
            b4: sig.b[3],
            w: sig.w,
            fit_rmse_rel: sig.fit_rmse_rel,
            t_max,
            x_max,
        }
    }

    pub fn signature(&self) -> FourierSignature {
        FourierSignature {
            a0: self.a0,
            a: [self.a1, self.a2, self.a3, self.a4],
            b: [self.b1, self.b2, self.b3, self.b4],
            w: self.w,
            fit_rmse_rel: self.fit_rmse_rel,
        }
    }
}

/// Everything produced by one forward simulation.
pub struct ModelRun {
    pub record: SweepRecord,
    /// Undeformed mesh.
    pub mesh: TetMesh,
    /// Mesh the thermal problem was solved on.
    pub solved_mesh: TetMesh,
    pub field: ScalarField,
    pub profile: SurfaceProfile,
    pub slice: SliceGrid,
    pub stats: SolveStats,
    pub balance: HeatBalance,
    /// Seconds.
    pub wall_time: f64,
}

/// Geometry → mesh → optional compression → heat → profile → signature.
pub fn run_model(
    cfg: &StudyConfig,
    thermal: &ThermalParams,
    family: ShapeFamily,
    n: u32,
    refinement: &RefinementSpec,
    focus: Option<Aabb>,
) -> Result<ModelRun> {
    let start = Instant::now();
    let geom = cfg.geometry(family, n)?;
    let mesh = build_mesh_with_focus(&geom, refinement, focus)?;
    let solved_mesh = if cfg.compression {
        let u = solve_elastic_with(&mesh, &cfg.elastic, &cfg.solver)?;
        deform_mesh(&mesh, &u)?
    } else {
        mesh.clone()
    };
    let (field, stats) = solve_heat_with(&solved_mesh, thermal, &cfg.solver)?;
    let balance = heat_balance(&solved_mesh, thermal, &field);
    let profile = extract_profile(&solved_mesh, &field, cfg.dims.x_len, cfg.dims.y_len, cfg.profile_samples)?;
    let sig = fit_fourier4(&profile)?;
    let (x_max, t_max) = max_surface_temp(&profile);
    let plane = SlicePlane {
        axis: Axis::Y,
        offset: 0.5 * cfg.dims.y_len,
    };
    let slice = surface_slice(&solved_mesh, &field, plane, cfg.slice_samples[0], cfg.slice_samples[1])?;
    Ok(ModelRun {
        record: SweepRecord::new(family, n, &sig, x_max, t_max),
        mesh,
        solved_mesh,
        field,
        profile,
        slice,
        stats,
        balance,
        wall_time: start.elapsed().as_secs_f64(),
    })
}

/// [`run_model`] with the study's sweep grid and the given thermal parameters.
pub fn run_sweep_model(cfg: &StudyConfig, thermal: &ThermalParams, family: ShapeFamily, n: u32) -> Result<ModelRun> {
    let focus = cfg.refinement_envelope()?;
    run_model(cfg, thermal, family, n, &cfg.refinement, Some(focus))
}
