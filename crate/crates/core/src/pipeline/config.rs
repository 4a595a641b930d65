use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::fem::{ElasticParams, SolverOptions, ThermalParams};
use crate::geometry::{
    place_prism, regular_circumradius, star_outer_radius, GeometrySpec, ShapeFamily, TissueDims, TumorShape,
};
use crate::learn::{RbfParams, SplitSizes};
use crate::mesh::{Aabb, RefinementSpec, REFINEMENT_MARGIN};
use crate::signature::DEFAULT_SAMPLES;

/// Tumour dimensions shared by every model of a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TumorDefaults {
    /// mm²
    pub base_area: f64,
    /// mm
    pub prism_height: f64,
    /// Star inner radius, mm.
    pub inner_radius: f64,
    /// Depth of the prism top below the tissue surface, mm.
    pub top_depth: f64,
}

impl Default for TumorDefaults {
    fn default() -> Self {
        Self {
            base_area: 400.0,
            prism_height: 8.0,
            inner_radius: 10.0,
            top_depth: 12.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSpec {
    pub start: u32,
    pub step: u32,
    pub end: u32,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self {
            start: 3,
            step: 1,
            end: 100,
        }
    }
}

impl SweepSpec {
    pub fn values(&self) -> Vec<u32> {
        (self.start..=self.end).step_by(self.step.max(1) as usize).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.start < 3 || self.step == 0 || self.end < self.start {
            return Err(Error::param(format!("invalid sweep {self:?}")));
        }
        Ok(())
    }
}

/// Fixes `t_ambient` so that one reference model reaches a target surface maximum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Calibration {
    pub family: ShapeFamily,
    pub n: u32,
    /// °C
    pub t_max: f64,
}

impl Default for Calibration {
    fn default() -> Self {
        Self {
            family: ShapeFamily::RegularPolygon,
            n: 3,
            t_max: 29.7,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MeshStudySpec {
    pub family: ShapeFamily,
    pub n: u32,
    pub levels: Vec<RefinementSpec>,
    /// Maximum relative temperature change accepted between the first two levels.
    pub tolerance: f64,
}

impl Default for MeshStudySpec {
    fn default() -> Self {
        Self {
            family: ShapeFamily::RegularPolygon,
            n: 10,
            levels: vec![
                RefinementSpec { nx: 20, ny: 10, nz: 4, local_factor: 2 },
                RefinementSpec { nx: 20, ny: 10, nz: 6, local_factor: 2 },
                RefinementSpec { nx: 24, ny: 12, nz: 6, local_factor: 2 },
            ],
            tolerance: 0.01,
        }
    }
}

/// Every setting of a study run. Missing JSON fields take their defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StudyConfig {
    pub dims: TissueDims,
    pub tumor: TumorDefaults,
    pub thermal: ThermalParams,
    pub elastic: ElasticParams,
    /// Apply the compression pre-load before the thermal solve.
    pub compression: bool,
    pub solver: SolverOptions,
    pub refinement: RefinementSpec,
    pub sweep: SweepSpec,
    pub calibration: Option<Calibration>,
    pub mesh_study: MeshStudySpec,
    pub profile_samples: usize,
    /// Sample counts of the exported mid-section slice.
    pub slice_samples: [usize; 2],
    pub split: SplitSizes,
    pub seed: u64,
    pub rbf: RbfParams,
    /// Seeds averaged in the generalisation summary.
    pub eval_seeds: Vec<u64>,
    /// Side/wing counts whose profiles and slices are plotted.
    pub figure_models: Vec<u32>,
    pub output_dir: PathBuf,
}

impl Default for StudyConfig {
    fn default() -> Self {
        Self {
            dims: TissueDims::default(),
            tumor: TumorDefaults::default(),
            thermal: ThermalParams::default(),
            elastic: ElasticParams::default(),
            compression: true,
            solver: SolverOptions::default(),
            refinement: RefinementSpec::default(),
            sweep: SweepSpec::default(),
            calibration: Some(Calibration::default()),
            mesh_study: MeshStudySpec::default(),
            profile_samples: DEFAULT_SAMPLES,
            slice_samples: [121, 51],
            split: SplitSizes::default(),
            seed: 1,
            rbf: RbfParams::default(),
            eval_seeds: vec![1, 2, 3, 4, 5],
            figure_models: vec![3, 4, 6, 10, 20, 100],
            output_dir: PathBuf::from("out"),
        }
    }
}

impl StudyConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: StudyConfig = serde_json::from_str(&text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialises")
    }

    pub fn validate(&self) -> Result<()> {
        self.dims.validate()?;
        self.thermal.validate()?;
        self.elastic.validate()?;
        self.refinement.validate()?;
        self.sweep.validate()?;
        for l in &self.mesh_study.levels {
            l.validate()?;
        }
        if self.profile_samples < crate::signature::MIN_SAMPLES {
            return Err(Error::param("too few profile samples"));
        }
        if self.slice_samples.iter().any(|&s| s < 2) {
            return Err(Error::param("slice needs at least 2x2 samples"));
        }
        if !(self.rbf.width > 0.0 && self.rbf.ridge >= 0.0) {
            return Err(Error::param("invalid RBF parameters"));
        }
        for family in ShapeFamily::ALL {
            for n in self.sweep.values() {
                place_prism(&self.shape(family, n), &self.dims)?;
            }
        }
        Ok(())
    }

    pub fn shape(&self, family: ShapeFamily, n: u32) -> TumorShape {
        TumorShape {
            family,
            n,
            base_area: self.tumor.base_area,
            inner_radius: self.tumor.inner_radius,
            top_depth: self.tumor.top_depth,
            prism_height: self.tumor.prism_height,
        }
    }

    pub fn geometry(&self, family: ShapeFamily, n: u32) -> Result<GeometrySpec> {
        place_prism(&self.shape(family, n), &self.dims)
    }

    /// Refinement box shared by every model: the union of the per-model
    /// boxes over both families and the whole sweep, so all models are
    /// solved on one grid.
    pub fn refinement_envelope(&self) -> Result<Aabb> {
        let mut radius: f64 = 0.0;
        for n in self.sweep.values() {
            radius = radius.max(regular_circumradius(n, self.tumor.base_area));
            radius = radius.max(star_outer_radius(n, self.tumor.inner_radius, self.tumor.base_area)?);
        }
        let (cx, cy) = (0.5 * self.dims.x_len, 0.5 * self.dims.y_len);
        let z_max = self.dims.z_len - self.tumor.top_depth;
        let z_min = z_max - self.tumor.prism_height;
        Ok(Aabb {
            lo: [cx - radius, cy - radius, z_min],
            hi: [cx + radius, cy + radius, z_max],
        }
        .expanded(REFINEMENT_MARGIN))
    }

    /// Hex digest of the settings that affect model results.
    pub fn model_hash(&self) -> String {
        let key = serde_json::json!({
            "dims": self.dims,
            "tumor": self.tumor,
            "thermal": self.thermal,
            "elastic": self.elastic,
            "compression": self.compression,
            "solver": self.solver,
            "refinement": self.refinement,
            "sweep": self.sweep,
            "calibration": self.calibration,
            "profile_samples": self.profile_samples,
            "slice_samples": self.slice_samples,
        });
        let digest = Sha256::digest(key.to_string().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}
