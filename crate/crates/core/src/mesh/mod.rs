//! Structured tetrahedral meshes of the tissue block.
//!
//! A graded tensor-product hexahedral grid is split into six tetrahedra per
//! cell. The split of cell `(i, j, k)` is the Kuhn split along the main
//! diagonal starting at corner `(i % 2, j % 2, k % 2)`; neighbouring cells
//! are mirror images of each other, so the mesh is conforming and, for an
//! even number of cells per axis, mirror symmetric about the block centre.
//!
//! Tumour tissue is not meshed conformally. Each tetrahedron carries a
//! centroid-based material label and the exact integrals of its barycentric
//! functions over its overlap with the tumour prism.

mod clip;
mod grid;
mod io;
mod quality;

pub use io::write_mesh;
pub use quality::{mesh_quality, QualityReport};

pub(crate) use clip::{barycentric, signed_volume};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::GeometrySpec;
use crate::par;
use clip::PrismClipper;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Material {
    Tissue,
    Tumor,
}

impl Material {
    pub fn as_str(&self) -> &'static str {
        match self {
            Material::Tissue => "tissue",
            Material::Tumor => "tumor",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FaceTag {
    Top,
    Bottom,
    SideX0,
    SideX1,
    SideY0,
    SideY1,
}

impl FaceTag {
    pub const ALL: [FaceTag; 6] = [
        FaceTag::Top,
        FaceTag::Bottom,
        FaceTag::SideX0,
        FaceTag::SideX1,
        FaceTag::SideY0,
        FaceTag::SideY1,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            FaceTag::Top => "top",
            FaceTag::Bottom => "bottom",
            FaceTag::SideX0 => "side_x0",
            FaceTag::SideX1 => "side_x1",
            FaceTag::SideY0 => "side_y0",
            FaceTag::SideY1 => "side_y1",
        }
    }
}

/// Boundary triangle, nodes ordered so the normal points out of the block.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundaryFace {
    pub nodes: [usize; 3],
    pub tag: FaceTag,
}

/// Grid subdivision: base cell counts per axis plus a refinement multiplier
/// applied inside the box around the tumour.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RefinementSpec {
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
    pub local_factor: usize,
}

impl RefinementSpec {
    pub fn uniform(nx: usize, ny: usize, nz: usize) -> Self {
        Self {
            nx,
            ny,
            nz,
            local_factor: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.nx == 0 || self.ny == 0 || self.nz == 0 || self.local_factor == 0 {
            return Err(Error::param(format!("degenerate refinement {self:?}")));
        }
        Ok(())
    }
}

impl Default for RefinementSpec {
    /// About 22k elements on the default block.
    fn default() -> Self {
        Self {
            nx: 20,
            ny: 10,
            nz: 4,
            local_factor: 2,
        }
    }
}

/// Axis-aligned box, mm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    pub lo: [f64; 3],
    pub hi: [f64; 3],
}

impl Aabb {
    pub fn expanded(&self, margin: f64) -> Aabb {
        Aabb {
            lo: self.lo.map(|v| v - margin),
            hi: self.hi.map(|v| v + margin),
        }
    }

    pub fn union(&self, other: &Aabb) -> Aabb {
        Aabb {
            lo: [0, 1, 2].map(|k| self.lo[k].min(other.lo[k])),
            hi: [0, 1, 2].map(|k| self.hi[k].max(other.hi[k])),
        }
    }
}

/// Margin added around the tumour bounding box for the refinement box, mm.
pub const REFINEMENT_MARGIN: f64 = 5.0;

#[derive(Debug, Clone)]
pub struct TetMesh {
    pub nodes: Vec<[f64; 3]>,
    pub tets: Vec<[usize; 4]>,
    pub material: Vec<Material>,
    pub faces: Vec<BoundaryFace>,
    /// Per tet, `∫_{tet ∩ tumour} λ_i dV` for its four barycentric functions, mm³.
    pub occupancy: Vec<[f64; 4]>,
    /// Hexahedral cells per axis of the generating grid.
    pub cells: [usize; 3],
}

impl TetMesh {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn tet_count(&self) -> usize {
        self.tets.len()
    }

    pub fn tet_points(&self, e: usize) -> [[f64; 3]; 4] {
        self.tets[e].map(|n| self.nodes[n])
    }

    pub fn tet_volume(&self, e: usize) -> f64 {
        signed_volume(&self.tet_points(e))
    }

    pub fn total_volume(&self) -> f64 {
        par::sum_by(self.tets.len(), |e| self.tet_volume(e))
    }

    /// Volume of tets labelled [`Material::Tumor`].
    pub fn tumor_labeled_volume(&self) -> f64 {
        par::sum_by(self.tets.len(), |e| {
            if self.material[e] == Material::Tumor {
                self.tet_volume(e)
            } else {
                0.0
            }
        })
    }

    /// Exact tumour volume represented by the overlap integrals.
    pub fn tumor_overlap_volume(&self) -> f64 {
        par::sum_by(self.tets.len(), |e| self.occupancy[e].iter().sum())
    }

    /// Fraction of tet `e` occupied by tumour.
    pub fn tumor_fraction(&self, e: usize) -> f64 {
        let v = self.tet_volume(e);
        (self.occupancy[e].iter().sum::<f64>() / v).clamp(0.0, 1.0)
    }

    /// Sorted node indices lying on faces with the given tag.
    pub fn tagged_nodes(&self, tag: FaceTag) -> Vec<usize> {
        let mut v: Vec<usize> = self
            .faces
            .iter()
            .filter(|f| f.tag == tag)
            .flat_map(|f| f.nodes)
            .collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    pub fn bounds(&self) -> Aabb {
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for p in &self.nodes {
            for k in 0..3 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        Aabb { lo, hi }
    }
}

/// Refinement box for a geometry: tumour bounding box grown by
/// [`REFINEMENT_MARGIN`]; `None` without a tumour.
pub fn refinement_box(geom: &GeometrySpec) -> Option<Aabb> {
    geom.tumor.as_ref().map(|t| {
        let (lo, hi) = t.bbox();
        Aabb { lo, hi }.expanded(REFINEMENT_MARGIN)
    })
}

/// Builds the mesh refined around the geometry's own tumour.
pub fn build_mesh(geom: &GeometrySpec, refinement: &RefinementSpec) -> Result<TetMesh> {
    build_mesh_with_focus(geom, refinement, refinement_box(geom))
}

/// Builds the mesh with an explicit refinement box.
///
/// Sweeps pass the envelope of all tumours in the sweep so every model is
/// solved on an identical grid.
pub fn build_mesh_with_focus(
    geom: &GeometrySpec,
    refinement: &RefinementSpec,
    focus: Option<Aabb>,
) -> Result<TetMesh> {
    geom.dims.validate()?;
    refinement.validate()?;
    let d = geom.dims;
    let factor = refinement.local_factor;
    let clamp = |k: usize, lo: f64, hi: f64| -> Option<(f64, f64)> {
        let len = d.extent()[k];
        let (a, b) = (lo.max(0.0), hi.min(len));
        (b > a).then_some((a, b))
    };
    let axes: [Vec<f64>; 3] = match (&geom.tumor, focus) {
        (Some(t), focus) => {
            let rx = focus.and_then(|f| clamp(0, f.lo[0], f.hi[0]));
            let ry = focus.and_then(|f| clamp(1, f.lo[1], f.hi[1]));
            let rz = focus.and_then(|f| clamp(2, f.lo[2], f.hi[2]));
            let xb: Vec<f64> = rx.map(|(a, b)| vec![a, b]).unwrap_or_default();
            let yb: Vec<f64> = ry.map(|(a, b)| vec![a, b]).unwrap_or_default();
            [
                grid::mirrored_axis_nodes(d.x_len, refinement.nx, &xb, rx, factor),
                grid::mirrored_axis_nodes(d.y_len, refinement.ny, &yb, ry, factor),
                grid::axis_nodes(0.0, d.z_len, refinement.nz, &[t.z_min, t.z_max], rz, factor),
            ]
        }
        (None, focus) => {
            let r = [0, 1, 2].map(|k| focus.and_then(|f| clamp(k, f.lo[k], f.hi[k])));
            [
                grid::axis_nodes(0.0, d.x_len, refinement.nx, &[], r[0], factor),
                grid::axis_nodes(0.0, d.y_len, refinement.ny, &[], r[1], factor),
                grid::axis_nodes(0.0, d.z_len, refinement.nz, &[], r[2], factor),
            ]
        }
    };
    let mut mesh = structured_tets(&axes);
    if let Some(t) = &geom.tumor {
        let clipper = PrismClipper::new(t);
        let labelled: Vec<(Material, [f64; 4])> = par::map_range(mesh.tets.len(), |e| {
            let pts = mesh.tet_points(e);
            let m = if clipper.contains_centroid(t, &pts) {
                Material::Tumor
            } else {
                Material::Tissue
            };
            (m, clipper.nodal_integrals(&pts))
        });
        for (e, (m, occ)) in labelled.into_iter().enumerate() {
            mesh.material[e] = m;
            mesh.occupancy[e] = occ;
        }
    }
    Ok(mesh)
}

/// Path corners of the six Kuhn tetrahedra from local corner `c` to `1 - c`.
const AXIS_ORDERS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];

fn structured_tets(axes: &[Vec<f64>; 3]) -> TetMesh {
    let (nx, ny, nz) = (axes[0].len() - 1, axes[1].len() - 1, axes[2].len() - 1);
    let id = |i: usize, j: usize, k: usize| i + (nx + 1) * (j + (ny + 1) * k);
    let mut nodes = Vec::with_capacity((nx + 1) * (ny + 1) * (nz + 1));
    for &z in &axes[2] {
        for &y in &axes[1] {
            for &x in &axes[0] {
                nodes.push([x, y, z]);
            }
        }
    }

    let mut tets = Vec::with_capacity(6 * nx * ny * nz);
    for k in 0..nz {
        for j in 0..ny {
            for i in 0..nx {
                let start = [i % 2, j % 2, k % 2];
                for order in AXIS_ORDERS {
                    let mut corner = start;
                    let mut tet = [0usize; 4];
                    tet[0] = id(i + corner[0], j + corner[1], k + corner[2]);
                    for (s, &ax) in order.iter().enumerate() {
                        corner[ax] = 1 - corner[ax];
                        tet[s + 1] = id(i + corner[0], j + corner[1], k + corner[2]);
                    }
                    if signed_volume(&tet.map(|n| nodes[n])) < 0.0 {
                        tet.swap(2, 3);
                    }
                    tets.push(tet);
                }
            }
        }
    }

    let ijk = |n: usize| (n % (nx + 1), (n / (nx + 1)) % (ny + 1), n / ((nx + 1) * (ny + 1)));
    let on_plane = |f: &[usize; 3], tag: FaceTag| {
        f.iter().all(|&n| {
            let (i, j, k) = ijk(n);
            match tag {
                FaceTag::SideX0 => i == 0,
                FaceTag::SideX1 => i == nx,
                FaceTag::SideY0 => j == 0,
                FaceTag::SideY1 => j == ny,
                FaceTag::Bottom => k == 0,
                FaceTag::Top => k == nz,
            }
        })
    };
    let mut faces = Vec::new();
    for t in &tets {
        let [a, b, c, d] = *t;
        for f in [[a, c, b], [a, b, d], [a, d, c], [b, c, d]] {
            if let Some(tag) = FaceTag::ALL.into_iter().find(|&tag| on_plane(&f, tag)) {
                faces.push(BoundaryFace { nodes: f, tag });
            }
        }
    }

    let ne = tets.len();
    TetMesh {
        nodes,
        tets,
        material: vec![Material::Tissue; ne],
        faces,
        occupancy: vec![[0.0; 4]; ne],
        cells: [nx, ny, nz],
    }
}
