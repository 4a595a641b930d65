//! Steady heat conduction with a tumour heat source.
//!
//! Solves `∇·(k∇T) + q = 0` with `T = t_bottom` on the bottom face, the
//! convective condition `-k ∂T/∂n = h (T - t_ambient)` on the top face and
//! insulated sides. The source is integrated exactly over the tumour overlap
//! of every element, so the load vector varies smoothly with tumour shape.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use super::sparse::{pcg, CsrMatrix, SolveStats, SolverOptions};
use crate::error::{Error, Result};
use crate::mesh::{FaceTag, TetMesh};
use crate::par;

/// mm → m.
pub(crate) const MM: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThermalParams {
    /// W/(m·K)
    pub k_tissue: f64,
    /// W/(m·K)
    pub k_tumor: f64,
    /// W/m³
    pub q_tumor: f64,
    /// W/(m²·K)
    pub h_top: f64,
    /// °C
    pub t_ambient: f64,
    /// °C
    pub t_bottom: f64,
}

impl Default for ThermalParams {
    fn default() -> Self {
        Self {
            k_tissue: 0.6,
            k_tumor: 0.6,
            q_tumor: 1.0e5,
            h_top: 20.0,
            t_ambient: 24.0,
            t_bottom: 33.1,
        }
    }
}

impl ThermalParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.k_tissue > 0.0 && self.k_tumor > 0.0) {
            return Err(Error::param("conductivities must be positive"));
        }
        if !(self.h_top >= 0.0) {
            return Err(Error::param("convection coefficient must be non-negative"));
        }
        for v in [self.q_tumor, self.t_ambient, self.t_bottom] {
            if !v.is_finite() {
                return Err(Error::param("thermal parameters must be finite"));
            }
        }
        Ok(())
    }
}

/// Nodal temperatures, °C.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    pub values: Vec<f64>,
}

impl ScalarField {
    pub fn constant(n: usize, v: f64) -> Self {
        Self { values: vec![v; n] }
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Writes `node_index,x_mm,y_mm,z_mm,T_celsius` rows at the mesh's nodes.
    pub fn write_csv<W: std::io::Write>(&self, mesh: &TetMesh, w: W) -> Result<()> {
        if self.values.len() != mesh.node_count() {
            return Err(Error::param("field does not match mesh"));
        }
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["node_index", "x_mm", "y_mm", "z_mm", "T_celsius"])?;
        for (i, (p, t)) in mesh.nodes.iter().zip(&self.values).enumerate() {
            wr.write_record([
                i.to_string(),
                format!("{:?}", p[0]),
                format!("{:?}", p[1]),
                format!("{:?}", p[2]),
                format!("{t:?}"),
            ])?;
        }
        wr.flush().map_err(|e| Error::format("field csv", e.to_string()))?;
        Ok(())
    }
}

/// Gradients of the four barycentric functions of a tet (m⁻¹) and its volume (m³).
pub(crate) fn shape_gradients(p: &[[f64; 3]; 4]) -> ([Vector3<f64>; 4], f64) {
    let col = |k: usize| Vector3::new(p[k][0] - p[0][0], p[k][1] - p[0][1], p[k][2] - p[0][2]) * MM;
    let j = Matrix3::from_columns(&[col(1), col(2), col(3)]);
    let vol = j.determinant() / 6.0;
    let inv = j.try_inverse().unwrap_or_else(Matrix3::zeros);
    let g1 = inv.row(0).transpose();
    let g2 = inv.row(1).transpose();
    let g3 = inv.row(2).transpose();
    ([-(g1 + g2 + g3), g1, g2, g3], vol)
}

fn triangle_area_m2(mesh: &TetMesh, nodes: [usize; 3]) -> f64 {
    let [a, b, c] = nodes.map(|n| Vector3::from(mesh.nodes[n]) * MM);
    0.5 * (b - a).cross(&(c - a)).norm()
}

/// Assembled linear system before Dirichlet elimination.
pub(crate) struct HeatSystem {
    pub(crate) matrix: CsrMatrix,
    pub(crate) rhs: Vec<f64>,
    /// Source part of the right-hand side, W.
    pub(crate) source: Vec<f64>,
}

pub(crate) fn assemble_heat(mesh: &TetMesh, p: &ThermalParams) -> HeatSystem {
    let n = mesh.node_count();
    let mut matrix = CsrMatrix::from_tets(n, &mesh.tets, 1);
    let local: Vec<[[f64; 4]; 4]> = par::map_range(mesh.tet_count(), |e| {
        let (g, vol) = shape_gradients(&mesh.tet_points(e));
        let frac = mesh.tumor_fraction(e);
        let k = p.k_tissue + (p.k_tumor - p.k_tissue) * frac;
        let mut ke = [[0.0; 4]; 4];
        for a in 0..4 {
            for b in 0..4 {
                ke[a][b] = k * vol * g[a].dot(&g[b]);
            }
        }
        ke
    });
    for (t, ke) in mesh.tets.iter().zip(&local) {
        for a in 0..4 {
            for b in 0..4 {
                matrix.add(t[a], t[b], ke[a][b]);
            }
        }
    }

    let mut source = vec![0.0; n];
    let m3 = MM * MM * MM;
    for (t, occ) in mesh.tets.iter().zip(&mesh.occupancy) {
        for a in 0..4 {
            source[t[a]] += p.q_tumor * occ[a] * m3;
        }
    }
    let mut rhs = source.clone();

    if p.h_top > 0.0 {
        for f in mesh.faces.iter().filter(|f| f.tag == FaceTag::Top) {
            let area = triangle_area_m2(mesh, f.nodes);
            for a in 0..3 {
                rhs[f.nodes[a]] += p.h_top * p.t_ambient * area / 3.0;
                for b in 0..3 {
                    let m = if a == b { 2.0 } else { 1.0 };
                    matrix.add(f.nodes[a], f.nodes[b], p.h_top * area * m / 12.0);
                }
            }
        }
    }
    HeatSystem { matrix, rhs, source }
}

/// Solves the steady heat problem on `mesh`.
pub fn solve_heat(mesh: &TetMesh, p: &ThermalParams) -> Result<(ScalarField, SolveStats)> {
    solve_heat_with(mesh, p, &SolverOptions::default())
}

pub fn solve_heat_with(
    mesh: &TetMesh,
    p: &ThermalParams,
    opts: &SolverOptions,
) -> Result<(ScalarField, SolveStats)> {
    p.validate()?;
    let bottom = mesh.tagged_nodes(FaceTag::Bottom);
    if bottom.is_empty() && p.h_top == 0.0 {
        return Err(Error::Singular(
            "no Dirichlet nodes and zero convection: temperature is undetermined".into(),
        ));
    }
    let sys = assemble_heat(mesh, p);
    let mut fixed = vec![None; mesh.node_count()];
    for &i in &bottom {
        fixed[i] = Some(p.t_bottom);
    }
    let (reduced, rhs, free) = sys.matrix.eliminate(&sys.rhs, &fixed);
    // start from the bottom temperature; the reduced system only sees the correction
    let mut x = vec![p.t_bottom; free.len()];
    let stats = pcg(&reduced, &rhs, &mut x, opts)?;
    let mut values: Vec<f64> = fixed.iter().map(|f| f.unwrap_or(0.0)).collect();
    for (r, &i) in free.iter().enumerate() {
        values[i] = x[r];
    }
    Ok((ScalarField { values }, stats))
}

/// Heat budget of a solved field, W.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HeatBalance {
    pub generated: f64,
    /// Convective loss through the top face.
    pub top_outflow: f64,
    /// Conductive loss through the bottom face (negative when heat enters).
    pub bottom_outflow: f64,
}

impl HeatBalance {
    /// `|generated - outflow| / generated`.
    pub fn relative_error(&self) -> f64 {
        (self.generated - self.top_outflow - self.bottom_outflow).abs() / self.generated.abs()
    }
}

pub fn heat_balance(mesh: &TetMesh, p: &ThermalParams, field: &ScalarField) -> HeatBalance {
    let sys = assemble_heat(mesh, p);
    let residual = sys.matrix.mul_vec(&field.values);
    let bottom_outflow = -mesh
        .tagged_nodes(FaceTag::Bottom)
        .iter()
        .map(|&i| residual[i] - sys.rhs[i])
        .sum::<f64>();
    let top_outflow = mesh
        .faces
        .iter()
        .filter(|f| f.tag == FaceTag::Top)
        .map(|f| {
            let mean = f.nodes.iter().map(|&i| field.values[i]).sum::<f64>() / 3.0;
            p.h_top * triangle_area_m2(mesh, f.nodes) * (mean - p.t_ambient)
        })
        .sum();
    HeatBalance {
        generated: sys.source.iter().sum(),
        top_outflow,
        bottom_outflow,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{place_prism, GeometrySpec, ShapeFamily, TissueDims, TumorShape};
    use crate::mesh::{build_mesh, RefinementSpec};

    fn decagon_mesh(r: RefinementSpec) -> TetMesh {
        let shape = TumorShape {
            family: ShapeFamily::RegularPolygon,
            n: 10,
            base_area: 400.0,
            inner_radius: 10.0,
            top_depth: 12.0,
            prism_height: 8.0,
        };
        build_mesh(&place_prism(&shape, &TissueDims::default()).unwrap(), &r).unwrap()
    }

    #[test]
    fn no_source_no_convection_gives_constant_field() {
        let mesh = decagon_mesh(RefinementSpec { nx: 8, ny: 4, nz: 3, local_factor: 1 });
        let p = ThermalParams { q_tumor: 0.0, h_top: 0.0, ..Default::default() };
        let (t, _) = solve_heat(&mesh, &p).unwrap();
        assert!(t.values.iter().all(|v| (v - 33.1).abs() < 1e-12));
    }

    #[test]
    fn missing_dirichlet_and_convection_is_singular() {
        let mut mesh = decagon_mesh(RefinementSpec { nx: 4, ny: 2, nz: 2, local_factor: 1 });
        mesh.faces.retain(|f| f.tag != FaceTag::Bottom);
        let p = ThermalParams { h_top: 0.0, ..Default::default() };
        assert!(matches!(solve_heat(&mesh, &p), Err(Error::Singular(_))));
    }

    #[test]
    fn maximum_principle_without_source() {
        let mesh = decagon_mesh(RefinementSpec { nx: 10, ny: 6, nz: 4, local_factor: 2 });
        let p = ThermalParams { q_tumor: 0.0, ..Default::default() };
        let (t, _) = solve_heat(&mesh, &p).unwrap();
        let mut on_boundary = vec![false; mesh.node_count()];
        for f in &mesh.faces {
            for n in f.nodes {
                on_boundary[n] = true;
            }
        }
        let bmax = (0..mesh.node_count()).filter(|&i| on_boundary[i]).map(|i| t.values[i]).fold(f64::MIN, f64::max);
        let bmin = (0..mesh.node_count()).filter(|&i| on_boundary[i]).map(|i| t.values[i]).fold(f64::MAX, f64::min);
        assert!(t.max() <= bmax + 1e-9 && t.min() >= bmin - 1e-9);
    }

    #[test]
    fn larger_source_never_cools_any_node() {
        let mesh = decagon_mesh(RefinementSpec { nx: 10, ny: 6, nz: 4, local_factor: 2 });
        let p = ThermalParams::default();
        let (lo, _) = solve_heat(&mesh, &p).unwrap();
        let (hi, _) = solve_heat(&mesh, &ThermalParams { q_tumor: 2.0 * p.q_tumor, ..p }).unwrap();
        assert!(lo.values.iter().zip(&hi.values).all(|(a, b)| b >= &(a - 1e-9)));
    }

    #[test]
    fn energy_is_balanced() {
        let mesh = decagon_mesh(RefinementSpec::default());
        let p = ThermalParams::default();
        let (t, stats) = solve_heat(&mesh, &p).unwrap();
        assert!(stats.final_residual <= 1e-10);
        let b = heat_balance(&mesh, &p, &t);
        assert!((b.generated - 1e5 * 3200e-9).abs() < 1e-12);
        assert!(b.relative_error() < 1e-6, "{b:?}");
    }

    #[test]
    fn tumour_free_block_has_linear_profile() {
        let geom = GeometrySpec::empty(TissueDims::default()).unwrap();
        let mesh = build_mesh(&geom, &RefinementSpec::uniform(6, 3, 5)).unwrap();
        let p = ThermalParams::default();
        let (t, _) = solve_heat(&mesh, &p).unwrap();
        // series resistance: conduction through 25 mm plus convection
        let flux = (p.t_bottom - p.t_ambient) / (0.025 / p.k_tissue + 1.0 / p.h_top);
        for (i, node) in mesh.nodes.iter().enumerate() {
            let expect = p.t_bottom - flux * node[2] * MM / p.k_tissue;
            assert!((t.values[i] - expect).abs() < 1e-8);
        }
    }
}
