//! Small-strain isotropic elasticity for the compression pre-load.
//!
//! The bottom face is clamped and the top face is pushed down by
//! `applied_strain · thickness` with its horizontal motion free. Tumour
//! stiffness enters through the element's tumour volume fraction, so the
//! displacement field changes continuously with the tumour shape.

use serde::{Deserialize, Serialize};

use super::heat::{shape_gradients, MM};
use super::sparse::{pcg, CsrMatrix, SolverOptions};
use crate::error::{Error, Result};
use crate::mesh::{FaceTag, TetMesh};
use crate::par;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ElasticParams {
    /// Pa
    pub e_tissue: f64,
    pub poisson: f64,
    /// Tumour Young's modulus relative to tissue.
    pub tumor_stiffness_factor: f64,
    /// Compressive strain imposed at the top face.
    pub applied_strain: f64,
}

impl Default for ElasticParams {
    fn default() -> Self {
        Self {
            e_tissue: 9210.87,
            poisson: 0.458344,
            tumor_stiffness_factor: 10.0,
            applied_strain: 0.06,
        }
    }
}

impl ElasticParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.e_tissue > 0.0) {
            return Err(Error::param("Young's modulus must be positive"));
        }
        if !(self.poisson >= 0.0 && self.poisson < 0.5) {
            return Err(Error::param(format!("Poisson ratio {} outside [0, 0.5)", self.poisson)));
        }
        if !(self.tumor_stiffness_factor > 0.0) {
            return Err(Error::param("tumour stiffness factor must be positive"));
        }
        if !(0.0..=0.2).contains(&self.applied_strain) {
            return Err(Error::param(format!("applied strain {} outside [0, 0.2]", self.applied_strain)));
        }
        Ok(())
    }
}

/// Nodal displacements, mm.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    pub values: Vec<[f64; 3]>,
}

impl VectorField {
    pub fn zeros(n: usize) -> Self {
        Self {
            values: vec![[0.0; 3]; n],
        }
    }
}

pub fn solve_elastic(mesh: &TetMesh, p: &ElasticParams) -> Result<VectorField> {
    solve_elastic_with(mesh, p, &SolverOptions::default())
}

pub fn solve_elastic_with(mesh: &TetMesh, p: &ElasticParams, opts: &SolverOptions) -> Result<VectorField> {
    p.validate()?;
    let n = mesh.node_count();
    if p.applied_strain == 0.0 {
        return Ok(VectorField::zeros(n));
    }
    let bottom = mesh.tagged_nodes(FaceTag::Bottom);
    let top = mesh.tagged_nodes(FaceTag::Top);
    if bottom.is_empty() || top.is_empty() {
        return Err(Error::Singular("compression needs tagged top and bottom faces".into()));
    }
    let b = mesh.bounds();
    let thickness = b.hi[2] - b.lo[2];
    let u_top = -p.applied_strain * thickness * MM;

    let nu = p.poisson;
    let local: Vec<[[f64; 12]; 12]> = par::map_range(mesh.tet_count(), |e| {
        let (g, vol) = shape_gradients(&mesh.tet_points(e));
        let young = p.e_tissue * (1.0 + (p.tumor_stiffness_factor - 1.0) * mesh.tumor_fraction(e));
        let lambda = young * nu / ((1.0 + nu) * (1.0 - 2.0 * nu));
        let mu = young / (2.0 * (1.0 + nu));
        let mut ke = [[0.0; 12]; 12];
        for a in 0..4 {
            for c in 0..4 {
                let gg = g[a].dot(&g[c]);
                for i in 0..3 {
                    for j in 0..3 {
                        let mut v = lambda * g[a][i] * g[c][j] + mu * g[a][j] * g[c][i];
                        if i == j {
                            v += mu * gg;
                        }
                        ke[3 * a + i][3 * c + j] = vol * v;
                    }
                }
            }
        }
        ke
    });
    let mut k = CsrMatrix::from_tets(n, &mesh.tets, 3);
    for (t, ke) in mesh.tets.iter().zip(&local) {
        for a in 0..4 {
            for c in 0..4 {
                for i in 0..3 {
                    for j in 0..3 {
                        k.add(3 * t[a] + i, 3 * t[c] + j, ke[3 * a + i][3 * c + j]);
                    }
                }
            }
        }
    }

    let mut fixed = vec![None; 3 * n];
    for &i in &top {
        fixed[3 * i + 2] = Some(u_top);
    }
    for &i in &bottom {
        for c in 0..3 {
            fixed[3 * i + c] = Some(0.0);
        }
    }
    let rhs = vec![0.0; 3 * n];
    let (reduced, rhs, free) = k.eliminate(&rhs, &fixed);
    let mut x = vec![0.0; free.len()];
    pcg(&reduced, &rhs, &mut x, opts)?;

    let mut u: Vec<f64> = fixed.iter().map(|f| f.unwrap_or(0.0)).collect();
    for (r, &i) in free.iter().enumerate() {
        u[i] = x[r];
    }
    Ok(VectorField {
        values: (0..n).map(|i| [u[3 * i] / MM, u[3 * i + 1] / MM, u[3 * i + 2] / MM]).collect(),
    })
}

/// `∫ div u dV`, mm³: the small-strain estimate of the volume change.
pub fn divergence_integral(mesh: &TetMesh, u: &VectorField) -> f64 {
    par::sum_by(mesh.tet_count(), |e| {
        let (g, vol) = shape_gradients(&mesh.tet_points(e));
        let t = mesh.tets[e];
        let div: f64 = (0..4).map(|a| (0..3).map(|i| g[a][i] * u.values[t[a]][i] * MM).sum::<f64>()).sum();
        div * vol / (MM * MM * MM)
    })
}
