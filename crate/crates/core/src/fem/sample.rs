//! Point location and interpolation of nodal fields.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::heat::ScalarField;
use crate::error::{Error, Result};
use crate::mesh::{barycentric, TetMesh};

/// Barycentric slack accepted when locating points on element faces.
const LOCATE_TOL: f64 = 1e-9;

/// Bucket grid over element bounding boxes.
pub struct PointLocator<'a> {
    mesh: &'a TetMesh,
    lo: [f64; 3],
    size: [f64; 3],
    dims: [usize; 3],
    buckets: Vec<Vec<u32>>,
}

impl<'a> PointLocator<'a> {
    pub fn new(mesh: &'a TetMesh) -> Self {
        let b = mesh.bounds();
        let ext = [0, 1, 2].map(|k| (b.hi[k] - b.lo[k]).max(1e-12));
        let target = (mesh.tet_count() as f64 / 4.0).max(1.0);
        let unit = (ext[0] * ext[1] * ext[2] / target).cbrt();
        let dims = ext.map(|e| ((e / unit).ceil() as usize).clamp(1, 256));
        let size = [0, 1, 2].map(|k| ext[k] / dims[k] as f64);
        let mut buckets = vec![Vec::new(); dims[0] * dims[1] * dims[2]];
        for e in 0..mesh.tet_count() {
            let pts = mesh.tet_points(e);
            let mut lo = [usize::MAX; 3];
            let mut hi = [0usize; 3];
            for p in &pts {
                for k in 0..3 {
                    let c = Self::cell_coord(p[k], b.lo[k], size[k], dims[k]);
                    lo[k] = lo[k].min(c);
                    hi[k] = hi[k].max(c);
                }
            }
            for z in lo[2]..=hi[2] {
                for y in lo[1]..=hi[1] {
                    for x in lo[0]..=hi[0] {
                        buckets[x + dims[0] * (y + dims[1] * z)].push(e as u32);
                    }
                }
            }
        }
        Self {
            mesh,
            lo: b.lo,
            size,
            dims,
            buckets,
        }
    }

    fn cell_coord(v: f64, lo: f64, size: f64, dim: usize) -> usize {
        (((v - lo) / size).floor().max(0.0) as usize).min(dim - 1)
    }

    /// Containing element and barycentric coordinates. When several elements
    /// qualify (shared faces) the most interior one wins, lowest index on ties.
    pub fn locate(&self, p: [f64; 3]) -> Option<(usize, [f64; 4])> {
        let mut idx = [0usize; 3];
        for k in 0..3 {
            let rel = (p[k] - self.lo[k]) / self.size[k];
            if rel < -1e-9 || rel > self.dims[k] as f64 + 1e-9 {
                return None;
            }
            idx[k] = Self::cell_coord(p[k], self.lo[k], self.size[k], self.dims[k]);
        }
        let bucket = &self.buckets[idx[0] + self.dims[0] * (idx[1] + self.dims[1] * idx[2])];
        let mut best: Option<(usize, [f64; 4], f64)> = None;
        for &e in bucket {
            let e = e as usize;
            let lam = barycentric(&self.mesh.tet_points(e), &p);
            let worst = lam.iter().copied().fold(f64::INFINITY, f64::min);
            if worst >= -LOCATE_TOL && best.as_ref().is_none_or(|b| worst > b.2) {
                best = Some((e, lam, worst));
            }
        }
        best.map(|(e, lam, _)| (e, lam))
    }

    pub fn interpolate(&self, field: &ScalarField, p: [f64; 3]) -> Option<f64> {
        self.locate(p).map(|(e, lam)| {
            let t = self.mesh.tets[e];
            (0..4).map(|a| lam[a] * field.values[t[a]]).sum()
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub fn index(&self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
        }
    }

    /// The two in-plane axes `(u, v)` of a plane normal to `self`.
    pub fn in_plane(&self) -> (Axis, Axis) {
        match self {
            Axis::X => (Axis::Y, Axis::Z),
            Axis::Y => (Axis::X, Axis::Z),
            Axis::Z => (Axis::X, Axis::Y),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Axis::X => "x",
            Axis::Y => "y",
            Axis::Z => "z",
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "x" | "X" => Ok(Axis::X),
            "y" | "Y" => Ok(Axis::Y),
            "z" | "Z" => Ok(Axis::Z),
            other => Err(Error::param(format!("unknown axis '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlicePlane {
    pub axis: Axis,
    /// mm
    pub offset: f64,
}

/// Field sampled on a regular grid in a coordinate plane. `values` is
/// row-major with `u` fastest; points outside the mesh are NaN.
#[derive(Debug, Clone, PartialEq)]
pub struct SliceGrid {
    pub plane: SlicePlane,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub values: Vec<f64>,
}

impl SliceGrid {
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.u.len() + i]
    }

    /// Largest sampled value and its `(u, v)` position.
    pub fn argmax(&self) -> Option<(f64, f64, f64)> {
        let mut best: Option<(f64, f64, f64)> = None;
        for (j, &v) in self.v.iter().enumerate() {
            for (i, &u) in self.u.iter().enumerate() {
                let t = self.at(i, j);
                if t.is_finite() && best.is_none_or(|b| t > b.2) {
                    best = Some((u, v, t));
                }
            }
        }
        best
    }

    /// Writes one `<u>_mm,<v>_mm,T_celsius` row per grid point, `u` fastest.
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let (ua, va) = self.plane.axis.in_plane();
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record([format!("{ua}_mm"), format!("{va}_mm"), "T_celsius".to_string()])?;
        for (j, v) in self.v.iter().enumerate() {
            for (i, u) in self.u.iter().enumerate() {
                wr.write_record([format!("{u:?}"), format!("{v:?}"), format!("{:?}", self.at(i, j))])?;
            }
        }
        wr.flush().map_err(|e| Error::format("slice csv", e.to_string()))?;
        Ok(())
    }

    /// Reads the format written by [`SliceGrid::write_csv`].
    pub fn read_csv<R: std::io::Read>(plane: SlicePlane, r: R) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(r);
        let mut pts: Vec<(f64, f64, f64)> = Vec::new();
        for rec in rd.records() {
            let rec = rec?;
            let f = |k: usize| -> Result<f64> {
                rec.get(k)
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| Error::format("slice csv", format!("bad field {k} in {rec:?}")))
            };
            pts.push((f(0)?, f(1)?, f(2)?));
        }
        let nu = pts.iter().take_while(|p| p.1 == pts[0].1).count();
        if nu == 0 || !pts.len().is_multiple_of(nu) {
            return Err(Error::format("slice csv", "not a regular grid"));
        }
        Ok(Self {
            plane,
            u: pts[..nu].iter().map(|p| p.0).collect(),
            v: pts.iter().step_by(nu).map(|p| p.1).collect(),
            values: pts.iter().map(|p| p.2).collect(),
        })
    }
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![0.5 * (a + b)];
    }
    (0..n)
        .map(|i| if i + 1 == n { b } else { a + (b - a) * i as f64 / (n - 1) as f64 })
        .collect()
}

/// Samples `field` on an `nu × nv` grid spanning the mesh extent in `plane`.
pub fn surface_slice(
    mesh: &TetMesh,
    field: &ScalarField,
    plane: SlicePlane,
    nu: usize,
    nv: usize,
) -> Result<SliceGrid> {
    if field.values.len() != mesh.node_count() {
        return Err(Error::param("field does not match mesh"));
    }
    if nu < 2 || nv < 2 {
        return Err(Error::param("slice grid needs at least 2x2 samples"));
    }
    let b = mesh.bounds();
    let k = plane.axis.index();
    if !(plane.offset >= b.lo[k] && plane.offset <= b.hi[k]) {
        return Err(Error::param(format!(
            "plane {}={} outside mesh extent [{}, {}]",
            plane.axis, plane.offset, b.lo[k], b.hi[k]
        )));
    }
    let (ua, va) = plane.axis.in_plane();
    let (ui, vi) = (ua.index(), va.index());
    let u = linspace(b.lo[ui], b.hi[ui], nu);
    let v = linspace(b.lo[vi], b.hi[vi], nv);
    let locator = PointLocator::new(mesh);
    let values = crate::par::map_range(nu * nv, |idx| {
        let (i, j) = (idx % nu, idx / nu);
        let mut p = [0.0; 3];
        p[k] = plane.offset;
        p[ui] = u[i];
        p[vi] = v[j];
        locator.interpolate(field, p).unwrap_or(f64::NAN)
    });
    Ok(SliceGrid { plane, u, v, values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::heat::{solve_heat, ThermalParams};
    use crate::geometry::{place_prism, ShapeFamily, TissueDims, TumorShape};
    use crate::mesh::{build_mesh, RefinementSpec};

    fn mesh() -> TetMesh {
        let shape = TumorShape {
            family: ShapeFamily::RegularPolygon,
            n: 10,
            base_area: 400.0,
            inner_radius: 10.0,
            top_depth: 12.0,
            prism_height: 8.0,
        };
        build_mesh(&place_prism(&shape, &TissueDims::default()).unwrap(), &RefinementSpec { nx: 12, ny: 6, nz: 4, local_factor: 2 }).unwrap()
    }

    #[test]
    fn node_sampling_reproduces_nodal_values() {
        let m = mesh();
        let field = ScalarField { values: m.nodes.iter().map(|p| (0.1 * p[0]).sin() + p[1] * p[2]).collect() };
        let loc = PointLocator::new(&m);
        for (i, p) in m.nodes.iter().enumerate().step_by(7) {
            let v = loc.interpolate(&field, *p).unwrap();
            assert!((v - field.values[i]).abs() < 1e-12, "node {i}");
        }
        assert!(loc.interpolate(&field, [-1.0, 5.0, 5.0]).is_none());
    }

    #[test]
    fn linear_fields_are_interpolated_exactly() {
        let m = mesh();
        let f = |p: &[f64; 3]| 2.0 * p[0] - 0.5 * p[1] + 3.0 * p[2] + 1.0;
        let field = ScalarField { values: m.nodes.iter().map(f).collect() };
        let loc = PointLocator::new(&m);
        for p in [[1.3, 2.7, 3.1], [60.0, 30.0, 25.0], [119.9, 59.5, 0.0], [77.7, 12.3, 17.77]] {
            assert!((loc.interpolate(&field, p).unwrap() - f(&p)).abs() < 1e-9);
        }
    }

    #[test]
    fn constant_field_gives_constant_slice() {
        let m = mesh();
        let field = ScalarField::constant(m.node_count(), 31.5);
        let s = surface_slice(&m, &field, SlicePlane { axis: Axis::Y, offset: 30.0 }, 25, 9).unwrap();
        assert!(s.values.iter().all(|v| (v - 31.5).abs() < 1e-12));
        let bad = surface_slice(&m, &field, SlicePlane { axis: Axis::Z, offset: 40.0 }, 5, 5);
        assert!(matches!(bad, Err(Error::Parameter(_))));
    }

    #[test]
    fn mid_section_maximum_sits_over_the_tumour() {
        let m = mesh();
        let (t, _) = solve_heat(&m, &ThermalParams { t_ambient: 45.0, ..Default::default() }).unwrap();
        let s = surface_slice(&m, &t, SlicePlane { axis: Axis::Y, offset: 30.0 }, 121, 26).unwrap();
        let (x, _, _) = s.argmax().unwrap();
        let r = crate::geometry::regular_circumradius(10, 400.0);
        assert!((x - 60.0).abs() <= r, "max at x={x}");
    }
}
