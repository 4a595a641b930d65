//! Tissue block and prismatic tumour geometry.
//!
//! Lengths are millimetres throughout. Tumour base polygons are generated
//! centred on the origin with a vertex on the +y axis and are translated to
//! the block footprint centre by [`place_prism`].

use std::f64::consts::PI;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Extent of the tissue cuboid, mm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TissueDims {
    pub x_len: f64,
    pub y_len: f64,
    pub z_len: f64,
}

impl Default for TissueDims {
    fn default() -> Self {
        Self {
            x_len: 120.0,
            y_len: 60.0,
            z_len: 25.0,
        }
    }
}

impl TissueDims {
    pub fn new(x_len: f64, y_len: f64, z_len: f64) -> Result<Self> {
        let d = Self { x_len, y_len, z_len };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("x_len", self.x_len), ("y_len", self.y_len), ("z_len", self.z_len)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::param(format!("tissue {name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    pub fn volume(&self) -> f64 {
        self.x_len * self.y_len * self.z_len
    }

    pub fn extent(&self) -> [f64; 3] {
        [self.x_len, self.y_len, self.z_len]
    }
}

/// Base-polygon family of the tumour prism.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ShapeFamily {
    #[serde(rename = "polygon")]
    RegularPolygon,
    #[serde(rename = "star")]
    StarPolygon,
}

impl ShapeFamily {
    pub const ALL: [ShapeFamily; 2] = [ShapeFamily::RegularPolygon, ShapeFamily::StarPolygon];

    pub fn as_str(&self) -> &'static str {
        match self {
            ShapeFamily::RegularPolygon => "polygon",
            ShapeFamily::StarPolygon => "star",
        }
    }
}

impl fmt::Display for ShapeFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ShapeFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "polygon" | "regular" | "regular-polygon" => Ok(ShapeFamily::RegularPolygon),
            "star" | "star-polygon" => Ok(ShapeFamily::StarPolygon),
            other => Err(Error::param(format!("unknown shape family '{other}'"))),
        }
    }
}

/// Parametric tumour prism: base family, side/wing count and placement depths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TumorShape {
    pub family: ShapeFamily,
    /// Sides of the regular polygon or wings of the star.
    pub n: u32,
    /// Base polygon area, mm².
    pub base_area: f64,
    /// Radius of the star's inner (reflex) vertices, mm. Unused for polygons.
    pub inner_radius: f64,
    /// Depth of the prism's top face below the tissue top surface, mm.
    pub top_depth: f64,
    /// Extrusion length of the prism, mm.
    pub prism_height: f64,
}

impl TumorShape {
    pub fn validate(&self) -> Result<()> {
        if self.n < 3 {
            return Err(Error::param(format!("tumour needs n >= 3, got {}", self.n)));
        }
        if !(self.base_area.is_finite() && self.base_area > 0.0) {
            return Err(Error::param(format!("base area must be positive, got {}", self.base_area)));
        }
        if !(self.top_depth.is_finite() && self.top_depth >= 0.0) {
            return Err(Error::param(format!("top depth must be non-negative, got {}", self.top_depth)));
        }
        if !(self.prism_height.is_finite() && self.prism_height > 0.0) {
            return Err(Error::param(format!(
                "prism height must be positive, got {}",
                self.prism_height
            )));
        }
        if self.family == ShapeFamily::StarPolygon {
            star_outer_radius(self.n, self.inner_radius, self.base_area)?;
        }
        Ok(())
    }

    /// Base polygon centred on the origin.
    pub fn base_polygon(&self) -> Result<Polygon2D> {
        match self.family {
            ShapeFamily::RegularPolygon => regular_polygon(self.n, self.base_area),
            ShapeFamily::StarPolygon => star_polygon(self.n, self.inner_radius, self.base_area),
        }
    }
}

/// Closed polygon with counter-clockwise vertices, mm.
#[derive(Debug, Clone, PartialEq)]
pub struct Polygon2D {
    vertices: Vec<[f64; 2]>,
}

impl Polygon2D {
    /// Requires at least three vertices in counter-clockwise order.
    pub fn new(vertices: Vec<[f64; 2]>) -> Result<Self> {
        if vertices.len() < 3 {
            return Err(Error::param("polygon needs at least 3 vertices"));
        }
        let p = Self { vertices };
        if !(p.signed_area() > 0.0) {
            return Err(Error::param("polygon must be counter-clockwise with positive area"));
        }
        Ok(p)
    }

    pub fn vertices(&self) -> &[[f64; 2]] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Edges as `(start, end)` pairs, closing back to the first vertex.
    pub fn edges(&self) -> impl Iterator<Item = ([f64; 2], [f64; 2])> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    /// Shoelace area (positive for counter-clockwise order).
    pub fn signed_area(&self) -> f64 {
        0.5 * self.edges().map(|(a, b)| a[0] * b[1] - b[0] * a[1]).sum::<f64>()
    }

    pub fn area(&self) -> f64 {
        self.signed_area().abs()
    }

    /// Largest vertex distance from the origin.
    pub fn max_radius(&self) -> f64 {
        self.vertices.iter().map(|v| v[0].hypot(v[1])).fold(0.0, f64::max)
    }

    /// `([xmin, ymin], [xmax, ymax])`.
    pub fn bbox(&self) -> ([f64; 2], [f64; 2]) {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for v in &self.vertices {
            for k in 0..2 {
                lo[k] = lo[k].min(v[k]);
                hi[k] = hi[k].max(v[k]);
            }
        }
        (lo, hi)
    }

    pub fn rotated(&self, angle: f64) -> Polygon2D {
        let (s, c) = angle.sin_cos();
        Polygon2D {
            vertices: self
                .vertices
                .iter()
                .map(|v| [c * v[0] - s * v[1], s * v[0] + c * v[1]])
                .collect(),
        }
    }

    pub fn translated(&self, d: [f64; 2]) -> Polygon2D {
        Polygon2D {
            vertices: self.vertices.iter().map(|v| [v[0] + d[0], v[1] + d[1]]).collect(),
        }
    }

    /// O(n²) check that no two non-adjacent edges intersect.
    pub fn is_simple(&self) -> bool {
        let n = self.vertices.len();
        let edges: Vec<_> = self.edges().collect();
        for i in 0..n {
            for j in (i + 1)..n {
                if j == i + 1 || (i == 0 && j == n - 1) {
                    continue;
                }
                if segments_intersect(edges[i], edges[j]) {
                    return false;
                }
            }
        }
        true
    }

    pub fn contains(&self, p: [f64; 2]) -> bool {
        point_in_polygon(p, self)
    }

    /// Writes `x_mm,y_mm` rows.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "x_mm,y_mm")?;
        for v in &self.vertices {
            writeln!(w, "{:?},{:?}", v[0], v[1])?;
        }
        Ok(())
    }
}

fn orient(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

fn segments_intersect(s: ([f64; 2], [f64; 2]), t: ([f64; 2], [f64; 2])) -> bool {
    let d1 = orient(t.0, t.1, s.0);
    let d2 = orient(t.0, t.1, s.1);
    let d3 = orient(s.0, s.1, t.0);
    let d4 = orient(s.0, s.1, t.1);
    ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
}

fn check_count(n: u32) -> Result<()> {
    if n < 3 {
        return Err(Error::param(format!("polygon needs n >= 3, got {n}")));
    }
    Ok(())
}

fn check_area(area: f64) -> Result<()> {
    if !(area.is_finite() && area > 0.0) {
        return Err(Error::param(format!("area must be positive, got {area}")));
    }
    Ok(())
}

/// Circumradius of the regular n-gon with the given area.
pub fn regular_circumradius(n: u32, area: f64) -> f64 {
    let n = f64::from(n);
    (2.0 * area / (n * (2.0 * PI / n).sin())).sqrt()
}

/// Outer vertex radius of an n-wing star with inner radius `r` and the given area.
///
/// Fails when the area is below `n r² sin(π/n)`, where the outer radius would
/// drop under the inner one.
pub fn star_outer_radius(n: u32, inner_radius: f64, area: f64) -> Result<f64> {
    check_count(n)?;
    check_area(area)?;
    if !(inner_radius.is_finite() && inner_radius > 0.0) {
        return Err(Error::param(format!("inner radius must be positive, got {inner_radius}")));
    }
    let s = (PI / f64::from(n)).sin();
    let min_area = f64::from(n) * inner_radius * inner_radius * s;
    if area < min_area * (1.0 - 1e-12) {
        return Err(Error::param(format!(
            "star area {area} below feasibility bound {min_area} for n={n}, r={inner_radius}"
        )));
    }
    Ok((area / (f64::from(n) * inner_radius * s)).max(inner_radius))
}

/// Regular n-gon of the given area, centred on the origin, first vertex on +y.
pub fn regular_polygon(n: u32, area: f64) -> Result<Polygon2D> {
    check_count(n)?;
    check_area(area)?;
    let r = regular_circumradius(n, area);
    let step = 2.0 * PI / f64::from(n);
    let vertices = (0..n)
        .map(|k| {
            let t = 0.5 * PI + step * f64::from(k);
            [r * t.cos(), r * t.sin()]
        })
        .collect();
    Polygon2D::new(vertices)
}

/// n-wing star of the given area with reflex vertices on a circle of radius
/// `inner_radius`; outer vertices alternate with inner ones, first outer
/// vertex on +y.
pub fn star_polygon(n: u32, inner_radius: f64, area: f64) -> Result<Polygon2D> {
    let outer = star_outer_radius(n, inner_radius, area)?;
    let half = PI / f64::from(n);
    let vertices = (0..2 * n)
        .map(|k| {
            let t = 0.5 * PI + half * f64::from(k);
            let r = if k % 2 == 0 { outer } else { inner_radius };
            [r * t.cos(), r * t.sin()]
        })
        .collect();
    Polygon2D::new(vertices)
}

/// Inside test with boundary points counted as inside.
///
/// Points within `1e-12` of the polygon's size from an edge are reported as
/// inside; everything else is decided by ray-crossing parity.
pub fn point_in_polygon(p: [f64; 2], poly: &Polygon2D) -> bool {
    let (lo, hi) = poly.bbox();
    let scale = (hi[0] - lo[0]).max(hi[1] - lo[1]).max(1.0);
    let tol = 1e-12 * scale;
    if p[0] < lo[0] - tol || p[0] > hi[0] + tol || p[1] < lo[1] - tol || p[1] > hi[1] + tol {
        return false;
    }
    let mut inside = false;
    for (a, b) in poly.edges() {
        if dist_to_segment(p, a, b) <= tol {
            return true;
        }
        if (a[1] > p[1]) != (b[1] > p[1]) {
            let x_cross = a[0] + (p[1] - a[1]) * (b[0] - a[0]) / (b[1] - a[1]);
            if p[0] < x_cross {
                inside = !inside;
            }
        }
    }
    inside
}

fn dist_to_segment(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let d = [b[0] - a[0], b[1] - a[1]];
    let len2 = d[0] * d[0] + d[1] * d[1];
    let t = if len2 > 0.0 {
        (((p[0] - a[0]) * d[0] + (p[1] - a[1]) * d[1]) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    (p[0] - a[0] - t * d[0]).hypot(p[1] - a[1] - t * d[1])
}

/// Tumour prism placed in the block: vertical axis, base centred on the footprint.
#[derive(Debug, Clone, PartialEq)]
pub struct PlacedPrism {
    pub shape: TumorShape,
    /// Base polygon in local coordinates (centred on the origin).
    pub polygon: Polygon2D,
    /// Footprint centre `(x, y)` in block coordinates.
    pub center: [f64; 2],
    pub z_min: f64,
    pub z_max: f64,
}

impl PlacedPrism {
    pub fn volume(&self) -> f64 {
        self.polygon.area() * (self.z_max - self.z_min)
    }

    pub fn contains(&self, p: [f64; 3]) -> bool {
        p[2] >= self.z_min
            && p[2] <= self.z_max
            && point_in_polygon([p[0] - self.center[0], p[1] - self.center[1]], &self.polygon)
    }

    /// Axis-aligned bounds of the prism, `(lo, hi)`.
    pub fn bbox(&self) -> ([f64; 3], [f64; 3]) {
        let (lo, hi) = self.polygon.bbox();
        (
            [lo[0] + self.center[0], lo[1] + self.center[1], self.z_min],
            [hi[0] + self.center[0], hi[1] + self.center[1], self.z_max],
        )
    }
}

/// Tissue block with an optional tumour prism.
#[derive(Debug, Clone, PartialEq)]
pub struct GeometrySpec {
    pub dims: TissueDims,
    pub tumor: Option<PlacedPrism>,
}

impl GeometrySpec {
    /// Tumour-free block.
    pub fn empty(dims: TissueDims) -> Result<Self> {
        dims.validate()?;
        Ok(Self { dims, tumor: None })
    }
}

/// Places the prism with a vertical axis, its top face `top_depth` below the
/// top surface and its base centred on the block footprint.
pub fn place_prism(shape: &TumorShape, dims: &TissueDims) -> Result<GeometrySpec> {
    dims.validate()?;
    shape.validate()?;
    let polygon = shape.base_polygon()?;
    let z_max = dims.z_len - shape.top_depth;
    let z_min = z_max - shape.prism_height;
    if !(z_min > 0.0 && shape.top_depth > 0.0) {
        return Err(Error::Placement(format!(
            "prism z-range [{z_min}, {z_max}] mm does not fit strictly inside thickness {}",
            dims.z_len
        )));
    }
    let center = [0.5 * dims.x_len, 0.5 * dims.y_len];
    let (lo, hi) = polygon.bbox();
    if !(lo[0] + center[0] > 0.0
        && hi[0] + center[0] < dims.x_len
        && lo[1] + center[1] > 0.0
        && hi[1] + center[1] < dims.y_len)
    {
        return Err(Error::Placement(format!(
            "base polygon (max radius {:.3} mm) exceeds the {}x{} mm footprint",
            polygon.max_radius(),
            dims.x_len,
            dims.y_len
        )));
    }
    Ok(GeometrySpec {
        dims: *dims,
        tumor: Some(PlacedPrism {
            shape: *shape,
            polygon,
            center,
            z_min,
            z_max,
        }),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn shape(family: ShapeFamily, n: u32) -> TumorShape {
        TumorShape {
            family,
            n,
            base_area: 400.0,
            inner_radius: 10.0,
            top_depth: 12.0,
            prism_height: 8.0,
        }
    }

    /// Independent oracle: total turning angle of p → vertices, in turns.
    fn winding_number(p: [f64; 2], poly: &Polygon2D) -> i64 {
        let mut total = 0.0;
        for (a, b) in poly.edges() {
            let a = [a[0] - p[0], a[1] - p[1]];
            let b = [b[0] - p[0], b[1] - p[1]];
            total += (a[0] * b[1] - a[1] * b[0]).atan2(a[0] * b[0] + a[1] * b[1]);
        }
        (total / (2.0 * PI)).round() as i64
    }

    #[test]
    fn square_has_expected_circumradius() {
        let sq = regular_polygon(4, 4.0).unwrap();
        for v in sq.vertices() {
            assert!((v[0].hypot(v[1]) - 2f64.sqrt()).abs() < 1e-14);
        }
        assert!((sq.area() - 4.0).abs() < 1e-14);
        assert!(sq.vertices()[0][0].abs() < 1e-15 && sq.vertices()[0][1] > 0.0);
    }

    #[test]
    fn area_is_conserved_over_the_sweep() {
        for n in 3..=100 {
            let p = regular_polygon(n, 400.0).unwrap();
            assert!((p.area() - 400.0).abs() / 400.0 < 1e-12, "polygon n={n}");
            let s = star_polygon(n, 10.0, 400.0).unwrap();
            assert!((s.area() - 400.0).abs() / 400.0 < 1e-12, "star n={n}");
            assert!(p.is_simple() && s.is_simple());
        }
    }

    #[test]
    fn hundred_gon_approaches_equal_area_circle() {
        let r = regular_circumradius(100, 400.0);
        let circle = (400.0 / PI).sqrt();
        assert!((r - circle).abs() / circle < 0.005);
    }

    #[test]
    fn star_outer_radius_closed_form() {
        let r3 = star_outer_radius(3, 10.0, 400.0).unwrap();
        assert!((r3 - 400.0 / (30.0 * (PI / 3.0).sin())).abs() < 1e-12);
        assert!((r3 - 15.396).abs() < 1e-3);
        let s = star_polygon(3, 10.0, 400.0).unwrap();
        assert!((s.area() - 400.0).abs() < 1e-9);
        let r100 = star_outer_radius(100, 10.0, 400.0).unwrap();
        assert!((r100 - 12.73).abs() < 5e-3);
        let radii: Vec<f64> = (3..=100).map(|n| star_outer_radius(n, 10.0, 400.0).unwrap()).collect();
        assert!(radii.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn degenerate_star_is_regular_2n_gon() {
        for n in [3u32, 5, 8, 17] {
            let area = f64::from(n) * 100.0 * (PI / f64::from(n)).sin();
            let star = star_polygon(n, 10.0, area).unwrap();
            let reg = regular_polygon(2 * n, area).unwrap();
            assert_eq!(star.len(), reg.len());
            for (a, b) in star.vertices().iter().zip(reg.vertices()) {
                assert!((a[0] - b[0]).abs() < 1e-12 && (a[1] - b[1]).abs() < 1e-12);
                assert!((a[0].hypot(a[1]) - 10.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn infeasible_star_is_rejected() {
        let min = 3.0 * 100.0 * (PI / 3.0).sin();
        assert!(matches!(star_polygon(3, 10.0, min * 0.99), Err(Error::Parameter(_))));
        assert!(matches!(regular_polygon(2, 10.0), Err(Error::Parameter(_))));
        assert!(matches!(regular_polygon(5, -1.0), Err(Error::Parameter(_))));
    }

    #[test]
    fn polygons_have_rotational_symmetry() {
        for n in [3u32, 4, 7, 10, 33] {
            for poly in [regular_polygon(n, 400.0).unwrap(), star_polygon(n, 10.0, 400.0).unwrap()] {
                let rot = poly.rotated(2.0 * PI / f64::from(n));
                for v in rot.vertices() {
                    let nearest = poly
                        .vertices()
                        .iter()
                        .map(|w| (v[0] - w[0]).hypot(v[1] - w[1]))
                        .fold(f64::INFINITY, f64::min);
                    assert!(nearest < 1e-12, "n={n} residual {nearest}");
                }
            }
        }
    }

    #[test]
    fn placement_spans_expected_depths() {
        let g = place_prism(&shape(ShapeFamily::RegularPolygon, 10), &TissueDims::default()).unwrap();
        let t = g.tumor.unwrap();
        assert_eq!((t.z_min, t.z_max), (5.0, 13.0));
        assert_eq!(t.center, [60.0, 30.0]);

        let star = place_prism(&shape(ShapeFamily::StarPolygon, 3), &TissueDims::default()).unwrap();
        assert!(star.tumor.unwrap().polygon.max_radius() < 30.0);
    }

    #[test]
    fn oversized_polygon_is_rejected() {
        // circumradius 31 mm in a 60 mm deep block
        let area = 0.5 * 4.0 * 31.0f64.powi(2);
        let mut s = shape(ShapeFamily::RegularPolygon, 4);
        s.base_area = area;
        assert!((regular_circumradius(4, area) - 31.0).abs() < 1e-12);
        assert!(matches!(place_prism(&s, &TissueDims::default()), Err(Error::Placement(_))));

        let mut deep = shape(ShapeFamily::RegularPolygon, 6);
        deep.prism_height = 13.0;
        assert!(matches!(place_prism(&deep, &TissueDims::default()), Err(Error::Placement(_))));
    }

    #[test]
    fn point_in_polygon_basics() {
        for n in [3u32, 6, 50] {
            for poly in [regular_polygon(n, 400.0).unwrap(), star_polygon(n, 10.0, 400.0).unwrap()] {
                assert!(point_in_polygon([0.0, 0.0], &poly));
                let far = 2.0 * poly.max_radius();
                assert!(!point_in_polygon([far, 0.0], &poly));
                for v in poly.vertices() {
                    assert!(point_in_polygon(*v, &poly), "vertices count as inside");
                }
            }
        }
    }

    #[test]
    fn point_in_polygon_matches_winding_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for poly in [regular_polygon(5, 400.0).unwrap(), star_polygon(7, 10.0, 400.0).unwrap()] {
            let r = 1.2 * poly.max_radius();
            for _ in 0..10_000 {
                let p = [rng.gen_range(-r..r), rng.gen_range(-r..r)];
                assert_eq!(point_in_polygon(p, &poly), winding_number(p, &poly) != 0, "{p:?}");
            }
        }
    }

    #[test]
    fn csv_export_has_header_and_rows() {
        let mut buf = Vec::new();
        regular_polygon(3, 400.0).unwrap().write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 4);
        assert!(text.starts_with("x_mm,y_mm\n"));
    }
}
