//! Exact overlap of tetrahedra with a vertical polygonal prism.
//!
//! The prism base is split into a fan of triangles about the footprint
//! centre (all generated base polygons are star-shaped about it), each fan
//! wedge is a convex prism, and every tetrahedron is clipped against the
//! wedge half-spaces one plane at a time.

use crate::geometry::{point_in_polygon, PlacedPrism};

type P3 = [f64; 3];

/// Half-space `normal · x <= offset`.
#[derive(Debug, Clone, Copy)]
struct HalfSpace {
    normal: P3,
    offset: f64,
}

impl HalfSpace {
    fn eval(&self, p: &P3) -> f64 {
        self.normal[0] * p[0] + self.normal[1] * p[1] + self.normal[2] * p[2] - self.offset
    }
}

fn lerp(a: &P3, b: &P3, sa: f64, sb: f64) -> P3 {
    let t = sa / (sa - sb);
    [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1]), a[2] + t * (b[2] - a[2])]
}

pub(crate) fn signed_volume(t: &[P3; 4]) -> f64 {
    let u = sub(&t[1], &t[0]);
    let v = sub(&t[2], &t[0]);
    let w = sub(&t[3], &t[0]);
    (u[0] * (v[1] * w[2] - v[2] * w[1]) - u[1] * (v[0] * w[2] - v[2] * w[0])
        + u[2] * (v[0] * w[1] - v[1] * w[0]))
        / 6.0
}

fn sub(a: &P3, b: &P3) -> P3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

/// Clips one tetrahedron by a half-space, appending the kept pieces as tetrahedra.
fn clip_tet(t: &[P3; 4], h: &HalfSpace, out: &mut Vec<[P3; 4]>) {
    let s = [h.eval(&t[0]), h.eval(&t[1]), h.eval(&t[2]), h.eval(&t[3])];
    let mut inside = [0usize; 4];
    let mut outside = [0usize; 4];
    let (mut ni, mut no) = (0, 0);
    for k in 0..4 {
        if s[k] <= 0.0 {
            inside[ni] = k;
            ni += 1;
        } else {
            outside[no] = k;
            no += 1;
        }
    }
    let cut = |i: usize, o: usize| lerp(&t[i], &t[o], s[i], s[o]);
    match ni {
        0 => {}
        4 => out.push(*t),
        1 => {
            let a = inside[0];
            let (b, c, d) = (outside[0], outside[1], outside[2]);
            out.push([t[a], cut(a, b), cut(a, c), cut(a, d)]);
        }
        2 => {
            let (a, b) = (inside[0], inside[1]);
            let (c, d) = (outside[0], outside[1]);
            let (ac, ad, bc, bd) = (cut(a, c), cut(a, d), cut(b, c), cut(b, d));
            out.push([t[a], ac, ad, t[b]]);
            out.push([ac, ad, t[b], bc]);
            out.push([ad, t[b], bc, bd]);
        }
        3 => {
            let (a, b, c) = (inside[0], inside[1], inside[2]);
            let d = outside[0];
            let (ad, bd, cd) = (cut(a, d), cut(b, d), cut(c, d));
            out.push([t[a], t[b], t[c], ad]);
            out.push([t[b], t[c], ad, bd]);
            out.push([t[c], ad, bd, cd]);
        }
        _ => unreachable!(),
    }
}

/// Volume and first moment of `tet ∩ {all half-spaces}`.
fn clipped_moments(tet: &[P3; 4], planes: &[HalfSpace]) -> (f64, P3) {
    let mut cur = vec![*tet];
    let mut next = Vec::with_capacity(8);
    for h in planes {
        next.clear();
        for t in &cur {
            clip_tet(t, h, &mut next);
        }
        std::mem::swap(&mut cur, &mut next);
        if cur.is_empty() {
            return (0.0, [0.0; 3]);
        }
    }
    let mut vol = 0.0;
    let mut moment = [0.0; 3];
    for t in &cur {
        let v = signed_volume(t).abs();
        vol += v;
        for k in 0..3 {
            moment[k] += v * 0.25 * (t[0][k] + t[1][k] + t[2][k] + t[3][k]);
        }
    }
    (vol, moment)
}

/// Barycentric coordinates of `p` in `tet`.
pub(crate) fn barycentric(tet: &[P3; 4], p: &P3) -> [f64; 4] {
    let vol = signed_volume(tet);
    let mut lam = [0.0; 4];
    for k in 0..4 {
        let mut t = *tet;
        t[k] = *p;
        lam[k] = signed_volume(&t) / vol;
    }
    lam
}

/// Precomputed fan decomposition of a placed prism.
pub(crate) struct PrismClipper {
    wedges: Vec<Wedge>,
    z_min: f64,
    z_max: f64,
    center: [f64; 2],
    inscribed: f64,
    outer: f64,
}

struct Wedge {
    planes: [HalfSpace; 3],
    lo: [f64; 2],
    hi: [f64; 2],
    tri: [[f64; 2]; 3],
}

impl PrismClipper {
    pub(crate) fn new(prism: &PlacedPrism) -> Self {
        let c = prism.center;
        let verts: Vec<[f64; 2]> = prism
            .polygon
            .vertices()
            .iter()
            .map(|v| [v[0] + c[0], v[1] + c[1]])
            .collect();
        let n = verts.len();
        let wedges = (0..n)
            .map(|k| {
                let tri = [c, verts[k], verts[(k + 1) % n]];
                let planes = [0, 1, 2].map(|e| {
                    let p = tri[e];
                    let q = tri[(e + 1) % 3];
                    let normal = [q[1] - p[1], -(q[0] - p[0]), 0.0];
                    HalfSpace {
                        normal,
                        offset: normal[0] * p[0] + normal[1] * p[1],
                    }
                });
                let lo = [tri.iter().map(|v| v[0]).fold(f64::INFINITY, f64::min), tri.iter().map(|v| v[1]).fold(f64::INFINITY, f64::min)];
                let hi = [tri.iter().map(|v| v[0]).fold(f64::NEG_INFINITY, f64::max), tri.iter().map(|v| v[1]).fold(f64::NEG_INFINITY, f64::max)];
                Wedge { planes, lo, hi, tri }
            })
            .collect();
        let inscribed = prism
            .polygon
            .edges()
            .map(|(a, b)| seg_dist_origin(a, b))
            .fold(f64::INFINITY, f64::min);
        Self {
            wedges,
            z_min: prism.z_min,
            z_max: prism.z_max,
            center: c,
            inscribed,
            outer: prism.polygon.max_radius(),
        }
    }

    /// `∫_{tet ∩ prism} λ_i dV` for the four barycentric functions of `tet`.
    pub(crate) fn nodal_integrals(&self, tet: &[P3; 4]) -> [f64; 4] {
        let zlo = tet.iter().map(|p| p[2]).fold(f64::INFINITY, f64::min);
        let zhi = tet.iter().map(|p| p[2]).fold(f64::NEG_INFINITY, f64::max);
        if zhi <= self.z_min || zlo >= self.z_max {
            return [0.0; 4];
        }
        let radii = tet.map(|p| (p[0] - self.center[0]).hypot(p[1] - self.center[1]));
        let rmax = radii.iter().copied().fold(0.0, f64::max);
        let z_inside = zlo >= self.z_min && zhi <= self.z_max;
        if z_inside && rmax <= self.inscribed * (1.0 - 1e-12) {
            return [signed_volume(tet).abs() / 4.0; 4];
        }
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for p in tet {
            for k in 0..2 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        let dx = (self.center[0] - self.center[0].clamp(lo[0], hi[0])).abs();
        let dy = (self.center[1] - self.center[1].clamp(lo[1], hi[1])).abs();
        if dx.hypot(dy) >= self.outer {
            return [0.0; 4];
        }

        let slab = [
            HalfSpace { normal: [0.0, 0.0, -1.0], offset: -self.z_min },
            HalfSpace { normal: [0.0, 0.0, 1.0], offset: self.z_max },
        ];
        let mut vol = 0.0;
        let mut moment = [0.0; 3];
        for w in &self.wedges {
            if w.hi[0] <= lo[0] || w.lo[0] >= hi[0] || w.hi[1] <= lo[1] || w.lo[1] >= hi[1] {
                continue;
            }
            let (v, m) = if z_inside && tet.iter().all(|p| in_triangle(&w.tri, [p[0], p[1]])) {
                let v = signed_volume(tet).abs();
                let mut m = [0.0; 3];
                for k in 0..3 {
                    m[k] = v * 0.25 * (tet[0][k] + tet[1][k] + tet[2][k] + tet[3][k]);
                }
                (v, m)
            } else if z_inside {
                clipped_moments(tet, &w.planes)
            } else {
                let planes = [w.planes[0], w.planes[1], w.planes[2], slab[0], slab[1]];
                clipped_moments(tet, &planes)
            };
            vol += v;
            for k in 0..3 {
                moment[k] += m[k];
            }
        }
        if vol == 0.0 {
            return [0.0; 4];
        }
        let centroid = [moment[0] / vol, moment[1] / vol, moment[2] / vol];
        barycentric(tet, &centroid).map(|l| vol * l)
    }

    /// Centroid-in-prism test used for material labels.
    pub(crate) fn contains_centroid(&self, prism: &PlacedPrism, tet: &[P3; 4]) -> bool {
        let c = [
            0.25 * (tet[0][0] + tet[1][0] + tet[2][0] + tet[3][0]),
            0.25 * (tet[0][1] + tet[1][1] + tet[2][1] + tet[3][1]),
            0.25 * (tet[0][2] + tet[1][2] + tet[2][2] + tet[3][2]),
        ];
        c[2] >= self.z_min
            && c[2] <= self.z_max
            && point_in_polygon([c[0] - self.center[0], c[1] - self.center[1]], &prism.polygon)
    }
}

fn in_triangle(t: &[[f64; 2]; 3], p: [f64; 2]) -> bool {
    (0..3).all(|e| {
        let a = t[e];
        let b = t[(e + 1) % 3];
        (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]) >= 0.0
    })
}

fn seg_dist_origin(a: [f64; 2], b: [f64; 2]) -> f64 {
    let d = [b[0] - a[0], b[1] - a[1]];
    let len2 = d[0] * d[0] + d[1] * d[1];
    let t = (-(a[0] * d[0] + a[1] * d[1]) / len2).clamp(0.0, 1.0);
    (a[0] + t * d[0]).hypot(a[1] + t * d[1])
}

#[cfg(test)]
mod tests {
    use super::*;

    const UNIT: [P3; 4] = [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];

    #[test]
    fn clipping_by_axis_plane_matches_closed_form() {
        // keep x <= a: volume of the unit corner tet minus the corner cut at x = a
        for a in [0.1, 0.25, 0.5, 0.9] {
            let h = HalfSpace { normal: [1.0, 0.0, 0.0], offset: a };
            let (v, _) = clipped_moments(&UNIT, &[h]);
            let expected = (1.0 - (1.0f64 - a).powi(3)) / 6.0;
            assert!((v - expected).abs() < 1e-15, "a={a}: {v} vs {expected}");
        }
    }

    #[test]
    fn complementary_halfspaces_partition_volume_and_moment() {
        let tet = [[0.3, -0.2, 0.1], [2.0, 0.4, -0.3], [0.1, 1.7, 0.5], [0.6, 0.2, 1.9]];
        let n = [0.3, -0.8, 0.52];
        let h1 = HalfSpace { normal: n, offset: 0.2 };
        let h2 = HalfSpace { normal: [-n[0], -n[1], -n[2]], offset: -0.2 };
        let (v1, m1) = clipped_moments(&tet, &[h1]);
        let (v2, m2) = clipped_moments(&tet, &[h2]);
        let v = signed_volume(&tet).abs();
        assert!((v1 + v2 - v).abs() < 1e-14);
        for k in 0..3 {
            let c = 0.25 * tet.iter().map(|p| p[k]).sum::<f64>();
            assert!((m1[k] + m2[k] - v * c).abs() < 1e-13);
        }
    }

    #[test]
    fn barycentric_reproduces_vertices() {
        for (k, p) in UNIT.iter().enumerate() {
            let l = barycentric(&UNIT, p);
            for (j, lj) in l.iter().enumerate() {
                assert!((lj - if j == k { 1.0 } else { 0.0 }).abs() < 1e-15);
            }
        }
    }
}
