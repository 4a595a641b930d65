use serde::Serialize;

use super::TetMesh;
use crate::par;

/// Upper bin edges of the aspect-ratio histogram; the last bin is open.
pub const ASPECT_BINS: [f64; 4] = [1.5, 2.0, 3.0, 5.0];

#[derive(Debug, Clone, Serialize)]
pub struct QualityReport {
    pub elements: usize,
    pub min_volume: f64,
    pub min_dihedral_deg: f64,
    pub mean_dihedral_deg: f64,
    pub max_aspect_ratio: f64,
    /// Counts per bin: `< 1.5`, `< 2`, `< 3`, `< 5`, `>= 5`.
    pub aspect_histogram: [usize; 5],
}

struct TetQuality {
    volume: f64,
    dihedral_min: f64,
    dihedral_sum: f64,
    aspect: f64,
}

fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn norm(a: [f64; 3]) -> f64 {
    (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt()
}

fn tet_quality(p: [[f64; 3]; 4], volume: f64) -> TetQuality {
    // outward face normals, face k opposite vertex k
    let faces = [[1, 2, 3], [0, 3, 2], [0, 1, 3], [0, 2, 1]];
    let normals: Vec<[f64; 3]> = faces
        .iter()
        .map(|f| cross(sub(p[f[1]], p[f[0]]), sub(p[f[2]], p[f[0]])))
        .collect();
    let areas: Vec<f64> = normals.iter().map(|n| 0.5 * norm(*n)).collect();

    let mut dmin = f64::INFINITY;
    let mut dsum = 0.0;
    let mut longest: f64 = 0.0;
    for a in 0..4 {
        for b in (a + 1)..4 {
            longest = longest.max(norm(sub(p[a], p[b])));
            // the edge (a, b) is shared by the faces opposite the other two vertices
            let others: Vec<usize> = (0..4).filter(|&k| k != a && k != b).collect();
            let (n1, n2) = (normals[others[0]], normals[others[1]]);
            let cos = (n1[0] * n2[0] + n1[1] * n2[1] + n1[2] * n2[2]) / (norm(n1) * norm(n2));
            let angle = std::f64::consts::PI - cos.clamp(-1.0, 1.0).acos();
            dmin = dmin.min(angle);
            dsum += angle;
        }
    }
    let inradius = 3.0 * volume / areas.iter().sum::<f64>();
    TetQuality {
        volume,
        dihedral_min: dmin.to_degrees(),
        dihedral_sum: dsum.to_degrees(),
        // 1 for the regular tetrahedron
        aspect: longest / (2.0 * 6f64.sqrt() * inradius),
    }
}

pub fn mesh_quality(mesh: &TetMesh) -> QualityReport {
    let q = par::map_range(mesh.tet_count(), |e| tet_quality(mesh.tet_points(e), mesh.tet_volume(e)));
    let mut hist = [0usize; 5];
    for t in &q {
        let bin = ASPECT_BINS.iter().position(|&edge| t.aspect < edge).unwrap_or(4);
        hist[bin] += 1;
    }
    QualityReport {
        elements: q.len(),
        min_volume: q.iter().map(|t| t.volume).fold(f64::INFINITY, f64::min),
        min_dihedral_deg: q.iter().map(|t| t.dihedral_min).fold(f64::INFINITY, f64::min),
        mean_dihedral_deg: q.iter().map(|t| t.dihedral_sum).sum::<f64>() / (6 * q.len()).max(1) as f64,
        max_aspect_ratio: q.iter().map(|t| t.aspect).fold(0.0, f64::max),
        aspect_histogram: hist,
    }
}
