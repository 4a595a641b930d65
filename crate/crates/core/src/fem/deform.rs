use super::elastic::VectorField;
use crate::error::{Error, Result};
use crate::mesh::TetMesh;

/// Moves every node by its displacement.
///
/// Tumour overlap integrals are carried with the material: each element's
/// map is affine, so they scale by the element's volume ratio.
pub fn deform_mesh(mesh: &TetMesh, u: &VectorField) -> Result<TetMesh> {
    if u.values.len() != mesh.node_count() {
        return Err(Error::param(format!(
            "displacement has {} nodes, mesh has {}",
            u.values.len(),
            mesh.node_count()
        )));
    }
    let mut out = mesh.clone();
    for (p, d) in out.nodes.iter_mut().zip(&u.values) {
        for k in 0..3 {
            p[k] += d[k];
        }
    }
    for e in 0..out.tet_count() {
        let v0 = mesh.tet_volume(e);
        let v1 = out.tet_volume(e);
        if !(v1 > 0.0) {
            return Err(Error::InvertedElement { element: e, volume: v1 });
        }
        let j = v1 / v0;
        out.occupancy[e] = out.occupancy[e].map(|w| w * j);
    }
    Ok(out)
}
