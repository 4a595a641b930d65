use std::io::Write;

use super::TetMesh;

/// Plain-text mesh export.
///
/// ```text
/// # thermotact tet mesh v1
/// nodes <count>
/// <index> <x_mm> <y_mm> <z_mm>
/// tets <count>
/// <index> <n0> <n1> <n2> <n3> <material>
/// faces <count>
/// <n0> <n1> <n2> <tag>
/// ```
pub fn write_mesh<W: Write>(mesh: &TetMesh, mut w: W) -> std::io::Result<()> {
    writeln!(w, "# thermotact tet mesh v1")?;
    writeln!(w, "nodes {}", mesh.nodes.len())?;
    for (i, p) in mesh.nodes.iter().enumerate() {
        writeln!(w, "{i} {:?} {:?} {:?}", p[0], p[1], p[2])?;
    }
    writeln!(w, "tets {}", mesh.tets.len())?;
    for (i, t) in mesh.tets.iter().enumerate() {
        writeln!(w, "{i} {} {} {} {} {}", t[0], t[1], t[2], t[3], mesh.material[i].as_str())?;
    }
    writeln!(w, "faces {}", mesh.faces.len())?;
    for f in &mesh.faces {
        writeln!(w, "{} {} {} {}", f.nodes[0], f.nodes[1], f.nodes[2], f.tag.as_str())?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{GeometrySpec, TissueDims};
    use crate::mesh::{build_mesh, RefinementSpec};

    #[test]
    fn export_sections_have_declared_lengths() {
        let geom = GeometrySpec::empty(TissueDims::new(2.0, 1.0, 1.0).unwrap()).unwrap();
        let mesh = build_mesh(&geom, &RefinementSpec::uniform(2, 1, 1)).unwrap();
        let mut buf = Vec::new();
        write_mesh(&mesh, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[1], "nodes 12");
        assert_eq!(lines[14], "tets 12");
        assert_eq!(lines[27], format!("faces {}", mesh.faces.len()));
        assert_eq!(lines.len(), 28 + mesh.faces.len());
        assert!(lines[15].ends_with(" tissue"));
        let x: f64 = lines[3].split(' ').nth(1).unwrap().parse().unwrap();
        assert_eq!(x, mesh.nodes[1][0]);
    }
}
