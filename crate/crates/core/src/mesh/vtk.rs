//! VTK legacy ASCII output.

use super::grid::Grid;
use std::io::{self, Write};

pub enum Field<'a> {
    Scalar(&'a [f64]),
    Vector(&'a [[f64; 2]]),
}

/// Write `g` as an unstructured grid with cell data. Every grid gets `dim`
/// and `subdomain_id` fields so that files from different subdomains can be
/// told apart.
pub fn write_vtk<W: Write>(g: &Grid, subdomain_id: usize, fields: &[(&str, Field)], mut w: W) -> io::Result<()> {
    writeln!(w, "# vtk DataFile Version 3.0")?;
    writeln!(w, "subdomain {subdomain_id} dim {}", g.dim)?;
    writeln!(w, "ASCII\nDATASET UNSTRUCTURED_GRID")?;
    writeln!(w, "POINTS {} double", g.num_nodes())?;
    for p in &g.nodes {
        writeln!(w, "{:.12e} {:.12e} 0", p[0], p[1])?;
    }
    let nc = g.num_cells();
    let size: usize = g.cell_nodes.iter().map(|c| c.len() + 1).sum();
    writeln!(w, "CELLS {nc} {size}")?;
    for c in &g.cell_nodes {
        write!(w, "{}", c.len())?;
        for n in c {
            write!(w, " {n}")?;
        }
        writeln!(w)?;
    }
    writeln!(w, "CELL_TYPES {nc}")?;
    let ty = match g.dim {
        0 => 1,
        1 => 3,
        _ => 5,
    };
    for _ in 0..nc {
        writeln!(w, "{ty}")?;
    }
    writeln!(w, "CELL_DATA {nc}")?;
    let dim = vec![g.dim as f64; nc];
    let sid = vec![subdomain_id as f64; nc];
    let mut all: Vec<(&str, Field)> = vec![("dim", Field::Scalar(&dim)), ("subdomain_id", Field::Scalar(&sid))];
    for (n, f) in fields {
        all.push((
            n,
            match f {
                Field::Scalar(v) => Field::Scalar(v),
                Field::Vector(v) => Field::Vector(v),
            },
        ));
    }
    for (name, f) in all {
        match f {
            Field::Scalar(v) => {
                assert_eq!(v.len(), nc, "field {name} has wrong length");
                writeln!(w, "SCALARS {name} double 1\nLOOKUP_TABLE default")?;
                for x in v {
                    writeln!(w, "{x:.12e}")?;
                }
            }
            Field::Vector(v) => {
                assert_eq!(v.len(), nc, "field {name} has wrong length");
                writeln!(w, "VECTORS {name} double")?;
                for x in v {
                    writeln!(w, "{:.12e} {:.12e} 0", x[0], x[1])?;
                }
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn writes_all_sections() {
        let g = crate::mesh::structured::cartesian_triangles(1, 1, crate::geom::network::Rect::unit());
        let p = vec![1.0, 2.0];
        let mut buf = Vec::new();
        write_vtk(&g, 0, &[("pressure", Field::Scalar(&p))], &mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        for key in ["POINTS 4", "CELLS 2 8", "CELL_TYPES 2", "SCALARS dim", "SCALARS subdomain_id", "SCALARS pressure"] {
            assert!(s.contains(key), "{key}");
        }
    }
}
