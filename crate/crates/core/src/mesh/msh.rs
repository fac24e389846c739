//! Gmsh MSH 2.2 ASCII import and export.
//!
//! Triangles (type 2) become cells. Line elements (type 1) with physical tag
//! `k + 1` mark faces of fracture `k`; lines on the bounding box and point
//! elements (type 15) are ignored.

use super::grid::Grid;
use crate::error::{Error, Result};
use std::collections::HashMap;
use std::fmt::Write;

fn perr(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

pub fn import_msh(text: &str) -> Result<Grid> {
    let lines: Vec<(usize, &str)> = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())).filter(|(_, l)| !l.is_empty()).collect();
    let mut i = 0;
    let mut nodes: HashMap<i64, [f64; 2]> = HashMap::new();
    let mut node_order: Vec<i64> = Vec::new();
    let mut tris: Vec<[i64; 3]> = Vec::new();
    let mut plines: Vec<(usize, [i64; 2], i64)> = Vec::new();
    let mut seen_format = false;
    let num = |ln: usize, s: &str| -> Result<f64> { s.parse::<f64>().map_err(|_| perr(ln, format!("invalid number '{s}'"))) };
    let int = |ln: usize, s: &str| -> Result<i64> { s.parse::<i64>().map_err(|_| perr(ln, format!("invalid integer '{s}'"))) };
    let expect_end = |i: usize, tag: &str| -> Result<()> {
        match lines.get(i) {
            Some((_, l)) if *l == tag => Ok(()),
            Some((ln, l)) => Err(perr(*ln, format!("expected {tag}, found '{l}'"))),
            None => Err(perr(lines.last().map_or(0, |x| x.0), format!("missing {tag}"))),
        }
    };
    while i < lines.len() {
        let (ln, l) = lines[i];
        match l {
            "$MeshFormat" => {
                let (vl, v) = *lines.get(i + 1).ok_or_else(|| perr(ln, "truncated $MeshFormat"))?;
                let parts: Vec<&str> = v.split_whitespace().collect();
                if parts.len() < 3 || !parts[0].starts_with("2.") || parts[1] != "0" {
                    return Err(perr(vl, format!("unsupported mesh format '{v}', need ASCII 2.2")));
                }
                expect_end(i + 2, "$EndMeshFormat")?;
                seen_format = true;
                i += 3;
            }
            "$Nodes" => {
                let (cl, c) = *lines.get(i + 1).ok_or_else(|| perr(ln, "truncated $Nodes"))?;
                let n = int(cl, c)? as usize;
                for k in 0..n {
                    let (nl, s) = *lines.get(i + 2 + k).ok_or_else(|| perr(cl, "truncated node list"))?;
                    let p: Vec<&str> = s.split_whitespace().collect();
                    if p.len() != 4 {
                        return Err(perr(nl, "node line needs id x y z"));
                    }
                    let id = int(nl, p[0])?;
                    nodes.insert(id, [num(nl, p[1])?, num(nl, p[2])?]);
                    node_order.push(id);
                }
                expect_end(i + 2 + n, "$EndNodes")?;
                i += 3 + n;
            }
            "$Elements" => {
                let (cl, c) = *lines.get(i + 1).ok_or_else(|| perr(ln, "truncated $Elements"))?;
                let n = int(cl, c)? as usize;
                for k in 0..n {
                    let (el, s) = *lines.get(i + 2 + k).ok_or_else(|| perr(cl, "truncated element list"))?;
                    let p = s.split_whitespace().map(|t| int(el, t)).collect::<Result<Vec<i64>>>()?;
                    if p.len() < 3 {
                        return Err(perr(el, "element line too short"));
                    }
                    let (ty, ntags) = (p[1], p[2] as usize);
                    let rest = p.get(3 + ntags..).ok_or_else(|| perr(el, "element tags exceed line"))?;
                    let phys = if ntags > 0 { p[3] } else { 0 };
                    match (ty, rest.len()) {
                        (2, 3) => tris.push([rest[0], rest[1], rest[2]]),
                        (1, 2) => plines.push((el, [rest[0], rest[1]], phys)),
                        (15, 1) => {}
                        (1 | 2 | 15, _) => return Err(perr(el, format!("wrong node count for element type {ty}"))),
                        _ => return Err(perr(el, format!("unsupported element type {ty}"))),
                    }
                }
                expect_end(i + 2 + n, "$EndElements")?;
                i += 3 + n;
            }
            s if s.starts_with('$') && !s.starts_with("$End") => {
                // Skip unknown sections such as $PhysicalNames.
                let end = format!("$End{}", &s[1..]);
                let mut j = i + 1;
                while j < lines.len() && lines[j].1 != end {
                    j += 1;
                }
                if j == lines.len() {
                    return Err(perr(ln, format!("unterminated section {s}")));
                }
                i = j + 1;
            }
            _ => return Err(perr(ln, format!("unexpected line '{l}'"))),
        }
    }
    if !seen_format {
        return Err(perr(1, "missing $MeshFormat section"));
    }
    if tris.is_empty() {
        return Err(perr(lines.last().map_or(0, |x| x.0), "no triangle elements"));
    }
    // Compact node numbering to nodes used by triangles.
    let mut index: HashMap<i64, usize> = HashMap::new();
    let mut coords = Vec::new();
    let mut cells = Vec::with_capacity(tris.len());
    for t in &tris {
        let mut c = [0usize; 3];
        for (k, id) in t.iter().enumerate() {
            let p = *nodes.get(id).ok_or_else(|| perr(0, format!("triangle references unknown node {id}")))?;
            c[k] = *index.entry(*id).or_insert_with(|| {
                coords.push(p);
                coords.len() - 1
            });
        }
        cells.push(c);
    }
    let mut g = Grid::from_triangles(coords, &cells)?;
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for p in &g.nodes {
        for k in 0..2 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    let tol = 1e-10 * (hi[0] - lo[0]).hypot(hi[1] - lo[1]);
    let on_side = |a: [f64; 2], b: [f64; 2]| {
        (0..2).any(|k| {
            ((a[k] - lo[k]).abs() <= tol && (b[k] - lo[k]).abs() <= tol) || ((a[k] - hi[k]).abs() <= tol && (b[k] - hi[k]).abs() <= tol)
        })
    };
    let mut face_of: HashMap<(usize, usize), usize> = HashMap::new();
    for (f, n) in g.face_nodes.iter().enumerate() {
        face_of.insert((n[0].min(n[1]), n[0].max(n[1])), f);
    }
    for (el, [a, b], phys) in plines {
        let (Some(&ia), Some(&ib)) = (index.get(&a), index.get(&b)) else {
            return Err(perr(el, "line element references a node not used by any triangle"));
        };
        if on_side(g.nodes[ia], g.nodes[ib]) {
            continue;
        }
        if phys < 1 {
            return Err(perr(el, "interior line element without a positive physical tag"));
        }
        let f = *face_of.get(&(ia.min(ib), ia.max(ib))).ok_or_else(|| perr(el, "line element is not an edge of the triangulation"))?;
        g.tags.fracture[f] = Some((phys - 1) as usize);
    }
    let rect = crate::geom::network::Rect { xmin: lo[0], ymin: lo[1], xmax: hi[0], ymax: hi[1] };
    g.tag_domain_boundary(&rect, tol);
    Ok(g)
}

/// Write a 2D grid as MSH 2.2, with fracture faces as physical lines.
pub fn export_msh(g: &Grid) -> String {
    let mut s = String::from("$MeshFormat\n2.2 0 8\n$EndMeshFormat\n$Nodes\n");
    let _ = writeln!(s, "{}", g.num_nodes());
    for (i, p) in g.nodes.iter().enumerate() {
        let _ = writeln!(s, "{} {:.17e} {:.17e} 0", i + 1, p[0], p[1]);
    }
    s += "$EndNodes\n$Elements\n";
    let lines: Vec<usize> = (0..g.num_faces()).filter(|&f| g.tags.fracture[f].is_some()).collect();
    let _ = writeln!(s, "{}", lines.len() + g.num_cells());
    let mut id = 1;
    for &f in &lines {
        let k = g.tags.fracture[f].unwrap() + 1;
        let n = &g.face_nodes[f];
        let _ = writeln!(s, "{id} 1 2 {k} {k} {} {}", n[0] + 1, n[1] + 1);
        id += 1;
    }
    for c in &g.cell_nodes {
        let _ = writeln!(s, "{id} 2 2 0 1 {} {} {}", c[0] + 1, c[1] + 1, c[2] + 1);
        id += 1;
    }
    s += "$EndElements\n";
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    const SQUARE: &str = "$MeshFormat\n2.2 0 8\n$EndMeshFormat\n$Nodes\n4\n1 0 0 0\n2 1 0 0\n3 1 1 0\n4 0 1 0\n$EndNodes\n$Elements\n3\n1 1 2 1 1 1 2\n2 2 2 0 1 1 2 3\n3 2 2 0 1 1 3 4\n$EndElements\n";

    #[test]
    fn two_triangle_square() {
        let g = import_msh(SQUARE).unwrap();
        assert_eq!((g.num_cells(), g.num_faces(), g.num_nodes()), (2, 5, 4));
        assert!(g.tags.fracture.iter().all(|t| t.is_none()), "boundary line ignored");
    }

    #[test]
    fn quadrilateral_is_rejected_with_line() {
        let text = SQUARE.replace("3 2 2 0 1 1 3 4", "3 3 2 0 1 1 2 3 4");
        match import_msh(&text).unwrap_err() {
            Error::Parse { line, msg } => {
                assert_eq!(line, 15);
                assert!(msg.contains("type 3"));
            }
            e => panic!("{e}"),
        }
    }

    #[test]
    fn malformed_section_reports_line() {
        let text = SQUARE.replace("$EndNodes", "$EndNode");
        assert!(matches!(import_msh(&text), Err(Error::Parse { line: 10, .. })));
    }

    #[test]
    fn roundtrip_keeps_fracture_tags() {
        use crate::geom::network::{FractureNetwork2, Rect};
        let net = FractureNetwork2::new(vec![[[0.2, 0.3], [0.7, 0.6]]], Rect::unit(), None).unwrap();
        let p = crate::geom::process::process_network(&net).unwrap();
        let g = crate::mesh::mesher::triangulate(&p, crate::mesh::MeshSizeParams::uniform(0.1)).unwrap();
        let h = import_msh(&export_msh(&g)).unwrap();
        assert_eq!(h.num_cells(), g.num_cells());
        let count = |g: &Grid| g.tags.fracture.iter().filter(|t| t.is_some()).count();
        assert_eq!(count(&h), count(&g));
    }
}
