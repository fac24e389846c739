//! Duplication of faces and nodes along fractures.

use super::grid::Grid;
use crate::error::{Error, Result};
use crate::geom::process::ProcessedNetwork;
use crate::geom::{dot, rot90, sub};

/// A 2D grid whose fracture faces have been split into two walls.
#[derive(Debug, Clone)]
pub struct SplitGrid {
    pub grid: Grid,
    /// Per fracture: `(plus face, minus face)` pairs. The plus cell lies on the
    /// side the fracture normal `rot90(tangent)` points to.
    pub pairs: Vec<Vec<(usize, usize)>>,
}

pub fn split_fracture_faces(g: &Grid, pnet: &ProcessedNetwork) -> Result<SplitGrid> {
    if g.dim != 2 {
        return Err(Error::Mesh("fracture splitting needs a 2D grid".into()));
    }
    let mut out = g.clone();
    let nf = pnet.num_fractures();
    let mut pairs = vec![Vec::new(); nf];
    for f in 0..g.num_faces() {
        let Some(k) = g.tags.fracture[f] else { continue };
        if k >= nf {
            return Err(Error::Mesh(format!("face {f} tagged with unknown fracture {k}")));
        }
        let [Some(c0), Some(c1)] = g.face_cells[f] else {
            return Err(Error::Mesh(format!("face {f} of fracture {k} lies on the domain boundary; fractures must be interior")));
        };
        let en = rot90(pnet.tangent(k));
        let side = |c: usize| dot(sub(g.cell_centers[c], g.face_centers[f]), en);
        let (plus, minus) = if side(c0) > 0.0 { (c0, c1) } else { (c1, c0) };
        if !(side(plus) > 0.0 && side(minus) < 0.0) {
            return Err(Error::Mesh(format!("cells of fracture face {f} are not on opposite sides")));
        }
        let nfce = out.duplicate_face(f);
        for e in out.cell_faces[minus].iter_mut() {
            if e.0 == f {
                e.0 = nfce;
            }
        }
        pairs[k].push((f, nfce));
    }

    // Split nodes by connected components of their incident cells, where two
    // cells are connected through a shared face containing the node.
    let touched: std::collections::BTreeSet<usize> = pairs.iter().flatten().flat_map(|&(f, _)| g.face_nodes[f].iter().copied()).collect();
    let node_cells = out.node_cells();
    for v in touched {
        let cells = &node_cells[v];
        let mut comp: Vec<usize> = (0..cells.len()).collect();
        fn root(c: &mut [usize], mut i: usize) -> usize {
            while c[i] != i {
                i = c[i];
            }
            i
        }
        for a in 0..cells.len() {
            for b in (a + 1)..cells.len() {
                let shared = out.cell_faces[cells[a]]
                    .iter()
                    .any(|&(fa, _)| out.face_nodes[fa].contains(&v) && out.cell_faces[cells[b]].iter().any(|&(fb, _)| fb == fa));
                if shared {
                    let (ra, rb) = (root(&mut comp, a), root(&mut comp, b));
                    comp[ra.max(rb)] = ra.min(rb);
                }
            }
        }
        let mut new_id = std::collections::BTreeMap::new();
        for i in 0..cells.len() {
            let r = root(&mut comp, i);
            if r == root(&mut comp, 0) {
                continue;
            }
            let id = *new_id.entry(r).or_insert_with(|| {
                out.nodes.push(g.nodes[v]);
                out.nodes.len() - 1
            });
            let c = cells[i];
            for n in out.cell_nodes[c].iter_mut() {
                if *n == v {
                    *n = id;
                }
            }
            for k in 0..out.cell_faces[c].len() {
                let fa = out.cell_faces[c][k].0;
                for n in out.face_nodes[fa].iter_mut() {
                    if *n == v {
                        *n = id;
                    }
                }
            }
        }
    }
    out.compute_geometry()?;
    Ok(SplitGrid { grid: out, pairs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::dist;
    use crate::geom::network::{FractureNetwork2, Rect};
    use crate::geom::process::process_network;
    use crate::mesh::mesher::triangulate;
    use crate::mesh::MeshSizeParams;

    fn setup(fr: Vec<[[f64; 2]; 2]>) -> (Grid, ProcessedNetwork) {
        let net = FractureNetwork2::new(fr, Rect::unit(), None).unwrap();
        let p = process_network(&net).unwrap();
        (triangulate(&p, MeshSizeParams::uniform(0.1)).unwrap(), p)
    }

    #[test]
    fn single_fracture_adds_one_face_per_tagged_face() {
        let (g, p) = setup(vec![[[0.2, 0.5], [0.8, 0.5]]]);
        let n = g.tags.fracture.iter().filter(|t| t.is_some()).count();
        let s = split_fracture_faces(&g, &p).unwrap();
        assert_eq!(s.grid.num_faces(), g.num_faces() + n);
        assert_eq!(s.grid.num_cells(), g.num_cells());
        // Each previously adjacent cell sees exactly one face of each pair.
        for &(a, b) in &s.pairs[0] {
            let [ca, cb] = [s.grid.boundary_cell(a).0, s.grid.boundary_cell(b).0];
            assert_ne!(ca, cb);
            for c in [ca, cb] {
                let has = |f| s.grid.cell_faces[c].iter().any(|e| e.0 == f);
                assert!(has(a) ^ has(b));
            }
            assert!(s.grid.cell_centers[ca][1] > 0.5 && s.grid.cell_centers[cb][1] < 0.5);
        }
        // Interior fracture nodes are doubled, tips are not.
        let interior = n - 1;
        assert_eq!(s.grid.num_nodes(), g.num_nodes() + interior);
    }

    #[test]
    fn x_crossing_node_becomes_four() {
        let (g, p) = setup(vec![[[0.1, 0.1], [0.9, 0.9]], [[0.1, 0.9], [0.9, 0.1]]]);
        let s = split_fracture_faces(&g, &p).unwrap();
        let copies: Vec<usize> = (0..s.grid.num_nodes()).filter(|&n| dist(s.grid.nodes[n], [0.5, 0.5]) < 1e-12).collect();
        assert_eq!(copies.len(), 4);
        // Brute-force sectors: each copy's cells lie in one quadrant around the crossing.
        let nc = s.grid.node_cells();
        let mut quadrants = std::collections::BTreeSet::new();
        for &v in &copies {
            let q: std::collections::BTreeSet<(bool, bool)> = nc[v]
                .iter()
                .map(|&c| {
                    let x = s.grid.cell_centers[c];
                    (x[1] - x[0] > 0.0, x[1] + x[0] - 1.0 > 0.0)
                })
                .collect();
            assert_eq!(q.len(), 1);
            quadrants.extend(q);
        }
        assert_eq!(quadrants.len(), 4);
    }

    #[test]
    fn fracture_face_on_boundary_is_rejected() {
        let mut g = crate::mesh::structured::cartesian_triangles(2, 2, Rect::unit());
        let net = FractureNetwork2::new(vec![[[0.2, 0.5], [0.8, 0.5]]], Rect::unit(), None).unwrap();
        let p = process_network(&net).unwrap();
        let f = g.boundary_faces()[0];
        g.tags.fracture[f] = Some(0);
        assert!(split_fracture_faces(&g, &p).is_err());
    }
}
