//! The mixed-dimensional graph: subdomains are nodes, interfaces are edges.

use crate::error::{Error, Result};
use crate::mesh::grid::Grid;
use crate::mesh::lower::MdGrids;
use crate::mesh::mortar::{build_mortar_1d0d, build_mortar_2d1d, MortarGrid};
use std::collections::BTreeMap;

/// Named parameter arrays attached to a graph entity.
pub type ParamMap = BTreeMap<String, Vec<f64>>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SubdomainKind {
    Matrix,
    /// Original fracture index.
    Fracture(usize),
    /// Processed-network point index.
    Intersection(usize),
}

#[derive(Debug, Clone)]
pub struct Subdomain {
    pub id: usize,
    pub dim: usize,
    pub kind: SubdomainKind,
    pub grid: Grid,
    pub params: ParamMap,
    /// Variable name and number of unknowns per cell.
    pub variables: Vec<(String, usize)>,
}

#[derive(Debug, Clone)]
pub struct Interface {
    pub id: usize,
    pub high: usize,
    pub low: usize,
    pub mortar: MortarGrid,
    pub params: ParamMap,
    pub variables: Vec<(String, usize)>,
}

#[derive(Debug, Clone, Default)]
pub struct MixedDimGraph {
    pub nodes: Vec<Subdomain>,
    pub edges: Vec<Interface>,
}

impl MixedDimGraph {
    pub fn add_node(&mut self, kind: SubdomainKind, grid: Grid) -> usize {
        let id = self.nodes.len();
        self.nodes.push(Subdomain { id, dim: grid.dim, kind, grid, params: ParamMap::new(), variables: vec![] });
        id
    }

    /// Connect `high` to `low`; their dimensions must differ by exactly one.
    pub fn add_edge(&mut self, high: usize, low: usize, mortar: MortarGrid) -> Result<usize> {
        let (Some(h), Some(l)) = (self.nodes.get(high), self.nodes.get(low)) else {
            return Err(Error::Geometry(format!("edge refers to missing node ({high}, {low})")));
        };
        if h.dim != l.dim + 1 {
            return Err(Error::Geometry(format!(
                "interface between subdomains {high} (dim {}) and {low} (dim {}) violates the dimension gap of one",
                h.dim, l.dim
            )));
        }
        if mortar.mortar_to_primary_int.rows() != h.grid.num_faces() || mortar.mortar_to_secondary_int.rows() != l.grid.num_cells() {
            return Err(Error::Geometry(format!("mortar of edge ({high}, {low}) does not match the neighbour grids")));
        }
        let id = self.edges.len();
        self.edges.push(Interface { id, high, low, mortar, params: ParamMap::new(), variables: vec![] });
        Ok(id)
    }

    /// `(interfaces towards higher-dimensional neighbours, interfaces towards lower)`.
    pub fn sorted_neighbors(&self, node: usize) -> (Vec<usize>, Vec<usize>) {
        let higher = self.edges.iter().filter(|e| e.low == node).map(|e| e.id).collect();
        let lower = self.edges.iter().filter(|e| e.high == node).map(|e| e.id).collect();
        (higher, lower)
    }

    pub fn nodes_of_dim(&self, dim: usize) -> impl Iterator<Item = &Subdomain> {
        self.nodes.iter().filter(move |n| n.dim == dim)
    }

    pub fn node_of_kind(&self, kind: SubdomainKind) -> Option<usize> {
        self.nodes.iter().position(|n| n.kind == kind)
    }

    /// Check the structural invariants.
    pub fn check(&self) -> Result<()> {
        for e in &self.edges {
            let (h, l) = (&self.nodes[e.high], &self.nodes[e.low]);
            if h.dim != l.dim + 1 {
                return Err(Error::Geometry(format!("edge {} violates the dimension gap", e.id)));
            }
            let sides = e.mortar.num_sides;
            if h.dim == 2 && sides != 2 {
                return Err(Error::Geometry(format!("2D-1D edge {} has {sides} mortar sides", e.id)));
            }
        }
        Ok(())
    }
}

/// Build the graph: matrix first, then one node per fracture, then one per
/// intersection point; edges 2D-1D per fracture, then 1D-0D per
/// (fracture, point) pair.
pub fn build_graph(md: &MdGrids) -> Result<MixedDimGraph> {
    let pnet = &md.pnet;
    if md.fractures.len() != pnet.num_fractures() {
        return Err(Error::Geometry(format!("expected {} fracture grids, got {}", pnet.num_fractures(), md.fractures.len())));
    }
    let inter = pnet.intersection_points();
    for p in &inter {
        if !md.intersections.iter().any(|ig| ig.point == *p) {
            return Err(Error::Geometry(format!("missing grid for intersection point {p}")));
        }
    }
    let mut g = MixedDimGraph::default();
    let m = g.add_node(SubdomainKind::Matrix, md.matrix.clone());
    let frac_nodes: Vec<usize> = md.fractures.iter().map(|fg| g.add_node(SubdomainKind::Fracture(fg.fracture), fg.grid.clone())).collect();
    let int_nodes: Vec<usize> =
        md.intersections.iter().map(|ig| g.add_node(SubdomainKind::Intersection(ig.point), ig.grid.clone())).collect();
    for (fg, &n) in md.fractures.iter().zip(&frac_nodes) {
        let mg = build_mortar_2d1d(fg, md.matrix.num_faces(), &md.matrix.face_areas, 1e3 * pnet.tol)
            .map_err(|e| e.context(format!("fracture {}", fg.fracture)))?;
        g.add_edge(m, n, mg)?;
    }
    for (ig, &n0) in md.intersections.iter().zip(&int_nodes) {
        for &k in &ig.fractures {
            let fg = &md.fractures[k];
            g.add_edge(frac_nodes[k], n0, build_mortar_1d0d(fg, ig)?)?;
        }
    }
    g.check()?;
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::network::{FractureNetwork2, Rect};
    use crate::geom::process::process_network;
    use crate::mesh::lower::build_md_grids;
    use crate::mesh::mesher::triangulate;
    use crate::mesh::MeshSizeParams;

    fn graph(fr: Vec<[[f64; 2]; 2]>) -> MixedDimGraph {
        let net = FractureNetwork2::new(fr, Rect::unit(), None).unwrap();
        let p = process_network(&net).unwrap();
        let g = triangulate(&p, MeshSizeParams::uniform(0.125)).unwrap();
        build_graph(&build_md_grids(&g, &p, 1).unwrap()).unwrap()
    }

    #[test]
    fn x_crossing_counts() {
        let g = graph(vec![[[0.1, 0.1], [0.9, 0.9]], [[0.1, 0.9], [0.9, 0.1]]]);
        assert_eq!(g.nodes.len(), 4);
        assert_eq!(g.edges.len(), 4);
        let (hi, lo) = g.sorted_neighbors(1);
        assert_eq!((hi.len(), lo.len()), (1, 1));
        assert!(g.sorted_neighbors(0).0.is_empty());
        assert!(g.sorted_neighbors(3).1.is_empty());
        for e in &g.edges {
            let sides = e.mortar.num_sides;
            assert_eq!(sides, 2, "two sides for 2D-1D, two branches for 1D-0D");
        }
        let mut count = 0;
        for n in 0..g.nodes.len() {
            let (a, b) = g.sorted_neighbors(n);
            count += a.len() + b.len();
        }
        assert_eq!(count, 2 * g.edges.len());
    }

    #[test]
    fn isolated_fracture_counts() {
        let g = graph(vec![[[0.25, 0.5], [0.75, 0.5]]]);
        assert_eq!((g.nodes.len(), g.edges.len()), (2, 1));
    }

    #[test]
    fn equal_dimension_edge_is_rejected() {
        let mut g = graph(vec![[[0.1, 0.1], [0.9, 0.9]], [[0.1, 0.9], [0.9, 0.1]]]);
        let mortar = g.edges[0].mortar.clone();
        assert!(g.add_edge(1, 2, mortar).is_err());
    }
}
