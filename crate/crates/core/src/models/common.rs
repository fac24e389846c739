//! Shared setup for the physics drivers: geometry construction and boundary
//! data.

use crate::error::{Error, Result, ResultExt};
use crate::geom::graph::{build_graph, MixedDimGraph, SubdomainKind};
use crate::geom::network::{FractureNetwork2, Point};
use crate::geom::process::process_network;
use crate::mesh::grid::Grid;
use crate::mesh::lower::{build_md_grids, MdGrids};
use crate::mesh::mesher::{triangulate_with, MeshOptions};

/// Where the 2D mesh comes from.
#[derive(Debug, Clone)]
pub enum MeshSource {
    Generate(MeshOptions),
    /// An imported grid whose fracture faces are already tagged.
    Imported(Grid),
}

/// The mixed-dimensional grids together with their graph.
#[derive(Debug, Clone)]
pub struct Geometry {
    pub md: MdGrids,
    pub graph: MixedDimGraph,
}

impl Geometry {
    /// Graph node of original fracture `k`.
    pub fn fracture_node(&self, k: usize) -> usize {
        self.graph.node_of_kind(SubdomainKind::Fracture(k)).expect("every fracture has a node")
    }

    pub fn num_fractures(&self) -> usize {
        self.md.fractures.len()
    }

    /// Edge between the matrix and fracture `k`.
    pub fn fracture_edge(&self, k: usize) -> usize {
        let n = self.fracture_node(k);
        self.graph.edges.iter().position(|e| e.low == n && e.high == 0).expect("every fracture has an edge")
    }
}

/// Process, mesh, split and extract. `refine` is the ratio of fracture cells
/// per 2D fracture face.
pub fn build_geometry(net: &FractureNetwork2, mesh: &MeshSource, refine: usize) -> Result<Geometry> {
    let pnet = process_network(net).context(|| "processing the fracture network".into())?;
    let grid = match mesh {
        MeshSource::Generate(opts) => triangulate_with(&pnet, opts).context(|| "meshing".into())?,
        MeshSource::Imported(g) => {
            let mut g = g.clone();
            g.tag_domain_boundary(&pnet.domain, pnet.tol);
            g
        }
    };
    let md = build_md_grids(&grid, &pnet, refine).context(|| "building fracture grids".into())?;
    let graph = build_graph(&md)?;
    Ok(Geometry { md, graph })
}

/// Boundary value on a domain-boundary face: a pressure, or an outward flux
/// density.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundaryValue {
    Pressure(f64),
    Flux(f64),
}

/// Sides of a rectangular domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
    Bottom,
    Top,
}

/// Boundary values per side; corners belong to the left/right sides.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SideValues {
    pub left: BoundaryValue,
    pub right: BoundaryValue,
    pub bottom: BoundaryValue,
    pub top: BoundaryValue,
}

impl SideValues {
    pub fn no_flow() -> Self {
        let z = BoundaryValue::Flux(0.0);
        SideValues { left: z, right: z, bottom: z, top: z }
    }

    pub fn get(&self, s: Side) -> BoundaryValue {
        match s {
            Side::Left => self.left,
            Side::Right => self.right,
            Side::Bottom => self.bottom,
            Side::Top => self.top,
        }
    }
}

/// Side of the domain rectangle closest to `p`.
pub fn side_of(domain: &crate::geom::network::Rect, p: Point) -> Side {
    let d = [
        (p[0] - domain.xmin, Side::Left),
        (domain.xmax - p[0], Side::Right),
        (p[1] - domain.ymin, Side::Bottom),
        (domain.ymax - p[1], Side::Top),
    ];
    d.iter().min_by(|a, b| a.0.total_cmp(&b.0)).unwrap().1
}

/// Check that a parameter vector indexed by fracture has the right length.
pub fn check_per_fracture<T>(v: &[T], n: usize, what: &str) -> Result<()> {
    if v.len() != n {
        return Err(Error::Config(format!("{what}: expected {n} values (one per fracture), got {}", v.len())));
    }
    Ok(())
}

/// Harmonic mean of positive values.
pub fn harmonic_mean(v: &[f64]) -> f64 {
    v.len() as f64 / v.iter().map(|x| 1.0 / x).sum::<f64>()
}
