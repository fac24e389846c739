//! Mixed-dimensional discrete fracture-matrix simulation in two dimensions.
//!
//! The matrix is a 2D subdomain, fractures are 1D subdomains and fracture
//! intersections are 0D subdomains. Subdomains are coupled through mortar
//! grids on the interfaces between them, and every coupled system is
//! assembled from fixed-dimensional discretizations plus interface laws.

pub mod assembly;
pub mod discretize;
pub mod error;
pub mod geom;
pub mod mesh;
pub mod models;
pub mod sparse;
pub mod verify;

pub use assembly::ad::Ad;
pub use assembly::dofs::{DofManager, Entity};
pub use error::{Error, ErrorKind, Result};
pub use geom::graph::{Interface, MixedDimGraph, Subdomain, SubdomainKind};
pub use geom::network::{FractureNetwork2, Point, Rect};
pub use geom::process::{process_network, ProcessedNetwork};
pub use mesh::grid::Grid;
pub use mesh::mortar::MortarGrid;
pub use mesh::MeshSizeParams;
pub use sparse::SpMat;
