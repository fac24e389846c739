//! Boundary condition kinds per face.

use crate::error::{Error, Result};
use crate::mesh::grid::Grid;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BcKind {
    Dirichlet,
    Neumann,
}

/// Scalar boundary conditions; `None` on interior faces.
#[derive(Debug, Clone)]
pub struct BoundaryCondition {
    pub kinds: Vec<Option<BcKind>>,
}

impl BoundaryCondition {
    /// Every boundary face gets `kind`.
    pub fn all(g: &Grid, kind: BcKind) -> Self {
        BoundaryCondition { kinds: (0..g.num_faces()).map(|f| if g.is_boundary_face(f) { Some(kind) } else { None }).collect() }
    }

    pub fn set(&mut self, f: usize, kind: BcKind) {
        assert!(self.kinds[f].is_some(), "face {f} is not a boundary face");
        self.kinds[f] = Some(kind);
    }

    pub fn is_dirichlet(&self, f: usize) -> bool {
        self.kinds[f] == Some(BcKind::Dirichlet)
    }

    pub fn is_neumann(&self, f: usize) -> bool {
        self.kinds[f] == Some(BcKind::Neumann)
    }

    pub fn validate(&self, g: &Grid) -> Result<()> {
        if self.kinds.len() != g.num_faces() {
            return Err(Error::Discretization("boundary condition size does not match the grid".into()));
        }
        for f in 0..g.num_faces() {
            if g.is_boundary_face(f) != self.kinds[f].is_some() {
                return Err(Error::Discretization(format!("face {f}: boundary conditions must be given exactly on boundary faces")));
            }
        }
        Ok(())
    }
}

/// Per-component boundary conditions for vector problems.
#[derive(Debug, Clone)]
pub struct VectorBc {
    pub kinds: Vec<Option<[BcKind; 2]>>,
}

impl VectorBc {
    pub fn all(g: &Grid, kind: BcKind) -> Self {
        VectorBc { kinds: (0..g.num_faces()).map(|f| if g.is_boundary_face(f) { Some([kind; 2]) } else { None }).collect() }
    }

    pub fn set(&mut self, f: usize, kinds: [BcKind; 2]) {
        assert!(self.kinds[f].is_some(), "face {f} is not a boundary face");
        self.kinds[f] = Some(kinds);
    }

    pub fn validate(&self, g: &Grid) -> Result<()> {
        if self.kinds.len() != g.num_faces() {
            return Err(Error::Discretization("boundary condition size does not match the grid".into()));
        }
        for f in 0..g.num_faces() {
            if g.is_boundary_face(f) != self.kinds[f].is_some() {
                return Err(Error::Discretization(format!("face {f}: boundary conditions must be given exactly on boundary faces")));
            }
        }
        Ok(())
    }
}
