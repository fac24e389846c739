//! Fixed-dimensional finite-volume discretizations.

pub mod bc;
pub mod mass;
pub mod mpfa;
pub mod mpsa;
pub mod params;
pub mod tpfa;
pub mod upwind;

pub use bc::{BcKind, BoundaryCondition, VectorBc};
pub use params::{FlowParameters, MechanicsParameters, Tensor2};

use crate::sparse::SpMat;

/// Operators of a scalar flux discretization. Boundary data is indexed by
/// face: a pressure on Dirichlet faces, an outward flux density on Neumann
/// faces. Face fluxes follow the face normal orientation.
#[derive(Debug, Clone)]
pub struct FluxDiscretization {
    /// Cell pressures to face fluxes.
    pub flux: SpMat,
    /// Boundary data to face fluxes.
    pub bound_flux: SpMat,
    /// Cell pressures to face pressures.
    pub trace_cell: SpMat,
    /// Boundary data to face pressures.
    pub trace_bound: SpMat,
}

/// Operators of the stress discretization. Vector quantities are stored
/// interleaved `(x, y)` per cell or face.
#[derive(Debug, Clone)]
pub struct StressDiscretization {
    /// Cell displacements to face tractions (force, along the face normal frame).
    pub stress: SpMat,
    /// Boundary data (displacement or traction density) to face tractions.
    pub bound_stress: SpMat,
    /// Cell pressures to face tractions.
    pub grad_p: SpMat,
    /// Cell displacements to cell volumetric change.
    pub div_u: SpMat,
    /// Boundary data to cell volumetric change.
    pub bound_div_u: SpMat,
    /// Cell pressures to cell volumetric change.
    pub stabilization: SpMat,
    /// Face displacement reconstruction from cells, boundary data and pressures.
    pub disp_cell: SpMat,
    pub disp_bound: SpMat,
    pub disp_p: SpMat,
}
