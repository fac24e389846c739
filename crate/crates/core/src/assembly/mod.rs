//! Degrees of freedom, interface laws, global assembly and solvers.

pub mod ad;
pub mod block;
pub mod contact;
pub mod dofs;
pub mod laws;
pub mod linsolve;
pub mod newton;
