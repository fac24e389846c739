//! Grids, meshing, fracture splitting, lower-dimensional grids and mortars.

pub mod cdt;
pub mod grid;
pub mod locate;
pub mod lower;
pub mod mesher;
pub mod mortar;
pub mod msh;
pub mod split;
pub mod structured;
pub mod vtk;

use crate::error::{Error, Result};

/// Target edge lengths near fractures, at the boundary, and the lower bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeshSizeParams {
    pub h_min: f64,
    pub h_frac: f64,
    pub h_bound: f64,
}

impl MeshSizeParams {
    pub fn new(h_min: f64, h_frac: f64, h_bound: f64) -> Result<Self> {
        let p = MeshSizeParams { h_min, h_frac, h_bound };
        p.validate()?;
        Ok(p)
    }

    pub fn uniform(h: f64) -> Self {
        MeshSizeParams { h_min: h / 10.0, h_frac: h, h_bound: h }
    }

    pub fn validate(&self) -> Result<()> {
        let MeshSizeParams { h_min, h_frac, h_bound } = *self;
        if !(h_min > 0.0 && h_min <= h_frac && h_min <= h_bound) {
            return Err(Error::Config(format!(
                "mesh sizes must satisfy 0 < h_min <= h_frac and h_min <= h_bound (got {h_min}, {h_frac}, {h_bound})"
            )));
        }
        Ok(())
    }
}
