//! Physical parameters consumed by the discretizations.

use crate::error::{Error, Result};

/// Symmetric 2x2 tensor `(xx, xy, yy)`.
pub type Tensor2 = [f64; 3];

#[inline]
pub fn tensor_apply(k: &Tensor2, v: [f64; 2]) -> [f64; 2] {
    [k[0] * v[0] + k[1] * v[1], k[1] * v[0] + k[2] * v[1]]
}

pub fn isotropic(k: f64) -> Tensor2 {
    [k, 0.0, k]
}

fn spd(k: &Tensor2) -> bool {
    k[0] > 0.0 && k[2] > 0.0 && k[0] * k[2] - k[1] * k[1] > 0.0
}

#[derive(Debug, Clone)]
pub struct FlowParameters {
    /// Permeability per cell (aperture-scaled in fractures).
    pub perm: Vec<Tensor2>,
    pub viscosity: f64,
    /// Source density per cell.
    pub source: Vec<f64>,
    pub porosity: Vec<f64>,
    /// Diffusivity per cell, for transport.
    pub diffusivity: Vec<Tensor2>,
}

impl FlowParameters {
    pub fn uniform(n: usize, k: f64) -> Self {
        FlowParameters {
            perm: vec![isotropic(k); n],
            viscosity: 1.0,
            source: vec![0.0; n],
            porosity: vec![1.0; n],
            diffusivity: vec![isotropic(0.0); n],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(c) = self.perm.iter().position(|k| !spd(k)) {
            return Err(Error::Config(format!("permeability of cell {c} is not positive definite")));
        }
        if let Some(c) = self.porosity.iter().position(|p| !(*p > 0.0 && *p <= 1.0)) {
            return Err(Error::Config(format!("porosity of cell {c} is outside (0, 1]")));
        }
        if !(self.viscosity > 0.0) {
            return Err(Error::Config("viscosity must be positive".into()));
        }
        if let Some(c) = self.diffusivity.iter().position(|d| d[0] < 0.0 || d[2] < 0.0 || d[0] * d[2] < d[1] * d[1]) {
            return Err(Error::Config(format!("diffusivity of cell {c} is not positive semi-definite")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct MechanicsParameters {
    pub lambda: Vec<f64>,
    pub shear_modulus: Vec<f64>,
    pub biot_alpha: f64,
    /// Storage coefficient.
    pub storage: f64,
    /// Body force density per cell.
    pub body_force: Vec<[f64; 2]>,
    pub friction: f64,
    pub c_n: f64,
    pub c_t: f64,
    pub residual_aperture: f64,
}

impl MechanicsParameters {
    pub fn uniform(n: usize, lambda: f64, g: f64) -> Self {
        MechanicsParameters {
            lambda: vec![lambda; n],
            shear_modulus: vec![g; n],
            biot_alpha: 0.0,
            storage: 0.0,
            body_force: vec![[0.0; 2]; n],
            friction: 0.0,
            c_n: 1.0,
            c_t: 1.0,
            residual_aperture: 1e-3,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (c, (&l, &g)) in self.lambda.iter().zip(&self.shear_modulus).enumerate() {
            if !(g > 0.0) || !(l > -g) {
                return Err(Error::Config(format!("invalid Lame parameters in cell {c}: lambda {l}, G {g}")));
            }
        }
        let m = self;
        if !(0.0..=1.0).contains(&m.biot_alpha) || m.storage < 0.0 || m.friction < 0.0 {
            return Err(Error::Config("Biot coefficient must be in [0, 1]; storage and friction nonnegative".into()));
        }
        if !(m.c_n > 0.0 && m.c_t > 0.0 && m.residual_aperture > 0.0) {
            return Err(Error::Config("c_n, c_t and the residual aperture must be positive".into()));
        }
        Ok(())
    }
}
