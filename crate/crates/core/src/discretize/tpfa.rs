//! Two-point flux approximation.

use super::bc::BoundaryCondition;
use super::params::{tensor_apply, FlowParameters, Tensor2};
use super::FluxDiscretization;
use crate::error::{Error, Result};
use crate::geom::{dot, scale, sub};
use crate::mesh::grid::Grid;
use crate::sparse::Triplets;

pub fn tpfa(g: &Grid, p: &FlowParameters, bc: &BoundaryCondition) -> Result<FluxDiscretization> {
    tpfa_tensor(g, &p.perm, bc)
}

/// Half transmissibility of cell `c` towards face `f`:
/// `|f| (n_out . K d) / |d|^2` with `d` from the cell center to the face center.
pub fn half_transmissibility(g: &Grid, k: &Tensor2, c: usize, f: usize, sign: f64) -> Result<f64> {
    let d = sub(g.face_centers[f], g.cell_centers[c]);
    let n = scale(g.face_normals[f], sign);
    let t = g.face_areas[f] * dot(n, tensor_apply(k, d)) / dot(d, d);
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::Discretization(format!("non-positive half transmissibility {t} between cell {c} and face {f}")));
    }
    Ok(t)
}

pub fn tpfa_tensor(g: &Grid, k: &[Tensor2], bc: &BoundaryCondition) -> Result<FluxDiscretization> {
    bc.validate(g)?;
    let (nf, nc) = (g.num_faces(), g.num_cells());
    let mut flux = Triplets::new(nf, nc);
    let mut bflux = Triplets::new(nf, nf);
    let mut tcell = Triplets::new(nf, nc);
    let mut tbound = Triplets::new(nf, nf);
    for f in 0..nf {
        match g.face_cells[f] {
            [Some(c0), Some(c1)] => {
                let t0 = half_transmissibility(g, &k[c0], c0, f, 1.0)?;
                let t1 = half_transmissibility(g, &k[c1], c1, f, -1.0)?;
                let t = t0 * t1 / (t0 + t1);
                flux.push(f, c0, t);
                flux.push(f, c1, -t);
                tcell.push(f, c0, t0 / (t0 + t1));
                tcell.push(f, c1, t1 / (t0 + t1));
            }
            _ => {
                let (c, s) = g.boundary_cell(f);
                let t = half_transmissibility(g, &k[c], c, f, s)?;
                if bc.is_dirichlet(f) {
                    flux.push(f, c, s * t);
                    bflux.push(f, f, -s * t);
                    tbound.push(f, f, 1.0);
                } else {
                    bflux.push(f, f, s * g.face_areas[f]);
                    tcell.push(f, c, 1.0);
                    tbound.push(f, f, -g.face_areas[f] / t);
                }
            }
        }
    }
    Ok(FluxDiscretization {
        flux: flux.into_csr(),
        bound_flux: bflux.into_csr(),
        trace_cell: tcell.into_csr(),
        trace_bound: tbound.into_csr(),
    })
}
