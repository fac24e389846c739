//! Single-point upstream weighting of advective fluxes.

use super::bc::BoundaryCondition;
use crate::mesh::grid::Grid;
use crate::sparse::{scale_rows, SpMat, Triplets};

/// 0/1 selection of the upstream value per face: `c_up = cell c + bound c_b`.
/// Neumann boundary faces select nothing; their advective flux is supplied
/// separately.
pub fn upstream_selector(g: &Grid, face_flux: &[f64], bc: &BoundaryCondition) -> (SpMat, SpMat) {
    let (nf, nc) = (g.num_faces(), g.num_cells());
    let mut cell = Triplets::new(nf, nc);
    let mut bound = Triplets::new(nf, nf);
    for f in 0..nf {
        let q = face_flux[f];
        match g.face_cells[f] {
            [Some(c0), Some(c1)] => cell.push(f, if q >= 0.0 { c0 } else { c1 }, 1.0),
            _ => {
                if !bc.is_dirichlet(f) {
                    continue;
                }
                let (c, s) = g.boundary_cell(f);
                if s * q >= 0.0 {
                    cell.push(f, c, 1.0);
                } else {
                    bound.push(f, f, 1.0);
                }
            }
        }
    }
    (cell.into_csr(), bound.into_csr())
}

/// Advective face flux operators: `flux_f * c_upstream = cell c + bound c_b`.
pub struct Upwind {
    pub cell: SpMat,
    pub bound: SpMat,
}

pub fn upwind(g: &Grid, face_flux: &[f64], bc: &BoundaryCondition) -> Upwind {
    let (c, b) = upstream_selector(g, face_flux, bc);
    Upwind { cell: scale_rows(&c, face_flux), bound: scale_rows(&b, face_flux) }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretize::bc::BcKind;
    use crate::sparse::{matvec, mul};

    fn two() -> Grid {
        Grid::line(vec![[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]]).unwrap()
    }

    #[test]
    fn definition_of_upstream() {
        let g = two();
        let bc = BoundaryCondition::all(&g, BcKind::Neumann);
        for (q, expect) in [(1.0, 0.5), (-1.0, -0.3), (0.0, 0.0)] {
            let u = upwind(&g, &[0.0, q, 0.0], &bc);
            assert!((matvec(&u.cell, &[0.5, 0.3])[1] - expect).abs() < 1e-15);
        }
    }

    #[test]
    fn inflow_boundary_takes_boundary_value() {
        let g = two();
        let bc = BoundaryCondition::all(&g, BcKind::Dirichlet);
        let u = upwind(&g, &[1.0, 1.0, 1.0], &bc);
        assert_eq!(matvec(&u.bound, &[0.9, 0.0, 7.0])[0], 0.9);
        assert_eq!(matvec(&u.cell, &[0.5, 0.3])[2], 0.3);
    }

    #[test]
    fn m_matrix_sign_pattern() {
        let g = crate::mesh::structured::perturbed_square(5, 0.2, 1);
        let bc = BoundaryCondition::all(&g, BcKind::Dirichlet);
        let q: Vec<f64> = (0..g.num_faces()).map(|f| g.face_normals[f][0] + 0.3 * g.face_normals[f][1]).collect();
        let a = mul(&g.divergence(), &upwind(&g, &q, &bc).cell);
        for (v, (i, j)) in a.iter() {
            if i == j {
                assert!(*v >= -1e-14);
            } else {
                assert!(*v <= 1e-14);
            }
        }
    }
}
