//! Multi-point flux approximation (O-method) on simplicial grids, with
//! pressure continuity at face centers.

use super::bc::BoundaryCondition;
use super::params::{tensor_apply, FlowParameters, Tensor2};
use super::tpfa::tpfa_tensor;
use super::FluxDiscretization;
use crate::error::{Error, Result};
use crate::geom::{dot, sub};
use crate::mesh::grid::Grid;
use crate::sparse::Triplets;
use nalgebra::DMatrix;

pub fn mpfa(g: &Grid, p: &FlowParameters, bc: &BoundaryCondition) -> Result<FluxDiscretization> {
    mpfa_tensor(g, &p.perm, bc)
}

/// Subcell gradient operator of cell `c` around node `v`: returns the two local
/// faces and `D = G^{-1}` where the rows of `G` are `x_f - x_c`.
pub(crate) fn subcell_gradient(g: &Grid, c: usize, v: usize) -> Option<([usize; 2], [[f64; 2]; 2])> {
    subcell_gradient_at(g, c, v, |_| 0.0)
}

/// As [`subcell_gradient`] with the continuity point of face `f` moved a
/// fraction `eta(f)` from the face center towards the vertex.
pub(crate) fn subcell_gradient_at(g: &Grid, c: usize, v: usize, eta: impl Fn(usize) -> f64) -> Option<([usize; 2], [[f64; 2]; 2])> {
    let fs: Vec<usize> = g.cell_faces[c].iter().map(|e| e.0).filter(|&f| g.face_nodes[f].contains(&v)).collect();
    if fs.len() != 2 {
        return None;
    }
    let xc = g.cell_centers[c];
    let point = |f: usize| {
        let xf = g.face_centers[f];
        let e = eta(f);
        [xf[0] + e * (g.nodes[v][0] - xf[0]), xf[1] + e * (g.nodes[v][1] - xf[1])]
    };
    let r0 = sub(point(fs[0]), xc);
    let r1 = sub(point(fs[1]), xc);
    let det = r0[0] * r1[1] - r0[1] * r1[0];
    if det.abs() < 1e-14 * dot(r0, r0).max(dot(r1, r1)) {
        return None;
    }
    // G = [r0; r1], D = G^{-1}; column k of D multiplies (pi_k - p_c).
    let d = [[r1[1] / det, -r0[1] / det], [-r1[0] / det, r0[0] / det]];
    Some(([fs[0], fs[1]], d))
}

pub fn mpfa_tensor(g: &Grid, k: &[Tensor2], bc: &BoundaryCondition) -> Result<FluxDiscretization> {
    if g.dim != 2 {
        return tpfa_tensor(g, k, bc);
    }
    bc.validate(g)?;
    let (nf, nc) = (g.num_faces(), g.num_cells());
    let mut flux = Triplets::new(nf, nc);
    let mut bflux = Triplets::new(nf, nf);
    let mut tcell = Triplets::new(nf, nc);
    let mut tbound = Triplets::new(nf, nf);
    let node_cells = g.node_cells();
    let node_faces = g.node_faces();

    for v in 0..g.num_nodes() {
        let cells = &node_cells[v];
        let faces = &node_faces[v];
        if cells.is_empty() {
            continue;
        }
        let nl = faces.len();
        let ncl = cells.len();
        let lf = |f: usize| faces.iter().position(|&x| x == f).unwrap();
        let lc = |c: usize| cells.iter().position(|&x| x == c).unwrap();

        // Half-face flux of cell c through local face j as coefficients on
        // (pi, p_local).
        let mut sub_ops = Vec::with_capacity(ncl);
        for &c in cells {
            let (fs, d) = subcell_gradient(g, c, v)
                .ok_or_else(|| Error::Discretization(format!("singular subcell gradient for cell {c} at vertex {v}")))?;
            sub_ops.push((fs, d));
        }
        let half_flux = |ci: usize, f: usize| -> (Vec<(usize, f64)>, f64) {
            let c = cells[ci];
            let (fs, d) = sub_ops[ci];
            let kn = tensor_apply(&k[c], g.face_normals[f]);
            let w = -0.5 * g.face_areas[f];
            let a0 = w * (kn[0] * d[0][0] + kn[1] * d[1][0]);
            let a1 = w * (kn[0] * d[0][1] + kn[1] * d[1][1]);
            (vec![(lf(fs[0]), a0), (lf(fs[1]), a1)], -(a0 + a1))
        };

        let mut a = DMatrix::<f64>::zeros(nl, nl);
        let mut bp = DMatrix::<f64>::zeros(nl, ncl);
        let mut bg = DMatrix::<f64>::zeros(nl, nl);
        for (j, &f) in faces.iter().enumerate() {
            match g.face_cells[f] {
                [Some(c0), Some(c1)] => {
                    for (c, s) in [(c0, 1.0), (c1, -1.0)] {
                        let ci = lc(c);
                        let (qp, qc) = half_flux(ci, f);
                        for (jj, val) in qp {
                            a[(j, jj)] += s * val;
                        }
                        bp[(j, ci)] -= s * qc;
                    }
                }
                _ => {
                    let (c, s) = g.boundary_cell(f);
                    if bc.is_dirichlet(f) {
                        a[(j, j)] = 1.0;
                        bg[(j, j)] = 1.0;
                    } else {
                        let ci = lc(c);
                        let (qp, qc) = half_flux(ci, f);
                        for (jj, val) in qp {
                            a[(j, jj)] += val;
                        }
                        bp[(j, ci)] -= qc;
                        bg[(j, j)] = s * 0.5 * g.face_areas[f];
                    }
                }
            }
        }
        let lu = a.lu();
        let pp =
            lu.solve(&bp).ok_or_else(|| Error::Discretization(format!("singular local system in the interaction region of vertex {v}")))?;
        let pg = lu.solve(&bg).unwrap();
        if pp.iter().chain(pg.iter()).any(|x| !x.is_finite()) {
            return Err(Error::Discretization(format!("singular local system in the interaction region of vertex {v}")));
        }

        for (j, &f) in faces.iter().enumerate() {
            let boundary = g.is_boundary_face(f);
            if boundary && bc.is_neumann(f) {
                let (_, s) = g.boundary_cell(f);
                bflux.push(f, f, s * 0.5 * g.face_areas[f]);
            } else {
                let c = g.face_cells[f][0].or(g.face_cells[f][1]).unwrap();
                let ci = lc(c);
                let (qp, qc) = half_flux(ci, f);
                let mut rowp = vec![0.0; ncl];
                rowp[ci] += qc;
                let mut rowg = vec![0.0; nl];
                for (jj, val) in qp {
                    for m in 0..ncl {
                        rowp[m] += val * pp[(jj, m)];
                    }
                    for m in 0..nl {
                        rowg[m] += val * pg[(jj, m)];
                    }
                }
                for m in 0..ncl {
                    flux.push(f, cells[m], rowp[m]);
                }
                for m in 0..nl {
                    bflux.push(f, faces[m], rowg[m]);
                }
            }
            if boundary && bc.is_dirichlet(f) {
                tbound.push(f, f, 0.5);
            } else {
                for m in 0..ncl {
                    tcell.push(f, cells[m], 0.5 * pp[(j, m)]);
                }
                for m in 0..nl {
                    tbound.push(f, faces[m], 0.5 * pg[(j, m)]);
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

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretize::bc::BcKind;
    use crate::discretize::params::isotropic;
    use crate::sparse::{matvec, max_abs, sub as msub};
    use proptest::prelude::*;

    /// Boundary data for the field p(x) = a.x + b under kind `kind`.
    fn linear_data(g: &Grid, bc: &BoundaryCondition, k: &Tensor2, a: [f64; 2], b: f64) -> Vec<f64> {
        (0..g.num_faces())
            .map(|f| {
                if !g.is_boundary_face(f) {
                    0.0
                } else if bc.is_dirichlet(f) {
                    dot(a, g.face_centers[f]) + b
                } else {
                    let (_, s) = g.boundary_cell(f);
                    let n = [s * g.face_normals[f][0], s * g.face_normals[f][1]];
                    -dot(n, tensor_apply(k, a))
                }
            })
            .collect()
    }

    fn check_linear(g: &Grid, bc: &BoundaryCondition, k: Tensor2, a: [f64; 2]) -> f64 {
        let d = mpfa_tensor(g, &vec![k; g.num_cells()], bc).unwrap();
        let p: Vec<f64> = g.cell_centers.iter().map(|x| dot(a, *x) + 0.3).collect();
        let gb = linear_data(g, bc, &k, a, 0.3);
        let q = matvec(&d.flux, &p);
        let qb = matvec(&d.bound_flux, &gb);
        let tr: Vec<f64> = matvec(&d.trace_cell, &p).iter().zip(matvec(&d.trace_bound, &gb)).map(|(x, y)| x + y).collect();
        let mut err: f64 = 0.0;
        for f in 0..g.num_faces() {
            let exact = -dot(g.face_normals[f], tensor_apply(&k, a)) * g.face_areas[f];
            err = err.max((q[f] + qb[f] - exact).abs());
            err = err.max((tr[f] - dot(a, g.face_centers[f]) - 0.3).abs());
        }
        err
    }

    #[test]
    fn linear_field_dirichlet() {
        let g = crate::mesh::structured::perturbed_square(6, 0.25, 7);
        let bc = BoundaryCondition::all(&g, BcKind::Dirichlet);
        assert!(check_linear(&g, &bc, isotropic(1.0), [1.0, 0.0]) < 1e-10);
    }

    #[test]
    fn linear_field_mixed_anisotropic() {
        let g = crate::mesh::structured::perturbed_square(6, 0.25, 8);
        let mut bc = BoundaryCondition::all(&g, BcKind::Dirichlet);
        for f in g.boundary_faces() {
            if g.face_centers[f][1] < 1e-12 {
                bc.set(f, BcKind::Neumann);
            }
        }
        assert!(check_linear(&g, &bc, [2.0, 0.5, 1.0], [0.7, -1.3]) < 1e-10);
    }

    #[test]
    fn equals_tpfa_on_equilateral_grid() {
        let g = crate::mesh::structured::equilateral(6, 5, 0.2);
        let k = vec![isotropic(3.0); g.num_cells()];
        let bc = BoundaryCondition::all(&g, BcKind::Dirichlet);
        let a = mpfa_tensor(&g, &k, &bc).unwrap();
        let b = tpfa_tensor(&g, &k, &bc).unwrap();
        assert!(max_abs(&msub(&a.flux, &b.flux)) < 1e-10);
        assert!(max_abs(&msub(&a.bound_flux, &b.bound_flux)) < 1e-10);
    }

    #[test]
    fn constant_field_no_flux() {
        let g = crate::mesh::structured::perturbed_square(5, 0.2, 2);
        let d = mpfa_tensor(&g, &vec![isotropic(1.0); g.num_cells()], &BoundaryCondition::all(&g, BcKind::Neumann)).unwrap();
        assert!(matvec(&d.flux, &vec![2.5; g.num_cells()]).iter().all(|v| v.abs() < 1e-12));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn linear_exactness_on_random_meshes(seed in 0u64..10_000, ax in -2.0..2.0f64, ay in -2.0..2.0f64) {
            let g = crate::mesh::structured::perturbed_square(5, 0.3, seed);
            let bc = BoundaryCondition::all(&g, BcKind::Dirichlet);
            prop_assert!(check_linear(&g, &bc, [1.5, 0.2, 0.8], [ax, ay]) < 1e-10);
        }
    }
}
