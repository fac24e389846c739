//! Interface laws on mortar grids. Mortar fluxes are extensive (integrated
//! over the mortar cell) and positive from the higher- to the
//! lower-dimensional neighbour.

use crate::discretize::FluxDiscretization;
use crate::error::{Error, Result};
use crate::mesh::grid::Grid;
use crate::mesh::mortar::MortarGrid;
use crate::sparse::{add, diag, mul, scale, scale_rows, SpMat, Triplets};

/// Coupling blocks of a scalar interface law.
#[derive(Debug, Clone)]
pub struct CouplingBlocks {
    pub mortar_mortar: SpMat,
    pub mortar_high: SpMat,
    pub mortar_low: SpMat,
    pub high_mortar: SpMat,
    pub low_mortar: SpMat,
}

/// Mortar flux to boundary flux density on the higher-dimensional faces.
pub fn mortar_to_neumann(mg: &MortarGrid, face_areas: &[f64]) -> SpMat {
    let inv: Vec<f64> = face_areas.iter().map(|a| 1.0 / a).collect();
    scale_rows(&mg.mortar_to_primary_ext, &inv)
}

/// Face values from the adjacent cells: the mean over both cells on interior
/// faces and the single cell on boundary faces.
pub fn face_average(g: &Grid) -> SpMat {
    let mut t = Triplets::new(g.num_faces(), g.num_cells());
    for (f, fc) in g.face_cells.iter().enumerate() {
        match fc {
            [Some(a), Some(b)] => {
                t.push(f, *a, 0.5);
                t.push(f, *b, 0.5);
            }
            [Some(a), None] | [None, Some(a)] => t.push(f, *a, 1.0),
            [None, None] => {}
        }
    }
    t.into_csr()
}

/// Robin law `(mu / kappa) lambda + m (Pi p_l - Pi tr p_h) = 0` per mortar
/// cell. The higher neighbour sees `lambda` as Neumann data through its
/// boundary flux; the lower neighbour sees it as a source.
pub fn robin_coupling(mg: &MortarGrid, high: &FluxDiscretization, high_grid: &Grid, kappa: &[f64], mu: &[f64]) -> Result<CouplingBlocks> {
    if let Some(k) = kappa.iter().position(|k| !(*k > 0.0) || !k.is_finite()) {
        return Err(Error::Assembly(format!("normal permeability {} of mortar cell {k} is not positive", kappa[k])));
    }
    let resist: Vec<f64> = mu.iter().zip(kappa).map(|(m, k)| m / k).collect();
    Ok(scaled_law(mg, high, high_grid, &resist, &vec![1.0; kappa.len()]))
}

/// Diffusive law `beta + delta m (Pi c_l - Pi tr c_h) = 0`. When the higher
/// neighbour has no diffusion operator the trace is the adjacent cell value.
pub fn diffusive_coupling(mg: &MortarGrid, high: Option<&FluxDiscretization>, high_grid: &Grid, delta: &[f64]) -> CouplingBlocks {
    let n = delta.len();
    match high {
        Some(d) => scaled_law(mg, d, high_grid, &vec![1.0; n], delta),
        None => {
            let m: Vec<f64> = mg.cell_measures.iter().zip(delta).map(|(a, b)| a * b).collect();
            let adj = face_average(high_grid);
            CouplingBlocks {
                mortar_mortar: diag(&vec![1.0; n]),
                mortar_high: scale(&scale_rows(&mul(&mg.primary_to_mortar_int, &adj), &m), -1.0),
                mortar_low: scale_rows(&mg.secondary_to_mortar_int, &m),
                high_mortar: mul(&cell_from_boundary_face(high_grid), &mg.mortar_to_primary_ext),
                low_mortar: scale(&mg.mortar_to_secondary_ext, -1.0),
            }
        }
    }
}

/// Rows `r_k x_k + w_k m_k (Pi v_l - Pi tr v_h)_k`.
fn scaled_law(mg: &MortarGrid, high: &FluxDiscretization, g: &Grid, r: &[f64], w: &[f64]) -> CouplingBlocks {
    let nmat = mortar_to_neumann(mg, &g.face_areas);
    let m: Vec<f64> = mg.cell_measures.iter().zip(w).map(|(a, b)| a * b).collect();
    let pi_h = scale_rows(&mg.primary_to_mortar_int, &m);
    let tr_b = mul(&pi_h, &mul(&high.trace_bound, &nmat));
    CouplingBlocks {
        mortar_mortar: add(&diag(r), &scale(&tr_b, -1.0)),
        mortar_high: scale(&mul(&pi_h, &high.trace_cell), -1.0),
        mortar_low: scale_rows(&mg.secondary_to_mortar_int, &m),
        high_mortar: mul(&g.divergence(), &mul(&high.bound_flux, &nmat)),
        low_mortar: scale(&mg.mortar_to_secondary_ext, -1.0),
    }
}

/// Cell outflow from boundary face fluxes given as outward totals.
pub fn cell_from_boundary_face(g: &Grid) -> SpMat {
    let mut t = Triplets::new(g.num_cells(), g.num_faces());
    for f in g.boundary_faces() {
        let (c, _) = g.boundary_cell(f);
        t.push(c, f, 1.0);
    }
    t.into_csr()
}

/// Upstream weights of the advective mortar flux: `(higher, lower)` with
/// `lambda >= 0` selecting the higher-dimensional side.
pub fn mortar_upstream(lambda: &[f64]) -> (Vec<f64>, Vec<f64>) {
    lambda.iter().map(|&l| if l >= 0.0 { (1.0, 0.0) } else { (0.0, 1.0) }).unzip()
}

/// Advective mortar flux `eta = lambda * c_upstream`.
pub fn advective_flux(lambda: &[f64], c_high: &[f64], c_low: &[f64]) -> Vec<f64> {
    let (wh, wl) = mortar_upstream(lambda);
    (0..lambda.len()).map(|k| lambda[k] * (wh[k] * c_high[k] + wl[k] * c_low[k])).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretize::tpfa::{half_transmissibility, tpfa};
    use crate::discretize::{BcKind, BoundaryCondition, FlowParameters};
    use crate::mesh::mortar::{MortarCells, MortarGrid};
    use crate::sparse::to_dense;

    #[test]
    fn advective_branches() {
        assert_eq!(advective_flux(&[2.0], &[0.5], &[0.3]), vec![1.0]);
        assert!((advective_flux(&[-2.0], &[0.5], &[0.3])[0] + 0.6).abs() < 1e-15);
        assert_eq!(advective_flux(&[0.0], &[0.5], &[0.3]), vec![0.0]);
        assert_eq!(mortar_upstream(&[0.0]), (vec![1.0], vec![0.0]));
    }

    /// One triangle whose bottom face (unit length) couples through one
    /// mortar cell to one 1D cell.
    fn toy() -> (Grid, MortarGrid, usize) {
        let g = Grid::from_triangles(vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], &[[0, 1, 2]]).unwrap();
        let f = (0..3).find(|&f| g.face_centers[f][1].abs() < 1e-12).unwrap();
        let cells =
            MortarCells { side: vec![0], measures: vec![1.0], centers: vec![[0.5, 0.0]], normals: vec![[0.0, -1.0]], sign: vec![1.0] };
        let mg = MortarGrid::from_overlaps(cells, &vec![(0, f, 1.0)], &g.face_areas, &vec![(0, 0, 1.0)], &[1.0], 1e-12).unwrap();
        (g, mg, f)
    }

    #[test]
    fn robin_toy_matches_hand_assembly() {
        let (g, mg, f) = toy();
        let d = tpfa(&g, &FlowParameters::uniform(1, 1.0), &BoundaryCondition::all(&g, BcKind::Neumann)).unwrap();
        let b = robin_coupling(&mg, &d, &g, &[1.0], &[1.0]).unwrap();
        let (_, s) = g.boundary_cell(f);
        let t = half_transmissibility(&g, &[1.0, 0.0, 1.0], 0, f, s).unwrap();
        // Unknowns (p_h, lambda, p_l). Matrix cell: outflow lambda through
        // the Neumann face. Mortar: lambda + p_l - (p_h - lambda / t) = 0.
        // Fracture cell: -lambda.
        let expected = [[0.0, 1.0, 0.0], [-1.0, 1.0 + 1.0 / t, 1.0], [0.0, -1.0, 0.0]];
        let got = [
            [0.0, to_dense(&b.high_mortar)[0][0], 0.0],
            [to_dense(&b.mortar_high)[0][0], to_dense(&b.mortar_mortar)[0][0], to_dense(&b.mortar_low)[0][0]],
            [0.0, to_dense(&b.low_mortar)[0][0], 0.0],
        ];
        for i in 0..3 {
            for j in 0..3 {
                assert!((expected[i][j] - got[i][j]).abs() < 1e-12, "{i} {j}: {got:?}");
            }
        }
        assert!(robin_coupling(&mg, &d, &g, &[0.0], &[1.0]).is_err());
    }

    #[test]
    fn diffusive_toy_matches_hand_assembly() {
        let (g, mg, _) = toy();
        // Without a diffusion operator the trace is the cell value:
        // beta + delta (c_l - c_h) = 0.
        let b = diffusive_coupling(&mg, None, &g, &[0.5]);
        assert_eq!(to_dense(&b.mortar_mortar)[0][0], 1.0);
        assert!((to_dense(&b.mortar_high)[0][0] + 0.5).abs() < 1e-15);
        assert!((to_dense(&b.mortar_low)[0][0] - 0.5).abs() < 1e-15);
        assert_eq!(to_dense(&b.high_mortar)[0][0], 1.0);
        assert_eq!(to_dense(&b.low_mortar)[0][0], -1.0);
        // delta = 0 decouples beta.
        let z = diffusive_coupling(&mg, None, &g, &[0.0]);
        assert_eq!(crate::sparse::max_abs(&z.mortar_high), 0.0);
    }
}
