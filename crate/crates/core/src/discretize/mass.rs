//! Lumped accumulation operators.

use crate::mesh::grid::Grid;
use crate::sparse::{diag, SpMat};

/// Diagonal matrix with entries `coeff * cell measure`.
pub fn mass_matrix(g: &Grid, coeff: &[f64]) -> SpMat {
    assert_eq!(coeff.len(), g.num_cells());
    let d: Vec<f64> = coeff.iter().zip(&g.cell_volumes).map(|(c, v)| c * v).collect();
    diag(&d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparse::to_dense;

    #[test]
    fn examples() {
        let sq = crate::mesh::structured::cartesian_triangles(1, 1, crate::geom::network::Rect::unit());
        let m = to_dense(&mass_matrix(&sq, &[1.0, 1.0]));
        assert_eq!((m[0][0], m[1][1], m[0][1]), (0.5, 0.5, 0.0));
        assert_eq!(mass_matrix(&sq, &[0.0, 0.0]).nnz(), 0);
        let line = Grid::line(vec![[0.0, 0.0], [0.3, 0.0], [1.0, 0.0]]).unwrap();
        let m = to_dense(&mass_matrix(&line, &[2.0, 2.0]));
        assert!((m[0][0] - 0.6).abs() < 1e-15 && (m[1][1] - 1.4).abs() < 1e-15);
    }
}
