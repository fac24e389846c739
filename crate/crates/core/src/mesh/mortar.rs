//! Mortar grids on interfaces and lowest-order projections.
//!
//! With overlap `o` between mortar cell `k` (measure `m_k`) and a subdomain
//! entity `e` (measure `s_e`), the projections are
//!
//! * to mortar, intensive: `o / m_k`; extensive: `o / s_e`
//! * from mortar, intensive: `o / s_e`; extensive: `o / m_k`
//!
//! so that intensive maps average and extensive maps preserve totals.

use super::lower::{FractureGrid, IntersectionGrid};
use crate::error::{Error, Result};
use crate::geom::network::Point;
use crate::geom::{add, rot90, scale};
use crate::sparse::{transpose, SpMat, Triplets};

#[derive(Debug, Clone)]
pub struct MortarGrid {
    pub num_sides: usize,
    /// Side index of every mortar cell; cells are ordered side by side.
    pub cell_side: Vec<usize>,
    pub cell_measures: Vec<f64>,
    pub cell_centers: Vec<Point>,
    /// Unit normal pointing out of the higher-dimensional neighbour, per cell.
    pub cell_normals: Vec<Point>,
    /// +1 on the plus side of a fracture, -1 on the minus side.
    pub cell_sign: Vec<f64>,
    pub primary_to_mortar_int: SpMat,
    pub primary_to_mortar_ext: SpMat,
    pub mortar_to_primary_int: SpMat,
    pub mortar_to_primary_ext: SpMat,
    pub secondary_to_mortar_int: SpMat,
    pub secondary_to_mortar_ext: SpMat,
    pub mortar_to_secondary_int: SpMat,
    pub mortar_to_secondary_ext: SpMat,
}

/// Geometric description of mortar cells before projections are computed.
pub struct MortarCells {
    pub side: Vec<usize>,
    pub measures: Vec<f64>,
    pub centers: Vec<Point>,
    pub normals: Vec<Point>,
    pub sign: Vec<f64>,
}

/// Overlap list `(mortar cell, entity, overlap measure)`.
pub type Overlaps = Vec<(usize, usize, f64)>;

impl MortarGrid {
    pub fn num_cells(&self) -> usize {
        self.cell_measures.len()
    }

    pub fn from_overlaps(
        cells: MortarCells,
        primary: &Overlaps,
        primary_measures: &[f64],
        secondary: &Overlaps,
        secondary_measures: &[f64],
        tol: f64,
    ) -> Result<MortarGrid> {
        let nm = cells.measures.len();
        let check = |ov: &Overlaps, what: &str| -> Result<()> {
            let mut cover = vec![0.0; nm];
            for &(k, _, o) in ov {
                cover[k] += o;
            }
            for k in 0..nm {
                if (cover[k] - cells.measures[k]).abs() > tol.max(1e-12 * cells.measures[k]) {
                    return Err(Error::Geometry(format!(
                        "mortar cell {k} is covered by {what} entities over {} instead of {}",
                        cover[k], cells.measures[k]
                    )));
                }
            }
            Ok(())
        };
        check(primary, "higher-dimensional")?;
        check(secondary, "lower-dimensional")?;
        let build = |ov: &Overlaps, ne: usize, meas: &[f64]| {
            let mut to_int = Triplets::new(nm, ne);
            let mut to_ext = Triplets::new(nm, ne);
            for &(k, e, o) in ov {
                to_int.push(k, e, o / cells.measures[k]);
                to_ext.push(k, e, o / meas[e]);
            }
            let (to_int, to_ext) = (to_int.into_csr(), to_ext.into_csr());
            let from_int = transpose(&to_ext);
            let from_ext = transpose(&to_int);
            (to_int, to_ext, from_int, from_ext)
        };
        let (p2m_i, p2m_e, m2p_i, m2p_e) = build(primary, primary_measures.len(), primary_measures);
        let (s2m_i, s2m_e, m2s_i, m2s_e) = build(secondary, secondary_measures.len(), secondary_measures);
        Ok(MortarGrid {
            num_sides: cells.side.iter().copied().max().map_or(0, |m| m + 1),
            cell_side: cells.side,
            cell_measures: cells.measures,
            cell_centers: cells.centers,
            cell_normals: cells.normals,
            cell_sign: cells.sign,
            primary_to_mortar_int: p2m_i,
            primary_to_mortar_ext: p2m_e,
            mortar_to_primary_int: m2p_i,
            mortar_to_primary_ext: m2p_e,
            secondary_to_mortar_int: s2m_i,
            secondary_to_mortar_ext: s2m_e,
            mortar_to_secondary_int: m2s_i,
            mortar_to_secondary_ext: m2s_e,
        })
    }
}

/// Overlap of 1D intervals, by a sweep over both sorted lists.
pub fn interval_overlaps(a: &[[f64; 2]], b: &[[f64; 2]]) -> Overlaps {
    let mut out = Vec::new();
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            let o = x[1].min(y[1]) - x[0].max(y[0]);
            if o > 0.0 {
                out.push((i, j, o));
            }
        }
    }
    out
}

/// Mortar between the 2D matrix and fracture grid `fg`: one copy of the
/// fracture face segments per side, plus side first.
pub fn build_mortar_2d1d(fg: &FractureGrid, matrix_faces: usize, face_areas: &[f64], tol: f64) -> Result<MortarGrid> {
    let ns = fg.segments.len();
    let en = rot90(fg.tangent);
    let mut cells = MortarCells { side: vec![], measures: vec![], centers: vec![], normals: vec![], sign: vec![] };
    let mut mort_iv = Vec::with_capacity(2 * ns);
    for side in 0..2 {
        for iv in &fg.segments {
            cells.side.push(side);
            cells.measures.push(iv[1] - iv[0]);
            cells.centers.push(add(fg.origin, scale(fg.tangent, 0.5 * (iv[0] + iv[1]))));
            // The plus side wall faces -e_n.
            let s = if side == 0 { 1.0 } else { -1.0 };
            cells.normals.push(scale(en, -s));
            cells.sign.push(s);
            mort_iv.push(*iv);
        }
    }
    let mut primary = Vec::with_capacity(2 * ns);
    for (i, iv) in fg.segments.iter().enumerate() {
        let l = iv[1] - iv[0];
        primary.push((i, fg.faces_plus[i], l));
        primary.push((ns + i, fg.faces_minus[i], l));
    }
    for &(k, f, _) in &primary {
        if (face_areas[f] - cells.measures[k]).abs() > tol.max(1e-12) {
            return Err(Error::Geometry(format!("mortar cell {k} does not match face {f}")));
        }
    }
    let secondary = interval_overlaps(&mort_iv, &fg.cell_intervals);
    let pm: Vec<f64> = (0..matrix_faces).map(|f| face_areas[f]).collect();
    MortarGrid::from_overlaps(cells, &primary, &pm, &secondary, &fg.grid.cell_volumes, tol)
}

/// Mortar between fracture grid `fg` and intersection `ig`: one unit-measure
/// cell per fracture branch meeting the point.
pub fn build_mortar_1d0d(fg: &FractureGrid, ig: &IntersectionGrid) -> Result<MortarGrid> {
    let js: Vec<_> = fg.junctions.iter().filter(|j| j.point == ig.point).collect();
    if js.is_empty() {
        return Err(Error::Geometry(format!("fracture {} has no branch at intersection point {}", fg.fracture, ig.point)));
    }
    let mut cells = MortarCells { side: vec![], measures: vec![], centers: vec![], normals: vec![], sign: vec![] };
    let mut primary = Vec::new();
    let mut secondary = Vec::new();
    for (k, j) in js.iter().enumerate() {
        let s = fg.grid.cell_faces[j.cell].iter().find(|e| e.0 == j.face).unwrap().1;
        cells.side.push(k);
        cells.measures.push(1.0);
        cells.centers.push(ig.grid.cell_centers[0]);
        cells.normals.push(scale(fg.grid.face_normals[j.face], s));
        cells.sign.push(1.0);
        primary.push((k, j.face, 1.0));
        secondary.push((k, 0, 1.0));
    }
    MortarGrid::from_overlaps(cells, &primary, &fg.grid.face_areas, &secondary, &ig.grid.cell_volumes, 1e-12)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparse::{matvec, to_dense};
    use proptest::prelude::*;

    fn toy(mortar: &[[f64; 2]], lower: &[[f64; 2]]) -> MortarGrid {
        let n = mortar.len();
        let cells = MortarCells {
            side: vec![0; n],
            measures: mortar.iter().map(|x| x[1] - x[0]).collect(),
            centers: vec![[0.0, 0.0]; n],
            normals: vec![[0.0, 1.0]; n],
            sign: vec![1.0; n],
        };
        let prim = (0..n).map(|i| (i, i, mortar[i][1] - mortar[i][0])).collect();
        let pm: Vec<f64> = mortar.iter().map(|x| x[1] - x[0]).collect();
        let lm: Vec<f64> = lower.iter().map(|x| x[1] - x[0]).collect();
        MortarGrid::from_overlaps(cells, &prim, &pm, &interval_overlaps(mortar, lower), &lm, 1e-12).unwrap()
    }

    #[test]
    fn matching_grids_give_identity() {
        let iv = [[0.0, 0.3], [0.3, 0.5], [0.5, 1.0]];
        let m = toy(&iv, &iv);
        for a in [&m.secondary_to_mortar_int, &m.mortar_to_secondary_ext, &m.primary_to_mortar_int] {
            let d = to_dense(a);
            for i in 0..3 {
                for j in 0..3 {
                    assert!((d[i][j] - if i == j { 1.0 } else { 0.0 }).abs() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn two_to_one_refinement_averages() {
        let m = toy(&[[0.0, 0.5], [0.5, 1.0]], &[[0.0, 0.25], [0.25, 0.5], [0.5, 0.75], [0.75, 1.0]]);
        // Brute-force overlaps: each mortar cell covers two fine cells by halves.
        for row in to_dense(&m.secondary_to_mortar_int) {
            let nz: Vec<f64> = row.into_iter().filter(|v| *v != 0.0).collect();
            assert_eq!(nz, vec![0.5, 0.5]);
        }
        let out = matvec(&m.mortar_to_secondary_ext, &[1.0, 0.0]);
        assert!((out.iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }

    fn partition() -> impl Strategy<Value = Vec<[f64; 2]>> {
        prop::collection::vec(0.05..1.0f64, 1..8).prop_map(|w| {
            let tot: f64 = w.iter().sum();
            let mut s = 0.0;
            w.iter()
                .map(|x| {
                    let a = s;
                    s += x / tot;
                    [a, s]
                })
                .collect::<Vec<_>>()
        })
    }

    proptest! {
        #[test]
        fn partition_of_unity_and_duality(m in partition(), l in partition(), seed in 0u64..1000) {
            let mut l = l;
            l.last_mut().unwrap()[1] = m.last().unwrap()[1];
            let mg = toy(&m, &l);
            for v in matvec(&mg.secondary_to_mortar_int, &vec![1.0; l.len()]) {
                prop_assert!((v - 1.0).abs() < 1e-12);
            }
            for v in matvec(&mg.mortar_to_secondary_int, &vec![1.0; m.len()]) {
                prop_assert!((v - 1.0).abs() < 1e-12);
            }
            use rand::{RngExt, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let x: Vec<f64> = (0..l.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
            let y: Vec<f64> = (0..m.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
            let lhs: f64 = matvec(&mg.secondary_to_mortar_int, &x).iter().zip(&y).map(|(a, b)| a * b).sum();
            let rhs: f64 = x.iter().zip(matvec(&mg.mortar_to_secondary_ext, &y)).map(|(a, b)| a * b).sum();
            prop_assert!((lhs - rhs).abs() < 1e-12);
            let tot: f64 = matvec(&mg.mortar_to_secondary_ext, &y).iter().sum();
            prop_assert!((tot - y.iter().sum::<f64>()).abs() < 1e-12);
        }
    }
}
