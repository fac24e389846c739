//! Dimension-agnostic cell/face/node grid embedded in the plane.

use crate::error::{Error, Result};
use crate::geom::network::Point;
use crate::geom::{cross, dist, dot, norm, scale, sub};
use crate::sparse::{SpMat, Triplets};
use std::collections::HashMap;

/// Per-face markers.
#[derive(Debug, Clone, Default)]
pub struct FaceTags {
    /// Fracture id for faces on a fracture (2D grids).
    pub fracture: Vec<Option<usize>>,
    /// Face lies on the outer domain boundary.
    pub domain_boundary: Vec<bool>,
    /// Immersed fracture tip (1D grids).
    pub tip: Vec<bool>,
    /// Intersection point id for faces at fracture intersections (1D grids).
    pub junction: Vec<Option<usize>>,
}

impl FaceTags {
    fn sized(n: usize) -> Self {
        FaceTags { fracture: vec![None; n], domain_boundary: vec![false; n], tip: vec![false; n], junction: vec![None; n] }
    }

    fn push_copy(&mut self, f: usize) {
        self.fracture.push(self.fracture[f]);
        self.domain_boundary.push(self.domain_boundary[f]);
        self.tip.push(self.tip[f]);
        self.junction.push(self.junction[f]);
    }
}

#[derive(Debug, Clone)]
pub struct Grid {
    pub dim: usize,
    pub nodes: Vec<Point>,
    /// Two nodes per face in 2D, one in 1D, none in 0D.
    pub face_nodes: Vec<Vec<usize>>,
    /// Cell nodes, counter-clockwise in 2D and ordered along the line in 1D.
    pub cell_nodes: Vec<Vec<usize>>,
    /// Cell faces with orientation sign: +1 when the face normal points out of the cell.
    pub cell_faces: Vec<Vec<(usize, f64)>>,
    /// `[cell with sign +1, cell with sign -1]`.
    pub face_cells: Vec<[Option<usize>; 2]>,
    pub cell_centers: Vec<Point>,
    pub cell_volumes: Vec<f64>,
    pub face_centers: Vec<Point>,
    pub face_areas: Vec<f64>,
    /// Unit face normals.
    pub face_normals: Vec<Point>,
    pub tags: FaceTags,
}

impl Grid {
    fn empty(dim: usize) -> Grid {
        Grid {
            dim,
            nodes: vec![],
            face_nodes: vec![],
            cell_nodes: vec![],
            cell_faces: vec![],
            face_cells: vec![],
            cell_centers: vec![],
            cell_volumes: vec![],
            face_centers: vec![],
            face_areas: vec![],
            face_normals: vec![],
            tags: FaceTags::default(),
        }
    }

    /// Triangle grid from nodes and (any-orientation) node triples.
    pub fn from_triangles(nodes: Vec<Point>, tris: &[[usize; 3]]) -> Result<Grid> {
        let mut g = Grid::empty(2);
        let mut edge_id: HashMap<(usize, usize), usize> = HashMap::new();
        for (c, t) in tris.iter().enumerate() {
            let mut t = *t;
            let area2 = cross(sub(nodes[t[1]], nodes[t[0]]), sub(nodes[t[2]], nodes[t[0]]));
            if area2 < 0.0 {
                t.swap(1, 2);
            }
            let mut faces = Vec::with_capacity(3);
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                let key = (a.min(b), a.max(b));
                let f = *edge_id.entry(key).or_insert_with(|| {
                    g.face_nodes.push(vec![key.0, key.1]);
                    g.face_nodes.len() - 1
                });
                faces.push((f, 1.0));
            }
            g.cell_nodes.push(t.to_vec());
            g.cell_faces.push(faces);
            let _ = c;
        }
        g.nodes = nodes;
        g.tags = FaceTags::sized(g.face_nodes.len());
        g.compute_geometry()?;
        Ok(g)
    }

    /// 1D grid through `points`, ordered along a straight line.
    pub fn line(points: Vec<Point>) -> Result<Grid> {
        let n = points.len();
        if n < 2 {
            return Err(Error::Mesh("a 1D grid needs at least two nodes".into()));
        }
        let mut g = Grid::empty(1);
        g.face_nodes = (0..n).map(|i| vec![i]).collect();
        g.cell_nodes = (0..n - 1).map(|i| vec![i, i + 1]).collect();
        g.cell_faces = (0..n - 1).map(|i| vec![(i, 1.0), (i + 1, 1.0)]).collect();
        g.nodes = points;
        g.tags = FaceTags::sized(n);
        g.compute_geometry()?;
        Ok(g)
    }

    /// Single-cell point grid.
    pub fn point(p: Point) -> Grid {
        let mut g = Grid::empty(0);
        g.nodes = vec![p];
        g.cell_nodes = vec![vec![0]];
        g.cell_faces = vec![vec![]];
        g.cell_centers = vec![p];
        g.cell_volumes = vec![1.0];
        g
    }

    pub fn num_cells(&self) -> usize {
        self.cell_nodes.len()
    }

    pub fn num_faces(&self) -> usize {
        self.face_nodes.len()
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    /// Faces with a single neighbouring cell.
    pub fn is_boundary_face(&self, f: usize) -> bool {
        self.face_cells[f].iter().filter(|c| c.is_some()).count() == 1
    }

    pub fn boundary_faces(&self) -> Vec<usize> {
        (0..self.num_faces()).filter(|&f| self.is_boundary_face(f)).collect()
    }

    /// The cell of a boundary face together with its orientation sign.
    pub fn boundary_cell(&self, f: usize) -> (usize, f64) {
        match self.face_cells[f] {
            [Some(c), None] => (c, 1.0),
            [None, Some(c)] => (c, -1.0),
            _ => panic!("face {f} is not a boundary face"),
        }
    }

    /// Tangent of a 1D grid.
    pub fn tangent(&self) -> Point {
        assert_eq!(self.dim, 1);
        self.face_normals[0]
    }

    /// Signed divergence: `(div q)_c = sum_f sign(c, f) q_f`.
    pub fn divergence(&self) -> SpMat {
        let mut t = Triplets::new(self.num_cells(), self.num_faces());
        for (c, faces) in self.cell_faces.iter().enumerate() {
            for &(f, s) in faces {
                t.push(c, f, s);
            }
        }
        t.into_csr()
    }

    /// Duplicate face `f`: the copy has the same nodes and tags but no cells.
    pub(crate) fn duplicate_face(&mut self, f: usize) -> usize {
        self.face_nodes.push(self.face_nodes[f].clone());
        self.tags.push_copy(f);
        self.face_nodes.len() - 1
    }

    /// Compute centers, measures, normals, orientation signs and the
    /// face-to-cell map from topology and node coordinates.
    pub fn compute_geometry(&mut self) -> Result<()> {
        let nc = self.num_cells();
        let nf = self.num_faces();
        match self.dim {
            0 => return Ok(()),
            1 => {
                let t = {
                    let c = &self.cell_nodes[0];
                    let d = sub(self.nodes[c[1]], self.nodes[c[0]]);
                    scale(d, 1.0 / norm(d))
                };
                self.face_centers = self.face_nodes.iter().map(|fn_| self.nodes[fn_[0]]).collect();
                self.face_areas = vec![1.0; nf];
                self.face_normals = vec![t; nf];
                self.cell_volumes = Vec::with_capacity(nc);
                self.cell_centers = Vec::with_capacity(nc);
                for (c, cn) in self.cell_nodes.iter().enumerate() {
                    let (a, b) = (self.nodes[cn[0]], self.nodes[cn[1]]);
                    let len = dot(sub(b, a), t);
                    if !(len > 0.0) {
                        return Err(Error::Mesh(format!("degenerate 1D cell {c} (length {len})")));
                    }
                    self.cell_volumes.push(len);
                    self.cell_centers.push(scale([a[0] + b[0], a[1] + b[1]], 0.5));
                }
            }
            2 => {
                self.face_centers = Vec::with_capacity(nf);
                self.face_areas = Vec::with_capacity(nf);
                self.face_normals = Vec::with_capacity(nf);
                for (f, fn_) in self.face_nodes.iter().enumerate() {
                    let (a, b) = (self.nodes[fn_[0]], self.nodes[fn_[1]]);
                    let d = sub(b, a);
                    let l = norm(d);
                    if !(l > 0.0) {
                        return Err(Error::Mesh(format!("degenerate face {f}")));
                    }
                    self.face_centers.push(scale([a[0] + b[0], a[1] + b[1]], 0.5));
                    self.face_areas.push(l);
                    self.face_normals.push([d[1] / l, -d[0] / l]);
                }
                self.cell_volumes = Vec::with_capacity(nc);
                self.cell_centers = Vec::with_capacity(nc);
                for (c, cn) in self.cell_nodes.iter().enumerate() {
                    let (mut area2, mut cx, mut cy) = (0.0, 0.0, 0.0);
                    let p0 = self.nodes[cn[0]];
                    for k in 1..cn.len() - 1 {
                        let (p1, p2) = (self.nodes[cn[k]], self.nodes[cn[k + 1]]);
                        let a2 = cross(sub(p1, p0), sub(p2, p0));
                        area2 += a2;
                        cx += a2 * (p0[0] + p1[0] + p2[0]) / 3.0;
                        cy += a2 * (p0[1] + p1[1] + p2[1]) / 3.0;
                    }
                    if !(area2 > 0.0) {
                        return Err(Error::Mesh(format!("degenerate or inverted cell {c} (area {})", area2 / 2.0)));
                    }
                    self.cell_volumes.push(area2 / 2.0);
                    self.cell_centers.push([cx / area2, cy / area2]);
                }
            }
            d => return Err(Error::Mesh(format!("unsupported grid dimension {d}"))),
        }

        // Orientation signs from geometry, then the face-to-cell map.
        self.face_cells = vec![[None, None]; nf];
        for c in 0..nc {
            let xc = self.cell_centers[c];
            for k in 0..self.cell_faces[c].len() {
                let f = self.cell_faces[c][k].0;
                let s = dot(sub(self.face_centers[f], xc), self.face_normals[f]);
                let sign = if s > 0.0 { 1.0 } else { -1.0 };
                self.cell_faces[c][k].1 = sign;
                let slot = if sign > 0.0 { 0 } else { 1 };
                if self.face_cells[f][slot].is_some() {
                    return Err(Error::Mesh(format!("face {f} has two cells on the same side")));
                }
                self.face_cells[f][slot] = Some(c);
            }
        }
        if self.dim == 2 {
            for c in 0..nc {
                let mut sum = [0.0, 0.0];
                for &(f, s) in &self.cell_faces[c] {
                    sum[0] += s * self.face_normals[f][0] * self.face_areas[f];
                    sum[1] += s * self.face_normals[f][1] * self.face_areas[f];
                }
                let scale = self.cell_faces[c].iter().map(|&(f, _)| self.face_areas[f]).sum::<f64>();
                if norm(sum) > 1e-10 * scale {
                    return Err(Error::Mesh(format!("cell {c} is not a closed polygon")));
                }
            }
        }
        Ok(())
    }

    /// Map from nodes to the cells containing them.
    pub fn node_cells(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.num_nodes()];
        for (c, cn) in self.cell_nodes.iter().enumerate() {
            for &n in cn {
                out[n].push(c);
            }
        }
        out
    }

    /// Map from nodes to the faces containing them.
    pub fn node_faces(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.num_nodes()];
        for (f, fn_) in self.face_nodes.iter().enumerate() {
            for &n in fn_ {
                out[n].push(f);
            }
        }
        out
    }

    /// Cell containing point `p` (2D), by brute force.
    pub fn locate(&self, p: Point) -> Option<usize> {
        assert_eq!(self.dim, 2);
        (0..self.num_cells()).find(|&c| {
            let cn = &self.cell_nodes[c];
            (0..cn.len()).all(|k| {
                let a = self.nodes[cn[k]];
                let b = self.nodes[cn[(k + 1) % cn.len()]];
                cross(sub(b, a), sub(p, a)) >= -1e-12 * dist(a, b)
            })
        })
    }

    /// Smallest and largest face measure.
    pub fn face_size_range(&self) -> (f64, f64) {
        self.face_areas.iter().fold((f64::INFINITY, 0.0_f64), |(lo, hi), &a| (lo.min(a), hi.max(a)))
    }

    /// Tag faces on the boundary of `rect` as domain boundary.
    pub fn tag_domain_boundary(&mut self, rect: &crate::geom::network::Rect, tol: f64) {
        for f in 0..self.num_faces() {
            if self.dim == 2 && self.is_boundary_face(f) && self.tags.fracture[f].is_none() {
                let x = self.face_centers[f];
                self.tags.domain_boundary[f] = rect.boundary_distance(x).abs() <= tol;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn right_triangle_geometry() {
        let g = Grid::from_triangles(vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], &[[0, 1, 2]]).unwrap();
        assert!((g.cell_volumes[0] - 0.5).abs() < 1e-15);
        assert!(dist(g.cell_centers[0], [1.0 / 3.0, 1.0 / 3.0]) < 1e-15);
        assert_eq!(g.boundary_faces().len(), 3);
    }

    #[test]
    fn line_measures() {
        let g = Grid::line(vec![[0.0, 0.0], [0.3, 0.0], [1.0, 0.0]]).unwrap();
        assert!((g.cell_volumes[0] - 0.3).abs() < 1e-15);
        assert!((g.cell_volumes[1] - 0.7).abs() < 1e-15);
        assert_eq!(g.face_cells[1], [Some(0), Some(1)]);
    }

    #[test]
    fn two_triangle_square() {
        let g = Grid::from_triangles(vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]], &[[0, 1, 2], [0, 2, 3]]).unwrap();
        assert_eq!((g.num_cells(), g.num_faces(), g.num_nodes()), (2, 5, 4));
        let interior: Vec<_> = (0..5).filter(|&f| !g.is_boundary_face(f)).collect();
        assert_eq!(interior.len(), 1);
        let f = interior[0];
        let [a, b] = g.face_cells[f];
        let sa = g.cell_faces[a.unwrap()].iter().find(|x| x.0 == f).unwrap().1;
        let sb = g.cell_faces[b.unwrap()].iter().find(|x| x.0 == f).unwrap().1;
        assert_eq!(sa, -sb);
    }

    #[test]
    fn degenerate_cell_is_named() {
        let err = Grid::from_triangles(vec![[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]], &[[0, 1, 2]]).unwrap_err();
        assert!(err.to_string().contains("cell 0"), "{err}");
    }

    proptest! {
        #[test]
        fn geometry_is_permutation_covariant(seed in 0u64..200) {
            use rand::{seq::SliceRandom, SeedableRng};
            let g = crate::mesh::structured::perturbed_square(4, 0.2, seed);
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut perm: Vec<usize> = (0..g.num_cells()).collect();
            perm.shuffle(&mut rng);
            let tris: Vec<[usize; 3]> = perm.iter().map(|&c| {
                let n = &g.cell_nodes[c];
                [n[0], n[1], n[2]]
            }).collect();
            let h = Grid::from_triangles(g.nodes.clone(), &tris).unwrap();
            for (new, &old) in perm.iter().enumerate() {
                prop_assert_eq!(h.cell_volumes[new], g.cell_volumes[old]);
                prop_assert_eq!(h.cell_centers[new], g.cell_centers[old]);
            }
        }

        #[test]
        fn closure_holds_on_random_grids(seed in 0u64..200) {
            let g = crate::mesh::structured::perturbed_square(5, 0.25, seed);
            for c in 0..g.num_cells() {
                let mut sum = [0.0, 0.0];
                for &(f, s) in &g.cell_faces[c] {
                    sum[0] += s * g.face_normals[f][0] * g.face_areas[f];
                    sum[1] += s * g.face_normals[f][1] * g.face_areas[f];
                }
                prop_assert!(norm(sum) < 1e-12);
                prop_assert!(g.cell_volumes[c] > 0.0);
            }
        }
    }
}
