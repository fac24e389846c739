//! Extraction of fracture (1D) and intersection (0D) grids from a split 2D grid.

use super::grid::{FaceTags, Grid};
use super::split::SplitGrid;
use crate::error::{Error, Result};
use crate::geom::network::Point;
use crate::geom::process::ProcessedNetwork;
use crate::geom::{add, dist, scale};

/// A 1D face at an intersection point, with its single cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Junction {
    pub point: usize,
    pub face: usize,
    pub cell: usize,
}

#[derive(Debug, Clone)]
pub struct FractureGrid {
    pub fracture: usize,
    pub grid: Grid,
    pub origin: Point,
    pub tangent: Point,
    /// Arc-length intervals of the split 2D face pairs, in order.
    pub segments: Vec<[f64; 2]>,
    pub faces_plus: Vec<usize>,
    pub faces_minus: Vec<usize>,
    /// Arc-length interval of every 1D cell.
    pub cell_intervals: Vec<[f64; 2]>,
    pub junctions: Vec<Junction>,
}

#[derive(Debug, Clone)]
pub struct IntersectionGrid {
    pub point: usize,
    pub grid: Grid,
    pub fractures: Vec<usize>,
}

/// All grids of a mixed-dimensional mesh.
#[derive(Debug, Clone)]
pub struct MdGrids {
    pub matrix: Grid,
    pub fractures: Vec<FractureGrid>,
    pub intersections: Vec<IntersectionGrid>,
    pub pnet: ProcessedNetwork,
}

/// Build the 1D and 0D grids. Fracture grids are refined `r` times relative
/// to the 2D fracture faces.
pub fn extract_lower(split: &SplitGrid, pnet: &ProcessedNetwork, r: usize) -> Result<MdGrids> {
    if r == 0 {
        return Err(Error::Mesh("refinement ratio must be at least 1".into()));
    }
    let g = &split.grid;
    let tol = pnet.tol;
    let inters = pnet.intersection_points();
    let mut fractures = Vec::with_capacity(pnet.num_fractures());
    for k in 0..pnet.num_fractures() {
        let origin = pnet.fractures[k][0];
        let t = pnet.tangent(k);
        let len = pnet.fracture_length(k);
        let mut segs: Vec<([f64; 2], usize, usize)> = split.pairs[k]
            .iter()
            .map(|&(fp, fm)| {
                let n = &g.face_nodes[fp];
                let (a, b) = (pnet.arc_length(k, g.nodes[n[0]]), pnet.arc_length(k, g.nodes[n[1]]));
                ([a.min(b), a.max(b)], fp, fm)
            })
            .collect();
        if segs.is_empty() {
            return Err(Error::Mesh(format!("fracture {k} has no tagged faces")));
        }
        segs.sort_by(|x, y| x.0[0].total_cmp(&y.0[0]));
        let mut prev = 0.0;
        for (iv, fp, _) in &segs {
            if (iv[0] - prev).abs() > tol {
                return Err(Error::Mesh(format!(
                    "fracture {k}: tagged faces do not cover the fracture (gap at arc length {prev}, face {fp})"
                )));
            }
            prev = iv[1];
        }
        if (prev - len).abs() > tol {
            return Err(Error::Mesh(format!("fracture {k}: tagged faces end at {prev}, fracture length is {len}")));
        }

        // Breakpoints and which of them are intersection points.
        let mut bps: Vec<f64> = vec![0.0];
        bps.extend(segs.iter().map(|s| s.0[1]));
        *bps.last_mut().unwrap() = len;
        let mut cell_iv = Vec::with_capacity(r * segs.len());
        let mut at_coarse = Vec::new();
        for w in bps.windows(2) {
            for i in 0..r {
                let a = w[0] + (w[1] - w[0]) * i as f64 / r as f64;
                let b = w[0] + (w[1] - w[0]) * (i + 1) as f64 / r as f64;
                cell_iv.push([a, b]);
            }
            at_coarse.push(cell_iv.len());
        }
        let point_at = |s: f64| -> Option<usize> {
            let x = add(origin, scale(t, s));
            pnet.fracture_points[k].iter().copied().find(|&p| dist(pnet.points[p], x) <= 10.0 * tol)
        };
        let n_cells = cell_iv.len();
        // Breakpoint positions (cell boundaries) 0..=n_cells.
        let mut nodes = Vec::new();
        let mut face_nodes = Vec::new();
        let mut cell_faces = vec![Vec::new(); n_cells];
        let mut cell_nodes = vec![Vec::new(); n_cells];
        let mut tags = FaceTags::default();
        let mut junctions = Vec::new();
        let push_face = |s: f64, tags: &mut FaceTags, nodes: &mut Vec<Point>, face_nodes: &mut Vec<Vec<usize>>| {
            nodes.push(add(origin, scale(t, s)));
            face_nodes.push(vec![nodes.len() - 1]);
            tags.fracture.push(None);
            tags.domain_boundary.push(false);
            tags.tip.push(false);
            tags.junction.push(None);
            face_nodes.len() - 1
        };
        for b in 0..=n_cells {
            let s = if b == n_cells { cell_iv[b - 1][1] } else { cell_iv[b][0] };
            let on_coarse = b == 0 || at_coarse.contains(&b);
            let pid = if on_coarse { point_at(s) } else { None };
            let is_junction = pid.is_some_and(|p| inters.contains(&p));
            let left = if b > 0 { Some(b - 1) } else { None };
            let right = if b < n_cells { Some(b) } else { None };
            if is_junction && left.is_some() && right.is_some() {
                for c in [left.unwrap(), right.unwrap()] {
                    let f = push_face(s, &mut tags, &mut nodes, &mut face_nodes);
                    tags.junction[f] = pid;
                    cell_faces[c].push((f, 1.0));
                    cell_nodes[c].push(face_nodes[f][0]);
                    junctions.push(Junction { point: pid.unwrap(), face: f, cell: c });
                }
            } else {
                let f = push_face(s, &mut tags, &mut nodes, &mut face_nodes);
                for c in [left, right].into_iter().flatten() {
                    cell_faces[c].push((f, 1.0));
                    cell_nodes[c].push(face_nodes[f][0]);
                }
                if left.is_none() || right.is_none() {
                    let c = left.or(right).unwrap();
                    match pid {
                        Some(p) if is_junction => {
                            tags.junction[f] = Some(p);
                            junctions.push(Junction { point: p, face: f, cell: c });
                        }
                        Some(p) if pnet.on_boundary(p) => tags.domain_boundary[f] = true,
                        _ => tags.tip[f] = true,
                    }
                }
            }
        }
        let mut grid = Grid {
            dim: 1,
            nodes,
            face_nodes,
            cell_nodes,
            cell_faces,
            face_cells: vec![],
            cell_centers: vec![],
            cell_volumes: vec![],
            face_centers: vec![],
            face_areas: vec![],
            face_normals: vec![],
            tags,
        };
        grid.compute_geometry().map_err(|e| e.context(format!("fracture {k}")))?;
        fractures.push(FractureGrid {
            fracture: k,
            grid,
            origin,
            tangent: t,
            segments: segs.iter().map(|s| s.0).collect(),
            faces_plus: segs.iter().map(|s| s.1).collect(),
            faces_minus: segs.iter().map(|s| s.2).collect(),
            cell_intervals: cell_iv,
            junctions,
        });
    }
    let intersections = inters
        .iter()
        .map(|&p| IntersectionGrid { point: p, grid: Grid::point(pnet.points[p]), fractures: pnet.point_fractures(p) })
        .collect();
    Ok(MdGrids { matrix: g.clone(), fractures, intersections, pnet: pnet.clone() })
}

/// Split the 2D grid and extract all lower-dimensional grids.
pub fn build_md_grids(grid: &Grid, pnet: &ProcessedNetwork, r: usize) -> Result<MdGrids> {
    let split = super::split::split_fracture_faces(grid, pnet)?;
    extract_lower(&split, pnet, r)
}
