//! Conforming triangle meshes of a processed fracture network.

use super::cdt::constrained_delaunay;
use super::grid::Grid;
use super::MeshSizeParams;
use crate::error::{Error, Result};
use crate::geom::network::{Point, Rect};
use crate::geom::process::ProcessedNetwork;
use crate::geom::{dist, point_segment_distance};
use rand::seq::SliceRandom;
use rand::{RngExt, SeedableRng};
use std::collections::HashMap;

#[derive(Debug, Clone)]
pub struct MeshOptions {
    pub sizes: MeshSizeParams,
    /// Growth of the target size with distance from the nearest fracture.
    pub grading: f64,
    /// Seed for the interior point distribution.
    pub seed: u64,
    pub smoothing_passes: usize,
}

impl MeshOptions {
    pub fn new(sizes: MeshSizeParams) -> Self {
        MeshOptions { sizes, grading: 1.0, seed: 0, smoothing_passes: 3 }
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

/// Mesh with default options (seed 0).
pub fn triangulate(pnet: &ProcessedNetwork, sizes: MeshSizeParams) -> Result<Grid> {
    triangulate_with(pnet, &MeshOptions::new(sizes))
}

struct SizeField<'a> {
    pnet: &'a ProcessedNetwork,
    s: MeshSizeParams,
    grading: f64,
}

impl SizeField<'_> {
    fn frac_dist(&self, p: Point) -> f64 {
        self.pnet
            .segments
            .iter()
            .map(|s| point_segment_distance(p, self.pnet.points[s[0]], self.pnet.points[s[1]]).0)
            .fold(f64::INFINITY, f64::min)
    }

    fn h(&self, p: Point) -> f64 {
        if self.pnet.segments.is_empty() {
            return self.s.h_bound;
        }
        let d = self.frac_dist(p);
        (self.s.h_frac + self.grading * d).max(self.s.h_min).min(self.s.h_bound)
    }
}

pub fn triangulate_with(pnet: &ProcessedNetwork, opts: &MeshOptions) -> Result<Grid> {
    let s = opts.sizes;
    s.validate()?;
    let dom = pnet.domain;
    let field = SizeField { pnet, s, grading: opts.grading };

    // Constraint points: processed network points first, then subdivisions.
    let mut pts: Vec<Point> = pnet.points.clone();
    let mut constraints: Vec<[usize; 2]> = Vec::new();
    let mut frac_edge: HashMap<(usize, usize), usize> = HashMap::new();
    for (si, seg) in pnet.segments.iter().enumerate() {
        let k = pnet.segment_fracture[si];
        let (a, b) = (pnet.points[seg[0]], pnet.points[seg[1]]);
        let len = dist(a, b);
        if len < s.h_min {
            return Err(Error::Mesh(format!("fracture {k}: sub-segment of length {len:.3e} is shorter than h_min = {:.3e}", s.h_min)));
        }
        let n = ((len / s.h_frac) - 1e-9).ceil().max(1.0) as usize;
        let mut prev = seg[0];
        for i in 1..=n {
            let id = if i == n {
                seg[1]
            } else {
                let t = i as f64 / n as f64;
                pts.push([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]);
                pts.len() - 1
            };
            constraints.push([prev, id]);
            frac_edge.insert((prev.min(id), prev.max(id)), k);
            prev = id;
        }
    }

    // Boundary: corners and fracture endpoints on the boundary, ordered along
    // the perimeter, then bisected to the size field.
    let perim = |p: Point| -> f64 {
        let (w, h) = (dom.xmax - dom.xmin, dom.ymax - dom.ymin);
        let tol = pnet.tol;
        if (p[1] - dom.ymin).abs() <= tol {
            p[0] - dom.xmin
        } else if (p[0] - dom.xmax).abs() <= tol {
            w + p[1] - dom.ymin
        } else if (p[1] - dom.ymax).abs() <= tol {
            w + h + dom.xmax - p[0]
        } else {
            2.0 * w + h + dom.ymax - p[1]
        }
    };
    let mut bpts: Vec<(f64, usize)> = Vec::new();
    for corner in dom.corners() {
        let existing = (0..pnet.points.len()).find(|&i| dist(pnet.points[i], corner) <= pnet.tol);
        let id = existing.unwrap_or_else(|| {
            pts.push(corner);
            pts.len() - 1
        });
        bpts.push((perim(corner), id));
    }
    for i in 0..pnet.points.len() {
        if pnet.on_boundary(i) {
            bpts.push((perim(pnet.points[i]), i));
        }
    }
    bpts.sort_by(|a, b| a.0.total_cmp(&b.0));
    bpts.dedup_by_key(|x| x.1);
    let nb = bpts.len();
    for k in 0..nb {
        let (a, b) = (bpts[k].1, bpts[(k + 1) % nb].1);
        let mut chain = vec![pts[a]];
        bisect(&field, pts[a], pts[b], &mut chain);
        let mut prev = a;
        for p in chain.into_iter().skip(1) {
            pts.push(p);
            let id = pts.len() - 1;
            constraints.push([prev, id]);
            prev = id;
        }
        constraints.push([prev, b]);
    }
    let n_fixed = pts.len();

    // Interior points by variable-radius dart throwing on a jittered lattice.
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(opts.seed);
    let h_lo = if pnet.segments.is_empty() { s.h_bound } else { s.h_frac.min(s.h_bound) };
    let g = 0.35 * h_lo;
    let nx = ((dom.xmax - dom.xmin) / g).ceil() as usize;
    let ny = ((dom.ymax - dom.ymin) / g).ceil() as usize;
    let mut cands = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let x = dom.xmin + (i as f64 + rng.random_range(0.0..1.0)) * g;
            let y = dom.ymin + (j as f64 + rng.random_range(0.0..1.0)) * g;
            if x < dom.xmax && y < dom.ymax {
                cands.push([x, y]);
            }
        }
    }
    cands.shuffle(&mut rng);

    let mut hash = SpatialHash::new(&dom, h_lo);
    let mut hs: Vec<f64> = pts.iter().map(|&p| field.h(p)).collect();
    for (i, &p) in pts.iter().enumerate() {
        hash.insert(p, i);
    }
    let radius = |ha: f64, hb: f64| 0.8 * 0.5 * (ha + hb);
    for p in cands {
        let hp = field.h(p);
        if dom.boundary_distance(p) < 0.5 * hp || field.frac_dist(p) < 0.5 * hp {
            continue;
        }
        let reach = (0.8 * hp * (1.0 + opts.grading)).min(0.8 * s.h_bound.max(hp));
        let ok = hash.all_within(p, reach, |q| dist(pts[q], p) >= radius(hp, hs[q]));
        if ok {
            pts.push(p);
            hs.push(hp);
            hash.insert(p, pts.len() - 1);
        }
    }

    // Laplacian smoothing of the free points, re-triangulating each pass.
    let mut tris = constrained_delaunay(&pts, &constraints)?;
    for _ in 0..opts.smoothing_passes {
        let mut sum = vec![[0.0, 0.0]; pts.len()];
        let mut cnt = vec![0usize; pts.len()];
        for t in &tris {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                for (x, y) in [(a, b), (b, a)] {
                    sum[x][0] += pts[y][0];
                    sum[x][1] += pts[y][1];
                    cnt[x] += 1;
                }
            }
        }
        for i in n_fixed..pts.len() {
            if cnt[i] == 0 {
                continue;
            }
            let q = [sum[i][0] / cnt[i] as f64, sum[i][1] / cnt[i] as f64];
            let hq = field.h(q);
            if dom.boundary_distance(q) >= 0.4 * hq && field.frac_dist(q) >= 0.4 * hq {
                pts[i] = q;
            }
        }
        tris = constrained_delaunay(&pts, &constraints)?;
    }

    let mut grid = Grid::from_triangles(pts, &tris)?;
    for f in 0..grid.num_faces() {
        let n = &grid.face_nodes[f];
        if let Some(&k) = frac_edge.get(&(n[0].min(n[1]), n[0].max(n[1]))) {
            grid.tags.fracture[f] = Some(k);
        }
    }
    grid.tag_domain_boundary(&dom, pnet.tol);
    let total: f64 = grid.cell_volumes.iter().sum();
    if (total - dom.area()).abs() > 1e-9 * dom.area() {
        return Err(Error::Mesh(format!("mesh covers area {total}, domain has {}", dom.area())));
    }
    Ok(grid)
}

fn bisect(field: &SizeField, a: Point, b: Point, out: &mut Vec<Point>) {
    let m = [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])];
    if dist(a, b) > 1.2 * field.h(m) {
        bisect(field, a, m, out);
        out.push(m);
        bisect(field, m, b, out);
    }
}

struct SpatialHash {
    x0: f64,
    y0: f64,
    cell: f64,
    nx: i64,
    ny: i64,
    buckets: Vec<Vec<usize>>,
}

impl SpatialHash {
    fn new(dom: &Rect, cell: f64) -> Self {
        let nx = ((dom.xmax - dom.xmin) / cell).ceil() as i64 + 1;
        let ny = ((dom.ymax - dom.ymin) / cell).ceil() as i64 + 1;
        SpatialHash { x0: dom.xmin, y0: dom.ymin, cell, nx, ny, buckets: vec![Vec::new(); (nx * ny) as usize] }
    }

    fn key(&self, p: Point) -> (i64, i64) {
        let k = |v: f64, n: i64| (v / self.cell).floor().clamp(0.0, (n - 1) as f64) as i64;
        (k(p[0] - self.x0, self.nx), k(p[1] - self.y0, self.ny))
    }

    fn insert(&mut self, p: Point, i: usize) {
        let (kx, ky) = self.key(p);
        self.buckets[(ky * self.nx + kx) as usize].push(i);
    }

    /// True if `ok` holds for every point within bucket reach `r` of `p`.
    /// Buckets are visited in rings around `p` so nearby conflicts are found
    /// first.
    fn all_within(&self, p: Point, r: f64, ok: impl Fn(usize) -> bool) -> bool {
        let (kx, ky) = self.key(p);
        let m = (r / self.cell).ceil() as i64;
        let bucket = |i: i64, j: i64| -> bool {
            if i < 0 || j < 0 || i >= self.nx || j >= self.ny {
                return true;
            }
            self.buckets[(j * self.nx + i) as usize].iter().all(|&q| ok(q))
        };
        for ring in 0..=m {
            if ring == 0 {
                if !bucket(kx, ky) {
                    return false;
                }
                continue;
            }
            for d in -ring..=ring {
                if !(bucket(kx + d, ky - ring) && bucket(kx + d, ky + ring)) {
                    return false;
                }
            }
            for d in -ring + 1..ring {
                if !(bucket(kx - ring, ky + d) && bucket(kx + ring, ky + d)) {
                    return false;
                }
            }
        }
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::network::{FractureNetwork2, Rect};
    use crate::geom::process::process_network;

    fn mesh(fr: Vec<[Point; 2]>, h: f64) -> Grid {
        let net = FractureNetwork2::new(fr, Rect::unit(), None).unwrap();
        let p = process_network(&net).unwrap();
        triangulate(&p, MeshSizeParams::uniform(h)).unwrap()
    }

    #[test]
    fn empty_network_covers_the_square() {
        let g = mesh(vec![], 0.5);
        let total: f64 = g.cell_volumes.iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn horizontal_fracture_is_recovered() {
        let g = mesh(vec![[[0.25, 0.5], [0.75, 0.5]]], 0.1);
        let tagged: Vec<usize> = (0..g.num_faces()).filter(|&f| g.tags.fracture[f] == Some(0)).collect();
        let total: f64 = tagged.iter().map(|&f| g.face_areas[f]).sum();
        assert!((total - 0.5).abs() < 1e-12);
        for &f in &tagged {
            for &n in &g.face_nodes[f] {
                assert!((g.nodes[n][1] - 0.5).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn x_crossing_point_is_a_shared_node() {
        let g = mesh(vec![[[0.1, 0.1], [0.9, 0.9]], [[0.1, 0.9], [0.9, 0.1]]], 0.1);
        // Brute-force scan for the node and the tagged edges touching it.
        let node = (0..g.num_nodes()).find(|&n| dist(g.nodes[n], [0.5, 0.5]) < 1e-12).expect("node at crossing");
        let mut seen = [0; 2];
        for f in 0..g.num_faces() {
            if g.face_nodes[f].contains(&node) {
                if let Some(k) = g.tags.fracture[f] {
                    seen[k] += 1;
                }
            }
        }
        assert_eq!(seen, [2, 2]);
    }

    #[test]
    fn short_segment_is_rejected_with_fracture_id() {
        let net = FractureNetwork2::new(vec![[[0.1, 0.5], [0.9, 0.5]], [[0.5, 0.1], [0.5, 0.501]]], Rect::unit(), None).unwrap();
        let p = process_network(&net).unwrap();
        let err = triangulate(&p, MeshSizeParams::new(0.01, 0.05, 0.1).unwrap()).unwrap_err();
        assert!(err.to_string().contains("fracture 1"), "{err}");
    }

    #[test]
    fn seeds_change_the_realization_deterministically() {
        let net = FractureNetwork2::new(vec![[[0.2, 0.3], [0.8, 0.6]]], Rect::unit(), None).unwrap();
        let p = process_network(&net).unwrap();
        let o = MeshOptions::new(MeshSizeParams::uniform(0.1));
        let a = triangulate_with(&p, &o.clone().seed(1)).unwrap();
        let b = triangulate_with(&p, &o.clone().seed(1)).unwrap();
        let c = triangulate_with(&p, &o.seed(2)).unwrap();
        assert_eq!(a.nodes, b.nodes);
        assert_ne!(a.nodes, c.nodes);
    }
}
