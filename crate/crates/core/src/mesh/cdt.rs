//! Constrained Delaunay triangulation: Bowyer-Watson insertion followed by
//! flip-based recovery of constraint edges and Lawson restoration.

use crate::error::{Error, Result};
use crate::geom::network::Point;
use robust::Coord;
use std::collections::{HashMap, HashSet};

const NONE: usize = usize::MAX;

#[inline]
fn c(p: Point) -> Coord<f64> {
    Coord { x: p[0], y: p[1] }
}

#[inline]
pub(crate) fn orient(a: Point, b: Point, p: Point) -> f64 {
    robust::orient2d(c(a), c(b), c(p))
}

#[inline]
fn incircle(a: Point, b: Point, cc: Point, d: Point) -> f64 {
    robust::incircle(c(a), c(b), c(cc), c(d))
}

/// Triangulate `points`, forcing every edge in `constraints` (index pairs) to
/// appear. Returns counter-clockwise triangles covering the convex hull.
pub fn constrained_delaunay(points: &[Point], constraints: &[[usize; 2]]) -> Result<Vec<[usize; 3]>> {
    let mut bw = BowyerWatson::new(points)?;
    for i in insertion_order(points) {
        bw.insert(i)?;
    }
    let mut t = FlipMesh::from_bw(&bw);
    let cset: HashSet<(usize, usize)> = constraints.iter().map(|&[a, b]| (a.min(b) + 3, a.max(b) + 3)).collect();
    for &[a, b] in constraints {
        t.recover(a + 3, b + 3, &cset)?;
    }
    t.restore_delaunay(&cset);
    let out = t.tris.iter().filter(|tr| tr.iter().all(|&v| v >= 3)).map(|tr| [tr[0] - 3, tr[1] - 3, tr[2] - 3]).collect();
    Ok(out)
}

/// Row-snake ordering on a coarse grid, so that point location walks stay short.
fn insertion_order(points: &[Point]) -> Vec<usize> {
    let n = points.len().max(1);
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for p in points {
        for k in 0..2 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    let m = ((n as f64).sqrt() / 2.0).ceil().max(1.0);
    let h = ((hi[1] - lo[1]) / m).max(1e-300);
    let mut idx: Vec<usize> = (0..points.len()).collect();
    idx.sort_by(|&a, &b| {
        let ra = ((points[a][1] - lo[1]) / h) as i64;
        let rb = ((points[b][1] - lo[1]) / h) as i64;
        ra.cmp(&rb).then_with(|| {
            let (xa, xb) = (points[a][0], points[b][0]);
            if ra % 2 == 0 {
                xa.total_cmp(&xb)
            } else {
                xb.total_cmp(&xa)
            }
        })
    });
    idx
}

struct BowyerWatson {
    pts: Vec<Point>,
    tris: Vec<[usize; 3]>,
    nbr: Vec<[usize; 3]>,
    alive: Vec<bool>,
    mark: Vec<u32>,
    stamp: u32,
    last: usize,
}

impl BowyerWatson {
    fn new(points: &[Point]) -> Result<Self> {
        let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for p in points {
            for k in 0..2 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        if points.is_empty() {
            return Err(Error::Mesh("no points to triangulate".into()));
        }
        let cx = 0.5 * (lo[0] + hi[0]);
        let cy = 0.5 * (lo[1] + hi[1]);
        let r = (hi[0] - lo[0]).max(hi[1] - lo[1]).max(1e-12) * 20.0;
        let mut pts = vec![[cx - 2.0 * r, cy - r], [cx + 2.0 * r, cy - r], [cx, cy + 2.0 * r]];
        pts.extend_from_slice(points);
        Ok(BowyerWatson { pts, tris: vec![[0, 1, 2]], nbr: vec![[NONE; 3]], alive: vec![true], mark: vec![0], stamp: 0, last: 0 })
    }

    fn locate(&self, p: Point) -> usize {
        let mut t = self.last;
        let limit = 4 * self.tris.len() + 64;
        let mut k0 = 0usize;
        for _ in 0..limit {
            let tr = self.tris[t];
            let mut moved = false;
            for j in 0..3 {
                let i = (j + k0) % 3;
                let (a, b) = (tr[(i + 1) % 3], tr[(i + 2) % 3]);
                if orient(self.pts[a], self.pts[b], p) < 0.0 && self.nbr[t][i] != NONE {
                    t = self.nbr[t][i];
                    moved = true;
                    break;
                }
            }
            if !moved {
                return t;
            }
            k0 = k0.wrapping_add(1);
        }
        // Fallback: brute force.
        (0..self.tris.len())
            .find(|&t| {
                self.alive[t] && {
                    let tr = self.tris[t];
                    (0..3).all(|i| orient(self.pts[tr[i]], self.pts[tr[(i + 1) % 3]], p) >= 0.0)
                }
            })
            .expect("point outside the super triangle")
    }

    fn insert(&mut self, i: usize) -> Result<()> {
        let vi = i + 3;
        let p = self.pts[vi];
        let t0 = self.locate(p);
        for &v in &self.tris[t0] {
            if self.pts[v] == p {
                return Err(Error::Mesh(format!("duplicate mesh point {p:?}")));
            }
        }
        self.stamp += 1;
        let stamp = self.stamp;
        let mut cavity = vec![t0];
        self.mark[t0] = stamp;
        let mut k = 0;
        while k < cavity.len() {
            let t = cavity[k];
            k += 1;
            for j in 0..3 {
                let n = self.nbr[t][j];
                if n == NONE || self.mark[n] == stamp {
                    continue;
                }
                let tr = self.tris[n];
                if incircle(self.pts[tr[0]], self.pts[tr[1]], self.pts[tr[2]], p) > 0.0 {
                    self.mark[n] = stamp;
                    cavity.push(n);
                }
            }
        }
        // Boundary of the cavity: (a, b, outer neighbour).
        let mut boundary = Vec::with_capacity(cavity.len() + 2);
        for &t in &cavity {
            for j in 0..3 {
                let n = self.nbr[t][j];
                if n == NONE || self.mark[n] != stamp {
                    let tr = self.tris[t];
                    boundary.push((tr[(j + 1) % 3], tr[(j + 2) % 3], n, t));
                }
            }
        }
        let mut slots = cavity.clone();
        while slots.len() < boundary.len() {
            self.tris.push([0; 3]);
            self.nbr.push([NONE; 3]);
            self.alive.push(true);
            self.mark.push(0);
            slots.push(self.tris.len() - 1);
        }
        let mut by_start: HashMap<usize, usize> = HashMap::with_capacity(boundary.len());
        let mut by_end: HashMap<usize, usize> = HashMap::with_capacity(boundary.len());
        for (k, &(a, b, outer, old)) in boundary.iter().enumerate() {
            let t = slots[k];
            if orient(self.pts[a], self.pts[b], p) <= 0.0 {
                return Err(Error::Mesh(format!("degenerate insertion cavity at point {p:?}")));
            }
            self.tris[t] = [a, b, vi];
            self.nbr[t] = [NONE, NONE, outer];
            self.alive[t] = true;
            if outer != NONE {
                for j in 0..3 {
                    if self.nbr[outer][j] == old {
                        let tr = self.tris[outer];
                        let (x, y) = (tr[(j + 1) % 3], tr[(j + 2) % 3]);
                        if (x == b && y == a) || (x == a && y == b) {
                            self.nbr[outer][j] = t;
                        }
                    }
                }
            }
            by_start.insert(a, t);
            by_end.insert(b, t);
        }
        for &t in slots.iter().take(boundary.len()) {
            let [a, b, _] = self.tris[t];
            self.nbr[t][0] = by_start[&b];
            self.nbr[t][1] = by_end[&a];
        }
        for &t in slots.iter().skip(boundary.len()) {
            self.alive[t] = false;
        }
        self.last = slots[0];
        Ok(())
    }
}

/// Triangle soup with a directed-edge map, used for flipping.
struct FlipMesh {
    pts: Vec<Point>,
    tris: Vec<[usize; 3]>,
    edge: HashMap<(usize, usize), usize>,
    vert_tri: Vec<usize>,
}

impl FlipMesh {
    fn from_bw(bw: &BowyerWatson) -> Self {
        let tris: Vec<[usize; 3]> = (0..bw.tris.len()).filter(|&t| bw.alive[t]).map(|t| bw.tris[t]).collect();
        let mut m = FlipMesh { pts: bw.pts.clone(), tris, edge: HashMap::new(), vert_tri: vec![NONE; bw.pts.len()] };
        for t in 0..m.tris.len() {
            m.register(t);
        }
        m
    }

    fn register(&mut self, t: usize) {
        let tr = self.tris[t];
        for i in 0..3 {
            self.edge.insert((tr[i], tr[(i + 1) % 3]), t);
            self.vert_tri[tr[i]] = t;
        }
    }

    fn unregister(&mut self, t: usize) {
        let tr = self.tris[t];
        for i in 0..3 {
            self.edge.remove(&(tr[i], tr[(i + 1) % 3]));
        }
    }

    fn has_edge(&self, a: usize, b: usize) -> bool {
        self.edge.contains_key(&(a, b)) || self.edge.contains_key(&(b, a))
    }

    fn third(&self, t: usize, a: usize, b: usize) -> usize {
        *self.tris[t].iter().find(|&&v| v != a && v != b).unwrap()
    }

    /// Flip edge (u, v). Returns the new edge, or None when the quad is not
    /// strictly convex or the edge is on the hull.
    fn flip(&mut self, u: usize, v: usize) -> Option<(usize, usize)> {
        let t1 = *self.edge.get(&(u, v))?;
        let t2 = *self.edge.get(&(v, u))?;
        let w1 = self.third(t1, u, v);
        let w2 = self.third(t2, u, v);
        let (pu, pv, p1, p2) = (self.pts[u], self.pts[v], self.pts[w1], self.pts[w2]);
        if !(orient(p1, p2, pu) * orient(p1, p2, pv) < 0.0) {
            return None;
        }
        self.unregister(t1);
        self.unregister(t2);
        self.tris[t1] = [w1, u, w2];
        self.tris[t2] = [w2, v, w1];
        self.register(t1);
        self.register(t2);
        Some((w1, w2))
    }

    /// Triangles around vertex `a`.
    fn star(&self, a: usize) -> Vec<usize> {
        let start = self.vert_tri[a];
        let mut out = vec![start];
        // Rotate one way, then the other if the hull is hit.
        let mut t = start;
        loop {
            let tr = self.tris[t];
            let i = tr.iter().position(|&v| v == a).unwrap();
            let y = tr[(i + 2) % 3];
            match self.edge.get(&(a, y)) {
                Some(&n) if n == start => return out,
                Some(&n) => {
                    out.push(n);
                    t = n;
                }
                None => break,
            }
        }
        let mut t = start;
        loop {
            let tr = self.tris[t];
            let i = tr.iter().position(|&v| v == a).unwrap();
            let x = tr[(i + 1) % 3];
            match self.edge.get(&(x, a)) {
                Some(&n) if n == start => break,
                Some(&n) => {
                    out.push(n);
                    t = n;
                }
                None => break,
            }
        }
        out
    }

    fn recover(&mut self, a: usize, b: usize, cset: &HashSet<(usize, usize)>) -> Result<()> {
        if self.has_edge(a, b) {
            return Ok(());
        }
        let (pa, pb) = (self.pts[a], self.pts[b]);
        let err = |what: &str| Error::Mesh(format!("constraint edge ({:?})-({:?}) could not be recovered: {what}", pa, pb));
        // Edges crossing the segment a-b, found by walking from a.
        let mut crossing: Vec<(usize, usize)> = Vec::new();
        let mut cur = None;
        for t in self.star(a) {
            let tr = self.tris[t];
            let i = tr.iter().position(|&v| v == a).unwrap();
            let (x, y) = (tr[(i + 1) % 3], tr[(i + 2) % 3]);
            let ox = orient(pa, pb, self.pts[x]);
            let oy = orient(pa, pb, self.pts[y]);
            if (ox == 0.0 && crate::geom::dot(crate::geom::sub(self.pts[x], pa), crate::geom::sub(pb, pa)) > 0.0)
                || (oy == 0.0 && crate::geom::dot(crate::geom::sub(self.pts[y], pa), crate::geom::sub(pb, pa)) > 0.0)
            {
                return Err(err("a mesh vertex lies on the constraint"));
            }
            if ox < 0.0 && oy > 0.0 {
                cur = Some((x, y));
                break;
            }
        }
        let Some(mut e) = cur else { return Err(err("no starting triangle")) };
        for _ in 0..self.tris.len() {
            crossing.push(e);
            let (x, y) = e;
            let Some(&t) = self.edge.get(&(y, x)) else { return Err(err("walk left the mesh")) };
            let z = self.third(t, x, y);
            if z == b {
                break;
            }
            let oz = orient(pa, pb, self.pts[z]);
            if oz == 0.0 {
                return Err(err("a mesh vertex lies on the constraint"));
            }
            e = if oz < 0.0 { (z, y) } else { (x, z) };
        }
        let mut queue: std::collections::VecDeque<(usize, usize)> = crossing.into();
        let mut guard = 0usize;
        let limit = 100 * (queue.len() + 10) * (queue.len() + 10);
        while let Some((u, v)) = queue.pop_front() {
            guard += 1;
            if guard > limit {
                return Err(err("flip sequence did not terminate"));
            }
            if cset.contains(&(u.min(v), u.max(v))) {
                return Err(err("crosses another constraint"));
            }
            match self.flip(u, v) {
                Some((w1, w2)) => {
                    let crosses =
                        (w1 != a && w1 != b && w2 != a && w2 != b) && orient(pa, pb, self.pts[w1]) * orient(pa, pb, self.pts[w2]) < 0.0;
                    if crosses {
                        queue.push_back((w1, w2));
                    }
                }
                None => queue.push_back((u, v)),
            }
        }
        if self.has_edge(a, b) {
            Ok(())
        } else {
            Err(err("edge missing after flips"))
        }
    }

    fn restore_delaunay(&mut self, cset: &HashSet<(usize, usize)>) {
        let mut stack: Vec<(usize, usize)> = self.edge.keys().filter(|(u, v)| u < v).copied().collect();
        stack.sort_unstable();
        let mut guard = 0usize;
        let limit = 50 * self.tris.len() + 1000;
        while let Some((u, v)) = stack.pop() {
            guard += 1;
            if guard > limit {
                break;
            }
            if cset.contains(&(u.min(v), u.max(v))) {
                continue;
            }
            let (Some(&t1), Some(&t2)) = (self.edge.get(&(u, v)), self.edge.get(&(v, u))) else {
                continue;
            };
            let w1 = self.third(t1, u, v);
            let w2 = self.third(t2, u, v);
            if incircle(self.pts[u], self.pts[v], self.pts[w1], self.pts[w2]) > 0.0 && self.flip(u, v).is_some() {
                stack.extend_from_slice(&[(u, w1), (w1, v), (v, w2), (w2, u)]);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{RngExt, SeedableRng};

    fn area(points: &[Point], tris: &[[usize; 3]]) -> f64 {
        tris.iter().map(|t| 0.5 * orient(points[t[0]], points[t[1]], points[t[2]])).sum()
    }

    fn has_edge(tris: &[[usize; 3]], a: usize, b: usize) -> bool {
        tris.iter().any(|t| {
            (0..3).any(|i| {
                let (x, y) = (t[i], t[(i + 1) % 3]);
                (x == a && y == b) || (x == b && y == a)
            })
        })
    }

    #[test]
    fn unit_square_delaunay() {
        let pts = vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0], [0.4, 0.6]];
        let tris = constrained_delaunay(&pts, &[]).unwrap();
        assert_eq!(tris.len(), 4);
        assert!((area(&pts, &tris) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn random_points_with_crossing_constraint() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let mut pts = vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0], [0.05, 0.51], [0.95, 0.49]];
        for _ in 0..300 {
            let p: [f64; 2] = [rng.random_range(0.01..0.99), rng.random_range(0.01..0.99)];
            if (p[1] - 0.5).abs() > 0.02 {
                pts.push(p);
            }
        }
        let tris = constrained_delaunay(&pts, &[[4, 5]]).unwrap();
        assert!(has_edge(&tris, 4, 5));
        // Convex hull of the points is the unit square.
        assert!((area(&pts, &tris) - 1.0).abs() < 1e-12);
        assert!(tris.iter().all(|t| orient(pts[t[0]], pts[t[1]], pts[t[2]]) > 0.0));
    }
}
