//! Intersection computation, snapping and splitting of fracture networks.

use super::network::{FractureNetwork2, Point, Rect};
use super::{cross, dist, dot, norm, point_segment_distance, scale, sub};
use crate::error::{Error, Result};

/// A fracture network split into non-crossing sub-segments.
#[derive(Debug, Clone)]
pub struct ProcessedNetwork {
    pub domain: Rect,
    pub tol: f64,
    pub points: Vec<Point>,
    /// Sub-segments as pairs of point indices, ordered from fracture start to end.
    pub segments: Vec<[usize; 2]>,
    /// Original fracture of every sub-segment.
    pub segment_fracture: Vec<usize>,
    /// Original (clipped) fracture endpoints.
    pub fractures: Vec<[Point; 2]>,
    /// Points along each fracture, ordered from start to end.
    pub fracture_points: Vec<Vec<usize>>,
}

impl ProcessedNetwork {
    pub fn num_fractures(&self) -> usize {
        self.fractures.len()
    }

    /// Unit tangent of fracture `k`, pointing from its start to its end.
    pub fn tangent(&self, k: usize) -> Point {
        let [a, b] = self.fractures[k];
        let d = sub(b, a);
        scale(d, 1.0 / norm(d))
    }

    /// Arc-length coordinate of `p` along fracture `k`.
    pub fn arc_length(&self, k: usize, p: Point) -> f64 {
        dot(sub(p, self.fractures[k][0]), self.tangent(k))
    }

    pub fn fracture_length(&self, k: usize) -> f64 {
        dist(self.fractures[k][0], self.fractures[k][1])
    }

    /// Fractures passing through point `i`.
    pub fn point_fractures(&self, i: usize) -> Vec<usize> {
        (0..self.num_fractures()).filter(|&k| self.fracture_points[k].contains(&i)).collect()
    }

    /// Points shared by at least two fractures, in increasing index order.
    pub fn intersection_points(&self) -> Vec<usize> {
        (0..self.points.len()).filter(|&i| self.point_fractures(i).len() >= 2).collect()
    }

    pub fn on_boundary(&self, i: usize) -> bool {
        self.domain.on_boundary(self.points[i], self.tol)
    }

    /// Indices of the sub-segments of fracture `k`, in order.
    pub fn fracture_segments(&self, k: usize) -> Vec<usize> {
        (0..self.segments.len()).filter(|&s| self.segment_fracture[s] == k).collect()
    }

    /// The sub-segments viewed as an unprocessed network.
    pub fn as_network(&self) -> FractureNetwork2 {
        FractureNetwork2 {
            fractures: self.segments.iter().map(|s| [self.points[s[0]], self.points[s[1]]]).collect(),
            domain: self.domain,
            tol: self.tol,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Priority {
    Boundary,
    OnHost,
    Endpoint,
}

struct Candidate {
    p: Point,
    fracture: usize,
    prio: Priority,
}

/// Compute all intersections, merge points closer than the tolerance and split
/// fractures at intersection points.
pub fn process_network(net: &FractureNetwork2) -> Result<ProcessedNetwork> {
    let tol = net.tol;
    let dom = net.domain;
    let fr = &net.fractures;
    let mut cands: Vec<Candidate> = Vec::new();

    for (k, [a, b]) in fr.iter().enumerate() {
        on_boundary_side(&dom, *a, *b, tol).map_err(|e| e.context(format!("fracture {k}")))?;
        for p in [*a, *b] {
            let prio = if dom.on_boundary(p, tol) { Priority::Boundary } else { Priority::Endpoint };
            cands.push(Candidate { p, fracture: k, prio });
        }
    }

    for i in 0..fr.len() {
        for j in (i + 1)..fr.len() {
            pair_intersections(i, j, fr[i], fr[j], tol, &mut cands)?;
        }
    }

    // Cluster candidates by distance (union-find).
    let n = cands.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if dist(cands[i].p, cands[j].p) <= tol {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri.max(rj)] = ri.min(rj);
                }
            }
        }
    }
    // Representative: best priority, then earliest candidate.
    let mut rep_of_root: std::collections::BTreeMap<usize, usize> = Default::default();
    for i in 0..n {
        let r = find(&mut parent, i);
        let e = rep_of_root.entry(r).or_insert(i);
        if cands[i].prio < cands[*e].prio {
            *e = i;
        }
    }
    let mut point_of_root = std::collections::BTreeMap::new();
    let mut points = Vec::new();
    for (&root, &rep) in &rep_of_root {
        point_of_root.insert(root, points.len());
        points.push(cands[rep].p);
    }
    for i in 0..points.len() {
        for j in (i + 1)..points.len() {
            if dist(points[i], points[j]) <= tol {
                return Err(Error::Geometry(format!(
                    "points {:?} and {:?} merge transitively into distinct clusters; geometry is too fine for tolerance {tol}",
                    points[i], points[j]
                )));
            }
        }
    }

    let mut segments = Vec::new();
    let mut segment_fracture = Vec::new();
    let mut fracture_points = Vec::with_capacity(fr.len());
    for (k, [a, b]) in fr.iter().enumerate() {
        let t = sub(*b, *a);
        let l2 = dot(t, t);
        let mut pts: Vec<(f64, usize)> = (0..n)
            .filter(|&c| cands[c].fracture == k)
            .map(|c| {
                let id = point_of_root[&find(&mut parent, c)];
                (dot(sub(points[id], *a), t) / l2, id)
            })
            .collect();
        pts.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
        pts.dedup_by_key(|x| x.1);
        let ids: Vec<usize> = pts.iter().map(|x| x.1).collect();
        {
            let mut seen = ids.clone();
            seen.sort_unstable();
            seen.dedup();
            if seen.len() != ids.len() {
                return Err(Error::Geometry(format!("fracture {k} revisits a point after snapping")));
            }
        }
        for w in ids.windows(2) {
            if dist(points[w[0]], points[w[1]]) <= tol {
                return Err(Error::Geometry(format!("fracture {k} produced a sub-segment shorter than tolerance")));
            }
            segments.push([w[0], w[1]]);
            segment_fracture.push(k);
        }
        fracture_points.push(ids);
    }

    Ok(ProcessedNetwork { domain: dom, tol, points, segments, segment_fracture, fractures: fr.clone(), fracture_points })
}

fn on_boundary_side(dom: &Rect, a: Point, b: Point, tol: f64) -> Result<()> {
    let same = |v: usize, c: f64| (a[v] - c).abs() <= tol && (b[v] - c).abs() <= tol;
    if same(0, dom.xmin) || same(0, dom.xmax) || same(1, dom.ymin) || same(1, dom.ymax) {
        return Err(Error::Geometry("fracture lies along the domain boundary".into()));
    }
    Ok(())
}

fn pair_intersections(i: usize, j: usize, [a, b]: [Point; 2], [c, d]: [Point; 2], tol: f64, cands: &mut Vec<Candidate>) -> Result<()> {
    let d1 = sub(b, a);
    let d2 = sub(d, c);
    let (l1, l2) = (norm(d1), norm(d2));

    // Endpoints lying on (or within tol of) the other segment.
    let mut touched = false;
    for (host, other, [p, q], [hp, hq]) in [(i, j, [c, d], [a, b]), (j, i, [a, b], [c, d])] {
        for e in [p, q] {
            let (dd, t) = point_segment_distance(e, hp, hq);
            if dd <= tol {
                touched = true;
                let proj = [hp[0] + t * (hq[0] - hp[0]), hp[1] + t * (hq[1] - hp[1])];
                cands.push(Candidate { p: proj, fracture: host, prio: Priority::OnHost });
                cands.push(Candidate { p: proj, fracture: other, prio: Priority::OnHost });
            }
        }
    }

    let denom = cross(d1, d2);
    let parallel = denom.abs() <= 1e-12 * l1 * l2;
    let c_off = cross(d1, sub(c, a)).abs() / l1;
    let d_off = cross(d1, sub(d, a)).abs() / l1;
    if parallel || (c_off <= tol && d_off <= tol) {
        if c_off <= tol && d_off <= tol {
            // Collinear: measure the overlap along d1.
            let u = scale(d1, 1.0 / l1);
            let (s0, s1) = {
                let sc = dot(sub(c, a), u);
                let sd = dot(sub(d, a), u);
                (sc.min(sd), sc.max(sd))
            };
            let overlap = s1.min(l1) - s0.max(0.0);
            if overlap > tol {
                return Err(Error::Geometry(format!(
                    "fractures {i} and {j} overlap collinearly over length {overlap:.3e}; overlapping fractures are not supported"
                )));
            }
        }
        return Ok(());
    }
    if touched {
        return Ok(());
    }
    let w = sub(c, a);
    let t = cross(w, d2) / denom;
    let s = cross(w, d1) / denom;
    if t * l1 >= -tol && t * l1 <= l1 + tol && s * l2 >= -tol && s * l2 <= l2 + tol {
        let p = [a[0] + t * d1[0], a[1] + t * d1[1]];
        cands.push(Candidate { p, fracture: i, prio: Priority::OnHost });
        cands.push(Candidate { p, fracture: j, prio: Priority::OnHost });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn net(fr: Vec<[Point; 2]>) -> FractureNetwork2 {
        FractureNetwork2::new(fr, Rect::unit(), None).unwrap()
    }

    #[test]
    fn x_crossing_gives_four_segments() {
        let p = process_network(&net(vec![[[0.0, 0.0], [1.0, 1.0]], [[0.0, 1.0], [1.0, 0.0]]])).unwrap();
        assert_eq!(p.segments.len(), 4);
        let ip = p.intersection_points();
        assert_eq!(ip.len(), 1);
        let q = p.points[ip[0]];
        assert!(dist(q, [0.5, 0.5]) < 1e-14);
    }

    #[test]
    fn single_segment_is_unchanged() {
        let p = process_network(&net(vec![[[0.2, 0.5], [0.8, 0.5]]])).unwrap();
        assert_eq!(p.segments.len(), 1);
        assert_eq!(p.points.len(), 2);
        assert!(p.intersection_points().is_empty());
    }

    #[test]
    fn t_junction_snaps_endpoint_onto_host() {
        let tol = 1e-6;
        let n =
            FractureNetwork2::new(vec![[[0.1, 0.5], [0.9, 0.5]], [[0.4, 0.9], [0.4, 0.5 + 0.5 * tol]]], Rect::unit(), Some(tol)).unwrap();
        let p = process_network(&n).unwrap();
        // Brute force: the stem endpoint is within tol of the host's interior.
        let (dd, t) = point_segment_distance([0.4, 0.5 + 0.5 * tol], [0.1, 0.5], [0.9, 0.5]);
        assert!(dd <= tol && t > 0.0 && t < 1.0);
        assert_eq!(p.fracture_segments(0).len(), 2);
        assert_eq!(p.fracture_segments(1).len(), 1);
        let ip = p.intersection_points();
        assert_eq!(ip.len(), 1);
        assert_eq!(p.points[ip[0]][1], 0.5, "snapped onto the host line");
    }

    #[test]
    fn collinear_overlap_is_rejected() {
        let err = process_network(&net(vec![[[0.1, 0.5], [0.6, 0.5]], [[0.4, 0.5], [0.9, 0.5]]])).unwrap_err();
        assert!(err.to_string().contains("overlap"));
    }

    #[test]
    fn fracture_on_boundary_is_rejected() {
        assert!(process_network(&net(vec![[[0.0, 0.2], [0.0, 0.8]]])).is_err());
    }

    fn random_network() -> impl Strategy<Value = Vec<[Point; 2]>> {
        prop::collection::vec(
            (0.05..0.95f64, 0.05..0.95f64, 0.05..0.95f64, 0.05..0.95f64)
                .prop_filter("long enough", |(a, b, c, d)| (a - c).hypot(b - d) > 0.1)
                .prop_map(|(a, b, c, d)| [[a, b], [c, d]]),
            1..5,
        )
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn processing_is_idempotent(fr in random_network()) {
            let Ok(p) = process_network(&net(fr)) else { return Ok(()); };
            let q = process_network(&p.as_network()).unwrap();
            prop_assert_eq!(p.segments.len(), q.segments.len());
            prop_assert_eq!(p.points.len(), q.points.len());
            for pt in &q.points {
                prop_assert!(p.points.iter().any(|x| dist(*x, *pt) <= p.tol));
            }
        }

        #[test]
        fn sub_segments_reconstruct_each_fracture(fr in random_network()) {
            let Ok(p) = process_network(&net(fr)) else { return Ok(()); };
            for k in 0..p.num_fractures() {
                let segs = p.fracture_segments(k);
                let total: f64 = segs.iter().map(|&s| dist(p.points[p.segments[s][0]], p.points[p.segments[s][1]])).sum();
                prop_assert!((total - p.fracture_length(k)).abs() <= 4.0 * p.tol);
                let first = p.points[p.segments[segs[0]][0]];
                let last = p.points[p.segments[*segs.last().unwrap()][1]];
                prop_assert!(dist(first, p.fractures[k][0]) <= p.tol);
                prop_assert!(dist(last, p.fractures[k][1]) <= p.tol);
            }
        }

        #[test]
        fn segments_only_meet_at_shared_points(fr in random_network()) {
            let Ok(p) = process_network(&net(fr)) else { return Ok(()); };
            for (s, a) in p.segments.iter().enumerate() {
                for b in p.segments.iter().skip(s + 1) {
                    if a.iter().any(|x| b.contains(x)) { continue; }
                    let (pa, pb, pc, pd) = (p.points[a[0]], p.points[a[1]], p.points[b[0]], p.points[b[1]]);
                    let o1 = cross(sub(pb, pa), sub(pc, pa)) * cross(sub(pb, pa), sub(pd, pa));
                    let o2 = cross(sub(pd, pc), sub(pa, pc)) * cross(sub(pd, pc), sub(pb, pc));
                    prop_assert!(!(o1 < 0.0 && o2 < 0.0), "segments cross away from a shared point");
                }
            }
        }
    }
}
