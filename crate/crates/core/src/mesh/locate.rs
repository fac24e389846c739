//! Point location in 2D grids through a uniform bucket grid.

use super::grid::Grid;
use crate::geom::network::Point;
use crate::geom::{cross, dist, sub};

#[derive(Debug, Clone)]
pub struct Locator {
    origin: Point,
    h: [f64; 2],
    n: [usize; 2],
    buckets: Vec<Vec<usize>>,
}

impl Locator {
    pub fn new(g: &Grid) -> Locator {
        assert_eq!(g.dim, 2);
        let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for p in &g.nodes {
            for i in 0..2 {
                lo[i] = lo[i].min(p[i]);
                hi[i] = hi[i].max(p[i]);
            }
        }
        let side = (g.num_cells().max(1) as f64).sqrt().ceil() as usize;
        let n = [side, side];
        let h = [((hi[0] - lo[0]) / side as f64).max(1e-300), ((hi[1] - lo[1]) / side as f64).max(1e-300)];
        let mut buckets = vec![Vec::new(); side * side];
        for (c, cn) in g.cell_nodes.iter().enumerate() {
            let (mut a, mut b) = ([usize::MAX; 2], [0usize; 2]);
            for &v in cn {
                for i in 0..2 {
                    let k = (((g.nodes[v][i] - lo[i]) / h[i]) as usize).min(n[i] - 1);
                    a[i] = a[i].min(k);
                    b[i] = b[i].max(k);
                }
            }
            for j in a[1]..=b[1] {
                for i in a[0]..=b[0] {
                    buckets[j * n[0] + i].push(c);
                }
            }
        }
        Locator { origin: lo, h, n, buckets }
    }

    /// Cell of `g` containing `p`, if any. `g` must be the grid the locator
    /// was built from.
    pub fn locate(&self, g: &Grid, p: Point) -> Option<usize> {
        let mut k = [0usize; 2];
        for i in 0..2 {
            let t = (p[i] - self.origin[i]) / self.h[i];
            if t < -1e-9 || t > self.n[i] as f64 + 1e-9 {
                return None;
            }
            k[i] = (t.max(0.0) as usize).min(self.n[i] - 1);
        }
        let inside = |c: usize| {
            let cn = &g.cell_nodes[c];
            (0..cn.len()).all(|j| {
                let a = g.nodes[cn[j]];
                let b = g.nodes[cn[(j + 1) % cn.len()]];
                cross(sub(b, a), sub(p, a)) >= -1e-12 * dist(a, b)
            })
        };
        self.buckets[k[1] * self.n[0] + k[0]].iter().copied().find(|&c| inside(c))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn agrees_with_brute_force() {
        let g = crate::mesh::structured::perturbed_square(9, 0.3, 4);
        let loc = Locator::new(&g);
        for k in 0..200 {
            let p = [(k as f64 * 0.618).fract(), (k as f64 * 0.371).fract()];
            let c = loc.locate(&g, p).unwrap();
            assert_eq!(Some(c), g.locate(p));
        }
        assert_eq!(loc.locate(&g, [1.5, 0.5]), None);
    }
}
