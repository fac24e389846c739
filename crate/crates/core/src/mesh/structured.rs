//! Structured triangle grids, mostly for verification.

use super::grid::Grid;
use crate::geom::network::Rect;
use rand::{RngExt, SeedableRng};

/// Each rectangle of an `nx` x `ny` lattice split along its diagonal.
pub fn cartesian_triangles(nx: usize, ny: usize, rect: Rect) -> Grid {
    let (hx, hy) = ((rect.xmax - rect.xmin) / nx as f64, (rect.ymax - rect.ymin) / ny as f64);
    let mut nodes = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            nodes.push([rect.xmin + i as f64 * hx, rect.ymin + j as f64 * hy]);
        }
    }
    Grid::from_triangles(nodes, &lattice_tris(nx, ny)).expect("valid lattice")
}

fn lattice_tris(nx: usize, ny: usize) -> Vec<[usize; 3]> {
    let id = |i: usize, j: usize| j * (nx + 1) + i;
    let mut tris = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            if (i + j) % 2 == 0 {
                tris.push([a, b, c]);
                tris.push([a, c, d]);
            } else {
                tris.push([a, b, d]);
                tris.push([b, c, d]);
            }
        }
    }
    tris
}

/// Unit-square lattice with interior nodes displaced by up to `amp` times the
/// spacing in each direction.
pub fn perturbed_square(n: usize, amp: f64, seed: u64) -> Grid {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let h = 1.0 / n as f64;
    let mut nodes = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            let mut p = [i as f64 * h, j as f64 * h];
            if i > 0 && i < n && j > 0 && j < n {
                p[0] += amp * h * rng.random_range(-1.0..1.0);
                p[1] += amp * h * rng.random_range(-1.0..1.0);
            }
            nodes.push(p);
        }
    }
    Grid::from_triangles(nodes, &lattice_tris(n, n)).expect("perturbation keeps cells valid")
}

/// Parallelogram of equilateral triangles with side `h`: `nx` triangles pairs
/// per row, `ny` rows.
pub fn equilateral(nx: usize, ny: usize, h: f64) -> Grid {
    let s = 3f64.sqrt() / 2.0;
    let id = |i: usize, j: usize| j * (nx + 1) + i;
    let mut nodes = Vec::new();
    for j in 0..=ny {
        for i in 0..=nx {
            nodes.push([h * (i as f64 + 0.5 * j as f64), h * s * j as f64]);
        }
    }
    let mut tris = Vec::new();
    for j in 0..ny {
        for i in 0..nx {
            tris.push([id(i, j), id(i + 1, j), id(i, j + 1)]);
            tris.push([id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    Grid::from_triangles(nodes, &tris).expect("valid lattice")
}
