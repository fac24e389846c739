//! Pressurized line crack in an elastic medium: analytical opening,
//! boundary displacements from superposed constant displacement
//! discontinuity elements, and a split-grid elasticity driver.

use super::common::{build_geometry, MeshSource};
use super::convergence::{relative_l2, ErrorRow, ErrorTable};
use crate::discretize::mpsa::{mpsa, vector_divergence};
use crate::discretize::{BcKind, MechanicsParameters, VectorBc};
use crate::error::{Error, Result};
use crate::geom::network::{FractureNetwork2, Point, Rect};
use crate::geom::{dot, point_segment_distance, rot90, sub};
use crate::mesh::grid::Grid;
use crate::mesh::mesher::MeshOptions;
use crate::mesh::MeshSizeParams;
use crate::sparse::{matvec, mul};
use rayon::prelude::*;
use std::f64::consts::PI;

#[derive(Debug, Clone)]
pub struct SneddonConfig {
    pub nu: f64,
    pub shear_modulus: f64,
    pub p0: f64,
    pub length: f64,
    /// Fracture angle against the x axis, degrees.
    pub angle: f64,
    pub domain: Rect,
    pub center: Point,
    /// Number of displacement discontinuity elements in the boundary data.
    pub subdivisions: usize,
}

impl Default for SneddonConfig {
    fn default() -> Self {
        SneddonConfig {
            nu: 0.25,
            shear_modulus: 1.0,
            p0: 1e-3,
            length: 0.3,
            angle: 0.0,
            domain: Rect::unit(),
            center: [0.5, 0.5],
            subdivisions: 1000,
        }
    }
}

impl SneddonConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.nu > 0.0 && self.nu < 0.5) {
            return Err(Error::Config(format!("sneddon: Poisson ratio {} outside (0, 0.5)", self.nu)));
        }
        if !(self.shear_modulus > 0.0 && self.length > 0.0) {
            return Err(Error::Config("sneddon: shear modulus and fracture length must be positive".into()));
        }
        if self.subdivisions == 0 {
            return Err(Error::Config("sneddon: need at least one subdivision".into()));
        }
        let [a, b] = self.endpoints();
        if !(self.domain.contains(a, 0.0) && self.domain.contains(b, 0.0))
            || self.domain.on_boundary(a, 1e-12)
            || self.domain.on_boundary(b, 1e-12)
        {
            return Err(Error::Config("sneddon: the fracture must lie strictly inside the domain".into()));
        }
        Ok(())
    }

    pub fn tangent(&self) -> Point {
        let r = self.angle.to_radians();
        [r.cos(), r.sin()]
    }

    pub fn endpoints(&self) -> [Point; 2] {
        let (t, h) = (self.tangent(), 0.5 * self.length);
        [[self.center[0] - h * t[0], self.center[1] - h * t[1]], [self.center[0] + h * t[0], self.center[1] + h * t[1]]]
    }

    pub fn lambda(&self) -> f64 {
        2.0 * self.shear_modulus * self.nu / (1.0 - 2.0 * self.nu)
    }
}

/// Normal opening at signed distance `d` from the fracture center.
pub fn sneddon_jump(d: f64, cfg: &SneddonConfig) -> Result<f64> {
    let half = 0.5 * cfg.length;
    if d.abs() > half * (1.0 + 1e-12) {
        return Err(Error::Domain(format!("distance {d} exceeds the half length {half}")));
    }
    let r = (1.0 - (d / half).powi(2)).max(0.0);
    Ok((1.0 - cfg.nu) * cfg.p0 * cfg.length / cfg.shear_modulus * r.sqrt())
}

/// Displacement at local `(x, y)` of a constant displacement discontinuity
/// `(dx, dy) = u(y = 0-) - u(y = 0+)` on `|x| < b`, `y = 0`.
pub fn dd_element(x: f64, y: f64, b: f64, dx: f64, dy: f64, nu: f64) -> [f64; 2] {
    let k = 1.0 / (4.0 * PI * (1.0 - nu));
    let (xm, xp) = (x - b, x + b);
    let (r1, r2) = (xm * xm + y * y, xp * xp + y * y);
    let fx = k * 0.5 * (r1.ln() - r2.ln());
    let fy = -k * (y.atan2(xm) - y.atan2(xp));
    let fxy = k * (y / r1 - y / r2);
    let fxx = k * (xm / r1 - xp / r2);
    let fyy = -fxx;
    [
        dx * (2.0 * (1.0 - nu) * fy - y * fxx) + dy * (-(1.0 - 2.0 * nu) * fx - y * fxy),
        dx * ((1.0 - 2.0 * nu) * fx - y * fxy) + dy * (2.0 * (1.0 - nu) * fy - y * fyy),
    ]
}

/// Displacement of the pressurized crack in an infinite medium at `x`.
pub fn sneddon_boundary_displacement(x: Point, cfg: &SneddonConfig) -> Result<[f64; 2]> {
    let [a, b] = cfg.endpoints();
    if point_segment_distance(x, a, b).0 <= 1e-12 * cfg.length {
        return Err(Error::Domain(format!("point {x:?} lies on the crack")));
    }
    let t = cfg.tangent();
    let n = rot90(t);
    let rel = sub(x, cfg.center);
    let (xl, yl) = (dot(rel, t), dot(rel, n));
    let m = cfg.subdivisions;
    let h = cfg.length / m as f64;
    let mut u = [0.0; 2];
    for i in 0..m {
        let s = -0.5 * cfg.length + (i as f64 + 0.5) * h;
        let w = sneddon_jump(s, cfg)?;
        let v = dd_element(xl - s, yl, 0.5 * h, 0.0, -w, cfg.nu);
        u[0] += v[0];
        u[1] += v[1];
    }
    Ok([u[0] * t[0] + u[1] * n[0], u[0] * t[1] + u[1] * n[1]])
}

/// Numerical opening along the fracture of one run.
#[derive(Debug, Clone)]
pub struct SneddonRun {
    pub matrix_cells: usize,
    pub fracture_cells: usize,
    /// `(distance from center, numerical, exact)` per face pair.
    pub jumps: Vec<(f64, f64, f64)>,
    /// Relative L2 error of the normal opening.
    pub error: f64,
    pub grid: Grid,
    /// Cell displacements of the matrix.
    pub displacement: Vec<[f64; 2]>,
}

pub fn run_sneddon(cfg: &SneddonConfig, mesh: &MeshOptions) -> Result<SneddonRun> {
    cfg.validate()?;
    let net = FractureNetwork2::new(vec![cfg.endpoints().to_vec().try_into().unwrap()], cfg.domain, None)?;
    let geom = build_geometry(&net, &MeshSource::Generate(mesh.clone()), 1)?;
    let g = &geom.md.matrix;
    let (nc, nf) = (g.num_cells(), g.num_faces());
    let mut bc = VectorBc::all(g, BcKind::Neumann);
    let mut data = vec![0.0; 2 * nf];
    for f in g.boundary_faces() {
        if g.tags.domain_boundary[f] {
            bc.set(f, [BcKind::Dirichlet; 2]);
            let u = sneddon_boundary_displacement(g.face_centers[f], cfg)?;
            data[2 * f] = u[0];
            data[2 * f + 1] = u[1];
        } else if g.tags.fracture[f].is_some() {
            let (_, s) = g.boundary_cell(f);
            for i in 0..2 {
                data[2 * f + i] = -cfg.p0 * s * g.face_normals[f][i];
            }
        }
    }
    let mech = MechanicsParameters::uniform(nc, cfg.lambda(), cfg.shear_modulus);
    let sd = mpsa(g, &mech, &bc)?;
    let vdiv = vector_divergence(g);
    let a = mul(&vdiv, &sd.stress);
    let rhs: Vec<f64> = matvec(&mul(&vdiv, &sd.bound_stress), &data).iter().map(|v| -v).collect();
    let u = crate::assembly::linsolve::linear_solve(&a, &rhs).map_err(|e| e.context("solving the Sneddon system"))?;
    let uf: Vec<f64> = matvec(&sd.disp_cell, &u).iter().zip(matvec(&sd.disp_bound, &data)).map(|(x, y)| x + y).collect();

    let fg = &geom.md.fractures[0];
    let t = cfg.tangent();
    let en = rot90(t);
    let mut jumps = Vec::with_capacity(fg.faces_plus.len());
    let (mut num, mut ex, mut w) = (Vec::new(), Vec::new(), Vec::new());
    for (&fp, &fm) in fg.faces_plus.iter().zip(&fg.faces_minus) {
        let xf = g.face_centers[fp];
        let (cp, _) = g.boundary_cell(fp);
        let side = dot(sub(g.cell_centers[cp], xf), en).signum();
        let jump = [uf[2 * fp] - uf[2 * fm], uf[2 * fp + 1] - uf[2 * fm + 1]];
        let jn = side * dot(jump, en);
        let d = dot(sub(xf, cfg.center), t);
        let e = sneddon_jump(d.clamp(-0.5 * cfg.length, 0.5 * cfg.length), cfg)?;
        jumps.push((d, jn, e));
        num.push(jn);
        ex.push(e);
        w.push(g.face_areas[fp]);
    }
    jumps.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(SneddonRun {
        matrix_cells: nc,
        fracture_cells: fg.grid.num_cells(),
        error: relative_l2(&num, &ex, &w),
        jumps,
        displacement: u.chunks(2).map(|c| [c[0], c[1]]).collect(),
        grid: geom.md.matrix,
    })
}

#[derive(Debug, Clone)]
pub struct SneddonStudyConfig {
    pub base: SneddonConfig,
    pub angles: Vec<f64>,
    pub seeds: Vec<u64>,
    /// Target fracture cell counts per level.
    pub fracture_cells: Vec<usize>,
    /// Far-field mesh size as a multiple of the fracture mesh size, so that
    /// every level refines the whole domain.
    pub far_field_ratio: f64,
    /// Growth rate of the mesh size away from the fracture.
    pub grading: f64,
}

impl Default for SneddonStudyConfig {
    fn default() -> Self {
        SneddonStudyConfig {
            base: SneddonConfig::default(),
            angles: vec![0.0, 15.0, 30.0],
            seeds: vec![1, 2, 3],
            fracture_cells: vec![10, 20, 40],
            far_field_ratio: 4.0,
            grading: 0.2,
        }
    }
}

pub struct SneddonStudy {
    /// Label `angle_<deg>` per angle (seed-averaged) and `average`.
    pub table: ErrorTable,
    pub runs: Vec<(f64, u64, usize, SneddonRun)>,
}

impl SneddonStudy {
    pub fn average_rate(&self) -> Result<Option<f64>> {
        self.table.rate("average", 0)
    }
}

pub fn run_sneddon_study(cfg: &SneddonStudyConfig) -> Result<SneddonStudy> {
    if cfg.fracture_cells.len() < 2 {
        return Err(Error::Config(format!("a convergence study needs at least 2 mesh levels, got {}", cfg.fracture_cells.len())));
    }
    if cfg.angles.is_empty() || cfg.seeds.is_empty() {
        return Err(Error::Config("sneddon study: need at least one angle and one seed".into()));
    }
    // Independent runs go in parallel; aggregation follows the input order.
    let jobs: Vec<(f64, usize, u64)> = cfg
        .angles
        .iter()
        .flat_map(|&a| (0..cfg.fracture_cells.len()).flat_map(move |li| cfg.seeds.iter().map(move |&s| (a, li, s))))
        .collect();
    let results: Vec<SneddonRun> = jobs
        .par_iter()
        .map(|&(angle, li, seed)| {
            let h = cfg.base.length / cfg.fracture_cells[li] as f64;
            let sc = SneddonConfig { angle, ..cfg.base.clone() };
            let sizes = MeshSizeParams::new(h / 4.0, h, cfg.far_field_ratio.max(1.0) * h)?;
            let mut opts = MeshOptions::new(sizes).seed(seed);
            opts.grading = cfg.grading;
            run_sneddon(&sc, &opts).map_err(|e| e.context(format!("sneddon angle {angle}, seed {seed}, level {li}")))
        })
        .collect::<Result<_>>()?;
    let mut table = ErrorTable::new(&["normal_jump"]);
    let mut runs = Vec::new();
    let mut avg = vec![(0.0, 0usize, 0usize); cfg.fracture_cells.len()];
    let mut results = jobs.iter().zip(results);
    for &angle in &cfg.angles {
        for (li, &n) in cfg.fracture_cells.iter().enumerate() {
            let h = cfg.base.length / n as f64;
            let (mut sum, mut cells) = (0.0, 0);
            for _ in &cfg.seeds {
                let (&(_, _, seed), r) = results.next().expect("one result per job");
                sum += r.error;
                cells += r.matrix_cells;
                runs.push((angle, seed, li, r));
            }
            let k = cfg.seeds.len() as f64;
            table.rows.push(ErrorRow { label: format!("angle_{angle}"), h, cells: cells / cfg.seeds.len(), errors: vec![sum / k] });
            avg[li].0 += sum / k;
            avg[li].1 += cells / cfg.seeds.len();
            avg[li].2 += 1;
        }
    }
    for (li, &n) in cfg.fracture_cells.iter().enumerate() {
        let (s, c, k) = avg[li];
        table.rows.push(ErrorRow { label: "average".into(), h: cfg.base.length / n as f64, cells: c / k, errors: vec![s / k as f64] });
    }
    Ok(SneddonStudy { table, runs })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> SneddonConfig {
        SneddonConfig { subdivisions: 400, ..Default::default() }
    }

    #[test]
    fn jump_values() {
        let c = cfg();
        let w0 = (1.0 - c.nu) * c.p0 * c.length / c.shear_modulus;
        assert!((sneddon_jump(0.0, &c).unwrap() - w0).abs() < 1e-15);
        assert_eq!(sneddon_jump(0.5 * c.length, &c).unwrap(), 0.0);
        assert_eq!(sneddon_jump(-0.5 * c.length, &c).unwrap(), 0.0);
        assert!((sneddon_jump(0.25 * c.length, &c).unwrap() - w0 * 3f64.sqrt() / 2.0).abs() < 1e-15);
        assert!(sneddon_jump(0.6 * c.length, &c).is_err());
    }

    #[test]
    fn single_element_has_the_prescribed_discontinuity() {
        let (dx, dy) = (0.3, -0.7);
        let eps = 1e-9;
        let up = dd_element(0.2, eps, 1.0, dx, dy, 0.3);
        let lo = dd_element(0.2, -eps, 1.0, dx, dy, 0.3);
        assert!((lo[0] - up[0] - dx).abs() < 1e-6);
        assert!((lo[1] - up[1] - dy).abs() < 1e-6);
        // Continuous off the element.
        let up = dd_element(1.5, eps, 1.0, dx, dy, 0.3);
        let lo = dd_element(1.5, -eps, 1.0, dx, dy, 0.3);
        assert!((lo[0] - up[0]).abs() < 1e-6 && (lo[1] - up[1]).abs() < 1e-6);
    }

    #[test]
    fn superposition_reproduces_the_opening_near_the_crack() {
        let c = SneddonConfig { angle: 20.0, ..cfg() };
        let (t, n) = (c.tangent(), rot90(c.tangent()));
        let eps = 1e-7;
        for d in [-0.1, 0.0, 0.07] {
            let p = |s: f64| [c.center[0] + d * t[0] + s * n[0], c.center[1] + d * t[1] + s * n[1]];
            let (a, b) = (sneddon_boundary_displacement(p(eps), &c).unwrap(), sneddon_boundary_displacement(p(-eps), &c).unwrap());
            let jn = dot(sub(a, b), n);
            let ex = sneddon_jump(d, &c).unwrap();
            assert!((jn - ex).abs() < 0.01 * ex, "{d}: {jn} vs {ex}");
        }
    }

    #[test]
    fn far_field_decays() {
        let c = cfg();
        let w0 = sneddon_jump(0.0, &c).unwrap();
        let u = sneddon_boundary_displacement([c.center[0] + 20.0 * c.length, c.center[1] + 3.0 * c.length], &c).unwrap();
        assert!((u[0] * u[0] + u[1] * u[1]).sqrt() <= 0.01 * w0);
    }

    #[test]
    fn horizontal_crack_is_mirror_symmetric() {
        let c = cfg();
        for p in [[0.1, 0.2], [0.8, 0.9], [0.5, 0.05]] {
            let q = [p[0], 2.0 * c.center[1] - p[1]];
            let (a, b) = (sneddon_boundary_displacement(p, &c).unwrap(), sneddon_boundary_displacement(q, &c).unwrap());
            assert!((a[0] - b[0]).abs() < 1e-14 && (a[1] + b[1]).abs() < 1e-14);
        }
    }

    #[test]
    fn subdivision_superposition_is_self_converged() {
        let c = SneddonConfig { angle: 30.0, subdivisions: 500, ..Default::default() };
        let c2 = SneddonConfig { subdivisions: 1000, ..c.clone() };
        for p in [[0.0, 0.0], [1.0, 0.4], [0.3, 1.0], [0.0, 0.6]] {
            let (a, b) = (sneddon_boundary_displacement(p, &c).unwrap(), sneddon_boundary_displacement(p, &c2).unwrap());
            let nb = (b[0] * b[0] + b[1] * b[1]).sqrt();
            assert!(((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt() < 1e-3 * nb);
        }
    }

    #[test]
    fn points_on_the_crack_are_rejected() {
        let c = cfg();
        assert!(matches!(sneddon_boundary_displacement(c.center, &c), Err(Error::Domain(_))));
    }

    #[test]
    fn coarse_run_opens_the_fracture_symmetrically() {
        let c = SneddonConfig { subdivisions: 200, ..Default::default() };
        let h = c.length / 10.0;
        let mut opts = MeshOptions::new(MeshSizeParams::new(h / 4.0, h, 4.0 * h).unwrap()).seed(1);
        opts.grading = 0.2;
        let r = run_sneddon(&c, &opts).unwrap();
        assert!(r.error < 0.3, "error {}", r.error);
        assert!(r.jumps.iter().all(|j| j.1 > 0.0));
        let n = r.jumps.len();
        let (left, right): (f64, f64) = (r.jumps[..n / 2].iter().map(|j| j.1).sum(), r.jumps[n - n / 2..].iter().map(|j| j.1).sum());
        assert!((left - right).abs() < 0.1 * (left + right));
    }

    #[test]
    fn study_needs_two_levels() {
        let cfg = SneddonStudyConfig { fracture_cells: vec![10], ..Default::default() };
        assert!(matches!(run_sneddon_study(&cfg), Err(Error::Config(_))));
    }
}
