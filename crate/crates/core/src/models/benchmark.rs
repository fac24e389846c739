//! The complex-network flow benchmark: geometry, parameters, pressure
//! profile and a mesh convergence study against a fine-mesh reference.
//!
//! The permeability and boundary data are a reconstruction: the published
//! geometry with conductive (k = 1e4) and blocking (k = 1e-4) fractures of
//! aperture 1e-4 in a unit-permeability matrix.

use super::common::{build_geometry, BoundaryValue, Geometry, MeshSource};
use super::convergence::{normalized_l2, relative_l2, ErrorRow, ErrorTable};
use super::flow::{run_flow, FlowParams, FlowSolution, FractureProps, Scheme};
use crate::error::Result;
use crate::geom::network::{FractureNetwork2, Point, Rect};
use crate::mesh::locate::Locator;
use crate::mesh::mesher::MeshOptions;
use crate::mesh::MeshSizeParams;
use rayon::prelude::*;

pub const FRACTURES: [[Point; 2]; 10] = [
    [[0.05, 0.416], [0.22, 0.0624]],
    [[0.05, 0.275], [0.25, 0.135]],
    [[0.15, 0.63], [0.45, 0.09]],
    [[0.15, 0.9167], [0.4, 0.5]],
    [[0.65, 0.8333], [0.849723, 0.167625]],
    [[0.7, 0.235], [0.849723, 0.167625]],
    [[0.6, 0.38], [0.85, 0.2675]],
    [[0.35, 0.9714], [0.8, 0.7143]],
    [[0.75, 0.9574], [0.95, 0.8155]],
    [[0.15, 0.8363], [0.4, 0.9727]],
];

/// Zero-based indices of the blocking fractures.
pub const BLOCKING: [usize; 2] = [3, 4];
pub const PROFILE: [Point; 2] = [[0.0, 0.5], [1.0, 0.9]];
pub const P_LEFT: f64 = 4.0;
pub const P_RIGHT: f64 = 1.0;

pub fn network() -> FractureNetwork2 {
    FractureNetwork2::new(FRACTURES.to_vec(), Rect::unit(), None).expect("benchmark geometry is valid")
}

pub fn params(scheme: Scheme) -> FlowParams {
    let fractures = (0..FRACTURES.len())
        .map(|k| {
            let kk = if BLOCKING.contains(&k) { 1e-4 } else { 1e4 };
            FractureProps { k_t: kk, k_n: kk, aperture: 1e-4 }
        })
        .collect();
    FlowParams { matrix_perm: 1.0, fractures, scheme }
}

pub fn boundary(p: Point) -> BoundaryValue {
    if p[0] < 1e-9 {
        BoundaryValue::Pressure(P_LEFT)
    } else if p[0] > 1.0 - 1e-9 {
        BoundaryValue::Pressure(P_RIGHT)
    } else {
        BoundaryValue::Flux(0.0)
    }
}

pub fn geometry(h: f64, seed: u64) -> Result<Geometry> {
    build_geometry(&network(), &MeshSource::Generate(MeshOptions::new(MeshSizeParams::uniform(h)).seed(seed)), 1)
}

/// A solved benchmark case with point sampling.
pub struct Solved {
    pub geom: Geometry,
    pub sol: FlowSolution,
    locator: Locator,
}

impl Solved {
    pub fn run(geom: Geometry, scheme: Scheme) -> Result<Solved> {
        let sol = run_flow(&geom, &params(scheme), &boundary)?;
        let locator = Locator::new(&geom.graph.nodes[0].grid);
        Ok(Solved { geom, sol, locator })
    }

    /// Matrix pressure of the cell containing `p`.
    pub fn matrix_at(&self, p: Point) -> Option<f64> {
        let g = &self.geom.graph.nodes[0].grid;
        self.locator.locate(g, p).map(|c| self.sol.pressure[0][c])
    }

    /// Pressure of fracture `k` at arc length `s`.
    pub fn fracture_at(&self, k: usize, s: f64) -> f64 {
        let iv = &self.geom.md.fractures[k].cell_intervals;
        let i = iv.partition_point(|x| x[1] < s).min(iv.len() - 1);
        self.sol.pressure[self.geom.fracture_node(k)][i]
    }

    pub fn matrix_cells(&self) -> usize {
        self.geom.graph.nodes[0].grid.num_cells()
    }

    /// `(matrix error, fracture error)` against `reference`, normalized by
    /// the boundary pressure drop.
    pub fn errors(&self, reference: &Solved) -> (f64, f64) {
        let dp = P_LEFT - P_RIGHT;
        let g = &self.geom.graph.nodes[0].grid;
        let pref: Vec<f64> = g.cell_centers.iter().map(|x| reference.matrix_at(*x).expect("reference covers the domain")).collect();
        let em = normalized_l2(&self.sol.pressure[0], &pref, &g.cell_volumes, dp);
        let (mut u, mut r, mut w) = (Vec::new(), Vec::new(), Vec::new());
        for (k, fg) in self.geom.md.fractures.iter().enumerate() {
            let n = self.geom.fracture_node(k);
            for (c, iv) in fg.cell_intervals.iter().enumerate() {
                u.push(self.sol.pressure[n][c]);
                r.push(reference.fracture_at(k, 0.5 * (iv[0] + iv[1])));
                w.push(iv[1] - iv[0]);
            }
        }
        (em, normalized_l2(&u, &r, &w, dp))
    }

    /// Matrix pressure at `n` equispaced points along the profile line.
    pub fn profile(&self, n: usize) -> Vec<(f64, f64)> {
        let [a, b] = PROFILE;
        (0..n)
            .map(|i| {
                let t = (i as f64 + 0.5) / n as f64;
                let p = [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];
                (t, self.matrix_at(p).expect("profile lies in the domain"))
            })
            .collect()
    }
}

/// Relative L2 difference of two profiles sampled at the same points.
pub fn profile_difference(a: &[(f64, f64)], b: &[(f64, f64)]) -> f64 {
    let u: Vec<f64> = a.iter().map(|x| x.1).collect();
    let r: Vec<f64> = b.iter().map(|x| x.1).collect();
    relative_l2(&u, &r, &vec![1.0; u.len()])
}

#[derive(Debug, Clone)]
pub struct StudyConfig {
    /// Mesh sizes of the study levels, coarse to fine.
    pub levels: Vec<f64>,
    pub reference_h: f64,
    pub schemes: Vec<Scheme>,
    pub seed: u64,
    pub profile_points: usize,
}

impl Default for StudyConfig {
    fn default() -> Self {
        StudyConfig {
            levels: vec![0.05, 0.025, 0.0125],
            reference_h: 0.004,
            schemes: vec![Scheme::Tpfa, Scheme::Mpfa],
            seed: 0,
            profile_points: 200,
        }
    }
}

pub struct StudyResult {
    /// Quantities `matrix` and `fracture`, one label per scheme.
    pub table: ErrorTable,
    /// Profiles on the finest study level per scheme, and of the reference.
    pub profiles: Vec<(String, Vec<(f64, f64)>)>,
    pub reference_cells: usize,
}

impl StudyResult {
    pub fn profile(&self, name: &str) -> Option<&[(f64, f64)]> {
        self.profiles.iter().find(|p| p.0 == name).map(|p| p.1.as_slice())
    }

    pub fn profiles_csv(&self) -> String {
        let mut s = String::from("t");
        for (n, _) in &self.profiles {
            s += &format!(",{n}");
        }
        s.push('\n');
        if let Some((_, first)) = self.profiles.first() {
            for i in 0..first.len() {
                s += &format!("{:.6}", first[i].0);
                for (_, p) in &self.profiles {
                    s += &format!(",{:.10e}", p[i].1);
                }
                s.push('\n');
            }
        }
        s
    }
}

pub fn run_study(cfg: &StudyConfig) -> Result<StudyResult> {
    if cfg.levels.len() < 2 {
        return Err(crate::error::Error::Config(format!("a convergence study needs at least 2 mesh levels, got {}", cfg.levels.len())));
    }
    let reference = Solved::run(geometry(cfg.reference_h, cfg.seed)?, Scheme::Mpfa)?;
    let jobs: Vec<(Scheme, f64)> = cfg.schemes.iter().flat_map(|&s| cfg.levels.iter().map(move |&h| (s, h))).collect();
    let solved: Vec<Solved> = jobs.par_iter().map(|&(scheme, h)| Solved::run(geometry(h, cfg.seed)?, scheme)).collect::<Result<_>>()?;
    let mut table = ErrorTable::new(&["matrix", "fracture"]);
    let mut profiles = Vec::new();
    for (i, (&(scheme, h), s)) in jobs.iter().zip(&solved).enumerate() {
        let (em, ef) = s.errors(&reference);
        table.rows.push(ErrorRow { label: scheme.name().into(), h, cells: s.matrix_cells(), errors: vec![em, ef] });
        // Profile of the finest level per scheme.
        if jobs.get(i + 1).is_none_or(|n| n.0 != scheme) {
            profiles.push((scheme.name().to_string(), s.profile(cfg.profile_points)));
        }
    }
    profiles.push(("reference".into(), reference.profile(cfg.profile_points)));
    Ok(StudyResult { table, profiles, reference_cells: reference.matrix_cells() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coarse_profile_varies_with_jumps_at_blocking_fractures() {
        let s = Solved::run(geometry(0.08, 0).unwrap(), Scheme::Tpfa).unwrap();
        let prof = s.profile(100);
        assert!(prof.iter().all(|p| p.1 > P_RIGHT - 1e-6 && p.1 < P_LEFT + 1e-6));
        assert!(prof[0].1 > prof[prof.len() - 1].1);
        // The profile crosses both blocking fractures; the largest jump
        // between neighbouring samples sits at one of them.
        let jumps: Vec<f64> = prof.windows(2).map(|w| (w[0].1 - w[1].1).abs()).collect();
        let imax = jumps.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
        let t = prof[imax].0;
        let x = [t, 0.5 + 0.4 * t];
        let d = BLOCKING
            .iter()
            .map(|&k| crate::geom::point_segment_distance(x, FRACTURES[k][0], FRACTURES[k][1]).0)
            .fold(f64::INFINITY, f64::min);
        assert!(d < 0.05, "largest jump at {x:?}, {d} from the blocking fractures");
        let (i, o) = s.sol.boundary_fluxes(&s.geom);
        assert!((i - o).abs() < 1e-9 * i);
    }

    #[test]
    fn single_level_study_is_rejected() {
        let cfg = StudyConfig { levels: vec![0.1], ..Default::default() };
        assert!(run_study(&cfg).is_err());
    }
}
