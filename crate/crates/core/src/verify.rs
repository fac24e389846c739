//! Property suites: structural, conservation and consistency checks run on
//! seeded random networks and meshes.

use crate::assembly::block::{direct_coupling_violations, BlockSystem};
use crate::assembly::contact::{conditions_hold, ncp, ContactParams, ContactPoint};
use crate::assembly::dofs::Entity;
use crate::assembly::newton::{jacobian_fd_error, NonlinearProblem};
use crate::discretize::mpfa::mpfa_tensor;
use crate::discretize::mpsa::mpsa;
use crate::discretize::params::isotropic;
use crate::discretize::tpfa::tpfa_tensor;
use crate::discretize::{BcKind, BoundaryCondition, MechanicsParameters, VectorBc};
use crate::error::{Error, Result};
use crate::geom::network::{FractureNetwork2, Point, Rect};
use crate::mesh::grid::Grid;
use crate::mesh::mesher::MeshOptions;
use crate::mesh::structured::{equilateral, perturbed_square};
use crate::mesh::MeshSizeParams;
use crate::models::common::{build_geometry, BoundaryValue, Geometry, MeshSource};
use crate::models::flow::{conservation_residual, run_flow, FlowParams, FractureProps, Scheme};
use crate::models::poromech::{PoromechConfig, PoromechProblem};
use crate::models::transport::{run_flow_transport, TransportParams, TransportProblem};
use crate::sparse::{matvec, max_abs, sub};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::fmt::Write as _;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    /// No direct coupling between neighbouring subdomains.
    Structure,
    Projections,
    Conservation,
    Jacobian,
    ContactNcp,
    Consistency,
}

impl Suite {
    pub fn all() -> [Suite; 6] {
        [Suite::Structure, Suite::Projections, Suite::Conservation, Suite::Jacobian, Suite::ContactNcp, Suite::Consistency]
    }

    pub fn name(self) -> &'static str {
        match self {
            Suite::Structure => "structure",
            Suite::Projections => "projections",
            Suite::Conservation => "conservation",
            Suite::Jacobian => "jacobian",
            Suite::ContactNcp => "contact-ncp",
            Suite::Consistency => "consistency",
        }
    }
}

impl FromStr for Suite {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Suite::all().into_iter().find(|x| x.name() == s).ok_or_else(|| {
            let names: Vec<&str> = Suite::all().iter().map(|x| x.name()).collect();
            Error::Config(format!("unknown suite '{s}' (expected one of {})", names.join(", ")))
        })
    }
}

/// One property measured over a number of samples. `measured` is the worst
/// case and passes when it does not exceed `tolerance`.
#[derive(Debug, Clone)]
pub struct Check {
    pub name: String,
    pub samples: usize,
    pub measured: f64,
    pub tolerance: f64,
}

impl Check {
    pub fn passed(&self) -> bool {
        self.measured <= self.tolerance
    }
}

#[derive(Debug, Clone)]
pub struct SuiteReport {
    pub suite: Suite,
    pub checks: Vec<Check>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(Check::passed)
    }

    pub fn table(&self) -> String {
        let w = self.checks.iter().map(|c| c.name.len()).max().unwrap_or(5).max(5);
        let mut s = format!("{:<w$}  {:>7}  {:>12}  {:>10}  result\n", "check", "samples", "max error", "tolerance");
        for c in &self.checks {
            let _ = writeln!(
                s,
                "{:<w$}  {:>7}  {:>12.3e}  {:>10.1e}  {}",
                c.name,
                c.samples,
                c.measured,
                c.tolerance,
                if c.passed() { "pass" } else { "FAIL" }
            );
        }
        s
    }
}

struct Acc {
    name: String,
    tolerance: f64,
    samples: usize,
    worst: f64,
}

impl Acc {
    fn new(name: &str, tolerance: f64) -> Acc {
        Acc { name: name.into(), tolerance, samples: 0, worst: 0.0 }
    }

    fn add(&mut self, v: f64) {
        self.samples += 1;
        // NaN counts as a failure.
        self.worst = if v.is_nan() { f64::INFINITY } else { self.worst.max(v) };
    }

    fn done(self) -> Check {
        Check { name: self.name, samples: self.samples, measured: self.worst, tolerance: self.tolerance }
    }
}

pub fn run_suite(suite: Suite, seed: u64) -> Result<SuiteReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let checks = match suite {
        Suite::Structure => structure(&mut rng)?,
        Suite::Projections => projections(&mut rng)?,
        Suite::Conservation => conservation(&mut rng)?,
        Suite::Jacobian => jacobian(&mut rng)?,
        Suite::ContactNcp => contact_ncp(&mut rng),
        Suite::Consistency => consistency(&mut rng)?,
    };
    Ok(SuiteReport { suite, checks })
}

/// A random network of `n` fractures in the unit square, meshed at size
/// `h`. Draws that the geometry pipeline rejects (nearly touching segments,
/// too short pieces) are redrawn.
pub fn random_geometry(rng: &mut ChaCha8Rng, n: usize, h: f64, intersecting: bool) -> Result<Geometry> {
    let mut last = None;
    for _ in 0..200 {
        let fr: Vec<[Point; 2]> = (0..n)
            .map(|_| {
                let c = [rng.random_range(0.25..0.75), rng.random_range(0.25..0.75)];
                let th = rng.random_range(0.0..std::f64::consts::PI);
                let l = 0.5 * rng.random_range(0.25..0.5);
                [[c[0] - l * th.cos(), c[1] - l * th.sin()], [c[0] + l * th.cos(), c[1] + l * th.sin()]]
            })
            .collect();
        let net = FractureNetwork2::new(fr, Rect::unit(), None)?;
        let opts = MeshOptions::new(MeshSizeParams::uniform(h)).seed(rng.random_range(0..1u64 << 32));
        match build_geometry(&net, &MeshSource::Generate(opts), 1) {
            Ok(g) if intersecting || g.md.intersections.is_empty() => return Ok(g),
            Ok(_) => {}
            Err(e) => last = Some(e),
        }
    }
    Err(last.unwrap_or_else(|| Error::Geometry("no admissible random network drawn".into())))
}

fn left_right(x: Point) -> BoundaryValue {
    if x[0] < 1e-12 {
        BoundaryValue::Pressure(1.0)
    } else if x[0] > 1.0 - 1e-12 {
        BoundaryValue::Pressure(0.0)
    } else {
        BoundaryValue::Flux(0.0)
    }
}

fn left_inlet(x: Point) -> f64 {
    if x[0] < 1e-12 {
        1.0
    } else {
        0.0
    }
}

fn flow_params(n: usize, scheme: Scheme, k_frac: f64) -> FlowParams {
    FlowParams { matrix_perm: 1.0, fractures: vec![FractureProps { k_t: k_frac, k_n: k_frac, aperture: 1e-2 }; n], scheme }
}

fn structure(rng: &mut ChaCha8Rng) -> Result<Vec<Check>> {
    let mut flow = Acc::new("flow: nonzero subdomain-subdomain blocks", 0.0);
    let mut transport = Acc::new("transport jacobian: nonzero subdomain-subdomain blocks", 0.0);
    let mut poro = Acc::new("biot-contact jacobian: nonzero subdomain-subdomain blocks", 0.0);
    for i in 0..6 {
        let geom = random_geometry(rng, 3, 0.12, true)?;
        for scheme in [Scheme::Tpfa, Scheme::Mpfa] {
            let sol = run_flow(&geom, &flow_params(3, scheme, rng.random_range(1e-2..1e2)), &left_right)?;
            flow.add(direct_coupling_violations(&sol.system, &geom.graph).len() as f64);
        }
        if i < 2 {
            let mut prob = TransportProblem::new(
                &geom,
                &flow_params(3, Scheme::Tpfa, 1e2),
                &TransportParams { diffusivity: 1e-2, interface_diffusivity: 1e-2, ..Default::default() },
                &left_right,
                &left_inlet,
            )?;
            let x: Vec<f64> = (0..prob.dofs.num_dofs()).map(|_| rng.random_range(0.0..1.0)).collect();
            prob.set_previous(&x);
            let (r, jac) = prob.residual_jacobian(&x)?;
            let sys = BlockSystem { matrix: jac, rhs: r, dofs: prob.dofs.clone() };
            transport.add(direct_coupling_violations(&sys, &geom.graph).len() as f64);
        }
    }
    for _ in 0..2 {
        let geom = random_geometry(rng, 2, 0.12, false)?;
        let (mut prob, x) = random_poromech_state(&geom, rng)?;
        let (r, jac) = prob.residual_jacobian(&x)?;
        let sys = BlockSystem { matrix: jac, rhs: r, dofs: prob.dofs.clone() };
        poro.add(direct_coupling_violations(&sys, &geom.graph).len() as f64);
    }
    Ok(vec![flow.done(), transport.done(), poro.done()])
}

fn projections(rng: &mut ChaCha8Rng) -> Result<Vec<Check>> {
    let mut unity = Acc::new("intensive maps preserve constants", 1e-12);
    let mut ext = Acc::new("extensive maps preserve totals", 1e-12);
    let mut dual = Acc::new("intensive/extensive duality", 1e-12);
    for _ in 0..6 {
        let h = rng.random_range(0.08..0.15);
        let geom = random_geometry(rng, 3, h, true)?;
        for e in &geom.graph.edges {
            let m = &e.mortar;
            let nm = m.num_cells();
            let maps = [
                (&m.primary_to_mortar_int, &m.primary_to_mortar_ext, &m.mortar_to_primary_int, &m.mortar_to_primary_ext),
                (&m.secondary_to_mortar_int, &m.secondary_to_mortar_ext, &m.mortar_to_secondary_int, &m.mortar_to_secondary_ext),
            ];
            for (to_int, to_ext, from_int, from_ext) in maps {
                let ne = to_int.cols();
                let sides: Vec<f64> = (0..ne).map(|j| sides_touching(from_int, j, &m.cell_side, m.num_sides)).collect();
                let touched: Vec<bool> = sides.iter().map(|s| *s > 0.0).collect();
                for v in matvec(to_int, &vec![1.0; ne]) {
                    unity.add((v - 1.0).abs());
                }
                // Per side, every entity the side touches sees the constant.
                for side in 0..m.num_sides {
                    let y: Vec<f64> = m.cell_side.iter().map(|s| if *s == side { 1.0 } else { 0.0 }).collect();
                    let csr = crate::sparse::ensure_csr(from_int);
                    for (j, v) in matvec(from_int, &y).iter().enumerate() {
                        let hit = csr.outer_view(j).is_some_and(|r| r.iter().any(|(k, _)| m.cell_side[k] == side));
                        if hit {
                            unity.add((v - 1.0).abs());
                        }
                    }
                }
                let y: Vec<f64> = (0..nm).map(|_| rng.random_range(-1.0..1.0)).collect();
                let x: Vec<f64> = (0..ne).map(|j| if touched[j] { rng.random_range(-1.0..1.0) } else { 0.0 }).collect();
                let sy: f64 = y.iter().sum();
                ext.add((matvec(from_ext, &y).iter().sum::<f64>() - sy).abs());
                // Each entity is copied onto every side it touches.
                let xs: f64 = x.iter().zip(&sides).map(|(a, s)| a * s).sum();
                ext.add((matvec(to_ext, &x).iter().sum::<f64>() - xs).abs());
                let lhs: f64 = matvec(to_int, &x).iter().zip(&y).map(|(a, b)| a * b).sum();
                let rhs: f64 = x.iter().zip(matvec(from_ext, &y)).map(|(a, b)| a * b).sum();
                dual.add((lhs - rhs).abs());
                let lhs: f64 = matvec(to_ext, &x).iter().zip(&y).map(|(a, b)| a * b).sum();
                let rhs: f64 = x.iter().zip(matvec(from_int, &y)).map(|(a, b)| a * b).sum();
                dual.add((lhs - rhs).abs());
            }
        }
    }
    Ok(vec![unity.done(), ext.done(), dual.done()])
}

/// Number of mortar sides that overlap entity `j`, from the sparsity of a
/// mortar-to-entity map.
fn sides_touching(from: &crate::sparse::SpMat, j: usize, cell_side: &[usize], num_sides: usize) -> f64 {
    let csr = crate::sparse::ensure_csr(from);
    let mut seen = vec![false; num_sides.max(1)];
    if let Some(row) = csr.outer_view(j) {
        for (k, _) in row.iter() {
            seen[cell_side[k]] = true;
        }
    }
    seen.iter().filter(|s| **s).count() as f64
}

fn conservation(rng: &mut ChaCha8Rng) -> Result<Vec<Check>> {
    let mut flow = Acc::new("flow: scaled cell-wise balance residual, all dimensions", 1e-8);
    let mut newton = Acc::new("transport: scaled cell-wise residual at convergence", 1e-8);
    let mut mass = Acc::new("transport: relative solute mass balance per step", 1e-8);
    for _ in 0..4 {
        let geom = random_geometry(rng, 3, 0.1, true)?;
        for scheme in [Scheme::Tpfa, Scheme::Mpfa] {
            let k = 10f64.powf(rng.random_range(-3.0..3.0));
            let sol = run_flow(&geom, &flow_params(3, scheme, k), &left_right)?;
            flow.add(conservation_residual(&sol));
        }
    }
    for _ in 0..2 {
        let geom = random_geometry(rng, 3, 0.12, true)?;
        let tp = TransportParams { end_time: 0.06, dt: 0.02, diffusivity: 1e-2, interface_diffusivity: 1e-2, ..Default::default() };
        let r = run_flow_transport(&geom, &flow_params(3, Scheme::Tpfa, 1e2), &tp, &left_right, &left_inlet, 0.0)?;
        for rep in &r.newton {
            newton.add(rep.final_residual());
        }
        let mut prev = r.initial_mass;
        for s in &r.steps {
            let expect = -tp.dt * s.boundary_outflow;
            mass.add((s.mass - prev - expect).abs() / expect.abs().max(1e-12));
            prev = s.mass;
        }
    }
    Ok(vec![flow.done(), newton.done(), mass.done()])
}

/// A Biot-contact step problem at a random state with tractions spread over
/// all contact modes.
fn random_poromech_state(geom: &Geometry, rng: &mut ChaCha8Rng) -> Result<(PoromechProblem, Vec<f64>)> {
    let nf = geom.num_fractures();
    let mut cfg = PoromechConfig::default();
    cfg.fractures = vec![[[0.0; 2]; 2]; nf];
    cfg.flow.fractures = vec![cfg.flow.fractures[0]; nf];
    for e in &mut cfg.schedule {
        e.rates = vec![0.05; nf];
    }
    let mut prob = PoromechProblem::new(geom, &cfg)?;
    let n = prob.dofs.num_dofs();
    let old: Vec<f64> = (0..n).map(|_| rng.random_range(-1e-2..1e-2)).collect();
    prob.begin_step(&old, &vec![0.05; nf]);
    let mut x: Vec<f64> = (0..n).map(|_| rng.random_range(-1e-2..1e-2)).collect();
    for k in 0..nf {
        for (j, i) in prob.dofs.range(Entity::Node(geom.fracture_node(k)), "traction").unwrap().enumerate() {
            x[i] = if j % 2 == 0 { rng.random_range(-1.0..0.2) } else { rng.random_range(-0.5..0.5) };
        }
    }
    Ok((prob, x))
}

fn jacobian(rng: &mut ChaCha8Rng) -> Result<Vec<Check>> {
    let mut tr = Acc::new("flow-transport: relative FD error", 1e-6);
    let mut po = Acc::new("biot-contact: relative FD error", 1e-6);
    for _ in 0..2 {
        let geom = random_geometry(rng, 3, 0.15, true)?;
        let tp = TransportParams { diffusivity: 1e-2, interface_diffusivity: 1e-1, ..Default::default() };
        let mut prob = TransportProblem::new(&geom, &flow_params(3, Scheme::Tpfa, 1e2), &tp, &left_right, &left_inlet)?;
        for _ in 0..3 {
            let mut x = vec![0.0; prob.dofs.num_dofs()];
            for b in prob.dofs.blocks() {
                for i in b.range() {
                    x[i] = match b.variable.as_str() {
                        "c" | "p" => rng.random_range(0.0..1.0),
                        _ => rng.random_range(0.1..1.0) * if rng.random_range(0.0..1.0) < 0.5 { -1.0 } else { 1.0 },
                    };
                }
            }
            let old: Vec<f64> = (0..x.len()).map(|_| rng.random_range(0.0..1.0)).collect();
            prob.set_previous(&old);
            let (_, jac) = prob.residual_jacobian(&x)?;
            tr.add(jacobian_fd_error(&mut prob, &x, &jac, 1e-6, 4)?);
        }
    }
    for _ in 0..2 {
        let geom = random_geometry(rng, 2, 0.12, false)?;
        for _ in 0..3 {
            let (mut prob, x) = random_poromech_state(&geom, rng)?;
            let (_, jac) = prob.residual_jacobian(&x)?;
            po.add(jacobian_fd_error(&mut prob, &x, &jac, 1e-7, 4)?);
        }
    }
    Ok(vec![tr.done(), po.done()])
}

/// Values on a coarse lattice so that exact ties (zero traction, traction
/// on the friction bound, zero slip) occur with positive probability.
fn lattice(rng: &mut ChaCha8Rng, lo: i32, hi: i32, step: f64) -> f64 {
    rng.random_range(lo..=hi) as f64 * step
}

/// Sample a state that satisfies the contact and friction conditions.
fn admissible(rng: &mut ChaCha8Rng, f: f64) -> ContactPoint {
    let mag = |rng: &mut ChaCha8Rng| rng.random_range(0.01..2.0);
    match rng.random_range(0..4) {
        0 => ContactPoint { sn: 0.0, st: 0.0, jn: mag(rng), djt: rng.random_range(-1.0..1.0) },
        1 => {
            let sn = -mag(rng);
            ContactPoint { sn, st: -f * sn * rng.random_range(-1.0..1.0), jn: 0.0, djt: 0.0 }
        }
        2 => {
            let sn = -mag(rng);
            let d: f64 = rng.random_range(-1.0..1.0);
            ContactPoint { sn, st: f * sn * d.signum(), jn: 0.0, djt: d }
        }
        _ => ContactPoint { sn: 0.0, st: 0.0, jn: 0.0, djt: rng.random_range(-1.0..1.0) },
    }
}

fn contact_ncp(rng: &mut ChaCha8Rng) -> Vec<Check> {
    let tol = 1e-10;
    let n = 10_000;
    // Violation counts.
    let mut v = [0usize; 3];
    for i in 0..n {
        let p = ContactParams {
            friction: [0.0, 0.3, 0.5, 1.0][i % 4],
            c_n: 10f64.powf(rng.random_range(-2.0..2.0)),
            c_t: 10f64.powf(rng.random_range(-2.0..2.0)),
        };
        let root = |x: &ContactPoint| {
            let r = ncp(x, &p).value;
            r[0].abs().max(r[1].abs()) <= tol
        };
        let x = admissible(rng, p.friction);
        v[0] += usize::from(!(root(&x) && conditions_hold(&x, p.friction, tol)));
        let x = ContactPoint {
            sn: lattice(rng, -4, 1, 0.5),
            st: lattice(rng, -4, 4, 0.25),
            jn: lattice(rng, -1, 2, 0.5),
            djt: lattice(rng, -2, 2, 0.5),
        };
        v[1] += usize::from(root(&x) != conditions_hold(&x, p.friction, tol));
        let x = ContactPoint {
            sn: rng.random_range(-2.0..1.0),
            st: rng.random_range(-2.0..2.0),
            jn: rng.random_range(-1.0..1.0),
            djt: rng.random_range(-1.0..1.0),
        };
        v[2] += usize::from(root(&x) != conditions_hold(&x, p.friction, tol));
    }
    let names = [
        "admissible states are NCP roots (violations)",
        "NCP root <=> contact conditions, lattice states (violations)",
        "NCP root <=> contact conditions, random states (violations)",
    ];
    names.iter().zip(v).map(|(name, c)| Check { name: name.to_string(), samples: n, measured: c as f64, tolerance: 0.0 }).collect()
}

type Lin = [[f64; 2]; 2];

fn eval(a: &Lin, b: [f64; 2], x: Point) -> [f64; 2] {
    [a[0][0] * x[0] + a[0][1] * x[1] + b[0], a[1][0] * x[0] + a[1][1] * x[1] + b[1]]
}

/// Largest error of MPSA face tractions (relative to the stress scale),
/// face displacements and cell volume change for the linear displacement
/// `u = A x + b`.
pub fn mpsa_linear_error(g: &Grid, bc: &VectorBc, lam: f64, mu: f64, a: Lin, b: [f64; 2]) -> Result<f64> {
    let m = MechanicsParameters::uniform(g.num_cells(), lam, mu);
    let d = mpsa(g, &m, bc)?;
    let div = a[0][0] + a[1][1];
    let sig = [[lam * div + 2.0 * mu * a[0][0], mu * (a[0][1] + a[1][0])], [mu * (a[0][1] + a[1][0]), lam * div + 2.0 * mu * a[1][1]]];
    let u: Vec<f64> = g.cell_centers.iter().flat_map(|x| eval(&a, b, *x)).collect();
    let mut gb = vec![0.0; 2 * g.num_faces()];
    for f in g.boundary_faces() {
        let (_, s) = g.boundary_cell(f);
        let n = g.face_normals[f];
        let kinds = bc.kinds[f].ok_or_else(|| Error::Config(format!("boundary face {f} has no condition")))?;
        for i in 0..2 {
            gb[2 * f + i] = match kinds[i] {
                BcKind::Dirichlet => eval(&a, b, g.face_centers[f])[i],
                BcKind::Neumann => s * (sig[i][0] * n[0] + sig[i][1] * n[1]),
            };
        }
    }
    let t: Vec<f64> = matvec(&d.stress, &u).iter().zip(matvec(&d.bound_stress, &gb)).map(|(x, y)| x + y).collect();
    let uf: Vec<f64> = matvec(&d.disp_cell, &u).iter().zip(matvec(&d.disp_bound, &gb)).map(|(x, y)| x + y).collect();
    let dv: Vec<f64> = matvec(&d.div_u, &u).iter().zip(matvec(&d.bound_div_u, &gb)).map(|(x, y)| x + y).collect();
    let scale = 1.0 + sig.iter().flatten().fold(0.0_f64, |m, v| m.max(v.abs()));
    let mut err: f64 = 0.0;
    for f in 0..g.num_faces() {
        let n = g.face_normals[f];
        let ex = eval(&a, b, g.face_centers[f]);
        for i in 0..2 {
            let exact = (sig[i][0] * n[0] + sig[i][1] * n[1]) * g.face_areas[f];
            err = err.max((t[2 * f + i] - exact).abs() / scale);
            err = err.max((uf[2 * f + i] - ex[i]).abs());
        }
    }
    for c in 0..g.num_cells() {
        err = err.max((dv[c] - div * g.cell_volumes[c]).abs());
    }
    Ok(err)
}

/// Traction on the right side, rollers on the bottom, clamped elsewhere.
fn mixed_vector_bc(g: &Grid) -> VectorBc {
    let mut bc = VectorBc::all(g, BcKind::Dirichlet);
    for f in g.boundary_faces() {
        let x = g.face_centers[f];
        if x[0] > 1.0 - 1e-12 {
            bc.set(f, [BcKind::Neumann; 2]);
        } else if x[1] < 1e-12 {
            bc.set(f, [BcKind::Neumann, BcKind::Dirichlet]);
        }
    }
    bc
}

fn consistency(rng: &mut ChaCha8Rng) -> Result<Vec<Check>> {
    let mut mpfa = Acc::new("MPFA equals TPFA on K-orthogonal grids", 1e-10);
    for (nx, ny) in [(4, 4), (6, 5), (9, 7)] {
        let g = equilateral(nx, ny, rng.random_range(0.05..0.3));
        let k = vec![isotropic(10f64.powf(rng.random_range(-2.0..2.0))); g.num_cells()];
        let mut bcs = vec![BoundaryCondition::all(&g, BcKind::Dirichlet)];
        let mut mixed = BoundaryCondition::all(&g, BcKind::Dirichlet);
        for f in g.boundary_faces() {
            if g.face_centers[f][1] < 1e-9 {
                mixed.set(f, BcKind::Neumann);
            }
        }
        bcs.push(mixed);
        for bc in &bcs {
            let (a, b) = (mpfa_tensor(&g, &k, bc)?, tpfa_tensor(&g, &k, bc)?);
            let scale = max_abs(&b.flux).max(1.0);
            mpfa.add(max_abs(&sub(&a.flux, &b.flux)) / scale);
            mpfa.add(max_abs(&sub(&a.bound_flux, &b.bound_flux)) / scale);
        }
    }
    let mut rigid = Acc::new("MPSA rigid motions, random meshes", 1e-10);
    let mut linear = Acc::new("MPSA linear fields, random meshes", 1e-10);
    for _ in 0..20 {
        let g = perturbed_square(rng.random_range(4..8), 0.3, rng.random_range(0..u64::MAX));
        let lam = rng.random_range(0.0..3.0);
        let mu = rng.random_range(0.5..2.0);
        let w = rng.random_range(-1.0..1.0);
        let t = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
        rigid.add(mpsa_linear_error(&g, &VectorBc::all(&g, BcKind::Dirichlet), lam, mu, [[0.0, -w], [w, 0.0]], t)?);
        let a = [[rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)], [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]];
        linear.add(mpsa_linear_error(&g, &mixed_vector_bc(&g), lam, mu, a, t)?);
    }
    let mut zero = Acc::new("transport with c = 0 reproduces flow", 1e-10);
    let mut maxp = Acc::new("pure advection stays in [0, 1] (excess)", 1e-10);
    for scheme in [Scheme::Tpfa, Scheme::Mpfa] {
        let geom = random_geometry(rng, 3, 0.12, true)?;
        let fp = flow_params(3, scheme, 1e2);
        let r = run_flow_transport(&geom, &fp, &TransportParams { end_time: 0.03, ..Default::default() }, &left_right, &|_| 0.0, 0.0)?;
        let flow = run_flow(&geom, &fp, &left_right)?;
        for s in &r.steps {
            for (a, b) in s.pressure.iter().flatten().zip(flow.pressure.iter().flatten()) {
                zero.add((a - b).abs());
            }
            for (a, b) in s.lambda.iter().flatten().zip(flow.mortar_flux.iter().flatten()) {
                zero.add((a - b).abs());
            }
        }
        let tp = TransportParams { end_time: 0.2, dt: 0.02, ..Default::default() };
        let r = run_flow_transport(&geom, &fp, &tp, &left_right, &left_inlet, 0.0)?;
        for s in &r.steps {
            for c in s.concentration.iter().flatten() {
                maxp.add((-c).max(c - 1.0).max(0.0));
            }
        }
    }
    Ok(vec![mpfa.done(), rigid.done(), linear.done(), zero.done(), maxp.done()])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_names_round_trip() {
        for s in Suite::all() {
            assert_eq!(s.name().parse::<Suite>().unwrap(), s);
        }
        assert!("nope".parse::<Suite>().is_err());
    }

    #[test]
    fn random_networks_are_reproducible() {
        let a = random_geometry(&mut ChaCha8Rng::seed_from_u64(4), 3, 0.15, true).unwrap();
        let b = random_geometry(&mut ChaCha8Rng::seed_from_u64(4), 3, 0.15, true).unwrap();
        assert_eq!(a.md.matrix.cell_centers, b.md.matrix.cell_centers);
        let c = random_geometry(&mut ChaCha8Rng::seed_from_u64(5), 2, 0.15, false).unwrap();
        assert!(c.md.intersections.is_empty());
    }

    #[test]
    fn report_table_marks_failures() {
        let r = SuiteReport {
            suite: Suite::Structure,
            checks: vec![
                Check { name: "a".into(), samples: 1, measured: 0.0, tolerance: 0.0 },
                Check { name: "b".into(), samples: 2, measured: 1.0, tolerance: 0.5 },
            ],
        };
        assert!(!r.passed());
        let t = r.table();
        assert!(t.contains("pass") && t.contains("FAIL"));
    }

    #[test]
    fn contact_suite_has_no_violations() {
        let r = run_suite(Suite::ContactNcp, 1).unwrap();
        assert!(r.passed(), "{}", r.table());
        assert!(r.checks.iter().all(|c| c.samples == 10_000));
    }

    #[test]
    fn lattice_states_include_contact_solutions() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let p = ContactParams { friction: 0.5, c_n: 1.0, c_t: 1.0 };
        let roots = (0..2000)
            .filter(|_| {
                let x = ContactPoint {
                    sn: lattice(&mut rng, -4, 1, 0.5),
                    st: lattice(&mut rng, -4, 4, 0.25),
                    jn: lattice(&mut rng, -1, 2, 0.5),
                    djt: lattice(&mut rng, -2, 2, 0.5),
                };
                conditions_hold(&x, p.friction, 1e-10)
            })
            .count();
        assert!(roots >= 20, "only {roots} solutions sampled");
    }
}
