//! Biot poroelasticity in the matrix coupled to flow in non-intersecting
//! fractures whose walls are in frictional contact.
//!
//! Matrix faces on a fracture take the mortar displacements as Dirichlet
//! data. On each mortar cell the matrix traction balances the contact
//! traction and the fracture pressure; the contact traction is a fracture
//! unknown `(sn, st)` in the fracture frame `(e_n, tau)` and acts on the plus
//! side as `-sn e_n + st tau`. The jump is `u+ - u-`, opening positive.

use super::common::{build_geometry, BoundaryValue, Geometry, MeshSource, Side};
use super::flow::{flow_contributions, flow_dofs, flow_operators, FlowParams, FractureProps, Scheme};
use crate::assembly::contact::{ncp, ContactMode, ContactParams, ContactPoint};
use crate::assembly::dofs::{DofManager, Entity};
use crate::assembly::newton::{newton_solve, term_scales, NewtonConfig, NewtonReport, NonlinearProblem};
use crate::discretize::mpsa::{mpsa, vector_divergence};
use crate::discretize::{BcKind, MechanicsParameters, StressDiscretization, VectorBc};
use crate::error::{Error, Result, ResultExt};
use crate::geom::network::{FractureNetwork2, Point, Rect};
use crate::mesh::mesher::MeshOptions;
use crate::mesh::MeshSizeParams;
use crate::sparse::{diag, kron_i2, matvec, mul, scale_rows, transpose, SpMat, Triplets};
use std::ops::Range;

/// Boundary data of one displacement component.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MechBc {
    Displacement(f64),
    /// Outward traction density.
    Traction(f64),
}

/// Injection rates per fracture from `start` until the next entry.
#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleEntry {
    pub start: f64,
    pub rates: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct PoromechConfig {
    pub fractures: Vec<[Point; 2]>,
    pub domain: Rect,
    pub mesh_size: f64,
    pub seed: u64,
    pub flow: FlowParams,
    pub mech: MechanicsParameters,
    /// Background stress `[sxx, syy, sxy]`, compression negative.
    pub background_stress: [f64; 3],
    pub schedule: Vec<ScheduleEntry>,
    pub dt: f64,
    pub end_time: f64,
    pub newton: NewtonConfig,
}

impl Default for PoromechConfig {
    fn default() -> Self {
        let fractures = vec![[[0.3, 0.3], [0.7, 0.7]], [[0.15, 0.65], [0.35, 0.9]], [[0.6, 0.12], [0.88, 0.3]]];
        let props = FractureProps { k_t: 1.0, k_n: 1e-2, aperture: 1e-2 };
        let mut mech = MechanicsParameters::uniform(0, 1.0, 1.0);
        mech.biot_alpha = 0.8;
        mech.storage = 0.1;
        mech.friction = 0.5;
        mech.c_n = 1.0;
        mech.c_t = 1.0;
        mech.residual_aperture = 1e-2;
        PoromechConfig {
            flow: FlowParams { matrix_perm: 1e-2, fractures: vec![props; fractures.len()], scheme: Scheme::Tpfa },
            fractures,
            domain: Rect::unit(),
            mesh_size: 0.06,
            seed: 0,
            mech,
            background_stress: [-1.0, -0.6, 0.0],
            schedule: vec![
                ScheduleEntry { start: 0.0, rates: vec![0.05, 0.0, 0.0] },
                ScheduleEntry { start: 2.0, rates: vec![0.0, 0.0, 0.0] },
            ],
            dt: 0.1,
            end_time: 10.0,
            newton: NewtonConfig { tol: 1e-8, max_iterations: 40, patience: 15, fd_check: None },
        }
    }
}

impl PoromechConfig {
    pub fn validate(&self) -> Result<()> {
        self.mech.validate()?;
        if !(self.dt > 0.0 && self.end_time >= self.dt) {
            return Err(Error::Config(format!("need 0 < dt <= end time, got dt {} and end time {}", self.dt, self.end_time)));
        }
        if self.schedule.is_empty() {
            return Err(Error::Config("injection schedule is empty".into()));
        }
        for w in self.schedule.windows(2) {
            if !(w[1].start > w[0].start) {
                return Err(Error::Config(format!("schedule times must be strictly increasing ({} then {})", w[0].start, w[1].start)));
            }
        }
        for e in &self.schedule {
            if e.rates.len() != self.fractures.len() {
                return Err(Error::Config(format!(
                    "schedule entry at t = {} has {} rates for {} fractures",
                    e.start,
                    e.rates.len(),
                    self.fractures.len()
                )));
            }
        }
        Ok(())
    }

    /// Rates active at time `t`.
    pub fn rates_at(&self, t: f64) -> Vec<f64> {
        self.schedule.iter().rev().find(|e| e.start <= t + 1e-12).map_or(vec![0.0; self.fractures.len()], |e| e.rates.clone())
    }

    /// Mechanical data per side: rollers on the left and bottom, the
    /// background traction on the right and top.
    pub fn mech_side(&self, s: Side) -> [MechBc; 2] {
        let [sxx, syy, sxy] = self.background_stress;
        use MechBc::*;
        match s {
            Side::Left => [Displacement(0.0), Traction(-sxy)],
            Side::Bottom => [Traction(-sxy), Displacement(0.0)],
            Side::Right => [Traction(sxx), Traction(sxy)],
            Side::Top => [Traction(sxy), Traction(syy)],
        }
    }
}

struct FractureFrame {
    node: usize,
    e_n: Point,
    tau: Point,
    /// Mortar displacements to the jump components on fracture cells.
    jn: SpMat,
    jt: SpMat,
}

/// Residual assembly for one implicit Euler step, or the initial
/// equilibrium when `init` is set.
pub struct PoromechProblem {
    pub dofs: DofManager,
    mech: MechanicsParameters,
    frames: Vec<FractureFrame>,
    /// Linear part of the step residual, and of the initial equilibrium.
    a_step: SpMat,
    a_init: SpMat,
    /// Constant terms of the step residual without old-state and source
    /// contributions.
    b_const: Vec<f64>,
    b_init: Vec<f64>,
    /// Maps the state to the old-state terms of the mass balances.
    old_map: SpMat,
    fracture_volumes: Vec<Vec<f64>>,
    dt: f64,
    pub init: bool,
    x_old: Vec<f64>,
    /// Equilibrium state; tangential jumps are reported relative to it.
    x_start: Vec<f64>,
    sources: Vec<f64>,
}

pub fn poromech_dofs(geom: &Geometry) -> Result<DofManager> {
    let mut spec = Vec::new();
    let m = &geom.graph.nodes[0];
    spec.push((Entity::Node(0), "u".to_string(), 2, m.grid.num_cells()));
    spec.push((Entity::Node(0), "p".to_string(), 1, m.grid.num_cells()));
    for n in geom.graph.nodes.iter().skip(1) {
        spec.push((Entity::Node(n.id), "p".to_string(), 1, n.grid.num_cells()));
        spec.push((Entity::Node(n.id), "traction".to_string(), 2, n.grid.num_cells()));
    }
    for e in &geom.graph.edges {
        spec.push((Entity::Edge(e.id), "lambda".to_string(), 1, e.mortar.num_cells()));
        spec.push((Entity::Edge(e.id), "u_mortar".to_string(), 2, e.mortar.num_cells()));
    }
    DofManager::new(spec)
}

fn check_geometry(geom: &Geometry) -> Result<()> {
    if !geom.md.intersections.is_empty() {
        let fr = &geom.md.intersections[0].fractures;
        return Err(Error::Config(format!(
            "poroelastic contact problems require non-intersecting fractures, but fractures {} and {} intersect",
            fr[0],
            fr.get(1).copied().unwrap_or(fr[0])
        )));
    }
    Ok(())
}

struct Builder {
    t: Triplets,
}

impl Builder {
    fn block(&mut self, dofs: &DofManager, row: (Entity, &str), col: (Entity, &str), m: &SpMat) {
        let (r, c) = (dofs.range(row.0, row.1).unwrap(), dofs.range(col.0, col.1).unwrap());
        debug_assert_eq!((m.rows(), m.cols()), (r.len(), c.len()));
        self.t.push_block(r.start, c.start, m);
    }
}

impl PoromechProblem {
    pub fn new(geom: &Geometry, cfg: &PoromechConfig) -> Result<Self> {
        cfg.validate()?;
        check_geometry(geom)?;
        let dofs = poromech_dofs(geom)?;
        let n = dofs.num_dofs();
        let g = &geom.graph.nodes[0].grid;
        let (nc, nf) = (g.num_cells(), g.num_faces());
        let mut mech = cfg.mech.clone();
        mech.lambda = vec![cfg.mech.lambda.first().copied().unwrap_or(1.0); nc];
        mech.shear_modulus = vec![cfg.mech.shear_modulus.first().copied().unwrap_or(1.0); nc];
        mech.body_force = vec![cfg.mech.body_force.first().copied().unwrap_or([0.0; 2]); nc];
        mech.validate()?;

        // Mechanical boundary conditions and data.
        let mut vbc = VectorBc::all(g, BcKind::Dirichlet);
        let mut gdom = vec![0.0; 2 * nf];
        for f in g.boundary_faces() {
            if g.tags.domain_boundary[f] {
                let side = super::common::side_of(&cfg.domain, g.face_centers[f]);
                let bcs = cfg.mech_side(side);
                let mut kinds = [BcKind::Dirichlet; 2];
                for i in 0..2 {
                    match bcs[i] {
                        MechBc::Displacement(v) => gdom[2 * f + i] = v,
                        MechBc::Traction(v) => {
                            kinds[i] = BcKind::Neumann;
                            gdom[2 * f + i] = v;
                        }
                    }
                }
                vbc.set(f, kinds);
            }
        }
        let sd: StressDiscretization = mpsa(g, &mech, &vbc).context(|| "discretizing the matrix stress".into())?;
        let vdiv = vector_divergence(g);

        // Drained flow boundary: zero pressure on the domain boundary.
        let pbc = |_: Point| BoundaryValue::Pressure(0.0);
        let fops = flow_operators(geom, &cfg.flow, &pbc)?;
        let fdofs = flow_dofs(geom)?;
        let fsys = flow_contributions(geom, &fops, None)?.assemble(&fdofs)?;

        let alpha = mech.biot_alpha;
        let dt = cfg.dt;
        let mut step = Builder { t: Triplets::new(n, n) };
        let mut b = vec![0.0; n];
        let m0 = Entity::Node(0);
        let ru = dofs.range(m0, "u").unwrap();

        // Momentum.
        step.block(&dofs, (m0, "u"), (m0, "u"), &mul(&vdiv, &sd.stress));
        step.block(&dofs, (m0, "u"), (m0, "p"), &mul(&vdiv, &sd.grad_p));
        let bmom = matvec(&mul(&vdiv, &sd.bound_stress), &gdom);
        for (i, r) in ru.clone().enumerate() {
            let c = i / 2;
            b[r] = -bmom[i] - mech.body_force[c][i % 2] * g.cell_volumes[c];
        }
        // Matrix mass: the state part; the old state enters through old_map.
        let vol = diag(&g.cell_volumes);
        let acc_pp = crate::sparse::add(&crate::sparse::scale(&vol, mech.storage), &crate::sparse::scale(&sd.stabilization, alpha));
        step.block(&dofs, (m0, "p"), (m0, "u"), &crate::sparse::scale(&sd.div_u, alpha));
        step.block(&dofs, (m0, "p"), (m0, "p"), &acc_pp);
        let mut old = Builder { t: Triplets::new(n, n) };
        old.block(&dofs, (m0, "p"), (m0, "u"), &crate::sparse::scale(&sd.div_u, alpha));
        old.block(&dofs, (m0, "p"), (m0, "p"), &acc_pp);

        // Flow terms, scaled by dt in the mass balances.
        let fmat = crate::sparse::ensure_csr(&fsys.matrix);
        let mut sel = Triplets::new(fdofs.num_dofs(), n);
        for blk in fdofs.blocks() {
            let target = dofs.range(blk.entity, &blk.variable).unwrap();
            for (i, j) in blk.range().zip(target) {
                sel.push(i, j, 1.0);
            }
        }
        let sel = sel.into_csr();
        let row_scale: Vec<f64> = (0..fdofs.num_dofs()).map(|i| if fdofs.locate(i).unwrap().variable == "p" { dt } else { 1.0 }).collect();
        let flow_part = mul(&transpose(&sel), &mul(&scale_rows(&fmat, &row_scale), &sel));
        let flow_rhs = matvec(&transpose(&sel), &fsys.rhs.iter().zip(&row_scale).map(|(a, s)| a * s).collect::<Vec<_>>());
        for (i, v) in flow_rhs.iter().enumerate() {
            b[i] += v;
        }

        let mut frames = Vec::new();
        let mut fracture_volumes = Vec::new();
        for k in 0..geom.num_fractures() {
            let node = geom.fracture_node(k);
            let edge = geom.fracture_edge(k);
            let e = &geom.graph.edges[edge];
            let mg = &e.mortar;
            let fg = &geom.graph.nodes[node].grid;
            let (nm, ncl) = (mg.num_cells(), fg.num_cells());
            let kp = mg.cell_sign.iter().position(|s| *s > 0.0).ok_or_else(|| Error::Assembly(format!("fracture {k} has no plus side")))?;
            let e_n = [-mg.cell_normals[kp][0], -mg.cell_normals[kp][1]];
            let tau = [e_n[1], -e_n[0]];
            let (fe, fn_) = (Entity::Edge(edge), Entity::Node(node));

            // Mortar displacement as Dirichlet data on the matrix faces.
            let to_faces = kron_i2(&mg.mortar_to_primary_int);
            step.block(&dofs, (m0, "u"), (fe, "u_mortar"), &mul(&mul(&vdiv, &sd.bound_stress), &to_faces));
            let dvb = crate::sparse::scale(&mul(&sd.bound_div_u, &to_faces), alpha);
            step.block(&dofs, (m0, "p"), (fe, "u_mortar"), &dvb);
            old.block(&dofs, (m0, "p"), (fe, "u_mortar"), &dvb);

            // Stress balance: outward matrix traction against contact and
            // fluid pressure.
            let mut sign = vec![0.0; 2 * nf];
            for f in 0..nf {
                if g.tags.fracture[f] == Some(k) {
                    let (_, s) = g.boundary_cell(f);
                    sign[2 * f] = s;
                    sign[2 * f + 1] = s;
                }
            }
            let gather = mul(&kron_i2(&mg.primary_to_mortar_ext), &diag(&sign));
            step.block(&dofs, (fe, "u_mortar"), (m0, "u"), &mul(&gather, &sd.stress));
            step.block(&dofs, (fe, "u_mortar"), (m0, "p"), &mul(&gather, &sd.grad_p));
            step.block(&dofs, (fe, "u_mortar"), (fe, "u_mortar"), &mul(&mul(&gather, &sd.bound_stress), &to_faces));
            let bb = matvec(&mul(&gather, &sd.bound_stress), &gdom);
            for (i, r) in dofs.range(fe, "u_mortar").unwrap().enumerate() {
                b[r] -= bb[i];
            }
            let pm = crate::sparse::ensure_csr(&mg.secondary_to_mortar_int);
            let mut ct = Triplets::new(2 * nm, 2 * ncl);
            let mut cp = Triplets::new(2 * nm, ncl);
            for (km, row) in pm.outer_iterator().enumerate() {
                let w = mg.cell_measures[km] * mg.cell_sign[km];
                for (c, v) in row.iter() {
                    for i in 0..2 {
                        ct.push(2 * km + i, 2 * c, w * v * e_n[i]);
                        ct.push(2 * km + i, 2 * c + 1, -w * v * tau[i]);
                        cp.push(2 * km + i, c, -w * v * e_n[i]);
                    }
                }
            }
            step.block(&dofs, (fe, "u_mortar"), (fn_, "traction"), &ct.into_csr());
            step.block(&dofs, (fe, "u_mortar"), (fn_, "p"), &cp.into_csr());

            // Fracture storage; the volume change from the jump is added per iterate.
            let v: Vec<f64> = fg.cell_volumes.clone();
            let sf: Vec<f64> = v.iter().map(|x| mech.storage * mech.residual_aperture * x).collect();
            step.block(&dofs, (fn_, "p"), (fn_, "p"), &diag(&sf));
            old.block(&dofs, (fn_, "p"), (fn_, "p"), &diag(&sf));

            // Jump operators.
            let ms = crate::sparse::ensure_csr(&mg.mortar_to_secondary_int);
            let (mut jn, mut jt) = (Triplets::new(ncl, n), Triplets::new(ncl, n));
            let um = dofs.range(fe, "u_mortar").unwrap();
            for (c, row) in ms.outer_iterator().enumerate() {
                for (km, w) in row.iter() {
                    let s = mg.cell_sign[km];
                    for i in 0..2 {
                        jn.push(c, um.start + 2 * km + i, w * s * e_n[i]);
                        jt.push(c, um.start + 2 * km + i, w * s * tau[i]);
                    }
                }
            }
            frames.push(FractureFrame { node, e_n, tau, jn: jn.into_csr(), jt: jt.into_csr() });
            fracture_volumes.push(v);
        }

        let a_step = crate::sparse::add(&step.t.into_csr(), &flow_part);
        let old_map = old.t.into_csr();

        // Initial equilibrium: pressures and Darcy fluxes held at zero.
        let mut frozen = vec![false; n];
        for blk in dofs.blocks() {
            if blk.variable == "p" || blk.variable == "lambda" {
                for i in blk.range() {
                    frozen[i] = true;
                }
            }
        }
        let a_step_csr = crate::sparse::ensure_csr(&a_step);
        let mut ti = Triplets::new(n, n);
        for (i, row) in a_step_csr.outer_iterator().enumerate() {
            if frozen[i] {
                ti.push(i, i, 1.0);
            } else {
                for (j, v) in row.iter() {
                    ti.push(i, j, *v);
                }
            }
        }
        let b_init: Vec<f64> = b.iter().enumerate().map(|(i, v)| if frozen[i] { 0.0 } else { *v }).collect();
        Ok(PoromechProblem {
            dofs,
            mech,
            frames,
            a_step,
            a_init: ti.into_csr(),
            b_const: b,
            b_init,
            old_map,
            fracture_volumes,
            dt,
            init: true,
            x_old: vec![0.0; n],
            x_start: vec![0.0; n],
            sources: vec![0.0; n],
        })
    }

    pub fn contact_params(&self) -> ContactParams {
        ContactParams { friction: self.mech.friction, c_n: self.mech.c_n, c_t: self.mech.c_t }
    }

    /// Set the previous state and the injection rates of the coming step.
    pub fn begin_step(&mut self, x_old: &[f64], rates: &[f64]) {
        self.init = false;
        self.x_old = x_old.to_vec();
        self.sources = vec![0.0; x_old.len()];
        for (k, fr) in self.frames.iter().enumerate() {
            let v = &self.fracture_volumes[k];
            let total: f64 = v.iter().sum();
            for (i, r) in self.dofs.range(Entity::Node(fr.node), "p").unwrap().enumerate() {
                self.sources[r] = self.dt * rates[k] * v[i] / total;
            }
        }
    }

    /// Contact variables of every fracture cell.
    pub fn contact_points(&self, x: &[f64]) -> Vec<Vec<ContactPoint>> {
        self.frames
            .iter()
            .map(|fr| {
                let jn = matvec(&fr.jn, x);
                let jt = matvec(&fr.jt, x);
                let jt_old = matvec(&fr.jt, &self.x_old);
                let tr = &x[self.dofs.range(Entity::Node(fr.node), "traction").unwrap()];
                (0..jn.len()).map(|c| ContactPoint { sn: tr[2 * c], st: tr[2 * c + 1], jn: jn[c], djt: jt[c] - jt_old[c] }).collect()
            })
            .collect()
    }

    pub fn modes(&self, x: &[f64]) -> Vec<Vec<ContactMode>> {
        let p = self.contact_params();
        self.contact_points(x).iter().map(|v| v.iter().map(|c| crate::assembly::contact::classify(c, &p)).collect()).collect()
    }

    /// Contact tractions of the uniform background stress, as an initial
    /// guess.
    pub fn seed_tractions(&self, x: &mut [f64], stress: [f64; 3]) {
        let [sxx, syy, sxy] = stress;
        let apply = |n: Point| [sxx * n[0] + sxy * n[1], sxy * n[0] + syy * n[1]];
        for fr in &self.frames {
            let s = apply(fr.e_n);
            let sn = s[0] * fr.e_n[0] + s[1] * fr.e_n[1];
            let st = -(s[0] * fr.tau[0] + s[1] * fr.tau[1]);
            for c in self.dofs.range(Entity::Node(fr.node), "traction").unwrap().step_by(2) {
                x[c] = sn;
                x[c + 1] = st;
            }
        }
    }

    pub fn frame(&self, k: usize) -> (Point, Point) {
        (self.frames[k].e_n, self.frames[k].tau)
    }

    /// Normal and tangential jumps on the cells of fracture `k`.
    pub fn jumps(&self, k: usize, x: &[f64]) -> (Vec<f64>, Vec<f64>) {
        (matvec(&self.frames[k].jn, x), matvec(&self.frames[k].jt, x))
    }
}

impl NonlinearProblem for PoromechProblem {
    fn residual_jacobian(&mut self, x: &[f64]) -> Result<(Vec<f64>, SpMat)> {
        let n = x.len();
        let (a, b) = if self.init { (&self.a_init, &self.b_init) } else { (&self.a_step, &self.b_const) };
        let mut r: Vec<f64> = matvec(a, x).iter().zip(b).map(|(ax, bb)| ax - bb).collect();
        if !self.init {
            let o = matvec(&self.old_map, &self.x_old);
            for i in 0..n {
                r[i] -= o[i] + self.sources[i];
            }
        }
        let mut t = Triplets::new(n, n);
        let params = self.contact_params();
        let pts = self.contact_points(x);
        for (k, fr) in self.frames.iter().enumerate() {
            let jn_rows = crate::sparse::ensure_csr(&fr.jn);
            let jt_rows = crate::sparse::ensure_csr(&fr.jt);
            let tr = self.dofs.range(Entity::Node(fr.node), "traction").unwrap();
            let pr = self.dofs.range(Entity::Node(fr.node), "p").unwrap();
            let jn_old = matvec(&fr.jn, &self.x_old);
            for (c, pt) in pts[k].iter().enumerate() {
                let l = ncp(pt, &params);
                for q in 0..2 {
                    let row = tr.start + 2 * c + q;
                    r[row] = l.value[q];
                    let d = l.deriv[q];
                    t.push(row, tr.start + 2 * c, d[0]);
                    t.push(row, tr.start + 2 * c + 1, d[1]);
                    for (j, w) in jn_rows.outer_view(c).unwrap().iter() {
                        t.push(row, j, d[2] * w);
                    }
                    for (j, w) in jt_rows.outer_view(c).unwrap().iter() {
                        t.push(row, j, d[3] * w);
                    }
                }
                if !self.init {
                    // Volume change from the normal jump.
                    let v = self.fracture_volumes[k][c];
                    r[pr.start + c] += v * (pt.jn - jn_old[c]);
                    for (j, w) in jn_rows.outer_view(c).unwrap().iter() {
                        t.push(pr.start + c, j, v * w);
                    }
                }
            }
        }
        // Linear rows, skipping the contact rows replaced above.
        let a = crate::sparse::ensure_csr(a);
        let mut contact_row = vec![false; n];
        for fr in &self.frames {
            for i in self.dofs.range(Entity::Node(fr.node), "traction").unwrap() {
                contact_row[i] = true;
            }
        }
        for (i, row) in a.outer_iterator().enumerate() {
            if !contact_row[i] {
                for (j, v) in row.iter() {
                    t.push(i, j, *v);
                }
            }
        }
        Ok((r, t.into_csr()))
    }

    fn blocks(&self, _n: usize) -> Vec<(String, Range<usize>)> {
        self.dofs.blocks().iter().map(|b| (format!("{} on {:?}", b.variable, b.entity), b.range())).collect()
    }

    fn block_scales(&self, blocks: &[(String, Range<usize>)], x: &[f64], r: &[f64], jac: &SpMat) -> Vec<f64> {
        let s = term_scales(blocks, x, r, jac, 0.0);
        let floor = 1e-8 * s.iter().fold(0.0_f64, |m, v| m.max(*v)).max(1e-300);
        s.into_iter().map(|v| v.max(floor)).collect()
    }

    fn classification(&self, x: &[f64]) -> Option<Vec<u8>> {
        Some(self.modes(x).iter().flatten().map(|m| m.code()).collect())
    }
}

/// Per-step fracture diagnostics.
#[derive(Debug, Clone)]
pub struct PoromechStep {
    pub time: f64,
    /// L2 norms of the normal and tangential jumps per fracture, divided by
    /// the fracture length.
    pub normal_jump: Vec<f64>,
    pub tangential_jump: Vec<f64>,
    pub modes: Vec<Vec<ContactMode>>,
    /// Contact tractions, jumps and slip increments per fracture cell.
    pub contact: Vec<Vec<ContactPoint>>,
    /// Frictional work `sum st * djt * length` over slipping cells per fracture.
    pub dissipation: Vec<f64>,
    /// Mean fracture pressure per fracture.
    pub fracture_pressure: Vec<f64>,
    pub newton_iterations: usize,
}

impl PoromechStep {
    pub fn count(&self, k: usize, mode: ContactMode) -> usize {
        self.modes[k].iter().filter(|m| **m == mode).count()
    }
}

#[derive(Debug, Clone)]
pub struct PoromechResult {
    pub geom: Geometry,
    pub dofs: DofManager,
    /// Initial equilibrium, then one entry per time step.
    pub steps: Vec<PoromechStep>,
    pub initial_state: Vec<f64>,
    pub final_state: Vec<f64>,
    pub newton: Vec<NewtonReport>,
    pub injection_end: f64,
}

impl PoromechResult {
    pub fn field<'b>(&self, x: &'b [f64], e: Entity, v: &str) -> &'b [f64] {
        &x[self.dofs.range(e, v).unwrap()]
    }
}

fn normalized_l2(v: &[f64], w: &[f64]) -> f64 {
    v.iter().zip(w).map(|(a, b)| a * a * b).sum::<f64>().sqrt() / w.iter().sum::<f64>()
}

fn diagnostics(prob: &PoromechProblem, x: &[f64], time: f64, iterations: usize) -> PoromechStep {
    let contact = prob.contact_points(x);
    let modes = prob.modes(x);
    let dissipation = (0..contact.len())
        .map(|k| {
            contact[k]
                .iter()
                .zip(&modes[k])
                .zip(&prob.fracture_volumes[k])
                .filter(|((_, m), _)| **m == ContactMode::Slip)
                .map(|((c, _), v)| c.st * c.djt * v)
                .sum()
        })
        .collect();
    let mut step = PoromechStep {
        time,
        normal_jump: vec![],
        tangential_jump: vec![],
        modes,
        contact,
        dissipation,
        fracture_pressure: vec![],
        newton_iterations: iterations,
    };
    for k in 0..prob.frames.len() {
        let (jn, jt) = prob.jumps(k, x);
        let jt0 = matvec(&prob.frames[k].jt, &prob.x_start);
        let jt: Vec<f64> = jt.iter().zip(&jt0).map(|(a, b)| a - b).collect();
        let w = &prob.fracture_volumes[k];
        step.normal_jump.push(normalized_l2(&jn, w));
        step.tangential_jump.push(normalized_l2(&jt, w));
        let p = &x[prob.dofs.range(Entity::Node(prob.frames[k].node), "p").unwrap()];
        step.fracture_pressure.push(p.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / w.iter().sum::<f64>());
    }
    step
}

pub fn run_biot_contact(cfg: &PoromechConfig) -> Result<PoromechResult> {
    cfg.validate()?;
    let net = FractureNetwork2::new(cfg.fractures.clone(), cfg.domain, None)?;
    let sizes = MeshSizeParams::uniform(cfg.mesh_size);
    let geom = build_geometry(&net, &MeshSource::Generate(MeshOptions::new(sizes).seed(cfg.seed)), 1)?;
    run_biot_contact_on(geom, cfg)
}

pub fn run_biot_contact_on(geom: Geometry, cfg: &PoromechConfig) -> Result<PoromechResult> {
    check_geometry(&geom)?;
    let (steps, x0, x, reports, dofs) = {
        let mut prob = PoromechProblem::new(&geom, cfg)?;
        let mut x = vec![0.0; prob.dofs.num_dofs()];
        prob.seed_tractions(&mut x, cfg.background_stress);
        let init_report = newton_solve(&mut prob, &mut x, &cfg.newton).context(|| "initial equilibrium".into())?;
        prob.x_start = x.clone();
        prob.x_old = x.clone();
        let x0 = x.clone();
        let mut steps = vec![diagnostics(&prob, &x, 0.0, init_report.iterations)];
        let mut reports = vec![init_report];
        let nsteps = (cfg.end_time / cfg.dt - 1e-9).ceil() as usize;
        for s in 1..=nsteps {
            let t0 = (s - 1) as f64 * cfg.dt;
            let time = (s as f64 * cfg.dt).min(cfg.end_time);
            let old = x.clone();
            prob.begin_step(&old, &cfg.rates_at(t0));
            let rep = newton_solve(&mut prob, &mut x, &cfg.newton).context(|| format!("poromechanics step {s} (t = {time:.4e})"))?;
            steps.push(diagnostics(&prob, &x, time, rep.iterations));
            reports.push(rep);
        }
        (steps, x0, x, reports, prob.dofs.clone())
    };
    let injection_end = cfg.schedule.iter().filter(|e| e.rates.iter().all(|r| *r == 0.0)).map(|e| e.start).fold(f64::INFINITY, f64::min);
    Ok(PoromechResult { geom, dofs, steps, initial_state: x0, final_state: x, newton: reports, injection_end })
}

/// Per-fracture quantities behind the injection and shut-in checks.
#[derive(Debug, Clone)]
pub struct SlipSummary {
    /// Fractures that are stuck at some injection step and slip later
    /// during injection.
    pub stick_to_slip: Vec<bool>,
    pub peak_normal: Vec<f64>,
    pub peak_tangential: Vec<f64>,
    pub final_normal: Vec<f64>,
    pub final_tangential: Vec<f64>,
}

impl SlipSummary {
    pub fn new(r: &PoromechResult) -> SlipSummary {
        let nf = r.steps.first().map_or(0, |s| s.modes.len());
        let injection: Vec<&PoromechStep> = r.steps.iter().filter(|s| s.time <= r.injection_end + 1e-12).collect();
        let last = r.steps.last();
        let mut out = SlipSummary {
            stick_to_slip: vec![],
            peak_normal: vec![],
            peak_tangential: vec![],
            final_normal: vec![],
            final_tangential: vec![],
        };
        for k in 0..nf {
            let stuck = injection.iter().position(|s| s.count(k, ContactMode::Stick) > 0);
            out.stick_to_slip.push(stuck.is_some_and(|i| injection[i..].iter().any(|s| s.count(k, ContactMode::Slip) > 0)));
            out.peak_normal.push(injection.iter().map(|s| s.normal_jump[k]).fold(0.0, f64::max));
            out.peak_tangential.push(injection.iter().map(|s| s.tangential_jump[k]).fold(0.0, f64::max));
            out.final_normal.push(last.map_or(0.0, |s| s.normal_jump[k]));
            out.final_tangential.push(last.map_or(0.0, |s| s.tangential_jump[k]));
        }
        out
    }

    /// Fractures whose peak exceeds roundoff relative to the largest peak.
    fn significant(peaks: &[f64]) -> Vec<usize> {
        let top = peaks.iter().copied().fold(0.0, f64::max);
        (0..peaks.len()).filter(|&k| top > 0.0 && peaks[k] > 1e-8 * top).collect()
    }

    /// Largest ratio of final to peak normal jump over fractures that opened;
    /// zero when none did.
    pub fn normal_ratio(&self) -> f64 {
        Self::significant(&self.peak_normal).into_iter().map(|k| self.final_normal[k] / self.peak_normal[k]).fold(0.0, f64::max)
    }

    /// Smallest ratio of final to peak tangential jump over fractures that
    /// slipped; infinite when none did.
    pub fn tangential_ratio(&self) -> f64 {
        Self::significant(&self.peak_tangential)
            .into_iter()
            .map(|k| self.final_tangential[k] / self.peak_tangential[k])
            .fold(f64::INFINITY, f64::min)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::contact::conditions_hold;
    use crate::assembly::newton::jacobian_fd_error;

    fn small() -> PoromechConfig {
        let mut cfg = PoromechConfig::default();
        cfg.fractures = vec![[[0.3, 0.3], [0.7, 0.7]]];
        cfg.flow.fractures.truncate(1);
        cfg.mesh_size = 0.1;
        cfg.schedule = vec![ScheduleEntry { start: 0.0, rates: vec![0.05] }, ScheduleEntry { start: 1.0, rates: vec![0.0] }];
        cfg.end_time = 2.0;
        cfg.dt = 0.2;
        cfg
    }

    #[test]
    fn isotropic_compression_without_injection_sticks() {
        let mut cfg = PoromechConfig::default();
        cfg.background_stress = [-1.0, -1.0, 0.0];
        for e in &mut cfg.schedule {
            e.rates.iter_mut().for_each(|r| *r = 0.0);
        }
        cfg.end_time = 0.5;
        let r = run_biot_contact(&cfg).unwrap();
        for s in &r.steps {
            for k in 0..3 {
                assert_eq!(s.count(k, ContactMode::Stick), s.modes[k].len());
                assert!(s.normal_jump[k] <= 1e-10 && s.tangential_jump[k] <= 1e-10, "{s:?}");
            }
        }
    }

    #[test]
    fn intersecting_fractures_are_rejected() {
        let mut cfg = small();
        cfg.fractures.push([[0.3, 0.7], [0.7, 0.3]]);
        cfg.flow.fractures.push(cfg.flow.fractures[0]);
        for e in &mut cfg.schedule {
            e.rates.push(0.0);
        }
        let e = run_biot_contact(&cfg).unwrap_err();
        assert!(matches!(e.root(), Error::Config(_)), "{e}");
        assert!(e.to_string().contains("intersect"), "{e}");
    }

    #[test]
    fn invalid_schedules_are_rejected() {
        let mut cfg = small();
        cfg.schedule[1].start = 0.0;
        assert!(cfg.validate().is_err());
        let mut cfg = small();
        cfg.schedule[0].rates.push(1.0);
        assert!(cfg.validate().is_err());
        let mut cfg = small();
        cfg.mech.friction = -0.1;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn rates_follow_the_schedule() {
        let cfg = small();
        assert_eq!(cfg.rates_at(0.0), vec![0.05]);
        assert_eq!(cfg.rates_at(0.99), vec![0.05]);
        assert_eq!(cfg.rates_at(1.0), vec![0.0]);
    }

    #[test]
    fn jacobian_matches_differences() {
        let cfg = small();
        let net = FractureNetwork2::new(cfg.fractures.clone(), cfg.domain, None).unwrap();
        let opts = MeshOptions::new(MeshSizeParams::uniform(cfg.mesh_size));
        let geom = build_geometry(&net, &MeshSource::Generate(opts), 1).unwrap();
        let mut prob = PoromechProblem::new(&geom, &cfg).unwrap();
        let n = prob.dofs.num_dofs();
        let wave = |i: usize, a: f64| ((i as f64) * a).sin();
        let old: Vec<f64> = (0..n).map(|i| 1e-2 * wave(i, 0.7)).collect();
        prob.begin_step(&old, &[0.05]);
        let mut x: Vec<f64> = (0..n).map(|i| 1e-2 * wave(i, 1.3)).collect();
        // Spread tractions so that every mode occurs.
        let tr = prob.dofs.range(Entity::Node(geom.fracture_node(0)), "traction").unwrap();
        for (j, i) in tr.enumerate() {
            x[i] = if j % 2 == 0 { -0.5 + 0.3 * wave(j, 2.1) } else { 0.4 * wave(j, 0.9) };
        }
        let (_, jac) = prob.residual_jacobian(&x).unwrap();
        let modes: Vec<ContactMode> = prob.modes(&x).concat();
        assert!(modes.contains(&ContactMode::Slip) && modes.contains(&ContactMode::Stick), "{modes:?}");
        let err = jacobian_fd_error(&mut prob, &x, &jac, 1e-7, 4).unwrap();
        assert!(err < 1e-6, "{err}");
    }

    #[test]
    fn injection_slips_and_converged_states_satisfy_contact() {
        let r = run_biot_contact(&small()).unwrap();
        let f = small().mech.friction;
        for s in &r.steps {
            for (k, pts) in s.contact.iter().enumerate() {
                for c in pts {
                    assert!(conditions_hold(c, f, 1e-7), "t = {}: {c:?}", s.time);
                }
                assert!(s.dissipation[k] <= 1e-12, "friction must dissipate: {}", s.dissipation[k]);
            }
        }
        let sum = SlipSummary::new(&r);
        assert!(sum.stick_to_slip[0]);
        assert!(sum.peak_tangential[0] > 0.0);
        assert!(sum.tangential_ratio() > 0.5);
    }
}
