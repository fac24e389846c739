//! Coupled flow and solute transport with concentration-dependent viscosity,
//! solved fully implicitly by Newton's method on the mixed-dimensional graph.
//!
//! Unknowns per subdomain are pressure `p` and concentration `c`; per
//! interface the Darcy flux `lambda`, the advective flux `eta` and the
//! diffusive flux `beta`, all extensive and positive out of the higher
//! neighbour.

use super::common::{build_geometry, BoundaryValue, Geometry, MeshSource, Side, SideValues};
use super::flow::{discretize_scalar, flow_operators, FlowOperators, FlowParams};
use crate::assembly::ad::Ad;
use crate::assembly::dofs::{DofManager, Entity};
use crate::assembly::laws::{
    cell_from_boundary_face, diffusive_coupling, face_average, mortar_to_neumann, mortar_upstream, CouplingBlocks,
};
use crate::assembly::newton::{newton_solve, term_scales, NewtonConfig, NewtonReport, NonlinearProblem};
use crate::discretize::params::isotropic;
use crate::discretize::upwind::upstream_selector;
use crate::discretize::{BcKind, BoundaryCondition, FluxDiscretization};
use crate::error::{Error, Result, ResultExt};
use crate::geom::network::{FractureNetwork2, Point};
use crate::mesh::mesher::MeshOptions;
use crate::mesh::MeshSizeParams;
use crate::sparse::{matvec, mul, SpMat, Triplets};
use std::ops::Range;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViscosityLaw {
    /// `mu = 1`.
    Unit,
    /// `mu = exp(c)`.
    Exponential,
}

impl FromStr for ViscosityLaw {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "unit" => Ok(ViscosityLaw::Unit),
            "exp" => Ok(ViscosityLaw::Exponential),
            _ => Err(Error::Config(format!("unknown viscosity law '{s}' (expected unit or exp)"))),
        }
    }
}

impl ViscosityLaw {
    fn apply(self, c: &Ad) -> Ad {
        match self {
            ViscosityLaw::Unit => Ad::constant(vec![1.0; c.len()], c.num_dofs()),
            ViscosityLaw::Exponential => c.exp(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct TransportParams {
    pub porosity: f64,
    pub fracture_porosity: f64,
    /// Molecular diffusivity; scaled by aperture in the fractures.
    pub diffusivity: f64,
    /// Normal diffusivity of every interface.
    pub interface_diffusivity: f64,
    pub viscosity: ViscosityLaw,
    pub dt: f64,
    pub end_time: f64,
    pub newton: NewtonConfig,
}

impl Default for TransportParams {
    fn default() -> Self {
        TransportParams {
            porosity: 0.2,
            fracture_porosity: 1.0,
            diffusivity: 0.0,
            interface_diffusivity: 0.0,
            viscosity: ViscosityLaw::Exponential,
            dt: 0.01,
            end_time: 0.1,
            newton: NewtonConfig { tol: 1e-10, ..Default::default() },
        }
    }
}

impl TransportParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.porosity > 0.0 && self.porosity <= 1.0 && self.fracture_porosity > 0.0 && self.fracture_porosity <= 1.0) {
            return Err(Error::Config("porosities must lie in (0, 1]".into()));
        }
        if !(self.diffusivity >= 0.0 && self.interface_diffusivity >= 0.0) {
            return Err(Error::Config("diffusivities must be non-negative".into()));
        }
        if !(self.dt > 0.0) {
            return Err(Error::Config(format!("time step must be positive, got {}", self.dt)));
        }
        if !(self.end_time >= self.dt) {
            return Err(Error::Config(format!("end time {} is shorter than one time step", self.end_time)));
        }
        Ok(())
    }

    pub fn num_steps(&self) -> usize {
        (self.end_time / self.dt - 1e-9).ceil() as usize
    }
}

struct NodeOps {
    div: SpMat,
    face_avg: SpMat,
    /// Face classification and values of the flow boundary data.
    dirichlet_data: Vec<f64>,
    neumann_data: Vec<f64>,
    /// Domain-boundary faces take the boundary concentration on inflow.
    transport_bc: BoundaryCondition,
    conc_data: Vec<f64>,
    /// Diffusive cell-to-cell operator `div * flux`.
    diffusion: Option<SpMat>,
    diffusion_discr: Option<FluxDiscretization>,
    /// Accumulation weight `phi * specific volume * cell volume`.
    storage: Vec<f64>,
}

struct EdgeOps {
    neumann: SpMat,
    adv_high: SpMat,
    pi_high_adj: SpMat,
    pi_low: SpMat,
    to_low: SpMat,
    diffusive: CouplingBlocks,
}

/// Residual assembly for one implicit Euler step.
pub struct TransportProblem<'a> {
    geom: &'a Geometry,
    flow: FlowOperators,
    params: TransportParams,
    pub dofs: DofManager,
    nodes: Vec<NodeOps>,
    edges: Vec<EdgeOps>,
    c_old: Vec<Vec<f64>>,
}

pub fn transport_dofs(geom: &Geometry) -> Result<DofManager> {
    let mut spec = Vec::new();
    for n in &geom.graph.nodes {
        for v in ["p", "c"] {
            spec.push((Entity::Node(n.id), v.to_string(), 1, n.grid.num_cells()));
        }
    }
    for e in &geom.graph.edges {
        for v in ["lambda", "eta", "beta"] {
            spec.push((Entity::Edge(e.id), v.to_string(), 1, e.mortar.num_cells()));
        }
    }
    DofManager::new(spec)
}

fn specific_volume(geom: &Geometry, flow: &FlowOperators, n: usize) -> f64 {
    let a = flow.aperture[n];
    a.powi(2 - geom.graph.nodes[n].dim as i32)
}

impl<'a> TransportProblem<'a> {
    pub fn new(
        geom: &'a Geometry,
        flow_params: &FlowParams,
        params: &TransportParams,
        pressure_bc: &dyn Fn(Point) -> BoundaryValue,
        conc_bc: &dyn Fn(Point) -> f64,
    ) -> Result<Self> {
        params.validate()?;
        let flow = flow_operators(geom, flow_params, pressure_bc)?;
        let dofs = transport_dofs(geom)?;
        let mut nodes = Vec::new();
        for n in &geom.graph.nodes {
            let g = &n.grid;
            let nf = g.num_faces();
            let bc = &flow.bc[n.id];
            let mut dirichlet_data = vec![0.0; nf];
            let mut neumann_data = vec![0.0; nf];
            let mut transport_bc = BoundaryCondition::all(g, BcKind::Neumann);
            let mut conc_data = vec![0.0; nf];
            for f in g.boundary_faces() {
                if bc.is_dirichlet(f) {
                    dirichlet_data[f] = flow.bc_values[n.id][f];
                } else {
                    neumann_data[f] = flow.bc_values[n.id][f];
                }
                if g.tags.domain_boundary[f] {
                    transport_bc.set(f, BcKind::Dirichlet);
                    conc_data[f] = conc_bc(g.face_centers[f]);
                }
            }
            let a = flow.aperture[n.id];
            let (diffusion, diffusion_discr) = if params.diffusivity > 0.0 && n.dim > 0 {
                let d = params.diffusivity * if n.dim == 1 { a } else { 1.0 };
                let dbc = BoundaryCondition::all(g, BcKind::Neumann);
                let discr = discretize_scalar(g, &vec![isotropic(d); g.num_cells()], &dbc, flow_params.scheme)?.unwrap();
                (Some(mul(&g.divergence(), &discr.flux)), Some(discr))
            } else {
                (None, None)
            };
            let phi = if n.dim == 2 { params.porosity } else { params.fracture_porosity };
            let sv = specific_volume(geom, &flow, n.id);
            let storage = g.cell_volumes.iter().map(|v| phi * sv * v).collect();
            nodes.push(NodeOps {
                div: g.divergence(),
                face_avg: face_average(g),
                dirichlet_data,
                neumann_data,
                transport_bc,
                conc_data,
                diffusion,
                diffusion_discr,
                storage,
            });
        }
        let mut edges = Vec::new();
        for e in &geom.graph.edges {
            let mg = &e.mortar;
            let gh = &geom.graph.nodes[e.high].grid;
            let delta = vec![params.interface_diffusivity; mg.num_cells()];
            edges.push(EdgeOps {
                neumann: mortar_to_neumann(mg, &gh.face_areas),
                adv_high: mul(&cell_from_boundary_face(gh), &mg.mortar_to_primary_ext),
                pi_high_adj: mul(&mg.primary_to_mortar_int, &nodes[e.high].face_avg),
                pi_low: mg.secondary_to_mortar_int.clone(),
                to_low: mg.mortar_to_secondary_ext.clone(),
                diffusive: diffusive_coupling(mg, nodes[e.high].diffusion_discr.as_ref(), gh, &delta),
            });
        }
        let c_old = geom.graph.nodes.iter().map(|n| vec![0.0; n.grid.num_cells()]).collect();
        Ok(TransportProblem { geom, flow, params: params.clone(), dofs, nodes, edges, c_old })
    }

    fn var(&self, x: &[f64], e: Entity, v: &str) -> Ad {
        Ad::variable(x, self.dofs.range(e, v).unwrap())
    }

    /// Darcy face fluxes and the scaled boundary data of every node with
    /// faces.
    fn darcy(&self, x: &[f64]) -> Vec<Option<(Ad, Ad)>> {
        let nd = x.len();
        let law = self.params.viscosity;
        self.geom
            .graph
            .nodes
            .iter()
            .map(|n| {
                let d = self.flow.discr[n.id].as_ref()?;
                let ops = &self.nodes[n.id];
                let p = self.var(x, Entity::Node(n.id), "p");
                let c = self.var(x, Entity::Node(n.id), "c");
                let mu_f = law.apply(&c.lmul(&ops.face_avg));
                let mut neu = Ad::constant(ops.neumann_data.clone(), nd);
                for e in self.geom.graph.edges.iter().filter(|e| e.high == n.id) {
                    neu = neu.add(&self.var(x, Entity::Edge(e.id), "lambda").lmul(&self.edges[e.id].neumann));
                }
                // Neumann data are fluxes; the discretization expects them
                // without the viscosity.
                let data = neu.mul(&mu_f).add_const(&ops.dirichlet_data);
                let q = p.lmul(&d.flux).add(&data.lmul(&d.bound_flux)).div(&mu_f);
                Some((q, data))
            })
            .collect()
    }

    /// Advective face fluxes from Darcy fluxes `q` and cell concentrations.
    fn advective(&self, n: usize, q: &Ad, c: &Ad) -> Ad {
        let ops = &self.nodes[n];
        let (sc, sb) = upstream_selector(&self.geom.graph.nodes[n].grid, &q.val, &ops.transport_bc);
        q.mul(&c.lmul(&sc).add_const(&matvec(&sb, &ops.conc_data)))
    }

    /// Residual blocks keyed by dof range.
    pub fn residual_blocks(&self, x: &[f64]) -> Vec<(Range<usize>, Ad)> {
        let nd = x.len();
        let law = self.params.viscosity;
        let darcy = self.darcy(x);
        let mut out = Vec::new();
        for n in &self.geom.graph.nodes {
            let ops = &self.nodes[n.id];
            let nc = n.grid.num_cells();
            let c = self.var(x, Entity::Node(n.id), "c");
            let mut mass = Ad::constant(vec![0.0; nc], nd);
            let acc: Vec<f64> = ops.storage.iter().map(|s| s / self.params.dt).collect();
            let mut trans = c.add_const(&self.c_old[n.id].iter().map(|v| -v).collect::<Vec<_>>()).mul_const(&acc);
            if let Some((q, _)) = &darcy[n.id] {
                mass = q.lmul(&ops.div);
                trans = trans.add(&self.advective(n.id, q, &c).lmul(&ops.div));
            }
            if let Some(dm) = &ops.diffusion {
                trans = trans.add(&c.lmul(dm));
            }
            for e in &self.geom.graph.edges {
                let eo = &self.edges[e.id];
                let eta = self.var(x, Entity::Edge(e.id), "eta");
                let beta = self.var(x, Entity::Edge(e.id), "beta");
                if e.high == n.id {
                    trans = trans.add(&eta.lmul(&eo.adv_high)).add(&beta.lmul(&eo.diffusive.high_mortar));
                } else if e.low == n.id {
                    mass = mass.sub(&self.var(x, Entity::Edge(e.id), "lambda").lmul(&eo.to_low));
                    trans = trans.sub(&eta.lmul(&eo.to_low)).add(&beta.lmul(&eo.diffusive.low_mortar));
                }
            }
            out.push((self.dofs.range(Entity::Node(n.id), "p").unwrap(), mass));
            out.push((self.dofs.range(Entity::Node(n.id), "c").unwrap(), trans));
        }
        for e in &self.geom.graph.edges {
            let eo = &self.edges[e.id];
            let mg = &e.mortar;
            let (h, l) = (Entity::Node(e.high), Entity::Node(e.low));
            let lambda = self.var(x, Entity::Edge(e.id), "lambda");
            let (ch, cl) = (self.var(x, h, "c").lmul(&eo.pi_high_adj), self.var(x, l, "c").lmul(&eo.pi_low));
            let mu_j = law.apply(&ch.add(&cl).scale(0.5));
            let inv_kappa: Vec<f64> = self.flow.kappa[e.id].iter().map(|k| 1.0 / k).collect();
            let d = self.flow.discr[e.high].as_ref().expect("higher neighbour has faces");
            let data = &darcy[e.high].as_ref().unwrap().1;
            let trace = self.var(x, h, "p").lmul(&d.trace_cell).add(&data.lmul(&d.trace_bound));
            let m = &mg.cell_measures;
            let jump = self.var(x, l, "p").lmul(&eo.pi_low).sub(&trace.lmul(&mg.primary_to_mortar_int));
            let darcy_row = mu_j.mul_const(&inv_kappa).mul(&lambda).add(&jump.mul_const(m));
            let (wh, wl) = mortar_upstream(&lambda.val);
            let upstream = ch.mul_const(&wh).add(&cl.mul_const(&wl));
            let eta_row = self.var(x, Entity::Edge(e.id), "eta").sub(&lambda.mul(&upstream));
            let beta_row = self
                .var(x, Entity::Edge(e.id), "beta")
                .lmul(&eo.diffusive.mortar_mortar)
                .add(&self.var(x, h, "c").lmul(&eo.diffusive.mortar_high))
                .add(&self.var(x, l, "c").lmul(&eo.diffusive.mortar_low));
            out.push((self.dofs.range(Entity::Edge(e.id), "lambda").unwrap(), darcy_row));
            out.push((self.dofs.range(Entity::Edge(e.id), "eta").unwrap(), eta_row));
            out.push((self.dofs.range(Entity::Edge(e.id), "beta").unwrap(), beta_row));
        }
        out
    }

    /// Advective mass leaving through the domain boundary per unit time.
    pub fn boundary_outflow(&self, x: &[f64]) -> f64 {
        let darcy = self.darcy(x);
        let mut total = 0.0;
        for n in &self.geom.graph.nodes {
            let Some((q, _)) = &darcy[n.id] else { continue };
            let c = self.var(x, Entity::Node(n.id), "c");
            let adv = self.advective(n.id, q, &c);
            for f in n.grid.boundary_faces() {
                if n.grid.tags.domain_boundary[f] {
                    total += n.grid.boundary_cell(f).1 * adv.val[f];
                }
            }
        }
        total
    }

    /// Total solute mass `sum phi V c` in all subdomains.
    pub fn mass(&self, x: &[f64]) -> f64 {
        self.geom
            .graph
            .nodes
            .iter()
            .map(|n| {
                let c = &x[self.dofs.range(Entity::Node(n.id), "c").unwrap()];
                c.iter().zip(&self.nodes[n.id].storage).map(|(a, b)| a * b).sum::<f64>()
            })
            .sum()
    }

    pub fn set_previous(&mut self, x: &[f64]) {
        for n in &self.geom.graph.nodes {
            self.c_old[n.id] = x[self.dofs.range(Entity::Node(n.id), "c").unwrap()].to_vec();
        }
    }
}

impl NonlinearProblem for TransportProblem<'_> {
    fn residual_jacobian(&mut self, x: &[f64]) -> Result<(Vec<f64>, SpMat)> {
        let n = x.len();
        let mut r = vec![0.0; n];
        let mut t = Triplets::new(n, n);
        for (rg, ad) in self.residual_blocks(x) {
            r[rg.clone()].copy_from_slice(&ad.val);
            t.push_block(rg.start, 0, &ad.jac);
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
}

/// Solution of one time step, per node and per edge.
#[derive(Debug, Clone)]
pub struct TransportStep {
    pub time: f64,
    pub pressure: Vec<Vec<f64>>,
    pub concentration: Vec<Vec<f64>>,
    pub lambda: Vec<Vec<f64>>,
    pub eta: Vec<Vec<f64>>,
    pub beta: Vec<Vec<f64>>,
    pub newton_iterations: usize,
    /// Solute mass in the domain at the end of the step.
    pub mass: f64,
    /// Advective boundary outflow rate at the end of the step.
    pub boundary_outflow: f64,
}

#[derive(Debug, Clone)]
pub struct TransportResult {
    pub steps: Vec<TransportStep>,
    pub initial_mass: f64,
    pub newton: Vec<NewtonReport>,
}

impl TransportResult {
    /// Volume-weighted mean fracture concentration at every step.
    pub fn fracture_average_history(&self, geom: &Geometry) -> Vec<(f64, f64)> {
        self.steps.iter().map(|s| (s.time, fracture_average(geom, &s.concentration))).collect()
    }
}

pub fn fracture_average(geom: &Geometry, c: &[Vec<f64>]) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for n in geom.graph.nodes_of_dim(1) {
        for (v, x) in n.grid.cell_volumes.iter().zip(&c[n.id]) {
            num += v * x;
            den += v;
        }
    }
    if den > 0.0 {
        num / den
    } else {
        f64::NAN
    }
}

/// Implicit Euler time stepping from the uniform concentration `c_init`.
pub fn run_flow_transport(
    geom: &Geometry,
    flow: &FlowParams,
    params: &TransportParams,
    pressure_bc: &dyn Fn(Point) -> BoundaryValue,
    conc_bc: &dyn Fn(Point) -> f64,
    c_init: f64,
) -> Result<TransportResult> {
    let mut prob = TransportProblem::new(geom, flow, params, pressure_bc, conc_bc)?;
    let mut x = vec![0.0; prob.dofs.num_dofs()];
    for n in &geom.graph.nodes {
        for i in prob.dofs.range(Entity::Node(n.id), "c").unwrap() {
            x[i] = c_init;
        }
    }
    prob.set_previous(&x);
    let initial_mass = prob.mass(&x);
    let mut steps = Vec::new();
    let mut reports = Vec::new();
    for k in 1..=params.num_steps() {
        let time = (k as f64 * params.dt).min(params.end_time);
        let report = newton_solve(&mut prob, &mut x, &params.newton).context(|| format!("transport step {k} (t = {time:.4e})"))?;
        let get = |e: Entity, v: &str| x[prob.dofs.range(e, v).unwrap()].to_vec();
        let per_node = |v: &str| geom.graph.nodes.iter().map(|n| get(Entity::Node(n.id), v)).collect::<Vec<_>>();
        let per_edge = |v: &str| geom.graph.edges.iter().map(|e| get(Entity::Edge(e.id), v)).collect::<Vec<_>>();
        steps.push(TransportStep {
            time,
            pressure: per_node("p"),
            concentration: per_node("c"),
            lambda: per_edge("lambda"),
            eta: per_edge("eta"),
            beta: per_edge("beta"),
            newton_iterations: report.iterations,
            mass: prob.mass(&x),
            boundary_outflow: prob.boundary_outflow(&x),
        });
        reports.push(report);
        prob.set_previous(&x);
    }
    Ok(TransportResult { steps, initial_mass, newton: reports })
}

/// Setup for comparing matching and refined fracture grids.
#[derive(Debug, Clone)]
pub struct NonMatchingConfig {
    pub fractures: Vec<[Point; 2]>,
    pub mesh_size: f64,
    pub seed: u64,
    pub flow: FlowParams,
    pub transport: TransportParams,
    /// Left/right pressures; top and bottom are closed.
    pub pressure: (f64, f64),
    pub inlet_concentration: f64,
    /// Fracture cells per matrix face on the refined run.
    pub refine: usize,
}

impl Default for NonMatchingConfig {
    fn default() -> Self {
        use super::flow::{FractureProps, Scheme};
        let fractures = vec![[[0.1, 0.25], [0.9, 0.75]], [[0.2, 0.8], [0.8, 0.2]], [[0.55, 0.05], [0.7, 0.35]]];
        let props = FractureProps { k_t: 1e3, k_n: 1e3, aperture: 1e-2 };
        NonMatchingConfig {
            flow: FlowParams { matrix_perm: 1.0, fractures: vec![props; fractures.len()], scheme: Scheme::Tpfa },
            fractures,
            mesh_size: 0.08,
            seed: 0,
            transport: TransportParams { end_time: 0.3, dt: 0.01, diffusivity: 1e-3, interface_diffusivity: 1e-3, ..Default::default() },
            pressure: (1.0, 0.0),
            inlet_concentration: 1.0,
            refine: 2,
        }
    }
}

pub struct NonMatchingResult {
    pub matching: Vec<(f64, f64)>,
    pub refined: Vec<(f64, f64)>,
    /// Relative L2 difference of the two histories over time.
    pub difference: f64,
    pub matching_fracture_cells: usize,
    pub refined_fracture_cells: usize,
}

pub fn run_nonmatching_comparison(cfg: &NonMatchingConfig) -> Result<NonMatchingResult> {
    if cfg.refine < 2 {
        return Err(Error::Config(format!("refinement ratio must be at least 2, got {}", cfg.refine)));
    }
    let net = FractureNetwork2::new(cfg.fractures.clone(), crate::geom::network::Rect::unit(), None)?;
    let sides = SideValues {
        left: BoundaryValue::Pressure(cfg.pressure.0),
        right: BoundaryValue::Pressure(cfg.pressure.1),
        ..SideValues::no_flow()
    };
    let dom = net.domain;
    let pbc = move |x: Point| sides.get(super::common::side_of(&dom, x));
    let cin = cfg.inlet_concentration;
    let cbc = move |x: Point| if super::common::side_of(&dom, x) == Side::Left { cin } else { 0.0 };
    let mesh = MeshSource::Generate(MeshOptions::new(MeshSizeParams::uniform(cfg.mesh_size)).seed(cfg.seed));
    let mut hist = Vec::new();
    let mut cells = Vec::new();
    for refine in [1, cfg.refine] {
        let geom = build_geometry(&net, &mesh, refine)?;
        let r = run_flow_transport(&geom, &cfg.flow, &cfg.transport, &pbc, &cbc, 0.0)
            .context(|| format!("transport with fracture refinement {refine}"))?;
        hist.push(r.fracture_average_history(&geom));
        cells.push(geom.graph.nodes_of_dim(1).map(|n| n.grid.num_cells()).sum());
    }
    let (a, b) = (&hist[0], &hist[1]);
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x.1 - y.1).powi(2)).sum();
    let den: f64 = b.iter().map(|y| y.1 * y.1).sum();
    Ok(NonMatchingResult {
        difference: (num / den.max(1e-300)).sqrt(),
        matching: hist[0].clone(),
        refined: hist[1].clone(),
        matching_fracture_cells: cells[0],
        refined_fracture_cells: cells[1],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::newton::jacobian_fd_error;
    use crate::models::flow::{run_flow, FractureProps, Scheme};
    use rand::{RngExt, SeedableRng};

    fn setup(fractures: Vec<[Point; 2]>, h: f64) -> (Geometry, FlowParams) {
        let net = FractureNetwork2::new(fractures.clone(), crate::geom::network::Rect::unit(), None).unwrap();
        let geom = build_geometry(&net, &MeshSource::Generate(MeshOptions::new(MeshSizeParams::uniform(h))), 1).unwrap();
        let props = FractureProps { k_t: 1e2, k_n: 1e2, aperture: 1e-2 };
        (geom, FlowParams { matrix_perm: 1.0, fractures: vec![props; fractures.len()], scheme: Scheme::Tpfa })
    }

    fn pbc(x: Point) -> BoundaryValue {
        if x[0] < 1e-12 {
            BoundaryValue::Pressure(1.0)
        } else if x[0] > 1.0 - 1e-12 {
            BoundaryValue::Pressure(0.0)
        } else {
            BoundaryValue::Flux(0.0)
        }
    }

    fn inlet(x: Point) -> f64 {
        if x[0] < 1e-12 {
            1.0
        } else {
            0.0
        }
    }

    fn crossing() -> Vec<[Point; 2]> {
        vec![[[0.2, 0.3], [0.8, 0.7]], [[0.3, 0.8], [0.7, 0.2]]]
    }

    #[test]
    fn zero_concentration_reproduces_pure_flow() {
        for scheme in [Scheme::Tpfa, Scheme::Mpfa] {
            let (geom, mut fp) = setup(crossing(), 0.15);
            fp.scheme = scheme;
            let tp = TransportParams { end_time: 0.03, ..Default::default() };
            let r = run_flow_transport(&geom, &fp, &tp, &pbc, &|_| 0.0, 0.0).unwrap();
            let flow = run_flow(&geom, &fp, &pbc).unwrap();
            for s in &r.steps {
                for (a, b) in s.pressure.iter().flatten().zip(flow.pressure.iter().flatten()) {
                    assert!((a - b).abs() <= 1e-10, "{scheme:?}: {a} vs {b}");
                }
                for (a, b) in s.lambda.iter().flatten().zip(flow.mortar_flux.iter().flatten()) {
                    assert!((a - b).abs() <= 1e-10);
                }
                assert!(s.concentration.iter().flatten().all(|c| c.abs() <= 1e-14));
            }
        }
    }

    #[test]
    fn pure_advection_respects_the_maximum_principle() {
        let (geom, fp) = setup(crossing(), 0.12);
        let tp = TransportParams { end_time: 0.2, dt: 0.02, ..Default::default() };
        let r = run_flow_transport(&geom, &fp, &tp, &pbc, &inlet, 0.0).unwrap();
        for s in &r.steps {
            for c in s.concentration.iter().flatten() {
                assert!(*c >= -1e-10 && *c <= 1.0 + 1e-10, "c = {c}");
            }
        }
        assert!(fracture_average(&geom, &r.steps.last().unwrap().concentration) > 0.01);
    }

    #[test]
    fn solute_mass_balances_boundary_fluxes() {
        let (geom, fp) = setup(crossing(), 0.12);
        let tp = TransportParams { end_time: 0.1, dt: 0.02, diffusivity: 1e-2, interface_diffusivity: 1e-2, ..Default::default() };
        let r = run_flow_transport(&geom, &fp, &tp, &pbc, &inlet, 0.0).unwrap();
        let mut prev = r.initial_mass;
        for s in &r.steps {
            let change = s.mass - prev;
            let expect = -tp.dt * s.boundary_outflow;
            assert!((change - expect).abs() <= 1e-8 * expect.abs().max(1e-12), "{change} vs {expect}");
            prev = s.mass;
        }
        assert!(prev > 0.0);
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let (geom, fp) = setup(crossing(), 0.2);
        let tp = TransportParams { diffusivity: 1e-2, interface_diffusivity: 1e-1, ..Default::default() };
        let mut prob = TransportProblem::new(&geom, &fp, &tp, &pbc, &inlet).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..3 {
            let mut x = vec![0.0; prob.dofs.num_dofs()];
            for b in prob.dofs.blocks() {
                for i in b.range() {
                    x[i] = match b.variable.as_str() {
                        "c" => rng.random_range(0.0..1.0),
                        "p" => rng.random_range(0.0..1.0),
                        _ => rng.random_range(0.1..1.0) * if rng.random_range(0.0..1.0) < 0.5 { -1.0 } else { 1.0 },
                    };
                }
            }
            let old: Vec<f64> = (0..x.len()).map(|_| rng.random_range(0.0..1.0)).collect();
            prob.set_previous(&old);
            let (_, jac) = prob.residual_jacobian(&x).unwrap();
            let err = jacobian_fd_error(&mut prob, &x, &jac, 1e-6, 4).unwrap();
            assert!(err < 1e-6, "fd error {err}");
        }
    }

    #[test]
    fn uniform_concentration_scales_fluxes_by_the_viscosity() {
        let (geom, fp) = setup(vec![[[0.2, 0.5], [0.8, 0.5]]], 0.15);
        let tp = TransportParams { end_time: 0.02, ..Default::default() };
        let r = run_flow_transport(&geom, &fp, &tp, &pbc, &|_| 1.0, 1.0).unwrap();
        let flow = run_flow(&geom, &fp, &pbc).unwrap();
        let s = &r.steps[0];
        for (a, b) in s.pressure.iter().flatten().zip(flow.pressure.iter().flatten()) {
            assert!((a - b).abs() < 1e-10);
        }
        let e = 1f64.exp();
        for (a, b) in s.lambda.iter().flatten().zip(flow.mortar_flux.iter().flatten()) {
            assert!((a - b / e).abs() < 1e-10 * b.abs().max(1.0));
        }
        // Inflow at c = 1 balances outflow at c = 1.
        assert!(s.boundary_outflow.abs() < 1e-10);
    }

    #[test]
    fn refined_fracture_grids_give_similar_histories() {
        let mut cfg = NonMatchingConfig { mesh_size: 0.15, ..Default::default() };
        cfg.transport.end_time = 0.1;
        cfg.transport.dt = 0.02;
        let r = run_nonmatching_comparison(&cfg).unwrap();
        assert_eq!(r.refined_fracture_cells, 2 * r.matching_fracture_cells);
        assert_eq!(r.matching.len(), 5);
        assert!(r.difference < 0.05, "{}", r.difference);
        assert!(r.refined.windows(2).all(|w| w[1].1 >= w[0].1 - 1e-12));
    }

    #[test]
    fn invalid_parameters_are_rejected() {
        let (geom, fp) = setup(crossing(), 0.3);
        for tp in [
            TransportParams { dt: 0.0, ..Default::default() },
            TransportParams { porosity: 0.0, ..Default::default() },
            TransportParams { diffusivity: -1.0, ..Default::default() },
        ] {
            assert!(matches!(run_flow_transport(&geom, &fp, &tp, &pbc, &inlet, 0.0), Err(Error::Config(_))));
        }
        assert!("cubic".parse::<ViscosityLaw>().is_err());
    }
}
