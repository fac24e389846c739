//! Steady single-phase Darcy flow on the mixed-dimensional graph.

use super::common::{check_per_fracture, harmonic_mean, BoundaryValue, Geometry};
use crate::assembly::block::{BlockSystem, Contributions};
use crate::assembly::dofs::{DofManager, Entity};
use crate::assembly::laws::robin_coupling;
use crate::assembly::linsolve::linear_solve;
use crate::discretize::mpfa::mpfa_tensor;
use crate::discretize::params::isotropic;
use crate::discretize::tpfa::tpfa_tensor;
use crate::discretize::{BcKind, BoundaryCondition, FluxDiscretization};
use crate::error::{Error, Result, ResultExt};
use crate::geom::graph::SubdomainKind;
use crate::geom::network::Point;
use crate::mesh::grid::Grid;
use crate::sparse::{matvec, mul, scale, scale_rows, zeros};
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    Tpfa,
    Mpfa,
}

impl FromStr for Scheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tpfa" => Ok(Scheme::Tpfa),
            "mpfa" => Ok(Scheme::Mpfa),
            _ => Err(Error::Config(format!("unknown scheme '{s}' (expected tpfa or mpfa)"))),
        }
    }
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::Tpfa => "tpfa",
            Scheme::Mpfa => "mpfa",
        }
    }
}

/// Tangential permeability, normal permeability and aperture of a fracture.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FractureProps {
    pub k_t: f64,
    pub k_n: f64,
    pub aperture: f64,
}

#[derive(Debug, Clone)]
pub struct FlowParams {
    pub matrix_perm: f64,
    /// Indexed by original fracture.
    pub fractures: Vec<FractureProps>,
    pub scheme: Scheme,
}

impl FlowParams {
    pub fn validate(&self, num_fractures: usize) -> Result<()> {
        check_per_fracture(&self.fractures, num_fractures, "fracture properties")?;
        if !(self.matrix_perm > 0.0) {
            return Err(Error::Config("matrix permeability must be positive".into()));
        }
        for (k, f) in self.fractures.iter().enumerate() {
            if !(f.k_t > 0.0 && f.k_n > 0.0) {
                return Err(Error::Config(format!("fracture {k}: permeabilities must be positive")));
            }
            if !(f.aperture > 0.0) {
                return Err(Error::Config(format!("fracture {k}: aperture must be positive")));
            }
        }
        Ok(())
    }
}

/// Fixed-dimensional discretizations, boundary data and interface
/// coefficients for a flow problem.
#[derive(Debug, Clone)]
pub struct FlowOperators {
    /// Per node; `None` for 0D nodes.
    pub discr: Vec<Option<FluxDiscretization>>,
    pub bc: Vec<BoundaryCondition>,
    /// External boundary data per node (zero on interface faces).
    pub bc_values: Vec<Vec<f64>>,
    /// Normal permeability `kappa` per edge and mortar cell.
    pub kappa: Vec<Vec<f64>>,
    /// Aperture per node (1 for the matrix).
    pub aperture: Vec<f64>,
}

/// Boundary conditions: interface faces and fracture tips are Neumann,
/// domain-boundary faces take `boundary` at the face center.
pub fn flow_bc(geom: &Geometry, boundary: &dyn Fn(Point) -> BoundaryValue) -> (Vec<BoundaryCondition>, Vec<Vec<f64>>) {
    let mut kinds = Vec::new();
    let mut values = Vec::new();
    for n in &geom.graph.nodes {
        let g = &n.grid;
        let mut bc = BoundaryCondition::all(g, BcKind::Neumann);
        let mut v = vec![0.0; g.num_faces()];
        for f in g.boundary_faces() {
            if g.tags.domain_boundary[f] {
                match boundary(g.face_centers[f]) {
                    BoundaryValue::Pressure(p) => {
                        bc.set(f, BcKind::Dirichlet);
                        v[f] = p;
                    }
                    BoundaryValue::Flux(q) => v[f] = q,
                }
            }
        }
        kinds.push(bc);
        values.push(v);
    }
    (kinds, values)
}

/// Cell permeability tensors of node `n`, aperture-scaled in fractures.
fn node_perm(geom: &Geometry, p: &FlowParams, n: usize) -> Vec<crate::discretize::Tensor2> {
    let node = &geom.graph.nodes[n];
    let k = match node.kind {
        SubdomainKind::Matrix => p.matrix_perm,
        SubdomainKind::Fracture(k) => p.fractures[k].k_t * p.fractures[k].aperture,
        SubdomainKind::Intersection(_) => 1.0,
    };
    vec![isotropic(k); node.grid.num_cells()]
}

pub fn discretize_scalar(
    g: &Grid,
    k: &[crate::discretize::Tensor2],
    bc: &BoundaryCondition,
    scheme: Scheme,
) -> Result<Option<FluxDiscretization>> {
    if g.dim == 0 {
        return Ok(None);
    }
    Ok(Some(match scheme {
        Scheme::Tpfa => tpfa_tensor(g, k, bc)?,
        Scheme::Mpfa => mpfa_tensor(g, k, bc)?,
    }))
}

pub fn flow_operators(geom: &Geometry, p: &FlowParams, boundary: &dyn Fn(Point) -> BoundaryValue) -> Result<FlowOperators> {
    p.validate(geom.num_fractures())?;
    let (bc, bc_values) = flow_bc(geom, boundary);
    let mut discr = Vec::new();
    let mut aperture = Vec::new();
    for n in &geom.graph.nodes {
        let k = node_perm(geom, p, n.id);
        discr.push(discretize_scalar(&n.grid, &k, &bc[n.id], p.scheme).context(|| format!("discretizing flow on subdomain {}", n.id))?);
        aperture.push(match n.kind {
            SubdomainKind::Matrix => 1.0,
            SubdomainKind::Fracture(k) => p.fractures[k].aperture,
            SubdomainKind::Intersection(pt) => {
                let fr = geom.md.pnet.point_fractures(pt);
                fr.iter().map(|&k| p.fractures[k].aperture).fold(0.0, f64::max)
            }
        });
    }
    let mut kappa = Vec::new();
    for e in &geom.graph.edges {
        let nm = e.mortar.num_cells();
        let k = match (geom.graph.nodes[e.high].kind, geom.graph.nodes[e.low].kind) {
            (SubdomainKind::Matrix, SubdomainKind::Fracture(k)) => 2.0 * p.fractures[k].k_n / p.fractures[k].aperture,
            (SubdomainKind::Fracture(_), SubdomainKind::Intersection(pt)) => {
                let ks: Vec<f64> = geom.md.pnet.point_fractures(pt).iter().map(|&k| p.fractures[k].k_t).collect();
                2.0 * harmonic_mean(&ks)
            }
            _ => return Err(Error::Assembly(format!("unexpected subdomain pair on edge {}", e.id))),
        };
        kappa.push(vec![k; nm]);
    }
    Ok(FlowOperators { discr, bc, bc_values, kappa, aperture })
}

pub fn flow_dofs(geom: &Geometry) -> Result<DofManager> {
    let mut spec = Vec::new();
    for n in &geom.graph.nodes {
        spec.push((Entity::Node(n.id), "p".to_string(), 1, n.grid.num_cells()));
    }
    for e in &geom.graph.edges {
        spec.push((Entity::Edge(e.id), "lambda".to_string(), 1, e.mortar.num_cells()));
    }
    DofManager::new(spec)
}

/// Linear contributions of the flow problem with unit viscosity and
/// extensive cell sources `sources[node]`.
pub fn flow_contributions(geom: &Geometry, ops: &FlowOperators, sources: Option<&[Vec<f64>]>) -> Result<Contributions> {
    let mut c = Contributions::default();
    for n in &geom.graph.nodes {
        let e = (Entity::Node(n.id), "p");
        let nc = n.grid.num_cells();
        let mut rhs = sources.map_or(vec![0.0; nc], |s| s[n.id].clone());
        match &ops.discr[n.id] {
            Some(d) => {
                let div = n.grid.divergence();
                c.mat(e, e, mul(&div, &d.flux));
                let bterm = matvec(&mul(&div, &d.bound_flux), &ops.bc_values[n.id]);
                for (r, b) in rhs.iter_mut().zip(bterm) {
                    *r -= b;
                }
            }
            None => c.mat(e, e, zeros(nc, nc)),
        }
        c.rhs(e, rhs);
    }
    for ed in &geom.graph.edges {
        let hd = ops.discr[ed.high].as_ref().expect("higher neighbour has faces");
        let hg = &geom.graph.nodes[ed.high].grid;
        let mu = vec![1.0; ed.mortar.num_cells()];
        let b = robin_coupling(&ed.mortar, hd, hg, &ops.kappa[ed.id], &mu)?;
        let m = (Entity::Edge(ed.id), "lambda");
        let (h, l) = ((Entity::Node(ed.high), "p"), (Entity::Node(ed.low), "p"));
        c.mat(m, m, b.mortar_mortar);
        c.mat(m, h, b.mortar_high);
        c.mat(m, l, b.mortar_low);
        c.mat(h, m, b.high_mortar);
        c.mat(l, m, b.low_mortar);
        c.rhs(m, mortar_trace_rhs(ed, hd, &ops.bc_values[ed.high]));
        // Neumann data from the other interfaces of the same higher
        // neighbour enter this trace when the stencil reaches them.
        let pi = scale_rows(&ed.mortar.primary_to_mortar_int, &ed.mortar.cell_measures);
        let pi_tr = mul(&pi, &hd.trace_bound);
        for other in geom.graph.edges.iter().filter(|o| o.high == ed.high && o.id != ed.id) {
            let nmat = crate::assembly::laws::mortar_to_neumann(&other.mortar, &hg.face_areas);
            let blk = scale(&mul(&pi_tr, &nmat), -1.0);
            if crate::sparse::max_abs(&blk) > 0.0 {
                c.mat(m, (Entity::Edge(other.id), "lambda"), blk);
            }
        }
    }
    Ok(c)
}

/// External boundary data entering the higher-side trace on the mortar.
pub fn mortar_trace_rhs(ed: &crate::geom::graph::Interface, hd: &FluxDiscretization, g: &[f64]) -> Vec<f64> {
    let pi = scale_rows(&ed.mortar.primary_to_mortar_int, &ed.mortar.cell_measures);
    matvec(&mul(&pi, &hd.trace_bound), g)
}

#[derive(Debug, Clone)]
pub struct FlowSolution {
    pub pressure: Vec<Vec<f64>>,
    pub mortar_flux: Vec<Vec<f64>>,
    pub system: BlockSystem,
    pub solution: Vec<f64>,
    pub ops: FlowOperators,
}

impl FlowSolution {
    /// Face fluxes of node `n` including mortar Neumann data.
    pub fn face_flux(&self, geom: &Geometry, n: usize) -> Option<Vec<f64>> {
        let d = self.ops.discr[n].as_ref()?;
        let g = &geom.graph.nodes[n].grid;
        let mut data = self.ops.bc_values[n].clone();
        for e in geom.graph.edges.iter().filter(|e| e.high == n) {
            let nd = matvec(&crate::assembly::laws::mortar_to_neumann(&e.mortar, &g.face_areas), &self.mortar_flux[e.id]);
            for (a, b) in data.iter_mut().zip(nd) {
                *a += b;
            }
        }
        let q = matvec(&d.flux, &self.pressure[n]);
        Some(q.iter().zip(matvec(&d.bound_flux, &data)).map(|(a, b)| a + b).collect())
    }

    /// Total outward flux through the domain boundary, summed over all
    /// subdomains; returns `(inflow, outflow)` as positive numbers.
    pub fn boundary_fluxes(&self, geom: &Geometry) -> (f64, f64) {
        let (mut inflow, mut outflow) = (0.0, 0.0);
        for n in &geom.graph.nodes {
            let Some(q) = self.face_flux(geom, n.id) else { continue };
            for f in n.grid.boundary_faces() {
                if n.grid.tags.domain_boundary[f] {
                    let (_, s) = n.grid.boundary_cell(f);
                    let out = s * q[f];
                    if out > 0.0 {
                        outflow += out;
                    } else {
                        inflow -= out;
                    }
                }
            }
        }
        (inflow, outflow)
    }
}

pub fn run_flow(geom: &Geometry, p: &FlowParams, boundary: &dyn Fn(Point) -> BoundaryValue) -> Result<FlowSolution> {
    let ops = flow_operators(geom, p, boundary)?;
    let dofs = flow_dofs(geom)?;
    let sys = flow_contributions(geom, &ops, None)?.assemble(&dofs)?;
    let x = linear_solve(&sys.matrix, &sys.rhs).context(|| "solving the flow system".into())?;
    let pressure = geom.graph.nodes.iter().map(|n| x[dofs.range(Entity::Node(n.id), "p").unwrap()].to_vec()).collect();
    let mortar_flux = geom.graph.edges.iter().map(|e| x[dofs.range(Entity::Edge(e.id), "lambda").unwrap()].to_vec()).collect();
    Ok(FlowSolution { pressure, mortar_flux, system: sys, solution: x, ops })
}

/// Cell-wise residual of every mass balance, scaled by the largest flux
/// magnitude in the system.
pub fn conservation_residual(sol: &FlowSolution) -> f64 {
    let ax = matvec(&sol.system.matrix, &sol.solution);
    let scale =
        sol.solution.iter().fold(0.0_f64, |m, v| m.max(v.abs())).max(1e-300) * crate::sparse::max_abs(&sol.system.matrix).max(1e-300);
    ax.iter().zip(&sol.system.rhs).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) / scale
}
