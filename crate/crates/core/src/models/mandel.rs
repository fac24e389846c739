//! Mandel's problem: series solution and a Biot driver on the quarter
//! domain `[0, a] x [0, b]` under plane strain.

use super::common::{build_geometry, side_of, MeshSource, Side};
use super::convergence::relative_l2;
use crate::assembly::linsolve::Factorization;
use crate::discretize::mpfa::mpfa_tensor;
use crate::discretize::mpsa::{mpsa, vector_divergence};
use crate::discretize::params::isotropic;
use crate::discretize::{BcKind, BoundaryCondition, MechanicsParameters, VectorBc};
use crate::error::{Error, Result};
use crate::geom::network::{FractureNetwork2, Rect};
use crate::mesh::grid::Grid;
use crate::mesh::mesher::MeshOptions;
use crate::mesh::MeshSizeParams;
use crate::sparse::{add, block_matrix, diag, matvec, mul, scale, SpMat};

#[derive(Debug, Clone)]
pub struct MandelConfig {
    pub a: f64,
    pub b: f64,
    /// Compressive load per unit length on the top boundary of the half
    /// plate (the full plate carries `2F`).
    pub force: f64,
    pub shear_modulus: f64,
    /// Drained Lame parameter.
    pub lambda: f64,
    pub biot_alpha: f64,
    pub biot_modulus: f64,
    /// Permeability over viscosity.
    pub mobility: f64,
    /// Dimensionless sample times `c t / a^2`.
    pub sample_times: Vec<f64>,
    /// Dimensionless time step.
    pub dt: f64,
    pub mesh_size: f64,
    pub seed: u64,
    pub num_roots: usize,
}

impl Default for MandelConfig {
    fn default() -> Self {
        MandelConfig {
            a: 1.0,
            b: 1.0,
            force: 1.0,
            shear_modulus: 1.0,
            lambda: 1.0,
            biot_alpha: 1.0,
            biot_modulus: 10.0,
            mobility: 1.0,
            sample_times: vec![0.01, 0.1, 0.5, 1.0],
            dt: 0.0025,
            mesh_size: 0.055,
            seed: 0,
            num_roots: 200,
        }
    }
}

impl MandelConfig {
    pub fn validate(&self) -> Result<()> {
        let pos = [
            ("a", self.a),
            ("b", self.b),
            ("shear modulus", self.shear_modulus),
            ("Biot modulus", self.biot_modulus),
            ("mobility", self.mobility),
            ("time step", self.dt),
            ("mesh size", self.mesh_size),
        ];
        for (n, v) in pos {
            if !(v > 0.0) {
                return Err(Error::Config(format!("mandel: {n} must be positive, got {v}")));
            }
        }
        if !(self.biot_alpha > 0.0 && self.biot_alpha <= 1.0) {
            return Err(Error::Config("mandel: Biot coefficient must be in (0, 1]".into()));
        }
        let nu = self.lambda / (2.0 * (self.lambda + self.shear_modulus));
        if !(nu > 0.0 && nu < 0.5) {
            return Err(Error::Config(format!("mandel: Poisson ratio {nu} outside (0, 0.5)")));
        }
        if self.sample_times.is_empty() || self.sample_times.iter().any(|t| !(*t > 0.0)) {
            return Err(Error::Config("mandel: sample times must be positive".into()));
        }
        if self.num_roots == 0 {
            return Err(Error::Config("mandel: need at least one series term".into()));
        }
        Ok(())
    }
}

/// Series solution with precomputed roots.
#[derive(Debug, Clone)]
pub struct MandelSolution {
    pub a: f64,
    pub force: f64,
    pub shear_modulus: f64,
    pub nu: f64,
    pub nu_u: f64,
    pub skempton: f64,
    /// Consolidation coefficient.
    pub c: f64,
    pub roots: Vec<f64>,
}

/// Roots of `tan x = k x` on `((n-1) pi, (n-1) pi + pi/2)`, `k > 1`, by
/// bisection on `sin x - k x cos x`.
pub fn mandel_roots(k: f64, n: usize) -> Result<Vec<f64>> {
    if !(k > 1.0) {
        return Err(Error::Domain(format!("mandel: root equation coefficient {k} must exceed 1")));
    }
    let f = |x: f64| x.sin() - k * x * x.cos();
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let base = i as f64 * std::f64::consts::PI;
        let (mut lo, mut hi) = (base + if i == 0 { 1e-9 } else { 0.0 }, base + std::f64::consts::FRAC_PI_2);
        let (mut flo, fhi) = (f(lo), f(hi));
        if flo * fhi > 0.0 {
            return Err(Error::Domain(format!("mandel: no sign change bracketing root {}", i + 1)));
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            let fm = f(mid);
            if fm == 0.0 {
                lo = mid;
                hi = mid;
                break;
            }
            if (fm < 0.0) == (flo < 0.0) {
                lo = mid;
                flo = fm;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-15 * hi.max(1.0) {
                break;
            }
        }
        out.push(0.5 * (lo + hi));
    }
    Ok(out)
}

impl MandelSolution {
    pub fn new(cfg: &MandelConfig) -> Result<Self> {
        cfg.validate()?;
        let (g, lam, alpha, m) = (cfg.shear_modulus, cfg.lambda, cfg.biot_alpha, cfg.biot_modulus);
        let k = lam + 2.0 * g / 3.0;
        let ku = k + alpha * alpha * m;
        let nu = (3.0 * k - 2.0 * g) / (2.0 * (3.0 * k + g));
        let nu_u = (3.0 * ku - 2.0 * g) / (2.0 * (3.0 * ku + g));
        let skempton = alpha * m / ku;
        let c = 2.0 * cfg.mobility * skempton * skempton * g * (1.0 - nu) * (1.0 + nu_u).powi(2) / (9.0 * (1.0 - nu_u) * (nu_u - nu));
        let roots = mandel_roots((1.0 - nu) / (nu_u - nu), cfg.num_roots)?;
        Ok(MandelSolution { a: cfg.a, force: cfg.force, shear_modulus: g, nu, nu_u, skempton, c, roots })
    }

    /// Initial undrained pressure.
    pub fn p0(&self) -> f64 {
        self.force * self.skempton * (1.0 + self.nu_u) / (3.0 * self.a)
    }

    /// Physical time of dimensionless time `ts`.
    pub fn time(&self, ts: f64) -> f64 {
        ts * self.a * self.a / self.c
    }

    fn terms(&self, t: f64) -> impl Iterator<Item = (f64, f64, f64, f64)> + '_ {
        self.roots.iter().map(move |&al| {
            let (s, c) = al.sin_cos();
            let e = (-al * al * self.c * t / (self.a * self.a)).exp();
            (al, s, c, e / (al - s * c))
        })
    }

    pub fn pressure(&self, x: f64, t: f64) -> f64 {
        let sum: f64 = self.terms(t).map(|(al, s, c, w)| s * w * ((al * x / self.a).cos() - c)).sum();
        2.0 * self.p0() * sum
    }

    pub fn ux(&self, x: f64, t: f64) -> f64 {
        let (f, g, a) = (self.force, self.shear_modulus, self.a);
        let s1: f64 = self.terms(t).map(|(_, s, c, w)| s * c * w).sum();
        let s2: f64 = self.terms(t).map(|(al, _, c, w)| c * w * (al * x / a).sin()).sum();
        (f * self.nu / (2.0 * g * a) - f * self.nu_u / (g * a) * s1) * x + f / g * s2
    }

    pub fn uy(&self, y: f64, t: f64) -> f64 {
        let (f, g, a) = (self.force, self.shear_modulus, self.a);
        let s1: f64 = self.terms(t).map(|(_, s, c, w)| s * c * w).sum();
        (-f * (1.0 - self.nu) / (2.0 * g * a) + f * (1.0 - self.nu_u) / (g * a) * s1) * y
    }

    /// Undrained displacement right after loading.
    pub fn initial_displacement(&self, x: [f64; 2]) -> [f64; 2] {
        let (f, g, a) = (self.force, self.shear_modulus, self.a);
        [f * self.nu_u * x[0] / (2.0 * g * a), -f * (1.0 - self.nu_u) * x[1] / (2.0 * g * a)]
    }
}

/// Snapshot of the numerical and exact fields at one sample time.
#[derive(Debug, Clone)]
pub struct MandelSample {
    pub t_star: f64,
    /// Relative L2 errors of pressure and horizontal displacement.
    pub pressure_error: f64,
    pub ux_error: f64,
    /// Cell x-coordinates with numerical and exact `p / p0`.
    pub pressure_profile: Vec<(f64, f64, f64)>,
    /// Cell x-coordinates with numerical and exact `u_x`.
    pub ux_profile: Vec<(f64, f64, f64)>,
}

#[derive(Debug, Clone)]
pub struct MandelResult {
    pub cells: usize,
    pub steps: usize,
    pub samples: Vec<MandelSample>,
    /// `(t*, p(0, t) / p0)` from the cells touching the symmetry axis.
    pub center_history: Vec<(f64, f64)>,
    pub exact: MandelSolution,
    pub grid: Grid,
    pub pressure: Vec<f64>,
    pub displacement: Vec<f64>,
}

impl MandelResult {
    pub fn samples_csv(&self) -> String {
        let mut s = String::from("t_star,x,p_num,p_exact,ux_num,ux_exact\n");
        for smp in &self.samples {
            for (p, u) in smp.pressure_profile.iter().zip(&smp.ux_profile) {
                s += &format!("{},{:.8},{:.10e},{:.10e},{:.10e},{:.10e}\n", smp.t_star, p.0, p.1, p.2, u.1, u.2);
            }
        }
        s
    }
}

fn mandel_grid(cfg: &MandelConfig) -> Result<Grid> {
    let net = FractureNetwork2::new(vec![], Rect::new(0.0, 0.0, cfg.a, cfg.b)?, None)?;
    let opts = MeshOptions::new(MeshSizeParams::uniform(cfg.mesh_size)).seed(cfg.seed);
    Ok(build_geometry(&net, &MeshSource::Generate(opts), 1)?.md.matrix)
}

pub fn run_mandel(cfg: &MandelConfig) -> Result<MandelResult> {
    let ex = MandelSolution::new(cfg)?;
    let g = mandel_grid(cfg)?;
    let rect = Rect::new(0.0, 0.0, cfg.a, cfg.b)?;
    let (nc, nf) = (g.num_cells(), g.num_faces());

    let mut vbc = VectorBc::all(&g, BcKind::Neumann);
    let mut fbc = BoundaryCondition::all(&g, BcKind::Neumann);
    let mut sides = vec![None; nf];
    for f in g.boundary_faces() {
        let s = side_of(&rect, g.face_centers[f]);
        sides[f] = Some(s);
        match s {
            Side::Left => vbc.set(f, [BcKind::Dirichlet, BcKind::Neumann]),
            Side::Bottom | Side::Top => vbc.set(f, [BcKind::Neumann, BcKind::Dirichlet]),
            Side::Right => {
                vbc.set(f, [BcKind::Neumann, BcKind::Neumann]);
                fbc.set(f, BcKind::Dirichlet);
            }
        }
    }
    let mut mech = MechanicsParameters::uniform(nc, cfg.lambda, cfg.shear_modulus);
    mech.biot_alpha = cfg.biot_alpha;
    mech.storage = 1.0 / cfg.biot_modulus;
    let sd = mpsa(&g, &mech, &vbc)?;
    let fd = mpfa_tensor(&g, &vec![isotropic(cfg.mobility); nc], &fbc)?;

    // Boundary data: only the top u_y varies in time; everything else is zero.
    let mech_data = |t: Option<f64>| -> Vec<f64> {
        let mut v = vec![0.0; 2 * nf];
        for f in 0..nf {
            if sides[f] == Some(Side::Top) {
                let y = g.face_centers[f][1];
                v[2 * f + 1] = match t {
                    Some(t) => ex.uy(y, t),
                    None => ex.initial_displacement(g.face_centers[f])[1],
                };
            }
        }
        v
    };

    let alpha = cfg.biot_alpha;
    let dt = ex.time(cfg.dt);
    let vdiv = vector_divergence(&g);
    let div = g.divergence();
    let vol = diag(&g.cell_volumes);
    // Unknowns: [u (2 nc); p (nc)].
    let a_uu = mul(&vdiv, &sd.stress);
    let a_up = mul(&vdiv, &sd.grad_p);
    let a_pu = scale(&sd.div_u, alpha);
    let a_pp = add(&add(&scale(&vol, mech.storage), &scale(&sd.stabilization, alpha)), &scale(&mul(&div, &fd.flux), dt));
    let matrix: SpMat = block_matrix(&[&[&a_uu, &a_up], &[&a_pu, &a_pp]]);
    let lu = Factorization::new(&matrix).map_err(|e| e.context("factorizing the Mandel system"))?;
    let acc_pp = add(&scale(&vol, mech.storage), &scale(&sd.stabilization, alpha));
    let b_u = mul(&vdiv, &sd.bound_stress);
    let b_p = scale(&sd.bound_div_u, alpha);

    let mut u: Vec<f64> = g.cell_centers.iter().flat_map(|x| ex.initial_displacement(*x)).collect();
    let mut p = vec![ex.p0(); nc];
    let mut gold = mech_data(None);
    let mut result_samples = Vec::new();
    let mut history = Vec::new();
    let axis: Vec<usize> = (0..nc).filter(|&c| g.cell_nodes[c].iter().any(|&v| g.nodes[v][0] < 1e-12)).collect();
    let center =
        |p: &[f64]| axis.iter().map(|&c| p[c] * g.cell_volumes[c]).sum::<f64>() / axis.iter().map(|&c| g.cell_volumes[c]).sum::<f64>();
    history.push((0.0, center(&p) / ex.p0()));

    let t_end = cfg.sample_times.iter().cloned().fold(0.0, f64::max);
    let nsteps = (t_end / cfg.dt - 1e-9).ceil() as usize;
    let mut targets: Vec<(usize, f64)> = cfg.sample_times.iter().map(|&ts| (((ts / cfg.dt).round() as usize).max(1), ts)).collect();
    targets.sort_by_key(|x| x.0);
    for step in 1..=nsteps {
        let t = ex.time(step as f64 * cfg.dt);
        let gnew = mech_data(Some(t));
        let mut rhs = vec![0.0; 3 * nc];
        let bu = matvec(&b_u, &gnew);
        for i in 0..2 * nc {
            rhs[i] = -bu[i];
        }
        let dg: Vec<f64> = gnew.iter().zip(&gold).map(|(a, b)| a - b).collect();
        let acc = matvec(&a_pu, &u);
        let accp = matvec(&acc_pp, &p);
        let bdu = matvec(&b_p, &dg);
        for c in 0..nc {
            rhs[2 * nc + c] = acc[c] + accp[c] - bdu[c];
        }
        let x = lu.solve(&rhs).map_err(|e| e.context(format!("mandel step {step}")))?;
        u.copy_from_slice(&x[..2 * nc]);
        p.copy_from_slice(&x[2 * nc..]);
        gold = gnew;
        let ts = step as f64 * cfg.dt;
        history.push((ts, center(&p) / ex.p0()));
        for &(_, want) in targets.iter().filter(|(s, _)| *s == step) {
            result_samples.push(sample(&g, &ex, &p, &u, t, want));
        }
    }
    Ok(MandelResult {
        cells: nc,
        steps: nsteps,
        samples: result_samples,
        center_history: history,
        exact: ex,
        grid: g,
        pressure: p,
        displacement: u,
    })
}

fn sample(g: &Grid, ex: &MandelSolution, p: &[f64], u: &[f64], t: f64, t_star: f64) -> MandelSample {
    let nc = g.num_cells();
    let p0 = ex.p0();
    let mut pp = Vec::with_capacity(nc);
    let mut up = Vec::with_capacity(nc);
    for c in 0..nc {
        let x = g.cell_centers[c][0];
        pp.push((x, p[c] / p0, ex.pressure(x, t) / p0));
        up.push((x, u[2 * c], ex.ux(x, t)));
    }
    let w = &g.cell_volumes;
    let pn: Vec<f64> = pp.iter().map(|v| v.1).collect();
    let pe: Vec<f64> = pp.iter().map(|v| v.2).collect();
    let un: Vec<f64> = up.iter().map(|v| v.1).collect();
    let ue: Vec<f64> = up.iter().map(|v| v.2).collect();
    MandelSample {
        t_star,
        pressure_error: relative_l2(&pn, &pe, w),
        ux_error: relative_l2(&un, &ue, w),
        pressure_profile: pp,
        ux_profile: up,
    }
}
