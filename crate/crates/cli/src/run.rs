//! Model drivers behind `run` and `converge`.

use crate::config::{BoundarySection, ModelKind, RunConfig};
use crate::output::{Outcome, Outputs};
use mdfrac_core::assembly::contact::ContactMode;
use mdfrac_core::assembly::newton::{NewtonConfig, NewtonReport};
use mdfrac_core::discretize::MechanicsParameters;
use mdfrac_core::mesh::mesher::MeshOptions;
use mdfrac_core::mesh::msh::import_msh;
use mdfrac_core::mesh::vtk::Field;
use mdfrac_core::models::benchmark::{self, profile_difference, run_study, Solved, StudyConfig};
use mdfrac_core::models::common::{build_geometry, side_of, BoundaryValue, Geometry, MeshSource, Side};
use mdfrac_core::models::flow::{conservation_residual, run_flow, FlowParams, FractureProps, Scheme};
use mdfrac_core::models::mandel::{run_mandel, MandelConfig};
use mdfrac_core::models::poromech::{run_biot_contact_on, PoromechConfig, ScheduleEntry, SlipSummary};
use mdfrac_core::models::sneddon::{run_sneddon, run_sneddon_study, SneddonConfig, SneddonStudyConfig};
use mdfrac_core::models::transport::{fracture_average, run_flow_transport, TransportParams};
use mdfrac_core::{Entity, Error, FractureNetwork2, MeshSizeParams, Point, Rect, Result};

pub fn run(cfg: &RunConfig, out: &mut Outputs) -> Result<Outcome> {
    match cfg.model {
        ModelKind::Flow => run_flow_model(cfg, out),
        ModelKind::Transport => run_transport(cfg, out),
        ModelKind::Poromech => run_poromech(cfg, out),
        ModelKind::Sneddon => run_sneddon_model(cfg, out),
        ModelKind::Mandel => run_mandel_model(cfg, out),
        ModelKind::Benchmark => run_benchmark(cfg, out),
    }
}

pub fn converge(cfg: &RunConfig, out: &mut Outputs) -> Result<Outcome> {
    match cfg.model {
        ModelKind::Benchmark => converge_benchmark(cfg, out),
        ModelKind::Sneddon => converge_sneddon(cfg, out),
        m => Err(Error::Config(format!("convergence studies are available for benchmark and sneddon, not '{}'", m.name()))),
    }
}

fn mesh_options(cfg: &RunConfig, default_h: f64) -> Result<MeshOptions> {
    let m = &cfg.mesh;
    let h = m.h.unwrap_or(default_h);
    let sizes = if m.h_min.is_some() || m.h_frac.is_some() || m.h_bound.is_some() {
        MeshSizeParams::new(m.h_min.unwrap_or(h), m.h_frac.unwrap_or(h), m.h_bound.unwrap_or(h))?
    } else {
        let s = MeshSizeParams::uniform(h);
        s.validate()?;
        s
    };
    let mut opts = MeshOptions::new(sizes).seed(cfg.seed);
    opts.grading = m.grading;
    opts.smoothing_passes = m.smoothing_passes;
    Ok(opts)
}

fn network(cfg: &RunConfig) -> Result<FractureNetwork2> {
    FractureNetwork2::from_file(cfg.network.as_ref().expect("validated config has a network"))
}

fn geometry(cfg: &RunConfig, net: &FractureNetwork2, default_h: f64) -> Result<Geometry> {
    let source = match &cfg.msh {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Error::Io(e).context(format!("reading {}", p.display())))?;
            MeshSource::Imported(import_msh(&text).map_err(|e| e.context(format!("msh file {}", p.display())))?)
        }
        None => MeshSource::Generate(mesh_options(cfg, default_h)?),
    };
    build_geometry(net, &source, cfg.mesh.refine)
}

fn flow_params(cfg: &RunConfig, n: usize) -> Result<FlowParams> {
    let f = &cfg.flow;
    let kt = f.fracture_perm.expand(n, "fracture_perm")?;
    let kn = f.normal_perm.expand(n, "normal_perm")?;
    let a = f.aperture.expand(n, "aperture")?;
    let fractures = (0..n).map(|k| FractureProps { k_t: kt[k], k_n: kn[k], aperture: a[k] }).collect();
    let p = FlowParams { matrix_perm: f.matrix_perm, fractures, scheme: f.scheme.parse()? };
    p.validate(n)?;
    Ok(p)
}

fn pressure_bc(b: &BoundarySection, domain: Rect) -> impl Fn(Point) -> BoundaryValue {
    let side = |p: Option<f64>, q: Option<f64>| match (p, q) {
        (Some(p), _) => BoundaryValue::Pressure(p),
        (None, q) => BoundaryValue::Flux(q.unwrap_or(0.0)),
    };
    let vals = [
        side(b.left_pressure, b.left_flux),
        side(b.right_pressure, b.right_flux),
        side(b.bottom_pressure, b.bottom_flux),
        side(b.top_pressure, b.top_flux),
    ];
    move |x| vals[side_index(side_of(&domain, x))]
}

fn side_index(s: Side) -> usize {
    match s {
        Side::Left => 0,
        Side::Right => 1,
        Side::Bottom => 2,
        Side::Top => 3,
    }
}

fn subdomain_file(prefix: &str, geom: &Geometry, id: usize) -> String {
    format!("{prefix}_sd{id}_{}d.vtk", geom.graph.nodes[id].dim)
}

fn newton_totals(reports: &[NewtonReport], o: &mut Outcome) {
    o.newton_iterations = reports.iter().map(|r| r.iterations).sum();
    o.final_residual = reports.last().map(|r| r.final_residual());
}

fn run_flow_model(cfg: &RunConfig, out: &mut Outputs) -> Result<Outcome> {
    let net = network(cfg)?;
    let geom = geometry(cfg, &net, 0.05)?;
    let params = flow_params(cfg, net.num_fractures())?;
    let bc = pressure_bc(&cfg.boundary, net.domain);
    let sol = run_flow(&geom, &params, &bc)?;
    for n in &geom.graph.nodes {
        out.vtk(&subdomain_file("pressure", &geom, n.id), &n.grid, n.id, &[("pressure", Field::Scalar(&sol.pressure[n.id]))])?;
    }
    let mut csv = String::from("fracture,cell,s_start,s_end,pressure\n");
    for (k, fg) in geom.md.fractures.iter().enumerate() {
        let p = &sol.pressure[geom.fracture_node(k)];
        for (c, iv) in fg.cell_intervals.iter().enumerate() {
            csv += &format!("{k},{c},{:.10e},{:.10e},{:.10e}\n", iv[0], iv[1], p[c]);
        }
    }
    out.text("fracture_pressure.csv", &csv)?;
    let mut csv = String::from("interface,high,low,cell,flux\n");
    for e in &geom.graph.edges {
        for (c, q) in sol.mortar_flux[e.id].iter().enumerate() {
            csv += &format!("{},{},{},{c},{q:.10e}\n", e.id, e.high, e.low);
        }
    }
    out.text("mortar_flux.csv", &csv)?;
    let (inflow, outflow) = sol.boundary_fluxes(&geom);
    let res = conservation_residual(&sol);
    let mut o = Outcome { steps: 1, final_residual: Some(res), ..Default::default() };
    o.metric("matrix_cells", geom.graph.nodes[0].grid.num_cells());
    o.metric("subdomains", geom.graph.nodes.len());
    o.metric("interfaces", geom.graph.edges.len());
    o.metric("inflow", inflow);
    o.metric("outflow", outflow);
    o.metric("conservation_residual", res);
    Ok(o)
}

fn run_transport(cfg: &RunConfig, out: &mut Outputs) -> Result<Outcome> {
    let net = network(cfg)?;
    let geom = geometry(cfg, &net, 0.05)?;
    let flow = flow_params(cfg, net.num_fractures())?;
    let t = &cfg.transport;
    let params = TransportParams {
        porosity: t.porosity,
        fracture_porosity: t.fracture_porosity,
        diffusivity: t.diffusivity,
        interface_diffusivity: t.interface_diffusivity,
        viscosity: t.viscosity.parse()?,
        dt: t.dt,
        end_time: t.end_time,
        newton: NewtonConfig { tol: t.newton_tol, max_iterations: t.max_iterations, ..Default::default() },
    };
    params.validate()?;
    let b = &cfg.boundary;
    let cvals = [b.left_concentration, b.right_concentration, b.bottom_concentration, b.top_concentration].map(|c| c.unwrap_or(0.0));
    let domain = net.domain;
    let cbc = move |x: Point| cvals[side_index(side_of(&domain, x))];
    let pbc = pressure_bc(b, domain);
    let r = run_flow_transport(&geom, &flow, &params, &pbc, &cbc, t.initial_concentration)?;
    let mut csv = String::from("time,mass,boundary_outflow,fracture_average,newton_iterations\n");
    for s in &r.steps {
        csv += &format!(
            "{:.10e},{:.10e},{:.10e},{:.10e},{}\n",
            s.time,
            s.mass,
            s.boundary_outflow,
            fracture_average(&geom, &s.concentration),
            s.newton_iterations
        );
    }
    out.text("history.csv", &csv)?;
    let last = r.steps.last().expect("at least one step");
    for n in &geom.graph.nodes {
        out.vtk(
            &subdomain_file("transport", &geom, n.id),
            &n.grid,
            n.id,
            &[("pressure", Field::Scalar(&last.pressure[n.id])), ("concentration", Field::Scalar(&last.concentration[n.id]))],
        )?;
    }
    let mut o = Outcome { steps: r.steps.len(), ..Default::default() };
    newton_totals(&r.newton, &mut o);
    o.metric("matrix_cells", geom.graph.nodes[0].grid.num_cells());
    o.metric("initial_mass", r.initial_mass);
    o.metric("final_mass", last.mass);
    o.metric("final_fracture_average", fracture_average(&geom, &last.concentration));
    Ok(o)
}

fn poromech_config(cfg: &RunConfig, net: &FractureNetwork2) -> Result<PoromechConfig> {
    let p = &cfg.poromech;
    let n = net.num_fractures();
    let mut mech = MechanicsParameters::uniform(0, p.lambda, p.shear_modulus);
    mech.biot_alpha = p.biot_alpha;
    mech.storage = p.storage;
    mech.friction = p.friction;
    mech.c_n = p.c_n;
    mech.c_t = p.c_t;
    mech.residual_aperture = p.residual_aperture;
    let schedule = match &p.schedule {
        Some(s) => s.iter().map(|e| ScheduleEntry { start: e.start, rates: e.rates.clone() }).collect(),
        None => {
            let mut inj = vec![0.0; n];
            if let Some(r) = inj.first_mut() {
                *r = 0.05;
            }
            vec![ScheduleEntry { start: 0.0, rates: inj }, ScheduleEntry { start: 2.0, rates: vec![0.0; n] }]
        }
    };
    let c = PoromechConfig {
        fractures: net.fractures.clone(),
        domain: net.domain,
        mesh_size: cfg.mesh.h.unwrap_or(0.06),
        seed: cfg.seed,
        flow: flow_params(cfg, n)?,
        mech,
        background_stress: p.background_stress,
        schedule,
        dt: p.dt,
        end_time: p.end_time,
        newton: NewtonConfig { tol: p.newton_tol, max_iterations: p.max_iterations, patience: p.patience, fd_check: None },
    };
    c.validate()?;
    Ok(c)
}

fn mode_name(m: ContactMode) -> &'static str {
    match m {
        ContactMode::Open => "open",
        ContactMode::Stick => "stick",
        ContactMode::Slip => "slip",
    }
}

fn run_poromech(cfg: &RunConfig, out: &mut Outputs) -> Result<Outcome> {
    let net = network(cfg)?;
    let pc = poromech_config(cfg, &net)?;
    let geom = geometry(cfg, &net, pc.mesh_size)?;
    let r = run_biot_contact_on(geom, &pc)?;
    let nf = r.geom.num_fractures();
    let mut csv =
        String::from("time,fracture,normal_jump,tangential_jump,open,stick,slip,dissipation,fracture_pressure,newton_iterations\n");
    for s in &r.steps {
        for k in 0..nf {
            csv += &format!(
                "{:.10e},{k},{:.10e},{:.10e},{},{},{},{:.10e},{:.10e},{}\n",
                s.time,
                s.normal_jump[k],
                s.tangential_jump[k],
                s.count(k, ContactMode::Open),
                s.count(k, ContactMode::Stick),
                s.count(k, ContactMode::Slip),
                s.dissipation[k],
                s.fracture_pressure[k],
                s.newton_iterations
            );
        }
    }
    out.text("history.csv", &csv)?;
    let last = r.steps.last().expect("at least the initial state");
    let mut csv = String::from("fracture,cell,sn,st,jn,djt,mode\n");
    for k in 0..nf {
        for (c, (pt, m)) in last.contact[k].iter().zip(&last.modes[k]).enumerate() {
            csv += &format!("{k},{c},{:.10e},{:.10e},{:.10e},{:.10e},{}\n", pt.sn, pt.st, pt.jn, pt.djt, mode_name(*m));
        }
    }
    out.text("contact.csv", &csv)?;
    let x = &r.final_state;
    let pairs = |v: &[f64]| v.chunks(2).map(|c| [c[0], c[1]]).collect::<Vec<_>>();
    for n in &r.geom.graph.nodes {
        let e = Entity::Node(n.id);
        let p = r.field(x, e, "p");
        let name = subdomain_file("poromech", &r.geom, n.id);
        if n.id == 0 {
            let u = pairs(r.field(x, e, "u"));
            out.vtk(&name, &n.grid, n.id, &[("pressure", Field::Scalar(p)), ("displacement", Field::Vector(&u))])?;
        } else {
            let t = pairs(r.field(x, e, "traction"));
            out.vtk(&name, &n.grid, n.id, &[("pressure", Field::Scalar(p)), ("traction", Field::Vector(&t))])?;
        }
    }
    let sum = SlipSummary::new(&r);
    let mut o = Outcome { steps: r.steps.len() - 1, ..Default::default() };
    newton_totals(&r.newton, &mut o);
    o.metric("matrix_cells", r.geom.graph.nodes[0].grid.num_cells());
    o.metric("stick_to_slip", sum.stick_to_slip.clone());
    o.metric("peak_normal_jump", sum.peak_normal.clone());
    o.metric("peak_tangential_jump", sum.peak_tangential.clone());
    o.metric("final_normal_jump", sum.final_normal.clone());
    o.metric("final_tangential_jump", sum.final_tangential.clone());
    o.metric("normal_ratio", sum.normal_ratio());
    o.metric("tangential_ratio", sum.tangential_ratio());
    Ok(o)
}

fn sneddon_config(cfg: &RunConfig) -> SneddonConfig {
    let s = &cfg.sneddon;
    SneddonConfig {
        nu: s.nu,
        shear_modulus: s.shear_modulus,
        p0: s.p0,
        length: s.length,
        angle: s.angle,
        center: s.center,
        subdivisions: s.subdivisions,
        ..Default::default()
    }
}

fn run_sneddon_model(cfg: &RunConfig, out: &mut Outputs) -> Result<Outcome> {
    let sc = sneddon_config(cfg);
    let r = run_sneddon(&sc, &mesh_options(cfg, sc.length / 20.0)?)?;
    let mut csv = String::from("distance,normal_jump,exact\n");
    for (d, n, e) in &r.jumps {
        csv += &format!("{d:.10e},{n:.10e},{e:.10e}\n");
    }
    out.text("jumps.csv", &csv)?;
    out.vtk("sneddon_sd0_2d.vtk", &r.grid, 0, &[("displacement", Field::Vector(&r.displacement))])?;
    let mut o = Outcome { steps: 1, ..Default::default() };
    o.metric("matrix_cells", r.matrix_cells);
    o.metric("fracture_cells", r.fracture_cells);
    o.metric("normal_jump_error", r.error);
    Ok(o)
}

fn run_mandel_model(cfg: &RunConfig, out: &mut Outputs) -> Result<Outcome> {
    let m = &cfg.mandel;
    let mc = MandelConfig {
        a: m.a,
        b: m.b,
        force: m.force,
        shear_modulus: m.shear_modulus,
        lambda: m.lambda,
        biot_alpha: m.biot_alpha,
        biot_modulus: m.biot_modulus,
        mobility: m.mobility,
        sample_times: m.sample_times.clone(),
        dt: m.dt,
        mesh_size: cfg.mesh.h.unwrap_or(0.055),
        seed: cfg.seed,
        num_roots: m.num_roots,
    };
    let r = run_mandel(&mc)?;
    out.text("profiles.csv", &r.samples_csv())?;
    let mut csv = String::from("t_star,pressure_error,ux_error\n");
    for s in &r.samples {
        csv += &format!("{},{:.10e},{:.10e}\n", s.t_star, s.pressure_error, s.ux_error);
    }
    out.text("errors.csv", &csv)?;
    let mut csv = String::from("t_star,center_pressure\n");
    for (t, p) in &r.center_history {
        csv += &format!("{t:.10e},{p:.10e}\n");
    }
    out.text("center_history.csv", &csv)?;
    let u: Vec<[f64; 2]> = r.displacement.chunks(2).map(|c| [c[0], c[1]]).collect();
    out.vtk("mandel_sd0_2d.vtk", &r.grid, 0, &[("pressure", Field::Scalar(&r.pressure)), ("displacement", Field::Vector(&u))])?;
    let mut o = Outcome { steps: r.steps, ..Default::default() };
    o.metric("cells", r.cells);
    o.metric("max_pressure_error", r.samples.iter().map(|s| s.pressure_error).fold(0.0, f64::max));
    o.metric("max_ux_error", r.samples.iter().map(|s| s.ux_error).fold(0.0, f64::max));
    Ok(o)
}

fn run_benchmark(cfg: &RunConfig, out: &mut Outputs) -> Result<Outcome> {
    let scheme: Scheme = cfg.flow.scheme.parse()?;
    let h = cfg.mesh.h.unwrap_or(0.025);
    let s = Solved::run(benchmark::geometry(h, cfg.seed)?, scheme)?;
    for n in &s.geom.graph.nodes {
        out.vtk(&subdomain_file("pressure", &s.geom, n.id), &n.grid, n.id, &[("pressure", Field::Scalar(&s.sol.pressure[n.id]))])?;
    }
    let mut csv = String::from("t,pressure\n");
    for (t, p) in s.profile(200) {
        csv += &format!("{t:.6},{p:.10e}\n");
    }
    out.text("profile.csv", &csv)?;
    let res = conservation_residual(&s.sol);
    let mut o = Outcome { steps: 1, final_residual: Some(res), ..Default::default() };
    o.metric("scheme", scheme.name());
    o.metric("matrix_cells", s.matrix_cells());
    o.metric("conservation_residual", res);
    Ok(o)
}

fn rate_metrics(table: &mdfrac_core::models::convergence::ErrorTable, o: &mut Outcome) -> Result<()> {
    for l in table.labels() {
        for (q, name) in table.quantities.iter().enumerate() {
            let r = table.rate(&l, q)?;
            o.metric(&format!("rate_{l}_{name}"), r.map_or(serde_json::Value::Null, Into::into));
        }
    }
    Ok(())
}

fn converge_benchmark(cfg: &RunConfig, out: &mut Outputs) -> Result<Outcome> {
    let st = &cfg.study;
    let d = StudyConfig::default();
    let schemes = match &st.schemes {
        Some(s) => s.iter().map(|x| x.parse()).collect::<Result<Vec<Scheme>>>()?,
        None => d.schemes,
    };
    let sc = StudyConfig {
        levels: st.levels.clone().unwrap_or(d.levels),
        reference_h: st.reference_h.unwrap_or(d.reference_h),
        schemes,
        seed: cfg.seed,
        profile_points: st.profile_points.unwrap_or(d.profile_points),
    };
    let r = run_study(&sc)?;
    out.text("errors.csv", &r.table.to_csv())?;
    out.text("rates.csv", &r.table.rates_csv()?)?;
    out.text("profiles.csv", &r.profiles_csv())?;
    let mut o = Outcome { steps: sc.levels.len() * sc.schemes.len() + 1, ..Default::default() };
    rate_metrics(&r.table, &mut o)?;
    if let (Some(a), Some(b)) = (r.profile("tpfa"), r.profile("mpfa")) {
        o.metric("profile_difference_tpfa_mpfa", profile_difference(a, b));
    }
    o.metric("reference_cells", r.reference_cells);
    Ok(o)
}

fn converge_sneddon(cfg: &RunConfig, out: &mut Outputs) -> Result<Outcome> {
    let st = &cfg.study;
    let d = SneddonStudyConfig::default();
    let sc = SneddonStudyConfig {
        base: sneddon_config(cfg),
        angles: st.angles.clone().unwrap_or(d.angles),
        seeds: st.seeds.clone().unwrap_or(d.seeds),
        fracture_cells: st.fracture_cells.clone().unwrap_or(d.fracture_cells),
        far_field_ratio: st.far_field_ratio.unwrap_or(d.far_field_ratio),
        grading: st.grading.unwrap_or(d.grading),
    };
    let r = run_sneddon_study(&sc)?;
    out.text("errors.csv", &r.table.to_csv())?;
    out.text("rates.csv", &r.table.rates_csv()?)?;
    let mut csv = String::from("angle,seed,level,matrix_cells,fracture_cells,error\n");
    for (a, s, l, run) in &r.runs {
        csv += &format!("{a},{s},{l},{},{},{:.10e}\n", run.matrix_cells, run.fracture_cells, run.error);
    }
    out.text("runs.csv", &csv)?;
    let mut o = Outcome { steps: r.runs.len(), ..Default::default() };
    rate_metrics(&r.table, &mut o)?;
    o.metric("average_rate", r.average_rate()?.map_or(serde_json::Value::Null, Into::into));
    Ok(o)
}
