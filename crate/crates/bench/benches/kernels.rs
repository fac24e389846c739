use criterion::{black_box, criterion_group, criterion_main, Criterion};
use mdfrac_core::assembly::contact::{ncp, ContactParams, ContactPoint};
use mdfrac_core::discretize::mpfa::mpfa_tensor;
use mdfrac_core::discretize::mpsa::mpsa;
use mdfrac_core::discretize::params::isotropic;
use mdfrac_core::discretize::tpfa::tpfa_tensor;
use mdfrac_core::discretize::{BcKind, BoundaryCondition, MechanicsParameters, VectorBc};
use mdfrac_core::mesh::mesher::{triangulate_with, MeshOptions};
use mdfrac_core::models::benchmark;
use mdfrac_core::models::flow::{run_flow, Scheme};
use mdfrac_core::{process_network, MeshSizeParams};

fn meshing(c: &mut Criterion) {
    let pnet = process_network(&benchmark::network()).unwrap();
    let opts = MeshOptions::new(MeshSizeParams::uniform(0.025));
    c.bench_function("triangulate benchmark network h=0.025", |b| b.iter(|| triangulate_with(black_box(&pnet), &opts).unwrap()));
}

fn discretization(c: &mut Criterion) {
    let geom = benchmark::geometry(0.025, 0).unwrap();
    let g = &geom.md.matrix;
    let k = vec![isotropic(1.0); g.num_cells()];
    let bc = BoundaryCondition::all(g, BcKind::Dirichlet);
    c.bench_function("tpfa matrix grid", |b| b.iter(|| tpfa_tensor(black_box(g), &k, &bc).unwrap()));
    c.bench_function("mpfa matrix grid", |b| b.iter(|| mpfa_tensor(black_box(g), &k, &bc).unwrap()));
    let mech = MechanicsParameters::uniform(g.num_cells(), 1.0, 1.0);
    let vbc = VectorBc::all(g, BcKind::Dirichlet);
    c.bench_function("mpsa matrix grid", |b| b.iter(|| mpsa(black_box(g), &mech, &vbc).unwrap()));
}

fn flow_solve(c: &mut Criterion) {
    let geom = benchmark::geometry(0.025, 0).unwrap();
    let mut group = c.benchmark_group("benchmark flow solve h=0.025");
    group.sample_size(20);
    for s in [Scheme::Tpfa, Scheme::Mpfa] {
        let p = benchmark::params(s);
        group.bench_function(s.name(), |b| b.iter(|| run_flow(black_box(&geom), &p, &benchmark::boundary).unwrap()));
    }
    group.finish();
}

fn contact(c: &mut Criterion) {
    let p = ContactParams { friction: 0.5, c_n: 1.0, c_t: 1.0 };
    let pts: Vec<ContactPoint> = (0..1000)
        .map(|i| {
            let t = i as f64 * 0.37;
            ContactPoint { sn: t.sin() - 0.2, st: t.cos(), jn: (2.0 * t).sin() * 0.1, djt: (3.0 * t).cos() * 0.1 }
        })
        .collect();
    c.bench_function("ncp 1000 points", |b| b.iter(|| pts.iter().map(|x| black_box(ncp(black_box(x), &p)).value[0]).sum::<f64>()));
}

criterion_group!(benches, meshing, discretization, flow_solve, contact);
criterion_main!(benches);
