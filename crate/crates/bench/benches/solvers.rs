//! Criterion benchmarks for the assembly and solver hot paths.

use std::f64::consts::PI;
use std::sync::Arc;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use hodge2d::assembly::assemble_mass;
use hodge2d::problems::{solve_stokes_vvp, solve_vector_laplacian, BcMode};
use hodge2d::{Constraint, Family, FeSpace, Mesh};

fn electric_load(x: f64, y: f64) -> [f64; 2] {
    [
        2.0 * PI * PI * (PI * x).cos() * (PI * y).sin(),
        4.0 * PI * PI * (PI * x).sin() * (PI * y).cos(),
    ]
}

fn stokes_load(x: f64, y: f64) -> [f64; 2] {
    // Any smooth load exercises the same code paths.
    [(PI * x).sin() * (PI * y).cos(), (2.0 * PI * y).sin()]
}

fn bench_assembly(c: &mut Criterion) {
    let mut group = c.benchmark_group("assemble_mass_rt");
    for n in [16usize, 32] {
        let mesh = Arc::new(Mesh::uniform_square(n).unwrap());
        for r in [1usize, 2] {
            let space =
                FeSpace::new(mesh.clone(), Family::RaviartThomas, r, Constraint::None).unwrap();
            group.bench_with_input(BenchmarkId::new(format!("r{}", r), n), &space, |b, sp| {
                b.iter(|| assemble_mass(sp, 2 * r + 4).unwrap())
            });
        }
    }
    group.finish();
}

fn bench_vector_laplacian(c: &mut Criterion) {
    let mut group = c.benchmark_group("solve_vlap_electric_r1");
    group.sample_size(10);
    for n in [16usize, 32] {
        let mesh = Arc::new(Mesh::uniform_square(n).unwrap());
        group.bench_with_input(BenchmarkId::from_parameter(n), &mesh, |b, m| {
            b.iter(|| solve_vector_laplacian(m, 1, BcMode::Electric, &electric_load).unwrap())
        });
    }
    group.finish();
}

fn bench_stokes(c: &mut Criterion) {
    let mut group = c.benchmark_group("solve_stokes_r2");
    group.sample_size(10);
    for n in [16usize, 32] {
        let mesh = Arc::new(Mesh::uniform_square(n).unwrap());
        group.bench_with_input(BenchmarkId::from_parameter(n), &mesh, |b, m| {
            b.iter(|| solve_stokes_vvp(m, 2, &stokes_load).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, bench_assembly, bench_vector_laplacian, bench_stokes);
criterion_main!(benches);
