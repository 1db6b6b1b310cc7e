use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use qscatter::config::{Mode, RunConfig};
use qscatter::entanglement::{reduce, von_neumann_entropy};
use qscatter::solver2d::{init_slater, Propagator2D};
use qscatter::units::Grid2D;
use qscatter::Execution;

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn setup(n: usize) -> (RunConfig, Grid2D) {
    let cfg = RunConfig::load(Mode::Pair2d, None, &[format!("grid.n={n}")]).unwrap();
    let grid = Grid2D::new(cfg.grid);
    (cfg, grid)
}

fn step(c: &mut Criterion) {
    let mut group = c.benchmark_group("strang_step");
    group.sample_size(10);
    for n in [256, 512] {
        let (cfg, grid) = setup(n);
        let psi0 = init_slater(&grid, &cfg.pair.left(), &cfg.pair.right(), &cfg.coulomb, &cfg.units, 1.0).unwrap();
        for (name, exec) in MODES {
            let mut prop = Propagator2D::new(&grid, cfg.units, cfg.stencil, cfg.dt, cfg.aligned_pulse(), cfg.coulomb, exec).unwrap();
            let mut psi = psi0.clone();
            group.bench_with_input(BenchmarkId::new(name, n), &n, |b, _| b.iter(|| prop.step(&mut psi)));
        }
    }
    group.finish();
}

fn entropy(c: &mut Criterion) {
    let mut group = c.benchmark_group("reduce_and_entropy");
    group.sample_size(10);
    let (cfg, grid) = setup(512);
    let psi = init_slater(&grid, &cfg.pair.left(), &cfg.pair.right(), &cfg.coulomb, &cfg.units, 1.0).unwrap();
    for (name, exec) in MODES {
        group.bench_function(name, |b| {
            b.iter(|| von_neumann_entropy(&reduce(&psi, exec), exec).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, step, entropy);
criterion_main!(benches);
