use carnot_core::graded::from_fn;
use carnot_core::solver::{build_grid, solve_dirichlet, ExponentialSolution};
use carnot_core::CarnotGroup;
use criterion::{BenchmarkId, Criterion};

pub fn bench(c: &mut Criterion) {
    let mut g = c.benchmark_group("solver");
    g.sample_size(10);
    let group = CarnotGroup::heisenberg();
    let u = ExponentialSolution::standard(&group);
    let f = from_fn(|p: &[f64]| u.source(p));
    for n in [17usize, 25, 33] {
        g.bench_with_input(BenchmarkId::new("build_grid_h1", n), &n, |b, &n| {
            b.iter(|| build_grid(&group, &[0.0; 3], 1.0, n).unwrap())
        });
        let problem = build_grid(&group, &[0.0; 3], 1.0, n).unwrap();
        g.bench_with_input(BenchmarkId::new("solve_dirichlet_h1", n), &problem, |b, p| {
            b.iter(|| solve_dirichlet(p, &f, &u).unwrap())
        });
    }
    g.finish();
}
