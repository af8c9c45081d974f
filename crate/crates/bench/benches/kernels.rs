mod solver;

use criterion::{criterion_group, criterion_main};

criterion_group!(benches, group::bench, taylor::bench, solver::bench);
criterion_main!(benches);
