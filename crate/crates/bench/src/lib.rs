//! Shared fixtures for the criterion benches.

use carnot_core::{CarnotGroup, Point};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// `count` points of `B_1(0)`, fixed by `seed`.
pub fn ball_points(group: &CarnotGroup, count: usize, seed: u64) -> Vec<Point> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| Point(group.random_in_ball(&mut rng, 1.0))).collect()
}

pub fn builtin_groups() -> [(&'static str, CarnotGroup); 2] {
    [("h1", CarnotGroup::heisenberg()), ("engel", CarnotGroup::engel())]
}
