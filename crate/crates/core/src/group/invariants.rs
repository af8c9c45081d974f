use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::CarnotGroup;

/// Largest violation of each group identity over random samples in `B_1(0)`.
/// Coordinate identities use absolute error; norm identities are relative.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InvariantReport {
    pub trials: usize,
    pub seed: u64,
    /// `(pq)w` against `p(qw)`
    pub associativity: f64,
    /// `p p^{-1}` and `p^{-1} p` against the origin
    pub inverse: f64,
    /// `δ_r(pq)` against `δ_r(p) δ_r(q)`
    pub dilation_homomorphism: f64,
    /// `|δ_r p|` against `r |p|`
    pub norm_homogeneity: f64,
    /// `d(wp, wq)` against `d(p, q)`
    pub left_invariance: f64,
}

impl InvariantReport {
    pub fn max_error(&self) -> f64 {
        self.associativity
            .max(self.inverse)
            .max(self.dilation_homomorphism)
            .max(self.norm_homogeneity)
            .max(self.left_invariance)
    }

    pub fn rows(&self) -> [(&'static str, f64); 5] {
        [
            ("associativity", self.associativity),
            ("inverse", self.inverse),
            ("dilation_homomorphism", self.dilation_homomorphism),
            ("norm_homogeneity", self.norm_homogeneity),
            ("left_invariance", self.left_invariance),
        ]
    }
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

impl CarnotGroup {
    pub fn invariant_suite(&self, trials: usize, seed: u64) -> InvariantReport {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = self.dimension();
        let mut r = InvariantReport {
            trials,
            seed,
            associativity: 0.0,
            inverse: 0.0,
            dilation_homomorphism: 0.0,
            norm_homogeneity: 0.0,
            left_invariance: 0.0,
        };
        let mut a = vec![0.0; n];
        let mut b = vec![0.0; n];
        let mut c = vec![0.0; n];
        for _ in 0..trials {
            let p = self.random_in_ball(&mut rng, 1.0);
            let q = self.random_in_ball(&mut rng, 1.0);
            let w = self.random_in_ball(&mut rng, 1.0);
            let s: f64 = rng.gen_range(0.1..4.0);

            self.multiply_into(&p, &q, &mut a);
            self.multiply_into(&a, &w, &mut b);
            self.multiply_into(&q, &w, &mut a);
            self.multiply_into(&p, &a, &mut c);
            r.associativity = r.associativity.max(max_diff(&b, &c));

            let inv: Vec<f64> = p.iter().map(|x| -x).collect();
            self.multiply_into(&p, &inv, &mut a);
            self.multiply_into(&inv, &p, &mut b);
            r.inverse = r.inverse.max(a.iter().chain(&b).fold(0.0, |m, x| m.max(x.abs())));

            self.multiply_into(&p, &q, &mut a);
            let lhs = self.dilate_unchecked(s, &a);
            self.multiply_into(&self.dilate_unchecked(s, &p), &self.dilate_unchecked(s, &q), &mut b);
            let scale = lhs.iter().fold(1.0f64, |m, x| m.max(x.abs()));
            r.dilation_homomorphism = r.dilation_homomorphism.max(max_diff(&lhs, &b) / scale);

            let np = self.gauge_norm(&p);
            if np > 0.0 {
                let rel = (self.gauge_norm(&self.dilate_unchecked(s, &p)) - s * np).abs() / (s * np);
                r.norm_homogeneity = r.norm_homogeneity.max(rel);
            }

            let dpq = self.distance(&p, &q);
            self.multiply_into(&w, &p, &mut a);
            self.multiply_into(&w, &q, &mut b);
            if dpq > 0.0 {
                r.left_invariance = r.left_invariance.max((self.distance(&a, &b) - dpq).abs() / dpq);
            }
        }
        r
    }
}
