//! Carnot group arithmetic in exponential coordinates of the first kind.
//!
//! [`CarnotGroup`] wraps a validated [`GroupSpec`] together with the
//! precomputed BCH group law and the left-invariant frame. All operations are
//! pure and the type is `Sync`, so one instance can be shared across threads.

mod bch;
mod fields;
mod invariants;
mod spec;

use std::ops::Deref;

use num_rational::Rational64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{CarnotError, Result};
use crate::poly::{Coefficient, Polynomial};

pub use fields::VectorField;
pub use invariants::InvariantReport;
pub use spec::{Bracket, GroupSpec};

/// A group element in exponential coordinates `(z_1, …, z_s)`, flattened.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Point(pub Vec<f64>);

impl Point {
    pub fn origin(dim: usize) -> Self {
        Point(vec![0.0; dim])
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for Point {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for Point {
    fn from(v: Vec<f64>) -> Self {
        Point(v)
    }
}

impl From<&[f64]> for Point {
    fn from(v: &[f64]) -> Self {
        Point(v.to_vec())
    }
}

/// Flat monomial list for fast floating evaluation of a polynomial in `(ξ, η)`.
#[derive(Clone, Debug)]
struct CompiledPoly {
    terms: Vec<(f64, Vec<(usize, u32)>)>,
}

impl CompiledPoly {
    fn new(p: &Polynomial<Rational64>) -> Self {
        let terms = p
            .terms()
            .map(|(e, c)| {
                let factors = e
                    .iter()
                    .enumerate()
                    .filter(|(_, &k)| k > 0)
                    .map(|(i, &k)| (i, k))
                    .collect();
                (c.to_f64(), factors)
            })
            .collect();
        Self { terms }
    }

    #[inline]
    fn eval2(&self, p: &[f64], q: &[f64]) -> f64 {
        let n = p.len();
        let mut acc = 0.0;
        for (c, factors) in &self.terms {
            let mut m = *c;
            for &(i, k) in factors {
                let x = if i < n { p[i] } else { q[i - n] };
                m *= x.powi(k as i32);
            }
            acc += m;
        }
        acc
    }
}

/// A Carnot group ready for computation.
#[derive(Clone, Debug)]
pub struct CarnotGroup {
    spec: GroupSpec,
    weights: Vec<u32>,
    law_exact: Vec<Polynomial<Rational64>>,
    law: Vec<CompiledPoly>,
    fields: Vec<VectorField>,
}

impl CarnotGroup {
    pub fn new(spec: GroupSpec) -> Result<Self> {
        spec.validate()?;
        let dim = spec.dimension();
        if dim > 16 {
            return Err(CarnotError::InvalidSpec(format!(
                "dimension {dim} exceeds the supported maximum of 16"
            )));
        }
        let tensor = spec.rational_structure_tensor()?;
        let law_exact = bch::group_law(&tensor, dim, spec.step);
        let law = law_exact.iter().map(CompiledPoly::new).collect();
        let weights = spec.weights();
        let fields = fields::derive_fields(&spec, &law_exact);
        Ok(Self {
            spec,
            weights,
            law_exact,
            law,
            fields,
        })
    }

    pub fn builtin(name: &str) -> Result<Self> {
        Self::new(GroupSpec::builtin(name)?)
    }

    pub fn heisenberg() -> Self {
        Self::new(GroupSpec::heisenberg()).expect("built-in spec is valid")
    }

    pub fn engel() -> Self {
        Self::new(GroupSpec::engel()).expect("built-in spec is valid")
    }

    pub fn spec(&self) -> &GroupSpec {
        &self.spec
    }

    pub fn dimension(&self) -> usize {
        self.weights.len()
    }

    pub fn step(&self) -> usize {
        self.spec.step
    }

    /// Number of horizontal generators `m_1`.
    pub fn horizontal_dim(&self) -> usize {
        self.spec.horizontal_dim()
    }

    /// Layer of each coordinate; the dilation weight.
    pub fn weights(&self) -> &[u32] {
        &self.weights
    }

    pub fn homogeneous_dimension(&self) -> usize {
        self.spec.homogeneous_dimension()
    }

    /// Group law as exact polynomials in `(ξ, η)`.
    pub fn law_polynomials(&self) -> &[Polynomial<Rational64>] {
        &self.law_exact
    }

    pub fn origin(&self) -> Point {
        Point::origin(self.dimension())
    }

    fn check(&self, p: &[f64]) -> Result<()> {
        if p.len() != self.dimension() {
            return Err(CarnotError::DimensionMismatch {
                expected: self.dimension(),
                got: p.len(),
            });
        }
        Ok(())
    }

    /// `p·q` by the truncated BCH series.
    pub fn multiply(&self, p: &[f64], q: &[f64]) -> Result<Point> {
        self.check(p)?;
        self.check(q)?;
        let mut out = vec![0.0; self.dimension()];
        self.multiply_into(p, q, &mut out);
        Ok(Point(out))
    }

    /// Unchecked product written into `out`; all slices must have length `N`.
    #[inline]
    pub fn multiply_into(&self, p: &[f64], q: &[f64], out: &mut [f64]) {
        for (o, law) in out.iter_mut().zip(&self.law) {
            *o = law.eval2(p, q);
        }
    }

    /// Exact product on rational coordinates.
    pub fn multiply_exact(&self, p: &[Rational64], q: &[Rational64]) -> Result<Vec<Rational64>> {
        let n = self.dimension();
        if p.len() != n || q.len() != n {
            return Err(CarnotError::DimensionMismatch {
                expected: n,
                got: if p.len() != n { p.len() } else { q.len() },
            });
        }
        let x: Vec<Rational64> = p.iter().chain(q).cloned().collect();
        Ok(self.law_exact.iter().map(|l| l.eval(&x)).collect())
    }

    /// `p^{-1} = -p` in exponential coordinates.
    pub fn inverse(&self, p: &[f64]) -> Result<Point> {
        self.check(p)?;
        Ok(Point(p.iter().map(|x| -x).collect()))
    }

    /// `δ_r(z_1, …, z_s) = (r z_1, …, r^s z_s)`.
    pub fn dilate(&self, r: f64, p: &[f64]) -> Result<Point> {
        if !(r > 0.0) || !r.is_finite() {
            return Err(CarnotError::NonPositiveDilation(r));
        }
        self.check(p)?;
        Ok(Point(self.dilate_unchecked(r, p)))
    }

    pub(crate) fn dilate_unchecked(&self, r: f64, p: &[f64]) -> Vec<f64> {
        p.iter()
            .zip(&self.weights)
            .map(|(x, &w)| x * r.powi(w as i32))
            .collect()
    }

    /// `|ξ| = (Σ_j |z_j|^{2s!/j})^{1/(2s!)}`.
    pub fn gauge_norm(&self, p: &[f64]) -> f64 {
        let s = self.spec.step;
        let e = 2.0 * (1..=s).product::<usize>() as f64;
        // |z_j|^{1/j} per layer, then a scaled power mean to avoid under/overflow.
        let mut roots = [0.0f64; 16];
        let mut idx = 0;
        for (l, &m) in self.spec.layer_dims.iter().enumerate() {
            let block = &p[idx..idx + m];
            idx += m;
            let nrm = block.iter().map(|x| x * x).sum::<f64>().sqrt();
            roots[l] = nrm.powf(1.0 / (l + 1) as f64);
        }
        let roots = &roots[..s];
        let mx = roots.iter().cloned().fold(0.0, f64::max);
        if mx == 0.0 {
            return 0.0;
        }
        let sum: f64 = roots.iter().map(|r| (r / mx).powf(e)).sum();
        mx * sum.powf(1.0 / e)
    }

    /// `d(p, q) = |p^{-1} q|`.
    ///
    /// Top-layer rounding is amplified by the `1/s` root in the norm, so
    /// identical points are short-circuited to an exact zero.
    pub fn distance(&self, p: &[f64], q: &[f64]) -> f64 {
        if p == q {
            return 0.0;
        }
        let n = self.dimension();
        let mut buf = [0.0f64; 32];
        let (inv, rest) = buf.split_at_mut(n);
        for (i, x) in inv.iter_mut().zip(p) {
            *i = -x;
        }
        let out = &mut rest[..n];
        self.multiply_into(inv, q, out);
        self.gauge_norm(out)
    }

    /// Left-invariant frame `{X_{l,k}}`; the first `m_1` are horizontal.
    pub fn left_invariant_fields(&self) -> &[VectorField] {
        &self.fields
    }

    pub fn horizontal_fields(&self) -> &[VectorField] {
        &self.fields[..self.horizontal_dim()]
    }

    /// A point with gauge norm one in a uniformly random Euclidean direction.
    pub fn random_unit_point<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        loop {
            let v: Vec<f64> = (0..self.dimension()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let nrm = self.gauge_norm(&v);
            if nrm > 1e-3 {
                return self.dilate_unchecked(1.0 / nrm, &v);
            }
        }
    }

    /// Uniform (Lebesgue) sample from the gauge ball `B_r(0)` by rejection
    /// from the box `|z_l| ≤ r^l`.
    pub fn random_in_ball<R: Rng + ?Sized>(&self, rng: &mut R, r: f64) -> Vec<f64> {
        loop {
            let v: Vec<f64> = self
                .weights
                .iter()
                .map(|&w| r.powi(w as i32) * rng.gen_range(-1.0..1.0))
                .collect();
            if self.gauge_norm(&v) < r {
                return v;
            }
        }
    }

    /// A random point of `B_r(center)`: uniform in the ball since left
    /// translation preserves Lebesgue measure.
    pub fn random_in_ball_at<R: Rng + ?Sized>(&self, rng: &mut R, center: &[f64], r: f64) -> Vec<f64> {
        let v = self.random_in_ball(rng, r);
        let mut out = vec![0.0; self.dimension()];
        self.multiply_into(center, &v, &mut out);
        out
    }

    /// Empirical quasi-triangle constant `max d(p,w) / (d(p,q) + d(q,w))`
    /// over `trials` random triples in `B_1(0)`.
    pub fn quasi_triangle_constant<R: Rng + ?Sized>(&self, rng: &mut R, trials: usize) -> f64 {
        let mut c = 0.0f64;
        for _ in 0..trials {
            let p = self.random_in_ball(rng, 1.0);
            let q = self.random_in_ball(rng, 1.0);
            let w = self.random_in_ball(rng, 1.0);
            let denom = self.distance(&p, &q) + self.distance(&q, &w);
            if denom > 0.0 {
                c = c.max(self.distance(&p, &w) / denom);
            }
        }
        c
    }
}
