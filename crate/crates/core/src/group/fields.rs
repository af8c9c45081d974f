use num_rational::Rational64;

use crate::group::GroupSpec;
use crate::poly::{Coefficient, GradedPolynomial, Polynomial};

/// Left-invariant vector field `X = Σ_k a_k(ξ) ∂_k` with polynomial coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField {
    /// Flattened basis index this field represents.
    pub index: usize,
    /// Layer (1-based) of that basis element.
    pub layer: u32,
    /// One coefficient per coordinate direction.
    pub coefficients: Vec<GradedPolynomial>,
}

impl VectorField {
    pub fn is_horizontal(&self) -> bool {
        self.layer == 1
    }

    /// Coefficients evaluated at `p`.
    pub fn eval_coefficients(&self, p: &[f64]) -> Vec<f64> {
        self.coefficients.iter().map(|c| c.eval(p)).collect()
    }

    /// `X P = Σ_k a_k ∂_k P`, exactly.
    pub fn apply(&self, p: &GradedPolynomial) -> GradedPolynomial {
        let mut out = GradedPolynomial::zero(p.nvars());
        for (k, a) in self.coefficients.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            let d = p.derivative(k);
            if !d.is_zero() {
                out = &out + &(a * &d);
            }
        }
        out
    }

    /// Coefficients of the commutator field `[self, other]`.
    pub fn commutator(&self, other: &VectorField) -> Vec<GradedPolynomial> {
        self.coefficients
            .iter()
            .zip(&other.coefficients)
            .map(|(a, b)| &self.apply(b) - &other.apply(a))
            .collect()
    }
}

/// Differentiates `η ↦ ξ·η` at `η = 0`: the coefficient of `∂_k` in `X_c` is
/// `∂ law_k / ∂η_c |_{η=0}`.
pub(crate) fn derive_fields(spec: &GroupSpec, law: &[Polynomial<Rational64>]) -> Vec<VectorField> {
    let n = spec.dimension();
    let weights = spec.weights();
    (0..n)
        .map(|c| {
            let coefficients = law
                .iter()
                .map(|lk| {
                    lk.derivative(n + c)
                        .vanish_vars(n..2 * n)
                        .restrict_vars(n)
                        .map_coefficients(|q| q.to_f64())
                })
                .collect();
            VectorField {
                index: c,
                layer: weights[c],
                coefficients,
            }
        })
        .collect()
}
