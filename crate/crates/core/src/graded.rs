//! Derivative words, the sub-Laplacian on polynomials, and stratified Taylor
//! polynomials.
//!
//! A word `I = (c_1, …, c_k)` denotes the operator `X^I = X_{c_1} X_{c_2} ⋯ X_{c_k}`,
//! so `X_{c_k}` acts first. Taylor polynomials are obtained by matching
//! `X^I P(0) = X^I f(ξ·)(0)` over PBW-ordered words (letters nondecreasing in
//! the flattened basis order, i.e. by layer then index), which gives a square
//! system in the monomials of homogeneous degree at most `n`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{CarnotError, Result};
use crate::fit::fit_exponent;
use crate::group::{CarnotGroup, Point, VectorField};
use crate::linalg::DenseLu;
use crate::poly::{monomials_up_to, GradedPolynomial, Polynomial};

/// A scalar function on the group, optionally with an exact polynomial form.
pub trait GroupFunction: Send + Sync {
    fn value(&self, p: &[f64]) -> f64;

    /// Exact form, when available; enables symbolic derivatives.
    fn polynomial(&self) -> Option<&GradedPolynomial> {
        None
    }
}

impl GroupFunction for GradedPolynomial {
    fn value(&self, p: &[f64]) -> f64 {
        self.eval(p)
    }
    fn polynomial(&self) -> Option<&GradedPolynomial> {
        Some(self)
    }
}

impl<T: GroupFunction + ?Sized> GroupFunction for &T {
    fn value(&self, p: &[f64]) -> f64 {
        (**self).value(p)
    }
    fn polynomial(&self) -> Option<&GradedPolynomial> {
        (**self).polynomial()
    }
}

impl<T: GroupFunction + ?Sized> GroupFunction for Box<T> {
    fn value(&self, p: &[f64]) -> f64 {
        (**self).value(p)
    }
    fn polynomial(&self) -> Option<&GradedPolynomial> {
        (**self).polynomial()
    }
}

impl<T: GroupFunction + ?Sized> GroupFunction for std::sync::Arc<T> {
    fn value(&self, p: &[f64]) -> f64 {
        (**self).value(p)
    }
    fn polynomial(&self) -> Option<&GradedPolynomial> {
        (**self).polynomial()
    }
}

/// Wraps a closure as a [`GroupFunction`].
#[derive(Clone, Copy)]
pub struct FnHandle<F>(pub F);

impl<F: Fn(&[f64]) -> f64 + Send + Sync> GroupFunction for FnHandle<F> {
    fn value(&self, p: &[f64]) -> f64 {
        (self.0)(p)
    }
}

pub fn from_fn<F: Fn(&[f64]) -> f64 + Send + Sync>(f: F) -> FnHandle<F> {
    FnHandle(f)
}

/// Ordered product of basis fields, identified by flattened basis index.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DerivativeWord(pub Vec<usize>);

impl DerivativeWord {
    pub fn empty() -> Self {
        Self(Vec::new())
    }

    pub fn letters(&self) -> &[usize] {
        &self.0
    }

    /// `|I| = Σ layer(letter)`.
    pub fn weighted_order(&self, group: &CarnotGroup) -> u32 {
        self.0.iter().map(|&c| group.weights()[c]).sum()
    }

    fn check(&self, group: &CarnotGroup) -> Result<()> {
        if let Some(&c) = self.0.iter().find(|&&c| c >= group.dimension()) {
            return Err(CarnotError::InvalidParameter(format!(
                "word letter {c} out of range for dimension {}",
                group.dimension()
            )));
        }
        Ok(())
    }
}

/// `V P`, exactly.
pub fn apply_field(field: &VectorField, p: &GradedPolynomial) -> GradedPolynomial {
    field.apply(p)
}

/// `X^I P = X_{c_1}(X_{c_2}(⋯ X_{c_k}(P)))`.
pub fn apply_word(group: &CarnotGroup, word: &DerivativeWord, p: &GradedPolynomial) -> Result<GradedPolynomial> {
    word.check(group)?;
    let fields = group.left_invariant_fields();
    let mut out = p.clone();
    for &c in word.0.iter().rev() {
        if out.is_zero() {
            break;
        }
        out = fields[c].apply(&out);
    }
    Ok(out)
}

/// `L P = Σ_i X_i² P` over the horizontal generators.
pub fn sublaplacian_apply(group: &CarnotGroup, p: &GradedPolynomial) -> GradedPolynomial {
    let mut out = GradedPolynomial::zero(p.nvars());
    for f in group.horizontal_fields() {
        out = &out + &f.apply(&f.apply(p));
    }
    out
}

/// PBW-ordered words (nondecreasing letters) of weighted order at most `n`,
/// grouped by length.
pub fn pbw_words(group: &CarnotGroup, n: u32) -> Vec<DerivativeWord> {
    fn rec(w: &[u32], start: usize, budget: u32, cur: &mut Vec<usize>, out: &mut Vec<DerivativeWord>) {
        out.push(DerivativeWord(cur.clone()));
        for c in start..w.len() {
            if w[c] <= budget {
                cur.push(c);
                rec(w, c, budget - w[c], cur, out);
                cur.pop();
            }
        }
    }
    let mut out = Vec::new();
    rec(group.weights(), 0, n, &mut Vec::new(), &mut out);
    out
}

/// `X^I f(ξ)` by nested centered differences of
/// `t ↦ f(ξ · t_1 e_{c_1} ⋯ t_k e_{c_k})`, step `ε^{1/(k+2)}`.
pub fn word_derivative_numeric<F: GroupFunction + ?Sized>(
    group: &CarnotGroup,
    f: &F,
    xi: &[f64],
    word: &DerivativeWord,
) -> Result<f64> {
    word.check(group)?;
    let k = word.0.len();
    if k == 0 {
        let v = f.value(xi);
        return finite(v);
    }
    let h = f64::EPSILON.powf(1.0 / (k as f64 + 2.0));
    let n = group.dimension();
    let mut acc = 0.0;
    let mut cur = vec![0.0; n];
    let mut next = vec![0.0; n];
    let mut step = vec![0.0; n];
    for mask in 0..(1u32 << k) {
        cur.copy_from_slice(xi);
        let mut sign = 1.0;
        for (bit, &c) in word.0.iter().enumerate() {
            let s = if mask & (1 << bit) != 0 { -1.0 } else { 1.0 };
            sign *= s;
            step.iter_mut().for_each(|x| *x = 0.0);
            step[c] = s * h;
            group.multiply_into(&cur, &step, &mut next);
            std::mem::swap(&mut cur, &mut next);
        }
        acc += sign * finite(f.value(&cur))?;
    }
    Ok(acc / (2.0 * h).powi(k as i32))
}

fn finite(v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(CarnotError::DerivativeEstimation(format!("function returned {v}")))
    }
}

/// `X^I f(ξ)`: symbolic when `f` is a polynomial, numeric otherwise.
pub fn word_derivative<F: GroupFunction + ?Sized>(
    group: &CarnotGroup,
    f: &F,
    xi: &[f64],
    word: &DerivativeWord,
) -> Result<f64> {
    match f.polynomial() {
        Some(p) => Ok(apply_word(group, word, p)?.eval(xi)),
        None => word_derivative_numeric(group, f, xi, word),
    }
}

/// Stratified Taylor polynomial `P_n(f, ξ)` stored in translated coordinates:
/// `P_n(f, ξ)(η) = local(ξ^{-1} η)`.
#[derive(Clone, Debug, PartialEq)]
pub struct TaylorPolynomial {
    pub center: Point,
    pub degree: u32,
    pub local: GradedPolynomial,
}

impl TaylorPolynomial {
    pub fn eval(&self, group: &CarnotGroup, eta: &[f64]) -> f64 {
        let n = group.dimension();
        let inv: Vec<f64> = self.center.iter().map(|x| -x).collect();
        let mut loc = vec![0.0; n];
        group.multiply_into(&inv, eta, &mut loc);
        self.local.eval(&loc)
    }

    /// The same polynomial expanded in the ambient coordinates `η`.
    pub fn global(&self, group: &CarnotGroup) -> GradedPolynomial {
        let n = group.dimension();
        let subs: Vec<GradedPolynomial> = group
            .law_polynomials()
            .iter()
            .map(|lk| {
                let lk = lk.map_coefficients(crate::poly::Coefficient::to_f64);
                let consts: Vec<GradedPolynomial> = (0..2 * n)
                    .map(|i| {
                        if i < n {
                            Polynomial::constant(n, -self.center[i])
                        } else {
                            Polynomial::var(n, i - n)
                        }
                    })
                    .collect();
                lk.compose(&consts)
            })
            .collect();
        self.local.compose(&subs)
    }
}

/// `P_n(f, ξ)`: the unique polynomial of homogeneous degree at most `n` with
/// `X^I P(ξ) = X^I f(ξ)` for all PBW words `|I| ≤ n`.
pub fn taylor_poly<F: GroupFunction + ?Sized>(
    group: &CarnotGroup,
    f: &F,
    xi: &[f64],
    n: u32,
) -> Result<TaylorPolynomial> {
    let dim = group.dimension();
    if xi.len() != dim {
        return Err(CarnotError::DimensionMismatch {
            expected: dim,
            got: xi.len(),
        });
    }
    let weights = group.weights();
    let monomials = monomials_up_to(weights, n);
    let words = pbw_words(group, n);
    if words.len() != monomials.len() {
        return Err(CarnotError::SingularSystem {
            pivot: words.len().min(monomials.len()),
        });
    }
    let m = monomials.len();
    let origin = vec![0.0; dim];
    let mut a = vec![0.0; m * m];
    for (i, w) in words.iter().enumerate() {
        for (j, e) in monomials.iter().enumerate() {
            let mono = GradedPolynomial::monomial(dim, e.clone(), 1.0);
            a[i * m + j] = apply_word(group, w, &mono)?.eval(&origin);
        }
    }
    let b = words
        .iter()
        .map(|w| word_derivative(group, f, xi, w))
        .collect::<Result<Vec<f64>>>()?;
    let lu = DenseLu::new(m, a, 1e-12)?;
    let coef = lu.solve(&b);
    let scale = coef.iter().fold(1.0f64, |s, c| s.max(c.abs()));
    let local = GradedPolynomial::from_terms(
        dim,
        monomials.into_iter().zip(coef).filter(|(_, c)| c.abs() > 1e-13 * scale),
    );
    Ok(TaylorPolynomial {
        center: Point(xi.to_vec()),
        degree: n,
        local,
    })
}

/// Outcome of [`remainder_slope`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum RemainderSlope {
    /// The remainder is below floating noise at every radius.
    Exact,
    Slope {
        slope: f64,
        r2: f64,
    },
}

/// Log-log slope of `sup_{d(ξ,η)=r} |f(η) − P_n(f,ξ)(η)|` against `r`.
pub fn remainder_slope<F: GroupFunction + ?Sized>(
    group: &CarnotGroup,
    f: &F,
    xi: &[f64],
    n: u32,
    radii: &[f64],
    samples_per_radius: usize,
    seed: u64,
) -> Result<RemainderSlope> {
    if radii.windows(2).any(|w| w[1] >= w[0]) || radii.iter().any(|&r| r <= 0.0) {
        return Err(CarnotError::InvalidParameter(
            "radii must be positive and strictly decreasing".into(),
        ));
    }
    let taylor = taylor_poly(group, f, xi, n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dirs: Vec<Vec<f64>> = (0..samples_per_radius.max(1))
        .map(|_| group.random_unit_point(&mut rng))
        .chain((0..group.dimension()).flat_map(|k| {
            [1.0, -1.0].into_iter().map(move |s| {
                let mut e = vec![0.0; group.dimension()];
                e[k] = s;
                e
            })
        }))
        .collect();
    let noise = 1e-12 * (1.0 + f.value(xi).abs());
    let mut pts = Vec::new();
    let mut eta = vec![0.0; group.dimension()];
    for &r in radii {
        let mut sup = 0.0f64;
        for d in &dirs {
            let step = group.dilate_unchecked(r, d);
            group.multiply_into(xi, &step, &mut eta);
            sup = sup.max((f.value(&eta) - taylor.eval(group, &eta)).abs());
        }
        if sup > noise {
            pts.push((r, sup));
        }
    }
    if pts.is_empty() {
        return Ok(RemainderSlope::Exact);
    }
    let fit = fit_exponent(&pts, true)?;
    Ok(RemainderSlope::Slope {
        slope: fit.slope,
        r2: fit.r2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn h1() -> CarnotGroup {
        CarnotGroup::heisenberg()
    }

    fn mono(e: &[u32], c: f64) -> GradedPolynomial {
        GradedPolynomial::monomial(e.len(), e.to_vec(), c)
    }

    #[test]
    fn apply_field_examples() {
        let g = h1();
        let x = &g.left_invariant_fields()[0];
        assert_eq!(apply_field(x, &mono(&[2, 0, 0], 0.5)), mono(&[1, 0, 0], 1.0));
        assert_eq!(apply_field(x, &mono(&[0, 0, 1], 1.0)), mono(&[0, 1, 0], -0.5));
        for f in g.left_invariant_fields() {
            assert!(apply_field(f, &mono(&[0, 0, 0], 7.0)).is_zero());
        }
    }

    #[test]
    fn apply_word_examples() {
        let g = h1();
        let p = mono(&[2, 0, 0], 0.5);
        assert_eq!(apply_word(&g, &DerivativeWord::empty(), &p).unwrap(), p);
        assert_eq!(
            apply_word(&g, &DerivativeWord(vec![0, 0]), &p).unwrap(),
            mono(&[0, 0, 0], 1.0)
        );
        let xy = mono(&[1, 1, 0], 1.0);
        assert_eq!(
            apply_word(&g, &DerivativeWord(vec![0, 1]), &xy).unwrap(),
            mono(&[0, 0, 0], 1.0)
        );
        assert_eq!(
            apply_word(&g, &DerivativeWord(vec![1, 0]), &xy).unwrap(),
            mono(&[0, 0, 0], 1.0)
        );
        // XY - YX = T detects t.
        let t = mono(&[0, 0, 1], 1.0);
        let xy_t = apply_word(&g, &DerivativeWord(vec![0, 1]), &t).unwrap();
        let yx_t = apply_word(&g, &DerivativeWord(vec![1, 0]), &t).unwrap();
        assert_eq!(&xy_t - &yx_t, mono(&[0, 0, 0], 1.0));
        assert!(apply_word(&g, &DerivativeWord(vec![5]), &t).is_err());
    }

    #[test]
    fn sublaplacian_examples() {
        let g = h1();
        assert_eq!(sublaplacian_apply(&g, &mono(&[2, 0, 0], 0.5)), mono(&[0, 0, 0], 1.0));
        assert!(sublaplacian_apply(&g, &mono(&[1, 0, 0], 1.0)).is_zero());
        assert!(sublaplacian_apply(&g, &mono(&[1, 1, 0], 1.0)).is_zero());
        assert!(sublaplacian_apply(&g, &mono(&[0, 0, 1], 1.0)).is_zero());
    }

    #[test]
    fn degree_bookkeeping_on_all_monomials() {
        for g in [h1(), CarnotGroup::engel()] {
            let w = g.weights().to_vec();
            for e in monomials_up_to(&w, 5) {
                let p = GradedPolynomial::monomial(w.len(), e.clone(), 1.0);
                let deg = p.homogeneous_degree(&w).unwrap();
                for f in g.left_invariant_fields() {
                    let q = f.apply(&p);
                    assert!(q.is_homogeneous(&w));
                    if let Some(d) = q.homogeneous_degree(&w) {
                        assert_eq!(d + f.layer, deg, "{e:?} field {}", f.index);
                    }
                }
            }
        }
    }

    #[test]
    fn pbw_words_match_monomial_count() {
        for g in [h1(), CarnotGroup::engel()] {
            for n in 0..=4 {
                assert_eq!(pbw_words(&g, n).len(), monomials_up_to(g.weights(), n).len());
            }
        }
    }

    #[test]
    fn taylor_examples() {
        let g = h1();
        let o = [0.0; 3];
        let x2 = mono(&[2, 0, 0], 1.0);
        let t = taylor_poly(&g, &x2, &o, 2).unwrap();
        assert!(t.local.max_coefficient_distance(&x2) < 1e-14);
        let tt = mono(&[0, 0, 1], 1.0);
        assert!(taylor_poly(&g, &tt, &o, 1).unwrap().local.is_zero());
        let e = from_fn(|p: &[f64]| p[0].exp());
        let t = taylor_poly(&g, &e, &o, 2).unwrap();
        let want = GradedPolynomial::from_terms(3, [(vec![0, 0, 0], 1.0), (vec![1, 0, 0], 1.0), (vec![2, 0, 0], 0.5)]);
        assert!(t.local.max_coefficient_distance(&want) < 1e-6, "{}", t.local);
    }

    #[test]
    fn translated_taylor_matches_derivatives_at_center() {
        let g = h1();
        let xi = [0.3, -0.2, 0.1];
        let p = GradedPolynomial::from_terms(3, [(vec![3, 0, 0], 1.0), (vec![1, 0, 1], 2.0), (vec![0, 2, 0], -1.0)]);
        let t = taylor_poly(&g, &p, &xi, 3).unwrap();
        let global = t.global(&g);
        // A cubic is its own third-order Taylor polynomial at any point.
        assert!(global.max_coefficient_distance(&p) < 1e-12, "{global}");
        let eta = [0.1, 0.4, -0.3];
        assert!((t.eval(&g, &eta) - p.eval(&eta)).abs() < 1e-12);
    }

    #[test]
    fn remainder_slope_examples() {
        let g = h1();
        let o = [0.0; 3];
        let radii = [0.4, 0.2, 0.1, 0.05, 0.025];
        let p = GradedPolynomial::from_terms(3, [(vec![1, 1, 0], 1.0), (vec![0, 0, 1], 3.0)]);
        assert_eq!(
            remainder_slope(&g, &p, &o, 2, &radii, 64, 1).unwrap(),
            RemainderSlope::Exact
        );
        let e = from_fn(|p: &[f64]| p[0].exp());
        match remainder_slope(&g, &e, &o, 2, &radii, 64, 1).unwrap() {
            RemainderSlope::Slope { slope, .. } => assert!(slope >= 2.8, "{slope}"),
            RemainderSlope::Exact => panic!("exp is not a polynomial"),
        }
        let t2 = mono(&[0, 0, 2], 1.0);
        match remainder_slope(&g, &t2, &o, 2, &radii, 64, 1).unwrap() {
            RemainderSlope::Slope { slope, .. } => assert!((slope - 4.0).abs() < 0.05, "{slope}"),
            RemainderSlope::Exact => panic!(),
        }
        assert!(remainder_slope(&g, &t2, &o, 2, &[0.1, 0.2], 8, 1).is_err());
    }

    #[test]
    fn numeric_word_derivatives_agree_with_symbolic() {
        let g = CarnotGroup::engel();
        let p = GradedPolynomial::from_terms(
            4,
            [
                (vec![2, 1, 0, 0], 1.0),
                (vec![0, 0, 1, 0], -2.0),
                (vec![1, 0, 0, 1], 0.5),
            ],
        );
        let f = from_fn(|x: &[f64]| p.eval(x));
        let xi = [0.2, -0.1, 0.3, 0.05];
        for w in pbw_words(&g, 3) {
            if w.0.len() > 3 {
                continue;
            }
            let s = word_derivative(&g, &p, &xi, &w).unwrap();
            let n = word_derivative_numeric(&g, &f, &xi, &w).unwrap();
            assert!((s - n).abs() < 1e-5, "{w:?}: {s} vs {n}");
        }
    }
}
