//! Sparse multivariate polynomials over a generic coefficient ring.
//!
//! The same container backs the exact (rational) group law and the
//! floating-point graded polynomials used for vector fields and Taylor
//! expansions. Terms are kept in a `BTreeMap` keyed by exponent vectors so
//! that iteration order, and therefore every derived computation, is
//! deterministic.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_rational::Rational64;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{CarnotError, Result};

/// Coefficient ring for [`Polynomial`].
pub trait Coefficient:
    Clone
    + PartialEq
    + fmt::Debug
    + Zero
    + One
    + Neg<Output = Self>
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Send
    + Sync
{
    fn from_ratio(num: i64, den: i64) -> Self;
    fn to_f64(&self) -> f64;
}

impl Coefficient for f64 {
    fn from_ratio(num: i64, den: i64) -> Self {
        num as f64 / den as f64
    }
    fn to_f64(&self) -> f64 {
        *self
    }
}

impl Coefficient for Rational64 {
    fn from_ratio(num: i64, den: i64) -> Self {
        Rational64::new(num, den)
    }
    fn to_f64(&self) -> f64 {
        *self.numer() as f64 / *self.denom() as f64
    }
}

/// Sparse polynomial in `nvars` variables. Zero coefficients are never stored.
#[derive(Clone, Debug, PartialEq)]
pub struct Polynomial<T = f64> {
    nvars: usize,
    terms: BTreeMap<Vec<u32>, T>,
}

/// Floating-point polynomial in exponential coordinates; its homogeneous
/// degree is measured against the layer weights of a group.
pub type GradedPolynomial = Polynomial<f64>;

impl<T: Coefficient> Polynomial<T> {
    pub fn zero(nvars: usize) -> Self {
        Self {
            nvars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(nvars: usize, c: T) -> Self {
        Self::monomial(nvars, vec![0; nvars], c)
    }

    /// The coordinate function `x_i`.
    pub fn var(nvars: usize, i: usize) -> Self {
        let mut e = vec![0; nvars];
        e[i] = 1;
        Self::monomial(nvars, e, T::one())
    }

    pub fn monomial(nvars: usize, exponents: Vec<u32>, c: T) -> Self {
        assert_eq!(exponents.len(), nvars, "exponent vector length");
        let mut p = Self::zero(nvars);
        p.add_term(exponents, c);
        p
    }

    pub fn from_terms(nvars: usize, terms: impl IntoIterator<Item = (Vec<u32>, T)>) -> Self {
        let mut p = Self::zero(nvars);
        for (e, c) in terms {
            assert_eq!(e.len(), nvars, "exponent vector length");
            p.add_term(e, c);
        }
        p
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<u32>, &T)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, exponents: &[u32]) -> T {
        self.terms.get(exponents).cloned().unwrap_or_else(T::zero)
    }

    /// Adds `c * x^exponents`, dropping the entry if it cancels.
    pub fn add_term(&mut self, exponents: Vec<u32>, c: T) {
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&exponents) {
            Some(v) => {
                let s = v.clone() + c;
                if s.is_zero() {
                    self.terms.remove(&exponents);
                } else {
                    *v = s;
                }
            }
            None => {
                self.terms.insert(exponents, c);
            }
        }
    }

    pub fn scale(&self, c: &T) -> Self {
        if c.is_zero() {
            return Self::zero(self.nvars);
        }
        Self::from_terms(
            self.nvars,
            self.terms.iter().map(|(e, v)| (e.clone(), v.clone() * c.clone())),
        )
    }

    /// Partial derivative with respect to variable `i`.
    pub fn derivative(&self, i: usize) -> Self {
        let mut out = Self::zero(self.nvars);
        for (e, c) in &self.terms {
            let k = e[i];
            if k == 0 {
                continue;
            }
            let mut e2 = e.clone();
            e2[i] -= 1;
            out.add_term(e2, c.clone() * T::from_ratio(k as i64, 1));
        }
        out
    }

    /// Sets the variables in `range` to zero.
    pub fn vanish_vars(&self, range: std::ops::Range<usize>) -> Self {
        Self::from_terms(
            self.nvars,
            self.terms
                .iter()
                .filter(|(e, _)| e[range.clone()].iter().all(|&k| k == 0))
                .map(|(e, c)| (e.clone(), c.clone())),
        )
    }

    /// Keeps only the first `n` variables; every term must be free of the rest.
    pub fn restrict_vars(&self, n: usize) -> Self {
        Self::from_terms(
            n,
            self.terms.iter().map(|(e, c)| {
                debug_assert!(e[n..].iter().all(|&k| k == 0));
                (e[..n].to_vec(), c.clone())
            }),
        )
    }

    pub fn map_coefficients<U: Coefficient>(&self, f: impl Fn(&T) -> U) -> Polynomial<U> {
        Polynomial::from_terms(self.nvars, self.terms.iter().map(|(e, c)| (e.clone(), f(c))))
    }

    pub fn eval(&self, x: &[T]) -> T {
        assert_eq!(x.len(), self.nvars, "evaluation point length");
        let mut acc = T::zero();
        for (e, c) in &self.terms {
            let mut m = c.clone();
            for (xi, &k) in x.iter().zip(e) {
                for _ in 0..k {
                    m = m * xi.clone();
                }
            }
            acc = acc + m;
        }
        acc
    }

    /// Weighted degree `Σ w_i e_i` of each term; `None` for the zero polynomial.
    pub fn homogeneous_degree(&self, weights: &[u32]) -> Option<u32> {
        self.terms.keys().map(|e| weighted_degree(e, weights)).max()
    }

    pub fn is_homogeneous(&self, weights: &[u32]) -> bool {
        let mut degs = self.terms.keys().map(|e| weighted_degree(e, weights));
        match degs.next() {
            None => true,
            Some(d) => degs.all(|x| x == d),
        }
    }

    /// The part of weighted degree at most `max_degree`.
    pub fn truncate_degree(&self, weights: &[u32], max_degree: u32) -> Self {
        Self::from_terms(
            self.nvars,
            self.terms
                .iter()
                .filter(|(e, _)| weighted_degree(e, weights) <= max_degree)
                .map(|(e, c)| (e.clone(), c.clone())),
        )
    }

    /// Substitutes polynomial `subs[i]` for variable `i`.
    pub fn compose(&self, subs: &[Polynomial<T>]) -> Polynomial<T> {
        assert_eq!(subs.len(), self.nvars);
        let target = subs.first().map_or(0, |p| p.nvars);
        let mut out = Polynomial::zero(target);
        for (e, c) in &self.terms {
            let mut m = Polynomial::constant(target, c.clone());
            for (s, &k) in subs.iter().zip(e) {
                for _ in 0..k {
                    m = &m * s;
                }
            }
            out = &out + &m;
        }
        out
    }
}

impl Polynomial<f64> {
    /// Largest absolute coefficient.
    pub fn max_abs_coefficient(&self) -> f64 {
        self.terms.values().fold(0.0, |m, c| m.max(c.abs()))
    }

    /// Drops coefficients with magnitude at most `tol`.
    pub fn prune(&self, tol: f64) -> Self {
        Self::from_terms(
            self.nvars,
            self.terms
                .iter()
                .filter(|(_, c)| c.abs() > tol)
                .map(|(e, c)| (e.clone(), *c)),
        )
    }

    /// Maximum coefficient difference; both operands must share `nvars`.
    pub fn max_coefficient_distance(&self, other: &Self) -> f64 {
        (self - other).max_abs_coefficient()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

pub fn weighted_degree(exponents: &[u32], weights: &[u32]) -> u32 {
    exponents.iter().zip(weights).map(|(e, w)| e * w).sum()
}

/// All exponent vectors with weighted degree at most `max_degree`, in
/// lexicographic order.
pub fn monomials_up_to(weights: &[u32], max_degree: u32) -> Vec<Vec<u32>> {
    fn rec(weights: &[u32], budget: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if cur.len() == weights.len() {
            out.push(cur.clone());
            return;
        }
        let w = weights[cur.len()];
        let mut k = 0;
        while k * w <= budget {
            cur.push(k);
            rec(weights, budget - k * w, cur, out);
            cur.pop();
            k += 1;
        }
    }
    let mut out = Vec::new();
    rec(weights, max_degree, &mut Vec::new(), &mut out);
    out
}

impl<'a, T: Coefficient> Add<&'a Polynomial<T>> for &'a Polynomial<T> {
    type Output = Polynomial<T>;
    fn add(self, rhs: &Polynomial<T>) -> Polynomial<T> {
        assert_eq!(self.nvars, rhs.nvars, "polynomial arity");
        let mut out = self.clone();
        for (e, c) in &rhs.terms {
            out.add_term(e.clone(), c.clone());
        }
        out
    }
}

impl<'a, T: Coefficient> Sub<&'a Polynomial<T>> for &'a Polynomial<T> {
    type Output = Polynomial<T>;
    fn sub(self, rhs: &Polynomial<T>) -> Polynomial<T> {
        assert_eq!(self.nvars, rhs.nvars, "polynomial arity");
        let mut out = self.clone();
        for (e, c) in &rhs.terms {
            out.add_term(e.clone(), -c.clone());
        }
        out
    }
}

impl<'a, T: Coefficient> Mul<&'a Polynomial<T>> for &'a Polynomial<T> {
    type Output = Polynomial<T>;
    fn mul(self, rhs: &Polynomial<T>) -> Polynomial<T> {
        assert_eq!(self.nvars, rhs.nvars, "polynomial arity");
        let mut out = Polynomial::zero(self.nvars);
        for (e1, c1) in &self.terms {
            for (e2, c2) in &rhs.terms {
                let e: Vec<u32> = e1.iter().zip(e2).map(|(a, b)| a + b).collect();
                out.add_term(e, c1.clone() * c2.clone());
            }
        }
        out
    }
}

impl<T: Coefficient> Neg for &Polynomial<T> {
    type Output = Polynomial<T>;
    fn neg(self) -> Polynomial<T> {
        self.scale(&-T::one())
    }
}

impl<T: Coefficient + fmt::Display> fmt::Display for Polynomial<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (n, (e, c)) in self.terms.iter().enumerate() {
            if n > 0 {
                write!(f, " + ")?;
            }
            write!(f, "{c}")?;
            for (i, &k) in e.iter().enumerate() {
                match k {
                    0 => {}
                    1 => write!(f, "*x{i}")?,
                    _ => write!(f, "*x{i}^{k}")?,
                }
            }
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct TermRepr {
    exponents: Vec<u32>,
    coef: f64,
}

#[derive(Serialize, Deserialize)]
struct PolyRepr {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    nvars: Option<usize>,
    terms: Vec<TermRepr>,
}

impl Serialize for Polynomial<f64> {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        PolyRepr {
            nvars: Some(self.nvars),
            terms: self
                .terms
                .iter()
                .map(|(e, c)| TermRepr {
                    exponents: e.clone(),
                    coef: *c,
                })
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Polynomial<f64> {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error;
        let repr = PolyRepr::deserialize(d)?;
        let nvars = repr
            .nvars
            .or_else(|| repr.terms.first().map(|t| t.exponents.len()))
            .unwrap_or(0);
        let mut p = Polynomial::zero(nvars);
        for t in repr.terms {
            if t.exponents.len() != nvars {
                return Err(D::Error::custom(format!(
                    "term has {} exponents, expected {nvars}",
                    t.exponents.len()
                )));
            }
            if !t.coef.is_finite() {
                return Err(D::Error::custom("non-finite coefficient"));
            }
            p.add_term(t.exponents, t.coef);
        }
        Ok(p)
    }
}

/// Checks that `p` has the arity expected by a group of dimension `n`.
pub fn check_arity<T: Coefficient>(p: &Polynomial<T>, n: usize) -> Result<()> {
    if p.nvars() != n {
        return Err(CarnotError::DimensionMismatch {
            expected: n,
            got: p.nvars(),
        });
    }
    Ok(())
}
