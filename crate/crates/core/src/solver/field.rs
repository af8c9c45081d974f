use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{CarnotError, Result};
use crate::graded::GroupFunction;
use crate::linalg::SolveMethod;
use crate::poly::GradedPolynomial;

use super::grid::DiscreteProblem;

/// How a solved field was obtained.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveStats {
    pub method: SolveMethod,
    pub iterations: usize,
    pub relative_residual: f64,
}

/// Values at the interior nodes of a problem. Derived fields carry a mask of
/// the nodes where their stencil fit; masked-out values are `NaN`.
#[derive(Clone, Debug)]
pub struct DiscreteField {
    problem: DiscreteProblem,
    values: Vec<f64>,
    valid: Vec<bool>,
    stats: Option<SolveStats>,
}

impl DiscreteField {
    pub fn new(problem: DiscreteProblem, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), problem.interior_count());
        let valid = vec![true; values.len()];
        Self {
            problem,
            values,
            valid,
            stats: None,
        }
    }

    pub(crate) fn with_mask(problem: DiscreteProblem, values: Vec<f64>, valid: Vec<bool>) -> Self {
        assert_eq!(values.len(), problem.interior_count());
        assert_eq!(valid.len(), values.len());
        Self {
            problem,
            values,
            valid,
            stats: None,
        }
    }

    pub(crate) fn with_stats(mut self, stats: SolveStats) -> Self {
        self.stats = Some(stats);
        self
    }

    /// Nodal samples of `f`.
    pub fn from_function<F: GroupFunction + ?Sized>(problem: &DiscreteProblem, f: &F) -> Self {
        let values = (0..problem.interior_count())
            .into_par_iter()
            .map(|i| f.value(&problem.node_point(i)))
            .collect();
        Self::new(problem.clone(), values)
    }

    pub fn problem(&self) -> &DiscreteProblem {
        &self.problem
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn valid(&self) -> &[bool] {
        &self.valid
    }

    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|&&v| v).count()
    }

    pub fn get(&self, i: usize) -> Option<f64> {
        self.valid[i].then(|| self.values[i])
    }

    pub fn stats(&self) -> Option<&SolveStats> {
        self.stats.as_ref()
    }

    /// `max |value|` over valid nodes, optionally restricted by a node predicate.
    pub fn max_abs_where(&self, keep: impl Fn(usize) -> bool) -> f64 {
        (0..self.values.len())
            .filter(|&i| self.valid[i] && keep(i))
            .map(|i| self.values[i].abs())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.max_abs_where(|_| true)
    }

    /// `self - other` on the same grid; valid where both are.
    pub fn difference(&self, other: &DiscreteField) -> Result<DiscreteField> {
        if other.values.len() != self.values.len() {
            return Err(CarnotError::DimensionMismatch {
                expected: self.values.len(),
                got: other.values.len(),
            });
        }
        let valid: Vec<bool> = self.valid.iter().zip(&other.valid).map(|(a, b)| *a && *b).collect();
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .zip(&valid)
            .map(|((a, b), &v)| if v { a - b } else { f64::NAN })
            .collect();
        Ok(Self::with_mask(self.problem.clone(), values, valid))
    }

    fn neighbor(&self, idx: &[usize], offsets: &[(usize, i64)]) -> Option<f64> {
        let mut m: Vec<i64> = idx.iter().map(|&v| v as i64).collect();
        for &(k, o) in offsets {
            m[k] += o;
        }
        let j = self.problem.structure().unknown_at(&m)?;
        self.get(j)
    }

    /// Grid cell containing `p`: lower corner index and fractional offsets.
    fn cell(&self, p: &[f64]) -> Result<(Vec<i64>, Vec<f64>)> {
        let dim = self.problem.group().dimension();
        if p.len() != dim {
            return Err(CarnotError::DimensionMismatch {
                expected: dim,
                got: p.len(),
            });
        }
        let local = self.problem.physical_to_local(p);
        let n = self.problem.n_per_axis();
        let spacing = self.problem.spacing();
        let weights = self.problem.group().weights();
        let mut base = vec![0i64; dim];
        let mut frac = vec![0.0; dim];
        for k in 0..dim {
            let half = self.problem.radius().powi(weights[k] as i32);
            let t = (local[k] + half) / spacing[k];
            if !(t >= -1e-9 && t <= (n - 1) as f64 + 1e-9) {
                return Err(CarnotError::OutsideHull);
            }
            let mut b = t.floor();
            let mut f = t - b;
            if f > 1.0 - 1e-12 {
                b += 1.0;
                f = 0.0;
            } else if f < 1e-12 {
                f = 0.0;
            }
            base[k] = b as i64;
            frac[k] = f;
        }
        Ok((base, frac))
    }

    fn node_value(&self, idx: &[i64]) -> Option<f64> {
        self.problem.structure().unknown_at(idx).and_then(|j| self.get(j))
    }

    /// The value at `p` when `p` is a grid node, up to rounding.
    pub fn node_at(&self, p: &[f64]) -> Option<f64> {
        let (base, frac) = self.cell(p).ok()?;
        if frac.iter().any(|&f| f != 0.0) {
            return None;
        }
        self.node_value(&base)
    }

    /// Multilinear interpolation at the physical point `p`.
    pub fn sample(&self, p: &[f64]) -> Result<f64> {
        let (base, frac) = self.cell(p)?;
        let dim = base.len();
        let mut acc = 0.0;
        let mut idx = vec![0i64; dim];
        for corner in 0..(1u32 << dim) {
            let mut w = 1.0;
            for k in 0..dim {
                let up = corner & (1 << k) != 0;
                w *= if up { frac[k] } else { 1.0 - frac[k] };
                idx[k] = base[k] + i64::from(up);
            }
            if w == 0.0 {
                continue;
            }
            acc += w * self.node_value(&idx).ok_or(CarnotError::OutsideHull)?;
        }
        Ok(acc)
    }

    /// [`sample`](Self::sample) together with the estimate
    /// `Σ_k t_k(1−t_k) h_k² max|D_k² u| / 2` of the interpolation error, with the
    /// second differences taken at the cell corners where they fit.
    pub fn sample_with_error(&self, p: &[f64]) -> Result<(f64, f64)> {
        let value = self.sample(p)?;
        let (base, frac) = self.cell(p)?;
        let dim = base.len();
        let mut err = 0.0;
        let mut idx = vec![0i64; dim];
        for k in 0..dim {
            if frac[k] == 0.0 {
                continue;
            }
            let mut worst = 0.0f64;
            for corner in 0..(1u32 << dim) {
                for m in 0..dim {
                    idx[m] = base[m] + i64::from(corner & (1 << m) != 0);
                }
                let Some(c) = self.node_value(&idx) else { continue };
                idx[k] += 1;
                let up = self.node_value(&idx);
                idx[k] -= 2;
                let down = self.node_value(&idx);
                if let (Some(a), Some(b)) = (up, down) {
                    worst = worst.max((a - 2.0 * c + b).abs());
                }
            }
            err += 0.5 * frac[k] * (1.0 - frac[k]) * worst;
        }
        Ok((value, err))
    }

    /// CSV with one row per valid node: physical coordinates then the value.
    pub fn to_csv(&self) -> String {
        let dim = self.problem.group().dimension();
        let mut s = String::new();
        for k in 0..dim {
            let _ = write!(s, "x{k},");
        }
        s.push_str("value\n");
        for i in 0..self.values.len() {
            if !self.valid[i] {
                continue;
            }
            for c in self.problem.node_point(i).iter() {
                let _ = write!(s, "{c:.17e},");
            }
            let _ = writeln!(s, "{:.17e}", self.values[i]);
        }
        s
    }

    /// Grid metadata as JSON.
    pub fn header_json(&self) -> Result<String> {
        #[derive(Serialize)]
        struct Header<'a> {
            grid: super::grid::GridHeader,
            valid_count: usize,
            stats: Option<&'a SolveStats>,
        }
        Ok(serde_json::to_string_pretty(&Header {
            grid: self.problem.header(),
            valid_count: self.valid_count(),
            stats: self.stats.as_ref(),
        })?)
    }
}

/// Centered first and second coordinate derivatives at node `i`, on the
/// problem's actual spacing. `None` when a needed neighbor is missing.
struct Stencil<'a> {
    field: &'a DiscreteField,
    idx: Vec<usize>,
    spacing: &'a [f64],
    center: f64,
}

impl Stencil<'_> {
    fn d1(&self, k: usize) -> Option<f64> {
        let p = self.field.neighbor(&self.idx, &[(k, 1)])?;
        let m = self.field.neighbor(&self.idx, &[(k, -1)])?;
        Some((p - m) / (2.0 * self.spacing[k]))
    }

    fn d2(&self, k: usize, l: usize) -> Option<f64> {
        if k == l {
            let p = self.field.neighbor(&self.idx, &[(k, 1)])?;
            let m = self.field.neighbor(&self.idx, &[(k, -1)])?;
            return Some((p - 2.0 * self.center + m) / (self.spacing[k] * self.spacing[k]));
        }
        let pp = self.field.neighbor(&self.idx, &[(k, 1), (l, 1)])?;
        let pm = self.field.neighbor(&self.idx, &[(k, 1), (l, -1)])?;
        let mp = self.field.neighbor(&self.idx, &[(k, -1), (l, 1)])?;
        let mm = self.field.neighbor(&self.idx, &[(k, -1), (l, -1)])?;
        Some((pp - pm - mp + mm) / (4.0 * self.spacing[k] * self.spacing[l]))
    }
}

fn map_nodes(field: &DiscreteField, f: impl Fn(&Stencil, &[f64]) -> Option<f64> + Sync) -> DiscreteField {
    let problem = field.problem();
    let spacing = problem.spacing();
    let out: Vec<Option<f64>> = (0..problem.interior_count())
        .into_par_iter()
        .map(|i| {
            let center = field.get(i)?;
            let st = Stencil {
                field,
                idx: problem.structure().grid_index(i),
                spacing: &spacing,
                center,
            };
            f(&st, &problem.node_local(i))
        })
        .collect();
    let valid = out.iter().map(|v| v.is_some()).collect();
    let values = out.into_iter().map(|v| v.unwrap_or(f64::NAN)).collect();
    DiscreteField::with_mask(problem.clone(), values, valid)
}

fn check_index(field: &DiscreteField, i: usize) -> Result<()> {
    let m = field.problem().group().horizontal_dim();
    if i >= m {
        return Err(CarnotError::InvalidParameter(format!(
            "horizontal index {i} out of range (m = {m})"
        )));
    }
    Ok(())
}

/// `X_i u = Σ_k A_ik ∂_k u` with centered differences. Fields are evaluated
/// in local coordinates, which is exact by left invariance.
pub fn horizontal_derivative(field: &DiscreteField, i: usize) -> Result<DiscreteField> {
    check_index(field, i)?;
    let coeffs: Vec<(usize, GradedPolynomial)> = field.problem().group().horizontal_fields()[i]
        .coefficients
        .iter()
        .cloned()
        .enumerate()
        .filter(|(_, c)| !c.is_zero())
        .collect();
    Ok(map_nodes(field, |st, x| {
        let mut acc = 0.0;
        for (k, c) in &coeffs {
            acc += c.eval(x) * st.d1(*k)?;
        }
        Some(acc)
    }))
}

/// `X_i X_j u = Σ_kl A_ik A_jl ∂_k∂_l u + Σ_l X_i(A_jl) ∂_l u`.
pub fn second_derivative(field: &DiscreteField, i: usize, j: usize) -> Result<DiscreteField> {
    check_index(field, i)?;
    check_index(field, j)?;
    let fields = field.problem().group().horizontal_fields();
    let (xi, xj) = (&fields[i], &fields[j]);
    let n = xi.coefficients.len();
    let mut second: Vec<(usize, usize, GradedPolynomial)> = Vec::new();
    for k in 0..n {
        for l in 0..n {
            let c = &xi.coefficients[k] * &xj.coefficients[l];
            if c.is_zero() {
                continue;
            }
            let (a, b) = (k.min(l), k.max(l));
            match second.iter_mut().find(|e| e.0 == a && e.1 == b) {
                Some(e) => e.2 = &e.2 + &c,
                None => second.push((a, b, c)),
            }
        }
    }
    let first: Vec<(usize, GradedPolynomial)> = (0..n)
        .map(|l| (l, xi.apply(&xj.coefficients[l])))
        .filter(|(_, c)| !c.is_zero())
        .collect();
    Ok(map_nodes(field, |st, x| {
        let mut acc = 0.0;
        for (k, l, c) in &second {
            acc += c.eval(x) * st.d2(*k, *l)?;
        }
        for (l, c) in &first {
            acc += c.eval(x) * st.d1(*l)?;
        }
        Some(acc)
    }))
}
