//! Measured constants for the classical inequalities on gauge balls.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{CarnotError, Result};
use crate::graded::{sublaplacian_apply, word_derivative, DerivativeWord, GroupFunction};
use crate::group::CarnotGroup;

use super::field::DiscreteField;
use super::grid::DiscreteProblem;

/// Deterministic point cloud over a closed gauge ball.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BallSampling {
    /// Random unit directions; the `2N` coordinate directions are always added.
    pub directions: usize,
    /// Radii `r·j/shells` for `j = 0..=shells`.
    pub shells: usize,
    pub seed: u64,
}

impl Default for BallSampling {
    fn default() -> Self {
        Self {
            directions: 64,
            shells: 8,
            seed: 42,
        }
    }
}

impl BallSampling {
    /// Points `center · δ_ρ(ω)` with `ρ ≤ r` and `|ω| = 1`.
    pub fn points(&self, group: &CarnotGroup, center: &[f64], r: f64) -> Vec<Vec<f64>> {
        let dim = group.dimension();
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut dirs: Vec<Vec<f64>> = (0..dim)
            .flat_map(|k| {
                [1.0, -1.0].into_iter().map(move |s| {
                    let mut e = vec![0.0; dim];
                    e[k] = s;
                    e
                })
            })
            .collect();
        dirs.extend((0..self.directions).map(|_| group.random_unit_point(&mut rng)));
        let shells = self.shells.max(1);
        let mut out = vec![center.to_vec()];
        let mut buf = vec![0.0; dim];
        for j in 1..=shells {
            let rho = r * j as f64 / shells as f64;
            for d in &dirs {
                group.multiply_into(center, &group.dilate_unchecked(rho, d), &mut buf);
                out.push(buf.clone());
            }
        }
        out
    }
}

/// `|X f| = (Σ_i (X_i f)²)^{1/2}`.
pub fn horizontal_gradient_norm<F: GroupFunction + ?Sized>(group: &CarnotGroup, f: &F, p: &[f64]) -> Result<f64> {
    let mut s = 0.0;
    for i in 0..group.horizontal_dim() {
        let d = word_derivative(group, f, p, &DerivativeWord(vec![i]))?;
        s += d * d;
    }
    Ok(s.sqrt())
}

/// `‖f‖_{p*} / ‖X f‖_p` with `p* = pQ/(Q−p)`, by midpoint quadrature over the
/// cells of the problem's bounding box. `f` should vanish outside the ball.
pub fn sobolev_ratio<F: GroupFunction + ?Sized>(problem: &DiscreteProblem, f: &F, p: f64) -> Result<f64> {
    let group = problem.group();
    let q = group.homogeneous_dimension() as f64;
    if !(p > 1.0 && p < q) {
        return Err(CarnotError::InvalidParameter(format!("need 1 < p < Q = {q}, got {p}")));
    }
    let p_star = p * q / (q - p);
    let dim = group.dimension();
    let n = problem.n_per_axis();
    let cells = n - 1;
    let spacing = problem.spacing();
    let lower: Vec<f64> = group
        .weights()
        .iter()
        .map(|&w| -problem.radius().powi(w as i32))
        .collect();
    let total = cells.pow(dim as u32);
    let sums = (0..total)
        .into_par_iter()
        .map(|flat| -> Result<(f64, f64)> {
            let mut rem = flat;
            let mut local = vec![0.0; dim];
            for k in (0..dim).rev() {
                local[k] = lower[k] + ((rem % cells) as f64 + 0.5) * spacing[k];
                rem /= cells;
            }
            let x = problem.to_physical(&local);
            let v = f.value(&x);
            let grad = horizontal_gradient_norm(group, f, &x)?;
            Ok((v.abs().powf(p_star), grad.powf(p)))
        })
        .collect::<Result<Vec<_>>>()?;
    let vol = problem.cell_volume();
    let (a, b) = sums.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
    let num = (a * vol).powf(1.0 / p_star);
    let den = (b * vol).powf(1.0 / p);
    if den == 0.0 {
        return Err(CarnotError::ZeroGradient("‖Xf‖_p vanishes".into()));
    }
    Ok(num / den)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaxPrincipleReport {
    pub sup_u: f64,
    pub sup_g: f64,
    pub sup_f: f64,
    pub volume: f64,
    pub homogeneous_dimension: usize,
    /// `sup|u| − sup|g|`.
    pub lhs: f64,
    /// `‖f‖_∞ |Ω|^{2/Q} 2^{(Q+2)/4}`.
    pub rhs: f64,
    /// `max(lhs, 0) / rhs`; zero when `rhs` vanishes and `lhs` is at noise level.
    pub ratio: f64,
}

/// Implied constant of the maximum principle for a solved problem.
pub fn max_principle_check<F, G>(problem: &DiscreteProblem, u: &DiscreteField, f: &F, g: &G) -> MaxPrincipleReport
where
    F: GroupFunction + ?Sized,
    G: GroupFunction + ?Sized,
{
    let q = problem.group().homogeneous_dimension();
    let sup_u = u.max_abs();
    let sup_g = problem
        .crossing_points()
        .iter()
        .map(|p| g.value(p).abs())
        .fold(0.0, f64::max);
    let sup_f = problem
        .node_points()
        .iter()
        .map(|p| f.value(p).abs())
        .fold(0.0, f64::max);
    let volume = problem.volume();
    let qf = q as f64;
    let rhs = sup_f * volume.powf(2.0 / qf) * 2f64.powf((qf + 2.0) / 4.0);
    let lhs = sup_u - sup_g;
    let excess = lhs.max(0.0);
    let ratio = if rhs > 0.0 {
        excess / rhs
    } else if excess <= 1e-8 * (1.0 + sup_g) {
        0.0
    } else {
        f64::INFINITY
    };
    MaxPrincipleReport {
        sup_u,
        sup_g,
        sup_f,
        volume,
        homogeneous_dimension: q,
        lhs,
        rhs,
        ratio,
    }
}

fn sublaplacian_value<F: GroupFunction + ?Sized>(group: &CarnotGroup, u: &F, p: &[f64]) -> Result<f64> {
    if let Some(poly) = u.polynomial() {
        return Ok(sublaplacian_apply(group, poly).eval(p));
    }
    let mut s = 0.0;
    for i in 0..group.horizontal_dim() {
        s += word_derivative(group, u, p, &DerivativeWord(vec![i, i]))?;
    }
    Ok(s)
}

/// `sup_{B_{r/2}(ξ)} |X^I u| · r^{|I|} / sup_{B_r(ξ)} |u|` for an `L`-harmonic `u`.
///
/// Harmonicity is checked on the same sample cloud; a residual above
/// `1e-6 · sup|u| / r²` (symbolic) or `1e-3 · sup|u| / r²` (numeric) is an error.
pub fn harmonic_derivative_bound<F: GroupFunction + ?Sized>(
    group: &CarnotGroup,
    u: &F,
    xi: &[f64],
    r: f64,
    word: &DerivativeWord,
    sampling: &BallSampling,
) -> Result<f64> {
    if !(r > 0.0) {
        return Err(CarnotError::InvalidParameter(format!(
            "radius must be positive, got {r}"
        )));
    }
    let outer = sampling.points(group, xi, r);
    let sup_u = outer.iter().map(|p| u.value(p).abs()).fold(0.0, f64::max);
    let tol = if u.polynomial().is_some() { 1e-6 } else { 1e-3 } * sup_u.max(f64::MIN_POSITIVE) / (r * r);
    let mut residual = 0.0f64;
    for p in &outer {
        residual = residual.max(sublaplacian_value(group, u, p)?.abs());
    }
    if residual > tol {
        return Err(CarnotError::NotHarmonic { residual });
    }
    let inner = sampling.points(group, xi, r / 2.0);
    let mut sup_d = 0.0f64;
    for p in &inner {
        sup_d = sup_d.max(word_derivative(group, u, p, word)?.abs());
    }
    if sup_u == 0.0 {
        return Ok(0.0);
    }
    Ok(sup_d * r.powi(word.weighted_order(group) as i32) / sup_u)
}

/// `|f(ξη) − f(ξ)| / (|η| · sup_{B_{b|η|}(ξ)} |Xf|)`.
pub fn mean_value_check<F: GroupFunction + ?Sized>(
    group: &CarnotGroup,
    f: &F,
    xi: &[f64],
    eta: &[f64],
    b: f64,
    sampling: &BallSampling,
) -> Result<f64> {
    if !(b >= 1.0) {
        return Err(CarnotError::InvalidParameter(format!("b must be at least 1, got {b}")));
    }
    let xe = group.multiply(xi, eta)?;
    let num = (f.value(&xe) - f.value(xi)).abs();
    let norm = group.gauge_norm(eta);
    if norm == 0.0 {
        return Ok(0.0);
    }
    let mut sup = 0.0f64;
    for p in sampling.points(group, xi, b * norm) {
        sup = sup.max(horizontal_gradient_norm(group, f, &p)?);
    }
    if sup == 0.0 {
        if num <= 1e-12 * (1.0 + f.value(xi).abs()) {
            return Ok(0.0);
        }
        return Err(CarnotError::MeanValueViolation { numerator: num });
    }
    Ok(num / (norm * sup))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graded::from_fn;
    use crate::poly::GradedPolynomial;
    use crate::solver::{build_grid, solve_dirichlet};

    fn var(i: usize) -> GradedPolynomial {
        GradedPolynomial::var(3, i)
    }

    #[test]
    fn harmonic_bound_examples() {
        let g = CarnotGroup::heisenberg();
        let s = BallSampling::default();
        let r = harmonic_derivative_bound(&g, &var(0), &[0.0; 3], 1.0, &DerivativeWord(vec![0]), &s).unwrap();
        assert!((r - 1.0).abs() < 1e-12, "{r}");
        let c = GradedPolynomial::constant(3, 2.0);
        assert_eq!(
            harmonic_derivative_bound(&g, &c, &[0.1, 0.0, 0.0], 1.0, &DerivativeWord(vec![1]), &s).unwrap(),
            0.0
        );
        let xy = &var(0) * &var(1);
        let w = DerivativeWord(vec![0, 1]);
        let a = harmonic_derivative_bound(&g, &xy, &[0.0; 3], 1.0, &w, &s).unwrap();
        let b = harmonic_derivative_bound(&g, &xy, &[0.0; 3], 2.0, &w, &s).unwrap();
        assert!(a.is_finite() && (a - b).abs() < 1e-12 * a, "{a} vs {b}");
        let x2 = &var(0) * &var(0);
        assert!(matches!(
            harmonic_derivative_bound(&g, &x2, &[0.0; 3], 1.0, &w, &s),
            Err(CarnotError::NotHarmonic { .. })
        ));
    }

    #[test]
    fn mean_value_examples() {
        let g = CarnotGroup::heisenberg();
        let s = BallSampling::default();
        let xi = [0.2, -0.3, 0.1];
        let eta = [0.05, 0.1, -0.02];
        let r = mean_value_check(&g, &var(0), &xi, &eta, 1.0, &s).unwrap();
        assert!(r <= 1.0 + 1e-12);
        let c = GradedPolynomial::constant(3, 1.0);
        assert_eq!(mean_value_check(&g, &c, &xi, &eta, 1.0, &s).unwrap(), 0.0);
        // Flat everywhere it is sampled, yet the endpoints differ.
        let step = from_fn(|p: &[f64]| if p[2] > 0.05 { 1.0 } else { 0.0 });
        let sparse = BallSampling {
            directions: 0,
            shells: 1,
            seed: 1,
        };
        assert!(matches!(
            mean_value_check(&g, &step, &[0.0; 3], &[0.0, 0.0, 0.09], 1.0, &sparse),
            Err(CarnotError::MeanValueViolation { .. })
        ));
    }

    #[test]
    fn sobolev_ratio_is_amplitude_invariant() {
        let g = CarnotGroup::heisenberg();
        let p = build_grid(&g, &[0.0; 3], 1.0, 17).unwrap();
        let gg = g.clone();
        let bump = from_fn(move |x: &[f64]| (1.0 - gg.gauge_norm(x).powi(4)).max(0.0).powi(2));
        let gg = g.clone();
        let bump3 = from_fn(move |x: &[f64]| 3.0 * (1.0 - gg.gauge_norm(x).powi(4)).max(0.0).powi(2));
        let a = sobolev_ratio(&p, &bump, 2.0).unwrap();
        let b = sobolev_ratio(&p, &bump3, 2.0).unwrap();
        assert!(a.is_finite() && a > 0.0);
        assert!((a - b).abs() < 1e-9 * a);
        assert!(sobolev_ratio(&p, &bump, 4.0).is_err());
        assert!(matches!(
            sobolev_ratio(&p, &GradedPolynomial::constant(3, 1.0), 2.0),
            Err(CarnotError::ZeroGradient(_))
        ));
    }

    #[test]
    fn max_principle_examples() {
        let g = CarnotGroup::heisenberg();
        let p = build_grid(&g, &[0.0; 3], 1.0, 17).unwrap();
        let zero = from_fn(|_: &[f64]| 0.0);
        let bdry = from_fn(|x: &[f64]| x[0]);
        let u = solve_dirichlet(&p, &zero, &bdry).unwrap();
        let rep = max_principle_check(&p, &u, &zero, &bdry);
        assert_eq!(rep.ratio, 0.0);
        let one = from_fn(|_: &[f64]| 1.0);
        let u = solve_dirichlet(&p, &one, &zero).unwrap();
        let rep = max_principle_check(&p, &u, &one, &zero);
        assert!(rep.ratio > 0.0 && rep.ratio.is_finite());
        let shifted = from_fn(|_: &[f64]| 0.5);
        let u2 = solve_dirichlet(&p, &one, &shifted).unwrap();
        assert!(u2.max_abs() <= u.max_abs() + 0.5 + 1e-8);
    }
}
