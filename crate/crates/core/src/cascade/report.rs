use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{CarnotError, Result};
use crate::group::CarnotGroup;
use crate::linalg::SolveMethod;
use crate::modulus::{schauder_rhs, AnalyticModulus, Modulus};

use super::config::{config_solution, CascadeConfig, Manufactured};
use super::engine::{base_problem, solve_level, w_stats, Level, Reference};

/// `num / bound`, with `0/0` read as zero up to `null_tol`.
fn ratio(num: f64, bound: f64, null_tol: f64) -> f64 {
    if bound > 0.0 {
        num / bound
    } else if num <= null_tol {
        0.0
    } else {
        f64::INFINITY
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelRecord {
    pub k: usize,
    pub radius: f64,
    /// `f` at the ball center, the frozen right-hand side.
    pub frozen_rhs: f64,
    pub sup_v: f64,
    /// `ρ^{2k} ω(ρ^k)`
    pub bound_v: f64,
    pub ratio_v: f64,
    /// Sups over `B_{k+2}`; absent on the last level.
    pub sup_w: Option<f64>,
    pub sup_xw: Option<f64>,
    pub sup_xxw: Option<f64>,
    /// `ρ^k ω(ρ^k)`
    pub bound_xw: f64,
    /// `ω(ρ^k)`
    pub bound_xxw: f64,
    pub ratio_xw: Option<f64>,
    pub ratio_xxw: Option<f64>,
    pub w_nodes: usize,
    pub w_masked_nodes: usize,
    /// `X_i X_j u_k` at the ball center.
    pub second_at_center: Vec<Vec<f64>>,
    pub boundary_interpolation_error: f64,
    pub v_interpolation_error: f64,
    pub method: SolveMethod,
    pub iterations: usize,
    pub relative_residual: f64,
}

/// `u'_k` against `u_k` at `ξ0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TranslatedRecord {
    pub k: usize,
    /// `max_ij |X_iX_j u'_k(ξ0) − X_iX_j u_k(ξ0)|`; absent when `ξ0` is outside
    /// the derivative mask of level `k`.
    pub difference: Option<f64>,
    /// The same after removing `½(f(ξ0) − f(0)) x_1²`, whose only nonzero
    /// second derivative is `X_1X_1 = f(ξ0) − f(0)`.
    pub corrected_difference: Option<f64>,
    pub ratio: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CascadeReport {
    pub config: CascadeConfig,
    pub center: Vec<f64>,
    pub modulus: AnalyticModulus,
    pub levels: Vec<LevelRecord>,
    /// `X_i X_j u` at the center, from the reference.
    pub reference_second_at_center: Vec<Vec<f64>>,
    pub translated: Vec<TranslatedRecord>,
}

impl CascadeReport {
    /// One row per level.
    pub fn to_csv(&self) -> String {
        let mut s = String::from(
            "k,radius,sup_v,bound_v,ratio_v,sup_w,sup_xw,sup_xxw,bound_xw,bound_xxw,ratio_xw,ratio_xxw,w_nodes,w_masked_nodes,iterations,relative_residual\n",
        );
        let opt = |v: Option<f64>| v.map_or(String::new(), |x| format!("{x:.17e}"));
        for l in &self.levels {
            let _ = writeln!(
                s,
                "{},{:.17e},{:.17e},{:.17e},{:.17e},{},{},{},{:.17e},{:.17e},{},{},{},{},{},{:.17e}",
                l.k,
                l.radius,
                l.sup_v,
                l.bound_v,
                l.ratio_v,
                opt(l.sup_w),
                opt(l.sup_xw),
                opt(l.sup_xxw),
                l.bound_xw,
                l.bound_xxw,
                opt(l.ratio_xw),
                opt(l.ratio_xxw),
                l.w_nodes,
                l.w_masked_nodes,
                l.iterations,
                l.relative_residual
            );
        }
        s
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// `(min, max)` of a ratio sequence over levels `0..=k_max`.
    pub fn ratio_range(&self, pick: impl Fn(&LevelRecord) -> Option<f64>) -> Option<(f64, f64)> {
        let vals: Vec<f64> = self
            .levels
            .iter()
            .filter(|l| l.k <= self.config.k_max)
            .filter_map(&pick)
            .collect();
        if vals.is_empty() {
            return None;
        }
        Some((
            vals.iter().cloned().fold(f64::INFINITY, f64::min),
            vals.iter().cloned().fold(0.0, f64::max),
        ))
    }
}

pub(crate) struct Session<'a> {
    pub config: &'a CascadeConfig,
    pub group: CarnotGroup,
    pub base: crate::solver::DiscreteProblem,
    pub reference: Reference<'a>,
}

impl<'a> Session<'a> {
    pub(crate) fn new(config: &'a CascadeConfig, solution: &'a dyn Manufactured) -> Result<Self> {
        let group = CarnotGroup::new(config.group.clone())?;
        config.validate(&group)?;
        let base = base_problem(&group, config)?;
        let reference = Reference::build(config, &base, solution)?;
        Ok(Self {
            config,
            group,
            base,
            reference,
        })
    }

    pub(crate) fn level(&self, center: &[f64], k: usize) -> Result<Level> {
        solve_level(self.config, &self.base, &self.reference, center, k)
    }

    /// Levels `0..=k_max + 1` around `center`.
    pub(crate) fn levels(&self, center: &[f64]) -> Result<Vec<Level>> {
        (0..=self.config.k_max + 1)
            .into_par_iter()
            .map(|k| self.level(center, k))
            .collect()
    }

    pub(crate) fn reference_hessian(&self, p: &[f64]) -> Result<Vec<Vec<f64>>> {
        let m = self.group.horizontal_dim();
        (0..m)
            .map(|i| (0..m).map(|j| self.reference.second(i, j, p)).collect())
            .collect()
    }

    fn records(&self, levels: &[Level]) -> Result<Vec<LevelRecord>> {
        let c = self.config;
        let omega = self.reference.modulus();
        let mut out = Vec::with_capacity(levels.len());
        for (idx, l) in levels.iter().enumerate() {
            let r = c.rho.powi(l.k as i32);
            let w = omega.omega(r);
            let (bound_v, bound_xw, bound_xxw) = (r * r * w, r * w, w);
            let ws = levels.get(idx + 1).map(|fine| w_stats(c, l, fine));
            out.push(LevelRecord {
                k: l.k,
                radius: r,
                frozen_rhs: l.frozen_rhs,
                sup_v: l.sup_v,
                bound_v,
                ratio_v: ratio(l.sup_v, bound_v, c.null_tol),
                sup_w: ws.map(|s| s.sup_w),
                sup_xw: ws.map(|s| s.sup_xw),
                sup_xxw: ws.map(|s| s.sup_xxw),
                bound_xw,
                bound_xxw,
                ratio_xw: ws.map(|s| ratio(s.sup_xw, bound_xw, c.null_tol)),
                ratio_xxw: ws.map(|s| ratio(s.sup_xxw, bound_xxw, c.null_tol)),
                w_nodes: ws.map_or(0, |s| s.nodes),
                w_masked_nodes: ws.map_or(0, |s| s.masked),
                second_at_center: l.hessian_at(l.problem.center())?,
                boundary_interpolation_error: l.boundary_interpolation_error,
                v_interpolation_error: l.v_interpolation_error,
                method: l.stats.method,
                iterations: l.stats.iterations,
                relative_residual: l.stats.relative_residual,
            });
        }
        Ok(out)
    }

    pub(crate) fn report(&self, center: &[f64], levels: &[Level]) -> Result<CascadeReport> {
        Ok(CascadeReport {
            config: self.config.clone(),
            center: center.to_vec(),
            modulus: self.reference.modulus(),
            levels: self.records(levels)?,
            reference_second_at_center: self.reference_hessian(center)?,
            translated: Vec::new(),
        })
    }
}

/// Frozen-coefficient cascade around the origin.
pub fn run_cascade(config: &CascadeConfig) -> Result<CascadeReport> {
    let solution = config_solution(config)?;
    run_cascade_with(config, &solution)
}

pub fn run_cascade_with(config: &CascadeConfig, solution: &dyn Manufactured) -> Result<CascadeReport> {
    let session = Session::new(config, solution)?;
    let origin = vec![0.0; session.group.dimension()];
    let levels = session.levels(&origin)?;
    session.report(&origin, &levels)
}

/// Cascade around `config.xi0`, compared level by level with the one around the origin.
pub fn translated_cascade(config: &CascadeConfig) -> Result<CascadeReport> {
    let solution = config_solution(config)?;
    translated_cascade_with(config, &solution)
}

pub fn translated_cascade_with(config: &CascadeConfig, solution: &dyn Manufactured) -> Result<CascadeReport> {
    let session = Session::new(config, solution)?;
    let origin = vec![0.0; session.group.dimension()];
    let xi0 = config.xi0.clone();
    let moved = session.levels(&xi0)?;
    let mut report = session.report(&xi0, &moved)?;
    let fixed = if xi0 == origin {
        None
    } else {
        Some(session.levels(&origin)?)
    };
    let jump = session.reference.f(&xi0) - session.reference.f(&origin);
    let omega = session.reference.modulus();
    for (idx, l) in moved.iter().enumerate() {
        let at_xi0 = report.levels[idx].second_at_center.clone();
        let other = match &fixed {
            None => Some(at_xi0.clone()),
            Some(levels) => levels[idx].hessian_at(&xi0).ok(),
        };
        let (difference, corrected) = match other {
            None => (None, None),
            Some(h) => {
                let mut raw = 0.0f64;
                let mut cor = 0.0f64;
                for (i, (row_a, row_b)) in at_xi0.iter().zip(&h).enumerate() {
                    for (j, (a, b)) in row_a.iter().zip(row_b).enumerate() {
                        let d = a - b;
                        raw = raw.max(d.abs());
                        let shift = if i == 0 && j == 0 { jump } else { 0.0 };
                        cor = cor.max((d - shift).abs());
                    }
                }
                (Some(raw), Some(cor))
            }
        };
        let w = omega.omega(config.rho.powi(l.k as i32));
        report.translated.push(TranslatedRecord {
            k: l.k,
            difference,
            corrected_difference: corrected,
            ratio: difference.map(|d| ratio(d, w, config.null_tol)),
        });
    }
    Ok(report)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LimitStatus {
    Converged,
    InsufficientLevels,
    /// Successive differences grew beyond the noise floor.
    NonMonotone,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LimitEntry {
    pub i: usize,
    pub j: usize,
    /// `X_i X_j u_k(0)` for each level.
    pub values: Vec<f64>,
    pub reference: f64,
    pub extrapolated: f64,
    pub error: f64,
    /// `|X_iX_j u_k(0) − X_iX_j u(0)| / Σ_{l≥k} ω(ρ^l)`.
    pub fitted_constants: Vec<f64>,
    pub status: LimitStatus,
}

fn omega_tail(omega: &AnalyticModulus, rho: f64, k: usize) -> f64 {
    let mut s = 0.0;
    for l in k..k + 20_000 {
        let r = rho.powi(l as i32);
        if r == 0.0 {
            break;
        }
        s += omega.omega(r);
    }
    s
}

/// Limits of `X_i X_j u_k(0)` as `k → ∞` against the reference values.
pub fn second_derivative_limit(report: &CascadeReport) -> Vec<LimitEntry> {
    let m = report.reference_second_at_center.len();
    let enough = report.config.k_max >= 3;
    let noise = report.config.null_tol;
    let mut out = Vec::new();
    for i in 0..m {
        for j in 0..m {
            let values: Vec<f64> = report.levels.iter().map(|l| l.second_at_center[i][j]).collect();
            let reference = report.reference_second_at_center[i][j];
            let deltas: Vec<f64> = values.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
            let last = *values.last().expect("at least two levels");
            let extrapolated = match deltas.len() {
                n if n >= 2 && deltas[n - 2] > noise && deltas[n - 1] < deltas[n - 2] => {
                    let q = deltas[n - 1] / deltas[n - 2];
                    last + (last - values[values.len() - 2]) * q / (1.0 - q)
                }
                _ => last,
            };
            let scale = 1.0 + reference.abs();
            let status = if !enough {
                LimitStatus::InsufficientLevels
            } else if deltas.windows(2).any(|w| w[1] > w[0] + noise * scale) {
                LimitStatus::NonMonotone
            } else {
                LimitStatus::Converged
            };
            let fitted_constants = values
                .iter()
                .enumerate()
                .map(|(k, v)| {
                    ratio(
                        (v - reference).abs(),
                        omega_tail(&report.modulus, report.config.rho, k),
                        noise,
                    )
                })
                .collect();
            out.push(LimitEntry {
                i,
                j,
                error: (extrapolated - reference).abs(),
                values,
                reference,
                extrapolated,
                fitted_constants,
                status,
            });
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitRecord {
    pub xi0: Vec<f64>,
    pub d0: f64,
    pub k: usize,
    pub i: usize,
    pub j: usize,
    /// `|X_iX_j u(ξ0) − X_iX_j u_k(ξ0)|`
    pub i1: f64,
    /// `|X_iX_j u_k(ξ0) − X_iX_j u_k(0)|`
    pub i2: f64,
    /// `|X_iX_j u_k(0) − X_iX_j u(0)|`
    pub i3: f64,
    /// `I1` bounded through the translated family:
    /// `|X_iX_j u(ξ0) − X_iX_j u'_k(ξ0)| + |X_iX_j u'_k(ξ0) − X_iX_j u_k(ξ0)|`.
    pub i1_translated: f64,
    pub lhs: f64,
    /// Right-hand side with `C = 1`; absent when the Dini integral diverges.
    pub rhs: Option<f64>,
    pub ratio: Option<f64>,
    /// `I1 + I2 + I3 − lhs`, nonnegative by the triangle inequality.
    pub triangle_gap: f64,
}

/// The level `k` with `ρ^{2k+3} ≥ d0 > ρ^{2k+5}`, which contains the
/// admissible `ρ^{2k+4} ≤ d0 ≤ ρ^{2k+3}` and also covers the gaps between those
/// brackets.
pub fn split_level(rho: f64, d0: f64) -> usize {
    let t = d0.ln() / rho.ln();
    ((t - 3.0) / 2.0 + 1e-12).floor().max(0.0) as usize
}

pub fn split_estimate(config: &CascadeConfig, xi0: &[f64], i: usize, j: usize) -> Result<SplitRecord> {
    let solution = config_solution(config)?;
    split_estimate_with(config, &solution, xi0, i, j)
}

pub fn split_estimate_with(
    config: &CascadeConfig,
    solution: &dyn Manufactured,
    xi0: &[f64],
    i: usize,
    j: usize,
) -> Result<SplitRecord> {
    let mut config = config.clone();
    config.xi0 = xi0.to_vec();
    let session = Session::new(&config, solution)?;
    let m = session.group.horizontal_dim();
    if i >= m || j >= m {
        return Err(CarnotError::InvalidParameter(format!(
            "horizontal indices ({i}, {j}) out of range (m = {m})"
        )));
    }
    let d0 = session.group.gauge_norm(xi0);
    if d0 == 0.0 {
        return Err(CarnotError::InvalidParameter("ξ0 must differ from the origin".into()));
    }
    let k = split_level(config.rho, d0);
    if k > config.k_max + 1 {
        return Err(CarnotError::LevelOutOfRange {
            level: k,
            max: config.k_max + 1,
        });
    }
    let origin = vec![0.0; session.group.dimension()];
    let (fixed, moved) = rayon::join(|| session.level(&origin, k), || session.level(xi0, k));
    let (fixed, moved) = (fixed?, moved?);
    let u_xi0 = session.reference.second(i, j, xi0)?;
    let u_0 = session.reference.second(i, j, &origin)?;
    let uk_xi0 = fixed.second_at(i, j, xi0)?;
    let uk_0 = fixed.second_at(i, j, &origin)?;
    let moved_xi0 = moved.second_at(i, j, xi0)?;
    let i1 = (u_xi0 - uk_xi0).abs();
    let i2 = (uk_xi0 - uk_0).abs();
    let i3 = (uk_0 - u_0).abs();
    let lhs = (u_xi0 - u_0).abs();
    let (sup_u, sup_f) = session.reference.sups(&session.base);
    let rhs = match schauder_rhs(d0, &session.reference.modulus(), sup_u, sup_f, 1.0) {
        Ok(v) => Some(v),
        Err(CarnotError::Divergent { .. }) => None,
        Err(e) => return Err(e),
    };
    Ok(SplitRecord {
        xi0: xi0.to_vec(),
        d0,
        k,
        i,
        j,
        i1,
        i2,
        i3,
        i1_translated: (u_xi0 - moved_xi0).abs() + (moved_xi0 - uk_xi0).abs(),
        lhs,
        rhs,
        ratio: rhs.map(|r| ratio(lhs, r, config.null_tol)),
        triangle_gap: i1 + i2 + i3 - lhs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cascade::{CascadeMode, PolynomialSolution};
    use crate::group::GroupSpec;
    use crate::modulus::TestKind;
    use crate::poly::GradedPolynomial;

    fn small(kind: TestKind) -> CascadeConfig {
        let mut c = CascadeConfig::new(GroupSpec::heisenberg(), kind);
        c.n_per_ball = 17;
        c.k_max = 3;
        c
    }

    #[test]
    fn constant_rhs_is_a_null_cascade() {
        let r = run_cascade(&small(TestKind::Constant(2.0))).unwrap();
        assert_eq!(r.levels.len(), 5);
        for l in &r.levels {
            assert!(l.sup_v < 1e-9, "{l:?}");
            assert!(l.sup_xxw.is_none_or(|v| v < 1e-8), "{l:?}");
            assert_eq!(l.ratio_v, 0.0);
        }
        for e in second_derivative_limit(&r) {
            assert!(e.values.iter().all(|v| (v - e.reference).abs() < 1e-8), "{e:?}");
        }
    }

    #[test]
    fn harmonic_polynomial_is_a_null_cascade() {
        let g = CarnotGroup::heisenberg();
        let xy = &GradedPolynomial::var(3, 0) * &GradedPolynomial::var(3, 1);
        let sol = PolynomialSolution::new(&g, xy).unwrap();
        let r = run_cascade_with(&small(TestKind::Constant(0.0)), &sol).unwrap();
        for l in &r.levels {
            assert!(l.sup_v < 1e-9 && l.sup_w.is_none_or(|v| v < 1e-9), "{l:?}");
        }
    }

    #[test]
    fn translated_family_at_origin_reproduces_the_cascade() {
        let c = small(TestKind::Holder(0.5));
        let a = run_cascade(&c).unwrap();
        let b = translated_cascade(&c).unwrap();
        assert_eq!(a.levels, b.levels);
        assert!(b.translated.iter().all(|t| t.difference == Some(0.0)));
    }

    #[test]
    fn holder_ratios_are_level_independent() {
        let r = run_cascade(&small(TestKind::Holder(0.5))).unwrap();
        let (lo, hi) = r.ratio_range(|l| Some(l.ratio_v)).unwrap();
        assert!(lo > 0.0 && hi / lo < 1.0 + 1e-6, "{lo} {hi}");
        let (lo, hi) = r.ratio_range(|l| l.ratio_xxw).unwrap();
        assert!(lo > 0.0 && hi / lo < 1.0 + 1e-6, "{lo} {hi}");
    }

    #[test]
    fn too_few_levels_are_flagged() {
        let mut c = small(TestKind::Holder(0.5));
        c.k_max = 1;
        let r = run_cascade(&c).unwrap();
        assert!(second_derivative_limit(&r)
            .iter()
            .all(|e| e.status == LimitStatus::InsufficientLevels));
    }

    #[test]
    fn split_levels() {
        assert_eq!(split_level(0.5, 2f64.powi(-4)), 0);
        assert_eq!(split_level(0.5, 2f64.powi(-3)), 0);
        assert_eq!(split_level(0.5, 2f64.powi(-5)), 1);
        assert_eq!(split_level(0.5, 2f64.powi(-6)), 1);
        assert_eq!(split_level(0.5, 2f64.powi(-8)), 2);
        assert_eq!(split_level(0.5, 2f64.powi(-9)), 3);
        let c = small(TestKind::Holder(0.5));
        assert!(matches!(
            split_estimate(&c, &[2f64.powi(-14), 0.0, 0.0], 0, 0),
            Err(CarnotError::LevelOutOfRange { .. })
        ));
    }

    #[test]
    fn split_terms_dominate_lhs() {
        let c = small(TestKind::Holder(0.5));
        let s = split_estimate(&c, &[0.05, -0.02, 0.003], 0, 0).unwrap();
        assert!(s.triangle_gap >= -1e-12 && s.ratio.unwrap().is_finite(), "{s:?}");
        let nd = split_estimate(&small(TestKind::NonDini), &[0.05, 0.0, 0.0], 0, 0).unwrap();
        assert!(nd.rhs.is_none());
        let z = split_estimate(&small(TestKind::Constant(1.0)), &[0.05, 0.0, 0.0], 1, 1).unwrap();
        assert!(z.i1 < 1e-8 && z.i2 < 1e-8 && z.i3 < 1e-8 && z.lhs == 0.0);
    }

    #[test]
    fn solved_mode_tracks_manufactured_mode() {
        let mut c = small(TestKind::Holder(0.5));
        c.k_max = 2;
        let exact = run_cascade(&c).unwrap();
        c.mode = CascadeMode::Solved;
        let solved = run_cascade(&c).unwrap();
        for (a, b) in exact.levels.iter().zip(&solved.levels).skip(1) {
            assert!(b.boundary_interpolation_error > 0.0);
            assert!(
                (a.sup_v - b.sup_v).abs() <= 0.5 * a.sup_v + 2.0 * b.v_interpolation_error,
                "{a:?} {b:?}"
            );
        }
    }
}
