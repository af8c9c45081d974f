use serde::{Deserialize, Serialize};

use crate::error::{CarnotError, Result};
use crate::fit::fit_exponent;

use super::profile::Modulus;

/// Weight in `∫ ω(r) w(r) dr`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum DiniWeight {
    InvR,
    InvR2,
}

impl DiniWeight {
    fn power(self) -> i32 {
        match self {
            DiniWeight::InvR => 1,
            DiniWeight::InvR2 => 2,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiniValue {
    pub value: f64,
    /// The integration range reached below the data-backed scales.
    pub extrapolated: bool,
}

pub const NODES_PER_DECADE: usize = 64;
const DIVERGENCE_EXPONENT: f64 = 1.25;
const SMALLEST_RADIUS: f64 = 1e-300;

/// Trapezoid rule in `log r` on `[a, b]`, `a > 0`.
fn log_trapezoid(g: &dyn Fn(f64) -> f64, a: f64, b: f64, per_decade: usize) -> f64 {
    let (la, lb) = (a.ln(), b.ln());
    let m = ((per_decade as f64 * (b / a).log10()).ceil() as usize).max(2);
    let h = (lb - la) / m as f64;
    let mut s = 0.0;
    for i in 0..=m {
        let r = if i == m { b } else { (la + i as f64 * h).exp() };
        let w = if i == 0 || i == m { 0.5 } else { 1.0 };
        s += w * g(r) * r;
    }
    s * h
}

/// `∫_a^b ω(r) / r^k dr` by log-spaced trapezoid quadrature.
///
/// For `a = 0` the integral is accumulated decade by decade down to `1e-300`.
/// If it has not settled by then, the decade increments are fitted to a power
/// law `Δ_k ~ k^{-p}`: `p < 1.25` is reported as divergence, otherwise the fitted
/// tail is added.
pub fn dini_integral<M: Modulus + ?Sized>(omega: &M, a: f64, b: f64, weight: DiniWeight) -> Result<DiniValue> {
    if !(a >= 0.0 && a < b && b <= 1.0) {
        return Err(CarnotError::InvalidParameter(format!(
            "need 0 ≤ a < b ≤ 1, got a = {a}, b = {b}"
        )));
    }
    let k = weight.power();
    let g = |r: f64| omega.omega(r) / r.powi(k);
    let extrapolated = omega.resolved_below().is_some_and(|lo| a < lo);
    if a > 0.0 {
        return Ok(DiniValue {
            value: log_trapezoid(&g, a, b, NODES_PER_DECADE),
            extrapolated,
        });
    }
    let mut total = 0.0;
    let mut deltas = Vec::new();
    let mut hi = b;
    let mut quiet = 0;
    while hi > SMALLEST_RADIUS {
        let lo = hi / 10.0;
        let d = log_trapezoid(&g, lo, hi, NODES_PER_DECADE);
        if !d.is_finite() {
            return Err(CarnotError::Divergent { exponent: 0.0 });
        }
        total += d;
        deltas.push(d);
        hi = lo;
        if d.abs() <= 1e-17 * total.abs() || (total == 0.0 && d == 0.0) {
            quiet += 1;
            if quiet >= 3 {
                return Ok(DiniValue {
                    value: total,
                    extrapolated,
                });
            }
        } else {
            quiet = 0;
        }
    }
    let kmax = deltas.len();
    let pts: Vec<(f64, f64)> = (kmax / 2..kmax)
        .filter(|&j| deltas[j] > 0.0)
        .map(|j| ((j + 1) as f64, deltas[j]))
        .collect();
    let fit = fit_exponent(&pts, true)?;
    let p = -fit.slope;
    if p < DIVERGENCE_EXPONENT {
        return Err(CarnotError::Divergent { exponent: p });
    }
    let tail = deltas[kmax - 1] * kmax as f64 / (p - 1.0);
    Ok(DiniValue {
        value: total + tail,
        extrapolated,
    })
}

/// `C (d (sup|u| + ‖f‖_∞ + ∫_{√d}^1 ω/r² dr) + ∫_0^{√d} ω/r dr)`.
pub fn schauder_rhs<M: Modulus + ?Sized>(d: f64, omega: &M, sup_u: f64, sup_f: f64, c: f64) -> Result<f64> {
    if !(d > 0.0 && d < 1.0) {
        return Err(CarnotError::InvalidParameter(format!("need 0 < d < 1, got {d}")));
    }
    let sd = d.sqrt();
    let outer = dini_integral(omega, sd, 1.0, DiniWeight::InvR2)?.value;
    let inner = dini_integral(omega, 0.0, sd, DiniWeight::InvR)?.value;
    Ok(c * (d * (sup_u + sup_f + outer) + inner))
}

/// `C d^{α/2} (sup|u| + ‖f‖_{C^{0,α}})` for `α < 1`, and
/// `C d^{1/2} (sup|u| + ‖f‖_{C^{0,1}} (1 + |√d log √d|))` for `α = 1`.
pub fn holder_rhs(d: f64, alpha: f64, sup_u: f64, holder_norm_f: f64, c: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(CarnotError::InvalidParameter(format!("need 0 < α ≤ 1, got {alpha}")));
    }
    if !(d > 0.0 && d < 1.0) {
        return Err(CarnotError::InvalidParameter(format!("need 0 < d < 1, got {d}")));
    }
    if alpha < 1.0 {
        Ok(c * d.powf(alpha / 2.0) * (sup_u + holder_norm_f))
    } else {
        let sd = d.sqrt();
        Ok(c * sd * (sup_u + holder_norm_f * (1.0 + (sd * sd.ln()).abs())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modulus::AnalyticModulus;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn closed_forms() {
        let lin = |r: f64| r;
        assert!(rel(dini_integral(&lin, 0.0, 1.0, DiniWeight::InvR).unwrap().value, 1.0) < 1e-3);
        let d: f64 = 0.01;
        let root = |r: f64| r.sqrt();
        let v = dini_integral(&root, 0.0, d.sqrt(), DiniWeight::InvR).unwrap().value;
        assert!(rel(v, 2.0 * d.powf(0.25)) < 1e-3);
        let v = dini_integral(&lin, d.sqrt(), 1.0, DiniWeight::InvR2).unwrap().value;
        assert!(rel(v, d.sqrt().ln().abs()) < 1e-3);
    }

    #[test]
    fn log_dini_converges_and_non_dini_diverges() {
        let ld = AnalyticModulus::LogSquared { cap: 1.0 };
        let v = dini_integral(&ld, 0.0, 1.0, DiniWeight::InvR).unwrap();
        assert!(rel(v.value, 1.0) < 1e-2, "{}", v.value);
        let nd = AnalyticModulus::LogInverse { cap: 1.0 };
        assert!(matches!(
            dini_integral(&nd, 0.0, 1.0, DiniWeight::InvR),
            Err(CarnotError::Divergent { .. })
        ));
        assert!(matches!(
            schauder_rhs(0.01, &nd, 1.0, 1.0, 1.0),
            Err(CarnotError::Divergent { .. })
        ));
    }

    #[test]
    fn power_modulus_matches_closed_form_chain() {
        for alpha in [0.25, 0.5, 0.75] {
            let m = AnalyticModulus::Power { alpha };
            let mut ratios = Vec::new();
            for j in 2..12 {
                let d = 2f64.powi(-j);
                let got = schauder_rhs(d, &m, 1.0, 1.0, 1.0).unwrap();
                let want =
                    2.0 * d + d * (d.powf((alpha - 1.0) / 2.0) - 1.0) / (1.0 - alpha) + d.powf(alpha / 2.0) / alpha;
                assert!(rel(got, want) < 1e-2, "α={alpha} d={d}: {got} vs {want}");
                ratios.push(got / holder_rhs(d, alpha, 1.0, 2.0, 1.0).unwrap());
            }
            let max = ratios.iter().cloned().fold(0.0, f64::max);
            assert!(max < 1.0 / alpha + 1.0 / (1.0 - alpha) + 1.0, "α={alpha}: {max}");
        }
    }

    #[test]
    fn rhs_examples() {
        let zero = AnalyticModulus::Zero;
        assert!(rel(schauder_rhs(0.04, &zero, 1.0, 1.0, 1.0).unwrap(), 0.08) < 1e-12);
        assert!(rel(holder_rhs(1.0 / 16.0, 0.5, 1.0, 1.0, 1.0).unwrap(), 1.0) < 1e-12);
        let d = (-2.0f64).exp();
        // log √d = -1, so the bracket is 1 + √d.
        let want = d.sqrt() * (1.0 + (1.0 + d.sqrt()));
        assert!(rel(holder_rhs(d, 1.0, 1.0, 1.0, 1.0).unwrap(), want) < 1e-12);
        assert!(holder_rhs(0.1, 1.5, 1.0, 1.0, 1.0).is_err());
        assert!(holder_rhs(0.1, 0.0, 1.0, 1.0, 1.0).is_err());
        assert!(dini_integral(&zero, 0.5, 0.2, DiniWeight::InvR).is_err());
    }
}
