use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{CarnotError, Result};
use crate::graded::GroupFunction;

use super::profile::{AnalyticModulus, Modulus};

/// Inhomogeneities `f(ξ) = F(|x_1|)` with known modulus of continuity.
///
/// Since `|x_1(ξ) − x_1(η)| ≤ d(ξ, η)` with equality along the first axis,
/// a concave nondecreasing `F` with `F(0) = 0` has `ω_f = F` exactly.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "param", rename_all = "snake_case")]
pub enum TestKind {
    Holder(f64),
    Lipschitz,
    LogDini,
    NonDini,
    Constant(f64),
}

/// `1/(log(e/r))²` is concave exactly on `(0, e^{-2}]`.
pub const LOG_DINI_CAP: f64 = 0.135_335_283_236_612_7;
/// `1/log(e/r)` is concave exactly on `(0, e^{-1}]`.
pub const NON_DINI_CAP: f64 = 0.367_879_441_171_442_33;

impl fmt::Display for TestKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TestKind::Holder(a) => write!(f, "holder:{a}"),
            TestKind::Lipschitz => write!(f, "lipschitz"),
            TestKind::LogDini => write!(f, "log_dini"),
            TestKind::NonDini => write!(f, "non_dini"),
            TestKind::Constant(c) => write!(f, "constant:{c}"),
        }
    }
}

impl FromStr for TestKind {
    type Err = CarnotError;

    fn from_str(s: &str) -> Result<Self> {
        let (name, arg) = match s.split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (s, None),
        };
        let num = |what: &str| -> Result<f64> {
            arg.ok_or_else(|| CarnotError::InvalidParameter(format!("{what} needs a parameter, e.g. {what}:0.5")))?
                .parse::<f64>()
                .map_err(|e| CarnotError::InvalidParameter(format!("bad {what} parameter: {e}")))
        };
        let kind = match name {
            "holder" => TestKind::Holder(num("holder")?),
            "lipschitz" => TestKind::Lipschitz,
            "log_dini" => TestKind::LogDini,
            "non_dini" => TestKind::NonDini,
            "constant" => TestKind::Constant(num("constant")?),
            other => {
                return Err(CarnotError::InvalidParameter(format!(
                    "unknown test function kind {other:?}"
                )))
            }
        };
        if matches!(name, "lipschitz" | "log_dini" | "non_dini") && arg.is_some() {
            return Err(CarnotError::InvalidParameter(format!("{name} takes no parameter")));
        }
        test_function(kind).map(|t| t.kind)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestFunction {
    pub kind: TestKind,
}

pub fn test_function(kind: TestKind) -> Result<TestFunction> {
    match kind {
        TestKind::Holder(a) if !(a > 0.0 && a <= 1.0) => Err(CarnotError::InvalidParameter(format!(
            "holder exponent must lie in (0, 1], got {a}"
        ))),
        TestKind::Constant(c) if !c.is_finite() => Err(CarnotError::InvalidParameter("constant must be finite".into())),
        _ => Ok(TestFunction { kind }),
    }
}

impl TestFunction {
    pub fn modulus(&self) -> AnalyticModulus {
        match self.kind {
            TestKind::Holder(a) => AnalyticModulus::Power { alpha: a },
            TestKind::Lipschitz => AnalyticModulus::Power { alpha: 1.0 },
            TestKind::LogDini => AnalyticModulus::LogSquared { cap: LOG_DINI_CAP },
            TestKind::NonDini => AnalyticModulus::LogInverse { cap: NON_DINI_CAP },
            TestKind::Constant(_) => AnalyticModulus::Zero,
        }
    }

    /// `F(s)` for `s = |x_1| ≥ 0`.
    pub fn profile(&self, s: f64) -> f64 {
        match self.kind {
            TestKind::Constant(c) => c,
            _ => self.modulus().omega(s),
        }
    }

    /// `f(0)`.
    pub fn value_at_origin(&self) -> f64 {
        self.profile(0.0)
    }

    /// `sup_{B_1(0)} |f|`, attained where `|x_1| = 1`.
    pub fn sup_norm(&self) -> f64 {
        self.profile(1.0).abs()
    }

    /// Hölder exponent when the kind has one.
    pub fn holder_exponent(&self) -> Option<f64> {
        match self.kind {
            TestKind::Holder(a) => Some(a),
            TestKind::Lipschitz => Some(1.0),
            _ => None,
        }
    }

    /// `‖f‖_{C^{0,α}} = sup|f| + [f]_α`; the seminorm is one by construction.
    pub fn holder_norm(&self) -> Option<f64> {
        self.holder_exponent().map(|_| self.sup_norm() + 1.0)
    }

    /// The exact solution `u = U(x_1)` with `U'' = F(|·|)`, `U(0) = U'(0) = 0`.
    pub fn manufactured(&self) -> ManufacturedSolution {
        ManufacturedSolution { f: *self }
    }
}

impl GroupFunction for TestFunction {
    fn value(&self, p: &[f64]) -> f64 {
        self.profile(p[0].abs())
    }
}

/// `u(ξ) = U(x_1)`. Because `X_i x_1 = δ_{i1}`, it satisfies `X_1 X_1 u = f`,
/// every other `X_i X_j u = 0`, and hence `L u = f`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManufacturedSolution {
    pub f: TestFunction,
}

const GL_NODES: [f64; 4] = [
    0.183_434_642_495_649_8,
    0.525_532_409_916_329,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_3,
];
const GL_WEIGHTS: [f64; 4] = [
    0.362_683_783_378_362,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_5,
    0.101_228_536_290_376_3,
];

/// `∫_0^b g` on geometric panels `[b 2^{-k-1}, b 2^{-k}]`, Gauss–Legendre on each.
fn integrate_from_zero(g: &dyn Fn(f64) -> f64, b: f64) -> f64 {
    let mut total = 0.0;
    let mut hi = b;
    for _ in 0..60 {
        let lo = hi / 2.0;
        let (mid, half) = ((hi + lo) / 2.0, (hi - lo) / 2.0);
        let mut s = 0.0;
        for (x, w) in GL_NODES.iter().zip(GL_WEIGHTS) {
            s += w * (g(mid + half * x) + g(mid - half * x));
        }
        total += s * half;
        hi = lo;
    }
    total
}

impl ManufacturedSolution {
    /// `U(s)` for `s ≥ 0` (`U` is even).
    pub fn profile(&self, s: f64) -> f64 {
        let s = s.abs();
        match self.f.kind {
            TestKind::Constant(c) => 0.5 * c * s * s,
            TestKind::Holder(a) => s.powf(a + 2.0) / ((a + 1.0) * (a + 2.0)),
            TestKind::Lipschitz => s.powi(3) / 6.0,
            TestKind::LogDini | TestKind::NonDini => {
                let cap = match self.f.kind {
                    TestKind::LogDini => LOG_DINI_CAP,
                    _ => NON_DINI_CAP,
                };
                let m = self.f.modulus();
                let k = s.min(cap);
                let g = |t: f64| (s - t) * m.omega(t);
                let head = integrate_from_zero(&g, k);
                // F is constant on [cap, s].
                head + 0.5 * m.omega(cap) * (s - k).powi(2)
            }
        }
    }

    /// `X_i X_j u` at `p`.
    pub fn second_derivative(&self, i: usize, j: usize, p: &[f64]) -> f64 {
        if i == 0 && j == 0 {
            self.f.value(p)
        } else {
            0.0
        }
    }
}

impl GroupFunction for ManufacturedSolution {
    fn value(&self, p: &[f64]) -> f64 {
        self.profile(p[0])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modulus::{dini_integral, DiniWeight};

    #[test]
    fn parse_roundtrip() {
        for s in ["holder:0.5", "lipschitz", "log_dini", "non_dini", "constant:2"] {
            let k: TestKind = s.parse().unwrap();
            assert_eq!(k.to_string(), s);
        }
        assert!("holder".parse::<TestKind>().is_err());
        assert!("holder:1.5".parse::<TestKind>().is_err());
        assert!("lipschitz:1".parse::<TestKind>().is_err());
        assert!("wavy".parse::<TestKind>().is_err());
    }

    #[test]
    fn caps_are_the_concavity_limits() {
        assert!((LOG_DINI_CAP - (-2.0f64).exp()).abs() < 1e-16);
        assert!((NON_DINI_CAP - (-1.0f64).exp()).abs() < 1e-16);
    }

    #[test]
    fn library_moduli() {
        let h = test_function(TestKind::Holder(0.5)).unwrap();
        assert!((h.modulus().omega(0.09) - 0.3).abs() < 1e-15);
        assert_eq!(h.holder_norm(), Some(2.0));
        let nd = test_function(TestKind::NonDini).unwrap();
        assert!(dini_integral(&nd.modulus(), 0.0, 1.0, DiniWeight::InvR).is_err());
        let ld = test_function(TestKind::LogDini).unwrap();
        assert!(dini_integral(&ld.modulus(), 0.0, 1.0, DiniWeight::InvR).is_ok());
    }

    #[test]
    fn manufactured_second_difference_recovers_f() {
        for kind in [
            TestKind::Holder(0.5),
            TestKind::Lipschitz,
            TestKind::LogDini,
            TestKind::NonDini,
            TestKind::Constant(2.0),
        ] {
            let t = test_function(kind).unwrap();
            let u = t.manufactured();
            for s in [0.01, 0.1, 0.3, 0.7] {
                let h = 1e-3 * s;
                let d2 = (u.profile(s + h) - 2.0 * u.profile(s) + u.profile(s - h)) / (h * h);
                assert!(
                    (d2 - t.profile(s)).abs() < 1e-4 * (1.0 + t.profile(s)),
                    "{kind:?} at {s}: {d2}"
                );
            }
            assert_eq!(u.profile(0.0), 0.0);
        }
    }
}
