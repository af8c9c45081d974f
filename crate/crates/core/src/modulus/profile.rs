use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{CarnotError, Result};
use crate::fit::fit_exponent;
use crate::graded::GroupFunction;
use crate::group::CarnotGroup;

/// A modulus of continuity `ω(r)` on `(0, 1]`.
pub trait Modulus {
    fn omega(&self, r: f64) -> f64;

    /// Smallest radius backed by data; below it values are extrapolated.
    fn resolved_below(&self) -> Option<f64> {
        None
    }
}

impl<F: Fn(f64) -> f64> Modulus for F {
    fn omega(&self, r: f64) -> f64 {
        self(r)
    }
}

/// Closed-form moduli used by the test-function library. The logarithmic
/// profiles are held constant above `cap`, which keeps them concave on all of
/// `(0, 1]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AnalyticModulus {
    Zero,
    /// `r^alpha`
    Power {
        alpha: f64,
    },
    /// `1 / (log(e/r))²`
    LogSquared {
        cap: f64,
    },
    /// `1 / log(e/r)`
    LogInverse {
        cap: f64,
    },
}

impl Modulus for AnalyticModulus {
    fn omega(&self, r: f64) -> f64 {
        let r = r.max(0.0);
        match *self {
            AnalyticModulus::Zero => 0.0,
            AnalyticModulus::Power { alpha } => r.powf(alpha),
            AnalyticModulus::LogSquared { cap } => (1.0 - r.min(cap).ln()).powi(-2),
            AnalyticModulus::LogInverse { cap } => 1.0 / (1.0 - r.min(cap).ln()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance {
    Analytic { modulus: AnalyticModulus },
    Sampled { seed: u64, pair_count: usize },
}

impl std::fmt::Display for Provenance {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Provenance::Analytic { .. } => write!(f, "analytic"),
            Provenance::Sampled { seed, pair_count } => write!(f, "sampled(seed={seed};pairs={pair_count})"),
        }
    }
}

/// `ω` at decreasing scales, nondecreasing in `r`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModulusProfile {
    pub scales: Vec<f64>,
    pub values: Vec<f64>,
    pub provenance: Provenance,
}

/// `2^{-1}, …, 2^{-k}`.
pub fn dyadic_scales(k: u32) -> Vec<f64> {
    (1..=k as i32).map(|j| 2f64.powi(-j)).collect()
}

impl ModulusProfile {
    pub fn new(scales: Vec<f64>, values: Vec<f64>, provenance: Provenance) -> Result<Self> {
        if scales.len() != values.len() || scales.is_empty() {
            return Err(CarnotError::InvalidParameter(
                "scales and values must be non-empty and of equal length".into(),
            ));
        }
        if scales.windows(2).any(|w| w[1] >= w[0]) || scales.iter().any(|&r| r <= 0.0) {
            return Err(CarnotError::InvalidParameter(
                "scales must be positive and strictly decreasing".into(),
            ));
        }
        if values.iter().any(|v| !(v >= &0.0)) {
            return Err(CarnotError::InvalidParameter(
                "modulus values must be nonnegative".into(),
            ));
        }
        let mut values = values;
        for j in (0..values.len() - 1).rev() {
            values[j] = values[j].max(values[j + 1]);
        }
        Ok(Self {
            scales,
            values,
            provenance,
        })
    }

    pub fn analytic(m: AnalyticModulus, scales: Vec<f64>) -> Result<Self> {
        let values = scales.iter().map(|&r| m.omega(r)).collect();
        Self::new(scales, values, Provenance::Analytic { modulus: m })
    }

    /// Log-log slope of the positive part of the profile.
    pub fn fitted_exponent(&self) -> Result<f64> {
        let pts: Vec<(f64, f64)> = self
            .scales
            .iter()
            .zip(&self.values)
            .filter(|(_, &v)| v > 0.0)
            .map(|(&r, &v)| (r, v))
            .collect();
        Ok(fit_exponent(&pts, true)?.slope)
    }

    fn tail_law(&self) -> Option<(f64, f64)> {
        let k = self.scales.len();
        let take = k.min(4);
        let pts: Vec<(f64, f64)> = (k - take..k).map(|j| (self.scales[j], self.values[j])).collect();
        if pts.iter().any(|p| p.1 <= 0.0) {
            return None;
        }
        if pts.len() < 3 {
            let (r0, v0) = pts[0];
            let (r1, v1) = pts[pts.len() - 1];
            let p = if r0 != r1 { (v0 / v1).ln() / (r0 / r1).ln() } else { 0.0 };
            return Some((v1 / r1.powf(p), p));
        }
        let fit = fit_exponent(&pts, true).ok()?;
        Some((fit.intercept.exp(), fit.slope))
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("r,omega,provenance\n");
        for (r, v) in self.scales.iter().zip(&self.values) {
            let _ = writeln!(s, "{r:.17e},{v:.17e},{}", self.provenance);
        }
        s
    }
}

impl Modulus for ModulusProfile {
    /// Log-log interpolation between scales; power-law continuation outside.
    fn omega(&self, r: f64) -> f64 {
        let (s, v) = (&self.scales, &self.values);
        let last = s.len() - 1;
        if r <= 0.0 {
            return 0.0;
        }
        if r >= s[0] {
            if last == 0 || v[1] <= 0.0 || v[0] <= 0.0 {
                return v[0];
            }
            let p = (v[0] / v[1]).ln() / (s[0] / s[1]).ln();
            return (v[0] * (r / s[0]).powf(p.max(0.0))).max(v[0]);
        }
        if r <= s[last] {
            return match self.tail_law() {
                Some((c, p)) if p > 0.0 => (c * r.powf(p)).min(v[last]),
                Some(_) => v[last],
                None => 0.0,
            };
        }
        let j = s.iter().position(|&x| x <= r).unwrap();
        let (r_hi, r_lo) = (s[j - 1], s[j]);
        let (v_hi, v_lo) = (v[j - 1], v[j]);
        if v_lo > 0.0 && v_hi > 0.0 {
            let t = (r / r_lo).ln() / (r_hi / r_lo).ln();
            (v_lo.ln() + t * (v_hi / v_lo).ln()).exp()
        } else {
            v_lo + (v_hi - v_lo) * (r - r_lo) / (r_hi - r_lo)
        }
    }

    fn resolved_below(&self) -> Option<f64> {
        self.scales.last().copied()
    }
}

/// `ω̂(r) = max |f(ξ) − f(η)|` over sampled pairs with `d(ξ, η) < r` in
/// `B_{domain_radius}(0)`. Half of the base points are uniform in the domain
/// and half lie in `B_r(0)`, where the library's singularities sit.
pub fn estimate_modulus<F: GroupFunction + ?Sized>(
    group: &CarnotGroup,
    f: &F,
    domain_radius: f64,
    scales: &[f64],
    seed: u64,
    pairs_per_scale: usize,
) -> Result<ModulusProfile> {
    if pairs_per_scale < 100 {
        return Err(CarnotError::InvalidParameter(format!(
            "pairs_per_scale must be at least 100, got {pairs_per_scale}"
        )));
    }
    if !(domain_radius > 0.0) {
        return Err(CarnotError::InvalidParameter("domain radius must be positive".into()));
    }
    let values: Vec<f64> = scales
        .par_iter()
        .enumerate()
        .map(|(j, &r)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add((j as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)));
            let mut best = 0.0f64;
            let mut eta = vec![0.0; group.dimension()];
            let mut done = 0;
            let mut attempts = 0;
            while done < pairs_per_scale && attempts < 50 * pairs_per_scale {
                attempts += 1;
                let base_r = if done % 2 == 0 {
                    domain_radius
                } else {
                    r.min(domain_radius)
                };
                let xi = group.random_in_ball(&mut rng, base_r);
                let rho = r * rng.gen_range(0.0f64..1.0).powf(0.25);
                let step = group.dilate_unchecked(rho, &group.random_unit_point(&mut rng));
                group.multiply_into(&xi, &step, &mut eta);
                if group.gauge_norm(&eta) >= domain_radius || group.distance(&xi, &eta) >= r {
                    continue;
                }
                best = best.max((f.value(&xi) - f.value(&eta)).abs());
                done += 1;
            }
            best
        })
        .collect();
    ModulusProfile::new(
        scales.to_vec(),
        values,
        Provenance::Sampled {
            seed,
            pair_count: pairs_per_scale,
        },
    )
}
