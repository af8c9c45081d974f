use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{CarnotError, Result};

/// `C^{1/α} φ0^{(β−1)/α} 2^{β/(β−1)}`: past `k0` by this much, a nonnegative
/// nonincreasing `φ` with `φ(h) ≤ C (h−k)^{-α} φ(k)^β` must vanish.
pub fn de_giorgi_threshold(c: f64, alpha: f64, beta: f64, phi0: f64) -> Result<f64> {
    if !(beta > 1.0) {
        return Err(CarnotError::InvalidParameter(format!("need β > 1, got {beta}")));
    }
    if !(c > 0.0 && alpha > 0.0 && phi0 >= 0.0) {
        return Err(CarnotError::InvalidParameter(format!(
            "need C > 0, α > 0, φ0 ≥ 0, got C = {c}, α = {alpha}, φ0 = {phi0}"
        )));
    }
    Ok(c.powf(1.0 / alpha) * phi0.powf((beta - 1.0) / alpha) * 2f64.powf(beta / (beta - 1.0)))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum SequenceShape {
    /// `A (k* − h)_+^γ` with `γ = α/(β−1)`, the extremal profile of the recurrence.
    Power { amplitude: f64, gamma: f64 },
    /// `φ0` on `[k0, k*)`, zero after.
    Step,
}

/// A nonincreasing `φ` on `[k0, ∞)` built to satisfy the recurrence.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSequence {
    pub c: f64,
    pub alpha: f64,
    pub beta: f64,
    pub k0: f64,
    pub phi0: f64,
    /// First point where `φ` vanishes.
    pub vanishes_at: f64,
    pub shape: SequenceShape,
}

impl SyntheticSequence {
    /// The power profile through `(k0, φ0)` with amplitude `(1 + slack)` times the
    /// smallest one the recurrence admits.
    pub fn power(c: f64, alpha: f64, beta: f64, k0: f64, phi0: f64, slack: f64) -> Result<Self> {
        de_giorgi_threshold(c, alpha, beta, phi0)?;
        let gamma = alpha / (beta - 1.0);
        let k = gamma.powf(gamma) * alpha.powf(alpha) / (gamma + alpha).powf(gamma + alpha);
        let amplitude = (k / c).powf(1.0 / (beta - 1.0)) * (1.0 + slack.max(0.0));
        let vanishes_at = k0 + (phi0 / amplitude).powf(1.0 / gamma);
        Ok(Self {
            c,
            alpha,
            beta,
            k0,
            phi0,
            vanishes_at,
            shape: SequenceShape::Power { amplitude, gamma },
        })
    }

    /// The step of height `φ0` with the widest support `(C φ0^{β−1})^{1/α}` the
    /// recurrence admits, scaled by `width_fraction ∈ (0, 1]`.
    pub fn step(c: f64, alpha: f64, beta: f64, k0: f64, phi0: f64, width_fraction: f64) -> Result<Self> {
        de_giorgi_threshold(c, alpha, beta, phi0)?;
        let width = (c * phi0.powf(beta - 1.0)).powf(1.0 / alpha) * width_fraction.clamp(0.0, 1.0);
        Ok(Self {
            c,
            alpha,
            beta,
            k0,
            phi0,
            vanishes_at: k0 + width,
            shape: SequenceShape::Step,
        })
    }

    pub fn phi(&self, h: f64) -> f64 {
        if h >= self.vanishes_at {
            return 0.0;
        }
        match self.shape {
            SequenceShape::Power { amplitude, gamma } => amplitude * (self.vanishes_at - h).powf(gamma),
            SequenceShape::Step => self.phi0,
        }
    }

    pub fn threshold(&self) -> f64 {
        de_giorgi_threshold(self.c, self.alpha, self.beta, self.phi0).expect("validated at construction")
    }

    /// Largest `φ(h) (h−k)^α / (C φ(k)^β)` over a grid of pairs `k0 ≤ k < h`
    /// covering `[k0, k0 + 2 threshold]`; at most one when the recurrence holds.
    pub fn recurrence_ratio(&self, grid: usize) -> f64 {
        let span = 2.0 * self.threshold().max(self.vanishes_at - self.k0);
        let pts: Vec<f64> = (0..=grid).map(|j| self.k0 + span * j as f64 / grid as f64).collect();
        let mut worst = 0.0f64;
        for (a, &k) in pts.iter().enumerate() {
            let pk = self.phi(k);
            for &h in &pts[a + 1..] {
                let ph = self.phi(h);
                if ph == 0.0 {
                    break;
                }
                worst = worst.max(ph * (h - k).powf(self.alpha) / (self.c * pk.powf(self.beta)));
            }
        }
        worst
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeGiorgiCase {
    pub sequence: SyntheticSequence,
    pub threshold: f64,
    pub recurrence_ratio: f64,
    /// `φ(k0 + d̃)`.
    pub phi_at_threshold: f64,
}

impl DeGiorgiCase {
    pub fn passed(&self) -> bool {
        self.recurrence_ratio <= 1.0 + 1e-9 && self.phi_at_threshold == 0.0
    }
}

/// `count` sequences with `C ∈ [0.1, 10]`, `α ∈ [0.5, 3]`, `β ∈ [1.2, 3]`,
/// `φ0 ∈ [0.1, 10]`, alternating power and step shapes.
pub fn synthetic_de_giorgi_suite(count: usize, seed: u64) -> Result<Vec<DeGiorgiCase>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    for j in 0..count {
        let log_uniform = |rng: &mut ChaCha8Rng, lo: f64, hi: f64| (rng.gen_range(lo.ln()..hi.ln())).exp();
        let c = log_uniform(&mut rng, 0.1, 10.0);
        let alpha = rng.gen_range(0.5..3.0);
        let beta = rng.gen_range(1.2..3.0);
        let phi0 = log_uniform(&mut rng, 0.1, 10.0);
        let k0 = rng.gen_range(-2.0..2.0);
        let sequence = if j % 2 == 0 {
            SyntheticSequence::power(c, alpha, beta, k0, phi0, rng.gen_range(0.01..1.0))?
        } else {
            SyntheticSequence::step(c, alpha, beta, k0, phi0, rng.gen_range(0.5..1.0))?
        };
        let threshold = sequence.threshold();
        out.push(DeGiorgiCase {
            recurrence_ratio: sequence.recurrence_ratio(200),
            phi_at_threshold: sequence.phi(k0 + threshold),
            threshold,
            sequence,
        });
    }
    Ok(out)
}
