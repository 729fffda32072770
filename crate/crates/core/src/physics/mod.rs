//! BPSK coherent-state source, homodyne sign receiver and the imperfection
//! models used to describe a real device.
//!
//! Quadrature convention: `X = a + a†`, so the vacuum has variance 1 and
//! `|α⟩` has mean `2α`. With `|α|² = ω` the sign receiver is correct with
//! probability `Φ(2√ω)`; that probability does not depend on the convention.

mod feedback;
mod sim;

pub use feedback::{stabilize_phase, PhaseSchedule};
pub use sim::{
    simulate_rounds, PowerSample, RoundLog, RoundRecord, Simulation, SimulationParams,
    CHUNK_ROUNDS,
};

use crate::error::{Error, Result};
use statrs::function::erf::erfc;
use std::f64::consts::SQRT_2;

/// Planck constant times the speed of light, in J·m.
const HC_J_M: f64 = 6.626_070_15e-34 * 299_792_458.0;

/// Energy of one photon at the given vacuum wavelength.
pub fn photon_energy_j(wavelength_m: f64) -> Result<f64> {
    if !(wavelength_m > 0.0 && wavelength_m.is_finite()) {
        return Err(Error::Argument(format!(
            "wavelength must be positive, got {wavelength_m}"
        )));
    }
    Ok(HC_J_M / wavelength_m)
}

/// Photons per pulse (`|α|²` for a coherent state).
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct MeanPhotonNumber(f64);

impl MeanPhotonNumber {
    pub fn new(value: f64) -> Result<Self> {
        if value.is_nan() || value < 0.0 {
            return Err(Error::Domain(format!(
                "mean photon number must be >= 0, got {value}"
            )));
        }
        Ok(Self(value))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Tolerance on row normalisation of a [`Behavior`].
pub const NORMALIZATION_TOL: f64 = 1e-12;

/// Conditional distribution `p(b|x)`, stored as `p[x][b]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Behavior {
    p: [[f64; 2]; 2],
}

impl Behavior {
    pub fn new(p: [[f64; 2]; 2]) -> Result<Self> {
        for (x, row) in p.iter().enumerate() {
            for &v in row {
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::Argument(format!(
                        "p(b|x={x}) entry {v} outside [0,1]"
                    )));
                }
            }
            if (row[0] + row[1] - 1.0).abs() > NORMALIZATION_TOL {
                return Err(Error::Argument(format!(
                    "row x={x} sums to {}, not 1",
                    row[0] + row[1]
                )));
            }
        }
        Ok(Self { p })
    }

    /// Builds a behaviour from `p(1|0)` and `p(1|1)`.
    pub fn from_ones(p1_given0: f64, p1_given1: f64) -> Result<Self> {
        Self::new([[1.0 - p1_given0, p1_given0], [1.0 - p1_given1, p1_given1]])
    }

    /// The behaviour with `p(b=x|x) = success` for both inputs.
    pub fn symmetric(success: f64) -> Result<Self> {
        Self::from_ones(1.0 - success, success)
    }

    pub fn uniform() -> Self {
        Self { p: [[0.5; 2]; 2] }
    }

    /// `b = x` with certainty.
    pub fn identity() -> Self {
        Self {
            p: [[1.0, 0.0], [0.0, 1.0]],
        }
    }

    pub fn get(&self, x: usize, b: usize) -> f64 {
        self.p[x][b]
    }

    pub fn as_array(&self) -> [[f64; 2]; 2] {
        self.p
    }

    pub fn p1_given0(&self) -> f64 {
        self.p[0][1]
    }

    pub fn p1_given1(&self) -> f64 {
        self.p[1][1]
    }

    /// Average probability that `b = x` under uniform inputs.
    pub fn success(&self) -> f64 {
        0.5 * (self.p[0][0] + self.p[1][1])
    }

    /// Best success probability over the two output labelings.
    pub fn best_labeling_success(&self) -> f64 {
        let flipped = 0.5 * (self.p[0][1] + self.p[1][0]);
        self.success().max(flipped)
    }

    /// Convex combination `(1-t)·self + t·other`.
    pub fn mix(&self, other: &Behavior, t: f64) -> Result<Behavior> {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::Argument(format!("mixing weight {t} outside [0,1]")));
        }
        let u = (1.0 - t) * self.p1_given0() + t * other.p1_given0();
        let v = (1.0 - t) * self.p1_given1() + t * other.p1_given1();
        Behavior::from_ones(u, v)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseModel {
    p_noise: f64,
}

impl NoiseModel {
    pub fn new(p_noise: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p_noise) {
            return Err(Error::Argument(format!(
                "p_noise must lie in [0,1], got {p_noise}"
            )));
        }
        Ok(Self { p_noise })
    }

    pub fn noiseless() -> Self {
        Self { p_noise: 0.0 }
    }

    pub fn p_noise(&self) -> f64 {
        self.p_noise
    }
}

/// Interferometer phase drift and the parameters of the hill-climbing
/// controller that compensates it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DriftModel {
    pub phase_rad_per_s: f64,
    /// Controller step per feedback period, in radians.
    pub feedback_gain: f64,
    pub feedback_period_s: f64,
}

impl DriftModel {
    pub fn new(phase_rad_per_s: f64, feedback_gain: f64, feedback_period_s: f64) -> Result<Self> {
        if !(feedback_period_s > 0.0 && feedback_period_s.is_finite()) {
            return Err(Error::Argument(format!(
                "feedback period must be positive, got {feedback_period_s}"
            )));
        }
        if !phase_rad_per_s.is_finite() || !(feedback_gain >= 0.0 && feedback_gain.is_finite()) {
            return Err(Error::Argument(
                "drift rate must be finite and feedback gain nonnegative".into(),
            ));
        }
        Ok(Self {
            phase_rad_per_s,
            feedback_gain,
            feedback_period_s,
        })
    }

    /// No drift; the controller is idle.
    pub fn stable() -> Self {
        Self {
            phase_rad_per_s: 0.0,
            feedback_gain: 0.0,
            feedback_period_s: 1.0,
        }
    }

    /// Drift accumulated over one feedback period.
    pub fn drift_per_period(&self) -> f64 {
        self.phase_rad_per_s.abs() * self.feedback_period_s
    }
}

/// Standard normal CDF.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / SQRT_2)
}

/// `|⟨α|−α⟩| = exp(−2|α|²)`.
pub fn coherent_overlap(omega: MeanPhotonNumber) -> f64 {
    (-2.0 * omega.value()).exp()
}

/// Minimum-error success probability for equiprobable `|±α⟩`.
pub fn helstrom_success(omega: MeanPhotonNumber) -> f64 {
    // 1 - overlap² = -expm1(-4ω), kept accurate for small ω.
    let one_minus_sq = -(-4.0 * omega.value()).exp_m1();
    0.5 * (1.0 + one_minus_sq.sqrt())
}

/// Sign-of-quadrature receiver with perfect state preparation.
pub fn ideal_homodyne_behavior(omega: MeanPhotonNumber) -> Behavior {
    let s = normal_cdf(2.0 * omega.value().sqrt());
    Behavior {
        p: [[s, 1.0 - s], [1.0 - s, s]],
    }
}

/// Symmetric behaviour reaching the Helstrom limit.
pub fn helstrom_behavior(omega: MeanPhotonNumber) -> Behavior {
    let s = helstrom_success(omega);
    Behavior {
        p: [[s, 1.0 - s], [1.0 - s, s]],
    }
}

/// `p(b|x) → (1 − p_noise)·p(b|x) + p_noise/2`.
pub fn apply_white_noise(q: &Behavior, nm: NoiseModel) -> Behavior {
    let keep = 1.0 - nm.p_noise;
    let half = 0.5 * nm.p_noise;
    let mut p = [[0.0; 2]; 2];
    for x in 0..2 {
        p[x][1] = keep * q.p[x][1] + half;
        p[x][0] = 1.0 - p[x][1];
    }
    Behavior { p }
}
