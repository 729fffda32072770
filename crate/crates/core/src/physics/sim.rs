//! Seeded round-by-round simulator of the source, channel and receiver.
//!
//! Random number identity: rounds are grouped into chunks of
//! [`CHUNK_ROUNDS`]; chunk `k` draws from `ChaCha8Rng::seed_from_u64(seed)`
//! switched to stream `k`. Within a round the draws are, in order: one `u32`
//! whose low bit is `x`, one standard normal (quadrature noise), and, when
//! `p_noise > 0`, one uniform `f64` deciding whether the outcome is replaced
//! followed by one `u32` whose low bit is the replacement coin. Chunks are
//! independent, so sharded and sequential runs agree bit for bit.

use super::{stabilize_phase, DriftModel, MeanPhotonNumber, NoiseModel, PhaseSchedule};
use crate::error::{Error, Result};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

/// Rounds per independently seeded RNG stream. Multiple of 4 so chunks map
/// onto whole bytes of a [`RoundLog`].
pub const CHUNK_ROUNDS: u64 = 1 << 16;

/// One input/output pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct RoundRecord {
    index: u64,
    x: u8,
    b: u8,
}

impl RoundRecord {
    pub fn new(index: u64, x: u8, b: u8) -> Result<Self> {
        if x > 1 || b > 1 {
            return Err(Error::Argument(format!("bits must be 0 or 1, got x={x} b={b}")));
        }
        Ok(Self { index, x, b })
    }

    pub fn index(&self) -> u64 {
        self.index
    }

    pub fn x(&self) -> u8 {
        self.x
    }

    pub fn b(&self) -> u8 {
        self.b
    }
}

/// Compact sequence of rounds: two bits per round (`x` then `b`), four
/// rounds per byte, least significant bits first. Round indices are positions.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RoundLog {
    bytes: Vec<u8>,
    len: u64,
}

impl RoundLog {
    pub fn new() -> Self {
        Self::default()
    }

    /// Wraps packed bytes. Unused bits in the last byte must be zero.
    pub fn from_packed(bytes: Vec<u8>, len: u64) -> Result<Self> {
        let need = len.div_ceil(4);
        if bytes.len() as u64 != need {
            return Err(Error::Argument(format!(
                "{len} rounds need {need} bytes, got {}",
                bytes.len()
            )));
        }
        if !len.is_multiple_of(4) {
            let used = (len % 4) * 2;
            if bytes[bytes.len() - 1] >> used != 0 {
                return Err(Error::Argument("nonzero padding bits in last byte".into()));
            }
        }
        Ok(Self { bytes, len })
    }

    pub fn packed(&self) -> &[u8] {
        &self.bytes
    }

    pub fn len(&self) -> u64 {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn push(&mut self, x: u8, b: u8) {
        let slot = (self.len % 4) as u32;
        if slot == 0 {
            self.bytes.push(0);
        }
        let last = self.bytes.len() - 1;
        self.bytes[last] |= ((x & 1) | ((b & 1) << 1)) << (2 * slot);
        self.len += 1;
    }

    pub fn get(&self, index: u64) -> Option<RoundRecord> {
        if index >= self.len {
            return None;
        }
        let byte = self.bytes[(index / 4) as usize] >> (2 * (index % 4));
        Some(RoundRecord {
            index,
            x: byte & 1,
            b: (byte >> 1) & 1,
        })
    }

    /// Rounds with indices in `start..end` (clamped to the log length).
    pub fn range(&self, start: u64, end: u64) -> impl Iterator<Item = RoundRecord> + '_ {
        let end = end.min(self.len);
        (start.min(end)..end).map(move |i| self.get(i).expect("index in range"))
    }

    pub fn iter(&self) -> impl Iterator<Item = RoundRecord> + '_ {
        self.range(0, self.len)
    }

    /// Output bits `b` of the rounds in `start..end`, packed LSB-first.
    pub fn output_bits(&self, start: u64, end: u64) -> Vec<bool> {
        self.range(start, end).map(|r| r.b == 1).collect()
    }

    fn append_packed(&mut self, bytes: &[u8], len: u64) {
        assert!(self.len.is_multiple_of(4), "append on a byte boundary only");
        self.bytes.extend_from_slice(bytes);
        self.len += len;
    }
}

impl FromIterator<RoundRecord> for RoundLog {
    fn from_iter<I: IntoIterator<Item = RoundRecord>>(iter: I) -> Self {
        let mut log = RoundLog::new();
        for r in iter {
            log.push(r.x, r.b);
        }
        log
    }
}

/// Average optical power over one monitoring window starting at `time_s`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PowerSample {
    pub time_s: f64,
    pub power_w: f64,
}

#[derive(Clone, Debug)]
pub struct SimulationParams {
    pub omega: MeanPhotonNumber,
    pub noise: NoiseModel,
    pub drift: DriftModel,
    pub rounds: u64,
    pub rep_rate_hz: f64,
    pub seed: u64,
    /// Lowest photon energy in the signal band; converts ω into power.
    pub photon_energy_j: f64,
    /// Acceptable `1 − |cos θ|` for the phase controller.
    pub lock_tolerance: f64,
    /// Length of one power-monitor window.
    pub monitor_interval_s: f64,
}

impl SimulationParams {
    pub fn new(
        omega: MeanPhotonNumber,
        noise: NoiseModel,
        drift: DriftModel,
        rounds: u64,
        rep_rate_hz: f64,
        seed: u64,
    ) -> Self {
        Self {
            omega,
            noise,
            drift,
            rounds,
            rep_rate_hz,
            seed,
            photon_energy_j: super::photon_energy_j(1550e-9).expect("positive wavelength"),
            lock_tolerance: 0.01,
            monitor_interval_s: 1.0,
        }
    }

    pub fn duration_s(&self) -> f64 {
        self.rounds as f64 / self.rep_rate_hz
    }
}

#[derive(Clone, Debug)]
pub struct Simulation {
    pub rounds: RoundLog,
    pub power: Vec<PowerSample>,
    pub phase: PhaseSchedule,
}

pub fn simulate_rounds(params: &SimulationParams) -> Result<Simulation> {
    if params.rounds == 0 {
        return Err(Error::Argument("round count must be at least 1".into()));
    }
    if !(params.rep_rate_hz > 0.0 && params.rep_rate_hz.is_finite()) {
        return Err(Error::Argument(format!(
            "repetition rate must be positive, got {}",
            params.rep_rate_hz
        )));
    }
    if !(params.photon_energy_j > 0.0) || !(params.monitor_interval_s > 0.0) {
        return Err(Error::Argument(
            "photon energy and monitor interval must be positive".into(),
        ));
    }

    let duration = params.duration_s();
    let drift_rate = params.drift.phase_rad_per_s;
    let phase = if drift_rate == 0.0 {
        let periods = (duration / params.drift.feedback_period_s).ceil() as usize;
        PhaseSchedule::constant(params.drift.feedback_period_s, periods)
    } else {
        stabilize_phase(&params.drift, duration, params.lock_tolerance, |t, phi| {
            (drift_rate * t - phi).cos()
        })?
    };

    let chunks = params.rounds.div_ceil(CHUNK_ROUNDS);
    let packed: Vec<(Vec<u8>, u64)> = (0..chunks)
        .into_par_iter()
        .map(|k| simulate_chunk(params, &phase, k))
        .collect();
    let mut rounds = RoundLog {
        bytes: Vec::with_capacity(params.rounds.div_ceil(4) as usize),
        len: 0,
    };
    for (bytes, len) in &packed {
        rounds.append_packed(bytes, *len);
    }

    Ok(Simulation {
        rounds,
        power: power_samples(params, duration),
        phase,
    })
}

fn simulate_chunk(params: &SimulationParams, phase: &PhaseSchedule, chunk: u64) -> (Vec<u8>, u64) {
    let start = chunk * CHUNK_ROUNDS;
    let end = (start + CHUNK_ROUNDS).min(params.rounds);
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    rng.set_stream(chunk);

    let amplitude = 2.0 * params.omega.value().sqrt();
    let p_noise = params.noise.p_noise();
    let drifting = params.drift.phase_rad_per_s != 0.0;
    let mut log = RoundLog::new();
    for i in start..end {
        let x = (rng.next_u32() & 1) as u8;
        let mean = if drifting {
            let t = i as f64 / params.rep_rate_hz;
            amplitude * (params.drift.phase_rad_per_s * t - phase.correction_at(t)).cos()
        } else {
            amplitude
        };
        let z: f64 = rng.sample(StandardNormal);
        let quadrature = if x == 0 { mean + z } else { -mean + z };
        // |α⟩ ↔ x = 0 sits at positive quadrature; a tie at exactly 0 reads b = 1.
        let mut b = if quadrature > 0.0 { 0 } else { 1 };
        if p_noise > 0.0 && rng.random::<f64>() < p_noise {
            b = (rng.next_u32() & 1) as u8;
        }
        log.push(x, b);
    }
    (log.bytes, log.len)
}

/// One sample per monitor window. The source emits exactly ω photons per
/// pulse, so every window reads `ω · rate · E_photon`, nudged down by at most
/// a few ulps so that converting back to photons never exceeds ω.
fn power_samples(params: &SimulationParams, duration: f64) -> Vec<PowerSample> {
    let per_photon = params.rep_rate_hz * params.photon_energy_j;
    let omega = params.omega.value();
    let mut power = omega * per_photon;
    while power > 0.0 && power / per_photon > omega {
        power = power.next_down();
    }
    let windows = ((duration / params.monitor_interval_s).ceil() as usize).max(1);
    (0..windows)
        .map(|k| PowerSample {
            time_s: k as f64 * params.monitor_interval_s,
            power_w: power,
        })
        .collect()
}
