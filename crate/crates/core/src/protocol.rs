//! Block-wise protocol: estimate frequencies, verify the energy assumption,
//! test the witness against the threshold, and account certified bits.

use crate::certify::{evaluate_witness, finite_size_min_entropy, EnergyBound, FiniteSizeParams, Witness};
use crate::error::{Error, Result};
use crate::physics::{Behavior, MeanPhotonNumber, RoundRecord};
use statrs::distribution::{ContinuousCDF, Normal};

#[derive(Clone, Debug)]
pub struct ProtocolConfig {
    pub rep_rate_hz: f64,
    pub block_duration_s: f64,
    pub omega: EnergyBound,
    pub threshold_h: f64,
    pub fs: FiniteSizeParams,
    pub witness: Witness,
}

impl ProtocolConfig {
    pub fn new(
        rep_rate_hz: f64,
        block_duration_s: f64,
        omega: EnergyBound,
        threshold_h: f64,
        fs: FiniteSizeParams,
        witness: Witness,
    ) -> Result<Self> {
        let cfg = Self {
            rep_rate_hz,
            block_duration_s,
            omega,
            threshold_h,
            fs,
            witness,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rep_rate_hz > 0.0 && self.rep_rate_hz.is_finite()) {
            return Err(Error::Argument("repetition rate must be positive".into()));
        }
        if !(self.block_duration_s > 0.0 && self.block_duration_s.is_finite()) {
            return Err(Error::Argument("block duration must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.threshold_h) {
            return Err(Error::Argument(format!(
                "threshold {} outside [0,1]",
                self.threshold_h
            )));
        }
        let n = self.block_rounds();
        if n < 1 {
            return Err(Error::Argument("a block must contain at least one round".into()));
        }
        self.fs.validate()?;
        if self.fs.n != n {
            return Err(Error::Argument(format!(
                "finite-size n = {} does not match {n} rounds per block",
                self.fs.n
            )));
        }
        if self.witness.omega != self.omega {
            return Err(Error::Argument(format!(
                "witness built for ω = {} used at ω = {}",
                self.witness.omega.omega(),
                self.omega.omega()
            )));
        }
        Ok(())
    }

    pub fn block_rounds(&self) -> u64 {
        (self.rep_rate_hz * self.block_duration_s).round() as u64
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BlockResult {
    pub frequencies: Behavior,
    pub measured_omega: MeanPhotonNumber,
    /// `NaN` for a degenerate block.
    pub witness_value: f64,
    pub passed: bool,
    pub certified_bits: u64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SessionSummary {
    pub blocks_total: u64,
    pub blocks_passed: u64,
    pub success_fraction: f64,
    /// `rep_rate · h · success_fraction`.
    pub certified_rate_hz: f64,
    /// Finite-size certified bits per second of session time.
    pub finite_size_rate_hz: f64,
    pub total_certified_bits: u64,
}

/// Upper bound on photons per pulse from the monitored average power,
/// assuming a 100 % duty cycle.
pub fn estimate_mean_photon(
    avg_power_w: f64,
    rep_rate_hz: f64,
    min_photon_energy_j: f64,
) -> Result<MeanPhotonNumber> {
    if !(rep_rate_hz > 0.0) || !(min_photon_energy_j > 0.0) {
        return Err(Error::Argument(
            "repetition rate and photon energy must be positive".into(),
        ));
    }
    if !(avg_power_w >= 0.0) {
        return Err(Error::Argument(format!("invalid power reading {avg_power_w}")));
    }
    MeanPhotonNumber::new(avg_power_w / (rep_rate_hz * min_photon_energy_j))
}

/// Empirical `f(b|x) = count(x,b) / count(x)`.
pub fn accumulate_block<I>(records: I) -> Result<Behavior>
where
    I: IntoIterator<Item = RoundRecord>,
{
    let mut counts = [[0u64; 2]; 2];
    for r in records {
        counts[r.x() as usize][r.b() as usize] += 1;
    }
    let mut p = [[0.0; 2]; 2];
    for x in 0..2 {
        let total = counts[x][0] + counts[x][1];
        if total == 0 {
            return Err(Error::DegenerateBlock(x as u8));
        }
        p[x][1] = counts[x][1] as f64 / total as f64;
        p[x][0] = 1.0 - p[x][1];
    }
    Behavior::new(p)
}

/// Pure function of its inputs: energy check, witness test, bit accounting.
pub fn judge_block(f: &Behavior, measured_omega: MeanPhotonNumber, cfg: &ProtocolConfig) -> BlockResult {
    let witness_value = evaluate_witness(&cfg.witness, f);
    let energy_ok = measured_omega.value() <= cfg.omega.omega();
    let passed = energy_ok && witness_value >= cfg.threshold_h;
    let certified_bits = if passed {
        // threshold_h and fs are validated with the config.
        finite_size_min_entropy(cfg.threshold_h, &cfg.fs).map_or(0, |b| b.floor() as u64)
    } else {
        0
    };
    BlockResult {
        frequencies: *f,
        measured_omega,
        witness_value,
        passed,
        certified_bits,
    }
}

/// Result recorded for a block in which some input never occurred.
pub fn degenerate_block(measured_omega: MeanPhotonNumber) -> BlockResult {
    BlockResult {
        frequencies: Behavior::uniform(),
        measured_omega,
        witness_value: f64::NAN,
        passed: false,
        certified_bits: 0,
    }
}

pub fn summarize_session(results: &[BlockResult], cfg: &ProtocolConfig) -> Result<SessionSummary> {
    if results.is_empty() {
        return Err(Error::Argument("cannot summarise an empty session".into()));
    }
    let blocks_total = results.len() as u64;
    let blocks_passed = results.iter().filter(|r| r.passed).count() as u64;
    let success_fraction = blocks_passed as f64 / blocks_total as f64;
    let total_certified_bits: u64 = results.iter().map(|r| r.certified_bits).sum();
    let duration = blocks_total as f64 * cfg.block_duration_s;
    Ok(SessionSummary {
        blocks_total,
        blocks_passed,
        success_fraction,
        certified_rate_hz: cfg.rep_rate_hz * cfg.threshold_h * success_fraction,
        finite_size_rate_hz: total_certified_bits as f64 / duration,
        total_certified_bits,
    })
}

/// Threshold `sigmas` block-level standard deviations below the expected
/// witness value, clamped to `[0, 1]`.
pub fn threshold_for_margin(w: &Witness, expected: &Behavior, rounds: u64, sigmas: f64) -> f64 {
    let mean = evaluate_witness(w, expected);
    (mean - sigmas * w.block_std(expected, rounds)).clamp(0.0, 1.0)
}

/// Threshold passing with probability `target` under a normal approximation
/// of the block witness value.
pub fn threshold_for_pass_probability(
    w: &Witness,
    expected: &Behavior,
    rounds: u64,
    target: f64,
) -> Result<f64> {
    if !(target > 0.0 && target < 1.0) {
        return Err(Error::Argument(format!("pass probability {target} outside (0,1)")));
    }
    let z = Normal::standard().inverse_cdf(target);
    Ok(threshold_for_margin(w, expected, rounds, z))
}

/// Single-writer protocol state: blocks are judged in order and appended.
#[derive(Clone, Debug)]
pub struct Session {
    cfg: ProtocolConfig,
    results: Vec<BlockResult>,
}

impl Session {
    pub fn new(cfg: ProtocolConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            cfg,
            results: Vec::new(),
        })
    }

    pub fn config(&self) -> &ProtocolConfig {
        &self.cfg
    }

    /// Judges one block of rounds. A block missing an input fails closed.
    pub fn process_block<I>(&mut self, records: I, measured_omega: MeanPhotonNumber) -> &BlockResult
    where
        I: IntoIterator<Item = RoundRecord>,
    {
        let result = match accumulate_block(records) {
            Ok(f) => judge_block(&f, measured_omega, &self.cfg),
            Err(_) => degenerate_block(measured_omega),
        };
        self.results.push(result);
        self.results.last().expect("just pushed")
    }

    pub fn results(&self) -> &[BlockResult] {
        &self.results
    }

    pub fn summary(&self) -> Result<SessionSummary> {
        summarize_session(&self.results, &self.cfg)
    }
}
