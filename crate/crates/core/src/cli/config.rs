//! Plain-text run configuration: one `key = value` per line, `#` starts a
//! comment. Unknown and repeated keys are rejected.

use crate::certify::{build_witness, EnergyBound, FiniteSizeParams, GridSpec, Witness};
use crate::error::{Error, Result};
use crate::physics::{
    apply_white_noise, ideal_homodyne_behavior, photon_energy_j, Behavior, DriftModel,
    MeanPhotonNumber, NoiseModel, SimulationParams,
};
use crate::protocol::{threshold_for_margin, ProtocolConfig};
use std::collections::HashSet;
use std::str::FromStr;

/// Acceptance threshold on the witness value.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Threshold {
    Fixed(f64),
    /// `threshold_sigmas` block standard deviations below the expected value.
    Auto,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    pub rep_rate_hz: f64,
    pub duration_s: f64,
    /// Mean photon number actually emitted by the simulated source.
    pub omega: f64,
    /// Energy bound assumed by the certification.
    pub omega_bound: f64,
    pub p_noise: f64,
    pub drift_rad_per_s: f64,
    pub feedback_gain: f64,
    pub feedback_period_s: f64,
    pub lock_tolerance: f64,
    pub wavelength_m: f64,
    pub monitor_interval_s: f64,
    pub block_duration_s: f64,
    pub threshold_h: Threshold,
    pub threshold_sigmas: f64,
    pub epsilon: f64,
    /// `None` uses the witness coefficient range.
    pub fs_c: Option<f64>,
    pub fs_d: f64,
    pub epsilon_ext: f64,
    pub grid_points: usize,
    pub grid_min_energy: f64,
    pub figure_points: usize,
    pub figure_omega_min: f64,
    pub figure_omega_max: f64,
    pub figure_rounds: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        let grid = GridSpec::default();
        Self {
            seed: 1,
            rep_rate_hz: 1e5,
            duration_s: 60.0,
            omega: 0.005,
            omega_bound: 0.005,
            p_noise: 0.39,
            drift_rad_per_s: 0.0,
            feedback_gain: 0.02,
            feedback_period_s: 0.1,
            lock_tolerance: 0.01,
            wavelength_m: 1550e-9,
            monitor_interval_s: 1.0,
            block_duration_s: 1.0,
            threshold_h: Threshold::Auto,
            threshold_sigmas: 2.0,
            epsilon: 1e-9,
            fs_c: None,
            fs_d: 1.0,
            epsilon_ext: 2f64.powi(-64),
            grid_points: grid.energy_points,
            grid_min_energy: grid.min_energy,
            figure_points: 50,
            figure_omega_min: 1e-4,
            figure_omega_max: 1e-1,
            figure_rounds: 100_000,
        }
    }
}

fn bad(line: usize, msg: impl std::fmt::Display) -> Error {
    Error::Config(format!("line {line}: {msg}"))
}

fn num<T: FromStr>(line: usize, key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| bad(line, format!("`{key}` expects a number, got `{v}`")))
}

impl FromStr for RunConfig {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let mut c = RunConfig::default();
        let mut seen = HashSet::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let (key, value) = body
                .split_once('=')
                .ok_or_else(|| bad(line, format!("expected `key = value`, got `{body}`")))?;
            let (key, v) = (key.trim(), value.trim());
            if !seen.insert(key.to_string()) {
                return Err(bad(line, format!("duplicate key `{key}`")));
            }
            match key {
                "seed" => c.seed = num(line, key, v)?,
                "rep_rate_hz" => c.rep_rate_hz = num(line, key, v)?,
                "duration_s" => c.duration_s = num(line, key, v)?,
                "omega" => {
                    c.omega = num(line, key, v)?;
                    if !seen.contains("omega_bound") {
                        c.omega_bound = c.omega;
                    }
                }
                "omega_bound" => c.omega_bound = num(line, key, v)?,
                "p_noise" => c.p_noise = num(line, key, v)?,
                "drift_rad_per_s" => c.drift_rad_per_s = num(line, key, v)?,
                "feedback_gain" => c.feedback_gain = num(line, key, v)?,
                "feedback_period_s" => c.feedback_period_s = num(line, key, v)?,
                "lock_tolerance" => c.lock_tolerance = num(line, key, v)?,
                "wavelength_m" => c.wavelength_m = num(line, key, v)?,
                "monitor_interval_s" => c.monitor_interval_s = num(line, key, v)?,
                "block_duration_s" => c.block_duration_s = num(line, key, v)?,
                "threshold_h" => {
                    c.threshold_h = if v == "auto" {
                        Threshold::Auto
                    } else {
                        Threshold::Fixed(num(line, key, v)?)
                    }
                }
                "threshold_sigmas" => c.threshold_sigmas = num(line, key, v)?,
                "epsilon" => c.epsilon = num(line, key, v)?,
                "fs_c" => {
                    c.fs_c = if v == "auto" { None } else { Some(num(line, key, v)?) }
                }
                "fs_d" => c.fs_d = num(line, key, v)?,
                "epsilon_ext" => c.epsilon_ext = num(line, key, v)?,
                "grid_points" => c.grid_points = num(line, key, v)?,
                "grid_min_energy" => c.grid_min_energy = num(line, key, v)?,
                "figure_points" => c.figure_points = num(line, key, v)?,
                "figure_omega_min" => c.figure_omega_min = num(line, key, v)?,
                "figure_omega_max" => c.figure_omega_max = num(line, key, v)?,
                "figure_rounds" => c.figure_rounds = num(line, key, v)?,
                _ => return Err(bad(line, format!("unknown key `{key}`"))),
            }
        }
        c.validate()?;
        Ok(c)
    }
}

fn cfg_err(e: Error) -> Error {
    match e {
        Error::Config(_) => e,
        other => Error::Config(other.to_string()),
    }
}

impl RunConfig {
    /// Checks every value against its owning type.
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Config(format!("`{name}` must be positive, got {v}")))
            }
        };
        positive("rep_rate_hz", self.rep_rate_hz)?;
        positive("block_duration_s", self.block_duration_s)?;
        positive("monitor_interval_s", self.monitor_interval_s)?;
        if !(self.duration_s >= 0.0 && self.duration_s.is_finite()) {
            return Err(Error::Config(format!(
                "`duration_s` must be >= 0, got {}",
                self.duration_s
            )));
        }
        if !(self.lock_tolerance >= 0.0) {
            return Err(Error::Config("`lock_tolerance` must be >= 0".into()));
        }
        if !(self.threshold_sigmas >= 0.0 && self.threshold_sigmas.is_finite()) {
            return Err(Error::Config("`threshold_sigmas` must be >= 0".into()));
        }
        if let Threshold::Fixed(h) = self.threshold_h {
            if !(0.0..=1.0).contains(&h) {
                return Err(Error::Config(format!("`threshold_h` {h} outside [0,1]")));
            }
        }
        if !(self.epsilon_ext > 0.0 && self.epsilon_ext <= 1.0) {
            return Err(Error::Config(format!(
                "`epsilon_ext` must lie in (0,1], got {}",
                self.epsilon_ext
            )));
        }
        if !(self.figure_omega_min > 0.0 && self.figure_omega_min < self.figure_omega_max) {
            return Err(Error::Config(
                "figure ω range must satisfy 0 < figure_omega_min < figure_omega_max".into(),
            ));
        }
        if self.figure_points < 2 || self.figure_rounds < 2 {
            return Err(Error::Config(
                "`figure_points` and `figure_rounds` must be at least 2".into(),
            ));
        }
        self.source_omega()?;
        EnergyBound::new(self.omega_bound).map_err(cfg_err)?;
        self.noise()?;
        self.drift()?;
        self.grid()?;
        self.photon_energy_j()?;
        FiniteSizeParams::new(
            self.block_rounds().max(1),
            self.epsilon,
            self.fs_c.unwrap_or(1.0),
            self.fs_d,
        )
        .map_err(cfg_err)?;
        Ok(())
    }

    pub fn source_omega(&self) -> Result<MeanPhotonNumber> {
        MeanPhotonNumber::new(self.omega).map_err(cfg_err)
    }

    pub fn noise(&self) -> Result<NoiseModel> {
        NoiseModel::new(self.p_noise).map_err(cfg_err)
    }

    pub fn drift(&self) -> Result<DriftModel> {
        DriftModel::new(self.drift_rad_per_s, self.feedback_gain, self.feedback_period_s)
            .map_err(cfg_err)
    }

    pub fn grid(&self) -> Result<GridSpec> {
        GridSpec::new(self.grid_points, self.grid_min_energy).map_err(cfg_err)
    }

    pub fn photon_energy_j(&self) -> Result<f64> {
        photon_energy_j(self.wavelength_m).map_err(cfg_err)
    }

    pub fn total_rounds(&self) -> u64 {
        (self.rep_rate_hz * self.duration_s).round() as u64
    }

    pub fn block_rounds(&self) -> u64 {
        (self.rep_rate_hz * self.block_duration_s).round() as u64
    }

    pub fn simulation(&self) -> Result<SimulationParams> {
        let mut p = SimulationParams::new(
            self.source_omega()?,
            self.noise()?,
            self.drift()?,
            self.total_rounds(),
            self.rep_rate_hz,
            self.seed,
        );
        p.photon_energy_j = self.photon_energy_j()?;
        p.lock_tolerance = self.lock_tolerance;
        p.monitor_interval_s = self.monitor_interval_s;
        Ok(p)
    }

    /// Noisy homodyne behaviour of the honest source.
    pub fn expected_behavior(&self) -> Result<Behavior> {
        Ok(apply_white_noise(
            &ideal_homodyne_behavior(self.source_omega()?),
            self.noise()?,
        ))
    }

    pub fn build_witness(&self) -> Result<Witness> {
        let omega = EnergyBound::new(self.omega_bound).map_err(cfg_err)?;
        build_witness(&self.expected_behavior()?, omega, &self.grid()?).map_err(cfg_err)
    }

    /// Protocol configuration around `witness` (built by
    /// [`RunConfig::build_witness`] when `None`).
    pub fn protocol(&self, witness: Option<Witness>) -> Result<ProtocolConfig> {
        let witness = match witness {
            Some(w) => w,
            None => self.build_witness()?,
        };
        let n = self.block_rounds();
        let threshold = match self.threshold_h {
            Threshold::Fixed(h) => h,
            Threshold::Auto => threshold_for_margin(
                &witness,
                &self.expected_behavior()?,
                n,
                self.threshold_sigmas,
            ),
        };
        let fs = FiniteSizeParams::new(
            n,
            self.epsilon,
            self.fs_c.unwrap_or_else(|| witness.gamma_range()),
            self.fs_d,
        )
        .map_err(cfg_err)?;
        let omega = EnergyBound::new(self.omega_bound).map_err(cfg_err)?;
        ProtocolConfig::new(self.rep_rate_hz, self.block_duration_s, omega, threshold, fs, witness)
            .map_err(cfg_err)
    }
}
