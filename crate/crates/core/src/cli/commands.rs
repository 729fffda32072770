//! Command implementations behind the binary. Each returns a human-readable
//! report on success and a [`CliError`] tagged with its exit status.

use super::config::RunConfig;
use super::formats::{
    decode_bits, decode_monitor, decode_records, decode_session_log, encode_bits,
    encode_monitor, encode_records, encode_session_log, fmt_f64, LoggedBlock,
};
use crate::certify::{entropy_bound, EnergyBound, Witness};
use crate::error::Error;
use crate::extract::{extract_segments, output_length, Bits};
use crate::physics::{
    apply_white_noise, helstrom_behavior, ideal_homodyne_behavior, simulate_rounds,
    DriftModel, MeanPhotonNumber, PowerSample, RoundLog, SimulationParams,
};
use crate::protocol::{
    accumulate_block, degenerate_block, estimate_mean_photon, judge_block, summarize_session,
    ProtocolConfig, SessionSummary,
};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use std::fmt::{self, Write as _};
use std::path::{Path, PathBuf};
use std::str::FromStr;

/// Failure class, one exit status each.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Failure {
    Io,
    Usage,
    Config,
    Data,
    Certification,
}

impl Failure {
    pub fn exit_code(self) -> u8 {
        match self {
            Failure::Io => 1,
            Failure::Usage => 2,
            Failure::Config => 3,
            Failure::Data => 4,
            Failure::Certification => 5,
        }
    }
}

#[derive(Debug)]
pub struct CliError {
    pub failure: Failure,
    pub message: String,
}

impl CliError {
    pub fn new(failure: Failure, message: impl Into<String>) -> Self {
        Self {
            failure,
            message: message.into(),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

pub type CliResult<T> = std::result::Result<T, CliError>;

trait Tag<T> {
    /// Classifies a library error; I/O and config errors keep their own class.
    fn tag(self, failure: Failure, context: &str) -> CliResult<T>;
}

impl<T> Tag<T> for crate::Result<T> {
    fn tag(self, failure: Failure, context: &str) -> CliResult<T> {
        self.map_err(|e| {
            let failure = match e {
                Error::Io(_) => Failure::Io,
                Error::Config(_) => Failure::Config,
                _ => failure,
            };
            CliError::new(failure, format!("{context}: {e}"))
        })
    }
}

fn read(path: &Path) -> CliResult<Vec<u8>> {
    std::fs::read(path)
        .map_err(|e| CliError::new(Failure::Io, format!("cannot read {}: {e}", path.display())))
}

fn read_text(path: &Path) -> CliResult<String> {
    let bytes = read(path)?;
    String::from_utf8(bytes).map_err(|e| {
        CliError::new(
            Failure::Data,
            format!("{}: invalid UTF-8 at byte {}", path.display(), e.utf8_error().valid_up_to()),
        )
    })
}

fn write(path: &Path, data: impl AsRef<[u8]>) -> CliResult<()> {
    std::fs::write(path, data)
        .map_err(|e| CliError::new(Failure::Io, format!("cannot write {}: {e}", path.display())))
}

pub fn load_config(path: &Path) -> CliResult<RunConfig> {
    read_text(path)?
        .parse::<RunConfig>()
        .map_err(|e| CliError::new(Failure::Config, format!("{}: {e}", path.display())))
}

fn load_witness(path: &Path) -> CliResult<Witness> {
    read_text(path)?
        .parse::<Witness>()
        .tag(Failure::Data, &path.display().to_string())
}

/// `<path>.monitor.csv`.
pub fn default_monitor_path(records: &Path) -> PathBuf {
    let mut s = records.as_os_str().to_owned();
    s.push(".monitor.csv");
    PathBuf::from(s)
}

/// Mean photon number for block `k`: the average of the power samples taken
/// inside the block, or the latest earlier sample when none was. A block with
/// no applicable reading is reported at +∞ so that it fails the energy check.
pub fn block_mean_photon(
    monitor: &[PowerSample],
    start_s: f64,
    end_s: f64,
    rep_rate_hz: f64,
    photon_energy_j: f64,
) -> crate::Result<MeanPhotonNumber> {
    let inside: Vec<f64> = monitor
        .iter()
        .filter(|p| p.time_s >= start_s && p.time_s < end_s)
        .map(|p| p.power_w)
        .collect();
    let power = if inside.is_empty() {
        match monitor
            .iter()
            .filter(|p| p.time_s < start_s)
            .max_by(|a, b| a.time_s.total_cmp(&b.time_s))
        {
            Some(p) => p.power_w,
            None => return MeanPhotonNumber::new(f64::INFINITY),
        }
    } else {
        inside.iter().sum::<f64>() / inside.len() as f64
    };
    estimate_mean_photon(power, rep_rate_hz, photon_energy_j)
}

/// Judges every complete block of `rounds`; a trailing partial block is
/// ignored.
pub fn run_blocks(
    rounds: &RoundLog,
    monitor: &[PowerSample],
    cfg: &ProtocolConfig,
    photon_energy_j: f64,
) -> crate::Result<Vec<LoggedBlock>> {
    let n = cfg.block_rounds();
    let blocks = rounds.len() / n;
    (0..blocks)
        .map(|k| {
            let start = k as f64 * cfg.block_duration_s;
            let measured = block_mean_photon(
                monitor,
                start,
                start + cfg.block_duration_s,
                cfg.rep_rate_hz,
                photon_energy_j,
            )?;
            let result = match accumulate_block(rounds.range(k * n, (k + 1) * n)) {
                Ok(f) => judge_block(&f, measured, cfg),
                Err(_) => degenerate_block(measured),
            };
            Ok(LoggedBlock {
                block_index: k,
                result,
            })
        })
        .collect()
}

fn success_frequency(rounds: &RoundLog) -> f64 {
    let hits = rounds.iter().filter(|r| r.x() == r.b()).count();
    hits as f64 / rounds.len() as f64
}

pub fn cmd_simulate(config: &Path, output: &Path, monitor: Option<&Path>) -> CliResult<String> {
    let cfg = load_config(config)?;
    let params = cfg.simulation().tag(Failure::Config, "config")?;
    let monitor_path = monitor.map_or_else(|| default_monitor_path(output), Path::to_path_buf);
    let mut report = String::new();
    if params.rounds == 0 {
        write(output, encode_records(cfg.rep_rate_hz, &RoundLog::new()))?;
        write(&monitor_path, encode_monitor(&[]))?;
        let _ = writeln!(report, "rounds = 0");
        return Ok(report);
    }
    let sim = simulate_rounds(&params).tag(Failure::Config, "simulation")?;
    write(output, encode_records(cfg.rep_rate_hz, &sim.rounds))?;
    write(&monitor_path, encode_monitor(&sim.power))?;
    let n = sim.rounds.len();
    let s = success_frequency(&sim.rounds);
    let _ = writeln!(report, "rounds = {n}");
    let _ = writeln!(report, "success_frequency = {s:.6}");
    let _ = writeln!(report, "success_sigma = {:.6}", (s * (1.0 - s) / n as f64).sqrt());
    let _ = writeln!(report, "phase_lock_quality = {:.6}", sim.phase.mean_lock_quality());
    if sim.phase.is_degraded() {
        let _ = writeln!(report, "warning: phase lock degraded");
    }
    Ok(report)
}

pub fn cmd_witness(config: &Path, output: &Path) -> CliResult<String> {
    let cfg = load_config(config)?;
    let w = cfg.build_witness().tag(Failure::Config, "witness")?;
    write(output, w.to_text())?;
    let p = cfg.protocol(Some(w)).tag(Failure::Config, "protocol")?;
    let expected = cfg.expected_behavior().tag(Failure::Config, "config")?;
    Ok(format!(
        "expected_witness_value = {:.9}\nthreshold_h = {:.9}\nrefinement_tolerance = {:.3e}\n",
        crate::certify::evaluate_witness(&p.witness, &expected),
        p.threshold_h,
        p.witness.tolerance
    ))
}

fn summary_text(s: &SessionSummary, threshold_h: f64) -> String {
    format!(
        "blocks_total = {}\nblocks_passed = {}\nsuccess_fraction = {:.6}\nthreshold_h = {:.9}\n\
         certified_rate_hz = {:.6e}\nfinite_size_rate_hz = {:.6e}\ntotal_certified_bits = {}\n",
        s.blocks_total,
        s.blocks_passed,
        s.success_fraction,
        threshold_h,
        s.certified_rate_hz,
        s.finite_size_rate_hz,
        s.total_certified_bits
    )
}

pub struct CertifyPaths<'a> {
    pub records: &'a Path,
    pub config: &'a Path,
    pub monitor: Option<&'a Path>,
    pub log: &'a Path,
    pub witness: Option<&'a Path>,
}

/// Runs the block pipeline and writes the session log. Fails with
/// [`Failure::Certification`] (after writing the log) when no block passed.
pub fn cmd_certify(paths: &CertifyPaths<'_>) -> CliResult<String> {
    let cfg = load_config(paths.config)?;
    let witness = paths.witness.map(load_witness).transpose()?;
    let pcfg = cfg.protocol(witness).tag(Failure::Config, "protocol")?;
    let (rate, rounds) =
        decode_records(&read(paths.records)?).tag(Failure::Data, &paths.records.display().to_string())?;
    if rate != cfg.rep_rate_hz {
        return Err(CliError::new(
            Failure::Data,
            format!("record file rate {rate} Hz differs from configured {} Hz", cfg.rep_rate_hz),
        ));
    }
    let monitor_path = paths
        .monitor
        .map_or_else(|| default_monitor_path(paths.records), Path::to_path_buf);
    let monitor = decode_monitor(&read_text(&monitor_path)?)
        .tag(Failure::Data, &monitor_path.display().to_string())?;
    let energy = cfg.photon_energy_j().tag(Failure::Config, "config")?;
    let blocks = run_blocks(&rounds, &monitor, &pcfg, energy).tag(Failure::Data, "blocks")?;
    if blocks.is_empty() {
        return Err(CliError::new(
            Failure::Data,
            format!(
                "{} rounds do not fill one block of {}",
                rounds.len(),
                pcfg.block_rounds()
            ),
        ));
    }
    write(paths.log, encode_session_log(&blocks))?;
    let results: Vec<_> = blocks.iter().map(|b| b.result).collect();
    let summary = summarize_session(&results, &pcfg).tag(Failure::Data, "summary")?;
    let text = summary_text(&summary, pcfg.threshold_h);
    if summary.blocks_passed == 0 {
        return Err(CliError::new(
            Failure::Certification,
            format!("no block passed certification\n{text}"),
        ));
    }
    Ok(text)
}

pub struct ExtractPaths<'a> {
    pub records: &'a Path,
    pub log: &'a Path,
    pub seed: &'a Path,
    pub config: &'a Path,
    pub output: &'a Path,
}

/// Hashes the raw bits of every passing block down to its output length and
/// writes the concatenation.
pub fn cmd_extract(paths: &ExtractPaths<'_>) -> CliResult<String> {
    let cfg = load_config(paths.config)?;
    let (_, rounds) =
        decode_records(&read(paths.records)?).tag(Failure::Data, &paths.records.display().to_string())?;
    let blocks = decode_session_log(&read_text(paths.log)?)
        .tag(Failure::Data, &paths.log.display().to_string())?;
    let seed = decode_bits(&read(paths.seed)?).tag(Failure::Data, &paths.seed.display().to_string())?;
    let n = cfg.block_rounds();
    let mut raw = Bits::zeros(0);
    let mut segments = Vec::new();
    for b in blocks.iter().filter(|b| b.result.passed && b.result.certified_bits > 0) {
        let m = output_length(b.result.certified_bits, cfg.epsilon_ext).tag(Failure::Config, "output length")?;
        if m == 0 {
            continue;
        }
        let (start, end) = (b.block_index * n, (b.block_index + 1) * n);
        if end > rounds.len() {
            return Err(CliError::new(
                Failure::Data,
                format!("block {} lies beyond the {} recorded rounds", b.block_index, rounds.len()),
            ));
        }
        raw.extend(&Bits::from_bools(&rounds.output_bits(start, end)));
        segments.push((n as usize, m as usize));
    }
    if segments.is_empty() {
        return Err(CliError::new(
            Failure::Certification,
            "session log certifies zero extractable bits; refusing to extract",
        ));
    }
    let out = extract_segments(&raw, &seed, &segments).tag(Failure::Data, "extraction")?;
    write(paths.output, encode_bits(&out))?;
    Ok(format!(
        "blocks_used = {}\noutput_bits = {}\n",
        segments.len(),
        out.len()
    ))
}

/// Writes `bits` bits from a ChaCha20 stream keyed by `rng_seed`. Intended
/// for testing; production seeds should come from an independent source.
pub fn cmd_gen_seed(bits: u64, rng_seed: u64, output: &Path) -> CliResult<String> {
    let mut rng = ChaCha20Rng::seed_from_u64(rng_seed);
    let mut bytes = vec![0u8; bits.div_ceil(8) as usize];
    rng.fill_bytes(&mut bytes);
    if !bits.is_multiple_of(8) {
        if let Some(last) = bytes.last_mut() {
            *last &= (1u8 << (bits % 8)) - 1;
        }
    }
    let seed = Bits::from_bytes(&bytes, bits as usize).tag(Failure::Usage, "seed")?;
    write(output, encode_bits(&seed))?;
    Ok(format!("seed_bits = {bits}\n"))
}

/// Figure datasets.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Figure {
    EntropyVsEnergy,
    Strategies,
    EnergyMonitor,
    Stability,
}

impl Figure {
    pub const NAMES: [&'static str; 4] = ["entropy-vs-energy", "strategies", "energy-monitor", "stability"];
}

impl FromStr for Figure {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        match s {
            "entropy-vs-energy" => Ok(Figure::EntropyVsEnergy),
            "strategies" => Ok(Figure::Strategies),
            "energy-monitor" => Ok(Figure::EnergyMonitor),
            "stability" => Ok(Figure::Stability),
            _ => Err(CliError::new(
                Failure::Usage,
                format!("unknown figure `{s}`; valid names: {}", Figure::NAMES.join(", ")),
            )),
        }
    }
}

/// Log-spaced ω values for the sweeps.
pub fn omega_sweep(cfg: &RunConfig) -> Vec<f64> {
    let (lo, hi) = (cfg.figure_omega_min.ln(), cfg.figure_omega_max.ln());
    let k = cfg.figure_points;
    (0..k)
        .map(|i| (lo + (hi - lo) * i as f64 / (k - 1) as f64).exp())
        .collect()
}

fn bound_or_nan(f: &crate::physics::Behavior, omega: f64, cfg: &RunConfig) -> crate::Result<f64> {
    match entropy_bound(f, EnergyBound::new(omega)?, &cfg.grid()?) {
        Ok(b) => Ok(b.value),
        Err(Error::Infeasible(_)) => Ok(f64::NAN),
        Err(e) => Err(e),
    }
}

pub fn figure_csv(figure: Figure, cfg: &RunConfig) -> crate::Result<String> {
    let mut s = String::new();
    match figure {
        Figure::Strategies => {
            s.push_str("omega,helstrom,homodyne,noisy\n");
            let noise = cfg.noise()?;
            for omega in omega_sweep(cfg) {
                let mpn = MeanPhotonNumber::new(omega)?;
                let homodyne = ideal_homodyne_behavior(mpn);
                let series = [
                    bound_or_nan(&helstrom_behavior(mpn), omega, cfg)?,
                    bound_or_nan(&homodyne, omega, cfg)?,
                    bound_or_nan(&apply_white_noise(&homodyne, noise), omega, cfg)?,
                ];
                let _ = writeln!(s, "{},{},{},{}", fmt_f64(omega), fmt_f64(series[0]), fmt_f64(series[1]), fmt_f64(series[2]));
            }
        }
        Figure::EntropyVsEnergy => {
            s.push_str("omega,model_entropy,simulated_entropy\n");
            let noise = cfg.noise()?;
            for (i, omega) in omega_sweep(cfg).into_iter().enumerate() {
                let mpn = MeanPhotonNumber::new(omega)?;
                let model = apply_white_noise(&ideal_homodyne_behavior(mpn), noise);
                let mut params = SimulationParams::new(
                    mpn,
                    noise,
                    DriftModel::stable(),
                    cfg.figure_rounds,
                    cfg.rep_rate_hz,
                    cfg.seed.wrapping_add(i as u64),
                );
                params.photon_energy_j = cfg.photon_energy_j()?;
                let sim = simulate_rounds(&params)?;
                let simulated = match accumulate_block(sim.rounds.iter()) {
                    Ok(f) => bound_or_nan(&f, omega, cfg)?,
                    Err(_) => f64::NAN,
                };
                let _ = writeln!(
                    s,
                    "{},{},{}",
                    fmt_f64(omega),
                    fmt_f64(bound_or_nan(&model, omega, cfg)?),
                    fmt_f64(simulated)
                );
            }
        }
        Figure::EnergyMonitor => {
            s.push_str("time_s,measured_omega,omega_bound\n");
            let params = cfg.simulation()?;
            let power = if params.rounds == 0 { Vec::new() } else { simulate_rounds(&params)?.power };
            for p in power {
                let m = estimate_mean_photon(p.power_w, cfg.rep_rate_hz, params.photon_energy_j)?;
                let _ = writeln!(s, "{},{},{}", fmt_f64(p.time_s), fmt_f64(m.value()), fmt_f64(cfg.omega_bound));
            }
        }
        Figure::Stability => {
            s.push_str("block_index,time_s,witness_value,threshold_h,passed,certified_bits\n");
            let params = cfg.simulation()?;
            let pcfg = cfg.protocol(None)?;
            if params.rounds > 0 {
                let sim = simulate_rounds(&params)?;
                for b in run_blocks(&sim.rounds, &sim.power, &pcfg, params.photon_energy_j)? {
                    let _ = writeln!(
                        s,
                        "{},{},{},{},{},{}",
                        b.block_index,
                        fmt_f64(b.block_index as f64 * pcfg.block_duration_s),
                        fmt_f64(b.result.witness_value),
                        fmt_f64(pcfg.threshold_h),
                        u8::from(b.result.passed),
                        b.result.certified_bits
                    );
                }
            }
        }
    }
    Ok(s)
}

pub fn cmd_figure(name: &str, config: &Path, output: &Path) -> CliResult<String> {
    let figure: Figure = name.parse()?;
    let cfg = load_config(config)?;
    let csv = figure_csv(figure, &cfg).tag(Failure::Config, "figure")?;
    write(output, &csv)?;
    Ok(format!("rows = {}\n", csv.lines().count().saturating_sub(1)))
}
