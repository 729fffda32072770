//! Acceptance criteria. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any failed.

mod common;

use common::{bias, caratheodory_min, naive_toeplitz, oracle_atoms};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sdiqrng::certify::{
    build_witness, entropy_bound, evaluate_witness, finite_size_min_entropy, EnergyBound,
    FiniteSizeParams, GridSpec,
};
use sdiqrng::cli::{figure_csv, run_blocks, Figure, RunConfig};
use sdiqrng::extract::{extract_stream, toeplitz_extract, Bits, ToeplitzSeed};
use sdiqrng::physics::{
    apply_white_noise, ideal_homodyne_behavior, simulate_rounds, Behavior, DriftModel,
    MeanPhotonNumber, NoiseModel, SimulationParams,
};
use sdiqrng::protocol::{summarize_session, BlockResult, ProtocolConfig};
use statrs::distribution::{ContinuousCDF, Normal};
use std::time::Instant;

const OMEGA: f64 = 0.005;
const P_NOISE: f64 = 0.39;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn operating_point() -> Behavior {
    apply_white_noise(
        &ideal_homodyne_behavior(MeanPhotonNumber::new(OMEGA).unwrap()),
        NoiseModel::new(P_NOISE).unwrap(),
    )
}

fn csv_rows(text: &str) -> Vec<Vec<f64>> {
    text.lines()
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect()
}

fn headline_rate() -> Outcome {
    const TOL: f64 = 1e-6;
    let omega = EnergyBound::new(OMEGA).unwrap();
    let witness = build_witness(&operating_point(), omega, &GridSpec::default()).unwrap();
    let rate = 1.25e9;
    let fs = FiniteSizeParams::new(rate as u64, 1e-9, 1.0, 1.0).unwrap();
    let cfg = ProtocolConfig::new(rate, 1.0, omega, 0.12, fs, witness).unwrap();
    let block = |passed| BlockResult {
        frequencies: operating_point(),
        measured_omega: MeanPhotonNumber::new(OMEGA).unwrap(),
        witness_value: 0.12,
        passed,
        certified_bits: 0,
    };
    let results: Vec<_> = (0..100).map(|i| block(i < 97)).collect();
    let s = summarize_session(&results, &cfg).unwrap();
    let rel = (s.certified_rate_hz - 145.5e6).abs() / 145.5e6;
    check(rel <= TOL, format!("rate {:.6e} Hz, rel err {rel:.2e} (tol {TOL:e})", s.certified_rate_hz))
}

fn strategy_ordering() -> Outcome {
    const SLACK: f64 = 1e-12;
    let cfg = RunConfig { figure_points: 50, p_noise: P_NOISE, ..RunConfig::default() };
    let rows = csv_rows(&figure_csv(Figure::Strategies, &cfg).unwrap());
    let bad: Vec<f64> = rows
        .iter()
        .filter(|r| !(r[1] + SLACK >= r[2] && r[2] + SLACK >= r[3] && r[3] >= 0.0))
        .map(|r| r[0])
        .collect();
    check(
        rows.len() == 50 && bad.is_empty(),
        format!("{} ω points, {} ordering violations {bad:?}", rows.len(), bad.len()),
    )
}

fn entropy_peak() -> Outcome {
    let cfg = RunConfig {
        figure_points: 50,
        figure_rounds: 100_000,
        p_noise: P_NOISE,
        ..RunConfig::default()
    };
    let rows = csv_rows(&figure_csv(Figure::EntropyVsEnergy, &cfg).unwrap());
    let (i, best) = rows
        .iter()
        .enumerate()
        .max_by(|a, b| a.1[1].total_cmp(&b.1[1]))
        .unwrap();
    let argmax = best[0];
    let interior = i > 0 && i + 1 < rows.len();
    check(
        interior && (1e-3..=1e-2).contains(&argmax),
        format!("argmax ω = {argmax:.4e} (h = {:.5}), interior = {interior}, bracket [1e-3, 1e-2]", best[1]),
    )
}

fn oracle_equivalence() -> Outcome {
    const TOL: f64 = 1e-6;
    let grid = GridSpec::new(20, 1e-6).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst = 0.0f64;
    for k in 0..10 {
        let (omega, f) = if k == 0 {
            (OMEGA, operating_point())
        } else {
            let omega = 10f64.powf(rng.random_range(-4.0..-0.3));
            let d = bias(omega) * rng.random::<f64>();
            let u = rng.random::<f64>() * (1.0 - d);
            let f = if rng.random::<bool>() {
                Behavior::from_ones(u, u + d)
            } else {
                Behavior::from_ones(u + d, u)
            };
            (omega, f.unwrap())
        };
        let lp = entropy_bound(&f, EnergyBound::new(omega).unwrap(), &grid).unwrap().value;
        let brute = caratheodory_min(&f, omega, &oracle_atoms(omega, &grid));
        worst = worst.max((lp - brute).abs());
    }
    check(worst <= TOL, format!("10 instances, max |LP − brute force| = {worst:.2e} (tol {TOL:e})"))
}

fn witness_soundness() -> Outcome {
    const TOL: f64 = 1e-9;
    let grid = GridSpec::default();
    let omega = EnergyBound::new(OMEGA).unwrap();
    let w = build_witness(&operating_point(), omega, &grid).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..1000 {
        let d = bias(OMEGA) * rng.random::<f64>();
        let u = rng.random::<f64>() * (1.0 - d);
        let (a, b) = if rng.random::<bool>() { (u, u + d) } else { (u + d, u) };
        let q = Behavior::from_ones(a, b).unwrap();
        let gap = evaluate_witness(&w, &q) - entropy_bound(&q, omega, &grid).unwrap().value;
        worst = worst.max(gap);
    }
    check(worst <= TOL, format!("1000 behaviours, max (witness − bound) = {worst:.3e} (tol {TOL:e})"))
}

fn simulator_fidelity() -> Outcome {
    const SIGMAS: f64 = 3.0;
    let expected = 0.61 * Normal::standard().cdf(2.0 * OMEGA.sqrt()) + 0.195;
    let n = 1_000_000u64;
    let params = SimulationParams::new(
        MeanPhotonNumber::new(OMEGA).unwrap(),
        NoiseModel::new(P_NOISE).unwrap(),
        DriftModel::stable(),
        n,
        1e5,
        6,
    );
    let t = Instant::now();
    let sim = simulate_rounds(&params).unwrap();
    let secs = t.elapsed().as_secs_f64();
    let hits = sim.rounds.iter().filter(|r| r.x() == r.b()).count() as f64;
    let s = hits / n as f64;
    let sigma = (expected * (1.0 - expected) / n as f64).sqrt();
    let z = (s - expected) / sigma;
    check(
        z.abs() <= SIGMAS && secs <= 30.0,
        format!("p(b=x) = {s:.6} vs {expected:.6}, z = {z:+.2} (tol {SIGMAS}σ), {secs:.2} s"),
    )
}

fn session_config(seconds: f64) -> RunConfig {
    RunConfig {
        seed: 8,
        rep_rate_hz: 1e5,
        duration_s: seconds,
        block_duration_s: 1.0,
        p_noise: P_NOISE,
        ..RunConfig::default()
    }
}

fn energy_enforcement() -> Outcome {
    let cfg = session_config(20.0);
    let params = cfg.simulation().unwrap();
    let sim = simulate_rounds(&params).unwrap();
    let pcfg = cfg.protocol(None).unwrap();
    let honest = run_blocks(&sim.rounds, &sim.power, &pcfg, params.photon_energy_j).unwrap();
    let over = honest.iter().filter(|b| b.result.measured_omega.value() > OMEGA).count();
    let mut power = sim.power.clone();
    power[7].power_w *= 2.0;
    let injected = run_blocks(&sim.rounds, &power, &pcfg, params.photon_energy_j).unwrap();
    let changed: Vec<u64> = honest
        .iter()
        .zip(&injected)
        .filter(|(a, b)| a.result.passed != b.result.passed)
        .map(|(a, _)| a.block_index)
        .collect();
    let failed_only_7 = !injected[7].result.passed && changed.iter().all(|&k| k == 7);
    check(
        over == 0 && honest[7].result.passed && failed_only_7,
        format!("honest blocks over bound: {over}; injected 2× at block 7 flips {changed:?}"),
    )
}

fn protocol_stability() -> Outcome {
    const FLOOR: f64 = 0.85;
    let cfg = session_config(100.0);
    let params = cfg.simulation().unwrap();
    let sim = simulate_rounds(&params).unwrap();
    let pcfg = cfg.protocol(None).unwrap();
    let blocks = run_blocks(&sim.rounds, &sim.power, &pcfg, params.photon_energy_j).unwrap();
    let passed = blocks.iter().filter(|b| b.result.passed).count();
    let frac = passed as f64 / blocks.len() as f64;
    check(
        blocks.len() == 100 && frac >= FLOOR,
        format!("{passed}/{} blocks passed at h = {:.5} (floor {FLOOR})", blocks.len(), pcfg.threshold_h),
    )
}

fn random_bits(rng: &mut ChaCha8Rng, n: usize) -> Vec<bool> {
    (0..n).map(|_| rng.random()).collect()
}

fn extractor() -> Outcome {
    const FLOOR_MBPS: f64 = 10.0;
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut mismatches = 0;
    for k in 0..100 {
        let (m, n) = if k == 0 {
            (512, 2048)
        } else {
            let m = rng.random_range(1..=512);
            (m, rng.random_range(m..=2048))
        };
        let raw = random_bits(&mut rng, n);
        let seed = random_bits(&mut rng, n + m - 1);
        let ts = ToeplitzSeed::new(Bits::from_bools(&seed), n, m).unwrap();
        let out = toeplitz_extract(&Bits::from_bools(&raw), &ts, m).unwrap();
        if out.to_bools() != naive_toeplitz(&raw, &seed, m) {
            mismatches += 1;
        }
    }
    let block = 1usize << 20;
    let m = 1usize << 17;
    let raw_len = 16 * block;
    let mut bytes = vec![0u8; raw_len / 8];
    rng.fill(&mut bytes[..]);
    let raw = Bits::from_bytes(&bytes, raw_len).unwrap();
    let mut sbytes = vec![0u8; (block + m - 1).div_ceil(8)];
    rng.fill(&mut sbytes[..]);
    let seed = Bits::from_bytes(&sbytes, block + m - 1).unwrap();
    let t = Instant::now();
    let out = extract_stream(&raw, &seed, block, m).unwrap();
    let mbps = raw_len as f64 / t.elapsed().as_secs_f64() / 1e6;
    check(
        mismatches == 0 && out.len() == 16 * m && mbps >= FLOOR_MBPS,
        format!("{mismatches}/100 oracle mismatches; throughput {mbps:.1} Mbit/s raw (floor {FLOOR_MBPS})"),
    )
}

fn finite_size() -> Outcome {
    let bits = |n: u64| finite_size_min_entropy(0.12, &FiniteSizeParams::new(n, 1e-9, 1.0, 1.0).unwrap()).unwrap();
    let at_million = bits(1_000_000);
    let sweep: Vec<f64> = (0..10).map(|k| bits(10u64.pow(3) * 3u64.pow(k))).collect();
    let monotone = sweep.windows(2).all(|w| w[1] >= w[0]);
    check(
        (at_million - 114_411.0).abs() <= 1.0 && monotone,
        format!("n = 1e6 → {at_million:.2} bits (target 114411 ± 1); monotone over 10 n: {monotone}"),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("headline rate arithmetic", headline_rate),
        ("strategy ordering", strategy_ordering),
        ("entropy-vs-energy peak", entropy_peak),
        ("oracle equivalence", oracle_equivalence),
        ("witness soundness", witness_soundness),
        ("simulator fidelity", simulator_fidelity),
        ("energy assumption enforcement", energy_enforcement),
        ("protocol stability", protocol_stability),
        ("extractor correctness and throughput", extractor),
        ("finite-size bound", finite_size),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let outcome = run();
        let secs = t.elapsed().as_secs_f64();
        let (tag, detail) = match &outcome {
            Ok(d) => ("PASS", d),
            Err(d) => ("FAIL", d),
        };
        failed += usize::from(outcome.is_err());
        println!("criterion {:>2} {tag}  {name}: {detail} [{secs:.1} s]", i + 1);
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
