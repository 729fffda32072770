use sdiqrng::cli::formats::{decode_bits, decode_monitor, decode_records, decode_session_log, encode_monitor};
use sdiqrng::cli::{RunConfig, Threshold};
use sdiqrng::extract::output_length;
use sdiqrng::physics::simulate_rounds;
use sdiqrng::protocol::judge_block;
use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};
use tempfile::TempDir;

const SMALL: &str = "seed = 11\nrep_rate_hz = 100000\nduration_s = 5\nblock_duration_s = 1\n";

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sdiqrng"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

struct Run {
    dir: TempDir,
}

impl Run {
    fn new(config: &str) -> Self {
        let dir = TempDir::new().unwrap();
        fs::write(dir.path().join("run.cfg"), config).unwrap();
        Self { dir }
    }

    fn p(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn s(&self, name: &str) -> String {
        self.p(name).to_str().unwrap().to_string()
    }

    fn simulate(&self) -> Output {
        bin(&["simulate", "--config", &self.s("run.cfg"), "--output", &self.s("r.sdiq")])
    }

    fn certify(&self) -> Output {
        bin(&[
            "certify", "--records", &self.s("r.sdiq"), "--config", &self.s("run.cfg"),
            "--log", &self.s("s.csv"),
        ])
    }

    fn extract(&self, out: &str) -> Output {
        bin(&[
            "extract", "--records", &self.s("r.sdiq"), "--log", &self.s("s.csv"),
            "--seed", &self.s("seed.bin"), "--config", &self.s("run.cfg"), "--output", &self.s(out),
        ])
    }

    fn gen_seed(&self, bits: u64) {
        let o = bin(&["gen-seed", "--bits", &bits.to_string(), "--output", &self.s("seed.bin")]);
        assert_eq!(code(&o), 0);
    }
}

#[test]
fn simulate_is_byte_identical_on_rerun() {
    let run = Run::new(SMALL);
    assert_eq!(code(&run.simulate()), 0);
    let first = fs::read(run.p("r.sdiq")).unwrap();
    let mon = fs::read(run.p("r.sdiq.monitor.csv")).unwrap();
    assert_eq!(code(&run.simulate()), 0);
    assert_eq!(fs::read(run.p("r.sdiq")).unwrap(), first);
    assert_eq!(fs::read(run.p("r.sdiq.monitor.csv")).unwrap(), mon);
}

#[test]
fn simulate_output_matches_in_memory_run() {
    let run = Run::new(SMALL);
    assert_eq!(code(&run.simulate()), 0);
    let cfg: RunConfig = SMALL.parse().unwrap();
    let sim = simulate_rounds(&cfg.simulation().unwrap()).unwrap();
    let (rate, log) = decode_records(&fs::read(run.p("r.sdiq")).unwrap()).unwrap();
    assert_eq!(rate, 1e5);
    assert_eq!(log, sim.rounds);
    let mon = decode_monitor(&fs::read_to_string(run.p("r.sdiq.monitor.csv")).unwrap()).unwrap();
    assert_eq!(mon, sim.power);
}

#[test]
fn zero_duration_writes_header_only() {
    let run = Run::new("duration_s = 0\n");
    assert_eq!(code(&run.simulate()), 0);
    let bytes = fs::read(run.p("r.sdiq")).unwrap();
    assert_eq!(bytes.len(), 21);
    assert_eq!(&bytes[..4], b"SDIQ");
    assert!(decode_records(&bytes).unwrap().1.is_empty());
}

#[test]
fn certify_and_extract_accounting() {
    let run = Run::new(SMALL);
    assert_eq!(code(&run.simulate()), 0);
    let o = run.certify();
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let stdout = String::from_utf8(o.stdout).unwrap();
    assert!(stdout.contains("success_fraction"));
    assert!(stdout.contains("certified_rate_hz"));

    let log = decode_session_log(&fs::read_to_string(run.p("s.csv")).unwrap()).unwrap();
    assert_eq!(log.len(), 5);
    let cfg: RunConfig = SMALL.parse().unwrap();
    let expected: u64 = log
        .iter()
        .filter(|b| b.result.passed)
        .map(|b| output_length(b.result.certified_bits, cfg.epsilon_ext).unwrap())
        .sum();
    assert!(expected > 0);

    run.gen_seed(200_000);
    assert_eq!(code(&run.extract("a.bin")), 0);
    assert_eq!(code(&run.extract("b.bin")), 0);
    let a = fs::read(run.p("a.bin")).unwrap();
    assert_eq!(a, fs::read(run.p("b.bin")).unwrap());
    assert_eq!(decode_bits(&a).unwrap().len() as u64, expected);
}

#[test]
fn session_log_replays_exactly() {
    let run = Run::new(SMALL);
    assert_eq!(code(&run.simulate()), 0);
    assert_eq!(code(&run.certify()), 0);
    let cfg: RunConfig = SMALL.parse().unwrap();
    let pcfg = cfg.protocol(None).unwrap();
    for b in decode_session_log(&fs::read_to_string(run.p("s.csv")).unwrap()).unwrap() {
        let again = judge_block(&b.result.frequencies, b.result.measured_omega, &pcfg);
        assert_eq!(again, b.result);
    }
}

#[test]
fn over_power_block_fails_alone() {
    let run = Run::new(SMALL);
    assert_eq!(code(&run.simulate()), 0);
    let mpath = run.p("r.sdiq.monitor.csv");
    let mut mon = decode_monitor(&fs::read_to_string(&mpath).unwrap()).unwrap();
    mon[2].power_w *= 2.0;
    fs::write(&mpath, encode_monitor(&mon)).unwrap();
    assert_eq!(code(&run.certify()), 0);
    let log = decode_session_log(&fs::read_to_string(run.p("s.csv")).unwrap()).unwrap();
    assert!(!log[2].result.passed);
    assert!(log[2].result.measured_omega.value() > 0.005);
    for (i, b) in log.iter().enumerate().filter(|(i, _)| *i != 2) {
        assert!(b.result.measured_omega.value() <= 0.005, "block {i}");
    }
}

#[test]
fn no_passing_block_is_a_certification_failure() {
    let cfg = format!("{SMALL}threshold_h = 0.9\n");
    let run = Run::new(&cfg);
    assert_eq!(code(&run.simulate()), 0);
    assert_eq!(code(&run.certify()), 5);
    // The log is still written; extraction from it refuses.
    assert!(run.p("s.csv").exists());
    run.gen_seed(200_000);
    let o = run.extract("out.bin");
    assert_eq!(code(&o), 5);
    assert!(String::from_utf8_lossy(&o.stderr).contains("refusing"));
    assert!(!run.p("out.bin").exists());
}

#[test]
fn corrupt_and_empty_records_are_data_errors() {
    let run = Run::new(SMALL);
    assert_eq!(code(&run.simulate()), 0);
    let path = run.p("r.sdiq");
    let mut bytes = fs::read(&path).unwrap();
    bytes.truncate(bytes.len() - 3);
    fs::write(&path, &bytes).unwrap();
    let o = run.certify();
    assert_eq!(code(&o), 4);
    let msg = String::from_utf8_lossy(&o.stderr);
    assert!(msg.contains(&format!("byte offset {}", bytes.len())), "{msg}");

    fs::write(&path, b"").unwrap();
    let o = run.certify();
    assert_eq!(code(&o), 4);
    assert!(String::from_utf8_lossy(&o.stderr).contains("byte offset 0"));
}

#[test]
fn exit_codes_by_failure_class() {
    let run = Run::new("colour = blue\n");
    assert_eq!(code(&run.simulate()), 3);

    let run = Run::new(SMALL);
    let missing = run.s("nope.cfg");
    assert_eq!(code(&bin(&["simulate", "--config", &missing, "--output", &run.s("x")])), 1);
    let unwritable = run.s("no/such/dir/r.sdiq");
    assert_eq!(code(&bin(&["simulate", "--config", &run.s("run.cfg"), "--output", &unwritable])), 1);
    assert_eq!(code(&bin(&["frobnicate"])), 2);
}

#[test]
fn unknown_figure_lists_names() {
    let run = Run::new(SMALL);
    let o = bin(&["figure", "histogram", "--config", &run.s("run.cfg"), "--output", &run.s("f.csv")]);
    assert_eq!(code(&o), 2);
    let msg = String::from_utf8_lossy(&o.stderr);
    for name in ["entropy-vs-energy", "strategies", "energy-monitor", "stability"] {
        assert!(msg.contains(name), "{msg}");
    }
}

fn figure(run: &Run, name: &str) -> Vec<Vec<f64>> {
    let out = format!("{name}.csv");
    let o = bin(&["figure", name, "--config", &run.s("run.cfg"), "--output", &run.s(&out)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(run.p(&out)).unwrap();
    text.lines()
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect()
}

#[test]
fn figures_are_deterministic_and_consistent() {
    let run = Run::new(&format!("{SMALL}figure_points = 12\nfigure_rounds = 20000\n"));
    let strat = figure(&run, "strategies");
    assert_eq!(strat.len(), 12);
    for r in &strat {
        assert!(r[1] >= r[2] && r[2] >= r[3] && r[3] >= 0.0, "{r:?}");
    }
    let mon = figure(&run, "energy-monitor");
    assert!(mon.iter().all(|r| r[1] <= r[2]));
    let stab = figure(&run, "stability");
    assert_eq!(stab.len(), 5);
    let eve = figure(&run, "entropy-vs-energy");
    assert_eq!(eve.len(), 12);
    let first = fs::read(run.p("entropy-vs-energy.csv")).unwrap();
    figure(&run, "entropy-vs-energy");
    assert_eq!(fs::read(run.p("entropy-vs-energy.csv")).unwrap(), first);
}

#[test]
fn stored_witness_reproduces_built_one() {
    let run = Run::new(SMALL);
    assert_eq!(code(&run.simulate()), 0);
    assert_eq!(code(&run.certify()), 0);
    let built = fs::read(run.p("s.csv")).unwrap();
    let w = bin(&["witness", "--config", &run.s("run.cfg"), "--output", &run.s("w.txt")]);
    assert_eq!(code(&w), 0);
    let o = bin(&[
        "certify", "--records", &run.s("r.sdiq"), "--config", &run.s("run.cfg"),
        "--log", &run.s("s2.csv"), "--witness", &run.s("w.txt"),
    ]);
    assert_eq!(code(&o), 0);
    assert_eq!(fs::read(run.p("s2.csv")).unwrap(), built);
    let cfg: RunConfig = SMALL.parse().unwrap();
    assert_eq!(cfg.threshold_h, Threshold::Auto);
}
