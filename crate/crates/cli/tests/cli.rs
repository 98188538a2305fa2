//! End-to-end CLI tests: determinism, config rejection, exit codes, the
//! Fubini diagnostic, and the config round-trip.

use std::path::{Path, PathBuf};
use std::process::Command;

use hesc_cli::config::{parse_config, serialize_config};

const BIN: &str = env!("CARGO_BIN_EXE_hesc");

fn base_config() -> String {
    "\
seed = 7

[grid]
n = 64
length = 48

[dispersion]
kind = nonrelativistic
mass = 1

[packet]
envelope = gaussian
sigma = 0.5
center = 0 0
boost = 0 0

[potential]
short1 = gaussian 0.2 0.1 -0.2 1.0

[scattering]
pbar = 16 0
r_initial = 4
epsilon = 5e-2
r_max = 8
margin = 0.05
operator = plain
scan = nr
magnitudes = 8 16

[evolution]
dt = auto
t_total = 0.5
margin = 0.1

[reconstruction]
source = oracle
angles = 32
offsets = 65
s_max = 6
m = 41
half_extent = 2.5
roi = 2
mask_threshold = 0.02
"
    .to_string()
}

struct Workspace {
    dir: tempfile::TempDir,
}

impl Workspace {
    fn new(config: &str) -> Self {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("config.ini"), config).unwrap();
        Self { dir }
    }

    fn config_path(&self) -> PathBuf {
        self.dir.path().join("config.ini")
    }

    fn run(&self, subcommand: &str, out: &str) -> std::process::Output {
        Command::new(BIN)
            .arg(subcommand)
            .arg("--config")
            .arg(self.config_path())
            .arg("--out")
            .arg(self.dir.path().join(out))
            .arg("--threads")
            .arg("2")
            .output()
            .unwrap()
    }

    fn out_file(&self, out: &str, name: &str) -> PathBuf {
        self.dir.path().join(out).join(name)
    }
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap()
}

#[test]
fn determinism_same_config_same_manifest() {
    let ws = Workspace::new(&base_config());
    for out in ["a", "b"] {
        let o = ws.run("sinogram", out);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let a = read(&ws.out_file("a", "manifest.txt"));
    let b = read(&ws.out_file("b", "manifest.txt"));
    assert_eq!(a, b, "manifests must be byte-identical across reruns");
    assert!(a.lines().count() >= 2, "manifest lists every artifact");
    for line in a.lines() {
        let (hash, name) = line.split_once("  ").unwrap();
        assert_eq!(hash.len(), 64);
        assert!(ws.out_file("a", name).exists());
    }
}

#[test]
fn unknown_key_is_rejected_naming_it() {
    let config = base_config().replace("[grid]\nn = 64", "[grid]\nm = 1\nn = 64");
    let ws = Workspace::new(&config);
    let o = ws.run("evolve", "out");
    assert_eq!(o.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&o.stderr);
    assert!(stderr.contains("`m`"), "stderr must name the key: {stderr}");
}

#[test]
fn xray_oracle_fubini_row_sums() {
    // short1 = gaussian 0.2 ... width 1.0: plane integral = A*pi*w^2.
    let ws = Workspace::new(&base_config());
    let o = ws.run("xray-oracle", "out");
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = read(&ws.out_file("out", "row_sums.csv"));
    let expected = 0.2 * std::f64::consts::PI;
    let mut count = 0;
    for line in rows.lines().skip(2) {
        let sum: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
        assert!(
            (sum - expected).abs() < 0.01 * expected.abs(),
            "row sum {sum} vs plane integral {expected}"
        );
        count += 1;
    }
    assert_eq!(count, 32);
    assert!(ws.out_file("out", "sinogram.csv").exists());
}

#[test]
fn scatter_runs_and_converges() {
    let ws = Workspace::new(&base_config());
    let o = ws.run("scatter", "out");
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for name in ["elements.csv", "convergence.csv", "out_field.qf2d1", "manifest.txt"] {
        assert!(ws.out_file("out", name).exists(), "missing {name}");
    }
}

#[test]
fn exit_code_convergence_failure() {
    // Impossible tolerance with a capped window: converges never.
    let config = base_config().replace("epsilon = 5e-2", "epsilon = 1e-13");
    let ws = Workspace::new(&config);
    let o = ws.run("scatter", "out");
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
    // Outputs are still written for inspection.
    assert!(ws.out_file("out", "elements.csv").exists());
}

#[test]
fn exit_code_numeric_precondition() {
    // Boost far beyond the grid Nyquist momentum.
    let config = base_config().replace("boost = 0 0", "boost = 200 0");
    let ws = Workspace::new(&config);
    let o = ws.run("evolve", "out");
    assert_eq!(o.status.code(), Some(4), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn exit_code_io_failure() {
    let ws = Workspace::new(&base_config());
    let o = Command::new(BIN)
        .args(["evolve", "--config"])
        .arg(ws.dir.path().join("does-not-exist.ini"))
        .arg("--out")
        .arg(ws.dir.path().join("out"))
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(5));
}

#[test]
fn exit_code_usage_errors() {
    let o = Command::new(BIN).arg("frobnicate").output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    let o = Command::new(BIN).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn hesc_threads_env_fallback() {
    let ws = Workspace::new(&base_config());
    let o = Command::new(BIN)
        .arg("xray-oracle")
        .arg("--config")
        .arg(ws.config_path())
        .arg("--out")
        .arg(ws.dir.path().join("out"))
        .env("HESC_THREADS", "1")
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    // A malformed value is a config error.
    let o = Command::new(BIN)
        .arg("xray-oracle")
        .arg("--config")
        .arg(ws.config_path())
        .arg("--out")
        .arg(ws.dir.path().join("out2"))
        .env("HESC_THREADS", "two")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn reconstruct_oracle_pipeline() {
    let ws = Workspace::new(&base_config());
    let o = ws.run("reconstruct", "out");
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let err_csv = read(&ws.out_file("out", "error.csv"));
    let data_line = err_csv.lines().nth(2).unwrap();
    let rms_rel: f64 = data_line.split(',').next().unwrap().parse().unwrap();
    assert!(rms_rel < 0.10, "oracle-path reconstruction rms {rms_rel}");
    assert!(ws.out_file("out", "recon.qf2d1").exists());
}

#[test]
fn config_round_trip() {
    let cfg = parse_config(&base_config()).unwrap();
    let text = serialize_config(&cfg);
    let back = parse_config(&text).unwrap();
    assert_eq!(cfg, back, "serialize -> parse must be the identity");
    // And serialization is a fixed point.
    assert_eq!(text, serialize_config(&back));
}

#[test]
fn limit_scan_emits_schema() {
    let ws = Workspace::new(&base_config());
    let o = ws.run("limit-scan", "out");
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let scan = read(&ws.out_file("out", "scan.csv"));
    let mut lines = scan.lines();
    assert!(lines.next().unwrap().starts_with('#'));
    assert_eq!(
        lines.next().unwrap(),
        "pbar,value_re,value_im,oracle_re,oracle_im,delta"
    );
    assert_eq!(lines.count(), 2, "one row per magnitude");
}
