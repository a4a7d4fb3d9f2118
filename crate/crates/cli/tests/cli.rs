//! End-to-end checks of the command-line interface: exit codes, output
//! determinism and error reporting.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_nscatter")
}

fn scratch(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("nscatter-cli-test-{tag}-{}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path
}

fn run(args: &[&str]) -> Output {
    Command::new(bin()).args(args).output().unwrap()
}

const OPTIMAL: &str = r#"
seed = 7

[protocol]
n = 4
tau = 0.23882915453112732

[params]
b_z = 3.0

[witness]
alpha = 0.7071067811865476
beta = 0.7071067811865476
shots_per_setting = 20000
"#;

#[test]
fn simulate_writes_deterministic_outputs() {
    let dir = scratch("simulate");
    let config = write_config(&dir, "run.toml", OPTIMAL);
    let out1 = dir.join("a");
    let out2 = dir.join("b");
    for out in [&out1, &out2] {
        let r = run(&[
            "simulate",
            "--config",
            config.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    }
    for name in ["summary.txt", "rho_real.csv", "rho_imag.csv", "stages.csv"] {
        let a = fs::read(out1.join(name)).unwrap();
        let b = fs::read(out2.join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between identical runs");
        let text = String::from_utf8(a).unwrap();
        assert!(
            text.starts_with("# tool: nscatter"),
            "{name} missing header"
        );
        assert!(text.contains("# config_hash:"), "{name} missing hash");
    }
    let summary = fs::read_to_string(out1.join("summary.txt")).unwrap();
    assert!(summary.contains("concurrence = 7.69800"));
}

#[test]
fn sweep_emits_csv_and_plot() {
    let dir = scratch("sweep");
    let config = write_config(
        &dir,
        "sweep.toml",
        r#"
[protocol]
n = 4
tau = 0.0

[sweep]
variable = "tau"
lo = 0.0
hi = 0.628
points = 41
engine = "closed_form"
"#,
    );
    let out = dir.join("out");
    let r = run(&[
        "sweep",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--plot",
    ]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let csv = fs::read_to_string(out.join("sweep.csv")).unwrap();
    let mut lines = csv.lines().skip_while(|l| l.starts_with('#'));
    assert_eq!(
        lines.next().unwrap(),
        "variable,value,concurrence,engine,config_hash"
    );
    assert_eq!(lines.clone().count(), 41);
    assert!(lines.all(|l| l.starts_with("tau,")));
    let svg = fs::read_to_string(out.join("sweep.svg")).unwrap();
    assert!(svg.starts_with("<svg"));
    assert!(svg.contains("variant A"));
    assert!(svg.contains("variant B"));

    // identical rerun is byte-identical
    let out2 = dir.join("out2");
    let r = run(&[
        "sweep",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out2.to_str().unwrap(),
        "--plot",
    ]);
    assert!(r.status.success());
    assert_eq!(
        fs::read(out.join("sweep.csv")).unwrap(),
        fs::read(out2.join("sweep.csv")).unwrap()
    );
    assert_eq!(
        fs::read(out.join("sweep.svg")).unwrap(),
        fs::read(out2.join("sweep.svg")).unwrap()
    );
}

#[test]
fn corrupted_config_key_is_named_and_exits_one() {
    let dir = scratch("badkey");
    let config = write_config(
        &dir,
        "bad.toml",
        "[protocol]\nn = 4\ntau = 0.1\nbogus_knob = 3\n",
    );
    let r = run(&["simulate", "--config", config.to_str().unwrap()]);
    assert_eq!(r.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&r.stderr);
    assert!(stderr.contains("bogus_knob"), "stderr: {stderr}");
}

#[test]
fn invalid_physical_value_exits_one() {
    let dir = scratch("badval");
    let config = write_config(&dir, "bad.toml", "[protocol]\nn = 1\ntau = 0.1\n");
    let r = run(&["simulate", "--config", config.to_str().unwrap()]);
    assert_eq!(r.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&r.stderr);
    assert!(stderr.contains("N must be >= 2"), "stderr: {stderr}");
}

#[test]
fn unknown_engine_override_exits_one() {
    let dir = scratch("badengine");
    let config = write_config(&dir, "run.toml", OPTIMAL);
    let r = run(&[
        "simulate",
        "--config",
        config.to_str().unwrap(),
        "--engine",
        "quantum_leap",
    ]);
    assert_eq!(r.status.code(), Some(1));
}

#[test]
fn witness_reports_negative_estimate() {
    let dir = scratch("witness");
    let config = write_config(&dir, "run.toml", OPTIMAL);
    let out = dir.join("out");
    let r = run(&[
        "witness",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--seed",
        "5",
    ]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let text = fs::read_to_string(out.join("witness.txt")).unwrap();
    assert!(text.contains("# seed: 5"));
    let estimate: f64 = text
        .lines()
        .find_map(|l| l.strip_prefix("estimate = "))
        .unwrap()
        .parse()
        .unwrap();
    assert!(estimate < -0.25, "estimate {estimate}");
    assert!(text.contains("expectation_exact_raw"));
}

#[test]
fn feasibility_report_written() {
    let dir = scratch("feasibility");
    let config = write_config(
        &dir,
        "scenario.toml",
        r#"
[scenario]
a0_m = 1e-10
n_spins = 1e14
v_m_per_s = 7.0
flight_path_m = 1.0
flux_per_m2_s = 1e8
sample_area_m2 = 1e-2
t1_s = 1.0
t2_s = 1e-6
"#,
    );
    let out = dir.join("out");
    let r = run(&[
        "feasibility",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let text = fs::read_to_string(out.join("feasibility.txt")).unwrap();
    assert!(text.contains("B*"));
    assert!(text.contains("[values]"));
    assert!(text.contains("b_star_T"));
    // the quoted tolerance coefficients genuinely disagree and must say so
    assert!(text.contains("DISAGREES"));
}

#[test]
fn verify_passes_and_respects_sign_convention() {
    // default convention: everything passes, exit 0
    let r = run(&["verify"]);
    assert_eq!(
        r.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&r.stderr)
    );
    let stdout = String::from_utf8_lossy(&r.stdout);
    assert!(stdout.contains("PASS closed_form_match"));
    assert!(!stdout.contains("FAIL"));

    // printed sign: witness suite warns, exit stays 0
    let dir = scratch("verify");
    let config = write_config(
        &dir,
        "paper.toml",
        r#"
[witness]
alpha = 0.7071067811865476
beta = 0.7071067811865476
sign_convention = "paper"
"#,
    );
    let r = run(&["verify", "--config", config.to_str().unwrap()]);
    assert_eq!(
        r.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&r.stderr)
    );
    let stdout = String::from_utf8_lossy(&r.stdout);
    assert!(stdout.contains("WARN witness"), "stdout: {stdout}");
}
