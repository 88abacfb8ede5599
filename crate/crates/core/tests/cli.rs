use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use smc::config::RunConfig;
use smc::sim::Scenario;

fn smc(args: &[&str], seed_env: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_smc"));
    cmd.args(args);
    match seed_env {
        Some(s) => cmd.env("SMC_SEED", s),
        None => cmd.env_remove("SMC_SEED"),
    };
    cmd.output().expect("binary runs")
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn demo_1d_writes_fifteen_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("trace.csv");
    let o = smc(&["demo-1d", "--out", s(&out), "--seed", "1"], None);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = std::fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "k,truth_x,meas_x,est_x,ess,resampled,degenerate");
    assert_eq!(lines.len(), 16);
    assert!(lines.iter().all(|l| l.split(',').count() == 7));
    let stdout = String::from_utf8(o.stdout).unwrap();
    assert!(stdout.starts_with("scenario=demo-1d seed=1 steps=15 final_estimate=["), "{stdout}");
    assert!(stdout.contains("rmse_truth=") && stdout.contains("rmse_meas=") && stdout.contains("resamples="));
}

#[test]
fn demo_2d_writes_thirty_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("trace.csv");
    let o = smc(&["demo-2d", "--out", s(&out)], None);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = std::fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 31);
    for col in ["truth_px", "truth_py", "meas_px", "meas_py", "est_px", "est_py"] {
        assert!(lines[0].split(',').any(|c| c == col), "missing {col}");
    }
    assert!(lines.iter().all(|l| l.split(',').count() == 14));
}

#[test]
fn particle_dump_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("trace.csv");
    let o = smc(&["demo-1d", "--out", s(&out), "--dump-particles", "0,7,14"], None);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let dump = std::fs::read_to_string(dir.path().join("trace.particles.csv")).unwrap();
    let lines: Vec<&str> = dump.lines().collect();
    assert_eq!(lines[0], "k,i,weight,x");
    assert_eq!(lines.len(), 1 + 3 * 200);
    assert!(lines[1].starts_with("0,0,0.005,"));

    let o = smc(&["demo-1d", "--out", s(&out), "--dump-particles", "15"], None);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("dump_particles[0]"), "{}", stderr(&o));
}

#[test]
fn run_from_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("c.json");
    std::fs::write(&config, RunConfig::from_scenario(&Scenario::demo_1d(), Some(3)).to_json()).unwrap();
    let out = dir.path().join("t.csv");
    let o = smc(&["run", "--config", s(&config), "--out", s(&out)], None);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(String::from_utf8(o.stdout).unwrap().contains("seed=3"));

    // Same run through the preset with the same seed gives the same bytes.
    let preset = dir.path().join("p.csv");
    smc(&["demo-1d", "--out", s(&preset), "--seed", "3"], None);
    assert_eq!(std::fs::read(&out).unwrap(), std::fs::read(&preset).unwrap());
}

#[test]
fn seed_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let read = |name: &str| std::fs::read(dir.path().join(name)).unwrap();
    let path = |name: &str| dir.path().join(name);

    smc(&["demo-1d", "--out", s(&path("flag.csv")), "--seed", "5"], None);
    smc(&["demo-1d", "--out", s(&path("env.csv"))], Some("5"));
    smc(&["demo-1d", "--out", s(&path("env6.csv"))], Some("6"));
    smc(&["demo-1d", "--out", s(&path("flag_over_env.csv")), "--seed", "5"], Some("6"));
    assert_eq!(read("flag.csv"), read("env.csv"));
    assert_eq!(read("flag.csv"), read("flag_over_env.csv"));
    assert_ne!(read("flag.csv"), read("env6.csv"));

    // A seed in the config beats the environment.
    let config = path("c.json");
    std::fs::write(&config, RunConfig::from_scenario(&Scenario::demo_1d(), Some(5)).to_json()).unwrap();
    smc(&["run", "--config", s(&config), "--out", s(&path("cfg.csv"))], Some("6"));
    assert_eq!(read("flag.csv"), read("cfg.csv"));

    let o = smc(&["demo-1d", "--out", s(&path("bad.csv"))], Some("minus one"));
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("SMC_SEED"));
}

#[test]
fn missing_config_exits_one_and_names_the_path() {
    let o = smc(&["run", "--config", "/no/such/config.json", "--out", "/tmp/unused.csv"], None);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("/no/such/config.json"), "{}", stderr(&o));
}

#[test]
fn invalid_config_exits_one_with_field_path() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("c.json");
    let mut cfg = RunConfig::from_scenario(&Scenario::demo_2d(), None);
    cfg.prior.std[3] = -1.0;
    std::fs::write(&config, cfg.to_json()).unwrap();
    let o = smc(&["run", "--config", s(&config), "--out", s(&dir.path().join("t.csv"))], None);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("prior.std[3]"), "{}", stderr(&o));

    std::fs::write(&config, "{ \"scenario\": 3 }").unwrap();
    let o = smc(&["run", "--config", s(&config), "--out", s(&dir.path().join("t.csv"))], None);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("scenario"), "{}", stderr(&o));
}

#[test]
fn unwritable_output_exits_two() {
    let o = smc(&["demo-1d", "--out", "/no/such/dir/trace.csv"], None);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn bundled_golden_fixtures_pass() {
    for name in ["rw1d_step1.json", "rw1d_step2.json"] {
        let o = smc(&["golden", s(&fixture(name))], None);
        assert_eq!(o.status.code(), Some(0), "{name}: {}", String::from_utf8_lossy(&o.stdout));
        assert!(String::from_utf8(o.stdout).unwrap().starts_with("PASS"));
    }
}

#[test]
fn perturbed_golden_fixture_fails_with_report() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(fixture("rw1d_step1.json")).unwrap();
    let mut value: serde_json::Value = serde_json::from_str(&text).unwrap();
    for w in value["expected_weights"].as_array_mut().unwrap() {
        *w = serde_json::json!(w.as_f64().unwrap() + 0.05);
    }
    let path = dir.path().join("bad.json");
    std::fs::write(&path, value.to_string()).unwrap();
    let o = smc(&["golden", s(&path)], None);
    assert_eq!(o.status.code(), Some(1));
    let stdout = String::from_utf8(o.stdout).unwrap();
    assert_eq!(stdout.matches("MISMATCH weight[").count(), 5, "{stdout}");
    assert!(stdout.contains("expected 0.13 actual"), "{stdout}");
}

#[test]
fn malformed_golden_fixture_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("broken.json");
    std::fs::write(&path, "{\"initial_particles\": [1, 2], \"noises\": [0]}").unwrap();
    assert_eq!(smc(&["golden", s(&path)], None).status.code(), Some(2));
    assert_eq!(smc(&["golden", "/no/such/fixture.json"], None).status.code(), Some(2));
}
