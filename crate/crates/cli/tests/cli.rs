//! Command behavior and the exit-code contract.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn mahler(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mahler")).args(args).current_dir(dir).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn setup(config: &str) -> (tempfile::TempDir, PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("run.cfg"), config).unwrap();
    let state = dir.path().join("run.state");
    (dir, state)
}

#[test]
fn init_writes_stage_one_and_manifest() {
    let (dir, state) = setup("base = exp\nsigma = 1:2,2:1\n");
    let o = mahler(&["init", "--config", "run.cfg", "--stage-file", "run.state"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(&state).unwrap();
    assert!(text.starts_with("mahler-stage v1\nchecksum "));
    assert!(text.contains("\nm 1\n"));
    let manifest = fs::read_to_string(dir.path().join("run.state.manifest")).unwrap();
    assert!(manifest.starts_with("mahler-manifest v1\n"));
    assert!(manifest.contains("\nstage 1 "));
    assert!(manifest.contains("sigma = 1:2,2:1"));
}

#[test]
fn config_errors_exit_one_with_the_line() {
    let (dir, _) = setup("base = exp\ntheta = 3:1\n");
    let o = mahler(&["init", "--config", "run.cfg", "--stage-file", "run.state"], dir.path());
    assert_eq!(code(&o), 1);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 2") && err.contains("theta_k < 1/k!"), "{err}");

    fs::write(dir.path().join("run.cfg"), "base = tan\n").unwrap();
    let o = mahler(&["init", "--config", "run.cfg", "--stage-file", "run.state"], dir.path());
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("tan"));
    assert!(!dir.path().join("run.state").exists());

    let o = mahler(&["step", "--stage-file", "missing.state"], dir.path());
    assert_eq!(code(&o), 1);
}

#[test]
fn step_verify_export_round_trip() {
    let (dir, state) = setup("base = exp\nsigma = 1:1\nseed = 2\n");
    let p = dir.path();
    assert_eq!(code(&mahler(&["init", "--config", "run.cfg", "--stage-file", "run.state"], p)), 0);
    let o = mahler(&["step", "--stage-file", "run.state", "--stages", "1"], p);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).starts_with("stage 2:"));

    let o = mahler(&["verify", "--stage-file", "run.state"], p);
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stdout).contains("stage 2: accepted"));

    let o = mahler(&["export", "--stage-file", "run.state", "--format", "state", "--output", "copy.state"], p);
    assert_eq!(code(&o), 0);
    assert_eq!(fs::read(&state).unwrap(), fs::read(p.join("copy.state")).unwrap());

    let o = mahler(&["export", "--stage-file", "run.state", "--format", "report"], p);
    let report = String::from_utf8_lossy(&o.stdout).to_string();
    assert!(report.starts_with("mahler-report v1\nstage 2\naccepted true\n"));

    let o = mahler(&["export", "--stage-file", "run.state", "--format", "coefficients", "--max-k", "6"], p);
    let rows: Vec<String> = String::from_utf8_lossy(&o.stdout)
        .lines()
        .filter(|l| l.chars().next().is_some_and(|c| c.is_ascii_digit()))
        .map(String::from)
        .collect();
    assert_eq!(rows.len(), 7);
    assert!(rows.iter().all(|r| r.ends_with(" true")), "{rows:?}");

    let o = mahler(&["census", "--stage-file", "run.state"], p);
    assert_eq!(code(&o), 0);
    let out = String::from_utf8_lossy(&o.stdout);
    let row: Vec<&str> = out.lines().find(|l| l.trim_start().starts_with("1 ")).unwrap().split_whitespace().collect();
    // k #Per #Orb nailed free mixed grafted
    assert_eq!(row[6], "1");
    assert!(row[3].parse::<usize>().unwrap() >= 1);
}

#[test]
fn corrupted_file_is_a_verification_failure() {
    let (dir, state) = setup("base = exp\n");
    let p = dir.path();
    assert_eq!(code(&mahler(&["init", "--config", "run.cfg", "--stage-file", "run.state"], p)), 0);
    let text = fs::read_to_string(&state).unwrap().replace("radii 2", "radii 3");
    fs::write(&state, text).unwrap();
    for cmd in [&["verify", "--stage-file", "run.state"][..], &["step", "--stage-file", "run.state"][..]] {
        let o = mahler(cmd, p);
        assert_eq!(code(&o), 2);
        assert!(String::from_utf8_lossy(&o.stderr).contains("checksum"));
    }
}

#[test]
fn exhausted_search_has_its_own_code() {
    // stage two needs a radius past r_1 = 2, which the cap forbids
    let (dir, _) = setup("base = exp\nsigma = 1:1\nradius_cap = 2\n");
    let p = dir.path();
    assert_eq!(code(&mahler(&["init", "--config", "run.cfg", "--stage-file", "run.state"], p)), 0);
    let before = fs::read(p.join("run.state")).unwrap();
    let o = mahler(&["step", "--stage-file", "run.state"], p);
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
    // nothing committed
    assert_eq!(fs::read(p.join("run.state")).unwrap(), before);
}

#[test]
fn seed_and_precision_flags_reach_the_state() {
    let (dir, state) = setup("base = exp\n");
    let p = dir.path();
    let o = mahler(&["init", "--config", "run.cfg", "--stage-file", "run.state", "--seed", "99", "--precision-bits", "384"], p);
    assert_eq!(code(&o), 0);
    let text = fs::read_to_string(state).unwrap();
    assert!(text.contains("\nseed = 99\n"));
    assert!(text.contains("\nprecision_start = 384\n"));
}
