use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_abm-eql"))
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("abm-eql-cli-{}-{name}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(cmd: &mut Command) -> Output {
    cmd.output().expect("binary runs")
}

const BDM: &str = "\
# small logistic run
model = bdm
proliferation_rate = 0.5
death_rate = 0.25
migration_rate = 1.0
lattice_size = 30
t_end = 60
n_record = 40
seed = 7
";

#[test]
fn simulate_learn_select_round_trip() {
    let dir = scratch("round-trip");
    let cfg = dir.join("bdm.cfg");
    fs::write(&cfg, BDM).unwrap();
    let sim = dir.join("sim");
    let out = run(bin().args(["simulate", "bdm", "--replicates", "3", "--config"]).arg(&cfg).arg("--out").arg(&sim));
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(sim.join("trace.csv")).unwrap();
    assert_eq!(csv.lines().count(), 41);
    assert!(csv.starts_with("t,C,F,n_replicates"));
    assert!(fs::read_to_string(sim.join("config.cfg")).unwrap().contains("seed = 7"));

    let learned = dir.join("learned");
    let out = run(bin()
        .args(["learn", "--library", "poly4", "--solver", "greedy", "--splits", "5", "--data"])
        .arg(sim.join("trace.csv"))
        .arg("--out")
        .arg(&learned));
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("dC/dt = "));
    let doc: serde_json::Value = serde_json::from_str(&fs::read_to_string(learned.join("model.json")).unwrap()).unwrap();
    assert_eq!(doc["meta"]["solver"], "greedy");
    assert!(learned.join("fit_report_C.csv").exists());

    let out = run(bin()
        .args(["select", "--splits", "20", "--seed", "3", "--data"])
        .arg(sim.join("trace.csv"))
        .arg("--out")
        .arg(dir.join("sel")));
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let sel: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(sel["n_splits"], 20);
    assert_eq!(fs::read_to_string(dir.join("sel/residuals.csv")).unwrap().lines().count(), 21);
}

#[test]
fn simulate_is_reproducible_and_seed_overrides() {
    let dir = scratch("seeds");
    let cfg = dir.join("bdm.cfg");
    fs::write(&cfg, BDM).unwrap();
    let go = |name: &str, seed: &str| {
        let out_dir = dir.join(name);
        let out = run(bin().args(["simulate", "bdm", "--seed", seed, "--config"]).arg(&cfg).arg("--out").arg(&out_dir));
        assert!(out.status.success());
        fs::read_to_string(out_dir.join("trace.csv")).unwrap()
    };
    assert_eq!(go("a", "11"), go("b", "11"));
    assert_ne!(go("a", "11"), go("c", "12"));
}

#[test]
fn config_errors_exit_with_two() {
    let dir = scratch("errors");
    let bad = dir.join("bad.cfg");
    fs::write(&bad, "model = bdm\nproliferation_rate = -1\n").unwrap();
    let out = run(bin().args(["simulate", "bdm", "--config"]).arg(&bad).arg("--out").arg(dir.join("x")));
    assert_eq!(out.status.code(), Some(2));

    let sir = dir.join("sir.cfg");
    fs::write(&sir, "model = sir\ninfection_rate = 0.1\nrecovery_rate = 0.01\n").unwrap();
    let out = run(bin().args(["simulate", "bdm", "--config"]).arg(&sir).arg("--out").arg(dir.join("y")));
    assert_eq!(out.status.code(), Some(2));

    let out = run(bin().args(["casestudy", "cs9", "--out"]).arg(dir.join("z")));
    assert_eq!(out.status.code(), Some(2));
}
