use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn poolsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_poolsim")).args(args).output().unwrap()
}

fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

const SMALL: &str = r#"
seed = 3
sim_horizon_s = 1800

[network]
grid = { rows = 4, cols = 4, edge_len_m = 400 }

[demand]
rate_per_h = 120
patience_s = 600

[supply]
drivers = 3

[pricing]
policy = "profit_max"
"#;

fn listing(dir: &Path) -> Vec<String> {
    let mut names: Vec<String> =
        std::fs::read_dir(dir).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    names.sort();
    names
}

#[test]
fn scenario_writes_four_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "s.toml", SMALL);
    let out = dir.path().join("out");
    let o = poolsim(&["--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(listing(&out), ["drivers.csv", "events.csv", "kpi.toml", "outcomes.csv"]);
    let kpi = std::fs::read_to_string(out.join("kpi.toml")).unwrap();
    assert!(kpi.contains("service_rate = "));
}

#[test]
fn dump_rides_adds_candidate_table() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "s.toml", &format!("{SMALL}\n[output]\ndump_rides = true\n"));
    let out = dir.path().join("out");
    let o = poolsim(&["--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let rides = std::fs::read_to_string(out.join("rides.csv")).unwrap();
    assert!(rides.starts_with("ride_id,kind,member_ids,service_distance_m,service_time_s\n"));
}

#[test]
fn missing_policy_exits_2_naming_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "s.toml", &SMALL.replace("policy = \"profit_max\"", ""));
    let out = dir.path().join("out");
    let o = poolsim(&["--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("pricing.policy"), "{err}");

    let o = poolsim(&["--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--policy", "solo_only"]);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn bad_input_exits_2_with_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "s.toml", &SMALL.replace("drivers = 3", "drivers = 3\nriders = 2"));
    let out = dir.path().join("out");
    let o = poolsim(&["--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("s.toml:14:"), "{err}");

    let o = poolsim(&["--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--policy", "greedy"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn io_failure_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.toml");
    let out = dir.path().join("out");
    let o = poolsim(&["--config", missing.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));

    let cfg = write(dir.path(), "s.toml", SMALL);
    let blocker = write(dir.path(), "file", "");
    let o = poolsim(&["--config", cfg.to_str().unwrap(), "--out", blocker.join("sub").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn seed_override_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "s.toml", SMALL);
    let run = |name: &str, seed: &str| {
        let out = dir.path().join(name);
        let o = poolsim(&["--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--seed", seed]);
        assert_eq!(o.status.code(), Some(0));
        std::fs::read(out.join("events.csv")).unwrap()
    };
    let a = run("a", "9");
    let b = run("b", "9");
    let c = run("c", "10");
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn sweep_rows_and_parallelism() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "base.toml", SMALL);
    let sweep = write(
        dir.path(),
        "sweep.toml",
        "drivers = [2, 4]\nrates_per_h = [60, 120]\npolicies = [\"solo_only\", \"forced_pooling\", \"profit_max\"]\nseeds = 2\nbase = \"base.toml\"\n",
    );
    let run = |name: &str, par: &str| {
        let out = dir.path().join(name);
        let o = poolsim(&["--sweep", sweep.to_str().unwrap(), "--out", out.to_str().unwrap(), "--parallelism", par]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        std::fs::read_to_string(out.join("summary.csv")).unwrap()
    };
    let one = run("p1", "1");
    let eight = run("p8", "8");
    assert_eq!(one, eight);
    let lines: Vec<&str> = one.lines().collect();
    assert_eq!(lines.len(), 1 + 24);
    assert_eq!(lines[0], "policy,n_drivers,req_rate,seed,service_rate,gini,commission_eur,wait_mean_s,occupancy,status");
    assert!(lines[1].starts_with("solo_only,2,60,0,"));
    assert!(lines[1..].iter().all(|l| l.ends_with(",ok")));
}

#[test]
fn failing_cell_is_recorded_and_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "base.toml", &SMALL.replace("drivers = 3", "drivers = 2\npositions = [0, 5]"));
    let sweep = write(
        dir.path(),
        "sweep.toml",
        "drivers = [2, 3]\nrates_per_h = [60]\npolicies = [\"solo_only\"]\nbase = \"base.toml\"\n",
    );
    let out = dir.path().join("out");
    let o = poolsim(&["--sweep", sweep.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let summary = std::fs::read_to_string(out.join("summary.csv")).unwrap();
    let lines: Vec<&str> = summary.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[1].ends_with(",ok"));
    assert!(lines[2].contains(",error: "));
}

#[test]
fn mode_is_required() {
    let o = poolsim(&["--out", "x"]);
    assert_eq!(o.status.code(), Some(2));
}
