//! End-to-end runs of the `flatmpc` binary: files written, exit codes.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn flatmpc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_flatmpc")).args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

const NP5: &str = r#"{"np": 5, "duration": 10.0}"#;

#[test]
fn synth_is_deterministic_and_inspect_agrees() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "np5.json", NP5);
    let (a, b) = (dir.path().join("a.json"), dir.path().join("b.json"));
    for out in [&a, &b] {
        let o = flatmpc(&["synth", "--config", s(&cfg), "--out", s(out)]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());

    let report = read_json(&dir.path().join("a.report.json"));
    let counts: Vec<u64> = report["region_counts"].as_array().unwrap().iter().map(|v| v.as_u64().unwrap()).collect();
    assert_eq!(counts.len(), 3);
    assert_eq!(counts[0], counts[1]);
    assert_eq!(report["controller_bytes"].as_u64().unwrap(), std::fs::metadata(&a).unwrap().len());

    let o = flatmpc(&["inspect", "--controller", s(&a)]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains(report["checksum"].as_str().unwrap()));
    for (i, n) in counts.iter().enumerate() {
        assert!(text.contains(&format!("axis {}       {n} regions", i + 1)), "{text}");
    }
}

#[test]
fn single_step_with_huge_bounds() {
    // only the input bound can bind: the LQR region plus one saturated
    // region per sign
    let dir = TempDir::new().unwrap();
    let cfg = write(
        &dir,
        "np1.json",
        r#"{"np": 1, "pbar": [1e6, 1e6, 1e6], "velbar": [1e6, 1e6, 1e6], "vbar": [2e6, 2e6, 2e6]}"#,
    );
    let out = dir.path().join("c.json");
    assert_eq!(code(&flatmpc(&["synth", "--config", s(&cfg), "--out", s(&out)])), 0);
    let ctrl = read_json(&out);
    for ax in ctrl["axes"].as_array().unwrap() {
        let regions = ax["regions"].as_array().unwrap();
        assert_eq!(regions.len(), 3);
        let saturated: Vec<f64> = regions
            .iter()
            .filter(|r| !r["active_set"].as_array().unwrap().is_empty())
            .map(|r| r["mu"][0].as_f64().unwrap())
            .collect();
        assert_eq!(saturated.len(), 2);
        assert_eq!(saturated[0], -saturated[1]);
        assert_eq!(saturated[0].abs(), 2e6);
    }
}

#[test]
fn zero_duration_writes_initial_row() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "z.json", r#"{"np": 5, "duration": 0.0}"#);
    let trace = dir.path().join("t.csv");
    let o = flatmpc(&["simulate", "--config", s(&cfg), "--out", s(&trace)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&trace).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].starts_with("t,x,y,z,"));
    assert!(lines[1].starts_with("0,1.25,0,0.5,"));
    let summary = read_json(&dir.path().join("t.summary.json"));
    assert_eq!(summary["rows"], 1);
}

#[test]
fn corrupt_controller_exits_3() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "np5.json", NP5);
    let ctrl = dir.path().join("c.json");
    assert_eq!(code(&flatmpc(&["synth", "--config", s(&cfg), "--out", s(&ctrl)])), 0);
    let text = std::fs::read_to_string(&ctrl).unwrap();
    // flip one digit of a stored coefficient
    let pos = text.find("\"F\"").unwrap() + text[text.find("\"F\"").unwrap()..].find(|c: char| c.is_ascii_digit()).unwrap();
    let mut bytes = text.into_bytes();
    bytes[pos] = if bytes[pos] == b'9' { b'8' } else { bytes[pos] + 1 };
    std::fs::write(&ctrl, &bytes).unwrap();

    let o = flatmpc(&["inspect", "--controller", s(&ctrl)]);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("controller_corrupt"));
    let garbage = write(&dir, "g.json", "not json");
    assert_eq!(code(&flatmpc(&["inspect", "--controller", s(&garbage)])), 3);
    let o = flatmpc(&["simulate", "--config", s(&cfg), "--controller", s(&ctrl), "--out", s(&dir.path().join("t.csv"))]);
    assert_eq!(code(&o), 3);
}

#[test]
fn mismatched_controller_exits_4() {
    let dir = TempDir::new().unwrap();
    let cfg5 = write(&dir, "np5.json", NP5);
    let cfg6 = write(&dir, "np6.json", r#"{"np": 6, "duration": 10.0}"#);
    let ctrl = dir.path().join("c.json");
    assert_eq!(code(&flatmpc(&["synth", "--config", s(&cfg5), "--out", s(&ctrl)])), 0);
    let o = flatmpc(&["simulate", "--config", s(&cfg6), "--controller", s(&ctrl), "--out", s(&dir.path().join("t.csv"))]);
    assert_eq!(code(&o), 4);
    assert!(String::from_utf8_lossy(&o.stderr).contains("controller_mismatch"));
    let o = flatmpc(&["compare", "--config", s(&cfg6), "--controller", s(&ctrl), "--out", s(&dir.path().join("r.json"))]);
    assert_eq!(code(&o), 4);
}

#[test]
fn infeasible_start_exits_5_with_trace() {
    let dir = TempDir::new().unwrap();
    // at the position bound and still moving outwards
    let cfg = write(&dir, "inf.json", r#"{"np": 5, "duration": 10.0, "xi0": [[1.5, 1.0], [0.0, 0.0], [0.0, 0.0]]}"#);
    let trace = dir.path().join("t.csv");
    let o = flatmpc(&["simulate", "--config", s(&cfg), "--out", s(&trace)]);
    assert_eq!(code(&o), 5);
    let text = std::fs::read_to_string(&trace).unwrap();
    let last = text.lines().last().unwrap();
    assert!(last.ends_with(",0"), "{last}");
    assert_eq!(read_json(&dir.path().join("t.summary.json"))["feasible"], false);
}

#[test]
fn bad_configs_exit_2() {
    let dir = TempDir::new().unwrap();
    for (i, text) in [
        r#"{"np": 5, "horizon": 3}"#,
        r#"{"np": 0}"#,
        r#"{"ts": 0.1, "duration": 1.05}"#,
        r#"{"q": [[1, 2], [0, 1]]}"#,
        "{",
    ]
    .iter()
    .enumerate()
    {
        let cfg = write(&dir, &format!("bad{i}.json"), text);
        let o = flatmpc(&["synth", "--config", s(&cfg), "--out", s(&dir.path().join("c.json"))]);
        assert_eq!(code(&o), 2, "{text}");
        assert!(String::from_utf8_lossy(&o.stderr).contains("config_error"));
    }
    let missing = dir.path().join("missing.json");
    assert_eq!(code(&flatmpc(&["simulate", "--config", s(&missing)])), 2);
}

#[test]
fn circle_run_has_no_violations() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        &dir,
        "circle.json",
        r#"{"reference": {"kind": "circle", "radius": 0.5, "angular_rate": 0.5, "altitude": 1.0}}"#,
    );
    let trace = dir.path().join("circle.csv");
    let o = flatmpc(&["simulate", "--config", s(&cfg), "--out", s(&trace)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let summary = read_json(&dir.path().join("circle.summary.json"));
    assert_eq!(summary["violations"]["total"], 0);
    assert!(summary["max_error_after_transient_m"].as_f64().unwrap() < 0.05);
    assert_eq!(std::fs::read_to_string(&trace).unwrap().lines().count(), 602);
}

#[test]
fn fleet_writes_one_trace_per_drone() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        &dir,
        "fleet.json",
        r#"{"np": 5, "duration": 5.0, "n_drones": 3, "xi0": [[0.5, 0.0], [0.0, 0.25], [1.0, 0.0]],
            "reference": {"kind": "circle", "radius": 0.5, "angular_rate": 0.5, "altitude": 1.0}}"#,
    );
    let trace = dir.path().join("f.csv");
    assert_eq!(code(&flatmpc(&["simulate", "--config", s(&cfg), "--out", s(&trace)])), 0);
    for name in ["f.csv", "f.drone1.csv", "f.drone2.csv"] {
        assert_eq!(std::fs::read_to_string(dir.path().join(name)).unwrap().lines().count(), 52);
    }
    let summary = read_json(&dir.path().join("f.summary.json"));
    assert_eq!(summary["drones"].as_array().unwrap().len(), 3);
}

#[test]
fn compare_reports_agreement() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "np5.json", NP5);
    let out = dir.path().join("r.json");
    let o = flatmpc(&["compare", "--config", s(&cfg), "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = read_json(&out);
    assert_eq!(r["all_completed"], true);
    assert_eq!(r["checks"]["controls_agree"], true);
    assert!(r["max_control_gap"].as_f64().unwrap() <= 1e-6);
    assert!(r["timing_ratio"].as_f64().unwrap() > 1.0);
}
