use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const GOLDEN_HEADER: &str = "t,D,T_c,T_r,T_h,W_R_CH,W_genuine,p1,p2,p3,p4,p5,p6,p7,p8,im_rho36";

fn qfridge(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qfridge"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn files(dir: &Path) -> Vec<String> {
    let mut names: Vec<String> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    names
}

const SMALL_RUN: &str = "\
# short log grid
label = short
kind = timeseries
p_C = 1e-5
p_R = 1.0E-3
p_H = 1e-5
g = 1e-2
grid = log
t_first = 1
t_final = 1e4
n_samples = 11
out_dir = out
";

#[test]
fn preset_outputs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    for out in ["a", "b"] {
        let o = qfridge(dir.path(), &["preset", "fig2b", "--out", out]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    for f in ["fig2b.csv", "fig2b.json"] {
        let a = std::fs::read(dir.path().join("a").join(f)).unwrap();
        let b = std::fs::read(dir.path().join("b").join(f)).unwrap();
        assert!(a == b, "{f} differs");
    }
    let csv = std::fs::read_to_string(dir.path().join("a/fig2b.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some(GOLDEN_HEADER));
    assert_eq!(lines.count(), 1001);
    assert!(csv.lines().all(|l| !l.ends_with(',')));
}

#[test]
fn run_from_config_file() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("run.cfg"), SMALL_RUN).unwrap();
    let o = qfridge(dir.path(), &["run", "--config", "run.cfg"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(files(&dir.path().join("out")), ["short.csv", "short.json"]);
    let json: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("out/short.json")).unwrap()).unwrap();
    assert_eq!(json["solver"], "spectral");
    assert_eq!(json["config"]["p_R"], "0.001");
    let csv = std::fs::read_to_string(dir.path().join("out/short.csv")).unwrap();
    let first: Vec<f64> = csv
        .lines()
        .nth(1)
        .unwrap()
        .split(',')
        .map(|c| c.parse().unwrap())
        .collect();
    assert_eq!(first.len(), 16);
    assert_eq!(first[0], 0.0);
}

#[test]
fn unknown_key_is_a_config_error_and_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.cfg"), format!("{SMALL_RUN}p_X = 1\n")).unwrap();
    let o = qfridge(dir.path(), &["run", "--config", "bad.cfg"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("p_X"));
    assert_eq!(files(dir.path()), ["bad.cfg"]);
}

#[test]
fn config_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(qfridge(dir.path(), &["preset", "fig9"]).status.code(), Some(2));
    assert_eq!(
        qfridge(dir.path(), &["preset", "fig2a", "--solver", "euler"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(qfridge(dir.path(), &["frobnicate"]).status.code(), Some(2));
    std::fs::write(dir.path().join("neg.cfg"), SMALL_RUN.replace("g = 1e-2", "g = -1")).unwrap();
    assert_eq!(
        qfridge(dir.path(), &["run", "--config", "neg.cfg"]).status.code(),
        Some(2)
    );
    assert_eq!(files(dir.path()), ["neg.cfg"]);
}

#[test]
fn solver_failure_exits_three_without_output() {
    let dir = tempfile::tempdir().unwrap();
    let text = format!("{SMALL_RUN}solver = integrator\nmax_steps = 10\n");
    std::fs::write(dir.path().join("steps.cfg"), text).unwrap();
    let o = qfridge(dir.path(), &["run", "--config", "steps.cfg"]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(files(dir.path()), ["steps.cfg"]);
}

#[test]
fn unwritable_output_exits_four() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("blocker"), "").unwrap();
    let o = qfridge(dir.path(), &["preset", "fig2a", "--out", "blocker"]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn missing_config_file_exits_four() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(
        qfridge(dir.path(), &["run", "--config", "absent.cfg"]).status.code(),
        Some(4)
    );
}

#[test]
fn summary_prints_sorted_json() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("run.cfg"),
        SMALL_RUN.replace("kind = timeseries", "kind = summary"),
    )
    .unwrap();
    let o = qfridge(dir.path(), &["summary", "--config", "run.cfg"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8(o.stdout).unwrap();
    let v: Value = serde_json::from_str(&text).unwrap();
    let keys: Vec<&String> = v.as_object().unwrap().keys().collect();
    let mut sorted = keys.clone();
    sorted.sort();
    assert_eq!(keys, sorted);
    assert_eq!(v["virtual_temperature"]["value"], 0.01);
    assert!(files(dir.path()) == ["run.cfg"]);
}

#[test]
fn list_presets_names_every_preset() {
    let dir = tempfile::tempdir().unwrap();
    let o = qfridge(dir.path(), &["list-presets"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    for p in qfridge::cli::presets::PRESETS.iter() {
        assert!(text.contains(p.name), "{}", p.name);
    }
}
