use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn hgsmc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hgsmc"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn schema(name: &str) -> jsonschema::JSONSchema {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("schemas")
        .join(name);
    let doc: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    jsonschema::JSONSchema::compile(&doc).expect("schema compiles")
}

fn assert_valid(schema_name: &str, doc: &Value) {
    let s = schema(schema_name);
    if let Err(errors) = s.validate(doc) {
        let msgs: Vec<String> = errors
            .map(|e| format!("{e} at {}", e.instance_path))
            .collect();
        panic!("{schema_name}: {}", msgs.join("; "));
    };
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn simulate_preset_writes_valid_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("run");
    let o = hgsmc(&[
        "simulate",
        "--preset",
        "fo-hybrid-poly",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    for f in [
        "trajectory.csv",
        "metrics.json",
        "bounds.json",
        "audit.json",
        "config.toml",
    ] {
        assert!(out.join(f).is_file(), "{f}");
    }
    let metrics = read_json(&out.join("metrics.json"));
    assert_valid("metrics.schema.json", &metrics);
    let rms = metrics["rms"].as_f64().unwrap();
    assert!((rms - 0.9145).abs() <= 0.1 * 0.9145, "rms {rms}");
    assert!(metrics["t_settle"].is_null());

    let bounds = read_json(&out.join("bounds.json"));
    assert_valid("bounds.schema.json", &bounds);
    let modes: Vec<&str> = bounds["reports"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["mode"].as_str().unwrap())
        .collect();
    assert_eq!(modes, ["paper-literal", "rederived"]);

    let audit = read_json(&out.join("audit.json"));
    assert_valid("audit.schema.json", &audit);
    assert_eq!(audit["bound_mode"], "rederived");
    assert_eq!(audit["respected"], true);

    let csv = std::fs::read_to_string(out.join("trajectory.csv")).unwrap();
    assert_eq!(csv.lines().count(), 8002);
    assert_eq!(csv.lines().next().unwrap(), "t,x_1,u_1,s_1,d_1");
}

#[test]
fn simulate_writes_nothing_extra_on_overrides() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("short");
    let o = hgsmc(&[
        "simulate",
        "--preset",
        "fo-sato",
        "--dt",
        "1e-2",
        "--horizon",
        "1",
        "--mode",
        "paper-literal",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = std::fs::read_to_string(out.join("trajectory.csv")).unwrap();
    assert_eq!(csv.lines().count(), 102);
    let audit = read_json(&out.join("audit.json"));
    assert_eq!(audit["bound_mode"], "paper-literal");
    assert!(audit["sato_slope_fit"].is_object());
}

#[test]
fn initial_state_at_origin_enters_at_zero() {
    let tmp = tempfile::tempdir().unwrap();
    let text = hgsmc_preset_source("fo-hybrid-poly").replace("x0 = 3.0", "x0 = 0.0");
    let cfg = write_config(tmp.path(), "zero.toml", &text);
    let out = tmp.path().join("zero");
    let o = hgsmc(&[
        "simulate",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(read_json(&out.join("metrics.json"))["t_entry"], 0.0);
}

fn hgsmc_preset_source(name: &str) -> String {
    let o = hgsmc(&["presets", name]);
    assert!(o.status.success());
    String::from_utf8(o.stdout).unwrap()
}

#[test]
fn malformed_gamma_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let text = hgsmc_preset_source("fo-hybrid-poly").replace("gamma = 0.7", "gamma = 1.5");
    let cfg = write_config(tmp.path(), "bad.toml", &text);
    let o = hgsmc(&[
        "simulate",
        cfg.to_str().unwrap(),
        "--out",
        tmp.path().join("o").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(
        err.contains("controller.gamma") && err.contains("0 < gamma < 1"),
        "{err}"
    );
}

#[test]
fn unknown_preset_and_bad_mode_exit_2() {
    assert_eq!(
        hgsmc(&["simulate", "--preset", "nope"]).status.code(),
        Some(2)
    );
    assert_eq!(
        hgsmc(&["simulate", "--preset", "fo-sato", "--mode", "exact"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn divergence_exits_3_with_step() {
    let tmp = tempfile::tempdir().unwrap();
    let text =
        hgsmc_preset_source("el-hybrid-poly").replace("q0 = [2.0, 2.0]", "q0 = [2.0, 1e200]");
    let cfg = write_config(tmp.path(), "div.toml", &text);
    let o = hgsmc(&[
        "simulate",
        cfg.to_str().unwrap(),
        "--out",
        tmp.path().join("o").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("step"), "{}", stderr(&o));
}

#[test]
fn bounds_prints_both_modes() {
    let o = hgsmc(&["bounds", "--preset", "fo-hybrid-poly"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let doc: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_valid("bounds.schema.json", &doc);
    let rederived = &doc["reports"][1];
    assert!((rederived["t_in"].as_f64().unwrap() - 2.375).abs() < 1e-12);
    assert!(doc["residual_radius_refined"].as_f64().is_some());
    assert!(doc["gain_jump_at_eps"].as_f64().is_some());

    let erf = hgsmc(&["bounds", "--preset", "fo-hybrid-erf"]);
    let doc: Value = serde_json::from_slice(&erf.stdout).unwrap();
    let expected = 0.08 / (0.5 * std::f64::consts::PI.sqrt() * 1.2 - 0.5);
    assert!((doc["reports"][1]["t_in"].as_f64().unwrap() - expected).abs() < 1e-12);
}

#[test]
fn bounds_infeasible_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let text = hgsmc_preset_source("fo-hybrid-poly").replace("k0 = 0.8", "k0 = 0.4");
    let cfg = write_config(tmp.path(), "weak.toml", &text);
    let o = hgsmc(&["bounds", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(
        stderr(&o).contains("k0 must exceed disturbance bound"),
        "{}",
        stderr(&o)
    );
}

#[test]
fn compare_table_and_fairness() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("cmp");
    let o = hgsmc(&[
        "compare",
        "fo-sato",
        "fo-hybrid-poly",
        "fo-hybrid-erf",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let doc = read_json(&out.join("comparison.json"));
    assert_valid("comparison.schema.json", &doc);
    assert_eq!(doc["baseline"], "fo-sato");
    assert_eq!(
        doc["table"]["fo-sato"]["percent_vs_baseline"]["mean_u"],
        0.0
    );
    assert!(
        doc["table"]["fo-hybrid-poly"]["percent_vs_baseline"]["mean_u"]
            .as_f64()
            .unwrap()
            < 0.0
    );

    let same = tmp.path().join("same");
    let o = hgsmc(&[
        "compare",
        "fo-sato",
        "fo-sato",
        "--out",
        same.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let doc = read_json(&same.join("comparison.json"));
    for k in ["rms", "iae", "mean_u", "t_entry"] {
        assert_eq!(doc["table"]["fo-sato#2"]["percent_vs_baseline"][k], 0.0);
    }

    let text = hgsmc_preset_source("fo-sato").replace("dt = 1e-3", "dt = 1e-4");
    let fine = write_config(tmp.path(), "fine.toml", &text);
    let o = hgsmc(&[
        "compare",
        "fo-hybrid-poly",
        fine.to_str().unwrap(),
        "--out",
        same.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("sim.dt"), "{}", stderr(&o));
}

#[test]
fn sweep_initial_conditions() {
    let tmp = tempfile::tempdir().unwrap();
    let spec = write_config(
        tmp.path(),
        "ic.toml",
        "[[axis]]\npath = \"initial.x0\"\nvalues = [4, -5, 6]\n",
    );
    let out = tmp.path().join("sweep");
    let o = hgsmc(&[
        "sweep",
        "--preset",
        "fo-hybrid-erf",
        "--spec",
        spec.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let summary = read_json(&out.join("summary.json"));
    assert_valid("summary.schema.json", &summary);
    assert_eq!(summary["total"], 3);
    assert_eq!(summary["respected_count"], 3);
    let dirs = std::fs::read_dir(&out)
        .unwrap()
        .filter(|e| e.as_ref().unwrap().path().is_dir())
        .count();
    assert_eq!(dirs, 3);
}

#[test]
fn empty_sweep_matches_simulate() {
    let tmp = tempfile::tempdir().unwrap();
    let spec = write_config(tmp.path(), "empty.toml", "");
    let sw = tmp.path().join("sw");
    let o = hgsmc(&[
        "sweep",
        "--preset",
        "fo-sato",
        "--spec",
        spec.to_str().unwrap(),
        "--out",
        sw.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let single = tmp.path().join("single");
    assert!(hgsmc(&[
        "simulate",
        "--preset",
        "fo-sato",
        "--out",
        single.to_str().unwrap()
    ])
    .status
    .success());
    let a = std::fs::read(sw.join("base").join("trajectory.csv")).unwrap();
    let b = std::fs::read(single.join("trajectory.csv")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn sweep_bad_path_exits_2_before_running() {
    let tmp = tempfile::tempdir().unwrap();
    let spec = write_config(
        tmp.path(),
        "bad.toml",
        "[[axis]]\npath = \"initial.y0\"\nvalues = [1.0]\n",
    );
    let out = tmp.path().join("sweep");
    let o = hgsmc(&[
        "sweep",
        "--preset",
        "fo-sato",
        "--spec",
        spec.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn sweep_failing_variant_does_not_abort_others() {
    let tmp = tempfile::tempdir().unwrap();
    let spec = write_config(
        tmp.path(),
        "mixed.toml",
        "[[variant]]\nid = \"ok\"\n[[variant]]\nid = \"weak\"\nset = { \"controller.k\" = 0.1 }\n",
    );
    let out = tmp.path().join("sweep");
    let o = hgsmc(&[
        "sweep",
        "--preset",
        "fo-sato",
        "--spec",
        spec.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_ne!(o.status.code(), Some(0));
    let summary = read_json(&out.join("summary.json"));
    assert_valid("summary.schema.json", &summary);
    assert_eq!(summary["succeeded"], 1);
    assert!(out.join("ok").join("trajectory.csv").is_file());
}

#[test]
fn presets_listed() {
    let o = hgsmc(&["presets"]);
    let text = String::from_utf8(o.stdout).unwrap();
    for name in [
        "fo-hybrid-poly",
        "fo-hybrid-erf",
        "fo-sato",
        "el-hybrid-poly",
        "el-hybrid-erf",
    ] {
        assert!(text.lines().any(|l| l == name), "{name}");
    }
}
