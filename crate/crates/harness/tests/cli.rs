use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use statrs::function::erf::erf;

fn lab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rfim-lab"))
        .args(args)
        .env_remove("RFIM_LAB_SEED")
        .output()
        .expect("binary runs")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn summary(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap()
}

#[test]
fn single_site_probability_matches_erf() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("mn");
    let o = lab(&["mn", "--N", "0", "--eps", "4", "--samples", "10000", "--out", path(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let s = summary(&out);
    let m = &s["runs"][0]["summary"]["points"][0]["m_hat"];
    let est = m["estimate"].as_f64().unwrap();
    let se = m["se"].as_f64().unwrap();
    // A lone site is zero-labeled iff |h| < 4, with h ~ N(0, eps^2).
    let exact = erf(4.0 / (4.0 * std::f64::consts::SQRT_2));
    assert!((est - exact).abs() <= 3.0 * se, "{est} vs {exact} (se {se})");
    for f in ["config.toml", "records.jsonl", "table.csv", "fit.csv", "decay.svg"] {
        assert!(out.join(f).exists(), "missing {f}");
    }
}

#[test]
fn reruns_are_byte_identical_and_worker_invariant() {
    let tmp = tempfile::tempdir().unwrap();
    let dirs: Vec<_> = ["a", "b", "c"].iter().map(|d| tmp.path().join(d)).collect();
    for (dir, workers) in dirs.iter().zip(["4", "4", "1"]) {
        let o = lab(&[
            "geodesic", "--N", "16,32", "--eps", "0.5,1", "--samples", "100", "--seed", "0xabc", "--workers", workers,
            "--out", path(dir),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    for f in ["records.jsonl", "summary.json"] {
        let a = fs::read(dirs[0].join(f)).unwrap();
        assert_eq!(a, fs::read(dirs[1].join(f)).unwrap(), "{f} differs between reruns");
        assert_eq!(a, fs::read(dirs[2].join(f)).unwrap(), "{f} differs across worker counts");
    }
}

#[test]
fn invalid_configuration_exits_with_one() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("x");
    for args in [
        vec!["mn", "--N", "0", "--eps", "1", "--samples", "0"],
        vec!["mn", "--N", "0", "--eps=-1", "--samples", "100"],
        vec!["mn", "--N", "0", "--eps", "1,1", "--samples", "100"],
        vec!["mn", "--N", "0", "--eps", "1", "--samples", "100", "--workers", "0"],
        vec!["mn", "--N", "0", "--eps", "1", "--bogus"],
        vec!["mn", "--N", "0", "--eps", "1", "--scale-mode", "cubic"],
    ] {
        let mut args = args;
        args.extend(["--out", path(&out)]);
        let o = lab(&args);
        assert_eq!(o.status.code(), Some(1), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
}

#[test]
fn unwritable_output_exits_with_three() {
    let tmp = tempfile::tempdir().unwrap();
    let file = tmp.path().join("plain");
    fs::write(&file, "x").unwrap();
    let o = lab(&["mn", "--N", "2", "--eps", "1", "--samples", "100", "--out", path(&file.join("sub"))]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn report_recomputes_and_detects_tampering() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("star");
    let o = lab(&["star", "--N", "4", "--eps", "1", "--samples", "60", "--out", path(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let stored = fs::read(out.join("summary.json")).unwrap();

    fs::remove_file(out.join("summary.json")).unwrap();
    fs::remove_file(out.join("table.csv")).unwrap();
    let o = lab(&["report", "--out", path(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(fs::read(out.join("summary.json")).unwrap(), stored);
    assert!(out.join("table.csv").exists());

    let o = lab(&["report", "--out", path(&out)]);
    assert!(o.status.success());

    let mut tampered = summary(&out);
    tampered["master_seed"] = Value::from(1u64);
    fs::write(out.join("summary.json"), serde_json::to_string_pretty(&tampered).unwrap() + "\n").unwrap();
    let o = lab(&["report", "--out", path(&out)]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn corrupt_records_exit_with_three() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("mn");
    let o = lab(&["mn", "--N", "0", "--eps", "1", "--samples", "100", "--out", path(&out)]);
    assert!(o.status.success());
    let mut records = fs::read_to_string(out.join("records.jsonl")).unwrap();
    records.push_str("{not json\n");
    fs::write(out.join("records.jsonl"), records).unwrap();
    let o = lab(&["report", "--out", path(&out)]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("101"));
}

#[test]
fn injected_fault_aborts_with_two_and_leaves_parseable_records() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("mn");
    let o = lab(&["mn", "--N", "4", "--eps", "1", "--samples", "100", "--workers", "2", "--inject-fault", "--out", path(&out)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("coupling"));
    let records = fs::read_to_string(out.join("records.jsonl")).unwrap();
    assert!(records.is_empty() || records.ends_with('\n'));
    for line in records.lines() {
        serde_json::from_str::<Value>(line).unwrap();
    }
    assert!(!out.join("summary.json").exists());
}

#[test]
fn gs_prints_both_ground_states_and_labels() {
    let o = lab(&["gs", "--N", "2", "--eps", "1", "--seed", "5"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("plus boundary ground state"));
    assert!(text.contains("minus boundary ground state"));
    assert!(text.contains("of 25 sites disagree"));
    let grid_rows = text.lines().filter(|l| l.len() == 5 && l.chars().all(|c| "+-0".contains(c))).count();
    assert_eq!(grid_rows, 15);
}

#[test]
fn config_file_env_seed_and_flag_precedence() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("run.toml");
    fs::write(&cfg, "experiment = \"mn\"\nN = [0]\neps = [4.0]\nsamples = 200\n").unwrap();
    let run = |dir: &str, extra: &[&str], env: Option<&str>| {
        let out = tmp.path().join(dir);
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_rfim-lab"));
        cmd.args(["mn", "--config", path(&cfg), "--out", path(&out)]).args(extra).env_remove("RFIM_LAB_SEED");
        if let Some(seed) = env {
            cmd.env("RFIM_LAB_SEED", seed);
        }
        let o = cmd.output().unwrap();
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        summary(&out)
    };
    assert_eq!(run("default", &[], None)["master_seed"], 0x00C0FFEE);
    assert_eq!(run("env", &[], Some("0x1234"))["master_seed"], 0x1234);
    let flagged = run("flag", &["--seed", "7", "--samples", "300"], Some("0x1234"));
    assert_eq!(flagged["master_seed"], 7);
    assert_eq!(flagged["runs"][0]["summary"]["points"][0]["m_hat"]["trials"], 300);

    fs::write(&cfg, "experiment = \"star\"\nN = [4]\neps = [1.0]\n").unwrap();
    let o = lab(&["mn", "--config", path(&cfg), "--out", path(&tmp.path().join("bad"))]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn verify_with_injected_fault_reports_failures() {
    let tmp = tempfile::tempdir().unwrap();
    let o = lab(&["verify", "--inject-fault", "--workers", "2", "--out", path(tmp.path())]);
    assert_eq!(o.status.code(), Some(2));
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(text.lines().filter(|l| l.starts_with("PASS") || l.starts_with("FAIL")).count(), 12);
    assert!(text.lines().any(|l| l.starts_with("FAIL  1")), "{text}");
    assert!(text.lines().any(|l| l.starts_with("FAIL  2")), "{text}");
    let json: Value = serde_json::from_str(&fs::read_to_string(tmp.path().join("verify.json")).unwrap()).unwrap();
    assert_eq!(json["fault"], true);
}
