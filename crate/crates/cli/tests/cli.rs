use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn slcb(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_slcb")).args(args).output().expect("binary runs")
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn small_config(dir: &Path, seed: u64, num_arms: usize) -> PathBuf {
    let text = format!(
        r#"{{
  "environment": {{
    "dim": 2, "num_arms": {num_arms}, "horizon": 60, "theta_star": [0.7071067811865476, 0.7071067811865476],
    "noise": {{"kind": "gaussian", "sigma": 0.1}},
    "contexts": {{"kind": "synthetic", "user_dim": 2, "arm_feature_dim": 2, "seed": 3}},
    "s_bound": 1.0
  }},
  "mechanisms": [{{"kind": "opt_gtm"}}, {{"kind": "lin_ucb"}}],
  "profile": [{{"kind": "epoch_gradient"}}],
  "epochs": 2, "runs": 3, "seed": {seed}, "round_stride": 7
}}"#
    );
    let path = dir.join(format!("config_{seed}_{num_arms}.json"));
    std::fs::write(&path, text).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn zero_arms_exits_one_naming_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_config(dir.path(), 1, 0);
    let out = slcb(&["run", "--config", s(&config), "--out", s(&dir.path().join("o"))]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("num_arms"), "{err}");
    assert_eq!(slcb(&["validate", "--config", s(&config)]).status.code(), Some(1));
}

#[test]
fn missing_config_exits_one() {
    let out = slcb(&["run", "--config", "/nonexistent/config.json"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn rerun_is_byte_identical_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_config(dir.path(), 9, 3);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert!(slcb(&["run", "--config", s(&config), "--out", s(&a), "--jobs", "1"]).status.success());
    assert!(slcb(&["run", "--config", s(&config), "--out", s(&b), "--jobs", "4"]).status.success());
    for f in ["rounds.csv", "summary.json", "config_echo.json"] {
        let x = std::fs::read(a.join(f)).unwrap();
        let y = std::fs::read(b.join(f)).unwrap();
        assert!(x == y, "{f} differs");
    }
    let rounds = std::fs::read_to_string(a.join("rounds.csv")).unwrap();
    assert!(rounds.starts_with("config_fingerprint,mechanism,run,epoch,t,arm,reward,instantaneous_regret,cumulative_regret,active_count,manipulation_this_round\n"));
    assert!(!rounds.contains('\r'));
    // 60 rounds at stride 7 keep t = 6, 13, ..., 55 and the last round 59.
    let per_episode = 60 / 7 + 1;
    assert_eq!(rounds.lines().count() - 1, per_episode * 2 * 3 * 2);
}

#[test]
fn seed_override_changes_fingerprint_and_output() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_config(dir.path(), 9, 3);
    let fp = |args: &[&str]| String::from_utf8(slcb(args).stdout).unwrap();
    let base = fp(&["validate", "--config", s(&config)]);
    let over = fp(&["validate", "--config", s(&config), "--seed", "10"]);
    assert!(base.starts_with("ok "));
    assert_ne!(base, over);
}

#[test]
fn emit_plotdata_writes_four_tables_and_refuses_mixed_fingerprints() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let c1 = small_config(dir.path(), 1, 3);
    let c2 = small_config(dir.path(), 2, 3);
    assert!(slcb(&["run", "--config", s(&c1), "--out", s(&a)]).status.success());
    assert!(slcb(&["run", "--config", s(&c2), "--out", s(&b)]).status.success());

    let plots = dir.path().join("plots");
    let ok = slcb(&["emit-plotdata", s(&a), "--out", s(&plots)]);
    assert!(ok.status.success(), "{}", String::from_utf8_lossy(&ok.stderr));
    for f in ["regret_by_epoch.csv", "regret_vs_t_epoch0.csv", "regret_vs_t_final.csv", "manipulation_and_utility.csv"] {
        let text = std::fs::read_to_string(plots.join(f)).unwrap();
        let header = text.lines().next().unwrap();
        assert!(header.starts_with("config_fingerprint,"), "{f}: {header}");
        assert!(header.contains("stderr"), "{f}: {header}");
    }
    // two mechanisms, two epochs
    let by_epoch = std::fs::read_to_string(plots.join("regret_by_epoch.csv")).unwrap();
    assert_eq!(by_epoch.lines().count(), 1 + 4);

    let mixed = slcb(&["emit-plotdata", s(&a), s(&b), "--out", s(&dir.path().join("mixed"))]);
    assert_eq!(mixed.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&mixed.stderr).contains("fingerprint"));

    let missing = slcb(&["emit-plotdata", s(&dir.path().join("nothing"))]);
    assert_eq!(missing.status.code(), Some(1));
}

#[test]
fn single_run_has_zero_stderr() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_config(dir.path(), 4, 2);
    let text = std::fs::read_to_string(&config).unwrap().replace("\"runs\": 3", "\"runs\": 1");
    std::fs::write(&config, text).unwrap();
    let out = dir.path().join("o");
    assert!(slcb(&["run", "--config", s(&config), "--out", s(&out)]).status.success());
    assert!(slcb(&["emit-plotdata", s(&out)]).status.success());
    let csv = std::fs::read_to_string(out.join("regret_by_epoch.csv")).unwrap();
    for line in csv.lines().skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        assert_eq!(cols[4], "0.0", "{line}");
    }
}

#[test]
fn check_ne_tiny_oracle_matches_hand_enumeration() {
    let dir = tempfile::tempdir().unwrap();
    let out = slcb(&["check-ne", "--config", s(&configs().join("tiny_oracle.json")), "--out", s(dir.path())]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.path().join("ne_report.json")).unwrap()).unwrap();
    let entries = report["entries"].as_array().unwrap();
    // Greedy with known theta, arm 1 truthful at 0.3 against 0.5: never pulled.
    // Reporting 1.0 in both rounds wins both rounds.
    let greedy = &entries[0]["report"];
    assert_eq!(entries[0]["mechanism"], "greedy_known_theta");
    assert_eq!(greedy["baseline"]["mean"], 0.0);
    assert_eq!(greedy["gain"], 2.0);
    // The four fixed sequences over {0.3, 1.0}^2 win 0, 1, 1 and 2 rounds.
    let gains: Vec<f64> = greedy["entries"].as_array().unwrap().iter().map(|e| e["gain"]["mean"].as_f64().unwrap()).collect();
    assert_eq!(gains, vec![0.0, 1.0, 1.0, 2.0]);
    // The deterministic mechanism is uniform throughout at T = 2 and ignores reports.
    let ic = &entries[1]["report"];
    assert_eq!(ic["baseline"]["mean"], 1.0);
    assert_eq!(ic["gain"], 0.0);
}

#[test]
fn check_ne_self_deviation_has_zero_gain() {
    let dir = tempfile::tempdir().unwrap();
    let mut value: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(configs().join("greedy_deviation.json")).unwrap()).unwrap();
    value["deviation"]["menu"] = serde_json::json!([{"kind": "truthful"}]);
    let text = value.to_string();
    let config = dir.path().join("self.json");
    std::fs::write(&config, text).unwrap();
    let out = slcb(&["check-ne", "--config", s(&config), "--out", s(dir.path())]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.path().join("ne_report.json")).unwrap()).unwrap();
    for e in report["entries"].as_array().unwrap() {
        assert_eq!(e["report"]["gain"], 0.0);
    }
}

#[test]
fn check_ne_greedy_rewards_myopic_deviation() {
    let dir = tempfile::tempdir().unwrap();
    let out = slcb(&["check-ne", "--config", s(&configs().join("greedy_deviation.json")), "--out", s(dir.path()), "--jobs", "2"]);
    assert!(out.status.success());
    let report: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.path().join("ne_report.json")).unwrap()).unwrap();
    let greedy = &report["entries"][0];
    assert_eq!(greedy["mechanism"], "greedy_known_theta");
    let gain = greedy["report"]["gain"].as_f64().unwrap();
    let se = greedy["report"]["gain_stderr"].as_f64().unwrap();
    assert!(gain > 3.0 * se && gain > 0.0, "gain {gain} se {se}");
    let best = greedy["report"]["best"].as_u64().unwrap() as usize;
    assert_eq!(greedy["report"]["entries"][best]["label"], "myopic");
}

#[test]
fn check_ne_without_deviation_section_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_config(dir.path(), 1, 2);
    let out = slcb(&["check-ne", "--config", s(&config), "--out", s(dir.path())]);
    assert_eq!(out.status.code(), Some(1));
}
