use std::path::Path;
use std::process::{Command, Output};

fn pathtune(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pathtune"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("spawn pathtune")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn train_writes_curves_and_chosen_gains() {
    let dir = tempfile::tempdir().unwrap();
    let o = pathtune(dir.path(), &["train", "--maneuver", "roundabout", "--episodes", "2", "--alphas", "0.5"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let curve = std::fs::read_to_string(dir.path().join("learning_curves/roundabout_alpha0p5.csv")).unwrap();
    assert!(curve.starts_with("# seed=0\n# alpha=0.5\nepisode,reward_sum"));
    let chosen = std::fs::read_to_string(dir.path().join("reports/roundabout_chosen_gains.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&chosen).unwrap();
    assert_eq!(v["seed"], 0);
    assert!(v["gains"]["kv"].is_number());
}

#[test]
fn eval_reads_gains_back_from_train() {
    let dir = tempfile::tempdir().unwrap();
    let o = pathtune(dir.path(), &["train", "--maneuver", "lane-change", "--episodes", "3", "--alphas", "0.9"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let file = dir.path().join("reports/lane-change_chosen_gains.json");
    let o = pathtune(
        dir.path(),
        &["eval", "--maneuver", "lane-change", "--gains-file", file.to_str().unwrap(), "--runs", "2", "--seed", "5"],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let report = std::fs::read_to_string(dir.path().join("reports/eval_lane-change_clean.csv")).unwrap();
    assert!(report.starts_with("# seed=5\n"));
    assert_eq!(report.lines().count(), 1 + 1 + 2 + 1);
    assert!(dir.path().join("trajectories/eval_lane-change_clean_run01.csv").exists());
}

#[test]
fn circuit_collision_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let o = pathtune(
        dir.path(),
        &[
            "circuit",
            "--schedule",
            "default=0.1,1,1,0.7",
            "--schedule",
            "lane-change=0.1,1,1,0.7",
            "--schedule",
            "roundabout=0.1,1,1,0.7",
        ],
    );
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    let ok = pathtune(dir.path(), &["circuit"]);
    assert_eq!(ok.status.code(), Some(0), "{}", stderr(&ok));
}

#[test]
fn bad_inputs_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let list = dir.path().join("bad.txt");
    std::fs::write(&list, "nope\n1,2\n").unwrap();
    let o = pathtune(dir.path(), &["compare", "--maneuver", "roundabout", "--gains-list", list.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("all 2 gains lines are malformed"), "{}", stderr(&o));

    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "[sim]\nwheelbase = 2.0\nbogus = 1\n").unwrap();
    let o = pathtune(dir.path(), &["--config", cfg.to_str().unwrap(), "circuit"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("sim.bogus"), "{}", stderr(&o));
}

#[test]
fn defaults_round_trip_through_config() {
    let dir = tempfile::tempdir().unwrap();
    let o = pathtune(dir.path(), &["defaults"]);
    assert!(o.status.success());
    let cfg = dir.path().join("defaults.toml");
    std::fs::write(&cfg, &o.stdout).unwrap();
    let again = pathtune(dir.path(), &["--config", cfg.to_str().unwrap(), "defaults"]);
    assert!(again.status.success(), "{}", stderr(&again));
    assert_eq!(o.stdout, again.stdout);
}
