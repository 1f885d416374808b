use std::path::PathBuf;
use std::process::Command;

fn scratch_dir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("push-bench-{name}-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn bench() -> Command {
    Command::new(env!("CARGO_BIN_EXE_push-bench"))
}

#[test]
fn run_writes_summary_and_logs() {
    let dir = scratch_dir("run");
    let out = dir.join("cell.csv");
    let log = dir.join("cell.jsonl");
    let status = bench()
        .args(["run", "--task", "rotation", "--object", "butter", "-k", "3", "--trials", "4"])
        .arg("--out")
        .arg(&out)
        .arg("--log")
        .arg(&log)
        .status()
        .unwrap();
    assert!(status.success());

    let csv = std::fs::read_to_string(&out).unwrap();
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().contains("success_rate"));
    assert_eq!(lines.count(), 1);

    for line in std::fs::read_to_string(&log).unwrap().lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        for key in ["step", "action", "obs_pose", "true_pose", "est_state"] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
    }
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn sweep_writes_one_row_per_cell() {
    let dir = scratch_dir("sweep");
    let grid = dir.join("grid.json");
    std::fs::write(
        &grid,
        r#"{"objects":["square"],"tasks":["mixed"],"samplers":["ana","rdn"],"k":[1],"trials":2}"#,
    )
    .unwrap();
    let out = dir.join("sweep.csv");
    let status = bench()
        .args(["sweep", "--grid"])
        .arg(&grid)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let csv = std::fs::read_to_string(&out).unwrap();
    assert_eq!(csv.lines().count(), 3);
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn unknown_object_is_an_error() {
    let dir = scratch_dir("bad");
    let status = bench()
        .args(["run", "--object", "teapot", "--trials", "1"])
        .arg("--out")
        .arg(dir.join("x.csv"))
        .status()
        .unwrap();
    assert!(!status.success());
    std::fs::remove_dir_all(dir).unwrap();
}
