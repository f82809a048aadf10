use std::fs;
use std::process::Command;

fn slfv() -> Command {
    Command::new(env!("CARGO_BIN_EXE_slfv"))
}

#[test]
fn run_recipe_writes_a_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s");
    let run = slfv()
        .args(["run", "sigma2", "--replicas", "2000", "--seed", "3", "--out"])
        .arg(&out)
        .output()
        .unwrap();
    assert!(run.status.success());
    assert!(String::from_utf8_lossy(&run.stdout).contains("[PASS] sigma2:"));
    let manifest = fs::read_to_string(out.join("manifest.txt")).unwrap();
    assert!(manifest.contains("recipe=sigma2\nseed=3\n"));
    assert!(manifest.contains("file=sigma2.csv"));
    assert!(manifest.contains("file=config.txt"));
}

#[test]
fn event_log_and_errors() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.txt");
    fs::write(&cfg, "d=2\ncase=A\nu=0.8\nr=0.5\nL=8\nsnapshots=25\n").unwrap();
    let out = dir.path().join("ev");
    let run = slfv()
        .arg("event-log")
        .arg(&cfg)
        .args(["--replicas", "2", "--override", "seed=9", "--out"])
        .arg(&out)
        .output()
        .unwrap();
    assert!(run.status.success());
    for rep in 0..2 {
        let log = fs::read_to_string(out.join(format!("events_{rep}.csv"))).unwrap();
        assert_eq!(log.lines().count(), 26);
        assert!(log.starts_with("time,center_x,center_y,radius"));
    }

    let bad = slfv().args(["run", "sigma2", "--override", "u=1.5"]).output().unwrap();
    assert_eq!(bad.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("u: must lie in (0,1]"));
    let unknown = slfv().args(["run", "fig9"]).output().unwrap();
    assert_eq!(unknown.status.code(), Some(2));
}
