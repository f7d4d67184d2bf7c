use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_npc-ewa"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

#[test]
fn verify_passes_on_every_space() {
    let o = run(&["verify", "all", "--trials", "200"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let out = stdout(&o);
    for space in [
        "euclidean:2",
        "hyperboloid:2",
        "spd-log-euclidean:2",
        "spd-log-cholesky:2",
        "spider:3",
        "product(",
    ] {
        assert!(out.contains(space), "{space} missing from\n{out}");
    }
    assert!(!out.contains("FAIL"));
}

#[test]
fn verify_writes_slacks_on_request() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("slacks.csv");
    let o = run(&[
        "verify",
        "spider:3",
        "--trials",
        "10",
        "--seed",
        "4",
        "--csv",
        path.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let csv = fs::read_to_string(&path).unwrap();
    let mut lines = csv.lines();
    assert!(lines
        .next()
        .unwrap()
        .starts_with("# schema=1 kind=verify space=spider:3"));
    assert_eq!(lines.next(), Some("space,seed,check,trial,slack"));
    assert_eq!(lines.count(), 9 * 10);
}

#[test]
fn single_expert_regret_is_zero() {
    let o = run(&["regret", "--space", "hyperboloid:2", "-K", "1", "-T", "30"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = stdout(&o);
    assert!(csv.starts_with("# schema=1 kind=regret"));
    assert_eq!(
        csv.lines().nth(1),
        Some("t,forecaster_loss,best_expert_loss,regret,bound")
    );
    for row in csv.lines().skip(2) {
        let cells: Vec<&str> = row.split(',').collect();
        assert_eq!(cells[3], "0", "{row}");
    }
}

#[test]
fn malformed_config_exits_2_with_its_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.ini");
    fs::write(&path, "[experiment]\nkind = regret\n[space]\nspec euclidean:2\n").unwrap();
    let o = run(&["run", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("bad.ini:4:"), "{}", stderr(&o));
}

#[test]
fn bad_values_exit_2() {
    for args in [
        vec!["regret", "--space", "torus:2"],
        vec!["regret", "--space", "euclidean:2", "-K", "0"],
        vec!["regret", "--space", "euclidean:2", "--beta", "-1"],
        vec!["regret", "--space", "euclidean:1", "--set", "regret.expert_points=0;5"],
        vec!["batch", "--space", "euclidean:1", "--mc-samples", "5"],
        vec!["verify", "spider:3", "--set", "verify.colour=red"],
        vec!["verify", "--no-such-flag"],
    ] {
        let o = run(&args);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", stderr(&o));
    }
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["regret-spider.ini", "batch-line.ini"] {
        let config = configs().join(name);
        let a = dir.path().join("a.csv");
        let b = dir.path().join("b.csv");
        for out in [&a, &b] {
            let o = run(&[
                "run",
                config.to_str().unwrap(),
                "-o",
                out.to_str().unwrap(),
                "--set",
                "batch.draws=5",
            ]);
            assert_eq!(o.status.code(), Some(0), "{name}: {}", stderr(&o));
        }
        assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap(), "{name}");
    }
}

#[test]
fn flags_override_config_keys() {
    let config = configs().join("regret-spider.ini");
    let o = run(&[
        "run",
        config.to_str().unwrap(),
        "--set",
        "regret.rounds=7",
        "--seed",
        "2",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let csv = stdout(&o);
    assert!(csv.lines().next().unwrap().contains("rounds=7"));
    assert!(csv.lines().next().unwrap().contains("seed=2"));
    assert_eq!(csv.lines().count(), 2 + 7);
}

#[test]
fn seeds_change_the_sample() {
    let a = stdout(&run(&["regret", "--space", "euclidean:2", "-T", "5", "--seed", "1"]));
    let b = stdout(&run(&["regret", "--space", "euclidean:2", "-T", "5", "--seed", "2"]));
    assert_ne!(a.lines().nth(2), b.lines().nth(2));
}

#[test]
fn sample_configs_hold_their_bounds() {
    for name in ["estimate-spider.ini", "verify-hyperboloid.ini"] {
        let config = configs().join(name);
        let o = run(&["run", config.to_str().unwrap(), "--set", "batch.draws=20"]);
        assert_eq!(o.status.code(), Some(0), "{name}: {}{}", stdout(&o), stderr(&o));
    }
}

#[test]
fn an_inexact_forecaster_breaks_the_bound() {
    // three inductive steps with a loose tolerance is far from the weighted
    // barycenter; the greedy adversary exploits it
    let o = run(&[
        "regret",
        "--space",
        "euclidean:2",
        "-K",
        "4",
        "-T",
        "100",
        "--adversary",
        "greedy",
        "--set",
        "solver.kind=inductive",
        "--set",
        "solver.max_iterations=3",
        "--set",
        "solver.tolerance=100",
    ]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.contains("violation: regret"), "{err}");
    assert!(err.contains("experts:") && err.contains("outcomes:"), "{err}");
}

#[test]
fn uncertified_beta_is_reported_not_asserted() {
    let o = run(&[
        "regret",
        "--space",
        "euclidean:1",
        "--beta",
        "10",
        "-T",
        "20",
        "--adversary",
        "greedy",
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stderr(&o).contains("no certified bound"));
    let csv = stdout(&o);
    assert!(csv.lines().nth(2).unwrap().ends_with(','));
}
