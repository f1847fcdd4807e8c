//! End-to-end runs of the `classmatch` binary over generated fixtures.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_classmatch"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn gen_fixture(dir: &Path, seed: u64) -> (PathBuf, PathBuf) {
    let out = run(&[
        "gen",
        "--students",
        "60",
        "--classes",
        "8",
        "--k",
        "4",
        "--seed",
        &seed.to_string(),
        "--out-dir",
        dir.to_str().unwrap(),
        "--lower",
        "3",
        "--upper-min",
        "8",
        "--upper-max",
        "12",
        "--canceled",
        "1",
    ]);
    assert!(out.status.success(), "gen failed: {out:?}");
    (dir.join("classes.csv"), dir.join("preferences.csv"))
}

#[test]
fn gen_is_byte_stable_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    let (c1, p1) = gen_fixture(&dir.path().join("a"), 7);
    let (c2, p2) = gen_fixture(&dir.path().join("b"), 7);
    assert_eq!(fs::read(&c1).unwrap(), fs::read(&c2).unwrap());
    assert_eq!(fs::read(&p1).unwrap(), fs::read(&p2).unwrap());
    let (c3, _) = gen_fixture(&dir.path().join("c"), 8);
    assert_ne!(fs::read(&c1).unwrap(), fs::read(&c3).unwrap());
}

#[test]
fn solve_writes_matching_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let (classes, prefs) = gen_fixture(dir.path(), 3);
    let matching = dir.path().join("matching.csv");
    let report = dir.path().join("report.csv");
    let out = run(&[
        "solve",
        "--model",
        "Opt67",
        "--classes",
        classes.to_str().unwrap(),
        "--prefs",
        prefs.to_str().unwrap(),
        "--out",
        matching.to_str().unwrap(),
        "--report",
        report.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{out:?}");
    let matching_text = fs::read_to_string(&matching).unwrap();
    assert!(matching_text.starts_with("student_id,class_id,rank\n"));
    assert_eq!(matching_text.lines().count(), 61);
    let report_text = fs::read_to_string(&report).unwrap();
    assert!(report_text.contains("Opt67,ok"));

    // Same inputs, same bytes.
    let matching2 = dir.path().join("matching2.csv");
    let out = run(&[
        "solve",
        "--model",
        "Opt67",
        "--classes",
        classes.to_str().unwrap(),
        "--prefs",
        prefs.to_str().unwrap(),
        "--out",
        matching2.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert_eq!(fs::read(&matching).unwrap(), fs::read(&matching2).unwrap());
}

#[test]
fn mechanism_runs_are_seeded_and_stable() {
    let dir = tempfile::tempdir().unwrap();
    let (classes, prefs) = gen_fixture(dir.path(), 5);
    for kind in ["da", "boston"] {
        let a = dir.path().join(format!("{kind}-a.csv"));
        let b = dir.path().join(format!("{kind}-b.csv"));
        for out_path in [&a, &b] {
            let out = run(&[
                "mechanism",
                "--kind",
                kind,
                "--seed",
                "11",
                "--classes",
                classes.to_str().unwrap(),
                "--prefs",
                prefs.to_str().unwrap(),
                "--out",
                out_path.to_str().unwrap(),
            ]);
            assert!(out.status.success(), "{out:?}");
        }
        assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    }
}

#[test]
fn compare_emits_table_and_markdown() {
    let dir = tempfile::tempdir().unwrap();
    let (classes, prefs) = gen_fixture(dir.path(), 9);
    let table = dir.path().join("table.csv");
    let out = run(&[
        "compare",
        "--models",
        "Opt80,Opt67,Fair",
        "--classes",
        classes.to_str().unwrap(),
        "--prefs",
        prefs.to_str().unwrap(),
        "--out",
        table.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{out:?}");
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("| model"), "{stdout}");
    let csv = fs::read_to_string(&table).unwrap();
    assert!(csv.starts_with("model,status,rank1,rank2,rank3,rank4,others"));
    assert_eq!(csv.lines().count(), 4);
}

#[test]
fn check_exit_codes_follow_violations() {
    let dir = tempfile::tempdir().unwrap();
    // Every class generously covered: lower 0 cannot be violated.
    let (classes, prefs) = gen_fixture(dir.path(), 2);
    let out = run(&[
        "check",
        "--max-rank",
        "2",
        "--classes",
        classes.to_str().unwrap(),
        "--prefs",
        prefs.to_str().unwrap(),
    ]);
    assert!(out.status.success());

    // Hand-built fixture where `shy` is ranked top-2 by nobody.
    let classes = dir.path().join("c2.csv");
    let prefs = dir.path().join("p2.csv");
    fs::write(
        &classes,
        "class_id,lower,upper,status\npop,0,10,active\nshy,7,10,active\n",
    )
    .unwrap();
    let mut rows = String::from("student_id,choice_1,choice_2\n");
    for s in 0..8 {
        rows.push_str(&format!("s{s},pop,\n"));
    }
    fs::write(&prefs, rows).unwrap();
    let out = run(&[
        "check",
        "--max-rank",
        "2",
        "--classes",
        classes.to_str().unwrap(),
        "--prefs",
        prefs.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("shy,0,7"), "{stdout}");
}

#[test]
fn infeasible_solve_exits_two_without_matching() {
    let dir = tempfile::tempdir().unwrap();
    let classes = dir.path().join("c.csv");
    let prefs = dir.path().join("p.csv");
    fs::write(
        &classes,
        "class_id,lower,upper,status\nc1,0,5,active\nc2,0,5,active\n",
    )
    .unwrap();
    let mut rows = String::from("student_id,choice_1,choice_2\n");
    for s in 0..8 {
        rows.push_str(&format!("s{s},c1,\n"));
    }
    fs::write(&prefs, rows).unwrap();
    let matching = dir.path().join("m.csv");
    let out = run(&[
        "solve",
        "--model",
        "Opt67",
        "--max-rank",
        "2",
        "--classes",
        classes.to_str().unwrap(),
        "--prefs",
        prefs.to_str().unwrap(),
        "--out",
        matching.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2), "{out:?}");
    assert!(!matching.exists());
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.contains("infeasible"), "{stderr}");
}

#[test]
fn verify_agrees_on_tiny_instances() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "gen",
        "--students",
        "6",
        "--classes",
        "3",
        "--k",
        "2",
        "--seed",
        "4",
        "--out-dir",
        dir.path().to_str().unwrap(),
        "--lower",
        "0",
        "--upper-min",
        "2",
        "--upper-max",
        "3",
    ]);
    assert!(out.status.success());
    let out = run(&[
        "verify",
        "--classes",
        dir.path().join("classes.csv").to_str().unwrap(),
        "--prefs",
        dir.path().join("preferences.csv").to_str().unwrap(),
        "--model",
        "Fair",
    ]);
    assert!(out.status.success(), "{out:?}");
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("agree"), "{stdout}");
}

#[test]
fn verify_rejects_oversized_instances() {
    let dir = tempfile::tempdir().unwrap();
    let (classes, prefs) = gen_fixture(dir.path(), 6);
    let out = run(&[
        "verify",
        "--classes",
        classes.to_str().unwrap(),
        "--prefs",
        prefs.to_str().unwrap(),
        "--model",
        "Opt67",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.contains("too large"), "{stderr}");
}

#[test]
fn bad_inputs_exit_one_with_location() {
    let dir = tempfile::tempdir().unwrap();
    let (classes, prefs) = gen_fixture(dir.path(), 1);
    let out = run(&[
        "solve",
        "--model",
        "Opt99",
        "--classes",
        classes.to_str().unwrap(),
        "--prefs",
        prefs.to_str().unwrap(),
        "--out",
        dir.path().join("x.csv").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8(out.stderr).unwrap().contains("Opt99"));

    let bad_prefs = dir.path().join("bad.csv");
    fs::write(&bad_prefs, "student_id,choice_1,choice_2\ns1,c1,c1\n").unwrap();
    let classes_file = dir.path().join("cls.csv");
    fs::write(
        &classes_file,
        "class_id,lower,upper,status\nc1,0,5,active\n",
    )
    .unwrap();
    let out = run(&[
        "check",
        "--max-rank",
        "1",
        "--classes",
        classes_file.to_str().unwrap(),
        "--prefs",
        bad_prefs.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.contains("s1"), "{stderr}");
}
