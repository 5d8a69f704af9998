use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn verify(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cheriot-verify"))
        .args(args)
        .env("CHERIOT_WORKERS", "2")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn fuzz_unmutated_passes() {
    let o = verify(&["fuzz", "--seed", "1", "--programs", "10", "--insns", "64"]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
}

#[test]
fn fuzz_with_m1_fails_on_the_access_check() {
    let o = verify(&["fuzz", "--mutation", "M1", "--programs", "0"]);
    assert_eq!(code(&o), 1);
    let out = stdout(&o);
    assert!(out.contains("FAIL run_follower") && out.contains("assertion=access_check"), "{out}");
    assert!(out.contains("reproduce: cheriot-verify replay --job directed-M1"));
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(code(&verify(&["fuzz", "--max-gnt-latency", "11"])), 2);
    assert_eq!(code(&verify(&["fuzz", "--max-rvalid-latency", "0"])), 2);
    assert_eq!(code(&verify(&["fuzz", "--wfi-wake-bound", "17"])), 2);
    assert_eq!(code(&verify(&["fuzz", "--mutation", "M9"])), 2);
    assert_eq!(code(&verify(&["frobnicate"])), 2);
}

#[test]
fn replay_reproduces_traces_byte_for_byte() {
    let dir = tempfile::tempdir().unwrap();
    let traces = dir.path().join("t");
    let o = verify(&["fuzz", "--seed", "3", "--programs", "3", "--insns", "48", "--trace-path", p(&traces)]);
    assert_eq!(code(&o), 0);
    let file = traces.join("base-random-000001.trace");
    let original = fs::read_to_string(&file).unwrap();
    let o = verify(&["replay", "--trace", p(&file)]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout(&o), original);

    let o = verify(&["replay", "--job", "random-000001", "--seed", "3", "--insns", "48"]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout(&o), original);
}

#[test]
fn replay_of_a_failing_run_fails_the_same_way() {
    let dir = tempfile::tempdir().unwrap();
    let traces = dir.path().join("t");
    let o = verify(&["fuzz", "--mutation", "M6", "--programs", "0", "--trace-path", p(&traces)]);
    assert_eq!(code(&o), 1);
    let o = verify(&["replay", "--trace", p(&traces.join("M6-directed-M6.trace"))]);
    assert_eq!(code(&o), 1);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("FAIL check_dti cycle=12 assertion=corrections[wb.x8]"), "{err}");
}

#[test]
fn malformed_traces_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let traces = dir.path().join("t");
    verify(&["fuzz", "--programs", "1", "--insns", "32", "--trace-path", p(&traces)]);
    let text = fs::read_to_string(traces.join("base-random-000000.trace")).unwrap();
    let cut = dir.path().join("cut.trace");
    fs::write(&cut, &text[..text.len() / 2]).unwrap();
    assert_eq!(code(&verify(&["replay", "--trace", p(&cut)])), 2);
    let bad = dir.path().join("bad.trace");
    fs::write(&bad, text.replacen("spec_en", "spec_xx", 1)).unwrap();
    assert_eq!(code(&verify(&["replay", "--trace", p(&bad)])), 2);
}

#[test]
fn report_lists_counts_and_the_detection_matrix() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("v");
    assert_eq!(code(&verify(&["fuzz", "--programs", "2", "--insns", "32", "--out", p(&out)])), 0);
    for m in ["M1", "M2", "M3", "M4", "M5", "M6"] {
        let o = verify(&["fuzz", "--mutation", m, "--programs", "0", "--no-minimize", "--out", p(&out)]);
        assert_eq!(code(&o), 1);
    }
    let o = verify(&["report", p(&out)]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    assert!(text.contains("runs value=44"), "{text}");
    for (i, m) in ["M1", "M2", "M3", "M4", "M5", "M6"].iter().enumerate() {
        let line = text.lines().find(|l| l.starts_with(&format!("matrix mutation={m} "))).unwrap();
        let cells: Vec<&str> = line.rsplit('=').next().unwrap().split(',').collect();
        assert_eq!(cells[i], "1", "{line}");
    }
    let fails: usize = text
        .lines()
        .filter(|l| l.starts_with("checker name="))
        .map(|l| l.rsplit("fail=").next().unwrap().parse::<usize>().unwrap())
        .sum();
    assert!(fails > 0);
}

#[test]
fn report_on_empty_and_missing_dirs() {
    let dir = tempfile::tempdir().unwrap();
    let o = verify(&["report", p(dir.path())]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("runs value=0"));
    assert_eq!(code(&verify(&["report", p(&dir.path().join("absent"))])), 2);
    fs::write(dir.path().join("junk.verdict"), "not a verdict\n").unwrap();
    assert_eq!(code(&verify(&["report", p(dir.path())])), 2);
}
