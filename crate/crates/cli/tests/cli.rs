//! The `sinflow` binary: exit codes, file layout and failure reporting.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn sinflow(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sinflow")).arg("--out").arg(out).args(args).output().expect("run sinflow")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn tiny(out: &Path) -> String {
    let o = sinflow(
        out,
        &[
            "gen",
            "--sats",
            "3",
            "--flows",
            "2",
            "--functions",
            "2",
            "--sfc-len",
            "1",
            "--slots",
            "2",
            "--seed",
            "4",
            "--name",
            "tiny",
        ],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    out.join("tiny.json").to_string_lossy().into_owned()
}

#[test]
fn gen_is_deterministic_and_honours_the_env_dir() {
    let d = tempfile::tempdir().unwrap();
    let a = sinflow(&d.path().join("a"), &["gen", "--paper-shape", "--seed", "3"]);
    assert_eq!(code(&a), 0);
    let o = Command::new(env!("CARGO_BIN_EXE_sinflow"))
        .env("SINFLOW_OUT_DIR", d.path().join("b"))
        .args(["gen", "--paper-shape", "--seed", "3"])
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    let x = fs::read(d.path().join("a/paper-shape-s3.json")).unwrap();
    let y = fs::read(d.path().join("b/paper-shape-s3.json")).unwrap();
    assert_eq!(x, y);
    assert!(d.path().join("b/paper-shape-s3.gen.manifest.json").exists());
}

#[test]
fn solve_writes_every_output_and_exits_zero() {
    let d = tempfile::tempdir().unwrap();
    let sc = tiny(d.path());
    let o = sinflow(d.path(), &["solve", &sc, "--algo", "classical-bd", "--name", "bd"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["bd.report.json", "bd.log.tsv", "bd.iterations.csv", "bd.cuts.json", "bd.convergence.svg", "bd.solve.manifest.json"]
    {
        assert!(d.path().join(f).exists(), "missing {f}");
    }
    let log = fs::read_to_string(d.path().join("bd.log.tsv")).unwrap();
    assert!(log.starts_with("# manifest: bd.solve.manifest.json"));
}

#[test]
fn iteration_budget_exits_two() {
    let d = tempfile::tempdir().unwrap();
    let sc = tiny(d.path());
    let o = sinflow(d.path(), &["solve", &sc, "--max-iter", "1", "--reads", "20", "--sweeps", "100"]);
    assert_eq!(code(&o), 2, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn errors_exit_one_with_a_message() {
    let d = tempfile::tempdir().unwrap();
    let o = sinflow(d.path(), &["solve", "no-such-file.json"]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("no-such-file.json"));

    let sc = tiny(d.path());
    let o = sinflow(d.path(), &["sweep", &sc, "--axis", "storage", "--from", "5", "--to", "1"]);
    assert_eq!(code(&o), 1);
    let o = sinflow(d.path(), &["sweep", &sc, "--axis", "flows", "--from", "7"]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("flow count"));
}

#[test]
fn sweep_writes_one_row_per_point_and_scheme() {
    let d = tempfile::tempdir().unwrap();
    let sc = tiny(d.path());
    let o = sinflow(
        d.path(),
        &[
            "sweep",
            &sc,
            "--axis",
            "compute",
            "--from",
            "0.001",
            "--to",
            "0.003",
            "--step",
            "0.001",
            "--algo",
            "classical-bd",
            "--jobs",
            "3",
            "--name",
            "sw",
        ],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(d.path().join("sw.csv")).unwrap();
    assert_eq!(csv.lines().filter(|l| l.starts_with("compute,")).count(), 12);
    assert_eq!(fs::read_dir(d.path().join("sw.points")).unwrap().count(), 3);
}

#[test]
fn check_names_a_corrupted_cut() {
    let d = tempfile::tempdir().unwrap();
    let sc = tiny(d.path());
    let o = sinflow(d.path(), &["check", &sc, "--name", "good"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));

    assert_eq!(code(&sinflow(d.path(), &["solve", &sc, "--algo", "classical-bd", "--name", "bd"])), 0);
    let path = d.path().join("bd.cuts.json");
    let mut cuts: serde_json::Value = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
    let alpha = cuts["optimality"][0]["alpha"].as_f64().unwrap();
    cuts["optimality"][0]["alpha"] = (alpha + 1.0).into();
    fs::write(&path, serde_json::to_string(&cuts).unwrap()).unwrap();
    let o = sinflow(d.path(), &["check", &sc, "--cuts", path.to_str().unwrap(), "--name", "bad"]);
    assert_eq!(code(&o), 1);
    let tsv = fs::read_to_string(d.path().join("bad.check.tsv")).unwrap();
    assert!(tsv.lines().any(|l| l.starts_with("FAIL\tcut-validity") && l.contains("optimality cut 1")), "{tsv}");
}

#[test]
fn replay_refuses_a_changed_scenario() {
    let d = tempfile::tempdir().unwrap();
    let sc = tiny(d.path());
    assert_eq!(code(&sinflow(d.path(), &["solve", &sc, "--algo", "monolithic", "--name", "m"])), 0);
    let manifest = d.path().join("m.solve.manifest.json");
    let o = sinflow(&d.path().join("again"), &["replay", manifest.to_str().unwrap(), "--verify"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));

    let mut text = fs::read_to_string(&sc).unwrap();
    text.push('\n');
    fs::write(&sc, text).unwrap();
    let o = sinflow(&d.path().join("again"), &["replay", manifest.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("changed since the recorded run"));
}
