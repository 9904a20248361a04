use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn exe() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_schatten-lab"));
    cmd.env("SCHATTEN_LAB_THREADS", "2");
    cmd
}

fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

fn read(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

fn build(dir: &Path, spec: &str, out: &str) -> Output {
    let spec = write(dir, &format!("{out}.spec.json"), spec);
    exe()
        .args(["build", "--spec"])
        .arg(&spec)
        .arg("--out")
        .arg(dir.join(out))
        .output()
        .unwrap()
}

fn verify(dir: &Path, space: &str, out: &str) -> Output {
    let cfg = write(dir, "cfg.json", r#"{"seed": 11, "samples": 40}"#);
    exe()
        .args(["verify", "--space"])
        .arg(dir.join(space))
        .arg("--config")
        .arg(cfg)
        .arg("--out")
        .arg(dir.join(out))
        .output()
        .unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn build_sym_three() {
    let dir = tempfile::tempdir().unwrap();
    let o = build(dir.path(), r#"{"kind": "Sym", "I": 3, "seed": 7}"#, "sym.json");
    assert!(o.status.success(), "{}", stderr(&o));
    let v = read(&dir.path().join("sym.json"));
    assert_eq!(v["space"]["basis"].as_array().unwrap().len(), 6);
    assert!(v["projection"].is_object());
}

#[test]
fn build_spin_odd_two() {
    let dir = tempfile::tempdir().unwrap();
    let o = build(dir.path(), r#"{"kind": "SpinOdd", "N": 2, "a_dim": 1}"#, "odd.json");
    assert!(o.status.success(), "{}", stderr(&o));
    let v = read(&dir.path().join("odd.json"));
    assert_eq!(v["space"]["basis"].as_array().unwrap().len(), 5);
    assert_eq!(v["space"]["shape"][0][0], 4);
    assert_eq!(v["space"]["shape"][0][1], 4);
}

#[test]
fn build_af_hilbert_is_refused() {
    let dir = tempfile::tempdir().unwrap();
    let o = build(dir.path(), r#"{"kind": "AFHilbert", "N": 3}"#, "af.json");
    assert!(!o.status.success());
    assert!(stderr(&o).contains("no positive contractive projection exists (type 4)"));
    assert!(!dir.path().join("af.json").exists());
}

#[test]
fn invalid_spec_names_invariant() {
    let dir = tempfile::tempdir().unwrap();
    let o = build(dir.path(), r#"{"kind": "Antisym", "I": 3}"#, "a.json");
    assert!(!o.status.success());
    assert!(stderr(&o).contains("|I| even"), "{}", stderr(&o));
    let skew = r#"{"kind": "Sym", "I": 2, "O": {"rows": 2, "cols": 2, "data": [[0,0],[1,0],[-1,0],[0,0]]}}"#;
    let o = build(dir.path(), skew, "b.json");
    assert!(!o.status.success());
    assert!(stderr(&o).contains("O must be symmetric"), "{}", stderr(&o));
}

#[test]
fn verify_green_then_corrupted() {
    let dir = tempfile::tempdir().unwrap();
    assert!(build(dir.path(), r#"{"kind": "Sym", "I": 3, "seed": 7}"#, "sym.json").status.success());
    let o = verify(dir.path(), "sym.json", "r.json");
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(read(&dir.path().join("r.json"))["passed"], true);

    let mut v = read(&dir.path().join("sym.json"));
    let entry = &mut v["projection"]["data"][0][0];
    *entry = Value::from(entry.as_f64().unwrap() + 0.25);
    std::fs::write(dir.path().join("bad.json"), v.to_string()).unwrap();
    let o = verify(dir.path(), "bad.json", "bad_report.json");
    assert_eq!(o.status.code(), Some(1));
    let r = read(&dir.path().join("bad_report.json"));
    assert_eq!(r["passed"], false);
    assert!(!r["failures"].as_array().unwrap().is_empty());
}

#[test]
fn verify_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    assert!(build(dir.path(), r#"{"kind": "Rect", "I": 2, "J": 3, "seed": 3}"#, "rect.json").status.success());
    assert!(verify(dir.path(), "rect.json", "r1.json").status.success());
    assert!(verify(dir.path(), "rect.json", "r2.json").status.success());
    let a = std::fs::read(dir.path().join("r1.json")).unwrap();
    let b = std::fs::read(dir.path().join("r2.json")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn suite_impossibility_ranks() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "cfg.json", r#"{"seed": 0, "max_N": 5}"#);
    let out = dir.path().join("imp.json");
    let o = exe().args(["suite", "impossibility", "--config"]).arg(&cfg).arg("--out").arg(&out).output().unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    let r = read(&out);
    let rank_of = |n: usize, m: u64| {
        let case = r["cases"].as_array().unwrap().iter().find(|c| c["id"] == format!("impossibility/type4/N{n}")).unwrap();
        let e = case["details"]["ranks"].as_array().unwrap().iter().find(|e| e["m"] == m).unwrap();
        (e["rank"].as_u64().unwrap(), e["slice_dim"].as_u64().unwrap())
    };
    assert_eq!(rank_of(3, 2), (2, 3));
    assert_eq!(rank_of(5, 3), (6, 10));
}

#[test]
fn suite_reports_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "cfg.json", r#"{"seed": 5, "samples": 20}"#);
    let mut bodies = Vec::new();
    for (k, threads) in ["1", "3"].iter().enumerate() {
        let out = dir.path().join(format!("d{k}.json"));
        let o = exe()
            .env("SCHATTEN_LAB_THREADS", threads)
            .args(["suite", "duality", "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(&out)
            .output()
            .unwrap();
        assert!(o.status.success(), "{}", stderr(&o));
        bodies.push(std::fs::read(out).unwrap());
    }
    assert_eq!(bodies[0], bodies[1]);
}

#[test]
fn unknown_suite_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let o = exe().args(["suite", "nonsense", "--out"]).arg(dir.path().join("x.json")).output().unwrap();
    assert!(!o.status.success());
}
