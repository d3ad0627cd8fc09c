use std::path::Path;
use std::process::{Command, Output};

fn vorpoly(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vorpoly")).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

const T1MIN: &str = r#"{"version":1,"experiment":"t1-min","r":[1,2,3],"s":[3,6],"replicates":100,"seed":4}"#;

#[test]
fn unknown_subcommand_is_a_usage_error() {
    assert_eq!(vorpoly(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(vorpoly(&["verify", "no-such-suite"]).status.code(), Some(2));
    assert_eq!(vorpoly(&["tail"]).status.code(), Some(2));
}

#[test]
fn tail_writes_the_documented_columns() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "t1min.json", T1MIN);
    let out = vorpoly(&["tail", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "experiment,d,lambda,L,n,delta,r,s,p,hits,n_rep,p_hat,ci_lo,ci_hi,bound,pass,censored"
    );
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 6);
    assert!(rows.iter().all(|r| r.starts_with("t1-min,2,1,")));
}

#[test]
fn tail_is_byte_identical_across_runs_and_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "t1min.json", T1MIN);
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    assert!(vorpoly(&["tail", "--config", &cfg, "--out", a.to_str().unwrap()]).status.success());
    let out = Command::new(env!("CARGO_BIN_EXE_vorpoly"))
        .env("VORPOLY_THREADS", "3")
        .args(["tail", "--config", &cfg, "--out", b.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(out.status.success());
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn invalid_config_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let few = write_config(dir.path(), "few.json", r#"{"version":1,"experiment":"t1-min","r":[1],"s":[1],"replicates":5}"#);
    assert_eq!(vorpoly(&["tail", "--config", &few]).status.code(), Some(2));
    let unknown = write_config(dir.path(), "bad.json", r#"{"version":1,"experiment":"t1-min","r":[1],"s":[1],"replicates":100,"x":1}"#);
    assert_eq!(vorpoly(&["tail", "--config", &unknown]).status.code(), Some(2));
    let version = write_config(dir.path(), "v.json", r#"{"version":9,"experiment":"t1-min","r":[1],"s":[1],"replicates":100}"#);
    assert_eq!(vorpoly(&["tail", "--config", &version]).status.code(), Some(2));
}

#[test]
fn replicates_flag_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "t1min.json", T1MIN);
    let out = vorpoly(&["tail", "--config", &cfg, "--replicates", "150", "--jsonl"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let first: serde_json::Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
    assert_eq!(first["replicates"], 150);
}

#[test]
fn fit_reads_tail_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "t1min.json",
        r#"{"version":1,"experiment":"t1-min","r":[2,3,4,5,6],"s":[7],"replicates":200,"seed":2}"#,
    );
    let csv = dir.path().join("t.csv");
    assert!(vorpoly(&["tail", "--config", &cfg, "--out", csv.to_str().unwrap()]).status.success());
    let out = vorpoly(&["fit", csv.to_str().unwrap()]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let row = text.lines().nth(1).unwrap();
    let slope: f64 = row.split(',').nth(2).unwrap().parse().unwrap();
    assert!(slope < 0.0, "{text}");
}

#[test]
fn sample_and_svg_write_files() {
    let dir = tempfile::tempdir().unwrap();
    let svg = dir.path().join("t.svg");
    let out = vorpoly(&["sample", "--lambda", "2", "--half", "3", "--seed", "9", "--svg", svg.to_str().unwrap()]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("# d=2 seed=9 replicate=0"));
    assert!(text.lines().count() > 20);
    assert!(std::fs::read_to_string(&svg).unwrap().starts_with("<svg"));

    let out = vorpoly(&["svg", "--r", "4", "--seed", "1"]);
    assert!(out.status.success());
    assert!(String::from_utf8(out.stdout).unwrap().contains("#b0b0b0"));

    let out = vorpoly(&["sample", "--n", "8", "--delta", "0.5", "--half", "3"]);
    assert!(out.status.success());
}

#[test]
fn verify_confinement_passes() {
    let out = vorpoly(&["verify", "confinement", "--replicates", "1000"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(out.status.code(), Some(0), "{text}");
    assert_eq!(text.lines().filter(|l| l.starts_with("[PASS]")).count(), 4);
}
