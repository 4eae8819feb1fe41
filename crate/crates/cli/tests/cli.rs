//! End-to-end runs of the `speedscale` binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use speedscale::io::ResultFile;

const WORKED_EXAMPLE: &str = r#"{
  "alpha": 3,
  "machines": 2,
  "jobs": [
    {"r": 0, "d": 2, "w": 1, "p": [1, 2]},
    {"r": 1, "d": 3, "w": 1, "p": [3, 5]},
    {"r": 0, "d": 5, "w": 1, "p": [4, 3]},
    {"r": 1, "d": 3, "w": 1, "p": [2, 1]}
  ]
}"#;

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_speedscale"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn text(bytes: &[u8]) -> String {
    String::from_utf8_lossy(bytes).into_owned()
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn pd_energy_on_worked_example() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "worked.json", WORKED_EXAMPLE);
    let out = dir.path().join("result.json");
    let run = bin(&["pd-energy", "--demand", "3", &input, "--out", out.to_str().unwrap()]);
    assert_eq!(run.status.code(), Some(0), "{}", text(&run.stderr));
    let result = ResultFile::parse(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(result.energy, "281/100");
    let mut selected = result.certificate.as_ref().unwrap().order.clone();
    selected.sort();
    assert_eq!(selected, vec![1, 3, 4]);

    let verify = bin(&["verify", out.to_str().unwrap()]);
    assert_eq!(verify.status.code(), Some(0), "{}", text(&verify.stderr));

    // tampering with the stored energy is caught
    let tampered = fs::read_to_string(&out).unwrap().replace("281/100", "280/100");
    let bad = write(dir.path(), "bad.json", &tampered);
    assert_eq!(bin(&["verify", &bad]).status.code(), Some(4));
}

#[test]
fn csv_rows_are_exact() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "worked.json", WORKED_EXAMPLE);
    let run = bin(&["pd-energy", "--demand", "3", "--csv", &input]);
    assert_eq!(run.status.code(), Some(0));
    let stdout = text(&run.stdout);
    let mut lines = stdout.lines();
    assert_eq!(
        lines.next().unwrap(),
        "instance,solver,n,m,alpha,demand_or_budget,throughput,energy,iterations,ms"
    );
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(&row[1..8], &["pd-energy", "4", "2", "3", "3", "3", "281/100"]);
}

#[test]
fn knapsack_generation_and_exact_solvers() {
    let dir = tempfile::tempdir().unwrap();
    let gen = bin(&["gen", "knapsack", "--items", "1:1,2:2", "--capacity", "2"]);
    assert_eq!(gen.status.code(), Some(0));
    let file = speedscale::io::InstanceFile::parse(&text(&gen.stdout)).unwrap();
    assert_eq!(file.jobs.len(), 2);
    let input = write(dir.path(), "knap.json", &text(&gen.stdout));
    for solver in ["dp-equal", "dp-agreeable"] {
        let out = dir.path().join(format!("{solver}.json"));
        let run = bin(&[solver, &input, "--budget", "9/8", "--out", out.to_str().unwrap()]);
        assert_eq!(run.status.code(), Some(0), "{}", text(&run.stderr));
        let result = ResultFile::parse(&fs::read_to_string(&out).unwrap()).unwrap();
        assert_eq!(result.throughput, 2);
        assert_eq!(bin(&["verify", out.to_str().unwrap()]).status.code(), Some(0));
    }
    let oracle = bin(&["oracle", &input, "--budget", "5/4", "--csv"]);
    assert_eq!(oracle.status.code(), Some(0));
    assert!(text(&oracle.stdout).contains(",3,"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "worked.json", WORKED_EXAMPLE);
    // demand above the total weight
    assert_eq!(bin(&["pd-energy", "--demand", "9", &input]).status.code(), Some(1));
    // nothing fits in a zero budget
    assert_eq!(bin(&["pd-throughput", "--budget", "0", &input]).status.code(), Some(1));
    // malformed input, wrong solver, unknown subcommand, missing demand
    let broken = write(dir.path(), "broken.json", "{\"alpha\": 3,");
    assert_eq!(bin(&["pd-energy", "--demand", "1", &broken]).status.code(), Some(2));
    assert_eq!(bin(&["dp-equal", "--budget", "1", &input]).status.code(), Some(2));
    assert_eq!(bin(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(bin(&["pd-energy", &input]).status.code(), Some(2));
    // too many jobs for exhaustive search
    let big = bin(&["gen", "equal-volume", "--jobs", "12"]);
    let big = write(dir.path(), "big.json", &text(&big.stdout));
    assert_eq!(bin(&["oracle", "--budget", "1", &big]).status.code(), Some(3));
}

#[test]
fn batch_directory_runs_every_instance() {
    let dir = tempfile::tempdir().unwrap();
    let inputs = dir.path().join("inputs");
    fs::create_dir(&inputs).unwrap();
    for seed in 0..4 {
        let run = bin(&["gen", "agreeable", "--seed", &seed.to_string(), "--jobs", "4"]);
        write(&inputs, &format!("a{seed}.json"), &text(&run.stdout));
    }
    let results = dir.path().join("results");
    let run = bin(&[
        "dp-agreeable",
        "--budget",
        "2",
        "--csv",
        inputs.to_str().unwrap(),
        "--out",
        results.to_str().unwrap(),
    ]);
    assert_eq!(run.status.code(), Some(0), "{}", text(&run.stderr));
    assert_eq!(text(&run.stdout).lines().count(), 5);
    for seed in 0..4 {
        let path = results.join(format!("a{seed}.result.json"));
        assert_eq!(bin(&["verify", path.to_str().unwrap()]).status.code(), Some(0));
    }
}

#[test]
fn float_mode_accepts_real_alpha() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(
        dir.path(),
        "real.json",
        &WORKED_EXAMPLE.replace("\"alpha\": 3", "\"alpha\": 2.5"),
    );
    assert_eq!(bin(&["pd-energy", "--demand", "2", &input]).status.code(), Some(2));
    let out = dir.path().join("r.json");
    let run = bin(&[
        "pd-energy",
        "--demand",
        "2",
        "--float",
        &input,
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(run.status.code(), Some(0), "{}", text(&run.stderr));
    assert_eq!(bin(&["verify", out.to_str().unwrap()]).status.code(), Some(0));
}
