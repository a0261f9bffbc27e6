use std::path::Path;
use std::process::{Command, Output};

fn kforr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kforr"))
        .args(args)
        .env_remove("KFORR_THREADS")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn gen(dir: &Path, name: &str, extra: &[&str]) -> String {
    let path = dir.join(name);
    let p = path.to_str().unwrap().to_string();
    let mut args = vec!["gen", "--out", &p];
    args.extend_from_slice(extra);
    let o = kforr(&args);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    p
}

fn summary(out: &str) -> serde_json::Value {
    let last = out.lines().last().unwrap();
    serde_json::from_str::<serde_json::Value>(last).unwrap()["summary"].clone()
}

#[test]
fn gen_writes_header_and_records() {
    let dir = tempfile::tempdir().unwrap();
    let path = gen(
        dir.path(),
        "d.jsonl",
        &[
            "--n", "3", "--k", "3", "--pos", "5", "--neg", "5", "--seed", "7",
        ],
    );
    let text = std::fs::read_to_string(path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 11);
    assert!(lines[0].starts_with(r#"{"format":"kforr-dataset","version":1,"spec":{"n":3,"k":3,"#));
    for l in &lines[1..] {
        assert!(l.starts_with(r#"{"n":3,"k":3,"bits":""#), "{l}");
        let v: serde_json::Value = serde_json::from_str(l).unwrap();
        assert_eq!(v["bits"].as_str().unwrap().len(), 9);
    }
}

#[test]
fn gen_report_is_json() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("d.jsonl");
    let o = kforr(&[
        "gen",
        "--n",
        "4",
        "--k",
        "5",
        "--pos",
        "2",
        "--neg",
        "2",
        "--out",
        p.to_str().unwrap(),
    ]);
    let v: serde_json::Value = serde_json::from_str(stdout(&o).trim()).unwrap();
    let r = &v["report"];
    assert_eq!(
        r["accepted_pos"].as_u64().unwrap() + r["constructive_pos"].as_u64().unwrap(),
        2
    );
    assert!(r["tries"].as_u64().unwrap() >= 4);
}

#[test]
fn usage_errors_exit_64() {
    assert_eq!(
        kforr(&["gen", "--n", "3", "--k", "3"]).status.code(),
        Some(64)
    );
    assert_eq!(
        kforr(&["gen", "--n", "3", "--k", "4", "--out", "/tmp/never"])
            .status
            .code(),
        Some(64)
    );
    assert_eq!(
        kforr(&["gen", "--n", "2", "--k", "3", "--out", "/tmp/never"])
            .status
            .code(),
        Some(64)
    );
    assert_eq!(kforr(&["frobnicate"]).status.code(), Some(64));
    assert_eq!(kforr(&["verify", "--n", "x"]).status.code(), Some(64));
    assert_eq!(kforr(&["--help"]).status.code(), Some(0));
    assert_eq!(kforr(&["--version"]).status.code(), Some(0));
    let o = Command::new(env!("CARGO_BIN_EXE_kforr"))
        .args(["verify"])
        .env("KFORR_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(64));
}

#[test]
fn runtime_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.jsonl");
    assert_eq!(
        kforr(&["classify", "--input", missing.to_str().unwrap()])
            .status
            .code(),
        Some(2)
    );
    let bad = dir.path().join("bad.jsonl");
    std::fs::write(
        &bad,
        "{\"format\":\"kforr-dataset\",\"version\":1,\"spec\":null}\nnope\n",
    )
    .unwrap();
    let o = kforr(&["classify", "--input", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));
    // more constructive positives than triples exist for n = 3
    let out = dir.path().join("x.jsonl");
    let o = kforr(&[
        "gen",
        "--n",
        "3",
        "--k",
        "3",
        "--pos",
        "2",
        "--max-tries",
        "0",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn classify_vqc_exact_and_sampled() {
    let dir = tempfile::tempdir().unwrap();
    let path = gen(
        dir.path(),
        "d.jsonl",
        &[
            "--n", "4", "--k", "5", "--pos", "6", "--neg", "6", "--seed", "3",
        ],
    );
    let o = kforr(&["classify", "--input", &path]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert_eq!(out.lines().count(), 13);
    let s = summary(&out);
    assert_eq!(s["accuracy"], 1.0);
    assert!(s["shots"].is_null());

    let o = kforr(&[
        "classify", "--input", &path, "--shots", "100", "--seed", "5",
    ]);
    let s = summary(&stdout(&o));
    assert_eq!(s["shots"], 100);
    assert!(s["accuracy"].as_f64().unwrap() <= 1.0);
    assert_eq!(
        stdout(&o),
        stdout(&kforr(&[
            "classify", "--input", &path, "--shots", "100", "--seed", "5"
        ]))
    );

    let o = kforr(&["classify", "--input", &path, "--bias", "-2"]);
    assert_eq!(o.status.code(), Some(64));
}

#[test]
fn classify_qsvm_on_constructive_data() {
    let dir = tempfile::tempdir().unwrap();
    let path = gen(
        dir.path(),
        "c.jsonl",
        &[
            "--n",
            "4",
            "--k",
            "3",
            "--pos",
            "4",
            "--neg",
            "4",
            "--max-tries",
            "0",
        ],
    );
    let o = kforr(&["classify", "--input", &path, "--mode", "qsvm"]);
    assert_eq!(o.status.code(), Some(0));
    let s = summary(&stdout(&o));
    assert_eq!(s["mode"], "qsvm");
    assert_eq!(s["alpha"], 1.0);
    assert_eq!(s["accuracy"], 1.0);
}

#[test]
fn classify_empty_dataset() {
    let dir = tempfile::tempdir().unwrap();
    let path = gen(dir.path(), "e.jsonl", &["--n", "3", "--k", "3"]);
    let s = summary(&stdout(&kforr(&["classify", "--input", &path])));
    assert_eq!(s["samples"], 0);
    assert!(s["accuracy"].is_null());
}

#[test]
fn verify_passes_and_fault_fails() {
    let o = kforr(&["verify"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let out = stdout(&o);
    assert!(out.lines().filter(|l| l.starts_with("PASS")).count() >= 5);
    assert!(out.contains("oracle-equivalence"));

    let o = kforr(&["verify", "--n", "2", "--k", "3"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("instances=64 (exhaustive)"));

    let o = kforr(&["verify", "--inject-fault"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("FAIL oracle-equivalence"));
}

#[test]
fn bench_rows_parse() {
    let o = kforr(&["bench", "--n-min", "3", "--n-max", "6", "--repeats", "1"]);
    assert_eq!(o.status.code(), Some(0));
    let rows: Vec<serde_json::Value> = stdout(&o)
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(rows.len(), 4);
    assert_eq!(rows[0]["n"], 3);
    assert_eq!(rows[0]["ansatz_parameterized_gates"], 21);
    assert_eq!(rows[0]["direct_gates"], 7);
    assert!(rows
        .iter()
        .all(|r| r["phi_circuit_ms"].as_f64().unwrap() >= 0.0));
    assert_eq!(kforr(&["bench", "--n-min", "2"]).status.code(), Some(64));
}
