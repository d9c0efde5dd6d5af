// SPDX-License-Identifier: Apache-2.0

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn sdmor(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sdmor"))
        .args(args)
        .env_remove("SDMOR_THREADS")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn write(dir: &Path, name: &str, contents: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, contents).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn generated_plant(dir: &Path, args: &[&str]) -> PathBuf {
    let path = dir.join("plant.json");
    let mut all = vec!["generate", "-o", s(&path)];
    all.extend_from_slice(args);
    let out = sdmor(&all);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    path
}

#[test]
fn generate_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = sdmor(&["generate", "--n", "5", "--m", "2", "--seed", "9"]);
    let b = sdmor(&["generate", "--n", "5", "--m", "2", "--seed", "9"]);
    let c = sdmor(&["generate", "--n", "5", "--m", "2", "--seed", "10"]);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
    assert_ne!(a.stdout, c.stdout);
    let path = write(dir.path(), "g.json", &String::from_utf8(a.stdout).unwrap());
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    assert_eq!(v["kind"], "lti");
    assert_eq!(v["A"].as_array().unwrap().len(), 5);
    assert_eq!(v["B"][0].as_array().unwrap().len(), 2);
}

#[test]
fn discretize_writes_switched_model() {
    let dir = tempfile::tempdir().unwrap();
    let plant = generated_plant(dir.path(), &["--n", "4", "--grid", "0.5,0.2"]);
    let out_path = dir.path().join("ls.json");
    let out = sdmor(&["discretize", s(&plant), "-o", s(&out_path)]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(stderr(&out).contains("identity residual"));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out_path).unwrap()).unwrap();
    assert_eq!(v["kind"], "ls");
    assert_eq!(v["A_i"].as_array().unwrap().len(), 2);
    assert_eq!(v["H"], serde_json::json!([0.2, 0.5]));
}

#[test]
fn malformed_json_exits_2_with_position() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.json", "{\"kind\": \"lti\",\n  \"A\": [[1, 2],, ]}");
    let out = sdmor(&["discretize", s(&bad), "--grid", "1"]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("line 2"), "{}", stderr(&out));
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(code(&sdmor(&["reduce"])), 2);
    assert_eq!(code(&sdmor(&["frobnicate"])), 2);
}

#[test]
fn invalid_systems_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let shape = write(
        dir.path(),
        "shape.json",
        r#"{"kind": "lti", "A": [[-1, 0], [0, -2]], "B": [[1]], "C": [[1, 0]]}"#,
    );
    let out = sdmor(&["discretize", s(&shape), "--grid", "1"]);
    assert_eq!(code(&out), 3);
    assert!(stderr(&out).contains("dimension"), "{}", stderr(&out));

    let ok = write(dir.path(), "ok.json", r#"{"kind": "lti", "A": [[-1]], "B": [[1]], "C": [[1]]}"#);
    let dup = sdmor(&["discretize", s(&ok), "--grid", "1,1"]);
    assert_eq!(code(&dup), 3);
    assert!(stderr(&dup).contains("duplicate"), "{}", stderr(&dup));
    assert_eq!(code(&sdmor(&["discretize", s(&ok), "--grid", "1,-2"])), 3);
    assert_eq!(code(&sdmor(&["discretize", s(&ok), "--grid", "1,x"])), 2);
    assert_eq!(code(&sdmor(&["discretize", s(&ok)])), 3);
}

#[test]
fn infeasible_order_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let plant = generated_plant(dir.path(), &["--n", "6", "--m", "2", "--grid", "0.1,0.2,0.3"]);
    for order in ["0", "5"] {
        let out = sdmor(&["reduce", s(&plant), "--order", order]);
        assert_eq!(code(&out), 4, "order {order}: {}", stderr(&out));
    }
}

#[test]
fn reduce_then_certify() {
    let dir = tempfile::tempdir().unwrap();
    let plant = generated_plant(dir.path(), &["--n", "12", "--grid", "0.1,0.15,0.2,0.3"]);
    let reduced = dir.path().join("red.json");
    let report = dir.path().join("report.json");
    let out = sdmor(&[
        "reduce",
        s(&plant),
        "--approach",
        "2",
        "--order",
        "4",
        "-o",
        s(&reduced),
        "--report",
        s(&report),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let rep: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(rep["r"], 4);
    assert_eq!(rep["horizon"], 0);
    assert_eq!(rep["left_inverse_kind"], "lyapunov_weighted");
    assert!(rep["certificate"].is_object());
    assert!(rep.get("timings").is_none());

    let p_file = dir.path().join("p.json");
    let p = serde_json::json!({ "P": rep["certificate"]["p"] });
    std::fs::write(&p_file, p.to_string()).unwrap();
    let out = sdmor(&["certify", s(&reduced), "--p", s(&p_file)]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let verdict: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(verdict["verdict"], "certified");

    let out = sdmor(&["certify", s(&plant)]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));

    let timed = dir.path().join("timed.json");
    let out = sdmor(&["reduce", s(&plant), "--moments", "0", "--report", s(&timed), "--timings", "-o", s(&reduced)]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let rep: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&timed).unwrap()).unwrap();
    assert!(rep["timings"].is_array());
}

#[test]
fn refuted_certificate_exits_5() {
    let dir = tempfile::tempdir().unwrap();
    let ls = write(
        dir.path(),
        "ls.json",
        r#"{"kind": "ls", "A_i": [[[0.5, 0], [0, 0.5]], [[0, 2], [0, 0]]], "B_i": [[[1], [0]], [[0], [1]]], "C": [[1, 0]]}"#,
    );
    let p = write(dir.path(), "p.json", r#"{"P": [[1, 0], [0, 1]]}"#);
    let out = sdmor(&["certify", s(&ls), "--p", s(&p)]);
    assert_eq!(code(&out), 5, "{}", stderr(&out));
    assert!(stderr(&out).contains("margins"));
    let verdict: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(verdict["verdict"], "refuted");
}

#[test]
fn unstable_plant_exits_6() {
    let dir = tempfile::tempdir().unwrap();
    let plant = generated_plant(dir.path(), &["--n", "5", "--unstable", "1", "--grid", "0.1,0.2"]);
    let out = sdmor(&["certify", s(&plant)]);
    assert_eq!(code(&out), 6, "{}", stderr(&out));
    assert!(stderr(&out).contains("spectral abscissa"));
    let out = sdmor(&["reduce", s(&plant), "--moments", "0", "--stable-inverse"]);
    assert_eq!(code(&out), 6, "{}", stderr(&out));
    let out = sdmor(&["reduce", s(&plant), "--moments", "0"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(stderr(&out).contains("no certificate"));
}

#[test]
fn approach_one_writes_reduced_plant() {
    let dir = tempfile::tempdir().unwrap();
    let plant = generated_plant(dir.path(), &["--n", "8", "--grid", "0.2,0.4"]);
    let rp = dir.path().join("rp.json");
    let out = sdmor(&["reduce", s(&plant), "--approach", "1", "--moments", "2", "--reduced-plant", s(&rp)]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&rp).unwrap()).unwrap();
    assert_eq!(v["kind"], "lti");
    assert_eq!(v["A"].as_array().unwrap().len(), 3);
    let out = sdmor(&["reduce", s(&plant), "--approach", "2", "--moments", "2", "--reduced-plant", s(&rp)]);
    assert_eq!(code(&out), 3);
}

fn read_dir_sorted(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().into_string().unwrap(), std::fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    files
}

#[test]
fn campaign_outputs_are_byte_identical_across_runs_and_threads() {
    let dir = tempfile::tempdir().unwrap();
    let plant = generated_plant(dir.path(), &["--n", "10", "--seed", "3", "--grid", "0.1,0.15,0.2,0.3"]);
    let run = |name: &str, threads: &str| {
        let out_dir = dir.path().join(name);
        let out = sdmor(&[
            "campaign",
            s(&plant),
            "--order",
            "4",
            "--count",
            "24",
            "--seed",
            "5",
            "--horizon",
            "2",
            "--threads",
            threads,
            "--out-dir",
            s(&out_dir),
        ]);
        assert_eq!(code(&out), 0, "{}", stderr(&out));
        (String::from_utf8(out.stdout).unwrap(), read_dir_sorted(&out_dir))
    };
    let (table_a, files_a) = run("a", "1");
    let (table_b, files_b) = run("b", "1");
    let (table_c, files_c) = run("c", "4");
    let names: Vec<_> = files_a.iter().map(|(n, _)| n.as_str()).collect();
    for expected in ["summary.json", "summary.txt", "trace_approach1.csv", "trace_approach2.csv", "figure.gp"] {
        assert!(names.contains(&expected), "{names:?}");
    }
    assert_eq!(files_a, files_b);
    assert_eq!(files_a, files_c);
    assert_eq!(table_a, table_b);
    assert_eq!(table_a, table_c);
    let summary: serde_json::Value =
        serde_json::from_slice(&files_a.iter().find(|(n, _)| n == "summary.json").unwrap().1).unwrap();
    assert_eq!(summary["horizon_guarantee"]["passed"], true);
}

#[test]
fn threads_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let plant = generated_plant(dir.path(), &["--n", "6", "--grid", "0.1,0.2"]);
    let out = Command::new(env!("CARGO_BIN_EXE_sdmor"))
        .args(["campaign", s(&plant), "--moments", "0", "--count", "4", "--horizon", "1", "--out-dir"])
        .arg(dir.path().join("o"))
        .env("SDMOR_THREADS", "0")
        .output()
        .unwrap();
    assert_eq!(code(&out), 3, "{}", stderr(&out));
}
