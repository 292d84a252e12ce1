use std::path::Path;
use std::process::{Command, Output};

use cpd_core::io::{encode_cpd3, parse_factors_json, write_cpd3};
use cpd_core::multilinear::{match_factors, synthesize};
use cpd_core::random::random_factors;

fn cpd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cpd"))
        .args(args)
        .env("CPD_THREADS", "1")
        .output()
        .expect("binary runs")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn decompose_recovers_square_instance() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("t.cpd3");
    let factors = dir.path().join("f.json");
    let truth = random_factors((3, 3, 4), 4, 11);
    write_cpd3(&input, &synthesize(&truth)).unwrap();

    let out = cpd(&[
        "decompose",
        path(&input),
        "--rank",
        "4",
        "--l",
        "auto",
        "--out",
        path(&factors),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    assert_eq!(v["status"], "ok");
    assert_eq!(v["l_used"], 0);
    assert!(v["residual"].as_f64().unwrap() <= 1e-8);

    let found = parse_factors_json(&std::fs::read_to_string(&factors).unwrap()).unwrap();
    assert!(match_factors(&found, &truth).unwrap().max_column_angle <= 1e-6);
}

#[test]
fn over_declared_rank_is_a_condition_violation() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("t.cpd3");
    write_cpd3(&input, &synthesize(&random_factors((3, 3, 4), 4, 12))).unwrap();
    let out = cpd(&["decompose", path(&input), "--rank", "5"]);
    assert_eq!(out.status.code(), Some(2));
    let v = json(&out);
    assert_eq!(v["status"], "condition-violation");
    let attempts = v["attempts"].as_array().unwrap();
    assert_eq!(attempts.len(), 4);
    assert!(attempts
        .iter()
        .all(|a| a["kernel_dim"].as_u64() >= a["expected_dim"].as_u64()));
}

#[test]
fn fixed_l_below_requirement_fails_with_condition() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("h.cpd3");
    let synth = cpd(&["synth", "--hankel", "--out", path(&input)]);
    assert_eq!(synth.status.code(), Some(0));
    assert_eq!(
        cpd(&["decompose", path(&input), "--rank", "12", "--l", "0"])
            .status
            .code(),
        Some(2)
    );
    let ok = cpd(&["decompose", path(&input), "--rank", "12", "--l", "1"]);
    assert_eq!(ok.status.code(), Some(0));
    assert_eq!(json(&ok)["l_used"], 1);
}

#[test]
fn truncated_file_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("bad.cpd3");
    let bytes = encode_cpd3(&synthesize(&random_factors((2, 2, 2), 2, 13))).unwrap();
    std::fs::write(&input, &bytes[..bytes.len() - 3]).unwrap();
    let out = cpd(&["decompose", path(&input), "--rank", "2"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!out.stderr.is_empty());
    let missing = cpd(&["decompose", path(&dir.path().join("none.cpd3")), "--rank", "2"]);
    assert_eq!(missing.status.code(), Some(1));
}

#[test]
fn certify_reports_verdicts() {
    let dir = tempfile::tempdir().unwrap();
    let kruskal = dir.path().join("k.json");
    let t = dir.path().join("t.cpd3");
    let s = cpd(&[
        "synth",
        "--dims",
        "3,3,4",
        "--rank",
        "4",
        "--seed",
        "3",
        "--out",
        path(&t),
        "--factors-out",
        path(&kruskal),
    ]);
    assert_eq!(s.status.code(), Some(0));
    let out = cpd(&["certify", path(&kruskal)]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["verdict"], "unique-by-kruskal");

    let beyond = dir.path().join("b.json");
    cpd(&[
        "synth",
        "--dims",
        "4,5,6",
        "--rank",
        "7",
        "--seed",
        "4",
        "--out",
        path(&t),
        "--factors-out",
        path(&beyond),
    ]);
    let v = json(&cpd(&["certify", path(&beyond)]));
    assert_eq!(v["kruskal_holds"], false);
    assert!(
        v["verdict"] == "unique-by-single-order" || v["verdict"] == "unique-by-all-orders",
        "{v}"
    );

    // two equal columns in C break every certificate that needs k_C >= 2
    let mut f = random_factors((3, 3, 4), 4, 5);
    let col = f.c.column(0).into_owned();
    f.c.set_column(1, &col);
    let dup = dir.path().join("d.json");
    std::fs::write(
        &dup,
        serde_json::to_string(&cpd_core::io::FactorTripleJson::from(f)).unwrap(),
    )
    .unwrap();
    let v = json(&cpd(&["certify", path(&dup)]));
    assert_eq!(v["kruskal_holds"], false);
    assert_eq!(v["k_c"], 1);
    assert_ne!(v["verdict"], "unique-by-kruskal");

    let junk = dir.path().join("j.json");
    std::fs::write(&junk, "{\"A\": 3}").unwrap();
    assert_eq!(cpd(&["certify", path(&junk)]).status.code(), Some(1));
}

#[test]
fn bench_custom_csv() {
    let out = cpd(&[
        "bench", "--suite", "custom", "--dims", "3,3,5", "--rank", "5", "--trials", "3",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "I,J,K,R,m,l,D,success_rate,mean_seconds,max_residual");
    let cells: Vec<&str> = lines[1].split(',').collect();
    assert_eq!(cells.len(), 10);
    assert_eq!(&cells[..4], &["3", "3", "5", "5"]);
    assert_eq!(cells[7], "0");
}

#[test]
fn bench_is_reproducible_and_matches_reference_l() {
    let args = [
        "bench", "--suite", "custom", "--dims", "3,7,12", "--rank", "12", "--trials", "2", "--seed", "9", "--format",
        "json",
    ];
    let a = json(&cpd(&args));
    let b = json(&cpd(&args));
    assert_eq!(a[0]["success_rate"], 1.0);
    assert_eq!(a[0]["l_used"], 1);
    assert_eq!(a[0]["d"], 364);
    assert_eq!(a[0]["max_residual"], b[0]["max_residual"]);
}

#[test]
fn bad_arguments_exit_nonzero() {
    assert_eq!(cpd(&["decompose"]).status.code(), Some(1));
    assert_eq!(cpd(&["--help"]).status.code(), Some(0));
    assert_eq!(cpd(&["bench", "--suite", "custom"]).status.code(), Some(1));
    assert_eq!(
        cpd(&["synth", "--dims", "3,x,4", "--rank", "2", "--out", "/dev/null"])
            .status
            .code(),
        Some(1)
    );
}
