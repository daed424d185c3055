use std::path::PathBuf;
use std::process::{Command, Output};

fn voxcalc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_voxcalc"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn corpus(file: &str) -> String {
    let p: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "..", "identities", file]
        .iter()
        .collect();
    p.display().to_string()
}

#[test]
fn zhu_heisenberg_cutoff_three() {
    let o = voxcalc(&["zhu", "--backend", "heisenberg", "--cutoff", "3"]);
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    assert!(s.contains("dimension 4"), "{s}");
    assert!(s.contains("pass  generated by [a(-1)1]"), "{s}");
    assert!(s.contains("slack 2: support 5"), "{s}");
}

#[test]
fn zhu_cutoff_zero() {
    let o = voxcalc(&["zhu", "--cutoff", "0"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("dimension 1"));
}

#[cfg(feature = "virasoro")]
#[test]
fn zhu_virasoro() {
    let o = voxcalc(&["zhu", "--backend", "virasoro:c=1/2", "--cutoff", "2"]);
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    assert!(s.contains("dimension 2"));
    assert!(s.contains("  [L(-2)1]  weight 2\n  [1]  weight 0\n"), "{s}");
    // ω*ω = ω_{-1}ω + 2 ω_0 ω + ω_1 ω
    assert!(
        s.contains("[L(-2)1] * [L(-2)1] = [(2)*L(-2)1 + (2)*L(-3)1 + (1)*L(-2)L(-2)1]"),
        "{s}"
    );
}

#[test]
fn unknown_backend_is_an_error() {
    let o = voxcalc(&["zhu", "--backend", "lattice"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn check_on_empty_directory() {
    let dir = tempfile::tempdir().unwrap();
    let o = voxcalc(&["check", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    assert!(s.contains("identities (0)"));
    assert!(s.contains("result: 0/0 pass, exit 0"));
}

#[test]
fn check_full_corpus() {
    let dir = corpus("");
    let o = voxcalc(&[
        "check",
        "--backend",
        "heisenberg",
        "--weight",
        "3",
        "--degree",
        "2",
        &dir,
    ]);
    let s = stdout(&o);
    assert_eq!(o.status.code(), Some(0), "{s}");
    assert!(s.contains("identities (12)"));
    assert!(s.contains("result: 36/36 pass, exit 0"), "{s}");
}

#[test]
fn mutation_fails_with_witness() {
    let file = corpus("associativity_components.vid");
    let o = voxcalc(&["check", "--mutate", "1", "--lambda", "0", &file]);
    let s = stdout(&o);
    assert_eq!(o.status.code(), Some(1), "{s}");
    assert!(s.contains("mutation 1 on fock(lambda=0)"));
    assert!(s.contains("witness #"), "{s}");
    assert!(s.contains("FAIL  associativity_components"), "{s}");
}

#[test]
fn parse_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("bad.vid");
    std::fs::write(&f, "forall u in V\nY[W](z, x) * w == 0\n").unwrap();
    let o = voxcalc(&["check", f.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).contains("ERROR parse"));
}

#[test]
fn reports_are_byte_identical() {
    let file = corpus("product_vanishing.vid");
    let args = [
        "check",
        "--format",
        "json",
        "--sample",
        "20",
        "--seed",
        "7",
        "--lambda",
        "1",
        file.as_str(),
    ];
    let (a, b) = (voxcalc(&args), voxcalc(&args));
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let doc: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(doc["exit_code"], 0);
    assert_eq!(doc["config"]["sample"], "20");
    let checks = &doc["sections"][1]["data"][0];
    assert_eq!(checks["samples"], 20);
    assert_eq!(checks["exhaustive"], false);
}

#[test]
fn out_flag_writes_the_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.txt");
    let o = voxcalc(&["zhu", "--cutoff", "2", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    assert!(std::fs::read_to_string(out)
        .unwrap()
        .contains("dimension 3"));
}

#[test]
fn build_zero_module() {
    let o = voxcalc(&["build-module", "--module", "zero"]);
    let s = stdout(&o);
    assert_eq!(o.status.code(), Some(0), "{s}");
    for d in 0..=5 {
        assert!(s.contains(&format!("degree {d}: 0\n")), "{s}");
    }
}

#[test]
fn build_jordan_block() {
    let o = voxcalc(&["build-module", "--module", "jordan2:λ=0", "--degree", "3"]);
    let s = stdout(&o);
    assert_eq!(o.status.code(), Some(0), "{s}");
    assert!(
        s.contains("degree 0: 2\n  degree 1: 2\n  degree 2: 4\n  degree 3: 6\n"),
        "{s}"
    );
    assert!(s.contains("pass  T(S(M)) = M"), "{s}");
}

#[test]
fn build_from_json_file() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("m.json");
    std::fs::write(
        &f,
        r#"{"dimension": 1, "generators": {"a(-1)1": [["-1/2"]]}}"#,
    )
    .unwrap();
    let spec = format!("file:{}", f.display());
    let o = voxcalc(&[
        "build-module",
        "--module",
        &spec,
        "--degree",
        "3",
        "--format",
        "json",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let doc: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let dims = doc["sections"]
        .as_array()
        .unwrap()
        .iter()
        .find(|s| s["title"].as_str().unwrap().starts_with("dimensions"))
        .unwrap();
    assert_eq!(dims["data"], serde_json::json!([1, 1, 2, 3]));
}

#[test]
fn build_scalar_module() {
    let o = voxcalc(&[
        "build-module",
        "--backend",
        "heisenberg",
        "--module",
        "scalar:λ=2",
        "--degree",
        "5",
    ]);
    let s = stdout(&o);
    assert_eq!(o.status.code(), Some(0), "{s}");
    assert!(s.contains("induced map ranks\n  1,1,2,3,5,7\n"), "{s}");
    assert!(!s.contains("FAIL") && !s.contains("ERROR"), "{s}");
}
