use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ncdomain::io::parse_json;
use ncdomain::FreePolynomial;
use serde_json::Value;

fn instance(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("instances").join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ncdomain")).args(args).output().expect("binary runs")
}

fn run_with(args: &[&str], env: (&str, &str)) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ncdomain")).args(args).env(env.0, env.1).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn report(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).expect("report is JSON")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write(dir: &tempfile::TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn coeffs_reproduces_binomials() {
    let o = run(&["coeffs", "--f", s(&instance("single.json")), "--m", "3", "--N", "8"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(&o);
    let b: Vec<f64> = r["results"]["rows"].as_array().unwrap().iter().map(|x| x["b"].as_f64().unwrap()).collect();
    let want: Vec<f64> = (0..=8u32).map(|k| ((k + 2) * (k + 1) / 2) as f64).collect();
    assert_eq!(b, want);
    assert_eq!(r["command"], "coeffs");
    assert_eq!(r["passed"], true);
    assert!(r["version"].is_string());
}

#[test]
fn verify_single_case_reports_universal_model() {
    let o = run(&["verify", "--f", s(&instance("drury.json")), "--m", "1", "--N", "6"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(&o);
    let names: Vec<&str> = r["assertions"].as_array().unwrap().iter().map(|a| a["name"].as_str().unwrap()).collect();
    assert!(names.contains(&"universal_model.defect_is_vacuum_projection"));
    assert!(names.contains(&"universal_model.resolution_of_identity"));
    assert!(r["results"]["universal_model"]["resolution_of_identity"].as_f64().unwrap() <= 1e-12);
}

#[test]
fn bundled_suite_passes() {
    let o = run(&["verify"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(&o);
    assert_eq!(r["results"]["cases"].as_array().unwrap().len(), 8);
}

#[test]
fn malformed_json_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(&dir, "bad.json", "{\"n\": 1, \"terms\": [");
    let o = run(&["coeffs", "--f", s(&bad), "--m", "1", "--N", "3"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("bad.json"));
}

#[test]
fn ragged_tuple_names_the_matrix() {
    let dir = tempfile::tempdir().unwrap();
    let t = write(
        &dir,
        "t.json",
        r#"{"matrices": [[[[0.1, 0], [0, 0]], [[0, 0], [0, 0]]], [[[0, 0], [0, 0]], [[0, 0]]]]}"#,
    );
    let o = run(&["check-domain", "--f", s(&instance("drury.json")), "--m", "1", "--tuple", s(&t)]);
    assert_eq!(code(&o), 2);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("matrices[1]"), "{err}");
}

#[test]
fn missing_flag_and_bad_values_exit_2() {
    assert_eq!(code(&run(&["coeffs", "--m", "1", "--N", "3"])), 2);
    assert_eq!(code(&run(&["coeffs", "--f", s(&instance("single.json")), "--m", "0", "--N", "3"])), 2);
    let o = run(&["kernel", "--f", s(&instance("single.json")), "--m", "1", "--points", "x", "--tol", "0"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn non_member_exits_1_with_report() {
    let dir = tempfile::tempdir().unwrap();
    let t = write(&dir, "big.json", r#"{"matrices": [[[[2, 0]]]]}"#);
    let o = run(&["check-domain", "--f", s(&instance("single.json")), "--m", "1", "--tuple", s(&t)]);
    assert_eq!(code(&o), 1);
    let r = report(&o);
    assert_eq!(r["passed"], false);
    assert_eq!(r["results"]["member"], false);
}

#[test]
fn negative_linear_coefficient_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(&dir, "f.json", r#"{"n": 1, "terms": [{"word": [1], "coeff": [-1, 0]}]}"#);
    let o = run(&["coeffs", "--f", s(&f), "--m", "1", "--N", "3"]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("positive regular"));
}

#[test]
fn basis_cap_exits_3() {
    let f = instance("drury.json");
    let args = ["coeffs", "--f", s(&f), "--m", "1", "--N", "6"];
    assert_eq!(code(&run_with(&args, ("NCDOMAIN_MAX_BASIS", "50"))), 3);
    assert_eq!(code(&run_with(&args, ("NCDOMAIN_MAX_BASIS", "1000"))), 0);
}

#[test]
fn reports_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.json"), dir.path().join("b.json"));
    for out in [&a, &b] {
        let o = run(&["verify", "--f", s(&instance("nonlinear.json")), "--m", "2", "--N", "4", "--seed", "7", "--out", s(out)]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        assert!(o.stdout.is_empty());
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn echoed_polynomial_round_trips() {
    let path = instance("nonlinear.json");
    let o = run(&["coeffs", "--f", s(&path), "--m", "1", "--N", "2"]);
    let r = report(&o);
    let echoed: FreePolynomial = parse_json(&r["inputs"]["polynomial"].to_string(), "echo").unwrap();
    let original: FreePolynomial = parse_json(&std::fs::read_to_string(&path).unwrap(), "file").unwrap();
    assert_eq!(echoed, original);
}

#[test]
fn berezin_kernel_and_resolvent_agree() {
    let o = run(&[
        "berezin",
        "--f",
        s(&instance("drury.json")),
        "--m",
        "2",
        "--N",
        "6",
        "--tuple",
        s(&instance("tuples/row_contraction.json")),
        "--symbol",
        s(&instance("symbol.json")),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(&o);
    let t = &r["results"]["transforms"][0];
    assert!(t["kernel_vs_resolvent"].as_f64().unwrap() <= 1e-12);
    assert_eq!(r["results"]["pure"], true);
}

#[test]
fn dilate_unitary_is_all_boundary() {
    let o = run(&[
        "dilate",
        "--f",
        s(&instance("single.json")),
        "--m",
        "1",
        "--tuple",
        s(&instance("tuples/diagonal_unitary.json")),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(&o);
    assert_eq!(r["results"]["d_dim"], 0);
    assert_eq!(r["results"]["k_dim"], 2);
}

#[test]
fn dilate_nilpotent_is_pure_shift() {
    let o = run(&["dilate", "--f", s(&instance("single.json")), "--m", "2", "--tuple", s(&instance("tuples/jordan.json"))]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(&o);
    assert_eq!(r["results"]["k_dim"], 0);
    assert_eq!(r["results"]["is_pure"], true);
}

#[test]
fn variety_reports_symmetric_dimensions() {
    let o = run(&[
        "variety",
        "--f",
        s(&instance("drury.json")),
        "--m",
        "1",
        "--N",
        "4",
        "--constraints",
        s(&instance("commutators.json")),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(&o);
    let dims: Vec<u64> = r["results"]["n_q_dims_per_degree"].as_array().unwrap().iter().map(|v| v.as_u64().unwrap()).collect();
    assert_eq!(dims, vec![1, 2, 3, 4, 5]);
}

#[test]
fn kernel_gram_is_psd_and_matches_truncation() {
    let o = run(&["kernel", "--f", s(&instance("drury.json")), "--m", "1", "--points", s(&instance("points.json")), "--N", "12"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(&o);
    assert!(r["results"]["gram_min_eig"].as_f64().unwrap() > 0.0);
    // K(0, 0) = 1
    let g00 = &r["results"]["gram"][3][3];
    assert_eq!(g00[0].as_f64().unwrap(), 1.0);
}
