use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use num_bigint::BigUint;
use tropical_kex::protocol_one::PairOne;
use tropical_kex::Matrix;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_tropical-kex"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn binary")
}

fn write_matrix(dir: &Path, name: &str, m: &Matrix) -> String {
    let path = dir.join(name);
    fs::write(&path, serde_json::to_string(m).unwrap()).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn check_assoc_counterexample_prints_both_bracketings() {
    let out = run(&["check-assoc", "--paper"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("not associative"));

    let out = run(&["check-assoc", "--paper", "--format", "json"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let p = &v["paper"];
    assert_eq!(p["associative"], false);
    assert_eq!(p["square"]["m"]["entries"], serde_json::json!([[-3, -2], [-1, -3]]));
    assert_eq!(p["left_times_square"]["m"]["entries"], serde_json::json!([[-3, -2], [-3, -3]]));
    assert_eq!(p["square_times_left"]["m"]["entries"], serde_json::json!([[-4, -5], [-3, -4]]));
}

#[test]
fn attack_recovers_forward_generated_exponent() {
    let dir = tempfile::tempdir().unwrap();
    let mm = Matrix::from_i64_rows(&[[3, 1], [4, 1]]).unwrap();
    let h = Matrix::from_i64_rows(&[[5, -9], [2, 6]]).unwrap();
    let p = PairOne::new(mm.clone(), h.clone()).unwrap();
    let a = BigUint::from(123_457u32);
    let m_a = p.pow(&a).unwrap().m;
    let m_b = p.pow_u64(999).unwrap().m;
    let args = [
        "attack".to_string(),
        "--m".into(),
        write_matrix(dir.path(), "m.json", &mm),
        "--h".into(),
        write_matrix(dir.path(), "h.json", &h),
        "--m-a".into(),
        write_matrix(dir.path(), "ma.json", &m_a),
        "--m-b".into(),
        write_matrix(dir.path(), "mb.json", &m_b),
    ];
    let out = bin().args(&args).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("recovered a = 123457"));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["attack"]["recovered_a"], "123457");
    assert_eq!(v["attack"]["verified"], true);
    let expected_key = p.pow(&(a + 999u32)).unwrap().m;
    assert_eq!(v["key"], serde_json::to_value(&expected_key).unwrap());
}

#[test]
fn malformed_input_exits_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, r#"{"order":2,"entries":[[1,2],[3]]}"#).unwrap();
    let bad = bad.to_string_lossy().into_owned();
    let out = run(&["attack", "--m", &bad, "--h", &bad, "--m-a", &bad]);
    assert_eq!(out.status.code(), Some(2));

    let out = run(&["check-assoc"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bench_csv_is_reproducible() {
    let args = ["bench", "--seed", "42", "--trials", "5", "--order", "5", "--format", "csv"];
    let first = run(&args);
    let second = run(&args);
    assert!(first.status.success());
    assert_eq!(first.stdout, second.stdout);
    let text = String::from_utf8(first.stdout).unwrap();
    assert_eq!(text.lines().count(), 6);
    assert!(text.starts_with("trial,d,rho,retries,success,true_a,recovered_a"));
}

#[test]
fn bench_writes_output_directory() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("run");
    let out = run(&[
        "bench",
        "--seed",
        "3",
        "--trials",
        "3",
        "--order",
        "4",
        "--jobs",
        "2",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    for f in ["trials.csv", "timings.csv", "summary.json"] {
        assert!(out_dir.join(f).exists(), "{f}");
    }
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["Trials"], 3);
    assert_eq!(summary["Success Rate"], 1.0);
}

#[test]
fn gen_then_exchange_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["gen", "--order", "3", "--seed", "7", "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success());
    let inst = dir.path().join("instance.json");
    let out = run(&["exchange", "--instance", inst.to_str().unwrap()]);
    assert!(out.status.success());
    let t: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(t["key_alice"], t["key_bob"]);
}
