use std::fs;
use std::path::Path;
use std::process::Command;

use serde_json::Value;

fn fock(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_fock"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn run_to(dir: &Path, file: &str, args: &[&str]) -> (i32, Value) {
    let out = dir.join(file);
    let mut all: Vec<&str> = args.to_vec();
    let path = out.to_str().unwrap().to_string();
    all.extend(["--out", &path]);
    let res = fock(&all);
    let code = res.status.code().unwrap();
    let doc = fs::read_to_string(&out)
        .map(|s| serde_json::from_str(&s).unwrap())
        .unwrap_or(Value::Null);
    (code, doc)
}

fn complex(v: &Value) -> (f64, f64) {
    (v[0].as_f64().unwrap(), v[1].as_f64().unwrap())
}

#[test]
fn spectrum_of_the_gaussian_symbol() {
    let dir = tempfile::tempdir().unwrap();
    let (code, doc) = run_to(
        dir.path(),
        "spec.json",
        &[
            "spectrum",
            "--symbol",
            "exp(-abs(z)^2)",
            "--t",
            "1",
            "--degree",
            "30",
        ],
    );
    assert_eq!(code, 0);
    assert_eq!(doc["meta"]["command"], "spectrum");
    assert_eq!(doc["meta"]["degree"], 30);
    let spectra = doc["data"]["spectra"].as_array().unwrap();
    let top = spectra.last().unwrap();
    assert_eq!(top["degree"], 30);
    let ev: Vec<(f64, f64)> = top["eigenvalues"]
        .as_array()
        .unwrap()
        .iter()
        .map(complex)
        .collect();
    for target in [0.5, 0.25, 0.125] {
        assert!(
            ev.iter()
                .any(|(re, im)| (re - target).abs() < 1e-9 && im.abs() < 1e-9),
            "{target}"
        );
    }
    assert!(ev.windows(2).all(|w| w[0].0 <= w[1].0));
}

#[test]
fn norm_bounds_of_the_identity() {
    let dir = tempfile::tempdir().unwrap();
    let (code, doc) = run_to(
        dir.path(),
        "nb.json",
        &["norm-bounds", "--symbol", "1", "--t", "1"],
    );
    assert_eq!(code, 0);
    let d = &doc["data"];
    assert!((d["wiener_bound"].as_f64().unwrap() - 2.0).abs() < 1e-6);
    assert!((d["schur"]["a1"].as_f64().unwrap() - 2.0 * std::f64::consts::PI).abs() < 1e-6);
    assert!((d["truncation_norm"].as_f64().unwrap() - 1.0).abs() < 1e-9);
    assert_eq!(d["wiener"]["base_rim_warnings"], 0);
}

#[test]
fn index_of_the_phase_symbol() {
    let dir = tempfile::tempdir().unwrap();
    let (code, doc) = run_to(
        dir.path(),
        "idx.json",
        &["index", "--symbol", "phase(z)", "--lambda", "0", "--t", "1"],
    );
    assert_eq!(code, 0);
    assert_eq!(doc["data"]["index"], -1);
    assert_eq!(doc["data"]["winding"], 1);
    let (code, doc) = run_to(
        dir.path(),
        "idx2.json",
        &["index", "--symbol", "phase", "--lambda", "2"],
    );
    assert_eq!(code, 0);
    assert_eq!(doc["data"]["index"], 0);
}

#[test]
fn compactness_writes_a_csv_mirror() {
    let dir = tempfile::tempdir().unwrap();
    let (code, doc) = run_to(
        dir.path(),
        "c.json",
        &["compactness", "--symbol", "gaussian"],
    );
    assert_eq!(code, 0);
    assert_eq!(doc["data"]["verdict"], true);
    let csv = fs::read_to_string(dir.path().join("c.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("radius,value"));
    assert_eq!(
        lines.count(),
        doc["data"]["curve"].as_array().unwrap().len()
    );
    let (_, doc) = run_to(dir.path(), "p.json", &["compactness", "--symbol", "phase"]);
    assert_eq!(doc["data"]["verdict"], false);
}

#[test]
fn essential_spectrum_and_limit_symbols() {
    let dir = tempfile::tempdir().unwrap();
    let (code, doc) = run_to(
        dir.path(),
        "e.json",
        &["ess-spectrum", "--symbol", "phase", "--directions", "16"],
    );
    assert_eq!(code, 0);
    let est = doc["data"]["estimate"].as_array().unwrap();
    assert_eq!(est.len(), 16);
    assert!(est
        .iter()
        .map(complex)
        .all(|(re, im)| (re.hypot(im) - 1.0).abs() < 1e-12));

    let res = fock(&["ess-spectrum", "--symbol", "re(z)"]);
    assert_eq!(res.status.code(), Some(2));
    let (code, doc) = run_to(
        dir.path(),
        "l.json",
        &[
            "ess-spectrum",
            "--symbol",
            "re(z)",
            "--limit-symbol",
            "re(z)",
            "--directions",
            "4",
        ],
    );
    assert_eq!(code, 0);
    assert_eq!(doc["data"]["estimate"].as_array().unwrap().len(), 3);
}

#[test]
fn compose_reports_a_dominating_convolution() {
    let dir = tempfile::tempdir().unwrap();
    let (code, doc) = run_to(
        dir.path(),
        "c.json",
        &[
            "compose",
            "--symbol",
            "gaussian",
            "--symbol2",
            "phase",
            "--degree",
            "20",
        ],
    );
    assert_eq!(code, 0);
    let b = &doc["data"]["bounds"];
    let prod = b["product"].as_f64().unwrap();
    assert!((b["convolved"].as_f64().unwrap() - prod).abs() < 1e-10 * prod);
    assert!(b["max_excess"].as_f64().unwrap() <= 1e-8);
}

#[test]
fn toeplitz_and_berezin_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let (code, doc) = run_to(
        dir.path(),
        "t.json",
        &["toeplitz", "--symbol", "gaussian", "--degree", "4"],
    );
    assert_eq!(code, 0);
    let m = doc["data"]["matrix"].as_array().unwrap();
    assert_eq!(m.len(), 5);
    for (j, row) in m.iter().enumerate() {
        let (re, _) = complex(&row[j]);
        assert!((re - 0.5f64.powi(j as i32 + 1)).abs() < 1e-12);
    }
    let (code, doc) = run_to(dir.path(), "b.json", &["berezin", "--symbol", "1"]);
    assert_eq!(code, 0);
    for v in doc["data"]["berezin"].as_array().unwrap() {
        let (re, im) = complex(v);
        assert!((re - 1.0).abs() < 1e-12 && im.abs() < 1e-12);
    }
}

#[test]
fn usage_and_numeric_failures_have_distinct_exit_codes() {
    assert_eq!(fock(&["nonsense"]).status.code(), Some(2));
    assert_eq!(fock(&["spectrum"]).status.code(), Some(2));
    assert_eq!(
        fock(&["spectrum", "--symbol", "exp(z^0.5)"]).status.code(),
        Some(2)
    );
    assert_eq!(
        fock(&["spectrum", "--symbol", "sin(z)"]).status.code(),
        Some(2)
    );
    assert_eq!(
        fock(&["spectrum", "--symbol", "1", "--t", "-1"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(fock(&["--help"]).status.code(), Some(0));

    let dir = tempfile::tempdir().unwrap();
    let (code, doc) = run_to(
        dir.path(),
        "f.json",
        &["index", "--symbol", "phase", "--lambda", "0.99*i"],
    );
    assert_eq!(code, 3);
    assert_eq!(doc["data"]["error"]["kind"], "not-fredholm");
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let args: &[&[&str]] = &[
        &[
            "spectrum", "--symbol", "mixed", "--degree", "12", "--lambda", "0.3",
        ],
        &["compactness", "--symbol", "phase(z)"],
        &["ess-spectrum", "--symbol", "phase"],
    ];
    for (k, a) in args.iter().enumerate() {
        let first = dir.path().join(format!("a{k}.json"));
        let second = dir.path().join(format!("b{k}.json"));
        for out in [&first, &second] {
            let mut v = a.to_vec();
            v.extend(["--out", out.to_str().unwrap()]);
            assert_eq!(fock(&v).status.code(), Some(0));
        }
        assert_eq!(fs::read(&first).unwrap(), fs::read(&second).unwrap());
    }
}
