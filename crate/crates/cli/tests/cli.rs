use std::process::{Command, Output};

fn pdov(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pdov"))
        .args(args)
        .env_remove("PDOV_THREADS")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn csv_rows(text: &str) -> Vec<Vec<String>> {
    text.lines().skip(1).map(|l| l.split(',').map(str::to_string).collect()).collect()
}

#[test]
fn phase_jumps_at_critical_points() {
    let o = pdov(&["phase", "--lambda-min", "0.5", "--lambda-max", "13", "--step", "0.5"]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    assert!(text.starts_with("lambda,u,h_limit\n"));
    let rows: Vec<(f64, usize)> = csv_rows(&text)
        .iter()
        .map(|r| (r[0].parse().unwrap(), r[1].parse().unwrap()))
        .collect();
    assert_eq!(rows.len(), 26);
    for (lambda, u) in rows {
        let want = if lambda <= 2.0 { 1 } else if lambda <= 6.0 { 2 } else if lambda <= 12.0 { 3 } else { 4 };
        assert_eq!(u, want, "lambda={lambda}");
    }
}

#[test]
fn mgf_at_zero_is_one() {
    let o = pdov(&["mgf", "--lambda", "6", "--theta", "1e-4", "--t", "0"]);
    assert_eq!(code(&o), 0);
    let rows = csv_rows(&stdout(&o));
    assert_eq!(rows[0][1].parse::<f64>().unwrap(), 1.0);
}

#[test]
fn first_moment_row() {
    let o = pdov(&["moments", "--theta", "0.5", "--kmax", "3"]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    assert!(text.starts_with("k,m_exact,m_recursion\n"));
    let rows = csv_rows(&text);
    assert_eq!(rows.len(), 3);
    assert_eq!(rows[0][0], "1");
    for col in 1..=2 {
        let v: f64 = rows[0][col].parse().unwrap();
        assert!((v - 1.0 / 3.0).abs() < 1e-15);
    }
    // 17 significant digits
    assert_eq!(rows[0][2].split('e').next().unwrap().len(), 18);
}

#[test]
fn moments_with_mc_columns() {
    let o = pdov(&["moments", "--theta", "0.5", "--kmax", "2", "--mc-check", "20000", "--seed", "3"]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    assert!(text.starts_with("k,m_exact,m_recursion,m_mc,se\n"));
    for r in csv_rows(&text) {
        let exact: f64 = r[1].parse().unwrap();
        let mc: f64 = r[3].parse().unwrap();
        let se: f64 = r[4].parse().unwrap();
        assert!((mc - exact).abs() < 4.0 * se);
    }
}

#[test]
fn rate_json_schema() {
    let o = pdov(&["rate", "--lambda", "6", "--uniform", "2"]);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    for key in ["J", "phi2", "infTerm", "S"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    assert_eq!(v["S"].as_f64().unwrap(), 0.0);
    let o = pdov(&["rate", "--lambda", "6", "--config", "0.25,0.75"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!((v["phi2"].as_f64().unwrap() - 0.625).abs() < 1e-15);
}

#[test]
fn sample_outputs_and_determinism() {
    let args = ["sample", "--lambda", "6", "--theta", "0.3", "--samples", "5000", "--seed", "9"];
    let a = pdov(&args);
    let b = pdov(&args);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
    let v: serde_json::Value = serde_json::from_str(&stdout(&a)).unwrap();
    for key in ["estimate", "se", "ess", "n"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    assert_eq!(v["n"].as_u64().unwrap(), 5000);

    let h = pdov(&["sample", "--lambda", "6", "--theta", "0.3", "--samples", "10000", "--hist-bins", "5"]);
    assert_eq!(code(&h), 0);
    let text = stdout(&h);
    assert!(text.starts_with("bin_lo,bin_hi,mass\n"));
    let mass: f64 = csv_rows(&text).iter().map(|r| r[2].parse::<f64>().unwrap()).sum();
    assert!((mass - 1.0).abs() < 1e-12);
}

#[test]
fn thread_count_does_not_change_output() {
    let args = ["sample", "--lambda", "2", "--theta", "0.2", "--samples", "4000", "--ball", "1,0.2"];
    let one = Command::new(env!("CARGO_BIN_EXE_pdov")).args(args).env("PDOV_THREADS", "1").output().unwrap();
    let four = Command::new(env!("CARGO_BIN_EXE_pdov")).args(args).env("PDOV_THREADS", "4").output().unwrap();
    assert_eq!(code(&one), 0);
    assert_eq!(one.stdout, four.stdout);
    let bad = Command::new(env!("CARGO_BIN_EXE_pdov")).args(args).env("PDOV_THREADS", "zero").output().unwrap();
    assert_eq!(code(&bad), 1);
}

#[test]
fn exit_codes() {
    assert_eq!(code(&pdov(&["no-such-command"])), 1);
    assert_eq!(code(&pdov(&["phase", "--lambda-min", "1", "--bogus"])), 1);
    assert_eq!(code(&pdov(&["verify", "--suite", "nope"])), 1);
    assert_eq!(code(&pdov(&["--help"])), 0);
    assert_eq!(code(&pdov(&["--version"])), 0);
    assert_eq!(code(&pdov(&["moments", "--theta", "2", "--kmax", "3"])), 2);
    assert_eq!(code(&pdov(&["tails", "--lambda=-1", "--theta", "0.5"])), 2);
    assert_eq!(code(&pdov(&["mgf", "--lambda", "6", "--theta", "0.5", "--t", "80"])), 2);
    // too few moments for the inner series
    assert_eq!(code(&pdov(&["mgf", "--lambda", "6", "--theta", "0.3", "--t", "1", "--kmax", "5"])), 3);
}

#[test]
fn strict_escalates_degeneracy() {
    // strong tilt with few draws: the weights collapse onto a handful of samples
    let args = ["sample", "--lambda", "100", "--theta", "0.5", "--samples", "1000"];
    let lax = pdov(&args);
    assert_eq!(code(&lax), 0);
    let v: serde_json::Value = serde_json::from_str(&stdout(&lax)).unwrap();
    assert!(v["ess"].as_f64().unwrap() < 50.0);
    assert!(String::from_utf8_lossy(&lax.stderr).contains("degenerate"));
    let mut strict = args.to_vec();
    strict.push("--strict");
    assert_eq!(code(&pdov(&strict)), 4);
}

#[test]
fn manifest_reproduces_checksums() {
    let dir = tempfile::tempdir().unwrap();
    let run = |tag: &str| {
        let out = dir.path().join(format!("out-{tag}.csv"));
        let man = dir.path().join(format!("manifest-{tag}.json"));
        let o = pdov(&[
            "kn", "--lambda", "6", "--n", "1", "--theta", "1e-3,1e-4",
            "--out", out.to_str().unwrap(), "--manifest", man.to_str().unwrap(), "--seed", "5",
        ]);
        assert_eq!(code(&o), 0);
        assert!(o.stdout.is_empty());
        let m: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(man).unwrap()).unwrap();
        (std::fs::read(out).unwrap(), m)
    };
    let (a, ma) = run("a");
    let (b, mb) = run("b");
    assert_eq!(a, b);
    assert_eq!(ma["outputs"][0]["sha256"], mb["outputs"][0]["sha256"]);
    assert_eq!(ma["seed"], 5);
    assert_eq!(ma["parameters"]["command"], "kn");
    assert_eq!(ma["parameters"]["theta"].as_array().unwrap().len(), 2);
    assert_eq!(ma["outputs"][0]["sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn coeffs_csv_and_json() {
    let o = pdov(&["coeffs", "--theta", "0.5", "--kmax", "2"]);
    let rows = csv_rows(&stdout(&o));
    assert_eq!(rows.len(), 3);
    let a21: f64 = rows[1][2].parse().unwrap();
    assert!((a21 - 2.0 / (3.5 * 2.5)).abs() < 1e-15);
    let o = pdov(&["coeffs", "--kmax", "2", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["kmax"], 2);
    assert!((v["rows"][1][0].as_f64().unwrap() - 1.0 / 3.0).abs() < 1e-15);
}

#[test]
fn verify_suites_report() {
    for suite in ["phase", "ft", "coef1"] {
        let o = pdov(&["verify", "--suite", suite]);
        assert_eq!(code(&o), 0, "{suite}: {}", String::from_utf8_lossy(&o.stderr));
        let text = stdout(&o);
        assert!(text.starts_with("suite,check,evaluated,violations,worst_margin,passed,statement\n"));
        assert!(text.lines().skip(1).all(|l| l.contains(",true,")));
    }
    let o = pdov(&["verify", "--suite", "ubmh", "--format", "json"]);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v[0]["suite"], "ubmh");
    assert_eq!(v[0]["passed"], true);
}

#[test]
fn verify_all_is_deterministic() {
    let args = ["verify", "--suite", "all", "--seed", "42", "--mc-samples", "20000", "--inclusion-samples", "2000"];
    let a = pdov(&args);
    let b = pdov(&args);
    assert_eq!(code(&a), 0, "{}", String::from_utf8_lossy(&a.stdout));
    assert_eq!(a.stdout, b.stdout);
}
