use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nonlocal-eigen"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env("NONLOCAL_EIGEN_THREADS", "1")
        .output()
        .expect("binary runs")
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    (header, rows)
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn eigen_is_deterministic() {
    let d = tempfile::tempdir().unwrap();
    let args = ["eigen", "--N", "64", "--seed", "7"];
    assert!(run(&args, &d.path().join("a")).status.success());
    assert!(run(&args, &d.path().join("b")).status.success());
    let a = std::fs::read(d.path().join("a/eigen.csv")).unwrap();
    let b = std::fs::read(d.path().join("b/eigen.csv")).unwrap();
    assert_eq!(a, b);
    let text = String::from_utf8(a).unwrap();
    assert!(text.starts_with("j,lambda,phi_0,"));
    assert!(!text.contains('\r'));
}

#[test]
fn sfl_first_eigenvalue() {
    let d = tempfile::tempdir().unwrap();
    assert!(run(&["eigen", "--op", "sfl", "--s", "0.75"], d.path()).status.success());
    let (_, rows) = read_csv(&d.path().join("eigen.csv"));
    let want = (std::f64::consts::PI.powi(2) / 4.0).powf(0.75);
    assert!((rows[0][1] - want).abs() < 1e-6 * want);
    let side = json(&d.path().join("eigen.json"));
    assert_eq!(side["config"]["op"], "sfl");
    assert_eq!(side["config"]["N"], 256);
}

#[test]
fn config_errors_exit_two() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(run(&["eigen", "--N", "4"], d.path()).status.code(), Some(2));
    assert_eq!(run(&["eigen", "--s", "1.5"], d.path()).status.code(), Some(2));
    assert_eq!(run(&["eigen", "--op", "sfl", "--domain", "ball", "--n", "3"], d.path()).status.code(), Some(2));
    assert_eq!(run(&["solve", "--g", "nonsense"], d.path()).status.code(), Some(2));
    assert_eq!(run(&["solve", "--h", "1,2,3"], d.path()).status.code(), Some(2));
}

#[test]
fn eigenvalue_lambda_exits_four() {
    let d = tempfile::tempdir().unwrap();
    assert!(run(&["eigen", "--N", "64"], d.path()).status.success());
    let l1 = json(&d.path().join("eigen.json"))["lambda_1"].as_f64().unwrap();
    let out = run(&["solve", "--N", "64", "--lambda", &format!("{l1:.16e}")], &d.path().join("s"));
    assert_eq!(out.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&out.stderr).contains("lambda_1"));
}

#[test]
fn solve_profiles() {
    let d = tempfile::tempdir().unwrap();
    assert!(run(&["solve", "--g", "zero", "--h", "1", "--lambda", "0"], d.path()).status.success());
    let (header, rows) = read_csv(&d.path().join("profile.csv"));
    assert_eq!(header, ["x", "delta", "v_h", "explicit", "u_perp", "v_lambda"]);
    let ratio: Vec<f64> = rows.iter().map(|r| r[5] * (1.0 - r[0] * r[0]).powf(0.25)).collect();
    let (lo, hi) = ratio.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &x| (a.min(x), b.max(x)));
    assert!((hi - lo) / hi < 1e-6);
    assert!(d.path().join("solution.json").exists());

    let e = d.path().join("mp");
    assert!(run(&["solve", "--g", "one", "--h", "0", "--lambda", "-1"], &e).status.success());
    let (_, rows) = read_csv(&e.join("profile.csv"));
    assert!(rows.iter().all(|r| r[5] >= 0.0));
}

#[test]
fn custom_table_profile() {
    let d = tempfile::tempdir().unwrap();
    let table = d.path().join("g.csv");
    std::fs::write(&table, "x,value\n-1,0\n0,2\n1,0\n").unwrap();
    let arg = format!("table({})", table.display());
    assert!(run(&["solve", "--N", "64", "--g", &arg, "--h", "0"], d.path()).status.success());
    let side = json(&d.path().join("solution.json"));
    let g = side["g"].as_array().unwrap();
    let x = side["nodes"].as_array().unwrap();
    for (gi, xi) in g.iter().zip(x) {
        let want = 2.0 * (1.0 - xi.as_f64().unwrap().abs());
        assert!((gi.as_f64().unwrap() - want).abs() < 1e-12);
    }
    std::fs::write(&table, "0,1\n1,1\n").unwrap();
    assert_eq!(run(&["solve", "--N", "64", "--g", &arg], d.path()).status.code(), Some(2));
}

#[test]
fn sweep_footer_spread() {
    let d = tempfile::tempdir().unwrap();
    assert!(run(&["sweep"], d.path()).status.success());
    let text = std::fs::read_to_string(d.path().join("sweep.csv")).unwrap();
    assert!(text.starts_with("lambda,supK,infOmega,uperp_L1_dgamma,proj_i"));
    let spread: f64 = text
        .lines()
        .find_map(|l| l.strip_prefix("# spread="))
        .unwrap()
        .parse()
        .unwrap();
    assert!(spread < 0.05, "{spread}");
}

#[test]
fn limit_ladder_exponents() {
    let d = tempfile::tempdir().unwrap();
    assert!(run(&["limit-s", "--N", "128"], d.path()).status.success());
    let (header, rows) = read_csv(&d.path().join("ladder.csv"));
    assert_eq!(header, ["s", "lambda_1", "kernel_dist", "sol_dist", "b", "fitted_exponent"]);
    for r in &rows {
        assert_eq!(r[4], 1.0 - r[0]);
    }
}

#[test]
fn verify_exit_matches_report() {
    let d = tempfile::tempdir().unwrap();
    let out = run(&["verify"], d.path());
    let rep = json(&d.path().join("verify.json"));
    let checks = rep["checks"].as_array().unwrap();
    assert!(checks.len() >= 25);
    let all = checks.iter().all(|c| c["passed"].as_bool().unwrap());
    assert_eq!(rep["all_passed"].as_bool().unwrap(), all);
    assert_eq!(out.status.code(), Some(if all { 0 } else { 1 }));
}
