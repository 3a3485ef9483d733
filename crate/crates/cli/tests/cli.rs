use std::f64::consts::PI;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_smallball"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn run_env(args: &[&str], threads: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_smallball"))
        .args(args)
        .env("SMALLBALL_THREADS", threads)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    assert!(
        o.status.success(),
        "exit {:?}: {}",
        o.status.code(),
        String::from_utf8_lossy(&o.stderr)
    );
    String::from_utf8(o.stdout.clone()).unwrap()
}

/// CSV body as rows of fields, header checked.
fn csv(text: &str, header: &str) -> Vec<Vec<String>> {
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some(header));
    lines.map(|l| l.split(',').map(str::to_string).collect()).collect()
}

fn json(text: &str) -> serde_json::Value {
    let v: serde_json::Value = serde_json::from_str(text).unwrap();
    assert_eq!(v["version"], 1);
    v
}

#[test]
fn eigs_demeaned_wiener_is_neumann() {
    let out = stdout(&run(&["eigs", "--process", "demeaned-wiener", "--k", "5", "--format", "csv"]));
    let rows = csv(&out, "k,mu,lambda");
    assert_eq!(rows.len(), 5);
    for (i, r) in rows.iter().enumerate() {
        let mu: f64 = r[1].parse().unwrap();
        let k = (i + 1) as f64;
        assert!((mu * (PI * k).powi(2) - 1.0).abs() < 1e-6);
    }
}

#[test]
fn eigs_compare_iou() {
    let out = stdout(&run(&[
        "eigs", "--process", "demeaned-iou", "--beta", "1", "--k", "5", "--compare", "--format",
        "json",
    ]));
    let v = json(&out);
    assert_eq!(v["command"], "eigs");
    assert_eq!(v["rows"].as_array().unwrap().len(), 5);
    assert!(v["meta"]["max_rel_diff"].as_f64().unwrap() <= 1e-6);
}

#[test]
fn eigs_charfn_method() {
    let out = stdout(&run(&[
        "eigs", "--process", "demeaned-ou0", "--beta", "2", "--k", "3", "--method", "charfn",
        "--format", "json",
    ]));
    let v = json(&out);
    assert_eq!(v["meta"]["provenance"], "characteristic");
}

#[test]
fn negative_beta_is_a_parameter_error() {
    let o = run(&["eigs", "--process", "ou", "--beta", "-1"]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("beta"));
}

#[test]
fn unknown_process_is_rejected() {
    let o = run(&["eigs", "--process", "demeaned-levy"]);
    assert!(!o.status.success());
}

#[test]
fn constant_ou_and_ou0() {
    let out = stdout(&run(&["constant", "--process", "demeaned-ou", "--beta", "1", "--format", "csv"]));
    let rows = csv(&out, "process,method,value,closed_form,abs_diff,terms");
    let closed: f64 = rows[0][2].parse().unwrap();
    assert!((closed - 2.0 * 1f64.exp() / 3.0).abs() < 1e-15);
    assert!((closed - 1.812187).abs() < 1e-6);
    let product: f64 = rows[1][2].parse().unwrap();
    assert!((product - closed).abs() < 1e-4);

    let out = stdout(&run(&[
        "constant", "--process", "demeaned-ou0", "--beta", "1", "--method", "closed", "--format",
        "csv",
    ]));
    let rows = csv(&out, "process,method,value,closed_form,abs_diff,terms");
    assert_eq!(rows.len(), 1);
    let v: f64 = rows[0][2].parse().unwrap();
    assert!((v - 1f64.exp()).abs() < 1e-12);
}

#[test]
fn constant_for_wiener_is_not_available() {
    let o = run(&["constant", "--process", "demeaned-wiener"]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("not available"));
}

#[test]
fn prob_ratio_approaches_one() {
    let out = stdout(&run(&[
        "prob", "--process", "demeaned-wiener", "--eps", "0.2,0.15,0.1", "--method",
        "imhof,asymptotic", "--format", "csv",
    ]));
    let rows = csv(
        &out,
        "process,beta_or_alpha,epsilon,p_exact,p_mc,mc_stderr,p_asymptotic,ratio",
    );
    assert_eq!(rows.len(), 3);
    let ratios: Vec<f64> = rows.iter().map(|r| r[7].parse().unwrap()).collect();
    assert!(ratios.windows(2).all(|w| (w[1] - 1.0).abs() < (w[0] - 1.0).abs()));
    assert!((ratios[2] - 1.0).abs() < 0.02);
}

#[test]
fn seeded_mc_is_byte_identical_across_thread_counts() {
    let args = [
        "prob", "--process", "demeaned-iou", "--beta", "1", "--eps", "0.1", "--method", "mc",
        "--samples", "200000", "--seed", "7", "--format", "json",
    ];
    let a = stdout(&run_env(&args, "1"));
    let b = stdout(&run_env(&args, "3"));
    assert_eq!(a, b);
    let v = json(&a);
    assert!(v["rows"][0]["p_mc"].as_f64().unwrap() > 0.0);
    assert!(v["rows"][0]["p_exact"].is_null());
}

#[test]
fn mc_without_seed_is_rejected() {
    let o = run(&["prob", "--process", "demeaned-wiener", "--eps", "0.2", "--method", "mc"]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("seed"));
}

#[test]
fn prob_without_process_is_a_usage_error() {
    let o = run(&["prob"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn bad_thread_count_is_rejected() {
    let o = run_env(&["eigs", "--process", "demeaned-wiener", "--k", "2"], "zero");
    assert!(!o.status.success());
}

#[test]
fn output_file_matches_stdout() {
    let dir = std::env::temp_dir().join(format!("smallball-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("eigs.csv");
    let args = ["eigs", "--process", "bridge", "--k", "3", "--n-nodes", "400", "--format", "csv"];
    let direct = stdout(&run(&args));
    let mut with_file = args.to_vec();
    with_file.extend(["--output", path.to_str().unwrap()]);
    assert!(stdout(&run(&with_file)).is_empty());
    assert_eq!(std::fs::read_to_string(&path).unwrap(), direct);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn selftest_passes() {
    let out = stdout(&run(&["selftest", "--n-nodes", "800", "--format", "json"]));
    let v = json(&out);
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 3 + 9 + 9);
    assert!(rows.iter().all(|r| r["status"] == true));
}
