use std::path::Path;
use std::process::{Command, Output};

fn aoi(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_aoi"))
        .args(args)
        .env_remove("AOI_SEED")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

/// `(value, stderr)` of the first row matching scheme, lambda, metric and source.
fn find(csv: &str, scheme: &str, lambda: &str, metric: &str, source: &str) -> (f64, Option<f64>) {
    for line in csv.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        if f[0] == scheme && f[3] == lambda && f[4] == metric && f[7] == source {
            return (f[5].parse().unwrap(), f[6].parse().ok());
        }
    }
    panic!("no row {scheme} {lambda} {metric} {source} in\n{csv}");
}

#[test]
fn analytic_preempt_unit_point() {
    let o = aoi(&["analytic", "--scheme", "preempt", "--k", "1", "--theta", "1", "--lambda", "1"]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert!(out.starts_with("scheme,k,theta,lambda,metric,value,stderr,source,seed\n"));
    assert!(out.contains("preempt,1,1,1,avg_age,2,,analytic,\n"));
    assert_eq!(find(&out, "preempt", "1", "avg_peak_age", "analytic").0, 2.5);
}

#[test]
fn analytic_deterministic_preempt() {
    let o = aoi(&["analytic", "--scheme", "preempt", "--det", "--mu", "1", "--lambda", "1"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("preempt,det,1,1,avg_age,2.71828183,,analytic,"));
}

#[test]
fn non_integer_shape_is_a_usage_error() {
    let o = aoi(&["analytic", "--scheme", "nopreempt", "--k", "1.5", "--theta", "1", "--lambda", "1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("k must be an integer for nopreempt"));
    assert!(o.stdout.is_empty());
}

#[test]
fn usage_errors_exit_two() {
    for args in [
        &["analytic", "--k", "1", "--lambda", "1"][..],
        &["analytic", "--k", "1", "--theta", "1", "--lambda", "-1"],
        &["analytic", "--det", "--lambda", "1"],
        &["analytic", "--det", "--mu", "1", "--k", "2", "--lambda", "1"],
        &["simulate", "--k", "1", "--theta", "1", "--lambda", "1", "--horizon", "10", "--warmup", "10"],
        &["sweep", "--analytic-only"],
        &["sweep", "--preset", "fig9"],
        &["bogus"],
    ] {
        assert_eq!(aoi(args).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn simulate_is_byte_identical_across_runs() {
    let args = ["simulate", "--k", "2", "--theta", "0.5", "--lambda", "3", "--horizon", "50000", "--seed", "11"];
    let a = aoi(&args);
    let b = aoi(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert!(stdout(&a).lines().skip(1).all(|l| l.ends_with(",sim,11")));
}

#[test]
fn simulate_preempt_unit_point_within_three_se() {
    let o = aoi(&["simulate", "--scheme", "preempt", "--k", "1", "--theta", "1", "--lambda", "1", "--horizon", "2000000", "--seed", "7"]);
    assert!(o.status.success());
    let (v, se) = find(&stdout(&o), "preempt", "1", "avg_age", "sim");
    assert!((v - 2.0).abs() <= 3.0 * se.unwrap(), "{v} {se:?}");
}

#[test]
fn simulate_nopreempt_deterministic_within_three_se() {
    let o = aoi(&["simulate", "--scheme", "nopreempt", "--det-service", "1", "--lambda", "1"]);
    assert!(o.status.success());
    let (v, se) = find(&stdout(&o), "nopreempt", "1", "avg_age", "sim");
    // Closed-form value at rho = 1.
    assert!((v - 2.167_653_25).abs() <= 3.0 * se.unwrap(), "{v} {se:?}");
}

#[test]
fn seed_comes_from_the_environment() {
    let run = |env: Option<&str>| {
        let mut c = Command::new(env!("CARGO_BIN_EXE_aoi"));
        c.args(["simulate", "--scheme", "preempt", "--k", "1", "--theta", "1", "--lambda", "1", "--horizon", "20000"]);
        match env {
            Some(v) => c.env("AOI_SEED", v),
            None => c.env_remove("AOI_SEED"),
        };
        stdout(&c.output().unwrap())
    };
    assert!(run(Some("5")).lines().nth(1).unwrap().ends_with(",sim,5"));
    assert!(run(None).lines().nth(1).unwrap().ends_with(",sim,1"));
}

#[test]
fn trace_has_one_line_per_event() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("events.csv");
    let o = aoi(&[
        "simulate", "--scheme", "nopreempt", "--k", "1", "--theta", "1", "--lambda", "1", "--horizon", "200",
        "--warmup", "10", "--trace", path.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(&path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("time,type,gen_time"));
    let arrivals = text.lines().filter(|l| l.contains(",arrival,")).count();
    assert_eq!(arrivals, 200);
}

#[test]
fn fig6_sweep_analytic_values() {
    let o = aoi(&["sweep", "--preset", "fig6", "--analytic-only"]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert_eq!(find(&out, "preempt", "10", "avg_age", "analytic").0, 3.6);
    assert_eq!(find(&out, "nopreempt", "10", "avg_age", "analytic").0, 1.84125372);
    assert!(!out.contains(",sim,"));
}

#[test]
fn fig7_sweep_analytic_values() {
    let o = aoi(&["sweep", "--preset", "fig7", "--analytic-only"]);
    let out = stdout(&o);
    assert!(out.contains("preempt,det,1,1,avg_age,2.71828183,,analytic,"));
    assert_eq!(find(&out, "nopreempt", "1", "avg_age", "analytic").0, 2.16765325);
    assert_eq!(find(&out, "preempt", "1", "avg_peak_age", "analytic").0, 3.71828183);
    assert_eq!(find(&out, "nopreempt", "1", "avg_peak_age", "analytic").0, 2.63212056);
    assert!(out.lines().skip(1).all(|l| l.split(',').nth(1) == Some("det")));
}

fn write(path: &Path, bytes: &[u8]) {
    std::fs::write(path, bytes).unwrap();
}

#[test]
fn dump_config_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("spec.json");
    let overrides = ["--lambda-count", "3", "--horizon", "30000", "--warmup", "500", "--seed", "9", "--k", "1,3"];
    let mut dump = vec!["sweep", "--preset", "fig5", "--dump-config"];
    dump.extend(overrides);
    let d = aoi(&dump);
    assert!(d.status.success());
    write(&cfg, &d.stdout);

    let mut direct = vec!["sweep", "--preset", "fig5"];
    direct.extend(overrides);
    let a = aoi(&direct);
    let b = aoi(&["sweep", "--config", cfg.to_str().unwrap()]);
    assert!(a.status.success() && b.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert!(stdout(&a).contains(",sim,"));

    let again = aoi(&["sweep", "--config", cfg.to_str().unwrap(), "--dump-config"]);
    assert_eq!(again.stdout, d.stdout);
}

#[test]
fn sweep_writes_to_out_path() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("rows.csv");
    let o = aoi(&["sweep", "--preset", "fig4", "--analytic-only", "--lambda-count", "2", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    let text = std::fs::read_to_string(&out).unwrap();
    // 4 shapes x (2 grid points + 2 anchors) x 9 metrics, plus the header.
    assert_eq!(text.lines().count(), 4 * 4 * 9 + 1);
}

#[test]
fn bad_config_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("spec.json");
    write(&cfg, br#"{"schemes": ["nopreempt"], "shapes": [2.5]}"#);
    assert_eq!(aoi(&["sweep", "--config", cfg.to_str().unwrap()]).status.code(), Some(2));
    let d = aoi(&["sweep", "--preset", "fig5", "--dump-config"]);
    let text = stdout(&d).replace("2.0", "2.5");
    write(&cfg, text.as_bytes());
    let o = aoi(&["sweep", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("k must be an integer for nopreempt"));
}

#[test]
fn validate_quick_passes() {
    let o = aoi(&["validate", "--quick"]);
    let out = stdout(&o);
    assert!(o.status.success(), "{out}");
    assert!(out.lines().next().unwrap().starts_with("status"));
    assert!(!out.contains("FAIL"));
}

#[test]
fn validate_default_passes() {
    let o = aoi(&["validate"]);
    assert!(o.status.success(), "{}", stdout(&o));
}
