use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const DEMOS: [&str; 5] = ["onemax-n4", "square-n4", "log-n4", "onemax-n4-explicit", "onemax-n10-bitwise"];

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

fn demo(name: &str) -> PathBuf {
    root().join("configs").join(format!("{name}.toml"))
}

fn fixture(name: &str) -> PathBuf {
    root().join("tests/fixtures").join(name)
}

fn levelchain(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_levelchain"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn run_to_file(args: &[&str], out: &Path) -> (Output, String) {
    let mut all = args.to_vec();
    all.extend(["--out", out.to_str().unwrap()]);
    let output = levelchain(&all);
    let csv = std::fs::read_to_string(out).unwrap_or_default();
    (output, csv)
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn column(csv: &str, name: &str) -> Vec<String> {
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let idx = header.iter().position(|h| *h == name).unwrap();
    lines.map(|l| l.split(',').nth(idx).unwrap().to_string()).collect()
}

#[test]
fn every_demo_config_reproduces_its_fixture() {
    let dir = tempfile::tempdir().unwrap();
    for name in DEMOS {
        let cfg = demo(name);
        let out = dir.path().join(format!("{name}.csv"));
        let (o, csv) = run_to_file(&["analyze", "--config", cfg.to_str().unwrap()], &out);
        assert!(o.status.success(), "{name}: {}", stderr(&o));
        let expected_csv = std::fs::read_to_string(fixture(&format!("expected/{name}.analyze.csv"))).unwrap();
        let expected_report = std::fs::read_to_string(fixture(&format!("expected/{name}.report.txt"))).unwrap();
        assert_eq!(csv, expected_csv, "{name} csv");
        assert_eq!(stdout(&o), expected_report, "{name} report");
    }
}

#[test]
fn rational_analysis_matches_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("m.csv");
    let cfg = demo("onemax-n4-explicit");
    let (o, csv) = run_to_file(&["analyze", "--rational", "--config", cfg.to_str().unwrap()], &out);
    assert!(o.status.success());
    assert_eq!(csv, std::fs::read_to_string(fixture("expected/onemax-n4-explicit.rational.csv")).unwrap());
}

#[test]
fn onemax_report_and_constant_rate() {
    let cfg = demo("onemax-n4");
    let o = levelchain(&["analyze", "--config", cfg.to_str().unwrap()]);
    assert!(o.status.success());
    let csv = stdout(&o);
    assert!(stderr(&o).contains("0.750×0.75^(t−1)"), "{}", stderr(&o));
    assert!(csv.starts_with("t,F,E,R\n"));
    assert!(csv.ends_with('\n'));
    let rates = column(&csv, "R");
    assert_eq!(rates.len(), 36);
    assert_eq!(rates[0], "");
    for r in &rates[1..] {
        assert!((r.parse::<f64>().unwrap() - 0.25).abs() <= 1e-12, "{r}");
    }
}

#[test]
fn square_coefficient_line() {
    let cfg = demo("square-n4");
    let o = levelchain(&["analyze", "--config", cfg.to_str().unwrap()]);
    assert!(stderr(&o).contains("c_k = (1.3125, −0.375, 0, 0)"), "{}", stderr(&o));
}

#[test]
fn duplicate_diagonal_is_rejected_with_states_named() {
    let cfg = fixture("duplicate-diagonal.toml");
    let o = levelchain(&["analyze", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let msg = stderr(&o);
    assert!(msg.contains("states 1 and 2"), "{msg}");
    assert!(stdout(&o).is_empty());
}

#[test]
fn simulate_row_count_and_log_first_step() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s.csv");
    let cfg = demo("onemax-n4");
    let (o, csv) = run_to_file(&["simulate", "--config", cfg.to_str().unwrap()], &out);
    assert!(o.status.success());
    assert!(csv.starts_with("t,mean_F,stderr,E_emp,R_emp\n"));
    assert_eq!(csv.lines().count(), 37);

    let cfg = demo("log-n4");
    let (o, csv) = run_to_file(&["simulate", "--config", cfg.to_str().unwrap()], &out);
    assert!(o.status.success());
    let e1: f64 = column(&csv, "E_emp")[1].parse().unwrap();
    let se1: f64 = column(&csv, "stderr")[1].parse().unwrap();
    let f_opt = 5f64.ln();
    // stderr is reported for F; E = 1 - F/f_opt scales it by 1/f_opt.
    let se_e = se1 / f_opt;
    // The target is a sum of three-decimal coefficients, hence the rounding slack.
    let target = 0.416 + 0.120 + 0.033;
    assert!((e1 - target).abs() <= 4.0 * se_e + 5e-4, "E_emp(1) = {e1}, stderr {se_e}");
}

#[test]
fn compare_passes_on_onemax_and_fails_on_perturbed_control() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("c.csv");
    let cfg = demo("onemax-n4");
    let (o, csv) = run_to_file(&["compare", "--config", cfg.to_str().unwrap()], &out);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("PASS"));
    assert!(csv.starts_with("t,F,mean_F,stderr,z\n"));

    let cfg = fixture("square-n4-perturbed.toml");
    let (o, _) = run_to_file(&["compare", "--config", cfg.to_str().unwrap()], &out);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("FAIL"));
}

#[test]
fn horizon_mismatch_is_a_config_error() {
    let cfg = fixture("horizon-mismatch.toml");
    let o = levelchain(&["compare", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("horizon mismatch"));
}

#[test]
fn power_reproduces_the_kernel_and_its_square() {
    let cfg = demo("onemax-n4-explicit");
    let o = levelchain(&["power", "--config", cfg.to_str().unwrap(), "-t", "1", "--rational"]);
    assert!(o.status.success());
    assert_eq!(
        stdout(&o),
        "state,1,2,3,4\n1,3/4,1/2,0,0\n2,0,1/2,3/4,0\n3,0,0,1/4,1\n4,0,0,0,0\n"
    );

    let o = levelchain(&["power", "--config", cfg.to_str().unwrap(), "-t", "2", "--oracle"]);
    assert!(o.status.success());
    let csv = stdout(&o);
    assert_eq!(csv, std::fs::read_to_string(fixture("expected/onemax-n4-explicit.power2.csv")).unwrap());
    let entry: f64 = csv.lines().nth(1).unwrap().split(',').nth(2).unwrap().parse().unwrap();
    assert_eq!(entry, 0.625);
    let report = stderr(&o);
    let dev: f64 = report
        .lines()
        .find_map(|l| l.strip_prefix("max deviation: "))
        .unwrap()
        .parse()
        .unwrap();
    assert!(dev <= 1e-12, "{report}");
}

#[test]
fn print_defaults_lists_every_default() {
    let o = levelchain(&["--print-defaults"]);
    assert!(o.status.success());
    let text = stdout(&o);
    for needle in ["runs = 100000", "horizon = 35", "seed = 42", "diagonal = 1e-9", "z_threshold = 4"] {
        assert!(text.contains(needle), "missing {needle}");
    }
}

#[test]
fn bad_invocations_exit_with_two() {
    assert_eq!(levelchain(&[]).status.code(), Some(2));
    assert_eq!(levelchain(&["analyze"]).status.code(), Some(2));
    assert_eq!(levelchain(&["analyze", "--config", "/nonexistent.toml"]).status.code(), Some(2));
    let cfg = demo("onemax-n4");
    assert_eq!(
        levelchain(&["simulate", "--config", cfg.to_str().unwrap(), "--runs", "0"]).status.code(),
        Some(2)
    );
}

#[test]
fn simulate_output_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = demo("square-n4");
    let cfg = cfg.to_str().unwrap();
    let a = run_to_file(&["simulate", "--config", cfg, "--runs", "5000", "--workers", "1"], &dir.path().join("a.csv")).1;
    let b = run_to_file(&["simulate", "--config", cfg, "--runs", "5000", "--workers", "3"], &dir.path().join("b.csv")).1;
    let c = run_to_file(&["simulate", "--config", cfg, "--runs", "5000", "--seed", "43"], &dir.path().join("c.csv")).1;
    assert_eq!(a, b);
    assert_ne!(a, c);
}
