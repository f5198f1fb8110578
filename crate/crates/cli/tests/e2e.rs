//! End-to-end checks of the `bufferloss` binary: exit codes, artifact
//! schemas, bitwise reproducibility, and environment overrides. Every
//! invocation runs in a fresh temporary directory with the override
//! variables cleared, so the tests are hermetic.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const BIN: &str = env!("CARGO_BIN_EXE_bufferloss");

const WINDOWS_HEADER: &str = "window_index,t_start,t_end,lost_traffic,idle_deficit,\
                              packets_arrived,packets_dropped,end_occupancy";
const REPORT_HEADER: &str = "name,analytic_value,simulated_value,standard_error,score,\
                             tolerance,pass,config_hash,base_seed,streams,version";
const LAG_COLUMNS: &str = "t_lag,cov,standard_error,ci_low,ci_high,analytic_cov,\
                           product_moment,analytic_product_moment,regime";
const PROVENANCE_COLUMNS: &str = "config_hash,base_seed,streams,version";

/// Critical-load traffic block shared by every configuration in this file.
const TRAFFIC: &str = r#""traffic": {
    "inter_arrival": { "type": "exponential", "rate": 100.0 },
    "packet_size": { "type": "deterministic", "value": 0.01 },
    "eta0": 1.0
  }"#;

fn config(dir: &Path, name: &str, tail: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, format!("{{\n  {TRAFFIC},\n  {tail}\n}}")).unwrap();
    path
}

fn run_env(dir: &Path, args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(BIN);
    cmd.args(args)
        .current_dir(dir)
        .env_remove("BUFFERLOSS_OUTPUT_DIR")
        .env_remove("BUFFERLOSS_BASE_SEED");
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().expect("binary launches")
}

fn run(dir: &Path, args: &[&str]) -> Output {
    run_env(dir, args, &[])
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn first_line(out: &Output) -> String {
    stdout(out).lines().next().unwrap_or_default().to_string()
}

#[test]
fn version_reports_generator_identity() {
    let dir = TempDir::new().unwrap();
    let out = run(dir.path(), &["version"]);
    assert_eq!(code(&out), 0);
    let line = first_line(&out);
    assert!(line.starts_with("bufferloss "), "{line}");
    assert!(line.contains("chacha8(seed,stream)"), "{line}");
}

#[test]
fn analytic_values_are_frozen() {
    let dir = TempDir::new().unwrap();

    let out = run(dir.path(), &["analytic", "stationary-density", "--v", "0", "--ell", "0.5"]);
    assert_eq!(code(&out), 0);
    assert_eq!(first_line(&out), "1.0000000000000000e0");

    let out = run(dir.path(), &["analytic", "mean-loss", "--v", "0", "--tau", "2"]);
    assert_eq!(code(&out), 0);
    assert_eq!(first_line(&out), "2.0000000000000000e0");

    // coth(1), modulo one ulp of inversion round-off in the last digit
    let out = run(
        dir.path(),
        &["analytic", "boundary-return", "--which", "full", "--v", "0", "--eps", "1"],
    );
    assert_eq!(code(&out), 0);
    assert!(first_line(&out).starts_with("1.313035285499331"), "{}", first_line(&out));
}

#[test]
fn analytic_idleness_mirrors_loss() {
    let dir = TempDir::new().unwrap();
    let loss = run(dir.path(), &["analytic", "mean-loss", "--v", "1", "--tau", "1"]);
    let idle = run(dir.path(), &["analytic", "mean-idleness", "--v", "-1", "--tau", "1"]);
    assert_eq!(code(&loss), 0);
    assert_eq!(code(&idle), 0);
    assert_eq!(first_line(&loss), first_line(&idle));
}

#[test]
fn analytic_rejects_bad_domains() {
    let dir = TempDir::new().unwrap();

    let out = run(dir.path(), &["analytic", "stationary-density", "--v", "0", "--ell", "1.5"]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("must lie in [0, 1]"), "{}", stderr(&out));

    let out = run(
        dir.path(),
        &["analytic", "boundary-return", "--which", "full", "--v", "0", "--eps", "1", "--tau", "1"],
    );
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("exactly one of --eps or --tau"), "{}", stderr(&out));

    // out of the long-window regime: a runtime refusal, not an input error
    let out = run(dir.path(), &["analytic", "loss-variance", "--v", "0", "--tau", "1"]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).starts_with("error: runtime failure"), "{}", stderr(&out));
}

const SIM_RUN: &str = r#""run": { "duration": 2000.0, "window": 10.0, "base_seed": 7 },
  "output_dir": "run1""#;

#[test]
fn simulate_writes_pinned_artifacts() {
    let dir = TempDir::new().unwrap();
    let cfg = config(dir.path(), "sim.json", SIM_RUN);
    let out = run(dir.path(), &["simulate", cfg.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));

    let windows = fs::read_to_string(dir.path().join("run1/windows.csv")).unwrap();
    let mut lines = windows.lines();
    assert_eq!(lines.next().unwrap(), WINDOWS_HEADER);
    // 2000 time units / window 10, no warmup
    assert_eq!(lines.count(), 200);

    let summary = fs::read_to_string(dir.path().join("run1/summary.csv")).unwrap();
    assert_eq!(summary.lines().next().unwrap(), "name,value");
    assert!(summary.contains("\nseed,7\n"), "{summary}");
    assert!(summary.contains("\nconservation_violation,0\n"), "{summary}");
    assert!(summary.contains(concat!("\nversion,", env!("CARGO_PKG_VERSION"), "\n")));

    let hash = summary
        .lines()
        .find_map(|l| l.strip_prefix("config_hash,"))
        .expect("config_hash row");
    assert_eq!(hash.len(), 16);
    assert!(hash.bytes().all(|b| b.is_ascii_hexdigit()));
}

#[test]
fn simulate_is_bitwise_reproducible() {
    let dir = TempDir::new().unwrap();
    let cfg = config(dir.path(), "sim.json", SIM_RUN);
    let cfg = cfg.to_str().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");

    for d in [&a, &b] {
        let out = run_env(
            dir.path(),
            &["simulate", cfg],
            &[("BUFFERLOSS_OUTPUT_DIR", d.to_str().unwrap())],
        );
        assert_eq!(code(&out), 0, "{}", stderr(&out));
    }
    assert_eq!(
        fs::read(a.join("windows.csv")).unwrap(),
        fs::read(b.join("windows.csv")).unwrap(),
        "same seed must reproduce windows.csv byte for byte"
    );

    // the seed override changes the realization and is recorded in summary.csv
    let c = dir.path().join("c");
    let out = run_env(
        dir.path(),
        &["simulate", cfg],
        &[
            ("BUFFERLOSS_OUTPUT_DIR", c.to_str().unwrap()),
            ("BUFFERLOSS_BASE_SEED", "99"),
        ],
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let summary = fs::read_to_string(c.join("summary.csv")).unwrap();
    assert!(summary.contains("\nseed,99\n"), "{summary}");
    assert_ne!(
        fs::read(a.join("windows.csv")).unwrap(),
        fs::read(c.join("windows.csv")).unwrap()
    );
}

#[test]
fn config_schema_violations_exit_2() {
    let dir = TempDir::new().unwrap();

    let out = run(dir.path(), &["simulate", "no-such-file.json"]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("cannot read config"), "{}", stderr(&out));

    let missing_eta0 = dir.path().join("bad1.json");
    fs::write(
        &missing_eta0,
        r#"{
  "traffic": {
    "inter_arrival": { "type": "exponential", "rate": 100.0 },
    "packet_size": { "type": "deterministic", "value": 0.01 }
  },
  "run": { "duration": 2000.0, "window": 10.0, "base_seed": 7 }
}"#,
    )
    .unwrap();
    let out = run(dir.path(), &["simulate", missing_eta0.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("traffic.eta0"), "{}", stderr(&out));

    let unknown = config(
        dir.path(),
        "bad2.json",
        r#""run": { "duration": 2000.0, "window": 10.0, "base_seed": 7 },
  "grid": 4"#,
    );
    let out = run(dir.path(), &["simulate", unknown.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("config schema violation"), "{}", stderr(&out));

    let zero_duration = config(
        dir.path(),
        "bad3.json",
        r#""run": { "duration": 0.0, "window": 10.0, "base_seed": 7 }"#,
    );
    let out = run(dir.path(), &["simulate", zero_duration.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("run.duration"), "{}", stderr(&out));
}

const COMPARE_RUN: &str = r#""run": { "duration": 20000.0, "window": 10.0, "base_seed": 11, "streams": 2 },
  "output_dir": "cfg_out",
  "comparisons": [
    { "statistic": "mean-loss" },
    { "statistic": "mean-loss", "window": 100.0 },
    { "statistic": "mean-idleness" },
    { "statistic": "any-loss-fraction" }
  ]"#;

#[test]
fn compare_pools_streams_and_reports() {
    let dir = TempDir::new().unwrap();
    let cfg = config(dir.path(), "cmp.json", COMPARE_RUN);
    let env_out = dir.path().join("env_out");
    let out = run_env(
        dir.path(),
        &["compare", cfg.to_str().unwrap()],
        &[("BUFFERLOSS_OUTPUT_DIR", env_out.to_str().unwrap())],
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(stdout(&out).contains("4 of 4 comparisons passed"), "{}", stdout(&out));

    // the environment override wins over the configured output_dir
    assert!(!dir.path().join("cfg_out").exists());
    let report = fs::read_to_string(env_out.join("report.csv")).unwrap();
    let mut lines = report.lines();
    assert_eq!(lines.next().unwrap(), REPORT_HEADER);
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 4);
    assert!(rows.iter().all(|r| r.contains(",true,")), "{report}");
    assert!(rows[0].starts_with("mean-loss@w=10,"), "{}", rows[0]);
    assert!(rows[1].starts_with("mean-loss@w=100,"), "{}", rows[1]);
}

#[test]
fn compare_exit_codes_separate_failure_from_misuse() {
    let dir = TempDir::new().unwrap();

    // zero tolerance is a legal tightening; the rows then fail and exit 1
    let zero = config(
        dir.path(),
        "zero.json",
        r#""run": { "duration": 2000.0, "window": 10.0, "base_seed": 11, "streams": 2 },
  "comparisons": [ { "statistic": "mean-loss", "max_z": 0.0 } ]"#,
    );
    let out = run(dir.path(), &["compare", zero.to_str().unwrap()]);
    assert_eq!(code(&out), 1, "{}", stderr(&out));
    assert!(stdout(&out).contains("FAIL mean-loss"), "{}", stdout(&out));

    // loosening a pinned tolerance is invalid input, detected before any run
    let loose = config(
        dir.path(),
        "loose.json",
        r#""run": { "duration": 2000.0, "window": 10.0, "base_seed": 11, "streams": 2 },
  "comparisons": [ { "statistic": "mean-loss", "max_z": 5.0 } ]"#,
    );
    let out = run(dir.path(), &["compare", loose.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("tolerances may only tighten"), "{}", stderr(&out));

    let empty = config(
        dir.path(),
        "empty.json",
        r#""run": { "duration": 2000.0, "window": 10.0, "base_seed": 11 }"#,
    );
    let out = run(dir.path(), &["compare", empty.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("comparison plan is empty"), "{}", stderr(&out));

    // the long-window variance law is refused outside its regime
    let short = config(
        dir.path(),
        "short.json",
        r#""run": { "duration": 2000.0, "window": 10.0, "base_seed": 11, "streams": 2 },
  "comparisons": [ { "statistic": "variance-ratio" } ]"#,
    );
    let out = run(dir.path(), &["compare", short.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("tau >= 10"), "{}", stderr(&out));
}

#[test]
fn correlate_single_lag_omits_slope() {
    let dir = TempDir::new().unwrap();
    let cfg = config(
        dir.path(),
        "corr.json",
        r#""run": { "duration": 4000.0, "window": 1.0, "base_seed": 3 },
  "output_dir": "corr_out",
  "correlation": { "t1": 1.0, "lags": [8.0] }"#,
    );
    let out = run(dir.path(), &["correlate", cfg.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(stdout(&out).contains("slope omitted"), "{}", stdout(&out));

    let csv = fs::read_to_string(dir.path().join("corr_out/correlate.csv")).unwrap();
    let header = csv.lines().next().unwrap();
    assert_eq!(header, format!("{LAG_COLUMNS},{PROVENANCE_COLUMNS}"));
    assert_eq!(csv.lines().count(), 2);
}

#[test]
fn correlate_grid_fits_critical_slope() {
    let dir = TempDir::new().unwrap();
    let cfg = config(
        dir.path(),
        "corr.json",
        r#""run": { "duration": 30000.0, "window": 1.0, "base_seed": 3, "streams": 2 },
  "output_dir": "corr_out",
  "correlation": { "t1": 1.0, "lags": [8.0, 16.0] }"#,
    );
    let out = run(dir.path(), &["correlate", cfg.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(
        stdout(&out).contains("log-log slope over 2 critical-regime lags"),
        "{}",
        stdout(&out)
    );

    let csv = fs::read_to_string(dir.path().join("corr_out/correlate.csv")).unwrap();
    let mut lines = csv.lines();
    let header = lines.next().unwrap();
    assert_eq!(header, format!("{LAG_COLUMNS},slope,slope_se,{PROVENANCE_COLUMNS}"));
    assert_eq!(lines.clone().count(), 2);
    assert!(lines.all(|l| l.contains(",critical,")), "{csv}");
}

#[test]
fn correlate_validates_the_lag_grid() {
    let dir = TempDir::new().unwrap();

    let none = config(
        dir.path(),
        "none.json",
        r#""run": { "duration": 4000.0, "window": 1.0, "base_seed": 3 }"#,
    );
    let out = run(dir.path(), &["correlate", none.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("missing \"correlation\" section"), "{}", stderr(&out));

    let short_lag = config(
        dir.path(),
        "short.json",
        r#""run": { "duration": 4000.0, "window": 1.0, "base_seed": 3 },
  "correlation": { "t1": 2.0, "lags": [1.0] }"#,
    );
    let out = run(dir.path(), &["correlate", short_lag.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("shorter than t1"), "{}", stderr(&out));

    let long_lag = config(
        dir.path(),
        "long.json",
        r#""run": { "duration": 4000.0, "window": 1.0, "base_seed": 3 },
  "correlation": { "t1": 1.0, "lags": [5000.0] }"#,
    );
    let out = run(dir.path(), &["correlate", long_lag.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("exceeds the measured span"), "{}", stderr(&out));
}
