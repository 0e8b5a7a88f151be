use std::collections::HashMap;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use qmc_estimator::explore::{run_search, run_sweep, sweep_to_csv, SearchSpec, SweepSpec};
use qmc_estimator::purification::{
    absorption_stats, build_markov_chain, calibrate, monte_carlo, Anchor, CalibrationSpec,
};
use qmc_estimator::report::{model_from_config, policy_from_config};
use qmc_estimator::{full_report, ArchitectureConfig};

const BASELINE: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/configs/baseline-2048.toml");

fn qmc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qmc"))
        .args(args)
        .env_remove("QMC_CONFIG_DIR")
        .output()
        .expect("qmc runs")
}

fn stdout(out: &Output) -> String {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn key_values(text: &str) -> HashMap<String, String> {
    text.lines()
        .filter_map(|l| l.split_once('='))
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect()
}

fn num(map: &HashMap<String, String>, key: &str) -> f64 {
    map[key].parse().unwrap()
}

#[test]
fn estimate_writes_library_reports() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().to_str().unwrap();
    let text = stdout(&qmc(&[
        "estimate", BASELINE, "--override", "p_lat=4.9e5", "--override", "capacity=119836",
        "--out-dir", out_dir,
    ]));
    let cfg = ArchitectureConfig::load(BASELINE)
        .unwrap()
        .with_overrides(&["p_lat=4.9e5", "capacity=119836"])
        .unwrap();
    let report = full_report(&cfg).unwrap();
    assert_eq!(text, report.to_text());
    assert_eq!(fs::read_to_string(dir.path().join("report.txt")).unwrap(), report.to_text());
    assert_eq!(fs::read_to_string(dir.path().join("report.json")).unwrap(), report.to_json());
    let days = report.workload.t_total_days;
    assert!((409.0..=411.0).contains(&days), "{days}");
}

#[test]
fn estimate_doubling_pulse_doubles_json_times() {
    let dir = tempfile::tempdir().unwrap();
    let run = |extra: &str| {
        let sub = dir.path().join(extra.replace(['=', '.'], "_"));
        stdout(&qmc(&[
            "estimate", BASELINE, "-o", "p_lat=4.9e5", "-o", "capacity=119836", "-o", extra,
            "--out-dir", sub.to_str().unwrap(), "--json",
        ]))
    };
    let a: serde_json::Value = serde_json::from_str(&run("t_pulse=1e-10")).unwrap();
    let b: serde_json::Value = serde_json::from_str(&run("t_pulse=2e-10")).unwrap();
    for path in qmc_estimator::report::TIME_FIELDS {
        let get = |v: &serde_json::Value| {
            path.split('.').fold(v, |v, k| &v[k]).as_f64().unwrap()
        };
        assert_eq!(get(&b), 2.0 * get(&a), "{path}");
    }
}

#[test]
fn exit_codes_are_distinct() {
    let dir = tempfile::tempdir().unwrap();
    let out = qmc(&["estimate", "/no/such/config.toml"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("/no/such/config.toml"));

    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "H = \"wide\"\n").unwrap();
    assert_eq!(qmc(&["estimate", bad.to_str().unwrap()]).status.code(), Some(4));

    let out_dir = dir.path().to_str().unwrap();
    let out = qmc(&[
        "estimate", BASELINE, "-o", "loss_W_dB=5", "-o", "loss_local_roundtrip=0.002",
        "--out-dir", out_dir,
    ]);
    assert_eq!(out.status.code(), Some(5));

    let out = qmc(&["sweep", BASELINE, "--param", "nope", "--values", "1,2"]);
    assert_eq!(out.status.code(), Some(6));

    assert_eq!(qmc(&["purify", "--mode", "montecarlo"]).status.code(), Some(2));
}

#[test]
fn infeasible_config_still_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    let text = stdout(&qmc(&[
        "estimate", BASELINE, "-o", "d=15", "-o", "p_lat=4.9e5", "-o", "capacity=119836",
        "--out-dir", dir.path().to_str().unwrap(),
    ]));
    assert!(text.contains("lattice-too-short"));
}

#[test]
fn config_dir_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    fs::copy(BASELINE, dir.path().join("baseline-2048.toml")).unwrap();
    fs::write(
        dir.path().join("wide.toml"),
        fs::read_to_string(BASELINE).unwrap().replace("H = 65536", "H = 131072"),
    )
    .unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_qmc"))
        .args(["estimate", "wide.toml", "--json", "-o", "p_lat=4.9e5", "--out-dir"])
        .arg(dir.path().join("out"))
        .env("QMC_CONFIG_DIR", dir.path())
        .output()
        .unwrap();
    let json: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(json["config"]["H"], 131072);
}

#[test]
fn purify_markov_matches_library() {
    let map = key_values(&stdout(&qmc(&[
        "purify", "--loss-db", "0.1", "--eps-local", "0.0002", "--target", "0.995", "--mode", "markov",
    ])));
    let cfg = ArchitectureConfig::baseline();
    let model = model_from_config(&cfg).unwrap();
    let chain = build_markov_chain(&policy_from_config(&cfg), &model, 0.1, 0.995).unwrap();
    let stats = absorption_stats(&chain).unwrap();
    assert_eq!(map["status"], "ok");
    assert_eq!(num(&map, "mean_pulses"), stats.mean);
    assert_eq!(num(&map, "rms_pulses"), stats.rms);
    assert_eq!(num(&map, "final_fidelity"), stats.final_fidelity);
    assert!((num(&map, "mean_pulses") / 111.0 - 1.0).abs() <= 0.25);
}

#[test]
fn purify_montecarlo_is_reproducible() {
    let args = [
        "purify", "--loss-db", "0.1", "--eps-local", "0.0002", "--target", "0.995", "--mode",
        "montecarlo", "--trials", "100000", "--seed", "7",
    ];
    let a = stdout(&qmc(&args));
    assert_eq!(a, stdout(&qmc(&args)));
    let cfg = ArchitectureConfig::baseline();
    let mc = monte_carlo(
        &policy_from_config(&cfg),
        &model_from_config(&cfg).unwrap(),
        0.1,
        0.995,
        100_000,
        7,
    )
    .unwrap();
    let map = key_values(&a);
    assert_eq!(num(&map, "mean_pulses"), mc.stats.mean);
    assert_eq!(num(&map, "std_error"), mc.std_error);
}

#[test]
fn purify_reports_saturation() {
    let map = key_values(&stdout(&qmc(&[
        "purify", "--loss-db", "0.4", "--eps-local", "0.002", "--target", "0.995",
    ])));
    assert_eq!(map["status"], "saturated");
    assert!(num(&map, "saturated_fidelity") < 0.995);
}

#[test]
fn purify_grid_prints_curve() {
    let text = stdout(&qmc(&["purify", "--grid", "0.1:0.4:4"]));
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("loss_db,mean_pulses,rms_pulses,final_fidelity"));
    assert_eq!(lines.count(), 4);
}

#[test]
fn sweep_matches_library() {
    let dir = tempfile::tempdir().unwrap();
    let spec_path = dir.path().join("sweep.toml");
    let spec_text = r#"
record = ["workload.t_total_days", "timing.t_lat_s"]
[[axis]]
param = "loss_W_dB"
values = "0.05:0.5:4"
"#;
    fs::write(&spec_path, spec_text).unwrap();
    let csv = stdout(&qmc(&[
        "sweep", BASELINE, "--spec", spec_path.to_str().unwrap(), "-o", "capacity=119836",
    ]));
    let cfg = ArchitectureConfig::load(BASELINE)
        .unwrap()
        .with_overrides(&["capacity=119836"])
        .unwrap();
    let spec = SweepSpec::from_toml_str(spec_text).unwrap();
    let expected = sweep_to_csv(&spec, &run_sweep(&cfg, &spec).unwrap()).unwrap();
    assert_eq!(csv, expected);
    assert_eq!(csv.lines().count(), 5);
}

#[test]
fn sweep_inline_and_to_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s.csv");
    stdout(&qmc(&[
        "sweep", BASELINE, "--param", "d", "--values", "13,14,15", "--record", "capacity.capacity",
        "-o", "p_lat=4.9e5", "--out", out.to_str().unwrap(),
    ]));
    let text = fs::read_to_string(out).unwrap();
    assert_eq!(text.lines().count(), 4);
    assert!(text.lines().nth(3).unwrap().contains(",infeasible,"));
}

#[test]
fn search_matches_library() {
    let dir = tempfile::tempdir().unwrap();
    let spec_path = dir.path().join("search.toml");
    let spec_text = r#"
objective = "minimize_total_time"
budget = 9
[[range]]
param = "t_pulse"
min = 1e-10
max = 3e-10
[[range]]
param = "factory.toffoli_braid_depth"
min = 12
max = 16
[[constraint]]
field = "workload.t_total_days"
op = "<="
value = 2000
"#;
    fs::write(&spec_path, spec_text).unwrap();
    let trace = dir.path().join("trace.csv");
    let best_dir = dir.path().join("best");
    let out = stdout(&qmc(&[
        "search", BASELINE, "--spec", spec_path.to_str().unwrap(), "-o", "p_lat=4.9e5", "-o",
        "capacity=119836", "--trace", trace.to_str().unwrap(), "--out-dir", best_dir.to_str().unwrap(),
    ]));
    let cfg = ArchitectureConfig::load(BASELINE)
        .unwrap()
        .with_overrides(&["p_lat=4.9e5", "capacity=119836"])
        .unwrap();
    let outcome = run_search(&cfg, &SearchSpec::from_toml_str(spec_text).unwrap()).unwrap();
    assert_eq!(out.trim_end(), outcome.summary());
    assert_eq!(fs::read_to_string(&trace).unwrap(), outcome.trace_csv().unwrap());
    assert_eq!(
        fs::read_to_string(best_dir.join("report.json")).unwrap(),
        outcome.best_report.unwrap().to_json()
    );
}

#[test]
fn search_without_feasible_point_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let spec_path = dir.path().join("search.toml");
    fs::write(
        &spec_path,
        "objective = \"minimize_qubits\"\nbudget = 2\n[[range]]\nparam = \"t_pulse\"\nmin = 1e-10\nmax = 2e-10\n\
         [[constraint]]\nfield = \"workload.t_total_days\"\nop = \"<=\"\nvalue = 1\n",
    )
    .unwrap();
    let out = stdout(&qmc(&[
        "search", BASELINE, "--spec", spec_path.to_str().unwrap(), "-o", "p_lat=4.9e5", "-o",
        "capacity=119836",
    ]));
    assert!(out.starts_with("no feasible point"));
}

#[test]
fn calibrate_prints_library_json() {
    let out = stdout(&qmc(&[
        "calibrate", "--anchor", "0.1:111", "--anchor", "0.4:1068", "--target", "0.995",
        "--eps-local", "0.0002",
    ]));
    let spec = CalibrationSpec::new(
        vec![
            Anchor { loss_db: 0.1, mean_pulses: 111.0 },
            Anchor { loss_db: 0.4, mean_pulses: 1068.0 },
        ],
        0.995,
        0.0002,
    );
    let cal = calibrate(&spec).unwrap();
    assert_eq!(out.trim_end(), cal.to_json());
    let json: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert!(json["kappa"].is_number());
    assert_eq!(json["residuals"].as_array().unwrap().len(), 2);
}

#[test]
fn help_documents_units() {
    let text = stdout(&qmc(&["purify", "--help"]));
    for needle in ["dB", "fraction", "--trials", "--seed", "--eps-local"] {
        assert!(text.contains(needle), "{needle}");
    }
    let text = stdout(&qmc(&["--help"]));
    assert!(text.contains("Exit codes"));
    assert!(Path::new(BASELINE).exists());
}
