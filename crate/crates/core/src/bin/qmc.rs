use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use qmc_estimator::explore::{
    run_search, run_sweep, sweep_to_csv, Axis, SearchSpec, SweepSpec, ValueSpec,
};
use qmc_estimator::purification::{
    absorption_stats, build_markov_chain, calibrate, curve_to_csv, monte_carlo,
    pulses_vs_loss_curve, Anchor, CalibrationSpec, FitSet, ModelParams,
};
use qmc_estimator::report::{model_from_config, policy_from_config};
use qmc_estimator::{full_report, ArchitectureConfig, Error};

const BASELINE_NAME: &str = "baseline-2048.toml";

/// Resource estimator for a nanophotonic quantum multicomputer.
///
/// Units: times in seconds (s) or days, losses in dB, local loss and
/// error rates as fractions, pulse counts in pulse slots.
///
/// Exit codes: 0 success, 2 usage, 3 I/O, 4 config, 5 pipeline, 6 spec.
#[derive(Parser)]
#[command(name = "qmc", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Full resource report for one config (report.txt, report.json).
    Estimate(EstimateArgs),
    /// Evaluate a 1-D or 2-D parameter grid and write CSV.
    Sweep(SweepArgs),
    /// Search parameter ranges for the best feasible config.
    Search(SearchArgs),
    /// Purification cost of one link (or a loss grid).
    Purify(PurifyArgs),
    /// Fit the base-pair model to (loss dB, mean pulses) anchors.
    Calibrate(CalibrateArgs),
}

#[derive(Args)]
struct ConfigArgs {
    /// Config TOML. Relative names are also looked up in QMC_CONFIG_DIR.
    /// Defaults to baseline-2048.toml there, or the built-in baseline.
    config: Option<PathBuf>,

    /// Directory searched for config files.
    #[arg(long, env = "QMC_CONFIG_DIR", value_name = "DIR")]
    config_dir: Option<PathBuf>,

    /// Override a numeric config key, KEY=VALUE in the key's units
    /// (e.g. p_lat=4.9e5 pulses, t_pulse=2e-10 s). Repeatable.
    #[arg(long = "override", short = 'o', value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

impl ConfigArgs {
    fn load(&self) -> Result<ArchitectureConfig, Error> {
        let base = match (&self.config, &self.config_dir) {
            (Some(path), dir) => {
                let found = match dir {
                    Some(dir) if !path.exists() && path.is_relative() => {
                        let joined = dir.join(path);
                        if joined.exists() {
                            joined
                        } else {
                            path.clone()
                        }
                    }
                    _ => path.clone(),
                };
                ArchitectureConfig::load(found)?
            }
            (None, Some(dir)) if dir.join(BASELINE_NAME).exists() => {
                ArchitectureConfig::load(dir.join(BASELINE_NAME))?
            }
            (None, _) => ArchitectureConfig::baseline(),
        };
        base.with_overrides(&self.overrides)
    }
}

#[derive(Args)]
struct EstimateArgs {
    #[command(flatten)]
    config: ConfigArgs,

    /// Directory for report.txt and report.json.
    #[arg(long, default_value = ".", value_name = "DIR")]
    out_dir: PathBuf,

    /// Print the JSON report instead of the text table.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    config: ConfigArgs,

    /// Sweep spec TOML ([[axis]] tables and a `record` list).
    #[arg(long, value_name = "FILE", conflicts_with_all = ["param", "values"])]
    spec: Option<PathBuf>,

    /// Config key to sweep (inline alternative to --spec).
    #[arg(long, requires = "values")]
    param: Option<String>,

    /// Values for --param: comma list, or START:STOP:STEPS[:log], in the key's units.
    #[arg(long, requires = "param")]
    values: Option<String>,

    /// Report field to record (e.g. workload.t_total_days). Repeatable.
    #[arg(long)]
    record: Vec<String>,

    /// Write CSV here instead of stdout.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SearchArgs {
    #[command(flatten)]
    config: ConfigArgs,

    /// Search spec TOML (objective, budget, [[range]], [[constraint]]).
    #[arg(long, value_name = "FILE")]
    spec: PathBuf,

    /// Write the evaluation trace CSV here.
    #[arg(long, value_name = "FILE")]
    trace: Option<PathBuf>,

    /// Write the best point's report.txt and report.json here.
    #[arg(long, value_name = "DIR")]
    out_dir: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Markov,
    Montecarlo,
}

#[derive(Args)]
struct PurifyArgs {
    /// Config supplying the model constants and purification policy.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Qubit-to-qubit link loss, dB. Defaults to the config's loss_W_dB.
    #[arg(long, value_name = "DB")]
    loss_db: Option<f64>,

    /// Local parity-gate infidelity (racetrack round-trip loss), fraction.
    #[arg(long, value_name = "FRACTION")]
    eps_local: Option<f64>,

    /// Target pair fidelity.
    #[arg(long, value_name = "FIDELITY")]
    target: Option<f64>,

    #[arg(long, value_enum, default_value = "markov")]
    mode: Mode,

    /// Monte Carlo trials.
    #[arg(long, required_if_eq("mode", "montecarlo"))]
    trials: Option<usize>,

    /// Monte Carlo master seed.
    #[arg(long, required_if_eq("mode", "montecarlo"))]
    seed: Option<u64>,

    /// Keep the surviving pair when one parity gate fails (Monte Carlo only).
    #[arg(long)]
    salvage: bool,

    /// Loss grid START:STOP:STEPS in dB; prints a CSV curve (markov mode).
    #[arg(long, value_name = "RANGE", conflicts_with = "loss_db")]
    grid: Option<String>,
}

#[derive(Args)]
struct CalibrateArgs {
    /// Anchor LOSS_DB:MEAN_PULSES. Repeatable.
    #[arg(long, value_name = "DB:PULSES", required = true)]
    anchor: Vec<String>,

    /// Target pair fidelity.
    #[arg(long, default_value_t = 0.995)]
    target: f64,

    /// Local parity-gate infidelity, fraction.
    #[arg(long, default_value_t = 0.0002)]
    eps_local: f64,

    /// Fit only kappa, keeping gamma and p_e from the config.
    #[arg(long)]
    kappa_only: bool,

    /// Purification rounds each anchor must need.
    #[arg(long, default_value_t = 1)]
    min_levels: usize,

    /// Config supplying the policy and starting constants.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
}

fn exit_code(e: &Error) -> u8 {
    match e.root() {
        Error::Io { .. } => 3,
        Error::Config(_) => 4,
        Error::Spec(_) => 6,
        _ => 5,
    }
}

fn read(path: &Path) -> Result<String, Error> {
    fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

fn write(path: &Path, text: &str) -> Result<(), Error> {
    fs::write(path, text).map_err(|e| Error::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

fn load_optional(path: &Option<PathBuf>) -> Result<ArchitectureConfig, Error> {
    match path {
        Some(p) => ArchitectureConfig::load(p),
        None => Ok(ArchitectureConfig::baseline()),
    }
}

fn write_reports(dir: &Path, report: &qmc_estimator::ResourceReport) -> Result<(), Error> {
    fs::create_dir_all(dir).map_err(|e| Error::Io {
        path: dir.display().to_string(),
        message: e.to_string(),
    })?;
    write(&dir.join("report.txt"), &report.to_text())?;
    write(&dir.join("report.json"), &report.to_json())
}

fn estimate(args: &EstimateArgs) -> Result<(), Error> {
    let cfg = args.config.load()?;
    let report = full_report(&cfg)?;
    write_reports(&args.out_dir, &report)?;
    if args.json {
        print!("{}", report.to_json());
    } else {
        print!("{}", report.to_text());
    }
    Ok(())
}

fn sweep(args: &SweepArgs) -> Result<(), Error> {
    let cfg = args.config.load()?;
    let spec = match (&args.spec, &args.param, &args.values) {
        (Some(path), _, _) => {
            let mut spec = SweepSpec::from_toml_str(&read(path)?)?;
            spec.record.extend(args.record.iter().cloned());
            spec
        }
        (None, Some(param), Some(values)) => {
            let values = if values.contains(':') {
                ValueSpec::Range(values.clone())
            } else {
                ValueSpec::List(
                    values
                        .split(',')
                        .filter(|s| !s.trim().is_empty())
                        .map(|s| {
                            s.trim()
                                .parse()
                                .map_err(|_| Error::Spec(format!("`{s}` is not a number")))
                        })
                        .collect::<Result<_, _>>()?,
                )
            };
            SweepSpec {
                axes: vec![Axis {
                    param: param.clone(),
                    values,
                    linked: vec![],
                }],
                record: args.record.clone(),
            }
        }
        _ => return Err(Error::Spec("give --spec or --param with --values".into())),
    };
    let rows = run_sweep(&cfg, &spec)?;
    let csv = sweep_to_csv(&spec, &rows)?;
    match &args.out {
        Some(path) => write(path, &csv),
        None => {
            print!("{csv}");
            Ok(())
        }
    }
}

fn search(args: &SearchArgs) -> Result<(), Error> {
    let cfg = args.config.load()?;
    let spec = SearchSpec::from_toml_str(&read(&args.spec)?)?;
    let outcome = run_search(&cfg, &spec)?;
    if let Some(path) = &args.trace {
        write(path, &outcome.trace_csv()?)?;
    }
    if let (Some(dir), Some(report)) = (&args.out_dir, &outcome.best_report) {
        write_reports(dir, report)?;
    }
    println!("{}", outcome.summary());
    Ok(())
}

fn purify(args: &PurifyArgs) -> Result<(), Error> {
    let cfg = load_optional(&args.config)?;
    let mut policy = policy_from_config(&cfg);
    policy.salvage = args.salvage;
    let mut model = model_from_config(&cfg)?;
    if let Some(eps) = args.eps_local {
        model = qmc_estimator::purification::BasePairModel::new(model.params, eps)?;
    }
    let target = args.target.unwrap_or(cfg.f_target);

    if let Some(grid) = &args.grid {
        let losses = ValueSpec::Range(grid.clone()).expand()?;
        let curve = pulses_vs_loss_curve(&losses, &model, &policy, target)?;
        print!("{}", curve_to_csv(&curve));
        return Ok(());
    }

    let loss = args.loss_db.unwrap_or(cfg.loss_w_db);
    let mode = match args.mode {
        Mode::Markov => "markov",
        Mode::Montecarlo => "montecarlo",
    };
    println!("mode={mode}");
    println!("loss_db={loss}");
    println!("eps_local={}", model.eps_local);
    println!("target={target}");

    let result = match args.mode {
        Mode::Markov => build_markov_chain(&policy, &model, loss, target).and_then(|chain| {
            let stats = absorption_stats(&chain)?;
            Ok((chain.levels(), stats, None))
        }),
        Mode::Montecarlo => {
            let trials = args.trials.expect("clap requires --trials");
            let seed = args.seed.expect("clap requires --seed");
            monte_carlo(&policy, &model, loss, target, trials, seed).map(|mc| {
                (0, mc.stats.clone(), Some(mc))
            })
        }
    };
    match result {
        Ok((levels, stats, mc)) => {
            println!("status=ok");
            if matches!(args.mode, Mode::Markov) {
                println!("levels={levels}");
            }
            println!("mean_pulses={}", stats.mean);
            println!("rms_pulses={}", stats.rms);
            println!("final_fidelity={}", stats.final_fidelity);
            if let Some(mc) = mc {
                println!("trials={}", mc.trials);
                println!("seed={}", args.seed.unwrap_or_default());
                println!("std_error={}", mc.std_error);
                println!("beyond_cap={}", mc.beyond_cap);
            }
            Ok(())
        }
        Err(e) => match e.root() {
            Error::Saturation {
                saturated, levels, ..
            } => {
                println!("status=saturated");
                println!("levels={levels}");
                println!("saturated_fidelity={saturated}");
                Ok(())
            }
            _ => Err(e),
        },
    }
}

fn parse_anchor(text: &str) -> Result<Anchor, Error> {
    let bad = || Error::Spec(format!("anchor `{text}` is not LOSS_DB:MEAN_PULSES"));
    let (loss, mean) = text.split_once(':').ok_or_else(bad)?;
    Ok(Anchor {
        loss_db: loss.trim().parse().map_err(|_| bad())?,
        mean_pulses: mean.trim().parse().map_err(|_| bad())?,
    })
}

fn run_calibrate(args: &CalibrateArgs) -> Result<(), Error> {
    let cfg = load_optional(&args.config)?;
    let anchors = args
        .anchor
        .iter()
        .map(|a| parse_anchor(a))
        .collect::<Result<Vec<_>, _>>()?;
    let mut spec = CalibrationSpec::new(anchors, args.target, args.eps_local);
    spec.policy = policy_from_config(&cfg);
    spec.start = ModelParams {
        kappa: cfg.purification.kappa,
        gamma: cfg.purification.gamma,
        p_e: cfg.purification.p_e,
    };
    if args.kappa_only {
        spec.fit = FitSet::KAPPA_ONLY;
    }
    spec.min_levels = args.min_levels;
    let cal = calibrate(&spec)?;
    println!("{}", cal.to_json());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Estimate(a) => estimate(a),
        Command::Sweep(a) => sweep(a),
        Command::Search(a) => search(a),
        Command::Purify(a) => purify(a),
        Command::Calibrate(a) => run_calibrate(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("qmc: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
