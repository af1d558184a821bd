//! Command-line front end: run simulated experiments, analyze trial logs,
//! print exact oracle statistics, classify strategies, and export
//! per-setting-pair rate tables.

use std::fs;
use std::io::Cursor;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use eprb::analysis::{
    analyze, classify, estimate_joint, white_box_flags, AnalysisError, AnalysisReport, Verdict,
    VerdictStatus,
};
use eprb::core::{rat, CoreError, ExperimentConfig, Setting, TrialLog, DEFAULT_ANGLES_DEG};
use eprb::harness::{
    parse_angles, parse_settings_dist, run_experiment, ConfigOverlay, HarnessError,
};
use eprb::oracle::{
    enumerate_plans, exact_quantum_stats, exact_stats, exact_stats_from_table, OracleError,
};
use eprb::strategies::{Strategy, StrategyError};

#[derive(Parser)]
#[command(name = "eprb", version, about = "Two-wing correlation experiment simulator and analyzer")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a strategy and write the trial log as CSV
    Run(RunArgs),
    /// Estimate, test, and classify from a trial log
    Analyze(AnalyzeArgs),
    /// Print exact statistics for a white-box strategy
    Oracle(OracleArgs),
    /// Classify a strategy analytically, without running it
    Classify(ClassifyArgs),
    /// Export per-setting-pair outcome rates as tidy CSV
    Report(ReportArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Flat key=value config file; flags override it
    #[arg(long)]
    config: Option<PathBuf>,
    /// Strategy spec, e.g. quantum, plan:+-+, mixture:uniform
    #[arg(long)]
    strategy: Option<String>,
    /// Number of trials
    #[arg(long)]
    n: Option<u64>,
    /// Master seed
    #[arg(long)]
    seed: Option<u64>,
    /// Polarizer angles "a,b,c" in degrees
    #[arg(long)]
    angles: Option<String>,
    /// Relative setting weights "w:w:w" (both wings) or "w:w:w,w:w:w"
    #[arg(long = "settings-dist")]
    settings_dist: Option<String>,
    /// Verdict threshold in standard errors
    #[arg(long)]
    z: Option<f64>,
    /// Record hidden states in the log
    #[arg(long = "trace-lambda")]
    trace_lambda: bool,
    /// Output CSV path; a sidecar <out>.config.json is written next to it
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Trial log CSV produced by `run`
    log: PathBuf,
    /// Strategy spec for white-box classification (default: from the sidecar)
    #[arg(long)]
    strategy: Option<String>,
    /// Verdict threshold in standard errors (default: sidecar, then 5)
    #[arg(long)]
    z: Option<f64>,
    /// Polarizer angles "a,b,c" (default: sidecar, then the defaults)
    #[arg(long)]
    angles: Option<String>,
    /// Write the JSON report here instead of standard output
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct OracleArgs {
    /// Strategy spec
    #[arg(long)]
    strategy: String,
    /// Polarizer angles "a,b,c" in degrees
    #[arg(long)]
    angles: Option<String>,
}

#[derive(Args)]
struct ClassifyArgs {
    /// Strategy spec
    #[arg(long)]
    strategy: String,
    /// Polarizer angles "a,b,c" in degrees
    #[arg(long)]
    angles: Option<String>,
}

#[derive(Args)]
struct ReportArgs {
    /// Trial log CSV produced by `run`
    log: PathBuf,
    /// Write the rate table here instead of standard output
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Usage errors exit 2, data errors 3; an analysis whose headline verdicts
/// are all Inconclusive exits 4.
enum CliError {
    Usage(String),
    Data(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Data(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Data(m) => m,
        }
    }
}

impl From<StrategyError> for CliError {
    fn from(e: StrategyError) -> CliError {
        CliError::Usage(e.to_string())
    }
}

impl From<OracleError> for CliError {
    fn from(e: OracleError) -> CliError {
        CliError::Usage(e.to_string())
    }
}

impl From<AnalysisError> for CliError {
    fn from(e: AnalysisError) -> CliError {
        CliError::Data(e.to_string())
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> CliError {
        match e {
            CoreError::Csv { .. } | CoreError::EmptyLog => CliError::Data(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<HarnessError> for CliError {
    fn from(e: HarnessError) -> CliError {
        match e {
            HarnessError::Config(c) => c.into(),
            HarnessError::Strategy(s) => s.into(),
            HarnessError::EmptyLog => CliError::Data(HarnessError::EmptyLog.to_string()),
            usage => CliError::Usage(usage.to_string()),
        }
    }
}

fn read_file(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path)
        .map_err(|e| CliError::Data(format!("cannot read {}: {e}", path.display())))
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents)
        .map_err(|e| CliError::Data(format!("cannot write {}: {e}", path.display())))
}

fn sidecar_path(out: &Path) -> PathBuf {
    out.with_extension("config.json")
}

fn resolve_angles(flag: &Option<String>, fallback: [f64; 3]) -> Result<[f64; 3], CliError> {
    match flag {
        Some(s) => parse_angles(s).map_err(CliError::Usage),
        None => Ok(fallback),
    }
}

fn pretty(value: &Value) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("report JSON serializes");
    text.push('\n');
    text
}

// ---------------------------------------------------------------------------
// run
// ---------------------------------------------------------------------------

fn overlay_from_flags(args: &RunArgs) -> Result<ConfigOverlay, CliError> {
    let mut overlay = ConfigOverlay {
        strategy: args.strategy.clone(),
        n: args.n,
        seed: args.seed,
        z: args.z,
        out: args.out.as_ref().map(|p| p.to_string_lossy().into_owned()),
        ..ConfigOverlay::default()
    };
    if let Some(s) = &args.angles {
        overlay.angles = Some(parse_angles(s).map_err(CliError::Usage)?);
    }
    if let Some(s) = &args.settings_dist {
        overlay.settings_dist = Some(parse_settings_dist(s).map_err(CliError::Usage)?);
    }
    // The bare flag can only turn tracing on; absence defers to the file.
    if args.trace_lambda {
        overlay.trace_lambda = Some(true);
    }
    Ok(overlay)
}

fn config_echo(config: &ExperimentConfig) -> Value {
    json!({
        "strategy": config.strategy_spec,
        "n": config.n_trials,
        "seed": config.seed,
        "settings_dist": config.setting_distribution,
        "angles_deg": config.angles_deg.unwrap_or(DEFAULT_ANGLES_DEG),
        "trace_lambda": config.lambda_trace,
        "z": config.significance_z,
        "digest": config.digest(),
    })
}

fn cmd_run(args: RunArgs) -> Result<u8, CliError> {
    let file_overlay = match &args.config {
        Some(path) => ConfigOverlay::from_key_values(&read_file(path)?)?,
        None => ConfigOverlay::default(),
    };
    let overlay = overlay_from_flags(&args)?.over(file_overlay);
    let out = PathBuf::from(overlay.out.clone().ok_or_else(|| {
        CliError::Usage("missing --out (or out= in the config file)".into())
    })?);
    let config = overlay.into_config()?;
    let log = run_experiment(&config)?;
    write_file(&out, &log.to_csv_string())?;
    write_file(&sidecar_path(&out), &pretty(&config_echo(&config)))?;
    println!(
        "wrote {} trials to {} (digest {})",
        config.n_trials,
        out.display(),
        log.config_digest
    );
    Ok(0)
}

// ---------------------------------------------------------------------------
// analyze
// ---------------------------------------------------------------------------

#[derive(Default)]
struct Sidecar {
    strategy: Option<String>,
    z: Option<f64>,
    angles: Option<[f64; 3]>,
    seed: Option<u64>,
    digest: Option<String>,
}

fn read_sidecar(log_path: &Path) -> Sidecar {
    let path = sidecar_path(log_path);
    let Ok(text) = fs::read_to_string(&path) else {
        return Sidecar::default();
    };
    let Ok(value) = serde_json::from_str::<Value>(&text) else {
        eprintln!("warning: ignoring malformed sidecar {}", path.display());
        return Sidecar::default();
    };
    let angles = value["angles_deg"].as_array().and_then(|a| {
        let parsed: Vec<f64> = a.iter().filter_map(Value::as_f64).collect();
        <[f64; 3]>::try_from(parsed).ok()
    });
    Sidecar {
        strategy: value["strategy"].as_str().map(str::to_string),
        z: value["z"].as_f64(),
        angles,
        seed: value["seed"].as_u64(),
        digest: value["digest"].as_str().map(str::to_string),
    }
}

fn all_headlines_inconclusive(report: &AnalysisReport) -> bool {
    [
        report.same_setting_agreement.verdict.status,
        report.bell_threefilter.status,
        report.bell_original.status,
        report.no_signaling.overall().status,
    ]
    .iter()
    .all(|s| *s == VerdictStatus::Inconclusive)
}

fn cmd_analyze(args: AnalyzeArgs) -> Result<u8, CliError> {
    let text = read_file(&args.log)?;
    let trials = TrialLog::read_csv(Cursor::new(text.as_bytes()))?;
    let sidecar = read_sidecar(&args.log);

    let spec = args.strategy.clone().or(sidecar.strategy);
    let strategy: Option<Strategy> = spec.as_deref().map(str::parse).transpose()?;
    let z = args.z.or(sidecar.z).unwrap_or(5.0);
    let angles = resolve_angles(&args.angles, sidecar.angles.unwrap_or(DEFAULT_ANGLES_DEG))?;
    let log = TrialLog::new(
        trials,
        sidecar.digest.unwrap_or_else(|| "unknown".into()),
        sidecar.seed.unwrap_or(0),
    );

    let report = analyze(&log, strategy.as_ref(), &Setting::triple(angles), z)?;
    for line in report.summary_lines() {
        println!("{line}");
    }
    let rendered = pretty(&report.to_json());
    match &args.out {
        Some(path) => {
            write_file(path, &rendered)?;
            println!("report written to {}", path.display());
        }
        None => print!("{rendered}"),
    }
    if all_headlines_inconclusive(&report) {
        Ok(4)
    } else {
        Ok(0)
    }
}

// ---------------------------------------------------------------------------
// oracle
// ---------------------------------------------------------------------------

fn cmd_oracle(args: OracleArgs) -> Result<u8, CliError> {
    let strategy: Strategy = args.strategy.parse()?;
    let angles = resolve_angles(&args.angles, DEFAULT_ANGLES_DEG)?;
    let value = match &strategy {
        Strategy::Quantum => exact_quantum_stats(angles)?.to_json(),
        Strategy::FixedPlan(plan) => {
            let plans = enumerate_plans();
            let mut weights = [rat(0, 1); 8];
            let slot = plans.iter().position(|p| p == plan).expect("plan is canonical");
            weights[slot] = rat(1, 1);
            exact_stats(&weights)?.to_json()
        }
        Strategy::PlanMixture(m) => exact_stats(m.weights())?.to_json(),
        _ => {
            let table = strategy.conditional_table(&Setting::triple(angles))?;
            exact_stats_from_table(&table).to_json()
        }
    };
    print!("{}", pretty(&value));
    Ok(0)
}

// ---------------------------------------------------------------------------
// classify
// ---------------------------------------------------------------------------

fn cmd_classify(args: ClassifyArgs) -> Result<u8, CliError> {
    let strategy: Strategy = args.strategy.parse()?;
    let angles = resolve_angles(&args.angles, DEFAULT_ANGLES_DEG)?;
    let flags = strategy
        .conditional_table(&Setting::triple(angles))
        .ok()
        .map(|t| white_box_flags(&t));
    // Analytic classification: there is no data, so the empirical verdict
    // slot is a neutral placeholder.
    let no_data = Verdict {
        status: VerdictStatus::Inconclusive,
        statistic: 0.0,
        z_score: 0.0,
        threshold_z: 0.0,
        n_effective: 0,
    };
    let report = classify(&strategy.kind(), flags.as_ref(), &no_data);
    println!(
        "{}: {:?}{}",
        strategy,
        report.region,
        if report.partial { " (partial)" } else { "" }
    );
    let value = json!({
        "strategy": strategy.to_string(),
        "region": format!("{:?}", report.region),
        "strongly_local": report.strongly_local,
        "deterministic": report.deterministic,
        "parameter_independent": report.parameter_independent,
        "outcome_independent": report.outcome_independent,
        "signal_local": flags.as_ref().map(|f| f.signal_local),
        "partial": report.partial,
        "notes": report.notes,
    });
    print!("{}", pretty(&value));
    Ok(0)
}

// ---------------------------------------------------------------------------
// report
// ---------------------------------------------------------------------------

fn cmd_report(args: ReportArgs) -> Result<u8, CliError> {
    let text = read_file(&args.log)?;
    let trials = TrialLog::read_csv(Cursor::new(text.as_bytes()))?;
    let log = TrialLog::new(trials, String::new(), 0);
    let joint = estimate_joint(&log)?;
    let mut csv = String::from("setting1,setting2,n,p_pp,p_pm,p_mp,p_mm,match_rate\n");
    for (s1, s2, cell) in joint.pairs() {
        let match_rate = cell.p[0][0] + cell.p[1][1];
        csv.push_str(&format!(
            "{s1},{s2},{},{},{},{},{},{}\n",
            cell.n, cell.p[0][0], cell.p[0][1], cell.p[1][0], cell.p[1][1], match_rate
        ));
    }
    match &args.out {
        Some(path) => write_file(path, &csv)?,
        None => print!("{csv}"),
    }
    Ok(0)
}

fn dispatch(command: Command) -> Result<u8, CliError> {
    match command {
        Command::Run(args) => cmd_run(args),
        Command::Analyze(args) => cmd_analyze(args),
        Command::Oracle(args) => cmd_oracle(args),
        Command::Classify(args) => cmd_classify(args),
        Command::Report(args) => cmd_report(args),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}
