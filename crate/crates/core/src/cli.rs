//! Command-line front end: presets, config files and output writing.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::channels::{ChannelModel, DistributionSpec};
use crate::error::{Error, Result};
use crate::harness::{
    self, default_cap, default_nu, run_martingale_oracle, threshold_for, trial_rng, window_for,
    with_workers, OraclePolicy, RunOptions, StreamPurpose, SweepRow, DEFAULT_TRIALS,
};
use crate::procedures::{run_traced, Procedure, ProcedureConfig, ProcedureKind};
use crate::scenario::{ChangePoint, Environment, Scenario};

pub const PRESETS: [&str; 4] = ["gaussian10", "exponential10", "laplace10", "beta10"];

/// Sparse shift vector shared by the presets. Channels 3, 6 and 9
/// (1-based) change.
pub const SHIFT_VECTOR: [f64; 10] = [0.0, 0.0, 0.1, 0.0, 0.0, 0.1, 0.0, 0.0, 1.0, 0.0];

/// `beta10` replaces the mild and strong shifts with these.
pub const BETA_MILD_SHIFT: f64 = 0.04;
pub const BETA_STRONG_SHIFT: f64 = 0.19;

/// One of the built-in K = 10 scenarios, with no change point set.
pub fn preset(name: &str) -> Result<Scenario> {
    let (pre, shifts) = match name {
        "gaussian10" => (DistributionSpec::gaussian(0.0, 1.0)?, SHIFT_VECTOR),
        "exponential10" => (DistributionSpec::exponential(1.0)?, SHIFT_VECTOR),
        "laplace10" => (DistributionSpec::laplace(0.0, 1.0)?, SHIFT_VECTOR),
        "beta10" => {
            let shifts = SHIFT_VECTOR.map(|s| {
                if s == 1.0 {
                    BETA_STRONG_SHIFT
                } else if s > 0.0 {
                    BETA_MILD_SHIFT
                } else {
                    0.0
                }
            });
            (DistributionSpec::beta(0.02, 1.98)?, shifts)
        }
        other => {
            return Err(Error::config(
                "scenario",
                format!("unknown preset {other:?}; available: {}", PRESETS.join(", ")),
            ))
        }
    };
    Scenario::from_shift_vector(name, pre, &shifts, ChangePoint::Never)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ChannelEntry {
    pre: DistributionSpec,
    /// Omitted for unaffected channels.
    #[serde(default)]
    post: Option<DistributionSpec>,
}

/// Scenario file contents. Either `channels` or `pre` + `shifts`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    #[serde(default)]
    label: Option<String>,
    #[serde(default)]
    channels: Option<Vec<ChannelEntry>>,
    #[serde(default)]
    pre: Option<DistributionSpec>,
    #[serde(default)]
    shifts: Option<Vec<f64>>,
}

fn parse_by_extension<T: for<'de> Deserialize<'de>>(path: &Path, text: &str) -> Result<T> {
    let field = path.display().to_string();
    match path.extension().and_then(|e| e.to_str()) {
        Some("json") => serde_json::from_str(text).map_err(|e| Error::config(field, e.to_string())),
        _ => toml::from_str(text).map_err(|e| Error::config(field, e.to_string())),
    }
}

/// Reads a scenario from a TOML or JSON file.
pub fn load_scenario_file(path: &Path) -> Result<Scenario> {
    let text = fs::read_to_string(path)?;
    let file: ScenarioFile = parse_by_extension(path, &text)?;
    let label = file.label.unwrap_or_else(|| {
        path.file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "scenario".into())
    });
    match (file.channels, file.pre, file.shifts) {
        (Some(entries), None, None) => {
            let channels = entries
                .into_iter()
                .enumerate()
                .map(|(i, e)| {
                    ChannelModel::new(e.pre, e.post.unwrap_or(e.pre)).map_err(|err| match err {
                        Error::Config { field, reason } => {
                            Error::config(format!("channels[{i}].{field}"), reason)
                        }
                        other => other,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Scenario::new(label, channels, ChangePoint::Never)
        }
        (None, Some(pre), Some(shifts)) => {
            Scenario::from_shift_vector(label, pre, &shifts, ChangePoint::Never)
        }
        _ => Err(Error::config(
            "scenario",
            "file must give either `channels` or both `pre` and `shifts`",
        )),
    }
}

/// A preset name or a path to a scenario file.
pub fn resolve_scenario(name_or_path: &str) -> Result<Scenario> {
    if PRESETS.contains(&name_or_path) {
        return preset(name_or_path);
    }
    let path = Path::new(name_or_path);
    if path.is_file() {
        return load_scenario_file(path);
    }
    Err(Error::config(
        "scenario",
        format!(
            "{name_or_path:?} is neither a preset ({}) nor a readable file",
            PRESETS.join(", ")
        ),
    ))
}

fn default_trials() -> usize {
    DEFAULT_TRIALS
}

/// Everything `run` needs. Serialized as TOML by `--dump-config`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub scenario: String,
    pub procedures: Vec<ProcedureKind>,
    pub gammas: Vec<f64>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cap: Option<u64>,
    #[serde(default)]
    pub seed: u64,
    pub output_dir: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nu: Option<u64>,
    #[serde(default)]
    pub nu_sweep: bool,
    #[serde(default)]
    pub trace: bool,
    #[serde(default)]
    pub timing: bool,
    #[serde(default)]
    pub pure_detector_cost: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub glr_split_stride: Option<usize>,
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::config("config", e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        parse_by_extension(path, &fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("RunConfig always serializes")
    }

    /// Checks every field and the scenario; returns the scenario.
    pub fn validate(&self) -> Result<Scenario> {
        if self.procedures.is_empty() {
            return Err(Error::config("procedures", "at least one procedure is required"));
        }
        if self.gammas.is_empty() {
            return Err(Error::config("gammas", "at least one gamma is required"));
        }
        for &g in &self.gammas {
            threshold_for(g)?;
        }
        if self.trials == 0 {
            return Err(Error::config("trials", "must be >= 1"));
        }
        if self.cap == Some(0) {
            return Err(Error::config("cap", "must be >= 1"));
        }
        if self.nu == Some(0) {
            return Err(Error::config("nu", "change point is 1-indexed and must be >= 1"));
        }
        if self.nu.is_some() && self.nu_sweep {
            return Err(Error::config("nu", "cannot combine --nu with --nu-sweep"));
        }
        if self.threads == Some(0) {
            return Err(Error::config("threads", "must be >= 1"));
        }
        if self.glr_split_stride == Some(0) {
            return Err(Error::config("glr_split_stride", "must be >= 1"));
        }
        let scenario = resolve_scenario(&self.scenario)?;
        for &kind in &self.procedures {
            if kind.uses_glr() && !scenario.is_unit_bounded() {
                return Err(Error::config(
                    "procedures",
                    format!("{kind} needs [0, 1] observations; use it with beta channels"),
                ));
            }
        }
        Ok(scenario)
    }

    pub fn run_options(&self) -> RunOptions {
        RunOptions {
            trials: self.trials,
            seed: self.seed,
            cap: self.cap,
            timing: self.timing || self.pure_detector_cost,
            pure_detector_cost: self.pure_detector_cost,
            nu: self.nu,
            nu_sweep: self.nu_sweep,
        }
    }
}

/// Output of [`execute_run`].
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub rows: Vec<SweepRow>,
    pub csv_path: PathBuf,
    pub trace_paths: Vec<PathBuf>,
}

/// Runs every procedure of `config` and writes `sweep.csv` (and traces).
pub fn execute_run(config: &RunConfig) -> Result<RunOutput> {
    let scenario = config.validate()?;
    let options = config.run_options();
    fs::create_dir_all(&config.output_dir)?;
    let rows = with_workers(config.threads, || -> Result<Vec<SweepRow>> {
        let mut rows = Vec::new();
        for &kind in &config.procedures {
            let mut template = ProcedureConfig::new(kind, 1.0, 2);
            if let Some(stride) = config.glr_split_stride {
                template.glr_split_stride = stride;
            }
            rows.extend(harness::sweep(template, &scenario, &config.gammas, &options)?);
        }
        Ok(rows)
    })??;
    let csv_path = config.output_dir.join("sweep.csv");
    harness::write_sweep_csv_file(&rows, &csv_path)?;
    let mut trace_paths = Vec::new();
    if config.trace {
        for row in &rows {
            trace_paths.push(write_trace(config, &scenario, row)?);
        }
    }
    Ok(RunOutput {
        rows,
        csv_path,
        trace_paths,
    })
}

/// Traces one delay trial for the row's procedure and threshold.
fn write_trace(config: &RunConfig, scenario: &Scenario, row: &SweepRow) -> Result<PathBuf> {
    let nu = row.delay_nu.max(1);
    let sc = scenario.with_change_point(ChangePoint::at(nu)?)?;
    let mut proc_config = ProcedureConfig::new(row.procedure, row.threshold, window_for(row.threshold));
    if let Some(stride) = config.glr_split_stride {
        proc_config.glr_split_stride = stride;
    }
    let mut procedure = Procedure::new(proc_config, &sc)?;
    let mut env = Environment::new(&sc);
    let mut rng = trial_rng(config.seed, StreamPurpose::Trace, 0);
    let cap = (nu - 1).saturating_add(config.cap.unwrap_or_else(|| default_cap(row.gamma)));
    let path = config
        .output_dir
        .join(format!("trace_{}_{}.csv", row.procedure, row.gamma));
    let mut out = std::io::BufWriter::new(fs::File::create(&path)?);
    run_traced(&mut procedure, &mut env, &mut rng, cap, &mut out)?;
    Ok(path)
}

#[derive(Parser, Debug)]
#[command(
    name = "bqcd",
    version,
    about = "Bandit quickest change detection: Monte-Carlo MTFA/delay sweeps"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sweep thresholds for one or more procedures and write sweep.csv.
    Run(RunArgs),
    /// Check the SR martingale property under pre-change sampling and
    /// write oracle.json.
    Oracle(OracleArgs),
    /// List the built-in scenarios.
    Presets,
    /// Parse and check a run config file.
    Validate {
        /// TOML run config (as written by `run --dump-config`).
        config: PathBuf,
    },
}

#[derive(Args, Debug)]
struct RunArgs {
    /// Run config file; flags given here override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Preset name or scenario file (TOML/JSON). Preset channels are
    /// numbered 1..=10 in the shift vector [0,0,0.1,0,0,0.1,0,0,1,0]:
    /// channels 3, 6 and 9 change.
    #[arg(long)]
    scenario: Option<String>,
    /// Comma-separated: UcbCusum, PaUcbCusum, PaUcbGlr, Greedy, RoundRobin,
    /// PaRoundRobin, PaRoundRobinGlr.
    #[arg(long, value_delimiter = ',')]
    procedures: Option<Vec<String>>,
    /// Comma-separated MTFA targets, each > 1. Threshold is b = ln(gamma).
    #[arg(long, value_delimiter = ',')]
    gammas: Option<Vec<f64>>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Change point for delay runs (1-indexed). Default 1, or 200*K for GLR
    /// procedures.
    #[arg(long)]
    nu: Option<u64>,
    /// Probe nu in {1, W/2, W, 2W, 5W} and report the worst delay.
    #[arg(long)]
    nu_sweep: bool,
    /// Per-trial step cap. Default 50*gamma.
    #[arg(long)]
    cap: Option<u64>,
    /// Also write one per-step trace CSV per row.
    #[arg(long)]
    trace: bool,
    /// Measure wall-clock cost per step (makes that column nondeterministic).
    #[arg(long)]
    timing: bool,
    /// Report cost per step excluding observation sampling. Implies --timing.
    #[arg(long)]
    pure_detector_cost: bool,
    /// Evaluate GLR splits every N samples instead of all of them.
    #[arg(long)]
    glr_split_stride: Option<usize>,
    /// Worker threads. Overrides BQCD_THREADS.
    #[arg(long)]
    threads: Option<usize>,
    /// Write the merged config to OUT/config.toml and exit without running.
    #[arg(long)]
    dump_config: bool,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum PolicyArg {
    RoundRobin,
    Ucb,
    Both,
}

#[derive(Args, Debug)]
struct OracleArgs {
    /// Preset name or scenario file.
    #[arg(long)]
    scenario: String,
    #[arg(long, default_value_t = 10_000)]
    paths: usize,
    /// Horizon n.
    #[arg(long)]
    horizon: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = PolicyArg::Both)]
    policy: PolicyArg,
    /// UCB restart window.
    #[arg(long, default_value_t = 17)]
    window: usize,
    /// Directory for oracle.json; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    threads: Option<usize>,
}

fn merge_run_args(args: RunArgs) -> Result<(RunConfig, bool)> {
    let base = match &args.config {
        Some(path) => Some(RunConfig::load(path)?),
        None => None,
    };
    let required = |name: &str| Error::config(name, format!("missing --{name} (no config file value)"));
    let procedures = match args.procedures {
        Some(list) => list
            .iter()
            .map(|s| s.parse())
            .collect::<Result<Vec<ProcedureKind>>>()?,
        None => base.as_ref().map(|b| b.procedures.clone()).ok_or_else(|| required("procedures"))?,
    };
    let config = RunConfig {
        scenario: args
            .scenario
            .or_else(|| base.as_ref().map(|b| b.scenario.clone()))
            .ok_or_else(|| required("scenario"))?,
        procedures,
        gammas: args
            .gammas
            .or_else(|| base.as_ref().map(|b| b.gammas.clone()))
            .ok_or_else(|| required("gammas"))?,
        trials: args
            .trials
            .or(base.as_ref().map(|b| b.trials))
            .unwrap_or(DEFAULT_TRIALS),
        cap: args.cap.or(base.as_ref().and_then(|b| b.cap)),
        seed: args.seed.or(base.as_ref().map(|b| b.seed)).unwrap_or(0),
        output_dir: args
            .out
            .or_else(|| base.as_ref().map(|b| b.output_dir.clone()))
            .ok_or_else(|| required("out"))?,
        nu: args.nu.or(base.as_ref().and_then(|b| b.nu)),
        nu_sweep: args.nu_sweep || base.as_ref().is_some_and(|b| b.nu_sweep),
        trace: args.trace || base.as_ref().is_some_and(|b| b.trace),
        timing: args.timing || base.as_ref().is_some_and(|b| b.timing),
        pure_detector_cost: args.pure_detector_cost || base.as_ref().is_some_and(|b| b.pure_detector_cost),
        threads: args.threads.or(base.as_ref().and_then(|b| b.threads)),
        glr_split_stride: args.glr_split_stride.or(base.as_ref().and_then(|b| b.glr_split_stride)),
    };
    Ok((config, args.dump_config))
}

fn cmd_run(args: RunArgs) -> Result<()> {
    let (config, dump) = merge_run_args(args)?;
    let scenario = config.validate()?;
    if dump {
        fs::create_dir_all(&config.output_dir)?;
        let path = config.output_dir.join("config.toml");
        fs::write(&path, config.to_toml_string())?;
        println!("wrote {}", path.display());
        return Ok(());
    }
    for &kind in &config.procedures {
        let nu = config.nu.unwrap_or_else(|| default_nu(kind, scenario.actions()));
        if !config.nu_sweep && nu > 1 {
            println!("{kind}: delay measured at nu = {nu}");
        }
    }
    let output = execute_run(&config)?;
    for row in &output.rows {
        println!("{}", row.summary());
    }
    println!("wrote {}", output.csv_path.display());
    for p in &output.trace_paths {
        println!("wrote {}", p.display());
    }
    Ok(())
}

fn cmd_oracle(args: OracleArgs) -> Result<()> {
    let scenario = resolve_scenario(&args.scenario)?;
    let policies = match args.policy {
        PolicyArg::RoundRobin => vec![OraclePolicy::RoundRobin],
        PolicyArg::Ucb => vec![OraclePolicy::Ucb { window: args.window }],
        PolicyArg::Both => vec![OraclePolicy::RoundRobin, OraclePolicy::Ucb { window: args.window }],
    };
    let reports = with_workers(args.threads, || {
        policies
            .iter()
            .map(|&p| run_martingale_oracle(&scenario, p, args.paths, args.horizon, args.seed))
            .collect::<Result<Vec<_>>>()
    })??;
    for r in &reports {
        println!(
            "{:?} n={} paths={}: mean(S_n)-n = {:.4} ± {:.4} ({}), dominance violations {}",
            r.policy,
            r.horizon,
            r.paths,
            r.deviation,
            r.stderr,
            if r.within_three_stderr { "within 3 stderr" } else { "OUTSIDE 3 stderr" },
            r.dominance_violations
        );
    }
    match args.out {
        Some(dir) => {
            fs::create_dir_all(&dir)?;
            let path = dir.join("oracle.json");
            harness::write_oracle_json(&reports, fs::File::create(&path)?)?;
            println!("wrote {}", path.display());
        }
        None => {
            harness::write_oracle_json(&reports, std::io::stdout().lock())?;
            println!();
        }
    }
    Ok(())
}

fn cmd_presets() -> Result<()> {
    for name in PRESETS {
        let sc = preset(name)?;
        let affected: Vec<String> = sc.affected().iter().map(|a| (a + 1).to_string()).collect();
        println!(
            "{name}\tK={} family={} affected channels (1-based): {}",
            sc.actions(),
            sc.families()[0],
            affected.join(",")
        );
    }
    Ok(())
}

fn cmd_validate(path: &Path) -> Result<()> {
    let config = RunConfig::load(path)?;
    config.validate()?;
    println!(
        "ok: {} procedure(s), {} gamma(s) on {}",
        config.procedures.len(),
        config.gammas.len(),
        config.scenario
    );
    Ok(())
}

/// Exit code for an error: 1 for bad input, 2 for failures during a run.
pub fn exit_code(err: &Error) -> i32 {
    if err.is_config() {
        1
    } else {
        2
    }
}

/// Parses `argv` (including the program name), runs, and returns the exit
/// code.
pub fn main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let result = match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Oracle(args) => cmd_oracle(args),
        Command::Presets => cmd_presets(),
        Command::Validate { config } => cmd_validate(&config),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
