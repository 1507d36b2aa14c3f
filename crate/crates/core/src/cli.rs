//! Command-line interface.
//!
//! Every command computes all of its outputs in memory, then writes each file
//! to a temporary name and renames it into place, so a failed run leaves no
//! partial artifacts. Each output directory receives a `manifest.json` that
//! records the seed, input digests and parameters; `replay` re-runs a manifest.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::effects::{counterfactual_reallocation, ReallocationPlan, RoundingMode};
use crate::error::Error;
use crate::model::CrowdWeights;
use crate::model::{Criterion, EstimateSample, TreatmentCondition};
use crate::plot::{render_svg, DensityPlot, PlotGroup};
use crate::replicate::report::trim;
use crate::replicate::{
    analyze_dataset, bundled_counterfactuals, load_bundled_tables, parse_samples, render_analysis_text, render_csv,
    render_text, replication_report, sha256_hex, write_samples,
};
use crate::sim::{monte_carlo_effects, run_experiment_with_seed, ExperimentConfig};
use crate::stats::{kde, BootstrapConfig, KdeOptions};
use crate::weights::{expected_crowd_sq_error, optimal_weights, MomentModel, SolverOptions};

pub const MANIFEST_FILE: &str = "manifest.json";

/// Failure classes mapped to exit codes.
#[derive(Debug)]
pub enum CliError {
    /// Bad input, config or arguments (exit 1).
    Validation(String),
    /// Anything else (exit 2).
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Internal(_) => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Validation(m) => write!(f, "error: {m}"),
            CliError::Internal(m) => write!(f, "internal error: {m}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Io(_) | Error::NotConverged { .. } | Error::CorruptBundle(_) => CliError::Internal(e.to_string()),
            other => CliError::Validation(other.to_string()),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

fn validation(message: impl Into<String>) -> CliError {
    CliError::Validation(message.into())
}

#[derive(Debug, Parser)]
#[command(
    name = "metawisdom",
    version,
    about = "Crowd wisdom with decision aids: simulate, analyze and replicate"
)]
pub struct Cli {
    /// Worker threads for simulation and bootstrap (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "command")]
pub enum Command {
    /// Simulate one experiment from a JSON config.
    Simulate(SimulateArgs),
    /// Analyze a participant-level CSV file.
    Analyze(AnalyzeArgs),
    /// Reproduce the bundled tables, effects and counterfactuals.
    Replicate(ReplicateArgs),
    /// Recombine group means under a reallocation of choosers.
    Counterfactual(CounterfactualArgs),
    /// Plot kernel density estimates of estimate groups as SVG.
    Kde(KdeArgs),
    /// Solve for optimal crowd weights from a moment file.
    Weights(WeightsArgs),
    /// Re-run the command recorded in a manifest.
    Replay(ReplayArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rounding {
    Full,
    Paper,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct SimulateArgs {
    /// Experiment config (JSON).
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    /// Overrides the config seed; without either, a seed is drawn and recorded.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Also run this many Monte Carlo replications and write their effects.
    #[arg(long)]
    pub replications: Option<usize>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct AnalyzeArgs {
    /// Participant-level CSV.
    #[arg(long)]
    pub input: PathBuf,
    /// Criterion value the estimates are scored against.
    #[arg(long, allow_hyphen_values = true)]
    pub criterion: f64,
    #[arg(long)]
    pub out: PathBuf,
    /// Bootstrap replications for effect intervals (at least 100).
    #[arg(long)]
    pub bootstrap: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Only analyze rows with this task id.
    #[arg(long)]
    pub task: Option<String>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct ReplicateArgs {
    #[arg(long)]
    pub out: PathBuf,
    /// Rounding of counterfactual estimates before squaring.
    #[arg(long, value_enum, default_value_t = Rounding::Full)]
    pub rounding: Rounding,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct CounterfactualArgs {
    /// Reallocation plan (JSON); without it the bundled reallocations are used.
    #[arg(long)]
    pub plan: Option<PathBuf>,
    /// Criterion for a custom plan.
    #[arg(long, allow_hyphen_values = true)]
    pub criterion: Option<f64>,
    #[arg(long, value_enum, default_value_t = Rounding::Full)]
    pub rounding: Rounding,
    /// Decimal places kept by paper rounding of a custom plan.
    #[arg(long, default_value_t = 0)]
    pub decimals: u32,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupBy {
    /// One curve per final aid (control rows form a `none` group).
    FinalAid,
    /// One curve per treatment condition.
    Condition,
    /// One curve per aid sequence, e.g. first-then-second orderings.
    Sequence,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct KdeArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// SVG file to write.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = GroupBy::FinalAid)]
    pub group_by: GroupBy,
    /// Keep only rows of this condition.
    #[arg(long)]
    pub condition: Option<TreatmentCondition>,
    /// Keep only rows with this task id.
    #[arg(long)]
    pub task: Option<String>,
    /// Criterion drawn as a dotted line (ignored when mean-centered).
    #[arg(long, allow_hyphen_values = true)]
    pub criterion: Option<f64>,
    /// Subtract each group's mean before estimating its density.
    #[arg(long)]
    pub mean_centered: bool,
    #[arg(long, default_value = "Kernel density estimates")]
    pub title: String,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct WeightsArgs {
    /// Moment model (JSON: means, covariance, criterion_mean, criterion_variance).
    #[arg(long)]
    pub moments: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = 1e-12)]
    pub tolerance: f64,
    #[arg(long, default_value_t = 100_000)]
    pub max_iterations: usize,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct ReplayArgs {
    pub manifest: PathBuf,
    /// Output location for the replayed run.
    #[arg(long)]
    pub out: PathBuf,
}

/// Provenance record written next to every artifact.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub seed: Option<u64>,
    /// Digest of the canonical JSON of an embedded config.
    pub config_sha256: Option<String>,
    pub config: Option<serde_json::Value>,
    /// Input file name to SHA-256 of its bytes.
    pub inputs: BTreeMap<String, String>,
    pub parameters: Command,
    /// Output file name to SHA-256 of its bytes.
    pub outputs: BTreeMap<String, String>,
}

/// Files produced by a command, keyed by name relative to the output
/// location.
struct Outputs {
    dir: PathBuf,
    files: Vec<(String, Vec<u8>)>,
}

impl Outputs {
    fn new(dir: &Path) -> Self {
        Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        }
    }

    fn add(&mut self, name: &str, bytes: impl Into<Vec<u8>>) {
        self.files.push((name.to_string(), bytes.into()));
    }

    fn digests(&self) -> BTreeMap<String, String> {
        self.files.iter().map(|(n, b)| (n.clone(), sha256_hex(b))).collect()
    }

    fn commit(self, mut manifest: Option<Manifest>) -> CliResult<()> {
        if let Some(m) = manifest.as_mut() {
            m.outputs = self.digests();
        }
        fs::create_dir_all(&self.dir).map_err(|e| validation(format!("cannot create {}: {e}", self.dir.display())))?;
        let mut files = self.files;
        if let Some(m) = manifest {
            let json = serde_json::to_string_pretty(&m).map_err(|e| CliError::Internal(e.to_string()))?;
            files.push((MANIFEST_FILE.to_string(), format!("{json}\n").into_bytes()));
        }
        for (name, bytes) in &files {
            write_atomically(&self.dir.join(name), bytes)?;
        }
        Ok(())
    }
}

/// Writes to a sibling temporary file, then renames over the target.
pub fn write_atomically(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let file_name = path
        .file_name()
        .ok_or_else(|| validation(format!("{} is not a file path", path.display())))?
        .to_string_lossy();
    let tmp = path.with_file_name(format!(".{file_name}.tmp"));
    fs::write(&tmp, bytes).map_err(|e| validation(format!("cannot write {}: {e}", tmp.display())))?;
    fs::rename(&tmp, path).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        validation(format!("cannot move output into {}: {e}", path.display()))
    })
}

fn read_input(path: &Path) -> CliResult<Vec<u8>> {
    fs::read(path).map_err(|e| validation(format!("cannot read {}: {e}", path.display())))
}

fn input_name(path: &Path) -> String {
    path.file_name()
        .map_or_else(|| path.display().to_string(), |n| n.to_string_lossy().into_owned())
}

fn parse_json<T: serde::de::DeserializeOwned>(path: &Path, bytes: &[u8]) -> CliResult<T> {
    serde_json::from_slice(bytes).map_err(|e| {
        validation(format!(
            "{}: line {}, column {}: {e}",
            path.display(),
            e.line(),
            e.column()
        ))
    })
}

fn manifest(
    parameters: Command,
    seed: Option<u64>,
    config: Option<serde_json::Value>,
    inputs: BTreeMap<String, String>,
) -> Manifest {
    let config_sha256 = config.as_ref().map(|c| sha256_hex(c.to_string().as_bytes()));
    Manifest {
        tool: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        seed,
        config_sha256,
        config,
        inputs,
        parameters,
        outputs: BTreeMap::new(),
    }
}

fn samples_csv(samples: &[EstimateSample]) -> CliResult<Vec<u8>> {
    let mut buf = Vec::new();
    write_samples(&mut buf, samples)?;
    Ok(buf)
}

fn to_json<T: Serialize>(value: &T) -> CliResult<String> {
    serde_json::to_string_pretty(value)
        .map(|s| s + "\n")
        .map_err(|e| CliError::Internal(e.to_string()))
}

/// Runs a simulation config. Returns the text printed to stdout.
pub fn cmd_simulate(args: &SimulateArgs) -> CliResult<String> {
    let bytes = read_input(&args.config)?;
    let config: ExperimentConfig = parse_json(&args.config, &bytes)?;
    simulate_config(args, config)
}

fn simulate_config(args: &SimulateArgs, config: ExperimentConfig) -> CliResult<String> {
    config.validate()?;
    let seed = args.seed.or(config.seed).unwrap_or_else(rand::random);
    let experiment = run_experiment_with_seed(&config, seed)?;

    let mut outputs = Outputs::new(&args.out);
    outputs.add("dataset.csv", samples_csv(&experiment.samples)?);
    let mut message = format!(
        "simulated {} participants (seed {seed}); {} estimates clipped at zero\n",
        experiment.samples.len(),
        experiment.floored
    );
    if let Some(r) = args.replications {
        let mut seeded = config.clone();
        seeded.seed = Some(seed);
        let mc = monte_carlo_effects(&seeded, r)?;
        message.push_str(&format!(
            "monte carlo ({r} replications): IE mean {:.4}, CE single {:.4} (positive in {:.1}%), CE multiple {:.4} (positive in {:.1}%)\n",
            mc.information_effect.mean,
            mc.choice_effect_single.mean,
            100.0 * mc.choice_effect_single.positive_share,
            mc.choice_effect_multiple.mean,
            100.0 * mc.choice_effect_multiple.positive_share
        ));
        outputs.add("monte_carlo.json", to_json(&mc)?);
    }
    let config_value = serde_json::to_value(&config).map_err(|e| CliError::Internal(e.to_string()))?;
    let mut recorded = args.clone();
    recorded.seed = Some(seed);
    let m = manifest(
        Command::Simulate(recorded),
        Some(seed),
        Some(config_value),
        BTreeMap::new(),
    );
    outputs.commit(Some(m))?;
    Ok(message)
}

/// Analyzes a participant-level CSV.
pub fn cmd_analyze(args: &AnalyzeArgs) -> CliResult<String> {
    let bytes = read_input(&args.input)?;
    let mut samples =
        parse_samples(bytes.as_slice()).map_err(|e| validation(format!("{}: {e}", args.input.display())))?;
    if let Some(task) = &args.task {
        samples.retain(|s| &s.task_id == task);
    }
    let criterion = Criterion::new(args.criterion, args.criterion, 0.0)?;
    let seed = args.bootstrap.map(|_| args.seed.unwrap_or_else(rand::random));
    let bootstrap = match (args.bootstrap, seed) {
        (Some(r), Some(s)) => Some(BootstrapConfig::new(r, s)),
        _ => None,
    };
    let analysis = analyze_dataset(&samples, &criterion, bootstrap.as_ref())?;
    let text = render_analysis_text(&analysis);

    let mut outputs = Outputs::new(&args.out);
    outputs.add("analysis.txt", text.clone());
    outputs.add("analysis.json", to_json(&analysis)?);
    let inputs = BTreeMap::from([(input_name(&args.input), sha256_hex(&bytes))]);
    let mut recorded = args.clone();
    recorded.seed = seed;
    outputs.commit(Some(manifest(Command::Analyze(recorded), seed, None, inputs)))?;
    Ok(text)
}

/// Reproduces the bundled tables.
pub fn cmd_replicate(args: &ReplicateArgs) -> CliResult<String> {
    let report = replication_report(args.rounding == Rounding::Full)?;
    let text = render_text(&report);
    let mut outputs = Outputs::new(&args.out);
    outputs.add("replication.txt", text.clone());
    outputs.add("replication.csv", render_csv(&report)?);
    outputs.add("replication.json", to_json(&report)?);
    outputs.commit(Some(manifest(
        Command::Replicate(args.clone()),
        None,
        None,
        BTreeMap::new(),
    )))?;
    let failures = report.consistency_failures();
    if failures > 0 {
        return Err(validation(format!("{failures} consistency checks failed\n{text}")));
    }
    Ok(text)
}

/// Recombines group means under a reallocation.
pub fn cmd_counterfactual(args: &CounterfactualArgs) -> CliResult<String> {
    let mut inputs = BTreeMap::new();
    let text = match &args.plan {
        Some(path) => {
            let bytes = read_input(path)?;
            let plan: ReallocationPlan = parse_json(path, &bytes)?;
            inputs.insert(input_name(path), sha256_hex(&bytes));
            let y = args
                .criterion
                .ok_or_else(|| validation("--criterion is required with --plan"))?;
            let rounding = match args.rounding {
                Rounding::Full => RoundingMode::FullPrecision,
                Rounding::Paper => RoundingMode::PaperRounding {
                    decimals: args.decimals,
                },
            };
            let r = counterfactual_reallocation(&plan, &Criterion::new(y, y, 0.0)?, rounding)?;
            format!("estimate {}, GSE {}\n", trim(r.crowd_estimate), trim(r.gse))
        }
        None => {
            let rows = load_bundled_tables()?;
            let mut text = String::new();
            for c in bundled_counterfactuals(&rows, args.rounding == Rounding::Full)? {
                text.push_str(&format!(
                    "{} {}: estimate {}, GSE {}\n",
                    c.experiment,
                    c.label,
                    trim(c.result.crowd_estimate),
                    trim(c.result.gse)
                ));
            }
            text
        }
    };
    if let Some(out) = &args.out {
        let mut outputs = Outputs::new(out);
        outputs.add("counterfactual.txt", text.clone());
        outputs.commit(Some(manifest(
            Command::Counterfactual(args.clone()),
            None,
            None,
            inputs,
        )))?;
    }
    Ok(text)
}

fn group_key(s: &EstimateSample, by: GroupBy) -> String {
    match by {
        GroupBy::FinalAid => s.final_aid.clone().unwrap_or_else(|| crate::model::NO_AID.to_string()),
        GroupBy::Condition => s.condition.as_str().to_string(),
        GroupBy::Sequence if s.aid_sequence.is_empty() => crate::model::NO_AID.to_string(),
        GroupBy::Sequence => s.aid_sequence.join(" > "),
    }
}

/// Writes an SVG of per-group densities.
pub fn cmd_kde(args: &KdeArgs) -> CliResult<String> {
    let bytes = read_input(&args.input)?;
    let samples = parse_samples(bytes.as_slice()).map_err(|e| validation(format!("{}: {e}", args.input.display())))?;
    let mut groups: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for s in samples.iter().filter(|s| {
        args.condition.is_none_or(|c| s.condition == c) && args.task.as_ref().is_none_or(|t| &s.task_id == t)
    }) {
        groups.entry(group_key(s, args.group_by)).or_default().push(s.estimate);
    }
    if groups.is_empty() {
        return Err(validation("no rows match the filters"));
    }
    let options = KdeOptions {
        mean_centered: args.mean_centered,
        ..KdeOptions::default()
    };
    let mut plot_groups = Vec::new();
    for (label, values) in &groups {
        let curve = kde(values, options).map_err(|e| validation(format!("group `{label}`: {e}")))?;
        let mean = crate::numeric::sum(values.iter().copied()) / values.len() as f64;
        plot_groups.push(PlotGroup {
            label: format!("{label} (n={})", values.len()),
            estimate: mean - curve.center_offset,
            curve,
        });
    }
    let plot = DensityPlot {
        title: args.title.clone(),
        x_label: if args.mean_centered {
            "estimate minus group mean"
        } else {
            "estimate"
        }
        .to_string(),
        groups: plot_groups,
        criterion: if args.mean_centered { None } else { args.criterion },
    };
    let svg = render_svg(&plot)?;
    let dir = match args.out.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let name = input_name(&args.out);
    let mut outputs = Outputs::new(&dir);
    outputs.add(&name, svg);
    // the manifest sits next to the figure, named after it
    let m = manifest(
        Command::Kde(args.clone()),
        None,
        None,
        BTreeMap::from([(input_name(&args.input), sha256_hex(&bytes))]),
    );
    let mut m = m;
    m.outputs = outputs.digests();
    outputs.add(&format!("{name}.manifest.json"), to_json(&m)?);
    outputs.commit(None)?;
    Ok(format!("wrote {} with {} curves\n", args.out.display(), groups.len()))
}

#[derive(Debug, Serialize)]
struct WeightsReport {
    weights: Vec<f64>,
    objective: f64,
    uniform_objective: f64,
    mean_individual_error: f64,
    iterations: usize,
    kkt_residual: f64,
}

/// Solves for optimal weights.
pub fn cmd_weights(args: &WeightsArgs) -> CliResult<String> {
    let bytes = read_input(&args.moments)?;
    let model: MomentModel = parse_json(&args.moments, &bytes)?;
    let options = SolverOptions {
        tolerance: args.tolerance,
        max_iterations: args.max_iterations,
    };
    let r = optimal_weights(&model, options)?;
    let uniform = CrowdWeights::uniform(model.dim())?;
    debug_assert!(
        (expected_crowd_sq_error(&uniform, &model)? - r.uniform_objective).abs()
            <= 1e-9 * r.uniform_objective.abs().max(1.0)
    );
    let errors = model.individual_errors();
    let report = WeightsReport {
        weights: r.weights.as_slice().to_vec(),
        objective: r.objective,
        uniform_objective: r.uniform_objective,
        mean_individual_error: errors.iter().sum::<f64>() / errors.len() as f64,
        iterations: r.iterations,
        kkt_residual: r.kkt_residual,
    };
    let mut text = String::from("weights:");
    for w in &report.weights {
        text.push_str(&format!(" {w:.6}"));
    }
    text.push_str(&format!(
        "\nexpected crowd squared error: {:.6} (uniform weights: {:.6}, mean individual: {:.6})\n",
        report.objective, report.uniform_objective, report.mean_individual_error
    ));
    if let Some(out) = &args.out {
        let mut outputs = Outputs::new(out);
        outputs.add("weights.json", to_json(&report)?);
        outputs.add("weights.txt", text.clone());
        let inputs = BTreeMap::from([(input_name(&args.moments), sha256_hex(&bytes))]);
        outputs.commit(Some(manifest(Command::Weights(args.clone()), None, None, inputs)))?;
    }
    Ok(text)
}

/// Re-runs a manifest's command into a new location.
pub fn cmd_replay(args: &ReplayArgs) -> CliResult<String> {
    let bytes = read_input(&args.manifest)?;
    let m: Manifest = parse_json(&args.manifest, &bytes)?;
    let check_input = |path: &Path| -> CliResult<()> {
        let name = input_name(path);
        if let Some(expected) = m.inputs.get(&name) {
            let actual = sha256_hex(&read_input(path)?);
            if &actual != expected {
                return Err(validation(format!(
                    "input {} changed since the manifest was written",
                    path.display()
                )));
            }
        }
        Ok(())
    };
    match m.parameters.clone() {
        Command::Simulate(mut a) => {
            let config_value = m
                .config
                .clone()
                .ok_or_else(|| validation("manifest has no embedded config"))?;
            if let Some(digest) = &m.config_sha256 {
                if &sha256_hex(config_value.to_string().as_bytes()) != digest {
                    return Err(validation("embedded config does not match its digest"));
                }
            }
            let config: ExperimentConfig =
                serde_json::from_value(config_value).map_err(|e| validation(format!("embedded config: {e}")))?;
            a.out = args.out.clone();
            a.seed = m.seed;
            simulate_config(&a, config)
        }
        Command::Analyze(mut a) => {
            check_input(&a.input)?;
            a.out = args.out.clone();
            a.seed = m.seed;
            cmd_analyze(&a)
        }
        Command::Replicate(mut a) => {
            a.out = args.out.clone();
            cmd_replicate(&a)
        }
        Command::Counterfactual(mut a) => {
            if let Some(p) = &a.plan {
                check_input(p)?;
            }
            a.out = Some(args.out.clone());
            cmd_counterfactual(&a)
        }
        Command::Kde(mut a) => {
            check_input(&a.input)?;
            a.out = args.out.clone();
            cmd_kde(&a)
        }
        Command::Weights(mut a) => {
            check_input(&a.moments)?;
            a.out = Some(args.out.clone());
            cmd_weights(&a)
        }
        Command::Replay(_) => Err(validation("a manifest cannot record a replay")),
    }
}

pub fn dispatch(command: &Command) -> CliResult<String> {
    match command {
        Command::Simulate(a) => cmd_simulate(a),
        Command::Analyze(a) => cmd_analyze(a),
        Command::Replicate(a) => cmd_replicate(a),
        Command::Counterfactual(a) => cmd_counterfactual(a),
        Command::Kde(a) => cmd_kde(a),
        Command::Weights(a) => cmd_weights(a),
        Command::Replay(a) => cmd_replay(a),
    }
}

/// Parses arguments, configures logging and the thread pool, runs the
/// command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).try_init();
    if let Some(threads) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
            log::warn!("thread pool already configured: {e}");
        }
    }
    match dispatch(&cli.command) {
        Ok(text) => {
            print!("{text}");
            0
        }
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}
