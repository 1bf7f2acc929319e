use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rcxi::analysis::{analyze, AnalysisConfig, AnalysisInputs, Check};
use rcxi::dynamics::{simulate, InputSchedule, MapSpec, NoiseSpec};
use rcxi::glyph::{collapse_check, default_delta, encode_glyph, synthetic_vocab, Vocab};
use rcxi::io::{emit_report, read_trace, read_vocab, validate_trace, write_trace, write_vocab};
use rcxi::tension::tension_series;
use serde_json::json;

mod log;

use log::Logger;

/// Simulate, analyze and certify stochastic recursive state trajectories.
#[derive(Debug, Parser)]
#[command(name = "rcxi", version)]
struct Cli {
    /// Worker threads for parallel sections [env: RCXI_THREADS] [default: all cores]
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Emit progress as JSON lines on stderr
    #[arg(long, global = true)]
    json_logs: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a seeded simulation and write its trace
    Simulate(SimulateArgs),
    /// Analyze a trace and write report.json, CSVs and figures
    Analyze(AnalyzeArgs),
    /// Encode the glyph of a trace and check it against a vocab
    Glyph(GlyphArgs),
    /// Check a trace file and list every violation
    Validate(ValidateArgs),
    /// End-to-end rotation-contraction run with figures and report
    Demo(DemoArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Family {
    Affine,
    RotationContraction,
    DelayedContraction,
    TwoBasin,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Noise {
    None,
    Gaussian,
    Uniform,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// Map family; ignored when --spec is given
    #[arg(long, value_enum, default_value = "affine")]
    family: Family,
    /// Latent dimension
    #[arg(long, default_value_t = 8)]
    dim: usize,
    /// Contraction factor (affine, two-basin; post-onset for delayed-contraction)
    #[arg(long, default_value_t = 0.7)]
    lipschitz: f64,
    /// Per-coordinate offset (affine, delayed-contraction) or basin offset (two-basin)
    #[arg(long, default_value_t = 0.0)]
    offset: f64,
    /// Radial contraction (rotation-contraction)
    #[arg(long, default_value_t = 0.98)]
    rho: f64,
    /// Rotation angle per step in radians (rotation-contraction)
    #[arg(long, default_value_t = 0.7)]
    theta: f64,
    /// Limit-cycle radius (rotation-contraction)
    #[arg(long, default_value_t = 1.0)]
    radius: f64,
    /// First contracting step (delayed-contraction)
    #[arg(long, default_value_t = 200)]
    onset: u64,
    /// Factor before the onset (delayed-contraction)
    #[arg(long, default_value_t = 1.02)]
    pre_lipschitz: f64,
    /// Full map spec as a JSON file; overrides the family flags
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Noise law
    #[arg(long, value_enum, default_value = "gaussian")]
    noise: Noise,
    /// Noise standard deviation per coordinate
    #[arg(long, default_value_t = 0.05)]
    noise_sigma: f64,
    /// Number of steps (the trace holds steps + 1 states)
    #[arg(long, default_value_t = 10_000)]
    steps: usize,
    /// Seed for the initial state and the noise
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Cycle through input ids 0..N
    #[arg(long, default_value_t = 1)]
    inputs: u64,
    /// Output trace path
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct AnalysisFlags {
    /// JSON analysis config; flags below override its fields
    #[arg(long)]
    config: Option<PathBuf>,
    /// States skipped before stationary statistics [default: 10% of steps]
    #[arg(long)]
    burn_in: Option<usize>,
    /// Convergence window length [default: 20% of states]
    #[arg(long)]
    window: Option<usize>,
    /// Significance level of the convergence test [default: 0.05]
    #[arg(long)]
    alpha: Option<f64>,
    /// Permutations in the convergence test [default: 500]
    #[arg(long)]
    permutations: Option<usize>,
    /// Largest cluster count tried [default: 8]
    #[arg(long)]
    k_max: Option<usize>,
    /// Moment bound on windowed mean xi^2 [default: 2x closed form, else 90th percentile]
    #[arg(long)]
    bound: Option<f64>,
    /// Glyph tension window [default: 256]
    #[arg(long)]
    encoder_window: Option<usize>,
    /// Glyph projection seed [default: 0]
    #[arg(long)]
    encoder_seed: Option<u64>,
    /// Collapse threshold [default: 5th percentile of vocab pairwise distances]
    #[arg(long)]
    delta: Option<f64>,
    /// Seed for probes, permutations and clustering [default: 0]
    #[arg(long)]
    seed: Option<u64>,
    /// Checks that must pass, comma separated [default: every computed check]
    #[arg(long, value_delimiter = ',', value_parser = parse_check)]
    require: Option<Vec<Check>>,
}

#[derive(Debug, Args)]
struct AnalyzeArgs {
    /// Trace file
    trace: PathBuf,
    #[command(flatten)]
    analysis: AnalysisFlags,
    /// Vocab file for the anchoring check
    #[arg(long)]
    vocab: Option<PathBuf>,
    /// Output directory
    #[arg(long, default_value = "rcxi-out")]
    out_dir: PathBuf,
}

#[derive(Debug, Args)]
struct GlyphArgs {
    /// Trace file
    trace: PathBuf,
    /// Vocab file
    #[arg(long)]
    vocab: PathBuf,
    /// Collapse threshold [default: 5th percentile of vocab pairwise distances]
    #[arg(long)]
    delta: Option<f64>,
    /// Tension window encoded
    #[arg(long, default_value_t = rcxi::glyph::DEFAULT_WINDOW)]
    window: usize,
    /// Glyph projection seed
    #[arg(long, default_value_t = 0)]
    encoder_seed: u64,
    /// Write the JSON result here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ValidateArgs {
    /// Trace file
    trace: PathBuf,
}

#[derive(Debug, Args)]
struct DemoArgs {
    /// Output directory
    #[arg(long, default_value = "rcxi-demo")]
    out_dir: PathBuf,
    /// Number of steps simulated
    #[arg(long, default_value_t = DEMO_STEPS)]
    steps: usize,
    /// Seed for the simulation and the analysis (the vocab uses seed + 1)
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

const DEMO_DIM: usize = 8;
const DEMO_STEPS: usize = 20_000;
const DEMO_INPUTS: u64 = 16;
const DEMO_VOCAB: usize = 1000;

fn parse_check(s: &str) -> Result<Check, String> {
    serde_json::from_value(json!(s.trim().replace('-', "_"))).map_err(|_| {
        "expected one of moment_bound, persistence, contraction, convergence, annulus, anchored".to_string()
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let log = Logger::new(cli.json_logs);
    if let Err(e) = configure_threads(cli.threads) {
        log.error(&e);
        return ExitCode::from(2);
    }
    match run(cli.command, &log) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            log.error(&e);
            ExitCode::from(1)
        }
    }
}

fn configure_threads(flag: Option<usize>) -> Result<(), String> {
    let threads = match flag {
        Some(n) => Some(n),
        None => match std::env::var("RCXI_THREADS") {
            Ok(v) if !v.trim().is_empty() => Some(
                v.trim()
                    .parse()
                    .map_err(|_| format!("RCXI_THREADS: not a thread count: {v:?}"))?,
            ),
            _ => None,
        },
    };
    match threads {
        Some(0) => Err("--threads must be at least 1".into()),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| e.to_string()),
        None => Ok(()),
    }
}

type CliResult = Result<u8, String>;

fn run(command: Command, log: &Logger) -> CliResult {
    let start = Instant::now();
    let name = match &command {
        Command::Simulate(_) => "simulate",
        Command::Analyze(_) => "analyze",
        Command::Glyph(_) => "glyph",
        Command::Validate(_) => "validate",
        Command::Demo(_) => "demo",
    };
    log.event("start", json!({ "command": name }));
    let code = match command {
        Command::Simulate(a) => cmd_simulate(a, log),
        Command::Analyze(a) => cmd_analyze(a, log),
        Command::Glyph(a) => cmd_glyph(a, log),
        Command::Validate(a) => cmd_validate(a, log),
        Command::Demo(a) => cmd_demo(a, log),
    }?;
    log.event(
        "done",
        json!({ "command": name, "exit_code": code, "elapsed_ms": start.elapsed().as_millis() as u64 }),
    );
    Ok(code)
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
}

fn map_spec(a: &SimulateArgs) -> Result<MapSpec, String> {
    if let Some(path) = &a.spec {
        return read_json(path);
    }
    Ok(match a.family {
        Family::Affine => MapSpec::affine(a.dim, a.lipschitz, a.offset),
        Family::RotationContraction => MapSpec::rotation_contraction(a.dim, a.rho, a.theta, a.radius),
        Family::DelayedContraction => {
            MapSpec::delayed_contraction(a.dim, a.onset, a.pre_lipschitz, a.lipschitz, a.offset)
        }
        Family::TwoBasin => MapSpec::two_basin(a.dim, a.lipschitz, a.offset),
    })
}

fn noise_spec(kind: Noise, sigma: f64) -> NoiseSpec {
    match kind {
        Noise::None => NoiseSpec::none(),
        Noise::Gaussian => NoiseSpec::gaussian(sigma),
        Noise::Uniform => NoiseSpec::uniform(sigma),
    }
}

fn cmd_simulate(a: SimulateArgs, log: &Logger) -> CliResult {
    let spec = map_spec(&a)?;
    let noise = noise_spec(a.noise, a.noise_sigma);
    let t = simulate(&spec, &noise, &InputSchedule::cycle_ids(a.inputs), a.steps, a.seed).map_err(err)?;
    write_trace(&t, &a.out).map_err(err)?;
    log.wrote(&a.out);
    Ok(0)
}

fn analysis_config(f: &AnalysisFlags) -> Result<AnalysisConfig, String> {
    let mut c: AnalysisConfig = match &f.config {
        Some(p) => read_json(p)?,
        None => AnalysisConfig::default(),
    };
    if f.burn_in.is_some() {
        c.burn_in = f.burn_in;
    }
    if f.window.is_some() {
        c.window = f.window;
    }
    if let Some(v) = f.alpha {
        c.alpha = v;
    }
    if let Some(v) = f.permutations {
        c.permutations = v;
    }
    if let Some(v) = f.k_max {
        c.k_max = v;
    }
    if f.bound.is_some() {
        c.bound = f.bound;
    }
    if let Some(v) = f.encoder_window {
        c.encoder_window = v;
    }
    if let Some(v) = f.encoder_seed {
        c.encoder_seed = v;
    }
    if f.delta.is_some() {
        c.delta = f.delta;
    }
    if let Some(v) = f.seed {
        c.seed = v;
    }
    if f.require.is_some() {
        c.require = f.require.clone();
    }
    Ok(c)
}

fn file_label(p: &Path) -> String {
    p.file_name().map_or_else(|| p.display().to_string(), |n| n.to_string_lossy().into_owned())
}

fn cmd_analyze(a: AnalyzeArgs, log: &Logger) -> CliResult {
    let config = analysis_config(&a.analysis)?;
    let trajectory = read_trace(&a.trace).map_err(err)?;
    log.event("read", json!({ "path": a.trace, "steps": trajectory.steps(), "dim": trajectory.dim() }));
    let vocab = a.vocab.as_ref().map(read_vocab).transpose().map_err(err)?;
    let trace_label = file_label(&a.trace);
    let vocab_label = a.vocab.as_deref().map(file_label);
    let analysis = analyze(
        &trajectory,
        &config,
        AnalysisInputs {
            vocab: vocab.as_ref(),
            vocab_label: vocab_label.as_deref(),
            trace_label: Some(&trace_label),
        },
    )
    .map_err(err)?;
    for path in emit_report(&analysis, &a.out_dir).map_err(err)? {
        log.wrote(&path);
    }
    log.verdict(&analysis.report.verdict);
    Ok(0)
}

fn cmd_glyph(a: GlyphArgs, log: &Logger) -> CliResult {
    let trajectory = read_trace(&a.trace).map_err(err)?;
    let vocab = read_vocab(&a.vocab).map_err(err)?;
    let tension = tension_series(&trajectory).map_err(err)?;
    let glyph = encode_glyph(&trajectory, &tension, a.window, a.encoder_seed).map_err(err)?;
    let delta = match a.delta {
        Some(d) => d,
        None => default_delta(&vocab).map_err(err)?,
    };
    let current = trajectory.inputs().last().map(|s| s.id);
    let anchor = collapse_check(&glyph, &vocab, delta, current).map_err(err)?;
    let mut body = serde_json::to_string_pretty(&json!({ "glyph": glyph, "anchor": anchor })).map_err(err)?;
    body.push('\n');
    match &a.out {
        Some(p) => {
            std::fs::write(p, body).map_err(|e| format!("{}: {e}", p.display()))?;
            log.wrote(p);
        }
        None => print!("{body}"),
    }
    Ok(0)
}

fn cmd_validate(a: ValidateArgs, log: &Logger) -> CliResult {
    let violations = validate_trace(&a.trace).map_err(err)?;
    for v in &violations {
        println!("{v}");
    }
    log.event(
        "validated",
        json!({ "path": a.trace, "violations": violations.len() }),
    );
    Ok(if violations.is_empty() { 0 } else { 1 })
}

/// The map, noise and inputs of the demo run.
fn demo_setup() -> (MapSpec, NoiseSpec, InputSchedule) {
    (
        MapSpec::rotation_contraction(DEMO_DIM, 0.98, 0.7, 1.0),
        NoiseSpec::gaussian(0.01),
        InputSchedule::cycle_ids(DEMO_INPUTS),
    )
}

fn demo_vocab(seed: u64) -> Result<Vocab, String> {
    synthetic_vocab(DEMO_VOCAB, DEMO_DIM, 1.0, seed.wrapping_add(1)).map_err(err)
}

fn cmd_demo(a: DemoArgs, log: &Logger) -> CliResult {
    let (spec, noise, inputs) = demo_setup();
    let trajectory = simulate(&spec, &noise, &inputs, a.steps, a.seed).map_err(err)?;
    let vocab = demo_vocab(a.seed)?;
    std::fs::create_dir_all(&a.out_dir).map_err(|e| format!("{}: {e}", a.out_dir.display()))?;
    let trace_path = a.out_dir.join("trace.jsonl");
    let vocab_path = a.out_dir.join("vocab.jsonl");
    write_trace(&trajectory, &trace_path).map_err(err)?;
    log.wrote(&trace_path);
    write_vocab(&vocab, &vocab_path).map_err(err)?;
    log.wrote(&vocab_path);

    // A limit cycle is neutral along the cycle, so the contraction check is
    // expected to fail here; the demo certifies the geometry only.
    let config = AnalysisConfig {
        seed: a.seed,
        require: Some(vec![Check::MomentBound, Check::Persistence, Check::Convergence, Check::Annulus]),
        ..AnalysisConfig::default()
    };
    let analysis = analyze(
        &trajectory,
        &config,
        AnalysisInputs {
            vocab: Some(&vocab),
            vocab_label: Some("vocab.jsonl"),
            trace_label: Some("trace.jsonl"),
        },
    )
    .map_err(err)?;
    for path in emit_report(&analysis, &a.out_dir).map_err(err)? {
        log.wrote(&path);
    }
    log.verdict(&analysis.report.verdict);
    Ok(0)
}
