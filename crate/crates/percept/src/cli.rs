//! The `percept` command line.

use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use percept_core::capacity::{empirical_report, generalization_bound, interface_capacity, CapacityError};
use percept_core::eval::{canonicalize_answer, Canonicalizer, Components, DirectAnswerer, EvalError, EvalMode};
use percept_core::filter::{run_pipeline, FilterConfig, FilterScript, Judge, Solver};
use percept_core::grpo::{
    build_batch, collect_rollouts, format_metrics, toy_policy, train_toy, GrpoError, KlEstimator, RolloutSettings,
    ToyPolicy, ToyReasoner, TrainReport,
};
use percept_core::item::option_letter;
use percept_core::protocol::{run_episode, ScriptedReasoner, Step};
use percept_core::util::seeded_rng;
use percept_core::world::{
    counterfactual_flip, generate_suite, generate_task, reply_alphabet_size, OracleSensor, ProceduralReasoner, TaskError,
    TaskInstance,
};
use percept_core::{EpisodeError, McqItem, Reasoner, ReasonerError, Sensor, SensorConfig};
use rand::RngCore;

use crate::adapters::{
    Endpoint, EndpointCanonicalizer, EndpointDirect, EndpointJudge, EndpointReasoner, EndpointSensor, EndpointSolver,
};
use crate::config::{Config, ConfigError};
use crate::gateway::{ChatBackend, HttpGateway};
use crate::io::{
    export_batch, load_benchmark, load_tasks, read_episodes, read_json, write_episodes, write_json, write_jsonl, IoError,
};
use crate::manifest::ManifestBuilder;
use crate::run::{capacity_section, evaluate_parallel, worker_pool, EvalOutput};
use crate::transcript::render_transcript;

#[derive(Debug, Parser)]
#[command(name = "percept", version, about = "Text-only reasoner interrogating a perception-only sensor")]
pub struct Cli {
    /// TOML configuration file; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one item and print the dialogue.
    Ask(AskArgs),
    /// Evaluate a benchmark and write a report with traces.
    Eval(EvalArgs),
    /// Generate a synthetic task world.
    Gen(GenArgs),
    /// Train the toy reasoner with multi-turn GRPO.
    TrainToy(TrainArgs),
    /// Collect toy rollouts and export them as a training batch.
    Export(ExportArgs),
    /// Filter training items with a judge and text-only solvers.
    Filter(FilterArgs),
    /// Interface capacity and generalization bound.
    Capacity(CapacityArgs),
    /// Print stored episode transcripts.
    Trace(TraceArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReasonerKind {
    /// Follows the synthetic world's causal chain.
    Procedural,
    /// Replays outputs from --script.
    Scripted,
    /// Samples from a toy policy (--policy, uniform when absent).
    Toy,
    /// Calls the configured reasoner endpoint.
    Endpoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SensorKind {
    Oracle,
    Endpoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Dialogue,
    E2e,
    E2eCot,
}

impl From<ModeArg> for EvalMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Dialogue => EvalMode::Dialogue,
            ModeArg::E2e => EvalMode::E2E,
            ModeArg::E2eCot => EvalMode::E2ECoT,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KlArg {
    K3,
    Exact,
}

#[derive(Debug, Args)]
pub struct ComponentArgs {
    #[arg(long, value_enum, default_value = "procedural")]
    pub reasoner: ReasonerKind,
    /// JSON array of raw reasoner outputs for the scripted reasoner.
    #[arg(long)]
    pub script: Option<PathBuf>,
    /// Toy policy file (a policy or a training report).
    #[arg(long)]
    pub policy: Option<PathBuf>,
    /// Defaults to the oracle when a synthetic world is available.
    #[arg(long, value_enum)]
    pub sensor: Option<SensorKind>,
    /// Generated task world (tasks JSONL) that resolves scene references.
    #[arg(long)]
    pub world: Option<PathBuf>,
    /// Disable the sensor's rejection policy.
    #[arg(long)]
    pub no_rejection: bool,
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    #[arg(long)]
    pub t_max: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct AskArgs {
    /// Generate the item from this task seed (oracle sensor).
    #[arg(long, conflicts_with = "items")]
    pub task_seed: Option<u64>,
    /// Swap the planted cue of the generated task.
    #[arg(long, requires = "task_seed")]
    pub counterfactual: bool,
    /// Benchmark file holding the item.
    #[arg(long, requires = "id")]
    pub items: Option<PathBuf>,
    #[arg(long)]
    pub id: Option<String>,
    #[command(flatten)]
    pub components: ComponentArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Benchmark JSONL; defaults to the items of --world.
    #[arg(long)]
    pub benchmark: Option<PathBuf>,
    #[command(flatten)]
    pub components: ComponentArgs,
    #[arg(long)]
    pub k_samples: Option<usize>,
    #[arg(long)]
    pub shuffle_seed: Option<u64>,
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long, default_value_t = 100)]
    pub count: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub spurious_rate: Option<f64>,
    /// Write counterfactual versions of the generated tasks.
    #[arg(long)]
    pub counterfactual: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct WorldArgs {
    /// Task world to train on; generated from --world-seed when absent.
    #[arg(long)]
    pub world: Option<PathBuf>,
    #[arg(long, default_value_t = 1000)]
    pub world_seed: u64,
    #[arg(long, default_value_t = 400)]
    pub world_size: usize,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub world: WorldArgs,
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub prompts_per_step: Option<usize>,
    #[arg(long)]
    pub group_size: Option<usize>,
    #[arg(long)]
    pub clip_eps: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub temperature: Option<f64>,
    #[arg(long, value_enum)]
    pub kl: Option<KlArg>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub no_rejection: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    #[command(flatten)]
    pub world: WorldArgs,
    #[arg(long)]
    pub policy: Option<PathBuf>,
    #[arg(long, default_value_t = 64)]
    pub prompts: usize,
    #[arg(long)]
    pub group_size: Option<usize>,
    #[arg(long)]
    pub clip_eps: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub no_rejection: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FilterArgs {
    #[arg(long)]
    pub items: PathBuf,
    /// Scripted judge and solvers (JSON); the configured endpoints otherwise.
    #[arg(long)]
    pub script: Option<PathBuf>,
    #[arg(long)]
    pub judge_votes: Option<usize>,
    #[arg(long)]
    pub threshold: Option<usize>,
    #[arg(long)]
    pub attempts: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CapacityArgs {
    /// Maximum number of sensor rounds.
    pub rounds: Option<usize>,
    /// Reply alphabet size, rejection phrases included.
    pub alphabet: Option<usize>,
    /// Episode JSONL to account for.
    #[arg(long)]
    pub episodes: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TraceArgs {
    /// Episode JSONL file or a directory of them.
    pub episodes: PathBuf,
    /// Benchmark file, for question headers and verdicts.
    #[arg(long)]
    pub items: Option<PathBuf>,
    #[arg(long)]
    pub item: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Io(#[from] IoError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Episode(#[from] EpisodeError),
    #[error(transparent)]
    Grpo(#[from] GrpoError),
    #[error(transparent)]
    Task(#[from] TaskError),
    #[error(transparent)]
    Capacity(#[from] CapacityError),
    #[error("{0}")]
    Runtime(String),
    #[error("cannot write output: {0}")]
    Output(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config(_) => 2,
            _ => 1,
        }
    }
}

/// Toy policy owned by its reasoner.
struct PolicyReasoner(ToyPolicy);

impl Reasoner for PolicyReasoner {
    fn respond(&self, item: &McqItem, history: &[Step], rng: &mut dyn RngCore) -> Result<String, ReasonerError> {
        ToyReasoner { policy: &self.0 }.respond(item, history, rng)
    }
}

fn load_policy(path: &Path) -> Result<ToyPolicy, CliError> {
    if let Ok(report) = read_json::<TrainReport>(path) {
        return Ok(report.policy);
    }
    Ok(read_json::<ToyPolicy>(path)?)
}

fn load_script(path: &Path) -> Result<Vec<String>, CliError> {
    Ok(read_json::<Vec<String>>(path)?)
}

/// Lazily created gateway shared by every endpoint component of a run.
struct Gateway<'c> {
    config: &'c Config,
    log_dir: PathBuf,
    backend: Option<Arc<dyn ChatBackend>>,
}

impl<'c> Gateway<'c> {
    fn new(config: &'c Config, log_dir: &Path) -> Self {
        Self { config, log_dir: log_dir.to_path_buf(), backend: None }
    }

    fn endpoint(&mut self, role: &str, temperature: f64, max_tokens: Option<u32>) -> Result<Endpoint, CliError> {
        self.config.gateway.role(role).map_err(|e| CliError::Usage(e.to_string()))?;
        if self.backend.is_none() {
            std::fs::create_dir_all(&self.log_dir).map_err(|e| IoError::Io { path: self.log_dir.clone(), source: e })?;
            let log_path = self.log_dir.join("gateway.jsonl");
            let log = File::create(&log_path).map_err(|e| IoError::Io { path: log_path, source: e })?;
            self.backend = Some(Arc::new(HttpGateway::new(self.config.gateway.clone()).with_log(Box::new(log))));
        }
        Ok(Endpoint::new(self.backend.clone().expect("backend set above"), role, temperature, max_tokens))
    }
}

struct Built {
    reasoner: Option<Box<dyn Reasoner>>,
    sensor: Option<Box<dyn Sensor>>,
    direct: Option<Box<dyn DirectAnswerer>>,
    canonicalizer: Option<Box<dyn Canonicalizer>>,
    declared_alphabet: Option<usize>,
}

impl Built {
    fn components(&self) -> Components<'_> {
        Components {
            reasoner: self.reasoner.as_deref(),
            sensor: self.sensor.as_deref(),
            direct: self.direct.as_deref(),
            canonicalizer: self.canonicalizer.as_deref(),
        }
    }
}

fn sensor_config(config: &Config, no_rejection: bool) -> SensorConfig {
    let mut s = config.sensor.clone();
    if no_rejection {
        s.rejection_enabled = false;
    }
    s
}

fn build_components(
    args: &ComponentArgs,
    config: &Config,
    mode: EvalMode,
    world: Option<&[TaskInstance]>,
    gateway: &mut Gateway<'_>,
) -> Result<Built, CliError> {
    let sensor_cfg = sensor_config(config, args.no_rejection);
    let mut built = Built { reasoner: None, sensor: None, direct: None, canonicalizer: None, declared_alphabet: None };
    if let Some(role) = &config.roles.canonicalizer {
        built.canonicalizer = Some(Box::new(EndpointCanonicalizer(gateway.endpoint(role, 0.0, Some(16))?)));
    }
    if mode != EvalMode::Dialogue {
        let ep = gateway.endpoint(&config.roles.direct, config.sampling.direct_temperature, config.sampling.direct_max_tokens)?;
        built.direct = Some(Box::new(EndpointDirect(ep)));
        return Ok(built);
    }
    built.reasoner = Some(match args.reasoner {
        ReasonerKind::Procedural => Box::new(ProceduralReasoner),
        ReasonerKind::Scripted => {
            let path = args.script.as_ref().ok_or_else(|| CliError::Usage("--reasoner scripted needs --script".into()))?;
            Box::new(ScriptedReasoner::new(load_script(path)?))
        }
        ReasonerKind::Toy => Box::new(PolicyReasoner(match &args.policy {
            Some(p) => load_policy(p)?,
            None => toy_policy(config.train.temperature),
        })),
        ReasonerKind::Endpoint => Box::new(EndpointReasoner(gateway.endpoint(
            &config.roles.reasoner,
            config.eval.reasoner_temperature,
            config.sampling.reasoner_max_tokens,
        )?)),
    });
    let kind = args.sensor.unwrap_or(if world.is_some() { SensorKind::Oracle } else { SensorKind::Endpoint });
    built.sensor = Some(match kind {
        SensorKind::Oracle => {
            let world = world.ok_or_else(|| CliError::Usage("the oracle sensor needs a synthetic world (--world)".into()))?;
            built.declared_alphabet = Some(reply_alphabet_size(&sensor_cfg));
            Box::new(OracleSensor::from_tasks(world, sensor_cfg))
        }
        SensorKind::Endpoint => {
            let ep = gateway.endpoint(&config.roles.sensor, sensor_cfg.temperature, Some(sensor_cfg.max_reply_tokens as u32))?;
            Box::new(EndpointSensor { endpoint: ep, config: sensor_cfg })
        }
    });
    Ok(built)
}

fn out_dir(flag: &Option<PathBuf>, config: &Config, command: &str) -> PathBuf {
    flag.clone().unwrap_or_else(|| config.run.out_dir.join(command))
}

fn file_stem_for(id: &str) -> String {
    id.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' || c == '.' { c } else { '_' }).collect()
}

fn load_world(args: &WorldArgs, config: &Config) -> Result<Vec<TaskInstance>, CliError> {
    match &args.world {
        Some(p) => Ok(load_tasks(p)?),
        None => Ok(generate_suite(args.world_seed, args.world_size, &config.generation)?),
    }
}

/// Parses `argv` (program name first), runs the command and returns the exit
/// code. Normal output goes to `out`, diagnostics to `err`.
pub fn run_cli(argv: Vec<String>, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let rendered = e.render().to_string();
            if code == 0 {
                let _ = write!(out, "{rendered}");
            } else {
                let _ = write!(err, "{rendered}");
            }
            return code;
        }
    };
    match execute(cli, argv, out, err) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(cli: Cli, argv: Vec<String>, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    let mut config = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    match cli.command {
        Command::Ask(a) => cmd_ask(a, &mut config, argv, out, err),
        Command::Eval(a) => cmd_eval(a, &mut config, argv, out),
        Command::Gen(a) => cmd_gen(a, &mut config, argv, out),
        Command::TrainToy(a) => cmd_train_toy(a, &mut config, argv, out),
        Command::Export(a) => cmd_export(a, &mut config, argv, out),
        Command::Filter(a) => cmd_filter(a, &mut config, argv, out),
        Command::Capacity(a) => cmd_capacity(a, &mut config, argv, out),
        Command::Trace(a) => cmd_trace(a, &mut config, argv, out),
    }
}

fn apply_component_flags(args: &ComponentArgs, config: &mut Config) {
    if let Some(m) = args.mode {
        config.eval.mode = m.into();
    }
    if let Some(t) = args.t_max {
        config.eval.budget.max_steps = t;
        config.train.budget.max_steps = t;
    }
    if let Some(s) = args.seed {
        config.eval.seed = s;
    }
    if args.no_rejection {
        config.sensor.rejection_enabled = false;
    }
}

pub fn cmd_ask(a: AskArgs, config: &mut Config, argv: Vec<String>, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    apply_component_flags(&a.components, config);
    let dir = out_dir(&a.out, config, "ask");
    let mut manifest = ManifestBuilder::new("ask", argv, config);
    let (item, world): (McqItem, Option<Vec<TaskInstance>>) = match (a.task_seed, &a.items) {
        (Some(seed), _) => {
            manifest.seed("task", seed);
            let mut task = generate_task(seed, &config.generation)?;
            if a.counterfactual {
                task = counterfactual_flip(&task);
            }
            (task.item.clone(), Some(vec![task]))
        }
        (None, Some(path)) => {
            let id = a.id.as_deref().unwrap_or_default();
            let item = load_benchmark(path)?
                .into_iter()
                .find(|i| i.id == id)
                .ok_or_else(|| CliError::Usage(format!("no item `{id}` in {}", path.display())))?;
            let world = a.components.world.as_deref().map(load_tasks).transpose()?;
            (item, world)
        }
        (None, None) => return Err(CliError::Usage("ask needs --task-seed or --items with --id".into())),
    };
    let mut gateway = Gateway::new(config, &dir);
    let built = build_components(&a.components, config, config.eval.mode, world.as_deref(), &mut gateway)?;
    let seed = config.eval.seed;
    manifest.seed("episode", seed);
    let mut rng = seeded_rng(seed);

    if config.eval.mode == EvalMode::Dialogue {
        let reasoner = built.reasoner.as_deref().expect("dialogue mode builds a reasoner");
        let sensor = built.sensor.as_deref().expect("dialogue mode builds a sensor");
        let episode = match run_episode(&item, reasoner, sensor, &config.eval.budget, &mut rng) {
            Ok(ep) => ep,
            Err(e) => {
                if let Some(ep) = e.episode() {
                    write!(out, "{}", render_transcript(Some(&item), ep))?;
                }
                return Err(e.into());
            }
        };
        write!(out, "{}", render_transcript(Some(&item), &episode))?;
        let path = dir.join("episode.jsonl");
        write_episodes(&path, [&episode])?;
        manifest.artifact(&path);
    } else {
        let direct = built.direct.as_deref().expect("direct modes build a direct answerer");
        let raw = direct
            .answer(&item, config.eval.mode == EvalMode::E2ECoT, &mut rng)
            .map_err(|e| CliError::Runtime(e.to_string()))?;
        let predicted =
            canonicalize_answer(percept_core::eval::strip_answer_prefix(&raw), &item.options, built.canonicalizer.as_deref());
        writeln!(out, "Item: {}\nQuestion: {}\nOptions: {}", item.id, item.question, item.options_line())?;
        writeln!(out, "\nModel output:\n{raw}\n")?;
        let label = |i: Option<usize>| i.map_or("none".to_string(), |i| format!("({}) {}", option_letter(i), item.options[i]));
        writeln!(out, "Prediction: {}\nGold: {}", label(predicted), label(Some(item.gold_index)))?;
    }
    let path = manifest.finish(&dir)?;
    writeln!(err, "manifest: {}", path.display())?;
    Ok(())
}

pub fn cmd_eval(a: EvalArgs, config: &mut Config, argv: Vec<String>, out: &mut dyn Write) -> Result<(), CliError> {
    apply_component_flags(&a.components, config);
    if let Some(k) = a.k_samples {
        config.eval.k_samples = k;
    }
    if let Some(s) = a.shuffle_seed {
        config.eval.shuffle_seed = s;
    }
    if a.workers.is_some() {
        config.run.workers = a.workers;
    }
    let dir = out_dir(&a.out, config, "eval");
    let mut manifest = ManifestBuilder::new("eval", argv, config);
    manifest.seed("eval", config.eval.seed).seed("shuffle", config.eval.shuffle_seed);

    let world = a.components.world.as_deref().map(load_tasks).transpose()?;
    let items: Vec<McqItem> = match (&a.benchmark, &world) {
        (Some(p), _) => load_benchmark(p)?,
        (None, Some(w)) => w.iter().map(|t| t.item.clone()).collect(),
        (None, None) => return Err(CliError::Usage("eval needs --benchmark or --world".into())),
    };
    let mut gateway = Gateway::new(config, &dir);
    let built = build_components(&a.components, config, config.eval.mode, world.as_deref(), &mut gateway)?;
    let pool = worker_pool(config.run.workers).map_err(|e| CliError::Runtime(e.to_string()))?;
    let report = evaluate_parallel(&pool, &items, &config.eval, &built.components())?;
    let capacity = if config.eval.mode == EvalMode::Dialogue {
        Some(capacity_section(&report, config.eval.budget.max_steps, built.declared_alphabet)?)
    } else {
        None
    };

    let traces = dir.join("traces");
    for record in &report.items {
        if !record.episodes.is_empty() {
            let path = traces.join(format!("{}.jsonl", file_stem_for(&record.item_id)));
            write_episodes(&path, &record.episodes)?;
        }
    }
    let output = EvalOutput { report, capacity };
    let report_path = dir.join("report.json");
    write_json(&report_path, &output)?;
    manifest.artifact(&report_path).artifact(&traces);
    manifest.finish(&dir)?;

    let r = &output.report;
    writeln!(
        out,
        "accuracy {:.4} ({}/{})  rounds {:.3}  rejection rate {:.4}  unanswered {}  aborted {}",
        r.accuracy,
        r.correct,
        r.total,
        r.mean_rounds,
        r.rejection_rate,
        r.unanswered,
        r.aborted.len()
    )?;
    for (cat, s) in &r.per_category {
        writeln!(out, "  {cat}: {:.4} ({}/{})", s.accuracy, s.correct, s.total)?;
    }
    if let Some(c) = &output.capacity {
        writeln!(out, "capacity {:.3} nats  bound {:.3}  alphabet {}{}", c.capacity_nats, c.bound, c.alphabet_size, if c.alphabet_is_empirical { " (empirical)" } else { "" })?;
    }
    writeln!(out, "report: {}", report_path.display())?;
    Ok(())
}

pub fn cmd_gen(a: GenArgs, config: &mut Config, argv: Vec<String>, out: &mut dyn Write) -> Result<(), CliError> {
    if let Some(p) = a.spurious_rate {
        config.generation.spurious_rate = p;
    }
    let dir = out_dir(&a.out, config, "gen");
    let mut manifest = ManifestBuilder::new("gen", argv, config);
    manifest.seed("generation", a.seed);
    let mut tasks = generate_suite(a.seed, a.count, &config.generation)?;
    if a.counterfactual {
        tasks = tasks.iter().map(counterfactual_flip).collect();
    }
    let tasks_path = dir.join("tasks.jsonl");
    let items_path = dir.join("items.jsonl");
    write_jsonl(&tasks_path, &tasks)?;
    write_jsonl(&items_path, tasks.iter().map(|t| &t.item))?;
    manifest.artifact(&tasks_path).artifact(&items_path);
    manifest.finish(&dir)?;
    let aligned = tasks.iter().filter(|t| t.aligned).count();
    writeln!(out, "{} tasks, {aligned} with the cue aligned to the answer", tasks.len())?;
    writeln!(out, "tasks: {}\nitems: {}", tasks_path.display(), items_path.display())?;
    Ok(())
}

pub fn cmd_train_toy(a: TrainArgs, config: &mut Config, argv: Vec<String>, out: &mut dyn Write) -> Result<(), CliError> {
    let t = &mut config.train;
    macro_rules! set {
        ($($field:ident),*) => { $( if let Some(v) = a.$field { t.$field = v; } )* };
    }
    set!(steps, prompts_per_step, group_size, clip_eps, beta, learning_rate, temperature);
    if let Some(s) = a.seed {
        t.rng_seed = s;
    }
    if let Some(k) = a.kl {
        t.kl_estimator = match k {
            KlArg::K3 => KlEstimator::K3,
            KlArg::Exact => KlEstimator::Exact,
        };
    }
    let dir = out_dir(&a.out, config, "train-toy");
    let world = load_world(&a.world, config)?;
    let mut manifest = ManifestBuilder::new("train-toy", argv, config);
    manifest.seed("train", config.train.rng_seed).seed("world", a.world.world_seed);

    let report = train_toy(&config.train, &world, !a.no_rejection)?;
    let metrics_path = dir.join("metrics.jsonl");
    let report_path = dir.join("report.json");
    let policy_path = dir.join("policy.json");
    write_jsonl(&metrics_path, &report.metrics)?;
    write_json(&report_path, &report)?;
    write_json(&policy_path, &report.policy)?;
    manifest.artifact(&metrics_path).artifact(&report_path).artifact(&policy_path);
    manifest.finish(&dir)?;

    let stride = (report.metrics.len() / 10).max(1);
    for m in report.metrics.iter().step_by(stride) {
        writeln!(out, "{}", format_metrics(m))?;
    }
    if let Some(last) = report.metrics.last() {
        writeln!(out, "{}", format_metrics(last))?;
    }
    let (start, end) = report.reward_trend(10);
    writeln!(out, "mean reward first/last 10 steps: {start:.4} -> {end:.4}")?;
    writeln!(out, "report: {}", report_path.display())?;
    Ok(())
}

pub fn cmd_export(a: ExportArgs, config: &mut Config, argv: Vec<String>, out: &mut dyn Write) -> Result<(), CliError> {
    if let Some(g) = a.group_size {
        config.train.group_size = g;
    }
    if let Some(c) = a.clip_eps {
        config.train.clip_eps = c;
    }
    if let Some(b) = a.beta {
        config.train.beta = b;
    }
    if let Some(s) = a.seed {
        config.train.rng_seed = s;
    }
    let dir = out_dir(&a.out, config, "export");
    let world = load_world(&a.world, config)?;
    let mut manifest = ManifestBuilder::new("export", argv, config);
    manifest.seed("rollouts", config.train.rng_seed);

    let reference = toy_policy(config.train.temperature);
    let policy = match &a.policy {
        Some(p) => load_policy(p)?,
        None => reference.clone(),
    };
    let sensor = OracleSensor::from_tasks(&world, sensor_config(config, a.no_rejection));
    let items: Vec<&McqItem> = world.iter().take(a.prompts).map(|t| &t.item).collect();
    let settings = RolloutSettings {
        group_size: config.train.group_size,
        adv_eps: config.train.adv_eps,
        budget: config.train.budget,
        seed: config.train.rng_seed,
    };
    let groups = collect_rollouts(&policy, &reference, &items, &sensor, &settings)?;
    let batch = build_batch(&groups, Some(&items), config.train.clip_eps, config.train.beta);
    let path = dir.join("batch.jsonl");
    export_batch(&path, &batch)?;
    manifest.artifact(&path);
    manifest.finish(&dir)?;
    let masked: usize = batch.trajectories.iter().map(|t| t.masked_count()).sum();
    writeln!(out, "{} trajectories, {masked} masked symbols", batch.trajectories.len())?;
    writeln!(out, "batch: {}", path.display())?;
    Ok(())
}

pub fn cmd_filter(a: FilterArgs, config: &mut Config, argv: Vec<String>, out: &mut dyn Write) -> Result<(), CliError> {
    let f: &mut FilterConfig = &mut config.filter;
    if let Some(v) = a.judge_votes {
        f.judge_votes = v;
    }
    if let Some(v) = a.threshold {
        f.threshold = v;
    }
    if let Some(v) = a.attempts {
        f.attempts = v;
    }
    if let Some(v) = a.seed {
        f.seed = v;
    }
    let dir = out_dir(&a.out, config, "filter");
    let mut manifest = ManifestBuilder::new("filter", argv, config);
    manifest.seed("filter", config.filter.seed);
    let items = load_benchmark(&a.items)?;

    let script: Option<FilterScript> = a.script.as_deref().map(read_json).transpose()?;
    let mut gateway = Gateway::new(config, &dir);
    let (judge, solvers): (Box<dyn Judge>, Vec<Box<dyn Solver>>) = match script {
        Some(s) => (Box::new(s.judge), s.solvers.into_iter().map(|s| Box::new(s) as Box<dyn Solver>).collect()),
        None => {
            let judge = EndpointJudge(gateway.endpoint(&config.roles.judge, config.sampling.judge_temperature, None)?);
            let mut solvers: Vec<Box<dyn Solver>> = Vec::new();
            for role in &config.roles.solvers {
                let endpoint = gateway.endpoint(role, config.sampling.solver_temperature, None)?;
                solvers.push(Box::new(EndpointSolver { name: role.clone(), endpoint }));
            }
            (Box::new(judge), solvers)
        }
    };
    if solvers.is_empty() {
        return Err(CliError::Usage("the text-only stage needs at least one solver".into()));
    }
    let solver_refs: Vec<&dyn Solver> = solvers.iter().map(|s| s.as_ref()).collect();
    let (kept, decisions) = run_pipeline(&items, judge.as_ref(), &solver_refs, &config.filter);

    let kept_path = dir.join("kept.jsonl");
    let log_path = dir.join("decisions.jsonl");
    write_jsonl(&kept_path, &kept)?;
    write_jsonl(&log_path, &decisions)?;
    manifest.artifact(&kept_path).artifact(&log_path);
    manifest.finish(&dir)?;

    let undecided = decisions.iter().filter(|d| d.undecided).count();
    let skipped: usize = decisions.iter().map(|d| d.skipped_solvers.len()).sum();
    writeln!(out, "kept {} of {} items (undecided {undecided}, skipped solver runs {skipped})", kept.len(), items.len())?;
    for item in &kept {
        writeln!(out, "{}", item.id)?;
    }
    Ok(())
}

pub fn cmd_capacity(a: CapacityArgs, config: &mut Config, argv: Vec<String>, out: &mut dyn Write) -> Result<(), CliError> {
    let dir = out_dir(&a.out, config, "capacity");
    let mut manifest = ManifestBuilder::new("capacity", argv, config);
    match (a.rounds, a.alphabet, &a.episodes) {
        (Some(t), Some(k), None) => {
            let c = interface_capacity(t, k)?;
            writeln!(out, "capacity {c:.4} nats")?;
            writeln!(out, "bound {:.4}", generalization_bound(c)?)?;
        }
        (t, k, Some(path)) => {
            let episodes = read_episodes(path)?;
            let report = empirical_report(&episodes, t.unwrap_or(config.eval.budget.max_steps), k)?;
            writeln!(out, "capacity {:.4} nats", report.capacity_nats)?;
            writeln!(out, "bound {:.4}", report.bound)?;
            writeln!(
                out,
                "alphabet {}{}  observed {}  mean rounds {:.3}  rejection rate {:.4}  episodes {}",
                report.alphabet_size,
                if report.alphabet_is_empirical { " (empirical)" } else { "" },
                report.empirical_alphabet,
                report.mean_rounds,
                report.rejection_rate,
                report.episodes
            )?;
            let path = dir.join("capacity.json");
            write_json(&path, &report)?;
            manifest.artifact(&path);
        }
        _ => return Err(CliError::Usage("capacity needs ROUNDS ALPHABET, or --episodes".into())),
    }
    manifest.finish(&dir)?;
    Ok(())
}

pub fn cmd_trace(a: TraceArgs, config: &mut Config, argv: Vec<String>, out: &mut dyn Write) -> Result<(), CliError> {
    let dir = out_dir(&a.out, config, "trace");
    let mut manifest = ManifestBuilder::new("trace", argv, config);
    let files: Vec<PathBuf> = if a.episodes.is_dir() {
        let mut v: Vec<PathBuf> = std::fs::read_dir(&a.episodes)
            .map_err(|e| IoError::Io { path: a.episodes.clone(), source: e })?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "jsonl"))
            .collect();
        v.sort();
        v
    } else {
        vec![a.episodes.clone()]
    };
    let items = a.items.as_deref().map(load_benchmark).transpose()?.unwrap_or_default();
    let mut shown = 0;
    for file in &files {
        for ep in read_episodes(file)? {
            if a.item.as_ref().is_some_and(|id| *id != ep.item_id) {
                continue;
            }
            if shown > 0 {
                writeln!(out, "\n----\n")?;
            }
            let item = items.iter().find(|i| i.id == ep.item_id);
            write!(out, "{}", render_transcript(item, &ep))?;
            shown += 1;
        }
        manifest.artifact(file);
    }
    manifest.finish(&dir)?;
    if shown == 0 {
        return Err(CliError::Usage("no matching episodes".into()));
    }
    Ok(())
}
