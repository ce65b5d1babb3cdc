use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use cognav::harness::{
    evaluate_run, generate_tasks, label, load_tasks, make_backends, run_tasks, write_file, write_outputs, write_tasks,
    BackendMode, BackendModes, RunConfig, CASSETTE_FILE, CONFIG_FILE,
};
use cognav::llm_backend::{Cassette, ReplayBackend};
use cognav::metrics::{render_table, DistanceMode};

#[derive(Parser)]
#[command(
    name = "cognav",
    version,
    about = "Cognitive-map navigation agent in a synthetic indoor world"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum BackendArg {
    Scripted,
    Noisy,
    Live,
}

impl From<BackendArg> for BackendMode {
    fn from(b: BackendArg) -> Self {
        match b {
            BackendArg::Scripted => BackendMode::Scripted,
            BackendArg::Noisy => BackendMode::Noisy,
            BackendArg::Live => BackendMode::Live,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate scenes with one episode each.
    Generate {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        episodes: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the agent over an episode set.
    Run {
        #[arg(long)]
        episodes: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// TOML file with any subset of the run configuration keys.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Serves every language role; noisy corrupts only the planner.
        #[arg(long, value_enum)]
        backend: Option<BackendArg>,
        /// Seeds the noisy planner.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        noise_rate: Option<f64>,
        /// Also write every backend exchange to a cassette for replay.
        #[arg(long)]
        record: bool,
        #[arg(long)]
        no_reflection: bool,
        #[arg(long)]
        no_rationalization: bool,
        #[arg(long)]
        no_cognitive_map: bool,
        #[arg(long)]
        fresh_memory_per_episode: bool,
        #[arg(long, requires = "fresh_memory_per_episode")]
        parallel: bool,
    },
    /// Recompute metrics from a run's traces.
    Evaluate {
        #[arg(long)]
        run: PathBuf,
        /// Defaults to the episode set recorded in the run's config.
        #[arg(long)]
        episodes: Option<PathBuf>,
        #[arg(long)]
        euclidean: bool,
    },
    /// Re-run a recorded run from its cassette.
    Replay {
        #[arg(long)]
        run: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

/// Bad user input; reported with exit code 2 like argument errors.
#[derive(Debug)]
struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    Usage(msg.into()).into()
}

fn existing_dir(path: &Path, what: &str) -> Result<PathBuf> {
    if !path.is_dir() {
        return Err(usage(format!("{what} {} is not a directory", path.display())));
    }
    path.canonicalize()
        .with_context(|| format!("resolving {}", path.display()))
}

fn load_config(path: &Path) -> Result<RunConfig> {
    if !path.is_file() {
        return Err(usage(format!("config {} does not exist", path.display())));
    }
    RunConfig::load(path).map_err(|e| usage(e.to_string()))
}

fn episodes_of(cfg: &RunConfig, override_dir: Option<&Path>) -> Result<PathBuf> {
    match override_dir.or(cfg.episodes.as_deref()) {
        Some(dir) => existing_dir(dir, "episode set"),
        None => Err(usage("no episode set: pass --episodes or set `episodes` in the config")),
    }
}

fn generate(seed: u64, count: usize, out: &Path) -> Result<()> {
    if count == 0 {
        return Err(usage("--episodes must be at least 1"));
    }
    let tasks = generate_tasks(seed, count)?;
    let paths = write_tasks(out, &tasks)?;
    println!("wrote {} episodes to {}", paths.len(), out.display());
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn run(
    episodes: Option<PathBuf>,
    out: &Path,
    config: Option<PathBuf>,
    backend: Option<BackendArg>,
    seed: Option<u64>,
    noise_rate: Option<f64>,
    record: bool,
    ablations: [bool; 3],
    fresh: bool,
    parallel: bool,
) -> Result<()> {
    let mut cfg = match &config {
        Some(path) => load_config(path)?,
        None => RunConfig::default(),
    };
    if let Some(b) = backend {
        cfg.backends = BackendModes::all(b.into());
    }
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(r) = noise_rate {
        cfg.noise_rate = r;
    }
    let [no_reflection, no_rationalization, no_cognitive_map] = ablations;
    cfg.no_reflection |= no_reflection;
    cfg.no_rationalization |= no_rationalization;
    cfg.no_cognitive_map |= no_cognitive_map;
    cfg.fresh_memory_per_episode |= fresh;
    cfg.episodes = Some(episodes_of(&cfg, episodes.as_deref())?);
    cfg.validate().map_err(|e| usage(e.to_string()))?;

    let tasks = load_tasks(cfg.episodes.as_deref().expect("set above"))?;
    if tasks.is_empty() {
        return Err(usage("episode set holds no episode files"));
    }
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    write_file(&out.join(CONFIG_FILE), &cfg.to_toml())?;
    let cassette = if record {
        Some(Cassette::create(&out.join(CASSETTE_FILE))?)
    } else {
        None
    };
    let output = run_tasks(&tasks, &cfg, parallel, &|| make_backends(&cfg, cassette.as_ref(), None))?;
    let name = label(&cfg);
    write_outputs(out, &name, &output)?;
    print!("{}", render_table(&[(name, output.summary)]));
    Ok(())
}

fn evaluate(run_dir: &Path, episodes: Option<PathBuf>, euclidean: bool) -> Result<()> {
    let run_dir = existing_dir(run_dir, "run")?;
    let mut cfg = load_config(&run_dir.join(CONFIG_FILE))?;
    if euclidean {
        cfg.distance_mode = DistanceMode::Euclidean;
    }
    let tasks = load_tasks(&episodes_of(&cfg, episodes.as_deref())?)?;
    let (results, summary) = evaluate_run(&run_dir, &tasks, &cfg)?;
    if results.len() < tasks.len() {
        log::warn!(
            "{} of {} episodes could not be scored",
            tasks.len() - results.len(),
            tasks.len()
        );
    }
    print!("{}", render_table(&[(label(&cfg), summary)]));
    Ok(())
}

fn replay(run_dir: &Path, out: &Path) -> Result<()> {
    let run_dir = existing_dir(run_dir, "run")?;
    let cfg = load_config(&run_dir.join(CONFIG_FILE))?;
    let cassette_path = run_dir.join(CASSETTE_FILE);
    if !cassette_path.is_file() {
        return Err(usage(format!(
            "{} has no cassette; record it with `run --record`",
            run_dir.display()
        )));
    }
    let source = ReplayBackend::open(&cassette_path)?;
    let tasks = load_tasks(&episodes_of(&cfg, None)?)?;
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    write_file(&out.join(CONFIG_FILE), &cfg.to_toml())?;
    let output = run_tasks(&tasks, &cfg, false, &|| make_backends(&cfg, None, Some(&source)))?;
    let name = label(&cfg);
    write_outputs(out, &name, &output)?;
    print!("{}", render_table(&[(name, output.summary)]));
    Ok(())
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate { seed, episodes, out } => generate(seed, episodes, &out),
        Command::Run {
            episodes,
            out,
            config,
            backend,
            seed,
            noise_rate,
            record,
            no_reflection,
            no_rationalization,
            no_cognitive_map,
            fresh_memory_per_episode,
            parallel,
        } => run(
            episodes,
            &out,
            config,
            backend,
            seed,
            noise_rate,
            record,
            [no_reflection, no_rationalization, no_cognitive_map],
            fresh_memory_per_episode,
            parallel,
        ),
        Command::Evaluate {
            run,
            episodes,
            euclidean,
        } => evaluate(&run, episodes, euclidean),
        Command::Replay { run, out } => replay(&run, &out),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.is::<Usage>() {
                ExitCode::from(2)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
