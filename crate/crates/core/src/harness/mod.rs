//! End-to-end wiring: configuration, backends, the agent loop, episode
//! sets and run outputs.

pub mod agent;
pub mod config;
pub mod trace;

use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::llm_backend::{
    Backend, BackendError, Cassette, LiveBackend, Noise, PromptRole, ReplayBackend, ScriptedBackend,
};
use crate::metrics::{aggregate, evaluate, render_table, EpisodeResult, MetricsError, SummaryRow};
use crate::world::format::{parse, write_episode_file};
use crate::world::{generate_episode, generate_scene, Episode, Scene, WorldError};

pub use agent::{run_episode, Backends, EpisodeRun, SharedMemory};
pub use config::{BackendMode, BackendModes, ConfigError, RunConfig};
pub use trace::{trajectory_from_jsonl, SidecarRecord, Trace, TraceRecord};

pub const CONFIG_FILE: &str = "config.toml";
pub const CASSETTE_FILE: &str = "cassette.jsonl";
pub const RESULTS_JSON: &str = "results.json";
pub const RESULTS_TXT: &str = "results.txt";
pub const TRACE_DIR: &str = "traces";

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    World { path: PathBuf, source: WorldError },
    #[error(transparent)]
    Generate(#[from] WorldError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("{0}")]
    Usage(String),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub fn write_file(path: &Path, contents: &str) -> Result<(), HarnessError> {
    fs::write(path, contents).map_err(io_err(path))
}

pub fn read_file(path: &Path) -> Result<String, HarnessError> {
    fs::read_to_string(path).map_err(io_err(path))
}

fn base_backend(role: PromptRole, mode: BackendMode, cfg: &RunConfig) -> Result<Box<dyn Backend>, BackendError> {
    Ok(match mode {
        BackendMode::Noisy if role == PromptRole::Planner => Box::new(ScriptedBackend::noisy(Noise {
            rate: cfg.noise_rate,
            seed: cfg.seed,
        })),
        BackendMode::Scripted | BackendMode::Noisy => Box::new(ScriptedBackend::new()),
        BackendMode::Live => Box::new(LiveBackend::from_env()?),
    })
}

/// Backends for every role. A replay source replaces all of them; a
/// cassette records whatever serves each role.
pub fn make_backends(
    cfg: &RunConfig,
    record: Option<&Cassette>,
    replay: Option<&ReplayBackend>,
) -> Result<Backends, BackendError> {
    let make = |role: PromptRole, mode: BackendMode| -> Result<Box<dyn Backend>, BackendError> {
        let base: Box<dyn Backend> = match replay {
            Some(r) => Box::new(r.clone()),
            None => base_backend(role, mode, cfg)?,
        };
        Ok(match record {
            Some(c) => Box::new(c.record(base)),
            None => base,
        })
    };
    let m = &cfg.backends;
    Ok(Backends {
        splitter: make(PromptRole::Splitter, m.splitter)?,
        rationalizer: make(PromptRole::Rationalizer, m.rationalizer)?,
        planner: make(PromptRole::Planner, m.planner)?,
        describer: make(PromptRole::Describer, m.describer)?,
        reflector: make(PromptRole::Reflector, m.reflector)?,
    })
}

/// A scene with one episode in it.
#[derive(Clone, Debug)]
pub struct Task {
    pub scene: Scene,
    pub episode: Episode,
}

const GENERATION_ATTEMPTS: u64 = 10;

/// `count` tasks with 3 to 6 rooms each, a pure function of `seed`.
pub fn generate_tasks(seed: u64, count: usize) -> Result<Vec<Task>, WorldError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            let n_rooms = rng.random_range(3..=6);
            let mut last = None;
            for attempt in 0..GENERATION_ATTEMPTS {
                let scene_seed = seed * 1_000_000 + i as u64 * GENERATION_ATTEMPTS + attempt;
                let made = generate_scene(scene_seed, n_rooms)
                    .and_then(|scene| generate_episode(&scene, i as u64).map(|episode| Task { scene, episode }));
                match made {
                    Ok(task) => return Ok(task),
                    Err(e) => last = Some(e),
                }
            }
            Err(last.expect("at least one attempt"))
        })
        .collect()
}

pub fn episode_file_name(i: usize) -> String {
    format!("ep_{i:04}.jsonl")
}

pub fn write_tasks(dir: &Path, tasks: &[Task]) -> Result<Vec<PathBuf>, HarnessError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    tasks
        .iter()
        .enumerate()
        .map(|(i, t)| {
            let path = dir.join(episode_file_name(i));
            write_file(&path, &write_episode_file(&t.scene, &t.episode))?;
            Ok(path)
        })
        .collect()
}

/// Every `*.jsonl` file in `dir` holding a scene and an episode, in file
/// name order.
pub fn load_tasks(dir: &Path) -> Result<Vec<Task>, HarnessError> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(io_err(dir))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "jsonl"))
        .collect();
    paths.sort();
    paths
        .iter()
        .map(|path| {
            let (scene, episode) = parse(&read_file(path)?).map_err(|source| HarnessError::World {
                path: path.clone(),
                source,
            })?;
            let episode = episode.ok_or_else(|| HarnessError::World {
                path: path.clone(),
                source: WorldError::InvalidScene("file holds no episode".into()),
            })?;
            Ok(Task { scene, episode })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultsFile {
    pub label: String,
    pub summary: SummaryRow,
    pub episodes: Vec<EpisodeResult>,
}

pub struct RunOutput {
    pub runs: Vec<EpisodeRun>,
    pub results: Vec<EpisodeResult>,
    pub summary: SummaryRow,
}

/// Results-table name for a config: `full`, or the enabled ablations.
pub fn label(cfg: &RunConfig) -> String {
    let flags = [
        (cfg.no_reflection, "no_reflection"),
        (cfg.no_rationalization, "no_rationalization"),
        (cfg.no_cognitive_map, "no_cognitive_map"),
    ];
    let on: Vec<&str> = flags.iter().filter(|(f, _)| *f).map(|(_, n)| *n).collect();
    if on.is_empty() {
        "full".into()
    } else {
        on.join("+")
    }
}

/// Scores every run, skipping (with a warning) episodes whose geodesic is
/// undefined.
pub fn score_runs(
    tasks: &[Task],
    runs: &[EpisodeRun],
    cfg: &RunConfig,
) -> Result<(Vec<EpisodeResult>, SummaryRow), MetricsError> {
    let mut results = Vec::new();
    for (task, run) in tasks.iter().zip(runs) {
        match evaluate(&run.trajectory, &task.episode, &task.scene, cfg.distance_mode) {
            Ok(r) => results.push(r),
            Err(e) => log::warn!("excluding episode: {e}"),
        }
    }
    let summary = aggregate(&results)?;
    Ok((results, summary))
}

/// Runs every task. Sequential runs share one memory stream unless the
/// config asks for a fresh one per episode; parallel runs require that.
pub fn run_tasks(
    tasks: &[Task],
    cfg: &RunConfig,
    parallel: bool,
    backends: &(dyn Fn() -> Result<Backends, BackendError> + Sync),
) -> Result<RunOutput, HarnessError> {
    if parallel && !cfg.fresh_memory_per_episode {
        return Err(HarnessError::Usage(
            "parallel runs need fresh_memory_per_episode, since the shared memory stream is order sensitive".into(),
        ));
    }
    let runs: Vec<EpisodeRun> = if parallel {
        let workers = std::thread::available_parallelism()
            .map_or(1, |n| n.get())
            .min(tasks.len().max(1));
        let chunk = tasks.len().div_ceil(workers).max(1);
        std::thread::scope(|s| {
            let handles: Vec<_> = tasks
                .chunks(chunk)
                .map(|part| {
                    s.spawn(move || -> Result<Vec<EpisodeRun>, HarnessError> {
                        part.iter()
                            .map(|t| {
                                let mut b = backends()?;
                                let mut memory = SharedMemory::new(cfg);
                                Ok(run_episode(&t.episode, &t.scene, cfg, &mut b, &mut memory))
                            })
                            .collect()
                    })
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("episode worker panicked"))
                .collect::<Result<Vec<_>, _>>()
        })?
        .into_iter()
        .flatten()
        .collect()
    } else {
        let mut b = backends()?;
        let mut memory = SharedMemory::new(cfg);
        tasks
            .iter()
            .map(|t| {
                if cfg.fresh_memory_per_episode {
                    memory = SharedMemory::new(cfg);
                }
                run_episode(&t.episode, &t.scene, cfg, &mut b, &mut memory)
            })
            .collect()
    };
    let (results, summary) = score_runs(tasks, &runs, cfg)?;
    Ok(RunOutput { runs, results, summary })
}

/// Writes traces and both results files under `dir`.
pub fn write_outputs(dir: &Path, label: &str, output: &RunOutput) -> Result<(), HarnessError> {
    let traces = dir.join(TRACE_DIR);
    fs::create_dir_all(&traces).map_err(io_err(&traces))?;
    for run in &output.runs {
        let id = &run.trajectory.episode_id;
        write_file(&traces.join(format!("{id}.jsonl")), &run.trace.records_jsonl())?;
        write_file(&traces.join(format!("{id}.log")), &run.trace.log_text())?;
        write_file(&traces.join(format!("{id}.sidecar.jsonl")), &run.trace.sidecar_jsonl())?;
    }
    write_results(dir, label, &output.results, &output.summary)
}

pub fn write_results(
    dir: &Path,
    label: &str,
    results: &[EpisodeResult],
    summary: &SummaryRow,
) -> Result<(), HarnessError> {
    let file = ResultsFile {
        label: label.to_string(),
        summary: summary.clone(),
        episodes: results.to_vec(),
    };
    let json = serde_json::to_string_pretty(&file).expect("results serialize") + "\n";
    write_file(&dir.join(RESULTS_JSON), &json)?;
    write_file(
        &dir.join(RESULTS_TXT),
        &render_table(&[(label.to_string(), summary.clone())]),
    )
}

/// Metrics recomputed from the trajectory records of a run directory.
pub fn evaluate_run(
    run_dir: &Path,
    tasks: &[Task],
    cfg: &RunConfig,
) -> Result<(Vec<EpisodeResult>, SummaryRow), HarnessError> {
    let traces = run_dir.join(TRACE_DIR);
    let mut results = Vec::new();
    for task in tasks {
        let path = traces.join(format!("{}.jsonl", task.episode.id));
        let Ok(text) = fs::read_to_string(&path) else {
            log::warn!("no trace for episode {}", task.episode.id);
            continue;
        };
        let Some(traj) = trajectory_from_jsonl(&text) else {
            log::warn!("{} has no trajectory record", path.display());
            continue;
        };
        match evaluate(&traj, &task.episode, &task.scene, cfg.distance_mode) {
            Ok(r) => results.push(r),
            Err(e) => log::warn!("excluding episode: {e}"),
        }
    }
    let summary = aggregate(&results)?;
    Ok((results, summary))
}
