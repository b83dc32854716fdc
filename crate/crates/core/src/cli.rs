//! Command-line front end.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use crate::directors::{Director, SolverConfig};
use crate::error::{Error, Result};
use crate::graph::LevelGraph;
use crate::harness::{
    run_experiment, run_switch_experiment, write_heatmap_csv, write_level_csv, write_summary_json, ExperimentConfig,
    ExperimentSummary, ScheduleEntry, SummaryDocument,
};
use crate::mdp::RewardMode;
use crate::players::PlayerProxy;
use crate::sources::{self, SegmentGraphParams};

pub const LEVELS_CSV: &str = "levels.csv";
pub const HEATMAP_CSV: &str = "heatmap.csv";
pub const SUMMARY_JSON: &str = "summary.json";

#[derive(Debug, Parser)]
#[command(name = "level-assembly", version, about = "Assemble game levels with MDP directors and simulated players")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build an n-gram level graph from a text corpus (one level per line, one slice per character).
    BuildNgram {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(short, long, default_value_t = 3, value_parser = clap::value_parser!(u32).range(2..))]
        n: u32,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate a synthetic segment graph over a density/leniency grid.
    GenSegments(GenSegmentsArgs),
    /// Run the experiments described by a JSON config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        overrides: RunOverrides,
    },
    /// Run every director through the 35 + 15 level proxy switch.
    SwitchRun {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long, value_delimiter = ',', default_values_t = (0..20).collect::<Vec<u64>>())]
        seeds: Vec<u64>,
        #[arg(long, default_value_t = 5)]
        segments_per_level: u32,
        #[arg(long, value_enum, default_value_t = RewardMode::Both)]
        reward_mode: RewardMode,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Check every structural invariant of a graph file.
    Validate {
        #[arg(long)]
        graph: PathBuf,
    },
}

#[derive(Debug, Args)]
pub struct GenSegmentsArgs {
    #[arg(long)]
    pub out: PathBuf,
    /// JSON file with generator parameters; flags below override it.
    #[arg(long)]
    pub params: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub grid_resolution: Option<u32>,
    #[arg(long)]
    pub elites_per_cell: Option<u32>,
    #[arg(long)]
    pub link_probability: Option<f64>,
}

#[derive(Debug, Default, Args)]
pub struct RunOverrides {
    /// Comma-separated seeds replacing the config's seed list.
    #[arg(long, value_delimiter = ',')]
    pub seeds: Option<Vec<u64>>,
    #[arg(long, value_enum, value_delimiter = ',')]
    pub director: Option<Vec<Director>>,
    #[arg(long, value_enum)]
    pub reward_mode: Option<RewardMode>,
    /// Output directory; defaults to the config's `output_dir`.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// Worker threads for seeds running in parallel.
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Exit nonzero when any run reports a warning.
    #[arg(long)]
    pub deny_warnings: bool,
}

fn default_directors() -> Vec<Director> {
    Director::ALL.to_vec()
}

/// Batch form of [`ExperimentConfig`]: every director runs against every
/// schedule. `proxies` is shorthand for single-proxy schedules spanning
/// `levels_per_run`. Relative paths resolve against the config file's folder.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub graph: PathBuf,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default = "default_directors")]
    pub directors: Vec<Director>,
    #[serde(default)]
    pub proxies: Vec<String>,
    #[serde(default)]
    pub proxy_schedules: Vec<Vec<ScheduleEntry>>,
    pub seeds: Vec<u64>,
    pub levels_per_run: u32,
    pub segments_per_level: u32,
    #[serde(default)]
    pub reward_mode: RewardMode,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub custom_proxies: Vec<PlayerProxy>,
    #[serde(default)]
    pub record_timing: bool,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut config: RunConfig = serde_json::from_str(&text).map_err(|e| Error::json(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        config.graph = base.join(&config.graph);
        config.output_dir = config.output_dir.map(|d| base.join(d));
        Ok(config)
    }

    pub fn apply(&mut self, overrides: &RunOverrides) {
        if let Some(seeds) = &overrides.seeds {
            self.seeds = seeds.clone();
        }
        if let Some(directors) = &overrides.director {
            self.directors = directors.clone();
        }
        if let Some(mode) = overrides.reward_mode {
            self.reward_mode = mode;
        }
        if let Some(dir) = &overrides.out_dir {
            self.output_dir = Some(dir.clone());
        }
    }

    /// One experiment per (schedule, director) pair, schedules outermost.
    pub fn experiments(&self) -> Result<Vec<ExperimentConfig>> {
        let mut schedules: Vec<Vec<ScheduleEntry>> = self
            .proxies
            .iter()
            .map(|p| vec![ScheduleEntry::new(p, self.levels_per_run)])
            .collect();
        schedules.extend(self.proxy_schedules.iter().cloned());
        if schedules.is_empty() || self.directors.is_empty() {
            return Err(Error::Config("config names no proxies or no directors".into()));
        }
        let mut out = Vec::new();
        for schedule in schedules {
            for &director in &self.directors {
                let config = ExperimentConfig {
                    director,
                    proxy_schedule: schedule.clone(),
                    seeds: self.seeds.clone(),
                    levels_per_run: self.levels_per_run,
                    segments_per_level: self.segments_per_level,
                    reward_mode: self.reward_mode,
                    solver: self.solver.clone(),
                    custom_proxies: self.custom_proxies.clone(),
                    record_timing: self.record_timing,
                };
                config.validate()?;
                out.push(config);
            }
        }
        Ok(out)
    }
}

/// Parses `args` (program name first), runs the command and maps the outcome
/// to an exit status.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match execute(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

/// Returns `Ok(false)` when the command ran but its verdict is a failure.
pub fn execute(command: Command) -> Result<bool> {
    match command {
        Command::BuildNgram { corpus, n, out } => cmd_build_ngram(&corpus, n as usize, &out).map(|_| true),
        Command::GenSegments(args) => cmd_gen_segments(&args).map(|_| true),
        Command::Run { config, overrides } => cmd_run(&config, &overrides),
        Command::SwitchRun { graph, seeds, segments_per_level, reward_mode, out_dir, jobs } => {
            cmd_switch_run(&graph, &seeds, segments_per_level, reward_mode, &out_dir, jobs)
        }
        Command::Validate { graph } => cmd_validate(&graph),
    }
}

pub fn cmd_build_ngram(corpus: &Path, n: usize, out: &Path) -> Result<LevelGraph> {
    let corpus = sources::load_corpus(corpus)?;
    let graph = sources::build_ngram_graph(&corpus, n)?;
    sources::save_graph(&graph, out)?;
    println!("{}", graph.stats());
    Ok(graph)
}

pub fn cmd_gen_segments(args: &GenSegmentsArgs) -> Result<LevelGraph> {
    let mut params = match &args.params {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            serde_json::from_str(&text).map_err(|e| Error::json(path, e))?
        }
        None => SegmentGraphParams::default(),
    };
    if let Some(seed) = args.seed {
        params.rng_seed = seed;
    }
    if let Some(r) = args.grid_resolution {
        params.grid_resolution = r;
    }
    if let Some(k) = args.elites_per_cell {
        params.elites_per_cell = k;
    }
    if let Some(p) = args.link_probability {
        params.link_probability = p;
    }
    let graph = sources::generate_segment_graph(&params)?;
    sources::save_graph(&graph, &args.out)?;
    println!("{}", graph.stats());
    Ok(graph)
}

fn with_jobs<T: Send>(jobs: Option<usize>, work: impl FnOnce() -> T + Send) -> Result<T> {
    match jobs {
        None => Ok(work()),
        Some(0) => Err(Error::Config("--jobs must be at least 1".into())),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
            Ok(pool.install(work))
        }
    }
}

fn prepare_out_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_outputs(graph: &LevelGraph, summaries: &[ExperimentSummary], dir: &Path) -> Result<()> {
    write_level_csv(summaries, &dir.join(LEVELS_CSV))?;
    write_heatmap_csv(summaries, &dir.join(HEATMAP_CSV))?;
    let stats = graph.stats();
    write_summary_json(&SummaryDocument::new(&stats, summaries), &dir.join(SUMMARY_JSON))
}

fn print_table(summaries: &[ExperimentSummary]) {
    println!(
        "{:<8} {:<40} {:>18} {:>18}",
        "director", "proxy", "reward", "percent complete"
    );
    for s in summaries {
        println!(
            "{:<8} {:<40} {:>8.4} ± {:<7.4} {:>8.4} ± {:<7.4}",
            s.director.as_str(),
            s.schedule,
            s.reward.mean,
            s.reward.std,
            s.percent_complete.mean,
            s.percent_complete.std
        );
    }
}

fn report_warnings(summaries: &[ExperimentSummary]) -> usize {
    let warnings: Vec<&String> = summaries.iter().flat_map(|s| s.warnings.iter()).collect();
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    warnings.len()
}

pub fn cmd_run(config_path: &Path, overrides: &RunOverrides) -> Result<bool> {
    let mut config = RunConfig::load(config_path)?;
    config.apply(overrides);
    let experiments = config.experiments()?;
    if !config.graph.is_file() {
        return Err(Error::Config(format!("graph file {} does not exist", config.graph.display())));
    }
    let out_dir = config
        .output_dir
        .clone()
        .unwrap_or_else(|| config_path.parent().unwrap_or(Path::new(".")).to_path_buf());
    prepare_out_dir(&out_dir)?;
    let graph = sources::load_graph(&config.graph)?;

    let summaries = with_jobs(overrides.jobs, || {
        experiments
            .iter()
            .map(|e| run_experiment(e, &graph))
            .collect::<Result<Vec<_>>>()
    })??;
    write_outputs(&graph, &summaries, &out_dir)?;
    print_table(&summaries);
    let warnings = report_warnings(&summaries);
    Ok(!(overrides.deny_warnings && warnings > 0))
}

pub fn cmd_switch_run(
    graph_path: &Path,
    seeds: &[u64],
    segments_per_level: u32,
    reward_mode: RewardMode,
    out_dir: &Path,
    jobs: Option<usize>,
) -> Result<bool> {
    let graph = sources::load_graph(graph_path)?;
    prepare_out_dir(out_dir)?;
    let mut base = ExperimentConfig::new(Director::Api, crate::harness::switch_schedule(), seeds.to_vec(), segments_per_level);
    base.reward_mode = reward_mode;
    let summaries = with_jobs(jobs, || run_switch_experiment(&graph, seeds, &base))??;
    write_outputs(&graph, &summaries, out_dir)?;
    print_table(&summaries);
    report_warnings(&summaries);
    Ok(true)
}

pub fn cmd_validate(graph_path: &Path) -> Result<bool> {
    let doc = match sources::load_graph_document(graph_path) {
        Ok(doc) => doc,
        Err(e) => {
            println!("FAIL parse: {e}");
            return Ok(false);
        }
    };
    let mut ok = true;
    for check in doc.invariant_report() {
        if check.passed() {
            println!("PASS {}", check.name);
        } else {
            ok = false;
            for failure in &check.failures {
                println!("FAIL {}: {failure}", check.name);
            }
        }
    }
    Ok(ok)
}
