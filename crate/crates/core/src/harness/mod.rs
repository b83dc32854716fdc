//! Experiment protocols: the play → update → rebuild loop for one seed, and
//! aggregation over seeds.

mod output;

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::directors::{
    assemble_level, build_policy_greedy, build_policy_random, policy_iteration, ApiState, Director, SolverConfig,
};
use crate::error::{Error, Result};
use crate::graph::{CellId, LevelGraph};
use crate::mdp::{augment_start_edges, MdpTables, RewardMode};
use crate::players::{self, find_proxy, level_reward, percent_complete, play_level, PlayerProxy};
use crate::seeds;

pub use output::{write_heatmap_csv, write_level_csv, write_summary_json, SummaryDocument};

/// Levels played by the first proxy of the switch experiment.
pub const SWITCH_AFTER: u32 = 35;
/// Levels played by the second proxy of the switch experiment.
pub const SWITCH_TAIL: u32 = 15;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleEntry {
    pub proxy: String,
    pub levels: u32,
}

impl ScheduleEntry {
    pub fn new(proxy: &str, levels: u32) -> Self {
        ScheduleEntry { proxy: proxy.to_owned(), levels }
    }
}

/// Human-readable name of a schedule, e.g. `A x35 -> B x15`. A single-proxy
/// schedule is just the proxy name.
pub fn schedule_label(schedule: &[ScheduleEntry]) -> String {
    match schedule {
        [only] => only.proxy.clone(),
        _ => schedule
            .iter()
            .map(|e| format!("{} x{}", e.proxy, e.levels))
            .collect::<Vec<_>>()
            .join(" -> "),
    }
}

pub fn switch_schedule() -> Vec<ScheduleEntry> {
    vec![
        ScheduleEntry::new(players::GOOD_LIKES_HARD, SWITCH_AFTER),
        ScheduleEntry::new(players::BAD_LIKES_EASY, SWITCH_TAIL),
    ]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub director: Director,
    pub proxy_schedule: Vec<ScheduleEntry>,
    pub seeds: Vec<u64>,
    pub levels_per_run: u32,
    pub segments_per_level: u32,
    #[serde(default)]
    pub reward_mode: RewardMode,
    #[serde(default)]
    pub solver: SolverConfig,
    /// Proxies beyond the six presets; a preset name overrides the preset.
    #[serde(default)]
    pub custom_proxies: Vec<PlayerProxy>,
    /// Wall-clock rebuild times go into the summary only when set, since they
    /// make the output nondeterministic.
    #[serde(default)]
    pub record_timing: bool,
}

impl ExperimentConfig {
    pub fn new(director: Director, proxy_schedule: Vec<ScheduleEntry>, seeds: Vec<u64>, segments_per_level: u32) -> Self {
        let levels_per_run = proxy_schedule.iter().map(|e| e.levels).sum();
        ExperimentConfig {
            director,
            proxy_schedule,
            seeds,
            levels_per_run,
            segments_per_level,
            reward_mode: RewardMode::Both,
            solver: SolverConfig::default(),
            custom_proxies: Vec::new(),
            record_timing: false,
        }
    }

    pub fn roster(&self) -> Vec<PlayerProxy> {
        players::proxy_roster(&self.custom_proxies)
    }

    pub fn validate(&self) -> Result<()> {
        let scheduled: u32 = self.proxy_schedule.iter().map(|e| e.levels).sum();
        if scheduled != self.levels_per_run {
            return Err(Error::Config(format!(
                "proxy schedule covers {scheduled} levels but levels_per_run is {}",
                self.levels_per_run
            )));
        }
        if self.levels_per_run == 0 || self.segments_per_level == 0 {
            return Err(Error::Config("levels_per_run and segments_per_level must be positive".into()));
        }
        if self.seeds.is_empty() {
            return Err(Error::Config("at least one seed is required".into()));
        }
        self.solver.validate()?;
        let roster = self.roster();
        for p in &self.custom_proxies {
            p.validate()?;
        }
        for e in &self.proxy_schedule {
            find_proxy(&roster, &e.proxy)?;
        }
        Ok(())
    }

    /// Proxy in effect for each level, 0-based.
    pub fn proxy_per_level(&self) -> Vec<&str> {
        self.proxy_schedule
            .iter()
            .flat_map(|e| std::iter::repeat_n(e.proxy.as_str(), e.levels as usize))
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelRecord {
    pub proxy: String,
    pub reward: f64,
    pub percent_complete: f64,
    /// Assembled states, link states included.
    pub level_length: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunMetrics {
    pub seed: u64,
    pub per_level: Vec<LevelRecord>,
    pub cell_visits: BTreeMap<CellId, u64>,
    pub pi_rebuild_times: Vec<Duration>,
    pub warnings: Vec<String>,
    /// Set when assembly failed and the run stopped early.
    pub aborted: Option<String>,
}

/// Plays one seeded run: every level rebuilds the director's policy,
/// assembles a level, lets the scheduled proxy play it, then updates the MDP.
/// The director never learns which proxy is playing.
pub fn run_single(config: &ExperimentConfig, graph: &LevelGraph, seed: u64) -> Result<RunMetrics> {
    config.validate()?;
    let roster = config.roster();
    let schedule: Vec<&PlayerProxy> = config
        .proxy_per_level()
        .into_iter()
        .map(|name| find_proxy(&roster, name))
        .collect::<Result<_>>()?;

    let mut graph = graph.clone();
    let mut tables = MdpTables::new(&graph);
    let mut api = ApiState::default();
    let mut director_rng = seeds::stream_rng(seed ^ config.solver.rng_seed, 0);
    let mut player_rng = seeds::stream_rng(seed, 1);
    let mut metrics = RunMetrics {
        seed,
        per_level: Vec::with_capacity(schedule.len()),
        cell_visits: BTreeMap::new(),
        pi_rebuild_times: Vec::new(),
        warnings: Vec::new(),
        aborted: None,
    };

    for (level_no, proxy) in schedule.into_iter().enumerate() {
        let policy = match config.director {
            Director::Random => build_policy_random(&graph, &mut director_rng),
            Director::Greedy => build_policy_greedy(&graph, &tables),
            Director::Pi | Director::Api => {
                let began = Instant::now();
                let outcome = policy_iteration(&graph, &tables, &config.solver, &mut director_rng);
                metrics.pi_rebuild_times.push(began.elapsed());
                if !outcome.converged {
                    metrics.warnings.push(format!(
                        "seed {seed} level {}: policy iteration did not converge in {} rounds",
                        level_no + 1,
                        outcome.rounds
                    ));
                }
                outcome.policy
            }
        };
        let level = match assemble_level(&graph, &policy, config.segments_per_level as usize) {
            Ok(level) => level,
            Err(e) => {
                let msg = format!("seed {seed} level {}: {e}", level_no + 1);
                metrics.warnings.push(msg.clone());
                metrics.aborted = Some(msg);
                break;
            }
        };
        let result = play_level(proxy, &level, &graph, &mut player_rng);

        metrics.per_level.push(LevelRecord {
            proxy: proxy.name.clone(),
            reward: level_reward(&result, &graph),
            percent_complete: percent_complete(&result, &graph),
            level_length: level.len(),
        });
        for s in result.visited() {
            if let Some(cell) = graph.node(s).cell_id {
                *metrics.cell_visits.entry(cell).or_default() += 1;
            }
        }

        augment_start_edges(&mut graph, &result);
        tables.update_rewards(&graph, &result, config.reward_mode)?;
        tables.update_transitions(&graph, &result);
        if config.director == Director::Api {
            api.record(&result);
            api.prune_start_edges(&mut graph);
        }
    }
    Ok(metrics)
}

/// Mean and population standard deviation.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    pub fn of(values: &[f64]) -> Self {
        if values.is_empty() {
            return MeanStd::default();
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        MeanStd { mean, std: var.sqrt() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeatCell {
    pub cell_x: u32,
    pub cell_y: u32,
    pub mean_visits: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimingSummary {
    pub rebuilds: usize,
    pub mean_seconds: f64,
    pub max_seconds: f64,
}

/// Aggregate of one (director, schedule) cell over all its seeds.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentSummary {
    pub director: Director,
    pub schedule: String,
    pub reward_mode: RewardMode,
    pub runs: Vec<RunMetrics>,
    pub reward: MeanStd,
    pub percent_complete: MeanStd,
    /// Per-level means over seeds.
    pub reward_curve: Vec<f64>,
    pub percent_complete_curve: Vec<f64>,
    /// Visits per cell averaged over runs; every cell of the graph is listed.
    pub heat_map: Vec<HeatCell>,
    pub warnings: Vec<String>,
    pub timing: Option<TimingSummary>,
}

impl ExperimentSummary {
    pub fn aggregate(config: &ExperimentConfig, graph: &LevelGraph, runs: Vec<RunMetrics>) -> Self {
        let records: Vec<&LevelRecord> = runs.iter().flat_map(|r| r.per_level.iter()).collect();
        let rewards: Vec<f64> = records.iter().map(|r| r.reward).collect();
        let completes: Vec<f64> = records.iter().map(|r| r.percent_complete).collect();

        let levels = runs.iter().map(|r| r.per_level.len()).max().unwrap_or(0);
        let curve = |f: fn(&LevelRecord) -> f64| -> Vec<f64> {
            (0..levels)
                .map(|i| {
                    let at: Vec<f64> = runs.iter().filter_map(|r| r.per_level.get(i)).map(f).collect();
                    at.iter().sum::<f64>() / at.len() as f64
                })
                .collect()
        };

        let n_runs = runs.len().max(1) as f64;
        let heat_map = graph
            .cells()
            .map(|cell| HeatCell {
                cell_x: cell.x,
                cell_y: cell.y,
                mean_visits: runs.iter().map(|r| r.cell_visits.get(&cell).copied().unwrap_or(0)).sum::<u64>()
                    as f64
                    / n_runs,
            })
            .collect();

        let times: Vec<f64> = runs
            .iter()
            .flat_map(|r| r.pi_rebuild_times.iter().map(Duration::as_secs_f64))
            .collect();
        let timing = (config.record_timing && !times.is_empty()).then(|| TimingSummary {
            rebuilds: times.len(),
            mean_seconds: times.iter().sum::<f64>() / times.len() as f64,
            max_seconds: times.iter().copied().fold(0.0, f64::max),
        });

        ExperimentSummary {
            director: config.director,
            schedule: schedule_label(&config.proxy_schedule),
            reward_mode: config.reward_mode,
            reward: MeanStd::of(&rewards),
            percent_complete: MeanStd::of(&completes),
            reward_curve: curve(|r| r.reward),
            percent_complete_curve: curve(|r| r.percent_complete),
            heat_map,
            warnings: runs.iter().flat_map(|r| r.warnings.iter().cloned()).collect(),
            timing,
            runs,
        }
    }

    /// Mean of the per-level reward curve over levels `first..=last` (1-based).
    pub fn reward_window(&self, first: usize, last: usize) -> f64 {
        window_mean(&self.reward_curve, first, last)
    }

    pub fn percent_complete_window(&self, first: usize, last: usize) -> f64 {
        window_mean(&self.percent_complete_curve, first, last)
    }
}

fn window_mean(curve: &[f64], first: usize, last: usize) -> f64 {
    let slice = &curve[first - 1..last.min(curve.len())];
    slice.iter().sum::<f64>() / slice.len() as f64
}

/// Runs every seed (in parallel) and aggregates in seed order.
pub fn run_experiment(config: &ExperimentConfig, graph: &LevelGraph) -> Result<ExperimentSummary> {
    config.validate()?;
    let runs = config
        .seeds
        .par_iter()
        .map(|&seed| run_single(config, graph, seed))
        .collect::<Result<Vec<_>>>()?;
    Ok(ExperimentSummary::aggregate(config, graph, runs))
}

/// Every director against the proxy switch: the hard-liking good player for
/// 35 levels, then the easy-liking bad player for 15. `base` supplies the
/// level length, reward mode and solver settings.
pub fn run_switch_experiment(
    graph: &LevelGraph,
    seeds: &[u64],
    base: &ExperimentConfig,
) -> Result<Vec<ExperimentSummary>> {
    Director::ALL
        .iter()
        .map(|&director| {
            let config = ExperimentConfig {
                director,
                proxy_schedule: switch_schedule(),
                seeds: seeds.to_vec(),
                levels_per_run: SWITCH_AFTER + SWITCH_TAIL,
                ..base.clone()
            };
            run_experiment(&config, graph)
        })
        .collect()
}
