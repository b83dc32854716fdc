use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::GraphStats;

use super::{ExperimentSummary, MeanStd, TimingSummary};

/// The header is written up front so that an empty table still has one.
fn headed_writer(path: &Path, header: &[&str]) -> Result<csv::Writer<std::fs::File>> {
    let mut out = csv::WriterBuilder::new().has_headers(false).from_path(path)?;
    out.write_record(header)?;
    Ok(out)
}

#[derive(Serialize)]
struct LevelRow<'a> {
    seed: u64,
    level: usize,
    director: &'a str,
    proxy: &'a str,
    reward: f64,
    percent_complete: f64,
}

/// One row per played level: `seed,level,director,proxy,reward,percent_complete`.
/// Levels are numbered from 1.
pub fn write_level_csv(summaries: &[ExperimentSummary], path: &Path) -> Result<()> {
    let mut out = headed_writer(path, &["seed", "level", "director", "proxy", "reward", "percent_complete"])?;
    for summary in summaries {
        for run in &summary.runs {
            for (i, record) in run.per_level.iter().enumerate() {
                out.serialize(LevelRow {
                    seed: run.seed,
                    level: i + 1,
                    director: summary.director.as_str(),
                    proxy: &record.proxy,
                    reward: record.reward,
                    percent_complete: record.percent_complete,
                })?;
            }
        }
    }
    out.flush().map_err(|e| Error::io(path, e))
}

#[derive(Serialize)]
struct HeatRow<'a> {
    director: &'a str,
    proxy: &'a str,
    cell_x: u32,
    cell_y: u32,
    mean_visits: f64,
}

/// Mean visits per grid cell: `director,proxy,cell_x,cell_y,mean_visits`.
/// The proxy column holds the schedule label.
pub fn write_heatmap_csv(summaries: &[ExperimentSummary], path: &Path) -> Result<()> {
    let mut out = headed_writer(path, &["director", "proxy", "cell_x", "cell_y", "mean_visits"])?;
    for summary in summaries {
        for cell in &summary.heat_map {
            out.serialize(HeatRow {
                director: summary.director.as_str(),
                proxy: &summary.schedule,
                cell_x: cell.cell_x,
                cell_y: cell.cell_y,
                mean_visits: cell.mean_visits,
            })?;
        }
    }
    out.flush().map_err(|e| Error::io(path, e))
}

#[derive(Debug, Serialize)]
pub struct SummaryEntry<'a> {
    pub director: &'a str,
    pub proxy: &'a str,
    pub reward_mode: &'a str,
    pub runs: usize,
    pub levels: usize,
    pub reward: MeanStd,
    pub percent_complete: MeanStd,
    pub reward_curve: &'a [f64],
    pub percent_complete_curve: &'a [f64],
    pub aborted_runs: usize,
    pub warnings: &'a [String],
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pi_timing: Option<&'a TimingSummary>,
}

#[derive(Debug, Serialize)]
pub struct SummaryDocument<'a> {
    pub graph: &'a GraphStats,
    pub experiments: Vec<SummaryEntry<'a>>,
}

impl<'a> SummaryDocument<'a> {
    pub fn new(graph: &'a GraphStats, summaries: &'a [ExperimentSummary]) -> Self {
        SummaryDocument {
            graph,
            experiments: summaries
                .iter()
                .map(|s| SummaryEntry {
                    director: s.director.as_str(),
                    proxy: &s.schedule,
                    reward_mode: s.reward_mode.as_str(),
                    runs: s.runs.len(),
                    levels: s.runs.iter().map(|r| r.per_level.len()).sum(),
                    reward: s.reward,
                    percent_complete: s.percent_complete,
                    reward_curve: &s.reward_curve,
                    percent_complete_curve: &s.percent_complete_curve,
                    aborted_runs: s.runs.iter().filter(|r| r.aborted.is_some()).count(),
                    warnings: &s.warnings,
                    pi_timing: s.timing.as_ref(),
                })
                .collect(),
        }
    }
}

pub fn write_summary_json(doc: &SummaryDocument<'_>, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(doc).map_err(|e| Error::json(path, e))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}
