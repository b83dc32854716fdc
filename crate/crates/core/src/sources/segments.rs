//! Synthetic segment graphs shaped like a MAP-Elites archive over two
//! behavioral characteristics (density, leniency), with link states inserted
//! between segments that do not concatenate directly.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{CellId, LevelGraph, StateNode};
use crate::seeds;

use super::{DEATH_ID, START_ID};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SegmentGraphParams {
    /// Cells per behavioral-characteristic axis.
    pub grid_resolution: u32,
    pub elites_per_cell: u32,
    /// Chance that an adjacent pair is joined through a link state.
    pub link_probability: f64,
    /// Maximum characteristic-space distance between connected segments.
    pub neighbor_radius: f64,
    /// Each segment keeps at most this many nearest candidates.
    pub max_out_degree: usize,
    /// `start` connects to every elite of the cells with `x + y < start_cells`.
    pub start_cells: u32,
    pub rng_seed: u64,
    /// Regeneration attempts before giving up on a disconnected result.
    pub max_attempts: u32,
}

impl Default for SegmentGraphParams {
    fn default() -> Self {
        SegmentGraphParams {
            grid_resolution: 19,
            elites_per_cell: 3,
            link_probability: 0.89,
            neighbor_radius: 0.06,
            max_out_degree: 9,
            start_cells: 2,
            rng_seed: 2022,
            max_attempts: 16,
        }
    }
}

impl SegmentGraphParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(format!("segment graph parameters: {m}")));
        if self.grid_resolution == 0 || self.elites_per_cell == 0 {
            return bad("grid_resolution and elites_per_cell must be positive");
        }
        if !(0.0..=1.0).contains(&self.link_probability) {
            return bad("link_probability outside [0, 1]");
        }
        if self.neighbor_radius.is_nan() || self.neighbor_radius <= 0.0 || self.max_out_degree == 0 {
            return bad("neighbor_radius and max_out_degree must be positive");
        }
        if self.start_cells == 0 || self.max_attempts == 0 {
            return bad("start_cells and max_attempts must be positive");
        }
        Ok(())
    }
}

pub fn segment_id(cell: CellId, elite: u32) -> String {
    format!("e{:03}_{:03}_{:02}", cell.x, cell.y, elite)
}

pub fn link_id(from: &str, to: &str) -> String {
    format!("link/{from}/{to}")
}

/// Generates a graph, retrying with a fresh stream while some state is
/// unreachable from `start`.
pub fn generate_segment_graph(params: &SegmentGraphParams) -> Result<LevelGraph> {
    params.validate()?;
    for attempt in 0..params.max_attempts {
        let mut rng = seeds::stream_rng(params.rng_seed, u64::from(attempt));
        let graph = generate_once(params, &mut rng)?;
        if all_reachable(&graph) {
            return Ok(graph);
        }
    }
    Err(Error::Generation(format!(
        "no connected graph after {} attempts; raise neighbor_radius or start_cells",
        params.max_attempts
    )))
}

/// Every state except death is reachable from start.
fn all_reachable(graph: &LevelGraph) -> bool {
    graph
        .reachable_from_start()
        .iter()
        .enumerate()
        .all(|(i, &r)| r || i == graph.death().index())
}

struct Elite {
    id: String,
    cell: CellId,
    bcs: [f64; 2],
}

fn generate_once<R: Rng>(params: &SegmentGraphParams, rng: &mut R) -> Result<LevelGraph> {
    let res = params.grid_resolution;
    let width = 1.0 / f64::from(res);
    let mut elites = Vec::with_capacity((res * res * params.elites_per_cell) as usize);
    for x in 0..res {
        for y in 0..res {
            let cell = CellId { x, y };
            for k in 0..params.elites_per_cell {
                let d = (f64::from(x) + rng.gen::<f64>()) * width;
                let l = (f64::from(y) + rng.gen::<f64>()) * width;
                elites.push(Elite { id: segment_id(cell, k), cell, bcs: [d, l] });
            }
        }
    }
    let mut by_cell: BTreeMap<CellId, Vec<usize>> = BTreeMap::new();
    for (i, e) in elites.iter().enumerate() {
        by_cell.entry(e.cell).or_default().push(i);
    }

    let mut states: Vec<StateNode> = elites
        .iter()
        .map(|e| {
            let mut node = StateNode::segment(e.id.clone(), (e.bcs[0] + e.bcs[1]) / 2.0, e.bcs.to_vec());
            node.cell_id = Some(e.cell);
            node
        })
        .collect();
    states.push(StateNode::start(START_ID));
    states.push(StateNode::death(DEATH_ID));

    let mut edges = Vec::new();
    for e in &elites {
        if e.cell.x + e.cell.y < params.start_cells {
            edges.push((START_ID.to_owned(), e.id.clone()));
        }
    }

    let reach = (params.neighbor_radius / width).ceil() as i64;
    for (i, a) in elites.iter().enumerate() {
        let mut candidates: Vec<(f64, usize)> = Vec::new();
        for dx in -reach..=reach {
            for dy in -reach..=reach {
                let (cx, cy) = (i64::from(a.cell.x) + dx, i64::from(a.cell.y) + dy);
                if cx < 0 || cy < 0 || cx >= i64::from(res) || cy >= i64::from(res) {
                    continue;
                }
                let cell = CellId { x: cx as u32, y: cy as u32 };
                for &j in by_cell.get(&cell).into_iter().flatten() {
                    if j == i {
                        continue;
                    }
                    let b = &elites[j];
                    let dist = (a.bcs[0] - b.bcs[0]).hypot(a.bcs[1] - b.bcs[1]);
                    if dist <= params.neighbor_radius {
                        candidates.push((dist, j));
                    }
                }
            }
        }
        candidates.sort_by(|p, q| p.0.total_cmp(&q.0).then(p.1.cmp(&q.1)));
        candidates.truncate(params.max_out_degree);
        candidates.sort_by_key(|&(_, j)| j);
        for (_, j) in candidates {
            let b = &elites[j];
            if rng.gen_bool(params.link_probability) {
                let id = link_id(&a.id, &b.id);
                let bcs = vec![(a.bcs[0] + b.bcs[0]) / 2.0, (a.bcs[1] + b.bcs[1]) / 2.0];
                let designer = (states[i].designer_reward + states[j].designer_reward) / 2.0;
                let mut link = StateNode::segment(id.clone(), designer, bcs);
                link.is_link = true;
                states.push(link);
                edges.push((a.id.clone(), id.clone()));
                edges.push((id, b.id.clone()));
            } else {
                edges.push((a.id.clone(), b.id.clone()));
            }
        }
    }
    LevelGraph::new(states, edges, START_ID, DEATH_ID, 2.0)
}
