//! Rule-based player proxies. A proxy beats every segment whose summed
//! behavioral characteristics fall below its threshold, fails the first one
//! that does not, and scores each visited segment with its reward formula.

use std::collections::BTreeMap;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{LevelGraph, StateIx, StateNode};
use crate::mdp::PlayResult;

/// Player reward `M(s)` as a function of a state's behavioral characteristics.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "index")]
pub enum RewardFormula {
    /// `ΣBC / MAX_BC`: likes hard segments.
    SumBcsOverMax,
    /// `1 - ΣBC / MAX_BC`: likes easy segments.
    OneMinusSumBcsOverMax,
    /// A single characteristic; 0 when the graph has fewer characteristics.
    BcComponent(usize),
}

impl RewardFormula {
    pub fn evaluate(self, node: &StateNode, max_bc: f64) -> f64 {
        match self {
            RewardFormula::SumBcsOverMax => node.bc_sum() / max_bc,
            RewardFormula::OneMinusSumBcsOverMax => 1.0 - node.bc_sum() / max_bc,
            RewardFormula::BcComponent(i) => node.bcs.get(i).copied().unwrap_or(0.0),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlayerProxy {
    pub name: String,
    /// Segments with `ΣBC < factor * MAX_BC` are always beaten.
    pub win_threshold_factor: f64,
    /// Progress inside the failed segment is drawn uniformly from this range.
    pub fail_fraction_range: (f64, f64),
    pub reward_formula: RewardFormula,
    /// Chance of beating a segment above the threshold anyway.
    #[serde(default)]
    pub win_probability_above_threshold: f64,
}

impl PlayerProxy {
    pub fn new(name: &str, factor: f64, range: (f64, f64), formula: RewardFormula) -> Self {
        PlayerProxy {
            name: name.to_owned(),
            win_threshold_factor: factor,
            fail_fraction_range: range,
            reward_formula: formula,
            win_probability_above_threshold: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.fail_fraction_range;
        let bad = |what: String| Err(Error::Config(format!("proxy `{}`: {what}", self.name)));
        if !(self.win_threshold_factor > 0.0 && self.win_threshold_factor < 1.0) {
            return bad(format!("threshold factor {} outside (0, 1)", self.win_threshold_factor));
        }
        if !(0.0 <= lo && lo < hi && hi < 1.0) {
            return bad(format!("fail fraction range [{lo}, {hi}] must satisfy 0 <= low < high < 1"));
        }
        if !(0.0..=1.0).contains(&self.win_probability_above_threshold) {
            return bad("win probability above threshold outside [0, 1]".into());
        }
        Ok(())
    }

    pub fn beats_outright(&self, node: &StateNode, max_bc: f64) -> bool {
        node.bc_sum() < self.win_threshold_factor * max_bc
    }

    pub fn player_reward(&self, node: &StateNode, max_bc: f64) -> f64 {
        self.reward_formula.evaluate(node, max_bc)
    }
}

pub const BAD_LIKES_HARD: &str = "Bad Player Likes Hard Levels";
pub const BAD_LIKES_EASY: &str = "Bad Player Likes Easy Levels";
pub const MEDIOCRE_LIKES_DENSITY: &str = "Mediocre Player Likes High Density";
pub const MEDIOCRE_LIKES_LENIENCY: &str = "Mediocre Player Likes High Leniency";
pub const GOOD_LIKES_HARD: &str = "Good Player Likes Hard Levels";
pub const GOOD_LIKES_EASY: &str = "Good Player Likes Easy Levels";

/// The six reference personas. Characteristic 0 is density, 1 is leniency.
pub fn preset_proxies() -> Vec<PlayerProxy> {
    use RewardFormula::*;
    vec![
        PlayerProxy::new(BAD_LIKES_HARD, 0.25, (0.25, 0.40), SumBcsOverMax),
        PlayerProxy::new(BAD_LIKES_EASY, 0.25, (0.25, 0.40), OneMinusSumBcsOverMax),
        PlayerProxy::new(MEDIOCRE_LIKES_DENSITY, 0.50, (0.50, 0.70), BcComponent(0)),
        PlayerProxy::new(MEDIOCRE_LIKES_LENIENCY, 0.50, (0.50, 0.70), BcComponent(1)),
        PlayerProxy::new(GOOD_LIKES_HARD, 0.75, (0.75, 0.95), SumBcsOverMax),
        PlayerProxy::new(GOOD_LIKES_EASY, 0.75, (0.75, 0.95), OneMinusSumBcsOverMax),
    ]
}

/// Presets first, then `extra`; a custom proxy with a preset's name replaces it.
pub fn proxy_roster(extra: &[PlayerProxy]) -> Vec<PlayerProxy> {
    let mut roster = preset_proxies();
    for p in extra {
        match roster.iter_mut().find(|q| q.name == p.name) {
            Some(slot) => *slot = p.clone(),
            None => roster.push(p.clone()),
        }
    }
    roster
}

pub fn find_proxy<'a>(roster: &'a [PlayerProxy], name: &str) -> Result<&'a PlayerProxy> {
    roster
        .iter()
        .find(|p| p.name == name)
        .ok_or_else(|| Error::Config(format!("unknown player proxy `{name}`")))
}

/// Loads custom proxies from a JSON array of proxy objects.
pub fn load_proxies(path: &Path) -> Result<Vec<PlayerProxy>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let proxies: Vec<PlayerProxy> = serde_json::from_str(&text).map_err(|e| Error::json(path, e))?;
    for p in &proxies {
        p.validate()?;
    }
    Ok(proxies)
}

/// Plays `level` in order and stops at the first failure.
pub fn play_level<R: Rng + ?Sized>(
    proxy: &PlayerProxy,
    level: &[StateIx],
    graph: &LevelGraph,
    rng: &mut R,
) -> PlayResult {
    let max_bc = graph.max_bc();
    let mut result = PlayResult {
        level_states: level.to_vec(),
        beaten: Vec::with_capacity(level.len()),
        failed_state: None,
        fail_fraction: None,
        per_state_m: BTreeMap::new(),
    };
    for &s in level {
        let node = graph.node(s);
        result.per_state_m.insert(s, proxy.player_reward(node, max_bc));
        let beaten = node.is_link
            || proxy.beats_outright(node, max_bc)
            || (proxy.win_probability_above_threshold > 0.0
                && rng.gen_bool(proxy.win_probability_above_threshold));
        if beaten {
            result.beaten.push(s);
        } else {
            let (lo, hi) = proxy.fail_fraction_range;
            result.failed_state = Some(s);
            result.fail_fraction = Some(rng.gen_range(lo..hi));
            break;
        }
    }
    result
}

fn segment_count(level: &[StateIx], graph: &LevelGraph) -> usize {
    level.iter().filter(|&&s| !graph.is_link(s)).count()
}

/// Beaten non-link states plus partial progress in the failed one, over the
/// level's non-link state count.
pub fn percent_complete(result: &PlayResult, graph: &LevelGraph) -> f64 {
    let total = segment_count(&result.level_states, graph);
    if total == 0 {
        return 1.0;
    }
    let beaten = segment_count(&result.beaten, graph) as f64;
    (beaten + result.fail_fraction.unwrap_or(0.0)) / total as f64
}

/// Mean `M(s)` over every non-link state of the level, unreached states
/// counting as zero.
pub fn level_reward(result: &PlayResult, graph: &LevelGraph) -> f64 {
    let total = segment_count(&result.level_states, graph);
    if total == 0 {
        return 0.0;
    }
    let sum: f64 = result
        .visited()
        .filter(|&s| !graph.is_link(s))
        .map(|s| result.per_state_m[&s])
        .sum();
    sum / total as f64
}
