//! Learned MDP state for one run: rewards with visit-count decay and
//! per-target win probabilities, plus the post-playthrough update steps.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{LevelGraph, StateIx, DEATH_REWARD};

/// Probability of beating a target before it has been played.
pub const INITIAL_WIN_PROBABILITY: f64 = 0.99;

/// Numerator used when recomputing a visited state's reward.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum RewardMode {
    /// `R_D(s) / N(s)`
    Designer,
    /// `M(s) / N(s)`
    Player,
    /// `(R_D(s) + M(s)) / N(s)`
    #[default]
    Both,
}

impl RewardMode {
    pub fn as_str(self) -> &'static str {
        match self {
            RewardMode::Designer => "designer",
            RewardMode::Player => "player",
            RewardMode::Both => "both",
        }
    }
}

/// Outcome of one playthrough of an assembled level.
#[derive(Clone, Debug, PartialEq)]
pub struct PlayResult {
    /// Every assembled state in order, link states included.
    pub level_states: Vec<StateIx>,
    /// Prefix of `level_states` the player beat.
    pub beaten: Vec<StateIx>,
    /// State right after the beaten prefix, if the player failed there.
    pub failed_state: Option<StateIx>,
    /// Progress made inside `failed_state`; `None` on a full clear.
    pub fail_fraction: Option<f64>,
    /// Player reward `M(s)` for every visited state.
    pub per_state_m: BTreeMap<StateIx, f64>,
}

impl PlayResult {
    /// Beaten states followed by the failed state, in play order.
    pub fn visited(&self) -> impl Iterator<Item = StateIx> + '_ {
        self.beaten.iter().copied().chain(self.failed_state)
    }

    pub fn cleared(&self) -> bool {
        self.failed_state.is_none()
    }

    pub fn check_shape(&self) -> Result<()> {
        let prefix_ok = self.beaten.len() <= self.level_states.len()
            && self.level_states[..self.beaten.len()] == self.beaten[..];
        let failed_ok = match self.failed_state {
            Some(f) => self.level_states.get(self.beaten.len()) == Some(&f),
            None => self.beaten.len() == self.level_states.len(),
        };
        if prefix_ok && failed_ok && self.fail_fraction.is_some() == self.failed_state.is_some() {
            Ok(())
        } else {
            Err(Error::Contract("play result is not a beaten prefix plus optional failed state".into()))
        }
    }
}

/// Mutable learning state of one run.
#[derive(Clone, Debug, PartialEq)]
pub struct MdpTables {
    reward: Vec<f64>,
    visit_count: Vec<u64>,
    target_wins: Vec<u64>,
    target_visits: Vec<u64>,
    win_prob: Vec<f64>,
}

impl MdpTables {
    /// Rewards start at the designer rewards, every count at its initial
    /// value and every target at [`INITIAL_WIN_PROBABILITY`].
    pub fn new(graph: &LevelGraph) -> Self {
        let n = graph.len();
        let mut reward: Vec<f64> = graph.nodes().iter().map(|s| s.designer_reward).collect();
        reward[graph.death().index()] = DEATH_REWARD;
        MdpTables {
            reward,
            visit_count: vec![1; n],
            target_wins: vec![0; n],
            target_visits: vec![0; n],
            win_prob: vec![INITIAL_WIN_PROBABILITY; n],
        }
    }

    pub fn reward(&self, s: StateIx) -> f64 {
        self.reward[s.index()]
    }

    pub fn rewards(&self) -> &[f64] {
        &self.reward
    }

    pub fn visit_count(&self, s: StateIx) -> u64 {
        self.visit_count[s.index()]
    }

    pub fn target_wins(&self, s: StateIx) -> u64 {
        self.target_wins[s.index()]
    }

    pub fn target_visits(&self, s: StateIx) -> u64 {
        self.target_visits[s.index()]
    }

    /// Probability of beating `s` when an edge into it is taken.
    pub fn win_probability(&self, s: StateIx) -> f64 {
        self.win_prob[s.index()]
    }

    pub fn win_probabilities(&self) -> &[f64] {
        &self.win_prob
    }

    /// Probability of dying when an edge into `s` is taken.
    pub fn death_probability(&self, s: StateIx) -> f64 {
        1.0 - self.win_prob[s.index()]
    }

    /// Overrides a reward; for hand-built models and tests.
    pub fn set_reward(&mut self, s: StateIx, reward: f64) {
        self.reward[s.index()] = reward;
    }

    /// Overrides a target's win probability; for hand-built models and tests.
    pub fn set_win_probability(&mut self, s: StateIx, p: f64) {
        assert!(p > 0.0 && p <= 1.0, "win probability {p} outside (0, 1]");
        self.win_prob[s.index()] = p;
    }

    /// Reward decay. Every visit bumps `N(s)` (and `N` of every state in the
    /// same grid cell), then sets `R(s)` to the mode's numerator over `N(s)`.
    pub fn update_rewards(&mut self, graph: &LevelGraph, result: &PlayResult, mode: RewardMode) -> Result<()> {
        result.check_shape()?;
        for s in result.visited() {
            let m = *result.per_state_m.get(&s).ok_or_else(|| {
                Error::Contract(format!("visited state `{}` has no player reward", graph.id(s)))
            })?;
            match graph.node(s).cell_id {
                Some(cell) => {
                    for &mate in graph.cell_members(cell) {
                        self.visit_count[mate.index()] += 1;
                    }
                }
                None => self.visit_count[s.index()] += 1,
            }
            let designer = graph.node(s).designer_reward;
            let numerator = match mode {
                RewardMode::Designer => designer,
                RewardMode::Player => m,
                RewardMode::Both => designer + m,
            };
            self.reward[s.index()] = numerator / self.visit_count[s.index()] as f64;
        }
        Ok(())
    }

    /// Counts every traversed edge against its target, wins only for beaten
    /// targets, then re-estimates `P(win into s) = (1 + wins) / (1 + visits)`
    /// for each visited target.
    pub fn update_transitions(&mut self, graph: &LevelGraph, result: &PlayResult) {
        for (i, s) in result.visited().enumerate() {
            self.target_visits[s.index()] += 1;
            if i < result.beaten.len() {
                self.target_wins[s.index()] += 1;
            }
        }
        for s in result.visited() {
            let i = s.index();
            self.win_prob[i] = (1 + self.target_wins[i]) as f64 / (1 + self.target_visits[i]) as f64;
        }
        debug_assert!(result.visited().all(|s| s != graph.start() && s != graph.death()));
    }
}

/// Adds `(start, s)` for every beaten non-link state not yet adjacent to
/// start. Returns the number of edges added.
pub fn augment_start_edges(graph: &mut LevelGraph, result: &PlayResult) -> usize {
    let start = graph.start();
    let mut added = 0;
    for &s in &result.beaten {
        if graph.is_link(s) || s == graph.death() || s == start {
            continue;
        }
        if graph.add_edge(start, s).unwrap_or(false) {
            added += 1;
        }
    }
    added
}
