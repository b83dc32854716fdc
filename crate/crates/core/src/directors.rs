//! Directors build a level-assembly policy from the current MDP; levels are
//! assembled by walking that policy from `start`.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{LevelGraph, StateIx};
use crate::mdp::{MdpTables, PlayResult};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Director {
    Random,
    Greedy,
    Pi,
    Api,
}

impl Director {
    pub const ALL: [Director; 4] = [Director::Api, Director::Pi, Director::Greedy, Director::Random];

    pub fn as_str(self) -> &'static str {
        match self {
            Director::Random => "random",
            Director::Greedy => "greedy",
            Director::Pi => "pi",
            Director::Api => "api",
        }
    }
}

impl fmt::Display for Director {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Director {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "random" => Ok(Director::Random),
            "greedy" => Ok(Director::Greedy),
            "pi" => Ok(Director::Pi),
            "api" => Ok(Director::Api),
            other => Err(Error::Config(format!("unknown director `{other}`"))),
        }
    }
}

/// Chosen successor for every state with at least one outgoing edge.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Policy {
    choice: Vec<Option<StateIx>>,
}

impl Policy {
    pub fn empty(graph: &LevelGraph) -> Self {
        Policy { choice: vec![None; graph.len()] }
    }

    pub fn get(&self, s: StateIx) -> Option<StateIx> {
        self.choice[s.index()]
    }

    /// Sets `π(s)`. Panics unless `to` is a successor of `s`.
    pub fn set(&mut self, graph: &LevelGraph, s: StateIx, to: StateIx) {
        assert!(graph.has_edge(s, to), "{} is not a successor of {}", graph.id(to), graph.id(s));
        self.choice[s.index()] = Some(to);
    }

    pub fn iter(&self) -> impl Iterator<Item = (StateIx, StateIx)> + '_ {
        self.choice
            .iter()
            .enumerate()
            .filter_map(|(i, c)| c.map(|t| (StateIx::new(i), t)))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct UtilityTable {
    utility: Vec<f64>,
}

impl UtilityTable {
    pub fn zeros(graph: &LevelGraph) -> Self {
        UtilityTable { utility: vec![0.0; graph.len()] }
    }

    pub fn get(&self, s: StateIx) -> f64 {
        self.utility[s.index()]
    }

    pub fn set(&mut self, s: StateIx, u: f64) {
        self.utility[s.index()] = u;
    }

    pub fn reset(&mut self) {
        self.utility.iter_mut().for_each(|u| *u = 0.0);
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    /// Discount factor.
    pub gamma: f64,
    /// Bellman sweeps per policy-evaluation step.
    pub eval_sweeps: u32,
    /// Cap on evaluation/improvement rounds per rebuild.
    pub max_improve_rounds: u32,
    /// Mixed into each run's director stream.
    pub rng_seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            gamma: 0.95,
            eval_sweeps: 20,
            max_improve_rounds: 100,
            rng_seed: 0,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::Config(format!("gamma {} outside (0, 1)", self.gamma)));
        }
        if self.eval_sweeps == 0 || self.max_improve_rounds == 0 {
            return Err(Error::Config("eval_sweeps and max_improve_rounds must be positive".into()));
        }
        Ok(())
    }
}

/// Uniform choice among the successors of every state.
pub fn build_policy_random<R: Rng + ?Sized>(graph: &LevelGraph, rng: &mut R) -> Policy {
    let mut policy = Policy::empty(graph);
    for s in graph.states() {
        let succ = graph.successors(s);
        if !succ.is_empty() {
            policy.choice[s.index()] = Some(succ[rng.gen_range(0..succ.len())]);
        }
    }
    policy
}

/// First maximum in ascending-id order, so ties go to the smallest id.
fn argmax_by(candidates: &[StateIx], mut value: impl FnMut(StateIx) -> f64) -> Option<StateIx> {
    let mut best: Option<(StateIx, f64)> = None;
    for &c in candidates {
        let v = value(c);
        if best.is_none_or(|(_, bv)| v > bv) {
            best = Some((c, v));
        }
    }
    best.map(|(c, _)| c)
}

/// Successor with the highest current reward `R(s')`.
pub fn build_policy_greedy(graph: &LevelGraph, tables: &MdpTables) -> Policy {
    let mut policy = Policy::empty(graph);
    for s in graph.states() {
        policy.choice[s.index()] = argmax_by(graph.successors(s), |t| tables.reward(t));
    }
    policy
}

/// Expected one-step value of aiming for `target`: beat it with
/// `P(win into target)`, otherwise fall into death.
#[inline]
fn action_value(tables: &MdpTables, death: StateIx, gamma: f64, u: &[f64], target: StateIx) -> f64 {
    let p = tables.win_probability(target);
    p * (tables.reward(target) + gamma * u[target.index()])
        + (1.0 - p) * (tables.reward(death) + gamma * u[death.index()])
}

/// Runs exactly `config.eval_sweeps` synchronous Bellman sweeps for `policy`.
/// States without a policy entry (death, dead ends) keep their utility.
pub fn policy_evaluation(
    graph: &LevelGraph,
    tables: &MdpTables,
    policy: &Policy,
    utilities: &mut UtilityTable,
    config: &SolverConfig,
) {
    let death = graph.death();
    let mut next = utilities.utility.clone();
    for _ in 0..config.eval_sweeps {
        for (s, target) in policy.iter() {
            next[s.index()] = action_value(tables, death, config.gamma, &utilities.utility, target);
        }
        std::mem::swap(&mut utilities.utility, &mut next);
    }
}

/// Greedy re-selection against `utilities`. Returns the new policy and
/// whether any choice changed.
pub fn policy_improvement(
    graph: &LevelGraph,
    tables: &MdpTables,
    utilities: &UtilityTable,
    policy: &Policy,
    gamma: f64,
) -> (Policy, bool) {
    let death = graph.death();
    let mut improved = Policy::empty(graph);
    let mut changed = false;
    for s in graph.states() {
        let best = argmax_by(graph.successors(s), |t| {
            action_value(tables, death, gamma, &utilities.utility, t)
        });
        changed |= best != policy.get(s);
        improved.choice[s.index()] = best;
    }
    (improved, changed)
}

#[derive(Clone, Debug, PartialEq)]
pub struct PiOutcome {
    pub policy: Policy,
    pub utilities: UtilityTable,
    /// Evaluation/improvement rounds run.
    pub rounds: u32,
    pub converged: bool,
}

/// Policy iteration from zero utilities and a random initial policy.
/// Stops when improvement changes nothing or after `max_improve_rounds`.
pub fn policy_iteration<R: Rng + ?Sized>(
    graph: &LevelGraph,
    tables: &MdpTables,
    config: &SolverConfig,
    rng: &mut R,
) -> PiOutcome {
    let mut utilities = UtilityTable::zeros(graph);
    let mut policy = build_policy_random(graph, rng);
    for round in 1..=config.max_improve_rounds {
        policy_evaluation(graph, tables, &policy, &mut utilities, config);
        let (next, changed) = policy_improvement(graph, tables, &utilities, &policy, config.gamma);
        policy = next;
        if !changed {
            return PiOutcome { policy, utilities, rounds: round, converged: true };
        }
    }
    PiOutcome {
        policy,
        utilities,
        rounds: config.max_improve_rounds,
        converged: false,
    }
}

/// Losing-streak bookkeeping for the adaptive director.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ApiState {
    pub losing_streak: u32,
}

impl ApiState {
    /// A cleared level resets the streak, a failed one extends it.
    pub fn record(&mut self, result: &PlayResult) {
        if result.cleared() {
            self.losing_streak = 0;
        } else {
            self.losing_streak += 1;
        }
    }

    /// Removes `min(streak, out_degree(start) - 1)` start edges, highest
    /// designer reward first. Returns the removed targets.
    pub fn prune_start_edges(&self, graph: &mut LevelGraph) -> Vec<StateIx> {
        let start = graph.start();
        let budget = (self.losing_streak as usize).min(graph.out_degree(start).saturating_sub(1));
        if budget == 0 {
            return Vec::new();
        }
        let mut ranked = graph.successors(start).to_vec();
        // Stable sort keeps ascending-id order among equal rewards.
        ranked.sort_by(|&a, &b| {
            graph
                .node(b)
                .designer_reward
                .total_cmp(&graph.node(a).designer_reward)
        });
        ranked.truncate(budget);
        for &t in &ranked {
            graph.remove_edge(start, t);
        }
        ranked
    }
}

/// Walks `policy` from start until `segment_count` non-link states have been
/// collected. Link states are included in the output but not counted.
pub fn assemble_level(graph: &LevelGraph, policy: &Policy, segment_count: usize) -> Result<Vec<StateIx>> {
    if segment_count == 0 {
        return Err(Error::Assembly("segment count must be at least 1".into()));
    }
    let mut level = Vec::with_capacity(segment_count * 2);
    let mut counted = 0;
    let mut links_in_a_row = 0;
    let mut current = graph.start();
    while counted < segment_count {
        let next = policy
            .get(current)
            .ok_or_else(|| Error::Assembly(format!("no policy choice at state `{}`", graph.id(current))))?;
        level.push(next);
        if graph.is_link(next) {
            links_in_a_row += 1;
            if links_in_a_row > graph.len() {
                return Err(Error::Assembly(format!(
                    "policy cycles through link states at `{}`",
                    graph.id(next)
                )));
            }
        } else {
            links_in_a_row = 0;
            counted += 1;
        }
        current = next;
    }
    Ok(level)
}
