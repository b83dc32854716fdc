#![allow(dead_code)]

use level_assembly::directors::SolverConfig;
use level_assembly::graph::DEATH_REWARD;
use level_assembly::{LevelGraph, MdpTables, StateNode};
use rand::Rng;

/// A small hand-rolled MDP: plain adjacency lists plus the values the
/// solver will see, kept separately so the oracle never touches library code.
#[derive(Clone, Debug)]
pub struct TinyMdp {
    /// Index 0 is start; 1..=n are ordinary states. Death is implicit.
    pub successors: Vec<Vec<usize>>,
    pub reward: Vec<f64>,
    pub win_prob: Vec<f64>,
}

impl TinyMdp {
    pub fn random<R: Rng>(rng: &mut R, max_states: usize, max_actions: usize) -> Self {
        let n = rng.gen_range(1..=max_states);
        let mut successors = Vec::with_capacity(n + 1);
        for s in 0..=n {
            let lo = if s == 0 { 1 } else { 0 };
            let k = rng.gen_range(lo..=max_actions.min(n));
            let mut targets: Vec<usize> = (1..=n).collect();
            for i in 0..k {
                let j = rng.gen_range(i..targets.len());
                targets.swap(i, j);
            }
            targets.truncate(k);
            targets.sort_unstable();
            successors.push(targets);
        }
        let reward = (0..=n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let win_prob = (0..=n).map(|_| rng.gen_range(0.01..=1.0)).collect();
        TinyMdp { successors, reward, win_prob }
    }

    fn name(s: usize) -> String {
        if s == 0 {
            "start".into()
        } else {
            format!("s{s}")
        }
    }

    pub fn to_graph(&self) -> (LevelGraph, MdpTables) {
        let mut states: Vec<StateNode> = (1..self.successors.len())
            .map(|s| StateNode::segment(Self::name(s), 0.5, vec![0.5]))
            .collect();
        states.push(StateNode::start("start"));
        states.push(StateNode::death("death"));
        let edges = self
            .successors
            .iter()
            .enumerate()
            .flat_map(|(s, ts)| ts.iter().map(move |&t| (Self::name(s), Self::name(t))))
            .collect();
        let graph = LevelGraph::new(states, edges, "start", "death", 1.0).expect("tiny graph is valid");
        let mut tables = MdpTables::new(&graph);
        for s in 0..self.successors.len() {
            let ix = graph.require(&Self::name(s)).unwrap();
            tables.set_reward(ix, self.reward[s]);
            tables.set_win_probability(ix, self.win_prob[s]);
        }
        (graph, tables)
    }

    pub fn ix(&self, graph: &LevelGraph, s: usize) -> level_assembly::StateIx {
        graph.require(&Self::name(s)).unwrap()
    }

    /// Start-state value of a fixed deterministic policy after `sweeps`
    /// synchronous Bellman backups from zero.
    pub fn evaluate(&self, policy: &[Option<usize>], gamma: f64, sweeps: usize) -> Vec<f64> {
        let mut u = vec![0.0; self.successors.len()];
        let mut next = u.clone();
        for _ in 0..sweeps {
            for (s, choice) in policy.iter().enumerate() {
                next[s] = match *choice {
                    Some(t) => {
                        let p = self.win_prob[t];
                        p * (self.reward[t] + gamma * u[t]) + (1.0 - p) * DEATH_REWARD
                    }
                    None => 0.0,
                };
            }
            std::mem::swap(&mut u, &mut next);
        }
        u
    }

    /// Every deterministic policy, in lexicographic order of choices.
    pub fn all_policies(&self) -> Vec<Vec<Option<usize>>> {
        let mut out = vec![Vec::new()];
        for ts in &self.successors {
            let options: Vec<Option<usize>> = if ts.is_empty() {
                vec![None]
            } else {
                ts.iter().copied().map(Some).collect()
            };
            out = out
                .into_iter()
                .flat_map(|prefix| {
                    options.iter().map(move |&o| {
                        let mut p = prefix.clone();
                        p.push(o);
                        p
                    })
                })
                .collect();
        }
        out
    }

    /// Best start-state value over all policies, each evaluated to `sweeps`.
    pub fn best_start_value(&self, gamma: f64, sweeps: usize) -> f64 {
        self.all_policies()
            .iter()
            .map(|p| self.evaluate(p, gamma, sweeps)[0])
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

pub fn default_solver() -> SolverConfig {
    SolverConfig::default()
}
