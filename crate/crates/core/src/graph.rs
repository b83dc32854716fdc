//! Level graphs: level segments (or slices) as states, playable
//! concatenations as directed edges, plus the distinguished `start` and
//! `death` states.
//!
//! States are stored sorted by id, so comparing two [`StateIx`] values is the
//! same as comparing their string ids. Every lexicographic tie-break in the
//! crate relies on this.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Designer reward of the death state.
pub const DEATH_REWARD: f64 = -1.0;

/// Dense index of a state inside one [`LevelGraph`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StateIx(u32);

impl StateIx {
    pub fn new(index: usize) -> Self {
        StateIx(u32::try_from(index).expect("state index exceeds u32"))
    }

    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Cell of the behavioral-characteristic grid an elite belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CellId {
    pub x: u32,
    pub y: u32,
}

impl fmt::Display for CellId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}_{}", self.x, self.y)
    }
}

fn default_playable_length() -> u32 {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateNode {
    pub id: String,
    pub designer_reward: f64,
    #[serde(default)]
    pub bcs: Vec<f64>,
    #[serde(default)]
    pub is_link: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cell_id: Option<CellId>,
    #[serde(default = "default_playable_length")]
    pub playable_length: u32,
}

impl StateNode {
    pub fn segment(id: impl Into<String>, designer_reward: f64, bcs: Vec<f64>) -> Self {
        StateNode {
            id: id.into(),
            designer_reward,
            bcs,
            is_link: false,
            cell_id: None,
            playable_length: 1,
        }
    }

    pub fn start(id: impl Into<String>) -> Self {
        StateNode::segment(id, 0.0, Vec::new())
    }

    pub fn death(id: impl Into<String>) -> Self {
        StateNode::segment(id, DEATH_REWARD, Vec::new())
    }

    pub fn bc_sum(&self) -> f64 {
        self.bcs.iter().sum()
    }
}

/// On-disk form of a level graph. Also the input to [`LevelGraph::from_document`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphDocument {
    pub states: Vec<StateNode>,
    pub edges: Vec<(String, String)>,
    pub start: String,
    pub death: String,
    pub max_bc: f64,
}

/// Outcome of one structural check on a [`GraphDocument`].
#[derive(Clone, Debug, PartialEq)]
pub struct InvariantCheck {
    pub name: &'static str,
    pub failures: Vec<String>,
}

impl InvariantCheck {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

impl GraphDocument {
    /// Runs every structural check and reports each one, pass or fail.
    pub fn invariant_report(&self) -> Vec<InvariantCheck> {
        let ids: HashSet<&str> = self.states.iter().map(|s| s.id.as_str()).collect();
        let node = |id: &str| self.states.iter().find(|s| s.id == id);
        let mut report = Vec::new();
        let mut check = |name: &'static str, failures: Vec<String>| {
            report.push(InvariantCheck { name, failures });
        };

        let mut seen = HashSet::new();
        check(
            "unique state ids",
            self.states
                .iter()
                .filter(|s| !seen.insert(s.id.as_str()))
                .map(|s| format!("duplicate state `{}`", s.id))
                .collect(),
        );

        let mut specials = Vec::new();
        if !ids.contains(self.start.as_str()) {
            specials.push(format!("start state `{}` is missing", self.start));
        }
        if !ids.contains(self.death.as_str()) {
            specials.push(format!("death state `{}` is missing", self.death));
        }
        if self.start == self.death {
            specials.push(format!("start and death share id `{}`", self.start));
        }
        check("start and death exist", specials);

        check(
            "edge endpoints exist",
            self.edges
                .iter()
                .flat_map(|(a, b)| [a, b].into_iter().map(move |end| (a, b, end)))
                .filter(|(_, _, end)| !ids.contains(end.as_str()))
                .map(|(a, b, end)| format!("edge ({a}, {b}) references missing state `{end}`"))
                .collect(),
        );

        let mut pairs = HashSet::new();
        check(
            "no duplicate edges",
            self.edges
                .iter()
                .filter(|e| !pairs.insert((e.0.as_str(), e.1.as_str())))
                .map(|(a, b)| format!("edge ({a}, {b}) listed more than once"))
                .collect(),
        );

        check(
            "no edge into start",
            self.edges
                .iter()
                .filter(|(_, b)| *b == self.start)
                .map(|(a, b)| format!("edge ({a}, {b}) targets the start state"))
                .collect(),
        );

        check(
            "death has no outgoing edges",
            self.edges
                .iter()
                .filter(|(a, _)| *a == self.death)
                .map(|(a, b)| format!("edge ({a}, {b}) leaves the death state"))
                .collect(),
        );

        check(
            "death is never an action target",
            self.edges
                .iter()
                .filter(|(_, b)| *b == self.death)
                .map(|(a, b)| format!("edge ({a}, {b}) targets the death state"))
                .collect(),
        );

        let start_degree = self.edges.iter().filter(|(a, _)| *a == self.start).count();
        check(
            "start has an outgoing edge",
            if start_degree == 0 {
                vec![format!("start state `{}` has no outgoing edges", self.start)]
            } else {
                Vec::new()
            },
        );

        let mut special_rewards = Vec::new();
        if let Some(s) = node(&self.start) {
            if s.designer_reward != 0.0 {
                special_rewards.push(format!("start designer reward is {}, expected 0", s.designer_reward));
            }
        }
        if let Some(s) = node(&self.death) {
            if s.designer_reward != DEATH_REWARD {
                special_rewards.push(format!("death designer reward is {}, expected -1", s.designer_reward));
            }
        }
        check("start and death rewards", special_rewards);

        check(
            "max_bc is positive",
            if self.max_bc.is_finite() && self.max_bc > 0.0 {
                Vec::new()
            } else {
                vec![format!("max_bc is {}", self.max_bc)]
            },
        );

        let is_special = |s: &StateNode| s.id == self.start || s.id == self.death;
        let mut ranges = Vec::new();
        for s in self.states.iter().filter(|s| !is_special(s)) {
            if !(0.0..=self.max_bc).contains(&s.designer_reward) {
                ranges.push(format!(
                    "state `{}` designer reward {} outside [0, {}]",
                    s.id, s.designer_reward, self.max_bc
                ));
            }
            if let Some(bc) = s.bcs.iter().find(|bc| !(0.0..=1.0).contains(*bc)) {
                ranges.push(format!("state `{}` has behavioral characteristic {bc} outside [0, 1]", s.id));
            }
            if s.playable_length == 0 {
                ranges.push(format!("state `{}` has zero playable length", s.id));
            }
        }
        check("state values in range", ranges);

        let gridded = self.states.iter().any(|s| s.cell_id.is_some());
        let mut cells = Vec::new();
        for s in &self.states {
            if s.is_link && s.cell_id.is_some() {
                cells.push(format!("link state `{}` has a cell id", s.id));
            }
            if gridded && !s.is_link && !is_special(s) && s.cell_id.is_none() {
                cells.push(format!("segment state `{}` has no cell id", s.id));
            }
            if is_special(s) && (s.is_link || s.cell_id.is_some()) {
                cells.push(format!("state `{}` must not be a link or carry a cell id", s.id));
            }
        }
        check("cell ids", cells);

        report
    }
}

/// Directed graph of level states.
#[derive(Clone, Debug, PartialEq)]
pub struct LevelGraph {
    nodes: Vec<StateNode>,
    index: HashMap<String, StateIx>,
    successors: Vec<Vec<StateIx>>,
    cells: BTreeMap<CellId, Vec<StateIx>>,
    start: StateIx,
    death: StateIx,
    max_bc: f64,
}

impl LevelGraph {
    pub fn new(
        states: Vec<StateNode>,
        edges: Vec<(String, String)>,
        start: impl Into<String>,
        death: impl Into<String>,
        max_bc: f64,
    ) -> Result<Self> {
        Self::from_document(GraphDocument {
            states,
            edges,
            start: start.into(),
            death: death.into(),
            max_bc,
        })
    }

    /// Validates the document and builds the graph. The first failing
    /// invariant is returned as an error.
    pub fn from_document(mut doc: GraphDocument) -> Result<Self> {
        if let Some(bad) = doc.invariant_report().into_iter().find(|c| !c.passed()) {
            return Err(Error::InvalidGraph {
                invariant: bad.name,
                detail: bad.failures.join("; "),
            });
        }

        doc.states.sort_by(|a, b| a.id.cmp(&b.id));
        let index: HashMap<String, StateIx> = doc
            .states
            .iter()
            .enumerate()
            .map(|(i, s)| (s.id.clone(), StateIx::new(i)))
            .collect();
        let mut successors = vec![Vec::new(); doc.states.len()];
        for (a, b) in &doc.edges {
            successors[index[a].index()].push(index[b]);
        }
        for list in &mut successors {
            list.sort_unstable();
        }
        let mut cells: BTreeMap<CellId, Vec<StateIx>> = BTreeMap::new();
        for (i, s) in doc.states.iter().enumerate() {
            if let Some(cell) = s.cell_id {
                cells.entry(cell).or_default().push(StateIx::new(i));
            }
        }
        Ok(LevelGraph {
            start: index[&doc.start],
            death: index[&doc.death],
            nodes: doc.states,
            index,
            successors,
            cells,
            max_bc: doc.max_bc,
        })
    }

    /// Canonical document: states sorted by id, edges sorted by (source, target) id.
    pub fn to_document(&self) -> GraphDocument {
        let edges = self
            .edges()
            .map(|(a, b)| (self.id(a).to_owned(), self.id(b).to_owned()))
            .collect();
        GraphDocument {
            states: self.nodes.clone(),
            edges,
            start: self.id(self.start).to_owned(),
            death: self.id(self.death).to_owned(),
            max_bc: self.max_bc,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn start(&self) -> StateIx {
        self.start
    }

    pub fn death(&self) -> StateIx {
        self.death
    }

    pub fn max_bc(&self) -> f64 {
        self.max_bc
    }

    pub fn node(&self, s: StateIx) -> &StateNode {
        &self.nodes[s.index()]
    }

    pub fn id(&self, s: StateIx) -> &str {
        &self.nodes[s.index()].id
    }

    pub fn lookup(&self, id: &str) -> Option<StateIx> {
        self.index.get(id).copied()
    }

    pub fn require(&self, id: &str) -> Result<StateIx> {
        self.lookup(id).ok_or_else(|| Error::UnknownState(id.to_owned()))
    }

    pub fn states(&self) -> impl Iterator<Item = StateIx> + '_ {
        (0..self.nodes.len()).map(StateIx::new)
    }

    pub fn nodes(&self) -> &[StateNode] {
        &self.nodes
    }

    /// Successors in ascending id order.
    pub fn successors(&self, s: StateIx) -> &[StateIx] {
        &self.successors[s.index()]
    }

    pub fn out_degree(&self, s: StateIx) -> usize {
        self.successors[s.index()].len()
    }

    pub fn has_edge(&self, from: StateIx, to: StateIx) -> bool {
        self.successors[from.index()].binary_search(&to).is_ok()
    }

    pub fn edges(&self) -> impl Iterator<Item = (StateIx, StateIx)> + '_ {
        self.successors
            .iter()
            .enumerate()
            .flat_map(|(i, succ)| succ.iter().map(move |&t| (StateIx::new(i), t)))
    }

    pub fn edge_count(&self) -> usize {
        self.successors.iter().map(Vec::len).sum()
    }

    pub fn is_link(&self, s: StateIx) -> bool {
        self.nodes[s.index()].is_link
    }

    /// States sharing `cell`, in ascending id order.
    pub fn cell_members(&self, cell: CellId) -> &[StateIx] {
        self.cells.get(&cell).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn cells(&self) -> impl Iterator<Item = CellId> + '_ {
        self.cells.keys().copied()
    }

    /// Adds `(from, to)` unless present. Returns whether an edge was added.
    pub fn add_edge(&mut self, from: StateIx, to: StateIx) -> Result<bool> {
        if to == self.start || to == self.death || from == self.death {
            return Err(Error::InvalidGraph {
                invariant: "edge endpoints",
                detail: format!("edge ({}, {}) is not allowed", self.id(from), self.id(to)),
            });
        }
        let list = &mut self.successors[from.index()];
        match list.binary_search(&to) {
            Ok(_) => Ok(false),
            Err(pos) => {
                list.insert(pos, to);
                Ok(true)
            }
        }
    }

    /// Removes `(from, to)` if present. Returns whether an edge was removed.
    pub fn remove_edge(&mut self, from: StateIx, to: StateIx) -> bool {
        let list = &mut self.successors[from.index()];
        match list.binary_search(&to) {
            Ok(pos) => {
                list.remove(pos);
                true
            }
            Err(_) => false,
        }
    }

    /// States reachable from `start` by breadth-first search, start included.
    pub fn reachable_from_start(&self) -> Vec<bool> {
        let mut seen = vec![false; self.len()];
        let mut queue = std::collections::VecDeque::from([self.start]);
        seen[self.start.index()] = true;
        while let Some(s) = queue.pop_front() {
            for &t in self.successors(s) {
                if !seen[t.index()] {
                    seen[t.index()] = true;
                    queue.push_back(t);
                }
            }
        }
        seen
    }

    pub fn stats(&self) -> GraphStats {
        let playable: Vec<StateIx> = self
            .states()
            .filter(|&s| s != self.start && s != self.death)
            .collect();
        let degrees: Vec<usize> = playable.iter().map(|&s| self.out_degree(s)).collect();

        // Out-degree with every link state contracted into a direct edge.
        let segments: Vec<StateIx> = playable.iter().copied().filter(|&s| !self.is_link(s)).collect();
        let contracted: Vec<usize> = segments
            .iter()
            .map(|&s| {
                let mut targets = BTreeSet::new();
                for &t in self.successors(s) {
                    if self.is_link(t) {
                        targets.extend(self.successors(t).iter().filter(|&&u| !self.is_link(u)));
                    } else {
                        targets.insert(t);
                    }
                }
                targets.len()
            })
            .collect();

        let mean = |v: &[usize]| {
            if v.is_empty() {
                0.0
            } else {
                v.iter().sum::<usize>() as f64 / v.len() as f64
            }
        };
        GraphStats {
            states: playable.len(),
            mean_out_degree: mean(&degrees),
            max_out_degree: degrees.iter().copied().max().unwrap_or(0),
            segment_states: segments.len(),
            segment_mean_out_degree: mean(&contracted),
            segment_max_out_degree: contracted.iter().copied().max().unwrap_or(0),
            start_out_degree: self.out_degree(self.start),
        }
    }
}

/// Size and branching summary. `start` and `death` are excluded from every
/// count; the `segment_*` fields describe the graph with link states contracted.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphStats {
    pub states: usize,
    pub mean_out_degree: f64,
    pub max_out_degree: usize,
    pub segment_states: usize,
    pub segment_mean_out_degree: f64,
    pub segment_max_out_degree: usize,
    pub start_out_degree: usize,
}

impl fmt::Display for GraphStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "states={} mean_out_degree={:.3} max_out_degree={}",
            self.states, self.mean_out_degree, self.max_out_degree
        )?;
        if self.segment_states != self.states {
            write!(
                f,
                " | without links: states={} mean_out_degree={:.3} max_out_degree={}",
                self.segment_states, self.segment_mean_out_degree, self.segment_max_out_degree
            )?;
        }
        Ok(())
    }
}
