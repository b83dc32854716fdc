use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::graph::{LevelGraph, StateNode};

use super::{DEATH_ID, START_ID};

/// Ordered token sequences, one per source level. Each token is one level
/// slice.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TokenCorpus {
    pub sequences: Vec<Vec<String>>,
}

impl TokenCorpus {
    /// One sequence per non-empty line, one token per character.
    pub fn from_text(text: &str) -> Self {
        TokenCorpus {
            sequences: text
                .lines()
                .map(str::trim_end)
                .filter(|l| !l.is_empty())
                .map(|l| l.chars().map(String::from).collect())
                .collect(),
        }
    }
}

/// Slice classes of the text corpus format.
///
/// `0`-`9` is a slice with that many solid tiles out of [`SLICE_HEIGHT`];
/// `a`-`j` is the same column with an enemy standing in it (`a` = 0 solid).
/// Any other token is an empty, enemy-free slice.
pub mod slices {
    pub const SLICE_HEIGHT: u32 = 9;

    pub fn solid_tiles(token: &str) -> u32 {
        match single(token) {
            Some(c @ '0'..='9') => c as u32 - '0' as u32,
            Some(c @ 'a'..='j') => c as u32 - 'a' as u32,
            _ => 0,
        }
    }

    pub fn has_enemy(token: &str) -> bool {
        matches!(single(token), Some('a'..='j'))
    }

    /// Solid fraction of a slice, in `[0, 1]`.
    pub fn density(token: &str) -> f64 {
        f64::from(solid_tiles(token).min(SLICE_HEIGHT)) / f64::from(SLICE_HEIGHT)
    }

    fn single(token: &str) -> Option<char> {
        let mut chars = token.chars();
        match (chars.next(), chars.next()) {
            (Some(c), None) => Some(c),
            _ => None,
        }
    }
}

/// Builds the n-gram level graph: each state is an `(n-1)`-token prior and
/// each corpus n-gram becomes the edge from its leading prior to its
/// trailing prior. Designer reward is 1 when the prior holds an enemy; the
/// single behavioral characteristic is the density of the newest slice.
pub fn build_ngram_graph(corpus: &TokenCorpus, n: usize) -> Result<LevelGraph> {
    if n < 2 {
        return Err(Error::Corpus(format!("n must be at least 2, got {n}")));
    }
    let usable: Vec<&Vec<String>> = corpus.sequences.iter().filter(|s| s.len() >= n).collect();
    if usable.is_empty() {
        return Err(Error::Corpus(format!(
            "corpus has no sequence of at least {n} tokens ({} sequences)",
            corpus.sequences.len()
        )));
    }
    let separator = if usable.iter().flat_map(|s| s.iter()).all(|t| t.chars().count() == 1) {
        ""
    } else {
        "|"
    };
    let id = |prior: &[String]| prior.join(separator);

    let mut priors: BTreeMap<String, StateNode> = BTreeMap::new();
    let mut edges: BTreeSet<(String, String)> = BTreeSet::new();
    let mut add_prior = |prior: &[String]| -> String {
        let key = id(prior);
        priors.entry(key.clone()).or_insert_with(|| {
            let enemy = prior.iter().any(|t| slices::has_enemy(t));
            let newest = prior.last().expect("prior is non-empty");
            StateNode::segment(key.clone(), if enemy { 1.0 } else { 0.0 }, vec![slices::density(newest)])
        });
        key
    };
    for seq in &usable {
        let first = add_prior(&seq[..n - 1]);
        edges.insert((START_ID.to_owned(), first));
        for gram in seq.windows(n) {
            let from = add_prior(&gram[..n - 1]);
            let to = add_prior(&gram[1..]);
            edges.insert((from, to));
        }
    }
    for reserved in [START_ID, DEATH_ID] {
        if priors.contains_key(reserved) {
            return Err(Error::Corpus(format!("prior `{reserved}` collides with a reserved state id")));
        }
    }

    let mut states: Vec<StateNode> = priors.into_values().collect();
    states.push(StateNode::start(START_ID));
    states.push(StateNode::death(DEATH_ID));
    LevelGraph::new(states, edges.into_iter().collect(), START_ID, DEATH_ID, 1.0)
}
