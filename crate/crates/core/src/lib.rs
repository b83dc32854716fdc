//! Level assembly as a Markov decision process.
//!
//! Level segments form the states of a graph-shaped MDP. After every
//! playthrough the rewards decay with visit counts and the win probabilities
//! are re-estimated, then a director rebuilds its assembly policy. Player
//! proxies stand in for real players.
//!
//! - [`graph`]: level graphs and their invariants
//! - [`mdp`]: learned tables and the post-playthrough updates
//! - [`directors`]: random, greedy, policy-iteration and adaptive directors
//! - [`sources`]: n-gram and synthetic segment graphs, graph files
//! - [`players`]: player proxies and level metrics
//! - [`harness`]: experiment protocols and their output files

pub mod cli;
pub mod directors;
pub mod error;
pub mod graph;
pub mod harness;
pub mod mdp;
pub mod players;
pub mod seeds;
pub mod sources;

pub use directors::{Director, Policy, SolverConfig, UtilityTable};
pub use error::{Error, Result};
pub use graph::{CellId, GraphDocument, LevelGraph, StateIx, StateNode};
pub use mdp::{MdpTables, PlayResult, RewardMode};
pub use players::PlayerProxy;
