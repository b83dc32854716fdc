//! Level-graph construction and persistence.

pub mod io;
pub mod ngram;
pub mod segments;

pub use io::{graph_to_json, load_corpus, load_graph, load_graph_document, save_graph};
pub use ngram::{build_ngram_graph, TokenCorpus};
pub use segments::{generate_segment_graph, SegmentGraphParams};

/// Id of the start state in generated graphs.
pub const START_ID: &str = "start";
/// Id of the death state in generated graphs.
pub const DEATH_ID: &str = "death";
