//! Semantic channel finding: mapping natural-language operator queries to
//! concrete control-system channel identifiers.
//!
//! The engine implements four finding paradigms over a unified channel
//! database model:
//!
//! 1. [`direct`] — whole-dictionary in-context matching for small, curated
//!    channel sets.
//! 2. [`hierarchical`] — constrained recursive descent through a naming
//!    hierarchy, with cost linear in tree depth rather than channel count.
//! 3. [`explorer`] / [`mml`] — interactive tool-based exploration, either
//!    over compositional addresses with fuzzy top-k retrieval or over a
//!    middle-layer tree with a fixed tool suite.
//! 4. [`onto`] — ontology-grounded graph queries over a triple store with
//!    subclass closure.
//!
//! Every pipeline takes its decisions through a single boundary, the
//! [`selector::Selector`], which can be backed either by a remote LLM
//! (chat-completion wire protocol) or by a deterministic lexical oracle,
//! so the whole engine runs offline and reproducibly.

pub mod bench;
pub mod config;
pub mod db;
pub mod direct;
pub mod explorer;
pub mod hierarchical;
pub mod mml;
pub mod onto;
pub mod selector;
pub mod text;
pub mod types;

pub use config::EngineConfig;
pub use db::ChannelDatabase;
pub use types::{FinderResult, SubQuery};
