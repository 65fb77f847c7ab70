//! Call-graph extraction from compiler AST dumps.
//!
//! Dumps are scanned as an island grammar: a small keyword table picks out the
//! node kinds that matter (calls, member references, definitions, literals) and
//! every other line or token is skipped. Extracted call facts are stored as CSV
//! and linked into a rooted call tree.

pub mod dot;
pub mod extract;
pub mod facts;
pub mod lexer;
pub mod lexicon;
pub mod link;
pub mod pipeline;

pub use extract::{
    classify_argument, extract_facts, resolve_receiver_class, ArgKind, ArgValue, CallFact, DefKind,
    ExtractionResult, FunctionDef, ReceiverKind,
};
pub use lexicon::{LexiconError, LexiconTable, TokenClass};
