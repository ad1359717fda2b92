//! Pre-processing, annotation and analysis of classroom and tutoring
//! conversation transcripts.
//!
//! The modules are independent: an annotated CSV produced elsewhere can go
//! straight into [`analyze`] without touching [`preprocess`] or [`annotate`].

pub mod analyze;
pub mod annotate;
pub mod corpus;
pub mod exec;
pub mod inference;
pub mod llm;
pub mod matching;
pub mod preprocess;

pub use corpus::{ColumnMapping, Format, Transcript, Utterance, Value, ValueDomain};
pub use exec::Execution;
