//! Real-time question answering without neural inference at query time.
//!
//! An offline pipeline generates a large pool of question-answer pairs
//! from a document corpus. At query time the engine retrieves candidate
//! paragraphs with a two-step hashed TF-IDF ranker and returns the answer
//! of the generated question whose unique tokens overlap the incoming
//! question best.
//!
//! The crate also carries the deterministic kernels of the offline side:
//! top-K span selection from start/end logits ([`span`]), standard and
//! diverse beam search ([`beam`]), augmentation selection and multi-task
//! batch mixing ([`augment`]), plus EM/F1 evaluation ([`eval`]).

pub mod augment;
pub mod beam;
pub mod codec;
pub mod corpus;
pub mod engine;
pub mod error;
pub mod eval;
pub mod index;
pub mod matcher;
pub mod ranker;
pub mod span;
pub mod text;
pub mod tfidf;

pub use corpus::{Corpus, QaPair, QuestionOcean};
pub use engine::{Engine, EngineConfig};
pub use error::{Error, Result};
pub use matcher::QueryResult;
pub use ranker::RetrievalConfig;
