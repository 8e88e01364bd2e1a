//! Text-request to item retrieval.
//!
//! A free-form text request is matched against item descriptions by projecting
//! frozen base embeddings of both sides through two trainable MLP towers and
//! ranking items by the dot product of the projections. The crate also carries
//! the lexical (Okapi BM25) and random baselines, the retrieval metrics used to
//! compare them, and the plumbing around them: corpus ingestion, negative
//! sampling, splitting and the binary artifact formats.

pub mod corpus;
pub mod embed;
pub mod eval;
pub mod hashing;
pub mod rank;
pub mod towers;

pub use corpus::{Corpus, Interaction, ItemDescription, Label, LabeledPair, TextRequest};
pub use embed::{BaseEmbeddings, EmbeddingStore, HashEmbedder};
pub use eval::{EvalReport, RelevanceJudgment};
pub use rank::{Bm25Index, DenseIndex, RankedList};
pub use towers::{TowerSpec, TrainConfig, TwoTower};
