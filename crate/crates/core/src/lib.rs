//! Knowledge-enhanced sports game summarization.
//!
//! The pipeline turns a live commentary document into a news article in two
//! steps: a [`selector`] picks key commentary sentences, and a [`rewriter`]
//! turns each selected sentence into a news sentence. Before rewriting, the
//! [`retriever`] links player and team mentions to passages in the knowledge
//! corpus so their representations can be fused into the rewriter input.
//!
//! Training data for both models comes from the weak-supervision alignment in
//! [`oracle`]. Outputs are scored with ROUGE in [`eval`].
//!
//! Every neural component sits behind a trait ([`encoder::EncoderBackend`],
//! [`rewriter::Seq2SeqBackend`], [`retriever::NerTagger`],
//! [`oracle::SentenceSimilarity`]) with a deterministic in-crate backend, so
//! the whole pipeline runs without model downloads.

pub mod corpus;
pub mod encoder;
pub mod error;
pub mod eval;
pub mod nn;
pub mod oracle;
pub mod pipeline;
pub mod retriever;
pub mod rewriter;
pub mod selector;
pub mod synth;
pub mod text;

pub use corpus::{
    CandidateSet, Commentary, GameRecord, KnowledgeCard, KnowledgeCorpus, LinkPolicy,
    PlayerPassage, Split, StatsReport, TeamArticle,
};
pub use encoder::{EncoderBackend, MockEncoder};
pub use error::{Error, Result};
pub use eval::{EvalReport, RougeScore, RougeTriple, SummaryRecord};
pub use oracle::{ImportanceLabels, MappedPair, TimePrefix};
pub use retriever::{EntityKind, LinkerConfig, Mention, MentionLink};
pub use rewriter::{AblationFlags, RewriterInput, SegmentId};
pub use selector::SelectorModel;
