//! Psycholinguistic probing of GPT-2: surprisal and attention metrics at
//! agreement sites, attention-head specialization search, and factorial
//! interference experiments.
//!
//! The crate is organized bottom-up:
//!
//! - [`model`]: safetensors checkpoint loading and a CPU forward pass that
//!   returns logits plus every head's attention pattern.
//! - [`tokenizer`]: GPT-2 byte-level BPE with byte-offset spans.
//! - [`metrics`]: surprisal, attention entropy, attention-to-target.
//! - [`headfinder`]: relative-position baselines and head accuracy scoring
//!   over CoNLL-U or reflexive-antecedent corpora.
//! - [`experiment`]: stimulus loading, per-item metrics, condition
//!   summaries with t-based intervals, and interference effects.
//! - [`corpus`]: classification and counting of annotated agreement errors.

pub mod corpus;
pub mod error;
pub mod experiment;
pub mod headfinder;
pub mod metrics;
pub mod model;
pub mod stats;
pub mod tokenizer;
pub mod util;

pub use error::{Error, Result};
pub use metrics::{Anchor, CriticalRegion, MetricRecord};
pub use model::{ActivationTrace, AttentionModel, HeadId, Model, ModelConfig};
pub use tokenizer::{locate_span, TokenSpan, Tokenizer};
