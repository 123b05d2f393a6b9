//! Structure-aware model search.
//!
//! A model lake pairs free-text model cards with the evidence tables they
//! report. Cards are retrieved by text ([`text_index`]), tables by
//! keyword/joinable/unionable discovery ([`discovery`]); [`pipeline`] chains
//! the two, [`integration`] merges retrieved tables into one view, and
//! [`nuggets`] with [`eval`] score result sets by the evidence they cover.

pub mod discovery;
pub mod error;
pub mod eval;
pub mod integration;
pub mod lake;
pub mod markdown;
pub mod nuggets;
pub mod pipeline;
pub mod provider;
pub mod synth;
pub mod text_index;
pub mod token;

pub use discovery::{DiscoveryConfig, DiscoveryIndex, Operator, ScoredTable};
pub use error::{Error, ProviderError, Result};
pub use integration::{integrate_all, integrate_pair, IntegratedTable};
pub use lake::{Cell, Corpus, EvidenceTable, ModelCard, ModelLake, TableLake};
pub use nuggets::{Nugget, NuggetStore, QueryConstraint};
pub use pipeline::{Engine, PipelineConfig, RetrievalResult};
pub use provider::{EmbeddingProvider, HashingEmbedder};
pub use text_index::{SemanticMethod, TextIndex, TextIndexConfig};
