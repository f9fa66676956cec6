//! Morphology-aware subword tokenization for abugida scripts.
//!
//! * [`script`]: codepoint classes and merge-initialization units.
//! * [`bpe`]: BPE and constrained BPE (CBPE) training, encoding, model files.
//! * [`pretokenize`]: lookup-table rewriting of corpora with replay traces.
//! * [`metrics`]: fertility, Rényi efficiency, dependent-vowel audits.
//! * [`evaltok`]: annotation sheets and score aggregation.

pub mod bpe;
pub mod error;
pub mod evaltok;
pub mod metrics;
pub mod pretokenize;
pub mod script;
pub mod text;

pub use bpe::{Algorithm, Boundary, MarkerConfig, MergeModel, MergeRule, Token, TokenizedWord, Trainer};
pub use error::{Error, Result};
pub use pretokenize::{LookupEntry, LookupTable, PretokTrace, TraceRecord};
pub use script::{bpe_units, cbpe_units, ProfileRegistry, ScriptProfile, UnitSequence};
pub use text::Normalization;
