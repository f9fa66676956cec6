//! BPE and constrained BPE: training, encoding, the marker stream, and model files.

mod encode;
mod io;
mod model;
mod train;

pub use encode::{
    decode, decode_line, group_words, parse_stream_line, serialize_line, Boundary, DecodedLine,
    StreamWord, Token, TokenizedWord,
};
pub use io::{load_model, load_model_with, merges_to_string, parse_model, save_model, vocab_path, vocab_to_string};
pub use model::{Algorithm, MarkerConfig, MergeModel, MergeRule};
pub use train::{train, Trained, Trainer};
