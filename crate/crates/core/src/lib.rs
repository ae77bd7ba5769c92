//! Streaming RNN-Transducer decoding.
//!
//! * [`search`]: pruned transducer beam search ([`DecodeSession`],
//!   [`decode_pruned`]) and the unpruned reference search
//!   ([`decode_reference`]).
//! * [`chunk`]: latency-controlled chunk scheduling of the encoder, with
//!   the inference-time decoding threshold (DT) replacing the chunk size.
//! * [`model`]: the encoder / predictor / joiner contracts and the
//!   per-session predictor and joiner caches.
//! * [`toy`]: deterministic synthetic models and their JSON weight files.
//! * [`oracle`]: exact posteriors for tiny instances.
//! * [`bench`]: throughput and rtf@N over concurrent streams.
//!
//! ```
//! use rnnt_stream::{recognize, build_toy_model, synth_frames, BeamConfig, ChunkConfig, ToyModelSpec};
//!
//! let model = build_toy_model(&ToyModelSpec::standard()).unwrap();
//! let frames = synth_frames(250, 8, 10, 7);
//! let chunk = ChunkConfig::from_ms(800, 200, 10).unwrap();
//! let out = recognize(&model, frames, chunk, BeamConfig::pruned(4, 2.3, 4.6)).unwrap();
//! assert_eq!(out.max_latency_ms, 800);
//! ```

pub mod bench;
pub mod chunk;
pub mod cli;
mod error;
pub mod features;
pub mod model;
pub mod oracle;
pub mod recognizer;
pub mod search;
pub mod toy;
pub mod types;

pub use chunk::{
    dt_to_frames, plan_chunks, recompute_ratio, ChunkConfig, ChunkPlan, StreamEncoder, Window,
};
pub use error::{Error, Result};
pub use features::{synth_frames, FeatureFile};
pub use model::{AudioEmbedding, AudioFrame, JoinerOutput, TextEmbedding, TransducerModel};
pub use recognizer::{recognize, StreamingRecognizer, UtteranceResult};
pub use search::{decode_pruned, decode_reference, DecodeResult, DecodeSession, SearchStats};
pub use toy::{build_toy_model, golden_2x3, ModelFamily, ToyModelSpec, ToyTransducer};
pub use types::{BeamConfig, Hypothesis, LogProb, TokenId, Vocabulary};
