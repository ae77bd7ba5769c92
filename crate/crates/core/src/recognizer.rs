//! Chunked encoder and pruned search glued into one streaming pipeline.

use serde::{Deserialize, Serialize};

use crate::chunk::{ChunkConfig, ChunkPlan, StreamEncoder, Window};
use crate::error::Result;
use crate::model::{AudioFrame, TransducerModel};
use crate::search::{DecodeResult, DecodeSession, TraceEvent};
use crate::types::BeamConfig;

pub struct StreamingRecognizer<'m, M: TransducerModel + ?Sized> {
    encoder: StreamEncoder<'m, M>,
    session: DecodeSession<'m, M>,
}

/// Outcome of one utterance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UtteranceResult {
    pub result: DecodeResult,
    pub encoder_frames: usize,
    pub windows: Vec<Window>,
    /// Largest `(chunk_end - i) * frame_shift` over surfaced raw frames `i`.
    pub max_latency_ms: u64,
    /// Search steps, when tracing was requested.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub trace: Vec<TraceEvent>,
}

impl<'m, M: TransducerModel + ?Sized> StreamingRecognizer<'m, M> {
    pub fn new(model: &'m M, chunk: ChunkConfig, beam: BeamConfig) -> Result<Self> {
        Ok(StreamingRecognizer {
            encoder: StreamEncoder::new(model, chunk)?,
            session: DecodeSession::new(model, beam)?,
        })
    }

    /// Records every search step into [`UtteranceResult::trace`].
    pub fn with_trace(mut self) -> Self {
        self.session = self.session.with_trace();
        self
    }

    /// Feeds one frame; returns how many embeddings were decoded as a result.
    pub fn push_frame(&mut self, frame: AudioFrame) -> Result<usize> {
        let emb = self.encoder.push_frame(frame)?;
        self.session.push(&emb)?;
        Ok(emb.len())
    }

    /// Best hypothesis over the frames decoded so far.
    pub fn partial(&self) -> DecodeResult {
        self.session.partial()
    }

    pub fn finish(mut self) -> Result<UtteranceResult> {
        let shift = self.encoder.config().frame_shift_ms;
        let tail = self.encoder.finish()?;
        self.session.push(&tail.embeddings)?;
        let trace = self.session.take_trace();
        let plan = ChunkPlan {
            windows: tail.windows,
        };
        Ok(UtteranceResult {
            result: self.session.finalize(),
            encoder_frames: tail.encoder_frames,
            max_latency_ms: plan.max_latency_ms(shift),
            windows: plan.windows,
            trace,
        })
    }
}

/// Streams `frames` through a fresh recognizer.
pub fn recognize<M: TransducerModel + ?Sized>(
    model: &M,
    frames: impl IntoIterator<Item = AudioFrame>,
    chunk: ChunkConfig,
    beam: BeamConfig,
) -> Result<UtteranceResult> {
    let mut rec = StreamingRecognizer::new(model, chunk, beam)?;
    for f in frames {
        rec.push_frame(f)?;
    }
    rec.finish()
}
