//! Latency-controlled chunk scheduling.
//!
//! A stream of `T` raw frames is cut into overlapping windows of `cs`
//! frames that advance by `cs - rc`. Each full window surfaces its first
//! `cs - rc` frames, so every surfaced frame sees at least `rc` frames of
//! right context, and the first frame of a window sees `cs - 1`. The `rc`
//! overlap frames are encoded again by the next window. When the input
//! ends, whatever has not been surfaced goes into one final window that is
//! truncated at `T`; nothing is padded.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{AudioEmbedding, AudioFrame, TransducerModel};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChunkConfig {
    pub cs_frames: usize,
    pub rc_frames: usize,
    #[serde(default = "default_shift")]
    pub frame_shift_ms: u64,
}

fn default_shift() -> u64 {
    10
}

impl ChunkConfig {
    pub fn new(cs_frames: usize, rc_frames: usize) -> Result<Self> {
        let cfg = ChunkConfig {
            cs_frames,
            rc_frames,
            frame_shift_ms: 10,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Chunk configuration for a decoding threshold `dt_ms` with right
    /// context `rc_ms`, both multiples of `frame_shift_ms`.
    pub fn from_ms(dt_ms: u64, rc_ms: u64, frame_shift_ms: u64) -> Result<Self> {
        if frame_shift_ms == 0 {
            return Err(Error::config("frame shift must be positive"));
        }
        if !rc_ms.is_multiple_of(frame_shift_ms) {
            return Err(Error::config(format!(
                "right context {rc_ms}ms must be a multiple of frame shift {frame_shift_ms}ms"
            )));
        }
        let base = ChunkConfig {
            cs_frames: usize::MAX,
            rc_frames: (rc_ms / frame_shift_ms) as usize,
            frame_shift_ms,
        };
        base.with_dt(dt_ms)
    }

    pub fn validate(&self) -> Result<()> {
        if self.frame_shift_ms == 0 {
            return Err(Error::config("frame shift must be positive"));
        }
        if self.cs_frames == 0 {
            return Err(Error::config("chunk size must be positive"));
        }
        if self.rc_frames >= self.cs_frames {
            return Err(Error::config(format!(
                "right context ({} frames) must be smaller than chunk size ({} frames)",
                self.rc_frames, self.cs_frames
            )));
        }
        Ok(())
    }

    /// Replaces the chunk size by the decoding threshold; right context and
    /// frame shift are unchanged.
    pub fn with_dt(&self, dt_ms: u64) -> Result<Self> {
        let cs_frames = dt_to_frames(dt_ms, self)?;
        let cfg = ChunkConfig { cs_frames, ..*self };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Raw frames surfaced per full window.
    pub fn stride(&self) -> usize {
        self.cs_frames - self.rc_frames
    }

    pub fn chunk_ms(&self) -> u64 {
        self.cs_frames as u64 * self.frame_shift_ms
    }
}

/// Decoding threshold in milliseconds to chunk size in frames.
pub fn dt_to_frames(dt_ms: u64, cfg: &ChunkConfig) -> Result<usize> {
    let shift = cfg.frame_shift_ms;
    if shift == 0 {
        return Err(Error::config("frame shift must be positive"));
    }
    if dt_ms == 0 || !dt_ms.is_multiple_of(shift) {
        return Err(Error::config(format!(
            "DT must be a multiple of frame shift ({dt_ms}ms vs {shift}ms)"
        )));
    }
    let frames = (dt_ms / shift) as usize;
    if frames <= cfg.rc_frames {
        return Err(Error::config(format!(
            "DT of {dt_ms}ms gives {frames} frames, not more than the right context of {} frames",
            cfg.rc_frames
        )));
    }
    Ok(frames)
}

/// Encoder frames computed per surfaced frame on a long stream.
pub fn recompute_ratio(cfg: &ChunkConfig) -> Result<f64> {
    cfg.validate()?;
    Ok(cfg.cs_frames as f64 / cfg.stride() as f64)
}

/// One encoder window in raw frame indices, all ranges half-open.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Window {
    pub chunk_start: usize,
    pub chunk_end: usize,
    pub emit_start: usize,
    pub emit_end: usize,
}

impl Window {
    pub fn len(&self) -> usize {
        self.chunk_end - self.chunk_start
    }

    pub fn is_empty(&self) -> bool {
        self.chunk_end == self.chunk_start
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChunkPlan {
    pub windows: Vec<Window>,
}

impl ChunkPlan {
    /// Frames pushed through the encoder, overlap included.
    pub fn encoder_frames(&self) -> usize {
        self.windows.iter().map(Window::len).sum()
    }

    /// Largest `(chunk_end - i) * shift` over surfaced frames `i`.
    pub fn max_latency_ms(&self, frame_shift_ms: u64) -> u64 {
        self.windows
            .iter()
            .filter(|w| w.emit_end > w.emit_start)
            .map(|w| (w.chunk_end - w.emit_start) as u64 * frame_shift_ms)
            .max()
            .unwrap_or(0)
    }
}

/// The window sequence for a stream of `total_frames` frames.
pub fn plan_chunks(total_frames: usize, cfg: &ChunkConfig) -> Result<ChunkPlan> {
    cfg.validate()?;
    let (cs, stride) = (cfg.cs_frames, cfg.stride());
    let mut windows = Vec::new();
    let mut start = 0;
    while start + cs <= total_frames {
        windows.push(Window {
            chunk_start: start,
            chunk_end: start + cs,
            emit_start: start,
            emit_end: start + stride,
        });
        start += stride;
    }
    if start < total_frames {
        windows.push(Window {
            chunk_start: start,
            chunk_end: total_frames,
            emit_start: start,
            emit_end: total_frames,
        });
    }
    Ok(ChunkPlan { windows })
}

/// Closed form of `plan_chunks(total_frames, cfg).encoder_frames()`.
pub fn encoder_frames_closed_form(total_frames: usize, cfg: &ChunkConfig) -> Result<usize> {
    cfg.validate()?;
    let (cs, stride) = (cfg.cs_frames, cfg.stride());
    let full = if total_frames >= cs {
        (total_frames - cs) / stride + 1
    } else {
        0
    };
    let rest = total_frames - full * stride;
    Ok(full * cs + rest)
}

/// Turns an in-order frame stream into embeddings, one window at a time.
///
/// A full window is encoded as soon as its last frame arrives;
/// [`finish`](Self::finish) flushes the truncated final window. The output
/// equals encoding the windows of [`plan_chunks`] offline.
pub struct StreamEncoder<'m, M: TransducerModel + ?Sized> {
    model: &'m M,
    cfg: ChunkConfig,
    buffer: VecDeque<AudioFrame>,
    /// Raw index of `buffer[0]`, which is also the next window start.
    buffer_start: usize,
    received: usize,
    encoder_frames: usize,
    windows: Vec<Window>,
}

impl<'m, M: TransducerModel + ?Sized> StreamEncoder<'m, M> {
    pub fn new(model: &'m M, cfg: ChunkConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(StreamEncoder {
            model,
            cfg,
            buffer: VecDeque::with_capacity(cfg.cs_frames),
            buffer_start: 0,
            received: 0,
            encoder_frames: 0,
            windows: Vec::new(),
        })
    }

    pub fn config(&self) -> &ChunkConfig {
        &self.cfg
    }

    /// Frames run through the encoder so far.
    pub fn encoder_frames(&self) -> usize {
        self.encoder_frames
    }

    /// Windows encoded so far.
    pub fn windows(&self) -> &[Window] {
        &self.windows
    }

    pub fn frames_received(&self) -> usize {
        self.received
    }

    /// Accepts the next frame; returns embeddings that became available.
    pub fn push_frame(&mut self, frame: AudioFrame) -> Result<Vec<AudioEmbedding>> {
        let expected = self.received as u64 * self.cfg.frame_shift_ms;
        if frame.timestamp_ms != expected {
            return Err(Error::Protocol(format!(
                "frame {} has timestamp {}ms, expected {expected}ms",
                self.received, frame.timestamp_ms
            )));
        }
        if frame.features.len() != self.model.feature_dim() {
            return Err(Error::config(format!(
                "frame {} has {} features, model expects {}",
                self.received,
                frame.features.len(),
                self.model.feature_dim()
            )));
        }
        self.buffer.push_back(frame);
        self.received += 1;
        if self.buffer.len() == self.cfg.cs_frames {
            let stride = self.cfg.stride();
            let emit = self.buffer_start..self.buffer_start + stride;
            let out = self.encode(emit)?;
            self.buffer.drain(..stride);
            self.buffer_start += stride;
            return Ok(out);
        }
        Ok(Vec::new())
    }

    pub fn push_frames(
        &mut self,
        frames: impl IntoIterator<Item = AudioFrame>,
    ) -> Result<Vec<AudioEmbedding>> {
        let mut out = Vec::new();
        for f in frames {
            out.extend(self.push_frame(f)?);
        }
        Ok(out)
    }

    /// Ends the stream and encodes the final partial window, if any.
    pub fn finish(mut self) -> Result<StreamTail> {
        let embeddings = if self.buffer.is_empty() {
            Vec::new()
        } else {
            let emit = self.buffer_start..self.received;
            self.encode(emit)?
        };
        Ok(StreamTail {
            embeddings,
            encoder_frames: self.encoder_frames,
            windows: self.windows,
        })
    }

    fn encode(&mut self, emit: std::ops::Range<usize>) -> Result<Vec<AudioEmbedding>> {
        let frames = self.buffer.make_contiguous();
        self.encoder_frames += frames.len();
        self.windows.push(Window {
            chunk_start: self.buffer_start,
            chunk_end: self.buffer_start + frames.len(),
            emit_start: emit.start,
            emit_end: emit.end,
        });
        self.model.encode_chunk(frames, self.buffer_start, emit)
    }
}

/// What [`StreamEncoder::finish`] hands back.
#[derive(Clone, Debug, PartialEq)]
pub struct StreamTail {
    /// Embeddings of the final window.
    pub embeddings: Vec<AudioEmbedding>,
    pub encoder_frames: usize,
    /// Every window encoded over the stream.
    pub windows: Vec<Window>,
}

/// Offline equivalent of [`StreamEncoder`]: encodes every window of the plan.
pub fn encode_offline<M: TransducerModel + ?Sized>(
    model: &M,
    frames: &[AudioFrame],
    cfg: &ChunkConfig,
) -> Result<Vec<AudioEmbedding>> {
    let plan = plan_chunks(frames.len(), cfg)?;
    let mut out = Vec::new();
    for w in &plan.windows {
        out.extend(model.encode_chunk(
            &frames[w.chunk_start..w.chunk_end],
            w.chunk_start,
            w.emit_start..w.emit_end,
        )?);
    }
    Ok(out)
}
