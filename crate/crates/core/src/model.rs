//! Encoder / predictor / joiner contracts and the per-session caches that
//! keep the search from recomputing a label prefix.

use std::collections::HashMap;
use std::ops::Range;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::types::{logsumexp_all, LogProb, TokenId, Vocabulary};

/// One feature vector of the input stream.
#[derive(Clone, Debug, PartialEq)]
pub struct AudioFrame {
    pub features: Vec<f32>,
    pub timestamp_ms: u64,
}

/// Encoder output for one post-subsampling frame index.
#[derive(Clone, Debug, PartialEq)]
pub struct AudioEmbedding {
    pub frame_index: usize,
    pub vector: Vec<f64>,
}

/// Predictor output for a label prefix together with the recurrent state
/// needed to extend that prefix by one token.
#[derive(Clone, Debug, PartialEq)]
pub struct TextEmbedding {
    pub vector: Vec<f64>,
    pub state: Vec<f64>,
}

/// Normalized distribution over the vocabulary, indexed by token id.
#[derive(Clone, Debug, PartialEq)]
pub struct JoinerOutput {
    pub log_probs: Vec<LogProb>,
}

impl JoinerOutput {
    /// Log-softmax of raw logits.
    pub fn from_logits(logits: &[f64]) -> Self {
        let norm = logsumexp_all(logits.iter().copied());
        JoinerOutput {
            log_probs: logits.iter().map(|&l| LogProb(l - norm)).collect(),
        }
    }

    pub fn get(&self, token: TokenId) -> LogProb {
        self.log_probs[token as usize]
    }

    /// `logsumexp` over all entries; zero for a proper distribution.
    pub fn total(&self) -> f64 {
        logsumexp_all(self.log_probs.iter().map(|p| p.0))
    }
}

/// The encoder / predictor / joiner triple of a transducer.
///
/// Implementations are immutable after construction and shared read-only
/// across decode sessions.
pub trait TransducerModel: Send + Sync {
    fn vocab(&self) -> &Vocabulary;

    fn feature_dim(&self) -> usize;

    /// Time-reduction factor between raw frames and embeddings.
    fn subsample_factor(&self) -> usize {
        1
    }

    /// Encodes the chunk `frames`, whose first frame has raw index
    /// `chunk_start`, and surfaces the embeddings for raw frames in `emit`.
    ///
    /// With subsampling factor `s`, raw range `[lo, hi)` surfaces the
    /// post-subsampling indices `ceil(lo/s) .. ceil(hi/s)`. Outputs may only
    /// depend on the frames of the chunk.
    fn encode_chunk(
        &self,
        frames: &[AudioFrame],
        chunk_start: usize,
        emit: Range<usize>,
    ) -> Result<Vec<AudioEmbedding>>;

    /// Embedding of the empty label prefix.
    fn predictor_start(&self) -> TextEmbedding;

    /// One incremental predictor step from `parent` by `token`.
    fn predictor_step(&self, parent: &TextEmbedding, token: TokenId) -> TextEmbedding;

    fn join(&self, audio: &AudioEmbedding, text: &TextEmbedding) -> Result<JoinerOutput>;
}

/// Post-subsampling indices surfaced by raw range `emit` with factor `s`.
pub fn subsampled_range(emit: &Range<usize>, s: usize) -> Range<usize> {
    emit.start.div_ceil(s)..emit.end.div_ceil(s)
}

/// Checks the `encode_chunk` preconditions shared by every encoder.
pub fn check_chunk(
    frames: &[AudioFrame],
    chunk_start: usize,
    emit: &Range<usize>,
    feature_dim: usize,
) -> Result<()> {
    if emit.is_empty() {
        return Ok(());
    }
    if frames.is_empty() {
        return Err(Error::config("encode_chunk called with no frames"));
    }
    let chunk_end = chunk_start + frames.len();
    if emit.start < chunk_start || emit.end > chunk_end {
        return Err(Error::config(format!(
            "emit range {emit:?} outside chunk [{chunk_start}, {chunk_end})"
        )));
    }
    if let Some((i, f)) = frames
        .iter()
        .enumerate()
        .find(|(_, f)| f.features.len() != feature_dim)
    {
        return Err(Error::config(format!(
            "frame {} has {} features, model expects {feature_dim}",
            chunk_start + i,
            f.features.len()
        )));
    }
    Ok(())
}

/// Predictor states keyed by the exact label sequence that produced them.
///
/// A cache belongs to one utterance; call [`clear`](Self::clear) between
/// utterances.
#[derive(Default, Debug)]
pub struct PredictorCache {
    states: HashMap<Vec<TokenId>, Arc<TextEmbedding>>,
    steps: u64,
}

impl PredictorCache {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns the embedding for `prefix`, computing only the missing
    /// suffix incrementally from the longest cached ancestor.
    pub fn predict<M: TransducerModel + ?Sized>(
        &mut self,
        model: &M,
        prefix: &[TokenId],
    ) -> Arc<TextEmbedding> {
        if let Some(hit) = self.states.get(prefix) {
            return Arc::clone(hit);
        }
        let mut known = prefix.len();
        let mut state = loop {
            if known == 0 {
                let root = Arc::new(model.predictor_start());
                self.states.insert(Vec::new(), Arc::clone(&root));
                break root;
            }
            known -= 1;
            if let Some(s) = self.states.get(&prefix[..known]) {
                break Arc::clone(s);
            }
        };
        for i in known..prefix.len() {
            state = Arc::new(model.predictor_step(&state, prefix[i]));
            self.steps += 1;
            self.states
                .insert(prefix[..=i].to_vec(), Arc::clone(&state));
        }
        state
    }

    /// Number of incremental predictor steps computed.
    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn clear(&mut self) {
        self.states.clear();
    }
}

/// Recomputes a prefix embedding from the root with no cache.
pub fn predict_from_scratch<M: TransducerModel + ?Sized>(
    model: &M,
    prefix: &[TokenId],
) -> TextEmbedding {
    prefix
        .iter()
        .fold(model.predictor_start(), |s, &k| model.predictor_step(&s, k))
}

/// Joiner outputs memoized by `(frame, label sequence)` plus the joiner
/// call counter.
///
/// The counter only counts cache misses, i.e. actual joiner evaluations.
/// Entries for a frame are dropped when the search advances to the next
/// frame since frame indices never repeat.
#[derive(Default, Debug)]
pub struct Scorer {
    predictor: PredictorCache,
    frame: Option<usize>,
    memo: HashMap<Vec<TokenId>, Arc<JoinerOutput>>,
    joiner_calls: u64,
}

impl Scorer {
    pub fn new() -> Self {
        Self::default()
    }

    /// Distribution over the next unit given `labels` at `audio`'s frame.
    pub fn join<M: TransducerModel + ?Sized>(
        &mut self,
        model: &M,
        audio: &AudioEmbedding,
        labels: &[TokenId],
    ) -> Result<Arc<JoinerOutput>> {
        if self.frame != Some(audio.frame_index) {
            self.memo.clear();
            self.frame = Some(audio.frame_index);
        }
        if let Some(hit) = self.memo.get(labels) {
            return Ok(Arc::clone(hit));
        }
        let text = self.predictor.predict(model, labels);
        let out = Arc::new(model.join(audio, &text)?);
        self.joiner_calls += 1;
        self.memo.insert(labels.to_vec(), Arc::clone(&out));
        Ok(out)
    }

    /// Joiner evaluations since construction or the last reset.
    pub fn joiner_calls(&self) -> u64 {
        self.joiner_calls
    }

    pub fn reset_counter(&mut self) {
        self.joiner_calls = 0;
    }

    pub fn predictor_cache(&self) -> &PredictorCache {
        &self.predictor
    }

    /// Drops every cached state; used between utterances.
    pub fn clear(&mut self) {
        self.predictor.clear();
        self.memo.clear();
        self.frame = None;
    }
}
