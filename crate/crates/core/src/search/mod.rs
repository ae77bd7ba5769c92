//! Transducer beam search.
//!
//! [`DecodeSession`] runs the pruned search frame by frame as embeddings
//! arrive. [`decode_reference`] is a separate one-shot implementation of
//! the unpruned search used as a baseline.

mod hyp_set;
mod reference;
mod session;

use serde::{Deserialize, Serialize};

pub use hyp_set::HypothesisSet;
pub use reference::decode_reference;
pub use session::{decode_pruned, DecodeSession};

use crate::types::{Hypothesis, LogProb, TokenId};

/// Counters collected during a decode.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchStats {
    /// Joiner evaluations (memo misses).
    pub joiner_calls: u64,
    /// Non-blank expansions rejected by the expand beam.
    pub expansions_pruned: u64,
    /// Frames whose expansion loop ended on the state beam.
    pub state_beam_breaks: u64,
    pub frames: u64,
    /// Hypotheses popped from the expansion set, summed over frames.
    pub loop_iterations: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecodeResult {
    pub best: Hypothesis,
    /// Up to `beam_width` hypotheses, best first by normalized score.
    pub n_best: Vec<Hypothesis>,
    pub stats: SearchStats,
}

impl DecodeResult {
    pub(crate) fn from_beam(beam: &HypothesisSet, stats: SearchStats) -> Self {
        let n_best = beam.ranked_normalized();
        let best = n_best.first().cloned().unwrap_or_else(Hypothesis::empty);
        DecodeResult {
            best,
            n_best,
            stats,
        }
    }

    /// Compares hypotheses and counters with scores compared bit for bit.
    pub fn bit_identical(&self, other: &DecodeResult) -> bool {
        fn same(a: &Hypothesis, b: &Hypothesis) -> bool {
            a.labels == b.labels && a.score.0.to_bits() == b.score.0.to_bits()
        }
        same(&self.best, &other.best)
            && self.n_best.len() == other.n_best.len()
            && self
                .n_best
                .iter()
                .zip(&other.n_best)
                .all(|(a, b)| same(a, b))
            && self.stats == other.stats
    }
}

/// One step of the search, recorded when tracing is enabled.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum TraceEvent {
    /// Expansion set after prefix merging, in label order.
    FrameStart {
        t: usize,
        a: Vec<Hypothesis>,
    },
    /// A hypothesis left the expansion set: its blank extension went to the
    /// next-frame set and `expansions` were admitted back into it.
    Pop {
        labels: Vec<TokenId>,
        score: LogProb,
        blank_score: LogProb,
        expansions: Vec<Hypothesis>,
        pruned: Vec<TokenId>,
    },
    StateBeamBreak {
        a_best: LogProb,
        b_best: LogProb,
    },
    /// Next-frame set after truncation to the beam width, best first.
    FrameEnd {
        t: usize,
        b: Vec<Hypothesis>,
    },
}
