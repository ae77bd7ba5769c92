//! Value types shared by every part of the decoder: log-space scores, token
//! ids, vocabularies, hypotheses and beam configuration.

use std::cmp::Ordering;
use std::fmt;
use std::ops::Add;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Index of an output unit, dense in `[0, V)`.
pub type TokenId = u32;

/// A natural-log probability.
///
/// Products of probabilities are sums of `LogProb`s; sums of probabilities
/// go through [`LogProb::log_add`]. The zero probability is negative
/// infinity, which serializes as JSON `null`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct LogProb(pub f64);

impl LogProb {
    pub const ZERO: LogProb = LogProb(f64::NEG_INFINITY);
    pub const ONE: LogProb = LogProb(0.0);

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }

    pub fn from_prob(p: f64) -> Self {
        LogProb(p.ln())
    }

    pub fn is_zero(self) -> bool {
        self.0 == f64::NEG_INFINITY
    }

    /// `ln(e^self + e^other)`, stable for large-magnitude inputs.
    #[inline]
    pub fn log_add(self, other: LogProb) -> LogProb {
        LogProb(logsumexp(self.0, other.0))
    }
}

impl Add for LogProb {
    type Output = LogProb;

    #[inline]
    fn add(self, rhs: LogProb) -> LogProb {
        LogProb(self.0 + rhs.0)
    }
}

impl fmt::Display for LogProb {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl Serialize for LogProb {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.is_zero() {
            s.serialize_none()
        } else {
            s.serialize_f64(self.0)
        }
    }
}

impl<'de> Deserialize<'de> for LogProb {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.map_or(LogProb::ZERO, LogProb))
    }
}

/// `ln(e^a + e^b)`.
///
/// Negative infinity is the identity. NaN inputs are a programming error.
#[inline]
pub fn logsumexp(a: f64, b: f64) -> f64 {
    debug_assert!(!a.is_nan() && !b.is_nan(), "logsumexp of NaN");
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if lo == f64::NEG_INFINITY {
        return hi;
    }
    hi + (lo - hi).exp().ln_1p()
}

/// Log-sum-exp over a slice; negative infinity for an empty slice.
pub fn logsumexp_all(values: impl IntoIterator<Item = f64>) -> f64 {
    let values: Vec<f64> = values.into_iter().collect();
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi == f64::NEG_INFINITY {
        return hi;
    }
    hi + values.iter().map(|v| (v - hi).exp()).sum::<f64>().ln()
}

/// One entry of a vocabulary file.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VocabEntry {
    pub id: TokenId,
    pub piece: String,
    pub is_blank: bool,
}

/// Output units of a transducer. Exactly one unit is blank.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vocabulary {
    entries: Vec<VocabEntry>,
    blank: TokenId,
}

/// Word-boundary marker used by sentence-piece vocabularies. A piece that
/// starts with it begins a new word.
pub const WORD_MARKER: char = '\u{2581}';

impl Vocabulary {
    /// Validates ids are dense in `[0, V)` and exactly one entry is blank.
    pub fn new(mut entries: Vec<VocabEntry>) -> Result<Self> {
        entries.sort_by_key(|e| e.id);
        if entries.len() < 2 {
            return Err(Error::schema("vocab", "need at least blank and one label"));
        }
        for (i, e) in entries.iter().enumerate() {
            if e.id as usize != i {
                return Err(Error::schema(
                    format!("vocab[{i}].id"),
                    format!(
                        "ids must be dense in [0, {}), found {}",
                        entries.len(),
                        e.id
                    ),
                ));
            }
        }
        let blanks: Vec<TokenId> = entries
            .iter()
            .filter(|e| e.is_blank)
            .map(|e| e.id)
            .collect();
        match blanks.as_slice() {
            [b] => {
                let blank = *b;
                Ok(Vocabulary { entries, blank })
            }
            [] => Err(Error::schema("vocab", "no token has is_blank = true")),
            many => Err(Error::schema(
                "vocab",
                format!("exactly one blank token allowed, found ids {many:?}"),
            )),
        }
    }

    /// Blank at id 0 followed by `labels` single-character pieces `a`, `b`, ...
    pub fn toy(size: usize) -> Self {
        assert!(size >= 2, "toy vocabulary needs blank plus one label");
        let entries = (0..size)
            .map(|i| VocabEntry {
                id: i as TokenId,
                piece: if i == 0 {
                    "<blank>".to_string()
                } else {
                    toy_piece(i - 1)
                },
                is_blank: i == 0,
            })
            .collect();
        Vocabulary::new(entries).expect("toy vocabulary is valid")
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn blank(&self) -> TokenId {
        self.blank
    }

    pub fn entries(&self) -> &[VocabEntry] {
        &self.entries
    }

    pub fn token(&self, id: TokenId) -> Token {
        Token {
            id,
            is_blank: id == self.blank,
        }
    }

    /// Non-blank ids in increasing order.
    pub fn labels(&self) -> impl Iterator<Item = TokenId> + '_ {
        let blank = self.blank;
        (0..self.entries.len() as TokenId).filter(move |&k| k != blank)
    }

    pub fn piece(&self, id: TokenId) -> &str {
        &self.entries[id as usize].piece
    }

    /// Concatenates pieces; [`WORD_MARKER`] becomes a space and leading
    /// whitespace is trimmed.
    pub fn detokenize(&self, labels: &[TokenId]) -> String {
        let joined: String = labels.iter().map(|&k| self.piece(k)).collect();
        joined.replace(WORD_MARKER, " ").trim_start().to_string()
    }
}

fn toy_piece(i: usize) -> String {
    if i < 26 {
        char::from(b'a' + i as u8).to_string()
    } else {
        format!("<{i}>")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Token {
    pub id: TokenId,
    pub is_blank: bool,
}

/// A label-sequence prefix and its accumulated log-probability.
///
/// The predictor state belonging to a hypothesis is addressed by its label
/// sequence in the session's [`PredictorCache`](crate::model::PredictorCache).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hypothesis {
    pub labels: Vec<TokenId>,
    pub score: LogProb,
}

impl Hypothesis {
    pub fn empty() -> Self {
        Hypothesis {
            labels: Vec::new(),
            score: LogProb::ONE,
        }
    }

    pub fn normalized_score(&self) -> f64 {
        normalized_score(self.score, self.labels.len())
    }
}

/// Length-normalized score `score / max(1, len)`; the empty sequence keeps
/// its raw score.
#[inline]
pub fn normalized_score(score: LogProb, len: usize) -> f64 {
    score.0 / len.max(1) as f64
}

/// Deterministic tie-break between label sequences: shorter first, then
/// lexicographic by token id.
#[inline]
pub fn tie_break(a: &[TokenId], b: &[TokenId]) -> Ordering {
    a.len().cmp(&b.len()).then_with(|| a.cmp(b))
}

/// Orders by raw score, best first, then [`tie_break`].
pub fn rank_by_score(a: (&[TokenId], LogProb), b: (&[TokenId], LogProb)) -> Ordering {
    b.1 .0.total_cmp(&a.1 .0).then_with(|| tie_break(a.0, b.0))
}

/// Orders by normalized score, best first, then [`tie_break`].
pub fn rank_by_normalized(a: &Hypothesis, b: &Hypothesis) -> Ordering {
    b.normalized_score()
        .total_cmp(&a.normalized_score())
        .then_with(|| tie_break(&a.labels, &b.labels))
}

/// Beam search settings. Beams are natural-log margins; `f64::INFINITY`
/// disables the corresponding pruning rule.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BeamConfig {
    pub beam_width: usize,
    #[serde(with = "inf_as_null")]
    pub expand_beam: f64,
    #[serde(with = "inf_as_null")]
    pub state_beam: f64,
    #[serde(default = "default_max_symbols")]
    pub max_symbols_per_frame: usize,
}

fn default_max_symbols() -> usize {
    BeamConfig::DEFAULT_MAX_SYMBOLS
}

impl Default for BeamConfig {
    fn default() -> Self {
        BeamConfig::unpruned(4)
    }
}

impl BeamConfig {
    pub const DEFAULT_MAX_SYMBOLS: usize = 10;

    /// Both beams infinite: the unmodified search.
    pub fn unpruned(beam_width: usize) -> Self {
        BeamConfig {
            beam_width,
            expand_beam: f64::INFINITY,
            state_beam: f64::INFINITY,
            max_symbols_per_frame: Self::DEFAULT_MAX_SYMBOLS,
        }
    }

    pub fn pruned(beam_width: usize, expand_beam: f64, state_beam: f64) -> Self {
        BeamConfig {
            expand_beam,
            state_beam,
            ..BeamConfig::unpruned(beam_width)
        }
    }

    pub fn with_max_symbols(mut self, max_symbols_per_frame: usize) -> Self {
        self.max_symbols_per_frame = max_symbols_per_frame;
        self
    }

    /// Hypotheses popped from `A` per frame before the loop gives up.
    pub fn pops_per_frame(&self) -> usize {
        self.max_symbols_per_frame.saturating_mul(self.beam_width)
    }

    pub fn is_unpruned(&self) -> bool {
        self.expand_beam == f64::INFINITY && self.state_beam == f64::INFINITY
    }

    pub fn validate(&self) -> Result<()> {
        if self.beam_width == 0 {
            return Err(Error::config("beam width must be at least 1"));
        }
        if self.max_symbols_per_frame == 0 {
            return Err(Error::config("max_symbols_per_frame must be at least 1"));
        }
        for (name, v) in [
            ("expand_beam", self.expand_beam),
            ("state_beam", self.state_beam),
        ] {
            if v.is_nan() || v < 0.0 {
                return Err(Error::config(format!(
                    "{name} must be non-negative, got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// Serializes `+inf` as JSON `null` so unbounded beams survive a round trip.
pub(crate) mod inf_as_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_infinite() && v.is_sign_positive() {
            s.serialize_none()
        } else {
            s.serialize_f64(*v)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}
