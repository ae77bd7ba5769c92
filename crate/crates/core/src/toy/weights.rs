//! The JSON weight file and the transducer it describes.
//!
//! ```text
//! {
//!   "feature_dim": 4,
//!   "subsample_factor": 1,
//!   "vocab": [{"id": 0, "piece": "<blank>", "is_blank": true}, ...],
//!   "encoder":   {"kind": "linear_recurrent", "left_input": [[..]], "left_recurrent": [[..]],
//!                 "right_input": [[..]], "right_recurrent": [[..]]}
//!              | {"kind": "frame_index"},
//!   "predictor": {"kind": "linear_recurrent", "embedding": [[..]], "recurrent": [[..]]}
//!              | {"kind": "label_identity"},
//!   "joiner":    {"kind": "sum_relu_softmax", "audio_proj": [[..]], "text_proj": [[..]],
//!                 "hidden_bias": [..], "output": [[..]], "output_bias": [..],
//!                 "logit_scale": 1.0, "blank_bias": 0.0}
//!              | {"kind": "table", "rows": [{"t": 0, "prefix": [..], "log_probs": [..]}],
//!                 "default_row": [..] | null, "hashed": {..} | null}
//! }
//! ```
//!
//! Matrices are row-major `[out][in]`. Log-probabilities of zero are `null`.

use std::collections::HashMap;
use std::ops::Range;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    check_chunk, subsampled_range, AudioEmbedding, AudioFrame, JoinerOutput, TextEmbedding,
    TransducerModel,
};
use crate::types::{logsumexp_all, LogProb, TokenId, VocabEntry, Vocabulary};

pub type Matrix = Vec<Vec<f64>>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightFile {
    pub feature_dim: usize,
    pub encoder: EncoderWeights,
    pub predictor: PredictorWeights,
    pub joiner: JoinerWeights,
    pub vocab: Vec<VocabEntry>,
    pub subsample_factor: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EncoderWeights {
    /// Emits an empty vector per frame; the table joiner only needs the index.
    FrameIndex,
    /// Left-to-right and right-to-left tanh recurrences, both restarted at
    /// every chunk boundary; the embedding is their sum.
    LinearRecurrent {
        left_input: Matrix,
        left_recurrent: Matrix,
        right_input: Matrix,
        right_recurrent: Matrix,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PredictorWeights {
    /// Embeds the prefix itself, so a table joiner can key on it.
    LabelIdentity,
    /// `h' = tanh(recurrent · h + embedding[k])`, started from
    /// `tanh(embedding[blank])`.
    LinearRecurrent {
        embedding: Matrix,
        recurrent: Matrix,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum JoinerWeights {
    /// `log_softmax(scale · (output · relu(audio_proj·a + text_proj·t + b) + c))`
    /// with `blank_bias` added to the blank logit.
    SumReluSoftmax {
        audio_proj: Matrix,
        text_proj: Matrix,
        hidden_bias: Vec<f64>,
        output: Matrix,
        output_bias: Vec<f64>,
        logit_scale: f64,
        blank_bias: f64,
    },
    /// Explicit `(t, prefix) -> distribution` rows, falling back to
    /// `default_row`, then to `hashed`.
    Table {
        rows: Vec<TableRow>,
        #[serde(default)]
        default_row: Option<Vec<LogProb>>,
        #[serde(default)]
        hashed: Option<HashedTable>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub t: usize,
    pub prefix: Vec<TokenId>,
    pub log_probs: Vec<LogProb>,
}

/// Pseudo-random rows derived from a hash of `(seed, t, prefix)`.
/// Prefixes with `max_labels` or more labels put all mass on blank.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HashedTable {
    pub seed: u64,
    pub logit_scale: f64,
    pub blank_bias: f64,
    pub max_labels: usize,
}

/// Row-normalization tolerance applied when loading table rows.
pub const ROW_TOLERANCE: f64 = 1e-6;

/// A synthetic transducer built from a [`WeightFile`].
#[derive(Clone, Debug)]
pub struct ToyTransducer {
    weights: WeightFile,
    vocab: Vocabulary,
    table: HashMap<(usize, Vec<TokenId>), usize>,
}

impl PartialEq for ToyTransducer {
    fn eq(&self, other: &Self) -> bool {
        self.weights == other.weights
    }
}

impl ToyTransducer {
    pub fn from_weights(weights: WeightFile) -> Result<Self> {
        let vocab = Vocabulary::new(weights.vocab.clone())?;
        validate(&weights, &vocab)?;
        let table = match &weights.joiner {
            JoinerWeights::Table { rows, .. } => {
                let mut index = HashMap::with_capacity(rows.len());
                for (i, row) in rows.iter().enumerate() {
                    if index.insert((row.t, row.prefix.clone()), i).is_some() {
                        return Err(Error::schema(
                            format!("joiner.rows[{i}]"),
                            format!("duplicate row for t={} prefix={:?}", row.t, row.prefix),
                        ));
                    }
                }
                index
            }
            _ => HashMap::new(),
        };
        Ok(ToyTransducer {
            weights,
            vocab,
            table,
        })
    }

    pub fn weights(&self) -> &WeightFile {
        &self.weights
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.weights).expect("weights serialize")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let weights: WeightFile = serde_json::from_str(text).map_err(|e| Error::Json {
            path: "<memory>".into(),
            source: e,
        })?;
        Self::from_weights(weights)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let weights: WeightFile = serde_json::from_str(&text).map_err(|e| Error::Json {
            path: path.to_path_buf(),
            source: e,
        })?;
        Self::from_weights(weights)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json() + "\n").map_err(|e| Error::io(path, e))
    }

    fn table_row(&self, t: usize, prefix: &[TokenId]) -> Result<JoinerOutput> {
        let JoinerWeights::Table {
            rows,
            default_row,
            hashed,
        } = &self.weights.joiner
        else {
            unreachable!("table lookup on a non-table joiner");
        };
        if let Some(&i) = self.table.get(&(t, prefix.to_vec())) {
            return Ok(JoinerOutput {
                log_probs: rows[i].log_probs.clone(),
            });
        }
        if let Some(row) = default_row {
            return Ok(JoinerOutput {
                log_probs: row.clone(),
            });
        }
        if let Some(h) = hashed {
            return Ok(hashed_row(
                h,
                self.vocab.len(),
                self.vocab.blank(),
                t,
                prefix,
            ));
        }
        Err(Error::config(format!(
            "table joiner has no row for t={t} prefix={prefix:?}"
        )))
    }
}

impl TransducerModel for ToyTransducer {
    fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    fn feature_dim(&self) -> usize {
        self.weights.feature_dim
    }

    fn subsample_factor(&self) -> usize {
        self.weights.subsample_factor
    }

    fn encode_chunk(
        &self,
        frames: &[AudioFrame],
        chunk_start: usize,
        emit: Range<usize>,
    ) -> Result<Vec<AudioEmbedding>> {
        check_chunk(frames, chunk_start, &emit, self.weights.feature_dim)?;
        let s = self.weights.subsample_factor;
        let out = subsampled_range(&emit, s);
        if out.is_empty() {
            return Ok(Vec::new());
        }
        match &self.weights.encoder {
            EncoderWeights::FrameIndex => Ok(out
                .map(|j| AudioEmbedding {
                    frame_index: j,
                    vector: Vec::new(),
                })
                .collect()),
            EncoderWeights::LinearRecurrent {
                left_input,
                left_recurrent,
                right_input,
                right_recurrent,
            } => {
                let hidden = left_recurrent.len();
                let x: Vec<Vec<f64>> = frames
                    .iter()
                    .map(|f| f.features.iter().map(|&v| v as f64).collect())
                    .collect();
                // Local offsets of the first and last raw frame that are surfaced.
                let lo = out.start * s - chunk_start;
                let hi = (out.end - 1) * s - chunk_start;

                let mut left = vec![vec![0.0; hidden]; hi + 1];
                let mut h = vec![0.0; hidden];
                for i in 0..=hi {
                    h = tanh_affine(left_recurrent, &h, left_input, &x[i]);
                    left[i].clone_from(&h);
                }
                let mut right = vec![vec![0.0; hidden]; frames.len()];
                let mut g = vec![0.0; hidden];
                for i in (lo..frames.len()).rev() {
                    g = tanh_affine(right_recurrent, &g, right_input, &x[i]);
                    right[i].clone_from(&g);
                }
                Ok(out
                    .map(|j| {
                        let i = j * s - chunk_start;
                        AudioEmbedding {
                            frame_index: j,
                            vector: left[i].iter().zip(&right[i]).map(|(a, b)| a + b).collect(),
                        }
                    })
                    .collect())
            }
        }
    }

    fn predictor_start(&self) -> TextEmbedding {
        match &self.weights.predictor {
            PredictorWeights::LabelIdentity => TextEmbedding {
                vector: Vec::new(),
                state: Vec::new(),
            },
            PredictorWeights::LinearRecurrent { embedding, .. } => {
                let h: Vec<f64> = embedding[self.vocab.blank() as usize]
                    .iter()
                    .map(|v| v.tanh())
                    .collect();
                TextEmbedding {
                    vector: h.clone(),
                    state: h,
                }
            }
        }
    }

    fn predictor_step(&self, parent: &TextEmbedding, token: TokenId) -> TextEmbedding {
        match &self.weights.predictor {
            PredictorWeights::LabelIdentity => {
                let mut v = parent.vector.clone();
                v.push(token as f64);
                TextEmbedding {
                    vector: v.clone(),
                    state: v,
                }
            }
            PredictorWeights::LinearRecurrent {
                embedding,
                recurrent,
            } => {
                let e = &embedding[token as usize];
                let h: Vec<f64> = matvec(recurrent, &parent.state)
                    .iter()
                    .zip(e)
                    .map(|(a, b)| (a + b).tanh())
                    .collect();
                TextEmbedding {
                    vector: h.clone(),
                    state: h,
                }
            }
        }
    }

    fn join(&self, audio: &AudioEmbedding, text: &TextEmbedding) -> Result<JoinerOutput> {
        match &self.weights.joiner {
            JoinerWeights::Table { .. } => {
                let prefix: Vec<TokenId> = text.vector.iter().map(|&v| v as TokenId).collect();
                self.table_row(audio.frame_index, &prefix)
            }
            JoinerWeights::SumReluSoftmax {
                audio_proj,
                text_proj,
                hidden_bias,
                output,
                output_bias,
                logit_scale,
                blank_bias,
            } => {
                if audio.vector.len() != audio_proj[0].len()
                    || text.vector.len() != text_proj[0].len()
                {
                    return Err(Error::config(format!(
                        "joiner expects ({}, {}) inputs, got ({}, {})",
                        audio_proj[0].len(),
                        text_proj[0].len(),
                        audio.vector.len(),
                        text.vector.len()
                    )));
                }
                let a = matvec(audio_proj, &audio.vector);
                let t = matvec(text_proj, &text.vector);
                let hidden: Vec<f64> = a
                    .iter()
                    .zip(&t)
                    .zip(hidden_bias)
                    .map(|((x, y), b)| (x + y + b).max(0.0))
                    .collect();
                let mut logits: Vec<f64> = matvec(output, &hidden)
                    .iter()
                    .zip(output_bias)
                    .map(|(z, c)| logit_scale * (z + c))
                    .collect();
                logits[self.vocab.blank() as usize] += blank_bias;
                Ok(JoinerOutput::from_logits(&logits))
            }
        }
    }
}

pub(crate) fn matvec(m: &Matrix, v: &[f64]) -> Vec<f64> {
    m.iter()
        .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
        .collect()
}

fn tanh_affine(rec: &Matrix, h: &[f64], input: &Matrix, x: &[f64]) -> Vec<f64> {
    matvec(rec, h)
        .iter()
        .zip(matvec(input, x))
        .map(|(a, b)| (a + b).tanh())
        .collect()
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Distribution of a hashed table row; a pure function of its arguments.
pub fn hashed_row(
    h: &HashedTable,
    vocab_size: usize,
    blank: TokenId,
    t: usize,
    prefix: &[TokenId],
) -> JoinerOutput {
    if prefix.len() >= h.max_labels {
        let mut log_probs = vec![LogProb::ZERO; vocab_size];
        log_probs[blank as usize] = LogProb::ONE;
        return JoinerOutput { log_probs };
    }
    let mut state = h.seed;
    splitmix64(&mut state);
    state ^= t as u64;
    splitmix64(&mut state);
    for &k in prefix {
        state ^= u64::from(k) + 1;
        splitmix64(&mut state);
    }
    let mut logits: Vec<f64> = (0..vocab_size)
        .map(|_| {
            let u = (splitmix64(&mut state) >> 11) as f64 / (1u64 << 53) as f64;
            h.logit_scale * (u - 0.5)
        })
        .collect();
    logits[blank as usize] += h.blank_bias;
    JoinerOutput::from_logits(&logits)
}

fn check_matrix(field: &str, m: &Matrix, rows: usize, cols: usize) -> Result<()> {
    if m.len() != rows {
        return Err(Error::schema(
            field,
            format!("expected {rows} rows, found {}", m.len()),
        ));
    }
    for (i, r) in m.iter().enumerate() {
        if r.len() != cols {
            return Err(Error::schema(
                format!("{field}[{i}]"),
                format!("expected {cols} columns, found {}", r.len()),
            ));
        }
        if r.iter().any(|v| !v.is_finite()) {
            return Err(Error::schema(format!("{field}[{i}]"), "non-finite weight"));
        }
    }
    Ok(())
}

fn check_row(field: &str, row: &[LogProb], v: usize) -> Result<()> {
    if row.len() != v {
        return Err(Error::schema(
            field,
            format!("expected {v} entries, found {}", row.len()),
        ));
    }
    if row.iter().any(|p| p.0 > 0.0) {
        return Err(Error::schema(field, "log-probability above zero"));
    }
    let total = logsumexp_all(row.iter().map(|p| p.0));
    if total.is_nan() || total.abs() > ROW_TOLERANCE {
        return Err(Error::schema(
            field,
            format!("row is not normalized: logsumexp = {total}"),
        ));
    }
    Ok(())
}

fn validate(w: &WeightFile, vocab: &Vocabulary) -> Result<()> {
    let v = vocab.len();
    if w.feature_dim == 0 {
        return Err(Error::schema("feature_dim", "must be at least 1"));
    }
    if w.subsample_factor == 0 {
        return Err(Error::schema("subsample_factor", "must be at least 1"));
    }
    match (&w.encoder, &w.predictor, &w.joiner) {
        (
            EncoderWeights::FrameIndex,
            PredictorWeights::LabelIdentity,
            JoinerWeights::Table {
                rows,
                default_row,
                hashed,
            },
        ) => {
            for (i, row) in rows.iter().enumerate() {
                check_row(&format!("joiner.rows[{i}].log_probs"), &row.log_probs, v)?;
                if row
                    .prefix
                    .iter()
                    .any(|&k| k as usize >= v || k == vocab.blank())
                {
                    return Err(Error::schema(
                        format!("joiner.rows[{i}].prefix"),
                        "prefix must hold non-blank ids within the vocabulary",
                    ));
                }
            }
            if let Some(row) = default_row {
                check_row("joiner.default_row", row, v)?;
            }
            if let Some(h) = hashed {
                if !h.logit_scale.is_finite() || !h.blank_bias.is_finite() {
                    return Err(Error::schema("joiner.hashed", "non-finite parameter"));
                }
            }
            Ok(())
        }
        (
            EncoderWeights::LinearRecurrent {
                left_input,
                left_recurrent,
                right_input,
                right_recurrent,
            },
            PredictorWeights::LinearRecurrent {
                embedding,
                recurrent,
            },
            JoinerWeights::SumReluSoftmax {
                audio_proj,
                text_proj,
                hidden_bias,
                output,
                output_bias,
                logit_scale,
                blank_bias,
            },
        ) => {
            let e = left_recurrent.len();
            if e == 0 {
                return Err(Error::schema(
                    "encoder.left_recurrent",
                    "encoder dim must be at least 1",
                ));
            }
            check_matrix("encoder.left_recurrent", left_recurrent, e, e)?;
            check_matrix("encoder.left_input", left_input, e, w.feature_dim)?;
            check_matrix("encoder.right_recurrent", right_recurrent, e, e)?;
            check_matrix("encoder.right_input", right_input, e, w.feature_dim)?;
            let p = recurrent.len();
            if p == 0 {
                return Err(Error::schema(
                    "predictor.recurrent",
                    "predictor dim must be at least 1",
                ));
            }
            check_matrix("predictor.recurrent", recurrent, p, p)?;
            check_matrix("predictor.embedding", embedding, v, p)?;
            let j = hidden_bias.len();
            if j == 0 {
                return Err(Error::schema(
                    "joiner.hidden_bias",
                    "joiner dim must be at least 1",
                ));
            }
            check_matrix("joiner.audio_proj", audio_proj, j, e)?;
            check_matrix("joiner.text_proj", text_proj, j, p)?;
            check_matrix("joiner.output", output, v, j)?;
            if output_bias.len() != v {
                return Err(Error::schema(
                    "joiner.output_bias",
                    format!("expected {v} entries, found {}", output_bias.len()),
                ));
            }
            if !logit_scale.is_finite() || !blank_bias.is_finite() {
                return Err(Error::schema(
                    "joiner",
                    "non-finite logit_scale or blank_bias",
                ));
            }
            Ok(())
        }
        _ => Err(Error::schema(
            "encoder",
            "component kinds must all be table-driven (frame_index, label_identity, table) \
             or all linear_recurrent (linear_recurrent, linear_recurrent, sum_relu_softmax)",
        )),
    }
}
