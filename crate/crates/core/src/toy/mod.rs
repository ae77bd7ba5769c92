//! Deterministic synthetic transducers.
//!
//! Two families exist. `TableDriven` models read joiner distributions from
//! an explicit or hashed `(frame, prefix)` table, which makes exhaustive
//! enumeration and hand traces tractable. `LinearRecurrent` models have
//! small fixed-weight recurrent encoder and predictor networks and a
//! sum/ReLU/softmax joiner, for exercising chunk geometry and caching.
//!
//! Random weights are drawn uniformly from `[-0.5, 0.5]` with a ChaCha8
//! generator seeded from the spec, in a fixed order, so every model is
//! regenerable from its spec alone.

mod weights;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use weights::{
    hashed_row, EncoderWeights, HashedTable, JoinerWeights, Matrix, PredictorWeights, TableRow,
    ToyTransducer, WeightFile, ROW_TOLERANCE,
};

use crate::types::{LogProb, Vocabulary};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelFamily {
    TableDriven,
    LinearRecurrent,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ToyModelSpec {
    pub family: ModelFamily,
    pub feature_dim: usize,
    pub encoder_dim: usize,
    pub predictor_dim: usize,
    /// Including blank.
    pub vocab_size: usize,
    pub seed: u64,
    #[serde(default = "one")]
    pub subsample_factor: usize,
    /// Multiplies joiner logits; larger values give peakier distributions.
    #[serde(default = "one_f")]
    pub logit_scale: f64,
    #[serde(default)]
    pub blank_bias: f64,
    /// Table-driven only: prefixes this long emit blank with probability one.
    #[serde(default = "unbounded")]
    pub max_labels: usize,
    #[serde(default)]
    pub zero_weights: bool,
}

fn one() -> usize {
    1
}
fn one_f() -> f64 {
    1.0
}
fn unbounded() -> usize {
    usize::MAX
}

impl ToyModelSpec {
    pub fn linear(feature_dim: usize, hidden: usize, vocab_size: usize, seed: u64) -> Self {
        ToyModelSpec {
            family: ModelFamily::LinearRecurrent,
            feature_dim,
            encoder_dim: hidden,
            predictor_dim: hidden,
            vocab_size,
            seed,
            subsample_factor: 1,
            logit_scale: 1.0,
            blank_bias: 0.0,
            max_labels: usize::MAX,
            zero_weights: false,
        }
    }

    /// Hashed table model over `vocab_size` units that never emits more
    /// than `max_labels` labels in total.
    pub fn table(vocab_size: usize, max_labels: usize, seed: u64) -> Self {
        ToyModelSpec {
            family: ModelFamily::TableDriven,
            feature_dim: 1,
            encoder_dim: 1,
            predictor_dim: 1,
            vocab_size,
            seed,
            subsample_factor: 1,
            logit_scale: 4.0,
            blank_bias: 0.0,
            max_labels,
            zero_weights: false,
        }
    }

    /// The model behind the standard benchmark workload: peaked joiner
    /// distributions with a blank preference, roughly what a trained
    /// transducer looks like to the search.
    pub fn standard() -> Self {
        ToyModelSpec {
            logit_scale: 8.0,
            blank_bias: 2.0,
            ..ToyModelSpec::linear(8, 12, 8, 0)
        }
    }

    pub fn with_subsampling(mut self, factor: usize) -> Self {
        self.subsample_factor = factor;
        self
    }

    pub fn with_zero_weights(mut self) -> Self {
        self.zero_weights = true;
        self
    }
}

/// Builds the model described by `spec`. Deterministic in the spec.
pub fn build_toy_model(spec: &ToyModelSpec) -> crate::Result<ToyTransducer> {
    if spec.vocab_size < 2 {
        return Err(crate::Error::config("vocab_size must be at least 2"));
    }
    let vocab = Vocabulary::toy(spec.vocab_size);
    let weights = match spec.family {
        ModelFamily::TableDriven => WeightFile {
            feature_dim: spec.feature_dim.max(1),
            encoder: EncoderWeights::FrameIndex,
            predictor: PredictorWeights::LabelIdentity,
            joiner: JoinerWeights::Table {
                rows: Vec::new(),
                default_row: None,
                hashed: Some(HashedTable {
                    seed: spec.seed,
                    logit_scale: spec.logit_scale,
                    blank_bias: spec.blank_bias,
                    max_labels: spec.max_labels,
                }),
            },
            vocab: vocab.entries().to_vec(),
            subsample_factor: spec.subsample_factor,
        },
        ModelFamily::LinearRecurrent => {
            let (d, e, p, v) = (
                spec.feature_dim,
                spec.encoder_dim,
                spec.predictor_dim,
                spec.vocab_size,
            );
            if d == 0 || e == 0 || p == 0 {
                return Err(crate::Error::config("model dimensions must be at least 1"));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            let zero = spec.zero_weights;
            let mut mat = |rows: usize, cols: usize| -> Matrix {
                (0..rows)
                    .map(|_| {
                        (0..cols)
                            .map(|_| if zero { 0.0 } else { rng.gen_range(-0.5..=0.5) })
                            .collect()
                    })
                    .collect()
            };
            let j = e;
            let left_input = mat(e, d);
            let left_recurrent = mat(e, e);
            let right_input = mat(e, d);
            let right_recurrent = mat(e, e);
            let embedding = mat(v, p);
            let recurrent = mat(p, p);
            let audio_proj = mat(j, e);
            let text_proj = mat(j, p);
            let hidden_bias = mat(1, j).remove(0);
            let output = mat(v, j);
            let output_bias = mat(1, v).remove(0);
            WeightFile {
                feature_dim: d,
                encoder: EncoderWeights::LinearRecurrent {
                    left_input,
                    left_recurrent,
                    right_input,
                    right_recurrent,
                },
                predictor: PredictorWeights::LinearRecurrent {
                    embedding,
                    recurrent,
                },
                joiner: JoinerWeights::SumReluSoftmax {
                    audio_proj,
                    text_proj,
                    hidden_bias,
                    output,
                    output_bias,
                    logit_scale: spec.logit_scale,
                    blank_bias: if zero { 0.0 } else { spec.blank_bias },
                },
                vocab: vocab.entries().to_vec(),
                subsample_factor: spec.subsample_factor,
            }
        }
    };
    ToyTransducer::from_weights(weights)
}

/// The hand-authored two-frame fixture over `{blank, a, b}`.
///
/// Any `(t, prefix)` not listed emits blank with probability one.
pub fn golden_2x3() -> ToyTransducer {
    let row = |t: usize, prefix: Vec<u32>, p: [f64; 3]| TableRow {
        t,
        prefix,
        log_probs: p.iter().map(|&x| LogProb::from_prob(x)).collect(),
    };
    let rows = vec![
        row(0, vec![], [0.6, 0.3, 0.1]),
        row(0, vec![1], [0.7, 0.1, 0.2]),
        row(0, vec![2], [0.8, 0.1, 0.1]),
        row(1, vec![], [0.3, 0.2, 0.5]),
        row(1, vec![1], [0.6, 0.1, 0.3]),
        row(1, vec![2], [0.9, 0.05, 0.05]),
    ];
    let vocab = Vocabulary::toy(3);
    ToyTransducer::from_weights(WeightFile {
        feature_dim: 1,
        encoder: EncoderWeights::FrameIndex,
        predictor: PredictorWeights::LabelIdentity,
        joiner: JoinerWeights::Table {
            rows,
            default_row: Some(vec![LogProb::ONE, LogProb::ZERO, LogProb::ZERO]),
            hashed: None,
        },
        vocab: vocab.entries().to_vec(),
        subsample_factor: 1,
    })
    .expect("golden fixture is valid")
}
