//! Exact sequence posteriors for tiny instances.
//!
//! Two independent routes compute `Pr(y | x)` for every label sequence up
//! to a total-length cap: explicit enumeration of every alignment path, and
//! the forward recursion over the `(t, u)` lattice of each sequence.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{AudioEmbedding, PredictorCache, TransducerModel};
use crate::types::{logsumexp, rank_by_normalized, Hypothesis, LogProb, TokenId};

/// Hard ceiling on the number of alignment paths the oracle will walk.
pub const MAX_PATHS: u128 = 10_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleLimit {
    pub max_t: usize,
    pub max_v: usize,
    /// Cap on non-blank emissions over the whole utterance.
    pub max_total_symbols: usize,
    pub max_sequences: usize,
}

impl Default for OracleLimit {
    fn default() -> Self {
        OracleLimit {
            max_t: 8,
            max_v: 8,
            max_total_symbols: 4,
            max_sequences: 100_000,
        }
    }
}

impl OracleLimit {
    pub fn with_symbols(max_total_symbols: usize) -> Self {
        OracleLimit {
            max_total_symbols,
            ..Self::default()
        }
    }

    /// Number of alignment paths for `t` frames and `v` units.
    pub fn path_count(&self, t: usize, v: usize) -> u128 {
        if t == 0 {
            return 1;
        }
        let labels = (v - 1) as u128;
        (0..=self.max_total_symbols as u128)
            .map(|u| binomial(u + t as u128 - 1, u) * labels.pow(u as u32))
            .sum()
    }

    pub fn sequence_count(&self, v: usize) -> u128 {
        let labels = (v - 1) as u128;
        (0..=self.max_total_symbols as u32)
            .map(|u| labels.pow(u))
            .sum()
    }

    pub fn check(&self, t: usize, v: usize) -> Result<()> {
        if t > self.max_t {
            return Err(Error::LimitExceeded(format!(
                "T = {t} > max_t = {}",
                self.max_t
            )));
        }
        if v > self.max_v {
            return Err(Error::LimitExceeded(format!(
                "V = {v} > max_v = {}",
                self.max_v
            )));
        }
        let seqs = self.sequence_count(v);
        if seqs > self.max_sequences as u128 {
            return Err(Error::LimitExceeded(format!(
                "{seqs} label sequences > max_sequences = {}",
                self.max_sequences
            )));
        }
        let paths = self.path_count(t, v);
        if paths > MAX_PATHS {
            return Err(Error::LimitExceeded(format!(
                "{paths} alignment paths > {MAX_PATHS}"
            )));
        }
        Ok(())
    }
}

fn binomial(n: u128, k: u128) -> u128 {
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

/// Exact posteriors of all sequences up to the length cap.
#[derive(Clone, Debug, PartialEq)]
pub struct Posteriors {
    pub sequences: BTreeMap<Vec<TokenId>, LogProb>,
    /// Mass of alignments that try to emit beyond the cap.
    pub residual: LogProb,
}

impl Posteriors {
    /// Log of the total mass, sequences plus residual; zero when conserved.
    pub fn total(&self) -> f64 {
        self.sequences
            .values()
            .fold(self.residual.0, |acc, p| logsumexp(acc, p.0))
    }

    /// `{"1,2": log_prob}` with sorted keys; the empty sequence is `""`.
    pub fn to_fixture_json(&self) -> String {
        let map: BTreeMap<String, LogProb> = self
            .sequences
            .iter()
            .map(|(k, v)| (label_key(k), *v))
            .collect();
        serde_json::to_string_pretty(&map).expect("posterior map serializes")
    }

    pub fn from_fixture_json(text: &str) -> Result<BTreeMap<Vec<TokenId>, LogProb>> {
        let map: BTreeMap<String, LogProb> =
            serde_json::from_str(text).map_err(|e| Error::Json {
                path: "<fixture>".into(),
                source: e,
            })?;
        map.into_iter()
            .map(|(k, v)| Ok((parse_label_key(&k)?, v)))
            .collect()
    }
}

pub fn label_key(labels: &[TokenId]) -> String {
    labels
        .iter()
        .map(|k| k.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

pub fn parse_label_key(key: &str) -> Result<Vec<TokenId>> {
    if key.is_empty() {
        return Ok(Vec::new());
    }
    key.split(',')
        .map(|s| {
            s.parse()
                .map_err(|_| Error::schema("fixture key", format!("bad label id {s:?} in {key:?}")))
        })
        .collect()
}

/// Every label sequence over the non-blank units with at most `cap` labels.
fn all_sequences(labels: &[TokenId], cap: usize) -> Vec<Vec<TokenId>> {
    let mut out = vec![Vec::new()];
    let mut frontier = vec![Vec::new()];
    for _ in 0..cap {
        let mut next = Vec::new();
        for seq in &frontier {
            for &k in labels {
                let mut s: Vec<TokenId> = seq.clone();
                s.push(k);
                next.push(s);
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

/// Enumerates every alignment path and sums path probabilities per label
/// sequence.
pub fn exhaustive_sequence_posteriors<M: TransducerModel + ?Sized>(
    embeddings: &[AudioEmbedding],
    model: &M,
    limit: &OracleLimit,
) -> Result<Posteriors> {
    let v = model.vocab().len();
    limit.check(embeddings.len(), v)?;
    let labels: Vec<TokenId> = model.vocab().labels().collect();
    let mut sequences: BTreeMap<Vec<TokenId>, LogProb> =
        all_sequences(&labels, limit.max_total_symbols)
            .into_iter()
            .map(|s| (s, LogProb::ZERO))
            .collect();
    let mut walker = Walker {
        model,
        embeddings,
        labels: &labels,
        cap: limit.max_total_symbols,
        cache: PredictorCache::new(),
        sequences: &mut sequences,
        residual: LogProb::ZERO,
    };
    let mut prefix = Vec::new();
    walker.walk(0, &mut prefix, LogProb::ONE)?;
    let residual = walker.residual;
    Ok(Posteriors {
        sequences,
        residual,
    })
}

struct Walker<'a, M: TransducerModel + ?Sized> {
    model: &'a M,
    embeddings: &'a [AudioEmbedding],
    labels: &'a [TokenId],
    cap: usize,
    cache: PredictorCache,
    sequences: &'a mut BTreeMap<Vec<TokenId>, LogProb>,
    residual: LogProb,
}

impl<M: TransducerModel + ?Sized> Walker<'_, M> {
    fn walk(&mut self, t: usize, prefix: &mut Vec<TokenId>, path: LogProb) -> Result<()> {
        if t == self.embeddings.len() {
            let slot = self
                .sequences
                .get_mut(prefix.as_slice())
                .expect("sequence pre-listed");
            *slot = slot.log_add(path);
            return Ok(());
        }
        let text = self.cache.predict(self.model, prefix);
        let out = self.model.join(&self.embeddings[t], &text)?;
        let blank = self.model.vocab().blank();
        self.walk(t + 1, prefix, path + out.get(blank))?;
        for &k in self.labels {
            let p = path + out.get(k);
            if prefix.len() == self.cap {
                self.residual = self.residual.log_add(p);
                continue;
            }
            prefix.push(k);
            self.walk(t, prefix, p)?;
            prefix.pop();
        }
        Ok(())
    }
}

/// Forward recursion over the alignment lattice of one label sequence:
/// `alpha(t, u) = alpha(t-1, u) · Pr(blank | t-1, y[..u]) + alpha(t, u-1) · Pr(y[u-1] | t, y[..u-1])`.
pub fn lattice_forward<M: TransducerModel + ?Sized>(
    embeddings: &[AudioEmbedding],
    model: &M,
    y: &[TokenId],
) -> Result<LogProb> {
    let t_len = embeddings.len();
    if t_len == 0 {
        return Ok(if y.is_empty() {
            LogProb::ONE
        } else {
            LogProb::ZERO
        });
    }
    let u_len = y.len();
    let blank = model.vocab().blank();
    let mut cache = PredictorCache::new();
    // probs[t][u] = (blank, next label) probabilities at lattice node (t, u)
    let mut blank_lp = vec![vec![LogProb::ZERO; u_len + 1]; t_len];
    let mut emit_lp = vec![vec![LogProb::ZERO; u_len + 1]; t_len];
    for (t, audio) in embeddings.iter().enumerate() {
        for u in 0..=u_len {
            let text = cache.predict(model, &y[..u]);
            let out = model.join(audio, &text)?;
            blank_lp[t][u] = out.get(blank);
            if u < u_len {
                emit_lp[t][u] = out.get(y[u]);
            }
        }
    }
    let mut alpha = vec![vec![LogProb::ZERO; u_len + 1]; t_len];
    for t in 0..t_len {
        for u in 0..=u_len {
            let mut a = if t == 0 && u == 0 {
                LogProb::ONE
            } else {
                LogProb::ZERO
            };
            if t > 0 {
                a = a.log_add(alpha[t - 1][u] + blank_lp[t - 1][u]);
            }
            if u > 0 {
                a = a.log_add(alpha[t][u - 1] + emit_lp[t][u - 1]);
            }
            alpha[t][u] = a;
        }
    }
    Ok(alpha[t_len - 1][u_len] + blank_lp[t_len - 1][u_len])
}

/// Posteriors of all sequences within the cap via [`lattice_forward`].
pub fn lattice_sequence_posteriors<M: TransducerModel + ?Sized>(
    embeddings: &[AudioEmbedding],
    model: &M,
    limit: &OracleLimit,
) -> Result<BTreeMap<Vec<TokenId>, LogProb>> {
    limit.check(embeddings.len(), model.vocab().len())?;
    let labels: Vec<TokenId> = model.vocab().labels().collect();
    all_sequences(&labels, limit.max_total_symbols)
        .into_iter()
        .map(|y| {
            let p = lattice_forward(embeddings, model, &y)?;
            Ok((y, p))
        })
        .collect()
}

/// Sequence with the highest normalized posterior.
pub fn best_of(posteriors: &BTreeMap<Vec<TokenId>, LogProb>) -> Hypothesis {
    posteriors
        .iter()
        .filter(|(_, p)| !p.is_zero())
        .map(|(labels, &score)| Hypothesis {
            labels: labels.clone(),
            score,
        })
        .min_by(rank_by_normalized)
        .unwrap_or_else(Hypothesis::empty)
}

/// Exact decode: the argmax of normalized posterior over enumerated sequences.
pub fn oracle_best<M: TransducerModel + ?Sized>(
    embeddings: &[AudioEmbedding],
    model: &M,
    limit: &OracleLimit,
) -> Result<Hypothesis> {
    Ok(best_of(
        &exhaustive_sequence_posteriors(embeddings, model, limit)?.sequences,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::toy::{
        EncoderWeights, JoinerWeights, PredictorWeights, TableRow, ToyTransducer, WeightFile,
    };
    use crate::types::Vocabulary;

    fn frames(t: usize) -> Vec<AudioEmbedding> {
        (0..t)
            .map(|i| AudioEmbedding {
                frame_index: i,
                vector: vec![],
            })
            .collect()
    }

    fn table(rows: Vec<TableRow>, v: usize) -> ToyTransducer {
        let mut default = vec![LogProb::ZERO; v];
        default[0] = LogProb::ONE;
        ToyTransducer::from_weights(WeightFile {
            feature_dim: 1,
            encoder: EncoderWeights::FrameIndex,
            predictor: PredictorWeights::LabelIdentity,
            joiner: JoinerWeights::Table {
                rows,
                default_row: Some(default),
                hashed: None,
            },
            vocab: Vocabulary::toy(v).entries().to_vec(),
            subsample_factor: 1,
        })
        .unwrap()
    }

    #[test]
    fn all_blank_gives_empty() {
        let m = table(vec![], 3);
        let post =
            exhaustive_sequence_posteriors(&frames(1), &m, &OracleLimit::with_symbols(2)).unwrap();
        assert_eq!(post.sequences[&vec![]], LogProb::ONE);
        assert!(post
            .sequences
            .iter()
            .filter(|(k, _)| !k.is_empty())
            .all(|(_, p)| p.is_zero()));
        assert_eq!(
            oracle_best(&frames(3), &m, &OracleLimit::with_symbols(2)).unwrap(),
            Hypothesis::empty()
        );
    }

    #[test]
    fn two_path_enumeration() {
        let m = table(
            vec![TableRow {
                t: 0,
                prefix: vec![],
                log_probs: vec![LogProb::from_prob(0.6), LogProb::from_prob(0.4)],
            }],
            2,
        );
        let post =
            exhaustive_sequence_posteriors(&frames(1), &m, &OracleLimit::with_symbols(1)).unwrap();
        assert!((post.sequences[&vec![]].0 - 0.6f64.ln()).abs() < 1e-15);
        assert!((post.sequences[&vec![1]].0 - 0.4f64.ln()).abs() < 1e-15);
        assert!(post.residual.is_zero());
    }

    #[test]
    fn limit_refuses_large_instances() {
        let m = table(vec![], 3);
        let limit = OracleLimit {
            max_t: 2,
            ..OracleLimit::default()
        };
        assert!(matches!(
            exhaustive_sequence_posteriors(&frames(3), &m, &limit),
            Err(Error::LimitExceeded(_))
        ));
        let huge = OracleLimit {
            max_t: 1000,
            max_v: 1000,
            max_total_symbols: 12,
            max_sequences: usize::MAX,
        };
        assert!(huge.check(200, 10).is_err());
    }

    #[test]
    fn path_count_by_brute_force() {
        // Count alignments directly: sequences of moves with T blanks, the
        // last move a blank, at most `cap` labels, labels drawn from V-1 ids.
        fn brute(t: usize, v: usize, cap: usize) -> u128 {
            fn go(t: usize, u: usize, v: usize, cap: usize) -> u128 {
                if t == 0 {
                    return 1;
                }
                let mut n = go(t - 1, u, v, cap);
                if u < cap {
                    n += (v as u128 - 1) * go(t, u + 1, v, cap);
                }
                n
            }
            go(t, 0, v, cap)
        }
        for t in 1..5 {
            for v in 2..5 {
                for cap in 0..4 {
                    let limit = OracleLimit::with_symbols(cap);
                    assert_eq!(
                        limit.path_count(t, v),
                        brute(t, v, cap),
                        "t={t} v={v} cap={cap}"
                    );
                }
            }
        }
    }

    #[test]
    fn label_keys_round_trip() {
        assert_eq!(label_key(&[]), "");
        assert_eq!(label_key(&[1, 12]), "1,12");
        assert_eq!(parse_label_key("1,12").unwrap(), vec![1, 12]);
        assert!(parse_label_key("1,x").is_err());
    }
}
