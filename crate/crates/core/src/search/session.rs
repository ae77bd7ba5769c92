use std::collections::{BTreeMap, HashSet};

use super::{DecodeResult, HypothesisSet, SearchStats, TraceEvent};
use crate::error::{Error, Result};
use crate::model::{AudioEmbedding, Scorer, TransducerModel};
use crate::types::{BeamConfig, Hypothesis, LogProb, TokenId};

/// Incremental pruned beam search over one stream.
///
/// Frames are consumed as they arrive through [`push`](Self::push); the
/// result after [`finalize`](Self::finalize) does not depend on how the
/// embeddings were batched.
///
/// Per frame `t`:
/// 1. the hypotheses that reached `t` become the expansion set `A`, the
///    next-frame set `B` starts empty;
/// 2. every `y` in `A` absorbs the mass of its proper prefixes `ŷ` in `A`,
///    `Pr(ŷ) · Π Pr(k_i | ŷ + k_1..k_{i-1}, t)` along the suffix;
/// 3. while `B` holds fewer than `W` entries more probable than the best of
///    `A`, the best `y*` is popped, unless the state beam fires
///    (`best(B) >= state_beam + best(A)`);
/// 4. `y*`'s blank extension is merged into `B`; its non-blank extensions
///    within `expand_beam` of the best non-blank token are merged into `A`;
/// 5. `B` is cut to its `W` most probable entries.
///
/// An extension `y* + k` that was already in `A` when the frame started is
/// not added again: step 2 has already counted the path through `y*`. As a
/// consequence no sequence is popped twice within a frame. At most
/// `max_symbols_per_frame * W` hypotheses are popped per frame. Zero-probability
/// extensions are dropped rather than carried with a score of negative
/// infinity.
pub struct DecodeSession<'m, M: TransducerModel + ?Sized> {
    model: &'m M,
    cfg: BeamConfig,
    scorer: Scorer,
    beam: HypothesisSet,
    next_frame: usize,
    stats: SearchStats,
    trace: Option<Vec<TraceEvent>>,
}

impl<'m, M: TransducerModel + ?Sized> DecodeSession<'m, M> {
    pub fn new(model: &'m M, cfg: BeamConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(DecodeSession {
            model,
            cfg,
            scorer: Scorer::new(),
            beam: HypothesisSet::root(),
            next_frame: 0,
            stats: SearchStats::default(),
            trace: None,
        })
    }

    /// Records every search step; see [`take_trace`](Self::take_trace).
    pub fn with_trace(mut self) -> Self {
        self.trace = Some(Vec::new());
        self
    }

    pub fn config(&self) -> &BeamConfig {
        &self.cfg
    }

    /// Index of the next frame the session expects.
    pub fn frames_seen(&self) -> usize {
        self.next_frame
    }

    pub fn joiner_calls(&self) -> u64 {
        self.scorer.joiner_calls()
    }

    pub fn take_trace(&mut self) -> Vec<TraceEvent> {
        self.trace.as_mut().map(std::mem::take).unwrap_or_default()
    }

    /// Consumes embeddings, which must continue the frame sequence.
    pub fn push(&mut self, embeddings: &[AudioEmbedding]) -> Result<()> {
        for emb in embeddings {
            if emb.frame_index != self.next_frame {
                return Err(Error::Protocol(format!(
                    "expected frame {}, got frame {}",
                    self.next_frame, emb.frame_index
                )));
            }
            self.step(emb)?;
            self.next_frame += 1;
        }
        Ok(())
    }

    /// Current best hypothesis and n-best list without ending the stream.
    pub fn partial(&self) -> DecodeResult {
        self.result()
    }

    pub fn finalize(self) -> DecodeResult {
        self.result()
    }

    fn result(&self) -> DecodeResult {
        let mut stats = self.stats;
        stats.joiner_calls = self.scorer.joiner_calls();
        DecodeResult::from_beam(&self.beam, stats)
    }

    fn record(&mut self, event: impl FnOnce() -> TraceEvent) {
        if let Some(trace) = &mut self.trace {
            trace.push(event());
        }
    }

    fn step(&mut self, audio: &AudioEmbedding) -> Result<()> {
        let model = self.model;
        let blank = model.vocab().blank();
        let t = audio.frame_index;
        let width = self.cfg.beam_width;

        let mut a = std::mem::take(&mut self.beam);
        let mut b = HypothesisSet::new();

        prefix_merge(&mut a, &mut self.scorer, model, audio)?;
        let merged: HashSet<Vec<TokenId>> = a.iter().map(|(k, _)| k.to_vec()).collect();
        let budget = self.cfg.pops_per_frame();
        let mut pops = 0;
        self.record(|| TraceEvent::FrameStart {
            t,
            a: a.to_hypotheses(),
        });

        while let Some((best, a_best)) = a.best() {
            if b.count_above(a_best) >= width {
                break;
            }
            let b_best = b.max_score();
            if b_best.0 >= self.cfg.state_beam + a_best.0 {
                self.stats.state_beam_breaks += 1;
                self.record(|| TraceEvent::StateBeamBreak { a_best, b_best });
                break;
            }
            if pops == budget {
                break;
            }
            pops += 1;
            let y = best.to_vec();
            let entry = a.remove(&y).expect("best entry is present");
            self.stats.loop_iterations += 1;

            let out = self.scorer.join(model, audio, &y)?;
            let blank_score = entry.score + out.get(blank);
            if !blank_score.is_zero() {
                b.insert(y.clone(), blank_score);
            }

            let mut admitted = Vec::new();
            let mut pruned = Vec::new();
            if entry.emitted < self.cfg.max_symbols_per_frame {
                let best_label = model
                    .vocab()
                    .labels()
                    .map(|k| out.get(k).0)
                    .fold(f64::NEG_INFINITY, f64::max);
                let threshold = best_label - self.cfg.expand_beam;
                for k in model.vocab().labels() {
                    let p = out.get(k);
                    if p.is_zero() {
                        continue;
                    }
                    if p.0 < threshold {
                        self.stats.expansions_pruned += 1;
                        pruned.push(k);
                        continue;
                    }
                    let mut ext = y.clone();
                    ext.push(k);
                    if merged.contains(&ext) {
                        continue;
                    }
                    let score = entry.score + p;
                    if self.trace.is_some() {
                        admitted.push(Hypothesis {
                            labels: ext.clone(),
                            score,
                        });
                    }
                    a.insert_counted(ext, score, entry.emitted + 1);
                }
            }
            self.record(|| TraceEvent::Pop {
                labels: y,
                score: entry.score,
                blank_score,
                expansions: admitted,
                pruned,
            });
        }

        b.truncate(width);
        if b.is_empty() {
            return Err(Error::Config(format!(
                "no hypothesis survived frame {t}: the model gives every path zero probability"
            )));
        }
        self.record(|| TraceEvent::FrameEnd {
            t,
            b: b.ranked_raw(),
        });
        self.beam = b;
        self.stats.frames += 1;
        Ok(())
    }
}

/// Adds to every `y` in `a` the probability of reaching it at this frame
/// from each of its proper prefixes in `a`, using the scores the prefixes
/// had before merging.
pub(super) fn prefix_merge<M: TransducerModel + ?Sized>(
    a: &mut HypothesisSet,
    scorer: &mut Scorer,
    model: &M,
    audio: &AudioEmbedding,
) -> Result<()> {
    let before: BTreeMap<Vec<TokenId>, LogProb> = a.iter().map(|(k, s)| (k.to_vec(), s)).collect();
    for (y, &own) in &before {
        let mut total = own;
        for cut in 0..y.len() {
            let Some(&prefix_score) = before.get(&y[..cut]) else {
                continue;
            };
            let mut path = prefix_score;
            for i in cut..y.len() {
                path = path + scorer.join(model, audio, &y[..i])?.get(y[i]);
            }
            total = total.log_add(path);
        }
        a.set_score(y, total);
    }
    Ok(())
}

/// One-shot pruned decode of a complete embedding sequence.
pub fn decode_pruned<M: TransducerModel + ?Sized>(
    embeddings: &[AudioEmbedding],
    model: &M,
    cfg: &BeamConfig,
) -> Result<DecodeResult> {
    let mut session = DecodeSession::new(model, *cfg)?;
    session.push(embeddings)?;
    Ok(session.finalize())
}
