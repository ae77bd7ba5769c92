use std::cmp::Ordering;

use super::{DecodeResult, HypothesisSet, SearchStats};
use crate::error::{Error, Result};
use crate::model::{AudioEmbedding, Scorer, TransducerModel};
use crate::types::{rank_by_score, BeamConfig, LogProb, TokenId};

struct Hyp {
    labels: Vec<TokenId>,
    score: LogProb,
    emitted: usize,
}

fn merge_into(set: &mut Vec<Hyp>, labels: Vec<TokenId>, score: LogProb, emitted: usize) {
    match set.iter_mut().find(|h| h.labels == labels) {
        Some(h) => {
            h.score = h.score.log_add(score);
            h.emitted = h.emitted.min(emitted);
        }
        None => set.push(Hyp {
            labels,
            score,
            emitted,
        }),
    }
}

fn order(a: &Hyp, b: &Hyp) -> Ordering {
    rank_by_score((&a.labels, a.score), (&b.labels, b.score))
}

/// The unpruned transducer beam search, written without any of the
/// pruning machinery of [`DecodeSession`](super::DecodeSession).
///
/// Only `beam_width` and `max_symbols_per_frame` of `cfg` are used.
pub fn decode_reference<M: TransducerModel + ?Sized>(
    embeddings: &[AudioEmbedding],
    model: &M,
    cfg: &BeamConfig,
) -> Result<DecodeResult> {
    BeamConfig::unpruned(cfg.beam_width)
        .with_max_symbols(cfg.max_symbols_per_frame)
        .validate()?;
    let w = cfg.beam_width;
    let blank = model.vocab().blank();
    let labels: Vec<TokenId> = model.vocab().labels().collect();
    let mut scorer = Scorer::new();
    let mut stats = SearchStats::default();

    let mut b = vec![Hyp {
        labels: Vec::new(),
        score: LogProb::ONE,
        emitted: 0,
    }];

    for (t, audio) in embeddings.iter().enumerate() {
        if audio.frame_index != t {
            return Err(Error::Protocol(format!(
                "expected frame {t}, got frame {}",
                audio.frame_index
            )));
        }
        let mut a: Vec<Hyp> = std::mem::take(&mut b);
        for h in &mut a {
            h.emitted = 0;
        }

        // Prefix merge against the scores as they were at frame start.
        let start: Vec<(Vec<TokenId>, LogProb)> =
            a.iter().map(|h| (h.labels.clone(), h.score)).collect();
        for h in &mut a {
            let mut total = h.score;
            for cut in 0..h.labels.len() {
                let Some((_, pre)) = start.iter().find(|(l, _)| l[..] == h.labels[..cut]) else {
                    continue;
                };
                let mut path = *pre;
                for i in cut..h.labels.len() {
                    let out = scorer.join(model, audio, &h.labels[..i])?;
                    path = path + out.get(h.labels[i]);
                }
                total = total.log_add(path);
            }
            h.score = total;
        }

        let merged: Vec<Vec<TokenId>> = start.iter().map(|(l, _)| l.clone()).collect();
        let mut pops = 0;
        while let Some(best_idx) = (0..a.len()).min_by(|&i, &j| order(&a[i], &a[j])) {
            let a_best = a[best_idx].score;
            if b.iter().filter(|h| h.score.0 > a_best.0).count() >= w {
                break;
            }
            if pops == cfg.pops_per_frame() {
                break;
            }
            pops += 1;
            let y = a.swap_remove(best_idx);
            stats.loop_iterations += 1;
            let out = scorer.join(model, audio, &y.labels)?;
            let to_b = y.score + out.get(blank);
            if !to_b.is_zero() {
                merge_into(&mut b, y.labels.clone(), to_b, 0);
            }
            if y.emitted < cfg.max_symbols_per_frame {
                for &k in &labels {
                    let p = out.get(k);
                    if p.is_zero() {
                        continue;
                    }
                    let mut ext = y.labels.clone();
                    ext.push(k);
                    if merged.contains(&ext) {
                        continue;
                    }
                    merge_into(&mut a, ext, y.score + p, y.emitted + 1);
                }
            }
        }

        b.sort_by(order);
        b.truncate(w);
        if b.is_empty() {
            return Err(Error::Config(format!(
                "no hypothesis survived frame {t}: the model gives every path zero probability"
            )));
        }
        stats.frames += 1;
    }

    stats.joiner_calls = scorer.joiner_calls();
    let mut beam = HypothesisSet::new();
    for h in b {
        beam.insert(h.labels, h.score);
    }
    Ok(DecodeResult::from_beam(&beam, stats))
}
