//! Every step of the search on the two-frame golden table, in linear
//! probabilities so it can be followed by hand.

use rnnt_stream::search::TraceEvent;
use rnnt_stream::{
    golden_2x3, AudioEmbedding, BeamConfig, DecodeSession, Hypothesis, TransducerModel,
};

fn show(hs: &[Hypothesis], vocab: &rnnt_stream::Vocabulary) -> String {
    hs.iter()
        .map(|h| format!("{:?}:{:.4}", vocab.detokenize(&h.labels), h.score.0.exp()))
        .collect::<Vec<_>>()
        .join(" ")
}

fn main() -> rnnt_stream::Result<()> {
    let model = golden_2x3();
    let vocab = model.vocab();
    let frames: Vec<AudioEmbedding> = (0..2)
        .map(|t| AudioEmbedding {
            frame_index: t,
            vector: Vec::new(),
        })
        .collect();
    for beam in [BeamConfig::unpruned(4), BeamConfig::pruned(2, 1.0, 0.5)] {
        println!(
            "W={} expand={} state={}",
            beam.beam_width, beam.expand_beam, beam.state_beam
        );
        let mut session = DecodeSession::new(&model, beam)?.with_trace();
        session.push(&frames)?;
        for event in session.take_trace() {
            match event {
                TraceEvent::FrameStart { t, a } => println!(" t={t} A = {}", show(&a, vocab)),
                TraceEvent::Pop {
                    labels,
                    score,
                    blank_score,
                    expansions,
                    pruned,
                } => println!(
                    "   pop {:?}:{:.4}  blank -> {:.4}  expand {}  pruned {:?}",
                    vocab.detokenize(&labels),
                    score.0.exp(),
                    blank_score.0.exp(),
                    show(&expansions, vocab),
                    vocab.detokenize(&pruned)
                ),
                TraceEvent::StateBeamBreak { a_best, b_best } => {
                    println!(
                        "   state beam: best B {:.4} vs best A {:.4}",
                        b_best.0.exp(),
                        a_best.0.exp()
                    )
                }
                TraceEvent::FrameEnd { t, b } => println!(" t={t} B = {}", show(&b, vocab)),
            }
        }
        let r = session.finalize();
        println!(
            " best {:?} p={:.4}, {} joiner calls\n",
            vocab.detokenize(&r.best.labels),
            r.best.score.0.exp(),
            r.stats.joiner_calls
        );
    }
    Ok(())
}
