//! Encoder and decoder on separate threads joined by an ordered channel,
//! printing partial transcripts as chunks complete.

use std::sync::mpsc;
use std::thread;

use rnnt_stream::{
    build_toy_model, synth_frames, AudioEmbedding, BeamConfig, ChunkConfig, DecodeSession,
    StreamEncoder, ToyModelSpec, TransducerModel,
};

fn main() -> rnnt_stream::Result<()> {
    let model = build_toy_model(&ToyModelSpec::standard())?;
    let frames = synth_frames(500, model.feature_dim(), 10, 3);
    let chunk = ChunkConfig::from_ms(800, 200, 10)?;
    let (tx, rx) = mpsc::channel::<Vec<AudioEmbedding>>();

    let result = thread::scope(|s| -> rnnt_stream::Result<_> {
        let model = &model;
        let decoder = s.spawn(move || -> rnnt_stream::Result<_> {
            let mut session = DecodeSession::new(model, BeamConfig::pruned(4, 2.3, 4.6))?;
            for batch in rx {
                session.push(&batch)?;
                let partial = session.partial();
                println!(
                    "after frame {:>3}: {:?}",
                    session.frames_seen(),
                    model.vocab().detokenize(&partial.best.labels)
                );
            }
            Ok(session.finalize())
        });

        let mut encoder = StreamEncoder::new(model, chunk)?;
        for frame in frames {
            let ready = encoder.push_frame(frame)?;
            if !ready.is_empty() {
                tx.send(ready).expect("decoder alive");
            }
        }
        tx.send(encoder.finish()?.embeddings)
            .expect("decoder alive");
        drop(tx);
        decoder.join().expect("decoder thread")
    })?;

    println!("final: {:?}", model.vocab().detokenize(&result.best.labels));
    Ok(())
}
