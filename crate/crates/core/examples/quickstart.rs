//! Decode one synthetic utterance through the streaming recognizer.

use rnnt_stream::{
    build_toy_model, recognize, synth_frames, BeamConfig, ChunkConfig, ToyModelSpec,
    TransducerModel,
};

fn main() -> rnnt_stream::Result<()> {
    let model = build_toy_model(&ToyModelSpec::standard())?;
    let frames = synth_frames(400, model.feature_dim(), 10, 42);
    let chunk = ChunkConfig::from_ms(800, 200, 10)?;
    let out = recognize(&model, frames, chunk, BeamConfig::pruned(4, 2.3, 4.6))?;

    let best = &out.result.best;
    println!("transcript: {:?}", model.vocab().detokenize(&best.labels));
    println!(
        "log prob:   {:.3} ({:.3} per label)",
        best.score.0,
        best.normalized_score()
    );
    println!(
        "joiner calls {}, encoder frames {}",
        out.result.stats.joiner_calls, out.encoder_frames
    );
    println!("max algorithmic latency {} ms", out.max_latency_ms);
    Ok(())
}
