//! Exact sequence posteriors of a tiny table model by path enumeration and
//! by the lattice forward recursion, next to the beam search result.

use rnnt_stream::oracle::{
    best_of, exhaustive_sequence_posteriors, lattice_sequence_posteriors, OracleLimit,
};
use rnnt_stream::{
    build_toy_model, decode_reference, AudioEmbedding, BeamConfig, ToyModelSpec, TransducerModel,
};

fn main() -> rnnt_stream::Result<()> {
    let model = build_toy_model(&ToyModelSpec::table(3, 2, 11))?;
    let frames: Vec<AudioEmbedding> = (0..3)
        .map(|t| AudioEmbedding {
            frame_index: t,
            vector: Vec::new(),
        })
        .collect();
    let limit = OracleLimit::with_symbols(2);
    let paths = exhaustive_sequence_posteriors(&frames, &model, &limit)?;
    let lattice = lattice_sequence_posteriors(&frames, &model, &limit)?;

    println!("sequence   paths        lattice");
    for (y, p) in &paths.sequences {
        println!(
            "{:<10} {:.9}  {:.9}",
            format!("{:?}", model.vocab().detokenize(y)),
            p.0.exp(),
            lattice[y].0.exp()
        );
    }
    println!("mass beyond the cap: {:.3e}", paths.residual.0.exp());

    let exact = best_of(&paths.sequences);
    let beam = decode_reference(&frames, &model, &BeamConfig::unpruned(8))?;
    println!(
        "oracle best {:?}, beam search best {:?}",
        model.vocab().detokenize(&exact.labels),
        model.vocab().detokenize(&beam.best.labels)
    );
    Ok(())
}
