//! Joiner calls and output agreement of the pruned search against the
//! unpruned reference over a grid of beams, on the standard workload.

use rnnt_stream::bench::Workload;
use rnnt_stream::chunk::encode_offline;
use rnnt_stream::{build_toy_model, decode_pruned, decode_reference, BeamConfig};

fn main() -> rnnt_stream::Result<()> {
    let workload = Workload::standard(60);
    let model = build_toy_model(&workload.model)?;
    let chunk = workload.chunk_config()?;
    let w = workload.beam.beam_width;

    let mut inputs = Vec::new();
    let mut reference_calls = 0;
    for u in &workload.utterances {
        let emb = encode_offline(&model, &workload.frames_for(&model, u), &chunk)?;
        let r = decode_reference(&emb, &model, &BeamConfig::unpruned(w))?;
        reference_calls += r.stats.joiner_calls;
        inputs.push((emb, r.best.labels));
    }

    println!("expand  state   joiner calls   vs ref   same output");
    for (e, s) in [
        (f64::INFINITY, f64::INFINITY),
        (4.6, 9.2),
        (2.3, 4.6),
        (1.5, 2.3),
    ] {
        let cfg = BeamConfig::pruned(w, e, s);
        let (mut calls, mut same) = (0, 0);
        for (emb, want) in &inputs {
            let r = decode_pruned(emb, &model, &cfg)?;
            calls += r.stats.joiner_calls;
            same += (&r.best.labels == want) as usize;
        }
        println!(
            "{e:>6} {s:>6} {calls:>14} {:>7.1}% {same:>6}/{}",
            100.0 * calls as f64 / reference_calls as f64,
            inputs.len()
        );
    }
    Ok(())
}
