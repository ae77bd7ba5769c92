//! Throughput and rtf@N of the standard workload at increasing
//! concurrency.

use rnnt_stream::bench::{run_bench_with_model, Workload};
use rnnt_stream::build_toy_model;

fn main() -> rnnt_stream::Result<()> {
    let mut workload = Workload::standard(64);
    workload.beam.expand_beam = 2.3;
    workload.beam.state_beam = 4.6;
    let model = build_toy_model(&workload.model)?;
    println!(
        "{:.0} s of audio, {} cores",
        workload.audio_seconds(),
        std::thread::available_parallelism().map_or(1, |n| n.get())
    );
    println!("   N   throughput   rtf@N   N/throughput   joiner calls");
    for n in [1, 2, 4, 8] {
        workload.concurrency = n;
        let r = run_bench_with_model(&model, &workload)?;
        println!(
            "{n:>4} {:>12.1} {:>7.4} {:>14.4} {:>14}",
            r.throughput,
            r.rtf_at_n,
            n as f64 / r.throughput,
            r.joiner_calls
        );
    }
    Ok(())
}
