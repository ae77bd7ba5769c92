//! Encoder work and latency as the decoding threshold shrinks.

use rnnt_stream::{plan_chunks, recompute_ratio, ChunkConfig};

fn main() -> rnnt_stream::Result<()> {
    let t = 6000;
    println!("T = {t} frames (60 s), rc = 200 ms");
    println!("  DT ms   cs   windows   encoder frames   per frame   cs/(cs-rc)   max latency");
    for dt in [2000, 1500, 800, 400, 300] {
        let cfg = ChunkConfig::from_ms(dt, 200, 10)?;
        let plan = plan_chunks(t, &cfg)?;
        println!(
            "{dt:>7} {:>4} {:>9} {:>16} {:>11.3} {:>12.3} {:>10} ms",
            cfg.cs_frames,
            plan.windows.len(),
            plan.encoder_frames(),
            plan.encoder_frames() as f64 / t as f64,
            recompute_ratio(&cfg)?,
            plan.max_latency_ms(cfg.frame_shift_ms)
        );
    }

    let cfg = ChunkConfig::new(80, 20)?;
    println!("\nwindows for T = 100, cs = 80, rc = 20:");
    for w in plan_chunks(100, &cfg)?.windows {
        println!(
            "  encode [{}, {}), surface [{}, {})",
            w.chunk_start, w.chunk_end, w.emit_start, w.emit_end
        );
    }
    Ok(())
}
