//! The acceptance suite: one PASS/FAIL line per criterion.
//!
//! Run with `cargo test --test acceptance -- --nocapture` to see the lines.

mod common;

use std::fmt::Write as _;
use std::time::Instant;

use common::trace::{check_trace, golden_embeddings};
use common::{fixture, random_instance, read_json, stream_case, tiny_instance};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rnnt_stream::bench::{run_bench_with_model, Workload};
use rnnt_stream::chunk::{encode_offline, encoder_frames_closed_form};
use rnnt_stream::oracle::{
    exhaustive_sequence_posteriors, lattice_sequence_posteriors, oracle_best, OracleLimit,
};
use rnnt_stream::{
    build_toy_model, decode_pruned, decode_reference, golden_2x3, plan_chunks, recognize,
    BeamConfig, ChunkConfig, StreamEncoder,
};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn equivalence() -> Outcome {
    let n = 1000u64;
    let mut same = 0u64;
    let mut first_bad = None;
    for seed in 0..n {
        let inst = random_instance(seed, 20, 8);
        let w = 1 + (seed as usize % 6);
        let p = decode_pruned(&inst.embeddings, &inst.model, &BeamConfig::unpruned(w)).unwrap();
        let r = decode_reference(&inst.embeddings, &inst.model, &BeamConfig::unpruned(w)).unwrap();
        if p.bit_identical(&r) {
            same += 1;
        } else if first_bad.is_none() {
            first_bad = Some(inst.desc);
        }
    }
    outcome(
        same == n,
        format!(
            "{same}/{n} bit-identical{}",
            first_bad
                .map(|d| format!(", first miss {d}"))
                .unwrap_or_default()
        ),
    )
}

fn oracle() -> Outcome {
    let n = 200u64;
    let limit = OracleLimit::with_symbols(2);
    let mut agree = 0;
    let mut max_gap = 0.0f64;
    for seed in 0..n {
        let inst = tiny_instance(seed);
        let paths = exhaustive_sequence_posteriors(&inst.embeddings, &inst.model, &limit).unwrap();
        let lattice = lattice_sequence_posteriors(&inst.embeddings, &inst.model, &limit).unwrap();
        for (y, p) in &paths.sequences {
            let q = lattice[y];
            if !(p.is_zero() && q.is_zero()) {
                max_gap = max_gap.max((p.0 - q.0).abs());
            }
        }
        let want = oracle_best(&inst.embeddings, &inst.model, &limit).unwrap();
        let got =
            decode_reference(&inst.embeddings, &inst.model, &BeamConfig::unpruned(16)).unwrap();
        agree += (got.best.labels == want.labels) as u64;
    }
    let golden = golden_2x3();
    let emb = golden_embeddings(&golden);
    let paths = exhaustive_sequence_posteriors(&emb, &golden, &limit).unwrap();
    let lattice = lattice_sequence_posteriors(&emb, &golden, &limit).unwrap();
    for (y, p) in &paths.sequences {
        max_gap = max_gap.max((p.0 - lattice[y].0).abs());
    }
    let rate = agree as f64 / n as f64;
    outcome(
        rate >= 0.95 && max_gap <= 1e-9,
        format!("reference = oracle on {agree}/{n}, oracles differ by at most {max_gap:.1e}"),
    )
}

struct WorkloadRun {
    fewer_calls: usize,
    same_output: usize,
    monotone: usize,
    first_violation: Option<String>,
    n: usize,
}

const EXPAND: [f64; 4] = [1.5, 2.3, 4.6, f64::INFINITY];
const STATE: [f64; 4] = [2.3, 4.6, 9.2, f64::INFINITY];

fn standard_workload_run() -> WorkloadRun {
    let workload = Workload::standard(500);
    let model = build_toy_model(&workload.model).unwrap();
    let chunk = workload.chunk_config().unwrap();
    let w = workload.beam.beam_width;
    let mut run = WorkloadRun {
        fewer_calls: 0,
        same_output: 0,
        monotone: 0,
        first_violation: None,
        n: workload.utterances.len(),
    };
    for (k, u) in workload.utterances.iter().enumerate() {
        let emb = encode_offline(&model, &workload.frames_for(&model, u), &chunk).unwrap();
        let reference = decode_reference(&emb, &model, &BeamConfig::unpruned(w)).unwrap();
        let mut grid = [[0u64; 4]; 4];
        for (i, &e) in EXPAND.iter().enumerate() {
            for (j, &s) in STATE.iter().enumerate() {
                let r = decode_pruned(&emb, &model, &BeamConfig::pruned(w, e, s)).unwrap();
                grid[i][j] = r.stats.joiner_calls;
                if (e, s) == (2.3, 4.6) {
                    run.fewer_calls +=
                        (r.stats.joiner_calls < reference.stats.joiner_calls) as usize;
                    run.same_output += (r.best.labels == reference.best.labels) as usize;
                }
            }
        }
        let mut violation = None;
        for i in 0..4 {
            for j in 0..4 {
                if i + 1 < 4 && grid[i][j] > grid[i + 1][j] {
                    violation = Some(format!(
                        "utterance {k}: ({}, {}) costs {} > ({}, {}) costs {}",
                        EXPAND[i],
                        STATE[j],
                        grid[i][j],
                        EXPAND[i + 1],
                        STATE[j],
                        grid[i + 1][j]
                    ));
                }
                if j + 1 < 4 && grid[i][j] > grid[i][j + 1] {
                    violation = Some(format!(
                        "utterance {k}: ({}, {}) costs {} > ({}, {}) costs {}",
                        EXPAND[i],
                        STATE[j],
                        grid[i][j],
                        EXPAND[i],
                        STATE[j + 1],
                        grid[i][j + 1]
                    ));
                }
            }
        }
        match violation {
            None => run.monotone += 1,
            Some(v) => {
                run.first_violation.get_or_insert(v);
            }
        }
    }
    run
}

fn pruning_trend(run: &WorkloadRun) -> Outcome {
    let fewer = run.fewer_calls as f64 / run.n as f64;
    let same = run.same_output as f64 / run.n as f64;
    outcome(
        fewer >= 0.90 && same >= 0.95,
        format!(
            "fewer joiner calls on {}/{} ({:.1}%), same output on {}/{} ({:.1}%)",
            run.fewer_calls,
            run.n,
            100.0 * fewer,
            run.same_output,
            run.n,
            100.0 * same
        ),
    )
}

fn monotonicity(run: &WorkloadRun) -> Outcome {
    outcome(
        run.monotone == run.n,
        format!(
            "non-increasing over the 4x4 grid on {}/{} utterances{}",
            run.monotone,
            run.n,
            run.first_violation
                .as_ref()
                .map(|v| format!(", e.g. {v}"))
                .unwrap_or_default()
        ),
    )
}

fn chunk_geometry() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut bad = Vec::new();
    for _ in 0..1000 {
        let t = rng.gen_range(0..5000);
        let cs = rng.gen_range(1..400);
        let rc = rng.gen_range(0..cs);
        let cfg = ChunkConfig::new(cs, rc).unwrap();
        let plan = plan_chunks(t, &cfg).unwrap();
        let mut next = 0;
        let last = plan.windows.len().saturating_sub(1);
        for (i, w) in plan.windows.iter().enumerate() {
            let ok = w.emit_start == next
                && w.emit_end > w.emit_start
                && w.chunk_start == w.emit_start
                && (i == last || w.chunk_end - w.emit_end == rc)
                && (i == 0 || w.chunk_start - plan.windows[i - 1].chunk_start == cs - rc)
                && w.chunk_end <= t;
            if !ok {
                bad.push(format!("T={t} cs={cs} rc={rc} window {i}"));
            }
            next = w.emit_end;
        }
        if next != t || plan.encoder_frames() != encoder_frames_closed_form(t, &cfg).unwrap() {
            bad.push(format!("T={t} cs={cs} rc={rc} coverage"));
        }
    }

    let workload = Workload::standard(500);
    let model = build_toy_model(&workload.model).unwrap();
    let mut counts = Vec::new();
    for dt in [2000, 1500, 800, 400, 300] {
        let cfg = ChunkConfig::from_ms(dt, 200, workload.frame_shift_ms).unwrap();
        let mut streamed = 0;
        let mut closed = 0;
        for u in &workload.utterances {
            let mut enc = StreamEncoder::new(&model, cfg).unwrap();
            enc.push_frames(workload.frames_for(&model, u)).unwrap();
            streamed += enc.finish().unwrap().encoder_frames;
            closed += encoder_frames_closed_form(u.n_frames, &cfg).unwrap();
        }
        if streamed != closed {
            bad.push(format!(
                "DT={dt}: streamed {streamed} != closed form {closed}"
            ));
        }
        counts.push(streamed);
    }
    let increasing = counts.windows(2).all(|p| p[0] < p[1]);
    outcome(
        bad.is_empty() && increasing,
        format!(
            "1000 plans {}, encoder frames for DT 2000..300 = {counts:?}{}",
            if bad.is_empty() {
                "valid".to_string()
            } else {
                format!("with {} problems, first {}", bad.len(), bad[0])
            },
            if increasing {
                ""
            } else {
                " (not strictly increasing)"
            }
        ),
    )
}

fn streaming() -> Outcome {
    let n = 200u64;
    let mut same = 0u64;
    for seed in 0..n {
        let case = stream_case(seed);
        let streamed = recognize(
            &case.model,
            case.frames.iter().cloned(),
            case.chunk,
            case.beam,
        )
        .unwrap();
        let emb = encode_offline(&case.model, &case.frames, &case.chunk).unwrap();
        let one_shot = decode_pruned(&emb, &case.model, &case.beam).unwrap();
        same += streamed.result.bit_identical(&one_shot) as u64;
    }
    outcome(same == n, format!("{same}/{n} bit-identical"))
}

fn bench_consistency() -> Outcome {
    let mut workload = Workload::standard(240);
    let model = build_toy_model(&workload.model).unwrap();
    workload.concurrency = 1;
    let one = run_bench_with_model(&model, &workload).unwrap();
    workload.concurrency = 8;
    let eight = run_bench_with_model(&model, &workload).unwrap();
    let gap = eight.saturation_gap();
    let same = one.deterministic_counters() == eight.deterministic_counters();
    outcome(
        eight.saturated && gap <= 0.05 && same,
        format!(
            "N=8: throughput {:.1}, rtf_at_n {:.4}, gap {:.2}%, counters {} N=1",
            eight.throughput,
            eight.rtf_at_n,
            100.0 * gap,
            if same { "identical to" } else { "differ from" }
        ),
    )
}

fn golden_trace() -> Outcome {
    let doc = read_json(fixture("golden-2x3.trace.json"));
    let traces = doc["traces"].as_array().unwrap();
    let failed: Vec<String> = traces
        .iter()
        .filter(|t| std::panic::catch_unwind(|| check_trace(t)).is_err())
        .map(|t| t["name"].as_str().unwrap().to_string())
        .collect();
    outcome(
        failed.is_empty(),
        format!(
            "{}/{} hand traces match step for step",
            traces.len() - failed.len(),
            traces.len()
        ),
    )
}

#[test]
fn acceptance() {
    let mut report = String::new();
    let mut failed = Vec::new();
    let mut record = |id: usize, name: &str, started: Instant, o: Outcome| {
        let line = format!(
            "{} {id} {name}: {} [{:.1}s]",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail,
            started.elapsed().as_secs_f64()
        );
        println!("{line}");
        writeln!(report, "{line}").unwrap();
        if !o.pass {
            failed.push(format!("{id} {name}"));
        }
    };

    let t = Instant::now();
    record(1, "equivalence", t, equivalence());
    let t = Instant::now();
    record(2, "oracle", t, oracle());
    let t = Instant::now();
    let run = standard_workload_run();
    record(3, "pruning trend", t, pruning_trend(&run));
    record(4, "monotonicity", t, monotonicity(&run));
    let t = Instant::now();
    record(5, "chunk geometry", t, chunk_geometry());
    let t = Instant::now();
    record(6, "streaming equivalence", t, streaming());
    let t = Instant::now();
    record(7, "bench consistency", t, bench_consistency());
    let t = Instant::now();
    record(8, "golden trace", t, golden_trace());

    assert!(failed.is_empty(), "failed criteria: {failed:?}\n{report}");
}
