//! Throughput and rtf@N measurement over concurrent decode streams.
//!
//! `N` worker threads pull utterances from a shared queue; each utterance
//! is decoded end to end by one worker, like a server handling `N`
//! streams. Every worker first decodes one discarded warm-up utterance,
//! then all workers start together and the wall clock runs until the queue
//! is drained.
//!
//! * throughput = audio seconds / wall seconds
//! * rtf_at_n = (sum of per-utterance wall seconds) / audio seconds
//!
//! With all `N` workers busy the whole time the per-utterance wall times add
//! up to `N` times the total wall time, so `rtf_at_n ≈ N / throughput`.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Barrier;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::chunk::{encoder_frames_closed_form, ChunkConfig};
use crate::error::{Error, Result};
use crate::features::synth_frames;
use crate::model::{AudioFrame, TransducerModel};
use crate::recognizer::recognize;
use crate::toy::{build_toy_model, ToyModelSpec};
use crate::types::{BeamConfig, TokenId};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct UtteranceSpec {
    pub n_frames: usize,
    pub seed: u64,
}

/// A fully reproducible benchmark definition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Workload {
    pub model: ToyModelSpec,
    pub utterances: Vec<UtteranceSpec>,
    pub dt_ms: u64,
    pub rc_ms: u64,
    #[serde(default = "default_shift")]
    pub frame_shift_ms: u64,
    pub beam: BeamConfig,
    pub concurrency: usize,
}

fn default_shift() -> u64 {
    10
}

/// Paper-style operating point used throughout: DT 800 ms, rc 200 ms.
pub const STANDARD_DT_MS: u64 = 800;
pub const STANDARD_RC_MS: u64 = 200;
pub const STANDARD_BEAM_WIDTH: usize = 4;

impl Workload {
    /// `count` utterances of 100 to 400 frames on [`ToyModelSpec::standard`].
    pub fn standard(count: usize) -> Self {
        Self::generate(ToyModelSpec::standard(), count, 0x5eed)
    }

    /// `count` utterances of 100 to 400 frames with lengths and feature
    /// seeds drawn from `seed`, at the standard operating point.
    pub fn generate(model: ToyModelSpec, count: usize, seed: u64) -> Self {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let utterances = (0..count)
            .map(|_| UtteranceSpec {
                n_frames: rng.gen_range(100..=400),
                seed: rng.gen::<u32>() as u64,
            })
            .collect();
        Workload {
            model,
            utterances,
            dt_ms: STANDARD_DT_MS,
            rc_ms: STANDARD_RC_MS,
            frame_shift_ms: 10,
            beam: BeamConfig::unpruned(STANDARD_BEAM_WIDTH),
            concurrency: 1,
        }
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let w: Workload = serde_json::from_str(&text).map_err(|e| Error::Json {
            path: path.into(),
            source: e,
        })?;
        w.validate()?;
        Ok(w)
    }

    pub fn save(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string_pretty(self).expect("workload serializes");
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn chunk_config(&self) -> Result<ChunkConfig> {
        ChunkConfig::from_ms(self.dt_ms, self.rc_ms, self.frame_shift_ms)
    }

    pub fn audio_seconds(&self) -> f64 {
        self.utterances.iter().map(|u| u.n_frames).sum::<usize>() as f64
            * self.frame_shift_ms as f64
            / 1000.0
    }

    pub fn frames_for<M: TransducerModel + ?Sized>(
        &self,
        model: &M,
        u: &UtteranceSpec,
    ) -> Vec<AudioFrame> {
        synth_frames(u.n_frames, model.feature_dim(), self.frame_shift_ms, u.seed)
    }

    pub fn validate(&self) -> Result<()> {
        if self.concurrency == 0 {
            return Err(Error::config("concurrency must be at least 1"));
        }
        self.beam.validate()?;
        self.chunk_config()?;
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UtteranceReport {
    pub n_frames: usize,
    pub labels: Vec<TokenId>,
    pub joiner_calls: u64,
    pub encoder_frames: usize,
    pub max_latency_ms: u64,
    pub wall_seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub concurrency: usize,
    pub utterances: usize,
    pub audio_seconds: f64,
    pub wall_seconds: f64,
    /// Audio seconds per wall second.
    pub throughput: f64,
    /// Wall seconds per audio second, per stream, at `concurrency` streams.
    pub rtf_at_n: f64,
    /// True when there were at least as many utterances as workers.
    pub saturated: bool,
    pub joiner_calls: u64,
    pub encoder_frames: u64,
    pub max_latency_ms: u64,
    pub mean_latency_ms: f64,
    pub per_utterance: Vec<UtteranceReport>,
}

/// Joiner calls, encoder frames, max latency and per-utterance (labels, joiner calls, encoder frames).
pub type Counters = (u64, u64, u64, Vec<(Vec<TokenId>, u64, usize)>);

impl BenchReport {
    /// The timing-independent part of the report.
    pub fn deterministic_counters(&self) -> Counters {
        (
            self.joiner_calls,
            self.encoder_frames,
            self.max_latency_ms,
            self.per_utterance
                .iter()
                .map(|u| (u.labels.clone(), u.joiner_calls, u.encoder_frames))
                .collect(),
        )
    }

    /// `|rtf_at_n - N / throughput| / rtf_at_n`.
    pub fn saturation_gap(&self) -> f64 {
        (self.rtf_at_n - self.concurrency as f64 / self.throughput).abs() / self.rtf_at_n
    }
}

/// Builds the workload's toy model and runs it.
pub fn run_bench(workload: &Workload) -> Result<BenchReport> {
    let model = build_toy_model(&workload.model)?;
    run_bench_with_model(&model, workload)
}

pub fn run_bench_with_model<M: TransducerModel + ?Sized>(
    model: &M,
    workload: &Workload,
) -> Result<BenchReport> {
    workload.validate()?;
    let chunk = workload.chunk_config()?;
    let beam = workload.beam;
    let n = workload.concurrency;
    let inputs: Vec<Vec<AudioFrame>> = workload
        .utterances
        .iter()
        .map(|u| workload.frames_for(model, u))
        .collect();

    let next = AtomicUsize::new(0);
    let barrier = Barrier::new(n + 1);
    let (results, wall_seconds) = std::thread::scope(|scope| -> Result<_> {
        let handles: Vec<_> = (0..n)
            .map(|_| {
                let (inputs, next, barrier) = (&inputs, &next, &barrier);
                scope.spawn(move || -> Result<Vec<(usize, UtteranceReport)>> {
                    let warm = inputs
                        .first()
                        .map(|f| recognize(model, f.iter().cloned(), chunk, beam));
                    barrier.wait();
                    if let Some(w) = warm {
                        w?;
                    }
                    let mut done = Vec::new();
                    loop {
                        let i = next.fetch_add(1, Ordering::Relaxed);
                        let Some(frames) = inputs.get(i) else {
                            break;
                        };
                        let started = Instant::now();
                        let out = recognize(model, frames.iter().cloned(), chunk, beam)?;
                        let wall_seconds = started.elapsed().as_secs_f64();
                        done.push((
                            i,
                            UtteranceReport {
                                n_frames: frames.len(),
                                labels: out.result.best.labels,
                                joiner_calls: out.result.stats.joiner_calls,
                                encoder_frames: out.encoder_frames,
                                max_latency_ms: out.max_latency_ms,
                                wall_seconds,
                            },
                        ));
                    }
                    Ok(done)
                })
            })
            .collect();
        barrier.wait();
        let started = Instant::now();
        let mut all = Vec::new();
        for h in handles {
            all.extend(h.join().expect("bench worker panicked")?);
        }
        Ok((all, started.elapsed().as_secs_f64()))
    })?;

    let mut per_utterance: Vec<Option<UtteranceReport>> = vec![None; workload.utterances.len()];
    for (i, r) in results {
        per_utterance[i] = Some(r);
    }
    let per_utterance: Vec<UtteranceReport> = per_utterance
        .into_iter()
        .map(|r| r.expect("every utterance decoded"))
        .collect();

    let audio_seconds = workload.audio_seconds();
    let busy: f64 = per_utterance.iter().map(|u| u.wall_seconds).sum();
    let encoder_frames = per_utterance.iter().map(|u| u.encoder_frames as u64).sum();
    debug_assert_eq!(
        encoder_frames,
        workload
            .utterances
            .iter()
            .map(|u| encoder_frames_closed_form(u.n_frames, &chunk).unwrap() as u64)
            .sum::<u64>()
    );
    let latencies: Vec<u64> = per_utterance.iter().map(|u| u.max_latency_ms).collect();
    Ok(BenchReport {
        concurrency: n,
        utterances: per_utterance.len(),
        audio_seconds,
        wall_seconds,
        throughput: audio_seconds / wall_seconds,
        rtf_at_n: busy / audio_seconds,
        saturated: per_utterance.len() >= n,
        joiner_calls: per_utterance.iter().map(|u| u.joiner_calls).sum(),
        encoder_frames,
        max_latency_ms: latencies.iter().copied().max().unwrap_or(0),
        mean_latency_ms: if latencies.is_empty() {
            0.0
        } else {
            latencies.iter().sum::<u64>() as f64 / latencies.len() as f64
        },
        per_utterance,
    })
}

/// Beam and DT values to cross in a sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    /// `(expand_beam, state_beam)` pairs.
    pub beams: Vec<(f64, f64)>,
    pub dt_ms: Vec<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub expand_beam: f64,
    pub state_beam: f64,
    pub dt_ms: u64,
    pub throughput: f64,
    pub rtf_at_n: f64,
    pub joiner_calls: u64,
    pub encoder_frames: u64,
    pub max_latency_ms: u64,
}

pub const SWEEP_HEADER: &str =
    "expand_beam,state_beam,dt_ms,throughput,rtf_at_n,joiner_calls,encoder_frames,max_latency_ms";

/// Runs the workload once per grid point, beams outermost.
pub fn sweep<M: TransducerModel + ?Sized>(
    model: &M,
    base: &Workload,
    grid: &SweepGrid,
) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::with_capacity(grid.beams.len() * grid.dt_ms.len());
    for &(expand_beam, state_beam) in &grid.beams {
        for &dt_ms in &grid.dt_ms {
            let workload = Workload {
                dt_ms,
                beam: BeamConfig {
                    expand_beam,
                    state_beam,
                    ..base.beam
                },
                ..base.clone()
            };
            let r = run_bench_with_model(model, &workload)?;
            rows.push(SweepRow {
                expand_beam,
                state_beam,
                dt_ms,
                throughput: r.throughput,
                rtf_at_n: r.rtf_at_n,
                joiner_calls: r.joiner_calls,
                encoder_frames: r.encoder_frames,
                max_latency_ms: r.max_latency_ms,
            });
        }
    }
    Ok(rows)
}

fn fmt_beam(v: f64) -> String {
    if v.is_infinite() {
        "inf".to_string()
    } else {
        v.to_string()
    }
}

/// CSV with header [`SWEEP_HEADER`]; infinite beams are written `inf`.
pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(SWEEP_HEADER.split(','))
        .expect("in-memory write");
    for r in rows {
        w.write_record([
            fmt_beam(r.expand_beam),
            fmt_beam(r.state_beam),
            r.dt_ms.to_string(),
            r.throughput.to_string(),
            r.rtf_at_n.to_string(),
            r.joiner_calls.to_string(),
            r.encoder_frames.to_string(),
            r.max_latency_ms.to_string(),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("csv is utf-8")
}
