//! The `rnnt` command line: `decode`, `gen`, `compare`, `bench`, `sweep`.
//!
//! Exit codes: 0 on success, 2 when a file cannot be read or written (and
//! for command-line usage errors), 3 for invalid configuration, malformed
//! or schema-violating model, feature and workload files, and oracle
//! limits.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::bench::{
    run_bench, run_bench_with_model, sweep, sweep_csv, BenchReport, SweepGrid, Workload,
};
use crate::chunk::{encode_offline, ChunkConfig};
use crate::error::{Error, Result};
use crate::features::{synth_frames, FeatureFile};
use crate::model::{AudioFrame, TransducerModel};
use crate::oracle::{oracle_best, OracleLimit};
use crate::recognizer::StreamingRecognizer;
use crate::search::{decode_reference, SearchStats, TraceEvent};
use crate::toy::{build_toy_model, golden_2x3, ToyModelSpec, ToyTransducer};
use crate::types::{BeamConfig, Hypothesis, LogProb, TokenId, Vocabulary};

/// Environment variable naming the default weight file.
pub const MODEL_ENV: &str = "RNNT_MODEL";

#[derive(Parser, Debug)]
#[command(
    name = "rnnt",
    version,
    about = "Streaming RNN-T decoding with pruned beam search"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Decode a feature file and print the transcript.
    Decode(DecodeArgs),
    /// Write a toy model, a feature file and a workload.
    Gen(GenArgs),
    /// Decode with the pruned and the reference search and report both.
    Compare(CompareArgs),
    /// Run a workload over concurrent streams.
    Bench(BenchArgs),
    /// Run a workload over a grid of beams and DT values, as CSV.
    Sweep(SweepArgs),
}

#[derive(Args, Debug, Clone)]
pub struct ChunkArgs {
    /// Decoding threshold: the inference chunk size in milliseconds.
    #[arg(long, default_value_t = 800)]
    pub dt_ms: u64,
    /// Right context in milliseconds.
    #[arg(long, default_value_t = 200, conflicts_with = "rc_frames")]
    pub rc_ms: u64,
    /// Right context in frames, instead of `--rc-ms`.
    #[arg(long)]
    pub rc_frames: Option<u64>,
    /// Defaults to the feature file's frame shift.
    #[arg(long)]
    pub frame_shift_ms: Option<u64>,
}

impl ChunkArgs {
    fn config(&self, file_shift: u64) -> Result<ChunkConfig> {
        let shift = self.frame_shift_ms.unwrap_or(file_shift);
        if shift != file_shift {
            return Err(Error::Config(format!(
                "--frame-shift-ms {shift} does not match the feature file's {file_shift} ms"
            )));
        }
        let rc_ms = match self.rc_frames {
            Some(rc) => rc * shift,
            None => self.rc_ms,
        };
        ChunkConfig::from_ms(self.dt_ms, rc_ms, shift)
    }
}

#[derive(Args, Debug, Clone)]
pub struct BeamArgs {
    /// Beam width W.
    #[arg(long, default_value_t = 4)]
    pub beam: usize,
    /// Expansion beam in nats; omitted means unbounded.
    #[arg(long)]
    pub expand_beam: Option<f64>,
    /// State beam in nats; omitted means unbounded.
    #[arg(long)]
    pub state_beam: Option<f64>,
    #[arg(long, default_value_t = BeamConfig::DEFAULT_MAX_SYMBOLS)]
    pub max_symbols: usize,
}

impl BeamArgs {
    fn config(&self) -> Result<BeamConfig> {
        let cfg = BeamConfig::pruned(
            self.beam,
            self.expand_beam.unwrap_or(f64::INFINITY),
            self.state_beam.unwrap_or(f64::INFINITY),
        )
        .with_max_symbols(self.max_symbols);
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args, Debug)]
pub struct DecodeArgs {
    #[arg(long, env = MODEL_ENV)]
    pub model: PathBuf,
    #[arg(long)]
    pub features: PathBuf,
    #[command(flatten)]
    pub chunk: ChunkArgs,
    #[command(flatten)]
    pub beam: BeamArgs,
    /// Print a JSON document instead of the bare transcript.
    #[arg(long)]
    pub json: bool,
    /// Include every search step in the JSON output.
    #[arg(long, requires = "json")]
    pub trace: bool,
}

#[derive(Args, Debug)]
pub struct CompareArgs {
    #[arg(long, env = MODEL_ENV)]
    pub model: PathBuf,
    #[arg(long)]
    pub features: PathBuf,
    #[command(flatten)]
    pub chunk: ChunkArgs,
    #[command(flatten)]
    pub beam: BeamArgs,
    /// Also run the exhaustive oracle; only for tiny instances.
    #[arg(long)]
    pub oracle: bool,
    /// Oracle cap on labels over the whole utterance.
    #[arg(long, default_value_t = 2)]
    pub max_total_symbols: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum GenKind {
    /// The model behind the standard benchmark workload.
    Standard,
    Linear,
    Table,
    /// The hand-authored two-frame table fixture.
    Golden,
}

#[derive(Args, Debug)]
pub struct GenArgs {
    /// Directory receiving `model.json`, `features.rntf` and `workload.json`.
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Seeds the features, the workload and non-standard model weights.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 300)]
    pub n_frames: usize,
    #[arg(long, value_enum, default_value_t = GenKind::Standard)]
    pub kind: GenKind,
    #[arg(long, default_value_t = 8)]
    pub feature_dim: usize,
    /// Including blank.
    #[arg(long, default_value_t = 8)]
    pub vocab_size: usize,
    #[arg(long, default_value_t = 12)]
    pub hidden: usize,
    #[arg(long, default_value_t = 1)]
    pub subsample: usize,
    #[arg(long, default_value_t = 10)]
    pub frame_shift_ms: u64,
    /// Utterances in the generated workload.
    #[arg(long, default_value_t = 16)]
    pub utterances: usize,
    #[arg(long)]
    pub json: bool,
}

#[derive(Args, Debug)]
pub struct WorkloadArgs {
    /// Weight file; defaults to building the workload's model spec.
    #[arg(long, env = MODEL_ENV)]
    pub model: Option<PathBuf>,
    /// Workload file; defaults to the standard workload.
    #[arg(long)]
    pub workload: Option<PathBuf>,
    /// Size of the standard workload when `--workload` is omitted.
    #[arg(long, default_value_t = 64)]
    pub utterances: usize,
    #[arg(long)]
    pub concurrency: Option<usize>,
    #[arg(long)]
    pub rc_ms: Option<u64>,
    #[arg(long)]
    pub beam: Option<usize>,
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    #[command(flatten)]
    pub workload: WorkloadArgs,
    #[arg(long)]
    pub dt_ms: Option<u64>,
    #[arg(long)]
    pub expand_beam: Option<f64>,
    #[arg(long)]
    pub state_beam: Option<f64>,
    /// Report path; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[command(flatten)]
    pub workload: WorkloadArgs,
    #[arg(long, value_delimiter = ',', default_values_t = [1.5, 2.3, f64::INFINITY])]
    pub expand_beams: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_values_t = [2.3, 4.6, f64::INFINITY])]
    pub state_beams: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_values_t = [2000, 1500, 800, 400, 300])]
    pub dt_ms: Vec<u64>,
    /// CSV path; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Exit status for an error, per the table in the module docs.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Io { .. } => 2,
        _ => 3,
    }
}

/// Runs one command, writing its output to `out`.
pub fn run(cli: Cli, out: &mut dyn Write) -> Result<()> {
    match cli.command {
        Command::Decode(args) => decode(&args, out),
        Command::Gen(args) => gen(&args, out),
        Command::Compare(args) => compare(&args, out),
        Command::Bench(args) => bench(&args, out),
        Command::Sweep(args) => run_sweep(&args, out),
    }
}

fn emit(out: &mut dyn Write, text: &str) -> Result<()> {
    writeln!(out, "{text}").map_err(|e| Error::io("<stdout>", e))
}

fn emit_json<T: Serialize>(out: &mut dyn Write, value: &T) -> Result<()> {
    emit(
        out,
        &serde_json::to_string_pretty(value).expect("output serializes"),
    )
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

#[derive(Serialize)]
struct ScoredHypothesis {
    labels: Vec<TokenId>,
    transcript: String,
    score: LogProb,
    normalized_score: f64,
}

impl ScoredHypothesis {
    fn new(h: &Hypothesis, vocab: &Vocabulary) -> Self {
        ScoredHypothesis {
            labels: h.labels.clone(),
            transcript: vocab.detokenize(&h.labels),
            score: h.score,
            normalized_score: h.normalized_score(),
        }
    }
}

#[derive(Serialize)]
struct DecodeOutput {
    transcript: String,
    labels: Vec<TokenId>,
    score: LogProb,
    normalized_score: f64,
    n_best: Vec<ScoredHypothesis>,
    stats: SearchStats,
    audio_seconds: f64,
    encoder_frames: usize,
    max_latency_ms: u64,
    beam: BeamConfig,
    chunk: ChunkConfig,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    trace: Vec<TraceEvent>,
}

fn load_inputs(model: &Path, features: &Path) -> Result<(ToyTransducer, FeatureFile)> {
    let model = ToyTransducer::load(model)?;
    let features = FeatureFile::load(features)?;
    if features.header.feature_dim != model.feature_dim() {
        return Err(Error::Config(format!(
            "feature file has dimension {}, model expects {}",
            features.header.feature_dim,
            model.feature_dim()
        )));
    }
    Ok((model, features))
}

fn decode(args: &DecodeArgs, out: &mut dyn Write) -> Result<()> {
    let (model, features) = load_inputs(&args.model, &args.features)?;
    let chunk = args.chunk.config(features.header.frame_shift_ms)?;
    let beam = args.beam.config()?;
    let mut rec = StreamingRecognizer::new(&model, chunk, beam)?;
    if args.trace {
        rec = rec.with_trace();
    }
    for frame in features.frames() {
        rec.push_frame(frame)?;
    }
    let done = rec.finish()?;
    let vocab = model.vocab();
    let best = &done.result.best;
    if !args.json {
        return emit(out, &vocab.detokenize(&best.labels));
    }
    emit_json(
        out,
        &DecodeOutput {
            transcript: vocab.detokenize(&best.labels),
            labels: best.labels.clone(),
            score: best.score,
            normalized_score: best.normalized_score(),
            n_best: done
                .result
                .n_best
                .iter()
                .map(|h| ScoredHypothesis::new(h, vocab))
                .collect(),
            stats: done.result.stats,
            audio_seconds: features.audio_seconds(),
            encoder_frames: done.encoder_frames,
            max_latency_ms: done.max_latency_ms,
            beam,
            chunk,
            trace: done.trace,
        },
    )
}

#[derive(Serialize)]
struct CompareOutput {
    agree: bool,
    pruned_labels: Vec<TokenId>,
    reference_labels: Vec<TokenId>,
    pruned_transcript: String,
    reference_transcript: String,
    pruned_score: LogProb,
    reference_score: LogProb,
    joiner_calls_pruned: u64,
    joiner_calls_reference: u64,
    beam: BeamConfig,
    #[serde(flatten, skip_serializing_if = "Option::is_none")]
    oracle: Option<OracleFields>,
}

#[derive(Serialize)]
struct OracleFields {
    oracle_labels: Vec<TokenId>,
    oracle_transcript: String,
    oracle_score: LogProb,
    oracle_agree_pruned: bool,
    oracle_agree_reference: bool,
}

fn compare(args: &CompareArgs, out: &mut dyn Write) -> Result<()> {
    let (model, features) = load_inputs(&args.model, &args.features)?;
    let chunk = args.chunk.config(features.header.frame_shift_ms)?;
    let beam = args.beam.config()?;
    let vocab = model.vocab();

    let mut rec = StreamingRecognizer::new(&model, chunk, beam)?;
    for frame in features.frames() {
        rec.push_frame(frame)?;
    }
    let pruned = rec.finish()?.result;
    let embeddings = encode_offline(&model, &features.frames(), &chunk)?;
    let reference = decode_reference(&embeddings, &model, &beam)?;

    let oracle = if args.oracle {
        let limit = OracleLimit::with_symbols(args.max_total_symbols);
        let best = oracle_best(&embeddings, &model, &limit)?;
        Some(OracleFields {
            oracle_agree_pruned: best.labels == pruned.best.labels,
            oracle_agree_reference: best.labels == reference.best.labels,
            oracle_transcript: vocab.detokenize(&best.labels),
            oracle_labels: best.labels,
            oracle_score: best.score,
        })
    } else {
        None
    };
    emit_json(
        out,
        &CompareOutput {
            agree: pruned.best.labels == reference.best.labels,
            pruned_transcript: vocab.detokenize(&pruned.best.labels),
            reference_transcript: vocab.detokenize(&reference.best.labels),
            pruned_labels: pruned.best.labels,
            reference_labels: reference.best.labels,
            pruned_score: pruned.best.score,
            reference_score: reference.best.score,
            joiner_calls_pruned: pruned.stats.joiner_calls,
            joiner_calls_reference: reference.stats.joiner_calls,
            beam,
            oracle,
        },
    )
}

#[derive(Serialize)]
struct GenOutput {
    model: PathBuf,
    features: PathBuf,
    #[serde(skip_serializing_if = "Option::is_none")]
    workload: Option<PathBuf>,
    feature_dim: usize,
    frame_shift_ms: u64,
    n_frames: usize,
    vocab_size: usize,
}

fn gen(args: &GenArgs, out: &mut dyn Write) -> Result<()> {
    let spec = match args.kind {
        GenKind::Standard => Some(ToyModelSpec::standard().with_subsampling(args.subsample)),
        GenKind::Linear => Some(
            ToyModelSpec::linear(args.feature_dim, args.hidden, args.vocab_size, args.seed)
                .with_subsampling(args.subsample),
        ),
        GenKind::Table => Some(ToyModelSpec::table(args.vocab_size, usize::MAX, args.seed)),
        GenKind::Golden => None,
    };
    let model = match &spec {
        Some(spec) => build_toy_model(spec)?,
        None => golden_2x3(),
    };
    std::fs::create_dir_all(&args.out_dir).map_err(|e| Error::io(&args.out_dir, e))?;

    let model_path = args.out_dir.join("model.json");
    model.save(&model_path)?;

    let frames: Vec<AudioFrame> = synth_frames(
        args.n_frames,
        model.feature_dim(),
        args.frame_shift_ms,
        args.seed,
    );
    let features = FeatureFile::from_frames(&frames, model.feature_dim(), args.frame_shift_ms)?;
    let features_path = args.out_dir.join("features.rntf");
    write_file(&features_path, &features.to_bytes())?;

    let workload_path = match spec {
        Some(spec) => {
            let mut workload = Workload::generate(spec, args.utterances, args.seed);
            workload.frame_shift_ms = args.frame_shift_ms;
            let path = args.out_dir.join("workload.json");
            workload.save(&path)?;
            Some(path)
        }
        None => None,
    };

    if args.json {
        emit_json(
            out,
            &GenOutput {
                model: model_path,
                features: features_path,
                workload: workload_path,
                feature_dim: features.header.feature_dim,
                frame_shift_ms: features.header.frame_shift_ms,
                n_frames: features.header.n_frames,
                vocab_size: model.vocab().len(),
            },
        )
    } else {
        emit(out, &format!("wrote {}", model_path.display()))?;
        emit(out, &format!("wrote {}", features_path.display()))?;
        if let Some(p) = workload_path {
            emit(out, &format!("wrote {}", p.display()))?;
        }
        Ok(())
    }
}

impl WorkloadArgs {
    fn resolve(&self) -> Result<(Workload, Option<ToyTransducer>)> {
        let mut workload = match &self.workload {
            Some(path) => Workload::load(path)?,
            None => Workload::standard(self.utterances),
        };
        if let Some(n) = self.concurrency {
            workload.concurrency = n;
        }
        if let Some(rc) = self.rc_ms {
            workload.rc_ms = rc;
        }
        if let Some(w) = self.beam {
            workload.beam.beam_width = w;
        }
        let model = self.model.as_ref().map(ToyTransducer::load).transpose()?;
        Ok((workload, model))
    }
}

fn bench(args: &BenchArgs, out: &mut dyn Write) -> Result<()> {
    let (mut workload, model) = args.workload.resolve()?;
    if let Some(dt) = args.dt_ms {
        workload.dt_ms = dt;
    }
    if let Some(e) = args.expand_beam {
        workload.beam.expand_beam = e;
    }
    if let Some(s) = args.state_beam {
        workload.beam.state_beam = s;
    }
    let report: BenchReport = match &model {
        Some(m) => run_bench_with_model(m, &workload)?,
        None => run_bench(&workload)?,
    };
    let text = serde_json::to_string_pretty(&report).expect("report serializes");
    match &args.out {
        Some(path) => write_file(path, (text + "\n").as_bytes()),
        None => emit(out, &text),
    }
}

fn run_sweep(args: &SweepArgs, out: &mut dyn Write) -> Result<()> {
    let (workload, model) = args.workload.resolve()?;
    let model = match model {
        Some(m) => m,
        None => build_toy_model(&workload.model)?,
    };
    let grid = SweepGrid {
        beams: args
            .expand_beams
            .iter()
            .flat_map(|&e| args.state_beams.iter().map(move |&s| (e, s)))
            .collect(),
        dt_ms: args.dt_ms.clone(),
    };
    let csv = sweep_csv(&sweep(&model, &workload, &grid)?);
    match &args.out {
        Some(path) => write_file(path, csv.as_bytes()),
        None => write!(out, "{csv}").map_err(|e| Error::io("<stdout>", e)),
    }
}
