#![allow(dead_code)]

use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rnnt_stream::chunk::encode_offline;
use rnnt_stream::model::AudioEmbedding;
use rnnt_stream::{build_toy_model, synth_frames, ChunkConfig, ToyModelSpec, ToyTransducer};
use serde_json::Value;

pub mod trace;

pub fn crate_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

pub fn fixture(name: &str) -> PathBuf {
    crate_dir().join("fixtures/v1").join(name)
}

pub fn read_json(path: impl AsRef<std::path::Path>) -> Value {
    let text = std::fs::read_to_string(path.as_ref()).unwrap();
    serde_json::from_str(&text).unwrap()
}

/// Embeddings that carry only their frame index, for table-driven models.
pub fn index_frames(t: usize) -> Vec<AudioEmbedding> {
    (0..t)
        .map(|i| AudioEmbedding {
            frame_index: i,
            vector: Vec::new(),
        })
        .collect()
}

/// A random search instance: a model plus its embeddings.
pub struct Instance {
    pub model: ToyTransducer,
    pub embeddings: Vec<AudioEmbedding>,
    pub desc: String,
}

/// Alternates hashed-table and linear-recurrent models with `T <= max_t`
/// and `V <= max_v`.
pub fn random_instance(seed: u64, max_t: usize, max_v: usize) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let t = rng.gen_range(0..=max_t);
    let v = rng.gen_range(2..=max_v);
    if seed.is_multiple_of(2) {
        let spec = ToyModelSpec {
            logit_scale: rng.gen_range(1.0..6.0),
            blank_bias: rng.gen_range(-1.0..3.0),
            ..ToyModelSpec::table(v, rng.gen_range(1..=12), seed)
        };
        Instance {
            model: build_toy_model(&spec).unwrap(),
            embeddings: index_frames(t),
            desc: format!("table seed={seed} T={t} V={v}"),
        }
    } else {
        let d = rng.gen_range(1..=4);
        let spec = ToyModelSpec {
            logit_scale: rng.gen_range(1.0..8.0),
            blank_bias: rng.gen_range(-1.0..3.0),
            ..ToyModelSpec::linear(d, rng.gen_range(2..=6), v, seed)
        };
        let model = build_toy_model(&spec).unwrap();
        let cs = rng.gen_range(2..=10);
        let chunk = ChunkConfig::new(cs, rng.gen_range(0..cs)).unwrap();
        let embeddings = encode_offline(&model, &synth_frames(t, d, 10, seed), &chunk).unwrap();
        Instance {
            model,
            embeddings,
            desc: format!("linear seed={seed} T={t} V={v}"),
        }
    }
}

struct SchemaDir;

impl jsonschema::Retrieve for SchemaDir {
    fn retrieve(
        &self,
        uri: &jsonschema::Uri<String>,
    ) -> Result<Value, Box<dyn std::error::Error + Send + Sync>> {
        let name = uri
            .path()
            .as_str()
            .rsplit('/')
            .next()
            .unwrap_or_default()
            .to_string();
        let text = std::fs::read_to_string(crate_dir().join("schemas").join(name))?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// Validates `doc` against `schemas/<name>`, panicking with every error.
pub fn assert_schema(name: &str, doc: &Value) {
    let schema = read_json(crate_dir().join("schemas").join(name));
    let validator = jsonschema::options()
        .with_retriever(SchemaDir)
        .build(&schema)
        .unwrap_or_else(|e| panic!("schema {name} does not compile: {e}"));
    let errors: Vec<String> = validator
        .iter_errors(doc)
        .map(|e| format!("{} at {}", e, e.instance_path()))
        .collect();
    assert!(errors.is_empty(), "{name}: {errors:#?}");
}

/// An instance small enough for the oracles: `T <= 4`, `V <= 3`, and a
/// table model that stops emitting after two labels in total.
pub fn tiny_instance(seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x7a11);
    let t = rng.gen_range(1..=4);
    let v = rng.gen_range(2..=3);
    let spec = ToyModelSpec {
        logit_scale: rng.gen_range(0.5..4.0),
        blank_bias: rng.gen_range(-1.0..2.0),
        ..ToyModelSpec::table(v, 2, seed)
    };
    Instance {
        model: build_toy_model(&spec).unwrap(),
        embeddings: index_frames(t),
        desc: format!("tiny seed={seed} T={t} V={v}"),
    }
}

/// A streaming scenario: linear-recurrent model, raw frames, chunking and
/// pruned beams, with optional subsampling.
pub struct StreamCase {
    pub model: ToyTransducer,
    pub frames: Vec<rnnt_stream::AudioFrame>,
    pub chunk: ChunkConfig,
    pub beam: rnnt_stream::BeamConfig,
    pub desc: String,
}

pub fn stream_case(seed: u64) -> StreamCase {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x57ea);
    let d = rng.gen_range(1..=6);
    let v = rng.gen_range(2..=8);
    let sub = rng.gen_range(1..=3);
    let spec = ToyModelSpec {
        logit_scale: rng.gen_range(2.0..8.0),
        blank_bias: rng.gen_range(0.0..3.0),
        ..ToyModelSpec::linear(d, rng.gen_range(2..=10), v, seed)
    }
    .with_subsampling(sub);
    let t = rng.gen_range(0..=150);
    let cs = rng.gen_range(1..=40);
    let chunk = ChunkConfig::new(cs, rng.gen_range(0..cs)).unwrap();
    let beam = rnnt_stream::BeamConfig::pruned(
        rng.gen_range(1..=5),
        rng.gen_range(0.5..5.0),
        rng.gen_range(0.5..8.0),
    );
    StreamCase {
        model: build_toy_model(&spec).unwrap(),
        frames: synth_frames(t, d, 10, seed),
        chunk,
        beam,
        desc: format!(
            "seed={seed} T={t} V={v} sub={sub} cs={cs} rc={}",
            chunk.rc_frames
        ),
    }
}
