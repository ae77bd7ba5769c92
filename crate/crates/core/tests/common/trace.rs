//! Replays the hand-written golden traces against the implementation.

use rnnt_stream::chunk::encode_offline;
use rnnt_stream::model::AudioEmbedding;
use rnnt_stream::search::TraceEvent;
use rnnt_stream::{
    BeamConfig, ChunkConfig, DecodeSession, FeatureFile, Hypothesis, ToyTransducer, TransducerModel,
};
use serde_json::Value;

use super::fixture;

const TOL: f64 = 1e-12;

pub fn golden_embeddings(model: &ToyTransducer) -> Vec<AudioEmbedding> {
    let features = FeatureFile::load(fixture("golden-2x3.features.rntf")).unwrap();
    assert_eq!(features.header.n_frames, 2);
    encode_offline(
        model,
        &features.frames(),
        &ChunkConfig::from_ms(800, 200, 10).unwrap(),
    )
    .unwrap()
}

fn labels(v: &Value) -> Vec<u32> {
    v.as_array()
        .unwrap()
        .iter()
        .map(|x| x.as_u64().unwrap() as u32)
        .collect()
}

fn close(what: &str, got: f64, p: f64) {
    let want = p.ln();
    assert!(
        (got - want).abs() <= TOL,
        "{what}: got {got}, want ln {p} = {want}"
    );
}

fn check_set(what: &str, got: &[Hypothesis], want: &Value, ordered: bool) {
    let mut want: Vec<(Vec<u32>, f64)> = want
        .as_array()
        .unwrap()
        .iter()
        .map(|h| (labels(&h["labels"]), h["p"].as_f64().unwrap()))
        .collect();
    let mut got: Vec<&Hypothesis> = got.iter().collect();
    if !ordered {
        want.sort_by(|a, b| a.0.cmp(&b.0));
        got.sort_by(|a, b| a.labels.cmp(&b.labels));
    }
    let got_labels: Vec<&Vec<u32>> = got.iter().map(|h| &h.labels).collect();
    let want_labels: Vec<&Vec<u32>> = want.iter().map(|w| &w.0).collect();
    assert_eq!(got_labels, want_labels, "{what}");
    for (h, (l, p)) in got.iter().zip(&want) {
        close(&format!("{what} {l:?}"), h.score.0, *p);
    }
}

fn check_event(at: &str, got: &TraceEvent, want: &Value) {
    let kind = want["event"].as_str().unwrap();
    match got {
        TraceEvent::FrameStart { t, a } => {
            assert_eq!(kind, "frame_start", "{at}");
            assert_eq!(*t as u64, want["t"].as_u64().unwrap(), "{at}");
            check_set(&format!("{at} A"), a, &want["a"], false);
        }
        TraceEvent::Pop {
            labels: l,
            score,
            blank_score,
            expansions,
            pruned,
        } => {
            assert_eq!(kind, "pop", "{at}");
            assert_eq!(*l, labels(&want["labels"]), "{at}");
            close(&format!("{at} score"), score.0, want["p"].as_f64().unwrap());
            close(
                &format!("{at} blank"),
                blank_score.0,
                want["blank_p"].as_f64().unwrap(),
            );
            check_set(
                &format!("{at} expansions"),
                expansions,
                &want["expansions"],
                true,
            );
            assert_eq!(*pruned, labels(&want["pruned"]), "{at} pruned");
        }
        TraceEvent::StateBeamBreak { a_best, b_best } => {
            assert_eq!(kind, "state_beam_break", "{at}");
            close(
                &format!("{at} a_best"),
                a_best.0,
                want["a_best"].as_f64().unwrap(),
            );
            close(
                &format!("{at} b_best"),
                b_best.0,
                want["b_best"].as_f64().unwrap(),
            );
        }
        TraceEvent::FrameEnd { t, b } => {
            assert_eq!(kind, "frame_end", "{at}");
            assert_eq!(*t as u64, want["t"].as_u64().unwrap(), "{at}");
            check_set(&format!("{at} B"), b, &want["b"], true);
        }
    }
}

/// Replays one hand-written trace against the implementation.
pub fn check_trace(trace: &Value) {
    let name = trace["name"].as_str().unwrap();
    let model = ToyTransducer::load(fixture("golden-2x3.model.json")).unwrap();
    let beam: BeamConfig = serde_json::from_value(trace["beam"].clone()).unwrap();
    let mut session = DecodeSession::new(&model, beam).unwrap().with_trace();
    session.push(&golden_embeddings(&model)).unwrap();
    let events = session.take_trace();
    let result = session.finalize();

    let steps = trace["steps"].as_array().unwrap();
    assert_eq!(
        events.len(),
        steps.len(),
        "{name}: step count, got {events:#?}"
    );
    for (i, (got, want)) in events.iter().zip(steps).enumerate() {
        check_event(&format!("{name} step {i}"), got, want);
    }
    assert_eq!(
        result.best.labels,
        labels(&trace["best"]["labels"]),
        "{name}"
    );
    close(
        &format!("{name} best"),
        result.best.score.0,
        trace["best"]["p"].as_f64().unwrap(),
    );
    assert_eq!(
        model.vocab().detokenize(&result.best.labels),
        trace["transcript"].as_str().unwrap()
    );
    let stats = serde_json::to_value(result.stats).unwrap();
    assert_eq!(stats, trace["stats"], "{name}");
}
