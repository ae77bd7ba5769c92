mod common;

use common::trace::{check_trace, golden_embeddings};
use common::{assert_schema, fixture, read_json};
use rnnt_stream::oracle::{
    exhaustive_sequence_posteriors, lattice_sequence_posteriors, oracle_best, OracleLimit,
    Posteriors,
};
use rnnt_stream::{decode_reference, golden_2x3, BeamConfig, ToyTransducer};

fn close(what: &str, got: f64, p: f64) {
    let want = p.ln();
    assert!(
        (got - want).abs() <= 1e-12,
        "{what}: got {got}, want ln {p} = {want}"
    );
}

#[test]
fn fixture_model_is_the_built_in_table() {
    let model = ToyTransducer::load(fixture("golden-2x3.model.json")).unwrap();
    assert_eq!(model, golden_2x3());
    assert_schema(
        "model.schema.json",
        &read_json(fixture("golden-2x3.model.json")),
    );
}

#[test]
fn hand_traces_match_step_for_step() {
    let doc = read_json(fixture("golden-2x3.trace.json"));
    for trace in doc["traces"].as_array().unwrap() {
        check_trace(trace);
    }
}

#[test]
fn default_trace_is_the_committed_transcript() {
    let doc = read_json(fixture("golden-2x3.trace.json"));
    let transcript = std::fs::read_to_string(fixture("golden-2x3.transcript.txt")).unwrap();
    assert_eq!(doc["traces"][0]["name"], "defaults");
    assert_eq!(
        doc["traces"][0]["transcript"].as_str().unwrap(),
        transcript.trim_end()
    );
}

#[test]
fn reference_search_follows_the_unpruned_trace() {
    let model = golden_2x3();
    let emb = golden_embeddings(&model);
    let r = decode_reference(&emb, &model, &BeamConfig::unpruned(4)).unwrap();
    assert_eq!(r.best.labels, vec![1, 2]);
    close("reference best", r.best.score.0, 0.159);
    assert_eq!(r.stats.joiner_calls, 8);
}

#[test]
fn posterior_fixture_matches_both_oracles() {
    let model = golden_2x3();
    let emb = golden_embeddings(&model);
    let text = std::fs::read_to_string(fixture("golden-2x3.posteriors.json")).unwrap();
    assert_schema(
        "posteriors.schema.json",
        &serde_json::from_str(&text).unwrap(),
    );
    let frozen = Posteriors::from_fixture_json(&text).unwrap();

    let limit = OracleLimit::with_symbols(2);
    let paths = exhaustive_sequence_posteriors(&emb, &model, &limit).unwrap();
    let lattice = lattice_sequence_posteriors(&emb, &model, &limit).unwrap();
    assert_eq!(
        frozen.keys().collect::<Vec<_>>(),
        paths.sequences.keys().collect::<Vec<_>>()
    );
    assert_eq!(
        frozen.keys().collect::<Vec<_>>(),
        lattice.keys().collect::<Vec<_>>()
    );
    for (y, p) in &frozen {
        assert!((paths.sequences[y].0 - p.0).abs() <= 1e-9, "{y:?}");
        assert!((lattice[y].0 - p.0).abs() <= 1e-9, "{y:?}");
    }
    // Linear-space values worked out by hand from the table.
    for (y, p) in [
        (vec![], 0.18),
        (vec![1], 0.198),
        (vec![2], 0.342),
        (vec![1, 1], 0.063),
        (vec![1, 2], 0.159),
        (vec![2, 1], 0.029),
        (vec![2, 2], 0.029),
    ] {
        assert!((frozen[&y].0.exp() - p).abs() < 1e-12, "{y:?}");
    }
    assert!(paths.residual.is_zero());
    assert!(paths.total().abs() < 1e-9);

    let best = oracle_best(&emb, &model, &limit).unwrap();
    assert_eq!(best.labels, vec![1, 2]);
}
