mod common;

use common::{index_frames, random_instance, tiny_instance};
use proptest::prelude::*;
use rnnt_stream::oracle::{
    exhaustive_sequence_posteriors, lattice_forward, lattice_sequence_posteriors, oracle_best,
    OracleLimit,
};
use rnnt_stream::{build_toy_model, decode_reference, BeamConfig, Error, ToyModelSpec};

const TOL: f64 = 1e-9;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn path_sum_and_lattice_agree(seed in any::<u64>(), cap in 0usize..3) {
        let inst = random_instance(seed, 4, 3);
        let limit = OracleLimit::with_symbols(cap);
        let paths = exhaustive_sequence_posteriors(&inst.embeddings, &inst.model, &limit).unwrap();
        let lattice = lattice_sequence_posteriors(&inst.embeddings, &inst.model, &limit).unwrap();
        prop_assert_eq!(paths.sequences.len(), lattice.len());
        for (y, p) in &paths.sequences {
            let q = lattice[y];
            prop_assert!(p.is_zero() && q.is_zero() || (p.0 - q.0).abs() <= TOL, "{} {:?}: {} vs {}", inst.desc, y, p.0, q.0);
        }
        prop_assert!(paths.total().abs() <= TOL, "{}: mass {}", inst.desc, paths.total());
    }

    #[test]
    fn saturated_table_leaves_no_residual(seed in any::<u64>()) {
        let inst = tiny_instance(seed);
        let paths = exhaustive_sequence_posteriors(&inst.embeddings, &inst.model, &OracleLimit::with_symbols(2)).unwrap();
        prop_assert!(paths.residual.is_zero(), "{}", inst.desc);
        prop_assert!(paths.total().abs() <= TOL);
    }
}

#[test]
fn reference_at_saturating_width_finds_the_oracle_best_on_tiny_instances() {
    let mut agree = 0;
    for seed in 0..50 {
        let inst = tiny_instance(seed);
        let want =
            oracle_best(&inst.embeddings, &inst.model, &OracleLimit::with_symbols(2)).unwrap();
        let got =
            decode_reference(&inst.embeddings, &inst.model, &BeamConfig::unpruned(16)).unwrap();
        agree += (got.best.labels == want.labels) as usize;
    }
    assert!(agree >= 48, "{agree}/50");
}

#[test]
fn empty_input_has_all_mass_on_the_empty_sequence() {
    let m = build_toy_model(&ToyModelSpec::table(3, 2, 1)).unwrap();
    let p = exhaustive_sequence_posteriors(&[], &m, &OracleLimit::with_symbols(2)).unwrap();
    assert_eq!(p.sequences[&vec![]].0, 0.0);
    assert!(p
        .sequences
        .iter()
        .filter(|(y, _)| !y.is_empty())
        .all(|(_, s)| s.is_zero()));
    assert_eq!(lattice_forward(&[], &m, &[1]).unwrap().0, f64::NEG_INFINITY);
}

#[test]
fn oversized_instances_are_refused() {
    let m = build_toy_model(&ToyModelSpec::table(3, 2, 1)).unwrap();
    let limit = OracleLimit::default();
    let long = index_frames(limit.max_t + 1);
    assert!(matches!(
        exhaustive_sequence_posteriors(&long, &m, &limit),
        Err(Error::LimitExceeded(_))
    ));
    assert!(matches!(
        lattice_sequence_posteriors(&long, &m, &limit),
        Err(Error::LimitExceeded(_))
    ));
    let wide = build_toy_model(&ToyModelSpec::table(9, 2, 1)).unwrap();
    assert!(matches!(
        oracle_best(&index_frames(2), &wide, &limit),
        Err(Error::LimitExceeded(_))
    ));
}

#[test]
fn path_count_matches_enumeration_size() {
    // T = 2, one label, at most two symbols: 1 + 2 + 3 alignments.
    assert_eq!(OracleLimit::with_symbols(2).path_count(2, 2), 6);
    assert_eq!(OracleLimit::with_symbols(2).sequence_count(3), 7);
}
