use gadgetsmith::classify::{for_each_partial, random_partial, rank3_settings};
use gadgetsmith::encode::{
    downset_exclusion_clause, encode_candidate, upset_exclusion_clause, CandidateEncoding, CompletionChecker,
    GadgetProblem, GadgetSpec,
};
use gadgetsmith::oracle::brute_complete;
use gadgetsmith::sat::{Lit, Model, SessionConfig};
use gadgetsmith::{Family, PartialSignMapping, Sign};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn indicator_model(sigma: &PartialSignMapping, enc: &CandidateEncoding) -> Model {
    let mut values = vec![false; enc.variable_count()];
    for lit in encode_candidate(sigma, enc) {
        values[lit.var() as usize - 1] = true;
    }
    Model::from_values(values)
}

fn clause_holds(clause: &[Lit], model: &Model) -> bool {
    clause.iter().any(|&l| model.lit(l))
}

// The up-set clause is falsified exactly by the extensions of the witness,
// and the down-set clause exactly by its restrictions that keep the
// variable tuples unset.
#[test]
fn exclusion_clauses_are_exact_at_n5() {
    let problem = GadgetProblem::from_spec(GadgetSpec::Clause([Sign::Plus; 3]), 5, Family::alternating(3)).unwrap();
    let vars = problem.variable_indices().to_vec();
    let enc = CandidateEncoding { tuple_count: 10 };
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..4 {
        let mut witness = random_partial(&mut rng, 5, 3);
        for &v in &vars {
            witness.set(v, gadgetsmith::SignState::Unset);
        }
        let up = upset_exclusion_clause(&witness, &enc);
        let down = downset_exclusion_clause(&witness, &enc, &vars);
        for_each_partial(5, 3, |tau| {
            let m = indicator_model(tau, &enc);
            assert_eq!(!clause_holds(&up, &m), witness.is_leq(tau).unwrap());
            if vars.iter().all(|&v| !tau.get(v).is_set()) {
                assert_eq!(!clause_holds(&down, &m), tau.is_leq(&witness).unwrap());
            }
            Ok(())
        })
        .unwrap();
    }
}

fn sat_agrees_with_brute(family: &Family, sigma: &PartialSignMapping, checker: &mut CompletionChecker) {
    let brute = brute_complete(sigma, family).unwrap();
    let sat = checker.complete(sigma).unwrap();
    assert_eq!(brute.is_some(), sat.is_some(), "{sigma} for {{{family}}}");
    for full in [brute, sat].into_iter().flatten() {
        assert!(full.is_complete());
        assert!(full.is_avoiding(family).unwrap());
        assert!(sigma.is_leq(&full).unwrap());
    }
}

#[test]
fn completability_layer_matches_brute_force_exhaustively() {
    let family = Family::parse("+-+-,--+-", 3).unwrap();
    let mut checker = CompletionChecker::new(5, 3, &family, SessionConfig::default()).unwrap();
    for_each_partial(5, 3, |s| {
        sat_agrees_with_brute(&family, s, &mut checker);
        Ok(())
    })
    .unwrap();
}

#[test]
fn completability_layer_matches_brute_force_on_random_n6() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for family in rank3_settings().into_iter().step_by(13) {
        let mut checker = CompletionChecker::new(6, 3, &family, SessionConfig::default()).unwrap();
        for _ in 0..300 {
            sat_agrees_with_brute(&family, &random_partial(&mut rng, 6, 3), &mut checker);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    // Completability is monotone: fixing more entries never helps.
    #[test]
    fn completability_is_monotone(seed in any::<u64>(), family_index in 0usize..144) {
        let family = rank3_settings().swap_remove(family_index);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sigma = random_partial(&mut rng, 6, 3);
        let mut weaker = sigma.clone();
        for d in 0..weaker.len() {
            if d % 3 == (seed % 3) as usize {
                weaker.set(d, gadgetsmith::SignState::Unset);
            }
        }
        let strong = brute_complete(&sigma, &family).unwrap().is_some();
        let weak = brute_complete(&weaker, &family).unwrap().is_some();
        prop_assert!(!strong || weak);
    }
}
