mod common;

use common::{exhaustive_admissible, fixture};
use gcomp::admissible::{
    check_admissible, compute_candidate_sequence, improve_sequence, search_admissible_ordering, valid_orderings,
};
use gcomp::model::{InfluenceDiagram, VarId};
use gcomp::random::{extended_diagram, ExtendedOptions, HiddenArrows};
use gcomp::Error;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn names(id: &InfluenceDiagram, sets: &[Vec<VarId>]) -> Vec<Vec<String>> {
    sets.iter().map(|s| id.names(s).into_iter().map(String::from).collect()).collect()
}

fn order(id: &InfluenceDiagram, n: &[&str]) -> Vec<VarId> {
    id.var_ids(n).unwrap()
}

#[test]
fn complete_structure_recovers_declared_slots() {
    let doc = fixture("f1");
    let id = &doc.diagram;
    let seq = compute_candidate_sequence(id, None, &order(id, &["A1", "A2"])).unwrap();
    assert_eq!(names(id, &seq.sets), [vec!["L1"], vec!["L2"]]);
    assert!(seq.admissible());
    let declared = check_admissible(id, None, &seq.order, &seq.sets).unwrap();
    assert!(declared.admissible());
}

#[test]
fn f3_order_b_then_a() {
    let doc = fixture("f3");
    let id = &doc.diagram;
    let seq = compute_candidate_sequence(id, None, &order(id, &["B", "A"])).unwrap();
    assert_eq!(names(id, &seq.m), [vec![], vec!["L"]]);
    assert_eq!(names(id, &seq.sets), [vec![], vec!["L"]]);
    assert!(seq.admissible());
}

#[test]
fn f3_order_a_then_b_has_no_admissible_sequence() {
    let doc = fixture("f3");
    let id = &doc.diagram;
    let ab = order(id, &["A", "B"]);
    let seq = compute_candidate_sequence(id, None, &ab).unwrap();
    assert!(seq.m[0].is_empty());
    assert_eq!(seq.first_failure(), Some(1));
    let l = id.var_id("L").unwrap();
    for sets in [vec![vec![], vec![]], vec![vec![], vec![l]], vec![vec![l], vec![]]] {
        match check_admissible(id, None, &ab, &sets) {
            Ok(r) => assert_eq!(r.first_failure(), Some(1)),
            Err(Error::Input(_)) => {}
            Err(e) => panic!("{e}"),
        }
    }
    assert!(!exhaustive_admissible(id, None, &ab));
}

#[test]
fn f3_search_finds_b_then_a() {
    let doc = fixture("f3");
    let id = &doc.diagram;
    let found = search_admissible_ordering(id, None).unwrap().unwrap();
    assert_eq!(id.names(&found.order), ["B", "A"]);
    assert_eq!(names(id, &found.sets), [vec![], vec!["L"]]);
    let with_strategy = search_admissible_ordering(id, doc.strategies.first()).unwrap().unwrap();
    assert_eq!(with_strategy.order, found.order);
}

#[test]
fn f5_improvement_drops_the_redundant_covariate() {
    let doc = fixture("f5");
    let id = &doc.diagram;
    let cand = compute_candidate_sequence(id, None, &id.actions()).unwrap();
    assert_eq!(names(id, &cand.sets), [vec!["Z"], vec!["X"]]);
    assert!(cand.admissible());
    let better = improve_sequence(id, None, &cand).unwrap();
    assert!(better.admissible());
    assert_eq!(names(id, &better.sets), [vec![], vec!["X"]]);
}

#[test]
fn f4b_has_no_admissible_ordering() {
    let doc = fixture("f4b");
    let id = &doc.diagram;
    assert!(search_admissible_ordering(id, None).unwrap().is_none());
    for o in valid_orderings(id, None).unwrap() {
        assert!(!exhaustive_admissible(id, None, &o));
    }
}

#[test]
fn invalid_sequences_and_orders_are_rejected() {
    let doc = fixture("f3");
    let id = &doc.diagram;
    let ba = order(id, &["B", "A"]);
    let l = id.var_id("L").unwrap();
    let u = id.var_id("U").unwrap();
    assert!(matches!(check_admissible(id, None, &ba, &[vec![l], vec![]]), Err(Error::Input(_))));
    assert!(matches!(check_admissible(id, None, &ba, &[vec![], vec![u]]), Err(Error::Input(_))));
    assert!(matches!(check_admissible(id, None, &ba, &[vec![]]), Err(Error::Input(_))));
    assert!(matches!(compute_candidate_sequence(id, None, &ba[..1]), Err(Error::Input(_))));
}

#[test]
fn action_without_effect_violates_the_precondition() {
    let text = "\
var A kind=act states=0,1
var Y kind=resp states=0,1
order A Y
cpt A |
row : 0.5 0.5
cpt Y |
row : 0.5 0.5
";
    let doc = gcomp::format::parse_model(text).unwrap();
    let err = compute_candidate_sequence(&doc.diagram, None, &doc.diagram.actions()).unwrap_err();
    assert!(matches!(err, Error::Precondition(_)));
}

fn small_random(seed: u64) -> InfluenceDiagram {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let opts = ExtendedOptions {
        n_actions: rng.random_range(1..=3),
        max_observed_per_slot: 2,
        max_hidden_per_slot: 1,
        edge_prob: 0.4,
        hidden: HiddenArrows::Any,
        actions_reach_response: true,
        random_int_parents: true,
        max_nodes: Some(7),
    };
    extended_diagram(&mut rng, &opts)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn candidate_is_admissible_whenever_any_sequence_is(seed in any::<u64>()) {
        let id = small_random(seed);
        let orders = valid_orderings(&id, None).unwrap();
        let mut any = false;
        for o in &orders {
            let cand = compute_candidate_sequence(&id, None, o).unwrap();
            for w in cand.m.windows(2) {
                prop_assert!(w[0].iter().all(|v| w[1].contains(v)));
            }
            let exhaustive = exhaustive_admissible(&id, None, o);
            prop_assert_eq!(cand.admissible(), exhaustive);
            any |= exhaustive;
            if cand.admissible() {
                let better = improve_sequence(&id, None, &cand).unwrap();
                prop_assert!(better.admissible());
                for i in 1..=o.len() {
                    let (b, c) = (better.cumulative(i), cand.cumulative(i));
                    prop_assert!(b.iter().all(|v| c.contains(v)));
                }
            }
        }
        prop_assert_eq!(search_admissible_ordering(&id, None).unwrap().is_some(), any);
    }
}
