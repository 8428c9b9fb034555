mod common;

use common::{brute_consequence, fixture};
use gcomp::model::{DiagramBuilder, InfluenceDiagram, Kind, ObservableLaw, Policy, Regime, ResponseFunctional, Strategy};
use gcomp::optimize::{enumerate_strategies, optimal_strategy, Sense};
use gcomp::random::{complete_diagram, random_strategy};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const F1_OPTIMUM: f64 = 0.804043062;

fn obs(id: &InfluenceDiagram) -> ObservableLaw {
    ObservableLaw::new(id, Regime::Observational).unwrap()
}

/// Best value over every deterministic strategy whose policies read the
/// full observed past, by brute force.
fn brute_best(id: &InfluenceDiagram, k: &ResponseFunctional, sense: Sense) -> f64 {
    let actions = id.actions();
    let parents: Vec<Vec<usize>> = actions.iter().map(|&a| id.observed_predecessors(a)).collect();
    let rows: Vec<usize> = parents.iter().map(|p| p.iter().map(|&q| id.var(q).card()).product()).collect();
    let digits: usize = rows.iter().sum();
    let mut best: Option<f64> = None;
    for code in 0..(1usize << digits) {
        let mut bit = 0;
        let policies = actions
            .iter()
            .zip(&parents)
            .zip(&rows)
            .map(|((&a, p), &r)| {
                let choice: Vec<usize> = (0..r).map(|j| (code >> (bit + j)) & 1).collect();
                bit += r;
                Policy::deterministic(a, p.clone(), 2, &choice)
            })
            .collect();
        let s = Strategy::new(id, "x", policies).unwrap();
        let v = brute_consequence(id, Regime::Interventional(&s), k);
        best = Some(match (best, sense) {
            (None, _) => v,
            (Some(b), Sense::Max) => b.max(v),
            (Some(b), Sense::Min) => b.min(v),
        });
    }
    best.unwrap()
}

#[test]
fn single_stage_argmax() {
    let mut b = DiagramBuilder::new();
    b.var("L", Kind::Observable, &["0", "1"])
        .var("A", Kind::Action, &["0", "1"])
        .var("Y", Kind::Response, &["0", "1"])
        .edge("L", "A")
        .edge("L", "Y")
        .edge("A", "Y")
        .cpt("L", &[], vec![vec![0.4, 0.6]])
        .cpt("A", &["L"], vec![vec![0.5, 0.5], vec![0.5, 0.5]])
        .cpt("Y", &["L", "A"], vec![vec![0.2, 0.8], vec![0.7, 0.3], vec![0.9, 0.1], vec![0.4, 0.6]]);
    let id = b.build().unwrap();
    let k = ResponseFunctional::from_labels(&id).unwrap();
    let best = optimal_strategy(&id, &obs(&id), &k, Sense::Max).unwrap();
    assert!((best.value - (0.4 * 0.8 + 0.6 * 0.6)).abs() < 1e-12);
    let a = id.var_id("A").unwrap();
    let p = best.strategy.policy_for(a).unwrap();
    assert_eq!(p.rows, vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
    let worst = optimal_strategy(&id, &obs(&id), &k, Sense::Min).unwrap();
    assert!((worst.value - (0.4 * 0.3 + 0.6 * 0.1)).abs() < 1e-12);
    assert_eq!(worst.strategy.name, "optimal-min");
}

#[test]
fn ties_choose_the_first_state() {
    let mut b = DiagramBuilder::new();
    b.var("A", Kind::Action, &["0", "1", "2"])
        .var("Y", Kind::Response, &["0", "1"])
        .edge("A", "Y")
        .cpt("A", &[], vec![vec![0.2, 0.3, 0.5]])
        .cpt("Y", &["A"], vec![vec![0.5, 0.5], vec![0.5, 0.5], vec![0.5, 0.5]]);
    let id = b.build().unwrap();
    let k = ResponseFunctional::from_labels(&id).unwrap();
    let best = optimal_strategy(&id, &obs(&id), &k, Sense::Max).unwrap();
    assert_eq!(best.strategy.policies()[0].rows, vec![vec![1.0, 0.0, 0.0]]);
    assert!((best.value - 0.5).abs() < 1e-15);
}

#[test]
fn no_actions() {
    let mut b = DiagramBuilder::new();
    b.var("Y", Kind::Response, &["0", "1"]).cpt("Y", &[], vec![vec![0.3, 0.7]]);
    let id = b.build().unwrap();
    let k = ResponseFunctional::from_labels(&id).unwrap();
    let best = optimal_strategy(&id, &obs(&id), &k, Sense::Max).unwrap();
    assert!(best.strategy.policies().is_empty());
    assert!((best.value - 0.7).abs() < 1e-15);
}

#[test]
fn f1_optimum_matches_brute_force() {
    let doc = fixture("f1");
    let id = &doc.diagram;
    let k = ResponseFunctional::from_labels(id).unwrap();
    let oracle = brute_best(id, &k, Sense::Max);
    assert!((oracle - F1_OPTIMUM).abs() < 1e-12, "{oracle}");
    let best = optimal_strategy(id, &obs(id), &k, Sense::Max).unwrap();
    assert!((best.value - F1_OPTIMUM).abs() < 1e-12);
    assert!(best.strategy.is_deterministic());
    let achieved = brute_consequence(id, Regime::Interventional(&best.strategy), &k);
    assert!((achieved - F1_OPTIMUM).abs() < 1e-12);
    let (_, enumerated) = enumerate_strategies(id, &k, Sense::Max).unwrap();
    assert!((enumerated - F1_OPTIMUM).abs() < 1e-12);

    let low = brute_best(id, &k, Sense::Min);
    let worst = optimal_strategy(id, &obs(id), &k, Sense::Min).unwrap();
    assert!((worst.value - low).abs() < 1e-12);
    assert!((enumerate_strategies(id, &k, Sense::Min).unwrap().1 - low).abs() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn optimum_beats_enumeration_and_randomization(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.random_range(1..=2);
        let id = complete_diagram(&mut rng, n);
        let k = ResponseFunctional(vec![rng.random(), rng.random()]);
        let best = optimal_strategy(&id, &obs(&id), &k, Sense::Max).unwrap();
        let (_, enumerated) = enumerate_strategies(&id, &k, Sense::Max).unwrap();
        prop_assert!((best.value - enumerated).abs() <= 1e-9);
        for j in 0..50 {
            let s = random_strategy(&id, &mut rng, &format!("r{j}"), 0.0);
            prop_assert!(brute_consequence(&id, Regime::Interventional(&s), &k) <= best.value + 1e-9);
        }
    }

    #[test]
    fn positive_affine_rescaling_keeps_the_policy(seed in any::<u64>(), a in 0.01f64..10.0, b in -5.0f64..5.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.random_range(1..=2);
        let id = complete_diagram(&mut rng, n);
        let k = ResponseFunctional(vec![rng.random(), rng.random()]);
        let scaled = ResponseFunctional(k.0.iter().map(|x| a * x + b).collect());
        let law = obs(&id);
        for sense in [Sense::Max, Sense::Min] {
            let p = optimal_strategy(&id, &law, &k, sense).unwrap();
            let q = optimal_strategy(&id, &law, &scaled, sense).unwrap();
            prop_assert_eq!(p.strategy.policies(), q.strategy.policies());
            prop_assert!((q.value - (a * p.value + b)).abs() < 1e-9);
        }
    }
}
