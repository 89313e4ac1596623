use std::collections::BTreeSet;

use obscert::ltlf::{evaluate_letters, evaluate_with, parse, progress, AtomicPredicate, Dfa, Formula};
use proptest::prelude::*;

fn atom_pool() -> Vec<AtomicPredicate> {
    vec![AtomicPredicate::OutClose(0.5), AtomicPredicate::StateClose(0.8), AtomicPredicate::SecFirst]
}

fn formula() -> impl Strategy<Value = Formula> {
    let leaf = prop_oneof![
        Just(Formula::True),
        Just(Formula::False),
        (0..3usize).prop_map(|i| Formula::atom(atom_pool()[i])),
    ];
    leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(Formula::not),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::or(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::and(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::implies(a, b)),
            inner.clone().prop_map(Formula::next),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::until(a, b)),
            inner.clone().prop_map(Formula::eventually),
            inner.prop_map(Formula::always),
        ]
    })
}

type Trace = Vec<BTreeSet<AtomicPredicate>>;

fn trace(min: usize) -> impl Strategy<Value = Trace> {
    prop::collection::vec(prop::collection::vec(any::<bool>(), 3), min..7).prop_map(|rows| {
        rows.into_iter()
            .map(|bits| atom_pool().into_iter().zip(bits).filter(|(_, b)| *b).map(|(a, _)| a).collect())
            .collect()
    })
}

fn direct(f: &Formula, t: &[BTreeSet<AtomicPredicate>]) -> bool {
    evaluate_with(f, t.len(), &mut |a, i| t[i].contains(a)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 1000, ..ProptestConfig::default() })]

    #[test]
    fn dfa_accepts_exactly_the_satisfying_traces(f in formula(), t in trace(1)) {
        let dfa = Dfa::compile(&f).unwrap();
        let letters: Vec<_> = t.iter().map(|s| dfa.alphabet().letter_of(s.iter())).collect();
        prop_assert_eq!(dfa.accepts(&letters), direct(&f, &t), "formula {}", f);
    }

    #[test]
    fn progression_is_sound(f in formula(), t in trace(2)) {
        let g = progress(&f, t[0].iter());
        prop_assert_eq!(direct(&g, &t[1..]), direct(&f, &t), "formula {} progressed to {}", f, g);
    }

    #[test]
    fn normalization_preserves_meaning(f in formula(), t in trace(1)) {
        prop_assert_eq!(direct(&f.normalize(), &t), direct(&f, &t));
    }

    #[test]
    fn display_round_trips_through_the_parser(f in formula()) {
        let text = format!("forall s2. {f}");
        let h = parse(&text).unwrap();
        prop_assert_eq!(h.body.to_string(), f.to_string());
    }

    #[test]
    fn compilation_is_deterministic(f in formula()) {
        let a = Dfa::compile(&f).unwrap();
        let b = Dfa::compile(&f).unwrap();
        prop_assert_eq!(a.hash(), b.hash());
        prop_assert_eq!(a.to_table(), b.to_table());
    }
}

#[test]
fn letter_and_set_evaluations_agree() {
    let f = parse("forall s2. G out_close(0.5) -> F G state_close(0.8)").unwrap().body;
    let dfa = Dfa::compile(&f).unwrap();
    let a = dfa.alphabet();
    for n in 1..=4u32 {
        for code in 0..(a.num_letters() as u32).pow(n) {
            let letters: Vec<u32> = (0..n).map(|i| (code / (a.num_letters() as u32).pow(i)) % a.num_letters() as u32).collect();
            assert_eq!(dfa.accepts(&letters), evaluate_letters(&f, a, &letters).unwrap());
        }
    }
}
