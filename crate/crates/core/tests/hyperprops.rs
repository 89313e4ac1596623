use std::collections::BTreeSet;

use num_rational::BigRational;
use obscert::hyperprops::{
    diam, empirical_probability_finite, indistinguishable, state_estimate, Decider, EstimateKind, FiniteObserver,
    PropertySpec,
};
use obscert::ltlf::{evaluate, AtomContext, Quantifier};
use obscert::oracle::{theorem1_check, FiniteInstance, RandomInstanceConfig};
use obscert::product::VerificationStructure;
use obscert::region::StateRegion;
use obscert::rng::stream_rng;
use obscert::scalar::Probability;
use obscert::system::State;
use rand::Rng;

fn states(inst: &FiniteInstance<BigRational>, path: &[usize]) -> Vec<State> {
    path.iter().map(|&i| inst.coords[i].clone()).collect()
}

/// `s |= Q s'. body` by enumerating every companion trajectory.
fn satisfies(inst: &FiniteInstance<BigRational>, spec: &PropertySpec, s: &[usize]) -> bool {
    let h = spec.to_formula().unwrap();
    let ctx = AtomContext::new(inst, spec.secret());
    let mut verdicts = inst.all_trajectories().unwrap().into_iter().map(|s2| {
        let pairs: Vec<(State, State)> = s.iter().zip(&s2).map(|(&a, &b)| (inst.coords[a].clone(), inst.coords[b].clone())).collect();
        evaluate(&h.body, &pairs, ctx).unwrap()
    });
    match h.quantifier {
        Quantifier::Forall => verdicts.all(|v| v),
        Quantifier::Exists => verdicts.any(|v| v),
    }
}

/// Brute-force estimate: positions `at` of every indistinguishable trajectory.
fn brute_estimate(inst: &FiniteInstance<BigRational>, s: &[usize], eps: f64, at: usize) -> BTreeSet<usize> {
    let xs = states(inst, s);
    inst.all_trajectories()
        .unwrap()
        .into_iter()
        .filter(|s2| indistinguishable(inst, &xs, &states(inst, s2), eps).unwrap())
        .map(|s2| s2[at])
        .collect()
}

fn instances(seed: u64, count: usize) -> Vec<FiniteInstance<BigRational>> {
    let mut rng = stream_rng(seed, 0);
    let cfg = RandomInstanceConfig { max_states: 5, max_disturbances: 3, max_horizon: 3, coord_range: 3, output_levels: 2 };
    (0..count).map(|_| FiniteInstance::random(&mut rng, &cfg)).collect()
}

fn secret_of(inst: &FiniteInstance<BigRational>, rng: &mut impl Rng) -> StateRegion {
    let n = inst.num_states();
    let k = rng.random_range(1..n.max(2));
    inst.region_of(&(0..k).collect::<Vec<_>>()).unwrap()
}

#[test]
fn finite_estimates_match_brute_force() {
    for inst in instances(1, 25) {
        let obs = FiniteObserver::new(&inst);
        let horizon = inst.horizon;
        for s in inst.all_trajectories().unwrap() {
            let xs = states(&inst, &s);
            for (kind, at) in [(EstimateKind::Initial, 0), (EstimateKind::Current, horizon)] {
                let est = state_estimate(&inst, &obs, &xs, 0.5, kind).unwrap();
                let got: BTreeSet<usize> = est.points.iter().map(|p| inst.index_of(p).unwrap()).collect();
                assert_eq!(got, brute_estimate(&inst, &s, 0.5, at), "{kind:?} estimate of {s:?}");
            }
        }
    }
}

#[test]
fn opacity_equivalences_hold_on_random_instances() {
    let mut rng = stream_rng(2, 1);
    let mut cases = 0;
    for inst in instances(2, 30) {
        let secret = secret_of(&inst, &mut rng);
        let io = PropertySpec::InitialOpacity { eps: 0.5, p: 0.5, secret: secret.clone() };
        let co = PropertySpec::CurrentOpacity { eps: 0.5, p: 0.5, secret: secret.clone() };
        for s in inst.all_trajectories().unwrap() {
            let x0 = brute_estimate(&inst, &s, 0.5, 0);
            let xt = brute_estimate(&inst, &s, 0.5, inst.horizon);
            let outside = |set: &BTreeSet<usize>| set.iter().any(|&i| !secret.contains(&inst.coords[i]));
            assert_eq!(satisfies(&inst, &io, &s), outside(&x0), "initial opacity on {s:?}");
            assert_eq!(satisfies(&inst, &co, &s), outside(&xt), "current opacity on {s:?}");
            cases += 1;
        }
    }
    assert!(cases > 100);
}

/// Detectability formulas compare every consistent state with the true one,
/// so they sit between the diameter conditions at `lam` and `2 lam`.
#[test]
fn detectability_formulas_are_bracketed_by_diameter_conditions() {
    for inst in instances(3, 30) {
        for lam in [0.5, 1.0, 2.0] {
            let id = PropertySpec::InitialDetect { eps: 0.5, lam, p: 0.5 };
            let cd = PropertySpec::CurrentDetect { eps: 0.5, lam, p: 0.5 };
            for s in inst.all_trajectories().unwrap() {
                for (spec, at) in [(&id, 0), (&cd, inst.horizon)] {
                    let set: Vec<State> = brute_estimate(&inst, &s, 0.5, at).into_iter().map(|i| inst.coords[i].clone()).collect();
                    let d = diam(&set).unwrap();
                    let sat = satisfies(&inst, spec, &s);
                    if d <= lam {
                        assert!(sat, "{spec:?}: diam {d} but formula fails on {s:?}");
                    }
                    if sat {
                        assert!(d <= 2.0 * lam, "{spec:?}: formula holds but diam {d}");
                    }
                }
            }
        }
    }
}

#[test]
fn detectability_formula_can_hold_with_a_wide_estimate() {
    // Three states with one output; the middle one stays put, the others swap.
    let half = BigRational::from_ratio(1, 2);
    let inst = FiniteInstance::new(
        vec![vec![-1.0], vec![0.0], vec![1.0]],
        vec![vec![0.0], vec![0.0], vec![0.0]],
        vec![vec![2, 2], vec![1, 1], vec![0, 0]],
        vec![half.clone(), half],
        vec![0, 1, 2],
        1,
    )
    .unwrap();
    let spec = PropertySpec::InitialDetect { eps: 0.5, lam: 1.0, p: 0.5 };
    let s = [1, 1];
    assert!(satisfies(&inst, &spec, &s));
    let obs = FiniteObserver::new(&inst);
    let est = state_estimate(&inst, &obs, &states(&inst, &s), 0.5, EstimateKind::Initial).unwrap();
    assert_eq!(est.diam().unwrap(), 2.0);
    // The estimator-based decision follows the diameter, not the formula.
    let decider = Decider::new(&inst, &obs, &spec).unwrap();
    assert!(!decider.decide(&states(&inst, &s)).unwrap());
}

#[test]
fn finite_estimates_agree_with_exact_probabilities() {
    let mut rng = stream_rng(4, 2);
    for (k, inst) in instances(4, 6).into_iter().enumerate() {
        let secret = secret_of(&inst, &mut rng);
        let spec = PropertySpec::CurrentOpacity { eps: 0.5, p: 0.5, secret: secret.clone() };
        let h = spec.to_formula().unwrap();
        let vs = VerificationStructure::new(inst.clone(), &h, Some(secret), inst.region_of(&inst.initial).unwrap(), None).unwrap();
        let exact = theorem1_check(&vs, 1e-12).unwrap();
        for row in &exact.rows {
            let r = empirical_probability_finite(&inst, &spec, row.x0, 20_000, k as u64).unwrap();
            let p = row.rhs.to_f64();
            let sd = (p * (1.0 - p) / 20_000.0).sqrt().max(1e-9);
            assert!((r.estimate - p).abs() <= 5.0 * sd, "estimate {} exact {p}", r.estimate);
        }
    }
}

#[test]
fn estimates_grow_with_eps() {
    for inst in instances(5, 20) {
        let obs = FiniteObserver::new(&inst);
        for s in inst.all_trajectories().unwrap() {
            let xs = states(&inst, &s);
            for kind in [EstimateKind::Initial, EstimateKind::Current] {
                let mut prev: Option<(BTreeSet<usize>, f64)> = None;
                for eps in [0.25, 0.5, 1.5, 10.0] {
                    let est = state_estimate(&inst, &obs, &xs, eps, kind).unwrap();
                    let set: BTreeSet<usize> = est.points.iter().map(|p| inst.index_of(p).unwrap()).collect();
                    let d = est.diam().unwrap();
                    if let Some((p, pd)) = &prev {
                        assert!(p.is_subset(&set), "eps {eps}: {p:?} not within {set:?}");
                        assert!(*pd <= d);
                    }
                    prev = Some((set, d));
                }
            }
        }
    }
}

proptest::proptest! {
    #[test]
    fn indistinguishability_is_reflexive_and_symmetric(
        a in proptest::collection::vec(-4.0f64..4.0, 1..8),
        shift in proptest::collection::vec(-1.0f64..1.0, 8),
        eps in 0.0f64..2.0,
    ) {
        let sys = obscert::presets::scalar_square();
        let s: Vec<State> = a.iter().map(|&x| vec![x]).collect();
        let s2: Vec<State> = a.iter().zip(&shift).map(|(&x, &d)| vec![x + d]).collect();
        proptest::prop_assert!(indistinguishable(&sys, &s, &s, eps).unwrap());
        proptest::prop_assert_eq!(
            indistinguishable(&sys, &s, &s2, eps).unwrap(),
            indistinguishable(&sys, &s2, &s, eps).unwrap()
        );
    }
}
