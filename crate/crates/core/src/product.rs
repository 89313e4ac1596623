//! The verification structure: two copies of a system run side by side with
//! the formula automaton reading their joint labels.

use std::fmt::Write as _;

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ltlf::{Alphabet, AtomContext, Dfa, Formula, HyperFormula, Letter, Quantifier};
use crate::region::{BoxRegion, StateRegion};
use crate::system::{State, System};

/// A product state `(x1, x2, q)`, or the absorbing sink reached when a copy
/// leaves the working domain.
#[derive(Clone, Debug, PartialEq)]
pub enum ProductState {
    Live { x1: State, x2: State, q: u32 },
    Sink,
}

impl ProductState {
    pub fn new(x1: State, x2: State, q: u32) -> Self {
        ProductState::Live { x1, x2, q }
    }

    pub fn is_sink(&self) -> bool {
        matches!(self, ProductState::Sink)
    }
}

/// When a run of length `T+1` counts as accepted.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Acceptance {
    /// `delta(q_T, L(x1_T, x2_T))` is accepting: the automaton reads all
    /// `T+1` labels.
    #[default]
    TrailingLabel,
    /// `q_T` is accepting: only the first `T` labels are read.
    StateOnly,
}

pub struct VerificationStructure<S: System> {
    system: S,
    body: Formula,
    dfa: Dfa,
    quantifier: Quantifier,
    secret: Option<StateRegion>,
    initial: StateRegion,
    sink_domain: Option<BoxRegion>,
    acceptance: Acceptance,
}

impl<S: System> VerificationStructure<S> {
    /// Builds the product for `formula`; `sink_domain`, when given, sends any
    /// copy that leaves it to the rejecting sink.
    pub fn new(
        system: S,
        formula: &HyperFormula,
        secret: Option<StateRegion>,
        initial: StateRegion,
        sink_domain: Option<BoxRegion>,
    ) -> Result<Self> {
        let dfa = Dfa::compile(&formula.body)?;
        if dfa.alphabet().uses_secret() && secret.is_none() {
            return Err(Error::MissingSecret);
        }
        if initial.dim() != system.state_dim() {
            return Err(Error::Dimension { what: "initial region", expected: system.state_dim(), got: initial.dim() });
        }
        Ok(Self {
            system,
            body: formula.body.clone(),
            dfa,
            quantifier: formula.quantifier,
            secret,
            initial,
            sink_domain,
            acceptance: Acceptance::default(),
        })
    }

    pub fn with_acceptance(mut self, acceptance: Acceptance) -> Self {
        self.acceptance = acceptance;
        self
    }

    pub fn with_sink_domain(mut self, sink_domain: Option<BoxRegion>) -> Self {
        self.sink_domain = sink_domain;
        self
    }

    pub fn system(&self) -> &S {
        &self.system
    }

    /// The quantifier-free body of the formula.
    pub fn body(&self) -> &Formula {
        &self.body
    }

    pub fn dfa(&self) -> &Dfa {
        &self.dfa
    }

    pub fn alphabet(&self) -> &Alphabet {
        self.dfa.alphabet()
    }

    pub fn quantifier(&self) -> Quantifier {
        self.quantifier
    }

    pub fn initial(&self) -> &StateRegion {
        &self.initial
    }

    pub fn sink_domain(&self) -> Option<&BoxRegion> {
        self.sink_domain.as_ref()
    }

    pub fn acceptance(&self) -> Acceptance {
        self.acceptance
    }

    pub fn secret(&self) -> Option<&StateRegion> {
        self.secret.as_ref()
    }

    pub fn horizon(&self) -> usize {
        self.system.horizon()
    }

    pub fn num_automaton_states(&self) -> usize {
        self.dfa.num_states()
    }

    pub fn context(&self) -> AtomContext<'_, S> {
        AtomContext::new(&self.system, self.secret.as_ref())
    }

    /// The labeling function `L(x1, x2)`.
    pub fn label(&self, x1: &[f64], x2: &[f64]) -> Result<Letter> {
        self.context().label(self.dfa.alphabet(), x1, x2)
    }

    pub fn initial_state(&self, x0: &[f64], x0_2: &[f64]) -> ProductState {
        ProductState::new(x0.to_vec(), x0_2.to_vec(), self.dfa.initial())
    }

    fn in_domain(&self, x: &[f64]) -> bool {
        self.sink_domain.as_ref().is_none_or(|d| d.contains(x))
    }

    /// `(f(x1, w1), f(x2, w2), delta(q, L(x1, x2)))`.
    pub fn step(&self, v: &ProductState, w1: &[f64], w2: &[f64]) -> Result<ProductState> {
        let ProductState::Live { x1, x2, q } = v else {
            return Ok(ProductState::Sink);
        };
        let q2 = self.dfa.next(*q, self.label(x1, x2)?);
        let (y1, y2) = (self.system.step(x1, w1)?, self.system.step(x2, w2)?);
        if !(self.in_domain(&y1) && self.in_domain(&y2)) {
            return Ok(ProductState::Sink);
        }
        Ok(ProductState::new(y1, y2, q2))
    }

    /// Acceptance of a run that ends in `v`.
    pub fn is_accepting(&self, v: &ProductState) -> Result<bool> {
        let ProductState::Live { x1, x2, q } = v else {
            return Ok(false);
        };
        Ok(match self.acceptance {
            Acceptance::TrailingLabel => self.dfa.is_accepting(self.dfa.next(*q, self.label(x1, x2)?)),
            Acceptance::StateOnly => self.dfa.is_accepting(*q),
        })
    }
}

/// The environment's strategy for the second copy: an initial state and a
/// rule choosing `w2` at each step.
///
/// Policies in the verification game see the product state and time only.
/// A policy reporting `is_anticipative` also reads the current `w1`; such
/// couplings are diagnostic tools and lie outside the policy class.
pub trait EnvironmentPolicy: Sync {
    fn init_choice(&self, x0: &[f64]) -> State;
    fn choose(&self, x1: &[f64], x2: &[f64], q: u32, t: usize, w1: &[f64]) -> Vec<f64>;
    fn is_anticipative(&self) -> bool {
        false
    }
}

/// `x0' = x0` and `w2 = w1`: the second copy duplicates the first.
pub struct MirrorPolicy;

impl EnvironmentPolicy for MirrorPolicy {
    fn init_choice(&self, x0: &[f64]) -> State {
        x0.to_vec()
    }

    fn choose(&self, _x1: &[f64], _x2: &[f64], _q: u32, _t: usize, w1: &[f64]) -> Vec<f64> {
        w1.to_vec()
    }

    fn is_anticipative(&self) -> bool {
        true
    }
}

/// Policy given by closures over `x0` and `(x1, x2, q, t)`.
pub struct FnPolicy<I, R> {
    pub init: I,
    pub rule: R,
}

impl<I, R> EnvironmentPolicy for FnPolicy<I, R>
where
    I: Fn(&[f64]) -> State + Sync,
    R: Fn(&[f64], &[f64], u32, usize) -> Vec<f64> + Sync,
{
    fn init_choice(&self, x0: &[f64]) -> State {
        (self.init)(x0)
    }

    fn choose(&self, x1: &[f64], x2: &[f64], q: u32, t: usize, _w1: &[f64]) -> Vec<f64> {
        (self.rule)(x1, x2, q, t)
    }
}

#[derive(Clone, Debug)]
pub struct ProductRun {
    pub states: Vec<ProductState>,
    pub w1: Vec<Vec<f64>>,
    pub w2: Vec<Vec<f64>>,
    pub accepted: bool,
}

/// Simulates one run from `(x0, policy.init_choice(x0), q0)` for `T` steps.
/// When `w2_support` is given, choices outside it are rejected.
pub fn rollout<S: System>(
    vs: &VerificationStructure<S>,
    x0: &[f64],
    policy: &dyn EnvironmentPolicy,
    rng: &mut dyn RngCore,
    w2_support: Option<&BoxRegion>,
) -> Result<ProductRun> {
    let mut v = vs.initial_state(x0, &policy.init_choice(x0));
    let horizon = vs.horizon();
    let mut run = ProductRun { states: vec![v.clone()], w1: Vec::new(), w2: Vec::new(), accepted: false };
    for t in 0..horizon {
        let w1 = vs.system().sample_disturbance(rng);
        let w2 = match &v {
            ProductState::Live { x1, x2, q } => policy.choose(x1, x2, *q, t, &w1),
            ProductState::Sink => w1.clone(),
        };
        if let Some(sup) = w2_support {
            // A little slack absorbs rounding in grids that end on the support boundary.
            let widened = BoxRegion {
                lo: sup.lo.iter().map(|l| l - 1e-9).collect(),
                hi: sup.hi.iter().map(|h| h + 1e-9).collect(),
            };
            if !widened.contains(&w2) {
                return Err(Error::PolicyOutOfSupport { t, w2 });
            }
        }
        v = vs.step(&v, &w1, &w2)?;
        run.states.push(v.clone());
        run.w1.push(w1);
        run.w2.push(w2);
    }
    run.accepted = vs.is_accepting(&v)?;
    Ok(run)
}

/// CSV with columns `t, x1_*, x2_*, q, accepted`; sink rows leave the state
/// cells empty and put `sink` in the `q` column. `accepted` is whether a run
/// ending at that row would be accepted.
pub fn run_csv<S: System>(vs: &VerificationStructure<S>, run: &ProductRun) -> Result<String> {
    let d = vs.system().state_dim();
    let mut header = vec!["t".to_string()];
    header.extend((1..=d).map(|i| format!("x1_{i}")));
    header.extend((1..=d).map(|i| format!("x2_{i}")));
    header.push("q".into());
    header.push("accepted".into());
    let mut out = header.join(",");
    out.push('\n');
    for (t, v) in run.states.iter().enumerate() {
        let _ = write!(out, "{t}");
        match v {
            ProductState::Live { x1, x2, q } => {
                for x in x1.iter().chain(x2) {
                    let _ = write!(out, ",{x}");
                }
                let _ = write!(out, ",{q}");
            }
            ProductState::Sink => {
                out.push_str(&",".repeat(2 * d));
                out.push_str(",sink");
            }
        }
        let _ = writeln!(out, ",{}", u8::from(vs.is_accepting(v)?));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ltlf::{parse, AtomicPredicate};
    use crate::presets::scalar_square;
    use crate::rng::stream_rng;

    fn cd_structure() -> VerificationStructure<crate::poss::Poss> {
        let m = scalar_square();
        let h = parse("forall s2. G out_close(0.5) -> F G state_close(0.8)").unwrap();
        let init = m.initial().clone();
        let dom = m.domain().clone();
        VerificationStructure::new(m, &h, None, init, Some(dom)).unwrap()
    }

    #[test]
    fn one_step_of_the_case_study() {
        let vs = cd_structure();
        let v = vs.initial_state(&[1.0], &[-1.0]);
        let next = vs.step(&v, &[0.0], &[0.0]).unwrap();
        let letter = vs.alphabet().letter_of(&[AtomicPredicate::OutClose(0.5)]);
        assert_eq!(vs.label(&[1.0], &[-1.0]).unwrap(), letter);
        match next {
            ProductState::Live { x1, x2, q } => {
                assert!((x1[0] - 0.9).abs() < 1e-15 && (x2[0] + 0.9).abs() < 1e-15);
                assert_eq!(q, vs.dfa().next(vs.dfa().initial(), letter));
            }
            ProductState::Sink => panic!("stayed inside the domain"),
        }
    }

    #[test]
    fn leaving_the_domain_is_absorbing_and_rejecting() {
        let vs = cd_structure();
        let v = vs.initial_state(&[3.9], &[0.0]);
        let sink = vs.step(&v, &[1.0], &[0.0]).unwrap();
        assert!(sink.is_sink());
        assert!(vs.step(&sink, &[0.0], &[0.0]).unwrap().is_sink());
        assert!(!vs.is_accepting(&sink).unwrap());
    }

    #[test]
    fn mirror_coupling_always_accepts_detectability() {
        let vs = cd_structure();
        let mut rng = stream_rng(5, 0);
        for i in 0..200 {
            let x0 = [-2.0 + 0.02 * i as f64];
            let run = rollout(&vs, &x0, &MirrorPolicy, &mut rng, None).unwrap();
            assert!(run.accepted || run.states.last().unwrap().is_sink());
        }
    }

    #[test]
    fn zero_horizon_reads_the_initial_label() {
        let m = scalar_square().with_horizon(0);
        let h = parse("forall s2. state_close(0.8)").unwrap();
        let init = m.initial().clone();
        let vs = VerificationStructure::new(m, &h, None, init, None).unwrap();
        let far = FnPolicy { init: |_: &[f64]| vec![1.0], rule: |_: &[f64], _: &[f64], _, _| vec![0.0] };
        let mut rng = stream_rng(1, 0);
        assert!(!rollout(&vs, &[-1.0], &far, &mut rng, None).unwrap().accepted);
        assert!(rollout(&vs, &[0.5], &far, &mut rng, None).unwrap().accepted);
        let literal = VerificationStructure::new(scalar_square().with_horizon(0), &h, None, scalar_square().initial().clone(), None)
            .unwrap()
            .with_acceptance(Acceptance::StateOnly);
        assert!(!rollout(&literal, &[0.5], &far, &mut rng, None).unwrap().accepted);
    }

    #[test]
    fn out_of_support_choice_is_reported() {
        let vs = cd_structure();
        let wild = FnPolicy { init: |x: &[f64]| x.to_vec(), rule: |_: &[f64], _: &[f64], _, _| vec![5.0] };
        let sup = BoxRegion::symmetric(1, 1.2);
        let mut rng = stream_rng(2, 0);
        assert!(matches!(rollout(&vs, &[0.0], &wild, &mut rng, Some(&sup)), Err(Error::PolicyOutOfSupport { t: 0, .. })));
    }

    #[test]
    fn csv_has_one_row_per_time() {
        let vs = cd_structure();
        let mut rng = stream_rng(3, 0);
        let run = rollout(&vs, &[0.0], &MirrorPolicy, &mut rng, None).unwrap();
        let csv = run_csv(&vs, &run).unwrap();
        assert_eq!(csv.lines().count(), 12);
        assert!(csv.starts_with("t,x1_1,x2_1,q,accepted\n"));
    }
}
