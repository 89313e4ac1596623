//! Monte Carlo estimates of satisfaction probabilities.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{Beta, ContinuousCDF};

use super::observer::{estimate_from_outputs, hyper_holds, CellSpace, EstimateKind, FiniteObserver, GridObserver, ObserverConfig};
use super::spec::PropertySpec;
use crate::error::{Error, Result};
use crate::ltlf::{AtomContext, Dfa, HyperFormula};
use crate::oracle::FiniteInstance;
use crate::poss::{simulate, Poss};
use crate::region::StateRegion;
use crate::rng::{stream_rng, StreamRng};
use crate::scalar::Probability;
use crate::system::{State, System};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityReport {
    pub estimate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub n: usize,
    pub successes: usize,
    pub seed: u64,
    pub x0: Vec<f64>,
}

/// Two-sided Clopper-Pearson interval for `k` successes out of `n`.
pub fn clopper_pearson(k: usize, n: usize, confidence: f64) -> (f64, f64) {
    assert!(n > 0 && k <= n, "need 0 <= k <= n and n >= 1");
    let a = 0.5 * (1.0 - confidence);
    let (kf, nf) = (k as f64, n as f64);
    let lo = if k == 0 { 0.0 } else { Beta::new(kf, nf - kf + 1.0).expect("valid shape").inverse_cdf(a) };
    let hi = if k == n { 1.0 } else { Beta::new(kf + 1.0, nf - kf).expect("valid shape").inverse_cdf(1.0 - a) };
    (lo, hi)
}

/// Runs `n` independent trials; trial `i` uses the generator stream `i` of
/// `seed`, so the result does not depend on scheduling.
pub fn estimate_by<F>(n: usize, seed: u64, x0: &[f64], trial: F) -> Result<ProbabilityReport>
where
    F: Fn(&mut StreamRng) -> Result<bool> + Sync,
{
    if n == 0 {
        return Err(Error::Config("at least one sample is required".into()));
    }
    let successes = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(seed, i as u64);
            trial(&mut rng).map(usize::from).map_err(|e| Error::Sample { index: i, source: Box::new(e) })
        })
        .try_reduce(|| 0, |a, b| Ok(a + b))?;
    let (ci_low, ci_high) = clopper_pearson(successes, n, 0.95);
    Ok(ProbabilityReport { estimate: successes as f64 / n as f64, ci_low, ci_high, n, successes, seed, x0: x0.to_vec() })
}

/// Decides single trajectories against a property with a fixed observer.
pub struct Decider<'a, S: System + ?Sized> {
    system: &'a S,
    space: &'a dyn CellSpace,
    spec: &'a PropertySpec,
    formula: HyperFormula,
    dfa: Option<Dfa>,
}

impl<'a, S: System + ?Sized> Decider<'a, S> {
    pub fn new(system: &'a S, space: &'a dyn CellSpace, spec: &'a PropertySpec) -> Result<Self> {
        spec.validate()?;
        let formula = spec.to_formula()?;
        let dfa = match spec {
            PropertySpec::Custom { .. } => Some(Dfa::compile(&formula.body)?),
            _ => None,
        };
        Ok(Self { system, space, spec, formula, dfa })
    }

    pub fn formula(&self) -> &HyperFormula {
        &self.formula
    }

    pub fn decide(&self, s: &[State]) -> Result<bool> {
        let outputs = s.iter().map(|x| self.system.output(x)).collect::<Result<Vec<_>>>()?;
        let outside = |secret: &StateRegion, kind| -> Result<bool> {
            let est = estimate_from_outputs(self.space, &outputs, self.eps(), kind)?;
            Ok(!est.is_subset_of(secret))
        };
        match self.spec {
            PropertySpec::InitialDetect { lam, .. } => {
                Ok(estimate_from_outputs(self.space, &outputs, self.eps(), EstimateKind::Initial)?.diam()? <= *lam)
            }
            PropertySpec::CurrentDetect { lam, .. } => {
                Ok(estimate_from_outputs(self.space, &outputs, self.eps(), EstimateKind::Current)?.diam()? <= *lam)
            }
            PropertySpec::InitialOpacity { secret, .. } => outside(secret, EstimateKind::Initial),
            PropertySpec::CurrentOpacity { secret, .. } => outside(secret, EstimateKind::Current),
            PropertySpec::Custom { secret, .. } => {
                let dfa = self.dfa.as_ref().expect("compiled for custom formulas");
                let ctx = AtomContext::new(self.system, secret.as_ref());
                hyper_holds(self.space, ctx, dfa, self.formula.quantifier, s)
            }
        }
    }

    fn eps(&self) -> f64 {
        match self.spec {
            PropertySpec::InitialDetect { eps, .. }
            | PropertySpec::CurrentDetect { eps, .. }
            | PropertySpec::InitialOpacity { eps, .. }
            | PropertySpec::CurrentOpacity { eps, .. } => *eps,
            PropertySpec::Custom { .. } => 0.0,
        }
    }
}

/// Fraction of trajectories from `x0` satisfying the property, decided with a
/// grid observer. Sampled trajectories use the truncated disturbance so that
/// they stay representable by the observer.
pub fn empirical_probability(
    model: &Poss,
    spec: &PropertySpec,
    x0: &[f64],
    n: usize,
    seed: u64,
    cfg: &ObserverConfig,
) -> Result<ProbabilityReport> {
    let observer = GridObserver::for_poss(model, cfg)?;
    let decider = Decider::new(model, &observer, spec)?;
    let dist = model.disturbance();
    estimate_by(n, seed, x0, |rng| {
        let mut s = vec![x0.to_vec()];
        for _ in 0..model.horizon() {
            let w = dist.sample_truncated(rng, cfg.sigmas);
            let next = model.step(s.last().expect("nonempty"), &w)?;
            s.push(next);
        }
        decider.decide(&s)
    })
}

/// Same estimate on a finite instance, with exact state estimates.
pub fn empirical_probability_finite<P: Probability>(
    inst: &FiniteInstance<P>,
    spec: &PropertySpec,
    x0: usize,
    n: usize,
    seed: u64,
) -> Result<ProbabilityReport> {
    let observer = FiniteObserver::new(inst);
    let decider = Decider::new(inst, &observer, spec)?;
    let start = inst.coords[x0].clone();
    estimate_by(n, seed, &start, |rng| decider.decide(&simulate(inst, &start, rng)?.states))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clopper_pearson_reference_values() {
        let (lo, hi) = clopper_pearson(0, 10, 0.95);
        assert_eq!(lo, 0.0);
        assert!((hi - 0.308_497_1).abs() < 1e-6);
        let (lo, hi) = clopper_pearson(5, 10, 0.95);
        assert!((lo - 0.187_086_2).abs() < 1e-6 && (hi - 0.812_913_8).abs() < 1e-6);
    }

    #[test]
    fn trivial_formula_has_probability_one() {
        let m = crate::presets::scalar_square();
        let spec = PropertySpec::Custom { formula: "forall s2. true".into(), p: 1.0, secret: None };
        let cfg = ObserverConfig { per_dim: 41, ..Default::default() };
        let r = empirical_probability(&m, &spec, &[0.5], 50, 1, &cfg).unwrap();
        assert_eq!(r.estimate, 1.0);
        assert_eq!(r.successes, 50);
    }
}
