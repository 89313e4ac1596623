use serde::Serialize;

use super::finite::{FiniteInstance, ENUMERATION_CAP};
use super::grid::Mode;
use crate::error::{Error, Result};
use crate::ltlf::{evaluate_letters, Letter, Quantifier};
use crate::product::{Acceptance, VerificationStructure};
use crate::scalar::Probability;

/// Exact values `u_t(s1, s2, q)` on a finite instance, with the first
/// optimal disturbance index per entry for `t < T`.
#[derive(Clone, Debug, PartialEq)]
pub struct ExactValues<P> {
    pub num_states: usize,
    pub num_q: usize,
    pub horizon: usize,
    pub mode: Mode,
    pub values: Vec<P>,
    pub policy: Vec<usize>,
}

impl<P: Probability> ExactValues<P> {
    pub fn index(&self, t: usize, q: usize, s1: usize, s2: usize) -> usize {
        ((t * self.num_q + q) * self.num_states + s1) * self.num_states + s2
    }

    pub fn at(&self, t: usize, q: usize, s1: usize, s2: usize) -> &P {
        &self.values[self.index(t, q, s1, s2)]
    }

    pub fn choice(&self, t: usize, q: usize, s1: usize, s2: usize) -> usize {
        self.policy[self.index(t, q, s1, s2)]
    }

    /// `inf` (or `sup`) over the copy's initial state of `u_0(x0, x0', q0)`,
    /// with the first optimal `x0'`.
    pub fn initial_value(&self, initial: &[usize], x0: usize) -> (P, usize) {
        let mut best: Option<(P, usize)> = None;
        for &x0b in initial {
            let v = self.at(0, 0, x0, x0b).clone();
            if best.as_ref().is_none_or(|(b, _)| self.mode.better(&v, b)) {
                best = Some((v, x0b));
            }
        }
        best.expect("nonempty initial set")
    }
}

fn letters_of<P: Probability>(vs: &VerificationStructure<FiniteInstance<P>>) -> Result<Vec<Letter>> {
    let inst = vs.system();
    let n = inst.num_states();
    let mut out = Vec::with_capacity(n * n);
    for a in &inst.coords {
        for b in &inst.coords {
            out.push(vs.label(a, b)?);
        }
    }
    Ok(out)
}

/// Backward recursion with exact arithmetic in `P` and no interpolation.
pub fn exact_values<P: Probability>(vs: &VerificationStructure<FiniteInstance<P>>, mode: Mode) -> Result<ExactValues<P>> {
    let inst = vs.system();
    let n = inst.num_states();
    let nq = vs.num_automaton_states();
    let horizon = inst.horizon;
    let dfa = vs.dfa();
    let labels = letters_of(vs)?;
    let alive = |s: usize| vs.sink_domain().is_none_or(|d| d.contains(&inst.coords[s]));
    let mut out = ExactValues {
        num_states: n,
        num_q: nq,
        horizon,
        mode,
        values: vec![P::zero(); (horizon + 1) * nq * n * n],
        policy: vec![0; (horizon + 1) * nq * n * n],
    };
    for q in 0..nq {
        for s1 in 0..n {
            for s2 in 0..n {
                let acc = match vs.acceptance() {
                    Acceptance::TrailingLabel => dfa.is_accepting(dfa.next(q as u32, labels[s1 * n + s2])),
                    Acceptance::StateOnly => dfa.is_accepting(q as u32),
                };
                if acc {
                    let i = out.index(horizon, q, s1, s2);
                    out.values[i] = P::one();
                }
            }
        }
    }
    for t in (0..horizon).rev() {
        for q in 0..nq {
            for s1 in 0..n {
                for s2 in 0..n {
                    let qn = dfa.next(q as u32, labels[s1 * n + s2]) as usize;
                    let mut best: Option<(P, usize)> = None;
                    for j in 0..inst.num_disturbances() {
                        let y2 = inst.succ[s2][j];
                        let mut e = P::zero();
                        if alive(y2) {
                            for (k, p) in inst.probs.iter().enumerate() {
                                let y1 = inst.succ[s1][k];
                                if alive(y1) {
                                    e = e + p.clone() * out.at(t + 1, qn, y1, y2).clone();
                                }
                            }
                        }
                        if best.as_ref().is_none_or(|(b, _)| mode.better(&e, b)) {
                            best = Some((e, j));
                        }
                    }
                    let (v, j) = best.expect("at least one disturbance");
                    let i = out.index(t, q, s1, s2);
                    out.values[i] = v;
                    out.policy[i] = j;
                }
            }
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Theorem1Status {
    Equal,
    /// The game value is strictly below the satisfaction probability.
    Gap,
    /// The game value exceeds the satisfaction probability.
    Violation,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Theorem1Row<P> {
    pub x0: usize,
    pub lhs: P,
    pub rhs: P,
    pub status: Theorem1Status,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Theorem1Report<P> {
    pub quantifier: Quantifier,
    pub rows: Vec<Theorem1Row<P>>,
}

impl<P> Theorem1Report<P> {
    pub fn holds(&self) -> bool {
        self.rows.iter().all(|r| r.status != Theorem1Status::Violation)
    }

    pub fn has_gap(&self) -> bool {
        self.rows.iter().any(|r| r.status == Theorem1Status::Gap)
    }
}

/// Compares the game value (inf or sup over environment policies, including
/// the choice of the second initial state) with the probability that a
/// sampled trajectory satisfies the hyperproperty, the latter by enumerating
/// every trajectory and every companion trajectory from the initial set.
///
/// The direct semantics reads all `T + 1` positions, matching the
/// trailing-label acceptance.
pub fn theorem1_check<P: Probability>(vs: &VerificationStructure<FiniteInstance<P>>, tol: f64) -> Result<Theorem1Report<P>> {
    let inst = vs.system();
    let n = inst.num_states();
    let mode = Mode::from(vs.quantifier());
    let values = exact_values(vs, mode)?;
    let labels = letters_of(vs)?;
    let companions = inst.all_trajectories()?;
    let body = vs.body();
    let mut rows = Vec::with_capacity(inst.initial.len());
    for &x0 in &inst.initial {
        let paths = inst.trajectories_from(x0)?;
        let work = (paths.len() as u128) * (companions.len() as u128);
        if work > ENUMERATION_CAP {
            return Err(Error::Combinatorial { count: work, cap: ENUMERATION_CAP });
        }
        let mut rhs = P::zero();
        for (s, p) in &paths {
            let mut verdicts = companions.iter().map(|s2| {
                let letters: Vec<Letter> = s.iter().zip(s2).map(|(&a, &b)| labels[a * n + b]).collect();
                evaluate_letters(body, vs.alphabet(), &letters)
            });
            let sat = match vs.quantifier() {
                Quantifier::Forall => verdicts.try_fold(true, |acc, v| v.map(|v| acc && v))?,
                Quantifier::Exists => verdicts.try_fold(false, |acc, v| v.map(|v| acc || v))?,
            };
            if sat {
                rhs = rhs + p.clone();
            }
        }
        let (lhs, _) = values.initial_value(&inst.initial, x0);
        let status = if lhs == rhs || (lhs.to_f64() - rhs.to_f64()).abs() <= tol {
            Theorem1Status::Equal
        } else if lhs < rhs {
            Theorem1Status::Gap
        } else {
            Theorem1Status::Violation
        };
        rows.push(Theorem1Row { x0, lhs, rhs, status });
    }
    Ok(Theorem1Report { quantifier: vs.quantifier(), rows })
}
