//! Direct recursive finite-trace semantics, used as the reference oracle for
//! the automaton construction.

use super::atoms::{Alphabet, AtomContext, AtomicPredicate, Letter};
use super::formula::Formula;
use crate::error::{Error, Result};
use crate::system::System;

/// Evaluates `body` at position 0 of a trace of length `len`, with atom truth
/// supplied by `holds(atom, position)`.
///
/// `X f` is false at the last position; `a U b` needs a witness position
/// within the trace.
pub fn evaluate_with(body: &Formula, len: usize, holds: &mut dyn FnMut(&AtomicPredicate, usize) -> bool) -> Result<bool> {
    if len == 0 {
        return Err(Error::EmptyTrace);
    }
    Ok(truth_vector(body, len, holds)[0])
}

fn truth_vector(f: &Formula, n: usize, holds: &mut dyn FnMut(&AtomicPredicate, usize) -> bool) -> Vec<bool> {
    use Formula::*;
    match f {
        True => vec![true; n],
        False => vec![false; n],
        Atom(a) => (0..n).map(|i| holds(a, i)).collect(),
        Not(a) => truth_vector(a, n, holds).into_iter().map(|v| !v).collect(),
        Or(a, b) | And(a, b) | Implies(a, b) => {
            let (va, vb) = (truth_vector(a, n, holds), truth_vector(b, n, holds));
            va.iter()
                .zip(&vb)
                .map(|(&x, &y)| match f {
                    Or(..) => x || y,
                    And(..) => x && y,
                    _ => !x || y,
                })
                .collect()
        }
        Next(a) => {
            let va = truth_vector(a, n, holds);
            (0..n).map(|i| i + 1 < n && va[i + 1]).collect()
        }
        Until(a, b) => {
            let (va, vb) = (truth_vector(a, n, holds), truth_vector(b, n, holds));
            (0..n).map(|i| (i..n).any(|j| vb[j] && (i..j).all(|m| va[m]))).collect()
        }
        Eventually(a) => {
            let va = truth_vector(a, n, holds);
            (0..n).map(|i| (i..n).any(|j| va[j])).collect()
        }
        Always(a) => {
            let va = truth_vector(a, n, holds);
            (0..n).map(|i| (i..n).all(|j| va[j])).collect()
        }
    }
}

/// Evaluates `body` on a trace of letters over `alphabet`.
pub fn evaluate_letters(body: &Formula, alphabet: &Alphabet, letters: &[Letter]) -> Result<bool> {
    evaluate_with(body, letters.len(), &mut |a, i| alphabet.contains(letters[i], a))
}

/// Evaluates `body` on a sequence of state pairs `(x_t, x'_t)`.
pub fn evaluate<S: System + ?Sized>(body: &Formula, pairs: &[(Vec<f64>, Vec<f64>)], ctx: AtomContext<'_, S>) -> Result<bool> {
    if pairs.is_empty() {
        return Err(Error::EmptyTrace);
    }
    let alphabet = Alphabet::new(body.atoms());
    let letters = pairs
        .iter()
        .map(|(x, x2)| ctx.label(&alphabet, x, x2))
        .collect::<Result<Vec<_>>>()?;
    evaluate_letters(body, &alphabet, &letters)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ltlf::parse_body;

    fn eval(text: &str, atoms: &[AtomicPredicate], trace: &[&[AtomicPredicate]]) -> bool {
        let body = parse_body(text).unwrap();
        let alphabet = Alphabet::new(atoms.to_vec());
        let letters: Vec<Letter> = trace.iter().map(|s| alphabet.letter_of(s.iter())).collect();
        evaluate_letters(&body, &alphabet, &letters).unwrap()
    }

    #[test]
    fn strong_next_at_trace_end() {
        assert!(!eval("X true", &[], &[&[]]));
        assert!(eval("X true", &[], &[&[], &[]]));
        assert!(eval("!X !false", &[], &[&[]]));
    }

    #[test]
    fn until_needs_witness_inside_trace() {
        use AtomicPredicate::*;
        let atoms = [SecFirst, NonsecSecond];
        assert!(!eval("sec1 U nonsec2", &atoms, &[&[SecFirst], &[SecFirst]]));
        assert!(eval("sec1 U nonsec2", &atoms, &[&[SecFirst], &[NonsecSecond]]));
        assert!(eval("sec1 U nonsec2", &atoms, &[&[NonsecSecond]]));
    }

    #[test]
    fn eventually_always_reads_final_position() {
        use AtomicPredicate::*;
        let atoms = [SecFirst];
        assert!(eval("F G sec1", &atoms, &[&[], &[SecFirst]]));
        assert!(!eval("F G sec1", &atoms, &[&[SecFirst], &[]]));
    }

    #[test]
    fn empty_trace_is_an_error() {
        assert!(matches!(evaluate_with(&Formula::True, 0, &mut |_, _| true), Err(Error::EmptyTrace)));
    }
}
