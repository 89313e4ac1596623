use std::collections::{HashMap, VecDeque};
use std::fmt::Write as _;

use sha2::{Digest, Sha256};
use thiserror::Error;

use super::atoms::{Alphabet, Letter};
use super::formula::Formula;
use super::progress::{Arena, Dnf};

pub const DEFAULT_STATE_CAP: usize = 4096;
/// Letters are `u32` bitmasks, and the transition table is dense in letters.
pub const MAX_ATOMS: usize = 16;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum CompileError {
    #[error("automaton exceeds {cap} states; simplify the formula or raise the state cap")]
    TooManyStates { cap: usize },
    #[error("formula uses {count} distinct atoms; at most {max} are supported")]
    TooManyAtoms { count: usize, max: usize },
}

/// Deterministic automaton over letters of the formula's atom powerset.
///
/// A word is accepted iff the state reached after its last letter is
/// accepting. State 0 is initial.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Dfa {
    alphabet: Alphabet,
    transitions: Vec<u32>,
    accepting: Vec<bool>,
    descriptions: Vec<String>,
}

impl Dfa {
    pub fn compile(body: &Formula) -> Result<Self, CompileError> {
        Self::compile_with_cap(body, DEFAULT_STATE_CAP)
    }

    pub fn compile_with_cap(body: &Formula, cap: usize) -> Result<Self, CompileError> {
        let atoms = body.atoms();
        if atoms.len() > MAX_ATOMS {
            return Err(CompileError::TooManyAtoms { count: atoms.len(), max: MAX_ATOMS });
        }
        let alphabet = Alphabet::new(atoms);
        let n_letters = alphabet.num_letters();
        let mut arena = Arena::new(&alphabet);
        let root = arena.from_formula(body, true);
        let strong_root = arena.next(root);
        let init: Dnf = arena.canonical(vec![vec![strong_root]]);

        let mut ids: HashMap<Dnf, u32> = HashMap::new();
        let mut states: Vec<Dnf> = Vec::new();
        let mut queue = VecDeque::new();
        ids.insert(init.clone(), 0);
        states.push(init);
        queue.push_back(0u32);
        let mut transitions = Vec::new();
        while let Some(q) = queue.pop_front() {
            debug_assert_eq!(transitions.len(), q as usize * n_letters);
            let state = states[q as usize].clone();
            for letter in 0..n_letters as Letter {
                let succ = arena.step(&state, letter);
                let id = match ids.get(&succ) {
                    Some(&id) => id,
                    None => {
                        if states.len() >= cap {
                            return Err(CompileError::TooManyStates { cap });
                        }
                        let id = states.len() as u32;
                        ids.insert(succ.clone(), id);
                        states.push(succ);
                        queue.push_back(id);
                        id
                    }
                };
                transitions.push(id);
            }
        }
        let accepting: Vec<bool> = states.iter().map(|s| arena.accepts_at_end(s)).collect();
        let descriptions: Vec<String> = states.iter().map(|s| arena.describe(s)).collect();

        // Traces are nonempty, so whether q0 accepts is irrelevant unless some
        // word leads back to it; pick the choice that merges more states.
        let choices: &[bool] = if transitions.contains(&0) { &[false] } else { &[false, true] };
        let mut best: Option<(Vec<u32>, usize)> = None;
        for &q0_accepts in choices {
            let mut acc = accepting.clone();
            acc[0] = q0_accepts;
            let (class, n) = minimize(&transitions, &acc, n_letters);
            if best.as_ref().is_none_or(|(_, m)| n < *m) {
                best = Some((class, n));
            }
        }
        let (class, n) = best.expect("two candidates were tried");

        // Renumber classes in breadth-first order from the initial class.
        let mut order = vec![u32::MAX; n];
        let mut rep = Vec::with_capacity(n);
        let mut queue = VecDeque::from([0usize]);
        order[class[0] as usize] = 0;
        rep.push(0usize);
        while let Some(q) = queue.pop_front() {
            for l in 0..n_letters {
                let s = transitions[q * n_letters + l] as usize;
                let c = class[s] as usize;
                if order[c] == u32::MAX {
                    order[c] = rep.len() as u32;
                    rep.push(s);
                    queue.push_back(s);
                }
            }
        }
        let min_transitions = rep
            .iter()
            .flat_map(|&q| (0..n_letters).map(move |l| (q, l)))
            .map(|(q, l)| order[class[transitions[q * n_letters + l] as usize] as usize])
            .collect();
        // The initial class counts as accepting only if it merged with a state that
        // really accepts.
        let min_accepting = rep
            .iter()
            .enumerate()
            .map(|(i, &q)| {
                if i == 0 {
                    (0..states.len()).any(|s| s != 0 && class[s] == class[0] && accepting[s])
                } else {
                    accepting[q]
                }
            })
            .collect();
        let min_descriptions = rep.iter().map(|&q| descriptions[q].clone()).collect();
        Ok(Self {
            alphabet,
            transitions: min_transitions,
            accepting: min_accepting,
            descriptions: min_descriptions,
        })
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn num_states(&self) -> usize {
        self.accepting.len()
    }

    pub fn num_letters(&self) -> usize {
        self.alphabet.num_letters()
    }

    pub fn initial(&self) -> u32 {
        0
    }

    pub fn next(&self, q: u32, letter: Letter) -> u32 {
        self.transitions[q as usize * self.num_letters() + letter as usize]
    }

    pub fn is_accepting(&self, q: u32) -> bool {
        self.accepting[q as usize]
    }

    pub fn accepting_states(&self) -> Vec<u32> {
        (0..self.num_states() as u32).filter(|&q| self.is_accepting(q)).collect()
    }

    /// State reached from `q` after reading `letters`.
    pub fn run_from(&self, q: u32, letters: &[Letter]) -> u32 {
        letters.iter().fold(q, |q, &l| self.next(q, l))
    }

    pub fn accepts(&self, letters: &[Letter]) -> bool {
        self.is_accepting(self.run_from(self.initial(), letters))
    }

    /// Progression formula each state stands for.
    pub fn describe_state(&self, q: u32) -> &str {
        &self.descriptions[q as usize]
    }

    /// Text table: one `q, {atoms}, q'` line per transition, then the
    /// accepting states.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# states: {}", self.num_states());
        let atoms: Vec<String> = self.alphabet.atoms().iter().map(ToString::to_string).collect();
        let _ = writeln!(out, "# atoms: {}", atoms.join(", "));
        let _ = writeln!(out, "# initial: 0");
        for q in 0..self.num_states() as u32 {
            let _ = writeln!(out, "# q{q}: {}", self.describe_state(q));
        }
        for q in 0..self.num_states() as u32 {
            for l in 0..self.num_letters() as Letter {
                let _ = writeln!(out, "{q}, {}, {}", self.alphabet.format_letter(l), self.next(q, l));
            }
        }
        let acc: Vec<String> = self.accepting_states().iter().map(ToString::to_string).collect();
        let _ = writeln!(out, "accepting: {}", acc.join(" "));
        out
    }

    /// Hex SHA-256 of the transition structure, for tying artifacts to an automaton.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        for a in self.alphabet.atoms() {
            h.update(a.to_string().as_bytes());
            h.update([0]);
        }
        for t in &self.transitions {
            h.update(t.to_le_bytes());
        }
        for &a in &self.accepting {
            h.update([a as u8]);
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Moore partition refinement; returns the class of every state and the class count.
fn minimize(transitions: &[u32], accepting: &[bool], n_letters: usize) -> (Vec<u32>, usize) {
    let n = accepting.len();
    let mut class: Vec<u32> = accepting.iter().map(|&a| a as u32).collect();
    let mut count = {
        let mut seen = class.clone();
        seen.sort_unstable();
        seen.dedup();
        seen.len()
    };
    loop {
        let mut ids: HashMap<Vec<u32>, u32> = HashMap::new();
        let mut next = Vec::with_capacity(n);
        for q in 0..n {
            let mut sig = Vec::with_capacity(n_letters + 1);
            sig.push(class[q]);
            sig.extend((0..n_letters).map(|l| class[transitions[q * n_letters + l] as usize]));
            let fresh = ids.len() as u32;
            next.push(*ids.entry(sig).or_insert(fresh));
        }
        let new_count = ids.len();
        class = next;
        if new_count == count {
            return (class, count);
        }
        count = new_count;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ltlf::{evaluate_letters, parse_body, AtomicPredicate};

    #[test]
    fn true_compiles_to_a_single_accepting_loop() {
        let dfa = Dfa::compile(&Formula::True).unwrap();
        assert_eq!(dfa.num_states(), 1);
        assert_eq!(dfa.accepting_states(), vec![0]);
        assert!(dfa.accepts(&[0]));
        assert!(dfa.accepts(&[0, 0, 0]));
    }

    #[test]
    fn current_detectability_reduces_to_terminal_condition() {
        let body = parse_body("G out_close(0.5) -> F G state_close(0.8)").unwrap();
        let dfa = Dfa::compile(&body).unwrap();
        assert_eq!(dfa.num_letters(), 4);
        assert_eq!(dfa.num_states(), 3);
        let a = dfa.alphabet();
        let o = a.letter_of(&[AtomicPredicate::OutClose(0.5)]);
        let s = a.letter_of(&[AtomicPredicate::StateClose(0.8)]);
        for len in 1..=6usize {
            for word in 0..(4u32.pow(len as u32)) {
                let letters: Vec<Letter> = (0..len).map(|i| (word >> (2 * i)) & 3).collect();
                let all_close = letters.iter().all(|l| l & o != 0);
                let expected = !all_close || letters[len - 1] & s != 0;
                assert_eq!(dfa.accepts(&letters), expected, "{letters:?}");
            }
        }
    }

    #[test]
    fn until_matches_direct_semantics_exhaustively() {
        let body = parse_body("sec1 U nonsec2").unwrap();
        let dfa = Dfa::compile(&body).unwrap();
        for word in 0..(1u32 << 8) {
            let letters: Vec<Letter> = (0..4).map(|i| (word >> (2 * i)) & 3).collect();
            assert_eq!(dfa.accepts(&letters), evaluate_letters(&body, dfa.alphabet(), &letters).unwrap());
        }
    }

    #[test]
    fn state_cap_is_enforced() {
        let body = parse_body("X X X X sec1 | X X X nonsec2").unwrap();
        assert_eq!(Dfa::compile_with_cap(&body, 3), Err(CompileError::TooManyStates { cap: 3 }));
    }

    #[test]
    fn table_lists_every_transition() {
        let dfa = Dfa::compile(&parse_body("F sec1").unwrap()).unwrap();
        let table = dfa.to_table();
        let rows = table.lines().filter(|l| !l.starts_with('#') && !l.starts_with("accepting")).count();
        assert_eq!(rows, dfa.num_states() * dfa.num_letters());
        assert!(table.contains("0, {sec1}, "));
        assert_eq!(dfa.hash().len(), 64);
    }
}
