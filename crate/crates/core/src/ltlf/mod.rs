//! Finite-trace temporal logic over two-trace atoms: syntax, direct
//! semantics, progression and compilation to deterministic automata.

mod atoms;
mod dfa;
mod formula;
mod parse;
mod progress;
mod semantics;

pub use atoms::{label, Alphabet, AtomContext, AtomicPredicate, Letter};
pub use dfa::{CompileError, Dfa, DEFAULT_STATE_CAP, MAX_ATOMS};
pub use formula::{Formula, HyperFormula, Quantifier};
pub use parse::{parse, parse_body, ParseError};
pub use progress::progress;
pub use semantics::{evaluate, evaluate_letters, evaluate_with};
