use std::fmt;

use super::atoms::AtomicPredicate;

/// Finite-trace temporal formula over two-trace atoms.
///
/// `And`, `Implies`, `Eventually`, `Always` and `False` are sugar; see
/// [`Formula::normalize`].
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Formula {
    True,
    False,
    Atom(AtomicPredicate),
    Not(Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Next(Box<Formula>),
    Until(Box<Formula>, Box<Formula>),
    Eventually(Box<Formula>),
    Always(Box<Formula>),
}

#[allow(clippy::should_implement_trait)]
impl Formula {
    pub fn atom(a: AtomicPredicate) -> Self {
        Formula::Atom(a)
    }
    pub fn not(f: Formula) -> Self {
        Formula::Not(Box::new(f))
    }
    pub fn or(a: Formula, b: Formula) -> Self {
        Formula::Or(Box::new(a), Box::new(b))
    }
    pub fn and(a: Formula, b: Formula) -> Self {
        Formula::And(Box::new(a), Box::new(b))
    }
    pub fn implies(a: Formula, b: Formula) -> Self {
        Formula::Implies(Box::new(a), Box::new(b))
    }
    pub fn next(f: Formula) -> Self {
        Formula::Next(Box::new(f))
    }
    pub fn until(a: Formula, b: Formula) -> Self {
        Formula::Until(Box::new(a), Box::new(b))
    }
    pub fn eventually(f: Formula) -> Self {
        Formula::Eventually(Box::new(f))
    }
    pub fn always(f: Formula) -> Self {
        Formula::Always(Box::new(f))
    }

    /// Rewrites sugar into the core connectives `{Atom, Not, Or, Next, Until, True}`.
    ///
    /// `a & b = !(!a | !b)`, `a -> b = !a | b`, `F a = true U a`,
    /// `G a = !F !a`, `false = !true`.
    pub fn normalize(&self) -> Formula {
        use Formula::*;
        match self {
            True => True,
            False => Formula::not(True),
            Atom(a) => Atom(*a),
            Not(a) => Formula::not(a.normalize()),
            Or(a, b) => Formula::or(a.normalize(), b.normalize()),
            And(a, b) => Formula::not(Formula::or(Formula::not(a.normalize()), Formula::not(b.normalize()))),
            Implies(a, b) => Formula::or(Formula::not(a.normalize()), b.normalize()),
            Next(a) => Formula::next(a.normalize()),
            Until(a, b) => Formula::until(a.normalize(), b.normalize()),
            Eventually(a) => Formula::until(True, a.normalize()),
            Always(a) => Formula::not(Formula::until(True, Formula::not(a.normalize()))),
        }
    }

    pub fn is_core(&self) -> bool {
        use Formula::*;
        match self {
            True | Atom(_) => true,
            Not(a) | Next(a) => a.is_core(),
            Or(a, b) | Until(a, b) => a.is_core() && b.is_core(),
            False | And(..) | Implies(..) | Eventually(_) | Always(_) => false,
        }
    }

    /// Sorted, deduplicated atoms occurring in the formula.
    pub fn atoms(&self) -> Vec<AtomicPredicate> {
        let mut out = Vec::new();
        self.collect_atoms(&mut out);
        out.sort();
        out.dedup();
        out
    }

    fn collect_atoms(&self, out: &mut Vec<AtomicPredicate>) {
        use Formula::*;
        match self {
            True | False => {}
            Atom(a) => out.push(*a),
            Not(a) | Next(a) | Eventually(a) | Always(a) => a.collect_atoms(out),
            Or(a, b) | And(a, b) | Implies(a, b) | Until(a, b) => {
                a.collect_atoms(out);
                b.collect_atoms(out);
            }
        }
    }

    pub fn depth(&self) -> usize {
        use Formula::*;
        match self {
            True | False | Atom(_) => 0,
            Not(a) | Next(a) | Eventually(a) | Always(a) => 1 + a.depth(),
            Or(a, b) | And(a, b) | Implies(a, b) | Until(a, b) => 1 + a.depth().max(b.depth()),
        }
    }

    fn precedence(&self) -> u8 {
        use Formula::*;
        match self {
            Implies(..) => 1,
            Or(..) => 2,
            And(..) => 3,
            Until(..) => 4,
            Not(_) | Next(_) | Eventually(_) | Always(_) => 5,
            True | False | Atom(_) => 6,
        }
    }

    fn fmt_at(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        use Formula::*;
        let own = self.precedence();
        let wrap = own < min;
        if wrap {
            f.write_str("(")?;
        }
        match self {
            True => f.write_str("true")?,
            False => f.write_str("false")?,
            Atom(a) => write!(f, "{a}")?,
            Not(a) => {
                f.write_str("!")?;
                a.fmt_at(f, 5)?;
            }
            Next(a) => {
                f.write_str("X ")?;
                a.fmt_at(f, 5)?;
            }
            Eventually(a) => {
                f.write_str("F ")?;
                a.fmt_at(f, 5)?;
            }
            Always(a) => {
                f.write_str("G ")?;
                a.fmt_at(f, 5)?;
            }
            Implies(a, b) => {
                a.fmt_at(f, 2)?;
                f.write_str(" -> ")?;
                b.fmt_at(f, 1)?;
            }
            Or(a, b) => {
                a.fmt_at(f, 2)?;
                f.write_str(" | ")?;
                b.fmt_at(f, 3)?;
            }
            And(a, b) => {
                a.fmt_at(f, 3)?;
                f.write_str(" & ")?;
                b.fmt_at(f, 4)?;
            }
            Until(a, b) => {
                a.fmt_at(f, 5)?;
                f.write_str(" U ")?;
                b.fmt_at(f, 4)?;
            }
        }
        if wrap {
            f.write_str(")")?;
        }
        Ok(())
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_at(f, 0)
    }
}

/// Trace quantifier over the second trajectory.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Quantifier {
    Forall,
    Exists,
}

impl fmt::Display for Quantifier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Quantifier::Forall => "forall",
            Quantifier::Exists => "exists",
        })
    }
}

/// `forall s2. body` or `exists s2. body`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct HyperFormula {
    pub quantifier: Quantifier,
    pub body: Formula,
}

impl HyperFormula {
    pub fn new(quantifier: Quantifier, body: Formula) -> Self {
        Self { quantifier, body }
    }
}

impl fmt::Display for HyperFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} s2. {}", self.quantifier, self.body)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalize_reaches_core() {
        let a = Formula::atom(AtomicPredicate::SecFirst);
        let b = Formula::atom(AtomicPredicate::OutClose(0.5));
        let f = Formula::implies(Formula::always(a.clone()), Formula::and(Formula::eventually(b), Formula::False));
        assert!(!f.is_core());
        assert!(f.normalize().is_core());
        assert_eq!(f.atoms().len(), 2);
    }

    #[test]
    fn display_minimal_parentheses() {
        let o = Formula::atom(AtomicPredicate::OutClose(0.5));
        let s = Formula::atom(AtomicPredicate::StateClose(0.8));
        let f = Formula::implies(Formula::always(o.clone()), Formula::eventually(Formula::always(s.clone())));
        assert_eq!(f.to_string(), "G out_close(0.5) -> F G state_close(0.8)");
        let g = Formula::and(Formula::or(o.clone(), s.clone()), o.clone());
        assert_eq!(g.to_string(), "(out_close(0.5) | state_close(0.8)) & out_close(0.5)");
        let u = Formula::until(Formula::until(o.clone(), s.clone()), o);
        assert_eq!(u.to_string(), "(out_close(0.5) U state_close(0.8)) U out_close(0.5)");
    }
}
