use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;
use std::hash::{Hash, Hasher};

use crate::error::{Error, Result};
use crate::region::{l2_distance, StateRegion};
use crate::system::System;

/// Two-trace atomic predicate over a state pair `(x, x')`.
#[derive(Clone, Copy, Debug)]
pub enum AtomicPredicate {
    /// `||Omega(x) - Omega(x')|| <= eps`
    OutClose(f64),
    /// `||x - x'|| <= lam`
    StateClose(f64),
    /// `x` lies in the secret region.
    SecFirst,
    /// `x'` lies outside the secret region.
    NonsecSecond,
}

impl AtomicPredicate {
    fn key(&self) -> (u8, u64) {
        match *self {
            AtomicPredicate::OutClose(e) => (0, e.to_bits()),
            AtomicPredicate::StateClose(l) => (1, l.to_bits()),
            AtomicPredicate::SecFirst => (2, 0),
            AtomicPredicate::NonsecSecond => (3, 0),
        }
    }

    pub fn uses_secret(&self) -> bool {
        matches!(self, AtomicPredicate::SecFirst | AtomicPredicate::NonsecSecond)
    }
}

impl PartialEq for AtomicPredicate {
    fn eq(&self, other: &Self) -> bool {
        self.key() == other.key()
    }
}

impl Eq for AtomicPredicate {}

impl Hash for AtomicPredicate {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.key().hash(state);
    }
}

impl PartialOrd for AtomicPredicate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for AtomicPredicate {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (AtomicPredicate::OutClose(a), AtomicPredicate::OutClose(b))
            | (AtomicPredicate::StateClose(a), AtomicPredicate::StateClose(b)) => a.total_cmp(b),
            _ => self.key().0.cmp(&other.key().0),
        }
    }
}

impl fmt::Display for AtomicPredicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AtomicPredicate::OutClose(e) => write!(f, "out_close({e:?})"),
            AtomicPredicate::StateClose(l) => write!(f, "state_close({l:?})"),
            AtomicPredicate::SecFirst => f.write_str("sec1"),
            AtomicPredicate::NonsecSecond => f.write_str("nonsec2"),
        }
    }
}

/// A set of atoms as a bitmask over an [`Alphabet`].
pub type Letter = u32;

/// Ordered atom list; letters are subsets encoded as bitmasks over it.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Alphabet {
    atoms: Vec<AtomicPredicate>,
}

impl Alphabet {
    pub fn new(mut atoms: Vec<AtomicPredicate>) -> Self {
        atoms.sort();
        atoms.dedup();
        Self { atoms }
    }

    pub fn atoms(&self) -> &[AtomicPredicate] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn num_letters(&self) -> usize {
        1usize << self.atoms.len()
    }

    pub fn index_of(&self, atom: &AtomicPredicate) -> Option<usize> {
        self.atoms.binary_search(atom).ok()
    }

    /// Letter for a set of atoms; atoms outside the alphabet are ignored.
    pub fn letter_of<'a>(&self, set: impl IntoIterator<Item = &'a AtomicPredicate>) -> Letter {
        set.into_iter()
            .filter_map(|a| self.index_of(a))
            .fold(0, |acc, i| acc | (1 << i))
    }

    pub fn atoms_of(&self, letter: Letter) -> BTreeSet<AtomicPredicate> {
        self.atoms
            .iter()
            .enumerate()
            .filter(|(i, _)| letter & (1 << i) != 0)
            .map(|(_, a)| *a)
            .collect()
    }

    pub fn contains(&self, letter: Letter, atom: &AtomicPredicate) -> bool {
        self.index_of(atom).is_some_and(|i| letter & (1 << i) != 0)
    }

    pub fn format_letter(&self, letter: Letter) -> String {
        let parts: Vec<String> = self.atoms_of(letter).iter().map(ToString::to_string).collect();
        format!("{{{}}}", parts.join(", "))
    }

    pub fn uses_secret(&self) -> bool {
        self.atoms.iter().any(AtomicPredicate::uses_secret)
    }
}

/// Binds atomic predicates to a concrete system and secret set.
pub struct AtomContext<'a, S: System + ?Sized> {
    pub system: &'a S,
    pub secret: Option<&'a StateRegion>,
}

impl<S: System + ?Sized> Clone for AtomContext<'_, S> {
    fn clone(&self) -> Self {
        *self
    }
}

impl<S: System + ?Sized> Copy for AtomContext<'_, S> {}

impl<'a, S: System + ?Sized> AtomContext<'a, S> {
    pub fn new(system: &'a S, secret: Option<&'a StateRegion>) -> Self {
        Self { system, secret }
    }

    fn check_dims(&self, x: &[f64], x2: &[f64]) -> Result<()> {
        let d = self.system.state_dim();
        for v in [x, x2] {
            if v.len() != d {
                return Err(Error::Dimension { what: "state", expected: d, got: v.len() });
            }
        }
        Ok(())
    }

    pub fn holds(&self, atom: &AtomicPredicate, x: &[f64], x2: &[f64]) -> Result<bool> {
        self.check_dims(x, x2)?;
        Ok(match *atom {
            AtomicPredicate::OutClose(eps) => {
                let (y, y2) = (self.system.output(x)?, self.system.output(x2)?);
                l2_distance(&y, &y2) <= eps
            }
            AtomicPredicate::StateClose(lam) => l2_distance(x, x2) <= lam,
            AtomicPredicate::SecFirst => self.secret.ok_or(Error::MissingSecret)?.contains(x),
            AtomicPredicate::NonsecSecond => !self.secret.ok_or(Error::MissingSecret)?.contains(x2),
        })
    }

    /// The labeling function: the letter of atoms that hold on `(x, x2)`.
    pub fn label(&self, alphabet: &Alphabet, x: &[f64], x2: &[f64]) -> Result<Letter> {
        self.check_dims(x, x2)?;
        let mut letter = 0;
        let mut outputs: Option<(Vec<f64>, Vec<f64>)> = None;
        for (i, atom) in alphabet.atoms().iter().enumerate() {
            let holds = match *atom {
                AtomicPredicate::OutClose(eps) => {
                    if outputs.is_none() {
                        outputs = Some((self.system.output(x)?, self.system.output(x2)?));
                    }
                    let (y, y2) = outputs.as_ref().expect("outputs computed");
                    l2_distance(y, y2) <= eps
                }
                _ => self.holds(atom, x, x2)?,
            };
            if holds {
                letter |= 1 << i;
            }
        }
        Ok(letter)
    }
}

/// Convenience form of [`AtomContext::label`] returning the atom set.
pub fn label<S: System + ?Sized>(
    x: &[f64],
    x2: &[f64],
    atoms: &[AtomicPredicate],
    system: &S,
    secret: Option<&StateRegion>,
) -> Result<BTreeSet<AtomicPredicate>> {
    let alphabet = Alphabet::new(atoms.to_vec());
    let letter = AtomContext::new(system, secret).label(&alphabet, x, x2)?;
    Ok(alphabet.atoms_of(letter))
}
