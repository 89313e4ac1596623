//! Formula progression over a hash-consed negation-normal-form arena.
//!
//! A progressed formula is kept as a disjunction of clauses, each clause a
//! set of next-step obligations `Xs f` (strong: a next position must exist)
//! or `Xw f` (weak: holds vacuously at the end of the trace).

use std::collections::HashMap;

use super::atoms::{Alphabet, AtomicPredicate, Letter};
use super::formula::Formula;

pub(crate) type NodeId = u32;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub(crate) enum Node {
    True,
    False,
    Atom(usize),
    NegAtom(usize),
    And(Vec<NodeId>),
    Or(Vec<NodeId>),
    Next(NodeId),
    WeakNext(NodeId),
    Until(NodeId, NodeId),
    Release(NodeId, NodeId),
    Eventually(NodeId),
    Always(NodeId),
}

pub(crate) type Clause = Vec<NodeId>;
/// Canonical disjunction of obligation clauses. `[]` is false, `[[]]` is true.
pub(crate) type Dnf = Vec<Clause>;

pub(crate) struct Arena {
    nodes: Vec<Node>,
    index: HashMap<Node, NodeId>,
    atoms: Vec<AtomicPredicate>,
    cache: HashMap<(NodeId, Letter), Dnf>,
}

pub(crate) const TRUE: NodeId = 0;
pub(crate) const FALSE: NodeId = 1;

impl Arena {
    pub fn new(alphabet: &Alphabet) -> Self {
        let mut arena = Self {
            nodes: Vec::new(),
            index: HashMap::new(),
            atoms: alphabet.atoms().to_vec(),
            cache: HashMap::new(),
        };
        arena.intern(Node::True);
        arena.intern(Node::False);
        arena
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id as usize]
    }

    fn intern(&mut self, node: Node) -> NodeId {
        if let Some(&id) = self.index.get(&node) {
            return id;
        }
        let id = self.nodes.len() as NodeId;
        self.nodes.push(node.clone());
        self.index.insert(node, id);
        id
    }

    fn junction(&mut self, parts: Vec<NodeId>, conj: bool) -> NodeId {
        let (unit, zero) = if conj { (TRUE, FALSE) } else { (FALSE, TRUE) };
        let mut flat = Vec::with_capacity(parts.len());
        for p in parts {
            match self.node(p) {
                Node::And(kids) if conj => flat.extend(kids.iter().copied()),
                Node::Or(kids) if !conj => flat.extend(kids.iter().copied()),
                _ if p == zero => return zero,
                _ if p == unit => {}
                _ => flat.push(p),
            }
        }
        flat.sort_unstable();
        flat.dedup();
        for &p in &flat {
            if let Node::Atom(i) = *self.node(p) {
                let neg = self.index.get(&Node::NegAtom(i));
                if neg.is_some_and(|n| flat.binary_search(n).is_ok()) {
                    return zero;
                }
            }
        }
        match flat.len() {
            0 => unit,
            1 => flat[0],
            _ if conj => self.intern(Node::And(flat)),
            _ => self.intern(Node::Or(flat)),
        }
    }

    pub fn and(&mut self, parts: Vec<NodeId>) -> NodeId {
        self.junction(parts, true)
    }

    pub fn or(&mut self, parts: Vec<NodeId>) -> NodeId {
        self.junction(parts, false)
    }

    pub fn next(&mut self, a: NodeId) -> NodeId {
        if a == FALSE {
            return FALSE;
        }
        self.intern(Node::Next(a))
    }

    pub fn weak_next(&mut self, a: NodeId) -> NodeId {
        if a == TRUE {
            return TRUE;
        }
        self.intern(Node::WeakNext(a))
    }

    pub fn until(&mut self, a: NodeId, b: NodeId) -> NodeId {
        match (a, b) {
            (_, TRUE) => TRUE,
            (_, FALSE) => FALSE,
            (FALSE, _) => b,
            (TRUE, _) => self.eventually(b),
            _ => self.intern(Node::Until(a, b)),
        }
    }

    pub fn release(&mut self, a: NodeId, b: NodeId) -> NodeId {
        match (a, b) {
            (_, TRUE) => TRUE,
            (_, FALSE) => FALSE,
            (TRUE, _) => b,
            (FALSE, _) => self.always(b),
            _ => self.intern(Node::Release(a, b)),
        }
    }

    pub fn eventually(&mut self, a: NodeId) -> NodeId {
        if a == TRUE || a == FALSE {
            return a;
        }
        self.intern(Node::Eventually(a))
    }

    pub fn always(&mut self, a: NodeId) -> NodeId {
        if a == TRUE || a == FALSE {
            return a;
        }
        self.intern(Node::Always(a))
    }

    fn atom_index(&self, a: &AtomicPredicate) -> usize {
        self.atoms.binary_search(a).expect("atom registered in the alphabet")
    }

    /// Negation-normal form of `f` (or of `!f` when `positive` is false).
    pub fn from_formula(&mut self, f: &Formula, positive: bool) -> NodeId {
        use Formula::*;
        match (f, positive) {
            (True, true) | (False, false) => TRUE,
            (True, false) | (False, true) => FALSE,
            (Atom(a), _) => {
                let i = self.atom_index(a);
                self.intern(if positive { Node::Atom(i) } else { Node::NegAtom(i) })
            }
            (Not(a), _) => self.from_formula(a, !positive),
            (Or(a, b), true) | (And(a, b), false) => {
                let parts = vec![self.from_formula(a, positive), self.from_formula(b, positive)];
                self.or(parts)
            }
            (And(a, b), true) | (Or(a, b), false) => {
                let parts = vec![self.from_formula(a, positive), self.from_formula(b, positive)];
                self.and(parts)
            }
            (Implies(a, b), true) => {
                let parts = vec![self.from_formula(a, false), self.from_formula(b, true)];
                self.or(parts)
            }
            (Implies(a, b), false) => {
                let parts = vec![self.from_formula(a, true), self.from_formula(b, false)];
                self.and(parts)
            }
            (Next(a), true) => {
                let a = self.from_formula(a, true);
                self.next(a)
            }
            (Next(a), false) => {
                let a = self.from_formula(a, false);
                self.weak_next(a)
            }
            (Until(a, b), true) => {
                let (a, b) = (self.from_formula(a, true), self.from_formula(b, true));
                self.until(a, b)
            }
            (Until(a, b), false) => {
                let (a, b) = (self.from_formula(a, false), self.from_formula(b, false));
                self.release(a, b)
            }
            (Eventually(a), true) | (Always(a), false) => {
                let a = self.from_formula(a, positive);
                self.eventually(a)
            }
            (Always(a), true) | (Eventually(a), false) => {
                let a = self.from_formula(a, positive);
                self.always(a)
            }
        }
    }

    /// Obligations for the rest of the trace after reading `letter` at the
    /// current position, given that `id` must hold here.
    pub fn progress(&mut self, id: NodeId, letter: Letter) -> Dnf {
        if let Some(d) = self.cache.get(&(id, letter)) {
            return d.clone();
        }
        let dnf = match self.node(id).clone() {
            Node::True => vec![vec![]],
            Node::False => vec![],
            Node::Atom(i) => if letter & (1 << i) != 0 { vec![vec![]] } else { vec![] },
            Node::NegAtom(i) => if letter & (1 << i) == 0 { vec![vec![]] } else { vec![] },
            Node::And(kids) => {
                let mut acc: Dnf = vec![vec![]];
                for k in kids {
                    if acc.is_empty() {
                        break;
                    }
                    let d = self.progress(k, letter);
                    acc = self.canonical(cross(acc, &d));
                }
                acc
            }
            Node::Or(kids) => {
                let mut acc = Vec::new();
                for k in kids {
                    acc.extend(self.progress(k, letter));
                }
                acc
            }
            Node::Next(_) | Node::WeakNext(_) => vec![vec![id]],
            Node::Until(a, b) => {
                let mut out = self.progress(b, letter);
                let pa = self.progress(a, letter);
                let stay = cross(pa, &vec![vec![self.next(id)]]);
                out.extend(stay);
                out
            }
            Node::Release(a, b) => {
                let mut either = self.progress(a, letter);
                either.push(vec![self.weak_next(id)]);
                let pb = self.progress(b, letter);
                cross(pb, &either)
            }
            Node::Eventually(a) => {
                let mut out = self.progress(a, letter);
                out.push(vec![self.next(id)]);
                out
            }
            Node::Always(a) => {
                let pa = self.progress(a, letter);
                let w = self.weak_next(id);
                cross(pa, &vec![vec![w]])
            }
        };
        let dnf = self.canonical(dnf);
        self.cache.insert((id, letter), dnf.clone());
        dnf
    }

    /// Sorts clauses and obligations, drops trivial obligations, strengthens
    /// weak obligations in clauses that already require a next position, and
    /// removes subsumed clauses.
    pub fn canonical(&mut self, dnf: Dnf) -> Dnf {
        let mut clauses: Vec<Clause> = Vec::with_capacity(dnf.len());
        for mut c in dnf {
            if c.contains(&FALSE) {
                continue;
            }
            c.retain(|&o| o != TRUE);
            let strong = c.iter().any(|&o| matches!(self.node(o), Node::Next(_)));
            if strong {
                for o in c.iter_mut() {
                    if let Node::WeakNext(inner) = *self.node(*o) {
                        *o = self.next(inner);
                    }
                }
                let t = self.next(TRUE);
                if c.iter().any(|&o| o != t) {
                    c.retain(|&o| o != t);
                }
            }
            c.sort_unstable();
            c.dedup();
            clauses.push(c);
        }
        clauses.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
        clauses.dedup();
        let mut kept: Vec<Clause> = Vec::with_capacity(clauses.len());
        for c in clauses {
            let subsumed = kept.iter().any(|k| k.iter().all(|o| c.binary_search(o).is_ok()));
            if !subsumed {
                kept.push(c);
            }
        }
        kept.sort();
        kept
    }

    /// Successor of a progression state on `letter`.
    pub fn step(&mut self, state: &Dnf, letter: Letter) -> Dnf {
        let mut out = Vec::new();
        for clause in state {
            let mut acc: Dnf = vec![vec![]];
            for &o in clause {
                let inner = match *self.node(o) {
                    Node::Next(x) | Node::WeakNext(x) => x,
                    _ => unreachable!("clauses hold only next-step obligations"),
                };
                let d = self.progress(inner, letter);
                acc = self.canonical(cross(acc, &d));
                if acc.is_empty() {
                    break;
                }
            }
            out.extend(acc);
        }
        self.canonical(out)
    }

    /// True when the trace may end right after the letter that produced `state`.
    pub fn accepts_at_end(&self, state: &Dnf) -> bool {
        state.iter().any(|c| c.iter().all(|&o| matches!(self.node(o), Node::WeakNext(_))))
    }

    pub fn to_formula(&self, id: NodeId) -> Formula {
        let atom = |i: usize| Formula::Atom(self.atoms[i]);
        match self.node(id) {
            Node::True => Formula::True,
            Node::False => Formula::False,
            Node::Atom(i) => atom(*i),
            Node::NegAtom(i) => Formula::not(atom(*i)),
            Node::And(kids) => self.fold(kids, Formula::and),
            Node::Or(kids) => self.fold(kids, Formula::or),
            Node::Next(a) => Formula::next(self.to_formula(*a)),
            Node::WeakNext(a) => Formula::not(Formula::next(negate(self.to_formula(*a)))),
            Node::Until(a, b) => Formula::until(self.to_formula(*a), self.to_formula(*b)),
            Node::Release(a, b) => {
                Formula::not(Formula::until(negate(self.to_formula(*a)), negate(self.to_formula(*b))))
            }
            Node::Eventually(a) => Formula::eventually(self.to_formula(*a)),
            Node::Always(a) => Formula::always(self.to_formula(*a)),
        }
    }

    fn fold(&self, kids: &[NodeId], join: fn(Formula, Formula) -> Formula) -> Formula {
        let mut it = kids.iter().map(|&k| self.to_formula(k));
        let first = it.next().expect("junctions have at least two children");
        it.fold(first, join)
    }

    /// Readable form of a progression state.
    pub fn describe(&self, state: &Dnf) -> String {
        if state.is_empty() {
            return "false".into();
        }
        let clauses: Vec<String> = state
            .iter()
            .map(|c| {
                if c.is_empty() {
                    return "true".into();
                }
                let obs: Vec<String> = c
                    .iter()
                    .map(|&o| match *self.node(o) {
                        Node::Next(x) => format!("Xs({})", self.to_formula(x)),
                        Node::WeakNext(x) => format!("Xw({})", self.to_formula(x)),
                        _ => unreachable!("clauses hold only next-step obligations"),
                    })
                    .collect();
                obs.join(" & ")
            })
            .collect();
        clauses.join(" | ")
    }
}

fn cross(left: Dnf, right: &Dnf) -> Dnf {
    let mut out = Vec::with_capacity(left.len() * right.len());
    for l in &left {
        for r in right {
            let mut c = l.clone();
            c.extend_from_slice(r);
            out.push(c);
        }
    }
    out
}

fn negate(f: Formula) -> Formula {
    match f {
        Formula::Not(inner) => *inner,
        other => Formula::not(other),
    }
}

/// Progresses `body` through one letter: for every nonempty continuation
/// `rest`, `letter . rest` satisfies `body` iff `rest` satisfies the result.
pub fn progress<'a>(body: &Formula, letter: impl IntoIterator<Item = &'a AtomicPredicate>) -> Formula {
    let alphabet = Alphabet::new(body.atoms());
    let mut arena = Arena::new(&alphabet);
    let root = arena.from_formula(body, true);
    let l = alphabet.letter_of(letter);
    let dnf = arena.progress(root, l);
    let disjuncts: Vec<NodeId> = dnf
        .into_iter()
        .map(|c| {
            let inner: Vec<NodeId> = c
                .into_iter()
                .map(|o| match *arena.node(o) {
                    Node::Next(x) | Node::WeakNext(x) => x,
                    _ => unreachable!("clauses hold only next-step obligations"),
                })
                .collect();
            arena.and(inner)
        })
        .collect();
    let id = arena.or(disjuncts);
    arena.to_formula(id)
}

#[cfg(test)]
mod tests {
    use super::*;
    use AtomicPredicate::*;

    fn a() -> Formula {
        Formula::atom(SecFirst)
    }
    fn b() -> Formula {
        Formula::atom(NonsecSecond)
    }

    #[test]
    fn atom_satisfied_progresses_to_true() {
        assert_eq!(progress(&a(), &[SecFirst]), Formula::True);
        assert_eq!(progress(&a(), &[]), Formula::False);
    }

    #[test]
    fn until_unrolls_to_itself() {
        let u = Formula::until(a(), b());
        assert_eq!(progress(&u, &[SecFirst]), u);
        assert_eq!(progress(&u, &[NonsecSecond]), Formula::True);
    }

    #[test]
    fn always_unrolls_to_itself() {
        let g = Formula::always(a());
        assert_eq!(progress(&g, &[SecFirst]), g);
        assert_eq!(progress(&g, &[]), Formula::False);
    }
}
