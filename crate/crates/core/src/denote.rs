//! Finite interpretations of parametric constraints, used to test ground
//! membership in simple types and to enumerate their denotations.

use std::collections::{BTreeSet, HashMap};

use crate::builtin::{self, Eval};
use crate::syntax::SimpleType;
use crate::term::{match_term, unify, Substitution, Term, TermLike, Var};

/// A finite universe together with a finite extension for each parametric
/// relation. Builtins keep their fixed meaning; unknown relations are empty.
#[derive(Clone, Debug, Default)]
pub struct Interpretation {
    universe: Vec<Term>,
    relations: HashMap<(String, usize), BTreeSet<Vec<Term>>>,
}

impl Interpretation {
    pub fn new(universe: impl IntoIterator<Item = Term>) -> Interpretation {
        Interpretation {
            universe: universe.into_iter().collect(),
            relations: HashMap::new(),
        }
    }

    pub fn universe(&self) -> &[Term] {
        &self.universe
    }

    /// Adds a ground tuple to relation `name`.
    pub fn add(&mut self, name: &str, tuple: Vec<Term>) {
        debug_assert!(tuple.iter().all(Term::is_ground));
        self.relations
            .entry((name.to_string(), tuple.len()))
            .or_default()
            .insert(tuple);
    }

    /// Adds the ground atom `fact`, e.g. `n(3)`.
    pub fn add_fact(&mut self, fact: &Term) {
        let (name, _) = fact.functor().expect("facts are compound terms");
        self.add(name, fact.args().to_vec());
    }

    pub fn relation(&self, name: &str, arity: usize) -> impl Iterator<Item = &Vec<Term>> {
        self.relations
            .get(&(name.to_string(), arity))
            .into_iter()
            .flatten()
    }

    /// Truth of a ground constraint.
    pub fn holds(&self, c: &Term) -> bool {
        debug_assert!(c.is_ground());
        if builtin::is_builtin_term(c) {
            return builtin::eval_ground(c) == Some(true);
        }
        match c.functor() {
            Some((name, n)) => self
                .relations
                .get(&(name.to_string(), n))
                .is_some_and(|r| r.contains(c.args())),
            None => false,
        }
    }

    /// Every extension of `theta` grounding all variables of `constraints`
    /// that satisfies them. Variables not pinned down by a relation or a
    /// builtin range over the universe.
    pub fn solutions(&self, constraints: &[Term], theta: &Substitution) -> Vec<Substitution> {
        let mut out = Vec::new();
        self.solve(constraints.to_vec(), theta.clone(), &mut |s| {
            out.push(s.clone());
            true
        });
        out
    }

    /// Whether some extension of `theta` satisfies `constraints`.
    pub fn satisfiable(&self, constraints: &[Term], theta: &Substitution) -> bool {
        let mut found = false;
        self.solve(constraints.to_vec(), theta.clone(), &mut |_| {
            found = true;
            false
        });
        found
    }

    /// Calls `emit` per solution until it returns `false`; returns whether
    /// the search ran to completion.
    fn solve(
        &self,
        pending: Vec<Term>,
        theta: Substitution,
        emit: &mut dyn FnMut(&Substitution) -> bool,
    ) -> bool {
        let resolved: Vec<Term> = pending.iter().map(|c| theta.resolve(c)).collect();
        // Decide ground constraints first; they only prune.
        let mut open = Vec::new();
        for c in resolved {
            if c.is_ground() {
                if !self.holds(&c) {
                    return true;
                }
            } else {
                open.push(c);
            }
        }
        if open.is_empty() {
            return emit(&theta);
        }
        // Prefer a constraint that generates bindings from a finite source.
        for (i, c) in open.iter().enumerate() {
            let rest: Vec<Term> = open
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, c)| c.clone())
                .collect();
            if builtin::is_builtin_term(c) {
                match builtin::eval(c, &theta) {
                    Eval::Bind(ext) => return self.solve(rest, ext, emit),
                    Eval::False => return true,
                    Eval::True => return self.solve(rest, theta, emit),
                    Eval::Unbound => continue,
                }
            }
            if c.is_atom("fail") {
                return true;
            }
            let (name, n) = c.functor().expect("constraints are compound");
            for tuple in self.relation(name, n) {
                let candidate = Term::app(name, tuple.clone());
                if let Some(ext) = unify(c, &candidate, &theta) {
                    if !self.solve(rest.clone(), ext, emit) {
                        return false;
                    }
                }
            }
            return true;
        }
        // Only unbound builtins remain: enumerate one variable over the universe.
        let var: Var = open
            .vars()
            .into_iter()
            .next()
            .expect("open constraints have variables");
        for value in &self.universe {
            let mut ext = theta.clone();
            ext.bind(var.clone(), value.clone());
            if !self.solve(open.clone(), ext, emit) {
                return false;
            }
        }
        true
    }

    /// Whether ground `item` lies in the denotation of `t`.
    pub fn member(&self, t: &SimpleType, item: &Term) -> bool {
        let mut theta = Substitution::new();
        if !match_term(&t.head, item, &mut theta) {
            return false;
        }
        let constraints: Vec<Term> = t.constraints.iter().cloned().collect();
        self.satisfiable(&constraints, &theta)
    }

    /// The ground instances of `t` whose head variables take values that
    /// satisfying assignments produce, with unconstrained head variables
    /// ranging over the universe.
    pub fn denotation(&self, t: &SimpleType) -> BTreeSet<Term> {
        let constraints: Vec<Term> = t.constraints.iter().cloned().collect();
        let constrained = constraints.var_set();
        let mut out = BTreeSet::new();
        let free: Vec<Var> = t
            .head
            .vars()
            .into_iter()
            .filter(|v| !constrained.contains(v))
            .collect();
        for s in self.solutions(&constraints, &Substitution::new()) {
            self.ground_free(&free, s, &mut |full| {
                out.insert(full.resolve(&t.head));
            });
        }
        out
    }

    fn ground_free(&self, free: &[Var], theta: Substitution, f: &mut dyn FnMut(&Substitution)) {
        match free.split_first() {
            None => f(&theta),
            Some((v, rest)) => {
                for value in &self.universe {
                    let mut ext = theta.clone();
                    ext.bind(v.clone(), value.clone());
                    self.ground_free(rest, ext, f);
                }
            }
        }
    }
}
