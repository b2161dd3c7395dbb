//! Terms of the Herbrand universe, substitutions and unification.
//!
//! A [`Term`] is a variable, an integer constant, or a compound `f(t1,...,tn)`;
//! symbolic constants such as `s` or `nil` are compounds with no arguments.
//! Variables carry a source name plus a generation number: names written in
//! program text have generation 0, and [`fresh`] hands out new generations
//! from a process-wide atomic counter so renamed copies never collide.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

static NEXT_GENERATION: AtomicU64 = AtomicU64::new(1);

/// A logic variable.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var {
    name: Arc<str>,
    generation: u64,
}

impl Var {
    /// A variable as written in source text.
    pub fn named(name: &str) -> Var {
        Var {
            name: Arc::from(name),
            generation: 0,
        }
    }

    /// A never-before-issued variable that keeps `name` for display.
    pub fn fresh(name: &str) -> Var {
        Var {
            name: Arc::from(name),
            generation: NEXT_GENERATION.fetch_add(1, Ordering::Relaxed),
        }
    }

    /// A fresh variable sharing this variable's display name.
    pub fn renamed(&self) -> Var {
        Var {
            name: self.name.clone(),
            generation: NEXT_GENERATION.fetch_add(1, Ordering::Relaxed),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn generation(&self) -> u64 {
        self.generation
    }
}

impl fmt::Debug for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.generation == 0 {
            write!(f, "{}", self.name)
        } else {
            write!(f, "{}_{}", self.name, self.generation)
        }
    }
}

/// A (possibly nonground) term.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Var(Var),
    Int(i64),
    App(Arc<str>, Arc<[Term]>),
}

impl Term {
    pub fn var(name: &str) -> Term {
        Term::Var(Var::named(name))
    }

    pub fn int(value: i64) -> Term {
        Term::Int(value)
    }

    pub fn atom(name: &str) -> Term {
        Term::App(Arc::from(name), Arc::from(Vec::new()))
    }

    pub fn app(name: &str, args: Vec<Term>) -> Term {
        Term::App(Arc::from(name), Arc::from(args))
    }

    pub fn nil() -> Term {
        Term::atom("nil")
    }

    pub fn cons(head: Term, tail: Term) -> Term {
        Term::app("cons", vec![head, tail])
    }

    /// Builds `cons(x1, cons(x2, ... tail))`.
    pub fn list(items: Vec<Term>, tail: Term) -> Term {
        items
            .into_iter()
            .rev()
            .fold(tail, |acc, item| Term::cons(item, acc))
    }

    pub fn as_var(&self) -> Option<&Var> {
        match self {
            Term::Var(v) => Some(v),
            _ => None,
        }
    }

    pub fn as_int(&self) -> Option<i64> {
        match self {
            Term::Int(i) => Some(*i),
            _ => None,
        }
    }

    /// Functor name and arity; `None` for variables and integers.
    pub fn functor(&self) -> Option<(&str, usize)> {
        match self {
            Term::App(name, args) => Some((name, args.len())),
            _ => None,
        }
    }

    pub fn args(&self) -> &[Term] {
        match self {
            Term::App(_, args) => args,
            _ => &[],
        }
    }

    pub fn is_atom(&self, name: &str) -> bool {
        matches!(self, Term::App(f, args) if args.is_empty() && &**f == name)
    }

    pub fn is_ground(&self) -> bool {
        match self {
            Term::Var(_) => false,
            Term::Int(_) => true,
            Term::App(_, args) => args.iter().all(Term::is_ground),
        }
    }

    /// Nesting depth with the root at depth 0; constants and variables have depth 0.
    pub fn depth(&self) -> usize {
        match self {
            Term::App(_, args) if !args.is_empty() => {
                1 + args.iter().map(Term::depth).max().unwrap_or(0)
            }
            _ => 0,
        }
    }

    pub fn occurs(&self, var: &Var) -> bool {
        match self {
            Term::Var(v) => v == var,
            Term::Int(_) => false,
            Term::App(_, args) => args.iter().any(|a| a.occurs(var)),
        }
    }

    fn visit_vars(&self, f: &mut dyn FnMut(&Var)) {
        match self {
            Term::Var(v) => f(v),
            Term::Int(_) => {}
            Term::App(_, args) => args.iter().for_each(|a| a.visit_vars(f)),
        }
    }

    /// If this term is a proper list `[a,b,...|tail]`, its elements and tail.
    fn as_list(&self) -> Option<(Vec<&Term>, &Term)> {
        let mut items = Vec::new();
        let mut cur = self;
        loop {
            match cur {
                Term::App(f, args) if &**f == "cons" && args.len() == 2 => {
                    items.push(&args[0]);
                    cur = &args[1];
                }
                _ => break,
            }
        }
        if items.is_empty() {
            None
        } else {
            Some((items, cur))
        }
    }
}

impl fmt::Debug for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_term(f, self, &|v: &Var| v.to_string())
    }
}

/// Writes `term` using `name` to spell variables; lists use bracket sugar.
pub(crate) fn write_term(
    out: &mut dyn fmt::Write,
    term: &Term,
    name: &dyn Fn(&Var) -> String,
) -> fmt::Result {
    match term {
        Term::Var(v) => out.write_str(&name(v)),
        Term::Int(i) => write!(out, "{i}"),
        Term::App(functor, args) => {
            if args.is_empty() {
                if &**functor == "nil" {
                    return out.write_str("[]");
                }
                return out.write_str(functor);
            }
            if let Some((items, tail)) = term.as_list() {
                out.write_char('[')?;
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        out.write_char(',')?;
                    }
                    write_term(out, item, name)?;
                }
                if !tail.is_atom("nil") {
                    out.write_char('|')?;
                    write_term(out, tail, name)?;
                }
                return out.write_char(']');
            }
            out.write_str(functor)?;
            out.write_char('(')?;
            for (i, arg) in args.iter().enumerate() {
                if i > 0 {
                    out.write_char(',')?;
                }
                write_term(out, arg, name)?;
            }
            out.write_char(')')
        }
    }
}

/// A finite map from variables to terms.
///
/// Bindings may chain (`X -> Y`, `Y -> f(Z)`); [`Substitution::resolve`]
/// follows chains all the way, so applying a substitution is idempotent.
#[derive(Clone, Default, PartialEq, Eq)]
pub struct Substitution {
    map: HashMap<Var, Term>,
}

impl Substitution {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    /// Raw binding of `var`, without chasing chains.
    pub fn get(&self, var: &Var) -> Option<&Term> {
        self.map.get(var)
    }

    /// Adds a binding. Callers are responsible for keeping the map acyclic.
    pub fn bind(&mut self, var: Var, term: Term) {
        self.map.insert(var, term);
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Var, &Term)> {
        self.map.iter()
    }

    /// The value of `var` with all chains resolved, or `var` itself if unbound.
    pub fn lookup(&self, var: &Var) -> Term {
        self.resolve(&Term::Var(var.clone()))
    }

    /// Follows variable-to-variable chains at the top of `term` only.
    pub fn walk<'a>(&'a self, mut term: &'a Term) -> &'a Term {
        while let Term::Var(v) = term {
            match self.map.get(v) {
                Some(next) => term = next,
                None => break,
            }
        }
        term
    }

    /// Applies the substitution everywhere in `term`, chasing chains.
    pub fn resolve(&self, term: &Term) -> Term {
        if self.map.is_empty() {
            return term.clone();
        }
        match self.walk(term) {
            Term::Var(v) => Term::Var(v.clone()),
            Term::Int(i) => Term::Int(*i),
            Term::App(f, args) => {
                if args.is_empty() {
                    return Term::App(f.clone(), args.clone());
                }
                let new_args: Vec<Term> = args.iter().map(|a| self.resolve(a)).collect();
                Term::App(f.clone(), Arc::from(new_args))
            }
        }
    }

    /// The sub-map restricted to `vars`, fully resolved.
    pub fn restrict<'a>(&self, vars: impl IntoIterator<Item = &'a Var>) -> Substitution {
        let mut out = Substitution::new();
        for v in vars {
            let value = self.lookup(v);
            if value != Term::Var(v.clone()) {
                out.bind(v.clone(), value);
            }
        }
        out
    }
}

impl fmt::Debug for Substitution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut entries: Vec<_> = self.map.iter().collect();
        entries.sort_by(|a, b| a.0.cmp(b.0));
        f.write_str("{")?;
        for (i, (v, t)) in entries.into_iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{v} -> {t}")?;
        }
        f.write_str("}")
    }
}

/// Most general unifier of `a` and `b` extending `theta`, with occurs check.
pub fn unify(a: &Term, b: &Term, theta: &Substitution) -> Option<Substitution> {
    let mut out = theta.clone();
    if unify_in_place(a, b, &mut out) {
        Some(out)
    } else {
        None
    }
}

/// Unifies in place; on failure `theta` may hold partial bindings.
pub fn unify_in_place(a: &Term, b: &Term, theta: &mut Substitution) -> bool {
    let mut stack = vec![(a.clone(), b.clone())];
    while let Some((x, y)) = stack.pop() {
        let x = theta.walk(&x).clone();
        let y = theta.walk(&y).clone();
        match (&x, &y) {
            (Term::Var(u), Term::Var(v)) if u == v => {}
            (Term::Var(u), _) => {
                if occurs_resolved(u, &y, theta) {
                    return false;
                }
                theta.bind(u.clone(), y.clone());
            }
            (_, Term::Var(v)) => {
                if occurs_resolved(v, &x, theta) {
                    return false;
                }
                theta.bind(v.clone(), x.clone());
            }
            (Term::Int(i), Term::Int(j)) => {
                if i != j {
                    return false;
                }
            }
            (Term::App(f, fa), Term::App(g, ga)) => {
                if f != g || fa.len() != ga.len() {
                    return false;
                }
                for (p, q) in fa.iter().zip(ga.iter()) {
                    stack.push((p.clone(), q.clone()));
                }
            }
            _ => return false,
        }
    }
    true
}

fn occurs_resolved(var: &Var, term: &Term, theta: &Substitution) -> bool {
    match theta.walk(term) {
        Term::Var(v) => v == var,
        Term::Int(_) => false,
        Term::App(_, args) => args.iter().any(|a| occurs_resolved(var, a, theta)),
    }
}

/// One-way matching: binds variables of `pattern` so that it equals `target`.
///
/// Variables occurring in `target` are treated as rigid constants. Bindings
/// in `theta` are interpreted as pattern bindings and compared structurally.
pub fn match_term(pattern: &Term, target: &Term, theta: &mut Substitution) -> bool {
    match pattern {
        Term::Var(v) => match theta.get(v) {
            Some(bound) => bound == target,
            None => {
                theta.bind(v.clone(), target.clone());
                true
            }
        },
        Term::Int(i) => matches!(target, Term::Int(j) if i == j),
        Term::App(f, args) => match target {
            Term::App(g, targs) if f == g && args.len() == targs.len() => args
                .iter()
                .zip(targs.iter())
                .all(|(p, t)| match_term(p, t, theta)),
            _ => false,
        },
    }
}

/// Anything containing terms: rules, simple types, collections of them.
pub trait TermLike: Sized {
    /// Calls `f` on every variable occurrence, left to right.
    fn each_var(&self, f: &mut dyn FnMut(&Var));

    /// Applies `theta` to every contained term.
    fn apply(&self, theta: &Substitution) -> Self;

    /// Distinct variables in first-occurrence order.
    fn vars(&self) -> Vec<Var> {
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        self.each_var(&mut |v| {
            if seen.insert(v.clone()) {
                out.push(v.clone());
            }
        });
        out
    }

    fn var_set(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        self.each_var(&mut |v| {
            out.insert(v.clone());
        });
        out
    }
}

impl TermLike for Term {
    fn each_var(&self, f: &mut dyn FnMut(&Var)) {
        self.visit_vars(f)
    }

    fn apply(&self, theta: &Substitution) -> Self {
        theta.resolve(self)
    }
}

impl<T: TermLike> TermLike for Vec<T> {
    fn each_var(&self, f: &mut dyn FnMut(&Var)) {
        self.iter().for_each(|t| t.each_var(f))
    }

    fn apply(&self, theta: &Substitution) -> Self {
        self.iter().map(|t| t.apply(theta)).collect()
    }
}

impl<A: TermLike, B: TermLike> TermLike for (A, B) {
    fn each_var(&self, f: &mut dyn FnMut(&Var)) {
        self.0.each_var(f);
        self.1.each_var(f);
    }

    fn apply(&self, theta: &Substitution) -> Self {
        (self.0.apply(theta), self.1.apply(theta))
    }
}

/// Applies `theta` to `t`.
pub fn subst<T: TermLike>(t: &T, theta: &Substitution) -> T {
    t.apply(theta)
}

/// Renames every variable of `t` to a never-used variable.
pub fn fresh<T: TermLike>(t: &T) -> T {
    let mut renaming = Substitution::new();
    for v in t.vars() {
        renaming.bind(v.clone(), Term::Var(v.renamed()));
    }
    t.apply(&renaming)
}

/// Replaces every subterm at depth `depth` (root at depth 0) with a fresh variable.
pub fn truncate(t: &Term, depth: usize) -> Term {
    assert!(depth >= 1, "truncation depth must be at least 1");
    truncate_at(t, 0, depth)
}

fn truncate_at(t: &Term, level: usize, limit: usize) -> Term {
    if level >= limit {
        return Term::Var(Var::fresh("T"));
    }
    match t {
        Term::App(f, args) if !args.is_empty() => {
            let new_args: Vec<Term> = args
                .iter()
                .map(|a| truncate_at(a, level + 1, limit))
                .collect();
            Term::App(f.clone(), Arc::from(new_args))
        }
        other => other.clone(),
    }
}

/// Renames variables to `V0, V1, ...` in first-occurrence order.
pub fn canonicalize<T: TermLike>(t: &T) -> T {
    // Go through fresh variables first: a term may already contain a `Vi`,
    // and renaming in place would then chain `Vi -> Vj -> Vi`.
    let t = fresh(t);
    let mut renaming = Substitution::new();
    for (i, v) in t.vars().into_iter().enumerate() {
        renaming.bind(v, Term::Var(Var::named(&format!("V{i}"))));
    }
    t.apply(&renaming)
}

/// Structural equality up to a consistent renaming of variables.
pub fn alpha_eq<T: TermLike + PartialEq>(a: &T, b: &T) -> bool {
    canonicalize(a) == canonicalize(b)
}
