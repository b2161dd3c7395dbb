//! Constraint propagation: saturating constraint sets with sound
//! consequences, simplifying simple types, and the subtype test built on them.

use std::collections::{BTreeSet, HashMap};

use crate::builtin::{self, eval_ground};
use crate::syntax::{format_type, parse_analysis_spec, PropagationRule, SimpleType, Style};
use crate::term::{fresh, match_term, unify, unify_in_place, Substitution, Term, TermLike};

/// Caps that keep saturation finite.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Limits {
    pub max_constraints: usize,
    /// Largest term depth a derived constraint may have; inputs deeper than
    /// this raise the cap to their own depth.
    pub max_depth: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            max_constraints: 512,
            max_depth: 4,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum LimitExceeded {
    #[error("saturation derived more than {0} constraints")]
    TooManyConstraints(usize),
    #[error("saturation derived `{0}`, deeper than the depth limit")]
    TooDeep(String),
}

const DEFAULT_RULES: &str = "
(I < K) <== (I < J), (J < K).
fail <== (I < I).
(I <= K) <== (I <= J), (J <= K).
(I < K) <== (I < J), (J <= K).
(I < K) <== (I <= J), (J < K).
";

fn fail() -> Term {
    Term::atom("fail")
}

/// A propagation rule set together with saturation limits.
#[derive(Clone, Debug)]
pub struct Propagator {
    rules: Vec<PropagationRule>,
    facts: Vec<Term>,
    limits: Limits,
}

impl Propagator {
    /// The order rules for `<` and `<=` plus the given user rules.
    pub fn new(user_rules: &[PropagationRule], limits: Limits) -> Propagator {
        let defaults = parse_analysis_spec(DEFAULT_RULES)
            .expect("default rules parse")
            .prop_rules;
        Propagator::with_rules(
            defaults.into_iter().chain(user_rules.iter().cloned()),
            limits,
        )
    }

    /// Exactly the given rules, without the order defaults.
    pub fn with_rules(
        rules: impl IntoIterator<Item = PropagationRule>,
        limits: Limits,
    ) -> Propagator {
        // Renamed apart so matching never confuses rule and constraint variables.
        let (facts, rules): (Vec<_>, Vec<_>) = rules
            .into_iter()
            .map(|r| fresh(&r))
            .partition(|r| r.premises.is_empty());
        Propagator {
            rules,
            facts: facts.into_iter().map(|r| r.conclusion).collect(),
            limits,
        }
    }

    pub fn limits(&self) -> Limits {
        self.limits
    }

    pub fn rules(&self) -> &[PropagationRule] {
        &self.rules
    }

    /// Ground facts asserted by premise-free rules.
    pub fn facts(&self) -> &[Term] {
        &self.facts
    }

    /// Closes `constraints` under the rules. A set containing `fail` is
    /// returned as `{fail}`.
    pub fn saturate(&self, constraints: &BTreeSet<Term>) -> Result<BTreeSet<Term>, LimitExceeded> {
        let depth_cap = constraints
            .iter()
            .map(Term::depth)
            .max()
            .unwrap_or(0)
            .max(self.limits.max_depth);
        let mut set: BTreeSet<Term> = constraints.clone();
        set.extend(self.facts.iter().cloned());
        loop {
            if set
                .iter()
                .any(|c| c.is_atom("fail") || eval_ground_is_false(c))
            {
                return Ok(BTreeSet::from([fail()]));
            }
            let index = index_by_functor(&set);
            let mut new = Vec::new();
            for rule in &self.rules {
                for theta in matches(&rule.premises, &index) {
                    let c = theta.resolve(&rule.conclusion);
                    if c.is_atom("fail") {
                        return Ok(BTreeSet::from([fail()]));
                    }
                    if !set.contains(&c) {
                        new.push(c);
                    }
                }
            }
            if new.is_empty() {
                return Ok(set);
            }
            for c in new {
                if c.depth() > depth_cap {
                    return Err(LimitExceeded::TooDeep(c.to_string()));
                }
                set.insert(c);
            }
            if set.len() > self.limits.max_constraints {
                return Err(LimitExceeded::TooManyConstraints(
                    self.limits.max_constraints,
                ));
            }
        }
    }

    /// What `saturate` adds to the empty set: facts every type inherits.
    pub fn background(&self) -> Result<BTreeSet<Term>, LimitExceeded> {
        self.saturate(&BTreeSet::new())
    }

    /// Saturates and simplifies a simple type. Returns `None` if its
    /// constraints are unsatisfiable. Solved builtins and background facts
    /// are removed from the result.
    pub fn propagate_type(&self, t: &SimpleType) -> Result<Option<SimpleType>, LimitExceeded> {
        let background = self.background()?;
        let mut current = t.clone();
        loop {
            let saturated = self.saturate(&current.constraints)?;
            if saturated.contains(&fail()) {
                return Ok(None);
            }
            current.constraints = saturated;
            match simplify(&current) {
                None => return Ok(None),
                Some((next, changed)) => {
                    current = next;
                    if !changed {
                        break;
                    }
                }
            }
        }
        current
            .constraints
            .retain(|c| !background.contains(c) && !(builtin::is_builtin_term(c) && c.is_ground()));
        Ok(Some(current))
    }

    /// One-sided subtype test: `true` guarantees every ground instance of
    /// `s` is one of `t`; `false` may be a missed containment.
    pub fn subtype(&self, s: &SimpleType, t: &SimpleType) -> bool {
        let s_prop = match self.propagate_type(s) {
            Ok(x) => x,
            Err(_) => return false,
        };
        let Some(s_prop) = s_prop else {
            return true;
        };
        let Some(r) = intersect(s, t) else {
            return false;
        };
        match self.propagate_type(&r) {
            Ok(Some(r_prop)) => canonical_text(&r_prop) == canonical_text(&s_prop),
            _ => false,
        }
    }
}

fn eval_ground_is_false(c: &Term) -> bool {
    builtin::is_builtin_term(c) && eval_ground(c) == Some(false)
}

type Index<'a> = HashMap<(&'a str, usize), Vec<&'a Term>>;

fn index_by_functor(set: &BTreeSet<Term>) -> Index<'_> {
    let mut index: Index<'_> = HashMap::new();
    for c in set {
        if let Some(key) = c.functor() {
            index.entry(key).or_default().push(c);
        }
    }
    index
}

/// All substitutions matching `premises` one-way into the indexed set.
fn matches(premises: &[Term], index: &Index<'_>) -> Vec<Substitution> {
    let mut out = Vec::new();
    let mut stack = vec![(0usize, Substitution::new())];
    while let Some((k, theta)) = stack.pop() {
        if k == premises.len() {
            out.push(theta);
            continue;
        }
        let Some(key) = premises[k].functor() else {
            continue;
        };
        for target in index.get(&key).into_iter().flatten() {
            let mut ext = theta.clone();
            if match_term(&premises[k], target, &mut ext) {
                stack.push((k + 1, ext));
            }
        }
    }
    out
}

/// Solves builtins that determine bindings: `eq` unifies its sides and
/// arithmetic with enough known arguments binds the rest. Returns `None` if
/// a builtin is unsatisfiable, else the new type and whether it changed.
fn simplify(t: &SimpleType) -> Option<(SimpleType, bool)> {
    let mut current = t.clone();
    let mut changed = false;
    'outer: loop {
        for c in &current.constraints {
            let Some((name, _)) = c.functor() else {
                continue;
            };
            if !builtin::is_builtin(name, c.args().len()) {
                continue;
            }
            let theta = if name == "eq" {
                let mut theta = Substitution::new();
                if !unify_in_place(&c.args()[0], &c.args()[1], &mut theta) {
                    return None;
                }
                theta
            } else {
                match builtin::eval(c, &Substitution::new()) {
                    builtin::Eval::False => return None,
                    builtin::Eval::Bind(theta) => theta,
                    builtin::Eval::True | builtin::Eval::Unbound => continue,
                }
            };
            let solved = c.clone();
            let mut rest = current.clone();
            rest.constraints.remove(&solved);
            current = rest.apply(&theta);
            changed = true;
            continue 'outer;
        }
        return Some((current, changed));
    }
}

/// Intersection of two simple types: unify their heads and pool both
/// constraint sets. `t` is renamed apart first.
pub fn intersect(s: &SimpleType, t: &SimpleType) -> Option<SimpleType> {
    let t = fresh(t);
    let theta = unify(&s.head, &t.head, &Substitution::new())?;
    let mut out = s.apply(&theta);
    out.constraints
        .extend(t.constraints.iter().map(|c| theta.resolve(c)));
    Some(out)
}

/// Text identifying a simple type up to variable renaming.
pub fn canonical_text(t: &SimpleType) -> String {
    format_type(t, Style::Canonical)
}
