//! Type inference by abstract forward chaining: booleanized rules are run
//! over simple types instead of ground items, with relaxation, propagation,
//! head truncation and redundancy removal keeping the iteration finite.

use std::collections::{BTreeMap, BTreeSet};

use crate::builtin;
use crate::propagate::{canonical_text, LimitExceeded, Limits, Propagator};
use crate::semiring::{booleanize, SemiringKind};
use crate::syntax::{AnalysisSpec, Program, Rule, SimpleType, Subgoal};
use crate::term::{fresh, truncate, unify, Substitution, Term, TermLike};

/// Knobs for [`infer_types`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct InferOptions {
    /// Head truncation depth; `None` disables truncation.
    pub depth: Option<usize>,
    pub max_rounds: usize,
    /// Drop constraints on non-head variables after each round.
    pub relax: bool,
    /// Drop simple types contained in another after each round.
    pub remove_redundant: bool,
    pub limits: Limits,
}

impl Default for InferOptions {
    fn default() -> Self {
        InferOptions {
            depth: Some(4),
            max_rounds: 100,
            relax: true,
            remove_redundant: true,
            limits: Limits::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum InferError {
    #[error("type inference did not converge within {rounds} rounds")]
    Diverged {
        rounds: usize,
        last: Vec<SimpleType>,
    },
    #[error(transparent)]
    Limit(#[from] LimitExceeded),
}

/// A boolean type program: the booleanized rules, the input types as rules,
/// and the vocabulary needed to decide which subgoals are delayed.
#[derive(Clone, Debug)]
pub struct TypeProgram {
    /// Booleanized program rules.
    pub rules: Vec<Rule>,
    /// For each entry of `rules`, its index in the source program.
    pub origin: Vec<usize>,
    /// Source rules deleted by booleanization because of a zero constant.
    pub deleted: Vec<usize>,
    pub input_types: Vec<SimpleType>,
    /// Relations left symbolic as delayed constraints.
    pub spec_params: BTreeSet<String>,
    program_params: BTreeSet<String>,
    typed: BTreeSet<(String, usize)>,
    pub propagator: Propagator,
}

impl TypeProgram {
    pub fn new(
        p: &Program,
        kind: SemiringKind,
        spec: &AnalysisSpec,
        limits: Limits,
    ) -> TypeProgram {
        let (boolean, origin) = booleanize(p, kind);
        let deleted = (0..p.rules.len()).filter(|i| !origin.contains(i)).collect();
        let typed = spec
            .input_types
            .iter()
            .filter_map(|t| t.head.functor().map(|(f, n)| (f.to_string(), n)))
            .collect();
        TypeProgram {
            rules: boolean.rules,
            origin,
            deleted,
            input_types: spec.input_types.clone(),
            spec_params: spec.params.clone(),
            program_params: p.params.clone(),
            typed,
            propagator: Propagator::new(&spec.prop_rules, limits),
        }
    }

    /// Whether subgoal `b` is carried as a constraint rather than looked up.
    pub fn is_delayed(&self, b: &Term) -> bool {
        let Some((f, n)) = b.functor() else {
            return false;
        };
        builtin::is_builtin(f, n)
            || self.spec_params.contains(f)
            || (self.program_params.contains(f) && !self.typed.contains(&(f.to_string(), n)))
    }

    fn input_rules(&self) -> Vec<Rule> {
        self.input_types
            .iter()
            .map(|t| {
                let body = t.constraints.iter().cloned().map(Subgoal::Item).collect();
                Rule::new(t.head.clone(), crate::syntax::Aggregator::Bool, body)
            })
            .collect()
    }

    /// The simple types of `sigma` (renamed apart) that `b` may match under
    /// `theta`, each with the constraints it contributes; a delayed subgoal
    /// contributes itself.
    pub fn lookup(
        &self,
        sigma: &[SimpleType],
        b: &Term,
        theta: &Substitution,
    ) -> Vec<(Substitution, Vec<Term>)> {
        if self.is_delayed(b) {
            return vec![(theta.clone(), vec![b.clone()])];
        }
        let b = theta.resolve(b);
        let key = b.functor();
        sigma
            .iter()
            .filter(|s| s.head.functor() == key)
            .filter_map(|s| {
                let s = fresh(s);
                let ext = unify(&s.head, &b, theta)?;
                Some((ext, s.constraints.into_iter().collect()))
            })
            .collect()
    }

    /// Every simple type rule `r` can build from `sigma`, before
    /// propagation. Branches whose constraints already saturate to `fail`
    /// are pruned.
    pub fn expand(&self, sigma: &[SimpleType], r: &Rule) -> Result<Vec<SimpleType>, LimitExceeded> {
        let body: Vec<&Term> = r.body.iter().filter_map(Subgoal::term).collect();
        let mut out = Vec::new();
        self.expand_from(
            sigma,
            r,
            &body,
            0,
            Substitution::new(),
            Vec::new(),
            &mut out,
        )?;
        Ok(out)
    }

    #[allow(clippy::too_many_arguments)]
    fn expand_from(
        &self,
        sigma: &[SimpleType],
        r: &Rule,
        body: &[&Term],
        k: usize,
        theta: Substitution,
        acc: Vec<Term>,
        out: &mut Vec<SimpleType>,
    ) -> Result<(), LimitExceeded> {
        if k == body.len() {
            let t = SimpleType::new(r.head.clone(), acc);
            out.push(t.apply(&theta));
            return Ok(());
        }
        for (ext, cs) in self.lookup(sigma, body[k], &theta) {
            let mut next = acc.clone();
            next.extend(cs);
            let resolved: BTreeSet<Term> = next.iter().map(|c| ext.resolve(c)).collect();
            if self
                .propagator
                .saturate(&resolved)?
                .iter()
                .any(|c| c.is_atom("fail"))
            {
                continue;
            }
            self.expand_from(sigma, r, body, k + 1, ext, next, out)?;
        }
        Ok(())
    }

    /// One abstract step over program rules and input types.
    pub fn inflate(&self, sigma: &[SimpleType]) -> Result<Vec<SimpleType>, LimitExceeded> {
        let mut out = Vec::new();
        for r in self.rules.iter().chain(self.input_rules().iter()) {
            out.extend(self.expand(sigma, r)?);
        }
        Ok(out)
    }

    /// Removes every type contained in another remaining type, scanning in
    /// order.
    pub fn remove_redundant(&self, types: Vec<SimpleType>) -> Vec<SimpleType> {
        let mut kept = types;
        let mut i = 0;
        while i < kept.len() {
            let redundant =
                (0..kept.len()).any(|j| j != i && self.propagator.subtype(&kept[i], &kept[j]));
            if redundant {
                kept.remove(i);
            } else {
                i += 1;
            }
        }
        kept
    }

    /// One round of the fixpoint iteration.
    pub fn step(
        &self,
        sigma: &[SimpleType],
        opts: &InferOptions,
    ) -> Result<Vec<SimpleType>, LimitExceeded> {
        let mut by_text: BTreeMap<String, SimpleType> = BTreeMap::new();
        for t in self.inflate(sigma)? {
            let Some(mut t) = self.propagator.propagate_type(&t)? else {
                continue;
            };
            if let Some(d) = opts.depth {
                t.head = truncate(&t.head, d);
            }
            if opts.relax {
                t = relax(&t);
            }
            by_text.entry(canonical_text(&t)).or_insert(t);
        }
        let types: Vec<SimpleType> = by_text.into_values().collect();
        Ok(if opts.remove_redundant {
            self.remove_redundant(types)
        } else {
            types
        })
    }

    /// Iterates [`TypeProgram::step`] from the empty type to a fixpoint.
    pub fn infer(&self, opts: &InferOptions) -> Result<TypeEnv, InferError> {
        let mut sigma: Vec<SimpleType> = Vec::new();
        for round in 1..=opts.max_rounds {
            let next = self.step(&sigma, opts)?;
            if texts(&next) == texts(&sigma) {
                return Ok(TypeEnv {
                    types: next,
                    rounds: round,
                });
            }
            sigma = next;
        }
        Err(InferError::Diverged {
            rounds: opts.max_rounds,
            last: sigma,
        })
    }

    /// Source indices of rules that can never fire given `env`.
    pub fn dead_rules(&self, env: &TypeEnv) -> Result<Vec<usize>, LimitExceeded> {
        let mut dead = self.deleted.clone();
        for (r, &i) in self.rules.iter().zip(&self.origin) {
            let mut alive = false;
            for t in self.expand(&env.types, r)? {
                if self.propagator.propagate_type(&t)?.is_some() {
                    alive = true;
                    break;
                }
            }
            if !alive {
                dead.push(i);
            }
        }
        dead.sort_unstable();
        Ok(dead)
    }

    /// Names used in rule bodies that nothing defines or declares.
    pub fn undeclared(&self) -> Vec<String> {
        let mut defined: BTreeSet<(String, usize)> = self
            .rules
            .iter()
            .filter_map(|r| r.head.functor().map(|(f, n)| (f.to_string(), n)))
            .collect();
        defined.extend(self.typed.iter().cloned());
        let mut out = BTreeSet::new();
        for r in &self.rules {
            for b in r.body.iter().filter_map(Subgoal::term) {
                if let Some((f, n)) = b.functor() {
                    if !self.is_delayed(b) && !defined.contains(&(f.to_string(), n)) {
                        out.insert(format!("{f}/{n}"));
                    }
                }
            }
        }
        out.into_iter().collect()
    }
}

fn texts(types: &[SimpleType]) -> Vec<String> {
    let mut out: Vec<String> = types.iter().map(canonical_text).collect();
    out.sort();
    out
}

/// Keeps only the constraints whose variables all occur in the head.
pub fn relax(t: &SimpleType) -> SimpleType {
    let head_vars = t.head.var_set();
    SimpleType::new(
        t.head.clone(),
        t.constraints
            .iter()
            .filter(|c| c.var_set().is_subset(&head_vars))
            .cloned(),
    )
}

/// A fixpoint of abstract forward chaining.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TypeEnv {
    /// Sorted by canonical text.
    pub types: Vec<SimpleType>,
    /// Rounds run, including the one confirming the fixpoint.
    pub rounds: usize,
}

impl TypeEnv {
    /// The types whose head is an item `p` defines by rules.
    pub fn derived<'a>(&'a self, p: &'a Program) -> impl Iterator<Item = &'a SimpleType> + 'a {
        let defined = p.defined();
        self.types.iter().filter(move |t| {
            t.head
                .functor()
                .is_some_and(|(f, n)| defined.contains(&(f.to_string(), n)))
        })
    }
}

/// Infers simple types covering every item `p` can derive from inputs
/// described by `spec`.
pub fn infer_types(
    p: &Program,
    kind: SemiringKind,
    spec: &AnalysisSpec,
    opts: &InferOptions,
) -> Result<(TypeProgram, TypeEnv), InferError> {
    let tp = TypeProgram::new(p, kind, spec, opts.limits);
    let env = tp.infer(opts)?;
    Ok((tp, env))
}
