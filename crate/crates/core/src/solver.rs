//! Naive bottom-up evaluation of weighted programs over ground data, with
//! counts of the partial matches it performs.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use petgraph::graph::{DiGraph, NodeIndex};

use crate::builtin::{self, Eval};
use crate::semiring::{Semiring, SemiringKind};
use crate::syntax::{format_rule, Aggregator, Program, Rule, Style, Subgoal};
use crate::term::{unify, Substitution, Term};

pub const DEFAULT_MAX_ITERS: usize = 10_000;

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum SolveError {
    #[error("rule is not range-restricted: {rule}")]
    NonRangeRestricted { rule: String },
    #[error("builtin `{subgoal}` has unbound arguments in rule: {rule}")]
    UnboundBuiltin { rule: String, subgoal: String },
    #[error("no fixpoint after {iterations} iterations")]
    NonConvergence { iterations: usize },
    #[error("`=` rules give `{item}` conflicting values {first} and {second}")]
    Conflict {
        item: String,
        first: String,
        second: String,
    },
    #[error("literal {literal} is not a value of {semiring}")]
    BadLiteral {
        literal: String,
        semiring: &'static str,
    },
}

/// A finite map from ground terms to values; absent terms are zero.
pub struct Valuation<S: Semiring> {
    values: BTreeMap<Term, S::Value>,
}

impl<S: Semiring> Valuation<S> {
    pub fn new() -> Self {
        Valuation {
            values: BTreeMap::new(),
        }
    }

    pub fn get(&self, item: &Term) -> S::Value {
        self.values.get(item).cloned().unwrap_or_else(S::zero)
    }

    /// Sets `item`; zero values are dropped.
    pub fn set(&mut self, item: Term, value: S::Value) {
        if S::is_zero(&value) {
            self.values.remove(&item);
        } else {
            self.values.insert(item, value);
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Term, &S::Value)> {
        self.values.iter()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Items with a non-zero value.
    pub fn support(&self) -> BTreeSet<Term> {
        self.values.keys().cloned().collect()
    }

    /// Pointwise [`Semiring::approx_eq`], treating absent items as zero.
    pub fn approx_eq(&self, other: &Self) -> bool {
        let keys: BTreeSet<&Term> = self.values.keys().chain(other.values.keys()).collect();
        keys.into_iter()
            .all(|k| S::approx_eq(&self.get(k), &other.get(k)))
    }

    /// Values as text, in term order.
    pub fn render(&self) -> BTreeMap<Term, String> {
        self.values
            .iter()
            .map(|(k, v)| (k.clone(), S::render(v)))
            .collect()
    }
}

impl<S: Semiring> FromIterator<(Term, S::Value)> for Valuation<S> {
    fn from_iter<I: IntoIterator<Item = (Term, S::Value)>>(iter: I) -> Self {
        let mut v = Valuation::new();
        for (k, x) in iter {
            v.set(k, x);
        }
        v
    }
}

impl<S: Semiring> Default for Valuation<S> {
    fn default() -> Self {
        Self::new()
    }
}

impl<S: Semiring> Clone for Valuation<S> {
    fn clone(&self) -> Self {
        Valuation {
            values: self.values.clone(),
        }
    }
}

impl<S: Semiring> PartialEq for Valuation<S> {
    fn eq(&self, other: &Self) -> bool {
        self.values == other.values
    }
}

impl<S: Semiring> fmt::Debug for Valuation<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_map()
            .entries(self.values.iter().map(|(k, v)| (k.to_string(), v)))
            .finish()
    }
}

/// Items with a non-zero value.
pub fn support<S: Semiring>(v: &Valuation<S>) -> BTreeSet<Term> {
    v.support()
}

/// Chooses which body subgoal to match next.
pub trait JoinPlanner {
    /// Picks one of `remaining` (body positions of rule `rule`, never
    /// constants). `matched` lists the positions matched so far with the
    /// ground item each matched, starting with the driver if there is one.
    fn next(
        &self,
        rule: usize,
        theta: &Substitution,
        matched: &[(usize, Term)],
        remaining: &[usize],
    ) -> usize;
}

/// Left to right.
pub struct BodyOrder;

impl JoinPlanner for BodyOrder {
    fn next(&self, _: usize, _: &Substitution, _: &[(usize, Term)], remaining: &[usize]) -> usize {
        remaining[0]
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, serde::Serialize)]
pub struct RunStats {
    /// Number of steps taken, including the one confirming the fixpoint.
    pub iterations: usize,
    /// Search states visited in one step at the fixpoint when every rule is
    /// driven by each chart item matching each of its driver subgoals.
    pub prefix_firings: u64,
    /// Complete body matches per program rule in that step.
    pub rule_firings: Vec<u64>,
    /// Whether the ground dependency graph at the fixpoint has a cycle.
    pub cyclic: bool,
}

#[derive(Clone, Copy, Debug)]
pub struct RunOptions {
    pub max_iters: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            max_iters: DEFAULT_MAX_ITERS,
        }
    }
}

type ModeKey = (String, usize, Vec<bool>);

/// Support of a valuation, indexed by functor and lazily by query mode.
struct Chart {
    by_functor: HashMap<(String, usize), Vec<Term>>,
    modes: RefCell<HashMap<ModeKey, HashMap<Vec<Term>, Vec<usize>>>>,
}

impl Chart {
    fn new<'a>(items: impl IntoIterator<Item = &'a Term>) -> Chart {
        let mut by_functor: HashMap<(String, usize), Vec<Term>> = HashMap::new();
        for t in items {
            if let Some((f, n)) = t.functor() {
                by_functor
                    .entry((f.to_string(), n))
                    .or_default()
                    .push(t.clone());
            }
        }
        Chart {
            by_functor,
            modes: RefCell::new(HashMap::new()),
        }
    }

    /// Items that may unify with `pattern`, retrieved through the index for
    /// its ground argument positions.
    fn candidates(&self, pattern: &Term) -> Vec<Term> {
        let Some((f, n)) = pattern.functor() else {
            return Vec::new();
        };
        let Some(items) = self.by_functor.get(&(f.to_string(), n)) else {
            return Vec::new();
        };
        let mode: Vec<bool> = pattern.args().iter().map(Term::is_ground).collect();
        if !mode.iter().any(|&b| b) {
            return items.clone();
        }
        let key: Vec<Term> = pattern
            .args()
            .iter()
            .zip(&mode)
            .filter(|(_, &g)| g)
            .map(|(a, _)| a.clone())
            .collect();
        let mut modes = self.modes.borrow_mut();
        let index = modes
            .entry((f.to_string(), n, mode.clone()))
            .or_insert_with(|| {
                let mut ix: HashMap<Vec<Term>, Vec<usize>> = HashMap::new();
                for (i, t) in items.iter().enumerate() {
                    let k: Vec<Term> = t
                        .args()
                        .iter()
                        .zip(&mode)
                        .filter(|(_, &g)| g)
                        .map(|(a, _)| a.clone())
                        .collect();
                    ix.entry(k).or_default().push(i);
                }
                ix
            });
        index
            .get(&key)
            .map(|ix| ix.iter().map(|&i| items[i].clone()).collect())
            .unwrap_or_default()
    }
}

fn is_builtin_goal(g: &Subgoal) -> bool {
    g.term().is_some_and(builtin::is_builtin_term)
}

/// Positions that can drive `rule`: non-builtin item and query subgoals.
pub fn driver_positions(rule: &Rule) -> Vec<usize> {
    rule.body
        .iter()
        .enumerate()
        .filter(|(_, g)| g.term().is_some() && !is_builtin_goal(g))
        .map(|(i, _)| i)
        .collect()
}

struct Search<'a> {
    rule_index: usize,
    rule: &'a Rule,
    chart: &'a Chart,
    planner: &'a dyn JoinPlanner,
    nodes: u64,
}

impl Search<'_> {
    fn evaluable(&self, pos: usize, theta: &Substitution) -> bool {
        let g = &self.rule.body[pos];
        !is_builtin_goal(g) || builtin::eval(g.term().unwrap(), theta) != Eval::Unbound
    }

    /// Visits every completion of the partial match, counting states.
    fn run(
        &mut self,
        theta: Substitution,
        matched: &mut Vec<(usize, Term)>,
        remaining: &mut Vec<usize>,
        leaf: &mut dyn FnMut(&Substitution, &[(usize, Term)]) -> Result<(), SolveError>,
    ) -> Result<(), SolveError> {
        self.nodes += 1;
        if remaining.is_empty() {
            return leaf(&theta, matched);
        }
        let mut pos = self
            .planner
            .next(self.rule_index, &theta, matched, remaining);
        if !remaining.contains(&pos) || !self.evaluable(pos, &theta) {
            pos = match remaining
                .iter()
                .copied()
                .find(|&p| self.evaluable(p, &theta))
            {
                Some(p) => p,
                None => {
                    let g = self.rule.body[remaining[0]].term().unwrap();
                    return Err(SolveError::UnboundBuiltin {
                        rule: format_rule(self.rule, Style::Plain),
                        subgoal: theta.resolve(g).to_string(),
                    });
                }
            };
        }
        let goal = self.rule.body[pos]
            .term()
            .expect("constants are never searched");
        let mut extensions = Vec::new();
        if builtin::is_builtin_term(goal) {
            match builtin::eval(goal, &theta) {
                Eval::True => extensions.push((theta.resolve(goal), theta.clone())),
                Eval::Bind(ext) => extensions.push((ext.resolve(goal), ext)),
                Eval::False | Eval::Unbound => {}
            }
        } else {
            let pattern = theta.resolve(goal);
            for item in self.chart.candidates(&pattern) {
                if let Some(ext) = unify(&pattern, &item, &theta) {
                    extensions.push((item, ext));
                }
            }
        }
        let slot = remaining.iter().position(|&p| p == pos).unwrap();
        remaining.remove(slot);
        for (item, ext) in extensions {
            matched.push((pos, item));
            let r = self.run(ext, matched, remaining, leaf);
            matched.pop();
            if r.is_err() {
                remaining.insert(slot, pos);
                return r;
            }
        }
        remaining.insert(slot, pos);
        Ok(())
    }
}

/// A weighted program together with its ground data, ready to evaluate.
struct Evaluator<'a, S: Semiring> {
    rules: Vec<&'a Rule>,
    /// Rules below this index belong to the program; the rest are data.
    program_len: usize,
    literals: Vec<Vec<Option<S::Value>>>,
    planner: &'a dyn JoinPlanner,
}

struct StepResult<S: Semiring> {
    values: Valuation<S>,
    firings: Vec<u64>,
    edges: Vec<(Term, Term)>,
}

impl<'a, S: Semiring> Evaluator<'a, S> {
    fn new(
        p: &'a Program,
        data: &'a [Rule],
        planner: &'a dyn JoinPlanner,
    ) -> Result<Self, SolveError> {
        let rules: Vec<&Rule> = p.rules.iter().chain(data).collect();
        let mut literals = Vec::with_capacity(rules.len());
        for r in &rules {
            if !r.is_range_restricted() {
                return Err(SolveError::NonRangeRestricted {
                    rule: format_rule(r, Style::Plain),
                });
            }
            let mut lits = Vec::with_capacity(r.body.len());
            for g in &r.body {
                lits.push(match g {
                    Subgoal::Const { value, text } => Some(S::from_literal(*value).ok_or_else(
                        || SolveError::BadLiteral {
                            literal: text.clone(),
                            semiring: S::NAME,
                        },
                    )?),
                    _ => None,
                });
            }
            literals.push(lits);
        }
        Ok(Evaluator {
            rules,
            program_len: p.rules.len(),
            literals,
            planner,
        })
    }

    fn search<'s>(&'s self, i: usize, chart: &'s Chart) -> Search<'s> {
        Search {
            rule_index: i,
            rule: self.rules[i],
            chart,
            planner: self.planner,
            nodes: 0,
        }
    }

    fn open_positions(&self, i: usize) -> Vec<usize> {
        (0..self.rules[i].body.len())
            .filter(|&k| self.rules[i].body[k].term().is_some())
            .collect()
    }

    fn step(&self, v: &Valuation<S>, with_edges: bool) -> Result<StepResult<S>, SolveError> {
        let chart = Chart::new(v.values.keys());
        let mut sums: BTreeMap<Term, S::Value> = BTreeMap::new();
        let mut assigned: HashMap<Term, S::Value> = HashMap::new();
        let mut firings = vec![0; self.rules.len()];
        let mut edges = Vec::new();
        for (i, rule) in self.rules.iter().enumerate() {
            let mut search = self.search(i, &chart);
            let mut remaining = self.open_positions(i);
            let mut leaf = |theta: &Substitution, _: &[(usize, Term)]| -> Result<(), SolveError> {
                firings[i] += 1;
                let head = theta.resolve(&rule.head);
                let mut value = S::one();
                for (k, g) in rule.body.iter().enumerate() {
                    let factor = match g {
                        Subgoal::Const { .. } => self.literals[i][k].clone().unwrap(),
                        Subgoal::Query(_) => S::one(),
                        Subgoal::Item(t) if builtin::is_builtin_term(t) => S::one(),
                        Subgoal::Item(t) => v.get(&theta.resolve(t)),
                    };
                    value = S::times(&value, &factor);
                    if with_edges {
                        if let Some(t) = g.term().filter(|t| !builtin::is_builtin_term(t)) {
                            edges.push((theta.resolve(t), head.clone()));
                        }
                    }
                }
                if rule.aggregator == Aggregator::Assign {
                    if let Some(prev) = assigned.get(&head) {
                        if !S::approx_eq(prev, &value) {
                            return Err(SolveError::Conflict {
                                item: head.to_string(),
                                first: S::render(prev),
                                second: S::render(&value),
                            });
                        }
                        return Ok(());
                    }
                    assigned.insert(head.clone(), value.clone());
                }
                let entry = sums.entry(head).or_insert_with(S::zero);
                *entry = S::plus(entry, &value);
                Ok(())
            };
            search.run(
                Substitution::new(),
                &mut Vec::new(),
                &mut remaining,
                &mut leaf,
            )?;
        }
        Ok(StepResult {
            values: sums.into_iter().collect(),
            firings,
            edges,
        })
    }

    /// Search states visited when each program rule is driven from every
    /// chart item matching each driver position.
    fn prefix_firings(&self, v: &Valuation<S>) -> Result<u64, SolveError> {
        let chart = Chart::new(v.values.keys());
        let mut total = 0;
        for i in 0..self.program_len {
            let rule = self.rules[i];
            let drivers = driver_positions(rule);
            let mut leaf = |_: &Substitution, _: &[(usize, Term)]| Ok(());
            if drivers.is_empty() {
                let mut search = self.search(i, &chart);
                search.run(
                    Substitution::new(),
                    &mut Vec::new(),
                    &mut self.open_positions(i),
                    &mut leaf,
                )?;
                total += search.nodes;
                continue;
            }
            for d in drivers {
                let goal = rule.body[d].term().unwrap();
                let mut remaining: Vec<usize> = self
                    .open_positions(i)
                    .into_iter()
                    .filter(|&k| k != d)
                    .collect();
                for item in chart.candidates(goal) {
                    if let Some(theta) = unify(goal, &item, &Substitution::new()) {
                        let mut search = self.search(i, &chart);
                        search.run(theta, &mut vec![(d, item)], &mut remaining, &mut leaf)?;
                        total += search.nodes;
                    }
                }
            }
        }
        Ok(total)
    }
}

/// One application of the step operator to `v`.
pub fn step<S: Semiring>(p: &Program, v: &Valuation<S>) -> Result<Valuation<S>, SolveError> {
    let ev = Evaluator::<S>::new(p, &[], &BodyOrder)?;
    Ok(ev.step(v, false)?.values)
}

/// Iterates the step operator on `p` plus `data` from the all-zero
/// valuation until it stops changing.
pub fn run<S: Semiring>(
    p: &Program,
    data: &[Rule],
    opts: &RunOptions,
) -> Result<(Valuation<S>, RunStats), SolveError> {
    run_with(p, data, opts, &BodyOrder)
}

/// [`run`] with the join order used for counting chosen by `planner`.
pub fn run_with<S: Semiring>(
    p: &Program,
    data: &[Rule],
    opts: &RunOptions,
    planner: &dyn JoinPlanner,
) -> Result<(Valuation<S>, RunStats), SolveError> {
    let ev = Evaluator::<S>::new(p, data, planner)?;
    let mut v = Valuation::new();
    for iterations in 1..=opts.max_iters {
        let next = ev.step(&v, false)?.values;
        if next.approx_eq(&v) {
            let last = ev.step(&next, true)?;
            let stats = RunStats {
                iterations,
                prefix_firings: ev.prefix_firings(&next)?,
                rule_firings: last.firings[..ev.program_len].to_vec(),
                cyclic: has_cycle(&last.edges),
            };
            return Ok((next, stats));
        }
        v = next;
    }
    Err(SolveError::NonConvergence {
        iterations: opts.max_iters,
    })
}

fn has_cycle(edges: &[(Term, Term)]) -> bool {
    let mut g = DiGraph::<(), ()>::new();
    let mut nodes: HashMap<&Term, NodeIndex> = HashMap::new();
    for (a, b) in edges {
        let x = *nodes.entry(a).or_insert_with(|| g.add_node(()));
        let y = *nodes.entry(b).or_insert_with(|| g.add_node(()));
        g.update_edge(x, y, ());
    }
    petgraph::algo::is_cyclic_directed(&g)
}

/// [`run_with`] for a semiring chosen at runtime, with values rendered as
/// text.
pub fn run_kind(
    kind: SemiringKind,
    p: &Program,
    data: &[Rule],
    opts: &RunOptions,
    planner: &dyn JoinPlanner,
) -> Result<(BTreeMap<Term, String>, RunStats), SolveError> {
    fn go<S: Semiring>(
        p: &Program,
        data: &[Rule],
        opts: &RunOptions,
        planner: &dyn JoinPlanner,
    ) -> Result<(BTreeMap<Term, String>, RunStats), SolveError> {
        let (v, stats) = run_with::<S>(p, data, opts, planner)?;
        Ok((v.render(), stats))
    }
    match kind {
        SemiringKind::Bool => go::<crate::Boolean>(p, data, opts, planner),
        SemiringKind::RealPlusTimes => go::<crate::Real>(p, data, opts, planner),
        SemiringKind::MinPlus => go::<crate::Tropical>(p, data, opts, planner),
        SemiringKind::MaxTimes => go::<crate::Viterbi>(p, data, opts, planner),
        SemiringKind::Count => go::<crate::Counting>(p, data, opts, planner),
    }
}
