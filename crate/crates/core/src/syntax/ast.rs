use std::collections::BTreeSet;
use std::fmt;

use crate::cost::SymExpr;
use crate::term::{Substitution, Term, TermLike, Var};

/// How a rule's contributions to its head are combined.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Aggregator {
    /// `+=`
    Sum,
    /// `min=`
    Min,
    /// `max=`
    Max,
    /// `=`: at most one distinct aggregand per head.
    Assign,
    /// `:-`
    Bool,
}

impl Aggregator {
    pub fn symbol(self) -> &'static str {
        match self {
            Aggregator::Sum => "+=",
            Aggregator::Min => "min=",
            Aggregator::Max => "max=",
            Aggregator::Assign => "=",
            Aggregator::Bool => ":-",
        }
    }
}

impl fmt::Display for Aggregator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

/// One factor of a rule body.
#[derive(Clone, Debug, PartialEq)]
pub enum Subgoal {
    /// A chart item or builtin constraint.
    Item(Term),
    /// A semiring constant; `text` is the literal as written.
    Const { value: f64, text: String },
    /// `?x`: one if `x` has a non-zero value, zero otherwise.
    Query(Term),
}

impl Subgoal {
    pub fn constant(value: f64) -> Subgoal {
        Subgoal::Const {
            value,
            text: format_number(value),
        }
    }

    /// The term inside an item or query subgoal.
    pub fn term(&self) -> Option<&Term> {
        match self {
            Subgoal::Item(t) | Subgoal::Query(t) => Some(t),
            Subgoal::Const { .. } => None,
        }
    }
}

pub(crate) fn format_number(value: f64) -> String {
    if value.is_infinite() {
        if value > 0.0 { "inf" } else { "-inf" }.to_string()
    } else if value.fract() == 0.0 && value.abs() < 1e15 {
        format!("{}", value as i64)
    } else {
        format!("{value}")
    }
}

impl TermLike for Subgoal {
    fn each_var(&self, f: &mut dyn FnMut(&Var)) {
        if let Some(t) = self.term() {
            t.each_var(f)
        }
    }

    fn apply(&self, theta: &Substitution) -> Self {
        match self {
            Subgoal::Item(t) => Subgoal::Item(t.apply(theta)),
            Subgoal::Query(t) => Subgoal::Query(t.apply(theta)),
            c => c.clone(),
        }
    }
}

/// `head agg body_1 * ... * body_K.`
#[derive(Clone, Debug, PartialEq)]
pub struct Rule {
    pub head: Term,
    pub aggregator: Aggregator,
    pub body: Vec<Subgoal>,
}

impl Rule {
    pub fn new(head: Term, aggregator: Aggregator, body: Vec<Subgoal>) -> Rule {
        Rule {
            head,
            aggregator,
            body,
        }
    }

    /// An axiom `head agg value.`
    pub fn axiom(head: Term, aggregator: Aggregator, value: f64) -> Rule {
        Rule::new(head, aggregator, vec![Subgoal::constant(value)])
    }

    /// Every head variable occurs in the body.
    pub fn is_range_restricted(&self) -> bool {
        let body = self.body.var_set();
        self.head.var_set().is_subset(&body)
    }
}

impl TermLike for Rule {
    fn each_var(&self, f: &mut dyn FnMut(&Var)) {
        self.head.each_var(f);
        self.body.each_var(f);
    }

    fn apply(&self, theta: &Substitution) -> Self {
        Rule {
            head: self.head.apply(theta),
            aggregator: self.aggregator,
            body: self.body.apply(theta),
        }
    }
}

/// A list of rules plus the functors declared as external inputs.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Program {
    pub rules: Vec<Rule>,
    pub params: BTreeSet<String>,
    /// Value of a `%% semiring:` pragma, if present.
    pub semiring: Option<String>,
}

impl Program {
    pub fn is_param(&self, functor: &str) -> bool {
        self.params.contains(functor)
    }

    /// Functor/arity pairs of all rule heads.
    pub fn defined(&self) -> BTreeSet<(String, usize)> {
        self.rules
            .iter()
            .filter_map(|r| r.head.functor().map(|(f, n)| (f.to_string(), n)))
            .collect()
    }
}

/// A nonground head with delayed constraints; denotes the set of ground
/// instances of the head whose constraints hold.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SimpleType {
    pub head: Term,
    pub constraints: BTreeSet<Term>,
}

impl SimpleType {
    pub fn new(head: Term, constraints: impl IntoIterator<Item = Term>) -> SimpleType {
        SimpleType {
            head,
            constraints: constraints.into_iter().collect(),
        }
    }

    pub fn is_failed(&self) -> bool {
        self.constraints.iter().any(|c| c.is_atom("fail"))
    }
}

impl TermLike for SimpleType {
    fn each_var(&self, f: &mut dyn FnMut(&Var)) {
        self.head.each_var(f);
        self.constraints.iter().for_each(|c| c.each_var(f));
    }

    fn apply(&self, theta: &Substitution) -> Self {
        SimpleType {
            head: self.head.apply(theta),
            constraints: self.constraints.iter().map(|c| c.apply(theta)).collect(),
        }
    }
}

/// `conclusion <== premise_1, ..., premise_n.`
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PropagationRule {
    pub conclusion: Term,
    pub premises: Vec<Term>,
}

impl PropagationRule {
    pub fn new(conclusion: Term, premises: Vec<Term>) -> PropagationRule {
        PropagationRule {
            conclusion,
            premises,
        }
    }
}

impl TermLike for PropagationRule {
    fn each_var(&self, f: &mut dyn FnMut(&Var)) {
        self.conclusion.each_var(f);
        self.premises.each_var(f);
    }

    fn apply(&self, theta: &Substitution) -> Self {
        PropagationRule {
            conclusion: self.conclusion.apply(theta),
            premises: self.premises.apply(theta),
        }
    }
}

/// `|p_1, ..., p_m| <= bound.` where `+X` marks variables assumed bound.
#[derive(Clone, Debug, PartialEq)]
pub struct CardinalityDecl {
    pub patterns: Vec<Term>,
    pub bound_vars: BTreeSet<Var>,
    pub bound: SymExpr,
}

impl TermLike for CardinalityDecl {
    fn each_var(&self, f: &mut dyn FnMut(&Var)) {
        self.patterns.each_var(f)
    }

    fn apply(&self, theta: &Substitution) -> Self {
        let bound_vars = self
            .bound_vars
            .iter()
            .filter_map(|v| match theta.lookup(v) {
                Term::Var(w) => Some(w),
                _ => None,
            })
            .collect();
        CardinalityDecl {
            patterns: self.patterns.apply(theta),
            bound_vars,
            bound: self.bound.clone(),
        }
    }
}

/// Everything a `.dtype` file declares.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct AnalysisSpec {
    pub input_types: Vec<SimpleType>,
    /// Parametric constraint names such as `k` or `n`.
    pub params: BTreeSet<String>,
    pub prop_rules: Vec<PropagationRule>,
    pub card_decls: Vec<CardinalityDecl>,
    /// Symbols used on the right of cardinality declarations.
    pub size_params: BTreeSet<String>,
}

impl AnalysisSpec {
    /// Appends another spec's declarations to this one.
    pub fn extend(&mut self, other: AnalysisSpec) {
        self.input_types.extend(other.input_types);
        self.params.extend(other.params);
        self.prop_rules.extend(other.prop_rules);
        self.card_decls.extend(other.card_decls);
        self.size_params.extend(other.size_params);
    }
}
