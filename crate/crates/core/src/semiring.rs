//! Semirings and booleanization of weighted programs.

use std::fmt;
use std::marker::PhantomData;
use std::str::FromStr;

use num_traits::{Float, PrimInt, Unsigned};

use crate::syntax::{Aggregator, Program, Rule, Subgoal};
use crate::term::Term;

/// A commutative semiring over `Value`.
pub trait Semiring {
    type Value: Clone + PartialEq + fmt::Debug;

    const NAME: &'static str;

    fn zero() -> Self::Value;
    fn one() -> Self::Value;
    fn plus(a: &Self::Value, b: &Self::Value) -> Self::Value;
    fn times(a: &Self::Value, b: &Self::Value) -> Self::Value;

    /// Equality used for the fixpoint test.
    fn approx_eq(a: &Self::Value, b: &Self::Value) -> bool {
        a == b
    }

    fn is_zero(a: &Self::Value) -> bool {
        *a == Self::zero()
    }

    /// Interprets a numeric literal from program text; `None` if the literal
    /// is outside the carrier.
    fn from_literal(value: f64) -> Option<Self::Value>;

    fn render(a: &Self::Value) -> String;
}

/// Relative tolerance for real-valued fixpoint tests.
pub const REL_TOL: f64 = 1e-9;

fn float_close<F: Float>(a: F, b: F) -> bool {
    if a == b {
        return true;
    }
    if a.is_infinite() || b.is_infinite() || a.is_nan() || b.is_nan() {
        return false;
    }
    let tol = F::from(REL_TOL).expect("tolerance representable");
    (a - b).abs() <= tol * a.abs().max(b.abs())
}

fn render_float<F: Float + fmt::Display>(a: &F) -> String {
    if a.is_infinite() {
        if *a > F::zero() { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{a}")
    }
}

/// `⟨ℝ≥0, +, ×⟩`: total weight.
pub struct RealPlusTimes<F>(PhantomData<F>);

impl<F: Float + fmt::Debug + fmt::Display> Semiring for RealPlusTimes<F> {
    type Value = F;
    const NAME: &'static str = "real_plus_times";

    fn zero() -> F {
        F::zero()
    }
    fn one() -> F {
        F::one()
    }
    fn plus(a: &F, b: &F) -> F {
        *a + *b
    }
    fn times(a: &F, b: &F) -> F {
        *a * *b
    }
    fn approx_eq(a: &F, b: &F) -> bool {
        float_close(*a, *b)
    }
    fn from_literal(value: f64) -> Option<F> {
        F::from(value)
    }
    fn render(a: &F) -> String {
        render_float(a)
    }
}

/// `⟨ℝ ∪ {∞}, min, +⟩`: minimum cost; zero is `∞`, one is `0`.
pub struct MinPlus<F>(PhantomData<F>);

impl<F: Float + fmt::Debug + fmt::Display> Semiring for MinPlus<F> {
    type Value = F;
    const NAME: &'static str = "min_plus";

    fn zero() -> F {
        F::infinity()
    }
    fn one() -> F {
        F::zero()
    }
    fn plus(a: &F, b: &F) -> F {
        a.min(*b)
    }
    fn times(a: &F, b: &F) -> F {
        if a.is_infinite() && *a > F::zero() || b.is_infinite() && *b > F::zero() {
            F::infinity()
        } else {
            *a + *b
        }
    }
    fn approx_eq(a: &F, b: &F) -> bool {
        float_close(*a, *b)
    }
    fn from_literal(value: f64) -> Option<F> {
        F::from(value)
    }
    fn render(a: &F) -> String {
        render_float(a)
    }
}

/// `⟨ℝ≥0, max, ×⟩`: Viterbi.
pub struct MaxTimes<F>(PhantomData<F>);

impl<F: Float + fmt::Debug + fmt::Display> Semiring for MaxTimes<F> {
    type Value = F;
    const NAME: &'static str = "max_times";

    fn zero() -> F {
        F::zero()
    }
    fn one() -> F {
        F::one()
    }
    fn plus(a: &F, b: &F) -> F {
        a.max(*b)
    }
    fn times(a: &F, b: &F) -> F {
        *a * *b
    }
    fn approx_eq(a: &F, b: &F) -> bool {
        float_close(*a, *b)
    }
    fn from_literal(value: f64) -> Option<F> {
        if value < 0.0 {
            None
        } else {
            F::from(value)
        }
    }
    fn render(a: &F) -> String {
        render_float(a)
    }
}

/// `⟨{false, true}, ∨, ∧⟩`.
pub struct Boolean;

impl Semiring for Boolean {
    type Value = bool;
    const NAME: &'static str = "bool";

    fn zero() -> bool {
        false
    }
    fn one() -> bool {
        true
    }
    fn plus(a: &bool, b: &bool) -> bool {
        *a || *b
    }
    fn times(a: &bool, b: &bool) -> bool {
        *a && *b
    }
    fn from_literal(value: f64) -> Option<bool> {
        Some(value != 0.0)
    }
    fn render(a: &bool) -> String {
        a.to_string()
    }
}

/// `⟨ℕ, +, ×⟩` with saturating arithmetic: number of proofs.
pub struct Count<N>(PhantomData<N>);

impl<N: PrimInt + Unsigned + fmt::Debug + fmt::Display> Semiring for Count<N> {
    type Value = N;
    const NAME: &'static str = "count";

    fn zero() -> N {
        N::zero()
    }
    fn one() -> N {
        N::one()
    }
    fn plus(a: &N, b: &N) -> N {
        a.saturating_add(*b)
    }
    fn times(a: &N, b: &N) -> N {
        a.checked_mul(b).unwrap_or_else(N::max_value)
    }
    fn from_literal(value: f64) -> Option<N> {
        if value >= 0.0 && value.fract() == 0.0 {
            N::from(value)
        } else {
            None
        }
    }
    fn render(a: &N) -> String {
        a.to_string()
    }
}

/// The semiring instances selectable by name.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SemiringKind {
    Bool,
    RealPlusTimes,
    MinPlus,
    MaxTimes,
    Count,
}

impl SemiringKind {
    pub const ALL: [SemiringKind; 5] = [
        SemiringKind::Bool,
        SemiringKind::RealPlusTimes,
        SemiringKind::MinPlus,
        SemiringKind::MaxTimes,
        SemiringKind::Count,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SemiringKind::Bool => Boolean::NAME,
            SemiringKind::RealPlusTimes => crate::Real::NAME,
            SemiringKind::MinPlus => crate::Tropical::NAME,
            SemiringKind::MaxTimes => crate::Viterbi::NAME,
            SemiringKind::Count => crate::Counting::NAME,
        }
    }

    /// Whether literal `value` denotes this semiring's zero.
    pub fn literal_is_zero(self, value: f64) -> bool {
        match self {
            SemiringKind::MinPlus => value == f64::INFINITY,
            _ => value == 0.0,
        }
    }

    /// The semiring a program asks for: its pragma if present, otherwise the
    /// one its aggregators suggest, otherwise `real_plus_times`.
    pub fn for_program(p: &Program) -> Result<SemiringKind, UnknownSemiring> {
        if let Some(name) = &p.semiring {
            return name.parse();
        }
        let has = |a: Aggregator| p.rules.iter().any(|r| r.aggregator == a);
        Ok(if has(Aggregator::Min) {
            SemiringKind::MinPlus
        } else if has(Aggregator::Max) {
            SemiringKind::MaxTimes
        } else if !p.rules.is_empty() && p.rules.iter().all(|r| r.aggregator == Aggregator::Bool) {
            SemiringKind::Bool
        } else {
            SemiringKind::RealPlusTimes
        })
    }
}

impl fmt::Display for SemiringKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("unknown semiring `{0}` (expected bool, real_plus_times, min_plus, max_times or count)")]
pub struct UnknownSemiring(pub String);

impl FromStr for SemiringKind {
    type Err = UnknownSemiring;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key = s.to_ascii_lowercase().replace('-', "_");
        Ok(match key.as_str() {
            "bool" | "boolean" => SemiringKind::Bool,
            "real_plus_times" | "real" | "plus_times" | "sum_product" | "inside" => {
                SemiringKind::RealPlusTimes
            }
            "min_plus" | "minplus" | "tropical" => SemiringKind::MinPlus,
            "max_times" | "maxtimes" | "viterbi" => SemiringKind::MaxTimes,
            "count" | "counting" => SemiringKind::Count,
            _ => return Err(UnknownSemiring(s.to_string())),
        })
    }
}

/// The type program of `p`: every aggregator becomes `:-`, constants become
/// `true` (rules with a zero constant are deleted) and `?` markers are dropped.
///
/// Returns the boolean program and, for each of its rules, the index of the
/// rule of `p` it came from.
pub fn booleanize(p: &Program, kind: SemiringKind) -> (Program, Vec<usize>) {
    let mut rules = Vec::new();
    let mut origin = Vec::new();
    'rules: for (i, r) in p.rules.iter().enumerate() {
        let mut body = Vec::with_capacity(r.body.len());
        for g in &r.body {
            match g {
                Subgoal::Item(t) | Subgoal::Query(t) => body.push(Subgoal::Item(t.clone())),
                Subgoal::Const { value, .. } => {
                    if kind.literal_is_zero(*value) {
                        continue 'rules;
                    }
                    body.push(Subgoal::Item(Term::atom("true")));
                }
            }
        }
        rules.push(Rule::new(r.head.clone(), Aggregator::Bool, body));
        origin.push(i);
    }
    (
        Program {
            rules,
            params: p.params.clone(),
            semiring: None,
        },
        origin,
    )
}
