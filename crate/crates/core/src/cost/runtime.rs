use std::cell::RefCell;
use std::collections::{BTreeSet, HashMap};

use crate::builtin;
use crate::denote::Interpretation;
use crate::propagate::{canonical_text, LimitExceeded};
use crate::solver::JoinPlanner;
use crate::syntax::{Program, Rule, SimpleType, Subgoal};
use crate::term::{match_term, Substitution, Term, TermLike, Var};
use crate::typeinfer::{TypeEnv, TypeProgram};

use super::card::{card_bound, type_size, CardinalityDb};
use super::SymExpr;

/// One summand of the time bound: a rule, a driver position and a type the
/// driver may have.
#[derive(Clone, Debug, PartialEq)]
pub struct DriverTerm {
    pub rule: usize,
    /// Position of the driver in the rule body; `None` for rules without
    /// chart subgoals, which fire once.
    pub subgoal: Option<usize>,
    /// The driver subgoal refined by a covering simple type.
    pub driver_type: Option<SimpleType>,
    pub size: SymExpr,
    pub runtime: SymExpr,
}

impl DriverTerm {
    pub fn total(&self) -> SymExpr {
        self.size.mul(&self.runtime)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TimeBound {
    pub terms: Vec<DriverTerm>,
    pub total: SymExpr,
}

/// Abstract search state for one rule: which body positions are matched,
/// the substitution from matching them against simple types, and the
/// constraints those types contributed.
#[derive(Clone, Debug)]
pub struct State {
    pub prefix: u64,
    pub theta: Substitution,
    pub constraints: BTreeSet<Term>,
}

/// The runtime recursion over one program, memoized across calls.
pub struct RuntimeAnalyzer<'a> {
    tp: &'a TypeProgram,
    env: &'a TypeEnv,
    db: &'a CardinalityDb,
    rules: &'a [Rule],
    memo: RefCell<HashMap<String, (SymExpr, Option<usize>)>>,
}

impl<'a> RuntimeAnalyzer<'a> {
    /// `rules` are the weighted program's rules; only their item, query and
    /// builtin subgoals are matched.
    pub fn new(
        tp: &'a TypeProgram,
        env: &'a TypeEnv,
        db: &'a CardinalityDb,
        rules: &'a [Rule],
    ) -> Self {
        RuntimeAnalyzer {
            tp,
            env,
            db,
            rules,
            memo: RefCell::new(HashMap::new()),
        }
    }

    fn body(&self, rule: usize) -> &[Subgoal] {
        &self.rules[rule].body
    }

    /// Positions that need no lookup: constants.
    fn trivial_mask(&self, rule: usize) -> u64 {
        self.body(rule)
            .iter()
            .enumerate()
            .filter(|(_, g)| g.term().is_none())
            .fold(0, |m, (i, _)| m | (1 << i))
    }

    fn full_mask(&self, rule: usize) -> u64 {
        let n = self.body(rule).len();
        if n == 0 {
            0
        } else {
            u64::MAX >> (64 - n)
        }
    }

    /// The starting state with nothing matched.
    pub fn initial_state(&self, rule: usize) -> State {
        State {
            prefix: self.trivial_mask(rule),
            theta: Substitution::new(),
            constraints: BTreeSet::new(),
        }
    }

    /// Successor states from matching body position `pos` in `state`,
    /// together with the bound on how many matches each admits. Branches
    /// whose constraints are contradictory are omitted.
    pub fn successors(
        &self,
        rule: usize,
        state: &State,
        pos: usize,
    ) -> Result<Vec<(State, SymExpr)>, LimitExceeded> {
        Ok(self
            .successors_with_types(rule, state, pos)?
            .into_iter()
            .map(|(s, _, q)| (s, q))
            .collect())
    }

    /// [`RuntimeAnalyzer::successors`] also returning the refined type of
    /// the matched subgoal in each branch.
    fn successors_with_types(
        &self,
        rule: usize,
        state: &State,
        pos: usize,
    ) -> Result<Vec<(State, SimpleType, SymExpr)>, LimitExceeded> {
        let body = self.body(rule);
        let p = body[pos].term().expect("lookups are on term subgoals");
        let mut out = Vec::new();
        for (theta, cs) in self.tp.lookup(&self.env.types, p, &state.theta) {
            let own: BTreeSet<Term> = cs.iter().map(|c| theta.resolve(c)).collect();
            let mut all: BTreeSet<Term> =
                state.constraints.iter().map(|c| theta.resolve(c)).collect();
            all.extend(own.iter().cloned());
            let saturated = self.tp.propagator.saturate(&all)?;
            if saturated.iter().any(|c| c.is_atom("fail")) {
                continue;
            }
            let bound = self.bound_vars(rule, state.prefix, &theta);
            let refined = SimpleType::new(theta.resolve(p), own);
            let mut query = refined.constraints.clone();
            query.insert(refined.head.clone());
            let q = card_bound(&query, &bound, self.db);
            out.push((
                State {
                    prefix: state.prefix | (1 << pos),
                    theta,
                    constraints: saturated,
                },
                refined,
                q,
            ));
        }
        Ok(out)
    }

    fn bound_vars(&self, rule: usize, prefix: u64, theta: &Substitution) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        for (i, g) in self.body(rule).iter().enumerate() {
            if prefix & (1 << i) != 0 {
                if let Some(t) = g.term() {
                    out.extend(theta.resolve(t).var_set());
                }
            }
        }
        out
    }

    fn key(&self, rule: usize, state: &State) -> String {
        let resolved: Vec<Term> = self
            .body(rule)
            .iter()
            .map(|g| match g.term() {
                Some(t) => state.theta.resolve(t),
                None => Term::atom("const"),
            })
            .collect();
        let snapshot = SimpleType::new(
            Term::app("state", resolved),
            state.constraints.iter().cloned(),
        );
        format!("{rule}|{}|{}", state.prefix, canonical_text(&snapshot))
    }

    /// Cost of matching the rest of the rule from `state`: 1 for the state
    /// itself plus, for the best next subgoal, each admissible match times
    /// the cost of continuing from it.
    pub fn suffix_runtime(&self, rule: usize, state: &State) -> Result<SymExpr, LimitExceeded> {
        Ok(self.solve(rule, state)?.0)
    }

    /// The body position the analysis matches next from `state`.
    pub fn choice(&self, rule: usize, state: &State) -> Result<Option<usize>, LimitExceeded> {
        Ok(self.solve(rule, state)?.1)
    }

    fn solve(&self, rule: usize, state: &State) -> Result<(SymExpr, Option<usize>), LimitExceeded> {
        if state.prefix == self.full_mask(rule) {
            return Ok((SymExpr::one(), None));
        }
        let key = self.key(rule, state);
        if let Some(hit) = self.memo.borrow().get(&key) {
            return Ok(hit.clone());
        }
        let mut best: Option<(SymExpr, usize)> = None;
        for pos in 0..self.body(rule).len() {
            if state.prefix & (1 << pos) != 0 {
                continue;
            }
            let mut t = SymExpr::zero();
            for (next, _, q) in self.successors_with_types(rule, state, pos)? {
                t = t.add(&q.mul(&self.suffix_runtime(rule, &next)?));
            }
            // Strictly better only, so ties keep the earlier subgoal.
            let better = match &best {
                None => true,
                Some((b, _)) => t.heuristic_cmp(b).is_lt(),
            };
            if better {
                best = Some((t, pos));
            }
        }
        let (t, pos) = best.expect("some subgoal remains");
        let result = (SymExpr::one().add(&t), Some(pos));
        self.memo.borrow_mut().insert(key, result.clone());
        Ok(result)
    }

    /// Driver states for body position `pos`: one per simple type the
    /// driver may belong to, with the refined driver type.
    pub fn driver_states(
        &self,
        rule: usize,
        pos: usize,
    ) -> Result<Vec<(State, SimpleType)>, LimitExceeded> {
        let init = self.initial_state(rule);
        let p = self.body(rule)[pos]
            .term()
            .expect("drivers are term subgoals");
        let mut out = Vec::new();
        for (theta, cs) in self.tp.lookup(&self.env.types, p, &init.theta) {
            let own: BTreeSet<Term> = cs.iter().map(|c| theta.resolve(c)).collect();
            let saturated = self.tp.propagator.saturate(&own)?;
            if saturated.iter().any(|c| c.is_atom("fail")) {
                continue;
            }
            let refined = SimpleType::new(theta.resolve(p), own);
            out.push((
                State {
                    prefix: init.prefix | (1 << pos),
                    theta,
                    constraints: saturated,
                },
                refined,
            ));
        }
        Ok(out)
    }

    /// Positions whose matching items can drive the rule: item and query
    /// subgoals that are not builtins.
    pub fn driver_positions(&self, rule: usize) -> Vec<usize> {
        self.body(rule)
            .iter()
            .enumerate()
            .filter(|(_, g)| g.term().is_some_and(|t| !builtin::is_builtin_term(t)))
            .map(|(i, _)| i)
            .collect()
    }

    /// Sum over rules, driver positions and driver types of the driver
    /// type's size times the suffix runtime from that driver.
    pub fn time_bound(&self) -> Result<TimeBound, LimitExceeded> {
        let mut terms = Vec::new();
        for rule in 0..self.rules.len() {
            let drivers = self.driver_positions(rule);
            if drivers.is_empty() {
                terms.push(DriverTerm {
                    rule,
                    subgoal: None,
                    driver_type: None,
                    size: SymExpr::one(),
                    runtime: self.suffix_runtime(rule, &self.initial_state(rule))?,
                });
                continue;
            }
            for pos in drivers {
                for (state, refined) in self.driver_states(rule, pos)? {
                    let size = type_size(&refined, &BTreeSet::new(), self.db);
                    let runtime = self.suffix_runtime(rule, &state)?;
                    terms.push(DriverTerm {
                        rule,
                        subgoal: Some(pos),
                        driver_type: Some(refined),
                        size,
                        runtime,
                    });
                }
            }
        }
        let total = terms
            .iter()
            .fold(SymExpr::zero(), |acc, t| acc.add(&t.total()));
        Ok(TimeBound { terms, total })
    }
}

/// The time bound of `p` given its inferred types.
pub fn time_bound(
    p: &Program,
    tp: &TypeProgram,
    env: &TypeEnv,
    db: &CardinalityDb,
) -> Result<TimeBound, LimitExceeded> {
    RuntimeAnalyzer::new(tp, env, db, &p.rules).time_bound()
}

/// Replays the analyzer's subgoal choices during concrete evaluation. Each
/// matched item is attributed to the first simple type in its branch whose
/// denotation under `interp` contains it, which fixes the abstract state.
pub struct AnalyzedPlanner<'a> {
    analyzer: &'a RuntimeAnalyzer<'a>,
    interp: &'a Interpretation,
}

impl<'a> AnalyzedPlanner<'a> {
    pub fn new(analyzer: &'a RuntimeAnalyzer<'a>, interp: &'a Interpretation) -> Self {
        AnalyzedPlanner { analyzer, interp }
    }

    /// The abstract state reached by `matched`, with the concrete values of
    /// the type variables seen so far.
    fn replay(&self, rule: usize, matched: &[(usize, Term)]) -> Option<State> {
        let an = self.analyzer;
        let mut state = an.initial_state(rule);
        let mut concrete = Substitution::new();
        for (i, (pos, item)) in matched.iter().enumerate() {
            let branches: Vec<(State, SimpleType)> =
                if i == 0 && an.driver_positions(rule).contains(pos) {
                    an.driver_states(rule, *pos).ok()?
                } else {
                    an.successors_with_types(rule, &state, *pos)
                        .ok()?
                        .into_iter()
                        .map(|(s, t, _)| (s, t))
                        .collect()
                };
            let (next, ext) = branches.into_iter().find_map(|(s, t)| {
                let mut ext = concrete.clone();
                if !match_term(&t.head, item, &mut ext) {
                    return None;
                }
                let cs: Vec<Term> = t.constraints.into_iter().collect();
                let ok = an.tp.is_delayed(&t.head) || self.interp.satisfiable(&cs, &ext);
                ok.then_some((s, ext))
            })?;
            state = next;
            concrete = ext;
        }
        Some(state)
    }
}

impl JoinPlanner for AnalyzedPlanner<'_> {
    fn next(
        &self,
        rule: usize,
        _: &Substitution,
        matched: &[(usize, Term)],
        remaining: &[usize],
    ) -> usize {
        self.replay(rule, matched)
            .and_then(|state| self.analyzer.choice(rule, &state).ok().flatten())
            .filter(|pos| remaining.contains(pos))
            .unwrap_or(remaining[0])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::semiring::SemiringKind;
    use crate::syntax::{parse_analysis_spec, parse_program, parse_symexpr};
    use crate::typeinfer::{InferOptions, TypeProgram};

    const CKY: &str = "params: word; len; gamma.
beta(X,I,K) += gamma(X,Y,Z) * beta(Y,I,J) * beta(Z,J,K).
beta(X,I,K) += gamma(X,Y) * beta(Y,I,K).
beta(X,I,K) += gamma(X,W) * word(W,I,K).
goal += beta(s,0,N) * len(N).";

    const CKY_SPEC: &str = "params: k; w; n.
word(W:w,I:n,K:n) :- I < K.
len(N:n).
gamma(X:k,Y:k,Z:k).
gamma(X:k,Y:k).
gamma(X:k,W:w).
k(s) <== true.
n(0) <== true.
fail <== k(X), n(X).
|word(W,+I,K)| <= 1.
|word(W,I,+K)| <= 1.
|word(W,I,K)| <= n.
|k(X)| <= k.
|n(I)| <= n.
|w(W)| <= w.";

    fn e(s: &str) -> SymExpr {
        parse_symexpr(s).unwrap()
    }

    #[test]
    fn cky_runtime() {
        let p = parse_program(CKY).unwrap();
        let spec = parse_analysis_spec(CKY_SPEC).unwrap();
        let tp = TypeProgram::new(&p, SemiringKind::RealPlusTimes, &spec, Default::default());
        let env = tp.infer(&InferOptions::default()).unwrap();
        let db = CardinalityDb::new(&spec.card_decls);
        let an = RuntimeAnalyzer::new(&tp, &env, &db, &p.rules);

        let states = an.driver_states(0, 1).unwrap();
        assert_eq!(states.len(), 1);
        assert_eq!(
            an.suffix_runtime(0, &states[0].0).unwrap(),
            e("1 + k^2 + k^2*n")
        );
        assert_eq!(an.choice(0, &states[0].0).unwrap(), Some(0));

        let full = State {
            prefix: 0b111,
            ..an.initial_state(0)
        };
        assert_eq!(an.suffix_runtime(0, &full).unwrap(), e("1"));

        let tb = an.time_bound().unwrap();
        assert_eq!(
            tb.total.asymptotic().dominant_monomial(),
            e("k^3*n^3").as_single_monomial()
        );
    }

    #[test]
    fn single_item_rule_is_constant() {
        let p = parse_program("params: x.\ngoal += x.").unwrap();
        let spec = parse_analysis_spec("x.").unwrap();
        let tp = TypeProgram::new(&p, SemiringKind::RealPlusTimes, &spec, Default::default());
        let env = tp.infer(&InferOptions::default()).unwrap();
        let db = CardinalityDb::new(&[]);
        assert_eq!(time_bound(&p, &tp, &env, &db).unwrap().total, e("1"));
    }

    #[test]
    fn unbounded_driver_is_infinite() {
        let p = parse_program("params: x.\ngoal(I) += x(I).").unwrap();
        let spec = parse_analysis_spec("x(I).").unwrap();
        let tp = TypeProgram::new(&p, SemiringKind::RealPlusTimes, &spec, Default::default());
        let env = tp.infer(&InferOptions::default()).unwrap();
        let db = CardinalityDb::new(&[]);
        assert_eq!(
            time_bound(&p, &tp, &env, &db).unwrap().total,
            SymExpr::Infinite
        );
    }

    #[test]
    fn builtin_already_ground_costs_one_step() {
        let p = parse_program("params: x.\ngoal(I) += x(I) * I < 3.").unwrap();
        let spec = parse_analysis_spec("params: n.\nx(I:n).\n|n(I)| <= n.").unwrap();
        let tp = TypeProgram::new(&p, SemiringKind::RealPlusTimes, &spec, Default::default());
        let env = tp.infer(&InferOptions::default()).unwrap();
        let db = CardinalityDb::new(&spec.card_decls);
        let an = RuntimeAnalyzer::new(&tp, &env, &db, &p.rules);
        let (state, _) = an.driver_states(0, 0).unwrap().remove(0);
        assert_eq!(an.suffix_runtime(0, &state).unwrap(), e("2"));
        assert_eq!(an.time_bound().unwrap().total, e("2*n"));
    }

    #[test]
    fn replayed_order_respects_the_bound() {
        use crate::denote::Interpretation;
        use crate::solver::{run, run_with, RunOptions};
        use crate::Real;

        let p = parse_program(CKY).unwrap();
        let spec = parse_analysis_spec(CKY_SPEC).unwrap();
        let tp = TypeProgram::new(&p, SemiringKind::RealPlusTimes, &spec, Default::default());
        let env = tp.infer(&InferOptions::default()).unwrap();
        let db = CardinalityDb::new(&spec.card_decls);
        let an = RuntimeAnalyzer::new(&tp, &env, &db, &p.rules);

        let data = parse_program(
            "gamma(s,s,s) += 0.25.\ngamma(s,a) += 0.75.\nword(a,0,1) += 1.\nword(a,1,2) += 1.\nlen(2) += 1.",
        )
        .unwrap()
        .rules;
        let mut interp = Interpretation::new([]);
        interp.add("k", vec![Term::atom("s")]);
        interp.add("w", vec![Term::atom("a")]);
        for i in 0..3 {
            interp.add("n", vec![Term::int(i)]);
        }
        let planner = AnalyzedPlanner::new(&an, &interp);
        let (v, stats) = run_with::<Real>(&p, &data, &RunOptions::default(), &planner).unwrap();
        let (plain, _) = run::<Real>(&p, &data, &RunOptions::default()).unwrap();
        assert_eq!(v, plain);

        let sizes = [("k", 1), ("w", 1), ("n", 3)]
            .into_iter()
            .map(|(k, v)| (k.to_string(), v))
            .collect();
        let bound = an.time_bound().unwrap().total.eval(&sizes).unwrap();
        assert!(
            u128::from(stats.prefix_firings) <= bound,
            "{} > {bound}",
            stats.prefix_firings
        );
    }
}
