//! End-to-end analysis of a program against an analysis spec, collected
//! into a serializable report.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::Serialize;

use crate::cost::{space_bound, type_size, CardinalityDb, RuntimeAnalyzer, SymExpr};
use crate::propagate::{canonical_text, LimitExceeded};
use crate::semiring::SemiringKind;
use crate::solver::RunStats;
use crate::syntax::{format_rule, format_type_with, AnalysisSpec, Program, SimpleType, Style};
use crate::typeinfer::{InferError, InferOptions, TypeEnv, TypeProgram};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TypeEntry {
    /// Re-parseable `.dtype` text with parametric constraints as annotations.
    pub text: String,
    pub canonical: String,
    /// Whether the type describes items the program derives.
    pub derived: bool,
    pub size: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Bound {
    pub exact: String,
    pub asymptotic: String,
}

impl Bound {
    fn of(e: &SymExpr) -> Bound {
        Bound {
            exact: e.to_string(),
            asymptotic: format!("O({})", e.asymptotic()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TimeTerm {
    pub rule: String,
    /// Driver subgoal position, if the rule has one.
    pub driver: Option<usize>,
    pub driver_type: Option<String>,
    pub size: String,
    pub runtime: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AnalysisReport {
    pub semiring: String,
    pub rounds: usize,
    pub types: Vec<TypeEntry>,
    pub dead_rules: Vec<String>,
    pub space: Option<Bound>,
    pub time: Option<Bound>,
    pub time_terms: Vec<TimeTerm>,
    pub stats: Option<RunStats>,
    pub diagnostics: Vec<String>,
}

impl AnalysisReport {
    /// JSON with keys sorted at every level.
    pub fn to_json(&self) -> String {
        let value = serde_json::to_value(self).expect("report serializes");
        serde_json::to_string_pretty(&value).expect("value serializes")
    }

    /// Derived types, one per line.
    pub fn types_text(&self) -> String {
        let mut out = String::new();
        for t in self.types.iter().filter(|t| t.derived) {
            writeln!(out, "{}", t.text).unwrap();
        }
        for r in &self.dead_rules {
            writeln!(out, "% dead rule: {r}").unwrap();
        }
        for d in &self.diagnostics {
            writeln!(out, "% warning: {d}").unwrap();
        }
        out
    }

    /// Per-type sizes and the space and time bounds.
    pub fn bounds_text(&self) -> String {
        let mut out = String::new();
        for t in &self.types {
            writeln!(out, "|{}| <= {}", t.text.trim_end_matches('.'), t.size).unwrap();
        }
        if let Some(s) = &self.space {
            writeln!(out, "space: {}", s.exact).unwrap();
            writeln!(out, "space: {}", s.asymptotic).unwrap();
        }
        for t in &self.time_terms {
            let driver = t
                .driver_type
                .as_deref()
                .map_or("(no driver)", |d| d.trim_end_matches('.'));
            writeln!(
                out,
                "% {} driven by {}: {} * ({})",
                t.rule, driver, t.size, t.runtime
            )
            .unwrap();
        }
        if let Some(t) = &self.time {
            writeln!(out, "time: {}", t.exact).unwrap();
            writeln!(out, "time: {}", t.asymptotic).unwrap();
        }
        for d in &self.diagnostics {
            writeln!(out, "% warning: {d}").unwrap();
        }
        out
    }
}

/// Everything inference produced, kept for the bound analysis and solver.
pub struct Analysis {
    pub program: Program,
    pub spec: AnalysisSpec,
    pub kind: SemiringKind,
    pub tp: TypeProgram,
    pub env: TypeEnv,
    pub db: CardinalityDb,
}

impl Analysis {
    pub fn new(
        program: Program,
        spec: AnalysisSpec,
        kind: SemiringKind,
        opts: &InferOptions,
    ) -> Result<Analysis, InferError> {
        let tp = TypeProgram::new(&program, kind, &spec, opts.limits);
        let env = tp.infer(opts)?;
        let db = CardinalityDb::new(&spec.card_decls);
        Ok(Analysis {
            program,
            spec,
            kind,
            tp,
            env,
            db,
        })
    }

    pub fn runtime(&self) -> RuntimeAnalyzer<'_> {
        RuntimeAnalyzer::new(&self.tp, &self.env, &self.db, &self.program.rules)
    }

    fn type_text(&self, t: &SimpleType) -> String {
        format_type_with(t, Style::Pretty, &self.spec.params)
    }

    /// Types, dead rules and lint warnings.
    pub fn types_report(&self) -> Result<AnalysisReport, LimitExceeded> {
        let defined = self.program.defined();
        let types = self
            .env
            .types
            .iter()
            .map(|t| TypeEntry {
                text: self.type_text(t),
                canonical: canonical_text(t),
                derived: t
                    .head
                    .functor()
                    .is_some_and(|(f, n)| defined.contains(&(f.to_string(), n))),
                size: type_size(t, &BTreeSet::new(), &self.db).to_string(),
            })
            .collect();
        let dead_rules = self
            .tp
            .dead_rules(&self.env)?
            .into_iter()
            .map(|i| format_rule(&self.program.rules[i], Style::Plain))
            .collect();
        let diagnostics = self
            .tp
            .undeclared()
            .into_iter()
            .map(|f| format!("{f} is used but neither defined nor declared"))
            .collect();
        Ok(AnalysisReport {
            semiring: self.kind.name().to_string(),
            rounds: self.env.rounds,
            types,
            dead_rules,
            space: None,
            time: None,
            time_terms: Vec::new(),
            stats: None,
            diagnostics,
        })
    }

    /// [`Analysis::types_report`] plus space and time bounds.
    pub fn bounds_report(&self) -> Result<AnalysisReport, LimitExceeded> {
        let mut report = self.types_report()?;
        let (sizes, space) = space_bound(&self.env.types, &self.db);
        for (t, size) in self.env.types.iter().zip(&sizes) {
            if size.is_infinite() {
                report
                    .diagnostics
                    .push(format!("no finite size for {}", self.type_text(t)));
            }
        }
        report.space = Some(Bound::of(&space));

        let tb = self.runtime().time_bound()?;
        for term in &tb.terms {
            if term.total().is_infinite() {
                let rule = format_rule(&self.program.rules[term.rule], Style::Plain);
                report
                    .diagnostics
                    .push(format!("no finite runtime for {rule}"));
            }
        }
        report.time_terms = tb
            .terms
            .iter()
            .map(|t| TimeTerm {
                rule: format_rule(&self.program.rules[t.rule], Style::Plain),
                driver: t.subgoal,
                driver_type: t.driver_type.as_ref().map(|d| self.type_text(d)),
                size: t.size.to_string(),
                runtime: t.runtime.to_string(),
            })
            .collect();
        report.time = Some(Bound::of(&tb.total));
        report.diagnostics.dedup();
        Ok(report)
    }
}
