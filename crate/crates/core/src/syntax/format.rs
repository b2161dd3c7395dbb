use std::cell::RefCell;
use std::collections::{BTreeSet, HashMap, HashSet};

use super::ast::*;
use crate::builtin;
use crate::term::{write_term, Term, TermLike, Var};

/// How variables are spelled and constraint sets ordered when printing.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Style {
    /// Stored order; variables print as `Name` or `Name_gen`.
    Plain,
    /// Canonical order; variables keep their source names where unambiguous.
    Pretty,
    /// Canonical order; variables renamed `V0, V1, ...` by first occurrence.
    Canonical,
}

/// Renders a term, printing builtin atoms in their infix form.
pub fn constraint_text(t: &Term, names: &dyn Fn(&Var) -> String) -> String {
    let arg = |i: usize| term_text(&t.args()[i], names);
    match t.functor() {
        Some((f, n)) if builtin::is_builtin(f, n) && n > 0 => match f {
            "lessthan" => format!("{} < {}", arg(0), arg(1)),
            "leq" => format!("{} <= {}", arg(0), arg(1)),
            "eq" => format!("{} = {}", arg(0), arg(1)),
            "plus" => format!("{} is {}+{}", arg(2), arg(0), arg(1)),
            "times" => format!("{} is {}*{}", arg(2), arg(0), arg(1)),
            _ => term_text(t, names),
        },
        _ => term_text(t, names),
    }
}

pub fn term_text(t: &Term, names: &dyn Fn(&Var) -> String) -> String {
    let mut s = String::new();
    write_term(&mut s, t, names).expect("writing to a String cannot fail");
    s
}

fn subgoal_text(g: &Subgoal, names: &dyn Fn(&Var) -> String) -> String {
    match g {
        Subgoal::Item(t) => constraint_text(t, names),
        Subgoal::Query(t) => format!("?{}", term_text(t, names)),
        Subgoal::Const { text, .. } => text.clone(),
    }
}

/// Assigns printable names to variables in order of first use.
struct Namer {
    style: Style,
    names: HashMap<Var, String>,
    used: HashSet<String>,
}

impl Namer {
    fn new(style: Style) -> Namer {
        Namer {
            style,
            names: HashMap::new(),
            used: HashSet::new(),
        }
    }

    fn name(&mut self, v: &Var) {
        if self.names.contains_key(v) {
            return;
        }
        let name = match self.style {
            Style::Plain => v.to_string(),
            Style::Canonical => format!("V{}", self.names.len()),
            Style::Pretty => {
                let base = if v.name() == "_" { "V" } else { v.name() };
                let mut candidate = base.to_string();
                let mut i = 1;
                while self.used.contains(&candidate) {
                    candidate = format!("{base}{i}");
                    i += 1;
                }
                candidate
            }
        };
        self.used.insert(name.clone());
        self.names.insert(v.clone(), name);
    }

    fn name_all<T: TermLike>(&mut self, t: &T) {
        for v in t.vars() {
            self.name(&v);
        }
    }

    fn lookup(&self) -> impl Fn(&Var) -> String + '_ {
        move |v: &Var| {
            self.names
                .get(v)
                .cloned()
                .unwrap_or_else(|| "_".to_string())
        }
    }
}

/// Orders constraints so that alpha-equivalent sets come out identically:
/// ordinary constraints before builtins, then greedily by their rendering
/// under the names fixed so far (unnamed variables render as `_`).
pub(crate) fn canonical_order(head_vars: &[Var], constraints: &[Term]) -> Vec<Term> {
    let mut namer = Namer::new(Style::Canonical);
    for v in head_vars {
        namer.name(v);
    }
    let mut remaining: Vec<Term> = constraints.to_vec();
    let mut out = Vec::with_capacity(remaining.len());
    while !remaining.is_empty() {
        let keyed: Vec<(bool, String)> = remaining
            .iter()
            .map(|c| (is_builtin_term(c), constraint_text(c, &namer.lookup())))
            .collect();
        let best_key = keyed.iter().min().cloned().expect("nonempty");
        let tied: Vec<usize> = (0..remaining.len())
            .filter(|&i| keyed[i] == best_key)
            .collect();
        let pick = if tied.len() == 1 {
            tied[0]
        } else {
            // Break ties by the rendering once the candidate's new variables are named.
            *tied
                .iter()
                .min_by_key(|&&i| {
                    let mut trial = Namer {
                        style: Style::Canonical,
                        names: namer.names.clone(),
                        used: HashSet::new(),
                    };
                    trial.name_all(&remaining[i]);
                    let rest: Vec<String> = remaining
                        .iter()
                        .enumerate()
                        .filter(|&(j, _)| j != i)
                        .map(|(_, c)| constraint_text(c, &trial.lookup()))
                        .collect::<BTreeSet<_>>()
                        .into_iter()
                        .collect();
                    let own = constraint_text(&remaining[i], &trial.lookup());
                    (own, rest)
                })
                .expect("nonempty")
        };
        let c = remaining.remove(pick);
        namer.name_all(&c);
        out.push(c);
    }
    out
}

fn is_builtin_term(t: &Term) -> bool {
    t.functor().is_some_and(|(f, n)| builtin::is_builtin(f, n))
}

/// Formats a simple type as a `.dtype` statement.
pub fn format_type(t: &SimpleType, style: Style) -> String {
    format_type_with(t, style, &BTreeSet::new())
}

/// Like [`format_type`], folding `p(V)` constraints into `V:p` head
/// annotations for each unary parameter `p` in `annotate`.
pub fn format_type_with(t: &SimpleType, style: Style, annotate: &BTreeSet<String>) -> String {
    let head_vars = t.head.vars();
    let constraints: Vec<Term> = t.constraints.iter().cloned().collect();
    let ordered = match style {
        Style::Plain => constraints,
        _ => canonical_order(&head_vars, &constraints),
    };
    let mut namer = Namer::new(style);
    namer.name_all(&t.head);
    for c in &ordered {
        namer.name_all(c);
    }
    let names = namer.lookup();

    let mut annotations: HashMap<Var, String> = HashMap::new();
    let mut body = Vec::new();
    for c in &ordered {
        if let (Some((p, 1)), Some(v)) = (c.functor(), c.args().first().and_then(Term::as_var)) {
            if annotate.contains(p) && head_vars.contains(v) && !annotations.contains_key(v) {
                annotations.insert(v.clone(), p.to_string());
                continue;
            }
        }
        body.push(constraint_text(c, &names));
    }

    // Only the first occurrence of an annotated variable carries `:p`.
    let annotated = RefCell::new(HashSet::new());
    let head = term_text(&t.head, &|v: &Var| {
        let base = names(v);
        match annotations.get(v) {
            Some(p) if annotated.borrow_mut().insert(v.clone()) => format!("{base}:{p}"),
            _ => base,
        }
    });
    if body.is_empty() {
        format!("{head}.")
    } else {
        format!("{head} :- {}.", body.join(", "))
    }
}

/// Formats a rule in source syntax.
pub fn format_rule(r: &Rule, style: Style) -> String {
    let mut namer = Namer::new(style);
    namer.name_all(r);
    let names = namer.lookup();
    let head = term_text(&r.head, &names);
    if r.body.is_empty() {
        return format!("{head}.");
    }
    let sep = match r.aggregator {
        Aggregator::Bool => ", ",
        Aggregator::Min => " + ",
        _ => " * ",
    };
    let body: Vec<String> = r.body.iter().map(|g| subgoal_text(g, &names)).collect();
    format!("{head} {} {}.", r.aggregator, body.join(sep))
}

/// Formats a whole program, `params:` line first.
pub fn format_program(p: &Program, style: Style) -> String {
    let mut out = String::new();
    if let Some(s) = &p.semiring {
        out.push_str(&format!("%% semiring: {s}\n"));
    }
    if !p.params.is_empty() {
        let names: Vec<&str> = p.params.iter().map(String::as_str).collect();
        out.push_str(&format!("params: {}.\n", names.join("; ")));
    }
    for r in &p.rules {
        out.push_str(&format_rule(r, style));
        out.push('\n');
    }
    out
}

pub fn format_prop_rule(r: &PropagationRule, style: Style) -> String {
    let mut namer = Namer::new(style);
    namer.name_all(r);
    let names = namer.lookup();
    let wrap = |c: &Term| {
        if is_builtin_term(c) && !c.args().is_empty() {
            format!("({})", constraint_text(c, &names))
        } else {
            constraint_text(c, &names)
        }
    };
    let premises = if r.premises.is_empty() {
        "true".to_string()
    } else {
        r.premises.iter().map(wrap).collect::<Vec<_>>().join(", ")
    };
    format!("{} <== {premises}.", wrap(&r.conclusion))
}

pub fn format_card_decl(d: &CardinalityDecl) -> String {
    let names = |v: &Var| {
        if d.bound_vars.contains(v) {
            format!("+{v}")
        } else {
            v.to_string()
        }
    };
    let pats: Vec<String> = d.patterns.iter().map(|p| term_text(p, &names)).collect();
    format!("|{}| <= {}.", pats.join(", "), d.bound)
}

#[cfg(test)]
mod tests {
    use super::super::parser::*;
    use super::*;
    use crate::term::{alpha_eq, fresh};

    fn ty(s: &str) -> SimpleType {
        parse_simple_type(s).unwrap()
    }

    #[test]
    fn simple_type_pretty_output() {
        let t = ty("beta(X,I,K) :- I < K, n(K), k(X), n(I).");
        assert_eq!(
            format_type(&t, Style::Pretty),
            "beta(X,I,K) :- k(X), n(I), n(K), I < K."
        );
    }

    #[test]
    fn annotations_fold_unary_params() {
        let t = ty("beta(X,I,K) :- k(X), n(I), n(K), I < K.");
        let params: BTreeSet<String> = ["k", "n", "w"].iter().map(|s| s.to_string()).collect();
        assert_eq!(
            format_type_with(&t, Style::Pretty, &params),
            "beta(X:k,I:n,K:n) :- I < K."
        );
        assert_eq!(
            format_type_with(&ty("goal."), Style::Pretty, &params),
            "goal."
        );
        let shared = ty("a(X,X) :- n(X).");
        let text = format_type_with(&shared, Style::Pretty, &params);
        assert_eq!(text, "a(X:n,X).");
        assert!(alpha_eq(&parse_simple_type(&text).unwrap(), &shared));
    }

    #[test]
    fn canonical_text_ignores_names_and_order() {
        let a = ty("f(X,Y) :- n(Y), g(X,Z), X < Y.");
        let b = fresh(&ty("f(P,Q) :- P < Q, g(P,R), n(Q)."));
        assert_eq!(
            format_type(&a, Style::Canonical),
            format_type(&b, Style::Canonical)
        );
        assert_eq!(
            format_type(&a, Style::Canonical),
            "f(V0,V1) :- g(V0,V2), n(V1), V0 < V1."
        );
    }

    #[test]
    fn rules_round_trip() {
        for src in [
            "stop(a) min= 0.",
            "goal += beta(s,0,N) * len(N).",
            "beta(I) min= cost(I,J) + beta(J).",
            "a(X) :- b(X,Y), Y < 3, Z is X+Y, c(Z).",
            "a += ?b(X) * 0.5.",
            "f([1,2|T]) += g(T).",
        ] {
            let r = parse_rule(src).unwrap();
            assert_eq!(format_rule(&r, Style::Pretty), src);
            let again = parse_rule(&format_rule(&fresh(&r), Style::Plain)).unwrap();
            assert!(alpha_eq(&again, &r), "{src}");
        }
    }

    #[test]
    fn integer_left_operand_of_is_round_trips() {
        let r = parse_rule("a(X) :- b(X), 3 is X+1.").unwrap();
        let text = format_rule(&r, Style::Pretty);
        assert_eq!(parse_rule(&text).unwrap(), r);
    }

    #[test]
    fn propagation_rules_round_trip() {
        let spec = parse_analysis_spec(
            "(I < K) <== (I < J), (J < K).\nfail <== k(X), n(X).\nk(s) <== true.",
        )
        .unwrap();
        let texts: Vec<String> = spec
            .prop_rules
            .iter()
            .map(|r| format_prop_rule(r, Style::Pretty))
            .collect();
        assert_eq!(
            texts,
            vec![
                "(I < K) <== (I < J), (J < K).",
                "fail <== k(X), n(X).",
                "k(s) <== true."
            ]
        );
    }

    #[test]
    fn cardinality_round_trip() {
        let spec =
            parse_analysis_spec("|times(+X, Y, +Z)| <= 1.\n|gamma(X,+Y,Z)| <= k^2.").unwrap();
        let texts: Vec<String> = spec.card_decls.iter().map(format_card_decl).collect();
        assert_eq!(
            texts,
            vec!["|times(+X,Y,+Z)| <= 1.", "|gamma(X,+Y,Z)| <= k^2."]
        );
        for t in texts {
            let again = parse_analysis_spec(&t).unwrap();
            assert_eq!(format_card_decl(&again.card_decls[0]), t);
        }
    }
}
