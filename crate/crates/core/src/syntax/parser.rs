use std::collections::{BTreeSet, HashMap};

use super::ast::*;
use super::lexer::{lex, Spanned, Tok};
use super::ParseError;
use crate::builtin;
use crate::cost::{Factor, Monomial, SymExpr};
use crate::term::{Term, TermLike, Var};

/// Parses a weighted (or boolean) program.
pub fn parse_program(text: &str) -> Result<Program, ParseError> {
    let mut p = Parser::new(text)?;
    let mut program = Program {
        semiring: pragma(text),
        ..Program::default()
    };
    let mut heads = Vec::new();
    while !p.at(&Tok::Eof) {
        let (line, col) = p.pos();
        if p.at_params() {
            program.params.extend(p.params()?);
            continue;
        }
        let rule = p.rule()?;
        heads.push((rule.head.clone(), line, col));
        program.rules.push(rule);
    }
    for (head, line, col) in heads {
        if let Some((f, _)) = head.functor() {
            if program.params.contains(f) {
                return Err(ParseError {
                    line,
                    col,
                    message: format!("`{f}` is declared in `params` but heads a rule"),
                });
            }
        }
    }
    Ok(program)
}

/// Parses a `.dtype` file: input types, propagation rules, cardinality
/// declarations and `params:` lines.
pub fn parse_analysis_spec(text: &str) -> Result<AnalysisSpec, ParseError> {
    let mut p = Parser::new(text)?;
    let mut spec = AnalysisSpec::default();
    while !p.at(&Tok::Eof) {
        if p.at_params() {
            spec.params.extend(p.params()?);
        } else if p.at(&Tok::Bar) {
            let decl = p.card_decl(&mut spec.size_params)?;
            spec.card_decls.push(decl);
        } else {
            match p.spec_statement()? {
                SpecItem::Type(t) => spec.input_types.push(t),
                SpecItem::Prop(r) => spec.prop_rules.push(r),
            }
        }
    }
    Ok(spec)
}

pub fn parse_term(text: &str) -> Result<Term, ParseError> {
    let mut p = Parser::new(text)?;
    let t = p.term(&mut Marks::None)?;
    p.expect(&Tok::Eof)?;
    Ok(t)
}

pub fn parse_rule(text: &str) -> Result<Rule, ParseError> {
    let mut p = Parser::new(text)?;
    let r = p.rule()?;
    p.expect(&Tok::Eof)?;
    Ok(r)
}

pub fn parse_simple_type(text: &str) -> Result<SimpleType, ParseError> {
    let mut p = Parser::new(text)?;
    match p.spec_statement()? {
        SpecItem::Type(t) => {
            p.expect(&Tok::Eof)?;
            Ok(t)
        }
        SpecItem::Prop(_) => Err(p.error_here("expected a simple type, found `<==`")),
    }
}

/// Parses a symbolic bound such as `k*n^2 + 1` or `k*n*max(k,n)`.
pub fn parse_symexpr(text: &str) -> Result<SymExpr, ParseError> {
    let mut p = Parser::new(text)?;
    let e = p.sym_sum()?;
    p.expect(&Tok::Eof)?;
    Ok(e)
}

fn pragma(text: &str) -> Option<String> {
    text.lines().find_map(|line| {
        let rest = line.trim_start().strip_prefix("%%")?;
        let rest = rest.trim_start().strip_prefix("semiring:")?;
        let name = rest.split_whitespace().next()?;
        Some(name.to_string())
    })
}

enum SpecItem {
    Type(SimpleType),
    Prop(PropagationRule),
}

/// What a term parser may accept beyond plain terms.
enum Marks<'a> {
    None,
    /// `V:t` annotations in type heads.
    Annotations(&'a mut Vec<Term>),
    /// `+V` marks in cardinality patterns.
    Plus(&'a mut BTreeSet<Var>),
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
    /// Variables named in the current statement; `_` is always fresh.
    scope: HashMap<String, Var>,
}

impl Parser {
    fn new(text: &str) -> Result<Parser, ParseError> {
        Ok(Parser {
            toks: lex(text)?,
            pos: 0,
            scope: HashMap::new(),
        })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        let i = (self.pos + k).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    fn pos(&self) -> (usize, usize) {
        let t = &self.toks[self.pos];
        (t.line, t.col)
    }

    fn at(&self, tok: &Tok) -> bool {
        self.peek() == tok
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.at(tok) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn error_here(&self, message: impl Into<String>) -> ParseError {
        let (line, col) = self.pos();
        ParseError {
            line,
            col,
            message: message.into(),
        }
    }

    fn expect(&mut self, tok: &Tok) -> Result<(), ParseError> {
        if self.eat(tok) {
            Ok(())
        } else {
            Err(self.error_here(format!(
                "expected {}, found {}",
                tok.describe(),
                self.peek().describe()
            )))
        }
    }

    fn at_params(&self) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == "params") && self.peek_at(1) == &Tok::Colon
    }

    fn params(&mut self) -> Result<Vec<String>, ParseError> {
        self.bump();
        self.bump();
        let mut names = Vec::new();
        loop {
            match self.bump() {
                Tok::Ident(name) => names.push(name),
                other => {
                    self.pos -= 1;
                    return Err(self.error_here(format!(
                        "expected a functor name, found {}",
                        other.describe()
                    )));
                }
            }
            if self.eat(&Tok::Dot) {
                return Ok(names);
            }
            if !self.eat(&Tok::Semi) && !self.eat(&Tok::Comma) {
                return Err(self.error_here(format!(
                    "expected `;` or `.`, found {}",
                    self.peek().describe()
                )));
            }
        }
    }

    fn var(&mut self, name: &str) -> Var {
        if name == "_" {
            return Var::fresh("_");
        }
        self.scope
            .entry(name.to_string())
            .or_insert_with(|| Var::named(name))
            .clone()
    }

    fn term(&mut self, marks: &mut Marks) -> Result<Term, ParseError> {
        let (line, col) = self.pos();
        if self.at(&Tok::Plus) {
            if let Marks::Plus(set) = marks {
                self.bump();
                return match self.bump() {
                    Tok::Var(name) => {
                        let v = self.var(&name);
                        set.insert(v.clone());
                        Ok(Term::Var(v))
                    }
                    _ => Err(ParseError {
                        line,
                        col,
                        message: "`+` must mark a variable".into(),
                    }),
                };
            }
        }
        match self.bump() {
            Tok::Var(name) => {
                let v = self.var(&name);
                if self.at(&Tok::Colon) {
                    if let Marks::Annotations(out) = marks {
                        self.bump();
                        match self.bump() {
                            Tok::Ident(ty) => out.push(Term::app(&ty, vec![Term::Var(v.clone())])),
                            _ => return Err(self.error_here("expected a type name after `:`")),
                        }
                    }
                }
                Ok(Term::Var(v))
            }
            Tok::Int(i) => Ok(Term::Int(i)),
            Tok::Ident(name) => {
                if self.eat(&Tok::LParen) {
                    let mut args = vec![self.term(marks)?];
                    while self.eat(&Tok::Comma) {
                        args.push(self.term(marks)?);
                    }
                    self.expect(&Tok::RParen)?;
                    Ok(Term::app(&name, args))
                } else {
                    Ok(Term::atom(&name))
                }
            }
            Tok::LBracket => {
                if self.eat(&Tok::RBracket) {
                    return Ok(Term::nil());
                }
                let mut items = vec![self.term(marks)?];
                while self.eat(&Tok::Comma) {
                    items.push(self.term(marks)?);
                }
                let tail = if self.eat(&Tok::Bar) {
                    self.term(marks)?
                } else {
                    Term::nil()
                };
                self.expect(&Tok::RBracket)?;
                Ok(Term::list(items, tail))
            }
            other => Err(ParseError {
                line,
                col,
                message: format!("expected a term, found {}", other.describe()),
            }),
        }
    }

    /// A constraint: a term, an infix comparison, `Z is X+Y`, or any of
    /// these in parentheses.
    fn constraint(&mut self, marks: &mut Marks) -> Result<Term, ParseError> {
        if self.at(&Tok::LParen) {
            self.bump();
            let c = self.constraint(marks)?;
            self.expect(&Tok::RParen)?;
            return Ok(c);
        }
        let left = self.term(marks)?;
        self.infix_tail(left, marks)
    }

    fn infix_tail(&mut self, left: Term, marks: &mut Marks) -> Result<Term, ParseError> {
        if matches!(self.peek(), Tok::Ident(s) if s == "is") {
            self.bump();
            let x = self.term(marks)?;
            let op = match self.bump() {
                Tok::Plus => "plus",
                Tok::Star => "times",
                other => {
                    self.pos -= 1;
                    return Err(self.error_here(format!(
                        "expected `+` or `*` after `is`, found {}",
                        other.describe()
                    )));
                }
            };
            let y = self.term(marks)?;
            return Ok(Term::app(op, vec![x, y, left]));
        }
        let (name, swap) = match self.peek() {
            Tok::Lt => ("lessthan", false),
            Tok::Le => ("leq", false),
            Tok::Gt => ("lessthan", true),
            Tok::Ge => ("leq", true),
            Tok::Eq => ("eq", false),
            _ => return Ok(left),
        };
        self.bump();
        let right = self.term(marks)?;
        Ok(if swap {
            Term::app(name, vec![right, left])
        } else {
            Term::app(name, vec![left, right])
        })
    }

    fn head(&mut self) -> Result<Term, ParseError> {
        let (line, col) = self.pos();
        let head = self.term(&mut Marks::None)?;
        match head.functor() {
            Some((f, n)) if builtin::is_builtin(f, n) => Err(ParseError {
                line,
                col,
                message: format!("builtin `{f}/{n}` cannot head a rule"),
            }),
            Some(_) => Ok(head),
            None => Err(ParseError {
                line,
                col,
                message: format!("rule head must be a compound term, found `{head}`"),
            }),
        }
    }

    fn rule(&mut self) -> Result<Rule, ParseError> {
        self.scope.clear();
        let head = self.head()?;
        let aggregator = match self.peek() {
            Tok::PlusEq => Aggregator::Sum,
            Tok::MinEq => Aggregator::Min,
            Tok::MaxEq => Aggregator::Max,
            Tok::Eq => Aggregator::Assign,
            Tok::Turnstile => Aggregator::Bool,
            Tok::Dot => {
                self.bump();
                return Ok(Rule::new(head, Aggregator::Bool, Vec::new()));
            }
            other => {
                return Err(self.error_here(format!(
                    "expected an aggregator or `.`, found {}",
                    other.describe()
                )))
            }
        };
        self.bump();
        let mut body = vec![self.subgoal()?];
        loop {
            match self.peek() {
                Tok::Comma | Tok::Star | Tok::Plus => {
                    self.bump();
                    body.push(self.subgoal()?);
                }
                Tok::Ident(s) if s == "for" => {
                    self.bump();
                    body.push(Subgoal::Item(self.constraint(&mut Marks::None)?));
                    while self.eat(&Tok::Comma) {
                        body.push(Subgoal::Item(self.constraint(&mut Marks::None)?));
                    }
                    break;
                }
                _ => break,
            }
        }
        self.expect(&Tok::Dot)?;
        Ok(Rule::new(head, aggregator, body))
    }

    fn subgoal(&mut self) -> Result<Subgoal, ParseError> {
        match self.peek().clone() {
            Tok::Question => {
                self.bump();
                Ok(Subgoal::Query(self.term(&mut Marks::None)?))
            }
            Tok::Float(value, text) => {
                self.bump();
                Ok(Subgoal::Const { value, text })
            }
            Tok::Int(i) if !self.comparison_follows(1) => {
                self.bump();
                Ok(Subgoal::Const {
                    value: i as f64,
                    text: i.to_string(),
                })
            }
            Tok::Ident(s) if s == "inf" => {
                self.bump();
                Ok(Subgoal::Const {
                    value: f64::INFINITY,
                    text: "inf".into(),
                })
            }
            _ => Ok(Subgoal::Item(self.constraint(&mut Marks::None)?)),
        }
    }

    fn comparison_follows(&self, k: usize) -> bool {
        match self.peek_at(k) {
            Tok::Lt | Tok::Le | Tok::Gt | Tok::Ge | Tok::Eq => true,
            Tok::Ident(s) => s == "is",
            _ => false,
        }
    }

    fn spec_statement(&mut self) -> Result<SpecItem, ParseError> {
        self.scope.clear();
        let (line, col) = self.pos();
        let mut annotations = Vec::new();
        let first = if self.at(&Tok::LParen) {
            self.constraint(&mut Marks::None)?
        } else {
            let t = self.term(&mut Marks::Annotations(&mut annotations))?;
            self.infix_tail(t, &mut Marks::None)?
        };
        match self.peek() {
            Tok::Implied => {
                self.bump();
                if !annotations.is_empty() {
                    return Err(ParseError {
                        line,
                        col,
                        message: "`V:t` annotations are only allowed in type heads".into(),
                    });
                }
                let mut premises = Vec::new();
                loop {
                    let c = self.constraint(&mut Marks::None)?;
                    if !c.is_atom("true") {
                        premises.push(c);
                    }
                    if !self.eat(&Tok::Comma) {
                        break;
                    }
                }
                self.expect(&Tok::Dot)?;
                let rule = PropagationRule::new(first, premises);
                if !rule.conclusion.is_atom("fail") {
                    let pv = rule.premises.var_set();
                    if !rule.conclusion.var_set().is_subset(&pv) {
                        return Err(ParseError {
                            line,
                            col,
                            message: format!(
                                "conclusion `{}` has variables not bound by the premises",
                                rule.conclusion
                            ),
                        });
                    }
                }
                Ok(SpecItem::Prop(rule))
            }
            Tok::Turnstile | Tok::Dot => {
                let mut constraints = annotations;
                if self.eat(&Tok::Turnstile) {
                    loop {
                        let c = self.constraint(&mut Marks::None)?;
                        if !c.is_atom("true") {
                            constraints.push(c);
                        }
                        if !self.eat(&Tok::Comma) {
                            break;
                        }
                    }
                }
                self.expect(&Tok::Dot)?;
                let head = first;
                let functor = match head.functor() {
                    Some((f, n)) if !builtin::is_builtin(f, n) => f.to_string(),
                    _ => {
                        return Err(ParseError {
                            line,
                            col,
                            message: format!("`{head}` cannot head a simple type"),
                        })
                    }
                };
                if constraints
                    .iter()
                    .any(|c| c.functor().is_some_and(|(f, _)| f == functor))
                {
                    return Err(ParseError {
                        line,
                        col,
                        message: format!("simple type for `{functor}` constrains its own functor"),
                    });
                }
                Ok(SpecItem::Type(SimpleType::new(head, constraints)))
            }
            other => Err(self.error_here(format!(
                "expected `:-`, `<==` or `.`, found {}",
                other.describe()
            ))),
        }
    }

    fn card_decl(&mut self, symbols: &mut BTreeSet<String>) -> Result<CardinalityDecl, ParseError> {
        self.scope.clear();
        self.expect(&Tok::Bar)?;
        let mut bound_vars = BTreeSet::new();
        let mut patterns = Vec::new();
        loop {
            patterns.push(self.constraint(&mut Marks::Plus(&mut bound_vars))?);
            if !self.eat(&Tok::Comma) {
                break;
            }
        }
        self.expect(&Tok::Bar)?;
        self.expect(&Tok::Le)?;
        let (line, col) = self.pos();
        let mut bound = SymExpr::one();
        loop {
            let factor = match self.bump() {
                Tok::Int(i) if i > 0 => SymExpr::constant(i as u64),
                Tok::Ident(s) if s != "inf" && s != "max" => {
                    symbols.insert(s.clone());
                    let mut e = SymExpr::symbol(&s);
                    if self.eat(&Tok::Caret) {
                        match self.bump() {
                            Tok::Int(p) if p >= 0 => e = e.pow(p as u32),
                            _ => return Err(self.error_here("expected a nonnegative exponent")),
                        }
                    }
                    e
                }
                other => {
                    return Err(ParseError {
                        line,
                        col,
                        message: format!(
                            "cardinality bound must be a product of size parameters and positive integers, found {}",
                            other.describe()
                        ),
                    })
                }
            };
            bound = bound.mul(&factor);
            if !self.eat(&Tok::Star) {
                break;
            }
        }
        self.expect(&Tok::Dot)?;
        Ok(CardinalityDecl {
            patterns,
            bound_vars,
            bound,
        })
    }

    fn sym_sum(&mut self) -> Result<SymExpr, ParseError> {
        let mut e = self.sym_product()?;
        while self.eat(&Tok::Plus) {
            e = e.add(&self.sym_product()?);
        }
        Ok(e)
    }

    fn sym_product(&mut self) -> Result<SymExpr, ParseError> {
        let mut e = self.sym_factor()?;
        while self.eat(&Tok::Star) {
            e = e.mul(&self.sym_factor()?);
        }
        Ok(e)
    }

    fn sym_factor(&mut self) -> Result<SymExpr, ParseError> {
        let (line, col) = self.pos();
        let base = match self.bump() {
            Tok::Int(i) if i >= 0 => SymExpr::constant(i as u64),
            Tok::Ident(s) if s == "inf" => SymExpr::Infinite,
            Tok::Ident(s) if s == "max" && self.at(&Tok::LParen) => {
                self.bump();
                let mut args = Vec::new();
                loop {
                    let arg = self.sym_product()?;
                    match arg.as_single_monomial() {
                        Some(m) => args.push(m),
                        None => {
                            return Err(ParseError {
                                line,
                                col,
                                message: "arguments of `max` must be monomials".into(),
                            })
                        }
                    }
                    if !self.eat(&Tok::Comma) {
                        break;
                    }
                }
                self.expect(&Tok::RParen)?;
                SymExpr::from_monomial(Monomial::from_factor(Factor::max(args)))
            }
            Tok::Ident(s) => SymExpr::symbol(&s),
            Tok::LParen => {
                let e = self.sym_sum()?;
                self.expect(&Tok::RParen)?;
                e
            }
            other => {
                return Err(ParseError {
                    line,
                    col,
                    message: format!("expected a symbolic factor, found {}", other.describe()),
                })
            }
        };
        if self.eat(&Tok::Caret) {
            match self.bump() {
                Tok::Int(p) if p >= 0 => Ok(base.pow(p as u32)),
                _ => Err(self.error_here("expected a nonnegative exponent")),
            }
        } else {
            Ok(base)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::term::alpha_eq;

    #[test]
    fn side_condition_desugars_to_extra_subgoal() {
        let r = parse_rule("goal += f(X) for X < 9.").unwrap();
        assert_eq!(r.aggregator, Aggregator::Sum);
        assert_eq!(
            r.body,
            vec![
                Subgoal::Item(parse_term("f(X)").unwrap()),
                Subgoal::Item(parse_term("lessthan(X,9)").unwrap()),
            ]
        );
    }

    #[test]
    fn axiom_has_constant_body() {
        let r = parse_rule("a += 1.").unwrap();
        assert_eq!(r.head, Term::atom("a"));
        assert!(matches!(&r.body[..], [Subgoal::Const { value, .. }] if *value == 1.0));
    }

    #[test]
    fn is_and_list_sugar() {
        let r = parse_rule("f(Z, [1,2|T]) :- g(X), g(Y), Z is X+Y.").unwrap();
        assert_eq!(
            r.head.args()[1],
            Term::list(vec![Term::int(1), Term::int(2)], Term::var("T"))
        );
        assert_eq!(
            r.body[2],
            Subgoal::Item(Term::app(
                "plus",
                vec![Term::var("X"), Term::var("Y"), Term::var("Z")]
            ))
        );
        let r = parse_rule("f(Z) :- Z is X*Y.").unwrap();
        assert_eq!(r.body[0].term().unwrap().functor(), Some(("times", 3)));
    }

    #[test]
    fn cky_program() {
        let p = parse_program(
            "params: word; len; gamma.
             beta(X,I,K) += gamma(X,Y,Z) * beta(Y,I,J) * beta(Z,J,K).
             beta(X,I,K) += gamma(X,Y) * beta(Y,I,K).
             beta(X,I,K) += gamma(X,W) * word(W,I,K).
             goal += beta(s,0,N) * len(N).",
        )
        .unwrap();
        assert_eq!(p.rules.len(), 4);
        let params: Vec<_> = p.params.iter().cloned().collect();
        assert_eq!(params, vec!["gamma", "len", "word"]);
    }

    #[test]
    fn params_may_not_head_rules() {
        let err = parse_program("params: a.\nb += 1.\na += b.").unwrap_err();
        assert_eq!(err.line, 3);
    }

    #[test]
    fn builtins_may_not_head_rules() {
        assert!(parse_rule("lessthan(1,2) += 1.").is_err());
    }

    #[test]
    fn query_marker_and_min_plus_body() {
        let r = parse_rule("beta(I) min= cost(I,J) + beta(J).").unwrap();
        assert_eq!(r.aggregator, Aggregator::Min);
        assert_eq!(r.body.len(), 2);
        let r = parse_rule("a += ?b(X) * c(X).").unwrap();
        assert!(matches!(r.body[0], Subgoal::Query(_)));
    }

    #[test]
    fn pragma_is_recorded() {
        let p = parse_program("%% semiring: min_plus\na min= 1.").unwrap();
        assert_eq!(p.semiring.as_deref(), Some("min_plus"));
    }

    #[test]
    fn annotated_type_head() {
        let t = parse_simple_type("word(W:w,I:n,K:n) :- I < K.").unwrap();
        let expected = SimpleType::new(
            parse_term("word(W,I,K)").unwrap(),
            ["w(W)", "n(I)", "n(K)", "lessthan(I,K)"]
                .iter()
                .map(|s| parse_term(s).unwrap()),
        );
        assert_eq!(t, expected);
    }

    #[test]
    fn propagation_rules() {
        let spec = parse_analysis_spec(
            "(I < K) <== (I < J), (J < K).
             k(s) <== true.
             fail <== k(X), n(X).
             ks(Xs) <== ks([X|Xs]).",
        )
        .unwrap();
        assert_eq!(spec.prop_rules.len(), 4);
        let r = &spec.prop_rules[0];
        assert_eq!(r.conclusion, parse_term("lessthan(I,K)").unwrap());
        assert_eq!(r.premises.len(), 2);
        assert!(spec.prop_rules[1].premises.is_empty());
        assert!(parse_analysis_spec("f(X,Y) <== g(X).").is_err());
    }

    #[test]
    fn cardinality_declarations() {
        let spec = parse_analysis_spec(
            "|word(W, I, K)| <= n.
             |times(+X, Y, +Z)| <= 1.
             |gamma(X,+Y,Z)| <= k^2.
             |even(X), prime(X)| <= 1.",
        )
        .unwrap();
        assert_eq!(spec.card_decls.len(), 4);
        assert!(spec.card_decls[0].bound_vars.is_empty());
        assert_eq!(spec.card_decls[0].bound, SymExpr::symbol("n"));
        let vars: Vec<_> = spec.card_decls[1]
            .bound_vars
            .iter()
            .map(|v| v.to_string())
            .collect();
        assert_eq!(vars, vec!["X", "Z"]);
        assert_eq!(spec.card_decls[2].bound, SymExpr::symbol("k").pow(2));
        assert_eq!(spec.card_decls[3].patterns.len(), 2);
        assert!(spec.size_params.contains("n") && spec.size_params.contains("k"));
    }

    #[test]
    fn cardinality_bound_must_be_a_product() {
        assert!(parse_analysis_spec("|f(X)| <= n + 1.").is_err());
        assert!(parse_analysis_spec("|f(X)| <= 0.").is_err());
    }

    #[test]
    fn anonymous_variables_are_distinct() {
        let t = parse_term("f(_, _)").unwrap();
        assert_ne!(t.args()[0], t.args()[1]);
        assert!(!alpha_eq(&t, &parse_term("f(X, X)").unwrap()));
    }

    #[test]
    fn syntax_errors_carry_positions() {
        let err = parse_program("a += b\nc += d.").unwrap_err();
        assert_eq!((err.line, err.col), (2, 1));
    }
}
