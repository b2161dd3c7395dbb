use proptest::prelude::*;

use dyna_core::term::{
    alpha_eq, match_term, subst, truncate, unify, Substitution, Term, TermLike, Var,
};

const VARS: [&str; 3] = ["X", "Y", "Z"];
const CONSTS: [&str; 3] = ["a", "b", "c"];

fn term(depth: u32) -> impl Strategy<Value = Term> {
    let leaf = prop_oneof![
        prop::sample::select(&VARS[..]).prop_map(Term::var),
        prop::sample::select(&CONSTS[..2]).prop_map(Term::atom),
    ];
    leaf.prop_recursive(depth, 8, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(|t| Term::app("f", vec![t])),
            (inner.clone(), inner).prop_map(|(a, b)| Term::app("g", vec![a, b])),
        ]
    })
}

/// Ground terms of depth at most one over the constants.
fn ground_universe() -> Vec<Term> {
    let consts: Vec<Term> = CONSTS.iter().map(|c| Term::atom(c)).collect();
    let mut out = consts.clone();
    for a in &consts {
        out.push(Term::app("f", vec![a.clone()]));
        for b in &consts {
            out.push(Term::app("g", vec![a.clone(), b.clone()]));
        }
    }
    out
}

/// Every assignment of ground terms to `vars`.
fn groundings(vars: &[Var], universe: &[Term]) -> Vec<Substitution> {
    let mut out = vec![Substitution::new()];
    for v in vars {
        out = out
            .into_iter()
            .flat_map(|s| {
                universe.iter().map(move |g| {
                    let mut s = s.clone();
                    s.bind(v.clone(), g.clone());
                    s
                })
            })
            .collect();
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn unifier_is_most_general(a in term(2), b in term(2)) {
        let universe = ground_universe();
        let vars = (a.clone(), b.clone()).vars();
        let common: Vec<Term> = groundings(&vars, &universe)
            .into_iter()
            .filter_map(|s| {
                let ga = subst(&a, &s);
                (ga == subst(&b, &s)).then_some(ga)
            })
            .collect();
        let theta = unify(&a, &b, &Substitution::new());
        if common.is_empty() {
            return Ok(());
        }
        let theta = theta.expect("a common ground instance exists, so unification must succeed");
        let general = subst(&a, &theta);
        prop_assert_eq!(&general, &subst(&b, &theta));
        for g in &common {
            prop_assert!(match_term(&general, g, &mut Substitution::new()), "{} is not an instance of {}", g, general);
        }
    }

    #[test]
    fn unification_is_symmetric(a in term(2), b in term(2)) {
        let ab = unify(&a, &b, &Substitution::new());
        let ba = unify(&b, &a, &Substitution::new());
        prop_assert_eq!(ab.is_some(), ba.is_some());
        if let (Some(ab), Some(ba)) = (ab, ba) {
            let pair = (a.clone(), b.clone());
            prop_assert!(alpha_eq(&subst(&pair, &ab), &subst(&pair, &ba)));
        }
    }

    #[test]
    fn substitution_is_idempotent(t in term(3), a in term(2), b in term(2)) {
        if let Some(theta) = unify(&a, &b, &Substitution::new()) {
            let once = subst(&t, &theta);
            prop_assert_eq!(subst(&once, &theta), once);
        }
    }

    #[test]
    fn truncation_unifies_with_the_original(t in term(4), depth in 1usize..4) {
        let cut = truncate(&t, depth);
        prop_assert!(cut.depth() <= depth);
        prop_assert!(unify(&cut, &t, &Substitution::new()).is_some());
    }
}
