mod support;

use std::collections::BTreeSet;

use proptest::prelude::*;

use dyna_core::denote::Interpretation;
use dyna_core::propagate::canonical_text;
use dyna_core::solver::{run_kind, BodyOrder, RunOptions};
use dyna_core::syntax::{parse_analysis_spec, parse_program, SimpleType};
use dyna_core::term::Term;
use dyna_core::typeinfer::{relax, InferError, InferOptions, TypeProgram};
use dyna_core::SemiringKind;

fn texts(types: &[SimpleType]) -> BTreeSet<String> {
    types.iter().map(canonical_text).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn inferred_types_cover_the_support(seed in any::<u64>(), acyclic in any::<bool>()) {
        let inst = support::instance(seed, acyclic);
        let tp = TypeProgram::new(&inst.program, inst.kind, &inst.spec, Default::default());
        let env = tp.infer(&InferOptions::default()).unwrap();
        let (values, _) = run_kind(inst.kind, &inst.program, &inst.data, &RunOptions::default(), &BodyOrder).unwrap();
        for item in values.keys() {
            prop_assert!(
                env.types.iter().any(|t| inst.interp.member(t, item)),
                "{} is not covered\n{}", item, inst.program_text
            );
        }
    }

    #[test]
    fn the_fixpoint_is_stable(seed in any::<u64>(), acyclic in any::<bool>()) {
        let inst = support::instance(seed, acyclic);
        let tp = TypeProgram::new(&inst.program, inst.kind, &inst.spec, Default::default());
        let opts = InferOptions::default();
        let env = tp.infer(&opts).unwrap();
        let again = tp.step(&env.types, &opts).unwrap();
        prop_assert_eq!(texts(&again), texts(&env.types));
    }

    #[test]
    fn relaxation_only_grows_denotations(
        constraints in prop::collection::btree_set(
            prop_oneof![
                (prop::sample::select(&["A", "B", "C", "D"][..]), prop::sample::select(&["A", "B", "C", "D"][..]))
                    .prop_map(|(a, b)| Term::app("lessthan", vec![Term::var(a), Term::var(b)])),
                prop::sample::select(&["A", "B", "C", "D"][..]).prop_map(|a| Term::app("n", vec![Term::var(a)])),
            ],
            0..6,
        ),
        n in prop::collection::btree_set(0i64..4, 0..4),
    ) {
        let s = SimpleType::new(Term::app("p", vec![Term::var("A"), Term::var("B")]), constraints);
        let mut interp = Interpretation::new((0..4).map(Term::int));
        for i in n {
            interp.add("n", vec![Term::int(i)]);
        }
        let relaxed = relax(&s);
        prop_assert!(interp.denotation(&s).is_subset(&interp.denotation(&relaxed)));
    }
}

#[test]
fn truncation_makes_list_building_terminate() {
    let p = parse_program("params: x.\nlst([]).\nlst([X|L]) :- x(X), lst(L).").unwrap();
    let spec = parse_analysis_spec("params: k.\nx(X:k).").unwrap();
    let tp = TypeProgram::new(&p, SemiringKind::Bool, &spec, Default::default());

    let env = tp.infer(&InferOptions::default()).unwrap();
    let lists: Vec<&SimpleType> = env.derived(&p).collect();
    assert!(!lists.is_empty());
    // Every list of `k` elements is covered, however long.
    let mut interp = Interpretation::new([Term::atom("a"), Term::atom("b")]);
    interp.add("k", vec![Term::atom("a")]);
    let long = Term::app(
        "lst",
        vec![Term::list(vec![Term::atom("a"); 9], Term::nil())],
    );
    assert!(lists.iter().any(|t| interp.member(t, &long)));

    let untruncated = InferOptions {
        depth: None,
        max_rounds: 30,
        ..InferOptions::default()
    };
    assert!(matches!(
        tp.infer(&untruncated),
        Err(InferError::Diverged { rounds: 30, .. })
    ));
}
