mod support;

use proptest::prelude::*;

use dyna_core::solver::{run, step, RunOptions, Valuation};
use dyna_core::syntax::{parse_program, Program};
use dyna_core::term::Term;
use dyna_core::{Boolean, Real};

fn with_data(p: &Program, data: &[dyna_core::syntax::Rule]) -> Program {
    let mut all = p.clone();
    all.rules.extend(data.iter().cloned());
    all
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(150))]

    #[test]
    fn run_returns_a_fixpoint(seed in any::<u64>(), acyclic in any::<bool>()) {
        let inst = support::instance(seed, acyclic);
        let whole = with_data(&inst.program, &inst.data);
        if acyclic {
            let (v, _) = run::<Real>(&inst.program, &inst.data, &RunOptions::default()).unwrap();
            prop_assert!(step(&whole, &v).unwrap().approx_eq(&v));
        } else {
            let (v, _) = run::<Boolean>(&inst.program, &inst.data, &RunOptions::default()).unwrap();
            prop_assert!(step(&whole, &v).unwrap().approx_eq(&v));
        }
    }

    #[test]
    fn acyclic_values_equal_the_sum_over_groundings(seed in any::<u64>()) {
        let inst = support::instance(seed, true);
        let (v, _) = run::<Real>(&inst.program, &inst.data, &RunOptions::default()).unwrap();
        let oracle = support::sum_over_groundings(&inst.program, &inst.data, &support::universe());
        let got: Vec<&Term> = v.iter().map(|(k, _)| k).collect();
        let want: Vec<&Term> = oracle.keys().collect();
        prop_assert_eq!(got, want, "\n{}\n{}", inst.program_text, inst.data_text);
        for (k, want) in &oracle {
            let x = v.get(k);
            prop_assert!((x - want).abs() <= 1e-9 * want.abs().max(1.0), "{} = {}, expected {}\n{}", k, x, want, inst.program_text);
        }
    }

    #[test]
    fn boolean_support_grows_monotonically(seed in any::<u64>()) {
        let inst = support::instance(seed, false);
        let whole = with_data(&inst.program, &inst.data);
        let mut v = Valuation::<Boolean>::new();
        for _ in 0..50 {
            let next = step(&whole, &v).unwrap();
            prop_assert!(v.support().is_subset(&next.support()));
            if next == v {
                break;
            }
            v = next;
        }
    }

    #[test]
    fn prefix_firings_cover_rule_firings(seed in any::<u64>()) {
        let inst = support::instance(seed, true);
        let (_, stats) = run::<Real>(&inst.program, &inst.data, &RunOptions::default()).unwrap();
        let firings: u64 = stats.rule_firings.iter().sum();
        prop_assert!(stats.prefix_firings >= firings, "{} < {}", stats.prefix_firings, firings);
        prop_assert!(!stats.cyclic);
    }

    #[test]
    fn transitive_closure_matches_matrix_squaring(
        nodes in 1usize..8,
        edges in prop::collection::vec((0usize..8, 0usize..8), 0..20),
    ) {
        let edges: Vec<(usize, usize)> = edges.into_iter().filter(|&(a, b)| a < nodes && b < nodes).collect();
        let p = parse_program("params: edge.\npath(X,Y) :- edge(X,Y).\npath(X,Z) :- path(X,Y), edge(Y,Z).").unwrap();
        let data: String = edges.iter().map(|(a, b)| format!("edge({a},{b}) :- true.\n")).collect();
        let data = parse_program(&data).unwrap().rules;
        let (v, _) = run::<Boolean>(&p, &data, &RunOptions::default()).unwrap();
        let oracle = support::transitive_closure(nodes, &edges);
        for (a, row) in oracle.iter().enumerate() {
            for (b, &reach) in row.iter().enumerate() {
                let item = Term::app("path", vec![Term::int(a as i64), Term::int(b as i64)]);
                prop_assert_eq!(v.get(&item), reach, "path({},{})", a, b);
            }
        }
    }
}
