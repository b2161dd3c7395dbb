mod support;

use std::collections::BTreeSet;

use proptest::prelude::*;

use dyna_core::semiring::booleanize;
use dyna_core::solver::{run, RunOptions};
use dyna_core::syntax::Program;
use dyna_core::term::Term;
use dyna_core::{Boolean, Counting, Real, Semiring, SemiringKind, Tropical, Viterbi};

fn check_laws<S: Semiring>(a: &S::Value, b: &S::Value, c: &S::Value) -> Result<(), TestCaseError> {
    let eq = |x: S::Value, y: S::Value, law: &str| -> Result<(), TestCaseError> {
        prop_assert!(
            S::approx_eq(&x, &y),
            "{} fails in {}: {:?} vs {:?}",
            law,
            S::NAME,
            x,
            y
        );
        Ok(())
    };
    let (zero, one) = (S::zero(), S::one());
    eq(
        S::plus(&S::plus(a, b), c),
        S::plus(a, &S::plus(b, c)),
        "plus associativity",
    )?;
    eq(S::plus(a, b), S::plus(b, a), "plus commutativity")?;
    eq(S::plus(a, &zero), a.clone(), "plus identity")?;
    eq(
        S::times(&S::times(a, b), c),
        S::times(a, &S::times(b, c)),
        "times associativity",
    )?;
    eq(S::times(a, &one), a.clone(), "right times identity")?;
    eq(S::times(&one, a), a.clone(), "left times identity")?;
    eq(
        S::times(a, &S::plus(b, c)),
        S::plus(&S::times(a, b), &S::times(a, c)),
        "left distributivity",
    )?;
    eq(
        S::times(&S::plus(a, b), c),
        S::plus(&S::times(a, c), &S::times(b, c)),
        "right distributivity",
    )?;
    eq(S::times(a, &zero), zero.clone(), "right annihilation")?;
    eq(S::times(&zero, a), zero.clone(), "left annihilation")?;
    Ok(())
}

fn nonneg() -> impl Strategy<Value = f64> {
    prop_oneof![Just(0.0), Just(1.0), 0.0f64..1e3]
}

fn cost() -> impl Strategy<Value = f64> {
    prop_oneof![Just(f64::INFINITY), Just(0.0), -1e3f64..1e3]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn real_laws(a in nonneg(), b in nonneg(), c in nonneg()) {
        check_laws::<Real>(&a, &b, &c)?;
    }

    #[test]
    fn tropical_laws(a in cost(), b in cost(), c in cost()) {
        check_laws::<Tropical>(&a, &b, &c)?;
    }

    #[test]
    fn viterbi_laws(a in 0.0f64..=1.0, b in 0.0f64..=1.0, c in 0.0f64..=1.0) {
        check_laws::<Viterbi>(&a, &b, &c)?;
    }

    #[test]
    fn counting_laws(a in 0u64..1 << 20, b in 0u64..1 << 20, c in 0u64..1 << 20) {
        check_laws::<Counting>(&a, &b, &c)?;
    }

    #[test]
    fn boolean_laws(a in any::<bool>(), b in any::<bool>(), c in any::<bool>()) {
        check_laws::<Boolean>(&a, &b, &c)?;
    }
}

fn weighted_support<S: Semiring>(p: &Program, data: &[dyna_core::syntax::Rule]) -> BTreeSet<Term> {
    run::<S>(p, data, &RunOptions::default())
        .unwrap()
        .0
        .support()
}

/// Items with a non-zero weight also have a proof in the boolean program.
#[test]
fn booleanization_is_sound() {
    let base = support::base_seed() ^ 0xb001;
    let mut nonempty = 0;
    for i in 0..200u64 {
        let seed = base.wrapping_add(i);
        let mut inst = support::instance(seed, true);
        inst.data.truncate(6);
        let data_program = Program {
            rules: inst.data.clone(),
            ..Program::default()
        };
        for kind in [
            SemiringKind::RealPlusTimes,
            SemiringKind::MinPlus,
            SemiringKind::MaxTimes,
        ] {
            let weighted = match kind {
                SemiringKind::RealPlusTimes => weighted_support::<Real>(&inst.program, &inst.data),
                SemiringKind::MinPlus => weighted_support::<Tropical>(&inst.program, &inst.data),
                _ => weighted_support::<Viterbi>(&inst.program, &inst.data),
            };
            let (bp, _) = booleanize(&inst.program, kind);
            let (bd, _) = booleanize(&data_program, kind);
            let boolean = weighted_support::<Boolean>(&bp, &bd.rules);
            let missing: Vec<&Term> = weighted.difference(&boolean).collect();
            assert!(
                missing.is_empty(),
                "seed {seed} ({}): {missing:?} lost by booleanization\n{}\n{}",
                kind.name(),
                inst.program_text,
                inst.data_text
            );
            if weighted.len() > inst.data.len() {
                nonempty += 1;
            }
        }
    }
    assert!(nonempty > 50, "only {nonempty} runs derived anything");
}
