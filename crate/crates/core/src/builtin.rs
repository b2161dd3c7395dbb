//! The fixed builtin vocabulary: `lessthan/2`, `leq/2`, `eq/2`, `plus/3`,
//! `times/3`, `true/0` and `fail/0`.
//!
//! Order and arithmetic builtins are defined on integer constants only; any
//! other ground argument makes them false.

use crate::term::{unify, Substitution, Term};

pub const BUILTINS: [(&str, usize); 7] = [
    ("lessthan", 2),
    ("leq", 2),
    ("eq", 2),
    ("plus", 3),
    ("times", 3),
    ("true", 0),
    ("fail", 0),
];

pub fn is_builtin(name: &str, arity: usize) -> bool {
    BUILTINS.iter().any(|&(n, a)| n == name && a == arity)
}

pub fn is_builtin_term(t: &Term) -> bool {
    t.functor().is_some_and(|(f, n)| is_builtin(f, n))
}

/// Result of evaluating a builtin under a partial assignment.
#[derive(Clone, Debug, PartialEq)]
pub enum Eval {
    True,
    False,
    /// True under the returned extension of the assignment.
    Bind(Substitution),
    /// Too few arguments are instantiated to decide.
    Unbound,
}

/// Evaluates builtin `t` (already resolved against `theta`) as a generator of
/// at most one solution.
pub fn eval(t: &Term, theta: &Substitution) -> Eval {
    let t = theta.resolve(t);
    let args = t.args();
    let (name, _) = t.functor().expect("builtin terms are compounds");
    match name {
        "true" => Eval::True,
        "fail" => Eval::False,
        "lessthan" | "leq" => {
            if !(args[0].is_ground() && args[1].is_ground()) {
                return Eval::Unbound;
            }
            match (args[0].as_int(), args[1].as_int()) {
                (Some(a), Some(b)) => truth(if name == "lessthan" { a < b } else { a <= b }),
                _ => Eval::False,
            }
        }
        "eq" => {
            if !args[0].is_ground() && !args[1].is_ground() {
                return Eval::Unbound;
            }
            match unify(&args[0], &args[1], theta) {
                Some(_) if args[0].is_ground() && args[1].is_ground() => Eval::True,
                Some(ext) => Eval::Bind(ext),
                None => Eval::False,
            }
        }
        "plus" | "times" => arith(name == "plus", args, theta),
        _ => panic!("not a builtin: {t}"),
    }
}

fn truth(b: bool) -> Eval {
    if b {
        Eval::True
    } else {
        Eval::False
    }
}

fn arith(is_plus: bool, args: &[Term], theta: &Substitution) -> Eval {
    let ground: Vec<bool> = args.iter().map(Term::is_ground).collect();
    for (a, g) in args.iter().zip(&ground) {
        if *g && a.as_int().is_none() {
            return Eval::False;
        }
    }
    let x = args[0].as_int();
    let y = args[1].as_int();
    let z = args[2].as_int();
    let solve = |target: &Term, value: Option<i64>| -> Eval {
        match value {
            None => Eval::False,
            Some(v) => match unify(target, &Term::Int(v), theta) {
                Some(ext) => Eval::Bind(ext),
                None => Eval::False,
            },
        }
    };
    match (x, y, z) {
        (Some(x), Some(y), Some(z)) => {
            let r = if is_plus {
                x.checked_add(y)
            } else {
                x.checked_mul(y)
            };
            truth(r == Some(z))
        }
        (Some(x), Some(y), None) => solve(
            &args[2],
            if is_plus {
                x.checked_add(y)
            } else {
                x.checked_mul(y)
            },
        ),
        (Some(0), None, Some(0)) | (None, Some(0), Some(0)) if !is_plus => Eval::Unbound,
        (Some(x), None, Some(z)) => solve(&args[1], inverse(is_plus, z, x)),
        (None, Some(y), Some(z)) => solve(&args[0], inverse(is_plus, z, y)),
        _ => Eval::Unbound,
    }
}

/// The `w` with `w op known = z`, if it exists and is unique.
fn inverse(is_plus: bool, z: i64, known: i64) -> Option<i64> {
    if is_plus {
        z.checked_sub(known)
    } else if known != 0 && z % known == 0 {
        Some(z / known)
    } else {
        None
    }
}

/// Decides a ground builtin; `None` if it is not ground.
pub fn eval_ground(t: &Term) -> Option<bool> {
    if !t.is_ground() {
        return None;
    }
    match eval(t, &Substitution::new()) {
        Eval::True | Eval::Bind(_) => Some(true),
        Eval::False => Some(false),
        Eval::Unbound => None,
    }
}
