use std::cmp::Ordering;
use std::collections::{BTreeSet, HashMap};

use crate::syntax::{parse_analysis_spec, CardinalityDecl, SimpleType};
use crate::term::{fresh, match_term, Substitution, Term, TermLike, Var};

use super::SymExpr;

const DEFAULT_DECLS: &str = "
|plus(+X,+Y,Z)| <= 1.
|plus(+X,Y,+Z)| <= 1.
|plus(X,+Y,+Z)| <= 1.
|times(+X,+Y,Z)| <= 1.
|times(+X,Y,+Z)| <= 1.
|times(X,+Y,+Z)| <= 1.
|eq(+X,Y)| <= 1.
|eq(X,+Y)| <= 1.
";

/// Orders beyond this many constraints are chosen greedily.
pub const EXACT_LIMIT: usize = 16;

/// Conditional cardinality declarations, renamed apart from everything else.
#[derive(Clone, Debug)]
pub struct CardinalityDb {
    decls: Vec<CardinalityDecl>,
}

impl CardinalityDb {
    /// The functional dependencies of `plus`, `times` and `eq`, plus `user`.
    pub fn new(user: &[CardinalityDecl]) -> CardinalityDb {
        let defaults = parse_analysis_spec(DEFAULT_DECLS)
            .expect("default declarations parse")
            .card_decls;
        CardinalityDb::with_decls(defaults.iter().chain(user))
    }

    /// Exactly the given declarations.
    pub fn with_decls<'a>(decls: impl IntoIterator<Item = &'a CardinalityDecl>) -> CardinalityDb {
        CardinalityDb {
            decls: decls.into_iter().map(fresh).collect(),
        }
    }

    pub fn decls(&self) -> &[CardinalityDecl] {
        &self.decls
    }

    /// `⌈c | bound⌉` for a single constraint: 1 if `c` is already ground
    /// under `bound`, 0 for `fail`, else the least applicable declared bound
    /// (`∞` if none applies).
    pub fn single(&self, c: &Term, bound: &BTreeSet<Var>) -> SymExpr {
        if c.is_atom("fail") {
            return SymExpr::zero();
        }
        if c.var_set().is_subset(bound) {
            return SymExpr::one();
        }
        let mut best = SymExpr::Infinite;
        for d in self.decls.iter().filter(|d| d.patterns.len() == 1) {
            let mut theta = Substitution::new();
            if match_term(&d.patterns[0], c, &mut theta) && plus_vars_bound(d, &theta, bound) {
                best = min_bound(best, d.bound.clone());
            }
        }
        best
    }

    /// Every way a composite declaration consumes constraints outside
    /// `used`, as (consumed bitmask, bound).
    fn composite_matches(
        &self,
        constraints: &[Term],
        used: u32,
        bound: &BTreeSet<Var>,
    ) -> Vec<(u32, SymExpr)> {
        let mut out = Vec::new();
        for d in self.decls.iter().filter(|d| d.patterns.len() > 1) {
            let mut stack = vec![(0usize, 0u32, Substitution::new())];
            while let Some((k, mask, theta)) = stack.pop() {
                if k == d.patterns.len() {
                    if plus_vars_bound(d, &theta, bound) {
                        out.push((mask, d.bound.clone()));
                    }
                    continue;
                }
                for (i, c) in constraints.iter().enumerate() {
                    let bit = 1u32 << i;
                    if (used | mask) & bit != 0 {
                        continue;
                    }
                    let mut ext = theta.clone();
                    if match_term(&d.patterns[k], c, &mut ext) {
                        stack.push((k + 1, mask | bit, ext));
                    }
                }
            }
        }
        out
    }
}

fn plus_vars_bound(d: &CardinalityDecl, theta: &Substitution, bound: &BTreeSet<Var>) -> bool {
    d.bound_vars
        .iter()
        .all(|v| theta.lookup(v).var_set().is_subset(bound))
}

/// Smaller of two bounds by growth, with a textual tie-break so the choice
/// does not depend on the order candidates are seen in.
fn min_bound(a: SymExpr, b: SymExpr) -> SymExpr {
    match a
        .heuristic_cmp(&b)
        .then_with(|| a.to_string().cmp(&b.to_string()))
    {
        Ordering::Greater => b,
        _ => a,
    }
}

/// A cardinality bound and whether it came from the greedy fallback.
#[derive(Clone, Debug, PartialEq)]
pub struct CardBound {
    pub bound: SymExpr,
    pub greedy: bool,
}

/// `⌈C | V⌉`: the least product of conditional cardinalities over
/// elimination orders of `constraints`, each step conditioned on `given`
/// and everything bound by earlier steps.
pub fn card_bound(
    constraints: &BTreeSet<Term>,
    given: &BTreeSet<Var>,
    db: &CardinalityDb,
) -> SymExpr {
    card_bound_detailed(constraints, given, db).bound
}

pub fn card_bound_detailed(
    constraints: &BTreeSet<Term>,
    given: &BTreeSet<Var>,
    db: &CardinalityDb,
) -> CardBound {
    let cs: Vec<Term> = constraints.iter().cloned().collect();
    if cs.iter().any(|c| c.is_atom("fail")) {
        return CardBound {
            bound: SymExpr::zero(),
            greedy: false,
        };
    }
    if cs.len() > EXACT_LIMIT {
        return CardBound {
            bound: greedy(&cs, given, db),
            greedy: true,
        };
    }
    let vars: Vec<BTreeSet<Var>> = cs.iter().map(|c| c.var_set()).collect();
    let full = if cs.is_empty() {
        0
    } else {
        u32::MAX >> (32 - cs.len())
    };
    let mut memo: HashMap<u32, SymExpr> = HashMap::new();
    let bound = exact(full, 0, &cs, &vars, given, db, &mut memo);
    CardBound {
        bound,
        greedy: false,
    }
}

fn bound_by(mask: u32, vars: &[BTreeSet<Var>], given: &BTreeSet<Var>) -> BTreeSet<Var> {
    let mut out = given.clone();
    for (i, vs) in vars.iter().enumerate() {
        if mask & (1 << i) != 0 {
            out.extend(vs.iter().cloned());
        }
    }
    out
}

fn exact(
    full: u32,
    mask: u32,
    cs: &[Term],
    vars: &[BTreeSet<Var>],
    given: &BTreeSet<Var>,
    db: &CardinalityDb,
    memo: &mut HashMap<u32, SymExpr>,
) -> SymExpr {
    if mask == full {
        return SymExpr::one();
    }
    if let Some(e) = memo.get(&mask) {
        return e.clone();
    }
    let bound = bound_by(mask, vars, given);
    let mut best: Option<SymExpr> = None;
    let consider = |best: &mut Option<SymExpr>, e: SymExpr| {
        *best = Some(match best.take() {
            None => e,
            Some(b) => min_bound(b, e),
        });
    };
    for (i, c) in cs.iter().enumerate() {
        if mask & (1 << i) != 0 {
            continue;
        }
        let step = db.single(c, &bound);
        let rest = exact(full, mask | (1 << i), cs, vars, given, db, memo);
        consider(&mut best, step.mul(&rest));
    }
    for (consumed, step) in db.composite_matches(cs, mask, &bound) {
        let rest = exact(full, mask | consumed, cs, vars, given, db, memo);
        consider(&mut best, step.mul(&rest));
    }
    let best = best.expect("at least one constraint remains");
    memo.insert(mask, best.clone());
    best
}

fn greedy(cs: &[Term], given: &BTreeSet<Var>, db: &CardinalityDb) -> SymExpr {
    let mut bound = given.clone();
    let mut remaining: Vec<&Term> = cs.iter().collect();
    let mut total = SymExpr::one();
    while !remaining.is_empty() {
        let (pick, step) = remaining
            .iter()
            .enumerate()
            .map(|(i, c)| (i, db.single(c, &bound)))
            .reduce(|a, b| {
                if min_bound(a.1.clone(), b.1.clone()) == a.1 {
                    a
                } else {
                    b
                }
            })
            .expect("nonempty");
        bound.extend(remaining.remove(pick).var_set());
        total = total.mul(&step);
    }
    total
}

/// `⌈s | V⌉`. The head counts as a constraint too, so declarations about
/// the head relation apply and unconstrained head variables give `∞`.
pub fn type_size(s: &SimpleType, given: &BTreeSet<Var>, db: &CardinalityDb) -> SymExpr {
    let mut cs = s.constraints.clone();
    cs.insert(s.head.clone());
    card_bound(&cs, given, db)
}

/// Sizes of each simple type and their sum.
pub fn space_bound(types: &[SimpleType], db: &CardinalityDb) -> (Vec<SymExpr>, SymExpr) {
    let sizes: Vec<SymExpr> = types
        .iter()
        .map(|t| type_size(t, &BTreeSet::new(), db))
        .collect();
    let total = SymExpr::sum(&sizes);
    (sizes, total)
}
