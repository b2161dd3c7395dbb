//! Random instances and brute-force oracles shared by the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use dyna_core::denote::Interpretation;
use dyna_core::syntax::{parse_analysis_spec, parse_program, AnalysisSpec, Program, Rule, Subgoal};
use dyna_core::term::Term;
use dyna_core::SemiringKind;

/// Base seed for the randomized suites; `DYNA_ANALYZE_SEED` overrides it.
pub fn base_seed() -> u64 {
    std::env::var("DYNA_ANALYZE_SEED")
        .ok()
        .and_then(|s| s.parse().ok())
        .unwrap_or(0x05ee_dd1a)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn corpus(name: &str) -> String {
    let path = format!("{}/corpus/{name}", env!("CARGO_MANIFEST_DIR"));
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{path}: {e}"))
}

/// A program, an analysis spec, ground data conforming to the spec's input
/// types, and the finite interpretation of the spec's parameters that the
/// data was drawn from.
pub struct Instance {
    pub program_text: String,
    pub spec_text: String,
    pub data_text: String,
    pub program: Program,
    pub spec: AnalysisSpec,
    pub data: Vec<Rule>,
    pub interp: Interpretation,
    /// Size parameter values: the cardinality of each parameter relation.
    pub sizes: BTreeMap<String, u64>,
    pub kind: SemiringKind,
}

const VARS: [&str; 3] = ["X", "Y", "Z"];
const INPUTS: [(&str, usize); 3] = [("u", 1), ("e", 2), ("lab", 2)];
const ATOMS: [&str; 2] = ["s", "t"];

/// Universe for variables no constraint pins down.
pub fn universe() -> Vec<Term> {
    let mut u: Vec<Term> = (0..10).map(Term::int).collect();
    u.extend(ATOMS.iter().map(|a| Term::atom(a)));
    u
}

fn subset<T: Clone>(r: &mut ChaCha8Rng, items: &[T], p: f64) -> Vec<T> {
    items.iter().filter(|_| r.gen_bool(p)).cloned().collect()
}

/// A random instance. With `acyclic`, derived predicates are stratified and
/// the program is weighted in the real semiring; otherwise rules may be
/// recursive and the program is boolean.
pub fn instance(seed: u64, acyclic: bool) -> Instance {
    let mut r = rng(seed);
    let ints: Vec<i64> = (0..4).collect();
    let mut n_rel = subset(&mut r, &ints, 0.7);
    if n_rel.is_empty() {
        n_rel.push(0);
    }
    let mut k_rel: Vec<&str> = subset(&mut r, &ATOMS, 0.7);
    if k_rel.is_empty() {
        k_rel.push("s");
    }
    let ordered_e = r.gen_bool(0.5);
    let functional_e = r.gen_bool(0.5);

    // Spec.
    let mut spec_text = String::from("params: n; k.\nu(X:n).\n");
    spec_text.push_str(if ordered_e {
        "e(X:n,Y:n) :- X < Y.\n"
    } else {
        "e(X:n,Y:n).\n"
    });
    spec_text.push_str("lab(A:k,X:n).\nfail <== k(X), n(X).\n|n(X)| <= n.\n|k(A)| <= k.\n");
    if functional_e {
        spec_text.push_str("|e(+X,Y)| <= 1.\n");
    }

    // Data.
    let sem_one = |r: &mut ChaCha8Rng| -> String {
        if acyclic {
            ["0.5", "1", "2", "3"][r.gen_range(0..4)].to_string()
        } else {
            "true".to_string()
        }
    };
    let agg = if acyclic { "+=" } else { ":-" };
    let mut data_text = String::new();
    for &i in &subset(&mut r, &n_rel, 0.7) {
        let v = sem_one(&mut r);
        data_text.push_str(&format!("u({i}) {agg} {v}.\n"));
    }
    let mut used_sources = BTreeSet::new();
    for &i in &n_rel {
        for &j in &n_rel {
            if (ordered_e && i >= j)
                || (functional_e && used_sources.contains(&i))
                || !r.gen_bool(0.5)
            {
                continue;
            }
            used_sources.insert(i);
            let v = sem_one(&mut r);
            data_text.push_str(&format!("e({i},{j}) {agg} {v}.\n"));
        }
    }
    for a in &k_rel {
        for &i in &n_rel {
            if r.gen_bool(0.4) {
                let v = sem_one(&mut r);
                data_text.push_str(&format!("lab({a},{i}) {agg} {v}.\n"));
            }
        }
    }

    // Program.
    let npreds = r.gen_range(2..=4);
    let arity: Vec<usize> = (0..npreds).map(|_| r.gen_range(1..=2)).collect();
    let nrules = r.gen_range(2..=5);
    let mut program_text = String::from("params: u; e; lab.\n");
    for _ in 0..nrules {
        let head_pred = r.gen_range(0..npreds);
        let nbody = r.gen_range(1..=3);
        let mut body: Vec<String> = Vec::new();
        let mut body_vars: Vec<&str> = Vec::new();
        let arg =
            |r: &mut ChaCha8Rng, body_vars: &mut Vec<&'static str>, atom_slot: bool| -> String {
                if r.gen_bool(0.15) {
                    if atom_slot {
                        ATOMS[r.gen_range(0..2)].to_string()
                    } else {
                        r.gen_range(0..4).to_string()
                    }
                } else {
                    let v = VARS[r.gen_range(0..VARS.len())];
                    if !body_vars.contains(&v) {
                        body_vars.push(v);
                    }
                    v.to_string()
                }
            };
        for _ in 0..nbody {
            let use_derived = r.gen_bool(0.45) && (!acyclic || head_pred > 0);
            let (name, n, is_lab) = if use_derived {
                let j = if acyclic {
                    r.gen_range(0..head_pred)
                } else {
                    r.gen_range(0..npreds)
                };
                (format!("p{j}"), arity[j], false)
            } else {
                let (name, n) = INPUTS[r.gen_range(0..INPUTS.len())];
                (name.to_string(), n, name == "lab")
            };
            let args: Vec<String> = (0..n)
                .map(|i| arg(&mut r, &mut body_vars, is_lab && i == 0))
                .collect();
            body.push(format!("{name}({})", args.join(",")));
        }
        if body_vars.len() >= 2 && r.gen_bool(0.35) {
            let mut pair = body_vars.clone();
            pair.shuffle(&mut r);
            body.push(format!("{} < {}", pair[0], pair[1]));
        }
        if acyclic && !body_vars.is_empty() && r.gen_bool(0.2) {
            let v = body_vars[r.gen_range(0..body_vars.len())];
            body.push(format!("plus({v},1,V)"));
            body_vars.push("V");
        }
        let head_args: Vec<String> = (0..arity[head_pred])
            .map(|_| {
                if body_vars.is_empty() || r.gen_bool(0.1) {
                    r.gen_range(0..4).to_string()
                } else {
                    body_vars[r.gen_range(0..body_vars.len())].to_string()
                }
            })
            .collect();
        let sep = if acyclic { " * " } else { ", " };
        program_text.push_str(&format!(
            "p{head_pred}({}) {agg} {}.\n",
            head_args.join(","),
            body.join(sep)
        ));
    }

    let program = parse_program(&program_text).unwrap_or_else(|e| panic!("{e}\n{program_text}"));
    let spec = parse_analysis_spec(&spec_text).unwrap_or_else(|e| panic!("{e}\n{spec_text}"));
    let data = parse_program(&data_text)
        .unwrap_or_else(|e| panic!("{e}\n{data_text}"))
        .rules;

    let mut interp = Interpretation::new(universe());
    for &i in &n_rel {
        interp.add("n", vec![Term::int(i)]);
    }
    for a in &k_rel {
        interp.add("k", vec![Term::atom(a)]);
    }
    let sizes = [("n", n_rel.len() as u64), ("k", k_rel.len() as u64)]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect();
    Instance {
        program_text,
        spec_text,
        data_text,
        program,
        spec,
        data,
        interp,
        sizes,
        kind: if acyclic {
            SemiringKind::RealPlusTimes
        } else {
            SemiringKind::Bool
        },
    }
}

/// Real-semiring values of a stratified program computed by enumerating
/// every grounding of every rule over `domain`, predicate by predicate.
/// Independent of unification and join ordering.
pub fn sum_over_groundings(p: &Program, data: &[Rule], domain: &[Term]) -> BTreeMap<Term, f64> {
    let mut table: HashMap<Term, f64> = HashMap::new();
    for d in data {
        let value: f64 = d
            .body
            .iter()
            .map(|g| match g {
                Subgoal::Const { value, .. } => *value,
                _ => panic!("data axioms have constant bodies"),
            })
            .product();
        *table.entry(d.head.clone()).or_insert(0.0) += value;
    }
    let mut preds: Vec<String> = p
        .rules
        .iter()
        .map(|r| r.head.functor().unwrap().0.to_string())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    preds.sort();
    for pred in preds {
        let mut new: HashMap<Term, f64> = HashMap::new();
        for r in p
            .rules
            .iter()
            .filter(|r| r.head.functor().unwrap().0 == pred)
        {
            let vars: Vec<String> = {
                let mut vs = BTreeSet::new();
                collect_var_names(&r.head, &mut vs);
                for g in &r.body {
                    if let Some(t) = g.term() {
                        collect_var_names(t, &mut vs);
                    }
                }
                vs.into_iter().collect()
            };
            let mut assignment = vec![0usize; vars.len()];
            loop {
                let env: HashMap<&str, &Term> = vars
                    .iter()
                    .zip(&assignment)
                    .map(|(v, &i)| (v.as_str(), &domain[i]))
                    .collect();
                let mut value = 1.0;
                for g in &r.body {
                    value *= match g {
                        Subgoal::Const { value, .. } => *value,
                        Subgoal::Item(t) | Subgoal::Query(t) => {
                            let ground = ground_with(t, &env);
                            match builtin_truth(&ground) {
                                Some(true) => 1.0,
                                Some(false) => 0.0,
                                None => table.get(&ground).copied().unwrap_or(0.0),
                            }
                        }
                    };
                    if value == 0.0 {
                        break;
                    }
                }
                if value != 0.0 {
                    *new.entry(ground_with(&r.head, &env)).or_insert(0.0) += value;
                }
                // Next assignment in lexicographic order.
                let mut k = 0;
                while k < assignment.len() {
                    assignment[k] += 1;
                    if assignment[k] < domain.len() {
                        break;
                    }
                    assignment[k] = 0;
                    k += 1;
                }
                if k == assignment.len() {
                    break;
                }
            }
        }
        table.extend(new);
    }
    table.into_iter().filter(|(_, v)| *v != 0.0).collect()
}

fn collect_var_names(t: &Term, out: &mut BTreeSet<String>) {
    match t {
        Term::Var(v) => {
            out.insert(v.to_string());
        }
        Term::Int(_) => {}
        Term::App(_, args) => args.iter().for_each(|a| collect_var_names(a, out)),
    }
}

fn ground_with(t: &Term, env: &HashMap<&str, &Term>) -> Term {
    match t {
        Term::Var(v) => env[v.to_string().as_str()].clone(),
        Term::Int(i) => Term::int(*i),
        Term::App(f, args) => Term::app(f, args.iter().map(|a| ground_with(a, env)).collect()),
    }
}

/// Truth of ground builtins by direct integer arithmetic; `None` for
/// anything else.
fn builtin_truth(t: &Term) -> Option<bool> {
    let (f, n) = t.functor()?;
    let ints: Vec<Option<i64>> = t.args().iter().map(Term::as_int).collect();
    let all = || ints.iter().copied().collect::<Option<Vec<i64>>>();
    match (f, n) {
        ("lessthan", 2) => Some(all().is_some_and(|v| v[0] < v[1])),
        ("leq", 2) => Some(all().is_some_and(|v| v[0] <= v[1])),
        ("plus", 3) => Some(all().is_some_and(|v| v[0] + v[1] == v[2])),
        ("times", 3) => Some(all().is_some_and(|v| v[0] * v[1] == v[2])),
        ("eq", 2) => Some(t.args()[0] == t.args()[1]),
        ("true", 0) => Some(true),
        _ => None,
    }
}

/// Shortest distances from `source` by Bellman-Ford relaxation.
pub fn bellman_ford(
    nodes: usize,
    edges: &[(usize, usize, i64)],
    source: usize,
) -> Vec<Option<i64>> {
    let mut dist = vec![None; nodes];
    dist[source] = Some(0);
    for _ in 0..nodes {
        for &(a, b, w) in edges {
            if let Some(da) = dist[a] {
                if dist[b].is_none_or(|db| da + w < db) {
                    dist[b] = Some(da + w);
                }
            }
        }
    }
    dist
}

/// Reachability by repeated squaring of the boolean adjacency matrix.
pub fn transitive_closure(nodes: usize, edges: &[(usize, usize)]) -> Vec<Vec<bool>> {
    let mut m = vec![vec![false; nodes]; nodes];
    for &(a, b) in edges {
        m[a][b] = true;
    }
    let mut steps = 1;
    while steps < nodes {
        let mut next = m.clone();
        for i in 0..nodes {
            for j in 0..nodes {
                if !next[i][j] {
                    next[i][j] = (0..nodes).any(|k| m[i][k] && m[k][j]);
                }
            }
        }
        m = next;
        steps *= 2;
    }
    m
}
