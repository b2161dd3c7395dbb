use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

/// An atomic factor of a monomial.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Factor {
    /// A size parameter such as `n`.
    Sym(String),
    /// The pointwise maximum of two or more monomials.
    Max(BTreeSet<Monomial>),
}

impl Factor {
    /// `max(args)`; a single argument is not wrapped.
    pub fn max(args: impl IntoIterator<Item = Monomial>) -> Factor {
        let set: BTreeSet<Monomial> = args.into_iter().collect();
        assert!(!set.is_empty(), "max of nothing");
        Factor::Max(set)
    }

    fn degree(&self) -> u32 {
        match self {
            Factor::Sym(_) => 1,
            Factor::Max(args) => args.iter().map(Monomial::degree).max().unwrap_or(0),
        }
    }

    fn eval(&self, sizes: &dyn Fn(&str) -> u128) -> u128 {
        match self {
            Factor::Sym(s) => sizes(s),
            Factor::Max(args) => args.iter().map(|m| m.eval(sizes)).max().unwrap_or(0),
        }
    }

    fn eval_f64(&self, sizes: &dyn Fn(&str) -> f64) -> f64 {
        match self {
            Factor::Sym(s) => sizes(s),
            Factor::Max(args) => args.iter().map(|m| m.eval_f64(sizes)).fold(0.0, f64::max),
        }
    }
}

impl fmt::Display for Factor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Factor::Sym(s) => f.write_str(s),
            Factor::Max(args) => {
                f.write_str("max(")?;
                for (i, m) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{m}")?;
                }
                f.write_str(")")
            }
        }
    }
}

/// A product of factors with multiplicities; the empty product is `1`.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Monomial(BTreeMap<Factor, u32>);

impl Monomial {
    pub fn one() -> Monomial {
        Monomial::default()
    }

    pub fn from_factor(f: Factor) -> Monomial {
        Monomial(BTreeMap::from([(f, 1)]))
    }

    pub fn symbol(s: &str) -> Monomial {
        Monomial::from_factor(Factor::Sym(s.to_string()))
    }

    pub fn factors(&self) -> impl Iterator<Item = (&Factor, u32)> {
        self.0.iter().map(|(f, &e)| (f, e))
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().map(|(f, e)| f.degree() * e).sum()
    }

    /// Max-free monomials, one per choice of argument in each `max` factor.
    pub fn expand_max(&self) -> Vec<Monomial> {
        let mut out = vec![Monomial::one()];
        for (f, e) in &self.0 {
            let choices: Vec<Monomial> = match f {
                Factor::Sym(_) => vec![Monomial::from_factor(f.clone())],
                Factor::Max(args) => args.iter().flat_map(Monomial::expand_max).collect(),
            };
            for _ in 0..*e {
                out = out
                    .iter()
                    .flat_map(|m| choices.iter().map(move |c| m.mul(c)))
                    .collect();
            }
        }
        out
    }

    pub fn exponent(&self, f: &Factor) -> u32 {
        self.0.get(f).copied().unwrap_or(0)
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        let mut out = self.0.clone();
        for (f, e) in &other.0 {
            *out.entry(f.clone()).or_insert(0) += e;
        }
        Monomial(out)
    }

    /// Whether every factor of `self` occurs at least as often in `other`.
    pub fn divides(&self, other: &Monomial) -> bool {
        self.0.iter().all(|(f, &e)| other.exponent(f) >= e)
    }

    /// `self / other`, assuming `other` divides `self`.
    pub fn div(&self, other: &Monomial) -> Monomial {
        let mut out = BTreeMap::new();
        for (f, &e) in &self.0 {
            let r = e - other.exponent(f);
            if r > 0 {
                out.insert(f.clone(), r);
            }
        }
        Monomial(out)
    }

    /// Largest common divisor.
    pub fn gcd(&self, other: &Monomial) -> Monomial {
        let mut out = BTreeMap::new();
        for (f, &e) in &self.0 {
            let m = e.min(other.exponent(f));
            if m > 0 {
                out.insert(f.clone(), m);
            }
        }
        Monomial(out)
    }

    pub fn eval(&self, sizes: &dyn Fn(&str) -> u128) -> u128 {
        self.0.iter().fold(1u128, |acc, (f, &e)| {
            let v = f.eval(sizes);
            (0..e).fold(acc, |a, _| a.saturating_mul(v))
        })
    }

    pub fn eval_f64(&self, sizes: &dyn Fn(&str) -> f64) -> f64 {
        self.0
            .iter()
            .map(|(f, &e)| f.eval_f64(sizes).powi(e as i32))
            .product()
    }

    pub fn symbols(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for f in self.0.keys() {
            match f {
                Factor::Sym(s) => {
                    out.insert(s.clone());
                }
                Factor::Max(args) => args.iter().for_each(|m| out.extend(m.symbols())),
            }
        }
        out
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("1");
        }
        for (i, (factor, e)) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("*")?;
            }
            write!(f, "{factor}")?;
            if *e > 1 {
                write!(f, "^{e}")?;
            }
        }
        Ok(())
    }
}

/// A nonnegative symbolic quantity: a sum of monomials with positive integer
/// coefficients, or `∞`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum SymExpr {
    Infinite,
    Poly(BTreeMap<Monomial, u64>),
}

impl SymExpr {
    pub fn zero() -> SymExpr {
        SymExpr::Poly(BTreeMap::new())
    }

    pub fn one() -> SymExpr {
        SymExpr::constant(1)
    }

    pub fn constant(c: u64) -> SymExpr {
        if c == 0 {
            SymExpr::zero()
        } else {
            SymExpr::Poly(BTreeMap::from([(Monomial::one(), c)]))
        }
    }

    pub fn symbol(s: &str) -> SymExpr {
        SymExpr::from_monomial(Monomial::symbol(s))
    }

    pub fn from_monomial(m: Monomial) -> SymExpr {
        SymExpr::Poly(BTreeMap::from([(m, 1)]))
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, SymExpr::Infinite)
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, SymExpr::Poly(p) if p.is_empty())
    }

    /// Monomials with their coefficients; empty for `0` and `∞`.
    pub fn terms(&self) -> Vec<(Monomial, u64)> {
        match self {
            SymExpr::Infinite => Vec::new(),
            SymExpr::Poly(p) => p.iter().map(|(m, &c)| (m.clone(), c)).collect(),
        }
    }

    /// The monomial `m` if this expression is exactly `1·m`.
    pub fn as_single_monomial(&self) -> Option<Monomial> {
        match self {
            SymExpr::Poly(p) if p.len() == 1 => {
                let (m, &c) = p.iter().next()?;
                (c == 1).then(|| m.clone())
            }
            _ => None,
        }
    }

    pub fn add(&self, other: &SymExpr) -> SymExpr {
        match (self, other) {
            (SymExpr::Poly(a), SymExpr::Poly(b)) => {
                let mut out = a.clone();
                for (m, c) in b {
                    let e = out.entry(m.clone()).or_insert(0);
                    *e = e.saturating_add(*c);
                }
                SymExpr::Poly(out)
            }
            _ => SymExpr::Infinite,
        }
    }

    /// Product; `0·∞ = 0` since an empty set stays empty however it is extended.
    pub fn mul(&self, other: &SymExpr) -> SymExpr {
        if self.is_zero() || other.is_zero() {
            return SymExpr::zero();
        }
        match (self, other) {
            (SymExpr::Poly(a), SymExpr::Poly(b)) => {
                let mut out: BTreeMap<Monomial, u64> = BTreeMap::new();
                for (ma, ca) in a {
                    for (mb, cb) in b {
                        let e = out.entry(ma.mul(mb)).or_insert(0);
                        *e = e.saturating_add(ca.saturating_mul(*cb));
                    }
                }
                SymExpr::Poly(out)
            }
            _ => SymExpr::Infinite,
        }
    }

    pub fn pow(&self, e: u32) -> SymExpr {
        (0..e).fold(SymExpr::one(), |acc, _| acc.mul(self))
    }

    pub fn sum<'a>(items: impl IntoIterator<Item = &'a SymExpr>) -> SymExpr {
        items.into_iter().fold(SymExpr::zero(), |acc, e| acc.add(e))
    }

    /// Value under `sizes`; `None` stands for `∞`.
    pub fn eval_with(&self, sizes: &dyn Fn(&str) -> u128) -> Option<u128> {
        match self {
            SymExpr::Infinite => None,
            SymExpr::Poly(p) => Some(p.iter().fold(0u128, |acc, (m, &c)| {
                acc.saturating_add((c as u128).saturating_mul(m.eval(sizes)))
            })),
        }
    }

    /// Value with every symbol looked up in `sizes`.
    ///
    /// # Panics
    /// If a symbol of the expression has no size.
    pub fn eval(&self, sizes: &BTreeMap<String, u64>) -> Option<u128> {
        self.eval_with(&|s| match sizes.get(s) {
            Some(&v) => v as u128,
            None => panic!("no size given for `{s}`"),
        })
    }

    pub fn eval_f64(&self, sizes: &dyn Fn(&str) -> f64) -> f64 {
        match self {
            SymExpr::Infinite => f64::INFINITY,
            SymExpr::Poly(p) => p.iter().map(|(m, &c)| c as f64 * m.eval_f64(sizes)).sum(),
        }
    }

    /// Value with every symbol set to `x`.
    pub fn eval_uniform(&self, x: f64) -> f64 {
        self.eval_f64(&|_| x)
    }

    pub fn symbols(&self) -> BTreeSet<String> {
        self.terms().iter().flat_map(|(m, _)| m.symbols()).collect()
    }

    /// Monomials not divided by any other monomial of the expression.
    pub fn maximal_monomials(&self) -> Vec<Monomial> {
        let monos: Vec<Monomial> = self.terms().into_iter().map(|(m, _)| m).collect();
        monos
            .iter()
            .filter(|m| !monos.iter().any(|o| o != *m && m.divides(o)))
            .cloned()
            .collect()
    }

    /// The unique monomial of strictly largest degree, if there is one.
    /// `max` factors are first expanded into one monomial per choice of
    /// argument, so the answer is the same before and after [`SymExpr::asymptotic`].
    pub fn dominant_monomial(&self) -> Option<Monomial> {
        let expanded: BTreeSet<Monomial> = self
            .terms()
            .into_iter()
            .flat_map(|(m, _)| m.expand_max())
            .collect();
        let monos: Vec<Monomial> = expanded
            .iter()
            .filter(|m| !expanded.iter().any(|o| o != *m && m.divides(o)))
            .cloned()
            .collect();
        let top = monos.iter().map(Monomial::degree).max()?;
        let mut at_top = monos.into_iter().filter(|m| m.degree() == top);
        let first = at_top.next()?;
        at_top.next().is_none().then_some(first)
    }

    /// Big-O normal form assuming every symbol is at least 1: coefficients
    /// become 1, dominated monomials are dropped, and incomparable survivors
    /// are joined under `max` after hoisting their common factor.
    pub fn asymptotic(&self) -> SymExpr {
        if self.is_infinite() {
            return SymExpr::Infinite;
        }
        let maximal = self.maximal_monomials();
        match maximal.len() {
            0 => SymExpr::zero(),
            1 => SymExpr::from_monomial(maximal[0].clone()),
            _ => {
                let common = maximal[1..]
                    .iter()
                    .fold(maximal[0].clone(), |g, m| g.gcd(m));
                let rest = maximal.iter().map(|m| m.div(&common));
                SymExpr::from_monomial(common.mul(&Monomial::from_factor(Factor::max(rest))))
            }
        }
    }

    /// Total preorder used to pick the smaller of two bounds: compare values
    /// with all symbols at 1024, then at 2.
    pub fn heuristic_cmp(&self, other: &SymExpr) -> Ordering {
        let key = |e: &SymExpr| (e.eval_uniform(1024.0), e.eval_uniform(2.0));
        let (a, b) = (key(self), key(other));
        a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1))
    }

    /// The smaller of two bounds under [`SymExpr::heuristic_cmp`]; `self` on ties.
    pub fn min_heuristic(self, other: SymExpr) -> SymExpr {
        if other.heuristic_cmp(&self) == Ordering::Less {
            other
        } else {
            self
        }
    }
}

impl fmt::Display for SymExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SymExpr::Infinite => f.write_str("∞"),
            SymExpr::Poly(p) if p.is_empty() => f.write_str("0"),
            SymExpr::Poly(p) => {
                let mut terms: Vec<(&Monomial, &u64)> = p.iter().collect();
                terms.sort_by(|a, b| b.0.degree().cmp(&a.0.degree()).then(a.0.cmp(b.0)));
                for (i, (m, c)) in terms.into_iter().enumerate() {
                    if i > 0 {
                        f.write_str(" + ")?;
                    }
                    if m.is_one() {
                        write!(f, "{c}")?;
                    } else if *c == 1 {
                        write!(f, "{m}")?;
                    } else {
                        write!(f, "{c}*{m}")?;
                    }
                }
                Ok(())
            }
        }
    }
}

impl serde::Serialize for SymExpr {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}
