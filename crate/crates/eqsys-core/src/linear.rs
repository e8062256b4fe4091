//! Linear inequalities, polyhedra and boolean guard expressions.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::error::{CoreError, Result};
use crate::lp::{LinearProgram, LpOutcome, Relation};
use crate::poly::{lookup, Poly, Var};
use crate::scalar::{ceil, floor, fmt_rat, Rat, Scalar};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Sort {
    Int,
    Real,
}

/// Variables of a predicate together with their sorts.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Domain {
    pub vars: Vec<(Var, Sort)>,
}

impl Domain {
    pub fn new(vars: Vec<(Var, Sort)>) -> Self {
        Domain { vars }
    }

    pub fn empty() -> Self {
        Domain { vars: Vec::new() }
    }

    pub fn names(&self) -> Vec<Var> {
        self.vars.iter().map(|(v, _)| v.clone()).collect()
    }

    pub fn is_int(&self, v: &Var) -> bool {
        self.vars.iter().any(|(w, s)| w == v && *s == Sort::Int)
    }
}

/// `c·x + d ≥ 0`, or `> 0` when `strict`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct LinearInequality {
    pub coeffs: BTreeMap<Var, Rat>,
    pub constant: Rat,
    pub strict: bool,
}

impl LinearInequality {
    pub fn new(coeffs: BTreeMap<Var, Rat>, constant: Rat, strict: bool) -> Self {
        let coeffs = coeffs.into_iter().filter(|(_, c)| !c.is_zero()).collect();
        LinearInequality {
            coeffs,
            constant,
            strict,
        }
    }

    /// `p ≥ 0` (or `p > 0`); fails when `p` is not affine.
    pub fn from_poly(p: &Poly<Rat>, strict: bool) -> Result<Self> {
        let (coeffs, constant) = p
            .linear_part()
            .ok_or_else(|| CoreError::NonLinearGuard(format!("{p} >= 0")))?;
        Ok(Self::new(coeffs, constant, strict))
    }

    pub fn to_poly(&self) -> Poly<Rat> {
        let mut p = Poly::from_rat(&self.constant);
        for (v, c) in &self.coeffs {
            p = p + Poly::var(v).scale(c);
        }
        p
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Truth value of a variable-free atom.
    pub fn constant_truth(&self) -> Option<bool> {
        if !self.is_constant() {
            return None;
        }
        Some(if self.strict {
            self.constant.is_positive()
        } else {
            !self.constant.is_negative()
        })
    }

    pub fn negate(&self) -> Self {
        LinearInequality {
            coeffs: self.coeffs.iter().map(|(v, c)| (v.clone(), -c.clone())).collect(),
            constant: -self.constant.clone(),
            strict: !self.strict,
        }
    }

    pub fn closed(&self) -> Self {
        LinearInequality {
            strict: false,
            ..self.clone()
        }
    }

    pub fn holds<S: Scalar>(&self, value: impl Fn(&Var) -> Result<S>) -> Result<bool> {
        let mut acc = S::from_rat(&self.constant);
        for (v, c) in &self.coeffs {
            acc = acc + S::from_rat(c) * value(v)?;
        }
        Ok(if self.strict {
            acc > S::zero()
        } else {
            acc >= S::zero()
        })
    }

    pub fn holds_at<S: Scalar>(&self, vars: &[Var], point: &[S]) -> Result<bool> {
        self.holds(|v| lookup(vars, point, v))
    }

    /// Tightens an atom over integer variables: rescales to coprime integer
    /// coefficients and rounds the constant, turning `>` into `≥`.
    pub fn integerize(&self, domain: &Domain) -> Self {
        if self.coeffs.is_empty() || !self.coeffs.keys().all(|v| domain.is_int(v)) {
            return self.clone();
        }
        let lcm = self
            .coeffs
            .values()
            .fold(BigInt::one(), |acc, c| acc.lcm(c.denom()));
        let ints: Vec<BigInt> = self
            .coeffs
            .values()
            .map(|c| (c * Rat::from_integer(lcm.clone())).to_integer())
            .collect();
        let g = ints.iter().fold(BigInt::zero(), |acc, c| acc.gcd(c));
        let factor = Rat::new(lcm, g);
        let coeffs: BTreeMap<Var, Rat> = self
            .coeffs
            .iter()
            .map(|(v, c)| (v.clone(), c * &factor))
            .collect();
        let d = &self.constant * &factor;
        // c·x + d ≥ 0  ⟺  c·x ≥ ⌈-d⌉ ;  c·x + d > 0  ⟺  c·x ≥ ⌊-d⌋ + 1
        let bound = if self.strict {
            floor(&-d.clone()) + BigInt::one()
        } else {
            ceil(&-d)
        };
        LinearInequality {
            coeffs,
            constant: -Rat::from_integer(bound),
            strict: false,
        }
    }

    /// Substitutes affine expressions for variables.
    pub fn substitute(&self, map: &BTreeMap<Var, Poly<Rat>>) -> Result<Self> {
        let p = self.to_poly().compose(map);
        Self::from_poly(&p, self.strict).map_err(|_| {
            CoreError::NonLinearPullback(format!("{} becomes {p}", self))
        })
    }

    /// Canonical positive rescaling so that syntactically different but
    /// equivalent atoms compare equal.
    pub fn canonical(&self) -> Self {
        let scale = match self.coeffs.values().next() {
            Some(c) => c.abs(),
            None if self.constant.is_zero() => Rat::one(),
            None => self.constant.abs(),
        };
        let inv = scale.recip();
        LinearInequality {
            coeffs: self.coeffs.iter().map(|(v, c)| (v.clone(), c * &inv)).collect(),
            constant: &self.constant * &inv,
            strict: self.strict,
        }
    }

    pub fn vars(&self) -> impl Iterator<Item = &Var> {
        self.coeffs.keys()
    }
}

impl fmt::Display for LinearInequality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(t) = self.constant_truth() {
            return write!(f, "{}", if t { "true" } else { "false" });
        }
        let flip = self.coeffs.values().next().is_some_and(|c| c.is_negative());
        let sign = if flip { -Rat::one() } else { Rat::one() };
        let mut lhs = Poly::<Rat>::zero();
        for (v, c) in &self.coeffs {
            lhs = lhs + Poly::var(v).scale(&(c * &sign));
        }
        let rhs = -(&self.constant * &sign);
        let op = match (flip, self.strict) {
            (false, false) => ">=",
            (false, true) => ">",
            (true, false) => "<=",
            (true, true) => "<",
        };
        write!(f, "{lhs} {op} {}", fmt_rat(&rhs))
    }
}

/// Conjunction of linear inequalities; the empty conjunction is the whole space.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord)]
pub struct Polyhedron {
    pub inequalities: Vec<LinearInequality>,
}

impl Polyhedron {
    pub fn top() -> Self {
        Polyhedron::default()
    }

    pub fn bottom() -> Self {
        Polyhedron {
            inequalities: vec![LinearInequality::new(BTreeMap::new(), -Rat::one(), false)],
        }
    }

    pub fn from_atoms(atoms: Vec<LinearInequality>) -> Self {
        Polyhedron { inequalities: atoms }
    }

    pub fn is_top(&self) -> bool {
        self.inequalities.is_empty()
    }

    pub fn and(&self, other: &Polyhedron) -> Polyhedron {
        let mut inequalities = self.inequalities.clone();
        inequalities.extend(other.inequalities.iter().cloned());
        Polyhedron { inequalities }
    }

    pub fn with(&self, atom: LinearInequality) -> Polyhedron {
        let mut p = self.clone();
        p.inequalities.push(atom);
        p
    }

    pub fn vars(&self) -> BTreeSet<Var> {
        self.inequalities
            .iter()
            .flat_map(|a| a.vars().cloned())
            .collect()
    }

    pub fn contains<S: Scalar>(&self, value: impl Fn(&Var) -> Result<S> + Copy) -> Result<bool> {
        for a in &self.inequalities {
            if !a.holds(value)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    pub fn contains_point<S: Scalar>(&self, vars: &[Var], point: &[S]) -> Result<bool> {
        self.contains(|v| lookup(vars, point, v))
    }

    pub fn closure(&self) -> Polyhedron {
        Polyhedron {
            inequalities: self.inequalities.iter().map(|a| a.closed()).collect(),
        }
    }

    pub fn integerize(&self, domain: &Domain) -> Polyhedron {
        Polyhedron {
            inequalities: self.inequalities.iter().map(|a| a.integerize(domain)).collect(),
        }
    }

    pub fn substitute(&self, map: &BTreeMap<Var, Poly<Rat>>) -> Result<Polyhedron> {
        Ok(Polyhedron {
            inequalities: self
                .inequalities
                .iter()
                .map(|a| a.substitute(map))
                .collect::<Result<_>>()?,
        })
    }

    /// Exact satisfiability, respecting strict inequalities.
    pub fn is_satisfiable(&self) -> bool {
        let mut atoms = Vec::new();
        for a in &self.inequalities {
            match a.constant_truth() {
                Some(true) => {}
                Some(false) => return false,
                None => atoms.push(a),
            }
        }
        if atoms.is_empty() {
            return true;
        }
        let vars: Vec<Var> = self.vars().into_iter().collect();
        let mut lp = LinearProgram::new();
        for v in &vars {
            lp.add_var(v.to_string(), true);
        }
        let any_strict = atoms.iter().any(|a| a.strict);
        let t = if any_strict {
            let t = lp.add_var("t", false);
            lp.add_constraint(vec![(t, Rat::one())], Relation::Le, Rat::one());
            lp.set_objective(vec![(t, -Rat::one())]);
            Some(t)
        } else {
            None
        };
        for a in atoms {
            let mut row: Vec<(usize, Rat)> = a
                .coeffs
                .iter()
                .map(|(v, c)| (vars.iter().position(|w| w == v).unwrap(), c.clone()))
                .collect();
            if a.strict {
                row.push((t.unwrap(), -Rat::one()));
            }
            lp.add_constraint(row, Relation::Ge, -a.constant.clone());
        }
        match lp.solve(None).expect("no deadline") {
            LpOutcome::Infeasible => false,
            LpOutcome::Unbounded => true,
            LpOutcome::Optimal { objective, .. } => t.is_none() || objective.is_negative(),
        }
    }

    /// `self ⊆ other` (exact, strictness-aware).
    pub fn implies(&self, other: &Polyhedron) -> bool {
        other
            .inequalities
            .iter()
            .all(|a| !self.with(a.negate()).is_satisfiable())
    }

    /// Drops constant-true atoms, duplicates and atoms implied by the rest.
    /// An unsatisfiable polyhedron is returned as [`Polyhedron::bottom`].
    pub fn simplify(&self) -> Polyhedron {
        if !self.is_satisfiable() {
            return Polyhedron::bottom();
        }
        let mut atoms: Vec<LinearInequality> = Vec::new();
        for a in &self.inequalities {
            if a.constant_truth() == Some(true) {
                continue;
            }
            let c = a.canonical();
            if !atoms.iter().any(|b| b.canonical() == c) {
                atoms.push(a.clone());
            }
        }
        // Remove redundant atoms, last ones first so the written order survives.
        let mut i = atoms.len();
        while i > 0 {
            i -= 1;
            let rest: Vec<LinearInequality> = atoms
                .iter()
                .enumerate()
                .filter(|(k, _)| *k != i)
                .map(|(_, a)| a.clone())
                .collect();
            let rest = Polyhedron::from_atoms(rest);
            if !rest.with(atoms[i].negate()).is_satisfiable() {
                atoms.remove(i);
            }
        }
        Polyhedron::from_atoms(atoms)
    }

    /// Complement as a list of mutually disjoint polyhedra:
    /// `¬a1 ∨ (a1 ∧ ¬a2) ∨ (a1 ∧ a2 ∧ ¬a3) ∨ …`.
    pub fn complement(&self, domain: &Domain) -> Vec<Polyhedron> {
        let mut out = Vec::new();
        let mut prefix = Polyhedron::top();
        for a in &self.inequalities {
            let piece = prefix.with(a.negate().integerize(domain));
            if piece.is_satisfiable() {
                out.push(piece);
            }
            prefix = prefix.with(a.clone());
        }
        out
    }
}

impl fmt::Display for Polyhedron {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.inequalities.is_empty() {
            return write!(f, "true");
        }
        for (i, a) in self.inequalities.iter().enumerate() {
            if i > 0 {
                write!(f, " && ")?;
            }
            write!(f, "{a}")?;
        }
        Ok(())
    }
}

/// Splits a union of polyhedra into mutually disjoint satisfiable pieces,
/// giving earlier entries priority.
pub fn disjointify(pieces: &[Polyhedron], domain: &Domain) -> Vec<Polyhedron> {
    let mut out: Vec<Polyhedron> = Vec::new();
    for (i, p) in pieces.iter().enumerate() {
        let mut parts = vec![p.clone()];
        for q in &pieces[..i] {
            let comp = q.complement(domain);
            parts = parts
                .iter()
                .flat_map(|part| comp.iter().map(move |c| part.and(c)))
                .filter(Polyhedron::is_satisfiable)
                .collect();
        }
        out.extend(parts.into_iter().filter(Polyhedron::is_satisfiable));
    }
    out.into_iter().map(|p| p.simplify()).collect()
}

/// Complement of a union of polyhedra as disjoint polyhedra.
pub fn complement_union(pieces: &[Polyhedron], domain: &Domain) -> Vec<Polyhedron> {
    let mut acc = vec![Polyhedron::top()];
    for p in pieces {
        let comp = p.complement(domain);
        acc = acc
            .iter()
            .flat_map(|a| comp.iter().map(move |c| a.and(c)))
            .filter(Polyhedron::is_satisfiable)
            .collect();
    }
    acc.into_iter().map(|p| p.simplify()).collect()
}

/// Boolean combination of linear atoms.
#[derive(Clone, Debug, PartialEq)]
pub enum BoolExpr {
    Const(bool),
    Atom(LinearInequality),
    Not(Box<BoolExpr>),
    And(Vec<BoolExpr>),
    Or(Vec<BoolExpr>),
}

impl BoolExpr {
    pub fn not(self) -> BoolExpr {
        BoolExpr::Not(Box::new(self))
    }

    fn nnf(&self, negated: bool) -> BoolExpr {
        match (self, negated) {
            (BoolExpr::Const(b), n) => BoolExpr::Const(*b != n),
            (BoolExpr::Atom(a), false) => BoolExpr::Atom(a.clone()),
            (BoolExpr::Atom(a), true) => BoolExpr::Atom(a.negate()),
            (BoolExpr::Not(e), n) => e.nnf(!n),
            (BoolExpr::And(es), false) | (BoolExpr::Or(es), true) => {
                BoolExpr::And(es.iter().map(|e| e.nnf(negated)).collect())
            }
            (BoolExpr::Or(es), false) | (BoolExpr::And(es), true) => {
                BoolExpr::Or(es.iter().map(|e| e.nnf(negated)).collect())
            }
        }
    }

    /// Disjunctive normal form (terms may overlap).
    pub fn dnf(&self, domain: &Domain) -> Vec<Polyhedron> {
        fn go(e: &BoolExpr, domain: &Domain) -> Vec<Polyhedron> {
            match e {
                BoolExpr::Const(true) => vec![Polyhedron::top()],
                BoolExpr::Const(false) => vec![],
                BoolExpr::Atom(a) => {
                    let a = a.integerize(domain);
                    match a.constant_truth() {
                        Some(true) => vec![Polyhedron::top()],
                        Some(false) => vec![],
                        None => vec![Polyhedron::from_atoms(vec![a])],
                    }
                }
                BoolExpr::Or(es) => es.iter().flat_map(|e| go(e, domain)).collect(),
                BoolExpr::And(es) => {
                    let mut acc = vec![Polyhedron::top()];
                    for e in es {
                        let terms = go(e, domain);
                        acc = acc
                            .iter()
                            .flat_map(|a| terms.iter().map(move |t| a.and(t)))
                            .filter(Polyhedron::is_satisfiable)
                            .collect();
                    }
                    acc
                }
                BoolExpr::Not(_) => unreachable!("negation normal form"),
            }
        }
        go(&self.nnf(false), domain)
            .into_iter()
            .filter(Polyhedron::is_satisfiable)
            .collect()
    }

    /// Disjoint DNF: the guard as mutually disjoint polyhedra.
    pub fn disjoint_dnf(&self, domain: &Domain) -> Vec<Polyhedron> {
        disjointify(&self.dnf(domain), domain)
    }

    pub fn holds<S: Scalar>(&self, value: impl Fn(&Var) -> Result<S> + Copy) -> Result<bool> {
        Ok(match self {
            BoolExpr::Const(b) => *b,
            BoolExpr::Atom(a) => a.holds(value)?,
            BoolExpr::Not(e) => !e.holds(value)?,
            BoolExpr::And(es) => {
                for e in es {
                    if !e.holds(value)? {
                        return Ok(false);
                    }
                }
                true
            }
            BoolExpr::Or(es) => {
                for e in es {
                    if e.holds(value)? {
                        return Ok(true);
                    }
                }
                false
            }
        })
    }
}
