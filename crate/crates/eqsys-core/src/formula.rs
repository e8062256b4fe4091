//! Quantitative formulas: surface syntax, normal form and normalisation.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Zero};

use crate::error::{CoreError, Result};
use crate::linear::{complement_union, disjointify, BoolExpr, Domain, LinearInequality, Polyhedron};
use crate::poly::{Poly, Var};
use crate::scalar::{Ext, Rat, Scalar};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CmpOp {
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
}

/// Guard condition over polynomial expressions.
#[derive(Clone, Debug, PartialEq)]
pub enum Cond {
    Const(bool),
    Cmp(Box<Expr>, CmpOp, Box<Expr>),
    /// A 0/1-valued variable used as a boolean: true iff `e ≥ 1`.
    Truthy(Box<Expr>),
    Not(Box<Cond>),
    And(Vec<Cond>),
    Or(Vec<Cond>),
}

/// Quantitative formula in the input grammar, including polynomial terms.
#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Const(Rat),
    Var(Var),
    Call(String, Vec<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Neg(Box<Expr>),
    Pow(Box<Expr>, u32),
    If(Box<Cond>, Box<Expr>, Box<Expr>),
    Iverson(Box<Cond>),
    Min(Vec<Expr>),
    Max(Vec<Expr>),
    Cases(Vec<(Cond, Expr)>),
}

impl Expr {
    pub fn int(n: i64) -> Expr {
        Expr::Const(crate::scalar::int(n))
    }

    pub fn var(name: &str) -> Expr {
        Expr::Var(crate::poly::var(name))
    }

    pub fn call(name: &str, args: Vec<Expr>) -> Expr {
        Expr::Call(name.to_string(), args)
    }

    pub fn add(a: Expr, b: Expr) -> Expr {
        Expr::Add(Box::new(a), Box::new(b))
    }

    pub fn sub(a: Expr, b: Expr) -> Expr {
        Expr::Sub(Box::new(a), Box::new(b))
    }

    pub fn mul(a: Expr, b: Expr) -> Expr {
        Expr::Mul(Box::new(a), Box::new(b))
    }

    pub fn ite(c: Cond, a: Expr, b: Expr) -> Expr {
        Expr::If(Box::new(c), Box::new(a), Box::new(b))
    }

    pub fn has_calls(&self) -> bool {
        match self {
            Expr::Const(_) | Expr::Var(_) => false,
            Expr::Call(..) => true,
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.has_calls() || b.has_calls()
            }
            Expr::Neg(a) | Expr::Pow(a, _) => a.has_calls(),
            Expr::If(_, a, b) => a.has_calls() || b.has_calls(),
            Expr::Iverson(_) => false,
            Expr::Min(es) | Expr::Max(es) => es.iter().any(Expr::has_calls),
            Expr::Cases(cs) => cs.iter().any(|(_, e)| e.has_calls()),
        }
    }

    /// Converts a call-free, branch-free expression into a polynomial.
    pub fn to_poly(&self) -> Result<Poly<Rat>> {
        let bad = || CoreError::NonPolynomialTerm(format!("{self:?}"));
        Ok(match self {
            Expr::Const(c) => Poly::from_rat(c),
            Expr::Var(v) => Poly::var(v),
            Expr::Add(a, b) => a.to_poly()? + b.to_poly()?,
            Expr::Sub(a, b) => a.to_poly()? - b.to_poly()?,
            Expr::Mul(a, b) => a.to_poly()? * b.to_poly()?,
            Expr::Div(a, b) => {
                let d = b.to_poly()?.rat_const().ok_or_else(bad)?;
                if d.is_zero() {
                    return Err(bad());
                }
                a.to_poly()?.scale(&d.recip())
            }
            Expr::Neg(a) => -a.to_poly()?,
            Expr::Pow(a, e) => a.to_poly()?.pow(*e),
            _ => return Err(bad()),
        })
    }

    /// Renames/replaces variables by expressions (used for `F[e/x]`).
    pub fn substitute(&self, map: &BTreeMap<Var, Expr>) -> Expr {
        let s = |e: &Expr| Box::new(e.substitute(map));
        match self {
            Expr::Const(_) => self.clone(),
            Expr::Var(v) => map.get(v).cloned().unwrap_or_else(|| self.clone()),
            Expr::Call(n, args) => Expr::Call(n.clone(), args.iter().map(|a| a.substitute(map)).collect()),
            Expr::Add(a, b) => Expr::Add(s(a), s(b)),
            Expr::Sub(a, b) => Expr::Sub(s(a), s(b)),
            Expr::Mul(a, b) => Expr::Mul(s(a), s(b)),
            Expr::Div(a, b) => Expr::Div(s(a), s(b)),
            Expr::Neg(a) => Expr::Neg(s(a)),
            Expr::Pow(a, e) => Expr::Pow(s(a), *e),
            Expr::If(c, a, b) => Expr::If(Box::new(c.substitute(map)), s(a), s(b)),
            Expr::Iverson(c) => Expr::Iverson(Box::new(c.substitute(map))),
            Expr::Min(es) => Expr::Min(es.iter().map(|e| e.substitute(map)).collect()),
            Expr::Max(es) => Expr::Max(es.iter().map(|e| e.substitute(map)).collect()),
            Expr::Cases(cs) => Expr::Cases(
                cs.iter()
                    .map(|(c, e)| (c.substitute(map), e.substitute(map)))
                    .collect(),
            ),
        }
    }

    /// Direct tree-walking interpretation, independent of the normal form.
    pub fn eval<S: Scalar>(
        &self,
        env: &dyn Fn(&Var) -> Result<S>,
        calls: &dyn Fn(&str, &[S]) -> Result<Ext<S>>,
    ) -> Result<Ext<S>> {
        let fin = |e: &Expr| -> Result<S> {
            match e.eval(env, calls)? {
                Ext::Fin(s) => Ok(s),
                Ext::Inf => Err(CoreError::NonPolynomialTerm("infinite polynomial value".into())),
            }
        };
        Ok(match self {
            Expr::Const(c) => Ext::Fin(S::from_rat(c)),
            Expr::Var(v) => Ext::Fin(env(v)?),
            Expr::Call(n, args) => {
                let vals = args.iter().map(fin).collect::<Result<Vec<_>>>()?;
                calls(n, &vals)?
            }
            Expr::Add(a, b) => a.eval(env, calls)?.add(&b.eval(env, calls)?),
            Expr::Sub(a, b) => Ext::Fin(fin(a)? - fin(b)?),
            Expr::Mul(a, b) => {
                if a.has_calls() && !b.has_calls() {
                    a.eval(env, calls)?.scale(&fin(b)?)
                } else {
                    b.eval(env, calls)?.scale(&fin(a)?)
                }
            }
            Expr::Div(a, b) => Ext::Fin(fin(a)? / fin(b)?),
            Expr::Neg(a) => Ext::Fin(S::zero() - fin(a)?),
            Expr::Pow(a, e) => {
                let x = fin(a)?;
                let mut acc = S::one();
                for _ in 0..*e {
                    acc = acc * x.clone();
                }
                Ext::Fin(acc)
            }
            Expr::If(c, a, b) => {
                if c.eval(env)? {
                    a.eval(env, calls)?
                } else {
                    b.eval(env, calls)?
                }
            }
            Expr::Iverson(c) => Ext::Fin(if c.eval(env)? { S::one() } else { S::zero() }),
            Expr::Min(es) => {
                let mut it = es.iter();
                let mut acc = it.next().unwrap().eval(env, calls)?;
                for e in it {
                    acc = acc.min(e.eval(env, calls)?);
                }
                acc
            }
            Expr::Max(es) => {
                let mut it = es.iter();
                let mut acc = it.next().unwrap().eval(env, calls)?;
                for e in it {
                    acc = acc.max(e.eval(env, calls)?);
                }
                acc
            }
            Expr::Cases(cs) => {
                for (c, e) in cs {
                    if c.eval(env)? {
                        return e.eval(env, calls);
                    }
                }
                Ext::zero()
            }
        })
    }
}

impl Cond {
    pub fn cmp(a: Expr, op: CmpOp, b: Expr) -> Cond {
        Cond::Cmp(Box::new(a), op, Box::new(b))
    }

    pub fn to_bool_expr(&self) -> Result<BoolExpr> {
        Ok(match self {
            Cond::Const(b) => BoolExpr::Const(*b),
            Cond::Cmp(l, op, r) => {
                let p = l.to_poly()? - r.to_poly()?;
                let ge = |p: &Poly<Rat>, strict| -> Result<BoolExpr> {
                    LinearInequality::from_poly(p, strict)
                        .map(BoolExpr::Atom)
                        .map_err(|_| CoreError::NonLinearGuard(format!("{p}")))
                };
                let n = -p.clone();
                match op {
                    CmpOp::Ge => ge(&p, false)?,
                    CmpOp::Gt => ge(&p, true)?,
                    CmpOp::Le => ge(&n, false)?,
                    CmpOp::Lt => ge(&n, true)?,
                    CmpOp::Eq => BoolExpr::And(vec![ge(&p, false)?, ge(&n, false)?]),
                    CmpOp::Ne => BoolExpr::Or(vec![ge(&n, true)?, ge(&p, true)?]),
                }
            }
            Cond::Truthy(e) => {
                let p = e.to_poly()? - Poly::from_rat(&Rat::one());
                BoolExpr::Atom(
                    LinearInequality::from_poly(&p, false)
                        .map_err(|_| CoreError::NonLinearGuard(format!("{p}")))?,
                )
            }
            Cond::Not(c) => c.to_bool_expr()?.not(),
            Cond::And(cs) => BoolExpr::And(cs.iter().map(Cond::to_bool_expr).collect::<Result<_>>()?),
            Cond::Or(cs) => BoolExpr::Or(cs.iter().map(Cond::to_bool_expr).collect::<Result<_>>()?),
        })
    }

    pub fn substitute(&self, map: &BTreeMap<Var, Expr>) -> Cond {
        match self {
            Cond::Const(_) => self.clone(),
            Cond::Cmp(a, op, b) => Cond::Cmp(Box::new(a.substitute(map)), *op, Box::new(b.substitute(map))),
            Cond::Truthy(e) => Cond::Truthy(Box::new(e.substitute(map))),
            Cond::Not(c) => Cond::Not(Box::new(c.substitute(map))),
            Cond::And(cs) => Cond::And(cs.iter().map(|c| c.substitute(map)).collect()),
            Cond::Or(cs) => Cond::Or(cs.iter().map(|c| c.substitute(map)).collect()),
        }
    }

    pub fn eval<S: Scalar>(&self, env: &dyn Fn(&Var) -> Result<S>) -> Result<bool> {
        let val = |e: &Expr| -> Result<S> { e.to_poly()?.eval(env) };
        Ok(match self {
            Cond::Const(b) => *b,
            Cond::Cmp(a, op, b) => {
                let (x, y) = (val(a)?, val(b)?);
                match op {
                    CmpOp::Lt => x < y,
                    CmpOp::Le => x <= y,
                    CmpOp::Gt => x > y,
                    CmpOp::Ge => x >= y,
                    CmpOp::Eq => x == y,
                    CmpOp::Ne => x != y,
                }
            }
            Cond::Truthy(e) => val(e)? >= S::one(),
            Cond::Not(c) => !c.eval(env)?,
            Cond::And(cs) => {
                for c in cs {
                    if !c.eval(env)? {
                        return Ok(false);
                    }
                }
                true
            }
            Cond::Or(cs) => {
                for c in cs {
                    if c.eval(env)? {
                        return Ok(true);
                    }
                }
                false
            }
        })
    }
}

/// `t · X(ẽ)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Call {
    pub pred: String,
    pub args: Vec<Poly<Rat>>,
    pub weight: Poly<Rat>,
}

/// `Σ_k t_k · X_{i_k}(ẽ_k) + t_0`.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct AffineAtom {
    pub calls: Vec<Call>,
    pub constant: Poly<Rat>,
}

impl AffineAtom {
    pub fn constant(c: Poly<Rat>) -> Self {
        AffineAtom {
            calls: Vec::new(),
            constant: c,
        }
    }

    pub fn call(pred: &str, args: Vec<Poly<Rat>>) -> Self {
        AffineAtom {
            calls: vec![Call {
                pred: pred.to_string(),
                args,
                weight: Poly::from_rat(&Rat::one()),
            }],
            constant: Poly::zero(),
        }
    }

    pub fn add(&self, other: &AffineAtom) -> AffineAtom {
        let mut out = self.clone();
        for c in &other.calls {
            match out
                .calls
                .iter_mut()
                .find(|d| d.pred == c.pred && d.args == c.args)
            {
                Some(d) => d.weight = &d.weight + &c.weight,
                None => out.calls.push(c.clone()),
            }
        }
        out.calls.retain(|c| !c.weight.is_zero());
        out.constant = &out.constant + &other.constant;
        out
    }

    pub fn scale(&self, t: &Poly<Rat>) -> AffineAtom {
        AffineAtom {
            calls: self
                .calls
                .iter()
                .map(|c| Call {
                    weight: &c.weight * t,
                    ..c.clone()
                })
                .filter(|c| !c.weight.is_zero())
                .collect(),
            constant: &self.constant * t,
        }
    }

    pub fn is_constant(&self) -> bool {
        self.calls.is_empty()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BodyKind {
    Affine,
    Min,
    Max,
}

/// A branch body: one affine atom, or `min`/`max` over several.
#[derive(Clone, Debug, PartialEq)]
pub struct Body {
    pub kind: BodyKind,
    pub atoms: Vec<AffineAtom>,
}

impl Body {
    pub fn affine(a: AffineAtom) -> Body {
        Body {
            kind: BodyKind::Affine,
            atoms: vec![a],
        }
    }

    pub fn zero() -> Body {
        Body::affine(AffineAtom::default())
    }

    fn add(&self, other: &Body) -> Result<Body> {
        let kind = combine_kind(self.kind, other.kind)?;
        let mut atoms = Vec::new();
        for a in &self.atoms {
            for b in &other.atoms {
                atoms.push(a.add(b));
            }
        }
        Ok(Body { kind, atoms }.collapse())
    }

    fn scale(&self, t: &Poly<Rat>) -> Body {
        Body {
            kind: self.kind,
            atoms: self.atoms.iter().map(|a| a.scale(t)).collect(),
        }
        .collapse()
    }

    fn collapse(mut self) -> Body {
        let mut uniq: Vec<AffineAtom> = Vec::new();
        for a in self.atoms {
            if !uniq.contains(&a) {
                uniq.push(a);
            }
        }
        self.atoms = uniq;
        if self.atoms.len() == 1 {
            self.kind = BodyKind::Affine;
        }
        self
    }

    fn as_constant(&self) -> Option<&Poly<Rat>> {
        match (self.kind, self.atoms.as_slice()) {
            (BodyKind::Affine, [a]) if a.is_constant() => Some(&a.constant),
            _ => None,
        }
    }

    pub fn map_atoms(&self, f: impl FnMut(&AffineAtom) -> AffineAtom) -> Body {
        Body {
            kind: self.kind,
            atoms: self.atoms.iter().map(f).collect(),
        }
    }
}

fn combine_kind(a: BodyKind, b: BodyKind) -> Result<BodyKind> {
    use BodyKind::*;
    match (a, b) {
        (Affine, k) | (k, Affine) => Ok(k),
        (Min, Min) => Ok(Min),
        (Max, Max) => Ok(Max),
        _ => Err(CoreError::MixedMinMax),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Branch {
    pub guard: Polyhedron,
    pub body: Body,
}

/// `Σ_j [φ_j] · A_j` with mutually disjoint polyhedral guards.
#[derive(Clone, Debug, PartialEq)]
pub struct NormalFormula {
    pub branches: Vec<Branch>,
}

impl NormalFormula {
    pub fn constant(c: Poly<Rat>) -> Self {
        NormalFormula {
            branches: vec![Branch {
                guard: Polyhedron::top(),
                body: Body::affine(AffineAtom::constant(c)),
            }],
        }
    }

    pub fn calls(&self) -> impl Iterator<Item = &Call> {
        self.branches
            .iter()
            .flat_map(|b| b.body.atoms.iter().flat_map(|a| a.calls.iter()))
    }

    pub fn has_min(&self) -> bool {
        self.branches.iter().any(|b| b.body.kind == BodyKind::Min)
    }

    pub fn has_max(&self) -> bool {
        self.branches.iter().any(|b| b.body.kind == BodyKind::Max)
    }

    /// Branch whose guard contains the point.
    pub fn branch_at<S: Scalar>(&self, vars: &[Var], point: &[S]) -> Result<Option<usize>> {
        for (i, b) in self.branches.iter().enumerate() {
            if b.guard.contains_point(vars, point)? {
                return Ok(Some(i));
            }
        }
        Ok(None)
    }

    pub fn map_bodies(&self, mut f: impl FnMut(&Body) -> Body) -> NormalFormula {
        NormalFormula {
            branches: self
                .branches
                .iter()
                .map(|b| Branch {
                    guard: b.guard.clone(),
                    body: f(&b.body),
                })
                .collect(),
        }
    }
}

type Pieces = Vec<(Polyhedron, Body)>;

fn cross(a: &Pieces, b: &Pieces, mut f: impl FnMut(&Body, &Body) -> Result<Body>) -> Result<Pieces> {
    let mut out = Vec::new();
    for (g1, b1) in a {
        for (g2, b2) in b {
            let g = g1.and(g2);
            if g.is_satisfiable() {
                out.push((g, f(b1, b2)?));
            }
        }
    }
    Ok(out)
}

fn constant_pieces(p: &Pieces) -> Option<Vec<(Polyhedron, Poly<Rat>)>> {
    p.iter()
        .map(|(g, b)| b.as_constant().map(|c| (g.clone(), c.clone())))
        .collect()
}

fn split_on(cond: &Cond, domain: &Domain) -> Result<(Vec<Polyhedron>, Vec<Polyhedron>)> {
    let pos = cond.to_bool_expr()?.disjoint_dnf(domain);
    let neg = complement_union(&pos, domain);
    Ok((pos, neg))
}

fn norm(e: &Expr, domain: &Domain, warnings: &mut Vec<String>) -> Result<Pieces> {
    let single = |b: Body| vec![(Polyhedron::top(), b)];
    if !e.has_calls() {
        if let Ok(p) = e.to_poly() {
            return Ok(single(Body::affine(AffineAtom::constant(p))));
        }
    }
    Ok(match e {
        Expr::Const(_) | Expr::Var(_) | Expr::Pow(..) => {
            single(Body::affine(AffineAtom::constant(e.to_poly()?)))
        }
        Expr::Call(name, args) => {
            let args = args
                .iter()
                .map(|a| {
                    a.to_poly()
                        .map_err(|_| CoreError::NonPolynomialTerm(format!("argument of {name}: {a:?}")))
                })
                .collect::<Result<Vec<_>>>()?;
            single(Body::affine(AffineAtom::call(name, args)))
        }
        Expr::Add(a, b) => cross(&norm(a, domain, warnings)?, &norm(b, domain, warnings)?, |x, y| x.add(y))?,
        Expr::Sub(a, b) => {
            let rhs = norm(b, domain, warnings)?;
            let neg: Pieces = constant_pieces(&rhs)
                .ok_or_else(|| CoreError::NonAffine(format!("subtracting a formula with calls: {b:?}")))?
                .into_iter()
                .map(|(g, c)| (g, Body::affine(AffineAtom::constant(-c))))
                .collect();
            cross(&norm(a, domain, warnings)?, &neg, |x, y| x.add(y))?
        }
        Expr::Neg(a) => {
            let inner = norm(a, domain, warnings)?;
            constant_pieces(&inner)
                .ok_or_else(|| CoreError::NonAffine(format!("negated formula with calls: {a:?}")))?
                .into_iter()
                .map(|(g, c)| (g, Body::affine(AffineAtom::constant(-c))))
                .collect()
        }
        Expr::Mul(a, b) => {
            let (pa, pb) = (norm(a, domain, warnings)?, norm(b, domain, warnings)?);
            if let Some(ca) = constant_pieces(&pa) {
                let ca: Pieces = ca.into_iter().map(|(g, c)| (g, Body::affine(AffineAtom::constant(c)))).collect();
                cross(&ca, &pb, |x, y| Ok(y.scale(&x.as_constant().unwrap().clone())))?
            } else if let Some(cb) = constant_pieces(&pb) {
                let cb: Pieces = cb.into_iter().map(|(g, c)| (g, Body::affine(AffineAtom::constant(c)))).collect();
                cross(&pa, &cb, |x, y| Ok(x.scale(&y.as_constant().unwrap().clone())))?
            } else {
                return Err(CoreError::NonAffine(format!("product of two formulas with calls: {e:?}")));
            }
        }
        Expr::Div(a, b) => {
            let d = b
                .to_poly()
                .ok()
                .and_then(|p| p.rat_const())
                .filter(|d| !d.is_zero())
                .ok_or_else(|| CoreError::NonPolynomialTerm(format!("division by {b:?}")))?;
            norm(a, domain, warnings)?
                .into_iter()
                .map(|(g, body)| (g, body.scale(&Poly::from_rat(&d.recip()))))
                .collect()
        }
        Expr::If(c, a, b) => {
            let (pos, neg) = split_on(c, domain)?;
            let pa = norm(a, domain, warnings)?;
            let pb = norm(b, domain, warnings)?;
            let mut out = Vec::new();
            for g in pos {
                out.extend(cross(&vec![(g, Body::zero())], &pa, |_, y| Ok(y.clone()))?);
            }
            for g in neg {
                out.extend(cross(&vec![(g, Body::zero())], &pb, |_, y| Ok(y.clone()))?);
            }
            out
        }
        Expr::Iverson(c) => norm(&Expr::ite((**c).clone(), Expr::int(1), Expr::int(0)), domain, warnings)?,
        Expr::Min(es) | Expr::Max(es) => {
            let kind = if matches!(e, Expr::Min(_)) { BodyKind::Min } else { BodyKind::Max };
            let mut acc: Option<Pieces> = None;
            for sub in es {
                let p = norm(sub, domain, warnings)?;
                acc = Some(match acc {
                    None => p,
                    Some(prev) => cross(&prev, &p, |x, y| {
                        combine_kind(combine_kind(x.kind, kind)?, combine_kind(y.kind, kind)?)?;
                        let mut atoms = x.atoms.clone();
                        atoms.extend(y.atoms.iter().cloned());
                        Ok(Body { kind, atoms }.collapse())
                    })?,
                });
            }
            acc.unwrap_or_default()
                .into_iter()
                .map(|(g, b)| {
                    let k = combine_kind(b.kind, kind)?;
                    Ok((g, Body { kind: k, ..b }.collapse()))
                })
                .collect::<Result<_>>()?
        }
        Expr::Cases(cases) => {
            let mut guards: Vec<Polyhedron> = Vec::new();
            let mut out = Vec::new();
            for (c, body) in cases {
                let pieces = c.to_bool_expr()?.disjoint_dnf(domain);
                let mut fresh = Vec::new();
                for p in pieces {
                    if guards.iter().all(|g| !g.and(&p).is_satisfiable()) {
                        fresh.push(p);
                    } else {
                        let mut all = guards.clone();
                        all.push(p);
                        let split = disjointify(&all, domain);
                        let prior = complement_union(&guards, domain);
                        fresh.extend(
                            split
                                .into_iter()
                                .filter(|s| prior.iter().any(|q| q.and(s).is_satisfiable()))
                                .filter(|s| guards.iter().all(|g| !g.and(s).is_satisfiable())),
                        );
                    }
                }
                let pb = norm(body, domain, warnings)?;
                for g in &fresh {
                    out.extend(cross(&vec![(g.clone(), Body::zero())], &pb, |_, y| Ok(y.clone()))?);
                }
                guards.extend(fresh);
            }
            let rest = complement_union(&guards, domain);
            if !rest.is_empty() {
                warnings.push(format!(
                    "guards do not cover the domain; adding an implicit zero branch on {}",
                    rest.iter().map(|p| p.to_string()).collect::<Vec<_>>().join(" || ")
                ));
                for g in rest {
                    out.push((g, Body::zero()));
                }
            }
            out
        }
    })
}

/// Converts a formula to normal form; returns diagnostics for implicit branches.
pub fn normalize_with_warnings(e: &Expr, domain: &Domain) -> Result<(NormalFormula, Vec<String>)> {
    let mut warnings = Vec::new();
    let pieces = norm(e, domain, &mut warnings)?;
    let branches = pieces
        .into_iter()
        .filter(|(g, _)| g.is_satisfiable())
        .map(|(g, body)| Branch {
            guard: g.integerize(domain).simplify(),
            body,
        })
        .collect();
    Ok((NormalFormula { branches }, warnings))
}

pub fn normalize(e: &Expr, domain: &Domain) -> Result<NormalFormula> {
    normalize_with_warnings(e, domain).map(|(f, _)| f)
}

fn fmt_weighted(f: &mut fmt::Formatter<'_>, w: &Poly<Rat>) -> fmt::Result {
    match w.rat_const() {
        Some(c) if c.is_one() => Ok(()),
        Some(c) if c >= Rat::zero() => write!(f, "{}*", crate::scalar::fmt_rat(&c)),
        _ => write!(f, "({w})*"),
    }
}

impl fmt::Display for Call {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_weighted(f, &self.weight)?;
        write!(f, "{}(", self.pred)?;
        for (i, a) in self.args.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{a}")?;
        }
        write!(f, ")")
    }
}

impl fmt::Display for AffineAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, c) in self.calls.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "{c}")?;
        }
        if self.calls.is_empty() {
            return match self.constant.rat_const() {
                Some(c) => write!(f, "{}", crate::scalar::fmt_rat(&c)),
                None => write!(f, "{}", self.constant),
            };
        }
        if !self.constant.is_zero() {
            match self.constant.rat_const() {
                Some(c) if c > Rat::zero() => write!(f, " + {}", crate::scalar::fmt_rat(&c))?,
                _ => write!(f, " + ({})", self.constant)?,
            }
        }
        Ok(())
    }
}

impl fmt::Display for Body {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self.kind {
            BodyKind::Affine => return write!(f, "{}", self.atoms[0]),
            BodyKind::Min => "min",
            BodyKind::Max => "max",
        };
        write!(f, "{name}{{")?;
        for (i, a) in self.atoms.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{a}")?;
        }
        write!(f, "}}")
    }
}

impl fmt::Display for NormalFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let [b] = self.branches.as_slice() {
            if b.guard.is_top() {
                return write!(f, "{}", b.body);
            }
        }
        write!(f, "cases {{ ")?;
        for (i, b) in self.branches.iter().enumerate() {
            if i > 0 {
                write!(f, "; ")?;
            }
            write!(f, "{} => {}", b.guard, b.body)?;
        }
        write!(f, " }}")
    }
}
