//! Translations of programs into equation systems.
//!
//! Every loop becomes one predicate `while@line:col` (and `while2@line:col`
//! for the second moment) over the program variables it depends on.

use std::collections::BTreeMap;

use eqsys_core::formula::normalize;
use eqsys_core::{
    Domain, EquationSystem, Expr, NormalFormula, Predicate, QueriedEquationSystem, Query, QueryRelation, Rat, Var,
};
use num_traits::{One, Zero};

use crate::ast::{Cmd, LoopGuard, PgclProgram, Span};
use crate::error::{FrontendError, Result};

/// How `{c1} <> {c2}` is resolved.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Nondet {
    #[default]
    Demonic,
    Angelic,
}

/// A formula `F` over the program variables together with the equations `E`
/// it refers to; the quantity of interest is `⟦F⟧(μ⟦E⟧)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Translation {
    pub domain: Domain,
    pub formula: Expr,
    pub system: EquationSystem,
}

impl Translation {
    pub fn normal_formula(&self) -> Result<NormalFormula> {
        Ok(normalize(&self.formula, &self.domain)?)
    }

    /// `F` with the program variables fixed to `state`, as a closed formula.
    pub fn at(&self, state: &[Rat]) -> Result<NormalFormula> {
        let vars = self.domain.names();
        if vars.len() != state.len() {
            return Err(FrontendError::Invalid(format!(
                "initial state has {} values for {} variables",
                state.len(),
                vars.len()
            )));
        }
        let map: BTreeMap<Var, Expr> = vars
            .into_iter()
            .zip(state)
            .map(|(v, r)| (v, Expr::Const(r.clone())))
            .collect();
        Ok(normalize(&self.formula.substitute(&map), &Domain::empty())?)
    }

    pub fn query(&self, state: &[Rat], relation: QueryRelation, bound: Rat) -> Result<QueriedEquationSystem> {
        let q = QueriedEquationSystem {
            system: self.system.clone(),
            queries: vec![Query {
                formula: self.at(state)?,
                relation,
                bound,
            }],
        };
        q.validate()?;
        Ok(q)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Mode {
    Wp,
    Ert,
    Cwp1,
    Cwp2,
}

struct Translator<'a> {
    domain: &'a Domain,
    nondet: Nondet,
    mode: Mode,
    eqs: Vec<(Span, usize, String, Expr)>,
}

fn scale(p: &Expr, f: Expr) -> Expr {
    Expr::mul(p.clone(), f)
}

fn complement(p: &Expr) -> Expr {
    match p.to_poly().ok().and_then(|q| q.rat_const()) {
        Some(c) => Expr::Const(Rat::one() - c),
        None => Expr::sub(Expr::int(1), p.clone()),
    }
}

fn is_const(p: &Expr, value: i64) -> bool {
    p.to_poly().ok().and_then(|q| q.rat_const()) == Some(Rat::from_integer(value.into()))
}

/// `p·a + (1−p)·b`, dropping a side whose weight is zero.
fn mix(p: &Expr, a: Expr, b: Expr) -> Expr {
    if is_const(p, 1) {
        a
    } else if is_const(p, 0) {
        b
    } else {
        Expr::add(scale(p, a), scale(&complement(p), b))
    }
}

fn assign(xs: &[(Var, Expr)], f: &Expr) -> Expr {
    let map: BTreeMap<Var, Expr> = xs.iter().cloned().collect();
    f.substitute(&map)
}

impl<'a> Translator<'a> {
    fn new(prog: &'a PgclProgram, mode: Mode, nondet: Nondet) -> Self {
        Translator {
            domain: &prog.domain,
            nondet,
            mode,
            eqs: Vec::new(),
        }
    }

    fn loop_call(&self, name: &str) -> Expr {
        Expr::Call(name.to_string(), self.domain.names().into_iter().map(Expr::Var).collect())
    }

    fn choose(&self, a: Expr, b: Expr) -> Expr {
        match self.nondet {
            Nondet::Demonic => Expr::Min(vec![a, b]),
            Nondet::Angelic => Expr::Max(vec![a, b]),
        }
    }

    fn go(&mut self, c: &Cmd, f: Expr) -> Result<Expr> {
        Ok(match c {
            Cmd::Skip => f,
            Cmd::Seq(cs) => {
                let mut f = f;
                for c in cs.iter().rev() {
                    f = self.go(c, f)?;
                }
                f
            }
            Cmd::Assign(xs) => assign(xs, &f),
            Cmd::Prob { p, left, right, .. } => {
                let a = self.go(left, f.clone())?;
                let b = self.go(right, f)?;
                mix(p, a, b)
            }
            Cmd::Nondet(l, r) => {
                let a = self.go(l, f.clone())?;
                let b = self.go(r, f)?;
                self.choose(a, b)
            }
            Cmd::If { cond, then, els } => {
                let a = self.go(then, f.clone())?;
                let b = self.go(els, f)?;
                Expr::ite(cond.clone(), a, b)
            }
            Cmd::While { guard, body, span } => {
                let name = format!("while@{span}");
                let call = self.loop_call(&name);
                let inner = self.go(body, call.clone())?;
                let eq = match guard {
                    LoopGuard::Cond(g) => Expr::ite(g.clone(), inner, f),
                    LoopGuard::Flip(p) => mix(p, inner, f),
                };
                self.eqs.push((*span, 0, name, eq));
                call
            }
            Cmd::Tick(a) => match self.mode {
                Mode::Ert => {
                    if *a < Rat::zero() {
                        return Err(FrontendError::NegativeCost(eqsys_core::scalar::fmt_rat(a)));
                    }
                    if a.is_zero() {
                        f
                    } else {
                        Expr::add(f, Expr::Const(a.clone()))
                    }
                }
                _ => f,
            },
            Cmd::Score { weight, .. } => match self.mode {
                Mode::Cwp1 => scale(weight, f),
                Mode::Cwp2 => Expr::add(complement(weight), scale(weight, f)),
                Mode::Wp | Mode::Ert => return Err(FrontendError::ScoreNotAllowed),
            },
        })
    }

    /// Second-moment translation on pairs `(F₁, F₂)`.
    fn go2(&mut self, c: &Cmd, f: (Expr, Expr)) -> Result<(Expr, Expr)> {
        Ok(match c {
            Cmd::Skip => f,
            Cmd::Seq(cs) => {
                let mut f = f;
                for c in cs.iter().rev() {
                    f = self.go2(c, f)?;
                }
                f
            }
            Cmd::Assign(xs) => (assign(xs, &f.0), assign(xs, &f.1)),
            Cmd::Prob { p, left, right, .. } => {
                let a = self.go2(left, f.clone())?;
                let b = self.go2(right, f)?;
                (mix(p, a.0, b.0), mix(p, a.1, b.1))
            }
            Cmd::If { cond, then, els } => {
                let a = self.go2(then, f.clone())?;
                let b = self.go2(els, f)?;
                (Expr::ite(cond.clone(), a.0, b.0), Expr::ite(cond.clone(), a.1, b.1))
            }
            Cmd::While { guard, body, span } => {
                let names = (format!("while@{span}"), format!("while2@{span}"));
                let calls = (self.loop_call(&names.0), self.loop_call(&names.1));
                let inner = self.go2(body, calls.clone())?;
                let (e1, e2) = match guard {
                    LoopGuard::Cond(g) => (Expr::ite(g.clone(), inner.0, f.0), Expr::ite(g.clone(), inner.1, f.1)),
                    LoopGuard::Flip(p) => (mix(p, inner.0, f.0), mix(p, inner.1, f.1)),
                };
                self.eqs.push((*span, 0, names.0, e1));
                self.eqs.push((*span, 1, names.1, e2));
                calls
            }
            Cmd::Tick(a) => {
                if *a < Rat::zero() {
                    return Err(FrontendError::NegativeCost(eqsys_core::scalar::fmt_rat(a)));
                }
                let two_a = Expr::Const(a + a);
                let sq = Expr::Const(a * a);
                (
                    Expr::add(f.0.clone(), Expr::Const(a.clone())),
                    Expr::add(Expr::add(f.1, Expr::mul(two_a, f.0)), sq),
                )
            }
            Cmd::Nondet(..) => return Err(FrontendError::NondetUnsupported("second-moment")),
            Cmd::Score { .. } => return Err(FrontendError::ScoreNotAllowed),
        })
    }

    fn finish(mut self, formula: Expr) -> Result<Translation> {
        self.eqs.sort_by_key(|a| (a.0, a.1));
        let mut system = EquationSystem::new();
        for (_, _, name, eq) in &self.eqs {
            system.push(Predicate::new(name, self.domain.vars.clone()), normalize(eq, self.domain)?);
        }
        let (system, formula) = prune(system, formula);
        system.validate()?;
        let t = Translation {
            domain: self.domain.clone(),
            formula,
            system,
        };
        let top = t.normal_formula()?;
        t.system.validate_formula(&top, &t.domain.names())?;
        Ok(t)
    }
}

fn check_post(prog: &PgclProgram, post: &Expr) -> Result<()> {
    if post.has_calls() {
        return Err(FrontendError::Invalid("post-expectation must not contain predicate calls".into()));
    }
    let mut vs = Vec::new();
    crate::parse::expr_vars(post, &mut vs);
    let known = prog.vars();
    match vs.into_iter().find(|v| !known.contains(v)) {
        Some(v) => Err(FrontendError::Invalid(format!("post-expectation mentions unknown variable {v}"))),
        None => Ok(()),
    }
}

fn run(prog: &PgclProgram, mode: Mode, nondet: Nondet, post: &Expr) -> Result<Translation> {
    check_post(prog, post)?;
    let mut t = Translator::new(prog, mode, nondet);
    let f = t.go(&prog.body, post.clone())?;
    t.finish(f)
}

/// Weakest preexpectation of `post`, with demonic nondeterminism.
pub fn translate_wp(prog: &PgclProgram, post: &Expr) -> Result<Translation> {
    translate_wp_with(prog, post, Nondet::Demonic)
}

pub fn translate_wp_with(prog: &PgclProgram, post: &Expr, nondet: Nondet) -> Result<Translation> {
    if prog.body.has_score() {
        return Err(FrontendError::ScoreNotAllowed);
    }
    run(prog, Mode::Wp, nondet, post)
}

/// Expected runtime: post-expectation 0, `tick(α)` adds `α`.
pub fn translate_ert(prog: &PgclProgram) -> Result<Translation> {
    translate_ert_with(prog, Nondet::Demonic)
}

pub fn translate_ert_with(prog: &PgclProgram, nondet: Nondet) -> Result<Translation> {
    if prog.body.has_score() {
        return Err(FrontendError::ScoreNotAllowed);
    }
    run(prog, Mode::Ert, nondet, &Expr::int(0))
}

/// First and second moments of the runtime, sharing one system.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentTranslation {
    pub domain: Domain,
    pub first: Expr,
    pub second: Expr,
    pub system: EquationSystem,
}

impl MomentTranslation {
    pub fn first(&self) -> Translation {
        Translation {
            domain: self.domain.clone(),
            formula: self.first.clone(),
            system: self.system.clone(),
        }
    }

    pub fn second(&self) -> Translation {
        Translation {
            domain: self.domain.clone(),
            formula: self.second.clone(),
            system: self.system.clone(),
        }
    }
}

pub fn translate_rt2(prog: &PgclProgram) -> Result<MomentTranslation> {
    if prog.body.has_score() {
        return Err(FrontendError::ScoreNotAllowed);
    }
    let mut t = Translator::new(prog, Mode::Ert, Nondet::Demonic);
    let (f1, f2) = t.go2(&prog.body, (Expr::int(0), Expr::int(0)))?;
    let pair = Expr::add(f1, f2);
    let joint = t.finish(pair)?;
    let Expr::Add(f1, f2) = joint.formula else {
        unreachable!("finish keeps the top-level shape")
    };
    Ok(MomentTranslation {
        domain: joint.domain,
        first: *f1,
        second: *f2,
        system: joint.system,
    })
}

/// `(cwp₁[c](post), cwp₂[c](0))`; the conditional expectation is `cwp₁ / (1 − cwp₂)`.
pub fn translate_cwp(prog: &PgclProgram, post: &Expr) -> Result<(Translation, Translation)> {
    if prog.body.has_nondet() {
        return Err(FrontendError::NondetUnsupported("conditional"));
    }
    let first = run(prog, Mode::Cwp1, Nondet::Demonic, post)?;
    let second = run(prog, Mode::Cwp2, Nondet::Demonic, &Expr::int(0))?;
    Ok((first, second))
}

/// Splits `tick(α)` into `max{α,0}` and `max{−α,0}`; the expected cost is the difference.
pub fn split_negative_costs(prog: &PgclProgram) -> Result<(Translation, Translation)> {
    let pos = PgclProgram {
        domain: prog.domain.clone(),
        body: prog.body.map_ticks(&|a| if *a > Rat::zero() { a.clone() } else { Rat::zero() }),
    };
    let neg = PgclProgram {
        domain: prog.domain.clone(),
        body: prog.body.map_ticks(&|a| if *a < Rat::zero() { -a.clone() } else { Rat::zero() }),
    };
    Ok((translate_ert(&pos)?, translate_ert(&neg)?))
}

/// Drops predicate parameters that cannot influence the value of the predicate.
fn prune(system: EquationSystem, formula: Expr) -> (EquationSystem, Expr) {
    let index: BTreeMap<&str, usize> = system
        .predicates
        .iter()
        .enumerate()
        .map(|(i, p)| (p.name.as_str(), i))
        .collect();
    let mut live: Vec<Vec<bool>> = system.predicates.iter().map(|p| vec![false; p.arity()]).collect();
    loop {
        let mut changed = false;
        for (i, (p, f)) in system.predicates.iter().zip(&system.equations).enumerate() {
            let params = p.params();
            let mut used = Vec::new();
            for b in &f.branches {
                used.extend(b.guard.vars());
                for a in &b.body.atoms {
                    used.extend(a.constant.vars());
                    for c in &a.calls {
                        used.extend(c.weight.vars());
                        let callee = index[c.pred.as_str()];
                        for (j, arg) in c.args.iter().enumerate() {
                            if live[callee][j] {
                                used.extend(arg.vars());
                            }
                        }
                    }
                }
            }
            for v in used {
                if let Some(k) = params.iter().position(|w| *w == v) {
                    if !live[i][k] {
                        live[i][k] = true;
                        changed = true;
                    }
                }
            }
        }
        if !changed {
            break;
        }
    }
    let mask: BTreeMap<String, Vec<bool>> = system
        .predicates
        .iter()
        .zip(&live)
        .map(|(p, l)| (p.name.clone(), l.clone()))
        .collect();
    let keep = |name: &str, args: &[_]| -> Vec<_> {
        args.iter()
            .zip(&mask[name])
            .filter(|(_, k)| **k)
            .map(|(a, _): (&eqsys_core::Poly<Rat>, _)| a.clone())
            .collect()
    };
    let mut out = EquationSystem::new();
    for (p, f) in system.predicates.iter().zip(&system.equations) {
        let vars = p
            .domain
            .vars
            .iter()
            .zip(&mask[&p.name])
            .filter(|(_, k)| **k)
            .map(|(v, _)| v.clone())
            .collect();
        let f = f.map_bodies(|b| {
            b.map_atoms(|a| {
                let mut a = a.clone();
                for c in &mut a.calls {
                    c.args = keep(&c.pred, &c.args);
                }
                a
            })
        });
        out.push(Predicate::new(&p.name, vars), f);
    }
    (out, prune_expr(&formula, &mask))
}

fn prune_expr(e: &Expr, mask: &BTreeMap<String, Vec<bool>>) -> Expr {
    let r = |e: &Expr| Box::new(prune_expr(e, mask));
    match e {
        Expr::Call(n, args) => match mask.get(n) {
            Some(m) => Expr::Call(
                n.clone(),
                args.iter().zip(m).filter(|(_, k)| **k).map(|(a, _)| a.clone()).collect(),
            ),
            None => e.clone(),
        },
        Expr::Add(a, b) => Expr::Add(r(a), r(b)),
        Expr::Sub(a, b) => Expr::Sub(r(a), r(b)),
        Expr::Mul(a, b) => Expr::Mul(r(a), r(b)),
        Expr::Div(a, b) => Expr::Div(r(a), r(b)),
        Expr::Neg(a) => Expr::Neg(r(a)),
        Expr::Pow(a, k) => Expr::Pow(r(a), *k),
        Expr::If(c, a, b) => Expr::If(c.clone(), r(a), r(b)),
        Expr::Min(es) => Expr::Min(es.iter().map(|e| prune_expr(e, mask)).collect()),
        Expr::Max(es) => Expr::Max(es.iter().map(|e| prune_expr(e, mask)).collect()),
        Expr::Cases(cs) => Expr::Cases(cs.iter().map(|(c, e)| (c.clone(), prune_expr(e, mask))).collect()),
        Expr::Const(_) | Expr::Var(_) | Expr::Iverson(_) => e.clone(),
    }
}
