//! Reduction of the certificate conditions to polynomial quantified entailments.

use std::collections::BTreeMap;
use std::fmt;

use eqsys_core::formula::AffineAtom;
use eqsys_core::piecewise::{compose_call, refine_cells};
use eqsys_core::{Domain, EquationSystem, NormalFormula, Poly, Polyhedron, Query, QueryRelation, Rat, Var, Witness};
use num_traits::One;

use crate::error::{EngineError, Result};

/// A polynomial over state variables whose coefficients are polynomials in unknowns.
pub type Template = Poly<Poly<Rat>>;

pub fn lift(p: &Poly<Rat>) -> Template {
    p.map_coeffs(Poly::from_rat)
}

pub fn lift_witness(w: &Witness<Rat>) -> Witness<Poly<Rat>> {
    Witness {
        pieces: w
            .pieces
            .iter()
            .map(|(k, pw)| {
                (
                    k.clone(),
                    eqsys_core::PiecewisePoly::new(pw.branches.iter().map(|(g, p)| (g.clone(), lift(p))).collect()),
                )
            })
            .collect(),
    }
}

/// Substitutes values for unknowns; unknowns without a value are kept.
pub fn instantiate(t: &Template, theta: &BTreeMap<Var, Rat>) -> Template {
    let map: BTreeMap<Var, Poly<Rat>> = theta.iter().map(|(k, v)| (k.clone(), Poly::from_rat(v))).collect();
    t.map_coeffs(|c| c.compose(&map))
}

/// The state polynomial of an unknown-free template.
pub fn concrete(t: &Template) -> Option<Poly<Rat>> {
    let mut out = Poly::zero();
    for (m, c) in t.terms() {
        out.add_term(m.clone(), c.rat_const()?);
    }
    Some(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ConstraintKind {
    Prefixed,
    Ranking,
    BelowU,
    Invariant,
    NonNegU,
    NonNegR,
    NonNegEta,
    Query,
    UpperPrefixed,
    UpperNonNeg,
    UpperQuery,
    Weight,
}

impl fmt::Display for ConstraintKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ConstraintKind::Prefixed => "u >= F[u]",
            ConstraintKind::Ranking => "r >= u + DF[r]",
            ConstraintKind::BelowU => "eta <= u",
            ConstraintKind::Invariant => "eta <= F[eta]",
            ConstraintKind::NonNegU => "u >= 0",
            ConstraintKind::NonNegR => "r >= 0",
            ConstraintKind::NonNegEta => "eta >= 0",
            ConstraintKind::Query => "F[eta] >= t",
            ConstraintKind::UpperPrefixed => "u >= F[u]",
            ConstraintKind::UpperNonNeg => "u >= 0",
            ConstraintKind::UpperQuery => "F[u] <= t",
            ConstraintKind::Weight => "weight >= 0",
        })
    }
}

/// `∀x̃. premise ⇒ conclusion ≥ 0`.
#[derive(Clone, Debug)]
pub struct Pqe {
    pub kind: ConstraintKind,
    pub pred: String,
    pub branch: usize,
    pub atom: usize,
    pub premise: Polyhedron,
    pub conclusion: Template,
}

impl Pqe {
    pub fn label(&self) -> String {
        if self.pred.is_empty() {
            format!("{} (query branch {})", self.kind, self.branch)
        } else {
            format!("{} for {} branch {} atom {}", self.kind, self.pred, self.branch, self.atom)
        }
    }
}

impl fmt::Display for Pqe {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match concrete(&self.conclusion) {
            Some(p) => write!(f, "{}: {} => {} >= 0", self.label(), self.premise, p),
            None => write!(f, "{}: {} => (template) >= 0", self.label(), self.premise),
        }
    }
}

/// Position of a weight in a system: predicate, branch, atom and slot
/// (slot 0 is the constant term, slot `k+1` the `k`-th call).
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FactorKey {
    pub pred: String,
    pub branch: usize,
    pub atom: usize,
    pub slot: usize,
}

/// Multipliers on weights of `E′`; absent keys mean 1.
pub type Factors = BTreeMap<FactorKey, Poly<Rat>>;

/// Witness roles substituted into a formula.
#[derive(Clone, Copy)]
pub struct Roles<'a> {
    pub u: &'a Witness<Poly<Rat>>,
    pub r: Option<&'a Witness<Poly<Rat>>>,
    pub eta: Option<&'a Witness<Poly<Rat>>>,
}

struct Ref<'a> {
    w: &'a Witness<Poly<Rat>>,
    pred: String,
    args: Vec<Poly<Rat>>,
}

fn identity_args(params: &[Var]) -> Vec<Poly<Rat>> {
    params.iter().map(|v| Poly::var(v)).collect()
}

/// Cells of `base` together with the composed witness value of every reference.
fn cells(sys: &EquationSystem, base: &Polyhedron, domain: &Domain, refs: &[Ref<'_>]) -> Result<Vec<(Polyhedron, Vec<Template>)>> {
    let mut specs = Vec::new();
    for r in refs {
        let pw = r.w.get(&r.pred)?;
        specs.push((pw.guards(), sys.predicate(&r.pred)?.params(), r.args.clone()));
    }
    let cells = refine_cells(base, &specs, domain)?;
    let mut out = Vec::new();
    for cell in cells {
        let mut vals = Vec::new();
        for (r, &i) in refs.iter().zip(&cell.choice) {
            let piece = &r.w.get(&r.pred)?.branches[i].1;
            let params = sys.predicate(&r.pred)?.params();
            vals.push(compose_call(piece, &params, &r.args));
        }
        out.push((cell.guard, vals));
    }
    Ok(out)
}

fn factor(factors: &Factors, pred: &str, branch: usize, atom: usize, slot: usize) -> Template {
    let key = FactorKey {
        pred: pred.to_string(),
        branch,
        atom,
        slot,
    };
    match factors.get(&key) {
        Some(f) => Template::constant(f.clone()),
        None => Template::constant(Poly::from_rat(&Rat::one())),
    }
}

/// `A[w/X]` given the composed values of the calls, with `E′` factors applied.
fn atom_value(
    atom: &AffineAtom,
    vals: &[Template],
    factors: &Factors,
    key: (&str, usize, usize),
    with_constant: bool,
) -> Template {
    let (pred, branch, a) = key;
    let mut acc = if with_constant {
        lift(&atom.constant) * factor(factors, pred, branch, a, 0)
    } else {
        Template::zero()
    };
    for (k, (c, v)) in atom.calls.iter().zip(vals).enumerate() {
        acc = acc + lift(&c.weight) * factor(factors, pred, branch, a, k + 1) * v.clone();
    }
    acc
}

fn call_refs<'a>(w: &'a Witness<Poly<Rat>>, atom: &AffineAtom) -> Vec<Ref<'a>> {
    atom.calls
        .iter()
        .map(|c| Ref {
            w,
            pred: c.pred.clone(),
            args: c.args.clone(),
        })
        .collect()
}

#[allow(clippy::too_many_arguments)]
fn push_cells(
    out: &mut Vec<Pqe>,
    sys: &EquationSystem,
    base: &Polyhedron,
    domain: &Domain,
    refs: Vec<Ref<'_>>,
    kind: ConstraintKind,
    (pred, branch, atom): (&str, usize, usize),
    conclusion: impl Fn(&[Template]) -> Template,
) -> Result<()> {
    for (guard, vals) in cells(sys, base, domain, &refs)? {
        out.push(Pqe {
            kind,
            pred: pred.to_string(),
            branch,
            atom,
            premise: guard.closure(),
            conclusion: conclusion(&vals),
        });
    }
    Ok(())
}

fn reject_max(sys: &EquationSystem) -> Result<()> {
    if sys.has_max() {
        return Err(EngineError::Unsupported(
            "max-nondeterminism in E' needs scheduler weights (check mode)".into(),
        ));
    }
    Ok(())
}

/// Entailments for `u ≥ F[u]`, `r ≥ u + DF[r]`, `η ≤ u`, `η ≤ F[η]` and non-negativity
/// on every branch of `E′`, plus `F[η] ⋈ t` for each lower query.
pub fn build_lower(sys: &EquationSystem, factors: &Factors, roles: Roles<'_>, queries: &[Query]) -> Result<Vec<Pqe>> {
    reject_max(sys)?;
    let (u, r, eta) = match (roles.r, roles.eta) {
        (Some(r), Some(eta)) => (roles.u, r, eta),
        _ => return Err(EngineError::Invalid("lower certificates need u, r and eta".into())),
    };
    for (name, w) in [("u", u), ("r", r), ("eta", eta)] {
        for p in &sys.predicates {
            if !w.pieces.contains_key(&p.name) {
                return Err(EngineError::MissingWitness(format!("{name} for {}", p.name)));
            }
        }
    }
    let mut out = Vec::new();
    for (p, f) in sys.predicates.iter().zip(&sys.equations) {
        let id = identity_args(&p.params());
        let own = |w| Ref {
            w,
            pred: p.name.clone(),
            args: id.clone(),
        };
        for (j, b) in f.branches.iter().enumerate() {
            let g = &b.guard;
            let dom = &p.domain;
            for (m, atom) in b.body.atoms.iter().enumerate() {
                let key = (p.name.as_str(), j, m);
                let mut refs = vec![own(u)];
                refs.extend(call_refs(u, atom));
                push_cells(&mut out, sys, g, dom, refs, ConstraintKind::Prefixed, key, |v| {
                    v[0].clone() - atom_value(atom, &v[1..], factors, key, true)
                })?;
                let mut refs = vec![own(r), own(u)];
                refs.extend(call_refs(r, atom));
                push_cells(&mut out, sys, g, dom, refs, ConstraintKind::Ranking, key, |v| {
                    v[0].clone() - v[1].clone() - atom_value(atom, &v[2..], factors, key, false)
                })?;
                let mut refs = vec![own(eta)];
                refs.extend(call_refs(eta, atom));
                push_cells(&mut out, sys, g, dom, refs, ConstraintKind::Invariant, key, |v| {
                    atom_value(atom, &v[1..], factors, key, true) - v[0].clone()
                })?;
            }
            let key = (p.name.as_str(), j, 0);
            push_cells(&mut out, sys, g, dom, vec![own(u), own(eta)], ConstraintKind::BelowU, key, |v| {
                v[0].clone() - v[1].clone()
            })?;
            for (w, kind) in [
                (u, ConstraintKind::NonNegU),
                (r, ConstraintKind::NonNegR),
                (eta, ConstraintKind::NonNegEta),
            ] {
                push_cells(&mut out, sys, g, dom, vec![own(w)], kind, key, |v| v[0].clone())?;
            }
        }
    }
    for q in queries.iter().filter(|q| q.relation == QueryRelation::Ge) {
        query_pqes(&mut out, sys, &q.formula, eta, &q.bound, true)?;
    }
    Ok(out)
}

fn query_pqes(
    out: &mut Vec<Pqe>,
    sys: &EquationSystem,
    f: &NormalFormula,
    w: &Witness<Poly<Rat>>,
    bound: &Rat,
    lower: bool,
) -> Result<()> {
    let none = Factors::new();
    let t = Template::constant(Poly::from_rat(bound));
    for (j, b) in f.branches.iter().enumerate() {
        for (m, atom) in b.body.atoms.iter().enumerate() {
            let key = ("", j, m);
            let (kind, lower_side) = if lower {
                (ConstraintKind::Query, true)
            } else {
                (ConstraintKind::UpperQuery, false)
            };
            push_cells(out, sys, &b.guard, &Domain::empty(), call_refs(w, atom), kind, key, |v| {
                let val = atom_value(atom, v, &none, key, true);
                if lower_side {
                    val - t.clone()
                } else {
                    t.clone() - val
                }
            })?;
        }
    }
    Ok(())
}

/// Entailments for `u ≥ F[u]`, `u ≥ 0` and `F[u] ≤ t` for each upper query.
///
/// `min` and `max` bodies both require `u` to dominate every alternative.
pub fn build_upper(sys: &EquationSystem, u: &Witness<Poly<Rat>>, queries: &[Query]) -> Result<Vec<Pqe>> {
    for p in &sys.predicates {
        if !u.pieces.contains_key(&p.name) {
            return Err(EngineError::MissingWitness(format!("u for {}", p.name)));
        }
    }
    let none = Factors::new();
    let mut out = Vec::new();
    for (p, f) in sys.predicates.iter().zip(&sys.equations) {
        let id = identity_args(&p.params());
        let own = || Ref {
            w: u,
            pred: p.name.clone(),
            args: id.clone(),
        };
        for (j, b) in f.branches.iter().enumerate() {
            for (m, atom) in b.body.atoms.iter().enumerate() {
                let key = (p.name.as_str(), j, m);
                let mut refs = vec![own()];
                refs.extend(call_refs(u, atom));
                push_cells(&mut out, sys, &b.guard, &p.domain, refs, ConstraintKind::UpperPrefixed, key, |v| {
                    v[0].clone() - atom_value(atom, &v[1..], &none, key, true)
                })?;
            }
            let key = (p.name.as_str(), j, 0);
            push_cells(&mut out, sys, &b.guard, &p.domain, vec![own()], ConstraintKind::UpperNonNeg, key, |v| {
                v[0].clone()
            })?;
        }
    }
    for q in queries.iter().filter(|q| q.relation == QueryRelation::Le) {
        query_pqes(&mut out, sys, &q.formula, u, &q.bound, false)?;
    }
    Ok(out)
}

/// Entailments stating that every weight and constant is non-negative on its guard.
pub fn weight_pqes(sys: &EquationSystem) -> Vec<Pqe> {
    let mut out = Vec::new();
    for (p, f) in sys.predicates.iter().zip(&sys.equations) {
        for (j, b) in f.branches.iter().enumerate() {
            for (m, atom) in b.body.atoms.iter().enumerate() {
                let polys = std::iter::once(&atom.constant).chain(atom.calls.iter().map(|c| &c.weight));
                for t in polys {
                    out.push(Pqe {
                        kind: ConstraintKind::Weight,
                        pred: p.name.clone(),
                        branch: j,
                        atom: m,
                        premise: b.guard.closure(),
                        conclusion: lift(t),
                    });
                }
            }
        }
    }
    out
}
