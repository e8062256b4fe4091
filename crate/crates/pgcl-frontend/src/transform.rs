//! Under-approximating transformations `E ↦ E′` with `⟦E′⟧ ≤ ⟦E⟧`.

use std::collections::BTreeMap;

use eqsys_core::scalar::fmt_rat;
use eqsys_core::{
    AffineAtom, Body, BodyKind, Cond, Domain, EquationSystem, LinearInequality, NormalFormula, Poly, Polyhedron, Rat,
};
use num_traits::{One, Zero};

use crate::error::{FrontendError, Result};

/// Total weight `t₀ + Σ tₖ` of an atom.
fn total_weight(a: &AffineAtom) -> Poly<Rat> {
    a.calls.iter().fold(a.constant.clone(), |acc, c| &acc + &c.weight)
}

/// Whether `p ≤ 1` everywhere on the guard.
fn at_most_one(p: &Poly<Rat>, guard: &Polyhedron, domain: &Domain) -> Result<bool> {
    let excess = p.clone() - Poly::from_rat(&Rat::one());
    if let Some(c) = excess.rat_const() {
        return Ok(c <= Rat::zero());
    }
    let Ok(atom) = LinearInequality::from_poly(&excess, true) else {
        return Ok(false);
    };
    Ok(!guard.with(atom).integerize(domain).is_satisfiable())
}

/// Checks that every branch has total weight at most one.
pub fn check_one_bounded(sys: &EquationSystem) -> Result<()> {
    for (p, f) in sys.predicates.iter().zip(&sys.equations) {
        for (j, b) in f.branches.iter().enumerate() {
            for a in &b.body.atoms {
                if !at_most_one(&total_weight(a), &b.guard, &p.domain)? {
                    return Err(FrontendError::NotOneBounded(format!(
                        "{} branch {j} ({}) has weight {}",
                        p.name,
                        b.guard,
                        total_weight(a)
                    )));
                }
            }
        }
    }
    Ok(())
}

/// Multiplies every right-hand side by `γ ∈ (0,1)`.
///
/// For a 1-bounded input the constant `1/(1−γ)` is a ranking function of the result.
pub fn gamma_scale(sys: &EquationSystem, gamma: &Rat) -> Result<EquationSystem> {
    if *gamma <= Rat::zero() || *gamma >= Rat::one() {
        return Err(FrontendError::Invalid(format!("gamma {} outside (0,1)", fmt_rat(gamma))));
    }
    check_one_bounded(sys)?;
    let g = Poly::from_rat(gamma);
    Ok(sys.map_formulas(|f| f.map_bodies(|b| b.map_atoms(|a| a.scale(&g)))))
}

/// Truncates each predicate to zero outside its strengthening condition.
pub fn guard_strengthen(sys: &EquationSystem, phi: &BTreeMap<String, Cond>) -> Result<EquationSystem> {
    let mut polys = BTreeMap::new();
    for (name, c) in phi {
        let domain = &sys.predicate(name)?.domain;
        let pieces = c.to_bool_expr()?.dnf(domain);
        let g = match pieces.as_slice() {
            [g] => g.clone(),
            [] => Polyhedron::bottom(),
            _ => {
                return Err(FrontendError::Invalid(format!(
                    "strengthening for {name} must be a conjunction of linear inequalities"
                )))
            }
        };
        polys.insert(name.clone(), g);
    }
    Ok(sys.strengthen(&polys))
}

/// `Some(t)` with `t ∈ [0,1]` when `new = t·old` coefficient-wise.
fn ratio(new: &Poly<Rat>, old: &Poly<Rat>) -> Option<Rat> {
    if new.is_zero() {
        return Some(Rat::zero());
    }
    let (m, c) = old.terms().next()?;
    let t = new.coeff(m) / c.clone();
    (old.scale(&t) == *new && t >= Rat::zero() && t <= Rat::one()).then_some(t)
}

fn atom_below(new: &AffineAtom, old: &AffineAtom) -> bool {
    if ratio(&new.constant, &old.constant).is_none() {
        return false;
    }
    new.calls.iter().all(|c| {
        old.calls
            .iter()
            .any(|d| d.pred == c.pred && d.args == c.args && ratio(&c.weight, &d.weight).is_some())
    })
}

fn body_below(new: &Body, old: &Body) -> bool {
    if new.atoms.iter().all(|a| total_weight(a).is_zero() && a.calls.is_empty()) {
        return true;
    }
    match (new.kind, old.kind) {
        (BodyKind::Affine, BodyKind::Affine) => atom_below(&new.atoms[0], &old.atoms[0]),
        (k, l) if k == l => {
            new.atoms.len() == old.atoms.len() && new.atoms.iter().zip(&old.atoms).all(|(a, b)| atom_below(a, b))
        }
        _ => false,
    }
}

fn implies(a: &Polyhedron, b: &Polyhedron, domain: &Domain) -> bool {
    b.inequalities
        .iter()
        .all(|i| !a.with(i.negate()).integerize(domain).is_satisfiable())
}

fn formula_below(new: &NormalFormula, old: &NormalFormula, domain: &Domain) -> Option<String> {
    for (j, b) in new.branches.iter().enumerate() {
        let ok = old
            .branches
            .iter()
            .any(|o| implies(&b.guard, &o.guard, domain) && body_below(&b.body, &o.body));
        if !ok {
            return Some(format!("branch {j} on {} is not dominated by an original branch", b.guard));
        }
    }
    None
}

/// Syntactic audit of `⟦new⟧ ≤ ⟦old⟧`: every branch of `new` lies inside an
/// original guard and scales its weights by factors in `[0,1]`, or is zero.
pub fn audit_under_approximation(old: &EquationSystem, new: &EquationSystem) -> Vec<String> {
    let mut out = Vec::new();
    for (p, f) in new.predicates.iter().zip(&new.equations) {
        match old.equation(&p.name) {
            Ok(o) => {
                if let Some(msg) = formula_below(f, o, &p.domain) {
                    out.push(format!("{}: {msg}", p.name));
                }
            }
            Err(_) => out.push(format!("{} does not occur in the original system", p.name)),
        }
    }
    out
}
