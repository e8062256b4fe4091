//! Semantics of normal formulas under an interpretation of the predicates.

use crate::error::Result;
use crate::formula::{AffineAtom, Body, BodyKind, NormalFormula};
use crate::poly::Var;
use crate::scalar::{Ext, Scalar};
use crate::system::{EquationSystem, Query, QueryRelation};

/// An interpretation `a : X_i ↦ (R^{n_i} → [0, ∞])`.
pub trait Assignment<S: Scalar> {
    fn value(&self, pred: &str, args: &[S]) -> Result<Ext<S>>;
}

impl<S: Scalar, F> Assignment<S> for F
where
    F: Fn(&str, &[S]) -> Result<Ext<S>>,
{
    fn value(&self, pred: &str, args: &[S]) -> Result<Ext<S>> {
        self(pred, args)
    }
}

pub fn eval_atom<S: Scalar>(
    atom: &AffineAtom,
    vars: &[Var],
    point: &[S],
    a: &dyn Assignment<S>,
) -> Result<Ext<S>> {
    let mut acc = Ext::Fin(atom.constant.eval_at(vars, point)?);
    for c in &atom.calls {
        let w: S = c.weight.eval_at(vars, point)?;
        if w.is_zero() {
            continue;
        }
        let args = c
            .args
            .iter()
            .map(|e| e.eval_at(vars, point))
            .collect::<Result<Vec<S>>>()?;
        acc = acc.add(&a.value(&c.pred, &args)?.scale(&w));
    }
    Ok(acc)
}

pub fn eval_body<S: Scalar>(body: &Body, vars: &[Var], point: &[S], a: &dyn Assignment<S>) -> Result<Ext<S>> {
    let mut vals = body.atoms.iter().map(|t| eval_atom(t, vars, point, a));
    let first = vals.next().unwrap_or(Ok(Ext::zero()))?;
    vals.try_fold(first, |acc, v| {
        let v = v?;
        Ok(match body.kind {
            BodyKind::Min => acc.min(v),
            _ => acc.max(v),
        })
    })
}

/// Value of the formula at a point; zero where no guard holds.
pub fn eval_formula<S: Scalar>(
    f: &NormalFormula,
    vars: &[Var],
    point: &[S],
    a: &dyn Assignment<S>,
) -> Result<Ext<S>> {
    match f.branch_at(vars, point)? {
        Some(i) => eval_body(&f.branches[i].body, vars, point, a),
        None => Ok(Ext::zero()),
    }
}

/// `F_X[a](state)`: one application of the system operator.
pub fn evaluate<S: Scalar>(sys: &EquationSystem, a: &dyn Assignment<S>, pred: &str, state: &[S]) -> Result<Ext<S>> {
    let i = sys
        .index_of(pred)
        .ok_or_else(|| crate::CoreError::UndeclaredPredicate(pred.to_string()))?;
    eval_formula(&sys.equations[i], &sys.predicates[i].params(), state, a)
}

pub fn eval_query<S: Scalar>(q: &Query, a: &dyn Assignment<S>) -> Result<Ext<S>> {
    eval_formula(&q.formula, &[], &[], a)
}

/// Whether the value satisfies the query relation.
pub fn query_holds<S: Scalar>(q: &Query, value: &Ext<S>) -> bool {
    let bound = Ext::Fin(S::from_rat(&q.bound));
    match q.relation {
        QueryRelation::Ge => *value >= bound,
        QueryRelation::Le => *value <= bound,
    }
}
