//! Pointwise evaluation of the certificate inequalities for closed-form witnesses.
//!
//! Witnesses may use `pow(b, e)` with a rational base and an integer exponent
//! besides polynomials and `cases`. Consistency on samples is evidence, not a proof.

use std::collections::BTreeMap;
use std::fmt;

use eqsys_core::eval::evaluate;
use eqsys_core::formula::Expr;
use eqsys_core::piecewise::format_point;
use eqsys_core::scalar::fmt_rat;
use eqsys_core::{CoreError, EquationSystem, Ext, QueriedEquationSystem, Rat, Var};
use num_traits::Zero;

use crate::certificate::{parse_entries, Direction, EPrime};
use crate::error::{EngineError, Result};
use crate::pqe::ConstraintKind;

#[derive(Clone, Debug, Default)]
pub struct NumericCertificate {
    pub direction: Option<Direction>,
    pub eprime: EPrime,
    pub u: BTreeMap<String, Expr>,
    pub r: BTreeMap<String, Expr>,
    pub eta: BTreeMap<String, Expr>,
}

impl NumericCertificate {
    pub fn parse(src: &str, sys: &EquationSystem) -> Result<Self> {
        let (cert, raw) = parse_entries(src, sys)?;
        let mut out = NumericCertificate {
            direction: Some(cert.direction),
            eprime: cert.eprime,
            ..Default::default()
        };
        for w in raw {
            let slot = match w.role.as_str() {
                "u" => &mut out.u,
                "r" => &mut out.r,
                _ => &mut out.eta,
            };
            slot.insert(w.pred, w.expr);
        }
        Ok(out)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum NumericVerdict {
    Consistent { checked: usize },
    Violated {
        kind: ConstraintKind,
        pred: String,
        state: String,
        lhs: Ext<Rat>,
        rhs: Ext<Rat>,
    },
}

impl NumericVerdict {
    pub fn is_consistent(&self) -> bool {
        matches!(self, NumericVerdict::Consistent { .. })
    }
}

fn fmt_ext(v: &Ext<Rat>) -> String {
    match v {
        Ext::Fin(r) => fmt_rat(r),
        Ext::Inf => "inf".into(),
    }
}

impl fmt::Display for NumericVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NumericVerdict::Consistent { checked } => write!(
                f,
                "consistent on {checked} sampled inequalities (not a proof)"
            ),
            NumericVerdict::Violated {
                kind,
                pred,
                state,
                lhs,
                rhs,
            } => write!(
                f,
                "violated: {kind} for {pred} at {state} ({} vs {})",
                fmt_ext(lhs),
                fmt_ext(rhs)
            ),
        }
    }
}

fn rat_pow(b: &Rat, e: &Rat) -> Result<Rat> {
    if !e.is_integer() {
        return Err(EngineError::Invalid(format!("pow exponent {} is not an integer", fmt_rat(e))));
    }
    let n: i32 = e
        .to_integer()
        .try_into()
        .map_err(|_| EngineError::Invalid("pow exponent too large".into()))?;
    if b.is_zero() && n < 0 {
        return Err(EngineError::Invalid("pow of zero with negative exponent".into()));
    }
    Ok(num_traits::pow::Pow::pow(b, n))
}

/// Evaluates a witness expression for `pred` at `args`.
pub fn eval_witness(sys: &EquationSystem, exprs: &BTreeMap<String, Expr>, pred: &str, args: &[Rat]) -> Result<Rat> {
    let e = exprs
        .get(pred)
        .ok_or_else(|| EngineError::MissingWitness(pred.to_string()))?;
    let params = sys.predicate(pred)?.params();
    let env = |v: &Var| -> eqsys_core::Result<Rat> {
        params
            .iter()
            .position(|p| p == v)
            .map(|i| args[i].clone())
            .ok_or_else(|| CoreError::UnknownVariable(v.to_string()))
    };
    let calls = |name: &str, vals: &[Rat]| -> eqsys_core::Result<Ext<Rat>> {
        match (name, vals) {
            ("pow", [b, x]) => rat_pow(b, x)
                .map(Ext::Fin)
                .map_err(|e| CoreError::Invalid(e.to_string())),
            _ => Err(CoreError::Invalid(format!("unsupported function {name} in witness"))),
        }
    };
    match e.eval(&env, &calls)? {
        Ext::Fin(v) => Ok(v),
        Ext::Inf => Err(EngineError::Invalid(format!("witness for {pred} is infinite"))),
    }
}

struct Probe<'a> {
    sys: &'a EquationSystem,
    exprs: &'a BTreeMap<String, Expr>,
}

impl Probe<'_> {
    fn at(&self, pred: &str, args: &[Rat]) -> eqsys_core::Result<Ext<Rat>> {
        eval_witness(self.sys, self.exprs, pred, args)
            .map(Ext::Fin)
            .map_err(|e| CoreError::Invalid(e.to_string()))
    }

    fn apply(&self, sys: &EquationSystem, pred: &str, state: &[Rat]) -> Result<Ext<Rat>> {
        let a = |p: &str, args: &[Rat]| self.at(p, args);
        Ok(evaluate(sys, &a, pred, state)?)
    }
}

/// Evaluates every inequality of the lower-bound rule at the given states.
/// `states` pairs a predicate with a point of its domain.
pub fn check_numeric(
    q: &QueriedEquationSystem,
    cert: &NumericCertificate,
    states: &[(String, Vec<Rat>)],
) -> Result<NumericVerdict> {
    let eprime = cert.eprime.apply(&q.system)?;
    let emax = eprime.max_transform();
    let dmax = emax.d_transform();
    let u = Probe { sys: &q.system, exprs: &cert.u };
    let r = Probe { sys: &q.system, exprs: &cert.r };
    let eta = Probe { sys: &q.system, exprs: &cert.eta };
    let mut checked = 0;
    for (pred, s) in states {
        let uv = u.at(pred, s)?;
        let rv = r.at(pred, s)?;
        let ev = eta.at(pred, s)?;
        let zero = Ext::Fin(Rat::zero());
        // (kind, smaller, larger)
        let conds = [
            (ConstraintKind::Prefixed, u.apply(&emax, pred, s)?, uv.clone()),
            (ConstraintKind::Ranking, uv.add(&r.apply(&dmax, pred, s)?), rv.clone()),
            (ConstraintKind::BelowU, ev.clone(), uv.clone()),
            (ConstraintKind::Invariant, ev.clone(), eta.apply(&eprime, pred, s)?),
            (ConstraintKind::NonNegU, zero.clone(), uv),
            (ConstraintKind::NonNegR, zero.clone(), rv),
            (ConstraintKind::NonNegEta, zero, ev),
        ];
        for (kind, lhs, rhs) in conds {
            checked += 1;
            if lhs > rhs {
                let vars = q.system.predicate(pred)?.params();
                return Ok(NumericVerdict::Violated {
                    kind,
                    pred: pred.clone(),
                    state: format_point(&vars, s),
                    lhs,
                    rhs,
                });
            }
        }
    }
    for query in q.lower_queries() {
        let a = |p: &str, args: &[Rat]| eta.at(p, args);
        let v = eqsys_core::eval::eval_query(query, &a)?;
        checked += 1;
        if v < Ext::Fin(query.bound.clone()) {
            return Ok(NumericVerdict::Violated {
                kind: ConstraintKind::Query,
                pred: String::new(),
                state: format!("{query}"),
                lhs: Ext::Fin(query.bound.clone()),
                rhs: v,
            });
        }
    }
    Ok(NumericVerdict::Consistent { checked })
}
