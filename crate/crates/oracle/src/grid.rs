//! Finite integer grids over the predicates of an equation system.

use std::collections::BTreeMap;

use eqsys_core::{EquationSystem, Ext, Rat, Scalar};
use num_traits::ToPrimitive;

use crate::error::{OracleError, Result};

/// Value given to calls whose arguments leave the grid.
#[derive(Clone, Debug, PartialEq)]
pub enum Policy {
    /// A fixed value.
    Clamp(Ext<Rat>),
    AbsorbZero,
    AbsorbInf,
    /// The start assignment evaluated at the off-grid state (zero when starting from bottom).
    ClampToU,
}

impl Policy {
    pub fn value<S: Scalar>(&self) -> Option<Ext<S>> {
        match self {
            Policy::Clamp(Ext::Fin(r)) => Some(Ext::Fin(S::from_rat(r))),
            Policy::Clamp(Ext::Inf) | Policy::AbsorbInf => Some(Ext::Inf),
            Policy::AbsorbZero => Some(Ext::zero()),
            Policy::ClampToU => None,
        }
    }
}

/// Per-variable bounds `[lo, hi]` and per-predicate out-of-range policies.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TruncationSpec {
    pub bounds: BTreeMap<String, (i64, i64)>,
    pub policies: BTreeMap<String, Policy>,
    pub default_policy: Option<Policy>,
}

impl TruncationSpec {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn bound(mut self, var: &str, lo: i64, hi: i64) -> Self {
        self.bounds.insert(var.to_string(), (lo, hi));
        self
    }

    /// Same bounds for every parameter of every predicate.
    pub fn uniform(sys: &EquationSystem, lo: i64, hi: i64) -> Self {
        let mut s = Self::new();
        for p in &sys.predicates {
            for v in p.params() {
                s.bounds.insert(v.to_string(), (lo, hi));
            }
        }
        s
    }

    pub fn policy(mut self, pred: &str, p: Policy) -> Self {
        self.policies.insert(pred.to_string(), p);
        self
    }

    pub fn with_default(mut self, p: Policy) -> Self {
        self.default_policy = Some(p);
        self
    }

    pub fn policy_for(&self, pred: &str) -> Option<&Policy> {
        self.policies.get(pred).or(self.default_policy.as_ref())
    }

    /// Parses `x:lo..hi`.
    pub fn parse_bound(s: &str) -> Result<(String, i64, i64)> {
        let bad = || OracleError::Unsupported(format!("bad truncation {s:?}, expected x:lo..hi"));
        let (v, range) = s.split_once(':').ok_or_else(bad)?;
        let (lo, hi) = range.split_once("..").ok_or_else(bad)?;
        let lo = lo.trim().parse().map_err(|_| bad())?;
        let hi = hi.trim().parse().map_err(|_| bad())?;
        Ok((v.trim().to_string(), lo, hi))
    }
}

/// Box of integer states for one predicate, enumerated lexicographically.
#[derive(Clone, Debug, PartialEq)]
pub struct Shape {
    pub name: String,
    pub ranges: Vec<(i64, i64)>,
}

impl Shape {
    pub fn len(&self) -> usize {
        self.ranges.iter().map(|(lo, hi)| (hi - lo + 1) as usize).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, state: &[i64]) -> Option<usize> {
        let mut i = 0usize;
        for (&x, &(lo, hi)) in state.iter().zip(&self.ranges) {
            if x < lo || x > hi {
                return None;
            }
            i = i * (hi - lo + 1) as usize + (x - lo) as usize;
        }
        Some(i)
    }

    pub fn state(&self, mut i: usize) -> Vec<i64> {
        let mut out = vec![0; self.ranges.len()];
        for (k, &(lo, hi)) in self.ranges.iter().enumerate().rev() {
            let w = (hi - lo + 1) as usize;
            out[k] = lo + (i % w) as i64;
            i /= w;
        }
        out
    }

    pub fn states(&self) -> impl Iterator<Item = Vec<i64>> + '_ {
        (0..self.len()).map(|i| self.state(i))
    }
}

/// Values of every predicate on its grid.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid<S> {
    pub shapes: Vec<Shape>,
    pub values: Vec<Vec<Ext<S>>>,
}

impl<S: Scalar> Grid<S> {
    pub fn shapes(sys: &EquationSystem, spec: &TruncationSpec) -> Result<Vec<Shape>> {
        sys.predicates
            .iter()
            .map(|p| {
                let ranges = p
                    .params()
                    .iter()
                    .map(|v| {
                        let &(lo, hi) = spec.bounds.get(&v.to_string()).ok_or_else(|| OracleError::MissingBounds {
                            pred: p.name.clone(),
                            var: v.to_string(),
                        })?;
                        if lo > hi {
                            return Err(OracleError::EmptyRange {
                                var: v.to_string(),
                                lo,
                                hi,
                            });
                        }
                        Ok((lo, hi))
                    })
                    .collect::<Result<_>>()?;
                Ok(Shape {
                    name: p.name.clone(),
                    ranges,
                })
            })
            .collect()
    }

    pub fn filled(shapes: Vec<Shape>, f: impl Fn(&Shape, &[i64]) -> Result<Ext<S>>) -> Result<Self> {
        let values = shapes
            .iter()
            .map(|s| s.states().map(|x| f(s, &x)).collect::<Result<Vec<_>>>())
            .collect::<Result<_>>()?;
        Ok(Grid { shapes, values })
    }

    pub fn pred_index(&self, pred: &str) -> Option<usize> {
        self.shapes.iter().position(|s| s.name == pred)
    }

    pub fn get(&self, pred: &str, state: &[i64]) -> Option<&Ext<S>> {
        let p = self.pred_index(pred)?;
        let i = self.shapes[p].index(state)?;
        Some(&self.values[p][i])
    }

    pub fn entries(&self) -> impl Iterator<Item = (&str, Vec<i64>, &Ext<S>)> {
        self.shapes.iter().zip(&self.values).flat_map(|(s, vs)| {
            s.states()
                .zip(vs)
                .map(move |(x, v)| (s.name.as_str(), x, v))
        })
    }

    /// `max |self − other|`, infinite when exactly one side is infinite.
    pub fn distance(&self, other: &Self) -> Ext<S> {
        let mut d = S::zero();
        for (a, b) in self.values.iter().flatten().zip(other.values.iter().flatten()) {
            match (a, b) {
                (Ext::Fin(a), Ext::Fin(b)) => {
                    let x = if a >= b { a.clone() - b.clone() } else { b.clone() - a.clone() };
                    if x > d {
                        d = x;
                    }
                }
                (Ext::Inf, Ext::Inf) => {}
                _ => return Ext::Inf,
            }
        }
        Ext::Fin(d)
    }

    /// Whether `self ≤ other` pointwise.
    pub fn le(&self, other: &Self) -> bool {
        self.values
            .iter()
            .flatten()
            .zip(other.values.iter().flatten())
            .all(|(a, b)| a <= b)
    }
}

/// Integer view of call arguments.
pub fn integer_args<S: Scalar>(pred: &str, args: &[S]) -> Result<Vec<i64>> {
    args.iter()
        .map(|a| {
            let r = a
                .to_rat()
                .filter(|r| r.is_integer())
                .and_then(|r| r.to_integer().to_i64());
            r.ok_or_else(|| OracleError::NonInteger(call_string(pred, args)))
        })
        .collect()
}

pub fn call_string<S: Scalar>(pred: &str, args: &[S]) -> String {
    let a: Vec<String> = args.iter().map(|x| x.to_string()).collect();
    format!("{pred}({})", a.join(", "))
}

pub fn to_scalars<S: Scalar>(state: &[i64]) -> Vec<S> {
    state.iter().map(|&x| S::from_rat(&Rat::from_integer(x.into()))).collect()
}
