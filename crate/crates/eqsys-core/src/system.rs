//! Equation systems, queries and their syntactic transforms.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::error::{CoreError, Result};
use crate::formula::{AffineAtom, Body, BodyKind, Branch, NormalFormula};
use crate::linear::{Domain, Polyhedron, Sort};
use crate::poly::{Poly, Var};
use crate::scalar::{fmt_rat, Rat};

#[derive(Clone, Debug, PartialEq)]
pub struct Predicate {
    pub name: String,
    pub domain: Domain,
}

impl Predicate {
    pub fn new(name: &str, params: Vec<(Var, Sort)>) -> Self {
        Predicate {
            name: name.to_string(),
            domain: Domain::new(params),
        }
    }

    pub fn arity(&self) -> usize {
        self.domain.vars.len()
    }

    pub fn params(&self) -> Vec<Var> {
        self.domain.names()
    }
}

/// `X_i(x̃_i) =μ F_i` for every predicate, in declaration order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct EquationSystem {
    pub predicates: Vec<Predicate>,
    pub equations: Vec<NormalFormula>,
    pub warnings: Vec<String>,
}

impl EquationSystem {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, pred: Predicate, formula: NormalFormula) {
        self.predicates.push(pred);
        self.equations.push(formula);
    }

    pub fn len(&self) -> usize {
        self.predicates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.predicates.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.predicates.iter().position(|p| p.name == name)
    }

    pub fn predicate(&self, name: &str) -> Result<&Predicate> {
        self.index_of(name)
            .map(|i| &self.predicates[i])
            .ok_or_else(|| CoreError::UndeclaredPredicate(name.to_string()))
    }

    pub fn equation(&self, name: &str) -> Result<&NormalFormula> {
        self.index_of(name)
            .map(|i| &self.equations[i])
            .ok_or_else(|| CoreError::UndeclaredPredicate(name.to_string()))
    }

    /// Checks call targets, arities and free variables.
    pub fn validate(&self) -> Result<()> {
        let mut seen = BTreeSet::new();
        for p in &self.predicates {
            if !seen.insert(p.name.as_str()) {
                return Err(CoreError::Invalid(format!("predicate {} defined twice", p.name)));
            }
        }
        for (p, f) in self.predicates.iter().zip(&self.equations) {
            self.validate_formula(f, &p.params())?;
        }
        Ok(())
    }

    pub fn validate_formula(&self, f: &NormalFormula, scope: &[Var]) -> Result<()> {
        let check_vars = |vs: BTreeSet<Var>| -> Result<()> {
            match vs.into_iter().find(|v| !scope.contains(v)) {
                Some(v) => Err(CoreError::UnknownVariable(v.to_string())),
                None => Ok(()),
            }
        };
        for b in &f.branches {
            check_vars(b.guard.vars())?;
            for a in &b.body.atoms {
                check_vars(a.constant.vars())?;
                for c in &a.calls {
                    let callee = self.predicate(&c.pred)?;
                    if callee.arity() != c.args.len() {
                        return Err(CoreError::ArityMismatch {
                            name: c.pred.clone(),
                            expected: callee.arity(),
                            got: c.args.len(),
                        });
                    }
                    check_vars(c.weight.vars())?;
                    for arg in &c.args {
                        check_vars(arg.vars())?;
                    }
                }
            }
        }
        Ok(())
    }

    pub fn map_formulas(&self, f: impl Fn(&NormalFormula) -> NormalFormula) -> EquationSystem {
        EquationSystem {
            predicates: self.predicates.clone(),
            equations: self.equations.iter().map(f).collect(),
            warnings: self.warnings.clone(),
        }
    }

    /// The D-transform: every constant term replaced by zero.
    pub fn d_transform(&self) -> EquationSystem {
        self.map_formulas(d_transform)
    }

    /// Replaces every `min` by `max`.
    pub fn max_transform(&self) -> EquationSystem {
        self.map_formulas(max_transform)
    }

    pub fn has_min(&self) -> bool {
        self.equations.iter().any(NormalFormula::has_min)
    }

    pub fn has_max(&self) -> bool {
        self.equations.iter().any(NormalFormula::has_max)
    }

    /// Splits every branch of the given predicates into `φ′ ∧ φ_j` (body kept, same index)
    /// and the pieces of `¬φ′ ∧ φ_j` (body zero, appended after the original branches).
    pub fn strengthen(&self, phi: &BTreeMap<String, Polyhedron>) -> EquationSystem {
        let mut out = self.clone();
        for (i, p) in self.predicates.iter().enumerate() {
            let Some(extra) = phi.get(&p.name) else { continue };
            let extra = extra.integerize(&p.domain);
            let comp = extra.complement(&p.domain);
            let f = &self.equations[i];
            let mut kept: Vec<Branch> = f
                .branches
                .iter()
                .map(|b| Branch {
                    guard: b.guard.and(&extra).simplify(),
                    body: b.body.clone(),
                })
                .collect();
            for b in &f.branches {
                for c in &comp {
                    let g = b.guard.and(c);
                    if g.is_satisfiable() {
                        kept.push(Branch {
                            guard: g.simplify(),
                            body: Body::zero(),
                        });
                    }
                }
            }
            out.equations[i] = NormalFormula { branches: kept };
        }
        out
    }

    /// Largest polynomial degree among weights, constants and call arguments.
    pub fn degree(&self) -> u32 {
        self.equations.iter().map(formula_degree).max().unwrap_or(0)
    }
}

pub fn formula_degree(f: &NormalFormula) -> u32 {
    f.branches
        .iter()
        .flat_map(|b| b.body.atoms.iter())
        .map(|a| {
            a.calls
                .iter()
                .flat_map(|c| std::iter::once(c.weight.degree()).chain(c.args.iter().map(Poly::degree)))
                .chain(std::iter::once(a.constant.degree()))
                .max()
                .unwrap_or(0)
        })
        .max()
        .unwrap_or(0)
}

pub fn d_transform(f: &NormalFormula) -> NormalFormula {
    f.map_bodies(|b| {
        b.map_atoms(|a| AffineAtom {
            calls: a.calls.clone(),
            constant: Poly::zero(),
        })
    })
}

pub fn max_transform(f: &NormalFormula) -> NormalFormula {
    f.map_bodies(|b| {
        let mut b = b.clone();
        if b.kind == BodyKind::Min {
            b.kind = BodyKind::Max;
        }
        b
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QueryRelation {
    Ge,
    Le,
}

impl fmt::Display for QueryRelation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            QueryRelation::Ge => ">=",
            QueryRelation::Le => "<=",
        })
    }
}

/// A closed formula compared against a rational bound.
#[derive(Clone, Debug, PartialEq)]
pub struct Query {
    pub formula: NormalFormula,
    pub relation: QueryRelation,
    pub bound: Rat,
}

impl fmt::Display for Query {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.formula, self.relation, fmt_rat(&self.bound))
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct QueriedEquationSystem {
    pub system: EquationSystem,
    pub queries: Vec<Query>,
}

impl QueriedEquationSystem {
    pub fn validate(&self) -> Result<()> {
        self.system.validate()?;
        for q in &self.queries {
            self.system.validate_formula(&q.formula, &[])?;
        }
        Ok(())
    }

    pub fn lower_queries(&self) -> impl Iterator<Item = &Query> {
        self.queries.iter().filter(|q| q.relation == QueryRelation::Ge)
    }

    pub fn upper_queries(&self) -> impl Iterator<Item = &Query> {
        self.queries.iter().filter(|q| q.relation == QueryRelation::Le)
    }

    pub fn with_queries(&self, queries: Vec<Query>) -> Self {
        QueriedEquationSystem {
            system: self.system.clone(),
            queries,
        }
    }
}
