//! Handelman products and the reduction of a polyhedral entailment to linear equalities.

use std::collections::BTreeMap;
use std::fmt;

use eqsys_core::lp::{LinearProgram, Relation};
use eqsys_core::poly::Monomial;
use eqsys_core::{Poly, Polyhedron, Rat, Var};
use num_traits::{One, Zero};

use crate::error::{EngineError, Result};
use crate::pqe::Template;

/// Non-negative multipliers for products of premise rows.
#[derive(Clone, Debug, PartialEq)]
pub struct HandelmanWitness {
    pub degree: u32,
    pub rows: Vec<Poly<Rat>>,
    /// Multisets of row indices (sorted); the empty product is the constant 1.
    pub products: Vec<Vec<usize>>,
    pub multipliers: Vec<Rat>,
}

impl HandelmanWitness {
    /// `conclusion − Σ λ_S ∏_{i∈S} g_i`; zero for a valid witness.
    pub fn residual(&self, conclusion: &Poly<Rat>) -> Poly<Rat> {
        let mut acc = conclusion.clone();
        for (s, l) in self.products.iter().zip(&self.multipliers) {
            if !l.is_zero() {
                acc = acc - product_poly(&self.rows, s).scale(l);
            }
        }
        acc
    }

    pub fn is_valid_for(&self, conclusion: &Poly<Rat>) -> bool {
        self.multipliers.iter().all(|l| *l >= Rat::zero()) && self.residual(conclusion).is_zero()
    }

    pub fn nonzero(&self) -> impl Iterator<Item = (&Vec<usize>, &Rat)> {
        self.products.iter().zip(&self.multipliers).filter(|(_, l)| !l.is_zero())
    }
}

impl fmt::Display for HandelmanWitness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (s, l) in self.nonzero() {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "{}", eqsys_core::scalar::fmt_rat(l))?;
            for i in s {
                write!(f, "*({})", self.rows[*i])?;
            }
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}

/// Premise rows `g_i ≥ 0` of the closure of a polyhedron, constant rows dropped.
pub fn premise_rows(premise: &Polyhedron) -> Vec<Poly<Rat>> {
    premise
        .closure()
        .inequalities
        .iter()
        .filter(|a| !a.is_constant())
        .map(|a| a.to_poly())
        .collect()
}

/// All multisets over `0..m` of size at most `d`, in graded lexicographic order.
pub fn products(m: usize, d: u32) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    let mut frontier = vec![Vec::new()];
    for _ in 0..d {
        let mut next = Vec::new();
        for s in &frontier {
            let start = s.last().copied().unwrap_or(0);
            for i in start..m {
                let mut t: Vec<usize> = s.clone();
                t.push(i);
                next.push(t);
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

pub fn product_poly(rows: &[Poly<Rat>], s: &[usize]) -> Poly<Rat> {
    s.iter()
        .fold(Poly::from_rat(&Rat::one()), |acc, i| &acc * &rows[*i])
}

/// Column indices of one entailment inside a larger LP.
#[derive(Clone, Debug)]
pub struct Encoded {
    pub rows: Vec<Poly<Rat>>,
    pub products: Vec<Vec<usize>>,
    pub lambdas: Vec<usize>,
}

impl Encoded {
    pub fn witness(&self, degree: u32, values: &[Rat]) -> HandelmanWitness {
        HandelmanWitness {
            degree,
            rows: self.rows.clone(),
            products: self.products.clone(),
            multipliers: self.lambdas.iter().map(|j| values[*j].clone()).collect(),
        }
    }
}

/// Adds the coefficient-matching equalities of `premise ⇒ conclusion ≥ 0` to `lp`.
///
/// Parameters appearing in the conclusion must already be columns in `params`;
/// their coefficients must be affine. `slack`, when given, is added to the conclusion.
pub fn encode(
    lp: &mut LinearProgram,
    params: &BTreeMap<Var, usize>,
    premise: &Polyhedron,
    conclusion: &Template,
    degree: u32,
    slack: Option<usize>,
) -> Result<Encoded> {
    let rows = premise_rows(premise);
    let prods = products(rows.len(), degree);
    let polys: Vec<Poly<Rat>> = prods.iter().map(|s| product_poly(&rows, s)).collect();
    let lambdas: Vec<usize> = (0..prods.len())
        .map(|i| lp.add_var(format!("lambda{}", lp.num_vars() + i), false))
        .collect();
    let mut by_mono: BTreeMap<Monomial, Vec<(usize, Rat)>> = BTreeMap::new();
    let mut rhs: BTreeMap<Monomial, Rat> = BTreeMap::new();
    for (m, c) in conclusion.terms() {
        let row = by_mono.entry(m.clone()).or_default();
        let (lin, constant) = c
            .linear_part()
            .ok_or_else(|| EngineError::NonLinearParameters(format!("{c}")))?;
        for (v, a) in lin {
            let col = *params
                .get(&v)
                .ok_or_else(|| EngineError::Invalid(format!("unknown parameter {v}")))?;
            row.push((col, a));
        }
        *rhs.entry(m.clone()).or_insert_with(Rat::zero) -= constant;
    }
    for (p, l) in polys.iter().zip(&lambdas) {
        for (m, c) in p.terms() {
            by_mono.entry(m.clone()).or_default().push((*l, -c.clone()));
        }
    }
    if let Some(s) = slack {
        by_mono.entry(Monomial::one()).or_default().push((s, Rat::one()));
    }
    for (m, row) in by_mono {
        let b = rhs.remove(&m).unwrap_or_else(Rat::zero);
        lp.add_constraint(row, Relation::Eq, b);
    }
    Ok(Encoded {
        rows,
        products: prods,
        lambdas,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use eqsys_core::lp::LpOutcome;
    use eqsys_core::text::parse_cond;
    use eqsys_core::Domain;

    fn poly(s: &str) -> Poly<Rat> {
        eqsys_core::text::parse_expr(s).unwrap().to_poly().unwrap()
    }

    fn premise(s: &str) -> Polyhedron {
        let pieces = parse_cond(s).unwrap().to_bool_expr().unwrap().dnf(&Domain::empty());
        assert_eq!(pieces.len(), 1);
        pieces[0].clone()
    }

    fn solve(pre: &str, concl: &str, d: u32) -> Option<HandelmanWitness> {
        let mut lp = LinearProgram::new();
        let c = poly(concl);
        let t: Template = c.map_coeffs(Poly::from_rat);
        let enc = encode(&mut lp, &BTreeMap::new(), &premise(pre), &t, d, None).unwrap();
        match lp.solve(None).unwrap() {
            LpOutcome::Optimal { values, .. } => {
                let w = enc.witness(d, &values);
                assert!(w.is_valid_for(&c));
                Some(w)
            }
            _ => None,
        }
    }

    #[test]
    fn multiset_counts() {
        assert_eq!(products(2, 2).len(), 6);
        assert_eq!(products(3, 3).len(), 20);
        assert_eq!(products(0, 4), vec![Vec::<usize>::new()]);
    }

    #[test]
    fn linear_entailment() {
        let w = solve("x >= 0", "x + 1", 1).unwrap();
        assert_eq!(w.multipliers, vec![Rat::one(), Rat::one()]);
    }

    #[test]
    fn degenerate_premise() {
        assert!(solve("x >= 0 && -x >= 0", "x", 1).is_some());
    }

    #[test]
    fn needs_enough_degree() {
        assert!(solve("x >= 1", "x^2 - 1", 1).is_none());
        assert!(solve("x >= 1", "x^2 - 1", 2).is_some());
    }
}
