//! SMT-LIB2 (QF_NRA) emission of the full synthesis problem.
//!
//! Unknown template coefficients, `E′` factors and Handelman multipliers are
//! declared as reals; coefficient matching yields polynomial equalities that are
//! bilinear whenever factors multiply template coefficients.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use eqsys_core::poly::Monomial;
use eqsys_core::{Poly, QueriedEquationSystem, Rat, Var};
use num_traits::{Signed, Zero};

use crate::error::Result;
use crate::handelman::{premise_rows, product_poly, products};
use crate::pqe::{build_lower, Factors, Pqe, Roles};
use crate::synth::{factor_keys, factor_var, lower_templates, EPrimeMode, TemplateConfig};
use crate::check::pqe_degree;

/// Exact rational literal: `3.0`, `(- 3.0)`, `(/ 1.0 3.0)`.
pub fn smt_rat(r: &Rat) -> String {
    let abs = r.abs();
    let body = if abs.is_integer() {
        format!("{}.0", abs.numer())
    } else {
        format!("(/ {}.0 {}.0)", abs.numer(), abs.denom())
    };
    if r.is_negative() {
        format!("(- {body})")
    } else {
        body
    }
}

pub fn smt_name(v: &str) -> String {
    format!("|{v}|")
}

/// Polynomial over unknowns in prefix form.
pub fn smt_poly(p: &Poly<Rat>) -> String {
    let terms: Vec<String> = p
        .terms()
        .map(|(m, c)| {
            let mut factors = vec![smt_rat(c)];
            for (v, e) in m.powers() {
                for _ in 0..*e {
                    factors.push(smt_name(v));
                }
            }
            if factors.len() == 1 {
                factors.pop().unwrap()
            } else {
                format!("(* {})", factors.join(" "))
            }
        })
        .collect();
    match terms.len() {
        0 => "0.0".into(),
        1 => terms[0].clone(),
        _ => format!("(+ {})", terms.join(" ")),
    }
}

fn emit_pqe(out: &mut String, idx: usize, p: &Pqe, degree: u32) {
    let rows = premise_rows(&p.premise);
    let prods = products(rows.len(), degree);
    let _ = writeln!(out, "; {}", p.label());
    let mut sums: BTreeMap<Monomial, Vec<String>> = BTreeMap::new();
    for (k, s) in prods.iter().enumerate() {
        let l = smt_name(&format!("lambda_{idx}_{k}"));
        let _ = writeln!(out, "(declare-fun {l} () Real)\n(assert (>= {l} 0.0))");
        for (m, c) in product_poly(&rows, s).terms() {
            sums.entry(m.clone()).or_default().push(format!("(* {} {l})", smt_rat(c)));
        }
    }
    for (m, _) in p.conclusion.terms() {
        sums.entry(m.clone()).or_default();
    }
    for (m, rhs) in sums {
        let lhs = smt_poly(&p.conclusion.coeff(&m));
        let rhs = match rhs.len() {
            0 => "0.0".to_string(),
            1 => rhs[0].clone(),
            _ => format!("(+ {})", rhs.join(" ")),
        };
        let _ = writeln!(out, "(assert (= {lhs} {rhs}))");
    }
}

/// The lower-bound synthesis problem for `cfg` as an SMT-LIB2 script.
pub fn emit_smt(q: &QueriedEquationSystem, cfg: &TemplateConfig, handelman_degree: Option<u32>) -> Result<String> {
    let t = lower_templates(&q.system, cfg, &BTreeMap::new());
    let mut out = String::from("(set-logic QF_NRA)\n");
    for v in &t.params {
        let _ = writeln!(out, "(declare-fun {} () Real)", smt_name(v));
    }
    let mut factors = Factors::new();
    if cfg.eprime != EPrimeMode::Identity {
        for k in factor_keys(&q.system) {
            let v: Var = factor_var(&k);
            let n = smt_name(&v);
            let _ = writeln!(out, "(declare-fun {n} () Real)\n(assert (<= 0.0 {n} 1.0))");
            factors.insert(k, Poly::var(&v));
        }
    }
    let roles = Roles {
        u: &t.u,
        r: Some(&t.r),
        eta: Some(&t.eta),
    };
    let pqes = build_lower(&q.system, &factors, roles, &q.queries)?;
    for (i, p) in pqes.iter().enumerate() {
        let mut p = p.clone();
        if !cfg.slack.is_zero() {
            p.conclusion = p.conclusion - crate::pqe::Template::constant(Poly::from_rat(&cfg.slack));
        }
        emit_pqe(&mut out, i, &p, pqe_degree(&p, cfg.degree(), handelman_degree));
    }
    out.push_str("(check-sat)\n(get-model)\n");
    Ok(out)
}
