//! Conditional weakest preexpectations: `cwp ≥ l₁ / (1 − l₂)`.

use std::fmt::Write as _;

use certificate_engine::numeric::{eval_witness, NumericCertificate};
use certificate_engine::{check_certificate, check_numeric, check_upper, parse_certificate, CheckOptions, Direction};
use eqsys_core::eval::eval_formula;
use eqsys_core::scalar::fmt_rat;
use eqsys_core::text::parse_expr;
use eqsys_core::{CoreError, Ext, NormalFormula, QueriedEquationSystem, QueryRelation, Rat, WitnessAssignment};
use num_traits::{One, Zero};
use oracle::TruncationSpec;
use pgcl_frontend::{parse_pgcl, translate_cwp, Translation};

use crate::commands::{grid_states, Outcome};
use crate::error::{CliError, Result};

/// `l₁ / (1 − l₂)`, refused unless `cwp₂` has a validated upper bound `u₂ < 1`.
pub fn assemble(l1: &Rat, l2: &Rat, u2: Option<&Rat>) -> Result<Rat> {
    let u2 = u2.ok_or_else(|| CliError::DivergentNormalization("no validated upper bound".into()))?;
    if *u2 >= Rat::one() {
        return Err(CliError::DivergentNormalization(format!("upper bound {} is not below 1", fmt_rat(u2))));
    }
    if l2 > u2 {
        return Err(CliError::Input(format!(
            "lower bound {} exceeds upper bound {} for cwp₂",
            fmt_rat(l2),
            fmt_rat(u2)
        )));
    }
    Ok(l1.clone() / (Rat::one() - l2.clone()))
}

#[derive(Clone, Debug)]
pub struct CwpReport {
    pub outcome: Outcome,
    pub l1: Option<Rat>,
    pub l2: Option<Rat>,
    pub u2: Option<Rat>,
    pub bound: Option<Rat>,
    pub text: String,
}

#[derive(Clone, Debug, Default)]
pub struct CwpArgs {
    pub post: String,
    pub init: Vec<Rat>,
    pub cert1: String,
    pub cert2: String,
    pub upper2: Option<String>,
    /// Check closed-form lower certificates pointwise on this grid.
    pub numeric: Option<TruncationSpec>,
}

fn closed(t: &Translation, init: &[Rat]) -> Result<(QueriedEquationSystem, NormalFormula)> {
    let f = t.at(init)?;
    let q = t.query(init, QueryRelation::Ge, Rat::zero())?;
    Ok((q, f))
}

fn value_at(f: &NormalFormula, a: &dyn eqsys_core::Assignment<Rat>) -> Result<Rat> {
    match eval_formula(f, &[], &[], a)? {
        Ext::Fin(v) => Ok(v),
        Ext::Inf => Err(CliError::Input("certificate value at the initial state is infinite".into())),
    }
}

/// Validates a lower certificate and returns `η` at the initial state.
fn lower_value(q: &QueriedEquationSystem, f: &NormalFormula, src: &str, numeric: Option<&TruncationSpec>) -> Result<std::result::Result<Rat, String>> {
    match numeric {
        Some(spec) => {
            let cert = NumericCertificate::parse(src, &q.system)?;
            let v = check_numeric(q, &cert, &grid_states(q, spec)?)?;
            if !v.is_consistent() {
                return Ok(Err(v.to_string()));
            }
            let eta = |p: &str, args: &[Rat]| -> eqsys_core::Result<Ext<Rat>> {
                eval_witness(&q.system, &cert.eta, p, args)
                    .map(Ext::Fin)
                    .map_err(|e| CoreError::Invalid(e.to_string()))
            };
            Ok(Ok(value_at(f, &eta)?))
        }
        None => {
            let cert = parse_certificate(src, &q.system)?;
            if cert.direction != Direction::Lower {
                return Err(CliError::Input("expected a lower certificate".into()));
            }
            let r = check_certificate(q, &cert, &CheckOptions::default())?;
            if !r.verdict.is_valid() {
                return Ok(Err(r.verdict.to_string()));
            }
            let a = WitnessAssignment {
                system: &q.system,
                witness: &cert.eta,
            };
            Ok(Ok(value_at(f, &a)?))
        }
    }
}

/// Validates certificates for both cwp systems of a program and assembles the bound.
pub fn cmd_cwp(program_src: &str, args: &CwpArgs) -> Result<CwpReport> {
    let prog = parse_pgcl(program_src)?;
    let (t1, t2) = translate_cwp(&prog, &parse_expr(&args.post)?)?;
    let (q1, f1) = closed(&t1, &args.init)?;
    let (q2, f2) = closed(&t2, &args.init)?;
    let mut text = String::new();
    let mut report = CwpReport {
        outcome: Outcome::Valid,
        l1: None,
        l2: None,
        u2: None,
        bound: None,
        text: String::new(),
    };
    let l1 = lower_value(&q1, &f1, &args.cert1, args.numeric.as_ref())?;
    let l2 = lower_value(&q2, &f2, &args.cert2, args.numeric.as_ref())?;
    for (name, v) in [("l1", &l1), ("l2", &l2)] {
        match v {
            Ok(x) => {
                let _ = writeln!(text, "{name} = {}", fmt_rat(x));
            }
            Err(why) => {
                let _ = writeln!(text, "{name}: certificate rejected: {why}");
                if report.outcome == Outcome::Valid {
                    report.outcome = Outcome::Unknown(format!("{name}: {why}"));
                }
            }
        }
    }
    if let Some(src) = &args.upper2 {
        let cert = parse_certificate(src, &q2.system)?;
        let upper = q2.with_queries(Vec::new());
        let r = check_upper(&upper, &cert.u, &CheckOptions::default())?;
        if r.verdict.is_valid() {
            let a = WitnessAssignment {
                system: &q2.system,
                witness: &cert.u,
            };
            let u2 = value_at(&f2, &a)?;
            let _ = writeln!(text, "u2 = {}", fmt_rat(&u2));
            report.u2 = Some(u2);
        } else {
            let _ = writeln!(text, "u2: certificate rejected: {}", r.verdict);
        }
    }
    report.l1 = l1.ok();
    report.l2 = l2.ok();
    if let (Some(l1), Some(l2), Outcome::Valid) = (&report.l1, &report.l2, &report.outcome) {
        let b = assemble(l1, l2, report.u2.as_ref())?;
        let _ = writeln!(text, "cwp >= l1/(1 - l2) = {}", fmt_rat(&b));
        report.bound = Some(b);
    }
    let _ = writeln!(text, "verdict: {}", report.outcome.label());
    report.text = text;
    Ok(report)
}
