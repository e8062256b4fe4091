//! `translate`, `check` and `synth`.

use std::fmt::Write as _;
use std::time::{Duration, Instant};

use certificate_engine::numeric::NumericCertificate;
use certificate_engine::{
    check_certificate, check_numeric, emit_smt, synthesize, synthesize_upper, Certificate, CheckOptions,
    CheckReport, Direction, NumericVerdict, SynthOutcome,
};
use eqsys_core::scalar::parse_rat;
use eqsys_core::text::{parse_expr, parse_system, print_system};
use eqsys_core::{QueriedEquationSystem, Query, QueryRelation, Rat};
use pgcl_frontend::{parse_pgcl, translate_cwp, translate_ert_with, translate_rt2, translate_wp_with, Nondet};

use crate::bundle::{parse_bundle, print_bundle};
use crate::config::RunConfig;
use crate::error::{CliError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Property {
    Wp,
    Ert,
    Rt2,
    Cwp,
}

impl std::str::FromStr for Property {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "wp" => Ok(Property::Wp),
            "ert" => Ok(Property::Ert),
            "rt2" => Ok(Property::Rt2),
            "cwp" => Ok(Property::Cwp),
            _ => Err(CliError::Input(format!("unknown property {s:?}"))),
        }
    }
}

/// Parses `>= 3`, `<=1/2`.
pub fn parse_query_flag(s: &str) -> Result<(QueryRelation, Rat)> {
    let s = s.trim();
    let (rel, rest) = if let Some(r) = s.strip_prefix(">=") {
        (QueryRelation::Ge, r)
    } else if let Some(r) = s.strip_prefix("<=") {
        (QueryRelation::Le, r)
    } else {
        return Err(CliError::Input(format!("query {s:?} must start with >= or <=")));
    };
    Ok((rel, parse_rat(rest)?))
}

/// Parses a comma-separated list of rationals.
pub fn parse_state(s: &str) -> Result<Vec<Rat>> {
    if s.trim().is_empty() {
        return Ok(Vec::new());
    }
    s.split(',').map(|x| Ok(parse_rat(x)?)).collect()
}

#[derive(Clone, Debug)]
pub struct TranslateArgs {
    pub property: Property,
    pub post: Option<String>,
    pub init: Vec<Rat>,
    pub queries: Vec<(QueryRelation, Rat)>,
    pub nondet: Nondet,
}

/// Named output files of a translation: one for most properties, two for cwp.
pub type Outputs = Vec<(String, String)>;

fn emit(name: &str, property: &str, t: &pgcl_frontend::Translation, args: &TranslateArgs) -> Result<(String, String)> {
    let mut q = QueriedEquationSystem {
        system: t.system.clone(),
        queries: Vec::new(),
    };
    if !args.queries.is_empty() {
        let formula = t.at(&args.init)?;
        q.queries = args
            .queries
            .iter()
            .map(|(relation, bound)| Query {
                formula: formula.clone(),
                relation: *relation,
                bound: bound.clone(),
            })
            .collect();
    }
    q.validate()?;
    let mut out = format!("#@ property={property}\n");
    for w in &q.system.warnings {
        let _ = writeln!(out, "# warning: {w}");
    }
    out.push_str(&print_system(&q));
    Ok((name.to_string(), out))
}

/// Translates a pGCL program into its queried equation system(s).
pub fn cmd_translate(src: &str, args: &TranslateArgs) -> Result<Outputs> {
    let prog = parse_pgcl(src)?;
    let post = || -> Result<eqsys_core::Expr> {
        let text = args.post.as_deref().unwrap_or("1");
        Ok(parse_expr(text)?)
    };
    Ok(match args.property {
        Property::Wp => vec![emit("wp", "wp", &translate_wp_with(&prog, &post()?, args.nondet)?, args)?],
        Property::Ert => vec![emit("ert", "ert", &translate_ert_with(&prog, args.nondet)?, args)?],
        Property::Rt2 => vec![emit("rt2", "rt2", &translate_rt2(&prog)?.second(), args)?],
        Property::Cwp => {
            let (c1, c2) = translate_cwp(&prog, &post()?)?;
            vec![emit("cwp1", "cwp1", &c1, args)?, emit("cwp2", "cwp2", &c2, args)?]
        }
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Outcome {
    Valid,
    Unknown(String),
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        match self {
            Outcome::Valid => 0,
            Outcome::Unknown(_) => 1,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Outcome::Valid => "valid",
            Outcome::Unknown(_) => "unknown",
        }
    }
}

#[derive(Clone, Debug)]
pub struct CheckResult {
    pub outcome: Outcome,
    pub report: String,
    pub reports: Vec<CheckReport>,
}

pub fn queries_for(q: &QueriedEquationSystem, d: Direction) -> QueriedEquationSystem {
    let qs = match d {
        Direction::Lower => q.lower_queries().cloned().collect(),
        Direction::Upper => q.upper_queries().cloned().collect(),
    };
    q.with_queries(qs)
}

pub fn direction_name(d: Direction) -> &'static str {
    match d {
        Direction::Lower => "lower",
        Direction::Upper => "upper",
    }
}

/// Checks every certificate of a bundle against the queries of its direction.
pub fn check_bundle(q: &QueriedEquationSystem, certs: &[Certificate], opts: &CheckOptions) -> Result<CheckResult> {
    let mut report = String::new();
    let mut reports = Vec::new();
    let mut outcome = Outcome::Valid;
    for (i, c) in certs.iter().enumerate() {
        let sub = queries_for(q, c.direction);
        let r = check_certificate(&sub, c, opts)?;
        let _ = writeln!(report, "certificate {i} ({}): {}", direction_name(c.direction), r.verdict);
        report.push_str(&r.table());
        for n in &r.notes {
            let _ = writeln!(report, "note: {n}");
        }
        if let certificate_engine::Verdict::Unknown(why) = &r.verdict {
            if outcome == Outcome::Valid {
                outcome = Outcome::Unknown(format!("certificate {i}: {why}"));
            }
        }
        reports.push(r);
    }
    for d in [Direction::Lower, Direction::Upper] {
        let needed = !queries_for(q, d).queries.is_empty();
        if needed && !certs.iter().any(|c| c.direction == d) && outcome == Outcome::Valid {
            outcome = Outcome::Unknown(format!("no {} certificate for the {} queries", direction_name(d), direction_name(d)));
        }
    }
    let _ = writeln!(report, "verdict: {}", outcome.label());
    Ok(CheckResult {
        outcome,
        report,
        reports,
    })
}

#[derive(Clone, Debug, Default)]
pub struct CheckArgs {
    pub handelman_degree: Option<u32>,
    pub timeout: Option<Duration>,
    /// Check closed-form witnesses pointwise on this grid instead of symbolically.
    pub numeric: Option<oracle::TruncationSpec>,
}

pub fn cmd_check(system_src: &str, cert_src: &str, args: &CheckArgs) -> Result<CheckResult> {
    let q = parse_system(system_src)?;
    if let Some(spec) = &args.numeric {
        let cert = NumericCertificate::parse(cert_src, &q.system)?;
        let v = check_numeric(&q, &cert, &grid_states(&q, spec)?)?;
        let outcome = match &v {
            NumericVerdict::Consistent { .. } => Outcome::Valid,
            v => Outcome::Unknown(v.to_string()),
        };
        return Ok(CheckResult {
            report: format!("{v}\nverdict: {}\n", outcome.label()),
            outcome,
            reports: Vec::new(),
        });
    }
    let certs = parse_bundle(cert_src, &q.system)?;
    let opts = CheckOptions {
        degree: args.handelman_degree,
        deadline: args.timeout.map(|t| Instant::now() + t),
        sequential: false,
    };
    check_bundle(&q, &certs, &opts)
}

#[derive(Clone, Debug)]
pub struct SynthResult {
    pub outcome: Outcome,
    pub certificates: Vec<Certificate>,
    /// Certificate file contents; empty when nothing was found.
    pub bundle: String,
    pub report: String,
    pub smt: Option<String>,
}

/// Synthesizes certificates for all queries and re-validates them from their printed form.
pub fn cmd_synth(system_src: &str, cfg: &RunConfig, want_smt: bool) -> Result<SynthResult> {
    synth_system(&parse_system(system_src)?, cfg, want_smt)
}

pub fn synth_system(q: &QueriedEquationSystem, cfg: &RunConfig, want_smt: bool) -> Result<SynthResult> {
    let start = Instant::now();
    if q.queries.is_empty() {
        return Err(CliError::Input("system has no queries".into()));
    }
    let opts = cfg.synth_options(start);
    let mut certificates = Vec::new();
    let mut report = String::new();
    let mut outcome = Outcome::Valid;
    let lower = queries_for(q, Direction::Lower);
    let upper = queries_for(q, Direction::Upper);
    let smt = if want_smt && !lower.queries.is_empty() {
        Some(emit_smt(&lower, &cfg.template, cfg.handelman_degree)?)
    } else {
        None
    };
    for (d, sub) in [(Direction::Lower, &lower), (Direction::Upper, &upper)] {
        if sub.queries.is_empty() {
            continue;
        }
        let found = match d {
            Direction::Lower => synthesize(sub, &cfg.template, &opts)?,
            Direction::Upper => synthesize_upper(sub, &cfg.template, &opts)?,
        };
        match found {
            SynthOutcome::Found { certificate, .. } => {
                let _ = writeln!(report, "{}: found (config {})", direction_name(d), cfg.template.name);
                certificates.push(certificate);
            }
            SynthOutcome::Unknown(why) => {
                let _ = writeln!(report, "{}: unknown ({why})", direction_name(d));
                if outcome == Outcome::Valid {
                    outcome = Outcome::Unknown(why);
                }
            }
        }
    }
    let bundle = print_bundle(&certificates);
    if !certificates.is_empty() {
        let reparsed = parse_bundle(&bundle, &q.system)?;
        let again = check_bundle(q, &reparsed, &CheckOptions::default())?;
        let all_valid = again.reports.iter().all(|r| r.verdict.is_valid());
        let _ = writeln!(report, "re-check: {}", if all_valid { "valid" } else { "FAILED" });
        if !all_valid {
            outcome = Outcome::Unknown("synthesized certificate failed the independent re-check".into());
        }
    }
    let _ = writeln!(report, "verdict: {}", outcome.label());
    let _ = writeln!(report, "time: {:.3}s", start.elapsed().as_secs_f64());
    Ok(SynthResult {
        outcome,
        certificates,
        bundle,
        report,
        smt,
    })
}

/// States of every predicate inside per-variable integer boxes.
pub fn grid_states(q: &QueriedEquationSystem, spec: &oracle::TruncationSpec) -> Result<Vec<(String, Vec<Rat>)>> {
    let shapes = oracle::Grid::<Rat>::shapes(&q.system, spec)?;
    Ok(shapes
        .iter()
        .flat_map(|s| {
            s.states()
                .map(|x| (s.name.clone(), x.iter().map(|&v| Rat::from_integer(v.into())).collect()))
                .collect::<Vec<_>>()
        })
        .collect())
}
