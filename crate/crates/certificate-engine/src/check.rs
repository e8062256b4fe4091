//! Checking concrete certificates by discharging every entailment with Handelman multipliers.

use std::collections::BTreeMap;
use std::fmt;
use std::time::Instant;

use eqsys_core::lp::{LinearProgram, LpOutcome};
use eqsys_core::{EquationSystem, QueriedEquationSystem, Rat, Witness};
use rayon::prelude::*;

use crate::certificate::{Certificate, Direction};
use crate::error::{EngineError, Result};
use crate::handelman::{encode, HandelmanWitness};
use crate::pqe::{build_lower, build_upper, concrete, lift_witness, weight_pqes, Factors, Pqe, Roles};

#[derive(Clone, Debug, Default)]
pub struct CheckOptions {
    /// Handelman degree; by default the larger of the witness and conclusion degrees.
    pub degree: Option<u32>,
    pub deadline: Option<Instant>,
    pub sequential: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Status {
    Discharged(HandelmanWitness),
    Failed,
}

#[derive(Clone, Debug)]
pub struct PqeResult {
    pub pqe: Pqe,
    pub degree: u32,
    pub status: Status,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    Valid,
    Unknown(String),
}

impl Verdict {
    pub fn is_valid(&self) -> bool {
        *self == Verdict::Valid
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Valid => write!(f, "valid"),
            Verdict::Unknown(r) => write!(f, "unknown ({r})"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct CheckReport {
    pub verdict: Verdict,
    pub results: Vec<PqeResult>,
    pub notes: Vec<String>,
}

impl CheckReport {
    fn unknown(reason: impl Into<String>) -> Self {
        CheckReport {
            verdict: Verdict::Unknown(reason.into()),
            results: Vec::new(),
            notes: Vec::new(),
        }
    }

    /// Human-readable table of entailments with their multipliers.
    pub fn table(&self) -> String {
        let mut out = String::new();
        for r in &self.results {
            let status = match &r.status {
                Status::Discharged(w) => format!("ok  d={} lambda: {w}", r.degree),
                Status::Failed => format!("FAIL d={}", r.degree),
            };
            out.push_str(&format!("{}\n    {status}\n", r.pqe));
        }
        out
    }
}

/// Decides one concrete entailment by an exact LP over the Handelman multipliers.
pub fn discharge(pqe: &Pqe, degree: u32, deadline: Option<Instant>) -> Result<Status> {
    let conclusion = concrete(&pqe.conclusion)
        .ok_or_else(|| EngineError::Invalid("entailment still has unknowns".into()))?;
    let mut lp = LinearProgram::new();
    let enc = encode(&mut lp, &BTreeMap::new(), &pqe.premise, &pqe.conclusion, degree, None)?;
    match lp.solve(deadline)? {
        LpOutcome::Optimal { values, .. } => {
            let w = enc.witness(degree, &values);
            if w.is_valid_for(&conclusion) {
                Ok(Status::Discharged(w))
            } else {
                Ok(Status::Failed)
            }
        }
        _ => Ok(Status::Failed),
    }
}

pub fn pqe_degree(pqe: &Pqe, base: u32, fixed: Option<u32>) -> u32 {
    fixed.unwrap_or_else(|| base.max(pqe.conclusion.degree()).max(1))
}

/// Discharges all entailments; the verdict names the first failure in input order.
pub fn discharge_all(pqes: Vec<Pqe>, base_degree: u32, opts: &CheckOptions) -> Result<CheckReport> {
    let run = |p: &Pqe| -> Result<PqeResult> {
        let d = pqe_degree(p, base_degree, opts.degree);
        Ok(PqeResult {
            pqe: p.clone(),
            degree: d,
            status: discharge(p, d, opts.deadline)?,
        })
    };
    let results: Vec<PqeResult> = if opts.sequential {
        pqes.iter().map(run).collect::<Result<_>>()?
    } else {
        pqes.par_iter().map(run).collect::<Result<_>>()?
    };
    let verdict = match results.iter().find(|r| r.status == Status::Failed) {
        Some(r) => Verdict::Unknown(format!("entailment not discharged: {}", r.pqe)),
        None => Verdict::Valid,
    };
    Ok(CheckReport {
        verdict,
        results,
        notes: Vec::new(),
    })
}

/// Verifies that every weight and constant of the system is non-negative on its guard.
pub fn check_nonneg_weights(sys: &EquationSystem, opts: &CheckOptions) -> Result<CheckReport> {
    let pqes = weight_pqes(sys);
    discharge_all(pqes, 1, opts)
}

fn witness_degree(ws: &[&Witness<Rat>]) -> u32 {
    ws.iter()
        .flat_map(|w| w.pieces.values())
        .map(|p| p.degree())
        .max()
        .unwrap_or(0)
}

/// Checks the conditions of the lower-bound rule (or of the upper-bound rule for upper certificates).
pub fn check_certificate(q: &QueriedEquationSystem, cert: &Certificate, opts: &CheckOptions) -> Result<CheckReport> {
    if cert.direction == Direction::Upper {
        return check_upper(q, &cert.u, opts);
    }
    let problems = cert.eprime.audit();
    if let Some(p) = problems.first() {
        return Ok(CheckReport::unknown(format!("E' is not an under-approximation: {p}")));
    }
    for (name, w) in [("u", &cert.u), ("r", &cert.r), ("eta", &cert.eta)] {
        if let Some(p) = q.system.predicates.iter().find(|p| !w.pieces.contains_key(&p.name)) {
            return Ok(CheckReport::unknown(format!("missing {name} for {}", p.name)));
        }
    }
    let eprime = match cert.eprime.apply(&q.system) {
        Ok(e) => e,
        Err(EngineError::MissingWitness(m)) => return Ok(CheckReport::unknown(format!("missing {m}"))),
        Err(e) => return Err(e),
    };
    let weights = check_nonneg_weights(&eprime, opts)?;
    if !weights.verdict.is_valid() {
        return Ok(CheckReport::unknown(format!(
            "weights of E' not provably non-negative: {}",
            weights.verdict
        )));
    }
    let (u, r, eta) = (lift_witness(&cert.u), lift_witness(&cert.r), lift_witness(&cert.eta));
    let roles = Roles {
        u: &u,
        r: Some(&r),
        eta: Some(&eta),
    };
    let pqes = build_lower(&eprime, &Factors::new(), roles, &q.queries)?;
    let mut report = discharge_all(pqes, witness_degree(&[&cert.u, &cert.r, &cert.eta]), opts)?;
    if !cert.eprime.is_identity() {
        report.notes.push("E' differs from E; audit of factors and schedulers passed".into());
    }
    Ok(report)
}

/// Knaster–Tarski check: `F[u] ≤ u`, `u ≥ 0` and `F[u] ≤ t` for upper queries.
pub fn check_upper(q: &QueriedEquationSystem, u: &Witness<Rat>, opts: &CheckOptions) -> Result<CheckReport> {
    if let Some(p) = q.system.predicates.iter().find(|p| !u.pieces.contains_key(&p.name)) {
        return Ok(CheckReport::unknown(format!("missing u for {}", p.name)));
    }
    let weights = check_nonneg_weights(&q.system, opts)?;
    if !weights.verdict.is_valid() {
        return Ok(CheckReport::unknown(format!(
            "weights not provably non-negative: {}",
            weights.verdict
        )));
    }
    let lu = lift_witness(u);
    let pqes = build_upper(&q.system, &lu, &q.queries)?;
    discharge_all(pqes, witness_degree(&[u]), opts)
}
