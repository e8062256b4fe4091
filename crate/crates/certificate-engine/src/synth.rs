//! Template-based synthesis of certificates.
//!
//! Witness templates mirror the branch guards of `E′`; every piece is a dense
//! polynomial with one unknown per monomial. Entailments are reduced with
//! Handelman products into one exact LP. When `E′` carries unknown weights the
//! conditions become bilinear and are solved by alternating between the
//! witnesses and the weights, minimising a shared slack.

use std::collections::{BTreeMap, BTreeSet};
use std::time::Instant;

use eqsys_core::lp::{LinearProgram, LpOutcome, Relation};
use eqsys_core::poly::monomials_up_to;
use eqsys_core::{
    CoreError, EquationSystem, LinearInequality, PiecewisePoly, Poly, Polyhedron, QueriedEquationSystem, Rat,
    Var, Witness,
};
use num_traits::{One, Zero};

use crate::certificate::{Certificate, EPrime};
use crate::check::{check_certificate, check_upper, pqe_degree, CheckOptions, CheckReport};
use crate::error::{EngineError, Result};
use crate::handelman::encode;
use crate::pqe::{build_lower, build_upper, concrete, instantiate, lift_witness, FactorKey, Factors, Pqe, Roles, Template};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EPrimeMode {
    /// `E′ = E`.
    Identity,
    /// Unknown factors `a ∈ [0,1]` on every weight.
    Weights,
    /// Weights plus one strengthening inequality on a predicate.
    WeightsAndGuard,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TemplateConfig {
    pub name: String,
    pub deg_u: u32,
    pub deg_r: u32,
    pub deg_eta: u32,
    pub eprime: EPrimeMode,
    /// Extra split of every template on one candidate inequality.
    pub outer_split: bool,
    /// Every conclusion is proved `≥ slack`.
    pub slack: Rat,
}

impl TemplateConfig {
    fn new(name: &str, degs: (u32, u32, u32), eprime: EPrimeMode, outer_split: bool) -> Self {
        TemplateConfig {
            name: name.into(),
            deg_u: degs.0,
            deg_r: degs.1,
            deg_eta: degs.2,
            eprime,
            outer_split,
            slack: Rat::zero(),
        }
    }

    pub fn a() -> Self {
        Self::new("A", (2, 3, 2), EPrimeMode::Identity, false)
    }

    pub fn b() -> Self {
        Self::new("B", (1, 1, 1), EPrimeMode::Identity, false)
    }

    pub fn c1() -> Self {
        Self::new("C1", (1, 1, 1), EPrimeMode::Weights, false)
    }

    pub fn c2() -> Self {
        Self::new("C2", (1, 1, 1), EPrimeMode::WeightsAndGuard, false)
    }

    pub fn c3() -> Self {
        Self::new("C3", (1, 1, 1), EPrimeMode::WeightsAndGuard, true)
    }

    pub fn preset(name: &str) -> Option<Self> {
        match name.to_ascii_uppercase().as_str() {
            "A" => Some(Self::a()),
            "B" => Some(Self::b()),
            "C1" => Some(Self::c1()),
            "C2" => Some(Self::c2()),
            "C3" => Some(Self::c3()),
            _ => None,
        }
    }

    pub fn degree(&self) -> u32 {
        self.deg_u.max(self.deg_r).max(self.deg_eta)
    }
}

#[derive(Clone, Debug)]
pub struct SynthOptions {
    pub handelman_degree: Option<u32>,
    pub deadline: Option<Instant>,
    /// Alternation rounds per restart.
    pub rounds: usize,
    /// Cap on candidate inequalities tried for strengthening or splitting.
    pub max_candidates: usize,
}

impl Default for SynthOptions {
    fn default() -> Self {
        SynthOptions {
            handelman_degree: None,
            deadline: None,
            rounds: 8,
            max_candidates: 24,
        }
    }
}

#[derive(Clone, Debug)]
pub enum SynthOutcome {
    Found {
        certificate: Certificate,
        report: CheckReport,
    },
    Unknown(String),
}

impl SynthOutcome {
    pub fn certificate(&self) -> Option<&Certificate> {
        match self {
            SynthOutcome::Found { certificate, .. } => Some(certificate),
            SynthOutcome::Unknown(_) => None,
        }
    }

    pub fn is_found(&self) -> bool {
        self.certificate().is_some()
    }
}

fn check_deadline(deadline: Option<Instant>) -> Result<()> {
    match deadline {
        Some(d) if Instant::now() >= d => Err(EngineError::Timeout),
        _ => Ok(()),
    }
}

/// Pieces of a template for one predicate: the branch guards, optionally split by `g`.
fn pieces(sys: &EquationSystem, i: usize, split: Option<&Polyhedron>) -> Vec<Polyhedron> {
    let dom = &sys.predicates[i].domain;
    let guards: Vec<Polyhedron> = sys.equations[i].branches.iter().map(|b| b.guard.clone()).collect();
    match split {
        None => guards,
        Some(g) => {
            let g = g.integerize(dom);
            let comp = g.complement(dom);
            let mut out = Vec::new();
            for b in guards {
                for part in std::iter::once(g.clone()).chain(comp.iter().cloned()) {
                    let p = b.and(&part);
                    if p.is_satisfiable() {
                        out.push(p.simplify());
                    }
                }
            }
            out
        }
    }
}

/// Dense piecewise template named `{role}_{pred}_{piece}_{monomial}`.
fn template(
    sys: &EquationSystem,
    role: &str,
    degree: u32,
    splits: &BTreeMap<String, Polyhedron>,
    params: &mut Vec<Var>,
) -> Witness<Poly<Rat>> {
    let mut w = Witness::new();
    for (i, p) in sys.predicates.iter().enumerate() {
        let monos = monomials_up_to(&p.params(), degree);
        let mut branches = Vec::new();
        for (j, g) in pieces(sys, i, splits.get(&p.name)).into_iter().enumerate() {
            let mut t = Template::zero();
            for (k, m) in monos.iter().enumerate() {
                let v = Var::from(format!("{role}_{}_{j}_{k}", p.name));
                t.add_term(m.clone(), Poly::var(&v));
                params.push(v);
            }
            branches.push((g, t));
        }
        w.insert(&p.name, PiecewisePoly::new(branches));
    }
    w
}

fn concretize(w: &Witness<Poly<Rat>>, theta: &BTreeMap<Var, Rat>) -> Witness<Rat> {
    let mut out = Witness::new();
    for (name, pw) in &w.pieces {
        let branches = pw
            .branches
            .iter()
            .map(|(g, t)| (g.clone(), concrete(&instantiate(t, theta)).unwrap_or_default()))
            .collect();
        out.insert(name, PiecewisePoly::new(branches));
    }
    out
}

/// Unknowns of an LP together with their bounds.
#[derive(Default)]
struct Unknowns {
    free: Vec<Var>,
    unit: Vec<Var>,
}

struct Solution {
    values: BTreeMap<Var, Rat>,
    slack: Rat,
}

/// Encodes all entailments into one LP; with `slack`, minimises a common slack.
fn solve(
    pqes: &[Pqe],
    unknowns: &Unknowns,
    base_degree: u32,
    cfg: &TemplateConfig,
    opts: &SynthOptions,
    slack: bool,
) -> Result<Option<Solution>> {
    let mut lp = LinearProgram::new();
    let mut cols = BTreeMap::new();
    for v in &unknowns.free {
        cols.insert(v.clone(), lp.add_var(v.to_string(), true));
    }
    for v in &unknowns.unit {
        let c = lp.add_var(v.to_string(), false);
        lp.add_constraint(vec![(c, Rat::one())], Relation::Le, Rat::one());
        cols.insert(v.clone(), c);
    }
    let s = slack.then(|| lp.add_var("slack", false));
    let eps = Template::constant(Poly::from_rat(&cfg.slack));
    for p in pqes {
        check_deadline(opts.deadline)?;
        let d = pqe_degree(p, base_degree, opts.handelman_degree);
        let conclusion = if cfg.slack.is_zero() {
            p.conclusion.clone()
        } else {
            p.conclusion.clone() - eps.clone()
        };
        encode(&mut lp, &cols, &p.premise, &conclusion, d, s)?;
    }
    if let Some(s) = s {
        lp.set_objective(vec![(s, Rat::one())]);
    }
    let outcome = lp.solve(opts.deadline).map_err(|e| match e {
        CoreError::Timeout => EngineError::Timeout,
        e => EngineError::Core(e),
    })?;
    Ok(match outcome {
        LpOutcome::Optimal { values, .. } => Some(Solution {
            slack: s.map(|s| values[s].clone()).unwrap_or_else(Rat::zero),
            values: cols.iter().map(|(v, c)| (v.clone(), values[*c].clone())).collect(),
        }),
        _ => None,
    })
}

/// Every weight and constant of `E′` that a factor can scale.
pub(crate) fn factor_keys(sys: &EquationSystem) -> Vec<FactorKey> {
    let mut out = Vec::new();
    for (p, f) in sys.predicates.iter().zip(&sys.equations) {
        for (j, b) in f.branches.iter().enumerate() {
            for (m, a) in b.body.atoms.iter().enumerate() {
                let key = |slot| FactorKey {
                    pred: p.name.clone(),
                    branch: j,
                    atom: m,
                    slot,
                };
                if !a.constant.is_zero() {
                    out.push(key(0));
                }
                for (k, c) in a.calls.iter().enumerate() {
                    if !c.weight.is_zero() {
                        out.push(key(k + 1));
                    }
                }
            }
        }
    }
    out
}

pub(crate) fn factor_var(k: &FactorKey) -> Var {
    Var::from(format!("a_{}_{}_{}_{}", k.pred, k.branch, k.atom, k.slot))
}

pub(crate) struct Templates {
    pub(crate) u: Witness<Poly<Rat>>,
    pub(crate) r: Witness<Poly<Rat>>,
    pub(crate) eta: Witness<Poly<Rat>>,
    pub(crate) params: Vec<Var>,
}

pub(crate) fn lower_templates(sys: &EquationSystem, cfg: &TemplateConfig, splits: &BTreeMap<String, Polyhedron>) -> Templates {
    let mut params = Vec::new();
    let u = template(sys, "u", cfg.deg_u, splits, &mut params);
    let r = template(sys, "r", cfg.deg_r, splits, &mut params);
    let eta = template(sys, "eta", cfg.deg_eta, splits, &mut params);
    Templates { u, r, eta, params }
}

fn finish_lower(
    q: &QueriedEquationSystem,
    strengthen: &BTreeMap<String, Polyhedron>,
    factors: BTreeMap<FactorKey, Rat>,
    t: &Templates,
    theta: &BTreeMap<Var, Rat>,
    opts: &SynthOptions,
) -> Result<Option<SynthOutcome>> {
    let eprime = EPrime {
        strengthen: strengthen.clone(),
        schedulers: BTreeMap::new(),
        factors: factors.into_iter().filter(|(_, a)| !a.is_one()).collect(),
    };
    let certificate = Certificate {
        eprime,
        ..Certificate::lower(concretize(&t.u, theta), concretize(&t.r, theta), concretize(&t.eta, theta))
    };
    let copts = CheckOptions {
        degree: opts.handelman_degree,
        deadline: opts.deadline,
        sequential: false,
    };
    let report = check_certificate(q, &certificate, &copts)?;
    Ok(report
        .verdict
        .is_valid()
        .then_some(SynthOutcome::Found { certificate, report }))
}

/// One attempt with fixed strengthening and template splits.
fn attempt_lower(
    q: &QueriedEquationSystem,
    cfg: &TemplateConfig,
    opts: &SynthOptions,
    strengthen: &BTreeMap<String, Polyhedron>,
    splits: &BTreeMap<String, Polyhedron>,
) -> Result<std::result::Result<SynthOutcome, String>> {
    let sys = q.system.strengthen(strengthen);
    let t = lower_templates(&sys, cfg, splits);
    let roles = Roles {
        u: &t.u,
        r: Some(&t.r),
        eta: Some(&t.eta),
    };
    let base = cfg.degree();
    let unknowns = Unknowns {
        free: t.params.clone(),
        unit: Vec::new(),
    };
    if cfg.eprime == EPrimeMode::Identity {
        let pqes = build_lower(&sys, &Factors::new(), roles, &q.queries)?;
        return Ok(match solve(&pqes, &unknowns, base, cfg, opts, false)? {
            Some(sol) => finish_lower(q, strengthen, BTreeMap::new(), &t, &sol.values, opts)?
                .ok_or_else(|| "synthesized witnesses failed the independent check".to_string()),
            None => Err(format!("no certificate within degrees ({}, {}, {})", cfg.deg_u, cfg.deg_r, cfg.deg_eta)),
        });
    }
    let keys = factor_keys(&sys);
    let mut last = String::from("alternation stalled");
    for start in [Rat::one(), Rat::new(1.into(), 2.into())] {
        let mut a: BTreeMap<FactorKey, Rat> = keys.iter().map(|k| (k.clone(), start.clone())).collect();
        let mut best: Option<Rat> = None;
        for _ in 0..opts.rounds {
            check_deadline(opts.deadline)?;
            let fixed: Factors = a.iter().map(|(k, v)| (k.clone(), Poly::from_rat(v))).collect();
            let pqes = build_lower(&sys, &fixed, roles, &q.queries)?;
            let Some(sol) = solve(&pqes, &unknowns, base, cfg, opts, true)? else {
                last = "witness step infeasible".into();
                break;
            };
            if sol.slack.is_zero() {
                if let Some(found) = finish_lower(q, strengthen, a.clone(), &t, &sol.values, opts)? {
                    return Ok(Ok(found));
                }
            }
            let (cu, cr, ce) = (
                lift_witness(&concretize(&t.u, &sol.values)),
                lift_witness(&concretize(&t.r, &sol.values)),
                lift_witness(&concretize(&t.eta, &sol.values)),
            );
            let symbolic: Factors = keys.iter().map(|k| (k.clone(), Poly::var(&factor_var(k)))).collect();
            let pqes = build_lower(
                &sys,
                &symbolic,
                Roles {
                    u: &cu,
                    r: Some(&cr),
                    eta: Some(&ce),
                },
                &q.queries,
            )?;
            let weights = Unknowns {
                free: Vec::new(),
                unit: keys.iter().map(factor_var).collect(),
            };
            let Some(wsol) = solve(&pqes, &weights, base, cfg, opts, true)? else {
                last = "weight step infeasible".into();
                break;
            };
            a = keys
                .iter()
                .map(|k| (k.clone(), wsol.values[&factor_var(k)].clone()))
                .collect();
            if wsol.slack.is_zero() {
                if let Some(found) = finish_lower(q, strengthen, a.clone(), &t, &sol.values, opts)? {
                    return Ok(Ok(found));
                }
            }
            if best.as_ref().is_some_and(|b| wsol.slack >= *b) {
                last = "alternation stalled".into();
                break;
            }
            best = Some(wsol.slack);
        }
    }
    Ok(Err(last))
}

/// Candidate inequalities `v ≤ c` and `v ≥ c` with `c` near the query arguments or zero.
pub fn candidate_guards(q: &QueriedEquationSystem) -> Vec<(String, Polyhedron)> {
    let mut consts: BTreeSet<Rat> = BTreeSet::new();
    consts.insert(Rat::zero());
    for query in &q.queries {
        for b in &query.formula.branches {
            for a in &b.body.atoms {
                for c in &a.calls {
                    consts.extend(c.args.iter().filter_map(Poly::rat_const));
                }
            }
        }
    }
    let consts: BTreeSet<Rat> = consts
        .iter()
        .flat_map(|c| [c - Rat::one(), c.clone(), c + Rat::one()])
        .collect();
    let mut out = Vec::new();
    for p in &q.system.predicates {
        for v in p.params() {
            for c in &consts {
                for sign in [-1, 1] {
                    // sign·(v − c) ≥ 0
                    let s = Rat::from_integer(sign.into());
                    let coeffs = BTreeMap::from([(v.clone(), s.clone())]);
                    let atom = LinearInequality::new(coeffs, -(s * c), false);
                    out.push((p.name.clone(), Polyhedron::from_atoms(vec![atom])));
                }
            }
        }
    }
    out
}

fn options_for(q: &QueriedEquationSystem, enabled: bool, cap: usize) -> Vec<BTreeMap<String, Polyhedron>> {
    let mut out = vec![BTreeMap::new()];
    if enabled {
        out.extend(
            candidate_guards(q)
                .into_iter()
                .take(cap)
                .map(|(p, g)| BTreeMap::from([(p, g)])),
        );
    }
    out
}

/// Searches for a lower-bound certificate for every `≥` query.
pub fn synthesize(q: &QueriedEquationSystem, cfg: &TemplateConfig, opts: &SynthOptions) -> Result<SynthOutcome> {
    if q.system.has_max() {
        return Err(EngineError::Unsupported(
            "max-nondeterminism needs user-supplied scheduler weights; use check mode".into(),
        ));
    }
    let strengthenings = options_for(q, cfg.eprime == EPrimeMode::WeightsAndGuard, opts.max_candidates);
    let splits = options_for(q, cfg.outer_split, opts.max_candidates);
    let mut reason = String::from("no candidate tried");
    for split in &splits {
        for strengthen in &strengthenings {
            check_deadline(opts.deadline)?;
            match attempt_lower(q, cfg, opts, strengthen, split)? {
                Ok(found) => return Ok(found),
                Err(r) => reason = r,
            }
        }
    }
    Ok(SynthOutcome::Unknown(reason))
}

/// Searches for a prefixed point `u` proving every `≤` query.
pub fn synthesize_upper(q: &QueriedEquationSystem, cfg: &TemplateConfig, opts: &SynthOptions) -> Result<SynthOutcome> {
    let mut reason = String::from("no candidate tried");
    for split in options_for(q, cfg.outer_split, opts.max_candidates) {
        check_deadline(opts.deadline)?;
        let mut params = Vec::new();
        let u = template(&q.system, "u", cfg.deg_u, &split, &mut params);
        let pqes = build_upper(&q.system, &u, &q.queries)?;
        let unknowns = Unknowns {
            free: params,
            unit: Vec::new(),
        };
        match solve(&pqes, &unknowns, cfg.deg_u, cfg, opts, false)? {
            Some(sol) => {
                let cu = concretize(&u, &sol.values);
                let copts = CheckOptions {
                    degree: opts.handelman_degree,
                    deadline: opts.deadline,
                    sequential: false,
                };
                let report = check_upper(q, &cu, &copts)?;
                if report.verdict.is_valid() {
                    return Ok(SynthOutcome::Found {
                        certificate: Certificate::upper(cu),
                        report,
                    });
                }
                reason = "synthesized prefixed point failed the independent check".into();
            }
            None => reason = format!("no prefixed point of degree {}", cfg.deg_u),
        }
    }
    Ok(SynthOutcome::Unknown(reason))
}
