//! Certificates, the under-approximation `E′`, and the certificate file format.
//!
//! ```text
//! direction lower
//! strengthen X: x <= 100
//! scheduler X 0: 1/2, 1/2
//! factor X 0 0 1 = 1/2
//! u X = cases { x >= 1 => 6*x; x <= 0 => 0 }
//! r X = cases { x >= 1 => 9*x^2 + 27*x; x <= 0 => 0 }
//! eta X = cases { x >= 1 => 3*x; x <= 0 => 0 }
//! ```
//! Factor keys address the system after strengthening and scheduler resolution.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};

use eqsys_core::formula::{normalize_with_warnings, AffineAtom, Body, BodyKind, Expr};
use eqsys_core::scalar::fmt_rat;
use eqsys_core::text::{Parser, Tok};
use eqsys_core::{EquationSystem, PiecewisePoly, Poly, Polyhedron, Rat, Witness};
use num_traits::{One, Zero};

use crate::error::{EngineError, Result};
use crate::pqe::FactorKey;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Lower,
    Upper,
}

/// Description of `E′`: weight factors, guard strengthening and scheduler weights.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct EPrime {
    pub strengthen: BTreeMap<String, Polyhedron>,
    /// Convex weights replacing `max{A_1, …, A_m}` by `Σ t_m·A_m`, per (predicate, branch).
    pub schedulers: BTreeMap<(String, usize), Vec<Rat>>,
    pub factors: BTreeMap<FactorKey, Rat>,
}

impl EPrime {
    pub fn is_identity(&self) -> bool {
        self.strengthen.is_empty() && self.schedulers.is_empty() && self.factors.values().all(|a| a.is_one())
    }

    /// Checks `a ∈ [0,1]` and that scheduler weights are convex; returns the violations.
    pub fn audit(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (k, a) in &self.factors {
            if *a < Rat::zero() || *a > Rat::one() {
                out.push(format!(
                    "factor {} {} {} {} = {} outside [0,1]",
                    k.pred,
                    k.branch,
                    k.atom,
                    k.slot,
                    fmt_rat(a)
                ));
            }
        }
        for ((p, j), ts) in &self.schedulers {
            let sum = ts.iter().fold(Rat::zero(), |s, t| s + t);
            if ts.iter().any(|t| *t < Rat::zero()) || !sum.is_one() {
                out.push(format!("scheduler weights for {p} branch {j} are not a distribution"));
            }
        }
        out
    }

    /// Builds `E′` from `E`; the result satisfies `⟦E′⟧ ≤ ⟦E⟧` whenever the audit passes.
    pub fn apply(&self, sys: &EquationSystem) -> Result<EquationSystem> {
        let mut out = sys.strengthen(&self.strengthen);
        for (i, p) in out.predicates.clone().iter().enumerate() {
            for (j, b) in out.equations[i].branches.iter_mut().enumerate() {
                if b.body.kind == BodyKind::Max {
                    let ts = self.schedulers.get(&(p.name.clone(), j)).ok_or_else(|| {
                        EngineError::MissingWitness(format!("scheduler weights for {} branch {j}", p.name))
                    })?;
                    if ts.len() != b.body.atoms.len() {
                        return Err(EngineError::Invalid(format!(
                            "scheduler for {} branch {j} has {} weights, expected {}",
                            p.name,
                            ts.len(),
                            b.body.atoms.len()
                        )));
                    }
                    let mut acc = AffineAtom::default();
                    for (t, a) in ts.iter().zip(&b.body.atoms) {
                        acc = acc.add(&a.scale(&Poly::from_rat(t)));
                    }
                    b.body = Body::affine(acc);
                }
                for (m, a) in b.body.atoms.iter_mut().enumerate() {
                    let key = |slot| FactorKey {
                        pred: p.name.clone(),
                        branch: j,
                        atom: m,
                        slot,
                    };
                    if let Some(f) = self.factors.get(&key(0)) {
                        a.constant = a.constant.scale(f);
                    }
                    for (k, c) in a.calls.iter_mut().enumerate() {
                        if let Some(f) = self.factors.get(&key(k + 1)) {
                            c.weight = c.weight.scale(f);
                        }
                    }
                }
            }
        }
        Ok(out)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Certificate {
    pub direction: Direction,
    pub eprime: EPrime,
    pub u: Witness<Rat>,
    pub r: Witness<Rat>,
    pub eta: Witness<Rat>,
}

impl Certificate {
    pub fn lower(u: Witness<Rat>, r: Witness<Rat>, eta: Witness<Rat>) -> Self {
        Certificate {
            direction: Direction::Lower,
            eprime: EPrime::default(),
            u,
            r,
            eta,
        }
    }

    pub fn upper(u: Witness<Rat>) -> Self {
        Certificate {
            direction: Direction::Upper,
            eprime: EPrime::default(),
            u,
            r: Witness::new(),
            eta: Witness::new(),
        }
    }

    pub fn degree(&self) -> u32 {
        [&self.u, &self.r, &self.eta]
            .iter()
            .flat_map(|w| w.pieces.values())
            .map(PiecewisePoly::degree)
            .max()
            .unwrap_or(0)
    }
}

impl fmt::Display for Certificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let dir = match self.direction {
            Direction::Lower => "lower",
            Direction::Upper => "upper",
        };
        writeln!(f, "direction {dir}")?;
        for (p, g) in &self.eprime.strengthen {
            writeln!(f, "strengthen {p}: {g}")?;
        }
        for ((p, j), ts) in &self.eprime.schedulers {
            let ts: Vec<String> = ts.iter().map(fmt_rat).collect();
            writeln!(f, "scheduler {p} {j}: {}", ts.join(", "))?;
        }
        for (k, a) in &self.eprime.factors {
            writeln!(f, "factor {} {} {} {} = {}", k.pred, k.branch, k.atom, k.slot, fmt_rat(a))?;
        }
        for (role, w) in [("u", &self.u), ("r", &self.r), ("eta", &self.eta)] {
            for (p, pw) in &w.pieces {
                writeln!(f, "{role} {p} = {pw}")?;
            }
        }
        Ok(())
    }
}

pub fn print_certificate(c: &Certificate) -> String {
    let mut s = String::new();
    let _ = write!(s, "{c}");
    s
}

fn schema(p: &mut Parser, msg: impl Into<String>) -> EngineError {
    EngineError::Schema(p.error(msg).to_string())
}

fn index(p: &mut Parser) -> Result<usize> {
    match p.bump() {
        Tok::Num(n) => n.parse().map_err(|_| schema(p, "expected an index")),
        _ => Err(schema(p, "expected an index")),
    }
}

/// A witness line before normalisation.
#[derive(Clone, Debug)]
pub struct RawWitness {
    pub role: String,
    pub pred: String,
    pub expr: Expr,
}

/// Parses the E′ and direction entries, leaving witness expressions as written.
pub fn parse_entries(src: &str, sys: &EquationSystem) -> Result<(Certificate, Vec<RawWitness>)> {
    let mut p = Parser::new(src)?;
    p.newlines = true;
    let mut cert = Certificate::lower(Witness::new(), Witness::new(), Witness::new());
    let mut raw: Vec<RawWitness> = Vec::new();
    let mut seen_direction = false;
    loop {
        p.skip_blank_lines();
        if p.at_eof() {
            break;
        }
        let kw = p.ident().map_err(EngineError::from)?;
        match kw.as_str() {
            "direction" => {
                cert.direction = match p.ident()?.as_str() {
                    "lower" => Direction::Lower,
                    "upper" => Direction::Upper,
                    d => return Err(schema(&mut p, format!("unknown direction {d}"))),
                };
                seen_direction = true;
            }
            "strengthen" => {
                let name = p.ident()?;
                p.expect(":")?;
                let c = p.cond()?;
                let dom = &sys.predicate(&name)?.domain;
                let pieces = c.to_bool_expr()?.dnf(dom);
                let g = match pieces.as_slice() {
                    [g] => g.clone(),
                    [] => Polyhedron::bottom(),
                    _ => return Err(schema(&mut p, "strengthening must be a conjunction of linear inequalities")),
                };
                cert.eprime.strengthen.insert(name, g);
            }
            "scheduler" => {
                let name = p.ident()?;
                let j = index(&mut p)?;
                p.expect(":")?;
                let mut ts = vec![p.rational()?];
                while p.eat(",") {
                    ts.push(p.rational()?);
                }
                cert.eprime.schedulers.insert((name, j), ts);
            }
            "factor" => {
                let pred = p.ident()?;
                let branch = index(&mut p)?;
                let atom = index(&mut p)?;
                let slot = index(&mut p)?;
                p.expect("=")?;
                let a = p.rational()?;
                cert.eprime.factors.insert(FactorKey { pred, branch, atom, slot }, a);
            }
            "u" | "r" | "eta" => {
                let pred = p.ident()?;
                p.expect("=")?;
                let expr = p.expr()?;
                sys.predicate(&pred)?;
                if raw.iter().any(|w| w.role == kw && w.pred == pred) {
                    return Err(EngineError::Schema(format!("{kw} {pred} given twice")));
                }
                raw.push(RawWitness { role: kw, pred, expr });
            }
            k => return Err(schema(&mut p, format!("unknown entry {k}"))),
        }
        p.end_of_line()?;
    }
    if !seen_direction {
        return Err(EngineError::Schema("certificate needs a direction line".into()));
    }
    Ok((cert, raw))
}

/// Parses a certificate; witness pieces are normalised over the domains of `sys`
/// and must cover them explicitly.
pub fn parse_certificate(src: &str, sys: &EquationSystem) -> Result<Certificate> {
    let (mut cert, raw) = parse_entries(src, sys)?;
    for RawWitness { role, pred, expr } in raw {
        let domain = &sys.predicate(&pred)?.domain;
        let (f, warnings) = normalize_with_warnings(&expr, domain)?;
        if !warnings.is_empty() {
            return Err(EngineError::Schema(format!(
                "{role} {pred}: pieces do not cover the domain"
            )));
        }
        let mut branches = Vec::new();
        for b in f.branches {
            match (b.body.kind, b.body.atoms.as_slice()) {
                (BodyKind::Affine, [a]) if a.calls.is_empty() => branches.push((b.guard, a.constant.clone())),
                _ => {
                    return Err(EngineError::Schema(format!(
                        "{role} {pred}: witness pieces must be polynomials"
                    )))
                }
            }
        }
        let w = match role.as_str() {
            "u" => &mut cert.u,
            "r" => &mut cert.r,
            _ => &mut cert.eta,
        };
        w.insert(&pred, PiecewisePoly::new(branches));
    }
    Ok(cert)
}
