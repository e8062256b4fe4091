//! Concrete syntax.
//!
//! ```text
//! program ::= decl* cmd
//! decl    ::= ("int" | "bool" | "real") ident ("," ident)* ";"
//! cmd     ::= stmt (";" stmt)* ";"?
//! stmt    ::= "skip" | "diverge" | "tick" ("(" rat ")")?
//!           | "score" "(" expr ")" | "observe" "(" cond ")"
//!           | ident ("," ident)* ":=" rhs ("," rhs)*
//!           | "if" "(" cond ")" block ("else" (block | stmt))?
//!           | "while" "(" (cond | "random_bool" "(" expr ")") ")" block
//!           | block (("[" expr "]" | "<>") block)*
//! block   ::= "{" cmd? "}"
//! rhs     ::= expr | "true" | "false"
//! ```
//! Undeclared variables are integers, ordered by first use.

use std::collections::BTreeSet;

use eqsys_core::text::{Parser, Tok};
use eqsys_core::{var, BoolExpr, Cond, Domain, Expr, LinearInequality, Polyhedron, Rat, Sort, Var};
use num_traits::{One, Zero};

use crate::ast::{Cmd, LoopGuard, PgclProgram, Span};
use crate::error::{FrontendError, Result};

const STATEMENT_KEYWORDS: &[&str] = &[
    "skip", "diverge", "tick", "score", "observe", "while", "if", "else", "int", "bool", "real", "random_bool",
];

struct ProgramParser {
    p: Parser,
    decls: Vec<(Var, Sort)>,
    used: Vec<Var>,
}

impl ProgramParser {
    fn span(&mut self) -> Span {
        let (line, col) = self.p.position();
        Span { line, col }
    }

    fn syntax(&mut self, msg: impl Into<String>) -> FrontendError {
        self.p.error(msg).into()
    }

    fn note_expr(&mut self, e: &Expr) {
        let mut vs = Vec::new();
        expr_vars(e, &mut vs);
        self.note(vs);
    }

    fn note_cond(&mut self, c: &Cond) {
        let mut vs = Vec::new();
        cond_vars(c, &mut vs);
        self.note(vs);
    }

    fn note(&mut self, vs: Vec<Var>) {
        for v in vs {
            if !self.used.contains(&v) {
                self.used.push(v);
            }
        }
    }

    fn variable(&mut self) -> Result<Var> {
        let name = self.p.ident()?;
        if STATEMENT_KEYWORDS.contains(&name.as_str()) {
            return Err(self.syntax(format!("keyword {name} used as a variable")));
        }
        let v = var(&name);
        self.note(vec![v.clone()]);
        Ok(v)
    }

    fn expr(&mut self) -> Result<Expr> {
        let e = self.p.expr()?;
        if e.has_calls() {
            return Err(self.syntax("predicate calls are not allowed in programs"));
        }
        self.note_expr(&e);
        Ok(e)
    }

    fn cond(&mut self) -> Result<Cond> {
        let c = self.p.cond()?;
        self.note_cond(&c);
        Ok(c)
    }

    fn decls(&mut self) -> Result<()> {
        loop {
            let sort = if self.p.eat_kw("int") || self.p.eat_kw("bool") {
                Sort::Int
            } else if self.p.eat_kw("real") {
                Sort::Real
            } else {
                return Ok(());
            };
            loop {
                let v = var(&self.p.ident()?);
                if self.decls.iter().any(|(w, _)| *w == v) {
                    return Err(self.syntax(format!("variable {v} declared twice")));
                }
                self.decls.push((v, sort));
                if !self.p.eat(",") {
                    break;
                }
            }
            self.p.expect(";")?;
        }
    }

    fn at_block_end(&mut self) -> bool {
        self.p.at("}") || self.p.at_eof()
    }

    fn cmd(&mut self) -> Result<Cmd> {
        let mut cs = vec![self.stmt()?];
        while self.p.eat(";") {
            if self.at_block_end() {
                break;
            }
            cs.push(self.stmt()?);
        }
        Ok(if cs.len() == 1 { cs.pop().unwrap() } else { Cmd::Seq(cs) })
    }

    fn block(&mut self) -> Result<Cmd> {
        self.p.expect("{")?;
        let c = if self.p.at("}") { Cmd::Skip } else { self.cmd()? };
        self.p.expect("}")?;
        Ok(c)
    }

    fn probability(&mut self) -> Result<(Expr, Span)> {
        let span = self.span();
        let p = self.expr()?;
        if let Some(c) = p.to_poly().ok().and_then(|q| q.rat_const()) {
            if c < Rat::zero() || c > Rat::one() {
                return Err(type_error(span, format!("probability {c} outside [0,1]")));
            }
            return Ok((Expr::Const(c), span));
        }
        Ok((p, span))
    }

    fn stmt(&mut self) -> Result<Cmd> {
        let span = self.span();
        if self.p.at("{") {
            let mut c = self.block()?;
            loop {
                if self.p.at("[") {
                    let span = self.span();
                    self.p.bump();
                    let (p, _) = self.probability()?;
                    self.p.expect("]")?;
                    let right = self.block()?;
                    c = Cmd::Prob {
                        p,
                        left: Box::new(c),
                        right: Box::new(right),
                        span,
                    };
                } else if self.p.eat("<>") {
                    let right = self.block()?;
                    c = Cmd::Nondet(Box::new(c), Box::new(right));
                } else {
                    return Ok(c);
                }
            }
        }
        let kw = match self.p.peek() {
            Tok::Ident(s) => s.clone(),
            t => {
                let t = format!("{t:?}");
                return Err(self.syntax(format!("expected a statement, found {t}")));
            }
        };
        match kw.as_str() {
            "skip" => {
                self.p.bump();
                Ok(Cmd::Skip)
            }
            "diverge" => {
                self.p.bump();
                Ok(Cmd::diverge(span))
            }
            "tick" => {
                self.p.bump();
                if self.p.eat("(") {
                    let a = self.p.rational()?;
                    self.p.expect(")")?;
                    Ok(Cmd::Tick(a))
                } else {
                    Ok(Cmd::Tick(Rat::one()))
                }
            }
            "score" => {
                self.p.bump();
                self.p.expect("(")?;
                let (weight, span) = self.probability()?;
                self.p.expect(")")?;
                Ok(Cmd::Score { weight, span })
            }
            "observe" => {
                self.p.bump();
                self.p.expect("(")?;
                let c = self.cond()?;
                self.p.expect(")")?;
                Ok(Cmd::observe(c, span))
            }
            "if" => {
                self.p.bump();
                self.p.expect("(")?;
                let cond = self.cond()?;
                self.p.expect(")")?;
                let then = self.block()?;
                let els = if self.p.eat_kw("else") {
                    if self.p.at("{") {
                        self.block()?
                    } else {
                        self.stmt()?
                    }
                } else {
                    Cmd::Skip
                };
                Ok(Cmd::If {
                    cond,
                    then: Box::new(then),
                    els: Box::new(els),
                })
            }
            "while" => {
                self.p.bump();
                self.p.expect("(")?;
                let guard = if self.p.eat_kw("random_bool") {
                    self.p.expect("(")?;
                    let (p, _) = self.probability()?;
                    self.p.expect(")")?;
                    LoopGuard::Flip(p)
                } else {
                    LoopGuard::Cond(self.cond()?)
                };
                self.p.expect(")")?;
                let body = self.block()?;
                Ok(Cmd::While {
                    guard,
                    body: Box::new(body),
                    span,
                })
            }
            _ => self.assignment(),
        }
    }

    fn rhs(&mut self) -> Result<Expr> {
        if self.p.eat_kw("true") {
            Ok(Expr::int(1))
        } else if self.p.eat_kw("false") {
            Ok(Expr::int(0))
        } else {
            self.expr()
        }
    }

    fn assignment(&mut self) -> Result<Cmd> {
        let mut lhs = vec![self.variable()?];
        while self.p.eat(",") {
            lhs.push(self.variable()?);
        }
        self.p.expect(":=")?;
        let mut rhs = vec![self.rhs()?];
        while self.p.eat(",") {
            rhs.push(self.rhs()?);
        }
        if rhs.len() == 1 && lhs.len() > 1 {
            rhs = vec![rhs[0].clone(); lhs.len()];
        }
        if rhs.len() != lhs.len() {
            return Err(self.syntax(format!("{} variables but {} values", lhs.len(), rhs.len())));
        }
        let distinct: BTreeSet<&Var> = lhs.iter().collect();
        if distinct.len() != lhs.len() {
            return Err(self.syntax("variable assigned twice in one assignment"));
        }
        Ok(Cmd::Assign(lhs.into_iter().zip(rhs).collect()))
    }
}

fn type_error(span: Span, msg: String) -> FrontendError {
    FrontendError::Type {
        line: span.line,
        col: span.col,
        msg,
    }
}

pub fn expr_vars(e: &Expr, out: &mut Vec<Var>) {
    let mut push = |v: &Var| {
        if !out.contains(v) {
            out.push(v.clone());
        }
    };
    match e {
        Expr::Const(_) => {}
        Expr::Var(v) => push(v),
        Expr::Call(_, args) | Expr::Min(args) | Expr::Max(args) => args.iter().for_each(|a| expr_vars(a, out)),
        Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
            expr_vars(a, out);
            expr_vars(b, out);
        }
        Expr::Neg(a) | Expr::Pow(a, _) => expr_vars(a, out),
        Expr::If(c, a, b) => {
            cond_vars(c, out);
            expr_vars(a, out);
            expr_vars(b, out);
        }
        Expr::Iverson(c) => cond_vars(c, out),
        Expr::Cases(cs) => {
            for (c, e) in cs {
                cond_vars(c, out);
                expr_vars(e, out);
            }
        }
    }
}

pub fn cond_vars(c: &Cond, out: &mut Vec<Var>) {
    match c {
        Cond::Const(_) => {}
        Cond::Cmp(a, _, b) => {
            expr_vars(a, out);
            expr_vars(b, out);
        }
        Cond::Truthy(e) => expr_vars(e, out),
        Cond::Not(c) => cond_vars(c, out),
        Cond::And(cs) | Cond::Or(cs) => cs.iter().for_each(|c| cond_vars(c, out)),
    }
}

/// Parses a program and checks that every probability and score weight lies in `[0,1]`.
///
/// State-dependent probabilities must be linear; they are checked against the
/// guards known to hold at that point of the program.
pub fn parse_pgcl(src: &str) -> Result<PgclProgram> {
    let mut pp = ProgramParser {
        p: Parser::new(src)?,
        decls: Vec::new(),
        used: Vec::new(),
    };
    pp.decls()?;
    let body = if pp.p.at_eof() { Cmd::Skip } else { pp.cmd()? };
    if !pp.p.at_eof() {
        return Err(pp.syntax("trailing input after program"));
    }
    let mut vars = pp.decls.clone();
    for v in pp.used {
        if !vars.iter().any(|(w, _)| *w == v) {
            vars.push((v, Sort::Int));
        }
    }
    let prog = PgclProgram {
        domain: Domain::new(vars),
        body,
    };
    check_probabilities(&prog.body, &prog.domain, &mut Vec::new())?;
    Ok(prog)
}

fn assigned(c: &Cmd, out: &mut Vec<Var>) {
    if let Cmd::Assign(xs) = c {
        for (v, _) in xs {
            if !out.contains(v) {
                out.push(v.clone());
            }
        }
    }
    for c in c.children() {
        assigned(c, out);
    }
}

fn forget(ctx: &mut Vec<Cond>, c: &Cmd) {
    let mut vs = Vec::new();
    assigned(c, &mut vs);
    ctx.retain(|g| {
        let mut gv = Vec::new();
        cond_vars(g, &mut gv);
        gv.iter().all(|v| !vs.contains(v))
    });
}

fn check_probabilities(c: &Cmd, domain: &Domain, ctx: &mut Vec<Cond>) -> Result<()> {
    match c {
        Cmd::Skip | Cmd::Tick(_) => Ok(()),
        Cmd::Assign(_) => {
            forget(ctx, c);
            Ok(())
        }
        Cmd::Seq(cs) => cs.iter().try_for_each(|c| check_probabilities(c, domain, ctx)),
        Cmd::Prob { p, left, right, span } => {
            in_unit_interval(p, ctx, domain, *span)?;
            check_probabilities(left, domain, &mut ctx.clone())?;
            check_probabilities(right, domain, &mut ctx.clone())?;
            forget(ctx, c);
            Ok(())
        }
        Cmd::Score { weight, span } => in_unit_interval(weight, ctx, domain, *span),
        Cmd::Nondet(l, r) => {
            check_probabilities(l, domain, &mut ctx.clone())?;
            check_probabilities(r, domain, &mut ctx.clone())?;
            forget(ctx, c);
            Ok(())
        }
        Cmd::If { cond, then, els } => {
            let mut t = ctx.clone();
            t.push(cond.clone());
            check_probabilities(then, domain, &mut t)?;
            let mut e = ctx.clone();
            e.push(Cond::Not(Box::new(cond.clone())));
            check_probabilities(els, domain, &mut e)?;
            forget(ctx, c);
            Ok(())
        }
        Cmd::While { guard, body, span } => {
            forget(ctx, c);
            let mut inner = ctx.clone();
            match guard {
                LoopGuard::Cond(g) => inner.push(g.clone()),
                LoopGuard::Flip(p) => in_unit_interval(p, ctx, domain, *span)?,
            }
            check_probabilities(body, domain, &mut inner)?;
            if let LoopGuard::Cond(g) = guard {
                ctx.push(Cond::Not(Box::new(g.clone())));
            }
            Ok(())
        }
    }
}

fn in_unit_interval(p: &Expr, ctx: &[Cond], domain: &Domain, span: Span) -> Result<()> {
    if matches!(p, Expr::Iverson(_)) {
        return Ok(());
    }
    let poly = p
        .to_poly()
        .map_err(|_| type_error(span, "probability must be a polynomial".into()))?;
    if let Some(c) = poly.rat_const() {
        return if c < Rat::zero() || c > Rat::one() {
            Err(type_error(span, format!("probability {c} outside [0,1]")))
        } else {
            Ok(())
        };
    }
    let below = LinearInequality::from_poly(&-poly.clone(), true)
        .map_err(|_| type_error(span, "state-dependent probability must be linear".into()))?;
    let above = LinearInequality::from_poly(&(poly - eqsys_core::Poly::from_rat(&Rat::one())), true)?;
    let context = BoolExpr::And(ctx.iter().map(|c| c.to_bool_expr()).collect::<eqsys_core::Result<_>>()?);
    for piece in context.dnf(domain) {
        for bad in [&below, &above] {
            let region: Polyhedron = piece.with(bad.clone()).integerize(domain);
            if region.is_satisfiable() {
                return Err(type_error(
                    span,
                    "probability not provably within [0,1] under the enclosing guards".into(),
                ));
            }
        }
    }
    Ok(())
}
