//! Abstract syntax of pGCL programs.

use std::fmt;

use eqsys_core::{Cond, Domain, Expr, Rat, Var};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Span {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum LoopGuard {
    Cond(Cond),
    /// `random_bool(p)`: continue with probability `p`, re-sampled every iteration.
    Flip(Expr),
}

#[derive(Clone, Debug, PartialEq)]
pub enum Cmd {
    Skip,
    Seq(Vec<Cmd>),
    /// Simultaneous assignment `x₁, …, xₙ := e₁, …, eₙ`.
    Assign(Vec<(Var, Expr)>),
    Prob {
        p: Expr,
        left: Box<Cmd>,
        right: Box<Cmd>,
        span: Span,
    },
    Nondet(Box<Cmd>, Box<Cmd>),
    If {
        cond: Cond,
        then: Box<Cmd>,
        els: Box<Cmd>,
    },
    While {
        guard: LoopGuard,
        body: Box<Cmd>,
        span: Span,
    },
    Tick(Rat),
    Score { weight: Expr, span: Span },
}

impl Cmd {
    /// `while(true){skip}`.
    pub fn diverge(span: Span) -> Cmd {
        Cmd::While {
            guard: LoopGuard::Cond(Cond::Const(true)),
            body: Box::new(Cmd::Skip),
            span,
        }
    }

    pub fn observe(cond: Cond, span: Span) -> Cmd {
        Cmd::Score {
            weight: Expr::Iverson(Box::new(cond)),
            span,
        }
    }

    pub fn children(&self) -> Vec<&Cmd> {
        match self {
            Cmd::Seq(cs) => cs.iter().collect(),
            Cmd::Prob { left, right, .. } | Cmd::Nondet(left, right) => vec![left, right],
            Cmd::If { then, els, .. } => vec![then, els],
            Cmd::While { body, .. } => vec![body],
            _ => Vec::new(),
        }
    }

    pub fn any(&self, pred: &dyn Fn(&Cmd) -> bool) -> bool {
        pred(self) || self.children().into_iter().any(|c| c.any(pred))
    }

    pub fn has_score(&self) -> bool {
        self.any(&|c| matches!(c, Cmd::Score { .. }))
    }

    pub fn has_nondet(&self) -> bool {
        self.any(&|c| matches!(c, Cmd::Nondet(..)))
    }

    pub fn ticks(&self) -> Vec<Rat> {
        let mut out = Vec::new();
        self.collect_ticks(&mut out);
        out
    }

    fn collect_ticks(&self, out: &mut Vec<Rat>) {
        if let Cmd::Tick(a) = self {
            out.push(a.clone());
        }
        for c in self.children() {
            c.collect_ticks(out);
        }
    }

    /// Same command with every tick cost mapped through `f`.
    pub fn map_ticks(&self, f: &dyn Fn(&Rat) -> Rat) -> Cmd {
        let b = |c: &Cmd| Box::new(c.map_ticks(f));
        match self {
            Cmd::Tick(a) => Cmd::Tick(f(a)),
            Cmd::Seq(cs) => Cmd::Seq(cs.iter().map(|c| c.map_ticks(f)).collect()),
            Cmd::Prob { p, left, right, span } => Cmd::Prob {
                p: p.clone(),
                left: b(left),
                right: b(right),
                span: *span,
            },
            Cmd::Nondet(l, r) => Cmd::Nondet(b(l), b(r)),
            Cmd::If { cond, then, els } => Cmd::If {
                cond: cond.clone(),
                then: b(then),
                els: b(els),
            },
            Cmd::While { guard, body, span } => Cmd::While {
                guard: guard.clone(),
                body: b(body),
                span: *span,
            },
            c => c.clone(),
        }
    }
}

/// A parsed program with its variables in declaration (or first-use) order.
#[derive(Clone, Debug, PartialEq)]
pub struct PgclProgram {
    pub domain: Domain,
    pub body: Cmd,
}

impl PgclProgram {
    pub fn vars(&self) -> Vec<Var> {
        self.domain.names()
    }
}
