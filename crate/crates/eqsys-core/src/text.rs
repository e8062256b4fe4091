//! Tokenizer, expression parser and the textual equation-system format.
//!
//! ```text
//! pred X(x:int)
//! X(x) =mu if x > 0 then 2/3*X(x - 1) + 1/3*X(x + 1) + 1 else 0
//! query X(1) >= 3
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::error::{CoreError, Result};
use crate::formula::{normalize_with_warnings, CmpOp, Cond, Expr};
use crate::linear::{Domain, Sort};
use crate::poly::{var, Var};
use crate::scalar::{parse_rat, Rat};
use crate::system::{EquationSystem, Predicate, QueriedEquationSystem, Query, QueryRelation};

#[derive(Clone, Debug, PartialEq)]
pub enum Tok {
    Ident(String),
    Num(String),
    Sym(&'static str),
    Newline,
    Eof,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Token {
    pub tok: Tok,
    pub line: usize,
    pub col: usize,
}

const SYMBOLS: &[&str] = &[
    ":=", "=>", "==", "!=", "<=", ">=", "&&", "||", "<>", "+", "-", "*", "/", "^", "(", ")", "[", "]", "{", "}",
    ",", ";", ":", "=", "<", ">", "!", "@",
];

const KEYWORDS: &[&str] = &["if", "then", "else", "min", "max", "cases", "true", "false"];

pub fn lex(src: &str) -> Result<Vec<Token>> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0, 1, 1);
    while i < chars.len() {
        let c = chars[i];
        let start = (line, col);
        let push = |out: &mut Vec<Token>, tok| {
            out.push(Token {
                tok,
                line: start.0,
                col: start.1,
            })
        };
        if c == '\n' {
            push(&mut out, Tok::Newline);
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '#' || (c == '/' && chars.get(i + 1) == Some(&'/')) {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
            let s = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            let text: String = chars[s..i].iter().collect();
            col += i - s;
            push(&mut out, Tok::Num(text));
            continue;
        }
        if c.is_alphabetic() || c == '_' {
            let s = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            if chars.get(i) == Some(&'@') {
                let mut j = i + 1;
                let d1 = j;
                while j < chars.len() && chars[j].is_ascii_digit() {
                    j += 1;
                }
                if j > d1 && chars.get(j) == Some(&':') {
                    let d2 = j + 1;
                    let mut k = d2;
                    while k < chars.len() && chars[k].is_ascii_digit() {
                        k += 1;
                    }
                    if k > d2 {
                        i = k;
                    }
                }
            }
            let text: String = chars[s..i].iter().collect();
            col += i - s;
            push(&mut out, Tok::Ident(text));
            continue;
        }
        let rest: String = chars[i..(i + 2).min(chars.len())].iter().collect();
        match SYMBOLS.iter().find(|s| rest.starts_with(**s)) {
            Some(s) => {
                push(&mut out, Tok::Sym(s));
                i += s.len();
                col += s.len();
            }
            None => {
                return Err(CoreError::Syntax {
                    line,
                    col,
                    msg: format!("unexpected character {c:?}"),
                })
            }
        }
    }
    out.push(Token {
        tok: Tok::Eof,
        line,
        col,
    });
    Ok(out)
}

/// Recursive-descent parser over tokens, shared with the program front end.
pub struct Parser {
    toks: Vec<Token>,
    pos: usize,
    depth: usize,
    /// Whether newlines outside brackets terminate statements.
    pub newlines: bool,
}

impl Parser {
    pub fn new(src: &str) -> Result<Self> {
        Ok(Parser {
            toks: lex(src)?,
            pos: 0,
            depth: 0,
            newlines: false,
        })
    }

    fn skip_nl(&mut self) {
        if !self.newlines || self.depth > 0 {
            while self.toks[self.pos].tok == Tok::Newline {
                self.pos += 1;
            }
        }
    }

    pub fn peek(&mut self) -> &Tok {
        self.skip_nl();
        &self.toks[self.pos].tok
    }

    pub fn peek_at(&mut self, k: usize) -> &Tok {
        self.skip_nl();
        let mut p = self.pos;
        let mut seen = 0;
        while seen < k && p + 1 < self.toks.len() {
            p += 1;
            if self.toks[p].tok != Tok::Newline {
                seen += 1;
            }
        }
        &self.toks[p].tok
    }

    pub fn position(&mut self) -> (usize, usize) {
        self.skip_nl();
        let t = &self.toks[self.pos];
        (t.line, t.col)
    }

    pub fn bump(&mut self) -> Tok {
        self.skip_nl();
        let t = self.toks[self.pos].tok.clone();
        match &t {
            Tok::Sym("(" | "[" | "{") => self.depth += 1,
            Tok::Sym(")" | "]" | "}") => self.depth = self.depth.saturating_sub(1),
            _ => {}
        }
        if t != Tok::Eof {
            self.pos += 1;
        }
        t
    }

    pub fn at(&mut self, sym: &str) -> bool {
        matches!(self.peek(), Tok::Sym(s) if *s == sym)
    }

    pub fn at_kw(&mut self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    pub fn eat(&mut self, sym: &str) -> bool {
        if self.at(sym) {
            self.bump();
            true
        } else {
            false
        }
    }

    pub fn eat_kw(&mut self, kw: &str) -> bool {
        if self.at_kw(kw) {
            self.bump();
            true
        } else {
            false
        }
    }

    pub fn error(&mut self, msg: impl Into<String>) -> CoreError {
        let (line, col) = self.position();
        CoreError::Syntax {
            line,
            col,
            msg: msg.into(),
        }
    }

    pub fn expect(&mut self, sym: &str) -> Result<()> {
        if self.eat(sym) {
            Ok(())
        } else {
            let found = format!("{:?}", self.peek());
            Err(self.error(format!("expected '{sym}', found {found}")))
        }
    }

    pub fn expect_kw(&mut self, kw: &str) -> Result<()> {
        if self.eat_kw(kw) {
            Ok(())
        } else {
            let found = format!("{:?}", self.peek());
            Err(self.error(format!("expected '{kw}', found {found}")))
        }
    }

    pub fn ident(&mut self) -> Result<String> {
        match self.peek().clone() {
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                self.bump();
                Ok(s)
            }
            t => Err(self.error(format!("expected identifier, found {t:?}"))),
        }
    }

    /// Consumes a statement terminator: newline, `;` or end of input.
    pub fn end_of_line(&mut self) -> Result<()> {
        match self.toks[self.pos].tok.clone() {
            Tok::Newline => {
                self.pos += 1;
                Ok(())
            }
            Tok::Eof => Ok(()),
            _ if self.eat(";") => Ok(()),
            _ => Err(self.error("expected end of line")),
        }
    }

    pub fn skip_blank_lines(&mut self) {
        while self.toks[self.pos].tok == Tok::Newline {
            self.pos += 1;
        }
    }

    pub fn at_eof(&mut self) -> bool {
        *self.peek() == Tok::Eof
    }

    fn save(&self) -> (usize, usize) {
        (self.pos, self.depth)
    }

    fn restore(&mut self, s: (usize, usize)) {
        self.pos = s.0;
        self.depth = s.1;
    }

    pub fn rational(&mut self) -> Result<Rat> {
        let e = self.expr()?;
        e.to_poly()
            .ok()
            .and_then(|p| p.rat_const())
            .ok_or_else(|| self.error("expected a rational constant"))
    }

    pub fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            if self.eat("+") {
                lhs = Expr::add(lhs, self.term()?);
            } else if self.eat("-") {
                lhs = Expr::sub(lhs, self.term()?);
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat("*") {
                lhs = Expr::mul(lhs, self.unary()?);
            } else if self.at("/") {
                self.bump();
                lhs = Expr::Div(Box::new(lhs), Box::new(self.unary()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.eat("-") {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        if self.eat("+") {
            return self.unary();
        }
        let base = self.atom()?;
        if self.eat("^") {
            match self.bump() {
                Tok::Num(n) => {
                    let e: u32 = n.parse().map_err(|_| self.error("exponent must be a natural number"))?;
                    Ok(Expr::Pow(Box::new(base), e))
                }
                _ => Err(self.error("exponent must be a natural number")),
            }
        } else {
            Ok(base)
        }
    }

    fn atom(&mut self) -> Result<Expr> {
        match self.peek().clone() {
            Tok::Num(n) => {
                self.bump();
                Ok(Expr::Const(parse_rat(&n).map_err(|_| self.error(format!("bad number {n}")))?))
            }
            Tok::Sym("(") => {
                self.bump();
                let e = self.expr()?;
                self.expect(")")?;
                Ok(e)
            }
            Tok::Sym("[") => {
                self.bump();
                let c = self.cond()?;
                self.expect("]")?;
                Ok(Expr::Iverson(Box::new(c)))
            }
            Tok::Ident(k) if k == "if" => {
                self.bump();
                let c = self.cond()?;
                self.expect_kw("then")?;
                let a = self.expr()?;
                self.expect_kw("else")?;
                let b = self.expr()?;
                Ok(Expr::ite(c, a, b))
            }
            Tok::Ident(k) if k == "min" || k == "max" => {
                self.bump();
                let close = if self.eat("{") {
                    "}"
                } else {
                    self.expect("(")?;
                    ")"
                };
                let mut es = vec![self.expr()?];
                while self.eat(",") {
                    es.push(self.expr()?);
                }
                self.expect(close)?;
                Ok(if k == "min" { Expr::Min(es) } else { Expr::Max(es) })
            }
            Tok::Ident(k) if k == "cases" => {
                self.bump();
                self.expect("{")?;
                let mut cs = Vec::new();
                while !self.at("}") {
                    let c = self.cond()?;
                    self.expect("=>")?;
                    let e = self.expr()?;
                    cs.push((c, e));
                    if !self.eat(";") {
                        break;
                    }
                }
                self.expect("}")?;
                Ok(Expr::Cases(cs))
            }
            Tok::Ident(_) => {
                let name = self.ident()?;
                if self.at("(") {
                    self.bump();
                    let mut args = Vec::new();
                    if !self.at(")") {
                        args.push(self.expr()?);
                        while self.eat(",") {
                            args.push(self.expr()?);
                        }
                    }
                    self.expect(")")?;
                    Ok(Expr::Call(name, args))
                } else {
                    Ok(Expr::Var(var(&name)))
                }
            }
            t => Err(self.error(format!("unexpected {t:?} in expression"))),
        }
    }

    pub fn cond(&mut self) -> Result<Cond> {
        let mut ds = vec![self.conj()?];
        while self.eat("||") {
            ds.push(self.conj()?);
        }
        Ok(if ds.len() == 1 { ds.pop().unwrap() } else { Cond::Or(ds) })
    }

    fn conj(&mut self) -> Result<Cond> {
        let mut cs = vec![self.cneg()?];
        while self.eat("&&") {
            cs.push(self.cneg()?);
        }
        Ok(if cs.len() == 1 { cs.pop().unwrap() } else { Cond::And(cs) })
    }

    fn cneg(&mut self) -> Result<Cond> {
        if self.eat("!") {
            return Ok(Cond::Not(Box::new(self.cneg()?)));
        }
        if self.eat_kw("true") {
            return Ok(Cond::Const(true));
        }
        if self.eat_kw("false") {
            return Ok(Cond::Const(false));
        }
        if self.at("(") {
            let saved = self.save();
            self.bump();
            if let Ok(c) = self.cond() {
                if self.eat(")") && !self.at_cmp_or_arith() {
                    return Ok(c);
                }
            }
            self.restore(saved);
        }
        self.comparison()
    }

    fn at_cmp_or_arith(&mut self) -> bool {
        ["<", "<=", ">", ">=", "==", "!=", "=", "+", "-", "*", "/", "^"]
            .iter()
            .any(|s| self.at(s))
    }

    fn comparison(&mut self) -> Result<Cond> {
        let lhs = self.expr()?;
        let op = match self.peek() {
            Tok::Sym("<") => CmpOp::Lt,
            Tok::Sym("<=") => CmpOp::Le,
            Tok::Sym(">") => CmpOp::Gt,
            Tok::Sym(">=") => CmpOp::Ge,
            Tok::Sym("==") | Tok::Sym("=") => CmpOp::Eq,
            Tok::Sym("!=") => CmpOp::Ne,
            _ => return Ok(Cond::Truthy(Box::new(lhs))),
        };
        self.bump();
        let rhs = self.expr()?;
        Ok(Cond::cmp(lhs, op, rhs))
    }
}

pub fn parse_expr(src: &str) -> Result<Expr> {
    let mut p = Parser::new(src)?;
    let e = p.expr()?;
    if !p.at_eof() {
        return Err(p.error("trailing input"));
    }
    Ok(e)
}

pub fn parse_cond(src: &str) -> Result<Cond> {
    let mut p = Parser::new(src)?;
    let c = p.cond()?;
    if !p.at_eof() {
        return Err(p.error("trailing input"));
    }
    Ok(c)
}

fn parse_sort(p: &mut Parser) -> Result<Sort> {
    if !p.eat(":") {
        return Ok(Sort::Real);
    }
    match p.ident()?.as_str() {
        "int" | "bool" => Ok(Sort::Int),
        "real" => Ok(Sort::Real),
        s => Err(p.error(format!("unknown sort {s}"))),
    }
}

fn parse_params(p: &mut Parser) -> Result<Vec<(Var, Sort)>> {
    p.expect("(")?;
    let mut params = Vec::new();
    if !p.at(")") {
        loop {
            let name = p.ident()?;
            let sort = parse_sort(p)?;
            params.push((var(&name), sort));
            if !p.eat(",") {
                break;
            }
        }
    }
    p.expect(")")?;
    Ok(params)
}

/// Parses an equation-system file.
pub fn parse_system(src: &str) -> Result<QueriedEquationSystem> {
    let mut p = Parser::new(src)?;
    p.newlines = true;
    let mut decls: BTreeMap<String, Vec<(Var, Sort)>> = BTreeMap::new();
    let mut eqs: Vec<(String, Vec<(Var, Sort)>, Expr)> = Vec::new();
    let mut queries = Vec::new();
    loop {
        p.skip_blank_lines();
        if p.at_eof() {
            break;
        }
        if p.at_kw("pred") && matches!(p.peek_at(1), Tok::Ident(_)) {
            p.bump();
            let name = p.ident()?;
            decls.insert(name, parse_params(&mut p)?);
        } else if p.at_kw("query") && !matches!(p.peek_at(1), Tok::Sym("(")) {
            p.bump();
            let e = p.expr()?;
            let relation = if p.eat(">=") {
                QueryRelation::Ge
            } else if p.eat("<=") {
                QueryRelation::Le
            } else {
                return Err(p.error("expected '>=' or '<=' in query"));
            };
            let bound = p.rational()?;
            queries.push((e, relation, bound));
        } else {
            let name = p.ident()?;
            let params = parse_params(&mut p)?;
            p.expect("=")?;
            p.eat_kw("mu");
            let body = p.expr()?;
            if eqs.iter().any(|(n, _, _)| *n == name) {
                return Err(p.error(format!("second equation for {name}")));
            }
            eqs.push((name, params, body));
        }
        p.end_of_line()?;
    }
    let mut system = EquationSystem::new();
    for (name, params, body) in eqs {
        let params = match decls.remove(&name) {
            Some(decl) if decl.len() != params.len() => {
                return Err(CoreError::ArityMismatch {
                    name,
                    expected: decl.len(),
                    got: params.len(),
                })
            }
            Some(decl) => params
                .into_iter()
                .zip(decl)
                .map(|((v, s), (_, d))| (v, if s == Sort::Real { d } else { s }))
                .collect(),
            None => params,
        };
        let domain = Domain::new(params.clone());
        let (formula, warnings) = normalize_with_warnings(&body, &domain)?;
        system
            .warnings
            .extend(warnings.into_iter().map(|w| format!("{name}: {w}")));
        system.push(Predicate::new(&name, params), formula);
    }
    if let Some(name) = decls.keys().next() {
        return Err(CoreError::Invalid(format!("predicate {name} declared without an equation")));
    }
    let queries = queries
        .into_iter()
        .map(|(e, relation, bound)| {
            Ok(Query {
                formula: crate::formula::normalize(&e, &Domain::empty())?,
                relation,
                bound,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let q = QueriedEquationSystem { system, queries };
    q.validate()?;
    Ok(q)
}

/// `#@ key=value` annotations.
pub fn parse_pragmas(src: &str) -> BTreeMap<String, String> {
    src.lines()
        .filter_map(|l| l.trim().strip_prefix("#@"))
        .flat_map(|l| l.split_whitespace())
        .filter_map(|kv| kv.split_once('='))
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect()
}

pub fn print_system(q: &QueriedEquationSystem) -> String {
    let mut out = String::new();
    for (p, f) in q.system.predicates.iter().zip(&q.system.equations) {
        let decl: Vec<String> = p
            .domain
            .vars
            .iter()
            .map(|(v, s)| format!("{v}:{}", if *s == Sort::Int { "int" } else { "real" }))
            .collect();
        let names: Vec<String> = p.domain.vars.iter().map(|(v, _)| v.to_string()).collect();
        let _ = writeln!(out, "pred {}({})", p.name, decl.join(", "));
        let _ = writeln!(out, "{}({}) =mu {}", p.name, names.join(", "), f);
    }
    for query in &q.queries {
        let _ = writeln!(out, "query {query}");
    }
    out
}
