//! Exact rational linear programming: two-phase simplex with Bland's rule.
//!
//! The tableau is stored as sparse rows. Free variables are eliminated up
//! front by Gaussian pivoting and recovered by back-substitution.

use std::time::Instant;

use num_traits::{One, Signed, Zero};

use crate::error::{CoreError, Result};
use crate::scalar::Rat;

type Row = Vec<(usize, Rat)>;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    Eq,
    Le,
    Ge,
}

#[derive(Clone, Debug)]
pub struct Constraint {
    pub coeffs: Vec<(usize, Rat)>,
    pub relation: Relation,
    pub rhs: Rat,
}

/// `minimize c·x` subject to linear constraints, each variable free or `≥ 0`.
#[derive(Clone, Debug, Default)]
pub struct LinearProgram {
    free: Vec<bool>,
    names: Vec<String>,
    pub constraints: Vec<Constraint>,
    pub objective: Vec<(usize, Rat)>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum LpOutcome {
    Optimal { values: Vec<Rat>, objective: Rat },
    Infeasible,
    Unbounded,
}

impl LpOutcome {
    pub fn values(&self) -> Option<&[Rat]> {
        match self {
            LpOutcome::Optimal { values, .. } => Some(values),
            _ => None,
        }
    }
}

impl LinearProgram {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_var(&mut self, name: impl Into<String>, free: bool) -> usize {
        self.free.push(free);
        self.names.push(name.into());
        self.free.len() - 1
    }

    pub fn num_vars(&self) -> usize {
        self.free.len()
    }

    pub fn is_free(&self, v: usize) -> bool {
        self.free[v]
    }

    pub fn name(&self, v: usize) -> &str {
        &self.names[v]
    }

    pub fn add_constraint(&mut self, coeffs: Vec<(usize, Rat)>, relation: Relation, rhs: Rat) {
        self.constraints.push(Constraint {
            coeffs,
            relation,
            rhs,
        });
    }

    pub fn set_objective(&mut self, coeffs: Vec<(usize, Rat)>) {
        self.objective = coeffs;
    }

    pub fn solve(&self, deadline: Option<Instant>) -> Result<LpOutcome> {
        Solver::new(self).run(deadline)
    }

    /// Checks a candidate point exactly.
    pub fn is_feasible_point(&self, x: &[Rat]) -> bool {
        if x.len() != self.num_vars() {
            return false;
        }
        if (0..x.len()).any(|i| !self.free[i] && x[i].is_negative()) {
            return false;
        }
        self.constraints.iter().all(|c| {
            let lhs: Rat = c
                .coeffs
                .iter()
                .fold(Rat::zero(), |acc, (j, a)| acc + a * &x[*j]);
            match c.relation {
                Relation::Eq => lhs == c.rhs,
                Relation::Le => lhs <= c.rhs,
                Relation::Ge => lhs >= c.rhs,
            }
        })
    }
}

fn normalize(mut row: Row) -> Row {
    row.sort_by_key(|(j, _)| *j);
    let mut out: Row = Vec::with_capacity(row.len());
    for (j, a) in row {
        match out.last_mut() {
            Some((k, b)) if *k == j => *b += a,
            _ => out.push((j, a)),
        }
    }
    out.retain(|(_, a)| !a.is_zero());
    out
}

fn get(row: &Row, j: usize) -> Option<&Rat> {
    row.binary_search_by_key(&j, |(k, _)| *k)
        .ok()
        .map(|i| &row[i].1)
}

/// `a - f * b`.
fn axpy(a: &Row, f: &Rat, b: &Row) -> Row {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut k) = (0, 0);
    while i < a.len() || k < b.len() {
        let ja = a.get(i).map(|e| e.0).unwrap_or(usize::MAX);
        let jb = b.get(k).map(|e| e.0).unwrap_or(usize::MAX);
        if ja < jb {
            out.push(a[i].clone());
            i += 1;
        } else if jb < ja {
            out.push((jb, -(f * &b[k].1)));
            k += 1;
        } else {
            let v = &a[i].1 - f * &b[k].1;
            if !v.is_zero() {
                out.push((ja, v));
            }
            i += 1;
            k += 1;
        }
    }
    out
}

fn scale(row: &mut Row, f: &Rat) {
    for (_, a) in row.iter_mut() {
        *a = &*a * f;
    }
}

struct Definition {
    var: usize,
    row: Row,
    rhs: Rat,
}

struct Solver<'a> {
    lp: &'a LinearProgram,
    ncols: usize,
    rows: Vec<Row>,
    rhs: Vec<Rat>,
    objective: Vec<Rat>,
    objective_const: Rat,
    definitions: Vec<Definition>,
    eliminated: Vec<bool>,
}

impl<'a> Solver<'a> {
    fn new(lp: &'a LinearProgram) -> Self {
        let n = lp.num_vars();
        let mut ncols = n;
        let mut rows = Vec::with_capacity(lp.constraints.len());
        let mut rhs = Vec::with_capacity(lp.constraints.len());
        for c in &lp.constraints {
            let mut row: Row = c.coeffs.clone();
            match c.relation {
                Relation::Eq => {}
                Relation::Le => {
                    row.push((ncols, Rat::one()));
                    ncols += 1;
                }
                Relation::Ge => {
                    row.push((ncols, -Rat::one()));
                    ncols += 1;
                }
            }
            rows.push(normalize(row));
            rhs.push(c.rhs.clone());
        }
        let mut objective = vec![Rat::zero(); ncols];
        for (j, a) in &lp.objective {
            objective[*j] += a;
        }
        Solver {
            lp,
            ncols,
            rows,
            rhs,
            objective,
            objective_const: Rat::zero(),
            definitions: Vec::new(),
            eliminated: vec![false; ncols],
        }
    }

    fn is_free(&self, j: usize) -> bool {
        j < self.lp.num_vars() && self.lp.is_free(j)
    }

    fn eliminate_free(&mut self) {
        for v in 0..self.lp.num_vars() {
            if !self.lp.is_free(v) {
                continue;
            }
            let pick = (0..self.rows.len())
                .filter(|&i| get(&self.rows[i], v).is_some())
                .min_by_key(|&i| (self.rows[i].len(), i));
            let Some(p) = pick else { continue };
            let mut row = self.rows.swap_remove(p);
            let mut b = self.rhs.swap_remove(p);
            let inv = get(&row, v).unwrap().recip();
            scale(&mut row, &inv);
            b *= &inv;
            for i in 0..self.rows.len() {
                if let Some(a) = get(&self.rows[i], v).cloned() {
                    self.rows[i] = axpy(&self.rows[i], &a, &row);
                    self.rhs[i] = &self.rhs[i] - &a * &b;
                }
            }
            let cv = self.objective[v].clone();
            if !cv.is_zero() {
                for (k, a) in &row {
                    self.objective[*k] = &self.objective[*k] - &cv * a;
                }
                self.objective_const += &cv * &b;
            }
            self.eliminated[v] = true;
            self.definitions.push(Definition { var: v, row, rhs: b });
        }
    }

    fn run(mut self, deadline: Option<Instant>) -> Result<LpOutcome> {
        self.eliminate_free();
        let mut keep_rows = Vec::new();
        let mut keep_rhs = Vec::new();
        for (row, b) in std::mem::take(&mut self.rows)
            .into_iter()
            .zip(std::mem::take(&mut self.rhs))
        {
            if row.is_empty() {
                if !b.is_zero() {
                    return Ok(LpOutcome::Infeasible);
                }
                continue;
            }
            if b.is_negative() {
                let mut row = row;
                scale(&mut row, &-Rat::one());
                keep_rows.push(row);
                keep_rhs.push(-b);
            } else {
                keep_rows.push(row);
                keep_rhs.push(b);
            }
        }
        let m = keep_rows.len();
        let mut t = Tableau {
            rows: keep_rows,
            rhs: keep_rhs,
            basis: (0..m).map(|i| self.ncols + i).collect(),
            ncols: self.ncols,
            d: vec![Rat::zero(); self.ncols],
            value: Rat::zero(),
        };
        // Phase 1: minimise the sum of artificials.
        for i in 0..m {
            t.value += &t.rhs[i];
            for (j, a) in &t.rows[i] {
                t.d[*j] -= a;
            }
        }
        if t.iterate(&self.eliminated, deadline)? == Step::Unbounded {
            unreachable!("phase one objective is bounded below by zero");
        }
        if t.value.is_positive() {
            return Ok(LpOutcome::Infeasible);
        }
        t.drive_out_artificials(&self.eliminated);

        // Phase 2.
        t.d = self.objective.clone();
        t.value = self.objective_const.clone();
        for r in 0..t.rows.len() {
            let cb = self.objective[t.basis[r]].clone();
            if cb.is_zero() {
                continue;
            }
            for (k, a) in &t.rows[r] {
                t.d[*k] = &t.d[*k] - &cb * a;
            }
            t.value += &cb * &t.rhs[r];
        }
        // A free variable that appears in no row but in the objective is unbounded.
        for j in 0..self.lp.num_vars() {
            if self.is_free(j) && !self.eliminated[j] && !t.d[j].is_zero() {
                return Ok(LpOutcome::Unbounded);
            }
        }
        if t.iterate(&self.eliminated, deadline)? == Step::Unbounded {
            return Ok(LpOutcome::Unbounded);
        }

        let mut x = vec![Rat::zero(); self.ncols];
        for (r, &b) in t.basis.iter().enumerate() {
            if b < self.ncols {
                x[b] = t.rhs[r].clone();
            }
        }
        for def in self.definitions.iter().rev() {
            let mut v = def.rhs.clone();
            for (k, a) in &def.row {
                if *k != def.var {
                    v -= a * &x[*k];
                }
            }
            x[def.var] = v;
        }
        x.truncate(self.lp.num_vars());
        Ok(LpOutcome::Optimal {
            values: x,
            objective: t.value,
        })
    }
}

#[derive(PartialEq, Eq)]
enum Step {
    Optimal,
    Unbounded,
}

struct Tableau {
    rows: Vec<Row>,
    rhs: Vec<Rat>,
    basis: Vec<usize>,
    ncols: usize,
    d: Vec<Rat>,
    value: Rat,
}

impl Tableau {
    fn pivot(&mut self, r: usize, j: usize) {
        let inv = get(&self.rows[r], j).unwrap().recip();
        scale(&mut self.rows[r], &inv);
        self.rhs[r] *= &inv;
        let prow = std::mem::take(&mut self.rows[r]);
        let prhs = self.rhs[r].clone();
        for i in 0..self.rows.len() {
            if i == r {
                continue;
            }
            if let Some(a) = get(&self.rows[i], j).cloned() {
                self.rows[i] = axpy(&self.rows[i], &a, &prow);
                self.rhs[i] = &self.rhs[i] - &a * &prhs;
            }
        }
        let dj = self.d[j].clone();
        if !dj.is_zero() {
            for (k, a) in &prow {
                self.d[*k] = &self.d[*k] - &dj * a;
            }
            self.value += &dj * &prhs;
        }
        self.rows[r] = prow;
        self.basis[r] = j;
    }

    fn iterate(&mut self, eliminated: &[bool], deadline: Option<Instant>) -> Result<Step> {
        let mut count = 0u64;
        loop {
            count += 1;
            if count.is_multiple_of(16) {
                if let Some(d) = deadline {
                    if Instant::now() > d {
                        return Err(CoreError::Timeout);
                    }
                }
            }
            let entering = (0..self.ncols).find(|&j| !eliminated[j] && self.d[j].is_negative());
            let Some(j) = entering else {
                return Ok(Step::Optimal);
            };
            let mut best: Option<(usize, Rat)> = None;
            for r in 0..self.rows.len() {
                let Some(a) = get(&self.rows[r], j) else { continue };
                if !a.is_positive() {
                    continue;
                }
                let ratio = &self.rhs[r] / a;
                let better = match &best {
                    None => true,
                    Some((s, q)) => ratio < *q || (ratio == *q && self.basis[r] < self.basis[*s]),
                };
                if better {
                    best = Some((r, ratio));
                }
            }
            match best {
                Some((r, _)) => self.pivot(r, j),
                None => return Ok(Step::Unbounded),
            }
        }
    }

    fn drive_out_artificials(&mut self, eliminated: &[bool]) {
        let mut r = 0;
        while r < self.rows.len() {
            if self.basis[r] < self.ncols {
                r += 1;
                continue;
            }
            let col = self.rows[r]
                .iter()
                .map(|(j, _)| *j)
                .find(|&j| j < self.ncols && !eliminated[j]);
            match col {
                Some(j) => {
                    self.pivot(r, j);
                    r += 1;
                }
                None => {
                    self.rows.swap_remove(r);
                    self.rhs.swap_remove(r);
                    self.basis.swap_remove(r);
                }
            }
        }
    }
}
