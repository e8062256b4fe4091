//! Kleene iteration of the system operator on a truncated grid.

use std::cell::RefCell;
use std::io::Write;

use eqsys_core::eval::{eval_formula, Assignment};
use eqsys_core::{CoreError, EquationSystem, Ext, Rat, Scalar, Var};
use num_traits::Zero;

use crate::error::{OracleError, Result};
use crate::grid::{call_string, integer_args, to_scalars, Grid, Policy, Shape, TruncationSpec};

/// Where iteration starts.
pub enum Start<'a, S> {
    Bottom,
    From(&'a dyn Assignment<S>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    FromBottom,
    FromU,
}

#[derive(Clone, Debug)]
pub struct IterOptions<S> {
    pub max_iters: usize,
    /// Stop once successive iterates differ by at most this much.
    pub tol: S,
    /// Record the whole grid every `k` iterations (and at `n = 0`).
    pub trace_every: Option<usize>,
}

impl<S: Scalar> IterOptions<S> {
    pub fn new(max_iters: usize, tol: S) -> Self {
        IterOptions {
            max_iters,
            tol,
            trace_every: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TraceRow<S> {
    pub pred: String,
    pub state: Vec<i64>,
    pub n: usize,
    pub value: Ext<S>,
}

#[derive(Clone, Debug)]
pub struct IterationResult<S> {
    pub iterations: usize,
    pub values: Grid<S>,
    /// Largest pointwise change in the last step; `inf` if no step was taken.
    pub residual: Ext<S>,
    pub direction: Direction,
    pub trace: Vec<TraceRow<S>>,
}

impl<S: Scalar> IterationResult<S> {
    pub fn value(&self, pred: &str, state: &[i64]) -> Option<&Ext<S>> {
        self.values.get(pred, state)
    }
}

/// One synchronous sweep `K(grid)`; calls leaving the grid are answered by `boundary`.
pub(crate) fn sweep<S: Scalar>(
    sys: &EquationSystem,
    grid: &Grid<S>,
    boundary: &dyn Fn(&str, &[i64], &[S]) -> Result<Ext<S>>,
) -> Result<Grid<S>> {
    let failure: RefCell<Option<OracleError>> = RefCell::new(None);
    let lookup = |pred: &str, args: &[S]| -> eqsys_core::Result<Ext<S>> {
        let fail = |e: OracleError| {
            *failure.borrow_mut() = Some(e);
            CoreError::Invalid("grid lookup failed".into())
        };
        let ints = integer_args(pred, args).map_err(fail)?;
        match grid.get(pred, &ints) {
            Some(v) => Ok(v.clone()),
            None => boundary(pred, &ints, args).map_err(fail),
        }
    };
    let mut values = Vec::with_capacity(grid.shapes.len());
    for (shape, (pred, f)) in grid.shapes.iter().zip(sys.predicates.iter().zip(&sys.equations)) {
        let params: Vec<Var> = pred.params();
        let mut out = Vec::with_capacity(shape.len());
        for x in shape.states() {
            let point = to_scalars::<S>(&x);
            match eval_formula(f, &params, &point, &lookup) {
                Ok(v) => out.push(v),
                Err(e) => return Err(failure.borrow_mut().take().unwrap_or(OracleError::Core(e))),
            }
        }
        values.push(out);
    }
    Ok(Grid {
        shapes: grid.shapes.clone(),
        values,
    })
}

fn policy_boundary<'a, S: Scalar>(
    spec: &'a TruncationSpec,
    u: Option<&'a dyn Assignment<S>>,
) -> impl Fn(&str, &[i64], &[S]) -> Result<Ext<S>> + 'a {
    move |pred, _, args| match spec.policy_for(pred) {
        None => Err(OracleError::PolicyRequired(call_string(pred, args))),
        Some(Policy::ClampToU) => match u {
            Some(u) => Ok(u.value(pred, args)?),
            None => Ok(Ext::zero()),
        },
        Some(p) => Ok(p.value().expect("fixed policy")),
    }
}

fn start_grid<S: Scalar>(shapes: Vec<Shape>, start: &Start<S>) -> Result<Grid<S>> {
    Grid::filled(shapes, |s, x| match start {
        Start::Bottom => Ok(Ext::zero()),
        Start::From(u) => Ok(u.value(&s.name, &to_scalars::<S>(x))?),
    })
}

fn record<S: Scalar>(trace: &mut Vec<TraceRow<S>>, grid: &Grid<S>, n: usize) {
    trace.extend(grid.entries().map(|(p, state, v)| TraceRow {
        pred: p.to_string(),
        state,
        n,
        value: v.clone(),
    }));
}

/// Iterates the system operator from `start` on the grid of `spec`.
///
/// From bottom with policy `AbsorbZero` every iterate is below the least
/// fixed point restricted to trajectories that stay inside the grid.
pub fn kleene_iterate<S: Scalar>(
    sys: &EquationSystem,
    spec: &TruncationSpec,
    start: Start<S>,
    opts: &IterOptions<S>,
) -> Result<IterationResult<S>> {
    let direction = match start {
        Start::Bottom => Direction::FromBottom,
        Start::From(_) => Direction::FromU,
    };
    let u = match start {
        Start::From(u) => Some(u),
        Start::Bottom => None,
    };
    let boundary = policy_boundary(spec, u);
    let mut grid = start_grid(Grid::<S>::shapes(sys, spec)?, &start)?;
    let mut trace = Vec::new();
    if opts.trace_every.is_some() {
        record(&mut trace, &grid, 0);
    }
    let mut residual = Ext::Inf;
    let mut n = 0;
    while n < opts.max_iters {
        let next = sweep(sys, &grid, &boundary)?;
        residual = next.distance(&grid);
        grid = next;
        n += 1;
        if let Some(k) = opts.trace_every {
            if k > 0 && n % k == 0 {
                record(&mut trace, &grid, n);
            }
        }
        if residual <= Ext::Fin(opts.tol.clone()) {
            break;
        }
    }
    Ok(IterationResult {
        iterations: n,
        values: grid,
        residual,
        direction,
        trace,
    })
}

/// Largest `n` at which the gap identity is checked.
pub const IDENTITY_DEPTH: usize = 20;

/// Iterates `Kⁿ(0)`, `Kⁿ(u)` and `(DK)ⁿ(u)` side by side in exact arithmetic.
#[derive(Clone, Debug)]
pub struct Bracket {
    pub lower: Vec<Grid<Rat>>,
    pub upper: Vec<Grid<Rat>>,
    pub gap: Vec<Grid<Rat>>,
    /// Points where `Kⁿ(u) − Kⁿ(0) ≠ (DK)ⁿ(u)`, as `(n, pred, state)`.
    pub mismatches: Vec<(usize, String, Vec<i64>)>,
    pub checked_up_to: usize,
}

impl Bracket {
    pub fn identity_holds(&self) -> bool {
        self.mismatches.is_empty()
    }

    /// `Kⁿ(u) − Kⁿ(0)` at one state.
    pub fn width(&self, n: usize, pred: &str, state: &[i64]) -> Option<Rat> {
        let hi = self.upper.get(n)?.get(pred, state)?.finite()?.clone();
        let lo = self.lower.get(n)?.get(pred, state)?.finite()?.clone();
        Some(hi - lo)
    }
}

fn finite(g: &Grid<Rat>) -> Result<()> {
    match g.entries().find(|(_, _, v)| v.is_inf()) {
        Some((p, x, _)) => Err(OracleError::Unsupported(format!("infinite value at {p}{x:?}"))),
        None => Ok(()),
    }
}

/// Brackets the fixed points below `u` between `Kⁿ(0)` and `Kⁿ(u)`.
///
/// `u` must be finite and prefixed on the grid. Off-grid calls take the
/// same boundary values in both iterations, so the difference of the two
/// sequences is exactly `(DK)ⁿ(u)` with zero boundary; this is checked for
/// every `n ≤ IDENTITY_DEPTH`.
pub fn bracket(sys: &EquationSystem, spec: &TruncationSpec, u: &dyn Assignment<Rat>, iters: usize) -> Result<Bracket> {
    if sys.has_min() || sys.has_max() {
        return Err(OracleError::Unsupported("bracketing needs an affine system".into()));
    }
    if spec.policies.values().chain(&spec.default_policy).any(|p| p.value::<Rat>() == Some(Ext::Inf)) {
        return Err(OracleError::Unsupported("bracketing needs finite boundary values".into()));
    }
    let shapes = Grid::<Rat>::shapes(sys, spec)?;
    let ugrid = start_grid(shapes.clone(), &Start::From(u))?;
    finite(&ugrid)?;

    let exact_u = |pred: &str, _: &[i64], args: &[Rat]| -> Result<Ext<Rat>> { Ok(u.value(pred, args)?) };
    let ku = sweep(sys, &ugrid, &exact_u)?;
    for ((p, x, a), b) in ku.entries().zip(ugrid.values.iter().flatten()) {
        if a > b {
            return Err(OracleError::NotPrefixed(format!("{p}{x:?}: K(u) = {a} > u = {b}")));
        }
    }

    let boundary = policy_boundary(spec, Some(u));
    let zero = |_: &str, _: &[i64], _: &[Rat]| -> Result<Ext<Rat>> { Ok(Ext::zero()) };
    let d = sys.d_transform();
    let mut lower = vec![Grid::filled(shapes, |_, _| Ok(Ext::zero()))?];
    let mut upper = vec![ugrid.clone()];
    let mut gap = vec![ugrid];
    for _ in 0..iters {
        let l = sweep(sys, lower.last().unwrap(), &boundary)?;
        let h = sweep(sys, upper.last().unwrap(), &boundary)?;
        let g = sweep(&d, gap.last().unwrap(), &zero)?;
        finite(&l)?;
        finite(&h)?;
        lower.push(l);
        upper.push(h);
        gap.push(g);
    }
    let checked_up_to = iters.min(IDENTITY_DEPTH);
    let mut mismatches = Vec::new();
    for n in 0..=checked_up_to {
        for (((p, x, h), l), g) in upper[n]
            .entries()
            .zip(lower[n].values.iter().flatten())
            .zip(gap[n].values.iter().flatten())
        {
            let diff = h.finite().unwrap().clone() - l.finite().unwrap().clone();
            if g.finite().is_none_or(|g| !(diff.clone() - g.clone()).is_zero()) {
                mismatches.push((n, p.to_string(), x));
            }
        }
    }
    Ok(Bracket {
        lower,
        upper,
        gap,
        mismatches,
        checked_up_to,
    })
}

/// Writes `pred,state,n,value` rows; states are space-separated coordinates.
pub fn write_trace_csv<S: Scalar, W: Write>(rows: &[TraceRow<S>], out: W) -> Result<()> {
    let io = |e: csv::Error| OracleError::Io(e.to_string());
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["pred", "state", "n", "value"]).map_err(io)?;
    for r in rows {
        let state: Vec<String> = r.state.iter().map(|x| x.to_string()).collect();
        w.write_record([r.pred.clone(), state.join(" "), r.n.to_string(), r.value.to_string()])
            .map_err(io)?;
    }
    w.flush().map_err(|e| OracleError::Io(e.to_string()))
}
