//! `oracle`: value iteration on equation systems, Monte Carlo on programs.

use std::fmt::Write as _;

use eqsys_core::eval::{eval_query, Assignment};
use eqsys_core::scalar::parse_rat;
use eqsys_core::text::{parse_expr, parse_system};
use eqsys_core::{CoreError, Ext, Rat, Scalar};
use oracle::{
    kleene_iterate, monte_carlo, write_trace_csv, Grid, IterOptions, IterationResult, Policy, Property, Start,
    TruncationSpec,
};
use pgcl_frontend::parse_pgcl;

use crate::error::{CliError, Result};

/// Parses `absorb0`, `absorb-inf`, `clamp:<value>` or `u`.
pub fn parse_policy(s: &str) -> Result<Policy> {
    match s {
        "absorb0" | "absorb-zero" => Ok(Policy::AbsorbZero),
        "absorb-inf" | "absorbinf" => Ok(Policy::AbsorbInf),
        "u" | "clamp-to-u" => Ok(Policy::ClampToU),
        _ => match s.strip_prefix("clamp:") {
            Some("inf") => Ok(Policy::Clamp(Ext::Inf)),
            Some(v) => Ok(Policy::Clamp(Ext::Fin(parse_rat(v)?))),
            None => Err(CliError::Input(format!("unknown policy {s:?}"))),
        },
    }
}

/// Builds a truncation from `x:lo..hi` flags.
pub fn truncation(flags: &[String], policy: Policy) -> Result<TruncationSpec> {
    let mut spec = TruncationSpec::new().with_default(policy);
    for f in flags {
        for part in f.split(',') {
            let (v, lo, hi) = TruncationSpec::parse_bound(part)?;
            spec = spec.bound(&v, lo, hi);
        }
    }
    Ok(spec)
}

#[derive(Clone, Debug)]
pub struct IterateArgs {
    pub spec: TruncationSpec,
    pub iters: usize,
    pub tol: Rat,
    pub exact: bool,
    pub trace_every: Option<usize>,
    pub all: bool,
}

fn grid_assignment<S: Scalar>(g: &Grid<S>) -> impl Fn(&str, &[S]) -> eqsys_core::Result<Ext<S>> + '_ {
    move |pred, args| {
        let ints = oracle::grid::integer_args(pred, args).map_err(|e| CoreError::Invalid(e.to_string()))?;
        g.get(pred, &ints)
            .cloned()
            .ok_or_else(|| CoreError::Invalid(format!("{} lies outside the grid", oracle::grid::call_string(pred, args))))
    }
}

fn render<S: Scalar>(q: &eqsys_core::QueriedEquationSystem, r: &IterationResult<S>, all: bool) -> Result<String> {
    let mut out = String::new();
    let _ = writeln!(out, "iterations: {}", r.iterations);
    let _ = writeln!(out, "residual: {}", r.residual);
    let a = grid_assignment(&r.values);
    for query in &q.queries {
        let v = eval_query(query, &a as &dyn Assignment<S>)?;
        let _ = writeln!(out, "query {}: {v}", query.formula);
    }
    if all || q.queries.is_empty() {
        for (p, x, v) in r.values.entries() {
            let xs: Vec<String> = x.iter().map(|v| v.to_string()).collect();
            let _ = writeln!(out, "{p}({}) = {v}", xs.join(", "));
        }
    }
    Ok(out)
}

fn trace_csv<S: Scalar>(rows: &[oracle::TraceRow<S>]) -> Result<String> {
    let mut buf = Vec::new();
    write_trace_csv(rows, &mut buf)?;
    Ok(String::from_utf8(buf).expect("csv output is utf-8"))
}

/// Iterates from bottom; returns the report and the CSV trace (if requested).
pub fn cmd_iterate(system_src: &str, args: &IterateArgs) -> Result<(String, Option<String>)> {
    let q = parse_system(system_src)?;
    if args.exact {
        let mut opts = IterOptions::new(args.iters, args.tol.clone());
        opts.trace_every = args.trace_every;
        let r = kleene_iterate::<Rat>(&q.system, &args.spec, Start::Bottom, &opts)?;
        let trace = args.trace_every.map(|_| trace_csv(&r.trace)).transpose()?;
        Ok((render(&q, &r, args.all)?, trace))
    } else {
        let mut opts = IterOptions::new(args.iters, args.tol.to_f64());
        opts.trace_every = args.trace_every;
        let r = kleene_iterate::<f64>(&q.system, &args.spec, Start::Bottom, &opts)?;
        let trace = args.trace_every.map(|_| trace_csv(&r.trace)).transpose()?;
        Ok((render(&q, &r, args.all)?, trace))
    }
}

#[derive(Clone, Debug)]
pub struct SimulateArgs {
    pub ert: bool,
    pub post: Option<String>,
    pub init: Vec<Rat>,
    pub trials: usize,
    pub horizon: usize,
    pub seed: u64,
}

pub fn cmd_simulate(program_src: &str, args: &SimulateArgs) -> Result<String> {
    let prog = parse_pgcl(program_src)?;
    let property = if args.ert {
        Property::Ert
    } else {
        Property::Wp(parse_expr(args.post.as_deref().unwrap_or("1"))?)
    };
    let e = monte_carlo(&prog, &args.init, &property, args.trials, args.horizon, args.seed)?;
    Ok(format!(
        "estimate: {:.6} ± {:.6} (95%)\nstd-err: {:.6}\ntrials: {}\ntruncated: {}\n",
        e.mean, e.half_width, e.std_err, e.trials, e.truncated
    ))
}
