//! Seeded Monte Carlo simulation of pGCL programs.

use eqsys_core::{CoreError, Expr, Ext, Rat, Var};
use num_traits::ToPrimitive;
use pgcl_frontend::{Cmd, LoopGuard, PgclProgram};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{OracleError, Result};

#[derive(Clone, Debug, PartialEq)]
pub enum Property {
    /// Expected value of the post-expectation at termination, weighted by scores.
    Wp(Expr),
    /// Expected accumulated tick cost.
    Ert,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub std_err: f64,
    /// Half-width of the normal 95% confidence interval.
    pub half_width: f64,
    pub trials: usize,
    /// Runs cut off by the horizon.
    pub truncated: usize,
}

impl Estimate {
    pub fn contains(&self, x: f64, slack: f64) -> bool {
        (self.mean - x).abs() <= self.half_width + slack
    }
}

struct Run<'a> {
    names: &'a [Var],
    state: Vec<f64>,
    cost: f64,
    weight: f64,
    steps: usize,
    horizon: usize,
}

enum Flow {
    Done,
    Cut,
}

fn env<'a>(names: &'a [Var], state: &'a [f64]) -> impl Fn(&Var) -> eqsys_core::Result<f64> + 'a {
    move |v| {
        names
            .iter()
            .position(|n| n == v)
            .map(|i| state[i])
            .ok_or_else(|| CoreError::UnknownVariable(v.to_string()))
    }
}

fn no_calls(p: &str, _: &[f64]) -> eqsys_core::Result<Ext<f64>> {
    Err(CoreError::Invalid(format!("call to {p} in a program expression")))
}

impl Run<'_> {
    fn value(&self, e: &Expr) -> Result<f64> {
        Ok(e.eval(&env(self.names, &self.state), &no_calls)?.to_f64())
    }

    fn flip<R: Rng>(&self, p: &Expr, rng: &mut R) -> Result<bool> {
        let p = self.value(p)?.clamp(0.0, 1.0);
        Ok(rng.gen_bool(p))
    }

    fn exec<R: Rng>(&mut self, c: &Cmd, rng: &mut R) -> Result<Flow> {
        match c {
            Cmd::Skip => {}
            Cmd::Seq(cs) => {
                for c in cs {
                    if let Flow::Cut = self.exec(c, rng)? {
                        return Ok(Flow::Cut);
                    }
                }
            }
            Cmd::Assign(xs) => {
                let vals = xs.iter().map(|(_, e)| self.value(e)).collect::<Result<Vec<_>>>()?;
                for ((x, _), v) in xs.iter().zip(vals) {
                    let i = self.names.iter().position(|n| n == x).expect("declared variable");
                    self.state[i] = v;
                }
            }
            Cmd::Prob { p, left, right, .. } => {
                let branch = if self.flip(p, rng)? { left } else { right };
                return self.exec(branch, rng);
            }
            Cmd::Nondet(left, _) => return self.exec(left, rng),
            Cmd::If { cond, then, els } => {
                let b = cond.eval(&env(self.names, &self.state))?;
                return self.exec(if b { then } else { els }, rng);
            }
            Cmd::While { guard, body, .. } => loop {
                let go = match guard {
                    LoopGuard::Cond(c) => c.eval(&env(self.names, &self.state))?,
                    LoopGuard::Flip(p) => self.flip(p, rng)?,
                };
                if !go {
                    break;
                }
                if self.steps >= self.horizon {
                    return Ok(Flow::Cut);
                }
                self.steps += 1;
                if let Flow::Cut = self.exec(body, rng)? {
                    return Ok(Flow::Cut);
                }
            },
            Cmd::Tick(a) => self.cost += a.to_f64().unwrap_or(f64::NAN),
            Cmd::Score { weight, .. } => {
                self.weight *= self.value(weight)?;
                if self.weight == 0.0 {
                    return Ok(Flow::Done);
                }
            }
        }
        Ok(Flow::Done)
    }
}

/// Estimates `wp` or `ert` of `prog` from `init` by independent seeded runs.
///
/// Each run may execute at most `horizon` loop iterations. A cut-off run
/// contributes zero to `wp` and its cost so far to `ert`, so both estimates
/// are biased downwards by the mass beyond the horizon. Nondeterministic
/// choices always take the left branch. A zero score ends the run.
pub fn monte_carlo(
    prog: &PgclProgram,
    init: &[Rat],
    property: &Property,
    trials: usize,
    horizon: usize,
    seed: u64,
) -> Result<Estimate> {
    let names = prog.vars();
    if init.len() != names.len() {
        return Err(OracleError::Unsupported(format!(
            "program has {} variables, initial state has {}",
            names.len(),
            init.len()
        )));
    }
    let start: Vec<f64> = init.iter().map(|r| r.to_f64().unwrap_or(f64::NAN)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut sum, mut sq, mut truncated) = (0.0f64, 0.0f64, 0usize);
    for _ in 0..trials {
        let mut run = Run {
            names: &names,
            state: start.clone(),
            cost: 0.0,
            weight: 1.0,
            steps: 0,
            horizon,
        };
        let flow = run.exec(&prog.body, &mut rng)?;
        let cut = matches!(flow, Flow::Cut);
        truncated += cut as usize;
        let x = match property {
            Property::Ert => run.cost,
            Property::Wp(_) if cut || run.weight == 0.0 => 0.0,
            Property::Wp(post) => run.weight * run.value(post)?,
        };
        sum += x;
        sq += x * x;
    }
    let n = trials.max(1) as f64;
    let mean = sum / n;
    let var = if trials > 1 {
        ((sq - n * mean * mean) / (n - 1.0)).max(0.0)
    } else {
        0.0
    };
    let std_err = (var / n).sqrt();
    Ok(Estimate {
        mean,
        std_err,
        half_width: 1.96 * std_err,
        trials,
        truncated,
    })
}
