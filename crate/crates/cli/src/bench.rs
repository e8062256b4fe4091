//! Benchmark harness over a directory of `.eq` files.
//!
//! Each file may carry pragmas:
//!
//! ```text
//! #@ lower_config=A upper_config=A
//! #@ expect_lower=valid expect_upper=valid
//! ```

use std::fmt::Write as _;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use certificate_engine::Direction;
use eqsys_core::text::{parse_pragmas, parse_system};
use rayon::prelude::*;

use crate::commands::{direction_name, queries_for, synth_system, Outcome};
use crate::config::RunConfig;
use crate::error::{CliError, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct BenchRow {
    pub name: String,
    pub direction: String,
    pub config: String,
    /// `valid`, `unknown`, `timeout` or `error`.
    pub result: String,
    pub expected: Option<String>,
    pub seconds: f64,
    pub detail: String,
}

impl BenchRow {
    pub fn matches_expectation(&self) -> bool {
        self.expected.as_ref().is_none_or(|e| *e == self.result)
    }
}

#[derive(Clone, Debug)]
pub struct BenchArgs {
    /// Overrides the per-file configuration pragmas.
    pub config: Option<String>,
    pub timeout: Option<Duration>,
    pub handelman_degree: Option<u32>,
    pub jobs: usize,
}

impl Default for BenchArgs {
    fn default() -> Self {
        BenchArgs {
            config: None,
            timeout: Some(Duration::from_secs(120)),
            handelman_degree: None,
            jobs: 1,
        }
    }
}

struct Job {
    name: String,
    source: String,
    direction: Option<Direction>,
    config: String,
    expected: Option<String>,
}

fn files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "eq"))
        .collect();
    out.sort();
    Ok(out)
}

fn jobs_for(path: &Path, args: &BenchArgs) -> Vec<Job> {
    let name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let error = |detail: String| Job {
        name: name.clone(),
        source: detail,
        direction: None,
        config: "-".into(),
        expected: None,
    };
    let source = match std::fs::read_to_string(path) {
        Ok(s) => s,
        Err(e) => return vec![error(e.to_string())],
    };
    let q = match parse_system(&source) {
        Ok(q) => q,
        Err(e) => return vec![error(e.to_string())],
    };
    let pragmas = parse_pragmas(&source);
    let mut out = Vec::new();
    for d in [Direction::Lower, Direction::Upper] {
        if queries_for(&q, d).queries.is_empty() {
            continue;
        }
        let dn = direction_name(d);
        let config = args
            .config
            .clone()
            .or_else(|| pragmas.get(&format!("{dn}_config")).cloned())
            .unwrap_or_else(|| "A".into());
        out.push(Job {
            name: name.clone(),
            source: source.clone(),
            direction: Some(d),
            config,
            expected: pragmas.get(&format!("expect_{dn}")).cloned(),
        });
    }
    if out.is_empty() {
        out.push(error("no queries".into()));
    }
    out
}

fn run(job: &Job, args: &BenchArgs) -> BenchRow {
    let start = Instant::now();
    let row = |result: &str, detail: String| BenchRow {
        name: job.name.clone(),
        direction: job.direction.map_or("-", direction_name).to_string(),
        config: job.config.clone(),
        result: result.to_string(),
        expected: job.expected.clone(),
        seconds: start.elapsed().as_secs_f64(),
        detail,
    };
    let Some(d) = job.direction else {
        return row("error", job.source.clone());
    };
    let attempt = || -> Result<Outcome> {
        let q = parse_system(&job.source)?;
        let mut cfg = RunConfig::preset(&job.config)?;
        cfg.timeout = args.timeout;
        cfg.handelman_degree = args.handelman_degree;
        Ok(synth_system(&queries_for(&q, d), &cfg, false)?.outcome)
    };
    match catch_unwind(AssertUnwindSafe(attempt)) {
        Ok(Ok(Outcome::Valid)) => row("valid", String::new()),
        Ok(Ok(Outcome::Unknown(why))) => row("unknown", why),
        Ok(Err(CliError::Timeout)) => row("timeout", String::new()),
        Ok(Err(e)) => row("error", e.to_string()),
        Err(_) => row("error", "panicked".into()),
    }
}

/// Runs every benchmark in `dir` on a pool of `args.jobs` workers; rows come back in file order.
pub fn cmd_bench(dir: &Path, args: &BenchArgs) -> Result<Vec<BenchRow>> {
    let jobs: Vec<Job> = files(dir)?.iter().flat_map(|p| jobs_for(p, args)).collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.jobs.max(1))
        .build()
        .map_err(|e| CliError::Input(e.to_string()))?;
    Ok(pool.install(|| jobs.par_iter().map(|j| run(j, args)).collect()))
}

pub fn render_table(rows: &[BenchRow]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<24} {:<6} {:<7} {:<8} {:<8} {:>9}",
        "benchmark", "dir", "config", "result", "expected", "time(s)"
    );
    for r in rows {
        let mark = if r.matches_expectation() { "" } else { "  MISMATCH" };
        let _ = writeln!(
            out,
            "{:<24} {:<6} {:<7} {:<8} {:<8} {:>9.3}{mark}",
            r.name,
            r.direction,
            r.config,
            r.result,
            r.expected.as_deref().unwrap_or("-"),
            r.seconds
        );
    }
    out
}

pub fn render_csv(rows: &[BenchRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| CliError::Input(e.to_string());
    w.write_record(["benchmark", "direction", "config", "result", "expected", "seconds", "detail"])
        .map_err(io)?;
    for r in rows {
        w.write_record([
            r.name.as_str(),
            &r.direction,
            &r.config,
            &r.result,
            r.expected.as_deref().unwrap_or(""),
            &format!("{:.3}", r.seconds),
            &r.detail,
        ])
        .map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Input(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}
