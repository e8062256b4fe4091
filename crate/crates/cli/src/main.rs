use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Parser, Subcommand};
use eqsys_core::scalar::parse_rat;
use pgcl_frontend::Nondet;
use ufp_cli::commands::{parse_query_flag, parse_state};
use ufp_cli::oracle_cmd::{parse_policy, truncation};
use ufp_cli::*;

#[derive(Parser)]
#[command(name = "ufp", version, about = "Lower and upper bounds on least fixed points of probabilistic equation systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Translate a pGCL program into an equation system.
    Translate {
        program: PathBuf,
        #[arg(long, default_value = "wp")]
        property: String,
        /// Post-expectation for wp and cwp.
        #[arg(long)]
        post: Option<String>,
        /// Initial state, comma-separated in declaration order.
        #[arg(long, default_value = "")]
        init: String,
        /// Query on the initial state such as ">= 3"; may repeat.
        #[arg(long = "query", allow_hyphen_values = true)]
        queries: Vec<String>,
        /// Resolve nondeterminism angelically.
        #[arg(long)]
        angelic: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a certificate bundle against a queried equation system.
    Check {
        system: PathBuf,
        certificate: PathBuf,
        #[arg(long = "handelman-deg")]
        handelman_deg: Option<u32>,
        #[arg(long)]
        timeout: Option<u64>,
        /// Check closed-form witnesses pointwise on a grid ("x:lo..hi").
        #[arg(long)]
        numeric: Vec<String>,
    },
    /// Synthesize certificates for every query.
    Synth {
        system: PathBuf,
        #[arg(long, default_value = "A")]
        config: String,
        #[arg(long = "deg-u")]
        deg_u: Option<u32>,
        #[arg(long = "deg-r")]
        deg_r: Option<u32>,
        #[arg(long = "deg-eta")]
        deg_eta: Option<u32>,
        #[arg(long = "handelman-deg")]
        handelman_deg: Option<u32>,
        #[arg(long)]
        timeout: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long = "emit-smt")]
        emit_smt: Option<PathBuf>,
    },
    /// Value iteration on an equation system, or Monte Carlo on a .pgcl program.
    Oracle {
        file: PathBuf,
        #[arg(long)]
        truncate: Vec<String>,
        #[arg(long, default_value = "absorb0")]
        policy: String,
        #[arg(long, default_value_t = 10_000)]
        iters: usize,
        #[arg(long, default_value = "0")]
        tol: String,
        #[arg(long)]
        exact: bool,
        #[arg(long)]
        all: bool,
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long = "trace-every", default_value_t = 1)]
        trace_every: usize,
        #[arg(long, default_value = "wp")]
        property: String,
        #[arg(long)]
        post: Option<String>,
        #[arg(long, default_value = "")]
        init: String,
        #[arg(long, default_value_t = 100_000)]
        trials: usize,
        #[arg(long, default_value_t = 10_000)]
        horizon: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Assemble a cwp lower bound from certificates for both cwp systems.
    Cwp {
        program: PathBuf,
        #[arg(long)]
        post: String,
        #[arg(long, default_value = "")]
        init: String,
        #[arg(long)]
        cert1: PathBuf,
        #[arg(long)]
        cert2: PathBuf,
        #[arg(long)]
        upper2: Option<PathBuf>,
        #[arg(long)]
        numeric: Vec<String>,
    },
    /// Run the benchmark corpus.
    Bench {
        dir: PathBuf,
        #[arg(long)]
        config: Option<String>,
        #[arg(long, default_value_t = 120)]
        timeout: u64,
        #[arg(long = "handelman-deg")]
        handelman_deg: Option<u32>,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

fn read(p: &Path) -> Result<String> {
    std::fs::read_to_string(p).map_err(|e| CliError::Input(format!("{}: {e}", p.display())))
}

fn write(p: &Path, s: &str) -> Result<()> {
    std::fs::write(p, s).map_err(|e| CliError::Input(format!("{}: {e}", p.display())))
}

/// `dir/name.ext` becomes `dir/name.tag.ext`.
fn tagged(p: &Path, tag: &str) -> PathBuf {
    let stem = p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let name = match p.extension() {
        Some(ext) => format!("{stem}.{tag}.{}", ext.to_string_lossy()),
        None => format!("{stem}.{tag}"),
    };
    p.with_file_name(name)
}

/// Accepts `1/1000` as well as `1e-3`.
fn parse_tol(s: &str) -> Result<eqsys_core::Rat> {
    if let Ok(r) = parse_rat(s) {
        return Ok(r);
    }
    s.trim()
        .parse::<f64>()
        .ok()
        .filter(|f| f.is_finite() && *f >= 0.0)
        .and_then(eqsys_core::Rat::from_float)
        .ok_or_else(|| CliError::Input(format!("invalid tolerance {s:?}")))
}

fn numeric_spec(flags: &[String]) -> Result<Option<oracle::TruncationSpec>> {
    if flags.is_empty() {
        return Ok(None);
    }
    Ok(Some(truncation(flags, oracle::Policy::AbsorbZero)?))
}

fn run(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Translate {
            program,
            property,
            post,
            init,
            queries,
            angelic,
            out,
        } => {
            let args = TranslateArgs {
                property: property.parse()?,
                post,
                init: parse_state(&init)?,
                queries: queries.iter().map(|q| parse_query_flag(q)).collect::<Result<_>>()?,
                nondet: if angelic { Nondet::Angelic } else { Nondet::Demonic },
            };
            let outputs = cmd_translate(&read(&program)?, &args)?;
            match out {
                Some(path) if outputs.len() == 1 => write(&path, &outputs[0].1)?,
                Some(path) => {
                    for (tag, text) in &outputs {
                        write(&tagged(&path, tag), text)?;
                    }
                }
                None => {
                    let texts: Vec<&str> = outputs.iter().map(|(_, t)| t.as_str()).collect();
                    print!("{}", texts.join("---\n"));
                }
            }
            Ok(0)
        }
        Command::Check {
            system,
            certificate,
            handelman_deg,
            timeout,
            numeric,
        } => {
            let args = CheckArgs {
                handelman_degree: handelman_deg,
                timeout: timeout.map(Duration::from_secs),
                numeric: numeric_spec(&numeric)?,
            };
            let r = cmd_check(&read(&system)?, &read(&certificate)?, &args)?;
            print!("{}", r.report);
            Ok(r.outcome.exit_code())
        }
        Command::Synth {
            system,
            config,
            deg_u,
            deg_r,
            deg_eta,
            handelman_deg,
            timeout,
            out,
            emit_smt,
        } => {
            let mut cfg = RunConfig::preset(&config)?.with_degrees(deg_u, deg_r, deg_eta);
            cfg.handelman_degree = handelman_deg;
            cfg.timeout = timeout.map(Duration::from_secs);
            let r = cmd_synth(&read(&system)?, &cfg, emit_smt.is_some())?;
            if let (Some(path), Some(smt)) = (&emit_smt, &r.smt) {
                write(path, smt)?;
            }
            match &out {
                Some(path) if !r.certificates.is_empty() => write(path, &r.bundle)?,
                None => print!("{}", r.bundle),
                _ => {}
            }
            eprint!("{}", r.report);
            Ok(r.outcome.exit_code())
        }
        Command::Oracle {
            file,
            truncate,
            policy,
            iters,
            tol,
            exact,
            all,
            csv,
            trace_every,
            property,
            post,
            init,
            trials,
            horizon,
            seed,
        } => {
            let src = read(&file)?;
            if file.extension().is_some_and(|e| e == "pgcl") {
                let args = SimulateArgs {
                    ert: property == "ert",
                    post,
                    init: parse_state(&init)?,
                    trials,
                    horizon,
                    seed,
                };
                print!("{}", cmd_simulate(&src, &args)?);
                return Ok(0);
            }
            let args = IterateArgs {
                spec: truncation(&truncate, parse_policy(&policy)?)?,
                iters,
                tol: parse_tol(&tol)?,
                exact,
                trace_every: csv.as_ref().map(|_| trace_every),
                all,
            };
            let (report, trace) = cmd_iterate(&src, &args)?;
            if let (Some(path), Some(t)) = (&csv, &trace) {
                write(path, t)?;
            }
            print!("{report}");
            Ok(0)
        }
        Command::Cwp {
            program,
            post,
            init,
            cert1,
            cert2,
            upper2,
            numeric,
        } => {
            let args = CwpArgs {
                post,
                init: parse_state(&init)?,
                cert1: read(&cert1)?,
                cert2: read(&cert2)?,
                upper2: upper2.as_deref().map(read).transpose()?,
                numeric: numeric_spec(&numeric)?,
            };
            let r = cmd_cwp(&read(&program)?, &args)?;
            print!("{}", r.text);
            Ok(r.outcome.exit_code())
        }
        Command::Bench {
            dir,
            config,
            timeout,
            handelman_deg,
            jobs,
            csv,
        } => {
            let args = BenchArgs {
                config,
                timeout: Some(Duration::from_secs(timeout)),
                handelman_degree: handelman_deg,
                jobs,
            };
            let rows = cmd_bench(&dir, &args)?;
            print!("{}", render_table(&rows));
            if let Some(path) = csv {
                write(&path, &render_csv(&rows)?)?;
            }
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
