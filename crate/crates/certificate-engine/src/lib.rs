//! Checking and synthesis of lower- and upper-bound certificates for least fixed points.

pub mod certificate;
pub mod check;
pub mod error;
pub mod handelman;
pub mod numeric;
pub mod pqe;
pub mod smt;
pub mod synth;

pub use certificate::{parse_certificate, print_certificate, Certificate, Direction, EPrime};
pub use check::{check_certificate, check_nonneg_weights, check_upper, CheckOptions, CheckReport, Status, Verdict};
pub use error::{EngineError, Result};
pub use handelman::HandelmanWitness;
pub use numeric::{check_numeric, NumericCertificate, NumericVerdict};
pub use smt::emit_smt;
pub use synth::{synthesize, synthesize_upper, EPrimeMode, SynthOptions, SynthOutcome, TemplateConfig};
pub use pqe::{build_lower, build_upper, ConstraintKind, FactorKey, Pqe, Template};

pub use eqsys_core::lp::{LinearProgram, LpOutcome};

/// Exact rational LP solve.
pub fn solve_lp(lp: &LinearProgram, deadline: Option<std::time::Instant>) -> Result<LpOutcome> {
    Ok(lp.solve(deadline)?)
}
