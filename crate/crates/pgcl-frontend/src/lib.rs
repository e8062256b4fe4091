//! pGCL front end: parsing, translation into fixed-point equation systems,
//! and under-approximating transformations.

pub mod ast;
pub mod error;
pub mod parse;
pub mod transform;
pub mod translate;

pub use ast::{Cmd, LoopGuard, PgclProgram, Span};
pub use error::{FrontendError, Result};
pub use parse::parse_pgcl;
pub use transform::{audit_under_approximation, check_one_bounded, gamma_scale, guard_strengthen};
pub use translate::{
    split_negative_costs, translate_cwp, translate_ert, translate_ert_with, translate_rt2, translate_wp,
    translate_wp_with, MomentTranslation, Nondet, Translation,
};
