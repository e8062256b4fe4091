//! Ground truth for equation systems: value iteration on truncated grids,
//! exact bracketing between `Kⁿ(0)` and `Kⁿ(u)`, and Monte Carlo simulation.

pub mod error;
pub mod grid;
pub mod iterate;
pub mod mc;

pub use error::{OracleError, Result};
pub use grid::{Grid, Policy, Shape, TruncationSpec};
pub use iterate::{
    bracket, kleene_iterate, write_trace_csv, Bracket, Direction, IterOptions, IterationResult, Start, TraceRow,
    IDENTITY_DEPTH,
};
pub use mc::{monte_carlo, Estimate, Property};
