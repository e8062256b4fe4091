//! Polynomial equation systems over extended non-negative reals.

pub mod error;
pub mod eval;
pub mod formula;
pub mod linear;
pub mod lp;
pub mod piecewise;
pub mod poly;
pub mod scalar;
pub mod system;
pub mod text;

pub use error::{CoreError, Result};
pub use formula::{normalize, AffineAtom, Body, BodyKind, Branch, Call, CmpOp, Cond, Expr, NormalFormula};
pub use linear::{BoolExpr, Domain, LinearInequality, Polyhedron, Sort};
pub use poly::{var, Monomial, Poly, Var};
pub use scalar::{rat, Coeff, Ext, Rat, Scalar};
pub use eval::{evaluate, Assignment};
pub use piecewise::{PiecewisePoly, Witness, WitnessAssignment};
pub use system::{EquationSystem, Predicate, QueriedEquationSystem, Query, QueryRelation};

pub type Polynomial = Poly<Rat>;
pub type PolynomialF64 = Poly<f64>;
pub type PolynomialF32 = Poly<f32>;
/// Polynomial over state variables whose coefficients are polynomials in parameters.
pub type Template = Poly<Poly<Rat>>;
