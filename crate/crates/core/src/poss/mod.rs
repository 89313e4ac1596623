//! Partially observable stochastic systems defined by expression vectors.

mod distribution;
mod expr;
mod model;
mod trajectory;

pub use distribution::Distribution;
pub use expr::{EvalError, Expr, ExprParseError, Func, Var};
pub use model::{Poss, PossConfig};
pub use trajectory::{output_trace, sample_trajectory, simulate, trajectory_csv, Trajectory};
