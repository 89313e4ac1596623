//! Backward-recursion reach probabilities on finite instances and grids.

mod dp;
mod exact;
mod finite;
mod grid;

pub use dp::{dp_backward, greedy_candidate, table_bytes, DEFAULT_MEMORY_CAP};
pub use exact::{exact_values, theorem1_check, ExactValues, Theorem1Report, Theorem1Row, Theorem1Status};
pub use finite::{FiniteInstance, RandomInstanceConfig, ENUMERATION_CAP};
pub use grid::{GridSpec, Mode, ValueTable};
