//! Terminal-reach barrier certificates: representation, condition checks
//! and the probability bounds they imply.

mod bound;
mod certificate;
mod check;

pub use bound::{bound, bound_at, BoundEntry, BoundReport, DEFAULT_SCAN_PER_DIM};
pub use certificate::{Backing, CertMode, Certificate, Query, CERTIFICATE_FORMAT, CERTIFICATE_VERSION};
pub use check::{
    calibrate, check_pairs, check_recursion, check_terminal, grid_pairs, node_pairs, table_to_certificate, validate_dense,
    CheckReport, CheckSettings, InnerRule, TimeMargins, ViolationSummary, DEFAULT_TOLERANCE,
};
