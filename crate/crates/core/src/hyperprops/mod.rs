//! Observational properties: encodings as hyperformulas, state estimates and
//! empirical satisfaction probabilities.

mod empirical;
mod observer;
mod spec;

pub use empirical::{
    clopper_pearson, empirical_probability, empirical_probability_finite, estimate_by, Decider, ProbabilityReport,
};
pub use observer::{
    diam, estimate_from_outputs, filter, hyper_holds, indistinguishable, state_estimate, CellSpace, EstimateKind,
    FiniteObserver, GridObserver, ObserverConfig, PointSet, EXACT_DIAMETER_LIMIT,
};
pub use spec::PropertySpec;
