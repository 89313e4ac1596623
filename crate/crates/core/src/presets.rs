//! Ready-made models.

use crate::poss::{Distribution, Poss, PossConfig};
use crate::region::{BoxRegion, StateRegion};

/// Scalar system `x' = 0.9 x + w`, `w ~ N(0, 0.4^2)`, observed through
/// `y = x^2`, started in `[-2, 2]` and run for 10 steps.
pub fn scalar_square_config() -> PossConfig {
    PossConfig {
        state_dim: Some(1),
        output_dim: Some(1),
        disturbance_dim: Some(1),
        domain: BoxRegion::symmetric(1, 4.0),
        initial: StateRegion::from_box(BoxRegion::symmetric(1, 2.0)),
        dynamics: vec!["0.9*x1 + w1".parse().expect("valid expression")],
        output: vec!["x1^2".parse().expect("valid expression")],
        disturbance: Distribution::gaussian(0.0, 0.4),
        horizon: 10,
    }
}

pub fn scalar_square() -> Poss {
    Poss::new(scalar_square_config()).expect("preset is consistent")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::System;

    #[test]
    fn preset_step_and_output() {
        let m = scalar_square();
        assert!((m.step(&[1.0], &[0.2]).unwrap()[0] - 1.1).abs() < 1e-15);
        assert_eq!(m.output(&[-1.0]).unwrap(), vec![1.0]);
    }
}
